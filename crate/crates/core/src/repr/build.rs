use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use super::{
    expr_to_predicate, ConfigTask, Optimization, ReprError, ReprKind, Representation,
};
use crate::engine::{self, AttrRef, Table, TableSchema};
use crate::model::{Assignment, Decomposition, FeatureModel};
use crate::semantics::{AnalysisResult, ConstraintSet};

/// Above this size the all-configs table is filled through a per-feature
/// query instead of a raw scan over 2^n assignments.
const RAW_SCAN_LIMIT: usize = 20;

/// Domain reductions applied to per-feature tables.
#[derive(Debug, Clone, Copy, Default)]
pub struct Reductions<'a> {
    /// Root table holds only 1.
    pub root: bool,
    /// Dead features hold only 0 and false-optional features only 1.
    pub analysis: Option<&'a AnalysisResult>,
}

impl<'a> Reductions<'a> {
    pub fn none() -> Self {
        Reductions::default()
    }

    pub fn root_only() -> Self {
        Reductions {
            root: true,
            analysis: None,
        }
    }

    pub fn all(analysis: &'a AnalysisResult) -> Self {
        Reductions {
            root: true,
            analysis: Some(analysis),
        }
    }
}

fn ids(fm: &FeatureModel) -> Vec<String> {
    fm.features().iter().map(|f| f.id.clone()).collect()
}

fn table(name: &str, attributes: Vec<String>, rows: Vec<Vec<bool>>) -> Arc<Table> {
    let schema = TableSchema::new(name, attributes).expect("attributes are distinct features");
    Arc::new(Table::new(schema, rows).expect("rows match arity"))
}

/// Features included in every configuration: the root, and each mandatory
/// or false-optional child of such a feature. A false-optional feature under
/// an excludable parent can still be 0, so only these are fixed to 1.
fn core_features(fm: &FeatureModel, a: &AnalysisResult) -> BTreeSet<usize> {
    let mut core = BTreeSet::new();
    let mut stack = vec![fm.root()];
    while let Some(f) = stack.pop() {
        core.insert(f);
        stack.extend(fm.children(f).iter().copied().filter(|&c| {
            fm.feature(c).decomposition == Decomposition::Mandatory || a.false_optional.contains(&c)
        }));
    }
    core
}

/// One `val` table per feature with rows {1,0} (1 first), optionally
/// reduced; the model constraints become WHERE predicates.
pub fn build_per_feature(
    fm: &FeatureModel,
    cf: &ConstraintSet,
    reductions: Reductions<'_>,
) -> Representation {
    let n = fm.len();
    let mut optimizations = BTreeSet::new();
    let mut domains = vec![(true, true); n];
    if reductions.root {
        domains[fm.root()].1 = false;
        optimizations.insert(Optimization::RootReduction);
    }
    if let Some(a) = reductions.analysis {
        optimizations.insert(Optimization::DeadReduction);
        optimizations.insert(Optimization::FalseOptionalReduction);
        for &f in &a.dead {
            domains[f].0 = false;
        }
        for f in core_features(fm, a) {
            if a.false_optional.contains(&f) {
                domains[f].1 = false;
            }
        }
    }

    let attr_of_feature: Vec<Vec<AttrRef>> = (0..n)
        .map(|f| vec![AttrRef::new(fm.id(f), "val")])
        .collect();
    let tables = (0..n)
        .map(|f| {
            let (one, zero) = domains[f];
            let rows = [(one, true), (zero, false)]
                .into_iter()
                .filter(|(keep, _)| *keep)
                .map(|(_, v)| vec![v])
                .collect();
            table(fm.id(f), vec!["val".into()], rows)
        })
        .collect();
    let cf_predicates = cf
        .iter()
        .map(|f| expr_to_predicate(&f.expr, &|x| attr_of_feature[x][0].clone()))
        .collect();

    Representation {
        kind: ReprKind::PerFeature,
        tables,
        join_equalities: Vec::new(),
        attr_of_feature,
        optimizations,
        cf_predicates,
        feature_ids: ids(fm),
    }
}

/// A single table `F` over all features holding every valid configuration.
/// Rows are in descending binary order (first feature most significant),
/// i.e. inclusion before exclusion.
pub fn build_all_configs(
    fm: &FeatureModel,
    cf: &ConstraintSet,
    threshold: usize,
) -> Result<Representation, ReprError> {
    let n = fm.len();
    if n > threshold {
        return Err(ReprError::TooLarge {
            features: n,
            threshold,
        });
    }
    let mut rows: Vec<Vec<bool>> = if n <= RAW_SCAN_LIMIT {
        // The root is the most significant bit: scanning only the upper half
        // fixes it to 1.
        let total = 1u64 << n;
        let mut values = vec![false; n];
        let mut out = Vec::new();
        for mask in (total / 2..total).rev() {
            for (i, v) in values.iter_mut().enumerate() {
                *v = mask >> (n - 1 - i) & 1 == 1;
            }
            if cf.iter().all(|f| f.expr.eval(&values)) {
                out.push(values.clone());
            }
        }
        out
    } else {
        let per_feature = build_per_feature(fm, cf, Reductions::root_only());
        let q = per_feature.compile_query(&ConfigTask::new(fm, Assignment::new()))?;
        engine::evaluate(&q)?
    };
    rows.sort_by(|a, b| b.cmp(a));

    let attributes = ids(fm);
    let attr_of_feature = attributes
        .iter()
        .map(|id| vec![AttrRef::new("F", id.clone())])
        .collect();
    Ok(Representation {
        kind: ReprKind::AllConfigs,
        tables: vec![table("F", attributes.clone(), rows)],
        join_equalities: Vec::new(),
        attr_of_feature,
        optimizations: BTreeSet::from([Optimization::RootReduction]),
        cf_predicates: Vec::new(),
        feature_ids: attributes,
    })
}

struct LocalTable {
    name: String,
    features: Vec<usize>,
    rows: Vec<Vec<bool>>,
}

/// One local-consistency table per constraint over the features it
/// mentions, with join equalities linking every repeated feature to its
/// first occurrence. With `prune_pairwise`, tables are filtered by
/// semi-joins with every table sharing a feature, to a fixpoint.
pub fn build_per_constraint(
    fm: &FeatureModel,
    cf: &ConstraintSet,
    prune_pairwise: bool,
) -> Representation {
    let n = fm.len();
    let mut locals: Vec<LocalTable> = Vec::new();
    let mut covered = vec![false; n];
    let mut scratch: Vec<Option<bool>> = vec![None; n];

    for formula in cf {
        let features = formula.expr.features();
        let k = features.len();
        let mut rows = Vec::new();
        for mask in (0..1u64 << k).rev() {
            let row: Vec<bool> = (0..k).map(|i| mask >> (k - 1 - i) & 1 == 1).collect();
            for (&f, &v) in features.iter().zip(&row) {
                scratch[f] = Some(v);
            }
            if formula.expr.eval_partial(&scratch) == Some(true) {
                rows.push(row);
            }
        }
        for &f in &features {
            scratch[f] = None;
            covered[f] = true;
        }
        let name = features
            .iter()
            .map(|&f| fm.id(f))
            .collect::<Vec<_>>()
            .join("-");
        locals.push(LocalTable {
            name,
            features,
            rows,
        });
    }
    for f in (0..n).filter(|&f| !covered[f]) {
        locals.push(LocalTable {
            name: fm.id(f).to_string(),
            features: vec![f],
            rows: vec![vec![true], vec![false]],
        });
    }

    // Disambiguate tables over the same feature set.
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, t) in locals.iter_mut().enumerate() {
        let c = seen.entry(t.name.clone()).or_insert(0);
        *c += 1;
        if *c > 1 {
            t.name = match cf.formulas.get(i) {
                Some(f) => format!("{}@{}", t.name, f.label),
                None => format!("{}@{}", t.name, c),
            };
        }
    }

    let mut optimizations = BTreeSet::new();
    if prune_pairwise {
        prune_to_fixpoint(&mut locals);
        optimizations.insert(Optimization::PairwisePruning);
    }

    let mut attr_of_feature: Vec<Vec<AttrRef>> = vec![Vec::new(); n];
    for t in &locals {
        for &f in &t.features {
            attr_of_feature[f].push(AttrRef::new(t.name.clone(), fm.id(f)));
        }
    }
    let join_equalities = attr_of_feature
        .iter()
        .flat_map(|occ| occ[1..].iter().map(|o| (occ[0].clone(), o.clone())))
        .collect();
    let tables = locals
        .into_iter()
        .map(|t| {
            let attrs = t.features.iter().map(|&f| fm.id(f).to_string()).collect();
            table(&t.name, attrs, t.rows)
        })
        .collect();

    Representation {
        kind: ReprKind::PerConstraint,
        tables,
        join_equalities,
        attr_of_feature,
        optimizations,
        cf_predicates: Vec::new(),
        feature_ids: ids(fm),
    }
}

/// Pairwise (k=2) consistency: drop rows with no partner in some table that
/// shares a feature, until nothing changes.
fn prune_to_fixpoint(tables: &mut [LocalTable]) {
    let mut by_feature: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, t) in tables.iter().enumerate() {
        for &f in &t.features {
            by_feature.entry(f).or_default().push(i);
        }
    }
    let neighbours: Vec<BTreeSet<usize>> = (0..tables.len())
        .map(|i| {
            tables[i]
                .features
                .iter()
                .flat_map(|f| by_feature[f].iter().copied())
                .filter(|&j| j != i)
                .collect()
        })
        .collect();

    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..tables.len() {
            for &j in &neighbours[i] {
                let shared: Vec<(usize, usize)> = tables[i]
                    .features
                    .iter()
                    .enumerate()
                    .filter_map(|(ci, f)| {
                        tables[j].features.iter().position(|g| g == f).map(|cj| (ci, cj))
                    })
                    .collect();
                let keys: HashSet<Vec<bool>> = tables[j]
                    .rows
                    .iter()
                    .map(|r| shared.iter().map(|&(_, cj)| r[cj]).collect())
                    .collect();
                let before = tables[i].rows.len();
                tables[i]
                    .rows
                    .retain(|r| keys.contains(&shared.iter().map(|&(ci, _)| r[ci]).collect::<Vec<_>>()));
                changed |= tables[i].rows.len() != before;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{survey_model, ModelBuilder};
    use crate::semantics::{analyze, translate};

    fn table_named<'r>(r: &'r Representation, name: &str) -> &'r Table {
        r.tables.iter().find(|t| t.name() == name).unwrap()
    }

    #[test]
    fn per_feature_tables_without_reductions() {
        let fm = survey_model();
        let r = build_per_feature(&fm, &translate(&fm), Reductions::none());
        assert_eq!(r.tables.len(), 9);
        assert!(r.tables.iter().all(|t| t.bits() == vec![vec![1], vec![0]]));
        assert!(r.optimizations.is_empty());
    }

    #[test]
    fn per_feature_root_reduction() {
        let fm = survey_model();
        let r = build_per_feature(&fm, &translate(&fm), Reductions::root_only());
        assert_eq!(table_named(&r, "s").bits(), vec![vec![1]]);
    }

    #[test]
    fn per_feature_dead_and_false_optional_reduction() {
        let fm = ModelBuilder::new()
            .root("r")
            .optional("r", "a")
            .optional("r", "b")
            .excludes("a", "r")
            .requires("r", "b")
            .build()
            .unwrap();
        let cf = translate(&fm);
        let analysis = analyze(&fm, &cf);
        let r = build_per_feature(&fm, &cf, Reductions::all(&analysis));
        assert_eq!(table_named(&r, "a").bits(), vec![vec![0]]);
        assert_eq!(table_named(&r, "b").bits(), vec![vec![1]]);
    }

    #[test]
    fn false_optional_under_optional_parent_keeps_zero() {
        let fm = ModelBuilder::new()
            .root("r")
            .optional("r", "a")
            .optional("a", "b")
            .requires("a", "b")
            .build()
            .unwrap();
        let cf = translate(&fm);
        let analysis = analyze(&fm, &cf);
        assert!(analysis.false_optional.contains(&fm.index_of("b").unwrap()));
        let r = build_per_feature(&fm, &cf, Reductions::all(&analysis));
        assert_eq!(table_named(&r, "b").bits(), vec![vec![1], vec![0]]);
        assert_eq!(r.count(&ConfigTask::new(&fm, Assignment::new())).unwrap(), 2);
    }

    #[test]
    fn all_configs_survey() {
        let fm = survey_model();
        let r = build_all_configs(&fm, &translate(&fm), 24).unwrap();
        let f = &r.tables[0];
        assert_eq!(f.len(), 15);
        assert!(f.bits().contains(&vec![1, 1, 0, 1, 0, 1, 1, 1, 0]));
        assert_eq!(f.schema().attributes, ["s", "p", "l", "n", "t", "st", "q", "m", "mm"]);
    }

    #[test]
    fn all_configs_void_model_is_empty() {
        let fm = ModelBuilder::new()
            .root("r")
            .mandatory("r", "a")
            .mandatory("r", "b")
            .excludes("a", "b")
            .build()
            .unwrap();
        let r = build_all_configs(&fm, &translate(&fm), 24).unwrap();
        assert!(r.tables[0].is_empty());
    }

    #[test]
    fn all_configs_threshold() {
        let fm = survey_model();
        assert_eq!(
            build_all_configs(&fm, &translate(&fm), 8).unwrap_err(),
            ReprError::TooLarge {
                features: 9,
                threshold: 8
            }
        );
    }

    #[test]
    fn all_configs_above_raw_scan_limit_uses_query() {
        let mut b = ModelBuilder::new();
        b.root("r");
        for i in 0..8 {
            b.optional("r", &format!("f{i}"));
        }
        for i in 0..10 {
            b.mandatory("r", &format!("m{i}"));
        }
        b.group("f0", crate::model::GroupKind::Alternative, &["x", "y"]);
        let fm = b.build().unwrap();
        assert_eq!(fm.len(), 21);
        let cf = translate(&fm);
        let r = build_all_configs(&fm, &cf, 24).unwrap();
        // f0 contributes 1 + 2 choices, f1..f7 are free.
        assert_eq!(r.tables[0].len(), 3 << 7);
        let rows = r.tables[0].rows();
        assert!(rows.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn per_constraint_local_tables() {
        let fm = survey_model();
        let r = build_per_constraint(&fm, &translate(&fm), false);
        let names: Vec<&str> = r.tables.iter().map(|t| t.name()).collect();
        assert_eq!(names, ["s", "s-p", "s-t", "s-st", "s-q", "q-m-mm", "p-l-n", "n-t", "t-st"]);
        assert_eq!(table_named(&r, "t-st").bits(), vec![vec![1, 1], vec![0, 1], vec![0, 0]]);
        let nt: HashSet<Vec<u8>> = table_named(&r, "n-t").bits().into_iter().collect();
        assert_eq!(nt, HashSet::from([vec![0, 1], vec![1, 0], vec![0, 0]]));
        assert_eq!(table_named(&r, "s-p").bits(), vec![vec![1, 1], vec![0, 0]]);
        // t appears in s-t, n-t, t-st: two star equalities anchored at s-t.
        let t_eqs: Vec<String> = r
            .join_equalities
            .iter()
            .filter(|(a, _)| a.attribute == "t")
            .map(|(a, b)| format!("{a} = {b}"))
            .collect();
        assert_eq!(t_eqs, ["s-t.t = n-t.t", "s-t.t = t-st.t"]);
    }

    #[test]
    fn pairwise_pruning_shrinks_tables() {
        let fm = survey_model();
        let cf = translate(&fm);
        let plain = build_per_constraint(&fm, &cf, false);
        let pruned = build_per_constraint(&fm, &cf, true);
        assert!(pruned.total_rows() < plain.total_rows());
        // s is fixed to 1, so s-p keeps only (1,1).
        assert_eq!(table_named(&pruned, "s-p").bits(), vec![vec![1, 1]]);
    }

    #[test]
    fn duplicate_constraint_tables_are_renamed() {
        let fm = ModelBuilder::new()
            .root("r")
            .optional("r", "a")
            .optional("r", "b")
            .requires("a", "b")
            .excludes("a", "b")
            .build()
            .unwrap();
        let r = build_per_constraint(&fm, &translate(&fm), false);
        let names: Vec<&str> = r.tables.iter().map(|t| t.name()).collect();
        assert_eq!(names, ["r", "r-a", "r-b", "a-b", "a-b@c_4"]);
    }
}
