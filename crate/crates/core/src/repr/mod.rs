//! The three table encodings of a configuration task and the compilation of
//! a task into a conjunctive query over them.
//!
//! * all-configs: one table `F` holding every valid configuration;
//! * per-feature: one `val` table per feature, constraints in WHERE;
//! * per-constraint: one local-consistency table per constraint, joined on
//!   shared features.

mod build;

pub use build::{build_all_configs, build_per_constraint, build_per_feature, Reductions};

use std::collections::BTreeSet;
use std::ops::ControlFlow;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{self, AttrRef, ConjunctiveQuery, EngineError, Predicate, Table};
use crate::model::{Assignment, Configuration, FeatureModel};
use crate::semantics::Expr;

/// Default feature-count limit for explicit enumeration.
pub const EXHAUSTIVE_THRESHOLD: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReprKind {
    AllConfigs,
    PerFeature,
    PerConstraint,
}

impl std::fmt::Display for ReprKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReprKind::AllConfigs => "all-configs",
            ReprKind::PerFeature => "per-feature",
            ReprKind::PerConstraint => "per-constraint",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimization {
    RootReduction,
    DeadReduction,
    FalseOptionalReduction,
    PairwisePruning,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReprError {
    #[error("configuration space too large: {features} features exceed the threshold of {threshold}")]
    TooLarge { features: usize, threshold: usize },
    #[error("requirement references unknown feature index {0}")]
    UnknownFeature(usize),
    #[error("task model does not match the representation's model")]
    ModelMismatch,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// A built table encoding. Immutable; safe to share across threads.
#[derive(Debug, Clone)]
pub struct Representation {
    pub kind: ReprKind,
    pub tables: Vec<Arc<Table>>,
    /// Join conditions linking repeated feature attributes (per-constraint).
    pub join_equalities: Vec<(AttrRef, AttrRef)>,
    /// Attributes carrying each feature, anchor first; indexed canonically.
    pub attr_of_feature: Vec<Vec<AttrRef>>,
    pub optimizations: BTreeSet<Optimization>,
    /// Model constraints as predicates (per-feature only).
    pub cf_predicates: Vec<Predicate>,
    feature_ids: Vec<String>,
}

/// A configuration task `F_[c]S` with `c = cr ∪ cf`; `cf` is carried by the
/// representation.
#[derive(Debug, Clone)]
pub struct ConfigTask<'a> {
    pub model: &'a FeatureModel,
    pub cr: Assignment,
    /// Projection `S` as feature indices; `None` selects every feature.
    pub projection: Option<Vec<usize>>,
    pub limit: Option<usize>,
}

impl<'a> ConfigTask<'a> {
    pub fn new(model: &'a FeatureModel, cr: Assignment) -> Self {
        ConfigTask {
            model,
            cr,
            projection: None,
            limit: None,
        }
    }

    pub fn with_limit(mut self, k: usize) -> Self {
        self.limit = Some(k);
        self
    }

    pub fn with_projection(mut self, features: Vec<usize>) -> Self {
        self.projection = Some(features);
        self
    }

    fn projected(&self) -> Vec<usize> {
        self.projection
            .clone()
            .unwrap_or_else(|| (0..self.model.len()).collect())
    }
}

/// Maps a formula onto predicates over the attributes chosen by `attr`.
pub(crate) fn expr_to_predicate(e: &Expr, attr: &impl Fn(usize) -> AttrRef) -> Predicate {
    match e {
        Expr::Atom { feature, value } => Predicate::atom(attr(*feature), *value),
        Expr::Not(x) => Predicate::not(expr_to_predicate(x, attr)),
        Expr::And(xs) => Predicate::And(xs.iter().map(|x| expr_to_predicate(x, attr)).collect()),
        Expr::Or(xs) => Predicate::Or(xs.iter().map(|x| expr_to_predicate(x, attr)).collect()),
    }
}

impl Representation {
    pub fn features(&self) -> usize {
        self.feature_ids.len()
    }

    /// Anchor attribute of a feature.
    pub fn attr(&self, feature: usize) -> &AttrRef {
        &self.attr_of_feature[feature][0]
    }

    pub fn total_rows(&self) -> usize {
        self.tables.iter().map(|t| t.len()).sum()
    }

    fn check_model(&self, fm: &FeatureModel) -> Result<(), ReprError> {
        let same = fm.len() == self.feature_ids.len()
            && fm
                .features()
                .iter()
                .zip(&self.feature_ids)
                .all(|(f, id)| &f.id == id);
        if same {
            Ok(())
        } else {
            Err(ReprError::ModelMismatch)
        }
    }

    /// Compiles a task into a conjunctive query over this representation.
    pub fn compile_query(&self, task: &ConfigTask<'_>) -> Result<ConjunctiveQuery, ReprError> {
        self.check_model(task.model)?;
        let mut q = ConjunctiveQuery::new(self.tables.clone());
        match self.kind {
            ReprKind::AllConfigs => {}
            ReprKind::PerFeature => {
                q.conjuncts.extend(self.cf_predicates.iter().cloned());
            }
            ReprKind::PerConstraint => {
                q.conjuncts.extend(
                    self.join_equalities
                        .iter()
                        .map(|(a, b)| Predicate::eq(a.clone(), b.clone())),
                );
            }
        }
        for (f, v) in task.cr.iter() {
            if f >= self.features() {
                return Err(ReprError::UnknownFeature(f));
            }
            q.conjuncts.push(Predicate::atom(self.attr(f).clone(), v));
        }
        for f in task.projected() {
            if f >= self.features() {
                return Err(ReprError::UnknownFeature(f));
            }
            q.select.push(self.attr(f).clone());
        }
        q.limit = task.limit;
        Ok(q)
    }

    /// First result of the task's query (LIMIT 1) as an assignment of the
    /// projected features, or `None` when the query is empty.
    pub fn solve(&self, task: &ConfigTask<'_>) -> Result<Option<Assignment>, ReprError> {
        let projected = task.projected();
        let mut q = self.compile_query(task)?;
        q.limit = Some(1);
        let rows = engine::evaluate(&q)?;
        Ok(rows
            .first()
            .map(|row| projected.iter().copied().zip(row.iter().copied()).collect()))
    }

    /// Solves with full projection and returns the total configuration.
    pub fn solve_config(
        &self,
        fm: &FeatureModel,
        cr: &Assignment,
    ) -> Result<Option<Configuration>, ReprError> {
        let task = ConfigTask::new(fm, cr.clone());
        let q = self.compile_query(&task.with_limit(1))?;
        Ok(engine::evaluate(&q)?.into_iter().next().map(Configuration))
    }

    /// Number of distinct full-projection tuples; the task's limit and
    /// projection are ignored.
    pub fn count(&self, task: &ConfigTask<'_>) -> Result<u64, ReprError> {
        self.count_up_to(task, None)
    }

    /// Like [`Representation::count`] but stops after `cap` tuples.
    pub fn count_up_to(&self, task: &ConfigTask<'_>, cap: Option<usize>) -> Result<u64, ReprError> {
        let full = ConfigTask {
            model: task.model,
            cr: task.cr.clone(),
            projection: None,
            limit: cap,
        };
        Ok(engine::count(&self.compile_query(&full)?)?)
    }

    /// Streams full configurations in enumeration order until `visit` breaks.
    pub fn for_each_config(
        &self,
        fm: &FeatureModel,
        cr: &Assignment,
        limit: Option<usize>,
        mut visit: impl FnMut(Configuration) -> ControlFlow<()>,
    ) -> Result<(), ReprError> {
        let mut task = ConfigTask::new(fm, cr.clone());
        task.limit = limit;
        let q = self.compile_query(&task)?;
        engine::evaluate_each(&q, |row| visit(Configuration(row.to_vec())))?;
        Ok(())
    }

    /// Every table in display form, for debugging.
    pub fn describe(&self) -> String {
        let mut out = format!("{} ({} tables)\n", self.kind, self.tables.len());
        for t in &self.tables {
            out.push_str(&t.to_string());
        }
        for (a, b) in &self.join_equalities {
            out.push_str(&format!("{a} = {b}\n"));
        }
        out
    }
}
