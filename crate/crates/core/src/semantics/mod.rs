//! Propositional semantics of a feature model: translation into the labeled
//! constraint set `cf = {c_0 .. c_k}`, formula evaluation, and model analysis.

mod analysis;

pub use analysis::{analyze, analyze_with, AnalysisOptions, AnalysisResult};

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Assignment, Configuration, CtcKind, Decomposition, FeatureModel, GroupKind};

/// Formula over atoms `feature = 0|1`, kept as a plain not/and/or tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Atom { feature: usize, value: bool },
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl Expr {
    pub fn atom(feature: usize, value: bool) -> Self {
        Expr::Atom { feature, value }
    }

    pub fn is(feature: usize) -> Self {
        Expr::atom(feature, true)
    }

    pub fn isnt(feature: usize) -> Self {
        Expr::atom(feature, false)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Self {
        Expr::Not(Box::new(e))
    }

    /// Evaluates against a total assignment indexed canonically.
    pub fn eval(&self, values: &[bool]) -> bool {
        match self {
            Expr::Atom { feature, value } => values[*feature] == *value,
            Expr::Not(e) => !e.eval(values),
            Expr::And(es) => es.iter().all(|e| e.eval(values)),
            Expr::Or(es) => es.iter().any(|e| e.eval(values)),
        }
    }

    /// Three-valued (Kleene) evaluation; `None` means undetermined under the
    /// partial assignment.
    pub fn eval_partial(&self, values: &[Option<bool>]) -> Option<bool> {
        match self {
            Expr::Atom { feature, value } => values[*feature].map(|v| v == *value),
            Expr::Not(e) => e.eval_partial(values).map(|v| !v),
            Expr::And(es) => {
                let mut unknown = false;
                for e in es {
                    match e.eval_partial(values) {
                        Some(false) => return Some(false),
                        None => unknown = true,
                        Some(true) => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(true)
                }
            }
            Expr::Or(es) => {
                let mut unknown = false;
                for e in es {
                    match e.eval_partial(values) {
                        Some(true) => return Some(true),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(false)
                }
            }
        }
    }

    /// Features referenced by the formula, sorted and deduplicated.
    pub fn features(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_features(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_features(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Atom { feature, .. } => out.push(*feature),
            Expr::Not(e) => e.collect_features(out),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.collect_features(out)),
        }
    }

    /// Infix text with feature ids, e.g. `!(t=1) | !(n=1)`.
    pub fn to_text(&self, fm: &FeatureModel) -> String {
        let mut out = String::new();
        self.render(fm, false, &mut out);
        out
    }

    fn render(&self, fm: &FeatureModel, nested: bool, out: &mut String) {
        match self {
            Expr::Atom { feature, value } => {
                out.push_str(fm.id(*feature));
                out.push_str(if *value { "=1" } else { "=0" });
            }
            Expr::Not(e) => {
                out.push_str("!(");
                e.render(fm, false, out);
                out.push(')');
            }
            Expr::And(es) | Expr::Or(es) => {
                let (sep, is_and) = match self {
                    Expr::And(_) => (" & ", true),
                    _ => (" | ", false),
                };
                if nested {
                    out.push('(');
                }
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        out.push_str(sep);
                    }
                    // `&` binds tighter than `|`: an And directly under an Or
                    // needs no parentheses.
                    let child_nested = match e {
                        Expr::And(_) => is_and,
                        Expr::Or(_) => true,
                        _ => false,
                    };
                    e.render(fm, child_nested, out);
                }
                if nested {
                    out.push(')');
                }
            }
        }
    }
}

/// The relationship a formula was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Root,
    Mandatory,
    Optional,
    Alternative,
    Or,
    Requires,
    Excludes,
}

impl Origin {
    pub fn is_hierarchical(self) -> bool {
        !matches!(self, Origin::Root | Origin::Requires | Origin::Excludes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    pub label: String,
    pub origin: Origin,
    pub expr: Expr,
}

impl Formula {
    pub fn render(&self, fm: &FeatureModel) -> String {
        let mut out = format!("{}: ", self.label);
        self.expr.render(fm, false, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("feature {0} is not bound")]
    Unbound(String),
}

/// Evaluates `f` under `a`, which must bind every feature the formula uses.
pub fn eval_formula(fm: &FeatureModel, f: &Formula, a: &Assignment) -> Result<bool, EvalError> {
    let mut values = vec![None; fm.len()];
    for (k, v) in a.iter() {
        values[k] = Some(v);
    }
    for x in f.expr.features() {
        if values[x].is_none() {
            return Err(EvalError::Unbound(fm.id(x).to_string()));
        }
    }
    Ok(f.expr.eval_partial(&values).expect("all features bound"))
}

/// The labeled constraints derived from a feature model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSet {
    pub formulas: Vec<Formula>,
}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Formula> {
        self.formulas.iter()
    }

    pub fn get(&self, label: &str) -> Option<&Formula> {
        self.formulas.iter().find(|f| f.label == label)
    }

    /// True iff the total configuration satisfies every formula.
    pub fn satisfied_by(&self, conf: &Configuration) -> bool {
        self.formulas.iter().all(|f| f.expr.eval(conf.values()))
    }

    /// One formula per line, e.g. `c_7: !(t=1) | !(n=1)`.
    pub fn render(&self, fm: &FeatureModel) -> String {
        let mut out = String::new();
        for f in &self.formulas {
            out.push_str(&f.render(fm));
            out.push('\n');
        }
        out
    }

    /// Display adapter for [`ConstraintSet::render`].
    pub fn display<'a>(&'a self, fm: &'a FeatureModel) -> impl fmt::Display + 'a {
        struct D<'a>(&'a ConstraintSet, &'a FeatureModel);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0.render(self.1))
            }
        }
        D(self, fm)
    }
}

impl<'a> IntoIterator for &'a ConstraintSet {
    type Item = &'a Formula;
    type IntoIter = std::slice::Iter<'a, Formula>;

    fn into_iter(self) -> Self::IntoIter {
        self.formulas.iter()
    }
}

/// Translates a feature model into its constraint set.
///
/// Order: the root constraint `c_0`; parent-child edges (mandatory and
/// optional) in canonical order of the child; or-groups, then alternative
/// groups, each in canonical order of the parent; cross-tree constraints in
/// declaration order.
pub fn translate(fm: &FeatureModel) -> ConstraintSet {
    let mut out: Vec<(Origin, Expr)> = vec![(Origin::Root, Expr::is(fm.root()))];

    for (c, f) in fm.features().iter().enumerate() {
        let Some(p) = fm.parent(c) else { continue };
        match f.decomposition {
            Decomposition::Mandatory => out.push((
                Origin::Mandatory,
                Expr::Or(vec![
                    Expr::And(vec![Expr::is(p), Expr::is(c)]),
                    Expr::And(vec![Expr::isnt(p), Expr::isnt(c)]),
                ]),
            )),
            Decomposition::Optional => out.push((
                Origin::Optional,
                Expr::Or(vec![Expr::not(Expr::is(c)), Expr::is(p)]),
            )),
            _ => {}
        }
    }

    for kind in [GroupKind::Or, GroupKind::Alternative] {
        for g in fm.groups().iter().filter(|g| g.kind == kind) {
            let p = fm.index_of(&g.parent).expect("valid model");
            let members: Vec<usize> = g
                .members
                .iter()
                .map(|m| fm.index_of(m).expect("valid model"))
                .collect();
            let expr = match kind {
                GroupKind::Or => or_group(p, &members),
                GroupKind::Alternative => alternative_group(p, &members),
            };
            let origin = match kind {
                GroupKind::Or => Origin::Or,
                GroupKind::Alternative => Origin::Alternative,
            };
            out.push((origin, expr));
        }
    }

    for c in fm.ctcs() {
        let a = fm.index_of(&c.lhs).expect("valid model");
        let b = fm.index_of(&c.rhs).expect("valid model");
        out.push(match c.kind {
            CtcKind::Requires => (
                Origin::Requires,
                Expr::Or(vec![Expr::not(Expr::is(a)), Expr::is(b)]),
            ),
            CtcKind::Excludes => (
                Origin::Excludes,
                Expr::Or(vec![Expr::not(Expr::is(a)), Expr::not(Expr::is(b))]),
            ),
        });
    }

    ConstraintSet {
        formulas: out
            .into_iter()
            .enumerate()
            .map(|(i, (origin, expr))| Formula {
                label: format!("c_{i}"),
                origin,
                expr,
            })
            .collect(),
    }
}

// (p=1 & (c1=1 | .. | ck=1)) | (p=0 & c1=0 & .. & ck=0)
fn or_group(p: usize, members: &[usize]) -> Expr {
    let mut none = vec![Expr::isnt(p)];
    none.extend(members.iter().map(|&m| Expr::isnt(m)));
    Expr::Or(vec![
        Expr::And(vec![
            Expr::is(p),
            Expr::Or(members.iter().map(|&m| Expr::is(m)).collect()),
        ]),
        Expr::And(none),
    ])
}

// For each member ci: ci=1 <-> (cj=0 for all j != i) & p=1, as
// (!(ci=1) | rhs) & (!(rhs) | ci=1).
fn alternative_group(p: usize, members: &[usize]) -> Expr {
    Expr::And(
        members
            .iter()
            .map(|&ci| {
                let mut rhs: Vec<Expr> = members
                    .iter()
                    .filter(|&&cj| cj != ci)
                    .map(|&cj| Expr::isnt(cj))
                    .collect();
                rhs.push(Expr::is(p));
                let rhs = Expr::And(rhs);
                Expr::And(vec![
                    Expr::Or(vec![Expr::not(Expr::is(ci)), rhs.clone()]),
                    Expr::Or(vec![Expr::not(rhs), Expr::is(ci)]),
                ])
            })
            .collect(),
    )
}
