//! In-memory relational tables over {0,1} and a streaming evaluator for
//! conjunctive (select-project-join) queries.

mod eval;
mod predicate;
mod sql;
mod table;

pub use eval::{count, evaluate, evaluate_each, evaluate_with_stats, EvalStats};
pub use predicate::{AttrRef, Predicate};
pub use sql::render_sql;
pub use table::{Table, TableSchema};

use std::collections::HashSet;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unresolved attribute {0}")]
    UnresolvedAttribute(String),
    #[error("duplicate attribute {attribute} in table {table}")]
    DuplicateAttribute { table: String, attribute: String },
    #[error("table {0} appears more than once in FROM")]
    DuplicateTable(String),
    #[error("row of arity {got} does not fit table {table} of arity {expected}")]
    Arity {
        table: String,
        expected: usize,
        got: usize,
    },
    #[error("join condition {0} must relate two distinct tables")]
    BadJoinCondition(String),
}

/// `F_[c]S`: the product of `from`, filtered by the conjunction `conjuncts`,
/// projected to `select`, truncated to `limit`.
#[derive(Debug, Clone)]
pub struct ConjunctiveQuery {
    pub from: Vec<Arc<Table>>,
    pub conjuncts: Vec<Predicate>,
    pub select: Vec<AttrRef>,
    pub limit: Option<usize>,
}

impl ConjunctiveQuery {
    pub fn new(from: Vec<Arc<Table>>) -> Self {
        ConjunctiveQuery {
            from,
            conjuncts: Vec::new(),
            select: Vec::new(),
            limit: None,
        }
    }

    /// Adds a condition; nested conjunctions are flattened.
    pub fn filter(mut self, p: Predicate) -> Self {
        self.conjuncts.extend(p.conjuncts());
        self
    }

    pub fn select(mut self, attrs: impl IntoIterator<Item = AttrRef>) -> Self {
        self.select.extend(attrs);
        self
    }

    pub fn limit(mut self, k: usize) -> Self {
        self.limit = Some(k);
        self
    }

    /// Every attribute of every table, in FROM order.
    pub fn select_all(self) -> Self {
        let all: Vec<AttrRef> = self
            .from
            .iter()
            .flat_map(|t| {
                t.schema()
                    .attributes
                    .iter()
                    .map(move |a| AttrRef::new(t.name(), a.clone()))
            })
            .collect();
        self.select(all)
    }
}

/// Rows of `t` satisfying `p`, in their original order.
pub fn select(t: &Table, p: &Predicate) -> Result<Table, EngineError> {
    let mut cols = Vec::new();
    for a in p.attributes() {
        if a.table != t.name() {
            return Err(EngineError::UnresolvedAttribute(a.to_string()));
        }
        let c = t
            .schema()
            .position(&a.attribute)
            .ok_or_else(|| EngineError::UnresolvedAttribute(a.to_string()))?;
        cols.push((a.clone(), c));
    }
    let rows = t.rows().iter().filter(|row| {
        p.eval_with(&|a: &AttrRef| {
            let c = cols.iter().find(|(x, _)| x == a).expect("resolved").1;
            row[c]
        })
    });
    Table::new(t.schema().clone(), rows.cloned())
}

/// Restricts `t` to `attrs` (in the requested order) with set semantics.
pub fn project(t: &Table, attrs: &[&str]) -> Result<Table, EngineError> {
    let cols: Vec<usize> = attrs
        .iter()
        .map(|a| {
            t.schema()
                .position(a)
                .ok_or_else(|| EngineError::UnresolvedAttribute(format!("{}.{a}", t.name())))
        })
        .collect::<Result<_, _>>()?;
    let schema = TableSchema::new(t.name(), attrs.iter().map(|a| a.to_string()).collect())?;
    Table::new(
        schema,
        t.rows().iter().map(|r| cols.iter().map(|&c| r[c]).collect()),
    )
}

/// Equi-join of `ts` under `equalities`. The result schema concatenates the
/// input schemas with qualified attribute names; rows follow nested-loop
/// order over `ts`.
pub fn join(ts: &[&Table], equalities: &[(AttrRef, AttrRef)]) -> Result<Table, EngineError> {
    let mut names = HashSet::new();
    for t in ts {
        if !names.insert(t.name()) {
            return Err(EngineError::DuplicateTable(t.name().to_string()));
        }
    }
    let resolve = |a: &AttrRef| -> Result<(usize, usize), EngineError> {
        ts.iter()
            .enumerate()
            .find(|(_, t)| t.name() == a.table)
            .and_then(|(i, t)| t.schema().position(&a.attribute).map(|c| (i, c)))
            .ok_or_else(|| EngineError::UnresolvedAttribute(a.to_string()))
    };
    let mut eqs = Vec::new();
    for (a, b) in equalities {
        let (ra, rb) = (resolve(a)?, resolve(b)?);
        if ra.0 == rb.0 {
            return Err(EngineError::BadJoinCondition(format!("{a} = {b}")));
        }
        eqs.push((ra, rb));
    }

    let attributes = ts
        .iter()
        .flat_map(|t| {
            t.schema()
                .attributes
                .iter()
                .map(move |a| format!("{}.{a}", t.name()))
        })
        .collect();
    let name = ts.iter().map(|t| t.name()).collect::<Vec<_>>().join(" x ");
    let schema = TableSchema::new(name, attributes)?;

    let mut out = Vec::new();
    let mut cursor = vec![0usize; ts.len()];
    if ts.iter().all(|t| !t.is_empty()) && !ts.is_empty() {
        'outer: loop {
            let ok = eqs
                .iter()
                .all(|&((ta, ca), (tb, cb))| ts[ta].rows()[cursor[ta]][ca] == ts[tb].rows()[cursor[tb]][cb]);
            if ok {
                out.push(
                    cursor
                        .iter()
                        .enumerate()
                        .flat_map(|(i, &r)| ts[i].rows()[r].iter().copied())
                        .collect(),
                );
            }
            // Odometer increment, last table fastest.
            let mut i = ts.len();
            loop {
                if i == 0 {
                    break 'outer;
                }
                i -= 1;
                cursor[i] += 1;
                if cursor[i] < ts[i].len() {
                    break;
                }
                cursor[i] = 0;
            }
        }
    }
    Table::new(schema, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t_st() -> Table {
        Table::from_bits("t-st", &["t", "st"], &[&[1, 1], &[0, 1], &[0, 0]]).unwrap()
    }

    fn n_t() -> Table {
        Table::from_bits("n-t", &["n", "t"], &[&[0, 1], &[1, 0], &[0, 0]]).unwrap()
    }

    #[test]
    fn select_examples() {
        let t = t_st();
        let r = select(&t, &Predicate::atom(AttrRef::new("t-st", "t"), false)).unwrap();
        assert_eq!(r.bits(), vec![vec![0, 1], vec![0, 0]]);
        assert_eq!(select(&t, &Predicate::True).unwrap(), t);
        let empty = Table::from_bits("e", &["x"], &[]).unwrap();
        let r = select(&empty, &Predicate::atom(AttrRef::new("e", "x"), true)).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn select_rejects_foreign_attribute() {
        let err = select(&t_st(), &Predicate::atom(AttrRef::new("n-t", "n"), true)).unwrap_err();
        assert_eq!(err, EngineError::UnresolvedAttribute("n-t.n".into()));
    }

    #[test]
    fn project_examples() {
        let t = t_st();
        assert_eq!(project(&t, &["st"]).unwrap().bits(), vec![vec![1], vec![0]]);
        assert_eq!(project(&t, &["t", "st"]).unwrap(), t);
        let empty = Table::from_bits("e", &["x", "y"], &[]).unwrap();
        let p = project(&empty, &["x"]).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.schema().attributes, ["x"]);
        assert!(project(&t, &["zz"]).is_err());
    }

    #[test]
    fn join_of_local_consistency_tables() {
        let r = join(
            &[&n_t(), &t_st()],
            &[(AttrRef::new("n-t", "t"), AttrRef::new("t-st", "t"))],
        )
        .unwrap();
        assert_eq!(
            r.bits(),
            vec![
                vec![0, 1, 1, 1],
                vec![1, 0, 0, 1],
                vec![1, 0, 0, 0],
                vec![0, 0, 0, 1],
                vec![0, 0, 0, 0],
            ]
        );
        assert_eq!(r.schema().attributes, ["n-t.n", "n-t.t", "t-st.t", "t-st.st"]);
    }

    #[test]
    fn join_edge_cases() {
        let a = Table::from_bits("a", &["x"], &[&[1], &[0]]).unwrap();
        let b = Table::from_bits("b", &["y"], &[&[1], &[0]]).unwrap();
        let e = Table::from_bits("e", &["z"], &[]).unwrap();
        assert_eq!(join(&[&a, &b], &[]).unwrap().len(), 4);
        assert!(join(&[&a, &e], &[]).unwrap().is_empty());
        assert!(matches!(
            join(&[&a, &b], &[(AttrRef::new("a", "x"), AttrRef::new("c", "y"))]),
            Err(EngineError::UnresolvedAttribute(_))
        ));
    }
}
