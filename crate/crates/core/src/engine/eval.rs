//! Streaming nested-loop evaluation of conjunctive queries.
//!
//! The Cartesian product of FROM is never materialized. Single-table
//! conjuncts filter each table's rows once up front; every other conjunct
//! is checked at the first join level where all of its tables are bound.
//! Live state is one row cursor per table plus the distinct result buffer.

use std::collections::{HashMap, HashSet};
use std::ops::ControlFlow;

use super::{AttrRef, ConjunctiveQuery, EngineError, Predicate, Table};

/// Instrumentation counters for one evaluation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalStats {
    /// Largest number of simultaneously bound table rows (partial binding
    /// depth). Never exceeds the number of FROM tables.
    pub peak_live_bindings: usize,
    /// Distinct tuples emitted.
    pub results: usize,
    /// Row indices kept after single-table filtering, summed over tables.
    pub candidate_rows: usize,
    /// Rows visited during the nested-loop enumeration.
    pub rows_examined: u64,
    /// Table names in the chosen join order.
    pub join_order: Vec<String>,
}

type Col = (usize, usize);

enum Compiled {
    Atom(Col, bool),
    Eq(Col, Col),
    Not(Box<Compiled>),
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
    Const(bool),
}

impl Compiled {
    fn eval(&self, value: &impl Fn(Col) -> bool) -> bool {
        match self {
            Compiled::Atom(c, v) => value(*c) == *v,
            Compiled::Eq(a, b) => value(*a) == value(*b),
            Compiled::Not(p) => !p.eval(value),
            Compiled::And(ps) => ps.iter().all(|p| p.eval(value)),
            Compiled::Or(ps) => ps.iter().any(|p| p.eval(value)),
            Compiled::Const(v) => *v,
        }
    }

    fn tables(&self, out: &mut Vec<usize>) {
        match self {
            Compiled::Atom(c, _) => out.push(c.0),
            Compiled::Eq(a, b) => {
                out.push(a.0);
                out.push(b.0);
            }
            Compiled::Not(p) => p.tables(out),
            Compiled::And(ps) | Compiled::Or(ps) => ps.iter().for_each(|p| p.tables(out)),
            Compiled::Const(_) => {}
        }
    }
}

struct Resolver<'q> {
    tables: &'q [std::sync::Arc<Table>],
    slots: HashMap<&'q str, usize>,
}

impl<'q> Resolver<'q> {
    fn new(tables: &'q [std::sync::Arc<Table>]) -> Result<Self, EngineError> {
        let mut slots = HashMap::new();
        for (i, t) in tables.iter().enumerate() {
            if slots.insert(t.name(), i).is_some() {
                return Err(EngineError::DuplicateTable(t.name().to_string()));
            }
        }
        Ok(Resolver { tables, slots })
    }

    fn resolve(&self, a: &AttrRef) -> Result<Col, EngineError> {
        let slot = *self
            .slots
            .get(a.table.as_str())
            .ok_or_else(|| EngineError::UnresolvedAttribute(a.to_string()))?;
        let col = self.tables[slot]
            .schema()
            .position(&a.attribute)
            .ok_or_else(|| EngineError::UnresolvedAttribute(a.to_string()))?;
        Ok((slot, col))
    }

    fn compile(&self, p: &Predicate) -> Result<Compiled, EngineError> {
        Ok(match p {
            Predicate::True => Compiled::Const(true),
            Predicate::Atom { attr, value } => Compiled::Atom(self.resolve(attr)?, *value),
            Predicate::Eq(a, b) => Compiled::Eq(self.resolve(a)?, self.resolve(b)?),
            Predicate::Not(q) => Compiled::Not(Box::new(self.compile(q)?)),
            Predicate::And(qs) => {
                Compiled::And(qs.iter().map(|q| self.compile(q)).collect::<Result<_, _>>()?)
            }
            Predicate::Or(qs) => {
                Compiled::Or(qs.iter().map(|q| self.compile(q)).collect::<Result<_, _>>()?)
            }
        })
    }
}

struct Plan<'q> {
    tables: Vec<&'q Table>,
    candidates: Vec<Vec<usize>>,
    order: Vec<usize>,
    /// Conjuncts to check right after binding the table at each level.
    checks: Vec<Vec<Compiled>>,
    select: Vec<Col>,
    limit: Option<usize>,
    empty: bool,
}

fn plan(q: &ConjunctiveQuery) -> Result<Plan<'_>, EngineError> {
    let resolver = Resolver::new(&q.from)?;
    let n = q.from.len();
    let tables: Vec<&Table> = q.from.iter().map(|t| t.as_ref()).collect();

    let select = q
        .select
        .iter()
        .map(|a| resolver.resolve(a))
        .collect::<Result<Vec<_>, _>>()?;

    let mut empty = q.limit == Some(0);
    let mut single: Vec<Vec<Compiled>> = (0..n).map(|_| Vec::new()).collect();
    let mut multi: Vec<(Vec<usize>, Compiled)> = Vec::new();
    for p in q.conjuncts.iter().cloned().flat_map(Predicate::conjuncts) {
        let c = resolver.compile(&p)?;
        let mut ts = Vec::new();
        c.tables(&mut ts);
        ts.sort_unstable();
        ts.dedup();
        match ts.len() {
            0 => {
                if !c.eval(&|_| unreachable!("constant conjunct")) {
                    empty = true;
                }
            }
            1 => single[ts[0]].push(c),
            _ => multi.push((ts, c)),
        }
    }

    let candidates: Vec<Vec<usize>> = (0..n)
        .map(|slot| {
            let t = tables[slot];
            (0..t.len())
                .filter(|&r| {
                    let row = &t.rows()[r];
                    single[slot].iter().all(|c| c.eval(&|(_, col)| row[col]))
                })
                .collect()
        })
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        empty = true;
    }

    let atoms: Vec<usize> = single.iter().map(Vec::len).collect();
    let sizes: Vec<usize> = candidates.iter().map(Vec::len).collect();
    let scopes: Vec<Vec<usize>> = multi.iter().map(|(ts, _)| ts.clone()).collect();
    let order = join_order(n, &atoms, &sizes, &scopes);

    let mut level_of = vec![0; n];
    for (lvl, &slot) in order.iter().enumerate() {
        level_of[slot] = lvl;
    }
    let mut checks: Vec<Vec<Compiled>> = (0..n).map(|_| Vec::new()).collect();
    for (ts, c) in multi {
        let lvl = ts.iter().map(|&t| level_of[t]).max().expect("multi-table");
        checks[lvl].push(c);
    }

    Ok(Plan {
        tables,
        candidates,
        order,
        checks,
        select,
        limit: q.limit,
        empty,
    })
}

/// Greedy connectivity order: start from the table with the most bound
/// atoms, then repeatedly take the table that completes the most conjuncts,
/// then the one sharing the most conjuncts with the chosen tables. Ties go to
/// more atoms, fewer candidate rows, then FROM position.
fn join_order(n: usize, atoms: &[usize], sizes: &[usize], scopes: &[Vec<usize>]) -> Vec<usize> {
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ci, s) in scopes.iter().enumerate() {
        for &t in s {
            touching[t].push(ci);
        }
    }
    let mut chosen = vec![false; n];
    // Per conjunct: number of its tables not yet chosen.
    let mut remaining: Vec<usize> = scopes.iter().map(Vec::len).collect();
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let best = (0..n)
            .filter(|&t| !chosen[t])
            .max_by(|&a, &b| {
                let key = |t: usize| {
                    let mut completes = 0;
                    let mut connects = 0;
                    for &ci in &touching[t] {
                        if remaining[ci] < scopes[ci].len() {
                            connects += 1;
                        }
                        if remaining[ci] == 1 {
                            completes += 1;
                        }
                    }
                    (completes, connects, atoms[t], std::cmp::Reverse(sizes[t]))
                };
                // max_by keeps the last maximum; compare positions reversed
                // so the earliest table wins ties.
                key(a).cmp(&key(b)).then(b.cmp(&a))
            })
            .expect("unchosen table exists");
        chosen[best] = true;
        for &ci in &touching[best] {
            remaining[ci] -= 1;
        }
        order.push(best);
    }
    order
}

struct Run<'p, 'q, F> {
    plan: &'p Plan<'q>,
    cursor: Vec<usize>,
    seen: HashSet<Vec<bool>>,
    stats: EvalStats,
    sink: F,
}

impl<F: FnMut(&[bool]) -> ControlFlow<()>> Run<'_, '_, F> {
    fn value(&self, (slot, col): Col) -> bool {
        self.plan.tables[slot].rows()[self.cursor[slot]][col]
    }

    fn descend(&mut self, level: usize) -> ControlFlow<()> {
        let plan = self.plan;
        if level == plan.order.len() {
            let tuple: Vec<bool> = plan.select.iter().map(|&c| self.value(c)).collect();
            if self.seen.contains(&tuple) {
                return ControlFlow::Continue(());
            }
            self.seen.insert(tuple.clone());
            self.stats.results += 1;
            (self.sink)(&tuple)?;
            if plan.limit.is_some_and(|k| self.stats.results >= k) {
                return ControlFlow::Break(());
            }
            return ControlFlow::Continue(());
        }
        let slot = plan.order[level];
        for &r in &plan.candidates[slot] {
            self.cursor[slot] = r;
            self.stats.rows_examined += 1;
            if plan.checks[level].iter().all(|c| c.eval(&|col| self.value(col))) {
                self.stats.peak_live_bindings = self.stats.peak_live_bindings.max(level + 1);
                self.descend(level + 1)?;
            }
        }
        ControlFlow::Continue(())
    }
}

/// Streams distinct result tuples to `sink` in enumeration order; the sink
/// may stop the evaluation early with `ControlFlow::Break`.
pub fn evaluate_each<F>(q: &ConjunctiveQuery, sink: F) -> Result<EvalStats, EngineError>
where
    F: FnMut(&[bool]) -> ControlFlow<()>,
{
    let plan = plan(q)?;
    let mut run = Run {
        plan: &plan,
        cursor: vec![0; plan.tables.len()],
        seen: HashSet::new(),
        stats: EvalStats {
            candidate_rows: plan.candidates.iter().map(Vec::len).sum(),
            join_order: plan
                .order
                .iter()
                .map(|&s| plan.tables[s].name().to_string())
                .collect(),
            ..EvalStats::default()
        },
        sink,
    };
    if !plan.empty {
        let _ = run.descend(0);
    }
    Ok(run.stats)
}

pub fn evaluate_with_stats(
    q: &ConjunctiveQuery,
) -> Result<(Vec<Vec<bool>>, EvalStats), EngineError> {
    let mut out = Vec::new();
    let stats = evaluate_each(q, |t| {
        out.push(t.to_vec());
        ControlFlow::Continue(())
    })?;
    Ok((out, stats))
}

/// Evaluates `q` to its list of distinct result tuples.
pub fn evaluate(q: &ConjunctiveQuery) -> Result<Vec<Vec<bool>>, EngineError> {
    evaluate_with_stats(q).map(|(rows, _)| rows)
}

/// Number of distinct result tuples (respecting `limit`).
pub fn count(q: &ConjunctiveQuery) -> Result<u64, EngineError> {
    evaluate_each(q, |_| ControlFlow::Continue(())).map(|s| s.results as u64)
}
