//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;

use fmcq_core::engine::{AttrRef, ConjunctiveQuery, Predicate, Table};
use fmcq_core::model::{CtcKind, Decomposition, GroupKind};
use fmcq_core::{Assignment, Configuration, FeatureModel};

/// Feature model semantics read straight off the tree, without going
/// through the formula translation.
pub fn textbook_valid(fm: &FeatureModel, v: &[bool]) -> bool {
    let idx = |id: &str| fm.index_of(id).expect("known feature");
    if !v[fm.root()] {
        return false;
    }
    for (i, f) in fm.features().iter().enumerate() {
        if let Some(p) = &f.parent {
            let p = idx(p);
            if v[i] && !v[p] {
                return false;
            }
            if f.decomposition == Decomposition::Mandatory && v[p] && !v[i] {
                return false;
            }
        }
    }
    for g in fm.groups() {
        let on = g.members.iter().filter(|m| v[idx(m)]).count();
        let ok = match (v[idx(&g.parent)], g.kind) {
            (false, _) => on == 0,
            (true, GroupKind::Alternative) => on == 1,
            (true, GroupKind::Or) => on >= 1,
        };
        if !ok {
            return false;
        }
    }
    fm.ctcs().iter().all(|c| {
        let (a, b) = (v[idx(&c.lhs)], v[idx(&c.rhs)]);
        match c.kind {
            CtcKind::Requires => !a || b,
            CtcKind::Excludes => !(a && b),
        }
    })
}

/// Every total assignment valid under [`textbook_valid`] and consistent
/// with `cr`, in ascending binary order.
pub fn brute_configs(fm: &FeatureModel, cr: &Assignment) -> Vec<Configuration> {
    let n = fm.len();
    assert!(n <= 20, "brute force over {n} features");
    (0u32..1 << n)
        .map(|mask| Configuration((0..n).map(|i| mask >> (n - 1 - i) & 1 == 1).collect()))
        .filter(|c| textbook_valid(fm, c.values()) && cr.consistent_with(c))
        .collect()
}

fn lookup(tables: &[Arc<Table>], row: &[&Vec<bool>], a: &AttrRef) -> bool {
    let t = tables.iter().position(|t| t.name() == a.table).expect("known table");
    let c = tables[t].schema().position(&a.attribute).expect("known attribute");
    row[t][c]
}

fn holds(p: &Predicate, tables: &[Arc<Table>], row: &[&Vec<bool>]) -> bool {
    match p {
        Predicate::True => true,
        Predicate::Atom { attr, value } => lookup(tables, row, attr) == *value,
        Predicate::Eq(a, b) => lookup(tables, row, a) == lookup(tables, row, b),
        Predicate::Not(q) => !holds(q, tables, row),
        Predicate::And(qs) => qs.iter().all(|q| holds(q, tables, row)),
        Predicate::Or(qs) => qs.iter().any(|q| holds(q, tables, row)),
    }
}

/// Materializes the full product, filters, projects and removes duplicates.
pub fn reference_eval(q: &ConjunctiveQuery) -> BTreeSet<Vec<bool>> {
    let select: Vec<AttrRef> = if q.select.is_empty() {
        q.from
            .iter()
            .flat_map(|t| t.schema().attributes.iter().map(|a| AttrRef::new(t.name(), a.as_str())))
            .collect()
    } else {
        q.select.clone()
    };
    let mut product: Vec<Vec<&Vec<bool>>> = vec![Vec::new()];
    for t in &q.from {
        product = product
            .into_iter()
            .flat_map(|prefix| {
                t.rows().iter().map(move |r| {
                    let mut p = prefix.clone();
                    p.push(r);
                    p
                })
            })
            .collect();
    }
    product
        .into_iter()
        .filter(|row| q.conjuncts.iter().all(|p| holds(p, &q.from, row)))
        .map(|row| select.iter().map(|a| lookup(&q.from, &row, a)).collect())
        .collect()
}

fn random_predicate<R: Rng>(rng: &mut R, attrs: &[AttrRef], depth: u32) -> Predicate {
    let pick = |rng: &mut R| attrs[rng.random_range(0..attrs.len())].clone();
    match if depth == 0 { rng.random_range(0..2) } else { rng.random_range(0..5) } {
        0 => Predicate::atom(pick(rng), rng.random_bool(0.5)),
        1 => Predicate::eq(pick(rng), pick(rng)),
        2 => Predicate::not(random_predicate(rng, attrs, depth - 1)),
        3 => Predicate::Or((0..rng.random_range(2..=3)).map(|_| random_predicate(rng, attrs, depth - 1)).collect()),
        _ => Predicate::And((0..2).map(|_| random_predicate(rng, attrs, depth - 1)).collect()),
    }
}

/// A random query over 1 to 4 boolean tables whose product has at most
/// 2^16 rows.
pub fn random_query<R: Rng>(rng: &mut R) -> ConjunctiveQuery {
    let mut from = Vec::new();
    let mut product = 1usize;
    for t in 0..rng.random_range(1..=4) {
        let arity = rng.random_range(1..=4usize);
        let max_rows = (1usize << arity).min((1 << 16) / product);
        if max_rows == 0 {
            break;
        }
        let rows: BTreeSet<Vec<u8>> = (0..rng.random_range(1..=max_rows))
            .map(|_| (0..arity).map(|_| rng.random_range(0..2u8)).collect())
            .collect();
        product *= rows.len();
        let names: Vec<String> = (0..arity).map(|a| format!("a{a}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let rows: Vec<&[u8]> = rows.iter().map(Vec::as_slice).collect();
        from.push(Arc::new(Table::from_bits(&format!("t{t}"), &names, &rows).expect("valid table")));
    }
    let attrs: Vec<AttrRef> = from
        .iter()
        .flat_map(|t| t.schema().attributes.iter().map(|a| AttrRef::new(t.name(), a.as_str())))
        .collect();
    let mut q = ConjunctiveQuery::new(from);
    for _ in 0..rng.random_range(0..=4) {
        q = q.filter(random_predicate(rng, &attrs, 2));
    }
    let select: Vec<AttrRef> = attrs.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
    q = if select.is_empty() { q.select_all() } else { q.select(select) };
    if rng.random_bool(0.2) {
        q = q.limit(rng.random_range(0..5));
    }
    q
}
