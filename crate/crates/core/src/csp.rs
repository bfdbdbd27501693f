//! Backtracking CSP solver with forward checking and propagation of forced
//! values, used as the comparison baseline, and the exhaustive brute-force
//! enumerator used as test oracle.

use thiserror::Error;

use crate::model::{Assignment, Configuration, FeatureModel};
use crate::semantics::{ConstraintSet, Expr};

/// Largest model the brute-force enumerator accepts.
pub const BRUTE_FORCE_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("configuration space too large: {features} features exceed the limit of {limit}")]
pub struct SizeError {
    pub features: usize,
    pub limit: usize,
}

const ZERO: u8 = 0b01;
const ONE: u8 = 0b10;

fn bit(v: bool) -> u8 {
    if v {
        ONE
    } else {
        ZERO
    }
}

/// A Boolean CSP over the model's features: domains ⊆ {0,1} seeded from the
/// requirements, constraints taken from the translated model.
#[derive(Debug, Clone)]
pub struct CspProblem<'a> {
    domains: Vec<u8>,
    constraints: Vec<&'a Expr>,
    scopes: Vec<Vec<usize>>,
    watch: Vec<Vec<usize>>,
}

impl<'a> CspProblem<'a> {
    pub fn new(fm: &FeatureModel, cf: &'a ConstraintSet, cr: &Assignment) -> Self {
        let mut domains = vec![ZERO | ONE; fm.len()];
        for (f, v) in cr.iter() {
            domains[f] = bit(v);
        }
        let constraints: Vec<&Expr> = cf.iter().map(|f| &f.expr).collect();
        let scopes: Vec<Vec<usize>> = constraints.iter().map(|e| e.features()).collect();
        let mut watch = vec![Vec::new(); fm.len()];
        for (ci, scope) in scopes.iter().enumerate() {
            for &v in scope {
                watch[v].push(ci);
            }
        }
        CspProblem {
            domains,
            constraints,
            scopes,
            watch,
        }
    }

    pub fn variables(&self) -> usize {
        self.domains.len()
    }
}

/// Counters collected during a search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes: u64,
    pub backtracks: u64,
    pub pruned: u64,
}

/// Removes from `domain` every value of the single unbound variable `var`
/// that makes `expr` false, given the other variables in `assigned`.
pub fn prune_domain(expr: &Expr, assigned: &mut [Option<bool>], var: usize, domain: u8) -> u8 {
    let mut kept = domain;
    for v in [true, false] {
        if domain & bit(v) == 0 {
            continue;
        }
        assigned[var] = Some(v);
        if expr.eval_partial(assigned) == Some(false) {
            kept &= !bit(v);
        }
    }
    assigned[var] = None;
    kept
}

fn known(d: u8) -> Option<bool> {
    match d {
        ONE => Some(true),
        ZERO => Some(false),
        _ => None,
    }
}

/// Search state. A variable counts as bound once its domain is a singleton,
/// whether by assignment, by the requirements or by propagation.
struct Search<'p, 'a> {
    problem: &'p CspProblem<'a>,
    view: Vec<Option<bool>>,
    domains: Vec<u8>,
    trail: Vec<(usize, u8)>,
    stats: SearchStats,
}

impl<'p, 'a> Search<'p, 'a> {
    fn new(problem: &'p CspProblem<'a>) -> Option<Self> {
        let domains = problem.domains.clone();
        if domains.contains(&0) {
            return None;
        }
        let mut s = Search {
            problem,
            view: domains.iter().map(|&d| known(d)).collect(),
            domains,
            trail: Vec::new(),
            stats: SearchStats::default(),
        };
        let mut queue = Vec::new();
        for ci in 0..problem.constraints.len() {
            match s.check(ci) {
                None => return None,
                Some(Some(u)) => queue.push(u),
                Some(None) => {}
            }
        }
        s.propagate(queue).then_some(s)
    }

    fn set_domain(&mut self, var: usize, d: u8) {
        if d != self.domains[var] {
            self.trail.push((var, self.domains[var]));
            self.stats.pruned += u64::from((self.domains[var] & !d).count_ones());
            self.domains[var] = d;
            self.view[var] = known(d);
        }
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (v, d) = self.trail.pop().expect("trail above mark");
            self.domains[v] = d;
            self.view[v] = known(d);
        }
    }

    /// Forward-checks constraint `ci`. `None` on a violated constraint or a
    /// wiped-out domain, otherwise the variable that became bound, if any.
    fn check(&mut self, ci: usize) -> Option<Option<usize>> {
        let problem = self.problem;
        let expr = problem.constraints[ci];
        let mut unbound = None;
        for &v in &problem.scopes[ci] {
            if self.view[v].is_none() {
                if unbound.is_some() {
                    return (expr.eval_partial(&self.view) != Some(false)).then_some(None);
                }
                unbound = Some(v);
            }
        }
        match unbound {
            None => (expr.eval_partial(&self.view) == Some(true)).then_some(None),
            Some(u) => {
                let d = prune_domain(expr, &mut self.view, u, self.domains[u]);
                self.set_domain(u, d);
                match d {
                    0 => None,
                    ZERO | ONE => Some(Some(u)),
                    _ => Some(None),
                }
            }
        }
    }

    /// Rechecks constraints watching newly bound variables until fixpoint.
    fn propagate(&mut self, mut queue: Vec<usize>) -> bool {
        let problem = self.problem;
        while let Some(x) = queue.pop() {
            for &ci in &problem.watch[x] {
                match self.check(ci) {
                    None => return false,
                    Some(Some(u)) => queue.push(u),
                    Some(None) => {}
                }
            }
        }
        true
    }

    /// Depth-first search in canonical variable order, values (1,0).
    /// `emit` returns false to stop the search.
    fn run(&mut self, var: usize, emit: &mut dyn FnMut(&[Option<bool>]) -> bool) -> bool {
        if var == self.domains.len() {
            return emit(&self.view);
        }
        for v in [true, false] {
            if self.domains[var] & bit(v) == 0 {
                continue;
            }
            self.stats.nodes += 1;
            let mark = self.trail.len();
            let consistent = if self.view[var].is_some() {
                true
            } else {
                self.set_domain(var, bit(v));
                self.propagate(vec![var])
            };
            if consistent && !self.run(var + 1, emit) {
                return false;
            }
            self.undo(mark);
            self.stats.backtracks += 1;
        }
        true
    }
}

fn to_configuration(values: &[Option<bool>]) -> Configuration {
    Configuration(values.iter().map(|v| v.expect("complete")).collect())
}

/// First solution in search order, or `None` when unsatisfiable.
pub fn csp_solve(p: &CspProblem<'_>) -> Option<Configuration> {
    csp_solve_with_stats(p).0
}

pub fn csp_solve_with_stats(p: &CspProblem<'_>) -> (Option<Configuration>, SearchStats) {
    let Some(mut search) = Search::new(p) else {
        return (None, SearchStats::default());
    };
    let mut found = None;
    search.run(0, &mut |vals| {
        found = Some(to_configuration(vals));
        false
    });
    (found, search.stats)
}

/// Number of solutions, by exhaustive search with forward checking.
pub fn csp_count(p: &CspProblem<'_>) -> u64 {
    let Some(mut search) = Search::new(p) else {
        return 0;
    };
    let mut n = 0u64;
    search.run(0, &mut |_| {
        n += 1;
        true
    });
    n
}

/// All solutions in search order.
pub fn csp_enumerate(p: &CspProblem<'_>, limit: Option<usize>) -> Vec<Configuration> {
    let Some(mut search) = Search::new(p) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    search.run(0, &mut |vals| {
        out.push(to_configuration(vals));
        limit.is_none_or(|k| out.len() < k)
    });
    out
}

/// Tests all 2^n assignments against every formula and requirement. Output
/// is in ascending binary order with the first canonical feature as most
/// significant bit.
pub fn brute_force_enumerate(
    fm: &FeatureModel,
    cf: &ConstraintSet,
    cr: &Assignment,
) -> Result<Vec<Configuration>, SizeError> {
    let n = fm.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(SizeError {
            features: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut out = Vec::new();
    let mut values = vec![false; n];
    for mask in 0u32..(1u32 << n) {
        for (i, v) in values.iter_mut().enumerate() {
            *v = mask >> (n - 1 - i) & 1 == 1;
        }
        if cr.iter().all(|(f, v)| values[f] == v) && cf.iter().all(|f| f.expr.eval(&values)) {
            out.push(Configuration(values.clone()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{survey_model, ModelBuilder};
    use crate::semantics::translate;

    fn cr(fm: &FeatureModel, s: &str) -> Assignment {
        Assignment::parse(fm, s).unwrap()
    }

    #[test]
    fn survey_example_requirements_are_satisfiable() {
        let fm = survey_model();
        let cf = translate(&fm);
        let req = cr(&fm, "s=1,p=1,n=1,mm=0");
        let sol = csp_solve(&CspProblem::new(&fm, &cf, &req)).unwrap();
        assert!(cf.satisfied_by(&sol));
        assert!(req.consistent_with(&sol));
        let all = brute_force_enumerate(&fm, &cf, &req).unwrap();
        assert!(all.contains(&sol));
    }

    #[test]
    fn excludes_violation_is_unsat() {
        let fm = survey_model();
        let cf = translate(&fm);
        let p = CspProblem::new(&fm, &cf, &cr(&fm, "t=1,n=1"));
        assert_eq!(csp_solve(&p), None);
        assert_eq!(csp_count(&p), 0);
    }

    #[test]
    fn root_only_model() {
        let fm = ModelBuilder::new().root("r").build().unwrap();
        let cf = translate(&fm);
        let sol = csp_solve(&CspProblem::new(&fm, &cf, &Assignment::new())).unwrap();
        assert_eq!(sol, Configuration(vec![true]));
    }

    #[test]
    fn survey_brute_force() {
        let fm = survey_model();
        let cf = translate(&fm);
        let all = brute_force_enumerate(&fm, &cf, &Assignment::new()).unwrap();
        assert_eq!(all.len(), 15);
        assert!(all.contains(&Configuration::from_bits(&[1, 1, 1, 0, 0, 0, 1, 1, 0])));
        assert!(all.contains(&Configuration::from_bits(&[1, 1, 1, 0, 0, 1, 1, 1, 0])));
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(
            csp_count(&CspProblem::new(&fm, &cf, &Assignment::new())),
            15
        );
    }

    #[test]
    fn contradictory_requirements_enumerate_nothing() {
        let fm = survey_model();
        let cf = translate(&fm);
        assert!(brute_force_enumerate(&fm, &cf, &cr(&fm, "s=0"))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn brute_force_size_guard() {
        let mut b = ModelBuilder::new();
        b.root("r");
        for i in 0..BRUTE_FORCE_LIMIT {
            b.optional("r", &format!("f{i}"));
        }
        let fm = b.build().unwrap();
        let err = brute_force_enumerate(&fm, &translate(&fm), &Assignment::new()).unwrap_err();
        assert_eq!(err.features, BRUTE_FORCE_LIMIT + 1);
    }

    #[test]
    fn csp_enumerate_matches_brute_force_set() {
        let fm = survey_model();
        let cf = translate(&fm);
        let mut a = csp_enumerate(&CspProblem::new(&fm, &cf, &Assignment::new()), None);
        a.sort();
        let b = brute_force_enumerate(&fm, &cf, &Assignment::new()).unwrap();
        assert_eq!(a, b);
        let first = csp_enumerate(&CspProblem::new(&fm, &cf, &Assignment::new()), Some(3));
        assert_eq!(first.len(), 3);
    }

    #[test]
    fn prune_domain_only_drops_falsifying_values() {
        // !(a=1) | b=1 with a=1 bound: b=0 is pruned, b=1 kept.
        let e = Expr::Or(vec![Expr::not(Expr::is(0)), Expr::is(1)]);
        let mut assigned = vec![Some(true), None];
        assert_eq!(prune_domain(&e, &mut assigned, 1, ZERO | ONE), ONE);
        assert_eq!(assigned[1], None);
        let mut assigned = vec![Some(false), None];
        assert_eq!(prune_domain(&e, &mut assigned, 1, ZERO | ONE), ZERO | ONE);
    }
}
