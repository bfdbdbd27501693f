//! Stepwise configuration. The state after a step is a function of the
//! model, the previous requirements and the mutation only.

use fmcq_core::diagnosis::{diagnose_model, Diagnosis, DiagnosisError, DiagnosisOptions};
use fmcq_core::model::{Assignment, Configuration};
use fmcq_core::repr::ReprError;
use fmcq_core::Solver;

/// Remaining configurations are counted up to this many.
pub const REMAINING_CAP: usize = 100_000;
/// Diagnoses returned with an inconsistent step.
pub const MAX_DIAGNOSES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    Set { feature: usize, value: bool },
    Unset { feature: usize },
}

pub fn apply(cr: &Assignment, m: Mutation) -> Assignment {
    let mut next = cr.clone();
    match m {
        Mutation::Set { feature, value } => {
            next.bind(feature, value);
        }
        Mutation::Unset { feature } => {
            next.unbind(feature);
        }
    }
    next
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub cr: Assignment,
    pub consistent: bool,
    /// Unbound features that can take only one value under `cr`.
    pub forced: Vec<(usize, bool)>,
    pub remaining: u64,
    pub remaining_capped: bool,
    pub diagnoses: Vec<Diagnosis>,
    pub configuration: Option<Configuration>,
}

#[derive(Debug, thiserror::Error)]
pub enum StepError {
    #[error(transparent)]
    Repr(#[from] ReprError),
    #[error(transparent)]
    Diagnosis(#[from] DiagnosisError),
}

/// Solves `cr`; when consistent, probes each unbound feature for the value
/// the witness does not take, otherwise derives diagnoses.
pub fn evaluate(solver: &Solver, cr: &Assignment) -> Result<StepState, StepError> {
    let fm = solver.model();
    let Some(witness) = solver.solve(cr)? else {
        let report = diagnose_model(fm, solver.constraints(), cr, MAX_DIAGNOSES, DiagnosisOptions::default());
        let diagnoses = match report {
            Ok(r) => r.diagnoses,
            Err(DiagnosisError::NoConfigurations) => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        return Ok(StepState {
            cr: cr.clone(),
            consistent: false,
            forced: Vec::new(),
            remaining: 0,
            remaining_capped: false,
            diagnoses,
            configuration: None,
        });
    };

    let mut forced = Vec::new();
    for f in 0..fm.len() {
        if cr.get(f).is_some() {
            continue;
        }
        let mut probe = cr.clone();
        probe.bind(f, !witness.get(f));
        if solver.solve(&probe)?.is_none() {
            forced.push((f, witness.get(f)));
        }
    }
    let remaining = solver.count_up_to(cr, Some(REMAINING_CAP))?;
    Ok(StepState {
        cr: cr.clone(),
        consistent: true,
        forced,
        remaining,
        remaining_capped: remaining >= REMAINING_CAP as u64,
        diagnoses: Vec::new(),
        configuration: Some(witness),
    })
}

/// Replays a mutation log from empty requirements.
pub fn replay(solver: &Solver, log: &[Mutation]) -> Result<StepState, StepError> {
    let cr = log.iter().fold(Assignment::new(), |cr, &m| apply(&cr, m));
    evaluate(solver, &cr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fmcq_core::model::survey_model;
    use fmcq_core::{Approach, SolverOptions};
    use std::sync::Arc;

    fn solver() -> Solver {
        Solver::build(Arc::new(survey_model()), Approach::PerFeature, SolverOptions::default()).unwrap()
    }

    #[test]
    fn fresh_state_forces_mandatory_features() {
        let s = solver();
        let st = evaluate(&s, &Assignment::new()).unwrap();
        assert!(st.consistent);
        assert_eq!(st.remaining, 15);
        let fm = s.model();
        let forced: Vec<String> = st.forced.iter().map(|&(f, v)| format!("{}={}", fm.id(f), u8::from(v))).collect();
        assert_eq!(forced, ["s=1", "p=1", "q=1"]);
    }

    #[test]
    fn conflicting_step_yields_repairs() {
        let s = solver();
        let fm = s.model();
        let n = fm.index_of("n").unwrap();
        let t = fm.index_of("t").unwrap();
        let cr = apply(&apply(&Assignment::new(), Mutation::Set { feature: n, value: true }), Mutation::Set { feature: t, value: true });
        let st = evaluate(&s, &cr).unwrap();
        assert!(!st.consistent);
        assert!(st.diagnoses.iter().any(|d| d.delta.render(fm) == "t=1"));
        for d in &st.diagnoses {
            let repaired = fmcq_core::diagnosis::apply_diagnosis(&cr, d);
            assert!(evaluate(&s, &repaired).unwrap().consistent);
        }
    }

    #[test]
    fn replay_matches_stepwise_state() {
        let s = solver();
        let log = [
            Mutation::Set { feature: 3, value: true },
            Mutation::Set { feature: 8, value: false },
            Mutation::Unset { feature: 3 },
        ];
        let mut cr = Assignment::new();
        for m in log {
            cr = apply(&cr, m);
        }
        assert_eq!(replay(&s, &log).unwrap(), evaluate(&s, &cr).unwrap());
    }
}
