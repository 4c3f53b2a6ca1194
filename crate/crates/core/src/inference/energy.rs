use super::posterior::{check_dimensions, LogModel};
use super::{
    mismatch, safe_log, safe_log_all, Categorical, LikelihoodMatrix, LogPreference, Result,
    TransitionMatrix,
};
use crate::scalar::Scalar;

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Policy-specific variational free energy
/// `F = Σ_τ s_τ · [ln s_τ - ln(B_{τ-1}) s_{τ-1} - ln(A)ᵀ o_τ]`,
/// using `ln D` for the prior message at the first step.
pub fn variational_free_energy<S: Scalar>(
    likelihood: &LikelihoodMatrix<S>,
    transitions: &[&TransitionMatrix<S>],
    initial: &Categorical<S>,
    observations: &[Option<Vec<S>>],
    beliefs: &[Categorical<S>],
) -> Result<S> {
    let horizon = beliefs.len();
    check_dimensions(likelihood, transitions, initial, observations, horizon)?;
    if beliefs.iter().any(|s| s.len() != initial.len()) {
        return Err(mismatch("belief size differs from the state factor"));
    }
    let model = LogModel::new(likelihood, transitions, initial);
    let mut total = S::zero();
    for (t, s) in beliefs.iter().enumerate() {
        let mut term = safe_log_all(s.probs());
        let prior = model.forward(t, t.checked_sub(1).map(|p| &beliefs[p]));
        for (x, p) in term.iter_mut().zip(&prior) {
            *x = *x - *p;
        }
        if let Some(e) = model.evidence(observations.get(t).and_then(Option::as_ref)) {
            for (x, v) in term.iter_mut().zip(&e) {
                *x = *x - *v;
            }
        }
        total = total + dot(s.probs(), &term);
    }
    Ok(total)
}

/// Expected free energy over the steps after `present` (1-based current time):
/// `G = Σ_τ o_τ · (ln o_τ - C) + s_τ · H[A]` with `o_τ = A s_τ` and `H[A]` the
/// entropy of each likelihood column.
pub fn expected_free_energy<S: Scalar>(
    likelihood: &LikelihoodMatrix<S>,
    preference: &LogPreference<S>,
    beliefs: &[Categorical<S>],
    present: usize,
) -> Result<S> {
    let a = likelihood.matrix();
    if preference.len() != likelihood.outcomes() {
        return Err(mismatch(format!(
            "preference has {} entries, likelihood has {} outcomes",
            preference.len(),
            likelihood.outcomes()
        )));
    }
    let ambiguity: Vec<S> = (0..a.cols())
        .map(|c| {
            -(0..a.rows()).fold(S::zero(), |acc, r| {
                let p = a.get(r, c);
                acc + p * safe_log(p)
            })
        })
        .collect();
    let mut total = S::zero();
    for s in beliefs.iter().skip(present) {
        if s.len() != a.cols() {
            return Err(mismatch("belief size differs from the likelihood"));
        }
        let outcome = a.mul_vec(s.probs());
        let cost: Vec<S> = outcome
            .iter()
            .zip(preference.values())
            .map(|(&o, &c)| safe_log(o) - c)
            .collect();
        total = total + dot(&outcome, &cost) + dot(s.probs(), &ambiguity);
    }
    Ok(total)
}
