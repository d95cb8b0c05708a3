//! Relative entropy on cylinder σ-algebras, the entropy of a shift-invariant
//! measure relative to the a-priori product `p^⊗ℕ`, and the variational gap
//! `log λ − (h(μ) + ∫ f dμ)`.
//!
//! With `Hₙ = ℋ_{𝓕ₙ}(μ | p^⊗ℕ) ≥ 0`, the entropy entering the variational
//! functional is `h(μ) = −lim Hₙ/n`, estimated by the increment
//! `−(Hₙ₊₁ − Hₙ)` which is exact for Markov measures of matching order.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::scalar::Real;
use crate::spectral::SpectralData;

use super::process::{shift_defect, CylinderProcess};
use super::CylinderMeasure;

/// `Σ_u μ[u] log(μ[u]/ρ[u])` over depth-`n` cylinders, `+∞` when `μ` is not
/// absolutely continuous with respect to `ρ` on them.
pub fn relative_entropy<T: Real>(
    mu: &CylinderMeasure<T>,
    rho: &CylinderMeasure<T>,
    n: usize,
) -> Result<T> {
    if n == 0 {
        return Err(Error::DepthMismatch("relative entropy needs n ≥ 1".into()));
    }
    let (m, r) = (mu.marginal(n)?, rho.marginal(n)?);
    Ok(kl(m.weights(), r.weights()))
}

fn kl<T: Real>(mu: &[T], rho: &[T]) -> T {
    let mut total = T::zero();
    for (&m, &r) in mu.iter().zip(rho) {
        if m == T::zero() {
            continue;
        }
        if r == T::zero() {
            return T::infinity();
        }
        total = total + m * (m / r).ln();
    }
    total
}

/// `Hₙ` against the a-priori product, computed without materializing it.
fn relative_entropy_to_product<T: Real>(m: &CylinderMeasure<T>) -> T {
    let space = m.space();
    let depth = m.depth();
    let mut total = T::zero();
    for (i, &w) in m.weights().iter().enumerate() {
        if w > T::zero() {
            total = total + w * (w / space.product_weight(depth, i)).ln();
        }
    }
    total
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Real")]
pub struct EntropyReport<T: Real> {
    /// `n = 1..=n_max`.
    pub ns: Vec<usize>,
    /// `Hₙ = ℋ_{𝓕ₙ}(μ | p^⊗ℕ)`.
    pub relative_entropy: Vec<T>,
    /// `Hₙ / n`.
    pub rate: Vec<T>,
    /// `Hₙ₊₁ − Hₙ`.
    pub increments: Vec<T>,
    /// `−(H_{n_max+1} − H_{n_max})`, the entropy term of the variational
    /// functional.
    pub specific_entropy: T,
    /// `∫ f dμ`, when a potential was supplied.
    pub integral: Option<T>,
    /// Additive error on `integral` and `log λ` from the variation bound.
    pub truncation_error: T,
    pub log_lambda: Option<T>,
    /// `log λ − (−(Hₙ₊₁ − Hₙ) + ∫ f dμ)` for each `n`.
    pub gaps: Vec<T>,
    /// `max_u |μ(σ⁻¹[u]) − μ[u]|` at depth `n_max`.
    pub invariance_defect: Option<T>,
    pub flags: Vec<String>,
}

impl<T: Real> EntropyReport<T> {
    /// Gap at the largest `n`.
    pub fn gap(&self) -> Option<T> {
        self.gaps.last().copied()
    }
}

/// `Hₙ`, `Hₙ/n` and `Hₙ₊₁ − Hₙ` for `n = 1..=n_max`.
pub fn specific_entropy<T: Real, P: CylinderProcess<T> + ?Sized>(
    mu: &P,
    n_max: usize,
) -> Result<EntropyReport<T>> {
    if n_max == 0 {
        return Err(Error::DepthMismatch("n_max must be positive".into()));
    }
    let h: Vec<T> = (1..=n_max + 1)
        .map(|n| Ok(relative_entropy_to_product(&mu.marginal(n)?)))
        .collect::<Result<_>>()?;
    let ns: Vec<usize> = (1..=n_max).collect();
    let rate = ns.iter().map(|&n| h[n - 1] / T::lit(n as f64)).collect();
    let increments: Vec<T> = h.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(EntropyReport {
        specific_entropy: -increments[n_max - 1],
        relative_entropy: h[..n_max].to_vec(),
        ns,
        rate,
        increments,
        integral: None,
        truncation_error: T::zero(),
        log_lambda: None,
        gaps: Vec::new(),
        invariance_defect: None,
        flags: Vec::new(),
    })
}

/// Full variational report for `μ` against the pressure `log λ` of `spec`.
///
/// The supremum in the variational principle ranges over shift-invariant
/// measures only; an invariance defect above `invariance_tol` is flagged but
/// the gap is still reported.
pub fn variational_gap<T: Real, P: CylinderProcess<T> + ?Sized>(
    mu: &P,
    f: &Potential<T>,
    spec: &SpectralData<T>,
    n: usize,
    invariance_tol: T,
) -> Result<EntropyReport<T>> {
    let mut report = specific_entropy(mu, n)?;
    let mk = mu.marginal(f.depth())?;
    let integral: T = mk
        .weights()
        .iter()
        .zip(f.table())
        .map(|(&w, &v)| w * v)
        .sum();
    report.gaps = report
        .increments
        .iter()
        .map(|&inc| spec.log_lambda - (-inc + integral))
        .collect();
    let defect = shift_defect(mu, n.max(f.depth()))?;
    if defect > invariance_tol {
        report.flags.push(format!(
            "non-invariant measure (defect {:e}); the variational bound does not apply",
            defect.as_f64()
        ));
    }
    if f.var_bound() > T::zero() {
        report
            .flags
            .push("truncated potential; gap carries the truncation error".into());
    }
    report.integral = Some(integral);
    report.truncation_error = f.var_bound() + spec.truncation_error;
    report.log_lambda = Some(spec.log_lambda);
    report.invariance_defect = Some(defect);
    Ok(report)
}
