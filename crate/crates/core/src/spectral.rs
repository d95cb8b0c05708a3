//! Maximal eigendata of the transfer operator.
//!
//! * [`pressure_bracket`]: `(1/n) log max ℒⁿ(1)` and `(1/n) log min ℒⁿ(1)`,
//!   which squeeze the pressure `P(f) = log λ_f` from both sides.
//! * [`gelfand_radius`]: `‖ℒⁿ‖^{1/n} = ‖ℒⁿ(1)‖∞^{1/n}`, the norm being attained
//!   at the constant one because the operator is positive.
//! * [`perron_eigendata`]: simultaneous power iteration. The left vector runs
//!   the normalized transpose map `γ ↦ ℒ*γ / (ℒ*γ)(Ω)` and its mass is the
//!   eigenvalue estimate; the right vector runs `ℒ` from the constant one.
//! * [`xi_sequence`]: `ξₙ = λ⁻ⁿ ℒⁿ(1)` with its Cauchy increments.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::CylinderMeasure;
use crate::potential::Potential;
use crate::scalar::Real;
use crate::transfer::{build_kernel, CylinderFunction, TransferKernel};

/// Sequences `(1/n) log sup ℒⁿ(1)` and `(1/n) log inf ℒⁿ(1)`, `n = 1..=n_max`.
#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Real")]
pub struct PressureEstimate<T: Real> {
    pub n_max: usize,
    pub p_sup: Vec<T>,
    pub p_inf: Vec<T>,
    /// Midpoint of the bracket at `n_max`.
    pub estimate: T,
    pub width: T,
    /// Additive error inherited from the potential's variation bound.
    pub truncation_error: T,
}

fn iteration_kernel<T: Real>(f: &Potential<T>, d: usize) -> Result<TransferKernel<T>> {
    let required = f.depth() - 1;
    if d < required {
        return Err(Error::DepthTooSmall { depth: d, required });
    }
    build_kernel(f, d.max(1))
}

pub fn pressure_bracket<T: Real>(
    f: &Potential<T>,
    d: usize,
    n_max: usize,
) -> Result<PressureEstimate<T>> {
    if n_max == 0 {
        return Err(Error::InvalidPotential("n_max must be positive".into()));
    }
    let kernel = iteration_kernel(f, d)?;
    let mut logx = vec![T::zero(); kernel.rows()];
    let mut p_sup = Vec::with_capacity(n_max);
    let mut p_inf = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        logx = kernel.log_mul(&logx);
        let nf = T::lit(n as f64);
        let hi = logx.iter().copied().fold(T::neg_infinity(), T::max);
        let lo = logx.iter().copied().fold(T::infinity(), T::min);
        p_sup.push(hi / nf);
        p_inf.push(lo / nf);
    }
    let (hi, lo) = (p_sup[n_max - 1], p_inf[n_max - 1]);
    Ok(PressureEstimate {
        n_max,
        estimate: (hi + lo) / T::lit(2.0),
        width: hi - lo,
        truncation_error: f.var_bound(),
        p_sup,
        p_inf,
    })
}

/// `‖ℒⁿ(1)‖∞^{1/n}` for `n = 1..=n_max`.
pub fn gelfand_radius<T: Real>(f: &Potential<T>, d: usize, n_max: usize) -> Result<Vec<T>> {
    Ok(pressure_bracket(f, d, n_max)?
        .p_sup
        .into_iter()
        .map(T::exp)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralSettings {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SpectralSettings {
    fn default() -> Self {
        SpectralSettings {
            tol: 1e-12,
            max_iters: 100_000,
        }
    }
}

/// Maximal eigendata `(λ, h, ν)` with its certificates.
#[derive(Clone, Debug)]
pub struct SpectralData<T: Real> {
    pub lambda: T,
    pub log_lambda: T,
    /// Right eigenvector, normalized so that `∫h dν = 1`.
    pub eigenfunction: CylinderFunction<T>,
    pub eigenmeasure: CylinderMeasure<T>,
    /// `‖ℒh − λh‖∞ / λ`.
    pub residual_right: T,
    /// `max_u |(ℒ*ν)[u] − λ ν[u]|` over the kernel-depth cylinders.
    pub residual_left: T,
    /// Relative change of `λ` over the last step.
    pub delta_lambda: T,
    pub iterations: usize,
    pub converged: bool,
    /// Whether the two-step averaging for oscillating iterates was engaged.
    pub averaged: bool,
    /// Last two left iterates when the iteration did not converge.
    pub accumulation: Option<[Vec<T>; 2]>,
    pub truncation_error: T,
}

impl<T: Real> SpectralData<T> {
    pub fn depth(&self) -> usize {
        self.eigenmeasure.depth()
    }

    /// Largest of the three stopping residuals.
    pub fn max_residual(&self) -> T {
        self.residual_right
            .max(self.residual_left)
            .max(self.delta_lambda)
    }
}

/// Detects a left iteration whose eigenvalue estimate flips sign every step
/// without shrinking.
struct OscillationDetector<T> {
    history: Vec<T>,
}

impl<T: Real> OscillationDetector<T> {
    const WINDOW: usize = 24;

    fn push(&mut self, lambda: T) -> bool {
        self.history.push(lambda);
        if self.history.len() > Self::WINDOW + 2 {
            self.history.remove(0);
        }
        if self.history.len() < Self::WINDOW + 2 {
            return false;
        }
        let d: Vec<T> = self.history.windows(2).map(|w| w[1] - w[0]).collect();
        let alternating = d.windows(2).all(|w| w[0] * w[1] < T::zero());
        let persistent = d.windows(3).all(|w| w[2].abs() > T::lit(0.9) * w[0].abs());
        alternating && persistent
    }
}

pub fn perron_eigendata<T: Real>(
    f: &Potential<T>,
    d: usize,
    settings: SpectralSettings,
) -> Result<SpectralData<T>> {
    let kernel = build_kernel(f, d)?;
    let space = f.space().clone();
    let rows = kernel.rows();
    let tol = T::tol(settings.tol);
    let mut nu = vec![T::one() / T::lit(rows as f64); rows];
    let mut h = vec![T::one(); rows];
    let mut prev_lambda: Option<T> = None;
    let mut prev_nu: Option<Vec<T>> = None;
    let mut averaged = false;
    let mut detector = OscillationDetector {
        history: Vec::new(),
    };
    let mut iterations = 0;
    let (mut lambda, mut r_left, mut r_right, mut dl);
    loop {
        iterations += 1;
        let z = kernel.mul_transpose(&nu);
        lambda = z.iter().copied().sum::<T>();
        r_left = z
            .iter()
            .zip(&nu)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - lambda * b).abs()));
        let y = kernel.mul(&h);
        r_right = y
            .iter()
            .zip(&h)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - lambda * b).abs()))
            / lambda;
        dl = prev_lambda.map_or(T::infinity(), |p| ((lambda - p) / lambda).abs());
        if r_left.max(r_right).max(dl) < tol || iterations >= settings.max_iters {
            break;
        }
        if !averaged && detector.push(lambda) {
            averaged = true;
        }
        prev_lambda = Some(lambda);
        let mut next_nu: Vec<T> = z.iter().map(|&v| v / lambda).collect();
        let mut next_h: Vec<T> = y.iter().map(|&v| v / lambda).collect();
        if averaged {
            let half = T::lit(0.5);
            for (n, &o) in next_nu.iter_mut().zip(&nu) {
                *n = half * (*n + o);
            }
            for (n, &o) in next_h.iter_mut().zip(&h) {
                *n = half * (*n + o);
            }
        }
        let mass: T = next_nu.iter().copied().sum();
        for v in &mut next_nu {
            *v = *v / mass;
        }
        let norm: T = next_h.iter().zip(&next_nu).map(|(&a, &b)| a * b).sum();
        for v in &mut next_h {
            *v = *v / norm;
        }
        prev_nu = Some(std::mem::replace(&mut nu, next_nu));
        h = next_h;
    }
    let converged = r_left.max(r_right).max(dl) < tol;
    let accumulation = match (converged, prev_nu) {
        (false, Some(p)) => Some([p, nu.clone()]),
        _ => None,
    };
    Ok(SpectralData {
        lambda,
        log_lambda: lambda.ln(),
        eigenfunction: CylinderFunction::new(space.clone(), d, h)?,
        eigenmeasure: CylinderMeasure::new(space, d, nu)?,
        residual_right: r_right,
        residual_left: r_left,
        delta_lambda: if dl.is_finite() { dl } else { T::zero() },
        iterations,
        converged,
        averaged,
        accumulation,
        truncation_error: f.var_bound(),
    })
}

/// `ξₙ = λ⁻ⁿ ℒⁿ(1)` for `n = 1..=n_max` together with the increments
/// `‖ξₙ₊₁ − ξₙ‖∞`.
#[derive(Clone, Debug)]
pub struct XiSequence<T: Real> {
    pub terms: Vec<CylinderFunction<T>>,
    pub increments: Vec<T>,
}

pub fn xi_sequence<T: Real>(
    f: &Potential<T>,
    d: usize,
    n_max: usize,
    lambda: T,
) -> Result<XiSequence<T>> {
    if !(lambda > T::zero() && lambda.is_finite()) {
        return Err(Error::InvalidPotential(format!(
            "λ = {lambda} must be positive"
        )));
    }
    let kernel = iteration_kernel(f, d)?;
    let kd = kernel.depth();
    let space = f.space().clone();
    let mut x = vec![T::one(); kernel.rows()];
    let mut terms = Vec::with_capacity(n_max);
    let mut increments = Vec::with_capacity(n_max.saturating_sub(1));
    for _ in 0..n_max {
        let next: Vec<T> = kernel.mul(&x).into_iter().map(|v| v / lambda).collect();
        if !terms.is_empty() {
            let inc = next
                .iter()
                .zip(&x)
                .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
            increments.push(inc);
        }
        terms.push(CylinderFunction::new(space.clone(), kd, next.clone())?);
        x = next;
    }
    Ok(XiSequence { terms, increments })
}

/// `n·log λ − ∫ log ℒⁿ(1) dν` for `n = 1..=n_max`; non-negative by Jensen's
/// inequality whenever `ν` is an eigenmeasure for `λ`.
pub fn jensen_gaps<T: Real>(
    f: &Potential<T>,
    spec: &SpectralData<T>,
    n_max: usize,
) -> Result<Vec<T>> {
    let kernel = build_kernel(f, spec.depth())?;
    let nu = spec.eigenmeasure.weights();
    let mut logx = vec![T::zero(); kernel.rows()];
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        logx = kernel.log_mul(&logx);
        let mean: T = logx.iter().zip(nu).map(|(&l, &w)| l * w).sum();
        out.push(T::lit(n as f64) * spec.log_lambda - mean);
    }
    Ok(out)
}
