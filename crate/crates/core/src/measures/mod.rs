//! Cylinder measures and the checks built on the eigenmeasure relation
//! `ℒ*ν = λν`: duality residuals, extension to deeper cylinders, the
//! equilibrium measure `μ = h·ν`, its shift invariance, and the intertwining
//! identity `ℒ*((1_A∘σ)·ν) = λ⁻¹ ℒ*ℒ*(1_A ν)`.

mod curve;
mod entropy;
mod process;

use std::sync::Arc;

pub use curve::{pressure_curve, CandidateReason, CurvePoint, CurveSettings, PressureCurve};
pub use entropy::{relative_entropy, specific_entropy, variational_gap, EntropyReport};
pub use process::{shift_defect, CylinderProcess, EquilibriumState, MarkovMeasure};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::scalar::Real;
use crate::space::{SymbolSpace, Word};
use crate::spectral::SpectralData;
use crate::transfer::{apply, CylinderFunction};

/// Mass deviation above which [`extend_eigenmeasure`] gives up.
pub const EXTENSION_ABORT: f64 = 1e-6;

/// Non-negative weights on the cylinders of one depth, summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderMeasure<T: Real> {
    space: Arc<SymbolSpace<T>>,
    depth: usize,
    weights: Vec<T>,
}

fn mass_tolerance<T: Real>(len: usize) -> T {
    // Summation error grows with the number of cylinders.
    T::tol(1e-13).max(T::epsilon() * T::lit(4.0 * len as f64))
}

impl<T: Real> CylinderMeasure<T> {
    pub fn new(space: Arc<SymbolSpace<T>>, depth: usize, weights: Vec<T>) -> Result<Self> {
        let len = space.cylinder_count(depth)?;
        if weights.len() != len {
            return Err(Error::InvalidMeasure(format!(
                "{} weights for {len} cylinders of depth {depth}",
                weights.len()
            )));
        }
        if let Some(w) = weights
            .iter()
            .find(|w| !(w.is_finite() && **w >= T::zero()))
        {
            return Err(Error::InvalidMeasure(format!(
                "weight {w} is negative or not finite"
            )));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > mass_tolerance::<T>(len) {
            return Err(Error::InvalidMeasure(format!(
                "total mass {total}, expected 1"
            )));
        }
        Ok(CylinderMeasure {
            space,
            depth,
            weights,
        })
    }

    /// Rescales non-negative weights to unit mass.
    pub fn normalized(
        space: Arc<SymbolSpace<T>>,
        depth: usize,
        mut weights: Vec<T>,
    ) -> Result<Self> {
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero() && total.is_finite()) {
            return Err(Error::InvalidMeasure(format!(
                "cannot normalize total mass {total}"
            )));
        }
        for w in &mut weights {
            *w = *w / total;
        }
        Self::new(space, depth, weights)
    }

    /// The product measure `p⊗ᵈ`.
    pub fn product(space: Arc<SymbolSpace<T>>, depth: usize) -> Result<Self> {
        let len = space.cylinder_count(depth)?;
        let weights = (0..len).map(|i| space.product_weight(depth, i)).collect();
        Self::normalized(space, depth, weights)
    }

    pub fn uniform(space: Arc<SymbolSpace<T>>, depth: usize) -> Result<Self> {
        let len = space.cylinder_count(depth)?;
        Self::new(space, depth, vec![T::one() / T::lit(len as f64); len])
    }

    pub fn space(&self) -> &Arc<SymbolSpace<T>> {
        &self.space
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn mass(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn weight_of(&self, u: &Word) -> Result<T> {
        if u.depth() != self.depth {
            return Err(Error::DepthMismatch(format!(
                "word of depth {} for a depth-{} measure",
                u.depth(),
                self.depth
            )));
        }
        Ok(self.weights[self.space.index_of(u)?])
    }

    /// Restriction to the cylinders of depth `m ≤ depth` (sums out the
    /// trailing coordinates).
    pub fn marginal(&self, m: usize) -> Result<Self> {
        if m > self.depth {
            return Err(Error::DepthMismatch(format!(
                "marginal at depth {m} of a depth-{} measure",
                self.depth
            )));
        }
        let block = self.space.cylinder_count(self.depth - m)?;
        let weights = self
            .weights
            .chunks(block)
            .map(|c| c.iter().copied().sum())
            .collect();
        Ok(CylinderMeasure {
            space: self.space.clone(),
            depth: m,
            weights,
        })
    }

    /// `∫ g dν` for a cylinder function of depth at most `depth`.
    pub fn integrate(&self, g: &CylinderFunction<T>) -> Result<T> {
        if g.depth() > self.depth {
            return Err(Error::DepthMismatch(format!(
                "integrand of depth {} against a depth-{} measure",
                g.depth(),
                self.depth
            )));
        }
        let m = self.marginal(g.depth())?;
        Ok(m.weights.iter().zip(g.values()).map(|(&w, &v)| w * v).sum())
    }
}

/// `max_u |∫ ℒ_f 1_[u] dν − λ ν[u]|` over the depth-`test_depth` cylinders.
///
/// Each integral is summed exactly from the kernel entries and the weights of
/// `ν`, so the residual vanishes iff `ν` satisfies the eigenmeasure relation
/// on the σ-algebra generated by those cylinders.
pub fn check_eigenmeasure<T: Real>(
    f: &Potential<T>,
    lambda: T,
    nu: &CylinderMeasure<T>,
    test_depth: usize,
) -> Result<T> {
    let dn = nu.depth();
    if test_depth > dn || f.depth() > dn + 1 {
        return Err(Error::DepthMismatch(format!(
            "test depth {test_depth} with a depth-{} potential needs ν of depth ≥ max({test_depth}, {})",
            f.depth(),
            f.depth() - 1
        )));
    }
    let space = nu.space();
    let n = space.size();
    let len = space.cylinder_count(test_depth)?;
    space.cylinder_count(dn + 1)?;
    let top = n.pow(dn as u32);
    let t_div = n.pow((dn + 1 - test_depth) as u32);
    let f_div = n.pow((dn + 1 - f.depth()) as u32);
    let mut acc = vec![T::zero(); len];
    for (x, &wx) in nu.weights().iter().enumerate() {
        if wx == T::zero() {
            continue;
        }
        for a in 0..n {
            let ax = a * top + x;
            acc[ax / t_div] = acc[ax / t_div] + wx * space.weight(a) * f.at(ax / f_div).exp();
        }
    }
    let marg = nu.marginal(test_depth)?;
    Ok(acc
        .iter()
        .zip(marg.weights())
        .fold(T::zero(), |m, (&l, &r)| m.max((l - lambda * r).abs())))
}

/// Depth-`(d+1)` extension of an eigenmeasure.
#[derive(Clone, Debug)]
pub struct Extension<T: Real> {
    pub measure: CylinderMeasure<T>,
    /// `|Σ weights − 1|` before renormalization.
    pub mass_deviation: T,
}

/// `ν[a·u] = λ⁻¹ p(a) e^{f(a·u)} ν[u]`, the eigenmeasure relation tested on
/// depth-`(d+1)` indicators.
pub fn extend_eigenmeasure<T: Real>(
    f: &Potential<T>,
    lambda: T,
    nu: &CylinderMeasure<T>,
) -> Result<Extension<T>> {
    let d = nu.depth();
    if f.depth() > d + 1 {
        return Err(Error::DepthMismatch(format!(
            "depth-{} potential cannot extend a depth-{d} measure",
            f.depth()
        )));
    }
    let space = nu.space().clone();
    let n = space.size();
    let len = space.cylinder_count(d + 1)?;
    let top = n.pow(d as u32);
    let f_div = n.pow((d + 1 - f.depth()) as u32);
    let weights: Vec<T> = (0..len)
        .map(|i| {
            let (a, u) = (i / top, i % top);
            space.weight(a) * f.at(i / f_div).exp() * nu.weights()[u] / lambda
        })
        .collect();
    let total: T = weights.iter().copied().sum();
    let deviation = (total - T::one()).abs();
    if deviation.is_nan() || deviation > T::tol(EXTENSION_ABORT) {
        return Err(Error::NotEigenmeasure {
            deviation: deviation.as_f64(),
        });
    }
    Ok(Extension {
        measure: CylinderMeasure::normalized(space, d + 1, weights)?,
        mass_deviation: deviation,
    })
}

/// `μ[u] = h(u)·ν[u]` on the kernel-depth cylinders.
///
/// Refuses spectral data that did not converge or whose residuals exceed
/// `max_residual`.
pub fn equilibrium_measure<T: Real>(
    spec: &SpectralData<T>,
    max_residual: T,
) -> Result<CylinderMeasure<T>> {
    if !spec.converged || spec.residual_left.max(spec.residual_right) > max_residual {
        return Err(Error::NotConverged {
            residual_right: spec.residual_right.as_f64(),
            residual_left: spec.residual_left.as_f64(),
        });
    }
    let nu = &spec.eigenmeasure;
    let h = spec.eigenfunction.lift(nu.depth())?;
    let weights: Vec<T> = h
        .values()
        .iter()
        .zip(nu.weights())
        .map(|(&a, &b)| a * b)
        .collect();
    let total: T = weights.iter().copied().sum();
    if (total - T::one()).abs() > T::tol(1e-12) {
        return Err(Error::InvalidMeasure(format!(
            "∫h dν = {total}, expected 1"
        )));
    }
    CylinderMeasure::normalized(nu.space().clone(), nu.depth(), weights)
}

/// `max_u |μ(σ⁻¹[u]) − μ[u]|` over depth-`d` cylinders.
///
/// `μ(σ⁻¹[u]) = Σ_a μ[a·u]` is evaluated on the depth-`(d+1)` extension of
/// `ν` reweighted by the density `dμ/dν` read off the two depth-`d` measures.
pub fn check_invariance<T: Real>(
    mu: &CylinderMeasure<T>,
    f: &Potential<T>,
    lambda: T,
    nu: &CylinderMeasure<T>,
) -> Result<T> {
    let d = mu.depth();
    if nu.depth() != d {
        return Err(Error::DepthMismatch(format!(
            "μ has depth {d}, ν has depth {}",
            nu.depth()
        )));
    }
    let density: Vec<T> = mu
        .weights()
        .iter()
        .zip(nu.weights())
        .map(|(&m, &v)| {
            if v > T::zero() {
                Ok(m / v)
            } else if m == T::zero() {
                Ok(T::zero())
            } else {
                Err(Error::InvalidMeasure(
                    "μ is not absolutely continuous w.r.t. ν".into(),
                ))
            }
        })
        .collect::<Result<_>>()?;
    let ext = extend_eigenmeasure(f, lambda, nu)?.measure;
    let n = mu.space().size();
    let top = n.pow(d as u32);
    let mut pulled = vec![T::zero(); top];
    for (i, &w) in ext.weights().iter().enumerate() {
        // i = a·u; the density is read on the first d symbols, u on the last d.
        pulled[i % top] = pulled[i % top] + density[i / n] * w;
    }
    Ok(pulled
        .iter()
        .zip(mu.weights())
        .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
}

/// `1_A∘σ` as a cylinder function of depth `|A| + 1`.
fn shifted_indicator<T: Real>(
    space: &Arc<SymbolSpace<T>>,
    a: &Word,
) -> Result<CylinderFunction<T>> {
    let base = CylinderFunction::indicator(space.clone(), a)?;
    let n = space.size();
    let stride = n.pow(a.depth() as u32);
    let len = space.cylinder_count(a.depth() + 1)?;
    let values = (0..len).map(|i| base.values()[i % stride]).collect();
    CylinderFunction::new(space.clone(), a.depth() + 1, values)
}

/// `max_φ |⟨φ, ℒ*((1_A∘σ)·ν)⟩ − λ⁻¹ ⟨φ, ℒ*ℒ*(1_A ν)⟩|` over the indicators
/// `φ` of the cylinders of depth `ν.depth − 1`.
///
/// Both pairings unwind by duality to `∫ (1_A∘σ)·ℒφ dν` and
/// `λ⁻¹ ∫ 1_A·ℒℒφ dν`.
pub fn check_intertwine<T: Real>(
    f: &Potential<T>,
    lambda: T,
    nu: &CylinderMeasure<T>,
    a: &Word,
) -> Result<T> {
    let dn = nu.depth();
    if dn < a.depth() + 1 || f.depth() > dn + 1 {
        return Err(Error::DepthMismatch(format!(
            "ν of depth {dn} cannot test a depth-{} set with a depth-{} potential",
            a.depth(),
            f.depth()
        )));
    }
    let space = nu.space();
    let ind_a = CylinderFunction::indicator(space.clone(), a)?;
    let ind_a_shift = shifted_indicator(space, a)?;
    let mut worst = T::zero();
    for tau in space.enumerate_cylinders(dn - 1)? {
        let phi = CylinderFunction::indicator(space.clone(), &tau)?;
        let l_phi = apply(f, &phi)?;
        let ll_phi = apply(f, &l_phi)?;
        let lhs = nu.integrate(&ind_a_shift.mul(&l_phi)?)?;
        let rhs = nu.integrate(&ind_a.mul(&ll_phi)?)? / lambda;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}
