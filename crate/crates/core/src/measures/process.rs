//! Measures on Ω that can be restricted to any cylinder depth.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::scalar::Real;
use crate::space::SymbolSpace;
use crate::spectral::SpectralData;

use super::{equilibrium_measure, extend_eigenmeasure, CylinderMeasure};

/// A probability measure on Ω known through its cylinder marginals.
pub trait CylinderProcess<T: Real> {
    fn space(&self) -> &Arc<SymbolSpace<T>>;

    /// Restriction to the σ-algebra of depth-`n` cylinders.
    fn marginal(&self, n: usize) -> Result<CylinderMeasure<T>>;
}

impl<T: Real> CylinderProcess<T> for CylinderMeasure<T> {
    fn space(&self) -> &Arc<SymbolSpace<T>> {
        CylinderMeasure::space(self)
    }

    fn marginal(&self, n: usize) -> Result<CylinderMeasure<T>> {
        CylinderMeasure::marginal(self, n)
    }
}

/// `max_u |μ(σ⁻¹[u]) − μ[u]|` over depth-`n` cylinders.
pub fn shift_defect<T: Real, P: CylinderProcess<T> + ?Sized>(mu: &P, n: usize) -> Result<T> {
    let next = mu.marginal(n + 1)?;
    let here = mu.marginal(n)?;
    let top = here.weights().len();
    let mut pulled = vec![T::zero(); top];
    for (i, &w) in next.weights().iter().enumerate() {
        pulled[i % top] = pulled[i % top] + w;
    }
    Ok(pulled
        .iter()
        .zip(here.weights())
        .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
}

/// First-order Markov measure with initial law `π` and row-stochastic `P`.
#[derive(Clone, Debug)]
pub struct MarkovMeasure<T: Real> {
    space: Arc<SymbolSpace<T>>,
    initial: Vec<T>,
    transition: Vec<Vec<T>>,
}

impl<T: Real> MarkovMeasure<T> {
    pub fn new(
        space: Arc<SymbolSpace<T>>,
        initial: Vec<T>,
        transition: Vec<Vec<T>>,
    ) -> Result<Self> {
        let n = space.size();
        let tol = T::tol(1e-12);
        let stochastic = |row: &[T]| {
            row.len() == n
                && row.iter().all(|&v| v >= T::zero() && v.is_finite())
                && (row.iter().copied().sum::<T>() - T::one()).abs() <= tol
        };
        if !stochastic(&initial) {
            return Err(Error::InvalidMeasure(
                "initial law is not a probability vector".into(),
            ));
        }
        if transition.len() != n || !transition.iter().all(|r| stochastic(r)) {
            return Err(Error::InvalidMeasure(
                "transition matrix is not row-stochastic".into(),
            ));
        }
        Ok(MarkovMeasure {
            space,
            initial,
            transition,
        })
    }

    /// Stationary chain for `transition`; `π` from power iteration on `πP`.
    pub fn stationary(space: Arc<SymbolSpace<T>>, transition: Vec<Vec<T>>) -> Result<Self> {
        let n = space.size();
        let mut pi = vec![T::one() / T::lit(n as f64); n];
        for _ in 0..100_000 {
            let mut next = vec![T::zero(); n];
            for (i, &p) in pi.iter().enumerate() {
                for (j, slot) in next.iter_mut().enumerate() {
                    *slot = *slot + p * transition[i][j];
                }
            }
            // Lazy step keeps periodic chains from oscillating.
            for (nx, &p) in next.iter_mut().zip(&pi) {
                *nx = (*nx + p) / T::lit(2.0);
            }
            let change = next
                .iter()
                .zip(&pi)
                .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
            pi = next;
            if change < T::epsilon() {
                break;
            }
        }
        let total: T = pi.iter().copied().sum();
        let pi = pi.into_iter().map(|p| p / total).collect();
        Self::new(space, pi, transition)
    }

    /// The product measure `p^⊗ℕ` as a Markov chain.
    pub fn product(space: Arc<SymbolSpace<T>>) -> Self {
        let w = space.weights().to_vec();
        let transition = vec![w.clone(); space.size()];
        MarkovMeasure {
            space,
            initial: w,
            transition,
        }
    }

    pub fn initial(&self) -> &[T] {
        &self.initial
    }

    pub fn transition(&self) -> &[Vec<T>] {
        &self.transition
    }
}

impl<T: Real> CylinderProcess<T> for MarkovMeasure<T> {
    fn space(&self) -> &Arc<SymbolSpace<T>> {
        &self.space
    }

    fn marginal(&self, n: usize) -> Result<CylinderMeasure<T>> {
        let len = self.space.cylinder_count(n)?;
        if n == 0 {
            return CylinderMeasure::new(self.space.clone(), 0, vec![T::one()]);
        }
        let mut weights = self.initial.clone();
        for _ in 1..n {
            weights = weights
                .iter()
                .flat_map(|&w| {
                    // extend at the end: the last symbol is the low digit
                    (0..self.space.size()).map(move |b| (w, b))
                })
                .enumerate()
                .map(|(i, (w, b))| {
                    w * self.transition[(i / self.space.size()) % self.space.size()][b]
                })
                .collect();
        }
        debug_assert_eq!(weights.len(), len);
        CylinderMeasure::normalized(self.space.clone(), n, weights)
    }
}

/// The measure `μ = h·ν` built from converged maximal eigendata; deeper
/// marginals come from extending `ν` with the eigenmeasure relation.
#[derive(Clone, Debug)]
pub struct EquilibriumState<T: Real> {
    potential: Potential<T>,
    lambda: T,
    density: Vec<T>,
    nu: CylinderMeasure<T>,
    mu: CylinderMeasure<T>,
}

impl<T: Real> EquilibriumState<T> {
    pub fn new(f: &Potential<T>, spec: &SpectralData<T>, max_residual: T) -> Result<Self> {
        let mu = equilibrium_measure(spec, max_residual)?;
        let nu = spec.eigenmeasure.clone();
        let density = spec.eigenfunction.lift(nu.depth())?.into_values();
        Ok(EquilibriumState {
            potential: f.clone(),
            lambda: spec.lambda,
            density,
            nu,
            mu,
        })
    }

    /// `μ` at the kernel depth.
    pub fn measure(&self) -> &CylinderMeasure<T> {
        &self.mu
    }

    pub fn eigenmeasure(&self) -> &CylinderMeasure<T> {
        &self.nu
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// `ν` on depth-`n` cylinders, `n ≥ depth`.
    pub fn eigenmeasure_at(&self, n: usize) -> Result<CylinderMeasure<T>> {
        let mut nu = self.nu.clone();
        while nu.depth() < n {
            nu = extend_eigenmeasure(&self.potential, self.lambda, &nu)?.measure;
        }
        Ok(nu)
    }
}

impl<T: Real> CylinderProcess<T> for EquilibriumState<T> {
    fn space(&self) -> &Arc<SymbolSpace<T>> {
        self.mu.space()
    }

    fn marginal(&self, n: usize) -> Result<CylinderMeasure<T>> {
        let d = self.mu.depth();
        if n <= d {
            return self.mu.marginal(n);
        }
        let nu = self.eigenmeasure_at(n)?;
        let stride = self.space().cylinder_count(n - d)?;
        let weights = nu
            .weights()
            .iter()
            .enumerate()
            .map(|(i, &w)| self.density[i / stride] * w)
            .collect();
        CylinderMeasure::normalized(self.space().clone(), n, weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Arc<SymbolSpace<f64>> {
        Arc::new(SymbolSpace::uniform(2).unwrap())
    }

    #[test]
    fn markov_marginals_multiply_transitions() {
        let p = vec![vec![0.9, 0.1], vec![0.4, 0.6]];
        let m = MarkovMeasure::new(two(), vec![0.25, 0.75], p).unwrap();
        let m3 = m.marginal(3).unwrap();
        // (1,0,1): 0.75 · 0.4 · 0.1
        assert!((m3.weights()[5] - 0.75 * 0.4 * 0.1).abs() < 1e-15);
        // (0,1,1): 0.25 · 0.1 · 0.6
        assert!((m3.weights()[3] - 0.25 * 0.1 * 0.6).abs() < 1e-15);
    }

    #[test]
    fn stationary_chain_is_invariant() {
        let p = vec![vec![0.9, 0.1], vec![0.4, 0.6]];
        let m = MarkovMeasure::stationary(two(), p).unwrap();
        assert!((m.initial()[0] - 0.8).abs() < 1e-12);
        assert!(shift_defect(&m, 4).unwrap() < 1e-12);
        let skewed =
            MarkovMeasure::new(two(), vec![0.5, 0.5], vec![vec![0.9, 0.1], vec![0.4, 0.6]])
                .unwrap();
        assert!(shift_defect(&skewed, 2).unwrap() > 0.1);
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        assert!(
            MarkovMeasure::new(two(), vec![0.5, 0.5], vec![vec![0.5, 0.6], vec![0.5, 0.5]])
                .is_err()
        );
        assert!(
            MarkovMeasure::new(two(), vec![0.5, 0.4], vec![vec![0.5, 0.5], vec![0.5, 0.5]])
                .is_err()
        );
    }

    #[test]
    fn product_chain_matches_product_measure() {
        let s = Arc::new(SymbolSpace::<f64>::finite(vec![0.3, 0.7]).unwrap());
        let m = MarkovMeasure::product(s.clone()).marginal(3).unwrap();
        let p = CylinderMeasure::product(s, 3).unwrap();
        for (a, b) in m.weights().iter().zip(p.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
