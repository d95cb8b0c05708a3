//! Potentials as depth-`k` locally constant tables with a variation bound.
//!
//! A general continuous potential enters the crate only through a truncation:
//! its value on each depth-`k` cylinder plus `var_bound`, a bound on
//! `sup |f(x) - f(y)|` over points sharing their first `k` coordinates. Every
//! downstream log-quantity inherits `var_bound` as an additive error bar.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::space::{SpaceDoc, SymbolSpace, Word};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialDoc<T>", into = "PotentialDoc<T>")]
#[serde(bound = "T: Real")]
pub struct Potential<T: Real> {
    space: Arc<SymbolSpace<T>>,
    depth: usize,
    table: Vec<T>,
    var_bound: T,
}

/// On-disk form of a [`Potential`]; the space is stored inline.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PotentialDoc<T: Real> {
    pub space: SpaceDoc<T>,
    pub depth: usize,
    pub table: Vec<T>,
    #[serde(default)]
    pub var_bound: T,
}

impl<T: Real> TryFrom<PotentialDoc<T>> for Potential<T> {
    type Error = Error;

    fn try_from(doc: PotentialDoc<T>) -> Result<Self> {
        let space = SymbolSpace::try_from(doc.space)?;
        Potential::new(Arc::new(space), doc.depth, doc.table, doc.var_bound)
    }
}

impl<T: Real> From<Potential<T>> for PotentialDoc<T> {
    fn from(p: Potential<T>) -> Self {
        PotentialDoc {
            space: (*p.space).clone().into(),
            depth: p.depth,
            table: p.table,
            var_bound: p.var_bound,
        }
    }
}

impl<T: Real> Potential<T> {
    pub fn new(
        space: Arc<SymbolSpace<T>>,
        depth: usize,
        table: Vec<T>,
        var_bound: T,
    ) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidPotential("depth must be positive".into()));
        }
        let len = space.cylinder_count(depth)?;
        if table.len() != len {
            return Err(Error::InvalidPotential(format!(
                "table has {} entries, depth {depth} needs {len}",
                table.len()
            )));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential("non-finite table entry".into()));
        }
        if !(var_bound.is_finite() && var_bound >= T::zero()) {
            return Err(Error::InvalidPotential(format!(
                "variation bound {var_bound} must be finite and non-negative"
            )));
        }
        Ok(Potential {
            space,
            depth,
            table,
            var_bound,
        })
    }

    /// Locally constant potential given by a closure over depth-`k` words.
    pub fn from_fn(
        space: Arc<SymbolSpace<T>>,
        depth: usize,
        mut f: impl FnMut(&[usize]) -> T,
    ) -> Result<Self> {
        let table = space
            .enumerate_cylinders(depth)?
            .map(|w| f(w.symbols()))
            .collect();
        Self::new(space, depth, table, T::zero())
    }

    /// `f ≡ c`, stored at depth one.
    pub fn constant(space: Arc<SymbolSpace<T>>, c: T) -> Result<Self> {
        let n = space.size();
        Self::new(space, 1, vec![c; n], T::zero())
    }

    pub fn space(&self) -> &Arc<SymbolSpace<T>> {
        &self.space
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    pub fn var_bound(&self) -> T {
        self.var_bound
    }

    /// `max |table| + var_bound`, an upper bound for `‖f‖∞`.
    pub fn sup_norm(&self) -> T {
        self.table.iter().fold(T::zero(), |m, v| m.max(v.abs())) + self.var_bound
    }

    /// Value of `f` on the cylinder of `u`.
    pub fn evaluate(&self, u: &Word) -> Result<T> {
        if u.depth() < self.depth {
            return Err(Error::WordTooShort {
                depth: u.depth(),
                required: self.depth,
            });
        }
        let idx = self.space.index_of(&u.prefix(self.depth))?;
        Ok(self.table[idx])
    }

    /// Table lookup by canonical index of the first `depth` symbols.
    #[inline]
    pub fn at(&self, index: usize) -> T {
        self.table[index]
    }

    pub fn scale(&self, beta: T) -> Self {
        Potential {
            space: self.space.clone(),
            depth: self.depth,
            table: self.table.iter().map(|&v| v * beta).collect(),
            var_bound: self.var_bound * beta.abs(),
        }
    }

    pub fn add_constant(&self, c: T) -> Self {
        Potential {
            space: self.space.clone(),
            depth: self.depth,
            table: self.table.iter().map(|&v| v + c).collect(),
            var_bound: self.var_bound,
        }
    }

    /// Same function tabulated at a larger depth.
    pub fn lift(&self, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::DepthMismatch(format!(
                "cannot lift a depth-{} potential to depth {depth}",
                self.depth
            )));
        }
        let stride = self.space.cylinder_count(depth - self.depth)?;
        let len = self.space.cylinder_count(depth)?;
        let table = (0..len).map(|i| self.table[i / stride]).collect();
        Potential::new(self.space.clone(), depth, table, self.var_bound)
    }
}

/// A potential known through a depth-`m` table plus variation bounds
/// `var[k]` for the truncation depths where one is available.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralPotential<T: Real> {
    space: Arc<SymbolSpace<T>>,
    depth: usize,
    table: Vec<T>,
    var: Vec<Option<T>>,
}

impl<T: Real> GeneralPotential<T> {
    /// `var` is indexed by truncation depth and must have length `depth + 1`.
    pub fn new(
        space: Arc<SymbolSpace<T>>,
        depth: usize,
        table: Vec<T>,
        var: Vec<Option<T>>,
    ) -> Result<Self> {
        if var.len() != depth + 1 {
            return Err(Error::InvalidPotential(format!(
                "variation sequence of length {} for depth {depth}",
                var.len()
            )));
        }
        // Validates the table shape.
        Potential::new(space.clone(), depth, table.clone(), T::zero())?;
        Ok(GeneralPotential {
            space,
            depth,
            table,
            var,
        })
    }

    /// An exactly locally constant potential; variations below its depth are
    /// the table oscillations.
    pub fn from_potential(p: &Potential<T>) -> Self {
        let mut var = vec![None; p.depth + 1];
        var[p.depth] = Some(p.var_bound);
        GeneralPotential {
            space: p.space.clone(),
            depth: p.depth,
            table: p.table.clone(),
            var,
        }
        .with_table_variations()
    }

    /// Fills missing `var[k]`, `k < depth`, with the oscillation of the table
    /// over each depth-`k` cylinder plus `var[depth]`.
    pub fn with_table_variations(mut self) -> Self {
        let Some(tail) = self.var[self.depth] else {
            return self;
        };
        let n = self.space.size();
        for k in 1..self.depth {
            if self.var[k].is_some() {
                continue;
            }
            let block = n.pow((self.depth - k) as u32);
            let osc = self
                .table
                .chunks(block)
                .map(|c| {
                    let hi = c.iter().copied().fold(T::neg_infinity(), T::max);
                    let lo = c.iter().copied().fold(T::infinity(), T::min);
                    hi - lo
                })
                .fold(T::zero(), T::max);
            self.var[k] = Some(osc + tail);
        }
        self
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn variation(&self, k: usize) -> Option<T> {
        self.var.get(k).copied().flatten()
    }

    pub fn space(&self) -> &Arc<SymbolSpace<T>> {
        &self.space
    }

    /// Depth-`k` truncation using the anchor extension: a depth-`k` word is
    /// extended to depth `m` by repeating its last symbol.
    pub fn truncate(&self, k: usize) -> Result<Potential<T>> {
        if k == 0 || k > self.depth {
            return Err(Error::DepthMismatch(format!(
                "truncation depth {k} outside 1..={}",
                self.depth
            )));
        }
        let var_bound = self
            .variation(k)
            .ok_or(Error::MissingVariationBound { depth: k })?;
        let n = self.space.size();
        let extra = self.depth - k;
        let table = (0..self.space.cylinder_count(k)?)
            .map(|i| {
                let last = i % n;
                let mut idx = i;
                for _ in 0..extra {
                    idx = idx * n + last;
                }
                self.table[idx]
            })
            .collect();
        Potential::new(self.space.clone(), k, table, var_bound)
    }
}

/// Spin of a two-symbol alphabet: symbol 0 is −1, symbol 1 is +1.
#[inline]
pub fn spin<T: Real>(symbol: usize) -> T {
    if symbol == 0 {
        -T::one()
    } else {
        T::one()
    }
}

/// Nearest-neighbour Ising potential `J·s(u1)s(u2) + h·s(u1)`.
pub fn ising<T: Real>(space: Arc<SymbolSpace<T>>, j: T, h: T) -> Result<Potential<T>> {
    if space.size() != 2 {
        return Err(Error::InvalidPotential(format!(
            "ising needs two symbols, got {}",
            space.size()
        )));
    }
    Potential::from_fn(space, 2, |u| {
        let (a, b) = (spin::<T>(u[0]), spin::<T>(u[1]));
        j * a * b + h * a
    })
}

/// Planar rotor potential `J·cos(2π(t(u1) − t(u2)))` over quadrature nodes.
pub fn xy<T: Real>(space: Arc<SymbolSpace<T>>, j: T) -> Result<Potential<T>> {
    let nodes = space
        .nodes()
        .ok_or_else(|| Error::InvalidPotential("xy needs a quadrature space with nodes".into()))?
        .to_vec();
    let two_pi = T::lit(2.0 * PI);
    Potential::from_fn(space, 2, |u| {
        j * (two_pi * (nodes[u[0]] - nodes[u[1]])).cos()
    })
}

/// Behaviour of a renewal payoff sequence beyond its last supplied entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum TailRule {
    /// `s_j = s_K` for every `j > K`.
    Constant,
    /// `s_j = limit + amplitude·j^(-exponent)` for `j > K`, and `limit` on `0^∞`.
    PowerLaw {
        limit: f64,
        amplitude: f64,
        exponent: f64,
    },
    /// `s_j = -alpha·ln((j+1)/j)` for `j > K`, and 0 on `0^∞`.
    LogRatio { alpha: f64 },
}

impl TailRule {
    fn value(&self, j: usize) -> Option<f64> {
        let jf = j as f64;
        match *self {
            TailRule::Constant => None,
            TailRule::PowerLaw {
                limit,
                amplitude,
                exponent,
            } => Some(limit + amplitude * jf.powf(-exponent)),
            TailRule::LogRatio { alpha } => Some(-alpha * ((jf + 1.0) / jf).ln()),
        }
    }

    fn limit(&self) -> Option<f64> {
        match *self {
            TailRule::Constant => None,
            TailRule::PowerLaw { limit, .. } => Some(limit),
            TailRule::LogRatio { .. } => Some(0.0),
        }
    }

    /// `s_1..s_K` consistent with this tail, for rules that define every term.
    pub fn payoff(&self, k: usize) -> Option<Vec<f64>> {
        (1..=k).map(|j| self.value(j)).collect()
    }
}

/// Renewal potential on two symbols: `s_{j+1}` on `[0^j 1]`, tabulated at depth
/// `K = payoff.len()` with `s_K` on `[0^K]`. Variation bounds for every
/// truncation depth come from the tail rule, assuming a monotone tail.
pub fn renewal<T: Real>(
    space: Arc<SymbolSpace<T>>,
    payoff: &[f64],
    tail: TailRule,
) -> Result<GeneralPotential<T>> {
    if space.size() != 2 {
        return Err(Error::InvalidPotential(format!(
            "renewal needs two symbols, got {}",
            space.size()
        )));
    }
    let k = payoff.len();
    if k == 0 {
        return Err(Error::InvalidPotential("empty payoff sequence".into()));
    }
    if payoff.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidPotential("non-finite payoff".into()));
    }
    let last = payoff[k - 1];
    // Range of the tail values {s_j : j > K} together with the value on 0^∞.
    let (tail_lo, tail_hi) = match (tail.value(k + 1), tail.limit()) {
        (Some(first), Some(limit)) => (first.min(limit), first.max(limit)),
        _ => (last, last),
    };
    let table: Vec<T> = (0..space.cylinder_count(k)?)
        .map(|i| {
            // Leading zeros of the word at index i: its highest set bit.
            let zeros = if i == 0 {
                k
            } else {
                k - 1 - (usize::BITS - 1 - i.leading_zeros()) as usize
            };
            T::lit(if zeros < k { payoff[zeros] } else { last })
        })
        .collect();
    let var = (0..=k)
        .map(|depth| {
            if depth == 0 {
                return None;
            }
            // Values f takes on [0^depth]; at depth K the tabulated s_K counts too.
            let from = if depth < k { depth } else { k - 1 };
            let (lo, hi) = payoff[from..]
                .iter()
                .fold((tail_lo, tail_hi), |(lo, hi), &s| (lo.min(s), hi.max(s)));
            Some(T::lit(hi - lo))
        })
        .collect();
    GeneralPotential::new(space, k, table, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Arc<SymbolSpace<f64>> {
        Arc::new(SymbolSpace::uniform(2).unwrap())
    }

    #[test]
    fn evaluate_constant() {
        let f = Potential::constant(two(), 0.3).unwrap();
        assert_eq!(f.evaluate(&Word::new(vec![1, 0, 1])).unwrap(), 0.3);
    }

    #[test]
    fn evaluate_ising_sign_product() {
        let f = ising(two(), 0.7, 0.0).unwrap();
        assert_eq!(f.evaluate(&Word::new(vec![1, 1, 0])).unwrap(), 0.7);
        let g = ising(two(), 1.0, 0.0).unwrap();
        assert_eq!(g.evaluate(&Word::new(vec![0, 1])).unwrap(), -1.0);
        assert!(matches!(
            g.evaluate(&Word::new(vec![1])),
            Err(Error::WordTooShort {
                depth: 1,
                required: 2
            })
        ));
    }

    #[test]
    fn ising_zero_is_zero_potential() {
        let f = ising(two(), 0.0, 0.0).unwrap();
        assert!(f.table().iter().all(|&v| v == 0.0));
        assert!(ising(Arc::new(SymbolSpace::<f64>::uniform(3).unwrap()), 1.0, 0.0).is_err());
    }

    #[test]
    fn xy_diagonal_is_coupling() {
        let s = Arc::new(crate::space::gauss_legendre_space::<f64>(4, 0.0, 1.0).unwrap());
        let f = xy(s.clone(), 1.0).unwrap();
        for a in 0..4 {
            assert!((f.evaluate(&Word::new(vec![a, a])).unwrap() - 1.0).abs() < 1e-15);
        }
        let two_sym = two();
        assert!(xy(two_sym, 1.0).is_err());
    }

    #[test]
    fn scale_examples() {
        let f = Potential::new(two(), 1, vec![0.5, -0.5], 0.1).unwrap();
        assert!(f.scale(0.0).table().iter().all(|&v| v == 0.0));
        assert_eq!(f.scale(1.0), f);
        let g = f.scale(2.0);
        assert_eq!(g.table(), &[1.0, -1.0]);
        assert_eq!(f.scale(-2.0).var_bound(), 0.2);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Potential::new(two(), 2, vec![0.0; 3], 0.0).is_err());
        assert!(Potential::new(two(), 1, vec![0.0, f64::NAN], 0.0).is_err());
        assert!(Potential::new(two(), 1, vec![0.0, 0.0], -1.0).is_err());
        assert!(Potential::new(two(), 0, vec![], 0.0).is_err());
    }

    #[test]
    fn truncate_same_depth_is_identity() {
        let f = ising(two(), 1.0, 0.2).unwrap();
        let g = GeneralPotential::from_potential(&f);
        let t = g.truncate(2).unwrap();
        assert_eq!(t, f);
        assert_eq!(t.var_bound(), 0.0);
        let again = GeneralPotential::from_potential(&t).truncate(2).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn truncate_uses_anchor_extension() {
        // depth-3 table indexed by word value, truncated to depth 2.
        let table: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let g =
            GeneralPotential::new(two(), 3, table, vec![None, None, Some(0.5), Some(0.0)]).unwrap();
        let t = g.truncate(2).unwrap();
        // (0,1) -> (0,1,1) = 3, (1,0) -> (1,0,0) = 4
        assert_eq!(t.table(), &[0.0, 3.0, 4.0, 7.0]);
        assert_eq!(t.var_bound(), 0.5);
        assert!(matches!(
            g.truncate(1),
            Err(Error::MissingVariationBound { depth: 1 })
        ));
    }

    #[test]
    fn table_variations_fill_gaps() {
        let table: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let g = GeneralPotential::new(two(), 3, table, vec![None, None, None, Some(0.25)])
            .unwrap()
            .with_table_variations();
        assert_eq!(g.variation(2), Some(1.25));
        assert_eq!(g.variation(1), Some(3.25));
    }

    #[test]
    fn renewal_table_and_bounds() {
        let payoff = [-1.0, -0.5, -0.25, -0.125];
        let g = renewal(two(), &payoff, TailRule::Constant).unwrap();
        let f4 = g.truncate(4).unwrap();
        // [1...] -> s1, [01..] -> s2, [0001] -> s4, [0000] -> s4
        assert_eq!(f4.evaluate(&Word::new(vec![1, 0, 0, 0])).unwrap(), -1.0);
        assert_eq!(f4.evaluate(&Word::new(vec![0, 1, 1, 0])).unwrap(), -0.5);
        assert_eq!(f4.evaluate(&Word::new(vec![0, 0, 0, 1])).unwrap(), -0.125);
        assert_eq!(f4.evaluate(&Word::new(vec![0, 0, 0, 0])).unwrap(), -0.125);
        assert_eq!(f4.var_bound(), 0.0);
        // On [0,0] the values are s3, s4 and the tail s4.
        let f2 = g.truncate(2).unwrap();
        assert_eq!(f2.var_bound(), 0.125);
        assert_eq!(f2.evaluate(&Word::new(vec![0, 0])).unwrap(), -0.125);
        assert_eq!(f2.evaluate(&Word::new(vec![0, 1])).unwrap(), -0.5);
        let other = Arc::new(SymbolSpace::<f64>::uniform(3).unwrap());
        assert!(renewal(other, &payoff, TailRule::Constant).is_err());
    }

    #[test]
    fn renewal_log_ratio_tail_bound() {
        let rule = TailRule::LogRatio { alpha: 2.0 };
        let payoff = rule.payoff(6).unwrap();
        let g = renewal(two(), &payoff, rule).unwrap();
        // Monotone increasing to 0: the oscillation on [0^k] is |s_{k+1}|, and
        // at k = K it also covers the tabulated s_K.
        for k in 1..6 {
            let expected = 2.0 * ((k as f64 + 2.0) / (k as f64 + 1.0)).ln();
            assert!((g.variation(k).unwrap() - expected).abs() < 1e-15, "k={k}");
        }
        let expected6 = 2.0 * (7.0f64 / 6.0).ln();
        assert!((g.variation(6).unwrap() - expected6).abs() < 1e-15);
    }
}
