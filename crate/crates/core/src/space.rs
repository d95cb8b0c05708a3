//! Alphabets, a-priori weights, finite words and the shift on them.
//!
//! Cylinder sets of depth `d` are addressed by their defining word. Every
//! vector and matrix in the crate uses the same layout: words of a fixed depth
//! in lexicographic order, most significant coordinate first, so the word
//! `(u1, .., ud)` sits at index `u1*N^(d-1) + .. + ud`.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default limit on the number of cylinders any single layout may hold.
pub const DEFAULT_CYLINDER_CAP: usize = 10_000_000;

static CYLINDER_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_CYLINDER_CAP);

/// Current repo-wide cap on `N^d`.
pub fn cylinder_cap() -> usize {
    CYLINDER_CAP.load(Ordering::Relaxed)
}

/// Changes the repo-wide cap on `N^d`. Returns the previous value.
pub fn set_cylinder_cap(cap: usize) -> usize {
    CYLINDER_CAP.swap(cap.max(1), Ordering::Relaxed)
}

/// A finite word over the alphabet; the empty word denotes the whole space.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    /// Drops the first symbol.
    pub fn shift(&self) -> Result<Word> {
        match self.0.split_first() {
            Some((_, rest)) => Ok(Word(rest.to_vec())),
            None => Err(Error::EmptyWord),
        }
    }

    /// The prefix of length `k` (the whole word if it is shorter).
    pub fn prefix(&self, k: usize) -> Word {
        Word(self.0[..k.min(self.0.len())].to_vec())
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str(")")
    }
}

/// Underlying domain of a quadrature-discretized alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Domain {
    Interval { a: f64, b: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SpaceKind {
    Finite,
    Quadrature {
        rule: String,
        domain: Domain,
        /// Total mass of the rule before renormalization.
        raw_mass: f64,
    },
}

/// The alphabet `E` with its full-support a-priori probability weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDoc<T>", into = "SpaceDoc<T>")]
#[serde(bound = "T: Real")]
pub struct SymbolSpace<T: Real> {
    kind: SpaceKind,
    weights: Vec<T>,
    nodes: Option<Vec<T>>,
}

/// On-disk form of a [`SymbolSpace`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpaceDoc<T: Real> {
    pub kind: SpaceKind,
    pub size: usize,
    pub weights: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<T>>,
}

impl<T: Real> TryFrom<SpaceDoc<T>> for SymbolSpace<T> {
    type Error = Error;

    fn try_from(doc: SpaceDoc<T>) -> Result<Self> {
        if doc.size != doc.weights.len() {
            return Err(Error::InvalidSpace(format!(
                "size {} disagrees with {} weights",
                doc.size,
                doc.weights.len()
            )));
        }
        SymbolSpace::from_parts(doc.kind, doc.weights, doc.nodes)
    }
}

impl<T: Real> From<SymbolSpace<T>> for SpaceDoc<T> {
    fn from(s: SymbolSpace<T>) -> Self {
        SpaceDoc {
            size: s.size(),
            kind: s.kind,
            weights: s.weights,
            nodes: s.nodes,
        }
    }
}

impl<T: Real> SymbolSpace<T> {
    /// Finite alphabet with the given a-priori weights.
    pub fn finite(weights: Vec<T>) -> Result<Self> {
        Self::from_parts(SpaceKind::Finite, weights, None)
    }

    /// Finite alphabet of `n` symbols with uniform weights.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpace("empty alphabet".into()));
        }
        let w = T::one() / T::from_usize(n).unwrap();
        Self::finite(vec![w; n])
    }

    fn from_parts(kind: SpaceKind, weights: Vec<T>, nodes: Option<Vec<T>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpace("empty alphabet".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > T::zero())) {
            return Err(Error::InvalidSpace(format!(
                "weight {w} is not strictly positive"
            )));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::tol(1e-14) {
            return Err(Error::InvalidSpace(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        match (&kind, &nodes) {
            (SpaceKind::Quadrature { .. }, Some(n)) => {
                if n.len() != weights.len() {
                    return Err(Error::InvalidSpace(
                        "node count differs from weight count".into(),
                    ));
                }
                let mut sorted = n.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
                if sorted.windows(2).any(|p| p[0] == p[1]) {
                    return Err(Error::InvalidSpace(
                        "quadrature nodes must be distinct".into(),
                    ));
                }
            }
            (SpaceKind::Quadrature { .. }, None) => {
                return Err(Error::InvalidSpace("quadrature space without nodes".into()));
            }
            (SpaceKind::Finite, _) => {}
        }
        Ok(SymbolSpace {
            kind,
            weights,
            nodes,
        })
    }

    pub fn size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, a: usize) -> T {
        self.weights[a]
    }

    pub fn nodes(&self) -> Option<&[T]> {
        self.nodes.as_deref()
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    fn check_symbol(&self, a: usize) -> Result<()> {
        if a < self.size() {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange {
                index: a,
                size: self.size(),
            })
        }
    }

    /// The word `a·u`.
    pub fn prepend(&self, a: usize, u: &Word) -> Result<Word> {
        self.check_symbol(a)?;
        let mut s = Vec::with_capacity(u.depth() + 1);
        s.push(a);
        s.extend_from_slice(u.symbols());
        Ok(Word(s))
    }

    /// `N^depth`, refusing anything above the repo-wide cap.
    pub fn cylinder_count(&self, depth: usize) -> Result<usize> {
        let cap = cylinder_cap();
        let err = Error::CapExceeded {
            size: self.size(),
            depth,
            cap,
        };
        let d = u32::try_from(depth).map_err(|_| err)?;
        match self.size().checked_pow(d) {
            Some(c) if c <= cap => Ok(c),
            _ => Err(Error::CapExceeded {
                size: self.size(),
                depth,
                cap,
            }),
        }
    }

    /// Position of `u` in the canonical layout of its depth.
    pub fn index_of(&self, u: &Word) -> Result<usize> {
        let n = self.size();
        u.symbols().iter().try_fold(0usize, |acc, &s| {
            self.check_symbol(s)?;
            Ok(acc * n + s)
        })
    }

    /// Inverse of [`SymbolSpace::index_of`].
    pub fn word_at(&self, depth: usize, mut index: usize) -> Word {
        let n = self.size();
        let mut s = vec![0; depth];
        for slot in s.iter_mut().rev() {
            *slot = index % n;
            index /= n;
        }
        Word(s)
    }

    /// All depth-`d` words in canonical order.
    pub fn enumerate_cylinders(&self, depth: usize) -> Result<Cylinders> {
        let total = self.cylinder_count(depth)?;
        Ok(Cylinders {
            size: self.size(),
            current: vec![0; depth],
            remaining: total,
        })
    }

    /// Product weight `p(u1)···p(ud)` of a cylinder given by index.
    pub fn product_weight(&self, depth: usize, mut index: usize) -> T {
        let n = self.size();
        let mut w = T::one();
        for _ in 0..depth {
            w = w * self.weights[index % n];
            index /= n;
        }
        w
    }
}

/// Odometer over the words of one depth.
#[derive(Debug, Clone)]
pub struct Cylinders {
    size: usize,
    current: Vec<usize>,
    remaining: usize,
}

impl Iterator for Cylinders {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = Word(self.current.clone());
        for slot in self.current.iter_mut().rev() {
            *slot += 1;
            if *slot < self.size {
                break;
            }
            *slot = 0;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for Cylinders {}

/// Gauss–Legendre discretization of `[a, b]` with `p` the normalized Lebesgue
/// measure.
pub fn gauss_legendre_space<T: Real>(n_nodes: usize, a: f64, b: f64) -> Result<SymbolSpace<T>> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidInterval { a, b });
    }
    if n_nodes == 0 {
        return Err(Error::InvalidSpace(
            "at least one quadrature node required".into(),
        ));
    }
    let (x, w) = gauss_legendre_rule(n_nodes);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let raw_mass: f64 = w.iter().map(|wi| wi * half).sum();
    let nodes = x.iter().map(|&t| T::lit(mid + half * t)).collect();
    let mut weights: Vec<T> = w.iter().map(|&wi| T::lit(wi * half / raw_mass)).collect();
    let total: T = weights.iter().copied().sum();
    for wi in &mut weights {
        *wi = *wi / total;
    }
    SymbolSpace::from_parts(
        SpaceKind::Quadrature {
            rule: "gauss-legendre".into(),
            domain: Domain::Interval { a, b },
            raw_mass,
        },
        weights,
        Some(nodes),
    )
}

/// Nodes (ascending) and weights of the `n`-point rule on `[-1, 1]`.
fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let step = p / d;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (z * p1 - p0) / (z * z - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prepend_examples() {
        let s = SymbolSpace::<f64>::uniform(2).unwrap();
        assert_eq!(s.prepend(0, &Word::empty()).unwrap(), Word::new(vec![0]));
        assert_eq!(
            s.prepend(1, &Word::new(vec![0, 0])).unwrap(),
            Word::new(vec![1, 0, 0])
        );
        assert!(matches!(
            s.prepend(2, &Word::new(vec![1])),
            Err(Error::SymbolOutOfRange { index: 2, size: 2 })
        ));
    }

    #[test]
    fn shift_examples() {
        assert_eq!(
            Word::new(vec![1, 0, 1]).shift().unwrap(),
            Word::new(vec![0, 1])
        );
        assert_eq!(Word::new(vec![3]).shift().unwrap(), Word::empty());
        assert!(matches!(Word::empty().shift(), Err(Error::EmptyWord)));
    }

    #[test]
    fn enumerate_small_depths() {
        let s = SymbolSpace::<f64>::uniform(2).unwrap();
        let words: Vec<_> = s.enumerate_cylinders(2).unwrap().collect();
        let expected: Vec<Word> = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
            .into_iter()
            .map(Word::new)
            .collect();
        assert_eq!(words, expected);
        let s3 = SymbolSpace::<f64>::uniform(3).unwrap();
        let w0: Vec<_> = s3.enumerate_cylinders(0).unwrap().collect();
        assert_eq!(w0, vec![Word::empty()]);
    }

    #[test]
    fn enumerate_refuses_above_default_cap() {
        let s = SymbolSpace::<f64>::uniform(2).unwrap();
        assert!(matches!(
            s.enumerate_cylinders(24),
            Err(Error::CapExceeded { depth: 24, .. })
        ));
    }

    #[test]
    fn index_round_trip() {
        let s = SymbolSpace::<f64>::uniform(3).unwrap();
        for (i, w) in s.enumerate_cylinders(4).unwrap().enumerate() {
            assert_eq!(s.index_of(&w).unwrap(), i);
            assert_eq!(s.word_at(4, i), w);
        }
    }

    #[test]
    fn weights_must_be_positive_and_normalized() {
        assert!(SymbolSpace::finite(vec![0.5_f64, 0.5]).is_ok());
        assert!(SymbolSpace::finite(vec![1.0_f64, 0.0]).is_err());
        assert!(SymbolSpace::finite(vec![0.6_f64, 0.6]).is_err());
        assert!(SymbolSpace::<f64>::finite(vec![]).is_err());
    }

    #[test]
    fn gauss_legendre_one_node() {
        let s = gauss_legendre_space::<f64>(1, 0.0, 1.0).unwrap();
        assert_eq!(s.nodes().unwrap(), &[0.5]);
        assert_eq!(s.weights(), &[1.0]);
    }

    #[test]
    fn gauss_legendre_rejects_bad_interval() {
        assert!(matches!(
            gauss_legendre_space::<f64>(4, 1.0, 1.0),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(gauss_legendre_space::<f64>(4, 2.0, -1.0).is_err());
    }

    #[test]
    fn gauss_legendre_records_raw_mass() {
        let s = gauss_legendre_space::<f64>(5, -1.0, 3.0).unwrap();
        match s.kind() {
            SpaceKind::Quadrature { raw_mass, .. } => assert!((raw_mass - 4.0).abs() < 1e-13),
            k => panic!("unexpected kind {k:?}"),
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let s = gauss_legendre_space::<f64>(7, 0.0, 1.0).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: SymbolSpace<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn json_rejects_inconsistent_size() {
        let doc = r#"{"kind":{"type":"finite"},"size":3,"weights":[0.5,0.5]}"#;
        assert!(serde_json::from_str::<SymbolSpace<f64>>(doc).is_err());
    }
}
