//! Independent closed-form and brute-force references used by the
//! integration tests. Nothing here calls into the library's numerics.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_table(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Eigen-decomposition of a positive 2×2 matrix.
#[derive(Clone, Copy, Debug)]
pub struct Perron2 {
    pub lambda: f64,
    pub second: f64,
    /// `m r = λ r`, normalized to sum 1.
    pub right: [f64; 2],
    /// `l m = λ l`, normalized to sum 1.
    pub left: [f64; 2],
}

pub fn perron2(m: [[f64; 2]; 2]) -> Perron2 {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr - 4.0 * det).sqrt();
    let lambda = 0.5 * (tr + disc);
    let second = 0.5 * (tr - disc);
    let norm = |v: [f64; 2]| {
        let s = v[0] + v[1];
        [v[0] / s, v[1] / s]
    };
    Perron2 {
        lambda,
        second,
        right: norm([m[0][1], lambda - m[0][0]]),
        left: norm([m[1][0], lambda - m[0][0]]),
    }
}

/// Dense action of the transfer operator on depth-1 functions for a depth-2
/// potential on two symbols: `(Mφ)(u) = Σ_a p(a) e^{f(a,u)} φ(a)`.
pub fn depth1_matrix(p: [f64; 2], f: &[f64]) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    for (u, row) in m.iter_mut().enumerate() {
        for (a, entry) in row.iter_mut().enumerate() {
            *entry = p[a] * f[2 * a + u].exp();
        }
    }
    m
}

/// `ℒⁿ1(u)` by explicit recursion over preimage words, summed in the log
/// domain. `f` is a depth-`k` table indexed most-significant symbol first.
pub fn log_iterate(p: &[f64], k: usize, f: &[f64], n: usize, u: &[usize]) -> f64 {
    let size = p.len();
    let eval = |w: &[usize]| -> f64 {
        let idx = w[..k].iter().fold(0, |acc, &s| acc * size + s);
        f[idx]
    };
    fn go(
        size: usize,
        p: &[f64],
        eval: &dyn Fn(&[usize]) -> f64,
        n: usize,
        w: &mut Vec<usize>,
    ) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let terms: Vec<f64> = (0..size)
            .map(|a| {
                w.insert(0, a);
                let t = p[a].ln() + eval(w) + go(size, p, eval, n - 1, w);
                w.remove(0);
                t
            })
            .collect();
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
    }
    let mut w = u.to_vec();
    go(size, p, &eval, n, &mut w)
}

/// Equilibrium state of a depth-2 potential on two symbols with reference
/// weights `p`, as a stationary Markov chain.
#[derive(Clone, Debug)]
pub struct GibbsMarkov {
    pub lambda: f64,
    pub pi: [f64; 2],
    pub transition: [[f64; 2]; 2],
}

pub fn gibbs_markov(p: [f64; 2], f: &[f64]) -> GibbsMarkov {
    // A[a][b] = p(a) e^{f(a,b)} acts on functions of the leading symbol.
    let mut a = [[0.0; 2]; 2];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = p[i] * f[2 * i + j].exp();
        }
    }
    let e = perron2(a);
    let mut transition = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            transition[i][j] = a[i][j] * e.right[j] / (e.lambda * e.right[i]);
        }
    }
    let z = e.left[0] * e.right[0] + e.left[1] * e.right[1];
    GibbsMarkov {
        lambda: e.lambda,
        pi: [e.left[0] * e.right[0] / z, e.left[1] * e.right[1] / z],
        transition,
    }
}

/// Stationary law of a 2-state chain.
pub fn stationary2(t: [[f64; 2]; 2]) -> [f64; 2] {
    let (x, y) = (t[0][1], t[1][0]);
    [y / (x + y), x / (x + y)]
}

/// `Hₙ(μ | p^⊗ℕ)` for a stationary Markov chain.
pub fn markov_relative_entropy(p: &[f64], pi: &[f64], t: &[Vec<f64>], n: usize) -> f64 {
    let first: f64 = pi
        .iter()
        .zip(p)
        .filter(|(&q, _)| q > 0.0)
        .map(|(&q, &w)| q * (q / w).ln())
        .sum();
    first + (n as f64 - 1.0) * markov_step_entropy(p, pi, t)
}

/// `Σ π_a P_ab log(P_ab / p_b)`, the per-step increment of `Hₙ`.
pub fn markov_step_entropy(p: &[f64], pi: &[f64], t: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for (a, row) in t.iter().enumerate() {
        for (b, &q) in row.iter().enumerate() {
            if q > 0.0 {
                s += pi[a] * q * (q / p[b]).ln();
            }
        }
    }
    s
}

/// Two-point Gauss–Legendre rule on [0,1]: nodes at the roots of P₂.
pub fn gauss_legendre_2() -> ([f64; 2], [f64; 2]) {
    let r = 0.5 / 3f64.sqrt();
    ([0.5 - r, 0.5 + r], [0.5, 0.5])
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
