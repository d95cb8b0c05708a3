//! The transfer operator `ℒ_f φ(x) = Σ_a p(a) e^{f(ax)} φ(ax)` on cylinder
//! functions, its sparse kernel at a fixed depth, and a brute-force oracle.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::scalar::{log_sum_exp, Real};
use crate::space::{SymbolSpace, Word};

/// Rows above which kernel products are split across the rayon pool.
const PARALLEL_ROWS: usize = 1 << 14;

/// Above this value of `n·‖f‖∞` iterates are carried in log space.
pub const LOG_SPACE_THRESHOLD: f64 = 300.0;

/// A function constant on the cylinders of a fixed depth.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderFunction<T: Real> {
    space: Arc<SymbolSpace<T>>,
    depth: usize,
    values: Vec<T>,
}

impl<T: Real> CylinderFunction<T> {
    pub fn new(space: Arc<SymbolSpace<T>>, depth: usize, values: Vec<T>) -> Result<Self> {
        let len = space.cylinder_count(depth)?;
        if values.len() != len {
            return Err(Error::DepthMismatch(format!(
                "{} values for {len} cylinders of depth {depth}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow("non-finite cylinder function value".into()));
        }
        Ok(CylinderFunction {
            space,
            depth,
            values,
        })
    }

    pub fn constant(space: Arc<SymbolSpace<T>>, depth: usize, c: T) -> Result<Self> {
        let len = space.cylinder_count(depth)?;
        Self::new(space, depth, vec![c; len])
    }

    /// Indicator of the cylinder `[u]`, at depth `u.depth()`.
    pub fn indicator(space: Arc<SymbolSpace<T>>, u: &Word) -> Result<Self> {
        let idx = space.index_of(u)?;
        let mut f = Self::constant(space, u.depth(), T::zero())?;
        f.values[idx] = T::one();
        Ok(f)
    }

    pub fn space(&self) -> &Arc<SymbolSpace<T>> {
        &self.space
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Same function tabulated on deeper cylinders.
    pub fn lift(&self, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::DepthMismatch(format!(
                "cannot lift depth {} to {depth}",
                self.depth
            )));
        }
        let space = self.space().clone();
        let stride = space.cylinder_count(depth - self.depth)?;
        let len = space.cylinder_count(depth)?;
        let values = (0..len).map(|i| self.values[i / stride]).collect();
        Ok(CylinderFunction {
            space,
            depth,
            values,
        })
    }

    /// Pointwise product, at the larger of the two depths.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let depth = self.depth.max(other.depth);
        let a = self.lift(depth)?;
        let b = other.lift(depth)?;
        let values = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(&x, &y)| x * y)
            .collect();
        Ok(CylinderFunction {
            space: a.space,
            depth,
            values,
        })
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Applies `ℒ_f` to `φ`. The result lives at depth `max(k−1, m−1, 0)`, the
/// smallest depth on which `e^{f(a·x)} φ(a·x)` is determined for every `a`.
pub fn apply<T: Real>(f: &Potential<T>, phi: &CylinderFunction<T>) -> Result<CylinderFunction<T>> {
    let space = f.space().clone();
    let n = space.size();
    let k = f.depth();
    let m = phi.depth();
    let d = (k - 1).max(m.saturating_sub(1));
    let len = space.cylinder_count(d)?;
    space.cylinder_count(d + 1)?;
    let f_div = n.pow((d + 1 - k) as u32);
    let f_stride = n.pow((k - 1) as u32);
    let w = space.weights();
    let values = (0..len)
        .map(|u| {
            (0..n)
                .map(|a| {
                    let fv = f.at(a * f_stride + u / f_div);
                    let pv = if m == 0 {
                        phi.values[0]
                    } else {
                        phi.values[a * n.pow((m - 1) as u32) + u / n.pow((d + 1 - m) as u32)]
                    };
                    w[a] * fv.exp() * pv
                })
                .sum()
        })
        .collect();
    CylinderFunction::new(space, d, values)
}

/// Sparse matrix of `ℒ_f` on depth-`d` cylinder functions. Row `u` has one
/// entry per symbol `a`, in column `(a, u1, .., u_{d-1})`, with value
/// `p(a)·e^{f(a·u)}`.
#[derive(Clone, Debug)]
pub struct TransferKernel<T: Real> {
    space: Arc<SymbolSpace<T>>,
    depth: usize,
    potential_depth: usize,
    cols: Vec<usize>,
    vals: Vec<T>,
    log_vals: Vec<T>,
}

pub fn build_kernel<T: Real>(f: &Potential<T>, depth: usize) -> Result<TransferKernel<T>> {
    let required = (f.depth() - 1).max(1);
    if depth < required {
        return Err(Error::DepthTooSmall { depth, required });
    }
    let space = f.space().clone();
    let n = space.size();
    let rows = space.cylinder_count(depth)?;
    space.cylinder_count(depth + 1)?;
    let k = f.depth();
    let f_div = n.pow((depth + 1 - k) as u32);
    let f_stride = n.pow((k - 1) as u32);
    let col_stride = n.pow((depth - 1) as u32);
    let mut cols = Vec::with_capacity(rows * n);
    let mut log_vals = Vec::with_capacity(rows * n);
    for u in 0..rows {
        for a in 0..n {
            cols.push(a * col_stride + u / n);
            log_vals.push(space.weight(a).ln() + f.at(a * f_stride + u / f_div));
        }
    }
    let vals = log_vals.iter().map(|v| v.exp()).collect();
    Ok(TransferKernel {
        space,
        depth,
        potential_depth: k,
        cols,
        vals,
        log_vals,
    })
}

impl<T: Real> TransferKernel<T> {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn space(&self) -> &Arc<SymbolSpace<T>> {
        &self.space
    }

    pub fn potential_depth(&self) -> usize {
        self.potential_depth
    }

    pub fn rows(&self) -> usize {
        self.cols.len() / self.space.size()
    }

    /// Number of stored entries, `N·N^d`.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored entries of row `u` as `(column, value)`.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let n = self.space.size();
        self.cols[u * n..(u + 1) * n]
            .iter()
            .copied()
            .zip(self.vals[u * n..(u + 1) * n].iter().copied())
    }

    /// `M·x`.
    pub fn mul(&self, x: &[T]) -> Vec<T> {
        let n = self.space.size();
        let row = |u: usize| -> T {
            let base = u * n;
            (0..n)
                .map(|j| self.vals[base + j] * x[self.cols[base + j]])
                .sum()
        };
        if self.rows() >= PARALLEL_ROWS {
            (0..self.rows()).into_par_iter().map(row).collect()
        } else {
            (0..self.rows()).map(row).collect()
        }
    }

    /// `Mᵀ·y`; the column `v = (a, q)` collects rows `(q, b)` for every `b`.
    pub fn mul_transpose(&self, y: &[T]) -> Vec<T> {
        let n = self.space.size();
        let stride = self.rows() / n;
        let col = |v: usize| -> T {
            let (a, q) = (v / stride, v % stride);
            (0..n)
                .map(|b| {
                    let u = q * n + b;
                    self.vals[u * n + a] * y[u]
                })
                .sum()
        };
        if self.rows() >= PARALLEL_ROWS {
            (0..self.rows()).into_par_iter().map(col).collect()
        } else {
            (0..self.rows()).map(col).collect()
        }
    }

    /// `log(M·exp(logx))` by a max-shifted log-sum-exp on every row.
    pub fn log_mul(&self, logx: &[T]) -> Vec<T> {
        let n = self.space.size();
        let row = |u: usize| -> T {
            let base = u * n;
            let terms: Vec<T> = (0..n)
                .map(|j| self.log_vals[base + j] + logx[self.cols[base + j]])
                .collect();
            log_sum_exp(&terms)
        };
        if self.rows() >= PARALLEL_ROWS {
            (0..self.rows()).into_par_iter().map(row).collect()
        } else {
            (0..self.rows()).map(row).collect()
        }
    }

    /// Dense copy, row-major. Intended for small kernels and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let r = self.rows();
        let mut m = vec![vec![T::zero(); r]; r];
        for (u, row) in m.iter_mut().enumerate() {
            for (v, val) in self.row(u) {
                row[v] = row[v] + val;
            }
        }
        m
    }

    /// Coordinate-list export, one `row-word col-word value` line per entry.
    pub fn to_coo_text(&self) -> String {
        let mut out = String::new();
        for u in 0..self.rows() {
            let uw = self.space.word_at(self.depth, u);
            for (v, val) in self.row(u) {
                let vw = self.space.word_at(self.depth, v);
                let _ = writeln!(out, "{uw} {vw} {:.16e}", val.as_f64());
            }
        }
        out
    }
}

fn iteration_depth<T: Real>(f: &Potential<T>, d: usize) -> Result<usize> {
    let required = f.depth() - 1;
    if d < required {
        return Err(Error::DepthTooSmall { depth: d, required });
    }
    Ok(d.max(1))
}

/// `log ℒ_fⁿ(1)` at depth `d`, computed with log-space kernel products.
pub fn log_iterate_one<T: Real>(
    f: &Potential<T>,
    n: usize,
    d: usize,
) -> Result<CylinderFunction<T>> {
    let kd = iteration_depth(f, d)?;
    let kernel = build_kernel(f, kd)?;
    let mut logx = vec![T::zero(); kernel.rows()];
    for _ in 0..n {
        logx = kernel.log_mul(&logx);
    }
    restrict(f.space().clone(), kd, d, logx)
}

/// `ℒ_fⁿ(1)` at depth `d` by `n` sparse products from the constant one. When
/// `n·‖f‖∞` exceeds [`LOG_SPACE_THRESHOLD`] the products are carried in log
/// space and exponentiated at the end.
pub fn iterate_one<T: Real>(f: &Potential<T>, n: usize, d: usize) -> Result<CylinderFunction<T>> {
    if n == 0 {
        return Err(Error::InvalidPotential(
            "iteration count must be positive".into(),
        ));
    }
    if T::lit(n as f64) * f.sup_norm() > T::lit(LOG_SPACE_THRESHOLD) {
        let logs = log_iterate_one(f, n, d)?;
        let space = logs.space().clone();
        let values: Vec<T> = logs.values().iter().map(|v| v.exp()).collect();
        if values.iter().any(|v| !v.is_finite() || *v == T::zero()) {
            return Err(Error::Overflow(format!(
                "ℒ^{n}(1) leaves the floating-point range; use the log iterate"
            )));
        }
        return CylinderFunction::new(space, d, values);
    }
    let kd = iteration_depth(f, d)?;
    let kernel = build_kernel(f, kd)?;
    let mut x = vec![T::one(); kernel.rows()];
    for _ in 0..n {
        x = kernel.mul(&x);
    }
    restrict(f.space().clone(), kd, d, x)
}

/// Keeps one representative per depth-`d` cylinder of a function that is
/// known to be constant on them.
fn restrict<T: Real>(
    space: Arc<SymbolSpace<T>>,
    from: usize,
    to: usize,
    values: Vec<T>,
) -> Result<CylinderFunction<T>> {
    if from == to {
        return CylinderFunction::new(space, to, values);
    }
    let stride = space.cylinder_count(from - to)?;
    let v = values.into_iter().step_by(stride).collect();
    CylinderFunction::new(space, to, v)
}

/// `ℒ_fⁿ(1)(u)` by summing over all `Nⁿ` prepended words.
pub fn brute_force_iterate<T: Real>(f: &Potential<T>, n: usize, u: &Word) -> Result<T> {
    let space = f.space();
    let k = f.depth();
    if u.depth() + 1 < k {
        return Err(Error::WordTooShort {
            depth: u.depth(),
            required: k - 1,
        });
    }
    let count = space.cylinder_count(n)?;
    let mut total = T::zero();
    let mut x: Vec<usize> = vec![0; n];
    x.extend_from_slice(u.symbols());
    for idx in 0..count {
        // x = a_n .. a_1 u
        let prefix = space.word_at(n, idx);
        x[..n].copy_from_slice(prefix.symbols());
        let mut term = T::one();
        for i in 1..=n {
            let start = n - i;
            let w = Word::new(x[start..start + k].to_vec());
            term = term * space.weight(x[start]) * f.evaluate(&w)?.exp();
        }
        total = total + term;
    }
    Ok(total)
}
