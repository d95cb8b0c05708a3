//! Pressure along the inverse-temperature family `β ↦ log λ(βf)` and
//! slope-mismatch screening for phase-transition candidates.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::potential::Potential;
use crate::scalar::Real;
use crate::spectral::{perron_eigendata, SpectralSettings};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurveSettings {
    pub spectral: SpectralSettings,
    /// A point is a kink candidate when its slope mismatch exceeds this
    /// multiple of the local noise floor.
    pub kink_ratio: f64,
    /// Mismatches below this value are never flagged.
    pub absolute_floor: f64,
}

impl Default for CurveSettings {
    fn default() -> Self {
        CurveSettings {
            spectral: SpectralSettings::default(),
            kink_ratio: 5.0,
            absolute_floor: 1e-7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateReason {
    Kink,
    NonConverged,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Real")]
pub struct CurvePoint<T: Real> {
    pub beta: T,
    pub pressure: T,
    pub converged: bool,
    pub iterations: usize,
    pub left_slope: Option<T>,
    pub right_slope: Option<T>,
    pub centered_slope: Option<T>,
    /// `|right − left|`.
    pub mismatch: Option<T>,
    pub candidate: Option<CandidateReason>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Real")]
pub struct PressureCurve<T: Real> {
    pub points: Vec<CurvePoint<T>>,
    /// Failures of individual grid points, as `(index, message)`.
    pub failures: Vec<(usize, String)>,
}

impl<T: Real> PressureCurve<T> {
    /// Indices flagged as phase-transition candidates.
    pub fn candidates(&self) -> Vec<usize> {
        self.points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.candidate.map(|_| i))
            .collect()
    }
}

fn median<T: Real>(mut xs: Vec<T>) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite mismatch"));
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / T::lit(2.0)
    })
}

/// Samples `log λ(βf)` on a sorted grid. Points are independent and run on
/// the current rayon pool; the result does not depend on the thread count.
pub fn pressure_curve<T: Real>(
    f: &Potential<T>,
    betas: &[T],
    d: usize,
    settings: CurveSettings,
) -> Result<PressureCurve<T>> {
    let runs: Vec<Result<(T, bool, usize)>> = betas
        .par_iter()
        .map(|&b| {
            let spec = perron_eigendata(&f.scale(b), d, settings.spectral)?;
            Ok((spec.log_lambda, spec.converged, spec.iterations))
        })
        .collect();
    let mut failures = Vec::new();
    let mut points: Vec<CurvePoint<T>> = Vec::with_capacity(betas.len());
    for (i, (run, &beta)) in runs.into_iter().zip(betas).enumerate() {
        let (pressure, converged, iterations) = match run {
            Ok(r) => r,
            Err(e) if e.is_resource() => return Err(e),
            Err(e) => {
                failures.push((i, e.to_string()));
                (T::nan(), false, 0)
            }
        };
        points.push(CurvePoint {
            beta,
            pressure,
            converged,
            iterations,
            left_slope: None,
            right_slope: None,
            centered_slope: None,
            mismatch: None,
            candidate: None,
        });
    }
    let len = points.len();
    let slope = |a: &CurvePoint<T>, b: &CurvePoint<T>| {
        let s = (b.pressure - a.pressure) / (b.beta - a.beta);
        s.is_finite().then_some(s)
    };
    for i in 0..len {
        if i > 0 {
            points[i].left_slope = slope(&points[i - 1], &points[i]);
        }
        if i + 1 < len {
            points[i].right_slope = slope(&points[i], &points[i + 1]);
        }
        if i > 0 && i + 1 < len {
            points[i].centered_slope = slope(&points[i - 1], &points[i + 1]);
        }
        if let (Some(l), Some(r)) = (points[i].left_slope, points[i].right_slope) {
            points[i].mismatch = Some((r - l).abs());
        }
    }
    let ratio = T::lit(settings.kink_ratio);
    let floor = T::lit(settings.absolute_floor);
    for i in 0..len {
        if !points[i].converged {
            points[i].candidate = Some(CandidateReason::NonConverged);
            continue;
        }
        let Some(m) = points[i].mismatch else {
            continue;
        };
        // Noise floor from the mismatches two to four cells away.
        let neighbours: Vec<T> = (2..=4)
            .flat_map(|k| [i.checked_sub(k), Some(i + k)])
            .flatten()
            .filter_map(|j| points.get(j).and_then(|p| p.mismatch))
            .collect();
        let noise = median(neighbours).unwrap_or(T::zero()).max(floor);
        if m > ratio * noise {
            points[i].candidate = Some(CandidateReason::Kink);
        }
    }
    Ok(PressureCurve { points, failures })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::space::SymbolSpace;

    #[test]
    fn constant_potential_gives_a_line() {
        let s = Arc::new(SymbolSpace::<f64>::uniform(3).unwrap());
        let f = Potential::constant(s, 0.7).unwrap();
        let betas: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let c = pressure_curve(&f, &betas, 1, CurveSettings::default()).unwrap();
        for p in &c.points {
            assert!((p.pressure - 0.7 * p.beta).abs() < 1e-12);
        }
        assert!(c.candidates().is_empty());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0]), Some(2.5));
        assert_eq!(median::<f64>(vec![]), None);
    }
}
