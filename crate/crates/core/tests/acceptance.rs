//! Acceptance suite. Each criterion prints one PASS/FAIL line; run with
//! `cargo test -p ruelle --test acceptance -- --nocapture` to see them.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use ruelle::measures::{
    check_eigenmeasure, check_intertwine, check_invariance, equilibrium_measure, pressure_curve,
    variational_gap, CandidateReason, CurveSettings,
};
use ruelle::potential::{ising, renewal, xy};
use ruelle::space::gauss_legendre_space;
use ruelle::spectral::{perron_eigendata, pressure_bracket};
use ruelle::transfer::{brute_force_iterate, iterate_one};
use ruelle::*;

type Check = std::result::Result<String, String>;

/// Converged spectral runs collected for the eigenmeasure criterion.
type Runs = Vec<(String, Potential64, SpectralData64)>;

fn settings() -> SpectralSettings {
    SpectralSettings::default()
}

fn binary() -> Arc<SymbolSpace64> {
    Arc::new(SymbolSpace::uniform(2).unwrap())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_constants(runs: &mut Runs) -> Check {
    let mut worst: f64 = 0.0;
    for n in [2usize, 5] {
        let space = Arc::new(SymbolSpace64::uniform(n).unwrap());
        for c in [-2.0f64, 0.0, 0.7, 3.0] {
            let f = Potential::constant(space.clone(), c).unwrap();
            let b = pressure_bracket(&f, 1, 50).map_err(|e| e.to_string())?;
            ensure(b.p_sup.iter().zip(&b.p_inf).all(|(s, i)| s == i), || {
                format!("N={n} c={c}: bracket width nonzero")
            })?;
            let spec = perron_eigendata(&f, 1, settings()).map_err(|e| e.to_string())?;
            let e1 = (b.estimate - c).abs();
            let e2 = rel_err(spec.lambda, c.exp());
            worst = worst.max(e1).max(e2);
            ensure(e1 < 1e-12 && e2 < 1e-12, || {
                format!("N={n} c={c}: errors {e1:e}, {e2:e}")
            })?;
            runs.push((format!("constant N={n} c={c}"), f, spec));
        }
    }
    Ok(format!("8 cases, max error {worst:.1e}, width 0"))
}

fn c2_perron_oracle(runs: &mut Runs) -> Check {
    let mut r = rng(2);
    let space = binary();
    let (mut worst_l, mut worst_v): (f64, f64) = (0.0, 0.0);
    for i in 0..50 {
        let table = uniform_table(&mut r, 4, -2.0, 2.0);
        let f = Potential::new(space.clone(), 2, table.clone(), 0.0).unwrap();
        let spec = perron_eigendata(&f, 1, settings()).map_err(|e| e.to_string())?;
        let e = perron2(depth1_matrix([0.5, 0.5], &table));
        let el = rel_err(spec.lambda, e.lambda);
        // Compare directions after normalizing both to unit sum.
        let h = spec.eigenfunction.values();
        let hs = h[0] + h[1];
        let ev = (0..2)
            .map(|k| {
                (h[k] / hs - e.right[k])
                    .abs()
                    .max((spec.eigenmeasure.weights()[k] - e.left[k]).abs())
            })
            .fold(0.0, f64::max);
        worst_l = worst_l.max(el);
        worst_v = worst_v.max(ev);
        ensure(el < 1e-10 && ev < 1e-9, || {
            format!("table {i}: λ err {el:e}, vector err {ev:e}")
        })?;
        runs.push((format!("random depth-2 table #{i}"), f, spec));
    }
    Ok(format!(
        "50 tables, λ err {worst_l:.1e}, eigenvector err {worst_v:.1e}"
    ))
}

fn c3_brute_force() -> Check {
    let mut r = rng(3);
    let space = Arc::new(SymbolSpace64::uniform(3).unwrap());
    let f = Potential::new(space.clone(), 2, uniform_table(&mut r, 9, -2.0, 2.0), 0.0).unwrap();
    let mut worst: f64 = 0.0;
    for d in [1usize, 2] {
        for n in 1..=8 {
            let it = iterate_one(&f, n, d).map_err(|e| e.to_string())?;
            for (i, u) in space.enumerate_cylinders(d).unwrap().enumerate() {
                let bf = brute_force_iterate(&f, n, &u).map_err(|e| e.to_string())?;
                let err = rel_err(it.values()[i], bf);
                worst = worst.max(err);
                ensure(err < 1e-12, || {
                    format!("d={d} n={n} u={u}: rel err {err:e}")
                })?;
            }
        }
    }
    Ok(format!("N=3 k=2 n≤8 d∈{{1,2}}, max rel err {worst:.1e}"))
}

fn c4_gelfand(runs: &mut Runs) -> Check {
    let mut parts = Vec::new();
    for h in [0.0, 0.5] {
        let f = ising(binary(), 1.0, h).unwrap();
        let spec = perron_eigendata(&f, 1, settings()).map_err(|e| e.to_string())?;
        let b = pressure_bracket(&f, 1, 1000).map_err(|e| e.to_string())?;
        let norm = f.sup_norm();
        let k = f.depth() as f64;
        for (i, &p) in b.p_sup.iter().enumerate() {
            let n = (i + 1) as f64;
            let bound = 2.0 * norm * (k - 1.0) / n;
            let err = (p - spec.log_lambda).abs();
            ensure(err <= bound, || {
                format!("h={h} n={n}: |p_sup − log λ| = {err:e} > {bound:e}")
            })?;
        }
        let fin = rel_err(b.p_sup[999], spec.log_lambda);
        ensure(fin < 1e-3, || {
            format!("h={h}: final relative error {fin:e}")
        })?;
        parts.push(format!("h={h} final rel err {fin:.1e}"));
        runs.push((format!("ising J=1 h={h}"), f, spec));
    }
    Ok(format!("ising J=1 n≤1000: {}", parts.join(", ")))
}

fn c5_eigenmeasure(runs: &Runs) -> Check {
    let mut worst: f64 = 0.0;
    for (name, f, spec) in runs {
        ensure(spec.converged, || format!("{name}: run did not converge"))?;
        let res = check_eigenmeasure(f, spec.lambda, &spec.eigenmeasure, spec.depth())
            .map_err(|e| format!("{name}: {e}"))?;
        worst = worst.max(res);
        ensure(res < 1e-10, || format!("{name}: residual {res:e}"))?;
        let s = f.sup_norm();
        let (lo, hi) = ((-s).exp(), s.exp());
        ensure(
            spec.lambda >= lo * (1.0 - 1e-14) && spec.lambda <= hi * (1.0 + 1e-14),
            || format!("{name}: λ = {} outside [{lo}, {hi}]", spec.lambda),
        )?;
    }
    Ok(format!(
        "{} runs, max residual {worst:.1e}, bounds hold",
        runs.len()
    ))
}

fn c6_invariance() -> Check {
    let mut cases = vec![
        (
            "ising J=1 h=0".to_string(),
            ising(binary(), 1.0, 0.0).unwrap(),
        ),
        (
            "ising J=1 h=0.5".to_string(),
            ising(binary(), 1.0, 0.5).unwrap(),
        ),
    ];
    let mut r = rng(6);
    for i in 0..20 {
        let f = Potential::new(binary(), 2, uniform_table(&mut r, 4, -2.0, 2.0), 0.0).unwrap();
        cases.push((format!("random #{i}"), f));
    }
    let mut worst: f64 = 0.0;
    for (name, f) in &cases {
        let spec = perron_eigendata(f, 2, settings()).map_err(|e| e.to_string())?;
        let mu = equilibrium_measure(&spec, 1e-10).map_err(|e| format!("{name}: {e}"))?;
        let res =
            check_invariance(&mu, f, spec.lambda, &spec.eigenmeasure).map_err(|e| e.to_string())?;
        worst = worst.max(res);
        ensure(res < 1e-10, || format!("{name}: residual {res:e}"))?;
    }
    // With h = 0 the eigenfunction is constant and ν is itself invariant, so
    // the control needs a field.
    let f = ising(binary(), 1.0, 0.5).unwrap();
    let spec = perron_eigendata(&f, 2, settings()).map_err(|e| e.to_string())?;
    let control = check_invariance(&spec.eigenmeasure, &f, spec.lambda, &spec.eigenmeasure)
        .map_err(|e| e.to_string())?;
    ensure(control > 1e-3, || format!("control residual {control:e}"))?;
    Ok(format!(
        "{} potentials, max residual {worst:.1e}; control (ν, J=1 h=0.5) {control:.2e}",
        cases.len()
    ))
}

fn c7_intertwine() -> Check {
    let mut r = rng(7);
    let mut cases = vec![ising(binary(), 1.0, 0.5).unwrap()];
    for _ in 0..5 {
        cases.push(Potential::new(binary(), 2, uniform_table(&mut r, 4, -2.0, 2.0), 0.0).unwrap());
    }
    let three = Arc::new(SymbolSpace::finite(vec![0.2, 0.3, 0.5]).unwrap());
    cases.push(Potential::new(three, 2, uniform_table(&mut r, 9, -1.0, 1.0), 0.0).unwrap());
    let (mut worst, mut weakest) = (0.0f64, f64::INFINITY);
    for f in &cases {
        let space = f.space().clone();
        let spec = perron_eigendata(f, 3, settings()).map_err(|e| e.to_string())?;
        ensure(spec.converged, || "run did not converge".into())?;
        let raw = uniform_table(&mut r, spec.eigenmeasure.weights().len(), 0.1, 1.0);
        let fake = CylinderMeasure::normalized(space.clone(), 3, raw).unwrap();
        for depth in 1..=2 {
            for a in space.enumerate_cylinders(depth).unwrap() {
                let res = check_intertwine(f, spec.lambda, &spec.eigenmeasure, &a)
                    .map_err(|e| e.to_string())?;
                worst = worst.max(res);
                ensure(res < 1e-10, || format!("A={a}: residual {res:e}"))?;
            }
        }
        // A non-eigenmeasure fails the identity on some cylinder.
        let ctrl = space
            .enumerate_cylinders(2)
            .unwrap()
            .map(|a| check_intertwine(f, spec.lambda, &fake, &a).unwrap())
            .fold(0.0, f64::max);
        weakest = weakest.min(ctrl);
        ensure(ctrl > 1e-4, || format!("control residual {ctrl:e}"))?;
    }
    Ok(format!(
        "{} potentials, max residual {worst:.1e}; weakest control {weakest:.2e}",
        cases.len()
    ))
}

fn c8_variational() -> Check {
    let f = ising(binary(), 1.0, 0.0).unwrap();
    let spec = perron_eigendata(&f, 2, settings()).map_err(|e| e.to_string())?;
    let state = EquilibriumState::new(&f, &spec, 1e-10).map_err(|e| e.to_string())?;
    let report = variational_gap(&state, &f, &spec, 6, 1e-10).map_err(|e| e.to_string())?;
    let eq_gap = report.gaps[5];
    ensure(eq_gap.abs() < 1e-8, || {
        format!("equilibrium gap {eq_gap:e}")
    })?;
    let mut r = rng(8);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..100 {
        let x: Vec<f64> = uniform_table(&mut r, 2, 0.01, 0.99);
        let t = vec![vec![1.0 - x[0], x[0]], vec![x[1], 1.0 - x[1]]];
        let mu = MarkovMeasure::stationary(binary(), t).map_err(|e| e.to_string())?;
        let rep = variational_gap(&mu, &f, &spec, 6, 1e-10).map_err(|e| e.to_string())?;
        ensure(rep.flags.is_empty(), || format!("flags {:?}", rep.flags))?;
        let g = rep.gaps[5];
        lo = lo.min(g);
        hi = hi.max(g);
    }
    ensure(lo >= -1e-10, || format!("min Markov gap {lo:e}"))?;
    ensure(hi > 0.01, || format!("max Markov gap {hi:e}"))?;
    Ok(format!(
        "equilibrium gap {eq_gap:.1e}; 100 Markov gaps in [{lo:.1e}, {hi:.3}]"
    ))
}

fn c9_quadrature() -> Check {
    let lambda = |n: usize| -> std::result::Result<f64, String> {
        let space = Arc::new(gauss_legendre_space::<f64>(n, 0.0, 1.0).map_err(|e| e.to_string())?);
        let f = xy(space, 1.0).map_err(|e| e.to_string())?;
        let spec = perron_eigendata(&f, 1, settings()).map_err(|e| e.to_string())?;
        ensure(spec.converged, || format!("N={n} did not converge"))?;
        Ok(spec.lambda)
    };
    let (l8, l16, l32) = (lambda(8)?, lambda(16)?, lambda(32)?);
    let (g8, g16) = ((l8 - l32).abs(), (l16 - l32).abs());
    ensure(g16 <= 0.25 * g8, || format!("gaps {g8:e}, {g16:e}"))?;
    Ok(format!("λ(32) = {l32:.15}; gaps {g8:.2e} → {g16:.2e}"))
}

/// Payoff `s_1 = −1`, `s_j = −ln((j+1)/j)` for `j ≥ 2`.
fn renewal_potential(k: usize) -> Potential64 {
    let tail = TailRule::LogRatio { alpha: 1.0 };
    let mut payoff = tail.payoff(k).unwrap();
    payoff[0] = -1.0;
    renewal(binary(), &payoff, tail)
        .unwrap()
        .truncate(k)
        .unwrap()
}

fn c10_renewal_scan() -> Check {
    let betas: Vec<f64> = (0..=100).map(|i| 0.6 * i as f64).collect();
    let cell = betas[1] - betas[0];
    let mut locations = Vec::new();
    for k in [8usize, 12, 16] {
        let f = renewal_potential(k);
        let curve = pressure_curve(&f, &betas, k - 1, CurveSettings::default())
            .map_err(|e| e.to_string())?;
        ensure(curve.failures.is_empty(), || {
            format!("K={k}: failures {:?}", curve.failures)
        })?;
        // Location: the kink candidate with the largest slope mismatch.
        let best = curve
            .points
            .iter()
            .filter(|p| p.candidate == Some(CandidateReason::Kink))
            .max_by(|a, b| a.mismatch.partial_cmp(&b.mismatch).unwrap());
        let p = best.ok_or_else(|| format!("K={k}: no kink candidate"))?;
        locations.push((k, p.beta));
    }
    let lo = locations.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
    let hi = locations
        .iter()
        .map(|l| l.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let list = locations
        .iter()
        .map(|(k, b)| format!("K={k}: β={b:.1}"))
        .collect::<Vec<_>>()
        .join(", ");
    ensure(hi - lo <= cell * (1.0 + 1e-12), || {
        format!("locations spread over more than one cell: {list}")
    })?;
    Ok(format!("{list} (cell {cell})"))
}

struct Line {
    id: usize,
    name: &'static str,
    outcome: Check,
    elapsed: Duration,
    limit: Duration,
}

fn timed(id: usize, name: &'static str, limit_s: u64, f: impl FnOnce() -> Check) -> Line {
    let start = Instant::now();
    let outcome = f();
    Line {
        id,
        name,
        outcome,
        elapsed: start.elapsed(),
        limit: Duration::from_secs(limit_s),
    }
}

#[test]
fn acceptance() {
    let mut runs = Runs::new();
    let lines = vec![
        timed(1, "constant potentials", 1, || c1_constants(&mut runs)),
        timed(2, "perron oracle", 5, || c2_perron_oracle(&mut runs)),
        timed(3, "brute-force iterates", 30, c3_brute_force),
        timed(4, "gelfand consistency", 60, || c4_gelfand(&mut runs)),
        timed(5, "eigenmeasure relation", 60, || c5_eigenmeasure(&runs)),
        timed(6, "shift invariance", 60, c6_invariance),
        timed(7, "intertwine identity", 60, c7_intertwine),
        timed(8, "variational principle", 10, c8_variational),
        timed(9, "quadrature convergence", 60, c9_quadrature),
        timed(10, "renewal scan stability", 300, c10_renewal_scan),
    ];
    let mut failed = Vec::new();
    for l in &lines {
        let slow = l.elapsed > l.limit;
        let (tag, msg) = match (&l.outcome, slow) {
            (Ok(m), false) => ("PASS", m.clone()),
            (Ok(m), true) => ("FAIL", format!("{m}; exceeded {:?}", l.limit)),
            (Err(m), _) => ("FAIL", m.clone()),
        };
        println!(
            "[{tag}] criterion {:>2} {:<24} {:>9.3}s  {msg}",
            l.id,
            l.name,
            l.elapsed.as_secs_f64()
        );
        if tag == "FAIL" {
            failed.push(l.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
