//! The six subcommands. Each returns the machine-readable document plus a
//! few human-readable summary lines.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ruelle::measures::{
    check_eigenmeasure, check_intertwine, check_invariance, extend_eigenmeasure, pressure_curve,
    specific_entropy, variational_gap, CurveSettings,
};
use ruelle::spectral::{gelfand_radius, perron_eigendata, pressure_bracket};
use ruelle::transfer::build_kernel;
use ruelle::{
    EquilibriumState, MarkovMeasure, Potential, SpectralData, SpectralSettings, SymbolSpace, Word,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{Loaded, RunConfig};
use crate::output::{cell, json, json_line, opt_cell, short, Csv};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Report,
    Csv,
}

pub struct Outcome {
    pub document: String,
    pub summary: Vec<String>,
    pub exit: u8,
}

/// Everything a command needs, instantiated once from the config.
pub struct Context {
    pub command: &'static str,
    pub config: RunConfig,
    pub space: Arc<SymbolSpace<f64>>,
    pub f: Potential<f64>,
    pub depth: usize,
    pub format: Format,
}

#[derive(Serialize)]
struct Header<'a> {
    tool: &'static str,
    version: &'static str,
    library_version: &'static str,
    command: &'a str,
    space: &'a SymbolSpace<f64>,
    potential: serde_json::Value,
    depth: usize,
    var_bound: f64,
    tolerances: serde_json::Value,
    config: &'a RunConfig,
}

impl Context {
    pub fn new(command: &'static str, loaded: &Loaded, format: Format) -> Result<Self, CliError> {
        let space = loaded.space()?;
        let f = loaded.potential(space.clone())?;
        let depth = loaded.depth(&f)?;
        Ok(Context {
            command,
            config: loaded.config.clone(),
            space,
            f,
            depth,
            format,
        })
    }

    fn settings(&self) -> SpectralSettings {
        SpectralSettings {
            tol: self.config.run.tol,
            max_iters: self.config.run.max_iters,
        }
    }

    fn header(&self) -> Header<'_> {
        let r = &self.config.run;
        let s = &self.config.scan;
        Header {
            tool: "ruelle",
            version: env!("CARGO_PKG_VERSION"),
            library_version: ruelle::VERSION,
            command: self.command,
            space: &self.space,
            potential: json!({
                "spec": self.config.potential,
                "table_depth": self.f.depth(),
                "sup_norm": self.f.sup_norm(),
            }),
            depth: self.depth,
            var_bound: self.f.var_bound(),
            tolerances: json!({
                "tol": r.tol,
                "max_iters": r.max_iters,
                "invariance_tol": r.invariance_tol,
                "kink_ratio": s.kink_ratio,
                "absolute_floor": s.absolute_floor,
                "cylinder_cap": ruelle::space::cylinder_cap(),
            }),
            config: &self.config,
        }
    }

    fn header_lines(&self) -> Vec<(String, String)> {
        let h = self.header();
        vec![
            (
                "tool".into(),
                format!("{} {} (library {})", h.tool, h.version, h.library_version),
            ),
            ("command".into(), h.command.into()),
            ("space".into(), json_line(h.space)),
            ("potential".into(), json_line(&h.potential)),
            ("depth".into(), h.depth.to_string()),
            ("var_bound".into(), cell(h.var_bound)),
            ("tolerances".into(), json_line(&h.tolerances)),
            ("seed".into(), self.config.run.seed.to_string()),
        ]
    }

    fn report<S: Serialize>(&self, body: &S) -> String {
        json(&json!({ "header": self.header(), "result": body }))
    }

    fn spectral(&self) -> Result<SpectralData<f64>, CliError> {
        Ok(perron_eigendata(&self.f, self.depth, self.settings())?)
    }

    fn equilibrium(&self, spec: &SpectralData<f64>) -> Result<EquilibriumState<f64>, CliError> {
        Ok(EquilibriumState::new(
            &self.f,
            spec,
            self.config.run.invariance_tol,
        )?)
    }

    fn words(&self, depth: usize) -> Result<Vec<Word>, CliError> {
        Ok(self.space.enumerate_cylinders(depth)?.collect())
    }
}

fn quoted(u: &Word) -> String {
    format!("\"{u}\"")
}

pub fn pressure(ctx: &Context) -> Result<Outcome, CliError> {
    let n_max = ctx.config.run.n_max;
    let b = pressure_bracket(&ctx.f, ctx.depth, n_max)?;
    let radius = gelfand_radius(&ctx.f, ctx.depth, n_max)?;
    let summary = vec![
        format!(
            "pressure ≈ {} (bracket width {} at n = {n_max})",
            short(b.estimate),
            short(b.width)
        ),
        format!("spectral radius ≈ {}", short(b.estimate.exp())),
        format!("truncation error ≤ {}", short(b.truncation_error)),
    ];
    let document = match ctx.format {
        Format::Report => ctx.report(&json!({ "bracket": b, "gelfand_radius": radius })),
        Format::Csv => {
            let mut csv = Csv::new(
                &ctx.header_lines(),
                &["n", "p_sup", "p_inf", "width", "gelfand_radius"],
            );
            for (i, r) in radius.iter().enumerate() {
                csv.row(&[
                    (i + 1).to_string(),
                    cell(b.p_sup[i]),
                    cell(b.p_inf[i]),
                    cell(b.p_sup[i] - b.p_inf[i]),
                    cell(*r),
                ]);
            }
            csv.finish()
        }
    };
    Ok(Outcome {
        document,
        summary,
        exit: 0,
    })
}

pub fn spectral(ctx: &Context) -> Result<Outcome, CliError> {
    let spec = ctx.spectral()?;
    let residual = check_eigenmeasure(&ctx.f, spec.lambda, &spec.eigenmeasure, spec.depth())?;
    if let Some(path) = &ctx.config.run.export_kernel {
        let kernel = build_kernel(&ctx.f, ctx.depth)?;
        std::fs::write(path, kernel.to_coo_text())
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    let mut summary = vec![
        format!(
            "λ = {}, log λ = {}",
            short(spec.lambda),
            short(spec.log_lambda)
        ),
        format!(
            "{} after {} iterations (residuals: right {}, left {})",
            if spec.converged {
                "converged"
            } else {
                "NOT converged"
            },
            spec.iterations,
            short(spec.residual_right),
            short(spec.residual_left)
        ),
        format!("eigenmeasure residual {}", short(residual)),
    ];
    if !spec.converged {
        summary.push("non-convergence may indicate a phase transition; both accumulation iterates are reported".into());
    }
    let words = ctx.words(spec.depth())?;
    let document = match ctx.format {
        Format::Report => {
            let cylinders: Vec<_> = words
                .iter()
                .enumerate()
                .map(|(i, u)| {
                    json!({
                        "word": u.symbols(),
                        "eigenfunction": spec.eigenfunction.values()[i],
                        "eigenmeasure": spec.eigenmeasure.weights()[i],
                    })
                })
                .collect();
            ctx.report(&json!({
                "lambda": spec.lambda,
                "log_lambda": spec.log_lambda,
                "residual_right": spec.residual_right,
                "residual_left": spec.residual_left,
                "delta_lambda": spec.delta_lambda,
                "iterations": spec.iterations,
                "converged": spec.converged,
                "averaged": spec.averaged,
                "eigenmeasure_residual": residual,
                "truncation_error": spec.truncation_error,
                "cylinders": cylinders,
                "accumulation": spec.accumulation,
            }))
        }
        Format::Csv => {
            let mut header = ctx.header_lines();
            header.push(("lambda".into(), cell(spec.lambda)));
            header.push(("converged".into(), spec.converged.to_string()));
            let mut columns = vec!["index", "word", "eigenfunction", "eigenmeasure"];
            if spec.accumulation.is_some() {
                columns.extend(["accumulation_a", "accumulation_b"]);
            }
            let mut csv = Csv::new(&header, &columns);
            for (i, u) in words.iter().enumerate() {
                let mut row = vec![
                    i.to_string(),
                    quoted(u),
                    cell(spec.eigenfunction.values()[i]),
                    cell(spec.eigenmeasure.weights()[i]),
                ];
                if let Some([a, b]) = &spec.accumulation {
                    row.extend([cell(a[i]), cell(b[i])]);
                }
                csv.row(&row);
            }
            csv.finish()
        }
    };
    Ok(Outcome {
        document,
        summary,
        exit: 0,
    })
}

pub fn equilibrium(ctx: &Context) -> Result<Outcome, CliError> {
    let spec = ctx.spectral()?;
    let state = ctx.equilibrium(&spec)?;
    let (mu, nu) = (state.measure(), state.eigenmeasure());
    let invariance = check_invariance(mu, &ctx.f, spec.lambda, nu)?;
    let h = spec.eigenfunction.lift(mu.depth())?;
    let summary = vec![
        format!("λ = {}", short(spec.lambda)),
        format!("shift-invariance residual {}", short(invariance)),
    ];
    let words = ctx.words(mu.depth())?;
    let document = match ctx.format {
        Format::Report => {
            let cylinders: Vec<_> = words
                .iter()
                .enumerate()
                .map(|(i, u)| {
                    json!({
                        "word": u.symbols(),
                        "mu": mu.weights()[i],
                        "nu": nu.weights()[i],
                        "density": h.values()[i],
                    })
                })
                .collect();
            ctx.report(&json!({
                "lambda": spec.lambda,
                "invariance_residual": invariance,
                "spectral_residual": spec.max_residual(),
                "cylinders": cylinders,
            }))
        }
        Format::Csv => {
            let mut header = ctx.header_lines();
            header.push(("invariance_residual".into(), cell(invariance)));
            let mut csv = Csv::new(&header, &["index", "word", "mu", "nu", "density"]);
            for (i, u) in words.iter().enumerate() {
                csv.row(&[
                    i.to_string(),
                    quoted(u),
                    cell(mu.weights()[i]),
                    cell(nu.weights()[i]),
                    cell(h.values()[i]),
                ]);
            }
            csv.finish()
        }
    };
    Ok(Outcome {
        document,
        summary,
        exit: 0,
    })
}

pub fn entropy(ctx: &Context) -> Result<Outcome, CliError> {
    let spec = ctx.spectral()?;
    let state = ctx.equilibrium(&spec)?;
    let n = ctx.config.run.entropy_n;
    let report = variational_gap(&state, &ctx.f, &spec, n, ctx.config.run.invariance_tol)?;
    let mut summary = vec![
        format!(
            "specific entropy {} at n = {n}",
            short(report.specific_entropy)
        ),
        format!(
            "∫f dμ = {}, log λ = {}",
            short(report.integral.unwrap_or(f64::NAN)),
            short(spec.log_lambda)
        ),
        format!(
            "variational gap {}",
            short(report.gap().unwrap_or(f64::NAN))
        ),
    ];
    summary.extend(report.flags.iter().map(|f| format!("flag: {f}")));
    let document = match ctx.format {
        Format::Report => ctx.report(&report),
        Format::Csv => {
            let mut header = ctx.header_lines();
            header.push(("integral".into(), opt_cell(report.integral)));
            header.push(("log_lambda".into(), cell(spec.log_lambda)));
            for f in &report.flags {
                header.push(("flag".into(), f.clone()));
            }
            let mut csv = Csv::new(
                &header,
                &["n", "relative_entropy", "rate", "increment", "gap"],
            );
            for (i, &n) in report.ns.iter().enumerate() {
                csv.row(&[
                    n.to_string(),
                    cell(report.relative_entropy[i]),
                    cell(report.rate[i]),
                    cell(report.increments[i]),
                    cell(report.gaps[i]),
                ]);
            }
            csv.finish()
        }
    };
    Ok(Outcome {
        document,
        summary,
        exit: 0,
    })
}

pub fn scan(ctx: &Context) -> Result<Outcome, CliError> {
    let s = &ctx.config.scan;
    let step = (s.beta_max - s.beta_min) / (s.points - 1) as f64;
    let betas: Vec<f64> = (0..s.points)
        .map(|i| s.beta_min + step * i as f64)
        .collect();
    let settings = CurveSettings {
        spectral: ctx.settings(),
        kink_ratio: s.kink_ratio,
        absolute_floor: s.absolute_floor,
    };
    let run = || pressure_curve(&ctx.f, &betas, ctx.depth, settings);
    let curve = if s.parallel {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(run)?
    };
    let candidates = curve.candidates();
    let mut summary = vec![format!(
        "{} grid points on [{}, {}], {} candidate(s)",
        betas.len(),
        short(s.beta_min),
        short(s.beta_max),
        candidates.len()
    )];
    for &i in &candidates {
        let p = &curve.points[i];
        summary.push(format!(
            "candidate at β = {} ({:?})",
            short(p.beta),
            p.candidate.expect("candidates carry a reason")
        ));
    }
    for (i, msg) in &curve.failures {
        summary.push(format!("point {i} failed: {msg}"));
    }
    let document = match ctx.format {
        Format::Report => ctx.report(&json!({ "curve": curve, "candidates": candidates })),
        Format::Csv => {
            let mut csv = Csv::new(
                &ctx.header_lines(),
                &[
                    "beta",
                    "pressure",
                    "converged",
                    "iterations",
                    "left_slope",
                    "right_slope",
                    "centered_slope",
                    "mismatch",
                    "candidate",
                ],
            );
            for p in &curve.points {
                let reason = match p.candidate {
                    Some(r) => serde_json::to_value(r)
                        .ok()
                        .and_then(|v| v.as_str().map(String::from))
                        .unwrap_or_default(),
                    None => String::new(),
                };
                csv.row(&[
                    cell(p.beta),
                    cell(p.pressure),
                    p.converged.to_string(),
                    p.iterations.to_string(),
                    opt_cell(p.left_slope),
                    opt_cell(p.right_slope),
                    opt_cell(p.centered_slope),
                    opt_cell(p.mismatch),
                    reason,
                ]);
            }
            csv.finish()
        }
    };
    Ok(Outcome {
        document,
        summary,
        exit: 0,
    })
}

#[derive(Serialize)]
struct CheckRow {
    name: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
    note: String,
}

fn row(
    name: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
    note: impl Into<String>,
) -> CheckRow {
    CheckRow {
        name,
        value,
        tolerance,
        pass,
        note: note.into(),
    }
}

/// Random row-stochastic matrix with entries bounded away from zero.
fn random_transition(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let r: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = r.iter().sum();
            r.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

pub fn verify(ctx: &Context) -> Result<Outcome, CliError> {
    let run = &ctx.config.run;
    let tol = run.invariance_tol;
    let f = &ctx.f;
    let n = ctx.space.size();
    let mut rows = Vec::new();

    let spec = ctx.spectral()?;
    rows.push(row(
        "spectral convergence",
        spec.max_residual(),
        run.tol,
        spec.converged,
        format!("{} iterations", spec.iterations),
    ));
    let s = f.sup_norm();
    rows.push(row(
        "λ within e^{±‖f‖}",
        spec.lambda,
        s,
        spec.lambda >= (-s).exp() * (1.0 - 1e-14) && spec.lambda <= s.exp() * (1.0 + 1e-14),
        format!("[{}, {}]", short((-s).exp()), short(s.exp())),
    ));
    let b = pressure_bracket(f, ctx.depth, run.n_max)?;
    let slack = 1e-12 * spec.log_lambda.abs().max(1.0);
    let (lo, hi) = (b.p_inf[run.n_max - 1], b.p_sup[run.n_max - 1]);
    rows.push(row(
        "pressure bracket contains log λ",
        spec.log_lambda,
        slack,
        lo - slack <= spec.log_lambda && spec.log_lambda <= hi + slack,
        format!("[{}, {}] at n = {}", short(lo), short(hi), run.n_max),
    ));
    let eig = check_eigenmeasure(f, spec.lambda, &spec.eigenmeasure, spec.depth())?;
    rows.push(row("eigenmeasure relation", eig, tol, eig <= tol, ""));
    let ext = extend_eigenmeasure(f, spec.lambda, &spec.eigenmeasure)?;
    let consistency = ext
        .measure
        .marginal(spec.depth())?
        .weights()
        .iter()
        .zip(spec.eigenmeasure.weights())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    rows.push(row(
        "extension consistency",
        consistency,
        tol,
        consistency <= tol,
        format!("mass deviation {}", short(ext.mass_deviation)),
    ));

    let state = match ctx.equilibrium(&spec) {
        Ok(s) => Some(s),
        Err(e) => {
            rows.push(row(
                "equilibrium measure",
                f64::NAN,
                tol,
                false,
                e.to_string(),
            ));
            None
        }
    };
    if let Some(state) = &state {
        let inv = check_invariance(state.measure(), f, spec.lambda, state.eigenmeasure())?;
        rows.push(row("shift invariance of μ", inv, tol, inv <= tol, ""));

        let nu = state.eigenmeasure_at(spec.depth().max(2))?;
        let mut worst = 0.0f64;
        for a in ctx.words(1)? {
            worst = worst.max(check_intertwine(f, spec.lambda, &nu, &a)?);
        }
        rows.push(row(
            "intertwine identity",
            worst,
            tol,
            worst <= tol,
            "depth-1 cylinders",
        ));

        // Entropy checks need N^(n+1) cylinders; stay well inside the cap.
        let limit = 1usize << 20;
        let n_eff = (1..=run.entropy_n)
            .rev()
            .find(|&m| n.checked_pow(m as u32 + 1).is_some_and(|c| c <= limit));
        match n_eff {
            Some(m) => {
                let rep = specific_entropy(state, m)?;
                let min_h = rep
                    .relative_entropy
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                rows.push(row(
                    "Gibbs inequality",
                    min_h,
                    1e-12,
                    min_h >= -1e-12,
                    format!("n ≤ {m}"),
                ));

                let gap = variational_gap(state, f, &spec, m, tol)?
                    .gap()
                    .unwrap_or(f64::NAN);
                let exact = f.var_bound() == 0.0 && m >= f.depth();
                rows.push(row(
                    "variational equality",
                    gap,
                    1e-8,
                    !exact || gap.abs() <= 1e-8,
                    if exact {
                        format!("n = {m}")
                    } else {
                        format!("n = {m}; not asserted for truncated potentials or n < k")
                    },
                ));

                let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
                let mut min_gap = f64::INFINITY;
                for _ in 0..20 {
                    let mu = MarkovMeasure::stationary(
                        ctx.space.clone(),
                        random_transition(&mut rng, n),
                    )?;
                    let g = variational_gap(&mu, f, &spec, m, tol)?
                        .gap()
                        .unwrap_or(f64::NAN);
                    min_gap = min_gap.min(g);
                }
                let slack = 1e-8 + f.var_bound();
                rows.push(row(
                    "variational inequality",
                    min_gap,
                    slack,
                    min_gap >= -slack,
                    format!("20 Markov measures, seed {}", run.seed),
                ));
            }
            None => rows.push(row(
                "Gibbs inequality",
                f64::NAN,
                0.0,
                true,
                "skipped: alphabet too large for entropy checks",
            )),
        }
    }

    let failed = rows.iter().filter(|r| !r.pass).count();
    let mut summary: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{:<34} {}  {:>12}  {}",
                r.name,
                if r.pass { "PASS" } else { "FAIL" },
                short(r.value),
                r.note
            )
        })
        .collect();
    summary.push(format!(
        "{} of {} checks passed",
        rows.len() - failed,
        rows.len()
    ));
    let document = match ctx.format {
        Format::Report => ctx.report(&json!({ "checks": rows, "failed": failed })),
        Format::Csv => {
            let mut csv = Csv::new(
                &ctx.header_lines(),
                &["check", "value", "tolerance", "pass", "note"],
            );
            for r in &rows {
                csv.row(&[
                    format!("\"{}\"", r.name),
                    cell(r.value),
                    cell(r.tolerance),
                    r.pass.to_string(),
                    format!("\"{}\"", r.note.replace('"', "'")),
                ]);
            }
            csv.finish()
        }
    };
    Ok(Outcome {
        document,
        summary,
        exit: if failed == 0 { 0 } else { 1 },
    })
}
