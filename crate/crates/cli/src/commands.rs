//! Subcommand implementations.

use std::collections::BTreeMap;
use std::io::BufWriter;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use twofluid::decay_lab::{
    compile_report, energy_functionals, fit_decay, norm_series, quadrature_series, DecayFit, FitModel, FunctionalGrid,
    Group, NormKind, NormSeries, Provenance, Regime, TheoryGroup, TheoryKey, TheoryTable,
};
use twofluid::fields::random_band_field;
use twofluid::lp_besov::{besov_norm, block_multiplier, fractional_derivative, BesovSpec, DyadicPartition, SumIndex};
use twofluid::solver::{self, InitialData, Mode, SolverConfig};
use twofluid::symbolics::quadrature::{quadrature_norms, RadialProfile, RadialQuadrature};
use twofluid::symbolics::{
    compensator, compensator_residual, constrained_decay_exponent, energy_identity_residual, lyapunov_decrement_check,
    random_constrained, random_frequency, random_irrotational,
};
use twofluid::{Grid, PressureLaw};

use crate::config::{ConfigError, DifferenceData, RunConfig};
use crate::output::{Check, CheckReport, OutputDir};

#[derive(Debug)]
pub enum AppError {
    /// Bad configuration or arguments: usage error.
    Usage(String),
    /// The computation itself failed.
    Run(String),
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Usage(e.0)
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Run(format!("i/o: {e}"))
    }
}

fn run_err(e: impl std::fmt::Display) -> AppError {
    AppError::Run(e.to_string())
}

/// Verdict of one subcommand.
pub struct Verdict {
    pub summary: String,
    pub failing: Vec<String>,
}

fn finish(out: &mut OutputDir, command: &str, config: &RunConfig, report: CheckReport, extra: serde_json::Value) -> Result<Verdict, AppError> {
    out.write_json("report.json", &report)?;
    out.write_manifest(command, config, extra)?;
    Ok(Verdict { summary: report.summary(), failing: report.failing_keys() })
}

fn norm3(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn group_of(g: TheoryGroup) -> Group {
    match g {
        TheoryGroup::Densities => Group::Densities,
        TheoryGroup::Velocities => Group::Velocities,
    }
}

pub fn verify_symbols(config: &RunConfig) -> Result<Verdict, AppError> {
    let sw = config.sweep;
    let tol = config.tolerances;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut sk = 0.0f64;
    let mut skew = 0.0f64;
    for _ in 0..sw.frequencies {
        let xi = random_frequency(&mut rng, sw.r_lo, sw.r_hi);
        sk = sk.max(compensator_residual(&xi).map_err(run_err)? / norm3(&xi));
        let k = compensator(&xi).map_err(run_err)?;
        for (i, row) in k.iter().enumerate() {
            for (j, kij) in row.iter().enumerate() {
                skew = skew.max((kij + k[j][i]).abs());
            }
        }
    }

    let mut energy = 0.0f64;
    for _ in 0..sw.states {
        let w = random_irrotational(&mut rng, sw.r_lo, sw.r_hi);
        energy = energy.max(energy_identity_residual(&w).map_err(run_err)?);
    }

    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..sw.states {
        let w = random_constrained(&mut rng, sw.r_lo, sw.r_hi);
        let d = lyapunov_decrement_check(&w, sw.kappa).map_err(run_err)?;
        worst = worst.max((d.decrement + d.dissipation) / w.norm_sq());
        violations += usize::from(!d.pass);
    }

    let mut ratio = f64::INFINITY;
    let mut branch = 0.0f64;
    let n = sw.radii.max(2);
    for k in 0..n {
        let r = sw.r_lo * (sw.r_hi / sw.r_lo).powf(k as f64 / (n - 1) as f64);
        let lam = constrained_decay_exponent(r).map_err(run_err)?;
        ratio = ratio.min(lam / (r * r / (1.0 + r * r)));
        let sum = if 2.0 * r < 1.0 { 2.0 * r * r / (1.0 + (1.0 - 4.0 * r * r).sqrt()) } else { 0.5 };
        branch = branch.max((lam - sum.min(0.5)).abs());
    }

    let entries = vec![
        Check::at_most("compensator_residual", sk, tol.compensator_residual).with_detail("max over xi of residual / |xi|"),
        Check::at_most("compensator_skewness", skew, 0.0).with_detail("max |K + K^T|"),
        Check::at_most("energy_identity", energy, tol.energy_identity),
        Check::at_most("lyapunov_violations", violations as f64, 0.0)
            .with_detail(format!("kappa {}, worst (dE + D)/|w|^2 = {worst:.3e}", sw.kappa)),
        Check::at_least("dissipative_bound", ratio, tol.dissipation_fraction)
            .with_detail("min exponent / (r^2 / (1 + r^2))"),
        Check::at_most("branch_formula", branch, tol.branch_formula),
    ];
    let mut out = OutputDir::create(&config.output)?;
    finish(&mut out, "verify-symbols", config, CheckReport::new("verify-symbols", entries), json!({}))
}

fn fit_all(
    series: &[NormSeries],
    model: FitModel,
    window: (f64, f64),
    regime: Regime,
    groups: &[TheoryGroup],
) -> Result<BTreeMap<String, DecayFit>, AppError> {
    let mut fits = BTreeMap::new();
    for s in series {
        let group = groups.iter().copied().find(|&g| group_of(g) == s.tag.group).expect("series of a requested group");
        let key = TheoryKey { group, ell: s.tag.ell, regime }.to_string();
        fits.insert(key, fit_decay(s, model, window).map_err(run_err)?);
    }
    Ok(fits)
}

pub fn linear_decay(config: &RunConfig) -> Result<Verdict, AppError> {
    let regime = config.regime()?;
    let ells = config.ells(&[0.0, 1.0]);
    let groups = config.groups(&[TheoryGroup::Densities, TheoryGroup::Velocities]);
    let window = config.window(Provenance::Quadrature.default_window())?;
    let table = TheoryTable::build(&groups, &ells, regime, true).map_err(|e| AppError::Usage(format!("ell: {e}")))?;
    let ph = config.physics;
    let q = config.quadrature;
    let profile =
        RadialProfile::regime(regime.equivalent_s(), ph.mass_e, ph.width_e, ph.mass_i, ph.width_i, ph.potential);
    let quad = RadialQuadrature::log_panels(q.r_min, q.r_max, q.panels, q.order)
        .map_err(|e| AppError::Usage(format!("quadrature: {e}")))?;
    let (t0, t1) = window;
    let t0 = t0.max(1e-12);
    let times: Vec<f64> =
        (0..q.times).map(|k| t0 * (t1 / t0).powf(k as f64 / (q.times - 1) as f64)).collect();
    let run = quadrature_norms(&profile, &quad, &ells, &times).map_err(|e| AppError::Usage(format!("quadrature: {e}")))?;
    let mut series = Vec::new();
    for &g in &groups {
        for &ell in &ells {
            series.push(quadrature_series(&run, group_of(g), ell, NormKind::L2).map_err(run_err)?);
        }
    }
    let fits = fit_all(&series, FitModel::Power, window, regime, &groups)?;
    let report = compile_report(&fits, &table, config.tolerances.linear_exponent).map_err(run_err)?;

    let mut out = OutputDir::create(&config.output)?;
    out.write_norms(&series)?;
    out.write_series(&series)?;
    out.write_json("report.json", &report)?;
    out.write_manifest("linear-decay", config, json!({ "profile": run.profile_label(), "nodes": quad.len() }))?;
    Ok(Verdict { summary: report.summary(), failing: report.failing_keys() })
}

pub fn difference_decay(config: &RunConfig) -> Result<Verdict, AppError> {
    let d = config.difference;
    let grid = Grid::<f64>::new(3, d.n, d.length).map_err(|e| AppError::Usage(format!("difference: {e}")))?;
    let initial = match d.data {
        DifferenceData::SingleMode => InitialData::SingleMode { amplitude: d.amplitude, mode: d.mode },
        DifferenceData::Band => {
            InitialData::RandomBand { amplitude: d.amplitude, k_lo: d.k_lo, k_hi: d.k_hi, seed: config.seed }
        }
    };
    let mut sc = SolverConfig::new(grid, Mode::LinearDifference, initial, d.dt, d.t_final);
    sc.snapshot_every = d.snapshot_every;
    let traj = solver::run(&sc).map_err(run_err)?;
    let window = config.window((5.0, d.t_final))?;
    let energy = norm_series(&traj, Group::Energy, 0.0, NormKind::L2).map_err(run_err)?;
    let difference = norm_series(&traj, Group::Difference, 0.0, NormKind::L2).map_err(run_err)?;
    let fit = fit_decay(&energy, FitModel::Exponential, window).map_err(run_err)?;
    let tol = config.tolerances;
    let entries = vec![
        Check::at_least("difference:energy:rate", fit.value, tol.difference_rate_min)
            .with_detail(format!("exact rate 1/2, stderr {:.1e}, window [{}, {}]", fit.stderr, window.0, window.1)),
        Check::at_least("difference:energy:r_squared", fit.r_squared, tol.difference_r_squared),
    ];
    let series = [energy, difference];
    let mut out = OutputDir::create(&config.output)?;
    out.write_norms(&series)?;
    out.write_series(&series)?;
    finish(&mut out, "difference-decay", config, CheckReport::new("difference-decay", entries), json!({ "fit": fit }))
}

pub fn simulate(config: &RunConfig) -> Result<Verdict, AppError> {
    let g = config.grid;
    let ph = config.physics;
    let s = config.solver;
    let tol = config.tolerances;
    let regime = config.regime()?;
    let grid = Grid::<f64>::new(g.dim, g.n, g.length).map_err(|e| AppError::Usage(format!("grid: {e}")))?;
    let initial = InitialData::gaussian_with_peak(g.dim, ph.amplitude, ph.width_e, ph.width_i, ph.potential);
    let mut sc = SolverConfig::new(grid.clone(), s.mode, initial, s.dt, s.t_final);
    sc.snapshot_every = s.snapshot_every;
    sc.law = PressureLaw::new(ph.gamma).map_err(|e| AppError::Usage(format!("physics.gamma: {e}")))?;
    let traj = match s.mode {
        Mode::LinearDifference => return Err(AppError::Usage("solver.mode: use difference-decay for difference runs".into())),
        _ => solver::run(&sc).map_err(run_err)?,
    };

    let d0 = traj.diagnostics[0];
    let rel = |a: f64, b: f64| if b != 0.0 { ((a - b) / b).abs() } else { a.abs() };
    let drift = traj.diagnostics.iter().map(|d| rel(d.mass_e, d0.mass_e).max(rel(d.mass_i, d0.mass_i))).fold(0.0, f64::max);
    let constraint = traj
        .snapshots
        .iter()
        .zip(&traj.diagnostics)
        .map(|(snap, d)| {
            let scale = grid.l2_norm_hat(&snap.state.sigma_e) + grid.l2_norm_hat(&snap.state.sigma_i);
            if scale > 0.0 { d.constraint_residual / scale } else { d.constraint_residual }
        })
        .fold(0.0, f64::max);
    let mut entries = vec![
        Check::at_most("mass_drift", drift, tol.mass_drift),
        Check::at_most("constraint_residual", constraint, tol.constraint_residual),
    ];

    let ells = config.ells(&[0.0]);
    let groups = config.groups(&[TheoryGroup::Densities]);
    let provenance = Provenance::GridSolver { length: g.length };
    let (w0, w1) = provenance.default_window();
    let window = config.window((w0, w1.min(s.t_final)))?;
    let linear = s.mode == Mode::LinearFull;
    let table = TheoryTable::build(&groups, &ells, regime, linear).map_err(|e| AppError::Usage(format!("ell: {e}")))?;
    let mut series = Vec::new();
    for &gr in &groups {
        for &ell in &ells {
            series.push(norm_series(&traj, group_of(gr), ell, NormKind::L2).map_err(run_err)?);
        }
    }
    let fits = fit_all(&series, FitModel::Power, window, regime, &groups)?;
    let report = compile_report(&fits, &table, tol.grid_slope).map_err(run_err)?;
    for e in &report.entries {
        let mut c = Check::at_most(&format!("slope:{}", e.key), e.deviation, e.tolerance)
            .with_detail(format!("predicted {:+.4}, fitted {:+.4}", e.predicted, e.fitted));
        if let Some(cav) = &e.caveat {
            c.detail = Some(format!("{}; {cav}", c.detail.unwrap_or_default()));
        }
        entries.push(c);
    }

    let s_eq = regime.equivalent_s();
    let functionals = energy_functionals(&traj, s_eq, &FunctionalGrid::default()).map_err(run_err)?;
    if let Some(i0) = functionals.times.iter().position(|&t| t >= window.0 - 1e-9) {
        let growth = functionals.total.last().copied().unwrap_or(0.0) / functionals.total[i0];
        entries.push(
            Check::at_most("functional_growth", growth, tol.functional_growth)
                .with_detail(format!("E(t_final) / E({})", functionals.times[i0])),
        );
    }

    let mut out = OutputDir::create(&config.output)?;
    out.write_norms(&series)?;
    out.write_series(&series)?;
    let diag = std::fs::File::create(out.path("diagnostics.csv"))?;
    solver::io::write_diagnostics_csv(&traj, BufWriter::new(diag)).map_err(run_err)?;
    out.record("diagnostics.csv");
    out.write_json("functionals.json", &functionals)?;
    if s.write_snapshots {
        solver::io::write_snapshots(&traj, &out.path("snapshots.bin")).map_err(run_err)?;
        out.record("snapshots.bin");
    }
    let extra = json!({ "container": solver::io::header_for(&traj), "fits": report });
    finish(&mut out, "simulate", config, CheckReport::new("simulate", entries), extra)
}

pub fn lp_test(config: &RunConfig) -> Result<Verdict, AppError> {
    let lp = config.lp;
    let tol = config.tolerances;
    let grid = Grid::<f64>::new(3, lp.n, lp.length).map_err(|e| AppError::Usage(format!("lp: {e}")))?;
    let p = DyadicPartition::for_grid(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k0 = grid.fundamental();
    let kmax = grid.kmags().iter().copied().fold(0.0, f64::max);

    let mut pou = 0.0f64;
    for i in 1..grid.len() {
        let s: f64 = (p.q_min()..=p.q_max()).filter_map(|q| p.multiplier(q)).map(|m| m[i]).sum();
        pou = pou.max((s - 1.0).abs());
    }
    for _ in 0..1000 {
        let r = rng.gen_range(k0.ln()..kmax.ln()).exp();
        let s: f64 = (-60..=60).map(|q| block_multiplier(q, r)).sum();
        pou = pou.max((s - 1.0).abs());
    }

    let mut bernstein = 0usize;
    let q_top = (kmax / (8.0 / 3.0)).log2().floor() as i32;
    for q in p.q_min() + 1..=q_top {
        let (lo, hi) = (0.75 * 2f64.powi(q), (8.0 / 3.0) * 2f64.powi(q));
        let f = random_band_field(&grid, lo, hi, &mut rng);
        let n = grid.l2_norm(&f);
        if n == 0.0 {
            continue;
        }
        for alpha in [-1.0, 0.5, 1.0, 2.0] {
            let g = fractional_derivative(&grid, &f, alpha).map_err(run_err)?;
            let ratio = grid.l2_norm(&g) / (2f64.powf(q as f64 * alpha) * n);
            let (a, b) = (0.75f64.powf(alpha), (8.0f64 / 3.0).powf(alpha));
            if ratio < a.min(b) * (1.0 - 1e-12) || ratio > a.max(b) * (1.0 + 1e-12) {
                bernstein += 1;
            }
        }
    }

    let dot = |s: f64, r: SumIndex| BesovSpec::homogeneous(s, r);
    let mut embedding = 0usize;
    let (mut c_besov, mut c_l2, mut c_l1) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..lp.samples {
        let a = rng.gen_range(k0.ln()..kmax.ln()).exp();
        let b = rng.gen_range(a.ln()..kmax.ln()).exp().max(1.5 * a);
        let f = random_band_field(&grid, a, b, &mut rng);
        let l2 = grid.l2_norm(&f);
        if l2 == 0.0 {
            continue;
        }
        let inf0 = besov_norm(&p, &f, &dot(0.0, SumIndex::Infinity));
        let one0 = besov_norm(&p, &f, &dot(0.0, SumIndex::One));
        if inf0 > l2 * (1.0 + tol.embedding_slack) || l2 > one0 * (1.0 + tol.embedding_slack) {
            embedding += 1;
        }
        let neg = besov_norm(&p, &f, &dot(-1.5, SumIndex::Infinity));
        for (k, m, rho) in [(0.0, 1.0, 1.5), (1.0, 1.0, 1.5)] {
            let theta = (rho + k) / (rho + k + m);
            let lhs = besov_norm(&p, &f, &dot(k, SumIndex::One));
            let top = besov_norm(&p, &f, &dot(k + m, SumIndex::Infinity));
            c_besov = c_besov.max(lhs / (top.powf(theta) * neg.powf(1.0 - theta)));
            let lk = grid.l2_norm(&fractional_derivative(&grid, &f, k).map_err(run_err)?);
            let lkm = grid.l2_norm(&fractional_derivative(&grid, &f, k + m).map_err(run_err)?);
            c_l2 = c_l2.max(lk / (lkm.powf(theta) * neg.powf(1.0 - theta)));
        }

        let centre = |rng: &mut ChaCha8Rng| [0; 3].map(|_: i32| rng.gen_range(0.25..0.75) * lp.length);
        let bumps: Vec<([f64; 3], f64, f64)> = (0..rng.gen_range(1..4))
            .map(|_| (centre(&mut rng), rng.gen_range(1.0..2.5), rng.gen_range(-1.0..1.0)))
            .collect();
        let h: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.coords(i);
                bumps
                    .iter()
                    .map(|(c, w, amp)| amp * (-(0..3).map(|j| (x[j] - c[j]).powi(2)).sum::<f64>() / (w * w)).exp())
                    .sum()
            })
            .collect();
        c_l1 = c_l1.max(besov_norm(&p, &h, &dot(-1.5, SumIndex::Infinity)) / grid.l1_norm(&h));
    }

    let c = tol.interpolation_constant;
    let entries = vec![
        Check::at_most("partition_of_unity", pou, tol.partition_of_unity),
        Check::at_most("bernstein_violations", bernstein as f64, 0.0),
        Check::at_most("embedding_violations", embedding as f64, 0.0).with_detail("dot-B^0_2,inf <= L2 <= dot-B^0_2,1"),
        Check::at_most("interpolation_besov", c_besov, c).with_detail("fitted constant, (k, m, rho) in {(0,1,3/2), (1,1,3/2)}"),
        Check::at_most("interpolation_l2", c_l2, c).with_detail("fitted constant, (k, m, rho) in {(0,1,3/2), (1,1,3/2)}"),
        Check::at_most("l1_negative_besov", c_l1, c).with_detail("fitted constant of dot-B^-3/2_2,inf <= C L1"),
    ];
    let mut out = OutputDir::create(&config.output)?;
    let range = json!({ "q_min": p.q_min(), "q_max": p.q_max() });
    finish(&mut out, "lp-test", config, CheckReport::new("lp-test", entries), range)
}

/// Collects `report.json` from earlier runs and re-issues one verdict.
pub fn report(config: &RunConfig, inputs: &[PathBuf]) -> Result<Verdict, AppError> {
    if inputs.is_empty() {
        return Err(AppError::Usage("report: give at least one run directory".into()));
    }
    let mut entries = Vec::new();
    for dir in inputs {
        let path = dir.join("report.json");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| AppError::Usage(format!("report: cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| AppError::Usage(format!("report: {} is not JSON: {e}", path.display())))?;
        let list = value["entries"]
            .as_array()
            .ok_or_else(|| AppError::Usage(format!("report: {} has no entries", path.display())))?;
        let source = value["command"].as_str().map(str::to_string).unwrap_or_else(|| dir.display().to_string());
        for e in list {
            let key = e["key"].as_str().unwrap_or("?");
            let pass = e["pass"].as_bool().unwrap_or(false);
            let value = e["fitted"].as_f64().or_else(|| e["value"].as_f64()).unwrap_or(f64::NAN);
            let tolerance = e["tolerance"].as_f64().unwrap_or(f64::NAN);
            entries.push(Check { key: format!("{source}/{key}"), value, tolerance, pass, detail: None });
        }
    }
    let mut out = OutputDir::create(&config.output)?;
    let inputs: Vec<String> = inputs.iter().map(|p| p.display().to_string()).collect();
    finish(&mut out, "report", config, CheckReport::new("report", entries), json!({ "inputs": inputs }))
}
