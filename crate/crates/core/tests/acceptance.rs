//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twofluid::decay_lab::{
    energy_functionals, fit_decay, norm_series, quadrature_series, theory_exponent, theory_exponent_linear,
    FitModel, FunctionalGrid, Group, NormKind, Regime, TheoryGroup,
};
use twofluid::fields::random_band_field;
use twofluid::lp_besov::{besov_norm, fractional_derivative, BesovSpec, DyadicPartition, SumIndex};
use twofluid::solver::{run, InitialData, Mode, SolverConfig, Trajectory};
use twofluid::symbolics::quadrature::{quadrature_norms, RadialProfile, RadialQuadrature};
use twofluid::symbolics::{
    compensator_residual, constrained_decay_exponent, energy_identity_residual, lyapunov_decrement_check, propagate,
    random_constrained, random_frequency, random_irrotational, SpectralVector,
};
use twofluid::tolerances::DEFAULT as TOL;
use twofluid::Grid;

const KAPPA: f64 = 0.05;

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = out.pass && in_time;
    println!(
        "{} criterion {id:>2}: {name}: {}; {:.2} s (budget {:.0} s){}",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs_f64(),
        if in_time { "" } else { " OVER BUDGET" }
    );
    pass
}

fn sk_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let xi = random_frequency(&mut rng, 1e-3, 1e3);
        let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
        worst = worst.max(compensator_residual(&xi).unwrap() / r);
    }
    Outcome {
        pass: worst <= TOL.compensator_residual,
        detail: format!("max residual/|xi| {worst:.2e} over 1000 frequencies"),
    }
}

fn energy_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let worst = (0..10_000)
        .map(|_| energy_identity_residual(&random_irrotational(&mut rng, 1e-3, 1e3)).unwrap())
        .fold(0.0f64, f64::max);
    Outcome { pass: worst <= TOL.energy_identity, detail: format!("max relative residual {worst:.2e} over 10^4 states") }
}

fn lyapunov() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let w = random_constrained(&mut rng, 1e-3, 1e3);
        let d = lyapunov_decrement_check(&w, KAPPA).unwrap();
        worst = worst.max((d.decrement + d.dissipation) / w.norm_sq());
        if !d.pass {
            violations += 1;
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{violations} violations over 10^4 states, worst (dE + D)/|w|^2 = {worst:.2e} (kappa {KAPPA})"),
    }
}

/// Slowest rate of the sum branch `lambda^2 + lambda + r^2 = 0` capped by the difference branch `1/2`.
fn branch_oracle(r: f64) -> f64 {
    let sum = if 2.0 * r < 1.0 { 2.0 * r * r / (1.0 + (1.0 - 4.0 * r * r).sqrt()) } else { 0.5 };
    sum.min(0.5)
}

fn dissipative_bound() -> Outcome {
    let mut below = 0usize;
    let mut worst_ratio = f64::INFINITY;
    let mut worst_oracle = 0.0f64;
    for k in 0..200 {
        let r = 10f64.powf(-3.0 + 6.0 * k as f64 / 199.0);
        let lam = constrained_decay_exponent(r).unwrap();
        let profile = r * r / (1.0 + r * r);
        worst_ratio = worst_ratio.min(lam / profile);
        if lam < TOL.dissipation_fraction * profile {
            below += 1;
        }
        worst_oracle = worst_oracle.max((lam - branch_oracle(r)).abs());
    }
    Outcome {
        pass: below == 0 && worst_oracle <= TOL.branch_formula,
        detail: format!(
            "min exponent/(r^2/(1+r^2)) {worst_ratio:.4} (need >= {}), max branch-formula gap {worst_oracle:.2e}",
            TOL.dissipation_fraction
        ),
    }
}

struct QuadratureFits {
    densities: f64,
    densities_grad: f64,
    velocities: f64,
}

fn quadrature_fits() -> QuadratureFits {
    let profile = RadialProfile::gaussian_mass(1.0, std::f64::consts::SQRT_2, 1.0, 2.0, 0.0);
    let quad = RadialQuadrature::<f64>::standard();
    assert_eq!(quad.len(), 1000);
    let times: Vec<f64> = (0..=40).map(|k| 10f64.powf(2.0 + k as f64 / 20.0)).collect();
    let run = quadrature_norms(&profile, &quad, &[0.0, 1.0], &times).expect("profile is resolved");
    let fit = |group, ell| {
        let s = quadrature_series(&run, group, ell, NormKind::L2).unwrap();
        fit_decay(&s, FitModel::Power, (1e2, 1e4)).unwrap().value
    };
    QuadratureFits {
        densities: fit(Group::Densities, 0.0),
        densities_grad: fit(Group::Densities, 1.0),
        velocities: fit(Group::Velocities, 0.0),
    }
}

fn linear_decay(f: &QuadratureFits) -> Outcome {
    let checks = [(f.densities, -0.75), (f.densities_grad, -1.25), (f.velocities, -1.25)];
    let pass = checks.iter().all(|(x, t)| (x - t).abs() <= TOL.linear_exponent);
    Outcome {
        pass,
        detail: format!(
            "densities {:+.4} (-0.75), Lambda densities {:+.4} (-1.25), velocities {:+.4} (-1.25), tol {}",
            f.densities, f.densities_grad, f.velocities, TOL.linear_exponent
        ),
    }
}

fn half_rate(f: &QuadratureFits) -> Outcome {
    let gap = f.velocities - f.densities;
    Outcome { pass: (gap + 0.5).abs() <= TOL.half_rate_gap, detail: format!("velocity - density exponent {gap:+.4}") }
}

fn difference_decay() -> Outcome {
    let cases = [
        ("single mode", Grid::new(3, 8, 2.0 * std::f64::consts::PI).unwrap(), InitialData::SingleMode { amplitude: 1e-2, mode: [1, 0, 0] }),
        (
            "broadband",
            Grid::new(3, 16, 4.0 * std::f64::consts::PI).unwrap(),
            InitialData::RandomBand { amplitude: 1e-2, k_lo: 0.5, k_hi: 2.0, seed: 7 },
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, grid, init) in cases {
        let mut cfg = SolverConfig::new(grid, Mode::LinearDifference, init, 0.05, 30.0);
        cfg.snapshot_every = 2;
        let traj = run(&cfg).unwrap();
        let s = norm_series(&traj, Group::Energy, 0.0, NormKind::L2).unwrap();
        let fit = fit_decay(&s, FitModel::Exponential, (5.0, 30.0)).unwrap();
        pass &= fit.value >= TOL.difference_rate_min && fit.r_squared > TOL.difference_r_squared;
        parts.push(format!("{name}: rate {:.4}, R^2 {:.5}", fit.value, fit.r_squared));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn mode_vector(grid: &Grid<f64>, traj: &Trajectory<f64>, snap: usize, i: usize) -> SpectralVector<f64> {
    let s = &traj.snapshots[snap].state;
    let k = grid.wavevector(i);
    SpectralVector::constrained(
        k,
        s.sigma_e[i],
        [s.u_e[0][i], s.u_e[1][i], s.u_e[2][i]],
        s.sigma_i[i],
        [s.u_i[0][i], s.u_i[1][i], s.u_i[2][i]],
    )
    .unwrap()
}

fn nonlinear_consistency() -> Outcome {
    let grid = Grid::<f64>::new(3, 48, 64.0).unwrap();
    let widths = (std::f64::consts::SQRT_2, 2.0);
    let init = InitialData::gaussian_with_peak(3, 1e-2, widths.0, widths.1, 0.0);
    let mut cfg = SolverConfig::new(grid.clone(), Mode::Nonlinear, init, 0.1, 40.0);
    cfg.snapshot_every = 10;
    let traj = match run(&cfg) {
        Ok(t) => t,
        Err(e) => return Outcome { pass: false, detail: format!("nonlinear run failed: {e}") },
    };
    let d0 = traj.diagnostics[0];
    let drift = traj
        .diagnostics
        .iter()
        .map(|d| ((d.mass_e - d0.mass_e) / d0.mass_e).abs().max(((d.mass_i - d0.mass_i) / d0.mass_i).abs()))
        .fold(0.0f64, f64::max);
    let constraint = traj
        .snapshots
        .iter()
        .zip(&traj.diagnostics)
        .map(|(s, d)| d.constraint_residual / (grid.l2_norm_hat(&s.state.sigma_e) + grid.l2_norm_hat(&s.state.sigma_i)))
        .fold(0.0f64, f64::max);
    let series = norm_series(&traj, Group::Densities, 0.0, NormKind::L2).unwrap();
    let slope = fit_decay(&series, FitModel::Power, (5.0, 40.0)).unwrap();
    let functionals = energy_functionals(&traj, 1.5, &FunctionalGrid::default()).unwrap();
    let i5 = functionals.times.iter().position(|&t| (t - 5.0).abs() < 1e-9).unwrap();
    let growth = functionals.total.last().unwrap() / functionals.total[i5];
    drop(traj);

    // (c): linear reference at amplitude 1e-4 against the per-mode matrix exponential
    let init = InitialData::gaussian_with_peak(3, 1e-4, widths.0, widths.1, 0.0);
    let mut cfg = SolverConfig::new(grid.clone(), Mode::LinearFull, init, 0.0025, 10.0);
    cfg.snapshot_every = 400;
    let lin = run(&cfg).unwrap();
    let mut agreement = 0.0f64;
    for (k, snap) in lin.snapshots.iter().enumerate().skip(1) {
        for i in 1..grid.len() {
            let exact = propagate(&mode_vector(&grid, &lin, 0, i), snap.time).unwrap();
            let got = mode_vector(&grid, &lin, k, i);
            let norm = exact.norm();
            if norm > 0.0 {
                let err: f64 = exact.w.iter().zip(&got.w).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
                agreement = agreement.max(err / norm);
            }
        }
    }
    let pass_a = drift <= TOL.mass_drift;
    let pass_b = constraint <= TOL.constraint_residual;
    let pass_c = agreement <= TOL.linear_mode_agreement;
    let pass_d = (slope.value + 0.75).abs() <= TOL.grid_slope;
    let pass_e = growth <= TOL.functional_growth;
    let mark = |p: bool| if p { "ok" } else { "FAILED" };
    Outcome {
        pass: pass_a && pass_b && pass_c && pass_d && pass_e,
        detail: format!(
            "(a) mass drift {drift:.2e} {}; (b) constraint {constraint:.2e} {}; (c) linear modes {agreement:.2e} {}; \
             (d) density slope {:+.3} on [5, 40] (crossover {:.1}) {}; (e) E(40)/E(5) {growth:.3} {}",
            mark(pass_a),
            mark(pass_b),
            mark(pass_c),
            slope.value,
            slope.crossover.unwrap_or(f64::NAN),
            mark(pass_d),
            mark(pass_e)
        ),
    }
}

fn lp_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let grid = Grid::<f64>::new(3, 32, 32.0).unwrap();
    let p = DyadicPartition::for_grid(&grid);
    let k0 = grid.fundamental();
    let nyq = std::f64::consts::PI * 32.0 / 32.0;

    // partition of unity on every resolved mode and at random radii
    let mut pou = 0.0f64;
    for i in 1..grid.len() {
        let s: f64 = (p.q_min()..=p.q_max()).map(|q| p.multiplier(q).unwrap()[i]).sum();
        pou = pou.max((s - 1.0).abs());
    }
    for _ in 0..1000 {
        let r = (rng.gen_range(k0.ln()..nyq.ln())).exp();
        let s: f64 = (-40..=40).map(|q| twofluid::lp_besov::block_multiplier(q, r)).sum();
        pou = pou.max((s - 1.0).abs());
    }

    // Bernstein on annulus-supported fields
    let mut bernstein_bad = 0usize;
    for q in p.q_min() + 1..=0 {
        let lo = 0.75 * 2f64.powi(q);
        let hi = (8.0 / 3.0) * 2f64.powi(q);
        let f = random_band_field(&grid, lo, hi, &mut rng);
        let n = grid.l2_norm(&f);
        if n == 0.0 {
            continue;
        }
        for alpha in [-1.0, 0.5, 1.0, 2.0] {
            let g = fractional_derivative(&grid, &f, alpha).unwrap();
            let ratio = grid.l2_norm(&g) / (2f64.powf(q as f64 * alpha) * n);
            let (a, b) = (0.75f64.powf(alpha), (8.0f64 / 3.0).powf(alpha));
            if ratio < a.min(b) * (1.0 - 1e-12) || ratio > a.max(b) * (1.0 + 1e-12) {
                bernstein_bad += 1;
            }
        }
    }

    let dot = |s: f64, r: SumIndex| BesovSpec::homogeneous(s, r);
    let mut embed_bad = 0usize;
    let mut c51 = 0.0f64;
    let mut c52 = 0.0f64;
    for _ in 0..100 {
        let a = (rng.gen_range(k0.ln()..nyq.ln())).exp();
        let b = (rng.gen_range(a.ln()..nyq.ln())).exp();
        let f = random_band_field(&grid, a, b.max(a * 1.5), &mut rng);
        let l2 = grid.l2_norm(&f);
        let inf0 = besov_norm(&p, &f, &dot(0.0, SumIndex::Infinity));
        let one0 = besov_norm(&p, &f, &dot(0.0, SumIndex::One));
        if inf0 > l2 * (1.0 + TOL.embedding_slack) || l2 > one0 * (1.0 + TOL.embedding_slack) {
            embed_bad += 1;
        }
        for (k, m, rho) in [(0.0, 1.0, 1.5), (1.0, 1.0, 1.5)] {
            let theta = (rho + k) / (rho + k + m);
            let neg = besov_norm(&p, &f, &dot(-rho, SumIndex::Infinity));
            let lhs1 = besov_norm(&p, &f, &dot(k, SumIndex::One));
            let top1 = besov_norm(&p, &f, &dot(k + m, SumIndex::Infinity));
            c51 = c51.max(lhs1 / (top1.powf(theta) * neg.powf(1.0 - theta)));
            let lk = grid.l2_norm(&fractional_derivative(&grid, &f, k).unwrap());
            let lkm = grid.l2_norm(&fractional_derivative(&grid, &f, k + m).unwrap());
            c52 = c52.max(lk / (lkm.powf(theta) * neg.powf(1.0 - theta)));
        }
    }

    // L^1 into the negative-order space: random sums of Gaussian bumps
    let mut c55 = 0.0f64;
    for _ in 0..100 {
        let bumps: Vec<([f64; 3], f64, f64)> = (0..rng.gen_range(1..4))
            .map(|_| {
                let c = [rng.gen_range(8.0..24.0), rng.gen_range(8.0..24.0), rng.gen_range(8.0..24.0)];
                (c, rng.gen_range(1.0..2.5), rng.gen_range(-1.0..1.0))
            })
            .collect();
        let f: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.coords(i);
                bumps
                    .iter()
                    .map(|(c, w, a)| {
                        let r2: f64 = (0..3).map(|j| (x[j] - c[j]).powi(2)).sum();
                        a * (-r2 / (w * w)).exp()
                    })
                    .sum()
            })
            .collect();
        let neg = besov_norm(&p, &f, &dot(-1.5, SumIndex::Infinity));
        c55 = c55.max(neg / grid.l1_norm(&f));
    }

    let cmax = TOL.interpolation_constant;
    let pass = pou <= TOL.partition_of_unity && bernstein_bad == 0 && embed_bad == 0 && c51 <= cmax && c52 <= cmax && c55 <= cmax;
    Outcome {
        pass,
        detail: format!(
            "partition error {pou:.1e}; Bernstein violations {bernstein_bad}; embedding violations {embed_bad}; \
             fitted constants: interpolation Bdot {c51:.3}, interpolation L2 {c52:.3}, L1 embedding {c55:.3}"
        ),
    }
}

fn theory_consistency() -> Outcome {
    let mut worst = 0.0f64;
    let mut gap = 0.0f64;
    let ps = [1.0, 1.1, 1.25, 1.5, 1.75, 1.9];
    for &p in &ps {
        let s = 3.0 * (1.0 / p - 0.5);
        for &ell in &[0.0, 0.25, 0.5] {
            for group in [TheoryGroup::Densities, TheoryGroup::Velocities] {
                let a = theory_exponent(group, ell, Regime::P(p)).unwrap();
                let b = theory_exponent(group, ell, Regime::S(s)).unwrap();
                worst = worst.max((a - b).abs());
            }
            let v = theory_exponent(TheoryGroup::Velocities, ell, Regime::S(s)).unwrap();
            let d = theory_exponent(TheoryGroup::Densities, ell, Regime::S(s)).unwrap();
            gap = gap.max((v - d + 0.5).abs());
        }
        for &ell in &[1.0, 1.5] {
            let a = theory_exponent(TheoryGroup::Densities, ell, Regime::P(p)).unwrap();
            let b = theory_exponent(TheoryGroup::Densities, ell, Regime::S(s)).unwrap();
            worst = worst.max((a - b).abs());
            let v = theory_exponent_linear(TheoryGroup::Velocities, ell, Regime::S(s)).unwrap();
            gap = gap.max((v - b + 0.5).abs());
        }
    }
    Outcome {
        pass: worst <= TOL.theory_consistency && gap <= TOL.theory_consistency,
        detail: format!("max p/s disagreement {worst:.1e}, max deviation of the gap from -1/2 {gap:.1e}"),
    }
}

fn main() {
    let secs = Duration::from_secs;
    let mut results = vec![
        criterion(1, "compensator identity", secs(1), sk_identity),
        criterion(2, "linear energy identity", secs(1), energy_identity),
        criterion(3, "Lyapunov decrement", secs(5), lyapunov),
        criterion(4, "pointwise dissipative bound", secs(10), dissipative_bound),
    ];
    let mut fits = None;
    results.push(criterion(5, "whole-space linear decay (quadrature)", secs(120), || {
        let f = quadrature_fits();
        let out = linear_decay(&f);
        fits = Some(f);
        out
    }));
    let fits = fits.expect("criterion 5 ran");
    results.push(criterion(6, "half-rate gap", secs(1), || half_rate(&fits)));
    results.push(criterion(7, "difference-system exponential decay", secs(30), difference_decay));
    results.push(criterion(8, "nonlinear solver consistency", secs(30 * 60), nonlinear_consistency));
    results.push(criterion(9, "Littlewood-Paley suite", secs(60), lp_suite));
    results.push(criterion(10, "theory-table self-consistency", secs(1), theory_consistency));
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed} of {} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
