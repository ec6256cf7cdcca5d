use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twofluid::decay_lab::{
    energy_functionals, fit_decay, theory_exponent, theory_exponent_linear, FitModel, FunctionalGrid, Group,
    NormKind, NormSeries, Provenance, QuantityTag, Regime, TheoryGroup,
};
use twofluid::fields::random_band_field;
use twofluid::lp_besov::{besov_norm, block_multiplier, fractional_derivative, BesovSpec, DyadicPartition, SumIndex};
use twofluid::solver::{run, InitialData, Mode, SolverConfig};
use twofluid::Grid;

fn series(times: Vec<f64>, values: Vec<f64>) -> NormSeries {
    NormSeries {
        times,
        values,
        tag: QuantityTag { group: Group::Densities, ell: 0.0, norm: NormKind::L2 },
        provenance: Provenance::Quadrature,
    }
}

proptest! {
    #[test]
    fn power_fit_recovers_the_exponent(a in -3.0f64..-0.05, c in 1e-6f64..1e3, n in 10usize..60) {
        let times: Vec<f64> = (0..n).map(|k| 1e2 * 100f64.powf(k as f64 / (n - 1) as f64)).collect();
        let values = times.iter().map(|t| c * (1.0 + t).powf(a)).collect();
        let fit = fit_decay(&series(times, values), FitModel::Power, (1e2, 1e4)).unwrap();
        prop_assert!((fit.value - a).abs() <= 1e-9);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn exponential_fit_recovers_the_rate(rate in 0.05f64..3.0, c in 1e-6f64..1e3) {
        let times: Vec<f64> = (0..=25).map(|k| k as f64 * 0.4).collect();
        let values = times.iter().map(|t| c * (-rate * t).exp()).collect();
        let fit = fit_decay(&series(times, values), FitModel::Exponential, (0.0, 10.0)).unwrap();
        prop_assert!((fit.value - rate).abs() <= 1e-9);
    }

    #[test]
    fn p_and_s_regimes_agree(p in 1.0f64..2.0, ell in 0.0f64..=1.5) {
        let s = 3.0 * (1.0 / p - 0.5);
        let a = theory_exponent(TheoryGroup::Densities, ell, Regime::P(p)).unwrap();
        let b = theory_exponent(TheoryGroup::Densities, ell, Regime::S(s)).unwrap();
        prop_assert!((a - b).abs() <= 1e-14);
        let v = theory_exponent_linear(TheoryGroup::Velocities, ell, Regime::P(p)).unwrap();
        prop_assert!((v - a + 0.5).abs() <= 1e-14);
    }

    #[test]
    fn velocity_gap_is_one_half(s in 1e-3f64..=1.5, ell in 0.0f64..=0.5) {
        let d = theory_exponent(TheoryGroup::Densities, ell, Regime::S(s)).unwrap();
        let v = theory_exponent(TheoryGroup::Velocities, ell, Regime::S(s)).unwrap();
        prop_assert!((v - d + 0.5).abs() <= 1e-14);
    }

    #[test]
    fn partition_of_unity(log_r in -12.0f64..12.0) {
        let r = log_r.exp();
        let s: f64 = (-40..=40).map(|q| block_multiplier(q, r)).sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bernstein_on_annuli(q in -2i32..=0, alpha in -1.5f64..2.5, seed in any::<u64>()) {
        let grid = Grid::<f64>::new(3, 16, 16.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (0.75 * 2f64.powi(q), (8.0 / 3.0) * 2f64.powi(q));
        let f = random_band_field(&grid, lo, hi, &mut rng);
        let n = grid.l2_norm(&f);
        prop_assume!(n > 0.0);
        let g = fractional_derivative(&grid, &f, alpha).unwrap();
        let ratio = grid.l2_norm(&g) / n;
        let (a, b) = (lo.powf(alpha), hi.powf(alpha));
        prop_assert!(ratio >= a.min(b) * (1.0 - 1e-12) && ratio <= a.max(b) * (1.0 + 1e-12));
    }

    #[test]
    fn embedding_chain(lo in 0.3f64..1.5, width in 0.5f64..2.0, seed in any::<u64>()) {
        let grid = Grid::<f64>::new(3, 16, 16.0).unwrap();
        let p = DyadicPartition::for_grid(&grid);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_band_field(&grid, lo, lo + width, &mut rng);
        let l2 = grid.l2_norm(&f);
        prop_assume!(l2 > 0.0);
        let inf = besov_norm(&p, &f, &BesovSpec::homogeneous(0.0, SumIndex::Infinity));
        let one = besov_norm(&p, &f, &BesovSpec::homogeneous(0.0, SumIndex::One));
        prop_assert!(inf <= l2 * (1.0 + 1e-8));
        prop_assert!(l2 <= one * (1.0 + 1e-8));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn functionals_are_monotone_and_homogeneous(seed in any::<u64>(), lambda in 0.1f64..10.0, s in 0.1f64..=1.5) {
        let grid = Grid::<f64>::new(3, 8, 8.0).unwrap();
        let init = |amplitude| InitialData::RandomBand { amplitude, k_lo: 0.5, k_hi: 2.5, seed };
        let traj = |amplitude| {
            let mut c = SolverConfig::new(grid.clone(), Mode::LinearFull, init(amplitude), 0.05, 2.0);
            c.snapshot_every = 10;
            run(&c).unwrap()
        };
        let a = energy_functionals(&traj(1e-3), s, &FunctionalGrid::default()).unwrap();
        let b = energy_functionals(&traj(1e-3 * lambda), s, &FunctionalGrid::default()).unwrap();
        for w in a.total.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        for (x, y) in a.total.iter().zip(&b.total) {
            prop_assert!((y - lambda * x).abs() <= 1e-9 * y.abs());
        }
    }
}
