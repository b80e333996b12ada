use proptest::prelude::*;

use semidiscrete::analysis::fit_order;
use semidiscrete::models::validate_parameters;
use semidiscrete::montecarlo::batch_statistics;
use semidiscrete::schemes::{hms_relative_residual, Saturation};
use semidiscrete::{
    coarsen, generate_lattice, hms_step, inverse_transform, sd_step, tamed_step,
    transform_example2, CoefficientFn, CoefficientMode, GridSpec, ModelSpec, PhiFn, Severity,
    StepInput,
};

fn c(v: f64) -> CoefficientFn {
    CoefficientFn::constant(v)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inverse_transform_round_trip(x in 1e-3f64..1e3, r in 1.01f64..1.49) {
        let p = 2.0 * r - 2.0;
        let back = inverse_transform(x.powf(p), r).unwrap();
        prop_assert!(close(back, x, 1e-9), "{back} vs {x}");
    }

    #[test]
    fn transformed_coefficients_follow_ito(
        k1 in -2.0f64..2.0,
        k2 in 0.0f64..50.0,
        k3 in 0.0f64..2.0,
        r in 1.05f64..1.45,
        x in 0.05f64..5.0,
    ) {
        let model = ModelSpec::example2(c(k1), c(k2), c(k3), r, 1.0, 1.0).unwrap();
        let z_model = transform_example2(&model).unwrap();
        let p = 2.0 * r - 2.0;
        let a = model.eval_drift(0.0, x).unwrap();
        let b = model.eval_diffusion(0.0, x).unwrap();
        let ito_drift = p * x.powf(p - 1.0) * a + 0.5 * p * (p - 1.0) * x.powf(p - 2.0) * b * b;
        let ito_diffusion = p * x.powf(p - 1.0) * b;
        let z = x.powf(p);
        let drift = z_model.eval_drift(0.0, z).unwrap();
        let diffusion = z_model.eval_diffusion(0.0, z).unwrap();
        let scale = (p * k1 * z).abs() + (p * k2 * z * z).abs() + (p * k3 * k3 * z * z).abs();
        prop_assert!((drift - ito_drift).abs() <= 1e-10 * scale.max(1e-300));
        prop_assert!(close(diffusion, ito_diffusion, 1e-10) || k3 == 0.0);
    }

    #[test]
    fn validation_is_monotone_in_k2(k3 in 0.01f64..2.0, k2 in 0.0f64..100.0, bump in 0.0f64..100.0) {
        let low = ModelSpec::heston32(0.1, k2, k3, 1.0, 1.0).unwrap();
        let high = ModelSpec::heston32(0.1, k2 + bump, k3, 1.0, 1.0).unwrap();
        let (sl, sh) = (validate_parameters(&low).status, validate_parameters(&high).status);
        prop_assert!(sh <= sl, "{sl:?} -> {sh:?}");
        if sl == Severity::Ok {
            prop_assert_eq!(sh, Severity::Ok);
        }
    }

    #[test]
    fn sd_stays_positive(
        k1 in -50.0f64..50.0,
        k2 in 0.0f64..1e4,
        k3 in 0.0f64..10.0,
        y in prop_oneof![1e-300f64..1e-10, 1e-10f64..1e10, 1e10f64..1e300],
        dt in 1e-8f64..1.0,
        z in -8.0f64..8.0,
        sin_phi in any::<bool>(),
    ) {
        let phi = if sin_phi { PhiFn::sin() } else { PhiFn::one() };
        let model = ModelSpec::example1(c(k1), c(k2), c(k3), phi, 1.0, 1.0).unwrap();
        let step = sd_step(&model, StepInput::new(0.0, y, dt, z * dt.sqrt()), CoefficientMode::LeftPoint)
            .unwrap();
        prop_assert!(step.value > 0.0 && step.value.is_finite());
        if step.value == f64::MAX || step.value == f64::MIN_POSITIVE {
            prop_assert_ne!(step.saturation, Saturation::None);
        }
    }

    #[test]
    fn hms_positive_and_solves_its_quadratic(
        k1 in -5.0f64..5.0,
        k2 in 0.0f64..1e3,
        k3 in 0.0f64..3.0,
        y in 1e-6f64..1e3,
        dt in 1e-6f64..0.1,
        z in -6.0f64..6.0,
    ) {
        let model = ModelSpec::heston32(k1, k2, k3, 1.0, 1.0).unwrap();
        let s = StepInput::new(0.0, y, dt, z * dt.sqrt());
        let next = hms_step(&model, s).unwrap();
        prop_assert!(next > 0.0 && next.is_finite());
        prop_assert!(hms_relative_residual(&model, s, next).unwrap() < 1e-9);
    }

    #[test]
    fn tamed_increment_is_bounded(
        k1 in -10.0f64..10.0,
        k2 in 0.0f64..1e4,
        k3 in 0.0f64..5.0,
        y in -1e3f64..1e3,
        dt in 1e-6f64..1.0,
        z in -8.0f64..8.0,
    ) {
        let model = ModelSpec::heston32(k1, k2, k3, 1.0, 1.0).unwrap();
        let next = tamed_step(&model, StepInput::new(0.0, y, dt, z * dt.sqrt())).unwrap();
        prop_assert!((next - y).abs() <= (1.0 / dt) * (1.0 + 1e-12));
    }

    #[test]
    fn coarse_levels_are_pairwise_sums(seed in any::<u64>(), path in any::<u64>(), exp in 1u32..10) {
        let lattice = generate_lattice(seed, path, &GridSpec::new(1.0, vec![], exp).unwrap());
        for e in 0..exp {
            let coarse = coarsen(&lattice, e).unwrap();
            let fine = coarsen(&lattice, e + 1).unwrap();
            for (i, v) in coarse.iter().enumerate() {
                prop_assert_eq!(v.to_bits(), (fine[2 * i] + fine[2 * i + 1]).to_bits());
            }
        }
    }

    #[test]
    fn grand_mean_is_the_flat_mean(
        batches in 2usize..30,
        per_batch in 1usize..20,
        seed in any::<u64>(),
    ) {
        let samples = semidiscrete::paths::gaussian_increments(seed, 0, batches * per_batch, 1.0);
        let means: Vec<f64> = samples
            .chunks(per_batch)
            .map(|b| b.iter().sum::<f64>() / per_batch as f64)
            .collect();
        let flat = samples.iter().sum::<f64>() / samples.len() as f64;
        let (grand, half) = batch_statistics(&means, 1.73);
        let mean_abs = samples.iter().map(|v| v.abs()).sum::<f64>() / samples.len() as f64;
        prop_assert!((grand - flat).abs() <= 1e-12 * mean_abs);
        prop_assert!(half >= 0.0);
    }

    #[test]
    fn regression_recovers_power_laws(
        slope in 0.0f64..3.0,
        scale in 1e-6f64..1e6,
        dt_scale in 0.1f64..10.0,
        n in 2usize..12,
    ) {
        let points: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let dt = 0.5f64.powi(i as i32 + 1);
                (dt, dt.powf(slope))
            })
            .collect();
        let (s, _) = fit_order(&points).unwrap();
        prop_assert!((s - slope).abs() <= 1e-12 * slope.max(1.0));

        let scaled: Vec<(f64, f64)> = points.iter().map(|&(dt, e)| (dt_scale * dt, scale * e)).collect();
        let (s2, _) = fit_order(&scaled).unwrap();
        prop_assert!((s2 - s).abs() <= 1e-9 * s.abs().max(1.0));
    }

    #[test]
    fn regression_uses_only_given_points(slope in 0.1f64..2.0, noise in proptest::collection::vec(0.5f64..2.0, 7)) {
        let points: Vec<(f64, f64)> = noise
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let dt = 0.5f64.powi(2 * i as i32 + 1);
                (dt, m * dt.powf(slope))
            })
            .collect();
        let first4 = fit_order(&points[..4]).unwrap();
        let mut tail_changed = points.clone();
        for p in &mut tail_changed[4..] {
            p.1 *= 1e3;
        }
        prop_assert_eq!(first4, fit_order(&tail_changed[..4]).unwrap());
    }
}
