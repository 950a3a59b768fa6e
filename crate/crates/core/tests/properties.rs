use elastica::energy::{energy, first_variation};
use elastica::reparam::{phi_sup, project_arclength, Diffeo};
use elastica::weaksolve::h2_gradient_weak;
use elastica::{
    geometry, make_curve, run_flow, ClosedCurve, EnergyParams, FlowConfig, Integrator, Shape,
    VectorField,
};
use proptest::prelude::*;

fn fourier(seed: u64, decay: f64, n: usize, dim: usize) -> ClosedCurve {
    make_curve(Shape::FourierRandom { seed, decay }, n, dim).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn h2ds_inner_symmetric_and_positive(seed in 0u64..1000, dim in 2usize..4) {
        let g = geometry(&fourier(seed, 1.2, 64, dim)).unwrap();
        let v = VectorField::random_smooth(64, dim, 8, 0.3, seed + 1);
        let w = VectorField::random_smooth(64, dim, 8, 0.3, seed + 2);
        prop_assert_eq!(g.h2ds_inner(&v, &w).unwrap(), g.h2ds_inner(&w, &v).unwrap());
        prop_assert!(g.h2ds_inner(&v, &v).unwrap() > 0.0);
    }

    #[test]
    fn integrate_ds_invariant_under_grid_rotation(seed in 0u64..1000, shift in 0usize..64) {
        let c = fourier(seed, 1.0, 64, 2);
        let f: Vec<f64> = (0..64).map(|j| (j as f64 * 0.37).sin()).collect();
        let mut shifted = f.clone();
        shifted.rotate_left(shift);
        let a = geometry(&c).unwrap().integrate_ds(&f).unwrap();
        let b = geometry(&c.rotate_samples(shift)).unwrap().integrate_ds(&shifted).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn energy_scales_like_bending_plus_length(seed in 0u64..1000, scale in 0.3f64..3.0, lambda in 0.2f64..2.0) {
        let c = fourier(seed, 1.2, 64, 2);
        let p = EnergyParams::new(lambda).unwrap();
        let g = geometry(&c).unwrap();
        let gs = geometry(&c.scale(scale)).unwrap();
        let bend = energy(&g, &p) - lambda * lambda * g.length;
        let expect = bend / scale + lambda * lambda * scale * g.length;
        prop_assert!((energy(&gs, &p) - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn weak_gradient_satisfies_riesz_identity(seed in 0u64..1000, vseed in 0u64..1000) {
        let g = geometry(&fourier(seed, 1.5, 64, 2)).unwrap();
        let p = EnergyParams::new(1.0).unwrap();
        let grad = h2_gradient_weak(&g, &p).unwrap();
        let v = VectorField::random_smooth(64, 2, 10, 0.2, vseed);
        let lhs = g.h2ds_inner(&grad, &v).unwrap();
        let rhs = first_variation(&g, &p, &v).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9 * g.h2ds_norm(&v).unwrap());
    }

    #[test]
    fn random_diffeos_are_monotone(seed in 0u64..10_000, modes in 1usize..6, strength in 0.1f64..0.9) {
        let d = Diffeo::random(seed, modes, strength).unwrap();
        prop_assert!(d.is_monotone(512));
        prop_assert!((d.eval(1.0) - d.eval(0.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn arclength_projection_is_idempotent(seed in 0u64..1000) {
        let c = fourier(seed, 2.0, 256, 2);
        let pc = project_arclength(&c).unwrap();
        let g = geometry(&pc).unwrap();
        prop_assert!(phi_sup(&g) < 1e-8 * g.length);
        let ppc = project_arclength(&pc).unwrap();
        prop_assert!((ppc.points() - pc.points()).amax() < 1e-9 * g.length);
    }

    #[test]
    fn curve_json_round_trip(seed in 0u64..1000, dim in 2usize..4) {
        let c = fourier(seed, 1.0, 32, dim);
        let back = ClosedCurve::from_json(&c.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn energy_never_increases_along_flow(seed in 0u64..1000, lambda in 0.5f64..2.0) {
        let config = FlowConfig {
            lambda,
            integrator: Integrator::FixedRk4 { dt: 0.02 },
            t_max: 0.4,
            ..FlowConfig::default()
        };
        let traj = run_flow(&fourier(seed, 1.2, 64, 2), &config).unwrap();
        for w in traj.records.windows(2) {
            prop_assert!(w[1].energy - w[0].energy <= 1e-10);
        }
        prop_assert!(traj.dissipated() <= traj.records[0].energy);
    }
}
