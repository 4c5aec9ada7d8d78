use fixen::boundary::{shoot, ShootOptions};
use fixen::config::{MagneticConfig, ModelConfig, PotentialConfig, ProfileConfig};
use fixen::domain::{unit_from_angles, ConvexDomain};
use fixen::dynamics::{energy, g_inverse, g_map, impulse, integrate_flow, sphere_momentum, velocity, FlowOptions, PhaseState};
use fixen::fields::{antisymmetry_residual, check_magnetic_closedness, FieldModel, MagneticTerm, Mode, Profile};
use fixen::linalg::Vec3;
use fixen::scattering::{boundary_to_scattering, sample_m_e, scattering_to_boundary};
use fixen::thresholds::{check_conditions, ThresholdInputs};
use proptest::prelude::*;

fn mode(relativistic: bool) -> Mode {
    if relativistic {
        Mode::Relativistic
    } else {
        Mode::Nonrelativistic
    }
}

fn bump_model(dim: usize, m: Mode, amp: f64, b: f64) -> FieldModel<f64> {
    let mut model = FieldModel::free(dim, 1.0, m)
        .with_potential(Vec3::new(0.1, -0.1, 0.05).truncate(dim), Profile::Bump { amplitude: amp, radius: 0.6 });
    model = if dim == 2 {
        model.with_magnetic(MagneticTerm::Planar { center: Vec3::new(-0.1, 0.1, 0.0), profile: Profile::Bump { amplitude: b, radius: 0.5 } })
    } else {
        model.with_magnetic(MagneticTerm::Curl {
            center: Vec3::new(-0.1, 0.1, 0.0),
            profile: Profile::Bump { amplitude: b, radius: 0.5 },
            direction: Vec3::new(0.0, 0.0, 1.0),
        })
    };
    model
}

fn vec3(dim: usize) -> impl Strategy<Value = Vec3<f64>> {
    prop::collection::vec(-3.0..3.0f64, dim).prop_map(|v| Vec3::from_slice(&v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g_inverts_and_stays_subluminal(p in vec3(3), c in 0.3..5.0f64) {
        let v = g_map(&p, c);
        prop_assert!(v.norm() < c);
        let back = g_inverse(&v, c).unwrap();
        prop_assert!((back - p).norm() <= 1e-10 * (1.0 + p.norm()));
    }

    #[test]
    fn velocity_and_impulse_are_inverse(p in vec3(3), rel in any::<bool>()) {
        let model = FieldModel::<f64>::free(3, 1.5, mode(rel));
        let back = impulse(&model, &velocity(&model, &p)).unwrap();
        prop_assert!((back - p).norm() <= 1e-10 * (1.0 + p.norm()));
    }

    #[test]
    fn sphere_momentum_lies_on_the_energy_shell(
        x in prop::collection::vec(-0.6..0.6f64, 2),
        angle in 0.0..6.3f64,
        e in 2.5..50.0f64,
        rel in any::<bool>(),
    ) {
        let model = bump_model(2, mode(rel), 0.3, 0.2);
        let x = Vec3::from_slice(&x);
        let p = sphere_momentum(&model, &x, e, &unit_from_angles(2, &[angle])).unwrap();
        prop_assert!((energy(&model, &x, &p) - e).abs() <= 1e-12 * e);
    }

    #[test]
    fn magnetic_fields_are_closed_two_forms(
        pts in prop::collection::vec(prop::collection::vec(-0.9..0.9f64, 3), 1..6),
        b in -1.0..1.0f64,
    ) {
        let model = bump_model(3, Mode::Relativistic, 0.0, b);
        let samples: Vec<Vec3<f64>> = pts.iter().map(|v| Vec3::from_slice(v)).collect();
        prop_assert!(antisymmetry_residual(&model, &samples) <= 1e-14);
        prop_assert!(check_magnetic_closedness(&model, &samples) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_is_conserved_along_the_flow(
        angle in 0.0..6.3f64,
        x in prop::collection::vec(-0.5..0.5f64, 2),
        e in 2.0..20.0f64,
        rel in any::<bool>(),
    ) {
        let model = bump_model(2, mode(rel), 0.5, 0.8);
        let x = Vec3::from_slice(&x);
        let Ok(p) = sphere_momentum(&model, &x, e, &unit_from_angles(2, &[angle])) else { return Ok(()) };
        let opts = FlowOptions::with_tolerances(1e-12, 1e-14);
        let flow = integrate_flow(&model, None, &PhaseState::new(x, p), 3.0, &opts).unwrap();
        prop_assert!(flow.energy_drift <= 1e-8 * e, "drift {}", flow.energy_drift);
    }

    #[test]
    fn boundary_speeds_lie_on_the_free_shell(a in 0.0..6.3f64, b in 0.5..5.8f64, rel in any::<bool>()) {
        let model = bump_model(2, mode(rel), 0.01, 0.05);
        let d = ConvexDomain::unit_ball(2);
        let q0 = unit_from_angles::<f64>(2, &[a]);
        let q = unit_from_angles::<f64>(2, &[a + b]);
        let e = if rel { 300.0 } else { 150.0 };
        let datum = shoot(&model, &d, &q0, &q, e, &ShootOptions::default()).unwrap();
        for k in [datum.k0, datum.k] {
            let shell = energy(&model, &q, &impulse(&model, &k).unwrap());
            prop_assert!((shell - e).abs() <= 1e-9 * e);
        }
        prop_assert!((datum.q - q).norm() <= 1e-10);
    }

    #[test]
    fn reversing_b_swaps_and_negates_the_boundary_velocities(a in 0.0..6.3f64, b in 0.5..5.8f64) {
        let model = bump_model(2, Mode::Relativistic, 0.01, 0.05);
        let reversed = model.with_reversed_magnetic();
        let d = ConvexDomain::unit_ball(2);
        let q0 = unit_from_angles::<f64>(2, &[a]);
        let q = unit_from_angles::<f64>(2, &[a + b]);
        let opts = ShootOptions::default();
        let fwd = shoot(&model, &d, &q0, &q, 300.0, &opts).unwrap();
        let back = shoot(&reversed, &d, &q, &q0, 300.0, &opts).unwrap();
        prop_assert!((fwd.k0 + back.k).norm() <= 1e-8 * fwd.k0.norm());
        prop_assert!((fwd.k + back.k0).norm() <= 1e-8 * fwd.k.norm());
        prop_assert!((fwd.s - back.s).abs() <= 1e-8 * fwd.s);
    }

    #[test]
    fn scattering_and_boundary_data_convert_losslessly(seed in any::<u64>(), rel in any::<bool>()) {
        let model = bump_model(2, mode(rel), 0.01, 0.05);
        let d = ConvexDomain::unit_ball(2);
        let e = if rel { 300.0 } else { 150.0 };
        let opts = FlowOptions::with_tolerances(1e-12, 1e-14);
        let (v, x) = sample_m_e(&model, &d, e, 1, seed).unwrap()[0];
        let sc = boundary_to_scattering(&model, &d, e, &v, &x, &opts).unwrap();
        let bd = scattering_to_boundary(&model, &d, &sc).unwrap();
        prop_assert!(d.chi(&bd.q0).abs() <= 1e-12 && d.chi(&bd.q).abs() <= 1e-10);
        prop_assert!((bd.k0 - v).norm() == 0.0);
        let again = shoot(&model, &d, &bd.q0, &bd.q, e, &ShootOptions::default()).unwrap();
        prop_assert!((again.k - bd.k).norm() <= 1e-7 * v.norm());
    }

    #[test]
    fn conditions_persist_above_the_threshold(factor in 1.0..200.0f64, amp in 0.005..0.05f64) {
        let model = bump_model(2, Mode::Relativistic, amp, 2.0 * amp);
        let inputs = ThresholdInputs::new(&model, &ConvexDomain::unit_ball(2), 32);
        let e_star = inputs.threshold(1e-4);
        let cond = check_conditions(&inputs.report(e_star * factor).unwrap());
        prop_assert!(cond.injectivity && cond.local_diffeomorphism && cond.surjectivity && cond.global);
    }

    #[test]
    fn model_configs_roundtrip_through_json(
        dim in 2usize..=3,
        c in 0.5..4.0f64,
        rel in any::<bool>(),
        amp in -1.0..1.0f64,
        radius in 0.1..2.0f64,
        b12 in -1.0..1.0f64,
    ) {
        let cfg = ModelConfig {
            dim,
            c,
            mode: mode(rel),
            potential: vec![PotentialConfig { center: vec![0.0; dim], profile: ProfileConfig::Bump { amplitude: amp, radius } }],
            magnetic: vec![MagneticConfig::Constant { b12, b13: 0.0, b23: 0.0 }],
        };
        let back: ModelConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(&back, &cfg);
        let m: FieldModel<f64> = back.build().unwrap();
        prop_assert_eq!(m.magnetic_field(&Vec3::zero()).0[0][1], b12);
    }
}
