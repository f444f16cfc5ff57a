use num_complex::Complex64;
use polaron_core::dynamics::{
    self_convergence, scaling_covariance_check, wrap_horizon, InitialField, IntegrateOptions, Perturbation,
    RunSetup, UnitTransform,
};
use polaron_core::{ComplexField, Dynamics, FourierGrid3, PotentialSpec, Scheme, SystemParams};
use proptest::prelude::*;

fn small(v0: [f64; 3]) -> RunSetup {
    RunSetup::traveling(16, 12.0, v0, Perturbation::default(), 0.05)
}

fn diff3(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

#[test]
fn rejects_bad_time_step() {
    let s = small([0.0, 0.0, 0.4]).with_dt(0.2);
    assert!(s.build().is_err());
    let s = small([0.0, 0.0, 0.4]);
    let (d, s0) = s.build().unwrap();
    assert!(d.integrate(&s0, 0.123, &IntegrateOptions::default()).is_err());
}

#[test]
fn supersonic_traveling_start_is_rejected() {
    assert!(small([0.0, 0.0, 1.1]).build().is_err());
}

#[test]
fn conservation_on_small_box() {
    let tr = small([0.0, 0.0, 0.4]).run(4.0, &IntegrateOptions::default()).unwrap();
    assert!(tr.max_energy_drift() < 1e-6, "{}", tr.max_energy_drift());
    assert!(tr.max_momentum_drift() < 1e-6, "{}", tr.max_momentum_drift());
}

#[test]
fn runs_are_deterministic() {
    let a = small([0.1, 0.0, 0.3]).run(1.0, &IntegrateOptions::default()).unwrap();
    let b = small([0.1, 0.0, 0.3]).run(1.0, &IntegrateOptions::default()).unwrap();
    assert_eq!(a.samples, b.samples);
    assert_eq!(a.final_state.b.data(), b.final_state.b.data());
}

#[test]
fn time_translation() {
    let setup = small([0.0, 0.0, 0.4]);
    let (d, s0) = setup.build().unwrap();
    let opts = IntegrateOptions::default();
    let direct = d.integrate(&s0, 2.0, &opts).unwrap().final_state;
    let mid = d.integrate(&s0, 1.0, &opts).unwrap().final_state;
    let split = d.integrate(&mid, 1.0, &opts).unwrap().final_state;
    assert!(diff3(direct.x, split.x) < 1e-12);
    assert!(diff3(direct.p, split.p) < 1e-12);
}

#[test]
fn lattice_translation_covariance() {
    let base = small([0.0, 0.2, 0.3]);
    let dx = 12.0 / 16.0;
    let a = [2.0 * dx, -dx, 3.0 * dx];
    let mut moved = base.clone();
    moved.x0 = a;
    let opts = IntegrateOptions::default();
    let t0 = base.run(2.0, &opts).unwrap();
    let t1 = moved.run(2.0, &opts).unwrap();
    for (s0, s1) in t0.samples.iter().zip(&t1.samples) {
        let shifted = [s0.x[0] + a[0], s0.x[1] + a[1], s0.x[2] + a[2]];
        assert!(diff3(shifted, s1.x) < 1e-12);
        assert!(diff3(s0.p, s1.p) < 1e-12);
    }
}

#[test]
fn free_field_is_unitary() {
    let g = FourierGrid3::new(16, 10.0).unwrap();
    let d = Dynamics::new(&PotentialSpec::gaussian(0.0, 1.0), &g, SystemParams::default(), 0.05, Scheme::Hermite4)
        .unwrap();
    let beta = ComplexField::from_fn(&g, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        Complex64::new((-r2 / 2.0).exp(), 0.5 * x[0] * (-r2 / 3.0).exp())
    });
    let (s0, _) = d.init_state([0.0; 3], [0.1, 0.0, 0.0], &InitialField::Given(beta)).unwrap();
    let tr = d.integrate(&s0, 2.0, &IntegrateOptions::default()).unwrap();
    let n0 = tr.samples[0].field_norm;
    for s in &tr.samples {
        assert!((s.field_norm - n0).abs() < 1e-12 * n0);
        assert!(diff3(s.p, [0.1, 0.0, 0.0]) < 1e-15);
    }
}

#[test]
fn inertial_start_keeps_constant_velocity() {
    let mut s = small([0.0, 0.0, 0.5]);
    s.perturbation.amplitude = 0.0;
    let tr = s.run(2.0, &IntegrateOptions::default()).unwrap();
    for smp in &tr.samples {
        assert!(diff3(smp.p, [0.0, 0.0, 0.5]) < 1e-10);
        assert!((smp.x[2] - 0.5 * smp.t).abs() < 1e-10);
    }
}

#[test]
fn verlet_is_second_order() {
    let mut s = small([0.0, 0.0, 0.4]);
    s.scheme = Scheme::Verlet2;
    s.perturbation.amplitude = 0.2;
    let r = self_convergence(&s.with_dt(0.1), 2.0).unwrap();
    assert!((r.order - 2.0).abs() <= 0.4, "{r:?}");
}

#[test]
fn hermite_is_higher_order() {
    let mut s = small([0.0, 0.0, 0.4]);
    s.perturbation.amplitude = 0.2;
    let r = self_convergence(&s.with_dt(0.1), 2.0).unwrap();
    assert!(r.order > 3.0, "{r:?}");
}

#[test]
fn unit_transforms_are_covariant() {
    let s = small([0.0, 0.0, 0.4]).with_dt(0.025);
    for which in [UnitTransform::D, UnitTransform::E] {
        let r = scaling_covariance_check(&s, which, 2.0, 1.0).unwrap();
        assert!(r.pass, "{r:?}");
    }
    assert!(scaling_covariance_check(&s, UnitTransform::D, 3.0, 1.0).is_err());
}

#[test]
fn wrap_horizon_formula() {
    assert!((wrap_horizon(64.0, 0.4, 1.0) - 0.4 * 64.0 / 1.4).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn energy_bound_holds(amp in 0.0f64..0.3, vz in 0.0f64..0.7) {
        let mut s = small([0.0, 0.0, vz]);
        s.perturbation.amplitude = amp;
        let (d, s0) = s.build().unwrap();
        let tr = d.integrate(&s0, 1.0, &IntegrateOptions::default()).unwrap();
        let h0 = tr.samples[0].energy;
        let bound = h0 + 0.5 * d.w_norm().powi(2);
        prop_assert!(d.energy_bound_terms(&tr.final_state) <= bound * (1.0 + 1e-9));
    }
}
