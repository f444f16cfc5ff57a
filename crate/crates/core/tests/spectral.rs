use std::f64::consts::PI;

use num_complex::Complex64;
use polaron_core::potentials::{check_hypotheses, eval_w, find_w_hat_root, weighted_norm};
use polaron_core::spectral_core::{
    apply_multiplier, apply_ur, apply_ur_inv, bernstein_ratio, lp_project, psi_k, resolvable_bands,
    verify_symbol_class, Origin,
};
use polaron_core::{ComplexField, FourierGrid3, PotentialSpec, Representation, SymbolFn};
use proptest::prelude::*;

fn random_field(grid: &FourierGrid3, seed: u64) -> ComplexField {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let data = (0..grid.len()).map(|_| Complex64::new(next(), next())).collect();
    ComplexField::from_data(grid, data, Representation::Physical).unwrap()
}

fn max_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn grid_rejects_bad_sizes() {
    assert!(FourierGrid3::new(7, 1.0).is_err());
    assert!(FourierGrid3::new(6, 1.0).is_err());
    assert!(FourierGrid3::new(16, 0.0).is_err());
    assert!(FourierGrid3::new(16, -2.0).is_err());
}

#[test]
fn grid_tables() {
    let g = FourierGrid3::new(16, 10.0).unwrap();
    let xi = g.wavenumbers();
    let dk = 2.0 * PI / 10.0;
    assert_eq!(xi[0], 0.0);
    assert!((xi[1] - dk).abs() < 1e-15);
    assert!((xi[8] + 8.0 * dk).abs() < 1e-13);
    for k in 1..8 {
        assert_eq!(xi[k], -xi[16 - k]);
    }
    assert!((g.cell_volume() * 16f64.powi(3) - 1000.0).abs() < 1e-10);
}

#[test]
fn gaussian_transform_matches_closed_form() {
    let g = FourierGrid3::new(32, 16.0).unwrap();
    let w = eval_w(&PotentialSpec::gaussian(1.3, 0.9), &g).unwrap().into_spectral();
    let mut worst: f64 = 0.0;
    for idx in 0..g.len() {
        let x = g.xi_at(idx);
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        if r2 > 25.0 {
            continue;
        }
        let exact = 1.3 * (2.0 * PI).powf(1.5) * 0.9f64.powi(3) * (-0.5 * 0.81 * r2).exp();
        worst = worst.max((w.data()[idx] - exact).norm());
    }
    let peak = 1.3 * (2.0 * PI).powf(1.5) * 0.9f64.powi(3);
    assert!(worst < 1e-10 * peak, "{worst}");
}

#[test]
fn translation_by_lattice_vector_is_cyclic_shift() {
    let g = FourierGrid3::new(16, 8.0).unwrap();
    let f = random_field(&g, 3);
    let dx = g.dx();
    let t = f.translate([2.0 * dx, -3.0 * dx, 5.0 * dx]);
    let n = 16;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let src = g.index((i + n - 2) % n, (j + 3) % n, (k + n - 5) % n);
                worst = worst.max((t.data()[g.index(i, j, k)] - f.data()[src]).norm());
            }
        }
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn ur_roundtrip_on_mean_zero_fields() {
    let g = FourierGrid3::new(16, 8.0).unwrap();
    let mut f = random_field(&g, 11).into_spectral();
    f.data_mut()[0] = Complex64::new(0.0, 0.0);
    let f = f.into_physical();
    let back = apply_ur_inv(&apply_ur(&f));
    assert!(max_diff(&back, &f) < 1e-12 * f.max_abs().max(1.0));
}

#[test]
fn bernstein_spread_within_factor_two() {
    let g = FourierGrid3::new(64, 32.0).unwrap();
    let bands = resolvable_bands(&g);
    assert!(bands.len() >= 2);
    for b in [1.0, 2.0] {
        let mut ratios = Vec::new();
        for &k in &bands {
            let c = 2f64.powi(k);
            let f = ComplexField::from_symbol(&g, |x| {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                Complex64::new(psi_k(r, k) * (1.0 + 0.3 * (x[0] / c).sin()), 0.0)
            })
            .into_physical();
            ratios.push(bernstein_ratio(&f, k, b).unwrap());
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo <= 2.0, "b={b}: {ratios:?}");
    }
}

#[test]
fn lp_rejects_unresolvable_band() {
    let g = FourierGrid3::new(16, 8.0).unwrap();
    let f = random_field(&g, 1);
    assert!(lp_project(&f, 10).is_err());
    assert!(lp_project(&f, -10).is_err());
}

#[test]
fn symbol_class_examples() {
    assert!(verify_symbol_class(&SymbolFn::identity(), 0.0, 0.0).pass);
    assert!(verify_symbol_class(&SymbolFn::u_power(1.0), 1.0, 0.0).pass);
    assert!(verify_symbol_class(&SymbolFn::h(), 1.0, 2.0).pass);
    assert!(!verify_symbol_class(&SymbolFn::log_abs(), 0.0, 0.0).pass);
    assert!(!verify_symbol_class(&SymbolFn::h(), 1.0, 1.0).pass);
}

#[test]
fn non_finite_symbol_is_rejected() {
    let g = FourierGrid3::new(8, 4.0).unwrap();
    let f = random_field(&g, 2);
    let bad = SymbolFn::real("bad", |_| f64::NAN, Origin::Excluded);
    assert!(apply_multiplier(&f, &bad).is_err());
}

#[test]
fn hypotheses_default_and_engineered_root() {
    let g = FourierGrid3::new(16, 16.0).unwrap();
    let ok = check_hypotheses(&PotentialSpec::default(), [0.0, 0.0, 0.5], &g).unwrap();
    assert!(ok.all_pass());
    let fast = check_hypotheses(&PotentialSpec::default(), [0.0, 0.0, 1.2], &g).unwrap();
    assert!(!fast.subsonic);
    let dog = PotentialSpec::gaussian_difference();
    let rep = check_hypotheses(&dog, [0.0, 0.0, 0.5], &g).unwrap();
    assert!(!rep.nonvanishing);
    // 1·e^{-r²/2} = 2·(1/8)·e^{-r²/8}  ⇒  r² = (8/3) ln 4
    let exact = (8.0 / 3.0 * 4f64.ln()).sqrt();
    let root = find_w_hat_root(&dog, 10.0).unwrap();
    assert!((root - exact).abs() < 1e-10, "{root} vs {exact}");
}

#[test]
fn weighted_norm_monotone_in_resolution() {
    let spec = PotentialSpec::gaussian(1.0, 0.5);
    let mut last = 0.0;
    for n in [8, 16, 32] {
        let g = FourierGrid3::new(n, n as f64 * 0.5).unwrap();
        let v = weighted_norm(&eval_w(&spec, &g).unwrap(), 2);
        assert!(v >= last);
        last = v;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn parseval_roundtrip(seed in any::<u64>(), l in 2.0f64..40.0) {
        let g = FourierGrid3::new(8, l).unwrap();
        let f = random_field(&g, seed);
        let s = f.clone().into_spectral();
        prop_assert!((s.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
        let back = s.into_physical();
        prop_assert!(max_diff(&back, &f) <= 1e-12 * f.max_abs());
    }

    #[test]
    fn propagator_is_unitary(seed in any::<u64>(), t in -50.0f64..50.0) {
        let g = FourierGrid3::new(8, 6.0).unwrap();
        let f = random_field(&g, seed);
        let u = apply_multiplier(&f, &SymbolFn::propagator(t)).unwrap();
        prop_assert!((u.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn multipliers_are_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = FourierGrid3::new(8, 5.0).unwrap();
        let f = random_field(&g, seed);
        let h = random_field(&g, seed ^ 0x9e37);
        let alpha = Complex64::new(a, b);
        for m in [SymbolFn::h_v([0.0, 0.3, 0.4]), SymbolFn::u_power(-1.0), SymbolFn::propagator(a)] {
            let lhs = apply_multiplier(&f.clone().scale(alpha).axpy(Complex64::new(1.0, 0.0), &h).unwrap(), &m).unwrap();
            let rhs = apply_multiplier(&f, &m).unwrap().scale(alpha)
                .axpy(Complex64::new(1.0, 0.0), &apply_multiplier(&h, &m).unwrap()).unwrap();
            let scale = lhs.max_abs().max(1.0);
            prop_assert!(max_diff(&lhs, &rhs) <= 1e-12 * scale);
        }
    }

    #[test]
    fn real_physical_fields_stay_real(seed in any::<u64>()) {
        let g = FourierGrid3::new(8, 4.0).unwrap();
        let f = random_field(&g, seed).real_part();
        let back = f.clone().into_spectral().into_physical();
        prop_assert!(back.max_abs_im() < 1e-10 * back.l2_norm());
    }
}
