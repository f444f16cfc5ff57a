use num_complex::Complex64;
use polaron_core::potentials::grid_spectrum;
use polaron_core::traveling_wave::{
    fit_spatial_decay, regime, residual, solve_profile, solve_profile_with, supersonic_scan,
};
use polaron_core::{ComplexField, FourierGrid3, PotentialSpec, Regime};
use proptest::prelude::*;

fn grid() -> FourierGrid3 {
    FourierGrid3::new(16, 12.0).unwrap()
}

#[test]
fn regime_classification() {
    assert_eq!(regime([0.0, 0.0, 0.5]), Regime::Subsonic);
    assert_eq!(regime([0.0, 0.6, 0.8]), Regime::Sonic);
    assert_eq!(regime([0.0, 0.0, 1.2]), Regime::Supersonic);
    assert!(solve_profile([0.0, 0.0, 1.2], &PotentialSpec::default(), &grid()).is_err());
}

#[test]
fn spectral_identity_holds_nodewise() {
    let g = grid();
    let w = grid_spectrum(&PotentialSpec::default(), &g).unwrap();
    for v in [[0.0, 0.0, 0.5], [0.3, -0.2, 0.1], [0.0, 0.0, 1.0]] {
        let p = solve_profile_with(v, &w).unwrap();
        let mut worst: f64 = 0.0;
        for idx in 1..g.len() {
            if g.is_nyquist_plane(idx) {
                continue;
            }
            let x = g.xi_at(idx);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let h = r * (1.0 + r * r).sqrt() - (v[0] * x[0] + v[1] * x[1] + v[2] * x[2]);
            if h.abs() < 1e-12 {
                continue;
            }
            let lhs = p.g.data()[idx] * h;
            let rhs = -w.data()[idx];
            worst = worst.max((lhs - rhs).norm() / w.data()[idx].norm().max(1e-300));
        }
        assert!(worst < 1e-10, "v={v:?}: {worst}");
        assert!(residual(&p, &w).unwrap() < 1e-8);
    }
}

#[test]
fn static_profile_is_real() {
    let p = solve_profile([0.0; 3], &PotentialSpec::default(), &grid()).unwrap();
    assert!(p.gamma_im().l2_norm() < 1e-10);
    assert!(p.gamma_re().l2_norm() > 1e-3);
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let a = solve_profile([0.1, 0.2, 0.3], &PotentialSpec::default(), &grid()).unwrap();
    let b = solve_profile([0.1, 0.2, 0.3], &PotentialSpec::default(), &grid()).unwrap();
    assert_eq!(a.g.data(), b.g.data());
}

/// Applies an axis permutation and sign flips to spectral samples:
/// `out(ξ) = f(R^{-1} ξ)` with `(Rξ)_a = s_a ξ_{perm[a]}`.
fn rotate(f: &ComplexField, perm: [usize; 3], sign: [i32; 3]) -> ComplexField {
    let g = f.grid();
    let n = g.n();
    let mut out = f.clone();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let src = [i, j, k];
                let mut dst = [0usize; 3];
                for a in 0..3 {
                    let c = src[perm[a]];
                    dst[a] = if sign[a] < 0 { (n - c) % n } else { c };
                }
                out.data_mut()[g.index(dst[0], dst[1], dst[2])] = f.data()[g.index(i, j, k)];
            }
        }
    }
    out
}

fn rotate_v(v: [f64; 3], perm: [usize; 3], sign: [i32; 3]) -> [f64; 3] {
    [0, 1, 2].map(|a| sign[a] as f64 * v[perm[a]])
}

#[test]
fn rotation_covariance() {
    let g = grid();
    let spec = PotentialSpec::default();
    let v = [0.3, 0.0, 0.4];
    let base = solve_profile(v, &spec, &g).unwrap();
    for (perm, sign) in [
        ([1, 0, 2], [1, 1, 1]),
        ([2, 0, 1], [1, 1, 1]),
        ([0, 1, 2], [-1, 1, 1]),
        ([2, 1, 0], [1, -1, -1]),
    ] {
        let rv = rotate_v(v, perm, sign);
        let p = solve_profile(rv, &spec, &g).unwrap();
        let expect = rotate(&base.g, perm, sign);
        let mut worst: f64 = 0.0;
        for idx in 0..g.len() {
            if g.is_nyquist_plane(idx) {
                continue;
            }
            worst = worst.max((p.g.data()[idx] - expect.data()[idx]).norm());
        }
        assert!(worst < 1e-12 * base.g.max_abs(), "{perm:?} {sign:?}: {worst}");
    }
}

#[test]
fn spatial_fit_recovers_synthetic_power() {
    let g = FourierGrid3::new(64, 64.0).unwrap();
    let f = ComplexField::from_fn(&g, |x| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        Complex64::new((1.0 + r * r).powf(-1.5), 0.0)
    });
    let fit = fit_spatial_decay(&f, [3.0, 24.0]).unwrap();
    assert!((fit.exponent + 3.0).abs() < 0.05, "{fit:?}");
    assert!(fit.goodness > 0.99);
    assert!(fit_spatial_decay(&f, [3.0, 40.0]).is_err());
}

#[test]
fn supersonic_norm_grows_and_subsonic_converges() {
    let spec = PotentialSpec::default();
    let fast = supersonic_scan([0.0, 0.0, 1.5], &spec, &[32, 48, 64], 1.0).unwrap();
    assert!(fast.strictly_increasing);
    let slow = supersonic_scan([0.0, 0.0, 0.5], &spec, &[32, 48, 64], 1.0).unwrap();
    assert!(slow.ratios.iter().all(|r| (r - 1.0).abs() < 0.05), "{:?}", slow.ratios);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn residual_small_for_subsonic(vx in -0.6f64..0.6, vy in -0.5f64..0.5, vz in -0.5f64..0.5) {
        let g = FourierGrid3::new(8, 8.0).unwrap();
        let w = grid_spectrum(&PotentialSpec::default(), &g).unwrap();
        let p = solve_profile_with([vx, vy, vz], &w).unwrap();
        prop_assert!(residual(&p, &w).unwrap() < 1e-8);
    }
}
