//! Acceptance suite. Each test prints one `PASS`/`FAIL` line to stderr
//! (bypassing output capture) and then asserts the same verdict.
//!
//! Artifacts are kept under `$CARGO_TARGET_TMPDIR/acceptance/`.

use std::io::Write;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use polaron_core::dynamics::{
    scaling_covariance_check, self_convergence, IntegrateOptions, Perturbation, RunSetup, UnitTransform,
};
use polaron_core::memory_kernel::compute_r12;
use polaron_core::potentials::grid_spectrum;
use polaron_core::traveling_wave::{fit_spatial_decay, solve_profile_with};
use polaron_core::{ComplexField, FourierGrid3, PotentialSpec, Scheme};
use polaron_expcli::io::CheckRecord;
use polaron_expcli::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentOutput};

fn out_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name)
}

/// Prints the verdict line and fails the test on `FAIL`.
fn verdict(id: u32, title: &str, pass: bool, detail: &str, elapsed: Duration, budget_s: u64) {
    let line = format!(
        "{} criterion {id:02} {title}: {detail} [{:.1} s, budget {budget_s} s]\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} failed: {detail}");
}

fn get<'a>(out: &'a ExperimentOutput, name: &str) -> &'a CheckRecord {
    out.check(name)
        .unwrap_or_else(|| panic!("missing check `{name}` in {:?}", out.kind))
}

/// Collects `name=value` entries and the conjunction of their verdicts.
#[derive(Default)]
struct Summary {
    parts: Vec<String>,
    pass: bool,
    started: bool,
}

impl Summary {
    fn push(&mut self, name: &str, value: String, ok: bool) {
        self.parts.push(format!("{name}={value}{}", if ok { "" } else { " (x)" }));
        self.pass = if self.started { self.pass && ok } else { ok };
        self.started = true;
    }

    fn check(&mut self, c: &CheckRecord) {
        let v = c.value.map(|v| format!("{v:.3e}")).unwrap_or_else(|| c.pass.to_string());
        self.push(&c.name, v, c.pass);
    }

    fn text(&self) -> String {
        self.parts.join(", ")
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed())
}

fn experiment(name: &str, json: &str, kind: ExperimentKind) -> (ExperimentOutput, Duration) {
    let cfg = ExperimentConfig::from_json(json).unwrap();
    timed(|| run_experiment(&cfg, kind, &out_dir(name), None).unwrap())
}

fn kernel_run() -> &'static (ExperimentOutput, Duration) {
    static CELL: OnceLock<(ExperimentOutput, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        experiment(
            "kernel",
            r#"{"velocity": [0, 0, 0.4], "kernel": {"dt": 0.04, "t_max": 60, "fit_window": [5, 40]}}"#,
            ExperimentKind::Kernel,
        )
    })
}

fn dispersive_run() -> &'static (ExperimentOutput, Duration) {
    static CELL: OnceLock<(ExperimentOutput, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        experiment(
            "dispersive",
            r#"{"grid": {"n": 64, "l": 64}, "velocity": [0, 0, 0.5],
                "dispersive": {"band": 0, "sigmas": [0, 1], "t_window": [1, 12],
                               "oscillatory_window": [5, 50]}}"#,
            ExperimentKind::Dispersive,
        )
    })
}

#[test]
fn criterion_01_conservation() {
    let (out, el) = experiment(
        "simulate",
        r#"{"grid": {"n": 64, "l": 32}, "velocity": [0, 0, 0.4],
            "perturbation": {"amplitude": 0.01},
            "integrator": {"dt": 0.05, "t_end": 20}}"#,
        ExperimentKind::Simulate,
    );
    let mut s = Summary::default();
    s.check(get(&out, "energy_drift"));
    s.check(get(&out, "momentum_drift"));
    verdict(1, "conservation", s.pass, &s.text(), el, 300);
}

#[test]
fn criterion_02_traveling_wave_residual() {
    let (out, el) = experiment(
        "travel",
        r#"{"grid": {"n": 64, "l": 32}, "velocity": [0, 0, 0.5],
            "travel": {"decay_window": [2, 12], "inertial_steps": 100}}"#,
        ExperimentKind::Travel,
    );
    let mut s = Summary::default();
    s.check(get(&out, "profile_residual"));
    s.check(get(&out, "inertial_force_over_w_norm_sq"));
    verdict(2, "traveling-wave residual", s.pass, &s.text(), el, 60);
}

#[test]
fn criterion_03_spatial_decay() {
    let (s, el) = timed(|| {
        let grid = FourierGrid3::new(128, 64.0).unwrap();
        let w = grid_spectrum(&PotentialSpec::default(), &grid).unwrap();
        let win = [3.0, 24.0];
        let mut s = Summary::default();
        let cases = [
            ("subsonic", [0.0, 0.0, 0.5], [-3.4, -2.6], [-2.4, -1.6]),
            ("sonic", [0.0, 0.0, 1.0], [-1.4, -0.6], [-1.0, -0.4]),
        ];
        for (tag, v, re_band, im_band) in cases {
            let p = solve_profile_with(v, &w).unwrap();
            for (part, f, band) in [("re", p.gamma_re(), re_band), ("im", p.gamma_im(), im_band)] {
                let fit = fit_spatial_decay(&f, win).unwrap();
                let ok = (band[0]..=band[1]).contains(&fit.exponent) && fit.reliable();
                s.push(
                    &format!("{tag}_{part}"),
                    format!("{:.3} (R2 {:.3})", fit.exponent, fit.goodness),
                    ok,
                );
            }
        }
        s
    });
    verdict(3, "spatial decay", s.pass, &s.text(), el, 300);
}

#[test]
fn criterion_04_supersonic_divergence() {
    let (out, el) = experiment(
        "supersonic",
        r#"{"velocity": [0, 0, 1],
            "supersonic": {"speed": 1.5, "control_speed": 0.5, "resolutions": [32, 48, 64, 96], "dx": 1}}"#,
        ExperimentKind::Supersonic,
    );
    let mut s = Summary::default();
    s.check(get(&out, "supersonic_strictly_increasing"));
    s.check(get(&out, "supersonic_growth"));
    s.check(get(&out, "subsonic_control_ratio_deviation"));
    verdict(4, "supersonic divergence", s.pass, &s.text(), el, 300);
}

#[test]
fn criterion_05_memory_kernel() {
    let (out, el) = kernel_run();
    let mut s = Summary::default();
    for name in ["m_offdiag_ratio", "m_symmetry_defect", "m33_decay_exponent", "mhat_tail_exponent"] {
        s.check(get(out, name));
    }
    verdict(5, "memory kernel", s.pass, &s.text(), *el, 600);
}

#[test]
fn criterion_06_invertibility() {
    let (out, el) = kernel_run();
    let mut s = Summary::default();
    s.check(get(out, "mhat0_positive_definite"));
    for c in out.checks.iter().filter(|c| c.name.starts_with("im_mhat_definite_w")) {
        s.check(c);
    }
    s.check(get(out, "min_abs_det_one_plus_mhat"));
    verdict(6, "invertibility certificate", s.pass, &s.text(), *el, 120);
}

#[test]
fn criterion_07_resolvent_kernel() {
    let (out, el) = kernel_run();
    let mut s = Summary::default();
    for name in ["k_causality_over_peak", "k_decay_exponent", "volterra_direct_vs_resolvent"] {
        s.check(get(out, name));
    }
    verdict(7, "resolvent kernel", s.pass, &s.text(), *el, 300);
}

#[test]
fn criterion_08_stability() {
    let (out, el) = experiment(
        "stability",
        r#"{"grid": {"n": 128, "l": 64}, "velocity": [0, 0, 0.4],
            "perturbation": {"amplitude": 0.01}, "integrator": {"dt": 0.05},
            "stability": {"control": true}}"#,
        ExperimentKind::Stability,
    );
    let mut s = Summary::default();
    for name in [
        "v_infty_over_sound",
        "velocity_decay_exponent",
        "re_delta_decay_exponent",
        "im_delta_decay_exponent",
        "control_velocity_variation",
    ] {
        s.check(get(&out, name));
    }
    verdict(8, "stability", s.pass, &s.text(), el, 900);
}

#[test]
fn criterion_09_dispersive() {
    let (out, el) = dispersive_run();
    let mut s = Summary::default();
    for sigma in ["0", "1"] {
        for what in ["max_over_median", "min_over_median", "unitarity"] {
            s.check(get(out, &format!("dispersive_sigma{sigma}_{what}")));
        }
    }
    verdict(9, "dispersive estimates", s.pass, &s.text(), *el, 180);
}

#[test]
fn criterion_10_oscillatory_integrals() {
    let (out, el) = dispersive_run();
    let mut s = Summary::default();
    s.check(get(out, "oscillatory_l1_exponent"));
    s.check(get(out, "even_mode_exponent"));
    verdict(10, "oscillatory-integral rates", s.pass, &s.text(), *el, 180);
}

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

fn rotation_defect() -> f64 {
    let g = FourierGrid3::new(64, 32.0).unwrap();
    let w = grid_spectrum(&PotentialSpec::default(), &g).unwrap();
    let v = [0.3, 0.0, 0.4];
    let base = solve_profile_with(v, &w).unwrap();
    let mut worst: f64 = 0.0;
    for (perm, sign) in [
        ([1, 0, 2], [1, 1, 1]),
        ([2, 0, 1], [1, 1, 1]),
        ([0, 1, 2], [-1, 1, 1]),
        ([2, 1, 0], [1, -1, -1]),
    ] {
        let rv = [0, 1, 2].map(|a| sign[a] as f64 * v[perm[a]]);
        let p = solve_profile_with(rv, &w).unwrap();
        let expect = rotate(&base.g, perm, sign);
        for idx in 0..g.len() {
            if !g.is_nyquist_plane(idx) {
                worst = worst.max((p.g.data()[idx] - expect.data()[idx]).norm());
            }
        }
    }
    worst / base.g.max_abs()
}

fn remainder_norms(eps: f64, t: f64) -> (f64, f64) {
    let v0 = [0.0, 0.0, 0.4];
    let pert = Perturbation {
        amplitude: eps,
        ..Default::default()
    };
    let (d, s0) = RunSetup::traveling(64, 32.0, v0, pert, 0.05).build().unwrap();
    let traj = d.integrate(&s0, t, &IntegrateOptions::default()).unwrap();
    let r = compute_r12(&d, &traj, v0, &[t]).unwrap();
    let nrm = |a: [f64; 3]| (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    (nrm(r.samples[0].r1), nrm(r.samples[0].r2))
}

#[test]
fn criterion_11_structure_suite() {
    let (s, el) = timed(|| {
        let mut s = Summary::default();
        let base = RunSetup::traveling(32, 16.0, [0.0, 0.0, 0.4], Perturbation::default(), 0.025);
        for (tag, which) in [("d", UnitTransform::D), ("e", UnitTransform::E)] {
            let r = scaling_covariance_check(&base, which, 2.0, 5.0).unwrap();
            s.push(
                &format!("covariance_{tag}"),
                format!("{:.2e}/{:.2e}", r.max_deviation, r.self_convergence_error),
                r.pass,
            );
        }

        let mut verlet = base.with_dt(0.1);
        verlet.scheme = Scheme::Verlet2;
        verlet.perturbation.amplitude = 0.2;
        let conv = self_convergence(&verlet, 2.0).unwrap();
        s.push("verlet_order", format!("{:.3}", conv.order), (conv.order - 2.0).abs() <= 0.4);

        let rot = rotation_defect();
        s.push("rotation_defect", format!("{rot:.2e}"), rot < 1e-12);

        let (a1, a2) = remainder_norms(0.01, 5.0);
        let (b1, b2) = remainder_norms(0.02, 5.0);
        for (tag, ratio) in [("r1_ratio", b1 / a1), ("r2_ratio", b2 / a2)] {
            s.push(tag, format!("{ratio:.3}"), (ratio / 4.0 - 1.0).abs() <= 0.3);
        }
        s
    });
    verdict(11, "structure suite", s.pass, &s.text(), el, 600);
}
