//! Canned experiments. Each writes its artifacts into an output directory
//! together with `report.ndjson`: a provenance line followed by one record
//! per check, and a failure record if an operation aborted.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use polaron_core::dynamics::{IntegrateOptions, Perturbation, Trajectory};
use polaron_core::memory_kernel::{
    check_invertibility, compute_k, compute_m, compute_m_auto, dispersive_decay, even_mode_decay,
    fourier_m, invertibility_record, mhat_closed_form, mhat_tail_fit, oscillatory_decay, solve_volterra,
    MemoryKernel, SphericalQuadrature,
};
use polaron_core::potentials::grid_spectrum;
use polaron_core::traveling_wave::{
    fit_spatial_decay, shell_max, solve_profile_with, supersonic_scan, Regime,
};
use polaron_core::{fit_temporal_decay, ComplexField, DecayFit, FourierGrid3, SymbolFn};

use crate::config::{ExperimentConfig, ExperimentKind, UnitMap};
use crate::error::CliError;
use crate::io::{
    encode_snapshot, ndjson, table_csv, trajectory_csv, write_atomic, CheckRecord, FailureRecord, Provenance,
    TrajectoryRow,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Result of one experiment.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub kind: ExperimentKind,
    pub dir: PathBuf,
    pub checks: Vec<CheckRecord>,
    pub files: Vec<PathBuf>,
}

impl ExperimentOutput {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Reporter {
    dir: PathBuf,
    provenance: Provenance,
    checks: Vec<CheckRecord>,
    files: Vec<PathBuf>,
}

impl Reporter {
    fn file(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let p = self.dir.join(name);
        write_atomic(&p, bytes)?;
        self.files.push(p);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        self.file(name, s.as_bytes())
    }

    fn check(&mut self, c: CheckRecord) {
        self.checks.push(c);
    }

    fn info(&mut self, name: &str, value: f64) {
        self.checks.push(CheckRecord::new(name, value, "report", true));
    }

    fn finish(&mut self, failure: Option<FailureRecord>) -> Result<(), CliError> {
        let mut lines = ndjson(&[&self.provenance])?;
        lines.push_str(&ndjson(&self.checks)?);
        if let Some(f) = failure {
            lines.push_str(&ndjson(&[f])?);
        }
        let p = self.dir.join("report.ndjson");
        write_atomic(&p, lines.as_bytes())?;
        self.files.push(p);
        Ok(())
    }
}

/// Validates `cfg` and runs one experiment into `out_dir`. On failure the
/// partial report (with a failure record) is still written.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    out_dir: &Path,
    seed: Option<u64>,
) -> Result<ExperimentOutput, CliError> {
    cfg.validate(kind)?;
    let mut resolved = cfg.clone();
    resolved.kind = Some(kind);
    let mut config = serde_json::to_value(&resolved).map_err(|e| CliError::Io(e.to_string()))?;
    if let (Some(s), serde_json::Value::Object(m)) = (seed, &mut config) {
        m.insert("seed".into(), serde_json::json!(s));
    }
    let mut rep = Reporter {
        dir: out_dir.to_path_buf(),
        provenance: Provenance {
            name: "provenance".into(),
            version: format!("polaron {VERSION}"),
            kind: kind.name().into(),
            config,
        },
        checks: Vec::new(),
        files: Vec::new(),
    };
    std::fs::create_dir_all(out_dir)?;
    let result = match kind {
        ExperimentKind::Travel => travel(cfg, &mut rep),
        ExperimentKind::Simulate => simulate(cfg, &mut rep, false).map(|_| ()),
        ExperimentKind::Stability => stability(cfg, &mut rep).map(|_| ()),
        ExperimentKind::Kernel => kernel(cfg, &mut rep),
        ExperimentKind::Dispersive => dispersive(cfg, &mut rep),
        ExperimentKind::Supersonic => supersonic(cfg, &mut rep),
        ExperimentKind::Sweep => sweep(cfg, &mut rep, seed),
    };
    match result {
        Ok(()) => {
            rep.finish(None)?;
            Ok(ExperimentOutput {
                kind,
                dir: rep.dir,
                checks: rep.checks,
                files: rep.files,
            })
        }
        Err(e) => {
            rep.finish(Some(FailureRecord {
                name: "failure".into(),
                class: e.class().into(),
                error: e.to_string(),
            }))?;
            Err(e)
        }
    }
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn fit_records(rep: &mut Reporter, name: &str, fit: &DecayFit, lo: f64, hi: f64) {
    rep.check(CheckRecord::within(&format!("{name}_exponent"), fit.exponent, lo, hi).with_window(fit.window));
    rep.check(CheckRecord::new(
        &format!("{name}_goodness"),
        fit.goodness,
        ">= 0.9",
        fit.reliable(),
    ));
}

fn travel(cfg: &ExperimentConfig, rep: &mut Reporter) -> Result<(), CliError> {
    let grid = FourierGrid3::new(cfg.grid.n, cfg.grid.l)?;
    let w_hat = grid_spectrum(&cfg.potential, &grid)?;
    let v = cfg.velocity;
    let profile = solve_profile_with(v, &w_hat)?;
    let res = polaron_core::traveling_wave::residual(&profile, &w_hat)?;
    rep.check(CheckRecord::below("profile_residual", res, 1e-8));
    rep.info("excluded_nodes", profile.excluded_nodes as f64);
    rep.info("min_abs_h_v", profile.min_abs_h_v);
    let re = profile.gamma_re();
    let im = profile.gamma_im();
    let im_norm = im.l2_norm();
    if norm3(v) == 0.0 {
        rep.check(CheckRecord::below("im_gamma_norm", im_norm, 1e-10));
    } else {
        rep.info("im_gamma_norm", im_norm);
    }
    let win = cfg.travel.decay_window;
    let fre = fit_spatial_decay(&re, win)?;
    let fim = fit_spatial_decay(&im, win);
    match profile.regime {
        Regime::Subsonic => {
            fit_records(rep, "re_gamma_decay", &fre, -3.4, -2.6);
            if let Ok(f) = &fim {
                fit_records(rep, "im_gamma_decay", f, -2.4, -1.6);
            }
        }
        Regime::Sonic => {
            fit_records(rep, "re_gamma_decay", &fre, -1.4, -0.6);
            if let Ok(f) = &fim {
                fit_records(rep, "im_gamma_decay", f, -1.0, -0.4);
            }
        }
        Regime::Supersonic => unreachable!("validated"),
    }
    if profile.regime == Regime::Subsonic {
        let pert = Perturbation {
            amplitude: 0.0,
            ..cfg.perturbation
        };
        let mut setup = cfg.physical_setup();
        setup.perturbation = pert;
        let (d, s0) = setup.build()?;
        let t_end = cfg.integrator.dt * cfg.travel.inertial_steps as f64;
        let tr = d.integrate(&s0, t_end, &IntegrateOptions::default())?;
        let fmax = tr.samples.iter().map(|s| norm3(s.force)).fold(0.0, f64::max);
        let w2 = d.w_norm().powi(2);
        rep.check(CheckRecord::below("inertial_force_over_w_norm_sq", fmax / w2, 1e-8));
        let vdrift = tr
            .samples
            .iter()
            .map(|s| norm3([s.p[0] - s0.p[0], s.p[1] - s0.p[1], s.p[2] - s0.p[2]]))
            .fold(0.0, f64::max);
        rep.info("inertial_momentum_drift", vdrift);
    }
    let (r, mre) = shell_max(&re, win);
    let (_, mim) = shell_max(&im, win);
    let rows: Vec<Vec<f64>> = r.iter().zip(&mre).zip(&mim).map(|((a, b), c)| vec![*a, *b, *c]).collect();
    rep.file("profile_decay.csv", table_csv(&["r", "re_shell_max", "im_shell_max"], &rows).as_bytes())?;
    rep.file("gamma.plf", &encode_snapshot(&profile.gamma(), 0.0, grid.box_length(), 1.0))?;
    Ok(())
}

fn rows_physical(tr: &Trajectory, map: &UnitMap) -> Vec<TrajectoryRow> {
    tr.samples
        .iter()
        .map(|s| TrajectoryRow {
            t: map.time(s.t),
            x: s.x.map(|c| map.position(c)),
            p: s.p.map(|c| map.momentum(c)),
            energy: map.energy(s.energy),
            momentum: s.momentum.map(|c| map.momentum(c)),
            re_delta_linf: s.re_delta_linf.map(|c| map.field(c)),
            im_delta_linf: s.im_delta_linf.map(|c| map.field(c)),
        })
        .collect()
}

/// Trajectory in physical units and its wrap-around horizon.
pub struct SimulationResult {
    pub rows: Vec<TrajectoryRow>,
    pub t_wrap: f64,
    pub energy_drift: f64,
    pub momentum_drift: f64,
}

fn integrate_config(cfg: &ExperimentConfig, delta: bool) -> Result<(Trajectory, UnitMap), CliError> {
    let (setup, map) = cfg.normalized_setup();
    let (d, s0) = setup.build()?;
    let dt = setup.dt;
    let t_end = match cfg.integrator.t_end {
        Some(t) => (t * map.length * map.length / dt).round() * dt,
        None => {
            let tw = polaron_core::dynamics::wrap_horizon(
                setup.box_length,
                norm3(setup.p0) / setup.params.mass,
                setup.params.sound_speed(),
            );
            (tw / dt).floor() * dt
        }
    };
    let opts = IntegrateOptions {
        sample_every: cfg.integrator.sample_every,
        snapshot_every: cfg.integrator.snapshot_every,
        delta_diagnostics: delta,
    };
    Ok((d.integrate(&s0, t_end, &opts)?, map))
}

fn simulate(cfg: &ExperimentConfig, rep: &mut Reporter, delta: bool) -> Result<SimulationResult, CliError> {
    let (tr, map) = integrate_config(cfg, delta)?;
    let rows = rows_physical(&tr, &map);
    rep.file("trajectory.csv", trajectory_csv(&rows).as_bytes())?;
    for (k, (t, f)) in tr.snapshots.iter().enumerate() {
        let l = map.position(f.grid().box_length());
        let bytes = encode_snapshot(f, map.time(*t), l, map.field(1.0));
        rep.file(&format!("snapshot_{k:05}.plf"), &bytes)?;
    }
    let ed = tr.max_energy_drift();
    let md = tr.max_momentum_drift();
    rep.check(CheckRecord::below("energy_drift", ed, 1e-6));
    rep.check(CheckRecord::below("momentum_drift", md, 1e-6));
    let t_wrap = map.time(tr.t_wrap);
    rep.info("t_wrap", t_wrap);
    rep.info("t_end", rows.last().map(|r| r.t).unwrap_or(0.0));
    let vmax = rows.iter().map(|r| norm3(r.p) / cfg.units.mass).fold(0.0, f64::max);
    rep.check(CheckRecord::below("max_speed_over_sound", vmax / cfg.units.mu.sqrt(), 1.0));
    Ok(SimulationResult {
        rows,
        t_wrap,
        energy_drift: ed,
        momentum_drift: md,
    })
}

/// Asymptotic-state statistics of a perturbed run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Mean velocity over the tail of the window.
    pub v_infty: [f64; 3],
    /// Least-squares constant of `X_t - v∞ t` over the same tail.
    pub x_bar0: [f64; 3],
    pub window: [f64; 2],
    pub tail: [f64; 2],
    pub t_wrap: f64,
    pub velocity_fit: Option<DecayFit>,
    pub position_fit: Option<DecayFit>,
    pub re_delta_fit: Option<DecayFit>,
    pub im_delta_fit: Option<DecayFit>,
    pub max_speed: f64,
}

/// Tail statistics and decay fits on `[fit_start, t_end]`, `t_end` capped
/// at the wrap-around horizon.
pub fn stability_report(
    rows: &[TrajectoryRow],
    mass: f64,
    t_wrap: f64,
    fit_start: f64,
    tail_fraction: f64,
) -> Result<StabilityReport, CliError> {
    let t_last = rows.last().map(|r| r.t).unwrap_or(0.0);
    let hi = t_last.min(t_wrap + 1e-9);
    if !(hi > fit_start) {
        return Err(CliError::Validation(format!(
            "run ends at {hi}, before the fit window starts at {fit_start}"
        )));
    }
    let tail_lo = hi - tail_fraction * (hi - fit_start);
    let tail: Vec<&TrajectoryRow> = rows.iter().filter(|r| r.t >= tail_lo && r.t <= hi).collect();
    if tail.is_empty() {
        return Err(CliError::Validation("empty tail window".into()));
    }
    let nt = tail.len() as f64;
    let mut vinf = [0.0; 3];
    for r in &tail {
        for a in 0..3 {
            vinf[a] += r.p[a] / mass / nt;
        }
    }
    let mut xbar = [0.0; 3];
    for r in &tail {
        for a in 0..3 {
            xbar[a] += (r.x[a] - vinf[a] * r.t) / nt;
        }
    }
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let dv: Vec<f64> = rows
        .iter()
        .map(|r| norm3([r.p[0] / mass - vinf[0], r.p[1] / mass - vinf[1], r.p[2] / mass - vinf[2]]))
        .collect();
    let dx: Vec<f64> = rows
        .iter()
        .map(|r| {
            norm3([
                r.x[0] - vinf[0] * r.t - xbar[0],
                r.x[1] - vinf[1] * r.t - xbar[1],
                r.x[2] - vinf[2] * r.t - xbar[2],
            ])
        })
        .collect();
    let window = [fit_start, hi];
    let re: Option<Vec<f64>> = rows.iter().map(|r| r.re_delta_linf).collect();
    let im: Option<Vec<f64>> = rows.iter().map(|r| r.im_delta_linf).collect();
    Ok(StabilityReport {
        v_infty: vinf,
        x_bar0: xbar,
        window,
        tail: [tail_lo, hi],
        t_wrap,
        velocity_fit: fit_temporal_decay(&t, &dv, window).ok(),
        position_fit: fit_temporal_decay(&t, &dx, window).ok(),
        re_delta_fit: re.and_then(|v| fit_temporal_decay(&t, &v, window).ok()),
        im_delta_fit: im.and_then(|v| fit_temporal_decay(&t, &v, window).ok()),
        max_speed: rows.iter().map(|r| norm3(r.p) / mass).fold(0.0, f64::max),
    })
}

fn slope_check(rep: &mut Reporter, name: &str, fit: &Option<DecayFit>, limit: f64) {
    match fit {
        Some(f) => {
            rep.check(CheckRecord::at_most(name, f.exponent, limit).with_window(f.window));
            rep.info(&format!("{name}_goodness"), f.goodness);
        }
        None => rep.check(CheckRecord::flag(name, false)),
    }
}

fn stability(cfg: &ExperimentConfig, rep: &mut Reporter) -> Result<StabilityReport, CliError> {
    let sim = simulate(cfg, rep, true)?;
    let s = &cfg.stability;
    let report = stability_report(&sim.rows, cfg.units.mass, sim.t_wrap, s.fit_start, s.tail_fraction)?;
    rep.json("stability.json", &report)?;
    let c = cfg.units.mu.sqrt();
    rep.check(CheckRecord::below("v_infty_over_sound", norm3(report.v_infty) / c, 1.0));
    slope_check(rep, "velocity_decay_exponent", &report.velocity_fit, -2.0);
    slope_check(rep, "re_delta_decay_exponent", &report.re_delta_fit, -1.0);
    slope_check(rep, "im_delta_decay_exponent", &report.im_delta_fit, -0.6);
    if let Some(f) = &report.position_fit {
        rep.info("position_decay_exponent", f.exponent);
    }
    if s.control {
        let mut ctl = cfg.clone();
        ctl.perturbation.amplitude = 0.0;
        let (tr, map) = integrate_config(&ctl, false)?;
        let rows = rows_physical(&tr, &map);
        let p0 = rows[0].p;
        let dv = rows
            .iter()
            .map(|r| norm3([r.p[0] - p0[0], r.p[1] - p0[1], r.p[2] - p0[2]]) / cfg.units.mass)
            .fold(0.0, f64::max);
        rep.check(CheckRecord::below("control_velocity_variation", dv, 1e-6));
        rep.file("control_trajectory.csv", trajectory_csv(&rows).as_bytes())?;
    }
    Ok(report)
}

fn mat_rows(t: &[f64], m: &[[[f64; 3]; 3]]) -> Vec<Vec<f64>> {
    t.iter()
        .zip(m)
        .map(|(t, a)| vec![*t, a[0][0], a[0][1], a[0][2], a[1][1], a[1][2], a[2][2]])
        .collect()
}

const MAT_HEADER: [&str; 7] = ["t", "c11", "c12", "c13", "c22", "c23", "c33"];

fn axis_aligned(v: [f64; 3]) -> bool {
    v.iter().filter(|c| **c != 0.0).count() <= 1
}

fn kernel(cfg: &ExperimentConfig, rep: &mut Reporter) -> Result<(), CliError> {
    let k = &cfg.kernel;
    let v0 = cfg.velocity;
    let spec = &cfg.potential;
    let k_max = (k.t_max / k.dt).round() as usize;
    let kern: MemoryKernel = match &k.quadrature {
        Some(q) => compute_m(v0, spec, k.dt, k_max, &SphericalQuadrature::new(q.clone(), v0)?)?,
        None => compute_m_auto(v0, spec, k.dt, k_max)?,
    };
    for w in &kern.warnings {
        rep.check(CheckRecord {
            name: "quadrature_warning".into(),
            value: None,
            threshold: w.clone(),
            pass: false,
            window: None,
        });
    }
    let t = kern.times();
    rep.file(
        "memory_kernel.csv",
        table_csv(&MAT_HEADER, &mat_rows(&t, &kern.samples)).as_bytes(),
    )?;
    if axis_aligned(v0) && spec.is_spherically_symmetric() {
        rep.check(CheckRecord::below("m_offdiag_ratio", kern.offdiag_ratio(), 1e-10));
        rep.check(CheckRecord::below("m_symmetry_defect", kern.symmetry_defect(), 1e-10));
    } else {
        rep.info("m_offdiag_ratio", kern.offdiag_ratio());
    }
    let fit = kern.decay_fit(2, 2, k.fit_window)?;
    rep.check(CheckRecord::at_most("m33_decay_exponent", fit.exponent, -5.0).with_window(k.fit_window));
    rep.info("m33_decay_goodness", fit.goodness);

    for &w in &k.check_omegas {
        let r = fourier_m(&kern, w, 0.0)?;
        rep.check(CheckRecord::below(&format!("mhat_path_discrepancy_w{w}"), r.discrepancy, 1e-3));
    }
    let im_axis = mhat_closed_form(v0, spec, 0.0, 0.1)?;
    let diag_ok = (0..3).all(|i| im_axis[(i, i)].re > 0.0 && im_axis[(i, i)].im.abs() < 1e-12);
    rep.check(CheckRecord::flag("mhat_imaginary_axis_positive", diag_ok));
    let n_tail = 25;
    let [a, b] = k.tail_omegas;
    let omegas: Vec<f64> = (0..n_tail)
        .map(|i| a * (b / a).powf(i as f64 / (n_tail - 1) as f64))
        .collect();
    let tail = mhat_tail_fit(v0, spec, &omegas)?;
    rep.check(CheckRecord::at_most("mhat_tail_exponent", tail.exponent, -1.8).with_window(k.tail_omegas));
    let mhat_rows: Vec<Vec<f64>> = omegas
        .iter()
        .map(|&w| {
            let m = mhat_closed_form(v0, spec, w, 0.0).expect("validated");
            let mut row = vec![w];
            for i in 0..3 {
                row.push(m[(i, i)].re);
                row.push(m[(i, i)].im);
            }
            row
        })
        .collect();
    rep.file(
        "mhat_tail.csv",
        table_csv(&["omega", "re11", "im11", "re22", "im22", "re33", "im33"], &mhat_rows).as_bytes(),
    )?;

    let inv = check_invertibility(&kern, &k.omegas)?;
    rep.json("invertibility.json", &inv)?;
    for r in &inv.records {
        let what = if r.omega == 0.0 {
            "mhat0_positive_definite".to_string()
        } else {
            format!("im_mhat_definite_w{}", r.omega)
        };
        rep.check(CheckRecord::flag(&what, r.sign_ok));
    }
    rep.check(CheckRecord::new("min_abs_det_one_plus_mhat", inv.min_abs_det, "> 0", inv.min_abs_det > 0.0));
    let far = invertibility_record(&mhat_closed_form(v0, spec, 1e3, 0.0)?, 1e3);
    let dev = far.one_plus_eigenvalues.iter().map(|e| (e - 1.0).abs()).fold(0.0, f64::max);
    rep.check(CheckRecord::below("one_plus_mhat_w1e3_deviation", dev, 1e-2));

    let kk = compute_k(&kern, k.pad)?;
    rep.check(CheckRecord::below("k_causality_over_peak", kk.causality_residual, 1e-8));
    rep.info("k_edge_mhat", kk.edge_mhat);
    if let Some(d) = kk.volterra_discrepancy {
        rep.info("k_fourier_vs_time_domain", d);
    }
    let kfit = kk.decay_fit(k.fit_window)?;
    rep.check(CheckRecord::at_most("k_decay_exponent", kfit.exponent, -3.5).with_window(k.fit_window));
    rep.info("k_decay_goodness", kfit.goodness);
    rep.file(
        "resolvent_kernel.csv",
        table_csv(&MAT_HEADER, &mat_rows(&kk.times(), &kk.samples)).as_bytes(),
    )?;
    let forcing: Vec<[f64; 3]> = t
        .iter()
        .map(|&s| {
            let e = (-0.5 * s).exp();
            [0.3 * e * s.sin(), 0.0, e * (2.0 * s).cos()]
        })
        .collect();
    let sol = solve_volterra(&kern, &forcing)?;
    rep.check(CheckRecord::below("volterra_direct_vs_resolvent", sol.discrepancy, 1e-4));
    Ok(())
}

fn gaussian_field(grid: &FourierGrid3, width: f64) -> ComplexField {
    let s2 = width * width;
    ComplexField::from_fn(grid, |x| {
        Complex64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * s2)).exp(), 0.0)
    })
}

fn grid_times(w: [f64; 2], step: f64) -> Vec<f64> {
    let n = ((w[1] - w[0]) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| w[0] + step * i as f64).collect()
}

fn dispersive(cfg: &ExperimentConfig, rep: &mut Reporter) -> Result<(), CliError> {
    let d = &cfg.dispersive;
    let grid = FourierGrid3::new(cfg.grid.n, cfg.grid.l)?;
    let f = gaussian_field(&grid, d.width);
    let t = grid_times(d.t_window, d.t_step);
    let mut cols = vec![t.clone()];
    let mut header = vec!["t".to_string()];
    for &sigma in &d.sigmas {
        let r = dispersive_decay(&f, d.band, sigma, &t)?;
        let tag = format!("sigma{sigma}");
        rep.check(CheckRecord::at_most(&format!("dispersive_{tag}_max_over_median"), r.max_over_median, 2.0).with_window(d.t_window));
        rep.check(CheckRecord::new(
            &format!("dispersive_{tag}_min_over_median"),
            r.min_over_median,
            ">= 0.5",
            r.min_over_median >= 0.5,
        ));
        rep.info(&format!("dispersive_{tag}_compensated_exponent"), r.fit.exponent);
        rep.check(CheckRecord::below(&format!("dispersive_{tag}_unitarity"), r.unitarity_defect, 1e-12));
        header.push(format!("linf_{tag}"));
        header.push(format!("compensated_{tag}"));
        cols.push(r.linf);
        cols.push(r.compensated);
    }
    let rows: Vec<Vec<f64>> = (0..t.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let h: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    rep.file("dispersive.csv", table_csv(&h, &rows).as_bytes())?;

    let v = cfg.velocity;
    let ot = grid_times(d.oscillatory_window, d.oscillatory_step);
    let osc = oscillatory_decay(1, &SymbolFn::identity(), v, &cfg.potential, &cfg.potential, &ot, None)?;
    rep.check(CheckRecord::within("oscillatory_l1_exponent", osc.fit.exponent, -4.4, -3.6).with_window(d.oscillatory_window));
    rep.info("oscillatory_l1_goodness", osc.fit.goodness);
    let even = even_mode_decay(v, &cfg.potential, 0.05, d.oscillatory_window)?;
    rep.check(CheckRecord::at_most("even_mode_exponent", even.fit.exponent, -6.0).with_window(d.oscillatory_window));
    rep.info("even_mode_goodness", even.fit.goodness);
    let rows: Vec<Vec<f64>> = osc.t.iter().zip(&osc.values).map(|(t, z)| vec![*t, z.re, z.im, z.norm()]).collect();
    rep.file("oscillatory.csv", table_csv(&["t", "re", "im", "abs"], &rows).as_bytes())?;
    let rows: Vec<Vec<f64>> = even.t.iter().zip(&even.values).map(|(t, a)| vec![*t, *a]).collect();
    rep.file("even_mode.csv", table_csv(&["t", "frobenius"], &rows).as_bytes())?;
    Ok(())
}

fn supersonic(cfg: &ExperimentConfig, rep: &mut Reporter) -> Result<(), CliError> {
    let s = &cfg.supersonic;
    let dir = {
        let n = norm3(cfg.velocity);
        if n > 0.0 {
            cfg.velocity.map(|c| c / n)
        } else {
            [0.0, 0.0, 1.0]
        }
    };
    let fast = supersonic_scan(dir.map(|c| c * s.speed), &cfg.potential, &s.resolutions, s.dx)?;
    let slow = supersonic_scan(dir.map(|c| c * s.control_speed), &cfg.potential, &s.resolutions, s.dx)?;
    rep.check(CheckRecord::flag("supersonic_strictly_increasing", fast.strictly_increasing));
    rep.check(CheckRecord::new("supersonic_growth", fast.growth, "> 3", fast.growth > 3.0));
    let worst = slow.ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    rep.check(CheckRecord::at_most("subsonic_control_ratio_deviation", worst, 0.05));
    let rows: Vec<Vec<f64>> = s
        .resolutions
        .iter()
        .enumerate()
        .map(|(i, n)| vec![*n as f64, *n as f64 * s.dx, fast.norms[i], slow.norms[i]])
        .collect();
    rep.file("supersonic.csv", table_csv(&["n", "l", "supersonic_norm", "subsonic_norm"], &rows).as_bytes())?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SweepRecord {
    name: String,
    member: usize,
    kind: String,
    dir: String,
    pass: bool,
    error: Option<String>,
}

fn sweep(cfg: &ExperimentConfig, rep: &mut Reporter, seed: Option<u64>) -> Result<(), CliError> {
    let members = cfg.sweep_members()?;
    let base = rep.dir.clone();
    let records: Vec<SweepRecord> = members
        .par_iter()
        .enumerate()
        .map(|(i, (c, kind))| {
            let dir = base.join(format!("member_{i:03}_{}", kind.name()));
            let r = run_experiment(c, *kind, &dir, seed);
            SweepRecord {
                name: "sweep_member".into(),
                member: i,
                kind: kind.name().into(),
                dir: dir.display().to_string(),
                pass: r.as_ref().map(|o| o.all_pass()).unwrap_or(false),
                error: r.err().map(|e| e.to_string()),
            }
        })
        .collect();
    for r in &records {
        rep.check(CheckRecord::flag(&format!("member_{:03}_{}", r.member, r.kind), r.pass));
    }
    rep.file("sweep.ndjson", ndjson(&records)?.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GridConfig;

    fn small_simulation() -> ExperimentConfig {
        let mut c = ExperimentConfig {
            grid: GridConfig { n: 16, l: 12.0 },
            ..Default::default()
        };
        c.integrator.t_end = Some(1.0);
        c.integrator.snapshot_every = 10;
        c
    }

    fn read_lines(p: &Path) -> Vec<serde_json::Value> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }

    #[test]
    fn stability_report_recovers_synthetic_rates() {
        let rows: Vec<TrajectoryRow> = (0..=300)
            .map(|k| {
                let t = 0.1 * k as f64;
                let s = 1.0 + t;
                TrajectoryRow {
                    t,
                    x: [1.0, 0.0, 0.4 * t + 0.5 - 0.025 * s.powi(-2)],
                    p: [0.0, 0.0, 2.0 * (0.4 + 0.05 * s.powi(-3))],
                    energy: 0.0,
                    momentum: [0.0; 3],
                    re_delta_linf: Some(0.1 * s.powf(-1.5)),
                    im_delta_linf: Some(0.2 / s),
                }
            })
            .collect();
        let r = stability_report(&rows, 2.0, 25.0, 2.0, 0.1).unwrap();
        assert_eq!(r.window[0], 2.0);
        assert!((r.window[1] - 25.0).abs() < 1e-6);
        assert!((r.tail[0] - 22.7).abs() < 1e-9);
        assert!((r.v_infty[2] - 0.4).abs() < 1e-5, "{:?}", r.v_infty);
        assert!(r.v_infty[0].abs() < 1e-15);
        assert!((r.x_bar0[0] - 1.0).abs() < 1e-12);
        assert!((r.x_bar0[2] - 0.5).abs() < 1e-3);
        assert!((r.re_delta_fit.unwrap().exponent + 1.5).abs() < 1e-9);
        assert!((r.im_delta_fit.unwrap().exponent + 1.0).abs() < 1e-9);
        assert!(r.velocity_fit.unwrap().exponent < -2.5);
        assert!((r.max_speed - (0.4 + 0.05)).abs() < 1e-12);
        assert!(stability_report(&rows, 2.0, 25.0, 26.0, 0.1).is_err());
    }

    #[test]
    fn simulate_writes_identical_outputs() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = small_simulation();
        let ra = run_experiment(&cfg, ExperimentKind::Simulate, a.path(), Some(7)).unwrap();
        let rb = run_experiment(&cfg, ExperimentKind::Simulate, b.path(), Some(7)).unwrap();
        assert!(ra.all_pass());
        assert!(ra.check("energy_drift").unwrap().value.unwrap() < 1e-6);
        let names: Vec<_> = ra.files.iter().map(|p| p.file_name().unwrap().to_owned()).collect();
        assert!(names.iter().any(|n| n == "trajectory.csv"));
        assert_eq!(names.iter().filter(|n| n.to_string_lossy().ends_with(".plf")).count(), 3);
        for (fa, fb) in ra.files.iter().zip(&rb.files) {
            assert_eq!(fa.file_name(), fb.file_name());
            assert_eq!(std::fs::read(fa).unwrap(), std::fs::read(fb).unwrap(), "{fa:?}");
        }
        let lines = read_lines(&a.path().join("report.ndjson"));
        assert_eq!(lines[0]["name"], "provenance");
        assert_eq!(lines[0]["kind"], "simulate");
        assert_eq!(lines[0]["config"]["seed"], 7);
        assert_eq!(lines.len(), 1 + ra.checks.len());
        let csv = std::fs::read_to_string(a.path().join("trajectory.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 21);
    }

    #[test]
    fn aborted_experiment_leaves_failure_record() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.kernel.dt = 0.1;
        cfg.kernel.t_max = 45.0;
        let err = run_experiment(&cfg, ExperimentKind::Kernel, dir.path(), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let lines = read_lines(&dir.path().join("report.ndjson"));
        let last = lines.last().unwrap();
        assert_eq!(last["name"], "failure");
        assert_eq!(last["class"], "validation");
        assert!(last["error"].as_str().unwrap().contains("frequency grid edge"));
        assert!(lines.len() > 2);
    }

    #[test]
    fn invalid_config_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("never");
        let mut cfg = small_simulation();
        cfg.integrator.dt = 0.5;
        assert!(run_experiment(&cfg, ExperimentKind::Simulate, &out, None).is_err());
        assert!(!out.exists());
    }

    #[test]
    fn travel_on_small_box() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig {
            grid: GridConfig { n: 32, l: 16.0 },
            velocity: [0.0, 0.0, 0.3],
            ..Default::default()
        };
        cfg.travel.decay_window = [1.5, 6.0];
        cfg.travel.inertial_steps = 10;
        let out = run_experiment(&cfg, ExperimentKind::Travel, dir.path(), None).unwrap();
        assert!(out.check("profile_residual").unwrap().pass);
        assert!(out.check("inertial_force_over_w_norm_sq").unwrap().pass);
        let snap = crate::io::decode_snapshot(&std::fs::read(dir.path().join("gamma.plf")).unwrap()).unwrap();
        assert_eq!(snap.field.grid().n(), 32);
    }

    #[test]
    fn sweep_runs_every_member() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::from_json(include_str!("../configs/sweep.json")).unwrap();
        let kind = cfg.resolve_kind(None).unwrap();
        let out = run_experiment(&cfg, kind, dir.path(), None).unwrap();
        assert_eq!(out.checks.len(), 3);
        assert!(out.checks[0].pass && out.checks[1].pass, "{:?}", out.checks);
        let recs = read_lines(&dir.path().join("sweep.ndjson"));
        assert_eq!(recs.len(), 3);
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r["member"], i);
            assert!(r["error"].is_null(), "{r}");
            assert!(Path::new(r["dir"].as_str().unwrap()).join("report.ndjson").exists());
        }
    }
}
