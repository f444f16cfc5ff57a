//! Experiment configuration: a single JSON document in normalized units.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use polaron_core::dynamics::{Perturbation, RunSetup, Scheme, SystemParams, UnitTransform};
use polaron_core::memory_kernel::QuadratureSettings;
use polaron_core::{FourierGrid3, PotentialSpec};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Travel,
    Simulate,
    Stability,
    Kernel,
    Dispersive,
    Supersonic,
    Sweep,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Travel => "travel",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Stability => "stability",
            ExperimentKind::Kernel => "kernel",
            ExperimentKind::Dispersive => "dispersive",
            ExperimentKind::Supersonic => "supersonic",
            ExperimentKind::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub l: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 64, l: 32.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Final time; `None` runs to the wrap-around horizon.
    pub t_end: Option<f64>,
    pub sample_every: usize,
    /// Field snapshot cadence in steps, 0 disables.
    pub snapshot_every: usize,
    pub scheme: Scheme,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            t_end: None,
            sample_every: 1,
            snapshot_every: 0,
            scheme: Scheme::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub dt: f64,
    pub t_max: f64,
    pub fit_window: [f64; 2],
    /// Frequencies for the invertibility certificate.
    pub omegas: Vec<f64>,
    /// Frequencies for the path A/B comparison.
    pub check_omegas: Vec<f64>,
    /// Frequencies for the `M̂` tail fit.
    pub tail_omegas: [f64; 2],
    pub pad: usize,
    /// Explicit quadrature; chosen automatically when absent.
    pub quadrature: Option<QuadratureSettings>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            dt: 0.04,
            t_max: 60.0,
            fit_window: [5.0, 40.0],
            omegas: vec![-10.0, -3.0, -1.0, -0.3, 0.0, 0.3, 1.0, 3.0, 10.0],
            check_omegas: vec![0.1, 1.0, 5.0],
            tail_omegas: [10.0, 1000.0],
            pad: 4,
            quadrature: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersiveConfig {
    pub band: i32,
    pub sigmas: Vec<f64>,
    pub t_window: [f64; 2],
    pub t_step: f64,
    /// Width of the Gaussian test function.
    pub width: f64,
    pub oscillatory_window: [f64; 2],
    pub oscillatory_step: f64,
}

impl Default for DispersiveConfig {
    fn default() -> Self {
        Self {
            band: 0,
            sigmas: vec![0.0, 1.0],
            t_window: [1.0, 12.0],
            t_step: 0.25,
            width: 1.0,
            oscillatory_window: [5.0, 50.0],
            oscillatory_step: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupersonicConfig {
    pub speed: f64,
    pub control_speed: f64,
    pub resolutions: Vec<usize>,
    pub dx: f64,
}

impl Default for SupersonicConfig {
    fn default() -> Self {
        Self {
            speed: 1.5,
            control_speed: 0.5,
            resolutions: vec![32, 48, 64, 96],
            dx: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TravelConfig {
    pub decay_window: [f64; 2],
    pub inertial_steps: usize,
}

impl Default for TravelConfig {
    fn default() -> Self {
        Self {
            decay_window: [2.0, 12.0],
            inertial_steps: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    /// Fit windows start here and end at the wrap-around horizon.
    pub fit_start: f64,
    /// Fraction of the window used for tail statistics.
    pub tail_fraction: f64,
    /// Also run the unperturbed control.
    pub control: bool,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            fit_start: 2.0,
            tail_fraction: 0.1,
            control: true,
        }
    }
}

/// Physical units. Simulations run in normalized units `M = μ = 1`
/// reached through transformation (e) with `λ = √μ` followed by (d) with
/// `λ = M`; results are mapped back.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnitsConfig {
    pub mass: f64,
    pub mu: f64,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        Self {
            mass: 1.0,
            mu: 1.0,
        }
    }
}

impl UnitsConfig {
    pub fn is_normalized(&self) -> bool {
        self.mass == 1.0 && self.mu == 1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    pub grid: GridConfig,
    pub potential: PotentialSpec,
    /// Profile velocity `v` or initial velocity `v0`.
    pub velocity: [f64; 3],
    pub perturbation: Perturbation,
    pub integrator: IntegratorConfig,
    pub kernel: KernelConfig,
    pub dispersive: DispersiveConfig,
    pub supersonic: SupersonicConfig,
    pub travel: TravelConfig,
    pub stability: StabilityConfig,
    pub units: UnitsConfig,
    pub output_dir: Option<PathBuf>,
    /// Partial configs merged onto this one, one experiment each.
    pub sweep: Vec<serde_json::Value>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: None,
            grid: GridConfig::default(),
            potential: PotentialSpec::default(),
            velocity: [0.0, 0.0, 0.4],
            perturbation: Perturbation::default(),
            integrator: IntegratorConfig::default(),
            kernel: KernelConfig::default(),
            dispersive: DispersiveConfig::default(),
            supersonic: SupersonicConfig::default(),
            travel: TravelConfig::default(),
            stability: StabilityConfig::default(),
            units: UnitsConfig::default(),
            output_dir: None,
            sweep: Vec::new(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn speed(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn check_window(name: &str, w: [f64; 2]) -> Result<(), CliError> {
    if !(w[0].is_finite() && w[1].is_finite() && 0.0 <= w[0] && w[0] < w[1]) {
        return Err(invalid(format!("{name}: window {w:?} must satisfy 0 <= a < b")));
    }
    Ok(())
}

/// RFC 7386 merge of `patch` into `base`.
pub fn merge_json(base: &mut serde_json::Value, patch: &serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    b.remove(k);
                } else {
                    merge_json(b.entry(k.clone()).or_insert(serde_json::Value::Null), v);
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Resolves the experiment kind from the command line and the document.
    pub fn resolve_kind(&self, cli: Option<ExperimentKind>) -> Result<ExperimentKind, CliError> {
        match (cli, self.kind) {
            (Some(a), Some(b)) if a != b => Err(invalid(format!(
                "command line kind `{}` disagrees with config kind `{}`",
                a.name(),
                b.name()
            ))),
            (Some(a), _) => Ok(a),
            (None, Some(b)) => Ok(b),
            (None, None) => Err(invalid("no experiment kind given")),
        }
    }

    /// The configs of a sweep, each with its kind resolved.
    pub fn sweep_members(&self) -> Result<Vec<(ExperimentConfig, ExperimentKind)>, CliError> {
        if self.sweep.is_empty() {
            return Err(invalid("sweep: empty member list"));
        }
        let mut base = serde_json::to_value(self).map_err(|e| invalid(e.to_string()))?;
        if let serde_json::Value::Object(m) = &mut base {
            m.insert("sweep".into(), serde_json::Value::Array(Vec::new()));
            m.remove("kind");
        }
        let mut out = Vec::new();
        for (i, patch) in self.sweep.iter().enumerate() {
            let mut v = base.clone();
            merge_json(&mut v, patch);
            let cfg: ExperimentConfig =
                serde_json::from_value(v).map_err(|e| invalid(format!("sweep member {i}: {e}")))?;
            let kind = cfg
                .kind
                .ok_or_else(|| invalid(format!("sweep member {i}: no kind")))?;
            if kind == ExperimentKind::Sweep {
                return Err(invalid(format!("sweep member {i}: nested sweeps are not allowed")));
            }
            cfg.validate(kind)
                .map_err(|e| invalid(format!("sweep member {i}: {e}")))?;
            out.push((cfg, kind));
        }
        Ok(out)
    }

    /// Checks every precondition of the operations `kind` invokes.
    pub fn validate(&self, kind: ExperimentKind) -> Result<(), CliError> {
        let needs_grid = matches!(
            kind,
            ExperimentKind::Travel
                | ExperimentKind::Simulate
                | ExperimentKind::Stability
                | ExperimentKind::Dispersive
        );
        if needs_grid {
            FourierGrid3::new(self.grid.n, self.grid.l).map_err(|e| invalid(e.to_string()))?;
        }
        self.potential.validate().map_err(|e| invalid(e.to_string()))?;
        if !self.velocity.iter().all(|c| c.is_finite()) {
            return Err(invalid("velocity must be finite"));
        }
        let u = &self.units;
        if !(u.mass > 0.0 && u.mu > 0.0 && u.mass.is_finite() && u.mu.is_finite()) {
            return Err(invalid("units: mass and mu must be positive"));
        }
        let dynamic = matches!(kind, ExperimentKind::Simulate | ExperimentKind::Stability);
        if !dynamic && kind != ExperimentKind::Sweep && !u.is_normalized() {
            return Err(invalid(format!(
                "kind `{}` runs in normalized units; remove the units block",
                kind.name()
            )));
        }
        match kind {
            ExperimentKind::Travel => {
                if speed(self.velocity) > 1.0 + 1e-12 {
                    return Err(invalid("travel: |v| must not exceed 1; use `supersonic`"));
                }
                check_window("travel.decay_window", self.travel.decay_window)?;
                if self.travel.decay_window[1] > 0.4 * self.grid.l + 1e-12 {
                    return Err(invalid("travel.decay_window must end by 0.4 L"));
                }
            }
            ExperimentKind::Simulate | ExperimentKind::Stability => {
                let ig = &self.integrator;
                let sound = u.mu.sqrt();
                if !(speed(self.velocity) < sound) {
                    return Err(invalid("velocity must be subsonic (|v0| < sqrt(mu))"));
                }
                if !(ig.dt > 0.0 && ig.dt.is_finite()) {
                    return Err(invalid("integrator.dt must be positive"));
                }
                if ig.dt * u.mu > 0.1 {
                    return Err(invalid("integrator.dt exceeds 0.1 in normalized units"));
                }
                if let Some(t) = ig.t_end {
                    let k = t / ig.dt;
                    if !(t > 0.0) || (k - k.round()).abs() > 1e-6 {
                        return Err(invalid("integrator.t_end must be a positive multiple of dt"));
                    }
                }
                let p = &self.perturbation;
                if !(p.amplitude >= 0.0 && p.width > 0.0) || !p.offset.iter().all(|c| c.is_finite()) {
                    return Err(invalid("perturbation: amplitude >= 0, width > 0 required"));
                }
                if kind == ExperimentKind::Stability {
                    let s = &self.stability;
                    if !(s.fit_start >= 0.0 && s.tail_fraction > 0.0 && s.tail_fraction <= 0.5) {
                        return Err(invalid("stability: fit_start >= 0, tail_fraction in (0, 0.5]"));
                    }
                }
            }
            ExperimentKind::Kernel => {
                let k = &self.kernel;
                if !(speed(self.velocity) < 1.0) {
                    return Err(invalid("kernel: v0 must be subsonic"));
                }
                if !(k.dt > 0.0 && k.t_max > k.dt) {
                    return Err(invalid("kernel: 0 < dt < t_max required"));
                }
                check_window("kernel.fit_window", k.fit_window)?;
                if k.fit_window[1] > k.t_max {
                    return Err(invalid("kernel.fit_window must end by t_max"));
                }
                if k.omegas.iter().chain(&k.check_omegas).any(|w| !w.is_finite()) {
                    return Err(invalid("kernel: frequencies must be finite"));
                }
                check_window("kernel.tail_omegas", k.tail_omegas)?;
                if k.pad < 2 {
                    return Err(invalid("kernel.pad must be at least 2"));
                }
            }
            ExperimentKind::Dispersive => {
                let d = &self.dispersive;
                let grid = FourierGrid3::new(self.grid.n, self.grid.l).map_err(|e| invalid(e.to_string()))?;
                if !polaron_core::spectral_core::resolvable_bands(&grid).contains(&d.band) {
                    return Err(invalid(format!("dispersive: band {} not resolvable", d.band)));
                }
                if d.sigmas.iter().any(|s| !(0.0..=1.0).contains(s)) {
                    return Err(invalid("dispersive: sigma must lie in [0, 1]"));
                }
                check_window("dispersive.t_window", d.t_window)?;
                if d.t_window[1] > 0.4 * self.grid.l + 1e-12 {
                    return Err(invalid("dispersive.t_window extends beyond the wrap-around horizon 0.4 L"));
                }
                if !(d.t_step > 0.0 && d.width > 0.0 && d.oscillatory_step > 0.0) {
                    return Err(invalid("dispersive: steps and width must be positive"));
                }
                check_window("dispersive.oscillatory_window", d.oscillatory_window)?;
                if !(speed(self.velocity) < 1.0) {
                    return Err(invalid("dispersive: v must be subsonic"));
                }
            }
            ExperimentKind::Supersonic => {
                let s = &self.supersonic;
                if !(s.speed > 1.0 && s.control_speed < 1.0 && s.control_speed >= 0.0) {
                    return Err(invalid("supersonic: speed > 1 and control_speed in [0, 1) required"));
                }
                if s.resolutions.len() < 2 || !(s.dx > 0.0) {
                    return Err(invalid("supersonic: need two or more resolutions and dx > 0"));
                }
                for &n in &s.resolutions {
                    FourierGrid3::new(n, n as f64 * s.dx).map_err(|e| invalid(e.to_string()))?;
                }
            }
            ExperimentKind::Sweep => {
                self.sweep_members()?;
            }
        }
        Ok(())
    }

    /// Physical-units run description.
    pub fn physical_setup(&self) -> RunSetup {
        let u = self.units;
        RunSetup {
            n: self.grid.n,
            box_length: self.grid.l,
            potential: self.potential.clone(),
            params: SystemParams { mass: u.mass, mu: u.mu },
            x0: [0.0; 3],
            p0: self.velocity.map(|c| c * u.mass),
            v0: Some(self.velocity),
            perturbation: self.perturbation,
            dt: self.integrator.dt,
            scheme: self.integrator.scheme,
        }
    }

    /// Normalized setup and the [`UnitMap`] back to physical units.
    pub fn normalized_setup(&self) -> (RunSetup, UnitMap) {
        let u = self.units;
        let l1 = u.mu.sqrt();
        let (s1, _) = self.physical_setup().transformed(UnitTransform::E, l1);
        let (s2, _) = s1.transformed(UnitTransform::D, u.mass);
        (
            s2,
            UnitMap {
                length: l1,
                mass: u.mass,
            },
        )
    }
}

/// Back-map from normalized to physical units after `E(ℓ)` then `D(m)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitMap {
    pub length: f64,
    pub mass: f64,
}

impl UnitMap {
    pub fn identity() -> Self {
        Self { length: 1.0, mass: 1.0 }
    }

    pub fn time(&self, t: f64) -> f64 {
        t / (self.length * self.length)
    }

    pub fn position(&self, x: f64) -> f64 {
        x / self.length
    }

    pub fn momentum(&self, p: f64) -> f64 {
        p * self.length * self.mass
    }

    pub fn force(&self, f: f64) -> f64 {
        f * self.length.powi(3) * self.mass
    }

    pub fn energy(&self, e: f64) -> f64 {
        e * self.length * self.length * self.mass
    }

    pub fn field(&self, b: f64) -> f64 {
        b * self.length.powf(1.5) * self.mass.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use polaron_core::dynamics::IntegrateOptions;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            grid: GridConfig { n: 16, l: 12.0 },
            ..Default::default()
        }
    }

    fn rejects(cfg: &ExperimentConfig, kind: ExperimentKind) -> String {
        match cfg.validate(kind) {
            Err(CliError::Validation(m)) => m,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"grid": {"n": 16, "l": 8, "m": 1}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"velocity": [0, 0, 0.4], "speed": 1}"#).is_err());
        let c = ExperimentConfig::from_json(r#"{"kind": "travel", "velocity": [0, 0, 0.5]}"#).unwrap();
        assert_eq!(c.kind, Some(ExperimentKind::Travel));
        assert_eq!(c.grid, GridConfig::default());
    }

    #[test]
    fn kind_resolution() {
        let mut c = small();
        assert!(c.resolve_kind(None).is_err());
        assert_eq!(c.resolve_kind(Some(ExperimentKind::Kernel)).unwrap(), ExperimentKind::Kernel);
        c.kind = Some(ExperimentKind::Travel);
        assert_eq!(c.resolve_kind(None).unwrap(), ExperimentKind::Travel);
        assert!(c.resolve_kind(Some(ExperimentKind::Simulate)).is_err());
    }

    #[test]
    fn validation_errors() {
        let mut c = small();
        c.grid.n = 15;
        rejects(&c, ExperimentKind::Simulate);

        let mut c = small();
        c.velocity = [0.0, 0.0, 1.2];
        rejects(&c, ExperimentKind::Travel);
        rejects(&c, ExperimentKind::Simulate);
        rejects(&c, ExperimentKind::Kernel);

        let mut c = small();
        c.travel.decay_window = [2.0, 6.0];
        assert!(rejects(&c, ExperimentKind::Travel).contains("0.4 L"));
        c.travel.decay_window = [3.0, 1.0];
        rejects(&c, ExperimentKind::Travel);

        let mut c = small();
        c.integrator.dt = 0.2;
        rejects(&c, ExperimentKind::Simulate);
        c.integrator.dt = 0.05;
        c.integrator.t_end = Some(1.03);
        rejects(&c, ExperimentKind::Simulate);

        let mut c = small();
        c.units.mass = 2.0;
        assert!(c.validate(ExperimentKind::Simulate).is_ok());
        assert!(rejects(&c, ExperimentKind::Kernel).contains("normalized"));
        c.units.mu = 0.0;
        rejects(&c, ExperimentKind::Simulate);

        let mut c = small();
        c.units.mu = 0.25;
        c.velocity = [0.0, 0.0, 0.6];
        assert!(rejects(&c, ExperimentKind::Simulate).contains("subsonic"));

        let mut c = small();
        c.kernel.fit_window = [5.0, 80.0];
        rejects(&c, ExperimentKind::Kernel);

        let mut c = small();
        c.dispersive.sigmas = vec![1.5];
        rejects(&c, ExperimentKind::Dispersive);

        let mut c = small();
        c.supersonic.speed = 0.9;
        rejects(&c, ExperimentKind::Supersonic);

        rejects(&small(), ExperimentKind::Sweep);
    }

    #[test]
    fn sweep_members_merge_patches() {
        let mut c = small();
        c.sweep = vec![
            serde_json::json!({"kind": "simulate", "velocity": [0, 0, 0.2]}),
            serde_json::json!({"kind": "travel", "travel": {"decay_window": [1, 4]}}),
        ];
        let m = c.sweep_members().unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].1, ExperimentKind::Simulate);
        assert_eq!(m[0].0.velocity, [0.0, 0.0, 0.2]);
        assert_eq!(m[0].0.grid, c.grid);
        assert_eq!(m[1].0.travel.decay_window, [1.0, 4.0]);
        assert_eq!(m[1].0.travel.inertial_steps, 100);

        c.sweep.push(serde_json::json!({"kind": "sweep"}));
        assert!(c.sweep_members().is_err());
        c.sweep = vec![serde_json::json!({"velocity": [0, 0, 0.2]})];
        assert!(c.sweep_members().is_err());
    }

    #[test]
    fn merge_follows_rfc7386() {
        let mut a = serde_json::json!({"a": 1, "b": {"c": 2, "d": 3}});
        merge_json(&mut a, &serde_json::json!({"b": {"c": null, "e": 4}, "f": [1]}));
        assert_eq!(a, serde_json::json!({"a": 1, "b": {"d": 3, "e": 4}, "f": [1]}));
    }

    #[test]
    fn normalized_run_maps_back_to_native_units() {
        let mut c = small();
        c.grid = GridConfig { n: 16, l: 10.0 };
        c.units = UnitsConfig { mass: 2.0, mu: 0.5 };
        c.velocity = [0.0, 0.1, 0.3];
        c.perturbation.amplitude = 0.05;
        let t_end = 1.0;
        let native = c.physical_setup().run(t_end, &IntegrateOptions::default()).unwrap();
        let (setup, map) = c.normalized_setup();
        assert!((setup.params.mass - 1.0).abs() < 1e-15 && (setup.params.mu - 1.0).abs() < 1e-15);
        let scaled = setup
            .run(t_end * map.length * map.length, &IntegrateOptions::default())
            .unwrap();
        assert_eq!(native.samples.len(), scaled.samples.len());
        let pscale = native.samples[0].p.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let escale = native.samples[0].energy.abs();
        for (a, b) in native.samples.iter().zip(&scaled.samples) {
            assert!((a.t - map.time(b.t)).abs() < 1e-12);
            for i in 0..3 {
                assert!((a.x[i] - map.position(b.x[i])).abs() < 1e-10, "{a:?} {b:?}");
                assert!((a.p[i] - map.momentum(b.p[i])).abs() < 1e-10 * pscale);
                assert!((a.force[i] - map.force(b.force[i])).abs() < 1e-10 * pscale);
            }
            assert!((a.energy - map.energy(b.energy)).abs() < 1e-10 * escale);
        }
    }

    #[test]
    fn unit_map_identity() {
        let m = UnitMap::identity();
        assert_eq!(m.time(3.0), 3.0);
        assert_eq!(m.energy(2.0), 2.0);
        assert_eq!(m.field(0.5), 0.5);
    }
}
