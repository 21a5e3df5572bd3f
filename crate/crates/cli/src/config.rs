//! Experiment configuration: TOML or JSON, validated before anything runs.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use holomimo_core::geometry::{build_upa, ArrayGeometry};
use holomimo_core::quadrature::HemisphereQuadrature;
use holomimo_core::spectra::{cap_spectrum, isotropic_spectrum, matched_pattern, omni_pattern};
use holomimo_core::spectra::{AngularSpectrum, AntennaPattern};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SPECTRUM_NAMES: &str = "isotropic, cap(<angle>) with the angle in radians or suffixed deg, e.g. cap(30deg)";
pub const PATTERN_NAMES: &str = "omni, matched, matched(<spectrum>)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Eigenvalues,
    DofSweep,
    Capacity,
    CouplingMatrix,
    BoundCheck,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Eigenvalues => "eigenvalues",
            Self::DofSweep => "dof-sweep",
            Self::Capacity => "capacity",
            Self::CouplingMatrix => "coupling-matrix",
            Self::BoundCheck => "bound-check",
        };
        f.write_str(s)
    }
}

/// Which channel model a capacity run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    /// H_IID R^{1/2} C(ρ)^{-1/2} with an IID receive side.
    #[default]
    Exact,
    /// Kronecker Fourier model with lattice variances at both ends.
    Fourier,
}

/// How an aperture that is not a whole number of spacings is rounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fit {
    #[default]
    Floor,
    Ceil,
}

/// A scalar applied to both axes, or an (x, y) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Pair {
    Both(f64),
    Each([f64; 2]),
}

impl Pair {
    fn xy(self) -> (f64, f64) {
        match self {
            Pair::Both(v) => (v, v),
            Pair::Each([x, y]) => (x, y),
        }
    }
}

/// Array layout: explicit positions, a grid by counts, or a grid by aperture.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture: Option<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<Pair>,
    #[serde(default)]
    pub fit: Fit,
}

fn count_for(aperture: f64, spacing: f64, fit: Fit) -> Result<usize, CliError> {
    if !(aperture >= 0.0) || !aperture.is_finite() {
        return Err(CliError::config(format!("aperture must be finite and nonnegative, got {aperture}")));
    }
    let x = aperture / spacing;
    let r = x.round();
    let intervals = if (x - r).abs() < 1e-9 {
        r
    } else {
        match fit {
            Fit::Floor => x.floor(),
            Fit::Ceil => x.ceil(),
        }
    };
    Ok(intervals as usize + 1)
}

impl GeometrySpec {
    pub fn grid(n: usize, spacing: f64) -> Self {
        Self {
            nx: Some(n),
            ny: Some(n),
            spacing: Some(Pair::Both(spacing)),
            ..Default::default()
        }
    }

    pub fn square(aperture: f64, spacing: f64, fit: Fit) -> Self {
        Self {
            aperture: Some(Pair::Both(aperture)),
            spacing: Some(Pair::Both(spacing)),
            fit,
            ..Default::default()
        }
    }

    pub fn build(&self) -> Result<ArrayGeometry, CliError> {
        if let Some(p) = &self.positions {
            if self.nx.is_some() || self.ny.is_some() || self.aperture.is_some() || self.spacing.is_some() {
                return Err(CliError::config("geometry: `positions` excludes nx, ny, aperture and spacing"));
            }
            return ArrayGeometry::from_positions(p.clone()).map_err(CliError::from_core);
        }
        let (dx, dy) = self
            .spacing
            .ok_or_else(|| CliError::config("geometry: `spacing` is required for a grid"))?
            .xy();
        if !(dx > 0.0 && dy > 0.0) {
            return Err(CliError::config("geometry: spacing must be positive"));
        }
        let (nx, ny) = match (self.nx, self.ny, self.aperture) {
            (Some(nx), ny, None) => (nx, ny.unwrap_or(nx)),
            (None, None, Some(a)) => {
                let (ax, ay) = a.xy();
                (count_for(ax, dx, self.fit)?, count_for(ay, dy, self.fit)?)
            }
            (None, Some(_), None) => return Err(CliError::config("geometry: `ny` needs `nx`")),
            (None, None, None) => {
                return Err(CliError::config("geometry: give `nx`/`ny`, `aperture`, or `positions`"))
            }
            _ => return Err(CliError::config("geometry: `aperture` excludes `nx`/`ny`")),
        };
        build_upa(nx, ny, dx, dy).map_err(CliError::from_core)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Default for SnrGrid {
    fn default() -> Self {
        SnrGrid::Range {
            start: -10.0,
            stop: 40.0,
            step: 5.0,
        }
    }
}

impl SnrGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            SnrGrid::List(v) => {
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                    return Err(CliError::config("snr_db must be a nonempty list of finite values"));
                }
                Ok(v.clone())
            }
            &SnrGrid::Range { start, stop, step } => {
                if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
                    return Err(CliError::config("snr_db range needs start <= stop and step > 0"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                if n > 10_000 {
                    return Err(CliError::config("snr_db range has too many points"));
                }
                Ok((0..=n).map(|k| start + k as f64 * step).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub polar: usize,
    pub azimuth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            polar: 256,
            azimuth: 512,
        }
    }
}

fn default_spectrum() -> String {
    "isotropic".into()
}
fn default_mc() -> usize {
    200
}
fn default_seed() -> u64 {
    1
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_threshold() -> f64 {
    -40.0
}
fn default_window() -> [f64; 2] {
    [30.0, 45.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub tx: GeometrySpec,
    /// Receive array; defaults to the transmit layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx: Option<GeometrySpec>,
    #[serde(default = "default_spectrum")]
    pub spectrum: String,
    #[serde(default = "default_spectrum")]
    pub rx_spectrum: String,
    /// Transmit antenna pattern; absent means uncoupled antennas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(default)]
    pub rho: Vec<f64>,
    #[serde(default)]
    pub snr_db: SnrGrid,
    #[serde(default = "default_mc")]
    pub mc: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub channel: ChannelKind,
    /// Eigenvalue threshold for DOF counts, dB below the maximum.
    #[serde(default = "default_threshold")]
    pub threshold_db: f64,
    /// SNR window for the high-SNR slope check.
    #[serde(default = "default_window")]
    pub slope_window_db: [f64; 2],
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    /// Wavelength in metres; when set, the √(2/R) channel prefactor is reinstated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_audit_wavelength: Option<f64>,
}

/// Parsed spectrum or pattern name.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumSpec {
    Isotropic,
    Cap(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternSpec {
    Omni,
    Matched(Option<SpectrumSpec>),
}

fn parse_angle(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some(d) = s.strip_suffix("deg") {
        return d.trim().parse::<f64>().ok().map(|d| d * PI / 180.0);
    }
    s.parse::<f64>().ok()
}

pub fn parse_spectrum(s: &str) -> Result<SpectrumSpec, CliError> {
    let t = s.trim();
    if t == "isotropic" {
        return Ok(SpectrumSpec::Isotropic);
    }
    if let Some(arg) = t.strip_prefix("cap(").and_then(|r| r.strip_suffix(')')) {
        let theta = parse_angle(arg)
            .ok_or_else(|| CliError::config(format!("cannot read the cap angle in `{s}`")))?;
        if !(theta > 0.0 && theta <= PI / 2.0 + 1e-12) {
            return Err(CliError::config(format!("cap angle in `{s}` must lie in (0, 90deg]")));
        }
        return Ok(SpectrumSpec::Cap(theta.min(PI / 2.0)));
    }
    Err(CliError::config(format!("unknown spectrum `{s}`; valid spectra: {SPECTRUM_NAMES}")))
}

pub fn parse_pattern(s: &str) -> Result<PatternSpec, CliError> {
    let t = s.trim();
    match t {
        "omni" => return Ok(PatternSpec::Omni),
        "matched" => return Ok(PatternSpec::Matched(None)),
        _ => {}
    }
    if let Some(arg) = t.strip_prefix("matched(").and_then(|r| r.strip_suffix(')')) {
        return Ok(PatternSpec::Matched(Some(parse_spectrum(arg)?)));
    }
    Err(CliError::config(format!("unknown pattern `{s}`; valid patterns: {PATTERN_NAMES}")))
}

impl SpectrumSpec {
    pub fn build(&self) -> AngularSpectrum {
        match *self {
            SpectrumSpec::Isotropic => isotropic_spectrum(),
            SpectrumSpec::Cap(t) => cap_spectrum(t).expect("angle validated at parse time"),
        }
    }
}

impl PatternSpec {
    pub fn build(&self, spectrum: &SpectrumSpec, q: &HemisphereQuadrature) -> AntennaPattern {
        match self {
            PatternSpec::Omni => omni_pattern(),
            PatternSpec::Matched(s) => matched_pattern(&s.as_ref().unwrap_or(spectrum).build(), q),
        }
    }

    /// Omnidirectional antennas (or a pattern matched to isotropic
    /// scattering) couple through the closed-form sinc kernel.
    pub fn is_omni(&self, spectrum: &SpectrumSpec) -> bool {
        match self {
            PatternSpec::Omni => true,
            PatternSpec::Matched(s) => s.as_ref().unwrap_or(spectrum) == &SpectrumSpec::Isotropic,
        }
    }
}

/// A config with every name resolved and every range checked.
#[derive(Debug, Clone)]
pub struct Validated {
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub spectrum: SpectrumSpec,
    pub rx_spectrum: SpectrumSpec,
    pub pattern: Option<PatternSpec>,
    pub snr_db: Vec<f64>,
    pub quadrature: HemisphereQuadrature,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e == "json");
        Self::from_str(&text, json)
    }

    pub fn from_str(text: &str, json: bool) -> Result<Self, CliError> {
        if json {
            serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid JSON config: {e}")))
        } else {
            toml::from_str(text).map_err(|e| CliError::config(format!("invalid TOML config: {e}")))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<Validated, CliError> {
        let tx = self.tx.build()?;
        let rx = match &self.rx {
            Some(r) => r.build()?,
            None => tx.clone(),
        };
        let spectrum = parse_spectrum(&self.spectrum)?;
        let rx_spectrum = parse_spectrum(&self.rx_spectrum)?;
        let pattern = self.pattern.as_deref().map(parse_pattern).transpose()?;
        for &r in &self.rho {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(CliError::config(format!("rho must be finite and nonnegative, got {r}")));
            }
        }
        if self.mc == 0 {
            return Err(CliError::config("mc must be at least 1"));
        }
        if !(self.threshold_db < 0.0) {
            return Err(CliError::config("threshold_db must be negative"));
        }
        let [lo, hi] = self.slope_window_db;
        if !(hi > lo) {
            return Err(CliError::config("slope_window_db must be increasing"));
        }
        if let Some(w) = self.unit_audit_wavelength {
            if !(w > 0.0) || !w.is_finite() {
                return Err(CliError::config("unit_audit_wavelength must be positive"));
            }
        }
        let quadrature = HemisphereQuadrature::new(self.quadrature.polar, self.quadrature.azimuth)
            .map_err(CliError::from_core)?;
        let snr_db = self.snr_db.values()?;
        match self.kind {
            ExperimentKind::DofSweep if self.rho.is_empty() => {
                return Err(CliError::config("dof-sweep needs at least one rho"));
            }
            ExperimentKind::DofSweep | ExperimentKind::CouplingMatrix if pattern.is_none() => {
                return Err(CliError::config(format!("{} needs a transmit pattern", self.kind)));
            }
            _ => {}
        }
        Ok(Validated {
            tx,
            rx,
            spectrum,
            rx_spectrum,
            pattern,
            snr_db,
            quadrature,
        })
    }
}
