//! Experiment runners: one per [`ExperimentKind`].

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use holomimo_core::capacity::{
    ergodic_capacity, high_snr_dof_check, low_snr_bound_check, BoundCheck, CapacityCurve, DofCheck,
};
use holomimo_core::channel::{
    exact_correlation, whiten, ChannelModel, CorrelationMatrix, ModeProfile,
};
use holomimo_core::coupling::{coupling_closed_form, coupling_general, regularize, spd_inv_sqrt, CouplingMatrix};
use holomimo_core::fourier::FourierBasis;
use holomimo_core::geometry::{ArrayGeometry, PhysicalConstants};
use serde::Serialize;

use crate::config::{ChannelKind, ExperimentConfig, ExperimentKind, Validated};
use crate::output::{FileRecord, OutputDir};
use crate::CliError;

/// Eigenvalues below λmax·10^-30 are written as -300 dB.
const DB_FLOOR: f64 = 1e-30;

/// A sorted eigenvalue curve as written to CSV.
#[derive(Debug, Clone, Serialize)]
pub struct EigenCurve {
    pub label: String,
    /// Descending.
    pub values: Vec<f64>,
}

impl EigenCurve {
    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn trace(&self) -> f64 {
        self.values.iter().filter(|v| **v > 0.0).sum()
    }

    /// Number of eigenvalues at or above `threshold_db` relative to the maximum.
    pub fn count_above(&self, threshold_db: f64) -> usize {
        let cut = self.max() * 10f64.powf(threshold_db / 10.0);
        self.values.iter().filter(|v| **v >= cut).count()
    }

    /// 10·log10(λ/λmax), floored.
    pub fn db_max_normalized(&self) -> Vec<f64> {
        let m = self.max();
        self.values.iter().map(|v| 10.0 * (v.max(m * DB_FLOOR) / m).log10()).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DofCount {
    pub rho: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedCurve {
    pub label: String,
    pub rho: Option<f64>,
    pub curve: CapacityCurve,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub low_snr: BoundCheck,
    pub high_snr: DofCheck,
    pub relative_error: f64,
}

/// Everything a run produced, in memory.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    #[serde(skip)]
    pub eigen: Vec<EigenCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uncoupled_count: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dof_counts: Vec<DofCount>,
    #[serde(skip)]
    pub curves: Vec<NamedCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundReport>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub files: Vec<FileRecord>,
}

impl RunReport {
    pub fn curve(&self, label: &str) -> Option<&CapacityCurve> {
        self.curves.iter().find(|c| c.label == label).map(|c| &c.curve)
    }

    pub fn eigen(&self, label: &str) -> Option<&EigenCurve> {
        self.eigen.iter().find(|c| c.label == label)
    }
}

#[derive(Serialize)]
struct EigenRow {
    index: usize,
    index_over_n: f64,
    eig_db_max_normalized: f64,
    eig_db_trace_normalized: f64,
}

#[derive(Serialize)]
struct VarianceRow {
    jx: i64,
    jy: i64,
    sigma2: f64,
}

#[derive(Serialize)]
struct CouplingRow {
    row: usize,
    col: usize,
    value: f64,
}

#[derive(Serialize)]
struct CapacityRow {
    snr_db: f64,
    capacity_bits: f64,
    stderr: f64,
    n_mc: usize,
}

#[derive(Serialize)]
struct Versions {
    holomimo: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    seed: u64,
    versions: Versions,
    timestamp_unix: u64,
    wall_time_s: f64,
    results: &'a RunReport,
    files: &'a [FileRecord],
}

fn rho_tag(rho: f64) -> String {
    format!("rho{rho:e}")
}

/// n is the lattice size, so index/n = 1 marks the expected polarization.
fn write_eigen(out: &mut OutputDir, name: &str, curve: &EigenCurve, n: usize) -> Result<(), CliError> {
    let db = curve.db_max_normalized();
    let tr = curve.trace();
    let rows: Vec<EigenRow> = curve
        .values
        .iter()
        .zip(&db)
        .enumerate()
        .map(|(i, (&v, &d))| EigenRow {
            index: i + 1,
            index_over_n: (i + 1) as f64 / n as f64,
            eig_db_max_normalized: d,
            eig_db_trace_normalized: 10.0 * (v.max(curve.max() * DB_FLOOR) / tr).log10(),
        })
        .collect();
    out.csv(name, &[], &rows)
}

fn write_variances(out: &mut OutputDir, name: &str, b: &FourierBasis) -> Result<(), CliError> {
    let rows: Vec<VarianceRow> = b
        .lattice()
        .points()
        .iter()
        .zip(b.variances())
        .map(|(&(jx, jy), &sigma2)| VarianceRow { jx, jy, sigma2 })
        .collect();
    out.csv(name, &[], &rows)
}

fn write_curve(out: &mut OutputDir, name: &str, c: &NamedCurve) -> Result<(), CliError> {
    let rows: Vec<CapacityRow> = c
        .curve
        .points
        .iter()
        .map(|p| CapacityRow {
            snr_db: p.snr_db,
            capacity_bits: p.capacity_bits,
            stderr: p.stderr,
            n_mc: p.n_mc,
        })
        .collect();
    out.csv(name, &[], &rows)
}

/// Coupling matrix of the transmit array; omni antennas use the closed form.
fn coupling(cfg: &Validated, g: &ArrayGeometry) -> Result<CouplingMatrix, CliError> {
    let p = cfg.pattern.as_ref().expect("checked by the caller");
    if p.is_omni(&cfg.spectrum) {
        Ok(coupling_closed_form(g))
    } else {
        Ok(coupling_general(g, &p.build(&cfg.spectrum, &cfg.quadrature), &cfg.quadrature)?)
    }
}

/// Transmit Fourier basis, coupled when a pattern is given.
fn tx_basis(cfg: &Validated) -> Result<FourierBasis, CliError> {
    let s = cfg.spectrum.build();
    Ok(match &cfg.pattern {
        Some(p) => FourierBasis::coupled(&cfg.tx, &s, &p.build(&cfg.spectrum, &cfg.quadrature))?,
        None => FourierBasis::uncoupled(&cfg.tx, &s)?,
    })
}

fn warn_undersampled(b: &FourierBasis, side: &str, report: &mut RunReport) {
    if b.undersampled() {
        report.warnings.push(format!(
            "{side} array has {} antennas for {} lattice points; the Fourier basis is undersampled",
            b.antennas(),
            b.n()
        ));
    }
}

fn eigen_of(r: &CorrelationMatrix, label: String) -> Result<EigenCurve, CliError> {
    Ok(EigenCurve {
        label,
        values: r.eigenvalues()?,
    })
}

fn run_eigenvalues(
    cfg: &ExperimentConfig,
    v: &Validated,
    out: &mut OutputDir,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let basis = tx_basis(v)?;
    warn_undersampled(&basis, "transmit", report);
    let n = basis.n();
    let r = exact_correlation(&v.tx, &v.spectrum.build(), &v.quadrature);
    let fourier = EigenCurve {
        label: format!("fourier {}", cfg.spectrum),
        values: basis.eigenvalues(),
    };
    if v.pattern.is_none() {
        let exact = eigen_of(&r, format!("exact {}", cfg.spectrum))?;
        write_eigen(out, "eigenvalues_exact.csv", &exact, n)?;
        write_eigen(out, "eigenvalues_fourier.csv", &fourier, n)?;
        write_variances(out, "variances.csv", &basis)?;
        report.eigen.extend([exact, fourier]);
        return Ok(());
    }
    let c = coupling(v, &v.tx)?;
    let rhos = if cfg.rho.is_empty() { vec![0.0] } else { cfg.rho.clone() };
    for rho in rhos {
        let f = spd_inv_sqrt(&regularize(&c, rho)?)?;
        let exact = eigen_of(&whiten(&r, &f)?, format!("exact coupled {} rho={rho:e}", cfg.spectrum))?;
        write_eigen(out, &format!("eigenvalues_exact_{}.csv", rho_tag(rho)), &exact, n)?;
        report.eigen.push(exact);
    }
    write_eigen(out, "eigenvalues_fourier_coupled.csv", &fourier, n)?;
    write_variances(out, "variances_coupled.csv", &basis)?;
    report.eigen.push(fourier);
    Ok(())
}

fn run_dof_sweep(
    cfg: &ExperimentConfig,
    v: &Validated,
    out: &mut OutputDir,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let c = coupling(v, &v.tx)?;
    // Factor first: a singular coupling matrix fails before the long integral.
    let factors = cfg
        .rho
        .iter()
        .map(|&rho| spd_inv_sqrt(&regularize(&c, rho)?))
        .collect::<Result<Vec<_>, _>>()?;
    let r = exact_correlation(&v.tx, &v.spectrum.build(), &v.quadrature);
    let n = holomimo_core::fourier::build_lattice(v.tx.aperture_matrix()).n();
    let unc = eigen_of(&r, format!("exact {}", cfg.spectrum))?;
    let unc_count = unc.count_above(cfg.threshold_db);
    write_eigen(out, "eigenvalues_uncoupled.csv", &unc, n)?;
    report.uncoupled_count = Some(unc_count);
    report.eigen.push(unc);
    for (&rho, f) in cfg.rho.iter().zip(&factors) {
        let e = eigen_of(&whiten(&r, f)?, format!("exact coupled {} rho={rho:e}", cfg.spectrum))?;
        write_eigen(out, &format!("eigenvalues_{}.csv", rho_tag(rho)), &e, n)?;
        report.dof_counts.push(DofCount {
            rho,
            count: e.count_above(cfg.threshold_db),
        });
        report.eigen.push(e);
    }
    #[derive(Serialize)]
    struct Counts<'a> {
        threshold_db: f64,
        lattice_points: usize,
        uncoupled: usize,
        coupled: &'a [DofCount],
    }
    out.json(
        "dof_counts.json",
        &Counts {
            threshold_db: cfg.threshold_db,
            lattice_points: n,
            uncoupled: unc_count,
            coupled: &report.dof_counts,
        },
    )
}

fn audited(model: ChannelModel, cfg: &ExperimentConfig) -> Result<ChannelModel, CliError> {
    Ok(match cfg.unit_audit_wavelength {
        Some(w) => model.with_unit_audit(PhysicalConstants::new(w)?),
        None => model,
    })
}

/// Fourier model with an uncoupled receive basis and the transmit basis of the config.
fn fourier_model(cfg: &ExperimentConfig, v: &Validated, report: &mut RunReport) -> Result<ChannelModel, CliError> {
    let tx = tx_basis(v)?;
    let rx = FourierBasis::uncoupled(&v.rx, &v.rx_spectrum.build())?;
    warn_undersampled(&tx, "transmit", report);
    warn_undersampled(&rx, "receive", report);
    audited(ChannelModel::fourier(ModeProfile::from_basis(&rx), ModeProfile::from_basis(&tx)), cfg)
}

fn run_capacity(
    cfg: &ExperimentConfig,
    v: &Validated,
    out: &mut OutputDir,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let (nr, nt) = (v.rx.count(), v.tx.count());
    let mut models: Vec<(String, Option<f64>, ChannelModel)> =
        vec![("iid".into(), None, audited(ChannelModel::iid(nr, nt), cfg)?)];
    match cfg.channel {
        ChannelKind::Fourier => {
            models.push(("fourier".into(), None, fourier_model(cfg, v, report)?));
        }
        ChannelKind::Exact => {
            let factors = match &v.pattern {
                Some(_) => {
                    let c = coupling(v, &v.tx)?;
                    cfg.rho
                        .iter()
                        .map(|&rho| Ok((rho, spd_inv_sqrt(&regularize(&c, rho)?)?)))
                        .collect::<Result<Vec<_>, CliError>>()?
                }
                None => Vec::new(),
            };
            let r = exact_correlation(&v.tx, &v.spectrum.build(), &v.quadrature);
            models.push(("uncoupled".into(), None, audited(ChannelModel::exact(nr, Some(&r), None)?, cfg)?));
            for (rho, f) in &factors {
                let m = ChannelModel::exact(nr, Some(&r), Some(f))?;
                models.push((format!("coupled rho={rho:e}"), Some(*rho), audited(m, cfg)?));
            }
        }
    }
    for (label, rho, model) in models {
        let curve = ergodic_capacity(&model, &v.snr_db, cfg.mc, cfg.seed)?;
        if curve.points.iter().any(|p| !p.capacity_bits.is_finite()) {
            return Err(CliError::Numerical(holomimo_core::Error::NonFinite("capacity curve")));
        }
        let named = NamedCurve { label, rho, curve };
        let file = match (rho, named.label.as_str()) {
            (Some(r), _) => format!("capacity_{}.csv", rho_tag(r)),
            (None, l) => format!("capacity_{l}.csv"),
        };
        write_curve(out, &file, &named)?;
        report.curves.push(named);
    }
    Ok(())
}

fn run_coupling_matrix(
    cfg: &ExperimentConfig,
    v: &Validated,
    out: &mut OutputDir,
    _report: &mut RunReport,
) -> Result<(), CliError> {
    let c = coupling(v, &v.tx)?;
    let rhos = if cfg.rho.is_empty() { vec![0.0] } else { cfg.rho.clone() };
    for rho in rhos {
        let m = regularize(&c, rho)?;
        let n = m.dim();
        let rows: Vec<CouplingRow> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(row, col)| CouplingRow {
                row,
                col,
                value: m.matrix()[(row, col)],
            })
            .collect();
        let header = [
            format!("N = {n}"),
            format!("rho = {rho:e}"),
            format!("geometry = {}", m.geometry_digest()),
        ];
        out.csv(&format!("coupling_{}.csv", rho_tag(rho)), &header, &rows)?;
    }
    Ok(())
}

fn run_bound_check(
    cfg: &ExperimentConfig,
    v: &Validated,
    out: &mut OutputDir,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let model = fourier_model(cfg, v, report)?;
    let low = low_snr_bound_check(&model, cfg.mc, cfg.seed)?;
    let [lo, hi] = cfg.slope_window_db;
    let high = high_snr_dof_check(&model, (lo, hi), cfg.mc, cfg.seed)?;
    let b = BoundReport {
        relative_error: high.relative_error(),
        low_snr: low,
        high_snr: high,
    };
    out.json("bound_check.json", &b)?;
    report.bound = Some(b);
    Ok(())
}

/// Validates `cfg`, runs it, and writes its outputs plus `manifest.json`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let v = cfg.validate()?;
    let mut out = OutputDir::create(&cfg.out_dir)?;
    let mut report = RunReport::default();
    match cfg.kind {
        ExperimentKind::Eigenvalues => run_eigenvalues(cfg, &v, &mut out, &mut report)?,
        ExperimentKind::DofSweep => run_dof_sweep(cfg, &v, &mut out, &mut report)?,
        ExperimentKind::Capacity => run_capacity(cfg, &v, &mut out, &mut report)?,
        ExperimentKind::CouplingMatrix => run_coupling_matrix(cfg, &v, &mut out, &mut report)?,
        ExperimentKind::BoundCheck => run_bound_check(cfg, &v, &mut out, &mut report)?,
    }
    report.files = out.files().to_vec();
    let manifest = Manifest {
        config: cfg,
        seed: cfg.seed,
        versions: Versions {
            holomimo: env!("CARGO_PKG_VERSION"),
        },
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        wall_time_s: start.elapsed().as_secs_f64(),
        results: &report,
        files: out.files(),
    };
    out.manifest(&manifest)?;
    Ok(report)
}

