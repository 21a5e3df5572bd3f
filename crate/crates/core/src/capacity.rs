//! Waterfilling, precoders and ergodic capacity.

use faer::{c64, Mat};
use serde::Serialize;

use crate::channel::{ChannelModel, ChannelRealization, Domain};
use crate::coupling::{CouplingMatrix, FactorKind, SpdFactor};
use crate::error::{invalid, Error, Result};
use crate::linalg;

/// dB to linear, 10^(dB/10).
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Power allocation over eigenmodes under a sum budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterfillingAllocation {
    pub powers: Vec<f64>,
    pub water_level: f64,
    pub snr: f64,
}

impl WaterfillingAllocation {
    /// Σ log₂(1 + pᵢλᵢ) for the eigenvalues the allocation was built from.
    pub fn rate(&self, eigs: &[f64]) -> f64 {
        rate(eigs, &self.powers)
    }
}

/// Σ log₂(1 + pᵢλᵢ).
pub fn rate(eigs: &[f64], powers: &[f64]) -> f64 {
    eigs.iter()
        .zip(powers)
        .map(|(l, p)| (p * l).ln_1p())
        .sum::<f64>()
        / std::f64::consts::LN_2
}

/// Capacity-optimal allocation pᵢ = (ν − 1/λᵢ)⁺ with Σpᵢ = snr.
///
/// The water level is found by sorting: with modes in descending order, the
/// active set is the largest prefix whose smallest member still lies below ν.
pub fn waterfill(eigs: &[f64], snr: f64) -> Result<WaterfillingAllocation> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(invalid("snr", format!("must be positive and finite, got {snr}")));
    }
    if eigs.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(invalid("eigs", "eigenvalues must be finite and nonnegative"));
    }
    let mut order: Vec<usize> = (0..eigs.len()).filter(|&i| eigs[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::NoPositiveEigenvalue);
    }
    order.sort_by(|&a, &b| eigs[b].total_cmp(&eigs[a]).then(a.cmp(&b)));

    let mut inv_sum = 0.0;
    let mut nu = 0.0;
    for (k, &i) in order.iter().enumerate() {
        inv_sum += 1.0 / eigs[i];
        let level = (snr + inv_sum) / (k + 1) as f64;
        // Mode i joins if the level it implies stays above its own floor.
        if level <= 1.0 / eigs[i] {
            break;
        }
        nu = level;
    }
    let mut powers: Vec<f64> = eigs
        .iter()
        .map(|&l| if l > 0.0 { (nu - 1.0 / l).max(0.0) } else { 0.0 })
        .collect();
    // Remove the last rounding residue from the largest allocation.
    let total: f64 = powers.iter().sum();
    powers[order[0]] += snr - total;
    Ok(WaterfillingAllocation {
        powers,
        water_level: nu,
        snr,
    })
}

/// Equal split of the budget over every eigenvalue within 0.1% of λmax.
pub fn low_snr_allocation(eigs: &[f64], snr: f64) -> Result<WaterfillingAllocation> {
    let top = eigs.iter().copied().fold(0.0, f64::max);
    if !(top > 0.0) {
        return Err(Error::NoPositiveEigenvalue);
    }
    let tied: Vec<bool> = eigs.iter().map(|&l| l >= top * (1.0 - 1e-3)).collect();
    let k = tied.iter().filter(|t| **t).count() as f64;
    Ok(WaterfillingAllocation {
        powers: tied.iter().map(|&t| if t { snr / k } else { 0.0 }).collect(),
        water_level: snr / k + 1.0 / top,
        snr,
    })
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityPoint {
    pub snr_db: f64,
    pub capacity_bits: f64,
    pub stderr: f64,
    pub n_mc: usize,
}

/// Ergodic capacity against SNR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityCurve {
    pub points: Vec<CapacityPoint>,
}

impl CapacityCurve {
    pub fn at(&self, snr_db: f64) -> Option<&CapacityPoint> {
        self.points.iter().find(|p| (p.snr_db - snr_db).abs() < 1e-9)
    }
}

/// Runs `f` for indices 0..n and returns the results in index order.
fn per_realization<T: Send>(n: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n as u64).map(f).collect()
    }
}

fn budget(model: &ChannelModel, snr: f64) -> f64 {
    model
        .unit_audit()
        .map_or(snr, |c| snr * c.radiation_resistance() / 2.0)
}

/// Capacities of one realization at every grid point.
fn realization_rates(model: &ChannelModel, snr_db: &[f64], seed: u64, index: u64) -> Result<Vec<f64>> {
    let eigs = model.gram_eigenvalues(seed, index)?;
    snr_db
        .iter()
        .map(|&db| match waterfill(&eigs, budget(model, db_to_linear(db))) {
            Ok(a) => Ok(a.rate(&eigs)),
            Err(Error::NoPositiveEigenvalue) => Ok(0.0),
            Err(e) => Err(e),
        })
        .collect()
}

/// Mean over `n_mc` realizations of the waterfilling rate at each SNR.
pub fn ergodic_capacity(
    model: &ChannelModel,
    snr_db: &[f64],
    n_mc: usize,
    seed: u64,
) -> Result<CapacityCurve> {
    if n_mc == 0 {
        return Err(invalid("n_mc", "at least one realization is required"));
    }
    let rates = per_realization(n_mc, |i| realization_rates(model, snr_db, seed, i))?;
    let points = snr_db
        .iter()
        .enumerate()
        .map(|(k, &db)| {
            let col: Vec<f64> = rates.iter().map(|r| r[k]).collect();
            let (m, s) = mean_stderr(&col);
            CapacityPoint {
                snr_db: db,
                capacity_bits: m,
                stderr: s,
                n_mc,
            }
        })
        .collect();
    Ok(CapacityCurve { points })
}

/// Transmit precoder F together with the composite 𝗙 = C^{1/2}F.
#[derive(Debug, Clone)]
pub struct PrecoderMatrix {
    pub f: Mat<c64>,
    pub composite: Mat<c64>,
    /// tr(𝗙ᴴ𝗙).
    pub constraint: f64,
    pub allocation: Option<WaterfillingAllocation>,
}

fn power_of(m: &Mat<c64>) -> f64 {
    linalg::frobenius_c(m.as_ref()).powi(2)
}

fn real_times(a: &Mat<f64>, b: &Mat<c64>) -> Mat<c64> {
    &linalg::to_complex(a.as_ref()) * b
}

/// F* = C^{-1/2}·V·V_H̃·P^{1/2} (wavenumber draws) or C^{-1/2}·V_𝗛·P^{1/2}
/// (antenna-domain draws), with P from waterfilling on the realization.
pub fn optimal_precoder(
    h: &ChannelRealization,
    c_inv_sqrt: &SpdFactor,
    snr: f64,
) -> Result<PrecoderMatrix> {
    if c_inv_sqrt.kind() != FactorKind::InvSqrt {
        return Err(invalid("c_inv_sqrt", "expected an inverse square-root factor"));
    }
    let svd = h.matrix.svd().map_err(|_| Error::Decomposition)?;
    let s = svd.S().column_vector();
    let k = s.nrows();
    let eigs: Vec<f64> = (0..k).map(|i| s[i].re * s[i].re).collect();
    let alloc = waterfill(&eigs, snr)?;
    let v = svd.V();
    let vk = Mat::from_fn(v.nrows(), k, |i, j| v[(i, j)] * alloc.powers[j].sqrt());
    let composite = match h.domain {
        Domain::Antenna => vk,
        Domain::Wavenumber => {
            let lift = h.tx_lift.as_ref().ok_or_else(|| {
                Error::DimensionMismatch("wavenumber draw carries no transmit Fourier matrix".into())
            })?;
            lift.as_ref() * &vk
        }
    };
    if composite.nrows() != c_inv_sqrt.dim() {
        return Err(Error::DimensionMismatch(format!(
            "precoder has {} rows, coupling factor is {}x{}",
            composite.nrows(),
            c_inv_sqrt.dim(),
            c_inv_sqrt.dim()
        )));
    }
    let f = real_times(c_inv_sqrt.matrix(), &composite);
    let sqrt = c_inv_sqrt.counterpart()?;
    let recomposed = real_times(sqrt.matrix(), &f);
    Ok(PrecoderMatrix {
        constraint: power_of(&recomposed),
        composite: recomposed,
        f,
        allocation: Some(alloc),
    })
}

/// log₂ det(I + 𝗛𝗙𝗙ᴴ𝗛ᴴ) for the precoder's composite 𝗙.
///
/// Wavenumber draws act on 𝗙 through Vᴴ, i.e. the channel is H̃Vᴴ.
pub fn mutual_information(h: &ChannelRealization, p: &PrecoderMatrix) -> Result<f64> {
    let eff = match h.domain {
        Domain::Antenna => &h.matrix * &p.composite,
        Domain::Wavenumber => {
            let lift = h.tx_lift.as_ref().ok_or_else(|| {
                Error::DimensionMismatch("wavenumber draw carries no transmit Fourier matrix".into())
            })?;
            &h.matrix * &(lift.adjoint() * &p.composite)
        }
    };
    log_det_rate(&eff)
}

/// log₂ det(I + AAᴴ).
pub fn log_det_rate(a: &Mat<c64>) -> Result<f64> {
    let eigs = linalg::gram_eigenvalues(a.as_ref())?;
    Ok(eigs.iter().map(|l| l.ln_1p()).sum::<f64>() / std::f64::consts::LN_2)
}

fn solve_spd(c: &CouplingMatrix, a: &[c64]) -> Result<Vec<c64>> {
    let (vals, vecs) = linalg::symmetric_eigen(c.matrix().as_ref())?;
    if !(vals[0] > crate::coupling::EIGEN_FLOOR) {
        return Err(Error::NearSingular {
            smallest: vals[0],
            floor: crate::coupling::EIGEN_FLOOR,
        });
    }
    let inv: Vec<f64> = vals.iter().map(|v| 1.0 / v).collect();
    let ci = linalg::spectral_compose(vecs.as_ref(), &inv);
    Ok((0..a.len())
        .map(|i| (0..a.len()).map(|j| a[j] * ci[(i, j)]).sum())
        .collect())
}

fn quad_form(c: &CouplingMatrix, x: &[c64]) -> f64 {
    let m = c.matrix();
    let mut s = c64::new(0.0, 0.0);
    for i in 0..x.len() {
        for j in 0..x.len() {
            s += x[i].conj() * x[j] * m[(i, j)];
        }
    }
    s.re
}

fn column(x: Vec<c64>, scale: f64, c: &CouplingMatrix) -> PrecoderMatrix {
    let f = Mat::from_fn(x.len(), 1, |i, _| x[i] * scale);
    let fv: Vec<c64> = (0..x.len()).map(|i| f[(i, 0)]).collect();
    let constraint = quad_form(c, &fv);
    PrecoderMatrix {
        composite: Mat::zeros(0, 0),
        f,
        constraint,
        allocation: None,
    }
}

/// Line-of-sight precoder √SNR·C⁻¹a/√(aᴴC⁻¹a); tr(FᴴCF) = SNR exactly.
pub fn los_precoder(c: &CouplingMatrix, steering: &[c64], snr: f64) -> Result<PrecoderMatrix> {
    if steering.len() != c.dim() {
        return Err(Error::DimensionMismatch("steering vector length".into()));
    }
    let x = solve_spd(c, steering)?;
    let a_ci_a: f64 = steering.iter().zip(&x).map(|(a, x)| (a.conj() * x).re).sum();
    Ok(column(x, (snr / a_ci_a).sqrt(), c))
}

/// Matched filter √SNR·a/√(aᴴCa), scaled to the same constraint.
pub fn matched_filter(c: &CouplingMatrix, steering: &[c64], snr: f64) -> PrecoderMatrix {
    let x = steering.to_vec();
    let q = quad_form(c, &x);
    column(x, (snr / q).sqrt(), c)
}

/// |aᴴF|², the received power of a single-column precoder on the LOS channel.
pub fn received_power(steering: &[c64], p: &PrecoderMatrix) -> f64 {
    steering
        .iter()
        .enumerate()
        .map(|(i, a)| a.conj() * p.f[(i, 0)])
        .sum::<c64>()
        .norm_sqr()
}

/// Monte Carlo check of E{λmax(H̃H̃ᴴ)} ≤ max Λr · E{λmax(W′W′ᴴ)} · max Λt,
/// where W′ is W restricted to modes with nonzero gain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_stderr: f64,
    pub rhs_stderr: f64,
    pub n_mc: usize,
    pub holds: bool,
}

pub fn low_snr_bound_check(model: &ChannelModel, n_mc: usize, seed: u64) -> Result<BoundCheck> {
    let (rx, tx) = model.mode_profiles().ok_or_else(|| {
        Error::DimensionMismatch("the eigenvalue bound needs a Fourier model".into())
    })?;
    if n_mc == 0 {
        return Err(invalid("n_mc", "at least one realization is required"));
    }
    let audit = model
        .unit_audit()
        .map_or(1.0, |c| 2.0 / c.radiation_resistance());
    let scale = rx.max_gain() * tx.max_gain() * audit;
    let pairs = per_realization(n_mc, |i| model.max_eigen_pair(seed, i))?;
    let lhs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let rhs: Vec<f64> = pairs.iter().map(|p| p.1 * scale).collect();
    let (l, ls) = mean_stderr(&lhs);
    let (r, rs) = mean_stderr(&rhs);
    Ok(BoundCheck {
        lhs: l,
        rhs: r,
        lhs_stderr: ls,
        rhs_stderr: rs,
        n_mc,
        holds: l <= r * (1.0 + 1e-12),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofCheck {
    pub slope: f64,
    pub predicted: usize,
    pub window_db: (f64, f64),
    pub n_mc: usize,
}

impl DofCheck {
    pub fn relative_error(&self) -> f64 {
        (self.slope - self.predicted as f64).abs() / self.predicted as f64
    }
}

/// Finite-difference slope of capacity against log₂SNR over the window,
/// compared with min(n′_r, n′_t).
pub fn high_snr_dof_check(
    model: &ChannelModel,
    window_db: (f64, f64),
    n_mc: usize,
    seed: u64,
) -> Result<DofCheck> {
    let (rx, tx) = model.mode_profiles().ok_or_else(|| {
        Error::DimensionMismatch("the DOF prediction needs a Fourier model".into())
    })?;
    if !(window_db.1 > window_db.0) {
        return Err(invalid("window_db", "upper end must exceed lower end"));
    }
    let curve = ergodic_capacity(model, &[window_db.0, window_db.1], n_mc, seed)?;
    let dc = curve.points[1].capacity_bits - curve.points[0].capacity_bits;
    let doublings = (window_db.1 - window_db.0) / 10.0 * 10f64.log2();
    Ok(DofCheck {
        slope: dc / doublings,
        predicted: rx.dof_prime().min(tx.dof_prime()),
        window_db,
        n_mc,
    })
}
