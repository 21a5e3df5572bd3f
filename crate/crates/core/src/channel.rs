//! Correlation matrices and random channel realizations.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::{c64, Mat};

use crate::coupling::{spd_inv_sqrt, CouplingMatrix, SpdFactor};
use crate::error::{Error, Result};
use crate::fourier::FourierBasis;
use crate::geometry::{ArrayGeometry, PhysicalConstants};
use crate::kernel::hemisphere_kernel;
use crate::linalg;
use crate::quadrature::HemisphereQuadrature;
use crate::rng::ComplexGaussianStream;
use crate::spectra::{AngularSpectrum, SphereDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationFlavor {
    ExactUncoupled,
    FourierUncoupled,
    FourierCoupled,
    ExactCoupled,
}

/// Hermitian spatial correlation matrix.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    matrix: Mat<c64>,
    flavor: CorrelationFlavor,
    provenance: String,
}

impl CorrelationMatrix {
    /// Wraps a matrix, forcing exact Hermitian symmetry.
    pub fn from_matrix(
        mut matrix: Mat<c64>,
        flavor: CorrelationFlavor,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch("correlation matrix must be square".into()));
        }
        linalg::hermitize(&mut matrix);
        Ok(Self {
            matrix,
            flavor,
            provenance: provenance.into(),
        })
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn flavor(&self) -> CorrelationFlavor {
        self.flavor
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut v = linalg::hermitian_eigenvalues(self.matrix.as_ref())?;
        v.reverse();
        Ok(v)
    }

    /// R^{1/2}, with rounding-level negative eigenvalues clamped.
    pub fn sqrt(&self) -> Result<Mat<c64>> {
        let (vals, vecs) = linalg::hermitian_eigen(self.matrix.as_ref())?;
        let top = vals.last().copied().unwrap_or(0.0).max(1.0);
        if let Some(&low) = vals.first() {
            if low < -1e-8 * top {
                return Err(Error::NotPsd { eigenvalue: low });
            }
        }
        let g: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
        Ok(linalg::hermitian_compose(vecs.as_ref(), &g))
    }
}

/// [R]ₘₘ′ = (1/2π)∫ S̄ aₘ conj(aₘ′) sinθ dθ dφ over the upper hemisphere.
pub fn exact_correlation(
    g: &ArrayGeometry,
    s: &AngularSpectrum,
    q: &HemisphereQuadrature,
) -> CorrelationMatrix {
    let q = q.restricted(s.support().theta_max());
    let k = hemisphere_kernel(g.positions(), &q, &|t, p| s.folded(t, p));
    CorrelationMatrix {
        matrix: k,
        flavor: CorrelationFlavor::ExactUncoupled,
        provenance: format!("exact {} on {}", s.label(), g.digest()),
    }
}

/// C^{-1/2} R C^{-1/2} for a precomputed inverse square root.
pub fn whiten(r: &CorrelationMatrix, c_inv_sqrt: &SpdFactor) -> Result<CorrelationMatrix> {
    if c_inv_sqrt.dim() != r.dim() {
        return Err(Error::DimensionMismatch(format!(
            "correlation is {0}x{0}, coupling factor is {1}x{1}",
            r.dim(),
            c_inv_sqrt.dim()
        )));
    }
    let f = linalg::to_complex(c_inv_sqrt.matrix().as_ref());
    let mut m = &(&f * &r.matrix) * &f;
    linalg::hermitize(&mut m);
    Ok(CorrelationMatrix {
        matrix: m,
        flavor: CorrelationFlavor::ExactCoupled,
        provenance: format!("{} whitened at rho={}", r.provenance, c_inv_sqrt.loss_factor()),
    })
}

/// C^{-1/2} R C^{-1/2}.
pub fn coupled_correlation_exact(
    r: &CorrelationMatrix,
    c: &CouplingMatrix,
) -> Result<CorrelationMatrix> {
    whiten(r, &spd_inv_sqrt(c)?)
}

/// V·diag(N σ²ⱼ)·Vᴴ.
pub fn fourier_correlation(b: &FourierBasis) -> CorrelationMatrix {
    let nn = b.antennas() as f64;
    let g: Vec<f64> = b.variances().iter().map(|v| nn * v).collect();
    let m = linalg::hermitian_compose(b.matrix().as_ref(), &g);
    let flavor = match b.flavor() {
        crate::fourier::VarianceFlavor::Uncoupled => CorrelationFlavor::FourierUncoupled,
        crate::fourier::VarianceFlavor::Coupled => CorrelationFlavor::FourierCoupled,
    };
    CorrelationMatrix {
        matrix: m,
        flavor,
        provenance: format!("fourier n={}", b.n()),
    }
}

/// Array response exp(i2π k·r) toward (θ, φ).
pub fn array_response(g: &ArrayGeometry, theta: f64, phi: f64) -> Vec<c64> {
    let (st, ct) = theta.sin_cos();
    let (kx, ky) = (st * phi.cos(), st * phi.sin());
    g.positions()
        .iter()
        .map(|p| {
            let (s, c) = (2.0 * PI * (kx * p[0] + ky * p[1] + ct * p[2])).sin_cos();
            c64::new(c, s)
        })
        .collect()
}

/// Mode gains of one side of a Kronecker Fourier channel.
#[derive(Debug, Clone)]
pub struct ModeProfile {
    gains: Vec<f64>,
    dof_prime: usize,
    lift: Option<Arc<Mat<c64>>>,
}

impl ModeProfile {
    /// Gains N·σ²ⱼ of a Fourier basis, lifted by its Fourier matrix.
    pub fn from_basis(b: &FourierBasis) -> Self {
        let nn = b.antennas() as f64;
        Self {
            gains: b.variances().iter().map(|v| nn * v).collect(),
            dof_prime: b.dof_prime(),
            lift: Some(Arc::new(b.matrix().clone())),
        }
    }

    /// n unit gains with no spatial lift (IID side).
    pub fn iid(n: usize) -> Self {
        Self {
            gains: vec![1.0; n],
            dof_prime: n,
            lift: None,
        }
    }

    /// Explicit gains; the DOF prediction counts the nonzero ones.
    pub fn from_gains(gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() || gains.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::NonFinite("mode gains"));
        }
        let dof_prime = gains.iter().filter(|g| **g > 0.0).count();
        Ok(Self {
            gains,
            dof_prime,
            lift: None,
        })
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn dim(&self) -> usize {
        self.gains.len()
    }

    pub fn dof_prime(&self) -> usize {
        self.dof_prime
    }

    pub fn lift(&self) -> Option<&Arc<Mat<c64>>> {
        self.lift.as_ref()
    }

    pub fn max_gain(&self) -> f64 {
        self.gains.iter().copied().fold(0.0, f64::max)
    }

    fn active(&self) -> Vec<usize> {
        (0..self.gains.len()).filter(|&i| self.gains[i] > 0.0).collect()
    }
}

/// Which space a realization's matrix lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// n_r × n_t equivalent channel H̃.
    Wavenumber,
    /// N_r × N_t antenna-domain channel.
    Antenna,
}

/// One random channel draw.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub matrix: Mat<c64>,
    pub domain: Domain,
    pub seed: u64,
    pub stream: u64,
    /// Transmit Fourier matrix V for wavenumber-domain draws.
    pub tx_lift: Option<Arc<Mat<c64>>>,
}

#[derive(Debug, Clone)]
enum Kind {
    Fourier {
        rx: ModeProfile,
        tx: ModeProfile,
    },
    Exact {
        nr: usize,
        rx: Option<Mat<c64>>,
        tx: Option<Mat<c64>>,
    },
    Fixed(Mat<c64>),
}

/// Channel ensemble from which realizations are drawn.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    kind: Kind,
    unit_audit: Option<PhysicalConstants>,
}

impl ChannelModel {
    /// H̃ = Λr^{1/2} W Λt^{1/2}.
    pub fn fourier(rx: ModeProfile, tx: ModeProfile) -> Self {
        Self {
            kind: Kind::Fourier { rx, tx },
            unit_audit: None,
        }
    }

    /// 𝗛 = H_IID · R^{1/2} · C^{-1/2}; either factor may be absent (identity).
    pub fn exact(
        nr: usize,
        rt: Option<&CorrelationMatrix>,
        c_inv_sqrt: Option<&SpdFactor>,
    ) -> Result<Self> {
        let r = rt.map(|r| r.sqrt()).transpose()?;
        let tx = match (r, c_inv_sqrt) {
            (None, None) => None,
            (Some(r), None) => Some(r),
            (None, Some(f)) => Some(linalg::to_complex(f.matrix().as_ref())),
            (Some(r), Some(f)) => {
                if f.dim() != r.nrows() {
                    return Err(Error::DimensionMismatch(format!(
                        "correlation is {}x{}, coupling factor is {}x{}",
                        r.nrows(),
                        r.nrows(),
                        f.dim(),
                        f.dim()
                    )));
                }
                Some(&r * &linalg::to_complex(f.matrix().as_ref()))
            }
        };
        Ok(Self {
            kind: Kind::Exact { nr, rx: None, tx },
            unit_audit: None,
        })
    }

    /// Deterministic channel: every realization is `h`.
    pub fn fixed(h: Mat<c64>) -> Self {
        Self {
            kind: Kind::Fixed(h),
            unit_audit: None,
        }
    }

    /// IID N_r × N_t channel.
    pub fn iid(nr: usize, nt: usize) -> Self {
        Self::fourier(ModeProfile::iid(nr), ModeProfile::iid(nt))
    }

    /// Correlated receive side R_r^{1/2} for the exact model.
    pub fn with_receive_correlation(mut self, rr: &CorrelationMatrix) -> Result<Self> {
        match &mut self.kind {
            Kind::Exact { nr, rx, .. } => {
                if rr.dim() != *nr {
                    return Err(Error::DimensionMismatch("receive correlation size".into()));
                }
                *rx = Some(rr.sqrt()?);
                Ok(self)
            }
            _ => Err(Error::DimensionMismatch(
                "receive correlation applies to the exact model".into(),
            )),
        }
    }

    /// Reinstate the √(2/R) channel prefactor; capacity routines then read
    /// their SNR argument back through R/2 so results are unchanged.
    pub fn with_unit_audit(mut self, constants: PhysicalConstants) -> Self {
        self.unit_audit = Some(constants);
        self
    }

    pub fn unit_audit(&self) -> Option<PhysicalConstants> {
        self.unit_audit
    }

    /// (N_r, N_t) of the matrices this model produces.
    pub fn dims(&self) -> (usize, usize) {
        match &self.kind {
            Kind::Fourier { rx, tx } => (rx.dim(), tx.dim()),
            Kind::Exact { nr, tx, .. } => (*nr, tx.as_ref().map_or(*nr, |t| t.nrows())),
            Kind::Fixed(h) => (h.nrows(), h.ncols()),
        }
    }

    pub fn mode_profiles(&self) -> Option<(&ModeProfile, &ModeProfile)> {
        match &self.kind {
            Kind::Fourier { rx, tx } => Some((rx, tx)),
            _ => None,
        }
    }

    fn prefactor(&self) -> f64 {
        self.unit_audit
            .map_or(1.0, |c| (2.0 / c.radiation_resistance()).sqrt())
    }

    /// Realization number `index` of the ensemble seeded by `seed`.
    pub fn realize(&self, seed: u64, index: u64) -> ChannelRealization {
        let mut rng = ComplexGaussianStream::new(seed, index);
        let scale = self.prefactor();
        match &self.kind {
            Kind::Fourier { rx, tx } => {
                let w = rng.matrix(rx.dim(), tx.dim());
                let m = Mat::from_fn(rx.dim(), tx.dim(), |i, j| {
                    w[(i, j)] * (rx.gains[i] * tx.gains[j]).sqrt() * scale
                });
                // Without a transmit lift the modes are the antennas themselves.
                let domain = if tx.lift.is_some() { Domain::Wavenumber } else { Domain::Antenna };
                ChannelRealization {
                    matrix: m,
                    domain,
                    seed,
                    stream: index,
                    tx_lift: tx.lift.clone(),
                }
            }
            Kind::Exact { nr, rx, tx } => {
                let nt = tx.as_ref().map_or(*nr, |t| t.nrows());
                let mut h = rng.matrix(*nr, nt);
                if let Some(t) = tx {
                    h = &h * t;
                }
                if let Some(r) = rx {
                    h = r * &h;
                }
                if scale != 1.0 {
                    h = Mat::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] * scale);
                }
                ChannelRealization {
                    matrix: h,
                    domain: Domain::Antenna,
                    seed,
                    stream: index,
                    tx_lift: None,
                }
            }
            Kind::Fixed(h) => ChannelRealization {
                matrix: Mat::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] * scale),
                domain: Domain::Antenna,
                seed,
                stream: index,
                tx_lift: None,
            },
        }
    }

    /// Nonzero-relevant eigenvalues of HHᴴ for realization `index`, with
    /// zero-gain modes dropped before the Gram product.
    pub fn gram_eigenvalues(&self, seed: u64, index: u64) -> Result<Vec<f64>> {
        let r = self.realize(seed, index);
        match &self.kind {
            Kind::Fourier { rx, tx } => {
                let (ri, ti) = (rx.active(), tx.active());
                if ri.is_empty() || ti.is_empty() {
                    return Ok(vec![0.0]);
                }
                let sub = Mat::from_fn(ri.len(), ti.len(), |i, j| r.matrix[(ri[i], ti[j])]);
                linalg::gram_eigenvalues(sub.as_ref())
            }
            _ => linalg::gram_eigenvalues(r.matrix.as_ref()),
        }
    }

    /// Draws W for realization `index` restricted to active modes, and returns
    /// (λmax(H̃H̃ᴴ), λmax(W′W′ᴴ)).
    pub(crate) fn max_eigen_pair(&self, seed: u64, index: u64) -> Result<(f64, f64)> {
        let Kind::Fourier { rx, tx } = &self.kind else {
            return Err(Error::DimensionMismatch(
                "the eigenvalue bound needs a Fourier model".into(),
            ));
        };
        let mut rng = ComplexGaussianStream::new(seed, index);
        let w = rng.matrix(rx.dim(), tx.dim());
        let (ri, ti) = (rx.active(), tx.active());
        if ri.is_empty() || ti.is_empty() {
            return Ok((0.0, 0.0));
        }
        let scale = self.prefactor();
        let wsub = Mat::from_fn(ri.len(), ti.len(), |i, j| w[(ri[i], ti[j])]);
        let hsub = Mat::from_fn(ri.len(), ti.len(), |i, j| {
            wsub[(i, j)] * (rx.gains[ri[i]] * tx.gains[ti[j]]).sqrt() * scale
        });
        let top = |m: &Mat<c64>| -> Result<f64> {
            Ok(linalg::gram_eigenvalues(m.as_ref())?.last().copied().unwrap_or(0.0))
        };
        Ok((top(&hsub)?, top(&wsub)?))
    }
}

/// H̃ = Λr^{1/2} W Λt^{1/2} with gains N·σ²ⱼ of the two bases.
pub fn sample_fourier_channel(rx: &FourierBasis, tx: &FourierBasis, seed: u64) -> ChannelRealization {
    ChannelModel::fourier(ModeProfile::from_basis(rx), ModeProfile::from_basis(tx)).realize(seed, 0)
}

/// 𝗛 = H_IID R^{1/2} C^{-1/2} with an IID receive side of `nr` antennas.
pub fn sample_exact_channel(
    rt: &CorrelationMatrix,
    c: &CouplingMatrix,
    nr: usize,
    seed: u64,
) -> Result<ChannelRealization> {
    let f = spd_inv_sqrt(c)?;
    Ok(ChannelModel::exact(nr, Some(rt), Some(&f))?.realize(seed, 0))
}
