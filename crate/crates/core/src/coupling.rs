//! Transmit coupling matrices, loss regularization and symmetric factors.

use std::f64::consts::PI;

use faer::Mat;

use crate::error::{invalid, Error, Result};
use crate::geometry::ArrayGeometry;
use crate::kernel::hemisphere_kernel;
use crate::linalg;
use crate::quadrature::HemisphereQuadrature;
use crate::spectra::{AntennaPattern, SphereDensity};

/// Pattern normalization accepted by [`coupling_general`].
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Largest imaginary part the quadrature may leave behind in a real kernel.
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// Smallest eigenvalue accepted by [`spd_inv_sqrt`].
pub const EIGEN_FLOOR: f64 = 1e-12;

/// sin(πx)/(πx).
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Real symmetric coupling matrix, possibly with a loss factor on the diagonal.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    matrix: Mat<f64>,
    rho: f64,
    geometry: String,
}

impl CouplingMatrix {
    /// Wraps an explicit symmetric matrix (used for tests and custom models).
    pub fn from_matrix(matrix: Mat<f64>, rho: f64, geometry: impl Into<String>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch("coupling matrix must be square".into()));
        }
        let n = matrix.nrows();
        for i in 0..n {
            for j in 0..i {
                if matrix[(i, j)] != matrix[(j, i)] {
                    return Err(invalid("matrix", "coupling matrix must be symmetric"));
                }
            }
        }
        Ok(Self {
            matrix,
            rho,
            geometry: geometry.into(),
        })
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Accumulated loss factor ρ.
    pub fn loss_factor(&self) -> f64 {
        self.rho
    }

    /// Digest of the geometry this matrix was built on.
    pub fn geometry_digest(&self) -> &str {
        &self.geometry
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::symmetric_eigenvalues(self.matrix.as_ref())
    }
}

/// Closed-form kernel sinc(2‖r_n − s_m‖) for punctiform antennas.
pub fn coupling_closed_form(g: &ArrayGeometry) -> CouplingMatrix {
    let p = g.positions();
    let n = p.len();
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        for j in i + 1..n {
            let d = (p[i][0] - p[j][0]).hypot(p[i][1] - p[j][1]);
            let v = sinc(2.0 * d);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    CouplingMatrix {
        matrix: m,
        rho: 0.0,
        geometry: g.digest(),
    }
}

/// Coupling matrix of antennas with power pattern `a`, by quadrature:
/// (1/4π)∫ |A|² a_n conj(a_m) sinθ dθ dφ over the sphere.
pub fn coupling_general(
    g: &ArrayGeometry,
    a: &AntennaPattern,
    q: &HemisphereQuadrature,
) -> Result<CouplingMatrix> {
    let norm = a.normalization(q);
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized {
            what: "antenna pattern",
            integral: norm,
            tolerance: NORMALIZATION_TOL,
        });
    }
    let q = q.restricted(a.support().theta_max());
    let k = hemisphere_kernel(g.positions(), &q, &|t, p| a.folded(t, p));
    let n = g.count();
    let mut residue: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            residue = residue.max(k[(i, j)].im.abs());
        }
    }
    if residue > IMAG_RESIDUE_TOL {
        return Err(invalid(
            "pattern",
            format!("kernel has imaginary part {residue:.2e}; the pattern must satisfy |A(k)| = |A(-k)|"),
        ));
    }
    // Hermitian with negligible imaginary part, so the real part is symmetric.
    let m = Mat::from_fn(n, n, |i, j| k[(i, j)].re);
    Ok(CouplingMatrix {
        matrix: m,
        rho: 0.0,
        geometry: g.digest(),
    })
}

/// C(ρ) = C + ρI.
pub fn regularize(c: &CouplingMatrix, rho: f64) -> Result<CouplingMatrix> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(invalid("rho", format!("loss factor must be finite and nonnegative, got {rho}")));
    }
    let mut m = c.matrix.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += rho;
    }
    Ok(CouplingMatrix {
        matrix: m,
        rho: c.rho + rho,
        geometry: c.geometry.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Sqrt,
    InvSqrt,
}

/// Symmetric square root or inverse square root of a coupling matrix, kept
/// together with the source eigensystem so the other direction is cheap.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    factor: Mat<f64>,
    kind: FactorKind,
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
    rho: f64,
    geometry: String,
}

impl SpdFactor {
    pub fn matrix(&self) -> &Mat<f64> {
        &self.factor
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// Loss factor of the source matrix.
    pub fn loss_factor(&self) -> f64 {
        self.rho
    }

    pub fn geometry_digest(&self) -> &str {
        &self.geometry
    }

    /// Ascending eigenvalues of the source matrix.
    pub fn source_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// The factor in the other direction.
    pub fn counterpart(&self) -> Result<SpdFactor> {
        let kind = match self.kind {
            FactorKind::Sqrt => FactorKind::InvSqrt,
            FactorKind::InvSqrt => FactorKind::Sqrt,
        };
        build_factor(
            self.eigenvalues.clone(),
            self.eigenvectors.clone(),
            kind,
            self.rho,
            self.geometry.clone(),
        )
    }
}

fn build_factor(
    vals: Vec<f64>,
    vecs: Mat<f64>,
    kind: FactorKind,
    rho: f64,
    geometry: String,
) -> Result<SpdFactor> {
    let smallest = vals.first().copied().unwrap_or(1.0);
    let largest = vals.last().copied().unwrap_or(1.0);
    let g: Vec<f64> = match kind {
        FactorKind::Sqrt => {
            if smallest < -1e-10 * largest.max(1.0) {
                return Err(Error::NotPsd {
                    eigenvalue: smallest,
                });
            }
            vals.iter().map(|v| v.max(0.0).sqrt()).collect()
        }
        FactorKind::InvSqrt => {
            if !(smallest > EIGEN_FLOOR) {
                return Err(Error::NearSingular {
                    smallest,
                    floor: EIGEN_FLOOR,
                });
            }
            vals.iter().map(|v| 1.0 / v.sqrt()).collect()
        }
    };
    let factor = linalg::spectral_compose(vecs.as_ref(), &g);
    Ok(SpdFactor {
        factor,
        kind,
        eigenvalues: vals,
        eigenvectors: vecs,
        rho,
        geometry,
    })
}

fn factor(c: &CouplingMatrix, kind: FactorKind) -> Result<SpdFactor> {
    let (vals, vecs) = linalg::symmetric_eigen(c.matrix.as_ref())?;
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("coupling eigenvalues"));
    }
    build_factor(vals, vecs, kind, c.rho, c.geometry.clone())
}

/// C^{1/2}; tiny negative eigenvalues from rounding are clamped to zero.
pub fn spd_sqrt(c: &CouplingMatrix) -> Result<SpdFactor> {
    factor(c, FactorKind::Sqrt)
}

/// C^{-1/2}; fails when the smallest eigenvalue is at or below [`EIGEN_FLOOR`].
pub fn spd_inv_sqrt(c: &CouplingMatrix) -> Result<SpdFactor> {
    factor(c, FactorKind::InvSqrt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_ula, build_upa};
    use crate::spectra::omni_pattern;

    #[test]
    fn two_antennas_quarter_wave() {
        let c = coupling_closed_form(&build_ula(2, 0.25).unwrap());
        assert!((c.matrix()[(0, 1)] - 2.0 / PI).abs() < 1e-15);
        assert_eq!(c.matrix()[(0, 0)], 1.0);
    }

    #[test]
    fn half_wave_ula_is_identity() {
        let c = coupling_closed_form(&build_ula(6, 0.5).unwrap());
        let id = Mat::<f64>::identity(6, 6);
        assert!(linalg::max_abs_diff(c.matrix().as_ref(), id.as_ref()) < 1e-15);
    }

    #[test]
    fn single_antenna_general() {
        let q = HemisphereQuadrature::new(16, 16).unwrap();
        let g = build_upa(1, 1, 0.5, 0.5).unwrap();
        let c = coupling_general(&g, &omni_pattern(), &q).unwrap();
        assert_eq!(c.dim(), 1);
        assert!((c.matrix()[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unnormalized_pattern_rejected() {
        let q = HemisphereQuadrature::new(16, 16).unwrap();
        let g = build_ula(2, 0.3).unwrap();
        let p = AntennaPattern::custom("two", true, |_, _| 2.0);
        assert!(matches!(
            coupling_general(&g, &p, &q),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn regularize_cases() {
        let c = coupling_closed_form(&build_ula(4, 0.3).unwrap());
        let same = regularize(&c, 0.0).unwrap();
        assert!(linalg::max_abs_diff(c.matrix().as_ref(), same.matrix().as_ref()) == 0.0);
        let id = CouplingMatrix::from_matrix(Mat::identity(3, 3), 0.0, "id").unwrap();
        let r = regularize(&id, 0.01).unwrap();
        assert!((r.matrix()[(1, 1)] - 1.01).abs() < 1e-15);
        assert_eq!(r.matrix()[(0, 1)], 0.0);
        assert!((r.loss_factor() - 0.01).abs() < 1e-15);
        assert!(regularize(&c, -1e-3).is_err());
        assert!(regularize(&c, f64::NAN).is_err());
    }

    #[test]
    fn diagonal_factors() {
        let mut m = Mat::<f64>::zeros(2, 2);
        m[(0, 0)] = 4.0;
        m[(1, 1)] = 1.0;
        let c = CouplingMatrix::from_matrix(m, 0.0, "d").unwrap();
        let s = spd_sqrt(&c).unwrap();
        let r = spd_inv_sqrt(&c).unwrap();
        assert!((s.matrix()[(0, 0)] - 2.0).abs() < 1e-14);
        assert!((s.matrix()[(1, 1)] - 1.0).abs() < 1e-14);
        assert!(s.matrix()[(0, 1)].abs() < 1e-14);
        assert!((r.matrix()[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((r.matrix()[(1, 1)] - 1.0).abs() < 1e-14);
        let back = r.counterpart().unwrap();
        assert_eq!(back.kind(), FactorKind::Sqrt);
        assert!((back.matrix()[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn identity_factors() {
        let c = CouplingMatrix::from_matrix(Mat::identity(4, 4), 0.0, "id").unwrap();
        let id = Mat::<f64>::identity(4, 4);
        for f in [spd_sqrt(&c).unwrap(), spd_inv_sqrt(&c).unwrap()] {
            assert!(linalg::max_abs_diff(f.matrix().as_ref(), id.as_ref()) < 1e-14);
        }
    }

    #[test]
    fn singular_without_loss_is_an_error() {
        // Quarter-wave spacing leaves the sinc matrix numerically singular.
        let c = coupling_closed_form(&build_upa(9, 9, 0.25, 0.25).unwrap());
        let err = spd_inv_sqrt(&c).unwrap_err();
        assert!(matches!(err, Error::NearSingular { .. }));
        assert!(err.to_string().contains("rho"));
        assert!(spd_inv_sqrt(&regularize(&c, 1e-2).unwrap()).is_ok());
    }
}
