//! Planar antenna arrays in wavelength units.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};

/// Antenna positions (in wavelengths) in a single z-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub struct ArrayGeometry {
    positions: Vec<[f64; 3]>,
    aperture: (f64, f64),
}

#[derive(Serialize, Deserialize)]
struct RawGeometry {
    positions: Vec<[f64; 3]>,
}

impl TryFrom<RawGeometry> for ArrayGeometry {
    type Error = Error;
    fn try_from(raw: RawGeometry) -> Result<Self> {
        Self::from_positions(raw.positions)
    }
}

impl From<ArrayGeometry> for RawGeometry {
    fn from(g: ArrayGeometry) -> Self {
        RawGeometry {
            positions: g.positions,
        }
    }
}

const COINCIDENT: f64 = 1e-9;

impl ArrayGeometry {
    /// Validates an arbitrary planar layout.
    pub fn from_positions(positions: Vec<[f64; 3]>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidGeometry("no antennas".into()));
        }
        if positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite coordinate".into()));
        }
        let z0 = positions[0][2];
        if positions.iter().any(|p| (p[2] - z0).abs() > 1e-12) {
            return Err(Error::InvalidGeometry(
                "positions must share one z-plane".into(),
            ));
        }
        for (i, p) in positions.iter().enumerate() {
            for q in &positions[i + 1..] {
                if (p[0] - q[0]).hypot(p[1] - q[1]) < COINCIDENT {
                    return Err(Error::InvalidGeometry(format!(
                        "coincident antennas at ({}, {})",
                        p[0], p[1]
                    )));
                }
            }
        }
        Ok(Self::new_unchecked(positions))
    }

    fn new_unchecked(positions: Vec<[f64; 3]>) -> Self {
        let span = |k: usize| {
            let lo = positions.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
            let hi = positions.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        };
        let aperture = (span(0), span(1));
        Self {
            positions,
            aperture,
        }
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    /// Coordinate span (Lx, Ly) in wavelengths.
    pub fn aperture(&self) -> (f64, f64) {
        self.aperture
    }

    pub fn aperture_matrix(&self) -> ApertureMatrix {
        ApertureMatrix {
            dx: self.aperture.0,
            dy: self.aperture.1,
        }
    }

    /// Every position shifted by `v`.
    pub fn translated(&self, v: [f64; 3]) -> Self {
        let positions = self
            .positions
            .iter()
            .map(|p| [p[0] + v[0], p[1] + v[1], p[2] + v[2]])
            .collect();
        Self::new_unchecked(positions)
    }

    /// Short SHA-256 fingerprint of the positions, for file headers.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.positions {
            for c in p {
                h.update(c.to_le_bytes());
            }
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Rectangular nx × ny grid in the z = 0 plane with a corner at the origin.
pub fn build_upa(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<ArrayGeometry> {
    if nx == 0 || ny == 0 {
        return Err(invalid("count", "antenna counts must be at least 1"));
    }
    if !(dx > 0.0 && dy > 0.0) || !dx.is_finite() || !dy.is_finite() {
        return Err(invalid("spacing", "spacings must be positive and finite"));
    }
    let mut positions = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            positions.push([ix as f64 * dx, iy as f64 * dy, 0.0]);
        }
    }
    Ok(ArrayGeometry::new_unchecked(positions))
}

/// Linear array of `n` antennas along the x axis.
pub fn build_ula(n: usize, d: f64) -> Result<ArrayGeometry> {
    build_upa(n, 1, d, d)
}

/// D = diag(Lx, Ly)/λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApertureMatrix {
    pub dx: f64,
    pub dy: f64,
}

impl ApertureMatrix {
    pub fn new(dx: f64, dy: f64) -> Result<Self> {
        if !(dx >= 0.0 && dy >= 0.0) || !dx.is_finite() || !dy.is_finite() {
            return Err(invalid("aperture", "entries must be finite and nonnegative"));
        }
        Ok(Self { dx, dy })
    }

    pub fn det(&self) -> f64 {
        self.dx * self.dy
    }
}

/// Free-space impedance in ohms.
pub const Z0: f64 = 120.0 * PI;

/// Wavelength and the constants derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub wavelength: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { wavelength: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(wavelength: f64) -> Result<Self> {
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(invalid("wavelength", "must be positive"));
        }
        Ok(Self { wavelength })
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// R = κ²Z₀/4π.
    pub fn radiation_resistance(&self) -> f64 {
        let k = self.wavenumber();
        k * k * Z0 / (4.0 * PI)
    }

    /// SNR as folded into the channel model: (2/R)·G·Pt/σ².
    pub fn snr(&self, gain_power_over_noise: f64) -> f64 {
        2.0 / self.radiation_resistance() * gain_power_over_noise
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upa_two_by_two() {
        let g = build_upa(2, 2, 0.5, 0.5).unwrap();
        assert_eq!(
            g.positions(),
            &[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.5, 0.5, 0.0]]
        );
        assert_eq!(g.aperture(), (0.5, 0.5));
    }

    #[test]
    fn fig2_array() {
        let g = build_upa(41, 41, 0.5, 0.5).unwrap();
        assert_eq!(g.count(), 1681);
        assert_eq!(g.aperture(), (20.0, 20.0));
    }

    #[test]
    fn single_and_linear() {
        let g = build_upa(1, 1, 0.3, 0.7).unwrap();
        assert_eq!(g.positions(), &[[0.0; 3]]);
        assert_eq!(g.aperture(), (0.0, 0.0));
        let l = build_ula(3, 0.5).unwrap();
        let xs: Vec<f64> = l.positions().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        assert!(l.positions().iter().all(|p| p[1] == 0.0));
        let l = build_ula(2, 0.25).unwrap();
        assert_eq!(l.positions()[1][0] - l.positions()[0][0], 0.25);
        assert_eq!(build_ula(7, 0.3).unwrap().aperture().0, 6.0 * 0.3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_upa(0, 3, 0.5, 0.5).is_err());
        assert!(build_ula(3, 0.0).is_err());
        assert!(build_ula(3, -0.5).is_err());
        assert!(build_upa(2, 2, 0.5, f64::NAN).is_err());
        assert!(ArrayGeometry::from_positions(vec![[0.0; 3], [0.0; 3]]).is_err());
        assert!(ArrayGeometry::from_positions(vec![[0.0; 3], [1.0, 0.0, 0.5]]).is_err());
        assert!(ArrayGeometry::from_positions(vec![]).is_err());
    }

    #[test]
    fn radiation_resistance() {
        let c = PhysicalConstants::default();
        assert!((c.wavenumber() * c.wavelength - 2.0 * PI).abs() < 1e-15);
        // κ = 2π, so R = 4π²·120π/4π = 120π².
        assert!((c.radiation_resistance() - 120.0 * PI * PI).abs() < 1e-9);
    }
}
