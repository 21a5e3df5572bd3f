//! Wavenumber lattices, Fourier bases and per-cell channel variances.

use std::f64::consts::PI;

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::geometry::{ApertureMatrix, ArrayGeometry};
use crate::quadrature::{integrate_adaptive, GaussRule};
use crate::spectra::{AngularSpectrum, AntennaPattern, Support, SphereDensity};

/// Integer points j with ‖D⁻¹j‖ ≤ 1, sorted by that norm and then by (jx, jy).
#[derive(Debug, Clone, PartialEq)]
pub struct WavenumberLattice {
    aperture: ApertureMatrix,
    points: Vec<(i64, i64)>,
}

/// ‖D⁻¹j‖² scaled by (dx·dy)² so integer apertures compare exactly.
/// A zero aperture entry forces that coordinate of j to zero.
fn scaled_norm2(d: &ApertureMatrix, j: (i64, i64)) -> Option<f64> {
    let (jx, jy) = (j.0 as f64, j.1 as f64);
    if (d.dx == 0.0 && j.0 != 0) || (d.dy == 0.0 && j.1 != 0) {
        return None;
    }
    let sx = if d.dx == 0.0 { 1.0 } else { d.dx };
    let sy = if d.dy == 0.0 { 1.0 } else { d.dy };
    Some(jx * jx * sy * sy + jy * jy * sx * sx)
}

fn limit(d: &ApertureMatrix) -> f64 {
    let sx = if d.dx == 0.0 { 1.0 } else { d.dx };
    let sy = if d.dy == 0.0 { 1.0 } else { d.dy };
    sx * sx * sy * sy
}

/// Enumerates the lattice for aperture matrix `d`.
pub fn build_lattice(d: ApertureMatrix) -> WavenumberLattice {
    let lim = limit(&d) * (1.0 + 1e-12);
    let rx = d.dx.floor() as i64;
    let ry = d.dy.floor() as i64;
    let mut pts: Vec<((i64, i64), f64)> = Vec::new();
    for jx in -rx..=rx {
        for jy in -ry..=ry {
            if let Some(r) = scaled_norm2(&d, (jx, jy)) {
                if r <= lim {
                    pts.push(((jx, jy), r));
                }
            }
        }
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    WavenumberLattice {
        aperture: d,
        points: pts.into_iter().map(|p| p.0).collect(),
    }
}

impl WavenumberLattice {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[(i64, i64)] {
        &self.points
    }

    pub fn aperture(&self) -> ApertureMatrix {
        self.aperture
    }

    /// ⌈π det D⌉, the asymptotic cardinality.
    pub fn asymptotic_count(&self) -> usize {
        (PI * self.aperture.det()).ceil() as usize
    }

    /// Normalized wavenumber D⁻¹j of point `l`.
    pub fn wavenumber(&self, l: usize) -> (f64, f64) {
        let (jx, jy) = self.points[l];
        let kx = if self.aperture.dx == 0.0 { 0.0 } else { jx as f64 / self.aperture.dx };
        let ky = if self.aperture.dy == 0.0 { 0.0 } else { jy as f64 / self.aperture.dy };
        (kx, ky)
    }

    pub fn index_of(&self, j: (i64, i64)) -> Option<usize> {
        self.points.iter().position(|&p| p == j)
    }
}

/// Axis-aligned rectangle in the wavenumber plane; bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tile {
    pub kx: (f64, f64),
    pub ky: (f64, f64),
}

impl Tile {
    fn of(d: &ApertureMatrix, j: (i64, i64)) -> Tile {
        let side = |jj: i64, dd: f64| {
            if dd == 0.0 {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else {
                ((jj as f64 - 0.5) / dd, (jj as f64 + 0.5) / dd)
            }
        };
        Tile {
            kx: side(j.0, d.dx),
            ky: side(j.1, d.dy),
        }
    }

    fn distance_to_origin(&self) -> f64 {
        let gap = |(a, b): (f64, f64)| if a > 0.0 { a } else if b < 0.0 { -b } else { 0.0 };
        gap(self.kx).hypot(gap(self.ky))
    }
}

/// Partition of the unit disk into lattice cells.
///
/// Cell j is its own tile plus every tile that meets the disk but whose
/// center is not a lattice point; such orphan tiles go to the nearest
/// lattice point in j-space (ties to the earlier point in lattice order).
pub fn cell_partition(lat: &WavenumberLattice) -> Vec<Vec<Tile>> {
    let d = lat.aperture;
    let mut cells: Vec<Vec<Tile>> = lat.points.iter().map(|&j| vec![Tile::of(&d, j)]).collect();
    let rx = if d.dx == 0.0 { 0 } else { (d.dx + 1.0).ceil() as i64 };
    let ry = if d.dy == 0.0 { 0 } else { (d.dy + 1.0).ceil() as i64 };
    for jx in -rx..=rx {
        for jy in -ry..=ry {
            let t = Tile::of(&d, (jx, jy));
            if t.distance_to_origin() >= 1.0 || lat.index_of((jx, jy)).is_some() {
                continue;
            }
            let mut best = 0;
            let mut best_d = i64::MAX;
            for (l, &(px, py)) in lat.points.iter().enumerate() {
                let dd = (px - jx).pow(2) + (py - jy).pow(2);
                if dd < best_d {
                    best_d = dd;
                    best = l;
                }
            }
            cells[best].push(t);
        }
    }
    cells
}

/// Which disk measure a cell integral uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// (1/2π) dk/√(1−‖k‖²), the image of sinθ dθ dφ / 2π.
    Spherical,
    /// dk/π, the image of cosθ sinθ dθ dφ / π.
    Projected,
}

const INNER_NODES: usize = 24;

/// ∫ over tile ∩ {‖k‖ < radius} of f(kx, ky) under `measure`.
///
/// The inner integral uses ky = √(1−kx²)·sin t, which removes the
/// rim singularity of the spherical weight; the outer one is adaptive in kx
/// with breakpoints where the clipping circle crosses the tile's ky edges.
pub fn tile_integral(
    tile: &Tile,
    radius: f64,
    measure: Measure,
    rule: &GaussRule,
    f: &mut dyn FnMut(f64, f64) -> f64,
) -> f64 {
    let a = tile.kx.0.max(-radius);
    let b = tile.kx.1.min(radius);
    if b <= a {
        return 0.0;
    }
    let mut breaks = vec![a, b];
    for edge in [tile.ky.0, tile.ky.1] {
        if edge.is_finite() && edge.abs() < radius {
            let x = (radius * radius - edge * edge).sqrt();
            for c in [-x, x] {
                if c > a && c < b {
                    breaks.push(c);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut inner = |kx: f64| {
        let alpha2 = 1.0 - kx * kx;
        let beta2 = radius * radius - kx * kx;
        if alpha2 <= 0.0 || beta2 <= 0.0 {
            return 0.0;
        }
        let alpha = alpha2.sqrt();
        let beta = beta2.sqrt();
        let lo = tile.ky.0.max(-beta);
        let hi = tile.ky.1.min(beta);
        if hi <= lo {
            return 0.0;
        }
        let t0 = (lo / alpha).clamp(-1.0, 1.0).asin();
        let t1 = (hi / alpha).clamp(-1.0, 1.0).asin();
        rule.integrate(t0, t1, |t| {
            let ky = alpha * t.sin();
            let v = f(kx, ky);
            match measure {
                Measure::Spherical => v,
                Measure::Projected => v * alpha * t.cos(),
            }
        })
    };
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += integrate_adaptive(w[0], w[1], 1e-16, 1e-11, &mut inner);
    }
    match measure {
        Measure::Spherical => total / (2.0 * PI),
        Measure::Projected => total / PI,
    }
}

/// (θ, φ) of a point in the wavenumber disk.
fn angles(kx: f64, ky: f64) -> (f64, f64) {
    let r = kx.hypot(ky).min(1.0);
    (r.asin(), ky.atan2(kx))
}

fn cell_integrals(
    lat: &WavenumberLattice,
    radius: f64,
    measure: Measure,
    f: &(dyn Fn(f64, f64) -> Result<f64> + Sync),
) -> Result<Vec<f64>> {
    let cells = cell_partition(lat);
    let rule = GaussRule::new(INNER_NODES);
    let one = |(l, tiles): (usize, &Vec<Tile>)| -> Result<f64> {
        let mut failure = None;
        let mut g = |kx: f64, ky: f64| match f(kx, ky) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let s: f64 = tiles
            .iter()
            .map(|t| tile_integral(t, radius, measure, &rule, &mut g))
            .sum();
        match failure {
            Some(Error::PatternZeroOnSupport { .. }) => {
                let (jx, jy) = lat.points[l];
                Err(Error::PatternZeroOnSupport { jx, jy })
            }
            Some(e) => Err(e),
            None => Ok(s),
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        cells.par_iter().enumerate().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        cells.iter().enumerate().map(one).collect()
    }
}

/// σ²ⱼ = (1/2π)∫_cell S(k) dk/√(1−‖k‖²), one entry per lattice point.
pub fn variances_uncoupled(lat: &WavenumberLattice, s: &AngularSpectrum) -> Result<Vec<f64>> {
    let radius = s.support().disk_radius();
    cell_integrals(lat, radius, Measure::Spherical, &|kx, ky| {
        let (t, p) = angles(kx, ky);
        Ok(s.folded(t, p))
    })
}

/// σ²ⱼ = (1/π)∫_cell S(k)/|A(k)|² dk.
///
/// Fails if the pattern vanishes anywhere the spectrum does not.
pub fn variances_coupled(
    lat: &WavenumberLattice,
    s: &AngularSpectrum,
    a: &AntennaPattern,
) -> Result<Vec<f64>> {
    let radius = s.support().disk_radius();
    cell_integrals(lat, radius, Measure::Projected, &|kx, ky| {
        let (t, p) = angles(kx, ky);
        let num = s.folded(t, p);
        if num == 0.0 {
            return Ok(0.0);
        }
        let den = a.folded(t, p);
        if !(den > 0.0) {
            return Err(Error::PatternZeroOnSupport { jx: 0, jy: 0 });
        }
        Ok(num / den)
    })
}

/// Projected solid angles |𝗢ⱼ|/π-normalized: area(cell ∩ disk)/π.
pub fn projected_solid_angles(lat: &WavenumberLattice) -> Vec<f64> {
    cell_integrals(lat, 1.0, Measure::Projected, &|_, _| Ok(1.0))
        .expect("constant integrand cannot fail")
}

/// Fraction of the disk area covered by the spectrum's support.
pub fn support_fraction(s: &AngularSpectrum) -> f64 {
    match s.support() {
        Support::Sphere => 1.0,
        Support::Cap { theta0 } => {
            let r = theta0.min(PI / 2.0).sin();
            r * r
        }
        Support::Mask => {
            // (1/π)∫ 1[S > 0] cosθ sinθ dθ dφ. With t = cos²θ the measure is
            // dt dφ/2π, so a midpoint rule in t counts disk area uniformly.
            const NT: usize = 4096;
            const NP: usize = 512;
            let mut hits = 0usize;
            for i in 0..NT {
                let theta = ((i as f64 + 0.5) / NT as f64).sqrt().acos();
                for j in 0..NP {
                    let phi = 2.0 * PI * (j as f64 + 0.5) / NP as f64;
                    if s.folded(theta, phi) > 0.0 {
                        hits += 1;
                    }
                }
            }
            hits as f64 / (NT * NP) as f64
        }
    }
}

/// n′ = ⌈n · area(support ∩ disk)/π⌉.
pub fn dof_prime(lat: &WavenumberLattice, s: &AngularSpectrum) -> usize {
    let x = lat.n() as f64 * support_fraction(s);
    // Guard against rounding pushing an exact integer over the next ceiling.
    (x - 1e-9).ceil().max(0.0) as usize
}

/// N×n matrix with columns exp(i2π (D⁻¹j)·s)/√N.
pub fn fourier_matrix(g: &ArrayGeometry, lat: &WavenumberLattice) -> Mat<c64> {
    let p = g.positions();
    let scale = 1.0 / (p.len() as f64).sqrt();
    let ks: Vec<(f64, f64)> = (0..lat.n()).map(|l| lat.wavenumber(l)).collect();
    Mat::from_fn(p.len(), lat.n(), |m, l| {
        let (kx, ky) = ks[l];
        let (s, c) = (2.0 * PI * (kx * p[m][0] + ky * p[m][1])).sin_cos();
        c64::new(c * scale, s * scale)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceFlavor {
    Uncoupled,
    Coupled,
}

/// Lattice, Fourier matrix and per-cell variances of one array side.
#[derive(Debug, Clone)]
pub struct FourierBasis {
    lattice: WavenumberLattice,
    matrix: Mat<c64>,
    variances: Vec<f64>,
    flavor: VarianceFlavor,
    dof_prime: usize,
}

impl FourierBasis {
    /// Uncoupled basis on the array's own aperture.
    pub fn uncoupled(g: &ArrayGeometry, s: &AngularSpectrum) -> Result<Self> {
        let lat = build_lattice(g.aperture_matrix());
        let v = variances_uncoupled(&lat, s)?;
        let dp = dof_prime(&lat, s);
        Self::from_parts(g, lat, v, VarianceFlavor::Uncoupled, dp)
    }

    /// Basis with coupling-inclusive variances.
    pub fn coupled(g: &ArrayGeometry, s: &AngularSpectrum, a: &AntennaPattern) -> Result<Self> {
        let lat = build_lattice(g.aperture_matrix());
        let v = variances_coupled(&lat, s, a)?;
        let dp = dof_prime(&lat, s);
        Self::from_parts(g, lat, v, VarianceFlavor::Coupled, dp)
    }

    pub fn from_parts(
        g: &ArrayGeometry,
        lattice: WavenumberLattice,
        variances: Vec<f64>,
        flavor: VarianceFlavor,
        dof_prime: usize,
    ) -> Result<Self> {
        if variances.len() != lattice.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} variances for a lattice of {} points",
                variances.len(),
                lattice.n()
            )));
        }
        if variances.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::NonFinite("variances"));
        }
        let matrix = fourier_matrix(g, &lattice);
        Ok(Self {
            lattice,
            matrix,
            variances,
            flavor,
            dof_prime,
        })
    }

    pub fn lattice(&self) -> &WavenumberLattice {
        &self.lattice
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn flavor(&self) -> VarianceFlavor {
        self.flavor
    }

    pub fn n(&self) -> usize {
        self.lattice.n()
    }

    pub fn antennas(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dof_prime(&self) -> usize {
        self.dof_prime
    }

    /// True when there are fewer antennas than lattice points.
    pub fn undersampled(&self) -> bool {
        self.antennas() < self.n()
    }

    /// Correlation eigenvalues N·σ²ⱼ followed by N − n zeros, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let nn = self.antennas() as f64;
        let mut e: Vec<f64> = self.variances.iter().map(|v| nn * v).collect();
        e.sort_by(|a, b| b.total_cmp(a));
        e.resize(self.antennas().max(e.len()), 0.0);
        e
    }
}
