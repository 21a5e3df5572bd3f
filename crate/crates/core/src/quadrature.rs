//! Gauss–Legendre rules, an adaptive Gauss–Kronrod integrator and the
//! tensor-product rule on the upper hemisphere.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// P_n(z) and its derivative by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to [a, b].
#[derive(Debug, Clone)]
pub struct GaussRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self { x, w }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        let mut s = 0.0;
        for (x, w) in self.x.iter().zip(&self.w) {
            s += w * f(c + h * x);
        }
        s * h
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kr = WGK[7] * fc;
    let mut ga = WG[3] * fc;
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kr += WGK[k] * s;
        if k % 2 == 1 {
            ga += WG[k / 2] * s;
        }
    }
    (kr * h, ((kr - ga) * h).abs())
}

/// Globally adaptive 15-point Gauss–Kronrod integration of `f` over [a, b].
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol·|I|)`. Subinterval results are
/// summed in left-to-right order, so the output is independent of split history.
pub fn integrate_adaptive(
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    mut f: impl FnMut(f64) -> f64,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    const MAX_INTERVALS: usize = 400;
    let (v, e) = gk15(a, b, &mut f);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) || parts.len() >= MAX_INTERVALS {
            break;
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = parts[worst];
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * lo.abs().max(hi.abs()).max(1e-300) {
            break;
        }
        let (v1, e1) = gk15(lo, mid, &mut f);
        let (v2, e2) = gk15(mid, hi, &mut f);
        parts[worst] = (lo, mid, v1, e1);
        parts.insert(worst + 1, (mid, hi, v2, e2));
    }
    parts.iter().map(|p| p.2).sum()
}

/// Tensor-product rule on the upper hemisphere: Gauss–Legendre in u = cosθ,
/// trapezoid in φ.
///
/// Integrates against sinθ dθ dφ. The polar range may be restricted to
/// θ ≤ θmax when the integrand is known to vanish beyond it.
#[derive(Debug, Clone)]
pub struct HemisphereQuadrature {
    n_polar: usize,
    n_azimuth: usize,
    u_min: f64,
    u: Vec<f64>,
    wu: Vec<f64>,
}

impl Default for HemisphereQuadrature {
    fn default() -> Self {
        Self::new(256, 512).expect("default resolution is valid")
    }
}

impl HemisphereQuadrature {
    pub fn new(n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if n_polar == 0 {
            return Err(invalid("n_polar", "must be positive"));
        }
        if n_azimuth < 2 || n_azimuth % 2 != 0 {
            // An even azimuth count keeps φ and φ+π paired, which makes kernels
            // of point-symmetric densities exactly real.
            return Err(invalid("n_azimuth", "must be even and at least 2"));
        }
        let mut q = Self {
            n_polar,
            n_azimuth,
            u_min: 0.0,
            u: Vec::new(),
            wu: Vec::new(),
        };
        q.build_polar();
        Ok(q)
    }

    fn build_polar(&mut self) {
        let (x, w) = gauss_legendre(self.n_polar);
        let h = 0.5 * (1.0 - self.u_min);
        let c = 0.5 * (1.0 + self.u_min);
        self.u = x.iter().map(|x| c + h * x).collect();
        self.wu = w.iter().map(|w| w * h).collect();
    }

    /// Same resolution, polar nodes confined to θ ≤ `theta_max`.
    pub fn restricted(&self, theta_max: f64) -> Self {
        let mut q = self.clone();
        q.u_min = theta_max.clamp(0.0, PI / 2.0).cos().max(0.0);
        q.build_polar();
        q
    }

    /// Twice the resolution in both directions.
    pub fn refined(&self) -> Self {
        let mut q = self.clone();
        q.n_polar *= 2;
        q.n_azimuth *= 2;
        q.build_polar();
        q
    }

    pub fn n_polar(&self) -> usize {
        self.n_polar
    }

    pub fn n_azimuth(&self) -> usize {
        self.n_azimuth
    }

    pub fn theta_max(&self) -> f64 {
        self.u_min.acos()
    }

    /// Polar nodes as (cosθ, weight) pairs.
    pub fn polar(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.u.iter().copied().zip(self.wu.iter().copied())
    }

    /// Azimuth nodes and the common trapezoid weight.
    pub fn azimuth(&self) -> (Vec<f64>, f64) {
        let dphi = 2.0 * PI / self.n_azimuth as f64;
        ((0..self.n_azimuth).map(|j| j as f64 * dphi).collect(), dphi)
    }

    /// ∫∫ f(θ, φ) sinθ dθ dφ over the covered part of the upper hemisphere.
    pub fn integrate(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let (phis, dphi) = self.azimuth();
        let mut total = 0.0;
        for (u, w) in self.polar() {
            let theta = u.acos();
            let ring: f64 = phis.iter().map(|&phi| f(theta, phi)).sum();
            total += w * ring;
        }
        total * dphi
    }
}
