//! Hemisphere plane-wave kernels
//! K[m, m'] = (1/2π)∫ w(θ, φ) exp(i2π k·(s_m − s_m')) sinθ dθ dφ.
//!
//! Only distinct difference vectors are integrated. Each node's phase is the
//! product of per-coordinate tables, so the inner loop is a complex
//! multiply-add per distinct difference.

use std::collections::HashMap;
use std::f64::consts::PI;

use faer::{c64, Mat};

use crate::quadrature::HemisphereQuadrature;

const KEY_SCALE: f64 = 1e9;

fn key(v: f64) -> i64 {
    (v * KEY_SCALE).round() as i64
}

struct Differences {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Distinct (x index, y index) pairs.
    pairs: Vec<(u32, u32)>,
    lookup: HashMap<(i64, i64), usize>,
}

fn distinct_values(v: impl Iterator<Item = f64>) -> (Vec<f64>, HashMap<i64, u32>) {
    let mut keys: Vec<(i64, f64)> = v.map(|x| (key(x), x)).collect();
    keys.sort_by_key(|k| k.0);
    keys.dedup_by_key(|k| k.0);
    let map = keys.iter().enumerate().map(|(i, k)| (k.0, i as u32)).collect();
    (keys.into_iter().map(|k| k.1).collect(), map)
}

fn differences(pos: &[[f64; 3]]) -> Differences {
    let n = pos.len();
    let upper = || (0..n).flat_map(move |m| (m..n).map(move |l| (m, l)));
    let (xs, xmap) = distinct_values(upper().map(|(m, l)| pos[m][0] - pos[l][0]));
    let (ys, ymap) = distinct_values(upper().map(|(m, l)| pos[m][1] - pos[l][1]));
    let mut pairs = Vec::new();
    let mut lookup = HashMap::new();
    for (m, l) in upper() {
        let k = (key(pos[m][0] - pos[l][0]), key(pos[m][1] - pos[l][1]));
        lookup.entry(k).or_insert_with(|| {
            pairs.push((xmap[&k.0], ymap[&k.1]));
            pairs.len() - 1
        });
    }
    Differences {
        xs,
        ys,
        pairs,
        lookup,
    }
}

fn ring_sum(
    d: &Differences,
    u: f64,
    wu: f64,
    phis: &[f64],
    dphi: f64,
    weight: &(dyn Fn(f64, f64) -> f64 + Sync),
) -> Vec<c64> {
    let theta = u.acos();
    let st = (1.0 - u * u).max(0.0).sqrt();
    let mut acc = vec![c64::new(0.0, 0.0); d.pairs.len()];
    let mut ex = vec![c64::new(0.0, 0.0); d.xs.len()];
    let mut ey = vec![c64::new(0.0, 0.0); d.ys.len()];
    for &phi in phis {
        let w = weight(theta, phi) * wu * dphi / (2.0 * PI);
        if w == 0.0 {
            continue;
        }
        let (kx, ky) = (st * phi.cos(), st * phi.sin());
        for (e, x) in ex.iter_mut().zip(&d.xs) {
            let (s, c) = (2.0 * PI * kx * x).sin_cos();
            *e = c64::new(c * w, s * w);
        }
        for (e, y) in ey.iter_mut().zip(&d.ys) {
            let (s, c) = (2.0 * PI * ky * y).sin_cos();
            *e = c64::new(c, s);
        }
        for (a, &(ix, iy)) in acc.iter_mut().zip(&d.pairs) {
            *a += ex[ix as usize] * ey[iy as usize];
        }
    }
    acc
}

/// Hermitian kernel matrix for the given positions and weight.
///
/// Rings are integrated independently (in parallel when enabled) and then
/// summed in ring order, so the result does not depend on the thread count.
pub fn hemisphere_kernel(
    positions: &[[f64; 3]],
    q: &HemisphereQuadrature,
    weight: &(dyn Fn(f64, f64) -> f64 + Sync),
) -> Mat<c64> {
    let d = differences(positions);
    let (phis, dphi) = q.azimuth();
    let rings: Vec<(f64, f64)> = q.polar().collect();

    #[cfg(feature = "parallel")]
    let partials: Vec<Vec<c64>> = {
        use rayon::prelude::*;
        rings
            .par_iter()
            .map(|&(u, wu)| ring_sum(&d, u, wu, &phis, dphi, weight))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<Vec<c64>> = rings
        .iter()
        .map(|&(u, wu)| ring_sum(&d, u, wu, &phis, dphi, weight))
        .collect();

    let mut acc = vec![c64::new(0.0, 0.0); d.pairs.len()];
    for p in &partials {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += *v;
        }
    }

    let n = positions.len();
    let mut k = Mat::<c64>::zeros(n, n);
    for m in 0..n {
        for l in m..n {
            let kk = (
                key(positions[m][0] - positions[l][0]),
                key(positions[m][1] - positions[l][1]),
            );
            let v = acc[d.lookup[&kk]];
            if m == l {
                k[(m, m)] = c64::new(v.re, 0.0);
            } else {
                k[(m, l)] = v;
                k[(l, m)] = v.conj();
            }
        }
    }
    k
}
