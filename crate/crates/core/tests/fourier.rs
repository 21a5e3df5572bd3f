use std::f64::consts::PI;

use holomimo_core::fourier::{
    build_lattice, cell_partition, dof_prime, fourier_matrix, projected_solid_angles,
    variances_coupled, variances_uncoupled, Tile, WavenumberLattice,
};
use holomimo_core::geometry::{build_upa, ApertureMatrix};
use holomimo_core::quadrature::{integrate_adaptive, GaussRule, HemisphereQuadrature};
use holomimo_core::spectra::{
    cap_spectrum, isotropic_spectrum, matched_pattern, omni_pattern, AngularSpectrum,
    AntennaPattern, SphereDensity, Support,
};
use holomimo_core::{c64, Mat};
use proptest::prelude::*;

fn lattice(d: f64) -> WavenumberLattice {
    build_lattice(ApertureMatrix::new(d, d).unwrap())
}

/// Independent evaluation of a cell integral in spherical coordinates:
/// rays from the origin at angle φ, θ = asin r along each ray.
fn spherical_tile(tile: &Tile, radius: f64, projected: bool, f: &dyn Fn(f64, f64) -> f64) -> f64 {
    let x = (tile.kx.0.max(-1.0), tile.kx.1.min(1.0));
    let y = (tile.ky.0.max(-1.0), tile.ky.1.min(1.0));
    let slab = |lo: f64, hi: f64, d: f64| -> (f64, f64) {
        if d.abs() < 1e-300 {
            if lo <= 0.0 && 0.0 <= hi {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else {
                (1.0, 0.0)
            }
        } else if d > 0.0 {
            (lo / d, hi / d)
        } else {
            (hi / d, lo / d)
        }
    };
    let rule = GaussRule::new(40);
    let ray = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let (ax, bx) = slab(x.0, x.1, c);
        let (ay, by) = slab(y.0, y.1, s);
        let r0 = ax.max(ay).max(0.0);
        let r1 = bx.min(by).min(radius);
        if r1 <= r0 {
            return 0.0;
        }
        rule.integrate(r0.asin(), r1.asin(), |t| {
            let w = if projected { t.cos() } else { 1.0 };
            f(t, phi) * t.sin() * w
        })
    };
    let mut breaks = vec![0.0, 2.0 * PI];
    let wrap = |a: f64| a.rem_euclid(2.0 * PI);
    for cx in [x.0, x.1] {
        for cy in [y.0, y.1] {
            breaks.push(wrap(cy.atan2(cx)));
        }
    }
    for e in [x.0, x.1] {
        if e.abs() < radius {
            let h = (radius * radius - e * e).sqrt();
            breaks.push(wrap(h.atan2(e)));
            breaks.push(wrap((-h).atan2(e)));
        }
    }
    for e in [y.0, y.1] {
        if e.abs() < radius {
            let h = (radius * radius - e * e).sqrt();
            breaks.push(wrap(e.atan2(h)));
            breaks.push(wrap(e.atan2(-h)));
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += integrate_adaptive(w[0], w[1], 1e-15, 1e-12, ray);
    }
    total / if projected { PI } else { 2.0 * PI }
}

fn spherical_cells(
    lat: &WavenumberLattice,
    radius: f64,
    projected: bool,
    f: &dyn Fn(f64, f64) -> f64,
) -> Vec<f64> {
    cell_partition(lat)
        .iter()
        .map(|tiles| tiles.iter().map(|t| spherical_tile(t, radius, projected, f)).sum())
        .collect()
}

fn smooth_spectrum() -> AngularSpectrum {
    let q = HemisphereQuadrature::default();
    AngularSpectrum::custom("tilted", Support::Mask, |t: f64, p: f64| {
        1.0 + 0.8 * t.sin() * p.cos() + 0.3 * t.cos().powi(2)
    })
    .normalized(&q)
    .unwrap()
}

fn assert_close_rel(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().copied().fold(0.0, f64::max);
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol * scale, "cell {i}: {x} vs {y}");
    }
}

#[test]
fn wavenumber_and_spherical_routes_agree_uncoupled() {
    for d in [3.0, 5.5] {
        let lat = lattice(d);
        for s in [isotropic_spectrum(), smooth_spectrum()] {
            let a = variances_uncoupled(&lat, &s).unwrap();
            let b = spherical_cells(&lat, 1.0, false, &|t, p| s.folded(t, p));
            assert_close_rel(&a, &b, 1e-6);
        }
    }
}

#[test]
fn wavenumber_and_spherical_routes_agree_coupled() {
    let q = HemisphereQuadrature::default();
    let pat = AntennaPattern::custom("lobed", true, |t: f64, p: f64| {
        1.0 + 0.5 * (t.sin() * p.cos()).powi(2)
    })
    .normalized(&q)
    .unwrap();
    let s = smooth_spectrum();
    let lat = lattice(4.0);
    let a = variances_coupled(&lat, &s, &pat).unwrap();
    let b = spherical_cells(&lat, 1.0, true, &|t, p| s.folded(t, p) / pat.folded(t, p));
    assert_close_rel(&a, &b, 1e-6);
}

#[test]
fn cap_routes_agree() {
    let s = cap_spectrum(0.6).unwrap();
    let lat = lattice(6.0);
    let a = variances_uncoupled(&lat, &s).unwrap();
    let b = spherical_cells(&lat, 0.6f64.sin(), false, &|t, p| s.folded(t, p));
    assert_close_rel(&a, &b, 1e-6);
}

#[test]
fn isotropic_variances_sum_to_one() {
    for d in [10.0, 20.0] {
        let v = variances_uncoupled(&lattice(d), &isotropic_spectrum()).unwrap();
        let s: f64 = v.iter().sum();
        assert!((s - 1.0).abs() < 1e-4, "D = {d}: {s}");
        assert!(v.iter().all(|x| *x >= 0.0));
    }
}

#[test]
fn projected_solid_angles_sum_to_one() {
    let lat = lattice(20.0);
    let o = projected_solid_angles(&lat);
    assert!((o.iter().sum::<f64>() - 1.0).abs() < 1e-4);
    let v = variances_coupled(&lat, &isotropic_spectrum(), &omni_pattern()).unwrap();
    assert_close_rel(&v, &o, 1e-12);
}

#[test]
fn interior_projected_angle_is_cell_area() {
    // Interior cells are full 1/D² squares of the disk of area π.
    let lat = lattice(10.0);
    let o = projected_solid_angles(&lat);
    assert!((o[0] - 1.0 / (100.0 * PI)).abs() < 1e-13);
}

fn spread(v: &[f64]) -> f64 {
    let pos: Vec<f64> = v.iter().copied().filter(|x| *x > 0.0).collect();
    pos.iter().copied().fold(0.0, f64::max) / pos.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn matched_pattern_flattens_variances() {
    let q = HemisphereQuadrature::default();
    let s = cap_spectrum(PI / 3.0).unwrap();
    let lat = lattice(8.0);
    let a = matched_pattern(&s, &q);
    let coupled = variances_coupled(&lat, &s, &a).unwrap();
    let uncoupled = variances_uncoupled(&lat, &s).unwrap();
    let omni = projected_solid_angles(&lat);
    // On cells fully inside the support, σ² equals the projected solid angle.
    let r = (PI / 3.0f64).sin();
    let (mut c_in, mut u_in) = (vec![], vec![]);
    for (l, &(jx, jy)) in lat.points().iter().enumerate() {
        let outer = ((jx.abs() as f64 + 0.5).hypot(jy.abs() as f64 + 0.5)) / 8.0;
        if outer < r {
            assert!((coupled[l] - omni[l]).abs() < 1e-10 * omni[l]);
            c_in.push(coupled[l]);
            u_in.push(uncoupled[l]);
        }
    }
    assert!(spread(&c_in) < 1.0 + 1e-9);
    assert!(spread(&u_in) > 1.1);
}

#[test]
fn pattern_dip_under_spectrum_peak_enhances_max_variance() {
    let q = HemisphereQuadrature::default();
    // Spectrum concentrated near broadside, pattern two-level with its low
    // level exactly there.
    let s = AngularSpectrum::custom("peaked", Support::Mask, |t: f64, _| {
        if t.sin() < 0.3 { 4.0 } else { 1.0 }
    })
    .normalized(&q)
    .unwrap();
    let a = AntennaPattern::custom("dip", true, |t: f64, _| if t.sin() < 0.3 { 0.25 } else { 1.0 })
        .normalized(&q)
        .unwrap();
    let lat = lattice(6.0);
    let coupled = variances_coupled(&lat, &s, &a).unwrap();
    let uncoupled = variances_uncoupled(&lat, &s).unwrap();
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    assert!(max(&coupled) > max(&uncoupled));
}

#[test]
fn coupling_leaves_support_unchanged() {
    let q = HemisphereQuadrature::default();
    let s = cap_spectrum(0.5).unwrap();
    let lat = lattice(10.0);
    let u = variances_uncoupled(&lat, &s).unwrap();
    for a in [
        omni_pattern(),
        AntennaPattern::custom("bounded", true, |t: f64, p: f64| 2.0 + (3.0 * t).sin() * p.cos())
            .normalized(&q)
            .unwrap(),
    ] {
        let c = variances_coupled(&lat, &s, &a).unwrap();
        for (l, (x, y)) in u.iter().zip(&c).enumerate() {
            assert_eq!(*x > 0.0, *y > 0.0, "cell {:?}", lat.points()[l]);
        }
    }
}

#[test]
fn dof_prime_matches_projected_quadrature() {
    let q = HemisphereQuadrature::default();
    for theta0 in [PI / 6.0, 0.9, PI / 2.0] {
        let s = cap_spectrum(theta0).unwrap();
        let qq = q.restricted(theta0);
        let frac = qq.integrate(|t, _| t.cos()) / PI;
        for d in [10.0, 20.0] {
            let lat = lattice(d);
            let expect = (lat.n() as f64 * frac - 1e-9).ceil() as usize;
            assert_eq!(dof_prime(&lat, &s), expect);
        }
    }
    let lat = lattice(20.0);
    assert_eq!(dof_prime(&lat, &cap_spectrum(PI / 6.0).unwrap()), 315);
    // Mask support evaluated numerically matches the analytic cap.
    let masked = AngularSpectrum::custom("mask-cap", Support::Mask, |t: f64, _| {
        if t <= 0.7 { 1.0 } else { 0.0 }
    });
    let analytic = cap_spectrum(0.7).unwrap();
    let a = dof_prime(&lat, &masked) as i64;
    let b = dof_prime(&lat, &analytic) as i64;
    assert!((a - b).abs() <= 1, "{a} vs {b}");
}

#[test]
fn lattice_cardinality_approaches_disk_area() {
    let mut last = f64::INFINITY;
    let mut errs = vec![];
    for d in [5.0, 10.0, 20.0, 40.0] {
        let lat = lattice(d);
        let area = PI * d * d;
        let e = (lat.n() as f64 - area).abs() / area;
        errs.push(e);
        assert!(e < last || e < 1e-3, "{errs:?}");
        last = e;
    }
    assert!(errs[3] < 0.01);
}

#[test]
fn lattice_ordering_is_canonical() {
    let a = build_lattice(ApertureMatrix::new(7.3, 4.1).unwrap());
    let b = build_lattice(ApertureMatrix::new(7.3, 4.1).unwrap());
    assert_eq!(a.points(), b.points());
    let norm = |j: &(i64, i64)| (j.0 as f64 / 7.3).powi(2) + (j.1 as f64 / 4.1).powi(2);
    for w in a.points().windows(2) {
        assert!(norm(&w[0]) <= norm(&w[1]) + 1e-12);
    }
}

fn gram(v: &Mat<c64>) -> Mat<c64> {
    v.adjoint() * v
}

#[test]
fn fourier_columns_orthonormal_on_periodic_grid() {
    // Four antennas per wavelength over one period: frequencies j ∈ {0, ±1}
    // are distinct modulo 4, so the Gram matrix is the identity.
    let g = build_upa(4, 4, 0.25, 0.25).unwrap();
    let lat = lattice(1.0);
    let v = fourier_matrix(&g, &lat);
    let gm = gram(&v);
    for i in 0..lat.n() {
        for j in 0..lat.n() {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((gm[(i, j)] - c64::new(e, 0.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn fourier_columns_at_nyquist_alias_only_on_the_rim() {
    // 40 half-wave samples per axis span one 20λ period. Points j and j'
    // with j − j' ≡ 0 (mod 40) per axis, i.e. (±20, 0) and (0, ±20), alias.
    let g = build_upa(40, 40, 0.5, 0.5).unwrap();
    let lat = lattice(20.0);
    let v = fourier_matrix(&g, &lat);
    let gm = gram(&v);
    let p = lat.points();
    for i in 0..lat.n() {
        for j in 0..lat.n() {
            let aliased = (p[i].0 - p[j].0) % 40 == 0 && (p[i].1 - p[j].1) % 40 == 0;
            let e = if aliased { 1.0 } else { 0.0 };
            assert!(
                (gm[(i, j)].norm() - e).abs() < 1e-10,
                "{:?} {:?}: {}",
                p[i],
                p[j],
                gm[(i, j)]
            );
        }
    }
}

#[test]
fn fourier_columns_unit_norm() {
    let g = build_upa(41, 41, 0.5, 0.5).unwrap();
    let lat = build_lattice(g.aperture_matrix());
    let v = fourier_matrix(&g, &lat);
    for l in 0..lat.n() {
        let n: f64 = (0..v.nrows()).map(|m| v[(m, l)].norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn shifting_the_array_keeps_the_gram_matrix(
        sx in -3.0f64..3.0, sy in -3.0f64..3.0, nx in 2usize..6, ny in 1usize..6, d in 0.2f64..0.7,
    ) {
        let g = build_upa(nx, ny, d, d).unwrap();
        let h = g.translated([sx, sy, 0.0]);
        let lat = build_lattice(g.aperture_matrix());
        let a = fourier_matrix(&g, &lat);
        let b = fourier_matrix(&h, &lat);
        let (ga, gb) = (gram(&a), gram(&b));
        for l in 0..lat.n() {
            // Each column picks up one unit-modulus phase.
            let ratio = b[(0, l)] / a[(0, l)];
            prop_assert!((ratio.norm() - 1.0).abs() < 1e-12);
            for m in 0..a.nrows() {
                prop_assert!((b[(m, l)] - a[(m, l)] * ratio).norm() < 1e-9);
            }
            for k in 0..lat.n() {
                prop_assert!((ga[(l, k)].norm() - gb[(l, k)].norm()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn partition_sums_to_one(dx in 0.2f64..9.0, dy in 0.2f64..9.0) {
        let lat = build_lattice(ApertureMatrix::new(dx, dy).unwrap());
        let s: f64 = projected_solid_angles(&lat).iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-8);
    }
}
