use std::f64::consts::PI;

use cos2phi::calibration::synth::{f01_table, periodic_interpolate, synthetic_heatmap};
use cos2phi::calibration::{
    apply_crosstalk, calibrate_crosstalk, detect_lattice, rebase_flux, reduce_basis,
    CrosstalkMatrix, Heatmap, KernelRegion, LatticeOptions,
};
use cos2phi::circuit::{solve, CircuitParams, FluxBias, HamiltonianOptions, JunctionSet};

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Map with reciprocal vectors `k1`, `k2` (cycles per mA) on a unit-spaced grid.
fn cosine_map(k1: [f64; 2], k2: [f64; 2], n: usize, shift: [f64; 2]) -> Heatmap {
    let ax: Vec<f64> = (0..n).map(|i| i as f64).collect();
    Heatmap::from_fn(ax.clone(), ax, |x, y| {
        let (x, y) = (x + shift[0], y + shift[1]);
        Some(
            (2.0 * PI * (k1[0] * x + k1[1] * y)).cos() + (2.0 * PI * (k2[0] * x + k2[1] * y)).cos(),
        )
    })
    .unwrap()
}

/// Direct basis of the reciprocal pair, reduced.
fn direct(k1: [f64; 2], k2: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let det = k1[0] * k2[1] - k1[1] * k2[0];
    reduce_basis([k2[1] / det, -k2[0] / det], [-k1[1] / det, k1[0] / det])
}

/// Relative componentwise match up to sign and order.
fn same_basis(got: ([f64; 2], [f64; 2]), want: ([f64; 2], [f64; 2]), tol: f64) -> bool {
    let close = |a: [f64; 2], b: [f64; 2]| {
        let scale = b[0].hypot(b[1]);
        [1.0, -1.0]
            .iter()
            .any(|s| (0..2).all(|i| (s * a[i] - b[i]).abs() <= tol * b[i].abs().max(0.05 * scale)))
    };
    (close(got.0, want.0) && close(got.1, want.1)) || (close(got.0, want.1) && close(got.1, want.0))
}

#[test]
fn cosine_lattice_recovered() {
    let (k1, k2) = ([0.1, 0.03], [-0.02, 0.08]);
    let h = cosine_map(k1, k2, 96, [0.0, 0.0]);
    let l = detect_lattice(
        &h,
        &KernelRegion::centered(&h, 0.4),
        &LatticeOptions::default(),
    )
    .unwrap();
    let want = direct(k1, k2);
    assert!(same_basis((l.v1, l.v2), want, 0.01), "{l:?} vs {want:?}");
    assert!(l.v1[1] >= 0.0 && l.v2[1] >= 0.0);
}

#[test]
fn rotating_the_lattice_rotates_the_vectors() {
    let (k1, k2) = ([0.1, 0.03], [-0.02, 0.08]);
    let rot = |k: [f64; 2], a: f64| {
        [
            k[0] * a.cos() - k[1] * a.sin(),
            k[0] * a.sin() + k[1] * a.cos(),
        ]
    };
    let a = 10f64.to_radians();
    let h0 = cosine_map(k1, k2, 96, [0.0, 0.0]);
    let h1 = cosine_map(rot(k1, a), rot(k2, a), 96, [0.0, 0.0]);
    let opts = LatticeOptions::default();
    let l0 = detect_lattice(&h0, &KernelRegion::centered(&h0, 0.4), &opts).unwrap();
    let l1 = detect_lattice(&h1, &KernelRegion::centered(&h1, 0.4), &opts).unwrap();
    // match each rotated original vector to a recovered one up to sign
    for v in [l0.v1, l0.v2] {
        let r = rot(v, a);
        let best = [l1.v1, l1.v2]
            .into_iter()
            .flat_map(|w| [w, [-w[0], -w[1]]])
            .min_by(|x, y| {
                (x[0] - r[0])
                    .hypot(x[1] - r[1])
                    .total_cmp(&(y[0] - r[0]).hypot(y[1] - r[1]))
            })
            .unwrap();
        let angle = (v[0] * best[1] - v[1] * best[0])
            .atan2(v[0] * best[0] + v[1] * best[1])
            .to_degrees();
        assert!((angle - 10.0).abs() <= 0.5, "{angle}");
    }
}

#[test]
fn translation_leaves_vectors_unchanged() {
    let (k1, k2) = ([0.1, 0.03], [-0.02, 0.08]);
    let opts = LatticeOptions::default();
    let h0 = cosine_map(k1, k2, 96, [0.0, 0.0]);
    let h1 = cosine_map(k1, k2, 96, [3.7, -5.2]);
    let l0 = detect_lattice(&h0, &KernelRegion::centered(&h0, 0.4), &opts).unwrap();
    let l1 = detect_lattice(&h1, &KernelRegion::centered(&h1, 0.4), &opts).unwrap();
    assert!(
        same_basis((l0.v1, l0.v2), (l1.v1, l1.v2), 1e-3),
        "{l0:?} vs {l1:?}"
    );
}

#[test]
fn paper_matrix_recovered_from_synthetic_heatmap() {
    let p = CircuitParams::fitted_device();
    let m = CrosstalkMatrix::paper();
    let opts = HamiltonianOptions::with_n_charge(15);
    let h = synthetic_heatmap(
        &p,
        &m,
        axis(-80.0, 80.0, 401),
        axis(-120.0, 120.0, 241),
        64,
        &opts,
    )
    .unwrap();
    let cal = calibrate_crosstalk(
        &h,
        &KernelRegion::centered(&h, 0.4),
        &LatticeOptions::default(),
    )
    .unwrap();
    for r in 0..2 {
        for c in 0..2 {
            let rel = (cal.matrix.m[r][c] - m.m[r][c]).abs() / m.m[r][c].abs();
            assert!(
                rel < 0.01,
                "entry ({r},{c}): {} vs {}",
                cal.matrix.m[r][c],
                m.m[r][c]
            );
        }
    }

    // rebased with the recovered matrix, the device is 1-periodic in both fluxes
    let table = f01_table(&p, 64, &opts).unwrap();
    let d = p.junctions.squid_asymmetry();
    let device = |fbl: f64, coil: f64| {
        let (b, s) = apply_crosstalk(&m, fbl, coil);
        let f = rebase_flux(b, s, d);
        periodic_interpolate(&table, f.phi_bias, f.phi_ctrl)
    };
    let at = |phi_bias: f64, phi_s: f64| {
        let raw = FluxBias::new(phi_bias, phi_s, d).phi_b_raw;
        let (fbl, coil) = cal.matrix.currents_for(raw - 0.5 * phi_s, phi_s);
        device(fbl, coil)
    };
    for (b, s) in [(0.2, 0.1), (0.31, 0.27), (0.45, -0.15)] {
        let f0 = at(b, s);
        for (db, ds) in [(1.0, 0.0), (0.0, 1.0), (-2.0, 1.0)] {
            assert!(
                (at(b + db, s + ds) - f0).abs() < 0.02,
                "({b},{s}) + ({db},{ds})"
            );
        }
    }
}

#[test]
fn rebased_sweet_spot_matches_numerical_search() {
    // asymmetric SQUID with d = 1/7
    let sum = 71.46;
    let junctions = JunctionSet {
        ej4: sum * 4.0 / 7.0,
        ej5: sum * 3.0 / 7.0,
        ..JunctionSet::FITTED_DEVICE
    };
    let p = CircuitParams {
        junctions,
        ..CircuitParams::fitted_device()
    };
    let d = p.junctions.squid_asymmetry();
    assert!((d - 1.0 / 7.0).abs() < 1e-12);
    let phi_s = 0.25;
    let opts = HamiltonianOptions::with_n_charge(12);

    // SQUID phase drop minimizing −E4 cos(φ + πΦ_S) − E5 cos(φ − πΦ_S), by golden section
    let squid =
        |x: f64| -junctions.ej4 * (x + PI * phi_s).cos() - junctions.ej5 * (x - PI * phi_s).cos();
    let (mut lo, mut hi) = (-PI / 2.0, PI / 2.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (a, b) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if squid(a) < squid(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let delta = PI * phi_s - 0.5 * (lo + hi);

    // f01 against the intermediate bias with the numerically found offset
    let f01 = |b_tilde: f64| {
        let raw = b_tilde + 0.5 * phi_s;
        let flux = FluxBias {
            phi_bias: raw - delta / (2.0 * PI),
            phi_ctrl: phi_s,
            delta,
            phi_b_raw: raw,
        };
        let (e, _) = solve(&p, &flux, &opts, 2).unwrap();
        e.energies[1] - e.energies[0]
    };
    // symmetry point: zero of f01(c + w) − f01(c − w), bracketed near the naive guess
    let w = 0.1;
    let asym = |c: f64| f01(c + w) - f01(c - w);
    let (mut a, mut b) = (0.5 - 0.1, 0.5 + 0.1);
    assert!(asym(a) * asym(b) < 0.0);
    for _ in 0..50 {
        let mid = 0.5 * (a + b);
        if asym(a) * asym(mid) <= 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    let sweet = 0.5 * (a + b);
    let rebased = rebase_flux(sweet, phi_s, d);
    assert!(
        (rebased.phi_bias - 0.5).abs() < 1e-6,
        "{}",
        rebased.phi_bias
    );
}
