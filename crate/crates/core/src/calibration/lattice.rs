//! Periodicity detection by normalized cross-correlation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::heatmap::Heatmap;
use crate::error::{Error, Result};
use crate::spectra::simplex::nelder_mead;

/// Shortest peak displacements considered as lattice-vector candidates.
const CANDIDATE_PEAKS: usize = 48;
/// Candidate pairs closer to parallel than this sine are skipped.
const MIN_SIN: f64 = 0.2;
/// Candidates scoring within this multiple of the best score's deficit from 1 are treated as equal.
const SCORE_TOLERANCE: f64 = 2.0;
/// Highest reciprocal-lattice order used in the Fourier refinement.
const REFINE_ORDER: i32 = 3;
/// Fourier peaks weaker than this fraction of the strongest are not fitted.
const PEAK_FRACTION: f64 = 0.05;

/// Kernel block in pixels, rows along the coil axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelRegion {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

impl KernelRegion {
    /// Centered block covering `fraction` of each axis.
    pub fn centered(h: &Heatmap, fraction: f64) -> Self {
        let rows = ((h.rows() as f64 * fraction).round() as usize).clamp(1, h.rows());
        let cols = ((h.cols() as f64 * fraction).round() as usize).clamp(1, h.cols());
        KernelRegion {
            row: (h.rows() - rows) / 2,
            col: (h.cols() - cols) / 2,
            rows,
            cols,
        }
    }

    pub fn whole(h: &Heatmap) -> Self {
        KernelRegion {
            row: 0,
            col: 0,
            rows: h.rows(),
            cols: h.cols(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeOptions {
    /// Minimum normalized correlation of a peak.
    pub threshold: f64,
    /// Peaks closer than this many pixels are merged.
    pub cluster_radius: f64,
    /// Fewest overlapping valid cells for a correlation value.
    pub min_overlap: usize,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        LatticeOptions {
            threshold: 0.6,
            cluster_radius: 2.0,
            min_overlap: 16,
        }
    }
}

/// Two basis vectors `(fbl, coil)` in mA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub v1: [f64; 2],
    pub v2: [f64; 2],
    /// Number of correlation peaks found.
    pub peaks: usize,
    /// Root-mean-square deviation of the fitted Fourier peaks from the
    /// reciprocal lattice, relative to the shorter reciprocal vector.
    pub fit_residual: f64,
}

/// Correlation of the kernel with the map at every displacement where the
/// kernel fits. Indexed by `[dr + row][dc + col]`, i.e. by the position of
/// the kernel's corner; `None` where too few cells overlap.
pub fn cross_correlation(
    h: &Heatmap,
    k: &KernelRegion,
    min_overlap: usize,
) -> Result<Vec<Vec<Option<f64>>>> {
    if k.rows == 0 || k.cols == 0 || k.row + k.rows > h.rows() || k.col + k.cols > h.cols() {
        return Err(Error::validation(
            "kernel_region",
            "kernel must lie inside the map",
        ));
    }
    let out_rows = h.rows() - k.rows + 1;
    let out_cols = h.cols() - k.cols + 1;
    let out: Vec<Vec<Option<f64>>> = (0..out_rows)
        .into_par_iter()
        .map(|r0| {
            (0..out_cols)
                .map(|c0| {
                    let (mut n, mut sa, mut sb, mut saa, mut sbb, mut sab) =
                        (0usize, 0.0, 0.0, 0.0, 0.0, 0.0);
                    for i in 0..k.rows {
                        for j in 0..k.cols {
                            if let (Some(a), Some(b)) =
                                (h.get(k.row + i, k.col + j), h.get(r0 + i, c0 + j))
                            {
                                n += 1;
                                sa += a;
                                sb += b;
                                saa += a * a;
                                sbb += b * b;
                                sab += a * b;
                            }
                        }
                    }
                    if n < min_overlap {
                        return None;
                    }
                    let nf = n as f64;
                    let cov = sab - sa * sb / nf;
                    let va = saa - sa * sa / nf;
                    let vb = sbb - sb * sb / nf;
                    if va <= 0.0 || vb <= 0.0 {
                        None
                    } else {
                        Some(cov / (va * vb).sqrt())
                    }
                })
                .collect()
        })
        .collect();
    Ok(out)
}

/// Local maxima of the correlation above the threshold, clustered and
/// refined to subpixel accuracy. Positions are `(row, col)` of the kernel corner.
pub fn correlation_peaks(ncc: &[Vec<Option<f64>>], opts: &LatticeOptions) -> Vec<(f64, f64, f64)> {
    let rows = ncc.len();
    let cols = ncc.first().map_or(0, |r| r.len());
    let at = |r: isize, c: isize| -> Option<f64> {
        if r < 0 || c < 0 || r as usize >= rows || c as usize >= cols {
            None
        } else {
            ncc[r as usize][c as usize]
        }
    };
    // maximum over the whole cluster window, not just the nearest neighbours
    let w = opts.cluster_radius.ceil().max(1.0) as isize;
    let mut cand = Vec::new();
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            let Some(v) = at(r, c) else { continue };
            if v < opts.threshold {
                continue;
            }
            let mut is_max = true;
            for dr in -w..=w {
                for dc in -w..=w {
                    if (dr, dc) != (0, 0) && at(r + dr, c + dc).is_some_and(|u| u > v) {
                        is_max = false;
                    }
                }
            }
            if is_max {
                let (fr, fc) = quadratic_peak(&at, r, c, v);
                cand.push((fr, fc, v));
            }
        }
    }
    cand.sort_by(|a, b| b.2.total_cmp(&a.2));
    let mut kept: Vec<(f64, f64, f64)> = Vec::new();
    for p in cand {
        if kept
            .iter()
            .all(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt() > opts.cluster_radius)
        {
            kept.push(p);
        }
    }
    kept
}

/// Subpixel maximum from a quadratic fitted to the 3×3 neighbourhood,
/// with the cross term so that tilted ridges are not biased. Falls back to
/// the pixel when the neighbourhood is incomplete or not concave.
fn quadratic_peak(
    at: &impl Fn(isize, isize) -> Option<f64>,
    r: isize,
    c: isize,
    v: f64,
) -> (f64, f64) {
    let g = |dr: isize, dc: isize| at(r + dr, c + dc);
    let (Some(up), Some(dn), Some(lf), Some(rt)) = (g(-1, 0), g(1, 0), g(0, -1), g(0, 1)) else {
        return (r as f64, c as f64);
    };
    let (Some(a), Some(b), Some(cc), Some(d)) = (g(-1, -1), g(-1, 1), g(1, -1), g(1, 1)) else {
        return (r as f64, c as f64);
    };
    let gr = 0.5 * (dn - up);
    let gc = 0.5 * (rt - lf);
    let hrr = dn - 2.0 * v + up;
    let hcc = rt - 2.0 * v + lf;
    let hrc = 0.25 * (d - b - cc + a);
    let det = hrr * hcc - hrc * hrc;
    if !(hrr < 0.0 && det > 0.0) {
        return (r as f64, c as f64);
    }
    let dr = -(hcc * gr - hrc * gc) / det;
    let dc = -(hrr * gc - hrc * gr) / det;
    (
        r as f64 + dr.clamp(-1.0, 1.0),
        c as f64 + dc.clamp(-1.0, 1.0),
    )
}

/// Lagrange–Gauss reduction of a two-dimensional basis.
pub fn reduce_basis(mut a: [f64; 2], mut b: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
    if dot(a, a) > dot(b, b) {
        std::mem::swap(&mut a, &mut b);
    }
    for _ in 0..100 {
        let mu = (dot(a, b) / dot(a, a)).round();
        b = [b[0] - mu * a[0], b[1] - mu * a[1]];
        if dot(b, b) >= dot(a, a) {
            break;
        }
        std::mem::swap(&mut a, &mut b);
    }
    (a, b)
}

/// Flip into the upper half-plane: positive coil component, or positive FBL
/// component on the axis.
pub fn orient_upper(v: [f64; 2]) -> [f64; 2] {
    if v[1] < 0.0 || (v[1] == 0.0 && v[0] < 0.0) {
        [-v[0], -v[1]]
    } else {
        v
    }
}

/// Two shortest independent lattice vectors of the heatmap's periodic pattern.
pub fn detect_lattice(
    h: &Heatmap,
    kernel: &KernelRegion,
    opts: &LatticeOptions,
) -> Result<Lattice> {
    h.validate()?;
    let (dx, dy) = h.spacing()?;
    let ncc = cross_correlation(h, kernel, opts.min_overlap)?;
    let peaks = correlation_peaks(&ncc, opts);
    if peaks.len() < 3 {
        return Err(Error::InsufficientPeriodicity { peaks: peaks.len() });
    }
    let pts: Vec<[f64; 2]> = peaks
        .iter()
        .map(|p| {
            [
                (p.1 - kernel.col as f64) * dx,
                (p.0 - kernel.row as f64) * dy,
            ]
        })
        .collect();

    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    let origin = pts[0];
    let mut disp: Vec<[f64; 2]> = pts[1..]
        .iter()
        .map(|p| [p[0] - origin[0], p[1] - origin[1]])
        .collect();
    disp.sort_by(|a, b| norm(*a).total_cmp(&norm(*b)));
    disp.truncate(CANDIDATE_PEAKS);

    // correlation sampled at a displacement given in mA
    let ncc_at = |v: [f64; 2]| -> Option<f64> {
        let r = kernel.row as f64 + v[1] / dy;
        let c = kernel.col as f64 + v[0] / dx;
        let (r0, c0) = (r.floor(), c.floor());
        if r0 < 0.0 || c0 < 0.0 {
            return None;
        }
        let (ri, ci) = (r0 as usize, c0 as usize);
        if ri + 1 >= ncc.len() || ci + 1 >= ncc[0].len() {
            return None;
        }
        let (fr, fc) = (r - r0, c - c0);
        let q = [
            ncc[ri][ci]?,
            ncc[ri][ci + 1]?,
            ncc[ri + 1][ci]?,
            ncc[ri + 1][ci + 1]?,
        ];
        Some(
            q[0] * (1.0 - fr) * (1.0 - fc)
                + q[1] * (1.0 - fr) * fc
                + q[2] * fr * (1.0 - fc)
                + q[3] * fr * fc,
        )
    };
    // mean correlation over every lattice point the map can test
    let score = |v1: [f64; 2], v2: [f64; 2]| -> Option<f64> {
        let reach = disp.iter().map(|d| norm(*d)).fold(0.0, f64::max) * 2.0;
        let bound = (reach / norm(v1).min(norm(v2))).ceil() as i32 + 1;
        let (mut sum, mut count) = (0.0, 0usize);
        for m in -bound..=bound {
            for n in -bound..=bound {
                if (m, n) == (0, 0) {
                    continue;
                }
                let v = [
                    m as f64 * v1[0] + n as f64 * v2[0],
                    m as f64 * v1[1] + n as f64 * v2[1],
                ];
                if let Some(x) = ncc_at(v) {
                    sum += x;
                    count += 1;
                }
            }
        }
        (count >= 2).then(|| sum / count as f64)
    };

    let mut cands: Vec<([f64; 2], [f64; 2], f64, f64)> = Vec::new();
    for i in 0..disp.len() {
        for j in (i + 1)..disp.len() {
            let (a, b) = (disp[i], disp[j]);
            let cross = a[0] * b[1] - a[1] * b[0];
            if cross.abs() < MIN_SIN * norm(a) * norm(b) {
                continue;
            }
            let (a, b) = reduce_basis(a, b);
            let area = (a[0] * b[1] - a[1] * b[0]).abs();
            if let Some(sc) = score(a, b).filter(|sc| *sc >= opts.threshold) {
                cands.push((a, b, area, sc));
            }
        }
    }
    // a superlattice of the true one scores as well as the true one, a finer
    // one lower: take the smallest cell among the best-scoring candidates
    let top = cands.iter().map(|c| c.3).fold(f64::NEG_INFINITY, f64::max);
    let best = cands
        .into_iter()
        .filter(|c| c.3 >= top - SCORE_TOLERANCE * (1.0 - top).max(0.01))
        .min_by(|x, y| x.2.total_cmp(&y.2));
    let (v1, v2, _, _) = best.ok_or(Error::InsufficientPeriodicity { peaks: pts.len() })?;

    let (v1, v2, fit_residual) = refine_in_fourier(h, v1, v2);
    let (r1, r2) = reduce_basis(v1, v2);
    Ok(Lattice {
        v1: orient_upper(r1),
        v2: orient_upper(r2),
        peaks: pts.len(),
        fit_residual,
    })
}

/// Mean-subtracted, Hann-windowed samples `(fbl, coil, value)` of the map.
pub(crate) fn windowed_samples(h: &Heatmap) -> Vec<(f64, f64, f64)> {
    let hann = |i: usize, n: usize| {
        let x = (i as f64 + 0.5) / n as f64;
        (std::f64::consts::PI * x).sin().powi(2)
    };
    let mut out: Vec<(f64, f64, f64, f64)> = Vec::new();
    for (i, row) in h.values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if let Some(v) = v {
                out.push((
                    h.fbl[j],
                    h.coil[i],
                    *v,
                    hann(i, h.rows()) * hann(j, h.cols()),
                ));
            }
        }
    }
    let wsum: f64 = out.iter().map(|s| s.3).sum();
    let mean = out.iter().map(|s| s.2 * s.3).sum::<f64>() / wsum;
    out.into_iter()
        .map(|(x, y, v, w)| (x, y, w * (v - mean)))
        .collect()
}

/// Amplitude of the windowed transform at wavevector `k` (cycles per mA).
pub(crate) fn dtft_amplitude(samples: &[(f64, f64, f64)], k: [f64; 2]) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for &(x, y, v) in samples {
        let (s, c) = (2.0 * std::f64::consts::PI * (k[0] * x + k[1] * y)).sin_cos();
        re += v * c;
        im -= v * s;
    }
    re.hypot(im)
}

/// Refines the basis from the positions of the strongest low-order
/// reciprocal-lattice peaks of the windowed map. Each peak is located by
/// maximizing the windowed transform near its predicted wavevector; the
/// reciprocal basis is then fitted to all located peaks. Returns the direct
/// basis and the RMS peak deviation relative to the reciprocal basis length.
fn refine_in_fourier(h: &Heatmap, v1: [f64; 2], v2: [f64; 2]) -> ([f64; 2], [f64; 2], f64) {
    let samples = windowed_samples(h);
    let span_x = (h.fbl[h.cols() - 1] - h.fbl[0]).abs();
    let span_y = (h.coil[h.rows() - 1] - h.coil[0]).abs();
    let bin = [1.0 / span_x, 1.0 / span_y];
    let recip = |a: [f64; 2], b: [f64; 2]| {
        let det = a[0] * b[1] - a[1] * b[0];
        ([b[1] / det, -b[0] / det], [-a[1] / det, a[0] / det])
    };
    let (mut g1, mut g2) = recip(v1, v2);
    let mut residual = 0.0;
    for order in 1..=REFINE_ORDER {
        let mut found: Vec<(f64, f64, [f64; 2], f64)> = Vec::new();
        for p in 0..=order {
            for q in -order..=order {
                if (p == 0 && q <= 0) || p.abs().max(q.abs()) > order {
                    continue;
                }
                let (pf, qf) = (p as f64, q as f64);
                let k0 = [pf * g1[0] + qf * g2[0], pf * g1[1] + qf * g2[1]];
                let mut f = |x: &[f64]| -dtft_amplitude(&samples, [x[0], x[1]]);
                let out = nelder_mead(&mut f, &k0, &[0.3 * bin[0], 0.3 * bin[1]], 1e-12, 0.0, 200);
                let moved = ((out.x[0] - k0[0]) / bin[0]).hypot((out.x[1] - k0[1]) / bin[1]);
                if moved < 1.5 {
                    found.push((pf, qf, [out.x[0], out.x[1]], -out.value));
                }
            }
        }
        let strongest = found.iter().map(|f| f.3).fold(0.0, f64::max);
        found.retain(|f| f.3 >= PEAK_FRACTION * strongest);
        // weighted least squares for g1, g2 from k = p·g1 + q·g2
        let (mut spp, mut spq, mut sqq) = (0.0, 0.0, 0.0);
        let (mut spk, mut sqk) = ([0.0; 2], [0.0; 2]);
        for &(p, q, k, w) in &found {
            spp += w * p * p;
            spq += w * p * q;
            sqq += w * q * q;
            for c in 0..2 {
                spk[c] += w * p * k[c];
                sqk[c] += w * q * k[c];
            }
        }
        let det = spp * sqq - spq * spq;
        if found.len() < 2 || det.abs() < 1e-12 * (spp * sqq).max(1e-300) {
            continue;
        }
        for c in 0..2 {
            g1[c] = (sqq * spk[c] - spq * sqk[c]) / det;
            g2[c] = (spp * sqk[c] - spq * spk[c]) / det;
        }
        let scale = g1[0].hypot(g1[1]).min(g2[0].hypot(g2[1]));
        let ss: f64 = found
            .iter()
            .map(|&(p, q, k, _)| {
                (k[0] - p * g1[0] - q * g2[0])
                    .hypot(k[1] - p * g1[1] - q * g2[1])
                    .powi(2)
            })
            .sum();
        residual = (ss / found.len() as f64).sqrt() / scale;
    }
    let (a, b) = recip(g1, g2);
    (a, b, residual)
}
