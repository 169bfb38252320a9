use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Lowest eigenpairs of a charge-basis Hamiltonian.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Ascending, GHz.
    pub energies: Vec<f64>,
    /// One column per level over charges `−n_charge..=n_charge`.
    pub states: DMatrix<Complex64>,
    pub n_charge: usize,
    pub ng: f64,
}

impl EigenSystem {
    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    /// `E_j − E_i` in GHz.
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.energies[j] - self.energies[i]
    }

    pub fn f01(&self) -> f64 {
        self.transition(0, 1)
    }

    pub fn charge(&self, row: usize) -> f64 {
        row as f64 - self.n_charge as f64
    }

    pub fn state(&self, level: usize) -> nalgebra::DVectorView<'_, Complex64> {
        self.states.column(level)
    }
}

/// Diagonalize a Hermitian matrix and keep the lowest `k_levels` pairs.
///
/// Each state is rotated so its largest-magnitude amplitude is real and
/// positive; the first of several equal-magnitude amplitudes wins.
pub fn eigensystem(h: &DMatrix<Complex64>, k_levels: usize) -> Result<EigenSystem> {
    let dim = h.nrows();
    if h.ncols() != dim || dim == 0 || dim.is_multiple_of(2) {
        return Err(Error::validation(
            "h",
            format!(
                "expected odd square charge-basis matrix, got {}x{}",
                dim,
                h.ncols()
            ),
        ));
    }
    if k_levels == 0 || k_levels > dim {
        return Err(Error::validation(
            "k_levels",
            format!("must be in 1..={dim}, got {k_levels}"),
        ));
    }
    let eig = SymmetricEigen::try_new(h.clone(), EIGEN_EPS, EIGEN_MAX_ITER).ok_or_else(|| {
        Error::NumericalFailure(format!(
            "Hermitian eigensolver did not converge ({dim}x{dim})"
        ))
    })?;
    if eig.eigenvalues.iter().any(|e| !e.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });

    let mut states = DMatrix::<Complex64>::zeros(dim, k_levels);
    let mut energies = Vec::with_capacity(k_levels);
    for (col, &idx) in order.iter().take(k_levels).enumerate() {
        energies.push(eig.eigenvalues[idx]);
        let v = eig.eigenvectors.column(idx);
        let norm = v.norm();
        let phase = fixing_phase(v.iter().copied());
        for r in 0..dim {
            states[(r, col)] = v[r] * phase / norm;
        }
    }
    Ok(EigenSystem {
        energies,
        states,
        n_charge: (dim - 1) / 2,
        ng: 0.0,
    })
}

/// Lowest `k_levels` eigenvalues only, ascending. Skips the eigenvectors.
pub fn lowest_eigenvalues(h: &DMatrix<Complex64>, k_levels: usize) -> Result<Vec<f64>> {
    let dim = h.nrows();
    if h.ncols() != dim || dim == 0 {
        return Err(Error::validation(
            "h",
            format!("expected square matrix, got {}x{}", dim, h.ncols()),
        ));
    }
    if k_levels == 0 || k_levels > dim {
        return Err(Error::validation(
            "k_levels",
            format!("must be in 1..={dim}, got {k_levels}"),
        ));
    }
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    if ev.iter().any(|e| !e.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalue".into()));
    }
    ev.sort_by(f64::total_cmp);
    ev.truncate(k_levels);
    Ok(ev)
}

/// Unit phase that makes the dominant amplitude real positive.
pub(crate) fn fixing_phase(amps: impl Iterator<Item = Complex64> + Clone) -> Complex64 {
    let max = amps.clone().map(|a| a.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let pivot = amps
        .into_iter()
        .find(|a| a.norm() >= max * (1.0 - 1e-9))
        .unwrap();
    pivot.conj() / pivot.norm()
}
