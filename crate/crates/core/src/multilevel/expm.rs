//! Matrix exponential by scaling and squaring with a diagonal Padé approximant.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

// [6/6] Padé coefficients c_k = (12-k)! 6! / (12! k! (6-k)!)
const PADE6: [f64; 7] = [
    1.0,
    0.5,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

/// `e^A` for a real square matrix.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::validation("matrix", "must be square"));
    }
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if !norm.is_finite() {
        return Err(Error::NumericalFailure(
            "matrix exponential of a non-finite matrix".into(),
        ));
    }
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = a / 2f64.powi(s);
    let id = DMatrix::<f64>::identity(n, n);
    let mut num = id.clone() * PADE6[0];
    let mut den = id.clone() * PADE6[0];
    let mut pow = id;
    for (k, c) in PADE6.iter().enumerate().skip(1) {
        pow = &pow * &x;
        num += &pow * *c;
        den += &pow * (if k % 2 == 0 { *c } else { -*c });
    }
    let mut r = den
        .lu()
        .solve(&num)
        .ok_or_else(|| Error::NumericalFailure("singular Padé denominator".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_rotation() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-3.0, 0.0, 2.5]));
        let e = expm(&d).unwrap();
        for (i, v) in [-3.0f64, 0.0, 2.5].iter().enumerate() {
            assert!((e[(i, i)] / v.exp() - 1.0).abs() < 1e-13);
        }
        let t = 7.3;
        let r = expm(&DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0])).unwrap();
        assert!((r[(0, 0)] - t.cos()).abs() < 1e-12);
        assert!((r[(1, 0)] - t.sin()).abs() < 1e-12);
    }
}
