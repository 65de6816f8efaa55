//! Symmetric tridiagonal eigensolver.
//!
//! Eigenvalues come from Sturm-sequence bisection, eigenvectors from inverse
//! iteration with a pivoted tridiagonal LU solve. Strictly positive
//! off-diagonals make every eigenvalue simple, so no cluster handling beyond a
//! light re-orthogonalization of close neighbours is needed.

use thiserror::Error;

/// Minimum allowed gap between adjacent eigenvalues.
pub const SIMPLICITY_GAP: f64 = 1e-10;

const MAX_BISECTIONS: usize = 256;
const MAX_INVERSE_ITERATIONS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("off-diagonal has length {found}, expected {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("matrix entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("off-diagonal entry {index} = {value} is not strictly positive")]
    NonPositiveOffDiagonal { index: usize, value: f64 },
    #[error("eigensolver did not converge for eigenvalue #{index}: {reason}")]
    ConvergenceFailure { index: usize, reason: String },
    #[error("eigenvalues {upper} and {lower} are closer than {SIMPLICITY_GAP:e}")]
    NearDegenerate { upper: f64, lower: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagEigenPair {
    pub value: f64,
    /// Unit Euclidean norm; sign is whatever inverse iteration produced.
    pub vector: Vec<f64>,
}

/// Number of eigenvalues strictly below `x`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let m = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r =
            if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < m { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// All eigenvalues in ascending order.
pub fn eigenvalues_bisection(diag: &[f64], off: &[f64]) -> Result<Vec<f64>, EigenError> {
    validate(diag, off)?;
    Ok(bisect_all(diag, off))
}

fn bisect_all(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let (g_lo, g_hi) = gershgorin(diag, off);
    let scale = g_lo.abs().max(g_hi.abs()).max(f64::MIN_POSITIVE);
    let pivmin = f64::MIN_POSITIVE
        .max(f64::EPSILON * off.iter().map(|e| e * e).fold(f64::MIN_POSITIVE, f64::max));
    let pad = 2.0 * f64::EPSILON * scale + pivmin;
    let (g_lo, g_hi) = (g_lo - pad, g_hi + pad);

    (0..m)
        .map(|k| {
            let (mut lo, mut hi) = (g_lo, g_hi);
            for _ in 0..MAX_BISECTIONS {
                let mid = 0.5 * (lo + hi);
                let tol = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + pivmin;
                if hi - lo <= tol || mid <= lo || mid >= hi {
                    break;
                }
                if sturm_count(diag, off, mid, pivmin) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

fn validate(diag: &[f64], off: &[f64]) -> Result<(), EigenError> {
    let m = diag.len();
    if off.len() + 1 != m.max(1) {
        return Err(EigenError::ShapeMismatch {
            expected: m.saturating_sub(1),
            found: off.len(),
        });
    }
    if let Some(index) = diag.iter().chain(off).position(|v| !v.is_finite()) {
        return Err(EigenError::NonFinite { index });
    }
    Ok(())
}

/// Pivoted LU of a shifted tridiagonal matrix, LAPACK `gttrf` layout.
struct ShiftedLu {
    mult: Vec<f64>,
    swapped: Vec<bool>,
    d: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
}

impl ShiftedLu {
    fn new(diag: &[f64], off: &[f64], shift: f64, tiny: f64) -> Self {
        let m = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
        let mut u1: Vec<f64> = off.to_vec();
        let mut lower: Vec<f64> = off.to_vec();
        let mut u2 = vec![0.0; m.saturating_sub(2)];
        let mut swapped = vec![false; m.saturating_sub(1)];
        for i in 0..m.saturating_sub(1) {
            if d[i].abs() >= lower[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let l = lower[i] / d[i];
                lower[i] = l;
                d[i + 1] -= l * u1[i];
            } else {
                let l = d[i] / lower[i];
                d[i] = lower[i];
                lower[i] = l;
                let old_c = u1[i];
                u1[i] = d[i + 1];
                d[i + 1] = old_c - l * d[i + 1];
                if i + 2 < m {
                    u2[i] = u1[i + 1];
                    u1[i + 1] *= -l;
                }
                swapped[i] = true;
            }
        }
        if let Some(last) = d.last_mut() {
            if *last == 0.0 {
                *last = tiny;
            }
        }
        Self {
            mult: lower,
            swapped,
            d,
            u1,
            u2,
        }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let m = self.d.len();
        for i in 0..m.saturating_sub(1) {
            if self.swapped[i] {
                rhs.swap(i, i + 1);
            }
            rhs[i + 1] -= self.mult[i] * rhs[i];
        }
        for i in (0..m).rev() {
            let mut acc = rhs[i];
            if i + 1 < m {
                acc -= self.u1[i] * rhs[i + 1];
            }
            if i + 2 < m {
                acc -= self.u2[i] * rhs[i + 2];
            }
            rhs[i] = acc / self.d[i];
        }
    }
}

fn residual_inf(diag: &[f64], off: &[f64], value: f64, v: &[f64]) -> f64 {
    let m = diag.len();
    (0..m)
        .map(|i| {
            let mut acc = (diag[i] - value) * v[i];
            if i > 0 {
                acc += off[i - 1] * v[i - 1];
            }
            if i + 1 < m {
                acc += off[i] * v[i + 1];
            }
            acc.abs()
        })
        .fold(0.0, f64::max)
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Full eigendecomposition, eigenvalues sorted strictly descending.
///
/// Requires strictly positive off-diagonal entries. The returned vectors
/// satisfy `||T w - lambda w||_inf <= 1e-10 (n+1) max(1, ||T||)`.
pub fn eigs_symmetric_tridiagonal(
    diag: &[f64],
    off: &[f64],
) -> Result<Vec<TridiagEigenPair>, EigenError> {
    validate(diag, off)?;
    if let Some((index, &value)) = off.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(EigenError::NonPositiveOffDiagonal { index, value });
    }
    let m = diag.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut values = bisect_all(diag, off);
    values.reverse();
    for w in values.windows(2) {
        if w[0] - w[1] <= SIMPLICITY_GAP {
            return Err(EigenError::NearDegenerate {
                upper: w[0],
                lower: w[1],
            });
        }
    }

    let (g_lo, g_hi) = gershgorin(diag, off);
    let norm = g_lo.abs().max(g_hi.abs()).max(1.0);
    let tiny = f64::EPSILON * norm;
    let target = 1e-10 * m as f64 * norm;
    let ortho_window = 1e-3 * norm;

    let mut pairs: Vec<TridiagEigenPair> = Vec::with_capacity(m);
    for (k, &value) in values.iter().enumerate() {
        let lu = ShiftedLu::new(diag, off, value, tiny);
        // deterministic, non-degenerate start
        let mut v: Vec<f64> = (0..m)
            .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_894_9).fract())
            .collect();
        normalize(&mut v);
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_INVERSE_ITERATIONS {
            lu.solve(&mut v);
            for prev in pairs
                .iter()
                .filter(|p| (p.value - value).abs() < ortho_window)
            {
                let proj: f64 = prev.vector.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut()
                    .zip(&prev.vector)
                    .for_each(|(x, p)| *x -= proj * p);
            }
            if normalize(&mut v) == 0.0 || v.iter().any(|x| !x.is_finite()) {
                return Err(EigenError::ConvergenceFailure {
                    index: k,
                    reason: "inverse iteration collapsed".into(),
                });
            }
            residual = residual_inf(diag, off, value, &v);
            if residual <= f64::EPSILON * norm * m as f64 {
                break;
            }
        }
        if residual > target {
            return Err(EigenError::ConvergenceFailure {
                index: k,
                reason: format!("residual {residual:e} exceeds {target:e}"),
            });
        }
        pairs.push(TridiagEigenPair { value, vector: v });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn two_by_two_closed_form() {
        let c = 0.24f64.sqrt();
        let pairs = eigs_symmetric_tridiagonal(&[-0.6, -0.4], &[c]).unwrap();
        assert!((pairs[0].value - 0.0).abs() < 1e-14);
        assert!((pairs[1].value + 1.0).abs() < 1e-14);
    }

    #[test]
    fn toeplitz_spectrum() {
        for m in [1usize, 2, 5, 17, 40] {
            let c = 0.37;
            let diag = vec![0.0; m];
            let off = vec![c; m - 1];
            let pairs = eigs_symmetric_tridiagonal(&diag, &off).unwrap();
            for (idx, p) in pairs.iter().enumerate() {
                let k = idx + 1;
                let expected = 2.0 * c * (k as f64 * PI / (m as f64 + 1.0)).cos();
                assert!((p.value - expected).abs() < 1e-13, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn orthonormal_vectors() {
        let diag = [0.3, -1.2, 0.0, 2.5, 0.1, -0.4];
        let off = [0.5, 1.1, 0.01, 0.7, 2.0];
        let pairs = eigs_symmetric_tridiagonal(&diag, &off).unwrap();
        for (i, a) in pairs.iter().enumerate() {
            assert!(residual_inf(&diag, &off, a.value, &a.vector) < 1e-12);
            for (j, b) in pairs.iter().enumerate() {
                let dot: f64 = a.vector.iter().zip(&b.vector).map(|(x, y)| x * y).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sturm_count_brackets() {
        let diag = [0.0, 0.0, 0.0];
        let off = [1.0, 1.0];
        // eigenvalues -sqrt2, 0, sqrt2
        assert_eq!(sturm_count(&diag, &off, -2.0, 1e-300), 0);
        assert_eq!(sturm_count(&diag, &off, -1.0, 1e-300), 1);
        assert_eq!(sturm_count(&diag, &off, 1.0, 1e-300), 2);
        assert_eq!(sturm_count(&diag, &off, 2.0, 1e-300), 3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            eigs_symmetric_tridiagonal(&[0.0, 0.0], &[0.0]),
            Err(EigenError::NonPositiveOffDiagonal { .. })
        ));
        assert!(matches!(
            eigs_symmetric_tridiagonal(&[0.0, f64::NAN], &[1.0]),
            Err(EigenError::NonFinite { .. })
        ));
        assert!(matches!(
            eigs_symmetric_tridiagonal(&[0.0, 0.0], &[1.0, 1.0]),
            Err(EigenError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn near_degenerate_is_reported() {
        // weakly coupled blocks with equal diagonals produce an exponentially small gap
        let diag = [1.0, 0.0, 0.0, 0.0, 1.0];
        let off = [1e-7, 1.0, 1.0, 1e-7];
        assert!(matches!(
            eigs_symmetric_tridiagonal(&diag, &off),
            Err(EigenError::NearDegenerate { .. })
        ));
    }
}
