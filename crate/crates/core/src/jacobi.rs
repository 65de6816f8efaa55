//! The Jacobi matrix `B` built from the coins' left `nu2`-eigenvectors, its
//! symmetrizing weight `pi`, the symmetric conjugate `J = D^{-1} B D` with
//! `D = diag(sqrt(pi))`, and the eigenpairs of `B`.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::model::{CoinFamily, PathCrwModel};
use crate::tridiag::{self, EigenError};

/// Residual tolerance factor for eigenpairs of `B`, scaled by `n + 1`.
pub const B_RESIDUAL_TOL: f64 = 1e-9;
/// Slack on the `|lambda| <= 1` post-condition.
pub const SPECTRUM_BOUND_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JacobiError {
    #[error("weight product leaves the representable range at vertex {vertex}")]
    Overflow { vertex: usize },
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("eigenvalue {lambda} of B lies outside [-1, 1]")]
    SpectrumOutOfRange { lambda: f64 },
    #[error("eigenpair lambda = {lambda} of B has residual {residual:e} above {bound:e}")]
    Residual {
        lambda: f64,
        residual: f64,
        bound: f64,
    },
}

/// Fixed right eigenvector `(1, -1)/sqrt(2)` for the eigenvalue `nu2` of every coin.
pub const W2: [f64; 2] = [
    std::f64::consts::FRAC_1_SQRT_2,
    -std::f64::consts::FRAC_1_SQRT_2,
];

/// Eigen data of one coin `C_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoinSpectralData {
    /// `q_x(L) = sqrt2 (1 - p_L) / (1 - nu2)`, positive.
    pub q_left: f64,
    /// `q_x(R) = -sqrt2 p_R / (1 - nu2)`, negative.
    pub q_right: f64,
    /// Right eigenvector for eigenvalue 1, `(p_R, 1 - p_L) / (1 - nu2)`.
    pub w1: [f64; 2],
}

impl CoinSpectralData {
    /// Rebuilds `C_x = (1 - nu2) |w2><-q2| + I`.
    pub fn reconstruct(&self, nu2: f64) -> [[f64; 2]; 2] {
        let q = [self.q_left, self.q_right];
        let mut c = [[0.0; 2]; 2];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = (1.0 - nu2) * W2[i] * (-q[j]) + if i == j { 1.0 } else { 0.0 };
            }
        }
        c
    }
}

pub fn coin_spectral_data(family: &CoinFamily) -> Vec<CoinSpectralData> {
    let gap = 1.0 - family.nu2();
    family
        .coins()
        .iter()
        .map(|c| CoinSpectralData {
            q_left: SQRT_2 * (1.0 - c.p_left) / gap,
            q_right: -SQRT_2 * c.p_right / gap,
            w1: [c.p_right / gap, (1.0 - c.p_left) / gap],
        })
        .collect()
}

/// Tridiagonal `B` with row `x` equal to `(q_x(L), 0, -q_x(R)) / sqrt2`,
/// except the corner diagonals `-q_0(L)/sqrt2` and `q_n(R)/sqrt2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TridiagonalB {
    pub diag: Vec<f64>,
    /// `sub[x - 1] = B[x][x - 1]`
    pub sub: Vec<f64>,
    /// `sup[x] = B[x][x + 1]`
    pub sup: Vec<f64>,
}

impl TridiagonalB {
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let m = self.size();
        let mut b = DMatrix::zeros(m, m);
        for i in 0..m {
            b[(i, i)] = self.diag[i];
            if i + 1 < m {
                b[(i, i + 1)] = self.sup[i];
                b[(i + 1, i)] = self.sub[i];
            }
        }
        b
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let m = self.size();
        (0..m)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc += self.sub[i - 1] * v[i - 1];
                }
                if i + 1 < m {
                    acc += self.sup[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.mul_vec(&vec![1.0; self.size()])
    }
}

pub fn build_b(model: &PathCrwModel) -> TridiagonalB {
    b_from_spectral_data(&coin_spectral_data(model.family()))
}

pub fn b_from_spectral_data(data: &[CoinSpectralData]) -> TridiagonalB {
    let m = data.len();
    let n = m - 1;
    let mut diag = vec![0.0; m];
    diag[0] = -data[0].q_left / SQRT_2;
    diag[n] = data[n].q_right / SQRT_2;
    let sub = data[1..].iter().map(|d| d.q_left / SQRT_2).collect();
    let sup = data[..n].iter().map(|d| -d.q_right / SQRT_2).collect();
    TridiagonalB { diag, sub, sup }
}

/// Positive weights making `B` symmetric under `diag(sqrt(pi))` conjugation,
/// normalized to sum 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiVector {
    pub pi: Vec<f64>,
    pub c_pi: f64,
}

/// `pi[x] / pi[x-1] = B[x][x-1] / B[x-1][x]`, accumulated as running ratios.
pub fn build_pi(b: &TridiagonalB) -> Result<PiVector, JacobiError> {
    let unnormalized = running_products(b.sub.iter().zip(&b.sup).map(|(l, u)| l / u))?;
    let total: f64 = unnormalized.iter().sum();
    if !total.is_finite() {
        return Err(JacobiError::Overflow {
            vertex: b.size() - 1,
        });
    }
    let c_pi = 1.0 / total;
    Ok(PiVector {
        pi: unnormalized.iter().map(|w| w * c_pi).collect(),
        c_pi,
    })
}

/// `[1, r_1, r_1 r_2, ...]`, failing at the first vertex where the product
/// overflows or underflows to zero.
pub(crate) fn running_products(ratios: impl Iterator<Item = f64>) -> Result<Vec<f64>, JacobiError> {
    let mut out = vec![1.0];
    let mut acc = 1.0f64;
    for (i, r) in ratios.enumerate() {
        acc *= r;
        if !acc.is_finite() || acc <= 0.0 || !acc.is_normal() {
            return Err(JacobiError::Overflow { vertex: i + 1 });
        }
        out.push(acc);
    }
    Ok(out)
}

/// Symmetric tridiagonal `J = D^{-1} B D`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymTridiagonalJ {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl SymTridiagonalJ {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let m = self.diag.len();
        let mut j = DMatrix::zeros(m, m);
        for i in 0..m {
            j[(i, i)] = self.diag[i];
            if i + 1 < m {
                j[(i, i + 1)] = self.offdiag[i];
                j[(i + 1, i)] = self.offdiag[i];
            }
        }
        j
    }
}

/// Off-diagonals are `sqrt(B[x][x+1] B[x+1][x])`; `pi` only enters through
/// the conjugation identity, which the closed form satisfies for any valid `pi`.
pub fn build_j(b: &TridiagonalB, _pi: &PiVector) -> SymTridiagonalJ {
    SymTridiagonalJ {
        diag: b.diag.clone(),
        offdiag: b
            .sub
            .iter()
            .zip(&b.sup)
            .map(|(l, u)| (l * u).sqrt())
            .collect(),
    }
}

/// Eigenpair of `B` with unit-norm `v` and `v[0] > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPairB {
    pub lambda: f64,
    pub v: Vec<f64>,
}

/// The `n + 1` eigenpairs of `B`, strictly descending in `lambda`.
pub fn eigs_b(model: &PathCrwModel) -> Result<Vec<EigenPairB>, JacobiError> {
    let b = build_b(model);
    let pi = build_pi(&b)?;
    let j = build_j(&b, &pi);
    eigs_b_from(&b, &pi, &j)
}

pub fn eigs_b_from(
    b: &TridiagonalB,
    pi: &PiVector,
    j: &SymTridiagonalJ,
) -> Result<Vec<EigenPairB>, JacobiError> {
    let m = b.size();
    let bound = B_RESIDUAL_TOL * m as f64;
    let sqrt_pi: Vec<f64> = pi.pi.iter().map(|p| p.sqrt()).collect();
    tridiag::eigs_symmetric_tridiagonal(&j.diag, &j.offdiag)?
        .into_iter()
        .map(|pair| {
            let lambda = pair.value;
            if lambda.abs() > 1.0 + SPECTRUM_BOUND_TOL {
                return Err(JacobiError::SpectrumOutOfRange { lambda });
            }
            let mut v: Vec<f64> = pair
                .vector
                .iter()
                .zip(&sqrt_pi)
                .map(|(w, d)| w * d)
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
            v.iter_mut().for_each(|x| *x *= sign / norm);
            let residual = b
                .mul_vec(&v)
                .iter()
                .zip(&v)
                .map(|(bv, x)| (bv - lambda * x).abs())
                .fold(0.0, f64::max);
            // negated so that NaN fails
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(residual <= bound) {
                return Err(JacobiError::Residual {
                    lambda,
                    residual,
                    bound,
                });
            }
            Ok(EigenPairB { lambda, v })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{dense_u, CoinParams};

    fn homogeneous(n: usize) -> PathCrwModel {
        PathCrwModel::homogeneous(n, CoinParams::new(0.7, 0.2)).unwrap()
    }

    #[test]
    fn coin_data_fixture() {
        let m = homogeneous(1);
        let d = coin_spectral_data(m.family())[0];
        assert!((d.q_left - 0.6 * SQRT_2).abs() < 1e-12);
        assert!((d.q_right + 0.4 * SQRT_2).abs() < 1e-12);
        assert!((d.q_left - d.q_right - SQRT_2).abs() < 1e-12);
        assert!((d.w1[0] - 0.4).abs() < 1e-12 && (d.w1[1] - 0.6).abs() < 1e-12);
        let c = m.coin(0).matrix();
        // left nu2-eigenvector, C w1 = w1, <q2|w2> = 1, <q2|w1> = 0
        let nu2 = m.nu2();
        for col in 0..2 {
            let lhs = d.q_left * c[0][col] + d.q_right * c[1][col];
            let rhs = nu2 * [d.q_left, d.q_right][col];
            assert!((lhs - rhs).abs() < 1e-12);
        }
        for (row, w) in c.iter().zip(d.w1) {
            assert!((row[0] * d.w1[0] + row[1] * d.w1[1] - w).abs() < 1e-12);
        }
        assert!((d.q_left * W2[0] + d.q_right * W2[1] - 1.0).abs() < 1e-12);
        assert!((d.q_left * d.w1[0] + d.q_right * d.w1[1]).abs() < 1e-12);
        let rebuilt = d.reconstruct(nu2);
        for i in 0..2 {
            for j in 0..2 {
                assert!((rebuilt[i][j] - c[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn b_fixtures() {
        let b = build_b(&homogeneous(1));
        let dense = b.to_dense();
        let expected = [[-0.6, 0.4], [0.6, -0.4]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((dense[(i, j)] - expected[i][j]).abs() < 1e-12);
            }
        }
        let b = build_b(&homogeneous(2));
        for (got, want) in b.diag.iter().zip([-0.6, 0.0, -0.4]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(b.sub.iter().all(|v| (v - 0.6).abs() < 1e-12));
        assert!(b.sup.iter().all(|v| (v - 0.4).abs() < 1e-12));
        assert!((b.row_sums()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn b_inner_products_against_u() {
        let m = PathCrwModel::new(3, &[(0.7, 0.2), (0.6, 0.1), (0.8, 0.3), (0.55, 0.05)]).unwrap();
        let n = m.n();
        let u = dense_u(&m);
        let data = coin_spectral_data(m.family());
        let b = build_b(&m).to_dense();
        let nu2 = m.nu2();
        // <q_{2,y} (x) y| U |x (x) w2>
        let entry = |y: usize, x: usize| {
            let mut acc = 0.0;
            for (jy, qy) in [data[y].q_left, data[y].q_right].iter().enumerate() {
                for (jx, wx) in W2.iter().enumerate() {
                    acc += qy * u[(2 * y + jy, 2 * x + jx)] * wx;
                }
            }
            acc
        };
        // holds with -nu2: U |x (x) w2> = nu2 (|x-1, R> - |x+1, L>) / sqrt2
        for x in 1..n {
            assert!((entry(x - 1, x) + nu2 * b[(x - 1, x)]).abs() < 1e-12);
            assert!((entry(x + 1, x) + nu2 * b[(x + 1, x)]).abs() < 1e-12);
        }
        assert!((entry(0, 0) + nu2 * b[(0, 0)]).abs() < 1e-12);
        assert!((entry(n, n) + nu2 * b[(n, n)]).abs() < 1e-12);
    }

    #[test]
    fn pi_fixtures() {
        let pi = build_pi(&build_b(&homogeneous(1))).unwrap();
        assert!((pi.pi[0] - 0.4).abs() < 1e-12 && (pi.pi[1] - 0.6).abs() < 1e-12);
        let pi = build_pi(&build_b(&homogeneous(2))).unwrap();
        for (got, w) in pi.pi.iter().zip([1.0, 1.5, 2.25]) {
            assert!((got - w / 4.75).abs() < 1e-12);
        }
    }

    #[test]
    fn pi_overflow_is_reported() {
        let b = TridiagonalB {
            diag: vec![-1.0; 4],
            sub: vec![1e150; 3],
            sup: vec![1e-10; 3],
        };
        assert_eq!(build_pi(&b), Err(JacobiError::Overflow { vertex: 2 }));
    }

    #[test]
    fn j_fixture_and_conjugation() {
        let b = build_b(&homogeneous(1));
        let pi = build_pi(&b).unwrap();
        let j = build_j(&b, &pi);
        assert!((j.offdiag[0] - 0.24f64.sqrt()).abs() < 1e-12);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            2,
            pi.pi.iter().map(|p| p.sqrt()),
        ));
        let conj = d.clone().try_inverse().unwrap() * b.to_dense() * d;
        assert!((conj - j.to_dense()).amax() < 1e-12);
    }

    #[test]
    fn eigs_b_fixture() {
        let pairs = eigs_b(&homogeneous(1)).unwrap();
        assert!(pairs[0].lambda.abs() < 1e-12);
        assert!((pairs[1].lambda + 1.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((pairs[1].v[0] - h).abs() < 1e-12 && (pairs[1].v[1] + h).abs() < 1e-12);
        // B v = 0 for lambda = 0: v ∝ (2, 3)
        let v = &pairs[0].v;
        assert!((v[1] / v[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn alternating_vector_is_minus_one_eigenvector() {
        let m = PathCrwModel::new(
            4,
            &[(0.3, 0.6), (0.2, 0.5), (0.5, 0.8), (0.1, 0.4), (0.6, 0.9)],
        )
        .unwrap();
        let b = build_b(&m);
        let alt: Vec<f64> = (0..5)
            .map(|x| if x % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let bv = b.mul_vec(&alt);
        for (got, a) in bv.iter().zip(&alt) {
            assert!((got + a).abs() < 1e-12);
        }
        let pairs = eigs_b(&m).unwrap();
        assert!((pairs.last().unwrap().lambda + 1.0).abs() < 1e-10);
    }
}
