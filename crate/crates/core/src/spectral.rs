//! Complete spectral decomposition of the one-step operator `U`.
//!
//! Every eigenpair `(lambda_m, v_m)` of the Jacobi matrix `B` with
//! `lambda_m != -1` spans a two-dimensional `U`-invariant subspace
//! `span(a_m, b_m)` with `b_m = S a_m`, on which `U` acts as
//! `[[0, nu2], [1, (1 - nu2) lambda_m]]`. Its two eigenvalues solve
//! `mu^2 - (1 - nu2) lambda mu - nu2 = 0`. The eigenvalue `lambda = -1`
//! contributes the single alternating pair with `mu = nu2`, and the
//! detailed-balance vector gives the stationary pair with `mu = 1`.
//! Together these are all `2(n+1)` eigenpairs.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::fmt_g;
use crate::jacobi::{self, running_products, EigenPairB, JacobiError};
use crate::model::{
    apply_coin, apply_shift, apply_u, dense_u, Distribution, ModelError, PathCrwModel, StateVector,
    STRUCTURAL_TOL,
};

/// Tolerance for identifying `lambda = -1` and for the linear-dependence test.
pub const MINUS_ONE_TOL: f64 = 1e-10;
/// Minimum separation between eigenvalues of `U`.
pub const MU_GAP_TOL: f64 = 1e-10;
/// Tolerance on the two-dimensional action of `U` on `(a, b)`.
pub const RELATION_TOL: f64 = 1e-10;
/// Residual bound on `V V^{-1} = I` for the left projections.
pub const INVERSE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(
        "complex roots for lambda = {lambda}, nu2 = {nu2}: discriminant {discriminant:e} <= 0"
    )]
    ComplexRoots {
        lambda: f64,
        nu2: f64,
        discriminant: f64,
    },
    #[error("linear-dependence criteria disagree for lambda = {lambda}: <a,b> = {inner}")]
    InconsistentLemma { lambda: f64, inner: f64 },
    #[error("assumption on the spectrum of B violated: {0}")]
    AssumptionViolated(Assumption2Report),
    #[error("eigenvalues {first} and {second} of U are not separated by {MU_GAP_TOL:e}")]
    NearDegenerate { first: f64, second: f64 },
    #[error(
        "U does not act on span(a, b) as expected for lambda = {lambda}: residual {residual:e}"
    )]
    RelationViolated { lambda: f64, residual: f64 },
    #[error("eigenvector matrix is singular or ill-conditioned (residual {residual:e})")]
    IllConditioned { residual: f64 },
    #[error("stationary vector check failed: residual {residual:e}")]
    StationaryCheck { residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairTag {
    Stationary,
    Plus,
    Minus,
    Alternating,
}

impl fmt::Display for PairTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairTag::Stationary => "stationary",
            PairTag::Plus => "plus",
            PairTag::Minus => "minus",
            PairTag::Alternating => "alternating",
        })
    }
}

/// `a = sum_x v(x) |x> (x) (|L> - |R>)/sqrt2` and `b = S a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ABPair {
    pub a: StateVector,
    pub b: StateVector,
    pub lambda: f64,
}

impl ABPair {
    pub fn inner(&self) -> f64 {
        self.a.dot(&self.b)
    }
}

pub fn make_ab(model: &PathCrwModel, eig: &EigenPairB) -> Result<ABPair, SpectralError> {
    if eig.v.len() != model.vertices() {
        return Err(ModelError::DimensionMismatch {
            expected: model.vertices(),
            found: eig.v.len(),
        }
        .into());
    }
    let mut a = StateVector::zeros(model.vertices());
    for (x, v) in eig.v.iter().enumerate() {
        a[2 * x] = v * FRAC_1_SQRT_2;
        a[2 * x + 1] = -v * FRAC_1_SQRT_2;
    }
    let b = apply_shift(model, &a)?;
    Ok(ABPair {
        a,
        b,
        lambda: eig.lambda,
    })
}

/// `true` iff `a` and `b` are parallel. Cross-checked against `lambda = -1`.
pub fn check_linear_dependence(ab: &ABPair) -> Result<bool, SpectralError> {
    let inner = ab.inner();
    let dependent = inner.abs() >= 1.0 - MINUS_ONE_TOL;
    let is_minus_one = (ab.lambda + 1.0).abs() <= MINUS_ONE_TOL;
    if dependent != is_minus_one {
        return Err(SpectralError::InconsistentLemma {
            lambda: ab.lambda,
            inner,
        });
    }
    Ok(dependent)
}

/// Roots `(mu_plus, mu_minus)` of `mu^2 - (1 - nu2) lambda mu - nu2 = 0`.
///
/// The larger-magnitude root is taken from the quadratic formula with the
/// sign that avoids cancellation; the other follows from `mu_+ mu_- = -nu2`.
pub fn mu_pair(lambda: f64, nu2: f64) -> Result<(f64, f64), SpectralError> {
    let s = (1.0 - nu2) * lambda;
    let discriminant = s * s + 4.0 * nu2;
    // negated so that NaN fails
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(discriminant > 0.0) {
        return Err(SpectralError::ComplexRoots {
            lambda,
            nu2,
            discriminant,
        });
    }
    let r = discriminant.sqrt();
    if s >= 0.0 {
        let plus = 0.5 * (s + r);
        Ok((plus, -nu2 / plus))
    } else {
        let minus = 0.5 * (s - r);
        Ok((-nu2 / minus, minus))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption2Entry {
    pub lambda: f64,
    pub passes: bool,
}

/// Per-eigenvalue check of `sqrt(-4 nu2)/(1 - nu2) < |lambda| <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption2Report {
    pub nu2: f64,
    /// `None` when `nu2 > 0`, where the condition is vacuous.
    pub threshold: Option<f64>,
    pub vacuous: bool,
    pub entries: Vec<Assumption2Entry>,
    pub passes: bool,
}

impl Assumption2Report {
    pub fn offending(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().filter(|e| !e.passes).map(|e| e.lambda)
    }
}

impl fmt::Display for Assumption2Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.threshold {
            None => write!(f, "nu2 = {} > 0, no condition", fmt_g(self.nu2)),
            Some(t) => {
                let bad: Vec<String> = self.offending().map(fmt_g).collect();
                if bad.is_empty() {
                    write!(
                        f,
                        "all |lambda| in ({}, 1] for nu2 = {}",
                        fmt_g(t),
                        fmt_g(self.nu2)
                    )
                } else {
                    write!(
                        f,
                        "lambda = [{}] not in ({}, 1] for nu2 = {}",
                        bad.join(", "),
                        fmt_g(t),
                        fmt_g(self.nu2)
                    )
                }
            }
        }
    }
}

pub fn assumption2_threshold(nu2: f64) -> Option<f64> {
    (nu2 < 0.0).then(|| (-4.0 * nu2).sqrt() / (1.0 - nu2))
}

pub fn check_assumption2(lambdas: &[f64], nu2: f64) -> Assumption2Report {
    let threshold = assumption2_threshold(nu2);
    let entries: Vec<_> = lambdas
        .iter()
        .map(|&lambda| Assumption2Entry {
            lambda,
            passes: match threshold {
                None => true,
                Some(t) => lambda.abs() > t && lambda.abs() <= 1.0 + jacobi::SPECTRUM_BOUND_TOL,
            },
        })
        .collect();
    Assumption2Report {
        nu2,
        threshold,
        vacuous: threshold.is_none(),
        passes: entries.iter().all(|e| e.passes),
        entries,
    }
}

/// Right eigenvector of `U` before left projections are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenVectorU {
    pub mu: f64,
    pub u: StateVector,
    pub tag: PairTag,
    /// 0 for the stationary pair, `m` for pairs from `lambda_m`, `n + 1` for the alternating pair.
    pub source_index: usize,
}

/// Detailed-balance weights `v0(x+1) = v0(x) (1 - p_{x,L}) / p_{x+1,R}`, summing to 1.
pub fn detailed_balance_weights(model: &PathCrwModel) -> Result<Vec<f64>, SpectralError> {
    let coins = model.coins();
    let w = running_products(coins.windows(2).map(|c| (1.0 - c[0].p_left) / c[1].p_right))?;
    let total: f64 = w.iter().sum();
    if !total.is_finite() {
        return Err(JacobiError::Overflow { vertex: model.n() }.into());
    }
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Eigenvalue 1 with `u0 = sum_x v0(x) |x> (x) w1_x`, entries summing to 1.
pub fn stationary_pair(model: &PathCrwModel) -> Result<EigenVectorU, SpectralError> {
    let v0 = detailed_balance_weights(model)?;
    let gap = 1.0 - model.nu2();
    let mut u = StateVector::zeros(model.vertices());
    for (x, (coin, w)) in model.coins().iter().zip(&v0).enumerate() {
        u[2 * x] = w * coin.p_right / gap;
        u[2 * x + 1] = w * (1.0 - coin.p_left) / gap;
    }
    let residual = apply_coin(model, &u)?
        .max_abs_diff(&u)
        .max(apply_shift(model, &u)?.max_abs_diff(&u));
    if residual > STRUCTURAL_TOL {
        return Err(SpectralError::StationaryCheck { residual });
    }
    Ok(EigenVectorU {
        mu: 1.0,
        u,
        tag: PairTag::Stationary,
        source_index: 0,
    })
}

/// Column-stochastic birth-and-death matrix whose stationary vector is `v0`.
pub fn build_q(model: &PathCrwModel) -> DMatrix<f64> {
    let m = model.vertices();
    let n = model.n();
    let gap = 1.0 - model.nu2();
    let mut q = DMatrix::zeros(m, m);
    for (x, coin) in model.coins().iter().enumerate() {
        let down = coin.p_right / gap;
        let up = (1.0 - coin.p_left) / gap;
        if x == 0 {
            q[(0, 0)] += down;
        } else {
            q[(x - 1, x)] += down;
        }
        if x == n {
            q[(n, n)] += up;
        } else {
            q[(x + 1, x)] += up;
        }
    }
    q
}

/// Eigenvalue `nu2` with the alternating vector built from `lambda = -1`.
pub fn alternating_pair(model: &PathCrwModel) -> EigenVectorU {
    let m = model.vertices();
    let scale = FRAC_1_SQRT_2 / (m as f64).sqrt();
    let mut u = StateVector::zeros(m);
    for x in 0..m {
        let sign = if x % 2 == 0 { 1.0 } else { -1.0 };
        u[2 * x] = sign * scale;
        u[2 * x + 1] = -sign * scale;
    }
    EigenVectorU {
        mu: model.nu2(),
        u,
        tag: PairTag::Alternating,
        source_index: m,
    }
}

/// `max(||U a - nu2 b||, ||U b - a - (1 - nu2) lambda b||)`.
pub fn ab_relation_residual(model: &PathCrwModel, ab: &ABPair) -> Result<f64, SpectralError> {
    let nu2 = model.nu2();
    let ua = apply_u(model, &ab.a)?;
    let ub = apply_u(model, &ab.b)?;
    let r1 = ua.max_abs_diff(&ab.b.scaled(nu2));
    let r2 = ub.max_abs_diff(&ab.a.axpy((1.0 - nu2) * ab.lambda, &ab.b));
    Ok(r1.max(r2))
}

/// The `2n` eigenpairs `u = a + mu b` from the eigenvalues `lambda_m != -1` of `B`.
pub fn pairs_from_b(
    model: &PathCrwModel,
    eig_b: &[EigenPairB],
) -> Result<Vec<EigenVectorU>, SpectralError> {
    build_pairs_from_b(model, eig_b, true)
}

fn build_pairs_from_b(
    model: &PathCrwModel,
    eig_b: &[EigenPairB],
    check_relations: bool,
) -> Result<Vec<EigenVectorU>, SpectralError> {
    let nu2 = model.nu2();
    let mut out = Vec::with_capacity(2 * model.n());
    for (idx, eig) in eig_b.iter().enumerate() {
        let ab = make_ab(model, eig)?;
        if check_relations {
            if check_linear_dependence(&ab)? {
                continue;
            }
            let residual = ab_relation_residual(model, &ab)?;
            if residual > RELATION_TOL {
                return Err(SpectralError::RelationViolated {
                    lambda: eig.lambda,
                    residual,
                });
            }
        } else if (eig.lambda + 1.0).abs() <= MINUS_ONE_TOL {
            continue;
        }
        let (plus, minus) = mu_pair(eig.lambda, nu2)?;
        for (mu, tag) in [(plus, PairTag::Plus), (minus, PairTag::Minus)] {
            let u = ab.a.axpy(mu, &ab.b);
            let norm = u.norm();
            out.push(EigenVectorU {
                mu,
                u: u.scaled(1.0 / norm),
                tag,
                source_index: idx + 1,
            });
        }
    }
    Ok(out)
}

/// Eigenpair of `U` with biorthonormal left row: `q_i . u_j = delta_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPairU {
    pub mu: f64,
    pub tag: PairTag,
    pub source_index: usize,
    pub u: StateVector,
    pub q: Vec<f64>,
}

impl EigenPairU {
    /// Expansion coefficient `q . phi`.
    pub fn coefficient(&self, phi: &StateVector) -> f64 {
        self.q.iter().zip(phi.as_slice()).map(|(a, b)| a * b).sum()
    }
}

/// All `2(n+1)` eigenpairs of `U`, ordered stationary, `+1, -1, ..., +n, -n`, alternating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    pub nu2: f64,
    pub pairs: Vec<EigenPairU>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    /// Eigenvalues in descending order.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut mus: Vec<f64> = self.pairs.iter().map(|p| p.mu).collect();
        mus.sort_by(|a, b| b.total_cmp(a));
        mus
    }

    pub fn stationary(&self) -> &EigenPairU {
        self.pairs
            .iter()
            .find(|p| p.tag == PairTag::Stationary)
            .expect("decomposition always holds a stationary pair")
    }

    /// `sum_m mu_m u_m q_m`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.reconstruct_power(1)
    }

    /// `sum_m mu_m^t u_m q_m`.
    pub fn reconstruct_power(&self, t: u64) -> DMatrix<f64> {
        let dim = self.dim();
        let mut out = DMatrix::zeros(dim, dim);
        for p in &self.pairs {
            let u = DVector::from_column_slice(p.u.as_slice());
            let q = DVector::from_column_slice(&p.q);
            out += (u * q.transpose()) * power(p.mu, t);
        }
        out
    }

    pub fn evolve(&self, phi: &StateVector, t: u64) -> Result<StateVector, SpectralError> {
        if phi.len() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                found: phi.len(),
            }
            .into());
        }
        let mut out = StateVector::zeros(self.dim() / 2);
        for p in &self.pairs {
            let c = power(p.mu, t) * p.coefficient(phi);
            out = out.axpy(c, &p.u);
        }
        Ok(out)
    }
}

fn power(mu: f64, t: u64) -> f64 {
    match i32::try_from(t) {
        Ok(k) => mu.powi(k),
        Err(_) => mu.powf(t as f64),
    }
}

pub fn evolve_spectral(
    decomp: &SpectralDecomposition,
    phi: &StateVector,
    t: u64,
) -> Result<StateVector, SpectralError> {
    decomp.evolve(phi, t)
}

fn require_assumption2(model: &PathCrwModel, eig_b: &[EigenPairB]) -> Result<(), SpectralError> {
    let lambdas: Vec<f64> = eig_b.iter().map(|e| e.lambda).collect();
    let report = check_assumption2(&lambdas, model.nu2());
    if report.passes {
        Ok(())
    } else {
        Err(SpectralError::AssumptionViolated(report))
    }
}

pub fn full_decomposition(model: &PathCrwModel) -> Result<SpectralDecomposition, SpectralError> {
    let eig_b = jacobi::eigs_b(model)?;
    decomposition_from_eigs(model, &eig_b)
}

/// Assembles the decomposition from precomputed eigenpairs of `B`.
pub fn decomposition_from_eigs(
    model: &PathCrwModel,
    eig_b: &[EigenPairB],
) -> Result<SpectralDecomposition, SpectralError> {
    require_assumption2(model, eig_b)?;
    assemble(model, eig_b, true)
}

/// Same assembly with the per-pair relation checks disabled, so corrupted
/// inputs reach the reconstruction stage. Test and verification use only.
pub fn decomposition_from_eigs_unchecked(
    model: &PathCrwModel,
    eig_b: &[EigenPairB],
) -> Result<SpectralDecomposition, SpectralError> {
    assemble(model, eig_b, false)
}

fn assemble(
    model: &PathCrwModel,
    eig_b: &[EigenPairB],
    checked: bool,
) -> Result<SpectralDecomposition, SpectralError> {
    let mut right = vec![stationary_pair(model)?];
    right.extend(build_pairs_from_b(model, eig_b, checked)?);
    right.push(alternating_pair(model));
    let dim = model.dim();
    if right.len() != dim {
        return Err(SpectralError::IllConditioned {
            residual: f64::INFINITY,
        });
    }

    let mut mus: Vec<f64> = right.iter().map(|p| p.mu).collect();
    mus.sort_by(|a, b| b.total_cmp(a));
    if let Some(w) = mus.windows(2).find(|w| w[0] - w[1] <= MU_GAP_TOL) {
        return Err(SpectralError::NearDegenerate {
            first: w[0],
            second: w[1],
        });
    }

    let v = DMatrix::from_fn(dim, dim, |i, j| right[j].u[i]);
    let inv = v
        .clone()
        .lu()
        .try_inverse()
        .ok_or(SpectralError::IllConditioned {
            residual: f64::INFINITY,
        })?;
    let residual = (&v * &inv - DMatrix::<f64>::identity(dim, dim)).amax();
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(residual <= INVERSE_TOL) {
        return Err(SpectralError::IllConditioned { residual });
    }

    let pairs = right
        .into_iter()
        .enumerate()
        .map(|(m, r)| EigenPairU {
            mu: r.mu,
            tag: r.tag,
            source_index: r.source_index,
            u: r.u,
            q: inv.row(m).iter().copied().collect(),
        })
        .collect();
    Ok(SpectralDecomposition {
        nu2: model.nu2(),
        pairs,
    })
}

/// Closed-form `p_inf(x) = v0(x)`, without checking the spectral hypotheses.
pub fn limiting_distribution_closed_form(
    model: &PathCrwModel,
) -> Result<Distribution, SpectralError> {
    Ok(Distribution::from_vec(detailed_balance_weights(model)?))
}

/// Limiting vertex distribution; rejects models whose `B` spectrum violates
/// the real-root condition when `nu2 < 0`.
pub fn limiting_distribution(model: &PathCrwModel) -> Result<Distribution, SpectralError> {
    if model.nu2() < 0.0 {
        require_assumption2(model, &jacobi::eigs_b(model)?)?;
    }
    limiting_distribution_closed_form(model)
}

/// Max entrywise deviation of `sum mu u q` from the materialized `U`.
pub fn reconstruction_error(model: &PathCrwModel, decomp: &SpectralDecomposition) -> f64 {
    (dense_u(model) - decomp.reconstruct()).amax()
}

/// Per-vertex `L + R` sum over the whole vector.
pub fn total_mass(u: &StateVector) -> f64 {
    u.as_slice().iter().sum()
}
