//! Invariant suite over one model, plus the random model generator used for
//! sweeps.
//!
//! Every check compares the constructive spectral route against an
//! independently computed quantity (dense `U`, dense `B`, a general
//! eigensolver, repeated application of `U`, or Monte Carlo).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::jacobi::{self, build_b, build_j, build_pi, coin_spectral_data, EigenPairB, W2};
use crate::model::{
    apply_shift, apply_u, dense_u, marginal, marginal_unchecked, CoinParams, Label, PathCrwModel,
    StateVector,
};
use crate::simulate::{self, Initial, SimConfig, WalkerState};
use crate::spectral::{
    self, ab_relation_residual, build_q, check_assumption2, check_linear_dependence,
    detailed_balance_weights, make_ab, PairTag, SpectralDecomposition,
};

/// Draws that fail the real-spectrum condition for `nu2 < 0` before giving up.
pub const DEFAULT_MAX_DRAWS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nu2Sign {
    Positive,
    Negative,
}

/// One unfiltered draw: `nu2` uniform in `±(0.05, 0.95)`, `n` uniform in
/// `1..=n_max`, `p_R` uniform in `(max(0, -nu2) + 0.02, min(1, 1 - nu2) - 0.02)`,
/// and `p_L = nu2 + p_R`.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, n_max: usize, sign: Nu2Sign) -> PathCrwModel {
    let magnitude: f64 = rng.random_range(0.05..0.95);
    let nu2 = match sign {
        Nu2Sign::Positive => magnitude,
        Nu2Sign::Negative => -magnitude,
    };
    let n = rng.random_range(1..=n_max.max(1));
    let lo = (-nu2).max(0.0) + 0.02;
    let hi = (1.0 - nu2).min(1.0) - 0.02;
    let coins = (0..=n)
        .map(|_| {
            let p_right = rng.random_range(lo..hi);
            CoinParams::new(nu2 + p_right, p_right)
        })
        .collect();
    PathCrwModel::from_coins(n, coins).expect("generator produces valid coins")
}

#[derive(Debug, Clone)]
pub struct GeneratedModel {
    pub model: PathCrwModel,
    /// Draws discarded because the spectrum of `B` failed the `nu2 < 0` condition.
    pub rejected: usize,
}

/// Redraws until the model admits a real spectral decomposition.
pub fn random_admissible_model<R: Rng + ?Sized>(
    rng: &mut R,
    n_max: usize,
    sign: Nu2Sign,
    max_draws: usize,
) -> Option<GeneratedModel> {
    for rejected in 0..max_draws {
        let model = random_model(rng, n_max, sign);
        if sign == Nu2Sign::Positive {
            return Some(GeneratedModel { model, rejected });
        }
        let Ok(eig) = jacobi::eigs_b(&model) else {
            continue;
        };
        let lambdas: Vec<f64> = eig.iter().map(|e| e.lambda).collect();
        if check_assumption2(&lambdas, model.nu2()).passes {
            return Some(GeneratedModel { model, rejected });
        }
    }
    log::warn!("no admissible {sign:?} model in {max_draws} draws");
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed deviation, when the check is numeric.
    pub measured: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    fn numeric(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            // NaN fails
            passed: measured <= tolerance,
            measured: Some(measured),
            tolerance: Some(tolerance),
            detail: format!("max deviation {measured:.3e} (tolerance {tolerance:.0e})"),
        }
    }

    fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            measured: None,
            tolerance: None,
            detail: detail.into(),
        }
    }

    fn error(name: &str, err: impl std::fmt::Display) -> Self {
        Self::flag(name, false, format!("error: {err}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloOptions {
    pub walkers: u64,
    pub t: u64,
    pub seed: u64,
    pub tv_tolerance: f64,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            walkers: 100_000,
            t: 100,
            seed: 0x5eed,
            tv_tolerance: 0.015,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub monte_carlo: Option<MonteCarloOptions>,
    /// Multiplies every eigenvalue of `B` other than `-1` by this factor,
    /// keeping the eigenvectors. Negative control: reconstruction must then fail.
    pub corrupt_b_spectrum: Option<f64>,
}

fn max_abs(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().map(f64::abs).fold(0.0, f64::max)
}

/// Oracle eigenvalues of a general real matrix, descending by real part.
/// Returns the largest imaginary magnitude alongside.
pub fn brute_force_eigenvalues(m: &DMatrix<f64>) -> (Vec<f64>, f64) {
    let eig = m.complex_eigenvalues();
    let imag = max_abs(eig.iter().map(|c| c.im));
    let mut re: Vec<f64> = eig.iter().map(|c| c.re).collect();
    re.sort_by(|a, b| b.total_cmp(a));
    (re, imag)
}

/// Runs every check on `model`. Never panics on numerical failure; failures
/// are reported as failed checks.
pub fn run_suite(model: &PathCrwModel, opts: &SuiteOptions) -> Vec<CheckResult> {
    let mut out = Vec::new();
    structural_checks(model, &mut out);
    jacobi_checks(model, &mut out);
    stationary_checks(model, &mut out);

    let eig_b = match eigenpairs_for(model, opts.corrupt_b_spectrum) {
        Ok(e) => e,
        Err(e) => {
            out.push(CheckResult::error("eigs_b", e));
            return out;
        }
    };
    ab_checks(model, &eig_b, &mut out);

    let decomp = if opts.corrupt_b_spectrum.is_some() {
        spectral::decomposition_from_eigs_unchecked(model, &eig_b)
    } else {
        spectral::decomposition_from_eigs(model, &eig_b)
    };
    match decomp {
        Ok(d) => decomposition_checks(model, &d, &eig_b, opts, &mut out),
        Err(e) => out.push(CheckResult::error("full_decomposition", e)),
    }
    out
}

fn eigenpairs_for(
    model: &PathCrwModel,
    corrupt: Option<f64>,
) -> Result<Vec<EigenPairB>, jacobi::JacobiError> {
    let mut eig = jacobi::eigs_b(model)?;
    if let Some(f) = corrupt {
        for e in eig.iter_mut().filter(|e| e.lambda.abs() < 1.0 - 1e-10) {
            e.lambda *= f;
        }
    }
    Ok(eig)
}

fn structural_checks(model: &PathCrwModel, out: &mut Vec<CheckResult>) {
    let dim = model.dim();
    let vertices = model.vertices();
    let basis = |j: usize| {
        let mut e = StateVector::zeros(vertices);
        e[j] = 1.0;
        e
    };

    let involution = (0..dim).all(|j| {
        let e = basis(j);
        let once = apply_shift(model, &e).expect("dim");
        let twice = apply_shift(model, &once).expect("dim");
        twice == e && once.as_slice().iter().filter(|v| **v == 1.0).count() == 1
    });
    out.push(CheckResult::flag(
        "shift_involution",
        involution,
        "S is a permutation with S^2 = I on every basis vector",
    ));

    let u = dense_u(model);
    let col_dev = max_abs((0..dim).map(|j| u.column(j).sum() - 1.0));
    let in_range = u.iter().all(|v| (0.0..=1.0).contains(v));
    let mut c = CheckResult::numeric("u_column_stochastic", col_dev, 1e-12);
    c.passed &= in_range;
    out.push(c);

    let matches = (0..dim).all(|j| {
        let img = apply_u(model, &basis(j)).expect("dim");
        (0..dim).all(|i| img[i] == u[(i, j)])
    });
    out.push(CheckResult::flag(
        "u_matrix_free_matches_dense",
        matches,
        "apply_U(e_j) equals column j of dense U",
    ));

    let probe = StateVector::from_vec((0..dim).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect());
    let moved = apply_u(model, &probe).expect("dim");
    out.push(CheckResult::numeric(
        "u_preserves_sum",
        (moved.sum() - probe.sum()).abs(),
        1e-12,
    ));
}

fn jacobi_checks(model: &PathCrwModel, out: &mut Vec<CheckResult>) {
    let nu2 = model.nu2();
    let n = model.n();
    let data = coin_spectral_data(model.family());

    let mut dev: f64 = 0.0;
    for (d, coin) in data.iter().zip(model.coins()) {
        dev = dev.max((d.q_left - d.q_right - std::f64::consts::SQRT_2).abs());
        let c = coin.matrix();
        let rebuilt = d.reconstruct(nu2);
        for i in 0..2 {
            for j in 0..2 {
                dev = dev.max((c[i][j] - rebuilt[i][j]).abs());
            }
            let cw = c[i][0] * d.w1[0] + c[i][1] * d.w1[1];
            dev = dev.max((cw - d.w1[i]).abs());
        }
        dev = dev.max((d.q_left * W2[0] + d.q_right * W2[1] - 1.0).abs());
        dev = dev.max((d.q_left * d.w1[0] + d.q_right * d.w1[1]).abs());
    }
    out.push(CheckResult::numeric("coin_eigendata", dev, 1e-12));

    let b = build_b(model);
    let rows = b.row_sums();
    out.push(CheckResult::numeric(
        "b_interior_row_sums",
        max_abs(rows[1..n].iter().map(|r| r - 1.0)),
        1e-12,
    ));

    let u = dense_u(model);
    let bd = b.to_dense();
    let entry = |y: usize, x: usize| {
        let q = [data[y].q_left, data[y].q_right];
        let mut acc = 0.0;
        for (jy, qy) in q.iter().enumerate() {
            for (jx, wx) in W2.iter().enumerate() {
                acc += qy * u[(2 * y + jy, 2 * x + jx)] * wx;
            }
        }
        acc
    };
    let mut ip: f64 = 0.0;
    for x in 0..=n {
        if x > 0 {
            ip = ip.max((entry(x - 1, x) + nu2 * bd[(x - 1, x)]).abs());
        }
        if x < n {
            ip = ip.max((entry(x + 1, x) + nu2 * bd[(x + 1, x)]).abs());
        }
    }
    ip = ip.max((entry(0, 0) + nu2 * bd[(0, 0)]).abs());
    ip = ip.max((entry(n, n) + nu2 * bd[(n, n)]).abs());
    out.push(CheckResult::numeric("b_inner_products", ip, 1e-12));

    let pi = match build_pi(&b) {
        Ok(p) => p,
        Err(e) => {
            out.push(CheckResult::error("pi_symmetrization", e));
            return;
        }
    };
    let positive = pi.pi.iter().all(|p| *p > 0.0);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        n + 1,
        pi.pi.iter().map(|p| p.sqrt()),
    ));
    let d_inv = DMatrix::from_diagonal(&DVector::from_iterator(
        n + 1,
        pi.pi.iter().map(|p| 1.0 / p.sqrt()),
    ));
    let conj = &d_inv * &bd * &d;
    let j = build_j(&b, &pi);
    let sym = (&conj - conj.transpose()).amax();
    let vs_j = (&conj - j.to_dense()).amax();
    let mut c = CheckResult::numeric("pi_symmetrization", sym.max(vs_j), 1e-12);
    c.passed &= positive;
    out.push(c);

    let (spec_b, imag) = brute_force_eigenvalues(&bd);
    match crate::tridiag::eigenvalues_bisection(&j.diag, &j.offdiag) {
        Ok(mut spec_j) => {
            spec_j.reverse();
            let dev = max_abs(spec_b.iter().zip(&spec_j).map(|(a, b)| a - b)).max(imag);
            out.push(CheckResult::numeric("isospectral_b_j", dev, 1e-9));
        }
        Err(e) => out.push(CheckResult::error("isospectral_b_j", e)),
    }

    let alt: Vec<f64> = (0..=n)
        .map(|x| if x % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    out.push(CheckResult::numeric(
        "b_alternating_eigenvector",
        max_abs(b.mul_vec(&alt).iter().zip(&alt).map(|(bv, a)| bv + a)),
        1e-12,
    ));
}

fn stationary_checks(model: &PathCrwModel, out: &mut Vec<CheckResult>) {
    let v0 = match detailed_balance_weights(model) {
        Ok(v) => v,
        Err(e) => {
            out.push(CheckResult::error("detailed_balance", e));
            return;
        }
    };
    let coins = model.coins();
    let db = max_abs(
        (0..model.n()).map(|x| v0[x] * (1.0 - coins[x].p_left) - v0[x + 1] * coins[x + 1].p_right),
    );
    out.push(CheckResult::numeric("detailed_balance", db, 1e-12));

    let q = build_q(model);
    let cols = max_abs((0..model.vertices()).map(|j| q.column(j).sum() - 1.0));
    out.push(CheckResult::numeric("q_column_stochastic", cols, 1e-12));
    let v = DVector::from_column_slice(&v0);
    out.push(CheckResult::numeric(
        "q_stationary_vector",
        (&q * &v - &v).amax(),
        1e-12,
    ));

    match spectral::stationary_pair(model) {
        Ok(s) => {
            let u = dense_u(model);
            let uv = DVector::from_column_slice(s.u.as_slice());
            let res = (&u * &uv - &uv).amax().max((s.u.sum() - 1.0).abs());
            out.push(CheckResult::numeric("stationary_eigenvector", res, 1e-12));
            let closed = spectral::limiting_distribution_closed_form(model).expect("weights ok");
            out.push(CheckResult::numeric(
                "limit_equals_stationary_marginal",
                closed.max_abs_diff(&marginal_unchecked(&s.u)),
                1e-12,
            ));
        }
        Err(e) => out.push(CheckResult::error("stationary_eigenvector", e)),
    }
}

fn ab_checks(model: &PathCrwModel, eig_b: &[EigenPairB], out: &mut Vec<CheckResult>) {
    let n = model.n();
    let bd = build_b(model).to_dense();
    let bound = jacobi::B_RESIDUAL_TOL * (n + 1) as f64;

    let residual = max_abs(eig_b.iter().flat_map(|e| {
        let v = DVector::from_column_slice(&e.v);
        (&bd * &v - &v * e.lambda)
            .iter()
            .copied()
            .collect::<Vec<_>>()
    }));
    out.push(CheckResult::numeric("b_eigen_residuals", residual, bound));

    let descending = eig_b.windows(2).all(|w| w[0].lambda - w[1].lambda > 1e-10);
    let in_range = eig_b.iter().all(|e| e.lambda.abs() <= 1.0 + 1e-10);
    out.push(CheckResult::flag(
        "b_simple_spectrum",
        eig_b.len() == n + 1 && descending && in_range,
        format!(
            "{} eigenvalues, gaps > 1e-10: {descending}, within [-1, 1]: {in_range}",
            eig_b.len()
        ),
    ));

    let last = eig_b.last().map(|e| e.lambda).unwrap_or(f64::NAN);
    out.push(CheckResult::numeric(
        "b_min_eigenvalue_minus_one",
        (last + 1.0).abs(),
        1e-10,
    ));

    let lambdas: Vec<f64> = eig_b.iter().map(|e| e.lambda).collect();
    let report = check_assumption2(&lambdas, model.nu2());
    out.push(CheckResult::flag(
        "real_spectrum_condition",
        report.passes,
        report.to_string(),
    ));

    let mut dichotomy = true;
    let mut worst_gap: f64 = f64::INFINITY;
    let mut relation: f64 = 0.0;
    for e in eig_b {
        let ab = match make_ab(model, e) {
            Ok(ab) => ab,
            Err(err) => {
                out.push(CheckResult::error("lemma2_dichotomy", err));
                return;
            }
        };
        let inner = ab.inner().abs();
        let is_minus_one = (e.lambda + 1.0).abs() <= 1e-10;
        if is_minus_one {
            dichotomy &= inner >= 1.0 - 1e-10;
        } else {
            dichotomy &= inner < 1.0 - 1e-6;
            worst_gap = worst_gap.min(1.0 - inner);
        }
        dichotomy &= check_linear_dependence(&ab).is_ok();
        relation = relation.max(ab_relation_residual(model, &ab).unwrap_or(f64::INFINITY));
    }
    out.push(CheckResult::flag(
        "lemma2_dichotomy",
        dichotomy,
        format!("min 1 - |<a,b>| over lambda != -1: {worst_gap:.3e}"),
    ));
    out.push(CheckResult::numeric("ab_relation", relation, 1e-10));
}

fn decomposition_checks(
    model: &PathCrwModel,
    d: &SpectralDecomposition,
    eig_b: &[EigenPairB],
    opts: &SuiteOptions,
    out: &mut Vec<CheckResult>,
) {
    let nu2 = model.nu2();
    let dim = model.dim();
    let u = dense_u(model);

    let counts = |tag| d.pairs.iter().filter(|p| p.tag == tag).count();
    let n = model.n();
    out.push(CheckResult::flag(
        "pair_census",
        d.pairs.len() == dim
            && counts(PairTag::Stationary) == 1
            && counts(PairTag::Alternating) == 1
            && counts(PairTag::Plus) == n
            && counts(PairTag::Minus) == n,
        format!("{} pairs", d.pairs.len()),
    ));

    let mut quad: f64 = 0.0;
    let mut vieta: f64 = 0.0;
    let mut min_to_minus_one = f64::INFINITY;
    for e in eig_b.iter().filter(|e| (e.lambda + 1.0).abs() > 1e-10) {
        let s = (1.0 - nu2) * e.lambda;
        match spectral::mu_pair(e.lambda, nu2) {
            Ok((p, m)) => {
                for mu in [p, m] {
                    quad = quad.max((mu * mu - s * mu - nu2).abs());
                    min_to_minus_one = min_to_minus_one.min((mu + 1.0).abs());
                }
                vieta = vieta.max((p + m - s).abs()).max((p * m + nu2).abs());
            }
            Err(_) => quad = f64::INFINITY,
        }
    }
    out.push(CheckResult::numeric("quadratic_identity", quad, 1e-12));
    out.push(CheckResult::numeric(
        "root_coefficient_relations",
        vieta,
        1e-12,
    ));
    out.push(CheckResult::flag(
        "mu_not_minus_one",
        min_to_minus_one > 1e-10,
        format!("min |mu + 1| = {min_to_minus_one:.3e}"),
    ));

    if nu2 > 0.0 {
        let seq = |tag| -> Vec<f64> {
            let mut v: Vec<_> = d.pairs.iter().filter(|p| p.tag == tag).collect();
            v.sort_by_key(|p| p.source_index);
            v.iter().map(|p| p.mu).collect()
        };
        let decreasing = |v: Vec<f64>| v.windows(2).all(|w| w[0] > w[1]);
        out.push(CheckResult::flag(
            "mu_monotone_in_lambda",
            decreasing(seq(PairTag::Plus)) && decreasing(seq(PairTag::Minus)),
            "mu_+ and mu_- strictly decrease along descending lambda",
        ));
    }

    let spec = d.spectrum();
    let min_gap = spec
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min);
    let ones = spec.iter().filter(|m| (**m - 1.0).abs() <= 1e-10).count();
    out.push(CheckResult::flag(
        "u_simple_spectrum",
        min_gap > 1e-10 && ones == 1 && spec.iter().all(|m| m.abs() <= 1.0 + 1e-12),
        format!("min gap {min_gap:.3e}, mu = 1 attained {ones} time(s)"),
    ));

    let annihilation = max_abs(
        d.pairs
            .iter()
            .filter(|p| p.tag != PairTag::Stationary)
            .map(|p| p.u.sum()),
    );
    let mut c = CheckResult::numeric("non_stationary_mass_zero", annihilation, 1e-10);
    c.passed &= (d.stationary().u.sum() - 1.0).abs() <= 1e-12;
    out.push(c);

    let mut right: f64 = 0.0;
    let mut left: f64 = 0.0;
    for p in &d.pairs {
        let uv = DVector::from_column_slice(p.u.as_slice());
        let qv = DVector::from_column_slice(&p.q);
        right = right.max((&u * &uv - &uv * p.mu).amax());
        left = left.max((u.transpose() * &qv - &qv * p.mu).amax());
    }
    out.push(CheckResult::numeric(
        "u_eigen_residuals",
        right.max(left),
        1e-8,
    ));

    let bi = max_abs(d.pairs.iter().enumerate().flat_map(|(i, pi)| {
        d.pairs.iter().enumerate().map(move |(j, pj)| {
            let dot: f64 = pi.q.iter().zip(pj.u.as_slice()).map(|(a, b)| a * b).sum();
            dot - if i == j { 1.0 } else { 0.0 }
        })
    }));
    out.push(CheckResult::numeric("biorthogonality", bi, 1e-8));

    out.push(CheckResult::numeric(
        "reconstruction",
        spectral::reconstruction_error(model, d),
        1e-8,
    ));

    let (oracle, imag) = brute_force_eigenvalues(&u);
    let dev = max_abs(spec.iter().zip(&oracle).map(|(a, b)| a - b)).max(imag);
    out.push(CheckResult::numeric("oracle_spectrum", dev, 1e-8));

    let starts = [
        StateVector::basis(model.vertices(), 0, Label::L),
        StateVector::basis(model.vertices(), n, Label::R),
    ];
    let mut evo: f64 = 0.0;
    for phi in &starts {
        for t in [0u64, 1, 50, 1000] {
            let spectral = d.evolve(phi, t);
            let dense = simulate::evolve_dense(model, phi, t);
            evo = match (spectral, dense) {
                (Ok(a), Ok(b)) => evo.max(a.max_abs_diff(&b)),
                _ => f64::INFINITY,
            };
        }
    }
    out.push(CheckResult::numeric(
        "spectral_vs_dense_evolution",
        evo,
        1e-8,
    ));

    let coefficient = max_abs(
        starts
            .iter()
            .map(|phi| d.stationary().coefficient(phi) - 1.0),
    );
    out.push(CheckResult::numeric(
        "stationary_coefficient_one",
        coefficient,
        1e-10,
    ));

    match spectral::limiting_distribution(model) {
        Ok(limit) => {
            let mut worst: f64 = 0.0;
            for phi in &starts {
                let late = d
                    .evolve(phi, 1_000_000)
                    .map_err(|e| e.to_string())
                    .and_then(|s| marginal(&s).map_err(|e| e.to_string()));
                worst = match late {
                    Ok(m) => worst.max(m.max_abs_diff(&limit)),
                    Err(_) => f64::INFINITY,
                };
            }
            out.push(CheckResult::numeric(
                "limit_from_spectral_evolution",
                worst,
                1e-9,
            ));
        }
        Err(e) => out.push(CheckResult::error("limit_from_spectral_evolution", e)),
    }

    if let Some(mc) = opts.monte_carlo {
        let cfg = SimConfig {
            walkers: mc.walkers,
            t: mc.t,
            seed: mc.seed,
            initial: Initial::Site(WalkerState::new(0, Label::L)),
        };
        let exact = simulate::evolve_dense(model, &starts[0], mc.t).map(|s| marginal_unchecked(&s));
        let spectral_m = d.evolve(&starts[0], mc.t).map(|s| marginal_unchecked(&s));
        match (
            simulate::empirical_distribution(model, &cfg),
            exact,
            spectral_m,
        ) {
            (Ok(emp), Ok(exact), Ok(spec_m)) => {
                let mut c = CheckResult::numeric(
                    "monte_carlo_agreement",
                    emp.tv_distance(&exact),
                    mc.tv_tolerance,
                );
                c.passed &= spec_m.max_abs_diff(&exact) <= 1e-8;
                c.detail = format!(
                    "TV(empirical, dense) = {:.4} at t = {} with {} walkers; |spectral - dense| = {:.1e}",
                    emp.tv_distance(&exact),
                    mc.t,
                    mc.walkers,
                    spec_m.max_abs_diff(&exact)
                );
                out.push(c);
            }
            _ => out.push(CheckResult::flag(
                "monte_carlo_agreement",
                false,
                "simulation or evolution failed",
            )),
        }
    }
}
