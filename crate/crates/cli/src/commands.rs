use std::fmt::Write as _;
use std::str::FromStr;

use crw_core::jacobi::{build_b, build_j, build_pi, eigs_b};
use crw_core::model::marginal_unchecked;
use crw_core::simulate::{
    self, empirical_distribution, power_iteration, walker_rng, Initial, SimConfig, WalkerState,
};
use crw_core::spectral::{check_assumption2, decomposition_from_eigs, PairTag};
use crw_core::verify::{
    random_admissible_model, run_suite, CheckResult, MonteCarloOptions, Nu2Sign, SuiteOptions,
};
use crw_core::{full_decomposition, limiting_distribution, Label, PathCrwModel, StateVector};
use nalgebra::DMatrix;
use serde_json::json;

use crate::error::CliError;
use crate::report::{fmt_g, fmt_vec, RunReport};

/// Rendered forms of one command's result; `main` picks one.
pub struct Output {
    pub report: RunReport,
    pub text: String,
    pub csv: Option<String>,
}

/// `x,J` with `J` one of `L`, `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitArg(pub WalkerState);

impl FromStr for InitArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (x, j) = s
            .split_once(',')
            .ok_or_else(|| format!("expected `x,J` (e.g. `0,L`), got `{s}`"))?;
        let x = x
            .trim()
            .parse()
            .map_err(|e| format!("bad vertex `{x}`: {e}"))?;
        let label = match j.trim() {
            "L" | "l" => Label::L,
            "R" | "r" => Label::R,
            other => return Err(format!("label must be L or R, got `{other}`")),
        };
        Ok(InitArg(WalkerState::new(x, label)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Spectral,
    Dense,
    Both,
}

fn initial_state(model: &PathCrwModel, init: InitArg) -> Result<StateVector, CliError> {
    let WalkerState { x, label } = init.0;
    if x > model.n() {
        return Err(CliError::Validation(format!(
            "initial vertex {x} is outside 0..={}",
            model.n()
        )));
    }
    Ok(StateVector::basis(model.vertices(), x, label))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn write_matrix(text: &mut String, name: &str, m: &DMatrix<f64>) {
    writeln!(text, "{name} =").unwrap();
    for r in rows(m) {
        writeln!(text, "  {}", fmt_vec(&r)).unwrap();
    }
}

fn write_distribution(text: &mut String, header: &str, p: &[f64]) {
    writeln!(text, "{header}").unwrap();
    for (x, v) in p.iter().enumerate() {
        writeln!(text, "  {x}\t{}", fmt_g(*v)).unwrap();
    }
}

pub fn validate(model: &PathCrwModel) -> Output {
    let mut text = format!("valid: n = {}, nu2 = {}\n", model.n(), fmt_g(model.nu2()));
    for (x, c) in model.coins().iter().enumerate() {
        writeln!(
            text,
            "  vertex {x}: p_L = {}, p_R = {}",
            fmt_g(c.p_left),
            fmt_g(c.p_right)
        )
        .unwrap();
    }
    let results = json!({ "n": model.n(), "nu2": model.nu2(), "coins": model.coins() });
    Output {
        report: RunReport::new("validate", Some(model), results),
        text,
        csv: None,
    }
}

pub fn spectrum(model: &PathCrwModel, dump_b: bool, dump_j: bool) -> Result<Output, CliError> {
    let eig = eigs_b(model)?;
    let lambdas: Vec<f64> = eig.iter().map(|e| e.lambda).collect();
    let a2 = check_assumption2(&lambdas, model.nu2());
    log::info!("Spec(B) = {lambdas:?}; {a2}");
    if !a2.passes {
        return Err(CliError::Assumption(a2));
    }
    let decomp = decomposition_from_eigs(model, &eig)?;

    let mut pairs: Vec<_> = decomp.pairs.iter().collect();
    pairs.sort_by(|a, b| b.mu.total_cmp(&a.mu));
    let source_lambda = |tag: PairTag, m: usize| match tag {
        PairTag::Plus | PairTag::Minus => Some(lambdas[m - 1]),
        _ => None,
    };
    let spec_u: Vec<_> = pairs
        .iter()
        .map(|p| {
            json!({
                "mu": p.mu,
                "tag": p.tag,
                "source_index": p.source_index,
                "lambda": source_lambda(p.tag, p.source_index),
            })
        })
        .collect();

    let mut text = format!("Spec(B) = {}\n", fmt_vec(&lambdas));
    writeln!(text, "assumption: {a2}").unwrap();
    writeln!(text, "Spec(U):").unwrap();
    for p in &pairs {
        let lam = source_lambda(p.tag, p.source_index)
            .map(|l| format!("  (lambda = {})", fmt_g(l)))
            .unwrap_or_default();
        writeln!(text, "  {:>22}  {}{lam}", fmt_g(p.mu), p.tag).unwrap();
    }

    let mut results = json!({
        "spec_b": lambdas,
        "assumption": a2,
        "spec_u": spec_u,
    });
    if dump_b || dump_j {
        let b = build_b(model);
        let pi = build_pi(&b)?;
        if dump_b {
            let bd = b.to_dense();
            write_matrix(&mut text, "B", &bd);
            results["b"] = json!(rows(&bd));
        }
        if dump_j {
            let jd = build_j(&b, &pi).to_dense();
            writeln!(text, "pi = {}", fmt_vec(&pi.pi)).unwrap();
            write_matrix(&mut text, "J", &jd);
            results["pi"] = json!(pi.pi);
            results["j"] = json!(rows(&jd));
        }
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "mu", "tag", "source_index", "lambda"])?;
    for (rank, p) in pairs.iter().enumerate() {
        let lam = source_lambda(p.tag, p.source_index)
            .map(fmt_g)
            .unwrap_or_default();
        w.write_record([
            rank.to_string(),
            fmt_g(p.mu),
            p.tag.to_string(),
            p.source_index.to_string(),
            lam,
        ])?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| CliError::Parse(e.to_string()))?)
        .expect("utf8");

    Ok(Output {
        report: RunReport::new("spectrum", Some(model), results),
        text,
        csv: Some(csv),
    })
}

pub fn limit(model: &PathCrwModel) -> Result<Output, CliError> {
    let closed = limiting_distribution(model)?;
    let start = StateVector::basis(model.vertices(), 0, Label::L);
    let power = power_iteration(model, &start, 1e-15, 10_000_000)?;
    if !power.converged {
        log::warn!(
            "power iteration did not settle within {} steps",
            power.iterations
        );
    }
    let diff = closed.max_abs_diff(&power.distribution);

    let mut text = String::new();
    write_distribution(&mut text, "p_inf (closed form):", closed.probs());
    write_distribution(
        &mut text,
        &format!(
            "power iteration ({} steps, converged: {}):",
            power.iterations, power.converged
        ),
        power.distribution.probs(),
    );
    writeln!(text, "max |difference| = {}", fmt_g(diff)).unwrap();

    let results = json!({
        "p_inf": closed.probs(),
        "power_iteration": power,
        "max_abs_diff": diff,
    });
    Ok(Output {
        report: RunReport::new("limit", Some(model), results),
        text,
        csv: None,
    })
}

pub fn evolve(
    model: &PathCrwModel,
    t: u64,
    init: InitArg,
    method: Method,
) -> Result<Output, CliError> {
    let phi = initial_state(model, init)?;
    let spectral = match method {
        Method::Spectral | Method::Both => {
            let d = full_decomposition(model)?;
            Some(marginal_unchecked(&d.evolve(&phi, t)?))
        }
        Method::Dense => None,
    };
    let dense = match method {
        Method::Dense | Method::Both => {
            Some(marginal_unchecked(&simulate::evolve_dense(model, &phi, t)?))
        }
        Method::Spectral => None,
    };

    let mut text = String::new();
    let mut results = json!({ "t": t, "init": { "x": init.0.x, "label": init.0.label } });
    if let Some(s) = &spectral {
        write_distribution(
            &mut text,
            &format!("spectral marginal at t = {t}:"),
            s.probs(),
        );
        results["spectral"] = json!(s.probs());
    }
    if let Some(d) = &dense {
        write_distribution(&mut text, &format!("dense marginal at t = {t}:"), d.probs());
        results["dense"] = json!(d.probs());
    }
    if let (Some(s), Some(d)) = (&spectral, &dense) {
        let dev = s.max_abs_diff(d);
        writeln!(text, "max |spectral - dense| = {}", fmt_g(dev)).unwrap();
        results["max_abs_diff"] = json!(dev);
    }
    Ok(Output {
        report: RunReport::new("evolve", Some(model), results),
        text,
        csv: None,
    })
}

pub fn simulate(
    model: &PathCrwModel,
    walkers: u64,
    t: u64,
    seed: u64,
    init: InitArg,
) -> Result<Output, CliError> {
    let phi = initial_state(model, init)?;
    let cfg = SimConfig {
        walkers,
        t,
        seed,
        initial: Initial::Site(init.0),
    };
    let empirical = empirical_distribution(model, &cfg)?;
    let exact = marginal_unchecked(&simulate::evolve_dense(model, &phi, t)?);
    let tv = empirical.tv_distance(&exact);

    let mut text = format!("{walkers} walkers, t = {t}, seed = {seed}\n  x\tempirical\texact\n");
    for (x, (e, p)) in empirical.probs().iter().zip(exact.probs()).enumerate() {
        writeln!(text, "  {x}\t{}\t{}", fmt_g(*e), fmt_g(*p)).unwrap();
    }
    writeln!(text, "TV(empirical, exact) = {}", fmt_g(tv)).unwrap();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "empirical", "exact"])?;
    for (x, (e, p)) in empirical.probs().iter().zip(exact.probs()).enumerate() {
        w.write_record([x.to_string(), fmt_g(*e), fmt_g(*p)])?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| CliError::Parse(e.to_string()))?)
        .expect("utf8");

    let results = json!({
        "walkers": walkers,
        "t": t,
        "seed": seed,
        "empirical": empirical.probs(),
        "exact": exact.probs(),
        "tv_distance": tv,
    });
    Ok(Output {
        report: RunReport::new("simulate", Some(model), results),
        text,
        csv: Some(csv),
    })
}

pub struct VerifyOptions {
    pub seed: u64,
    pub max_draws: usize,
    pub monte_carlo: bool,
    pub corrupt_b_spectrum: Option<f64>,
}

impl VerifyOptions {
    fn suite(&self, seed: u64) -> SuiteOptions {
        SuiteOptions {
            monte_carlo: self.monte_carlo.then(|| MonteCarloOptions {
                seed,
                ..Default::default()
            }),
            corrupt_b_spectrum: self.corrupt_b_spectrum,
        }
    }
}

pub fn verify_model(model: &PathCrwModel, opts: &VerifyOptions) -> Result<Output, CliError> {
    // a model outside the real-spectrum regime is rejected, not checked
    let lambdas: Vec<f64> = eigs_b(model)?.iter().map(|e| e.lambda).collect();
    let a2 = check_assumption2(&lambdas, model.nu2());
    if !a2.passes {
        return Err(CliError::Assumption(a2));
    }
    let checks = run_suite(model, &opts.suite(opts.seed));
    let mut text = String::new();
    write_checks(&mut text, &checks);
    let report = RunReport::new("verify", Some(model), json!({ "models": 1 })).with_checks(checks);
    summary_line(&mut text, &report);
    Ok(Output {
        report,
        text,
        csv: None,
    })
}

pub fn verify_random(n_max: usize, count: usize, opts: &VerifyOptions) -> Output {
    let mut per_model = Vec::new();
    let mut all: Vec<Vec<CheckResult>> = Vec::new();
    let mut skipped = 0usize;
    let mut rejected = 0usize;
    for (stream, sign) in [Nu2Sign::Positive, Nu2Sign::Negative]
        .into_iter()
        .enumerate()
    {
        let mut rng = walker_rng(opts.seed, stream as u64);
        for k in 0..count {
            let Some(g) = random_admissible_model(&mut rng, n_max, sign, opts.max_draws) else {
                skipped += 1;
                continue;
            };
            rejected += g.rejected;
            let checks = run_suite(&g.model, &opts.suite(opts.seed.wrapping_add(k as u64)));
            let failed: Vec<&str> = checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.as_str())
                .collect();
            log::info!(
                "{sign:?} model {k}: n = {}, nu2 = {}, {} failed",
                g.model.n(),
                g.model.nu2(),
                failed.len()
            );
            per_model.push(json!({
                "sign": sign,
                "index": k,
                "digest": crate::report::ModelDigest::of(&g.model),
                "coins": g.model.coins(),
                "rejected_draws": g.rejected,
                "passed": failed.is_empty(),
                "failed": failed,
            }));
            all.push(checks);
        }
    }

    let checks = aggregate(&all);
    let mut text = format!(
        "{} models checked ({count} per sign, n <= {n_max}, seed {}); {rejected} draws rejected for the nu2 < 0 condition; {skipped} models skipped\n",
        all.len(),
        opts.seed
    );
    write_checks(&mut text, &checks);
    let results = json!({
        "n_max": n_max,
        "count_per_sign": count,
        "seed": opts.seed,
        "rejected_draws": rejected,
        "skipped_models": skipped,
        "models": per_model,
    });
    let report = RunReport::new("verify", None, results).with_checks(checks);
    summary_line(&mut text, &report);
    Output {
        report,
        text,
        csv: None,
    }
}

/// One line per check name: passes only if it passed on every model.
fn aggregate(per_model: &[Vec<CheckResult>]) -> Vec<CheckResult> {
    let mut out: Vec<CheckResult> = Vec::new();
    let mut fails: Vec<usize> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for checks in per_model {
        for c in checks {
            let i = match out.iter().position(|o| o.name == c.name) {
                Some(i) => i,
                None => {
                    out.push(CheckResult {
                        passed: true,
                        measured: None,
                        ..c.clone()
                    });
                    fails.push(0);
                    seen.push(0);
                    out.len() - 1
                }
            };
            seen[i] += 1;
            if !c.passed {
                fails[i] += 1;
                out[i].passed = false;
            }
            if let Some(m) = c.measured {
                let worst = out[i]
                    .measured
                    .map_or(m, |w| if m.is_nan() { m } else { w.max(m) });
                out[i].measured = Some(worst);
            }
        }
    }
    for (i, c) in out.iter_mut().enumerate() {
        let worst = c
            .measured
            .map(|m| {
                format!(
                    "; worst {:.3e} (tolerance {:.0e})",
                    m,
                    c.tolerance.unwrap_or(f64::NAN)
                )
            })
            .unwrap_or_default();
        c.detail = format!("failed on {} of {} models{worst}", fails[i], seen[i]);
    }
    out
}

fn write_checks(text: &mut String, checks: &[CheckResult]) {
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        writeln!(text, "  {status}  {:<34} {}", c.name, c.detail).unwrap();
    }
}

fn summary_line(text: &mut String, report: &RunReport) {
    let failed = report.failed_checks();
    if failed.is_empty() {
        writeln!(text, "all {} checks passed", report.checks.len()).unwrap();
    } else {
        writeln!(text, "FAILED: {}", failed.join(", ")).unwrap();
    }
}
