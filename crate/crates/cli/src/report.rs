use std::time::Duration;

use crw_core::verify::CheckResult;
use crw_core::PathCrwModel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use crw_core::format::fmt_g;

/// Identifies a model without embedding it: size, shared `nu2` and a hash of
/// the exact coin bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDigest {
    pub n: usize,
    pub nu2: f64,
    pub coins_sha256: String,
}

impl ModelDigest {
    pub fn of(model: &PathCrwModel) -> Self {
        let mut h = Sha256::new();
        for c in model.coins() {
            h.update(c.p_left.to_bits().to_le_bytes());
            h.update(c.p_right.to_bits().to_le_bytes());
        }
        let coins_sha256 = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Self {
            n: model.n(),
            nu2: model.nu2(),
            coins_sha256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub model: Option<ModelDigest>,
    pub results: serde_json::Value,
    #[serde(default)]
    pub checks: Vec<CheckResult>,
    /// `None` for commands that do not verify anything.
    pub passed: Option<bool>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(command: &str, model: Option<&PathCrwModel>, results: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            model: model.map(ModelDigest::of),
            results,
            checks: Vec::new(),
            passed: None,
            wall_time_s: 0.0,
        }
    }

    pub fn with_checks(mut self, checks: Vec<CheckResult>) -> Self {
        self.passed = Some(checks.iter().all(|c| c.passed));
        self.checks = checks;
        self
    }

    pub fn timed(mut self, elapsed: Duration) -> Self {
        self.wall_time_s = elapsed.as_secs_f64();
        self
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

pub fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_g(*x)).collect();
    format!("[{}]", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crw_core::CoinParams;

    #[test]
    fn digest_tracks_coin_bits() {
        let a = PathCrwModel::homogeneous(2, CoinParams::new(0.7, 0.2)).unwrap();
        let b = PathCrwModel::homogeneous(2, CoinParams::new(0.7, 0.2)).unwrap();
        let c = PathCrwModel::new(2, &[(0.7, 0.2), (0.7, 0.2), (0.6, 0.1)]).unwrap();
        assert_eq!(ModelDigest::of(&a), ModelDigest::of(&b));
        assert_ne!(
            ModelDigest::of(&a).coins_sha256,
            ModelDigest::of(&c).coins_sha256
        );
        assert_eq!(ModelDigest::of(&a).coins_sha256.len(), 64);
    }

    #[test]
    fn report_round_trips() {
        let m = PathCrwModel::homogeneous(1, CoinParams::new(0.7, 0.2)).unwrap();
        let r = RunReport::new(
            "limit",
            Some(&m),
            serde_json::json!({ "p_inf": [0.4, 0.6000000000000001], "x": 1.0 / 3.0 }),
        )
        .with_checks(crw_core::verify::run_suite(&m, &Default::default()))
        .timed(Duration::from_millis(1234));
        let text = serde_json::to_string(&r).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.passed, Some(true));
    }
}
