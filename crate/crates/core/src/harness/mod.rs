//! Randomized property checks with machine-readable reports.

mod checks;
mod registry;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use registry::{registry, traceability_table, CheckInfo, DEFAULT_SEED};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSpec {
    pub check_id: String,
    pub trials: usize,
    /// Subsystem dimensions; trial `i` uses entry `i mod len`.
    pub dims: Vec<Vec<usize>>,
    pub epsilons: Vec<f64>,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub tolerance: f64,
    /// Debug switch: swaps the two sides of every inequality.
    #[serde(default)]
    pub negate: bool,
}

impl CheckSpec {
    /// Registered defaults for `check_id`.
    pub fn default_for(check_id: &str) -> Result<Self> {
        registry::lookup(check_id).map(|c| c.default_spec())
    }

    fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.iter().any(|d| d.is_empty() || d.contains(&0)) {
            return Err(Error::Format(format!(
                "{}: dims must be nonempty lists of positive sizes",
                self.check_id
            )));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Format(format!(
                "{}: tolerance must be nonnegative",
                self.check_id
            )));
        }
        Ok(())
    }
}

/// Fields of a suite config entry; missing ones fall back to the registry default.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckOverrides {
    pub trials: Option<usize>,
    pub dims: Option<Vec<Vec<usize>>>,
    pub epsilons: Option<Vec<f64>>,
    pub alphas: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub negate: Option<bool>,
}

impl CheckOverrides {
    pub fn apply(self, mut spec: CheckSpec) -> CheckSpec {
        spec.trials = self.trials.unwrap_or(spec.trials);
        spec.dims = self.dims.unwrap_or(spec.dims);
        spec.epsilons = self.epsilons.unwrap_or(spec.epsilons);
        spec.alphas = self.alphas.unwrap_or(spec.alphas);
        spec.seed = self.seed.unwrap_or(spec.seed);
        spec.tolerance = self.tolerance.unwrap_or(spec.tolerance);
        spec.negate = self.negate.unwrap_or(spec.negate);
        spec
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// SHA-256 of the input JSON.
    pub digest: String,
    pub params: String,
    /// `exact` or `bound-mode`.
    pub mode: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs` for a claim `lhs ≤ rhs`.
    pub slack: f64,
    pub pass: bool,
    /// Full input, attached to failing records only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub trials: usize,
    pub records: usize,
    pub failures: usize,
    pub min_slack: f64,
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub check_id: String,
    pub claim: String,
    pub records: Vec<TrialRecord>,
    pub aggregate: Aggregate,
    pub config: CheckSpec,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(|r| !r.pass)
    }
}

/// One evaluated claim inside a trial.
pub(crate) struct Eval {
    pub params: String,
    pub lhs: f64,
    pub rhs: f64,
    pub bound_mode: bool,
}

impl Eval {
    pub fn exact(params: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            params: params.into(),
            lhs,
            rhs,
            bound_mode: false,
        }
    }

    pub fn bound(params: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            params: params.into(),
            lhs,
            rhs,
            bound_mode: true,
        }
    }
}

/// Inputs and evaluations of one trial.
pub(crate) struct TrialOutput {
    pub input: String,
    pub evals: Vec<Eval>,
}

/// Context handed to a check for trial `index`.
pub(crate) struct Trial<'a> {
    pub spec: &'a CheckSpec,
    pub index: usize,
    pub seed: u64,
}

impl Trial<'_> {
    pub fn dims(&self) -> &[usize] {
        &self.spec.dims[self.index % self.spec.dims.len()]
    }

    /// Independent sub-seed `k` of this trial.
    pub fn sub_seed(&self, k: u64) -> u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        rng.next_u64()
    }
}

/// Seed of trial `index` under master seed `master`.
pub fn trial_seed(master: u64, index: usize) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    rng.next_u64()
}

pub fn run_check(spec: &CheckSpec) -> Result<VerificationReport> {
    let info = registry::lookup(&spec.check_id)?;
    spec.validate()?;
    let start = Instant::now();
    let per_trial: Vec<Vec<TrialRecord>> = (0..spec.trials)
        .into_par_iter()
        .map(|index| {
            let trial = Trial {
                spec,
                index,
                seed: trial_seed(spec.seed, index),
            };
            records_for(&trial, (info.run)(&trial))
        })
        .collect();
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let failures = records.iter().filter(|r| !r.pass).count();
    let min_slack = records
        .iter()
        .map(|r| r.slack)
        .fold(f64::INFINITY, |a, s| if s.is_nan() { a } else { a.min(s) });
    Ok(VerificationReport {
        check_id: spec.check_id.clone(),
        claim: info.claim.to_string(),
        aggregate: Aggregate {
            trials: spec.trials,
            records: records.len(),
            failures,
            min_slack,
            runtime_secs: start.elapsed().as_secs_f64(),
        },
        records,
        config: spec.clone(),
    })
}

fn records_for(trial: &Trial, out: Result<TrialOutput>) -> Vec<TrialRecord> {
    let spec = trial.spec;
    match out {
        Ok(out) => {
            let digest = hex::encode(Sha256::digest(out.input.as_bytes()));
            out.evals
                .into_iter()
                .map(|e| {
                    let (lhs, rhs) = if spec.negate { (e.rhs, e.lhs) } else { (e.lhs, e.rhs) };
                    let slack = rhs - lhs;
                    let pass = slack >= -spec.tolerance;
                    TrialRecord {
                        trial: trial.index,
                        seed: trial.seed,
                        digest: digest.clone(),
                        params: e.params,
                        mode: if e.bound_mode { "bound-mode" } else { "exact" },
                        lhs,
                        rhs,
                        slack,
                        pass,
                        input: if pass {
                            None
                        } else {
                            serde_json::from_str(&out.input).ok()
                        },
                    }
                })
                .collect()
        }
        Err(e) => vec![TrialRecord {
            trial: trial.index,
            seed: trial.seed,
            digest: String::new(),
            params: format!("error: {e}"),
            mode: "exact",
            lhs: f64::NAN,
            rhs: f64::NAN,
            slack: f64::NAN,
            pass: false,
            input: None,
        }],
    }
}

/// Result of a suite run.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub reports: Vec<VerificationReport>,
    pub warnings: Vec<String>,
    /// 0 when no record failed, 1 otherwise.
    pub exit_code: i32,
}

/// Parses a suite config `{check_id: {trials, dims, epsilons, alphas, seed, tolerance}}`.
pub fn parse_suite_config(text: &str) -> Result<Vec<CheckSpec>> {
    let map: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("suite config: {e}")))?;
    map.into_iter()
        .map(|(id, v)| {
            let base = CheckSpec::default_for(&id)?;
            let ov: CheckOverrides =
                serde_json::from_value(v).map_err(|e| Error::Format(format!("suite config, check {id}: {e}")))?;
            let spec = ov.apply(base);
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}

/// Every registered check with its default settings.
pub fn default_suite() -> Vec<CheckSpec> {
    registry().iter().map(|c| c.default_spec()).collect()
}

/// Runs `specs` in order.
pub fn run_suite(specs: &[CheckSpec]) -> Result<SuiteOutcome> {
    let mut warnings = Vec::new();
    if specs.is_empty() {
        warnings.push("no checks configured; report is empty".to_string());
    }
    let reports = specs.iter().map(run_check).collect::<Result<Vec<_>>>()?;
    let failed = reports.iter().any(|r| r.aggregate.failures > 0);
    Ok(SuiteOutcome {
        reports,
        warnings,
        exit_code: i32::from(failed),
    })
}

pub const CSV_HEADER: &str = "check_id,trial,seed,digest,params,mode,lhs,rhs,slack,pass";

pub fn report_csv(reports: &[VerificationReport]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in reports {
        for t in &r.records {
            writeln!(
                s,
                "{},{},{},{},{},{},{:e},{:e},{:e},{}",
                r.check_id,
                t.trial,
                t.seed,
                t.digest,
                t.params.replace(',', ";"),
                t.mode,
                t.lhs,
                t.rhs,
                t.slack,
                t.pass
            )
            .unwrap();
        }
    }
    s
}

#[derive(Serialize)]
struct CheckSummary<'a> {
    check_id: &'a str,
    claim: &'a str,
    aggregate: &'a Aggregate,
    config: &'a CheckSpec,
    failures: Vec<&'a TrialRecord>,
}

#[derive(Serialize)]
struct SuiteSummary<'a> {
    checks: Vec<CheckSummary<'a>>,
    total_failures: usize,
    exit_code: i32,
    warnings: &'a [String],
}

pub fn summary_json(outcome: &SuiteOutcome) -> Result<String> {
    let checks = outcome
        .reports
        .iter()
        .map(|r| CheckSummary {
            check_id: &r.check_id,
            claim: &r.claim,
            aggregate: &r.aggregate,
            config: &r.config,
            failures: r.failures().collect(),
        })
        .collect();
    let summary = SuiteSummary {
        checks,
        total_failures: outcome.reports.iter().map(|r| r.aggregate.failures).sum(),
        exit_code: outcome.exit_code,
        warnings: &outcome.warnings,
    };
    Ok(serde_json::to_string_pretty(&summary)?)
}

/// Writes `report.csv` and `summary.json` into `dir`.
pub fn write_outputs(outcome: &SuiteOutcome, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.csv"), report_csv(&outcome.reports))?;
    std::fs::write(dir.join("summary.json"), summary_json(outcome)?)?;
    Ok(())
}
