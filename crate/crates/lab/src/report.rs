//! Experiment reports: per-instance verdicts, counterexample witnesses,
//! JSON/CSV serialization and the human-readable summary.
//!
//! Reports must be byte-identical across re-runs with the same seeds, so
//! nothing time- or environment-dependent is serialized; wall time lives
//! only on the in-memory report and in the printed summary.

use crate::instance::InstanceSpec;
use osa_core::{BeliefVector, ChannelModel};
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use std::time::Duration;

/// Everything needed to re-run an experiment exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// One of "structure", "optimality", "conjecture", "lemma4",
    /// "montecarlo".
    pub experiment: String,
    pub spec: InstanceSpec,
    pub instances: usize,
    /// Episodes per policy; used by "montecarlo" only.
    #[serde(default)]
    pub episodes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

/// A reproducible counterexample or noteworthy payload attached to an
/// instance verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slot: Option<usize>,
    /// Observation prefix ("ACK"/"NAK") leading to the witness node.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observations: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beliefs: Option<Vec<f64>>,
    /// Actions involved (candidate first where applicable).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<usize>>,
    /// Values involved (meaning depends on `kind`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub index: usize,
    pub channels: usize,
    pub horizon: usize,
    pub model: ChannelModel,
    pub omega1: Vec<f64>,
    pub verdict: Verdict,
    /// Short deterministic summary (path counts, value gaps, …).
    pub detail: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
}

impl InstanceReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        index: usize,
        channels: usize,
        horizon: usize,
        model: ChannelModel,
        omega1: &BeliefVector,
        verdict: Verdict,
        detail: String,
        witnesses: Vec<Witness>,
    ) -> Self {
        InstanceReport {
            index,
            channels,
            horizon,
            model,
            omega1: omega1.entries().to_vec(),
            verdict,
            detail,
            witnesses,
        }
    }

    /// Report for an instance that could not even be generated.
    pub fn generation_failure(index: usize, spec: &InstanceSpec, error: String) -> Self {
        InstanceReport {
            index,
            channels: spec.channels,
            horizon: spec.horizon,
            model: ChannelModel::relaxed(0.5, 0.5, 0.0, 0.0).expect("valid placeholder"),
            omega1: Vec::new(),
            verdict: Verdict::Fail,
            detail: format!("instance generation failed: {error}"),
            witnesses: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub instances: Vec<InstanceReport>,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    /// passed / (passed + failed); 1.0 when nothing was evaluated.
    pub pass_rate: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ExperimentReport {
    pub fn assemble(
        config: ExperimentConfig,
        instances: Vec<InstanceReport>,
        wall_time: Duration,
    ) -> Self {
        let passed = instances.iter().filter(|i| i.verdict == Verdict::Pass).count();
        let failed = instances.iter().filter(|i| i.verdict == Verdict::Fail).count();
        let skipped = instances.iter().filter(|i| i.verdict == Verdict::Skipped).count();
        let evaluated = passed + failed;
        let pass_rate = if evaluated == 0 {
            1.0
        } else {
            passed as f64 / evaluated as f64
        };
        ExperimentReport {
            config,
            instances,
            passed,
            failed,
            skipped,
            pass_rate,
            wall_time,
        }
    }

    /// True when every non-skipped instance passed.
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    /// Canonical JSON form; byte-identical across runs with equal seeds.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// One CSV row per instance, for sweep post-processing.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "experiment,index,channels,horizon,p01,p11,epsilon,delta,verdict,witnesses,detail"
        )?;
        for i in &self.instances {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},\"{}\"",
                self.config.experiment,
                i.index,
                i.channels,
                i.horizon,
                i.model.p01(),
                i.model.p11(),
                i.model.epsilon(),
                i.model.delta(),
                match i.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "fail",
                    Verdict::Skipped => "skipped",
                },
                i.witnesses.len(),
                i.detail.replace('"', "'"),
            )?;
        }
        Ok(())
    }

    /// Human-readable outcome table.
    pub fn summary(&self) -> String {
        let mut lines = vec![
            format!("experiment : {}", self.config.experiment),
            format!(
                "instances  : {} requested, {} passed, {} failed, {} skipped",
                self.config.instances, self.passed, self.failed, self.skipped
            ),
            format!("pass rate  : {:.2}%", self.pass_rate * 100.0),
            format!("wall time  : {:.2?}", self.wall_time),
        ];
        for i in self.instances.iter().filter(|i| i.verdict == Verdict::Fail) {
            lines.push(format!(
                "  FAIL #{} (N={}, T={}, p01={:.4}, p11={:.4}, eps={:.5}): {}",
                i.index,
                i.channels,
                i.horizon,
                i.model.p01(),
                i.model.p11(),
                i.model.epsilon(),
                i.detail
            ));
            for w in &i.witnesses {
                lines.push(format!("    witness [{}] {}", w.kind, w.note));
            }
        }
        lines.join("\n")
    }
}

/// Outcome of re-running a stored report's configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayOutcome {
    /// Regenerated report serializes to exactly the same bytes.
    pub byte_identical: bool,
    /// Per-instance verdicts match (weaker than byte identity).
    pub verdicts_match: bool,
    pub fresh_passed: usize,
    pub fresh_failed: usize,
    pub fresh_skipped: usize,
}

pub fn compare_reports(stored: &ExperimentReport, fresh: &ExperimentReport) -> ReplayOutcome {
    let byte_identical = stored.to_json() == fresh.to_json();
    let verdicts_match = stored.instances.len() == fresh.instances.len()
        && stored
            .instances
            .iter()
            .zip(&fresh.instances)
            .all(|(a, b)| a.verdict == b.verdict);
    ReplayOutcome {
        byte_identical,
        verdicts_match,
        fresh_passed: fresh.passed,
        fresh_failed: fresh.failed,
        fresh_skipped: fresh.skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> ExperimentReport {
        let config = ExperimentConfig {
            experiment: "structure".into(),
            spec: InstanceSpec::new(2, 5, 1),
            instances: 1,
            episodes: 0,
        };
        let model = ChannelModel::new(0.2, 0.8, 0.03, 0.1).unwrap();
        let omega = BeliefVector::new(vec![0.5, 0.4]).unwrap();
        let instance = InstanceReport::new(
            0,
            2,
            5,
            model,
            &omega,
            Verdict::Pass,
            "paths=16".into(),
            vec![],
        );
        ExperimentReport::assemble(config, vec![instance], Duration::from_millis(12))
    }

    #[test]
    fn json_is_deterministic_and_omits_wall_time() {
        let report = sample_report();
        let a = report.to_json();
        let b = report.to_json();
        assert_eq!(a, b);
        assert!(!a.contains("wall_time"));
        let back: ExperimentReport = serde_json::from_str(&a).unwrap();
        assert_eq!(back.to_json(), a);
    }

    #[test]
    fn csv_has_one_row_per_instance() {
        let report = sample_report();
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("structure,0,2,5,0.2,0.8"));
    }

    #[test]
    fn pass_rate_ignores_skipped() {
        let config = ExperimentConfig {
            experiment: "optimality".into(),
            spec: InstanceSpec::new(2, 5, 1),
            instances: 2,
            episodes: 0,
        };
        let model = ChannelModel::new(0.2, 0.8, 0.03, 0.1).unwrap();
        let omega = BeliefVector::new(vec![0.5, 0.4]).unwrap();
        let mk = |index, verdict| {
            InstanceReport::new(index, 2, 5, model, &omega, verdict, String::new(), vec![])
        };
        let report = ExperimentReport::assemble(
            config,
            vec![mk(0, Verdict::Pass), mk(1, Verdict::Skipped)],
            Duration::ZERO,
        );
        assert_eq!(report.pass_rate, 1.0);
        assert!(report.all_passed());
    }
}
