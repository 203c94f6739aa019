//! Runs the pipeline over a dataset and scores it case by case.

pub mod golden;
pub mod report;
pub mod stats;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::model::{closed_enum, DeviceStatus, SystemDecision, UnknownVariant, Verdict};
use crate::pipeline::{EpochTrace, Pipeline, PipelineError};
use crate::provenance::SourceBundle;
use crate::routing::RoutingDecision;
use crate::synthgen::{Dataset, DomainClass, Taxonomy};
use std::fmt;
use std::str::FromStr;

pub use report::{DomainStats, EvaluationReport, Overall, Totals};
pub use stats::{wilson_interval, Interval, InvalidCounts, Z_95};

closed_enum! {
    Outcome, "outcome" {
        TrueSuppression => "true_suppression",
        FalseEscalation => "false_escalation",
        Indeterminate => "indeterminate",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no decisions to aggregate")]
pub struct EmptyDecisions;

/// Case-level rule: any escalation makes the case a false escalation; all
/// suppressions make it a true suppression.
pub fn aggregate_verdicts(verdicts: &[Option<Verdict>]) -> Result<Outcome, EmptyDecisions> {
    if verdicts.is_empty() {
        return Err(EmptyDecisions);
    }
    if verdicts.contains(&Some(Verdict::Escalate)) {
        Ok(Outcome::FalseEscalation)
    } else if verdicts.iter().all(|v| *v == Some(Verdict::Suppress)) {
        Ok(Outcome::TrueSuppression)
    } else {
        Ok(Outcome::Indeterminate)
    }
}

pub fn aggregate_case(decisions: &[SystemDecision]) -> Result<Outcome, EmptyDecisions> {
    let vs: Vec<_> = decisions.iter().map(|d| Some(d.verdict)).collect();
    aggregate_verdicts(&vs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub case_id: String,
    pub patient_id: u32,
    pub domain_class: DomainClass,
    pub outcome: Outcome,
    pub epoch_decisions: Vec<SystemDecision>,
    pub routes: Vec<RoutingDecision>,
    /// Device status at the first escalating epoch.
    pub failure_device_status: Option<DeviceStatus>,
    pub epochs: usize,
}

impl CaseOutcome {
    /// Every alerted epoch went to exactly one specialist without an
    /// ambiguity flag.
    pub fn single_domain(&self) -> bool {
        !self.routes.is_empty() && self.routes.iter().all(RoutingDecision::is_single_domain)
    }

    fn from_traces(case_id: String, domain_class: DomainClass, patient_id: u32, traces: &[EpochTrace]) -> Self {
        let alerted: Vec<_> = traces.iter().filter_map(|t| t.alert.as_ref().map(|a| (t, a))).collect();
        let epoch_decisions: Vec<SystemDecision> = alerted.iter().map(|(_, a)| a.decision.clone()).collect();
        // a case in which nothing alerted never reached a clinician
        let outcome = aggregate_case(&epoch_decisions).unwrap_or(Outcome::TrueSuppression);
        let failure_device_status = alerted
            .iter()
            .find(|(_, a)| a.decision.verdict == Verdict::Escalate)
            .and_then(|(t, _)| t.device_status);
        Self {
            case_id,
            patient_id,
            domain_class,
            outcome,
            routes: alerted.iter().map(|(_, a)| a.routing.clone()).collect(),
            epoch_decisions,
            failure_device_status,
            epochs: traces.len(),
        }
    }
}

/// One line of the decision log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionLogEntry {
    pub case_id: String,
    pub patient_id: u32,
    #[serde(flatten)]
    pub trace: EpochTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvaluationReport,
    pub cases: Vec<CaseOutcome>,
    pub decision_log: Vec<DecisionLogEntry>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset and taxonomy do not match: {0}")]
    DatasetTaxonomyMismatch(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

fn check_correspondence(dataset: &Dataset, taxonomy: &Taxonomy) -> Result<(), EvalError> {
    let mismatch = |m: String| Err(EvalError::DatasetTaxonomyMismatch(m));
    let in_manifest: BTreeSet<&str> = dataset.manifest.case_hashes.iter().map(|c| c.case_id.as_str()).collect();
    let in_taxonomy: BTreeSet<&str> = taxonomy.entries.iter().map(|e| e.case_id.as_str()).collect();
    if in_manifest.len() != dataset.manifest.case_hashes.len() {
        return mismatch("duplicate case ids in manifest".into());
    }
    if let Some(c) = in_manifest.symmetric_difference(&in_taxonomy).next() {
        return mismatch(format!("case {c} is not in both the dataset and the taxonomy"));
    }
    let patients: BTreeSet<u32> = dataset.manifest.case_hashes.iter().map(|c| c.patient_id).collect();
    if patients.len() != dataset.manifest.case_hashes.len() {
        return mismatch("a patient id is shared by several cases".into());
    }
    if let Some(e) = dataset.epochs.iter().find(|e| !patients.contains(&e.patient_id)) {
        return mismatch(format!("epoch for unknown patient {}", e.patient_id));
    }
    for c in &dataset.manifest.case_hashes {
        if !dataset.contexts.contains_key(&c.patient_id) {
            return mismatch(format!("no context for patient {}", c.patient_id));
        }
        if !dataset.epochs.iter().any(|e| e.patient_id == c.patient_id) {
            return mismatch(format!("no epochs for case {}", c.case_id));
        }
    }
    Ok(())
}

/// Runs every case through a fresh pipeline. Cases are independent (one
/// patient each), so they run in parallel on the current rayon pool; within
/// a case epochs are processed in timestamp order.
pub fn evaluate(dataset: &Dataset, taxonomy: &Taxonomy, cfg: &PipelineConfig) -> Result<Evaluation, EvalError> {
    check_correspondence(dataset, taxonomy)?;

    let per_case = dataset
        .manifest
        .case_hashes
        .par_iter()
        .map(|c| {
            let entry = taxonomy.get(&c.case_id).expect("checked correspondence");
            let bundle = SourceBundle::from_epochs(dataset.contexts[&c.patient_id].clone(), dataset.epochs_for(c.patient_id));
            let mut pipeline = Pipeline::from_config(cfg);
            let traces = pipeline.process_all(&bundle)?;
            let outcome = CaseOutcome::from_traces(c.case_id.clone(), entry.domain_class, c.patient_id, &traces);
            let log: Vec<_> = traces
                .into_iter()
                .map(|trace| DecisionLogEntry {
                    case_id: c.case_id.clone(),
                    patient_id: c.patient_id,
                    trace,
                })
                .collect();
            Ok((outcome, log))
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;

    // taxonomy order, whatever order the dataset listed cases in
    let position: BTreeMap<&str, usize> =
        taxonomy.entries.iter().enumerate().map(|(i, e)| (e.case_id.as_str(), i)).collect();
    let mut per_case = per_case;
    per_case.sort_by_key(|(o, _)| position[o.case_id.as_str()]);

    let (cases, logs): (Vec<_>, Vec<_>) = per_case.into_iter().unzip();
    let report = EvaluationReport::from_cases(&cases, dataset.epochs.len());
    Ok(Evaluation {
        report,
        cases,
        decision_log: logs.into_iter().flatten().collect(),
    })
}
