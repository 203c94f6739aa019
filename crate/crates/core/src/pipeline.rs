//! Drives one patient's epochs through all five layers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::meta::{resolve, DecisionHistory, MetaConfig, MetaError};
use crate::model::{AlertType, DeviceStatus, SystemDecision, Timestamp};
use crate::provenance::{assemble, project_for_specialists, AssemblyError, SourceBundle};
use crate::routing::{route, RoutingDecision};
use crate::sentinel::{detect, SentinelConfig};
use crate::specialists::{evaluate_routed, SpecialistConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Meta(#[from] MetaError),
}

/// What happened to one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub patient_id: u32,
    pub timestamp: Timestamp,
    pub device_status: Option<DeviceStatus>,
    /// `None` when the sentinel raised nothing for this epoch.
    pub alert: Option<AlertTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertTrace {
    pub alert_types: Vec<AlertType>,
    pub routing: RoutingDecision,
    pub decision: SystemDecision,
}

/// Layer configuration plus the decision history it accumulates.
#[derive(Debug, Clone, Default)]
pub struct Pipeline {
    pub sentinel: SentinelConfig,
    pub specialists: SpecialistConfig,
    pub meta: MetaConfig,
    history: DecisionHistory,
}

impl Pipeline {
    pub fn new(sentinel: SentinelConfig, specialists: SpecialistConfig, meta: MetaConfig) -> Self {
        Self {
            sentinel,
            specialists,
            meta,
            history: DecisionHistory::new(),
        }
    }

    pub fn from_config(cfg: &PipelineConfig) -> Self {
        Self::new(cfg.sentinel.clone(), cfg.specialists.clone(), cfg.meta.clone())
    }

    pub fn history(&self) -> &DecisionHistory {
        &self.history
    }

    /// Runs the epoch stamped `at` through every layer.
    pub fn process(&mut self, bundle: &SourceBundle, at: Timestamp) -> Result<EpochTrace, PipelineError> {
        let record = assemble(bundle, at)?;
        let view = project_for_specialists(&record);
        let device_status = view.device_status();
        let alert = match detect(&view, &self.sentinel) {
            Some(alert) => {
                let routing = route(&alert);
                let claims = evaluate_routed(&alert, &routing, &self.specialists);
                let decision = resolve(&claims, &routing, &alert, &mut self.history, &self.meta)?;
                Some(AlertTrace {
                    alert_types: alert.alert_types.iter().copied().collect(),
                    routing,
                    decision,
                })
            }
            None => None,
        };
        Ok(EpochTrace {
            patient_id: record.patient_id,
            timestamp: at,
            device_status,
            alert,
        })
    }

    /// Every epoch in the bundle, in timestamp order.
    pub fn process_all(&mut self, bundle: &SourceBundle) -> Result<Vec<EpochTrace>, PipelineError> {
        let mut times: Vec<Timestamp> = bundle.vitals_stream.iter().map(|e| e.timestamp).collect();
        times.sort();
        times.dedup();
        times.into_iter().map(|t| self.process(bundle, t)).collect()
    }
}
