//! Synthetic epoch generation from the scenario catalogue.

pub mod dataset;
pub mod sampling;
pub mod taxonomy;

use chrono::{Duration, NaiveTime, TimeZone, Utc};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{Epoch, PatientContext, Timestamp, PATIENT_ID_MIN};
pub use dataset::{CaseHash, Dataset, DatasetError, Manifest};
pub use sampling::{measurement_noise, sample_truncated_gaussian, substream, InvalidBounds};
pub use taxonomy::{
    CategoricalParams, Choice, ContextTemplate, ContinuousField, DomainClass, GaussianSpec, Taxonomy, TaxonomyEntry,
    TaxonomyError,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("case {case_id}: {source}")]
    Sampling {
        case_id: String,
        #[source]
        source: InvalidBounds,
    },
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Draws one continuous reading: truncated Gaussian, plus measurement noise,
/// clamped back into the bounds and rounded to one decimal.
fn draw_continuous<R: Rng + ?Sized>(g: &GaussianSpec, rng: &mut R) -> Result<f64, InvalidBounds> {
    let x = sample_truncated_gaussian(g.mu, g.sigma, g.lower, g.upper, rng)?;
    let noisy = (x + measurement_noise(rng)).clamp(g.lower, g.upper);
    Ok(round1(noisy).clamp(g.lower, g.upper))
}

/// Consecutive one-minute epochs for one case, starting at `start`.
pub fn generate_case(
    entry: &TaxonomyEntry,
    patient_id: u32,
    start: Timestamp,
    seed: u64,
) -> Result<(Vec<Epoch>, PatientContext), SynthError> {
    entry.validate()?;
    let mut rng = substream(seed, &entry.case_id, "values");
    let spo2 = entry.spec(ContinuousField::Spo2).expect("validated");
    let hr = entry.spec(ContinuousField::Hr).expect("validated");
    let cat = &entry.categorical_params;
    let sampling_err = |source| SynthError::Sampling {
        case_id: entry.case_id.clone(),
        source,
    };

    let mut epochs = Vec::with_capacity(entry.epoch_count as usize);
    for i in 0..entry.epoch_count {
        let spo2 = draw_continuous(spo2, &mut rng).map_err(sampling_err)?;
        let hr = draw_continuous(hr, &mut rng).map_err(sampling_err)?;
        epochs.push(Epoch {
            patient_id,
            timestamp: start + Duration::minutes(i64::from(i)),
            spo2,
            hr,
            accel_level: cat.accel_level.sample(&mut rng),
            device_status: cat.device_status.sample(&mut rng),
            probe_cover_present: cat.probe_cover_present.sample(&mut rng),
            position: cat.position.sample(&mut rng),
            self_reported_activity: cat.self_reported_activity.sample(&mut rng),
            ambient_condition: cat.ambient_condition.sample(&mut rng),
        });
    }
    Ok((epochs, entry.context.instantiate(patient_id)))
}

const MONITORING_DAYS: i64 = 30 + 31 + 31;

/// Start time for a case: a day in June to August 2022, then a minute that
/// keeps the whole case inside 00:00-06:00 (nocturnal) or 08:00-20:00.
pub fn schedule_case(entry: &TaxonomyEntry, seed: u64) -> Timestamp {
    let mut rng = substream(seed, &entry.case_id, "schedule");
    let day = rng.random_range(0..MONITORING_DAYS);
    let len = i64::from(entry.epoch_count);
    let (open, close) = if entry.nocturnal { (0, 6 * 60) } else { (8 * 60, 20 * 60) };
    let latest = (close - len).max(open);
    let minute = rng.random_range(open..=latest);
    let midnight = Utc
        .from_utc_datetime(&chrono::NaiveDate::from_ymd_opt(2022, 6, 1).unwrap().and_time(NaiveTime::MIN));
    midnight + Duration::days(day) + Duration::minutes(minute)
}

/// Generates every case in catalogue order. Patient ids are assigned
/// sequentially from 3847291.
pub fn generate_dataset(taxonomy: &Taxonomy, seed: u64) -> Result<Dataset, SynthError> {
    taxonomy.validate()?;
    let cases = taxonomy
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let pid = PATIENT_ID_MIN + i as u32;
            let (epochs, ctx) = generate_case(entry, pid, schedule_case(entry, seed), seed)?;
            Ok((entry.case_id.clone(), epochs, ctx))
        })
        .collect::<Result<Vec<_>, SynthError>>()?;
    Ok(Dataset::from_cases(seed, cases))
}
