//! Metric tables and their JSON / text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::stats::{clopper_pearson_lower_all_success, wilson_interval, Interval, Z_95};
use super::{CaseOutcome, Outcome};
use crate::model::DeviceStatus;
use crate::synthgen::DomainClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overall {
    pub ts_count: usize,
    pub fe_count: usize,
    pub ind_count: usize,
    pub tsr: f64,
    pub fer: f64,
    pub indr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainStats {
    pub n: usize,
    pub ts: usize,
    pub fe: usize,
    pub tsr: f64,
    pub fer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub cases: usize,
    pub epochs: usize,
    pub mean_epochs_per_case: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub case_id: String,
    pub patient_id: u32,
    pub domain_class: DomainClass,
    pub outcome: Outcome,
    pub single_domain: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_device_status: Option<DeviceStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub overall: Overall,
    pub per_domain: BTreeMap<DomainClass, DomainStats>,
    pub wilson_cis: BTreeMap<DomainClass, Interval>,
    pub failure_modes: BTreeMap<DeviceStatus, usize>,
    pub totals: Totals,
    pub cases: Vec<CaseSummary>,
}

fn rate(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

impl EvaluationReport {
    pub fn from_cases(cases: &[CaseOutcome], epochs: usize) -> Self {
        let count = |o| cases.iter().filter(|c| c.outcome == o).count();
        let n = cases.len();
        let (ts, fe, ind) = (
            count(Outcome::TrueSuppression),
            count(Outcome::FalseEscalation),
            count(Outcome::Indeterminate),
        );

        let mut per_domain: BTreeMap<DomainClass, DomainStats> = BTreeMap::new();
        for c in cases {
            let s = per_domain.entry(c.domain_class).or_insert(DomainStats {
                n: 0,
                ts: 0,
                fe: 0,
                tsr: 0.0,
                fer: 0.0,
            });
            s.n += 1;
            match c.outcome {
                Outcome::TrueSuppression => s.ts += 1,
                Outcome::FalseEscalation => s.fe += 1,
                Outcome::Indeterminate => {}
            }
        }
        for s in per_domain.values_mut() {
            s.tsr = rate(s.ts, s.n);
            s.fer = rate(s.fe, s.n);
        }
        let wilson_cis = per_domain
            .iter()
            .map(|(d, s)| (*d, wilson_interval(s.ts as u64, s.n as u64, Z_95).expect("n >= 1, ts <= n")))
            .collect();

        let mut failure_modes = BTreeMap::new();
        for c in cases.iter().filter(|c| c.outcome == Outcome::FalseEscalation) {
            if let Some(s) = c.failure_device_status {
                *failure_modes.entry(s).or_insert(0) += 1;
            }
        }

        Self {
            overall: Overall {
                ts_count: ts,
                fe_count: fe,
                ind_count: ind,
                tsr: rate(ts, n),
                fer: rate(fe, n),
                indr: rate(ind, n),
            },
            per_domain,
            wilson_cis,
            failure_modes,
            totals: Totals {
                cases: n,
                epochs,
                mean_epochs_per_case: rate(epochs, n),
            },
            cases: cases
                .iter()
                .map(|c| CaseSummary {
                    case_id: c.case_id.clone(),
                    patient_id: c.patient_id,
                    domain_class: c.domain_class,
                    outcome: c.outcome,
                    single_domain: c.single_domain(),
                    failure_device_status: c.failure_device_status,
                })
                .collect(),
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "TSR {} FER {} INDR {}",
            pct(self.overall.tsr),
            pct(self.overall.fer),
            pct(self.overall.indr)
        )
    }

    pub fn to_json(&self) -> Vec<u8> {
        crate::synthgen::dataset::pretty(self)
    }

    /// Plain-text tables: overall outcomes, per-domain rates, Wilson
    /// intervals and the failure-mode breakdown.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let o = &self.overall;
        let n = self.totals.cases;
        let _ = writeln!(s, "Overall outcomes ({n} cases, {} epochs, mean {:.1} per case)", self.totals.epochs, self.totals.mean_epochs_per_case);
        let _ = writeln!(s, "  {:<22} {:>9} {:>7}", "Metric", "Count", "Rate");
        let _ = writeln!(s, "  {:<22} {:>9} {:>7}", "True Suppression", format!("{} / {n}", o.ts_count), pct(o.tsr));
        let _ = writeln!(s, "  {:<22} {:>9} {:>7}", "False Escalation", format!("{} / {n}", o.fe_count), pct(o.fer));
        let _ = writeln!(s, "  {:<22} {:>9} {:>7}", "Indeterminate", format!("{} / {n}", o.ind_count), pct(o.indr));
        let _ = writeln!(s);

        let _ = writeln!(s, "By domain");
        let _ = writeln!(s, "  {:<36} {:>4} {:>4} {:>4} {:>7} {:>7}", "Domain", "n", "TS", "FE", "TSR", "FER");
        for class in DomainClass::ALL {
            if let Some(d) = self.per_domain.get(class) {
                let _ = writeln!(s, "  {:<36} {:>4} {:>4} {:>4} {:>7} {:>7}", class.label(), d.n, d.ts, d.fe, pct(d.tsr), pct(d.fer));
            }
        }
        let _ = writeln!(s, "  {:<36} {:>4} {:>4} {:>4} {:>7} {:>7}", "Total", n, o.ts_count, o.fe_count, pct(o.tsr), pct(o.fer));
        let _ = writeln!(s);

        let _ = writeln!(s, "Wilson 95% intervals for TSR");
        let mut exact = Vec::new();
        for class in DomainClass::ALL {
            let (Some(d), Some(ci)) = (self.per_domain.get(class), self.wilson_cis.get(class)) else {
                continue;
            };
            let _ = writeln!(s, "  {:<36} {:>4} {:>7}  {:.1}-{:.1}%", class.label(), d.n, pct(d.tsr), ci.lower * 100.0, ci.upper * 100.0);
            if d.ts == d.n {
                let cp = clopper_pearson_lower_all_success(d.n as u64, 0.05);
                exact.push(format!("{} {}", class.label(), pct(cp)));
            }
        }
        if !exact.is_empty() {
            // the Clopper-Pearson bound is often quoted for these rows instead
            let _ = writeln!(
                s,
                "  note: for rows with every case suppressed the lower bound is n/(n+z^2); \
                 the Clopper-Pearson exact lower bound (alpha/2)^(1/n) differs: {}",
                exact.join(", ")
            );
        }
        let _ = writeln!(s);

        let _ = writeln!(s, "False escalations by device status at first escalation ({} cases)", o.fe_count);
        let mut modes: Vec<_> = self.failure_modes.iter().collect();
        modes.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        for (status, count) in modes {
            let _ = writeln!(s, "  {:<22} {:>4}", status.as_str(), count);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{}", self.summary_line());
        s
    }
}
