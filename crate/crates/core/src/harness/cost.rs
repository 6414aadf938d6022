//! Rank-one update accounting.
//!
//! Each accepted sample costs two rank-one inverse updates (canonical
//! direction, then data direction), so a run over `N` samples with inclusion
//! probability `p` should apply `2pN ± 6·sqrt(N p (1 − p))` updates.

use std::collections::BTreeMap;
use std::fmt;

use super::{MethodSpec, RunRecord};
use crate::optimizers::Method;

#[derive(Debug, Clone, PartialEq)]
pub struct MethodCost {
    pub method: String,
    pub runs: usize,
    /// Mean over runs of updates / samples at the final checkpoint.
    pub updates_per_sample: f64,
    /// Expected updates and half-width of the acceptance band, per run.
    pub expected: f64,
    pub band: f64,
    /// Largest deviation from `expected` over runs.
    pub worst_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub methods: Vec<MethodCost>,
}

impl CostReport {
    pub fn all_pass(&self) -> bool {
        self.methods.iter().all(|m| m.pass)
    }
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.methods {
            writeln!(
                f,
                "{:<16} runs={:<4} updates/sample={:.6} expected={:.1}±{:.1} worst_dev={:.1} {}",
                m.method,
                m.runs,
                m.updates_per_sample,
                m.expected,
                m.band,
                m.worst_deviation,
                if m.pass { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Checks each run's final update count against its expected band. `p` is
/// the inclusion probability of subsampled methods; `newton_direct` always
/// uses 1 and first-order methods expect no updates.
pub fn report_cost(records: &[RunRecord], p: f64) -> CostReport {
    let mut finals: BTreeMap<(&str, i64), &RunRecord> = BTreeMap::new();
    for r in records.iter().filter(|r| r.run_id >= 0) {
        let slot = finals.entry((r.method.as_str(), r.run_id)).or_insert(r);
        if r.n_seen > slot.n_seen {
            *slot = r;
        }
    }
    let mut by_method: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for ((method, _), r) in finals {
        by_method.entry(method).or_default().push(r);
    }
    let methods = by_method
        .into_iter()
        .map(|(label, runs)| {
            let spec = MethodSpec::parse(label);
            let p_eff = match spec.map(|s| s.method) {
                Some(Method::NewtonDirect) => Some(1.0),
                Some(m) if m.is_newton() => Some(p),
                Some(_) => Some(0.0),
                None => None,
            };
            let mut worst = 0.0f64;
            let mut pass = p_eff.is_some();
            let (mut expected, mut band) = (0.0, 0.0);
            let mut per_sample = 0.0;
            for r in &runs {
                let n = r.n_seen as f64;
                let q = p_eff.unwrap_or(0.0);
                expected = 2.0 * q * n;
                band = 6.0 * (n * q * (1.0 - q)).sqrt();
                let dev = (r.rank_one_updates as f64 - expected).abs();
                worst = worst.max(dev);
                pass &= dev <= band;
                per_sample += r.rank_one_updates as f64 / n;
            }
            MethodCost {
                method: label.to_string(),
                runs: runs.len(),
                updates_per_sample: per_sample / runs.len() as f64,
                expected,
                band,
                worst_deviation: worst,
                pass,
            }
        })
        .collect();
    CostReport { methods }
}
