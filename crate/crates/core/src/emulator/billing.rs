use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const DEFAULT_GB_SECOND_RATE: f64 = 1.6667e-5;
pub const DEFAULT_REQUEST_FEE: f64 = 2.0e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BillingRates {
    /// Dollars per GB-second of configured memory.
    pub gb_second_rate: f64,
    /// Flat dollars per invocation.
    pub request_fee: f64,
}

impl Default for BillingRates {
    fn default() -> Self {
        Self { gb_second_rate: DEFAULT_GB_SECOND_RATE, request_fee: DEFAULT_REQUEST_FEE }
    }
}

/// Memory-time charge only.
pub fn compute_charge(memory_mb: f64, billed_ms: f64, gb_second_rate: f64) -> f64 {
    ((memory_mb / 1024.0) * (billed_ms / 1000.0)) * gb_second_rate
}

/// `(memory_mb / 1024) · (billed_ms / 1000) · gb_second_rate + request_fee`
pub fn compute_cost(memory_mb: f64, billed_ms: f64, rates: &BillingRates) -> f64 {
    compute_charge(memory_mb, billed_ms, rates.gb_second_rate) + rates.request_fee
}

/// Rounds a raw duration up to the billing granularity; `0` disables rounding.
pub fn billed_duration(raw_ms: f64, granularity_ms: u64) -> f64 {
    if granularity_ms == 0 {
        return raw_ms;
    }
    let g = granularity_ms as f64;
    (raw_ms / g).ceil().max(1.0) * g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillingSample {
    pub cloud_name: String,
    pub request_id: String,
    pub cold: bool,
    pub duration_ms: f64,
    pub init_ms: f64,
    pub billed_ms: f64,
    pub memory: u32,
    /// `compute_cost + request_fee`.
    pub cost: f64,
    pub compute_cost: f64,
    pub request_fee: f64,
    /// Execution delay injected by the emulator, already part of `duration_ms`.
    pub injected_delay_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostTotals {
    pub invocations: u64,
    pub cold_invocations: u64,
    pub billed_ms: f64,
    pub total_cost: f64,
    pub compute_cost: f64,
    pub request_fees: f64,
}

impl CostTotals {
    fn add(&mut self, sample: &BillingSample) {
        self.invocations += 1;
        self.cold_invocations += u64::from(sample.cold);
        self.billed_ms += sample.billed_ms;
        self.total_cost += sample.cost;
        self.compute_cost += sample.compute_cost;
        self.request_fees += sample.request_fee;
    }
}

/// Samples in completion order plus their sums, overall and per function.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BillingReport {
    pub samples: Vec<BillingSample>,
    pub totals: CostTotals,
    pub per_function: BTreeMap<String, CostTotals>,
}

impl BillingReport {
    pub fn from_samples(samples: Vec<BillingSample>) -> Self {
        let mut totals = CostTotals::default();
        let mut per_function: BTreeMap<String, CostTotals> = BTreeMap::new();
        for s in &samples {
            totals.add(s);
            per_function.entry(s.cloud_name.clone()).or_default().add(s);
        }
        Self { samples, totals, per_function }
    }

    /// Restricts the report to the given request ids.
    pub fn filtered<'a>(&self, request_ids: impl IntoIterator<Item = &'a str>) -> Self {
        let wanted: std::collections::HashSet<&str> = request_ids.into_iter().collect();
        let kept = self.samples.iter().filter(|s| wanted.contains(s.request_id.as_str())).cloned().collect();
        Self::from_samples(kept)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_invocation() {
        let c = compute_cost(512.0, 100.0, &BillingRates::default());
        assert!((c - 1.0333e-6).abs() < 1e-10);
    }

    #[test]
    fn zero_memory_is_fee_only() {
        assert_eq!(compute_cost(0.0, 12345.0, &BillingRates::default()), DEFAULT_REQUEST_FEE);
    }

    #[test]
    fn granularity_rounds_up() {
        assert_eq!(billed_duration(3.2, 100), 100.0);
        assert_eq!(billed_duration(100.0, 100), 100.0);
        assert_eq!(billed_duration(100.5, 100), 200.0);
        assert_eq!(billed_duration(0.0, 100), 100.0);
        assert_eq!(billed_duration(3.2, 0), 3.2);
    }

    #[test]
    fn empty_report() {
        let r = BillingReport::from_samples(Vec::new());
        assert!(r.samples.is_empty());
        assert_eq!(r.totals, CostTotals::default());
    }
}
