//! Offloadable tasks used by the benchmarks and the end-to-end tests.

use crate::codegen::{FunctionConfig, TaskSet};

/// Seed used by [`pi_slice`] when the caller does not vary it.
pub const PI_SLICE_SEED: u64 = 0x5eed;

/// One worker's share of a Pi job: `n / np` samples from `seed`.
#[crate::task(memory = 1769)]
pub fn pi_slice(n: u64, np: u64, seed: u64) -> f64 {
    super::pi_estimate(n / np.max(1), seed)
}

#[crate::task(memory = 1769)]
pub fn pi_samples(samples: u64, seed: u64) -> f64 {
    super::pi_estimate(samples, seed)
}

#[crate::task(memory = 1769)]
pub fn queens_count(board_n: u32, prefix: Vec<u32>) -> u64 {
    super::count_solutions_from_prefix(board_n, &prefix)
}

#[crate::task(memory = 128)]
pub fn noop() {}

#[crate::task(memory = 128)]
pub fn echo_index(index: u64) -> u64 {
    index
}

#[crate::task(memory = 128)]
pub fn answer() -> u32 {
    42
}

#[crate::task(memory = 128)]
pub fn fail(message: String) -> Result<u32, String> {
    Err(message)
}

/// Every task in this module, in declaration order.
pub fn task_set(defaults: FunctionConfig) -> TaskSet {
    TaskSet::new(defaults)
        .with::<PiSlice>()
        .with::<PiSamples>()
        .with::<QueensCount>()
        .with::<Noop>()
        .with::<EchoIndex>()
        .with::<Answer>()
        .with::<Fail>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::Task;

    #[test]
    fn bodies_run_locally() {
        assert_eq!(Answer::new().run().unwrap(), 42);
        assert_eq!(EchoIndex::new(7).run().unwrap(), 7);
        assert_eq!(QueensCount::new(8, vec![]).run().unwrap(), 92);
        assert_eq!(Fail::new("boom".into()).run().unwrap_err().message, "boom");
        assert_eq!(PiSlice::new(1000, 10, 3).run().unwrap(), super::super::pi_estimate(100, 3));
    }

    #[test]
    fn names_are_distinct_and_stable() {
        let set = task_set(FunctionConfig::default());
        let registry = set.registry().unwrap();
        assert_eq!(registry.len(), 7);
        let id = PiSlice::identifier();
        assert_eq!(id.human_id, format!("{}@{}:{}#0", PiSlice::site().source_file, PiSlice::site().line, PiSlice::site().column));
        assert_eq!(id.cloud_name.len(), 48);
        assert_eq!(PiSlice::site().config.memory, Some(1769));
    }
}
