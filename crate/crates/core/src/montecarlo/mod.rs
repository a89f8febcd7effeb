//! Sample-level prepare-and-measure simulation of the single-quadrature
//! protocol with a drifting homodyne frame.
//!
//! Randomness: one root seed feeds a ChaCha8 generator whose independent
//! streams are assigned by role (drift, block selection) and by block index,
//! so results do not depend on evaluation order or thread count.

mod drift;
mod estimate;
mod run;
mod simulate;

pub use drift::{drift_sequence, wrap_angle, DriftModel};
pub use estimate::{
    empirical_key_rate, estimate_parameters, EmpiricalKeyRate, EstimationResult, TransmittanceEstimator,
};
pub use run::{run, run_with_samples, write_samples_csv, BlockSummary, RunConfig, RunReport, Verdict};
pub use simulate::{apply_ir_attack, reconcile, simulate_block, ResentPulses, SampleBlock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default pulses per constant-angle block.
pub const DEFAULT_BLOCK_SIZE: usize = 10_000;

/// Excess-noise level above which a run is declared attacked, SNU.
pub const DEFAULT_DETECTION_THRESHOLD: f64 = 0.1;

pub(crate) const DRIFT_STREAM: u64 = 0;
pub(crate) const SELECTION_STREAM: u64 = 1;
const FIRST_BLOCK_STREAM: u64 = 16;

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Independent generator for block `index` under root `seed`.
pub fn block_stream(seed: u64, index: usize) -> ChaCha8Rng {
    stream(seed, FIRST_BLOCK_STREAM + index as u64)
}
