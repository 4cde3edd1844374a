//! Randomized approximations of barrier Hessians.

pub mod hadamard;
mod leverage;
mod subsample;
mod tensor;

pub use leverage::{approx_leverage, approx_leverage_with, LeverageSketch};
pub use subsample::{
    multinomial_counts, sampled_gram, subsample_hessian, subsample_lee_sidford_hessian, SketchSpec,
};
pub use tensor::{
    sketched_hessian_with, sketched_sdp_hessian, tensor_sketch_rows, SampledEntry, TensorSRHTSketch,
    MAX_MATERIALIZED_ROWS,
};
