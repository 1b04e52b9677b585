//! Classical random fields on `C^n`, their covariance operators, and the
//! quantum states and detection statistics those covariances induce.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for `f32`
//! and `f64`). The aliases at the bottom fix the scalar to `f64`, with `*32`
//! variants for single precision.

// `!(x > y)` is used on purpose so NaN lands on the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detect;
pub mod error;
pub mod fieldsim;
pub mod linops;
pub mod onticmap;
pub mod rng;
pub mod scalar;
pub mod superpos;

pub use error::{Error, Result};
pub use scalar::Real;

pub use detect::{
    ensemble_detection_probs, g2_zero, mean_step_energy, run_threshold_trials, threshold_sweep,
    write_sweep_csv, DetectionStats, DetectorConfig, SweepPoint,
};
pub use fieldsim::{
    energy_along, energy_density, ensemble_stats, sample_gaussian_field, sample_pure_field,
    total_energy, Coupling, EnsembleStats, FieldEnsemble, FieldSpec,
};
pub use linops::{
    frobenius_distance, hermitian_eig, is_density, make_projector, psd_sqrt, Basis, ComplexMatrix,
    DensityState, HermitianOperator, StateVector,
};
pub use onticmap::{born_probabilities, equivalent, from_epistemic, to_epistemic, EpistemicImage};
pub use superpos::{
    correlation_matrix, decohere, rank_one_check, superpose_fields, superpose_max_correlated,
    ComponentSignals, CorrelationMatrix, RankOne, SuperpositionSpec,
};

pub type Vector = StateVector<f64>;
pub type Operator = HermitianOperator<f64>;
pub type Matrix = ComplexMatrix<f64>;
pub type Density = DensityState<f64>;
pub type Ensemble = FieldEnsemble<f64>;
pub type Spec = FieldSpec<f64>;
pub type Superposition = SuperpositionSpec<f64>;
pub type Detector = DetectorConfig<f64>;

pub type Vector32 = StateVector<f32>;
pub type Operator32 = HermitianOperator<f32>;
pub type Matrix32 = ComplexMatrix<f32>;
pub type Density32 = DensityState<f32>;
pub type Ensemble32 = FieldEnsemble<f32>;
pub type Spec32 = FieldSpec<f32>;
pub type Superposition32 = SuperpositionSpec<f32>;
pub type Detector32 = DetectorConfig<f32>;
