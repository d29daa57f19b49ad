//! Asymptotic entanglement transformation between pure states.
//!
//! Bipartite pure states are described by their Schmidt spectra. This crate
//! evaluates the spectral points `f_α`, the optimal conversion rate under a
//! converse error exponent, finite-copy majorization oracles, method-of-types
//! helpers, and a simulator for finite LOCC protocols.
//!
//! Logarithms are base 2 throughout. Parties are indexed from 0.

pub mod error;
pub mod linalg;
pub mod locc;
pub mod majorization;
pub mod optimize;
pub mod random;
pub mod rate;
pub mod spectra;
pub mod spectral;
pub mod state;
pub mod type_classes;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use locc::{
    apply_protocol, apply_step, ghz_state, lift_direct_sum, to_normal_form, validate_step, LoccStep,
    MixedState, Protocol, ProtocolOutput,
};
pub use majorization::{
    exact_multi_copy_check, majorizes, max_extractable_copies, nielsen_convertible,
    optimal_conversion_probability, product_power, truncate, TruncationReport,
};
pub use rate::{
    concentration_rate, converse_rate, deterministic_rate, multipartite_upper_bound, rate_curve,
    RateQuery, RateResult,
};
pub use spectra::{power_sum, relative_entropy, renyi_entropy, shannon_entropy, WeightVector};
pub use spectral::{
    check_general_split, check_projection_split, check_trace_inequality, eval_f_alpha,
    eval_f_alpha_conditional, schmidt_spectrum, SpectralPoint, SplitCheck,
};
pub use state::{ConditionallyPure, PureState};
pub use type_classes::{check_type_class_bound, closest_type, enumerate_types, type_class_size, NType};
