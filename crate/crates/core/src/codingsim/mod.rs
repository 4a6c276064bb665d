//! Random coding at desk scale: codebooks, typical projectors, square-root decoding,
//! covertness metrics and the inequality harness.

pub mod codebook;
pub mod decoder;
pub mod experiments;
pub mod lemmas;
pub mod typical;

pub use codebook::{
    encode_b_state, encode_e_state, encode_joint_state, generate_codebook, message_count, warden_state, Codebook,
    SimParams, DEFAULT_DIM_CAP,
};
pub use decoder::{build_srm_decoder, exact_error, srm_from_operators, DecoderPovm};
pub use experiments::{
    covertness_report, packing_bound, packing_experiment, resolvability_bound, resolvability_experiment, simulate,
    CodebookOutcome, CovertnessReport, PackingBound, ResolvabilityBound, SimMode, SimReport,
};
pub use lemmas::{lemma_checks, LemmaCheck, LemmaReport};
pub use typical::{cond_typical_projector, cond_typical_projector_raw, typical_projector, Conditioning, TypicalContext};
