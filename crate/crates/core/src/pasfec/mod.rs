//! Coded pipeline for probabilistic amplitude shaping: constant-composition
//! matching, reverse-concatenated frame assembly, bitwise LLR demapping,
//! sum-product LDPC decoding and Monte-Carlo error rates.

pub mod ccdm;
pub mod ldpc;
pub mod llr;
pub mod pas;
pub mod sim;

pub use ccdm::{ccdm_decode, ccdm_encode, composition_for, Composition};
pub use ldpc::{bp_decode, BpOutcome, ParityCheck, SystematicEncoder};
pub use llr::{llr_compute, LlrDemapper, LlrTerms, LLR_SATURATION};
pub use pas::{amplitude_sign_split, pas_assemble, CodedModulation, Frame, Signaling};
pub use sim::{monte_carlo, sim_csv, SimConfig, SimRow, StopRule, SIM_CSV_HEADER};
