//! Trellis-coded power-domain non-orthogonal multiple access (NOMA).
//!
//! Two trellis-coded 8-PSK streams are superimposed with unequal powers and
//! recovered either jointly — by maximum-likelihood sequence detection on the
//! tensor product of the two trellises — or separately via successive
//! interference cancellation. The crate provides:
//!
//! * [`trellis`] — trellis codes with parallel transitions, encoding, and a
//!   plain-text exchange format;
//! * [`constellation`] — unit-energy PSK alphabets;
//! * [`product`] — the tensor-product trellis of the superposition and
//!   detection-complexity estimates;
//! * [`freedist`] — free-distance analysis, closed form and by search;
//! * [`powalloc`] — the distance-optimal power split;
//! * [`detect`] — Viterbi, joint, SIC, and uncoded ML detectors;
//! * [`sim`] — reproducible Monte-Carlo BER simulation of the five
//!   transmission schemes.

pub mod constellation;
pub mod detect;
pub mod error;
pub mod freedist;
pub mod powalloc;
pub mod product;
pub mod sim;
pub mod trellis;

pub use constellation::{psk8_point, Constellation};
pub use detect::{
    detect_user2_direct, joint_detect, qpsk_gray_modulate, sic_detect_user1, uncoded_ml_detect,
    viterbi, DetectionResult, LabeledTrellis, ReceivedFrame, ViterbiPath, ViterbiTrellis,
};
pub use error::{Error, Result};
pub use freedist::{
    diverge_merge_distance_sq, free_distance_search, free_distance_sq, parallel_distance_sq,
    DistanceReport, MergeEvent, MinEvent, ParallelEvent, SearchReport,
};
pub use powalloc::{optimal_power_ratio, optimal_powers, optimal_powers_grid, DistanceEval,
    PowerSolution};
pub use product::{
    complexity_estimate, tensor_product, ComplexityEstimate, PowerPair, ProductBranch,
    ProductTrellis,
};
pub use sim::{
    apply_channel, ber_csv, noise_var_for_snr_db, run_ber, transmit, transmit_tcma, BerRecord,
    ChannelParams, Scheme, SchemeConfig, SimParams, TransmitFrame, BER_CSV_HEADER,
};
pub use trellis::{encode, encode_with_tail, Branch, Encoded, InfoFrame, Trellis};
