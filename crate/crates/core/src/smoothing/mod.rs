//! Smooth min- and max-entropies via spectral truncation.

mod conditional;
mod product;
mod spectrum;
mod typeclass;

pub use conditional::{
    chain_rule_witness, smooth_hmin_conditional_bounds, truncated_state, ChainWitness, ConditionalBounds,
};
pub use product::{product_conditional_rates, ProductRates, MAX_PAIRS};
pub use spectrum::{
    brute_force_smooth, smooth_h0, smooth_hmin_unconditional, truncate_spectrum, Direction, SmoothMeasure, Spectrum,
    TruncationResult, SNAP,
};
pub use typeclass::{
    fannes_limit_terms, fannes_terms_of_classes, log2_big, smooth_entropy_iid, smooth_entropy_of_classes,
    tensor_power_spectrum, FannesTerms, TypeClass, TypeClassSpectrum, MAX_CLASSES,
};
