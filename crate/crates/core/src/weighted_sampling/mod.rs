//! O(1) categorical sampling for adaptive proposals.
//!
//! [`AliasTable`] is Walker's alias method with Vose's construction,
//! [`carpenter_sample`] draws many values from one categorical in a single
//! sorted pass, and [`SelectionWeights`] holds the per-position add/delete
//! weights of the adaptive sampler, optionally split into an alias-sampled
//! active group and a flat-weight inactive group.

mod alias;
mod carpenter;
mod selection;

pub use alias::{build_alias, AliasTable};
pub use carpenter::{carpenter_sample, carpenter_sample_probs};
pub use selection::{
    sample_add_position, sample_delete_position, Proposal, SelectionWeights, WeightSettings,
};
