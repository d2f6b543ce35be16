//! Decoders and the generation pipelines built on them.

mod beam;
mod grid;
mod pipeline;

pub use beam::{beam_search, BeamConfig, Hypothesis};
pub use grid::{grid_beam_search, GbsResult};
pub use pipeline::{autotemplate_generate, direct_beam_generate, gbs_generate, generate, Diagnostics, Generation, System};
