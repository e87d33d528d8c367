pub mod config;
pub mod covering;
pub mod error;
pub mod growth;
pub mod harness;
pub mod lemmas;
pub mod local_entropy;
pub mod lp;
pub mod metrics;
pub mod packing;
pub mod pairwise;
pub mod rng;
pub mod systems;
pub mod weighted;

pub use error::{Error, Result};
pub use rng::SeedStreams;
pub use systems::{make_system, OrbitSegment, SamplerKind, StatePoint, SystemKind, SystemSpec};
