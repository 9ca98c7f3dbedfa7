//! Decision-dependent games: dimensions, strategy sets, distribution maps,
//! losses, and the gradient maps built from them.

pub mod constants;
pub mod dims;
pub mod family;
pub mod feasible;
pub mod instance;
pub mod loss;
pub mod spec;

pub use constants::{compute_constants, GameConstants};
pub use dims::{BlockVector, GameDims};
pub use family::{BaseDistribution, LocationFamily, PlayerFamily};
pub use feasible::{FeasibleSet, SetDescriptor};
pub use instance::GameInstance;
pub use loss::{FeatureModel, LossModel, Sample};
pub use spec::GameSpec;
