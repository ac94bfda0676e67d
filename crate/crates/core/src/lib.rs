//! Two-polariton Coulomb bound states in a Rydberg EIT medium.

pub mod error;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod propagator;
pub mod relsolver;
pub mod wavepacket;
pub mod wkb;

pub use error::{Error, Result};
pub use model::{DimensionlessGroups, EffectiveProblem, NormalizedPoint, PolaritonParams, Reduced};
