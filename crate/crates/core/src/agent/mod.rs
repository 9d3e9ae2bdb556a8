//! Soft Actor-Critic built on a small reverse-mode autodiff tape.

pub mod adam;
pub mod autodiff;
pub mod checkpoint;
pub mod mlp;
pub mod policy;
pub mod replay;
pub mod sac;
pub mod toy;
pub mod train;

pub use checkpoint::PolicyCheckpoint;
pub use mlp::Mlp;
pub use policy::GaussianPolicy;
pub use replay::{Batch, ReplayBuffer, Transition};
pub use sac::{SacAgent, SacConfig, UpdateDiagnostics};
pub use toy::TrackingEnv;
pub use train::{train, EnvStep, Environment, TrainingLog};
