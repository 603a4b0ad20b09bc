pub mod ergodic;
pub mod error;
pub mod experiments;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod trajectories;
pub mod values;

pub use error::{Error, Result};
