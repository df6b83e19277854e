pub mod cli;
pub mod convergence;
pub mod error;
pub mod odemodel;
pub mod laurent;
pub mod painleve;
pub mod scalar;
pub mod series;
pub mod subequation;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use series::PuiseuxSeries;
