pub mod algebra;
pub mod continuation;
pub mod duffing;
pub mod error;
pub mod exec;
pub mod galerkin;
pub mod interaction;
pub mod lindstedt;
pub mod pade;
pub mod reducible;

pub use error::{Error, Result};
pub use exec::Exec;
