pub mod algebra;
mod chirp;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod io;
mod par;
pub mod phase;
pub mod positivity;
pub mod semigroup;
pub mod transforms;
pub mod verify;

pub use error::{Checked, Error, Result, Warning};
pub use par::is_parallel;
