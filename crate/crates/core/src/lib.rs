pub mod error;
pub mod factor;
pub mod gls;
pub mod harness;
pub mod krylov;
pub mod lse;
pub mod precision;
pub mod refine;

pub use error::{Error, Result};
