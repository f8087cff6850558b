pub mod analysis;
pub mod cli;
pub mod error;
pub mod geometric;
pub mod linalg;
pub mod partition;
pub mod ppt;
pub mod product;
pub mod tolerance;
pub mod uom;

pub use error::{Error, Result};
pub use tolerance::Tolerances;
