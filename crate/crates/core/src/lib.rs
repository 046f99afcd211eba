pub mod ci;
pub mod error;
pub mod harness;
pub mod json;
pub mod linalg;
pub mod qcqp;
pub mod radar;
pub mod robust;
pub mod scene;
pub mod units;

pub use error::{Error, Result};
