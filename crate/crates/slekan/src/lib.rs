pub mod calibrate;
pub mod cli;
pub mod error;
pub mod hybrid;
pub mod io;
pub mod sle;
pub mod spline;
pub mod train;

pub use error::{Result, SlekanError};
