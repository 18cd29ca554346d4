pub mod cli;
pub mod collapse;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod interaction;
pub mod linalg;
pub mod lmg;
pub mod pipeline;
pub mod special;
pub mod spinwave;
pub mod stats;

pub use error::{Error, Result};
