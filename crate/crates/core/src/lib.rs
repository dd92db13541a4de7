pub mod analysis;
pub mod conversation;
pub mod error;
pub mod evalir;
pub mod interface;
pub mod reformulate;
pub mod relevance;
pub mod retrieval;
pub mod textproc;

pub use error::{Error, Result};
