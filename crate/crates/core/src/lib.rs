//! Constructive comment classification.

pub mod agreement;
pub mod analysis;
pub mod cnn;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod features;
pub mod linear;
pub mod synthetic;

pub use error::{Error, Result};
