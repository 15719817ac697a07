//! Method of types, simplex integrals and random-coding simulations.

pub mod dist;
pub mod error;
pub mod experiment;
pub mod info;
pub mod oracle;
pub mod polytope;
pub mod saddle;
pub mod sim;
pub mod theorems;
pub mod types;

pub use error::{Error, Result};
