#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antenna;
pub mod constraints;
pub mod error;
pub mod ground_set;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod par;
pub mod rank;
pub mod scheduler;
pub mod utility;

pub use error::{Error, Result};
