#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::inconsistent_digit_grouping, clippy::excessive_precision)]

pub mod baseline;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod mechanism;
pub mod models;
pub mod pf;
pub mod resample;
pub mod rng;
pub mod special;
