#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constraints;
pub mod discretize;
pub mod error;
pub mod instances;
pub mod lp;
pub mod oracle;
pub mod path;
pub mod reach;
pub mod solver;
pub mod study;
