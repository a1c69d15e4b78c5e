// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod initial_data;
pub mod io;
pub mod lump;
pub mod spectral;
pub mod timestepper;
