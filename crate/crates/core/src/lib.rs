//! Generalized Benders decomposition with learned initialization.

pub mod lp;
pub mod gbd;
pub mod cstr;
pub mod surrogate;
pub mod active;
pub mod policy;
pub mod bench;
