//! Numerical building blocks shared by the analytic modules.

pub mod poly;
pub mod quad;
pub mod series;
pub mod special;

pub use num_complex::Complex64 as C64;
