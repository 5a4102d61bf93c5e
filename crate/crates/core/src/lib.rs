//! Law of the negative Wiener-Hopf factor for Levy processes whose positive
//! jumps have a rational Laplace transform.

pub mod config;
pub mod density;
pub mod error;
pub mod laplace;
pub mod lundberg;
pub mod model;
pub mod numeric;
pub mod simulate;
pub mod tail;
pub mod verify;
pub mod wh;

pub use error::{Error, Result};
pub use model::{classify_case, mean_x1, psi_x, validate_model, CaseLabel, LevyModel};
pub use numeric::C64;
