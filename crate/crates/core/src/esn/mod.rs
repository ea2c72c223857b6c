//! Echo-state network with a squared-odd readout transform and a ridge readout.
//!
//! Reservoir update and prediction:
//!
//! ```text
//! r(t+Δt) = tanh(A r(t) + W_in X(t))
//! X(t+Δt) = W_out r̃(t+Δt),   r̃_j = r_j² for odd j (1-based), r_j otherwise
//! ```
//!
//! `W_in` is `D×N` with entries uniform in `[-β₁, β₁]`; `A` is sparse `D×D`,
//! rescaled so its spectral radius is exactly `β₂`; `W_out` is `N×D`.

mod config;
mod drive;
pub mod io;
mod model;
pub mod ridge;
pub mod sparse;
pub mod spectral;
mod transfer;

pub use config::EsnConfig;
pub use drive::{NormalEquations, StateMatrixPair};
pub use model::{readout_transform, readout_transform_into, EsnModel, RadiusMethod};
pub use ridge::{min_norm_readout, ridge_shift, train, transfer_correction};
pub use sparse::CsrMatrix;
pub use transfer::TransferRate;
