#![no_std]
//! Analog (continuous-variable) triple-modular-redundancy error correction on
//! cyclic position/momentum grids.

extern crate alloc;

pub mod classical;
pub mod codes;
pub mod correction;
pub mod density;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod noise;
pub mod operators;
pub mod protocol;
pub mod rng;
pub mod state;
mod tensor;

pub use density::DensityState;
pub use error::{Error, Result};
pub use grid::{make_grid, ModeGrid};
pub use state::{
    detach_ancilla, dft_mode, fidelity, gaussian_state, momentum_eigenstate, position_eigenstate, reduced_density,
    tensor, Direction, ModeId, PureState,
};
