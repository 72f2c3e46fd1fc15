//! Band-limited fields on the torus and on periodic cells approximating `R^d`.

mod fft;
mod field;
mod grid;
mod profile;

pub use fft::{fft_nd, Transform};
pub use field::{abs_pow, lp_pow_of_samples, SpectralField};
pub use grid::{default_resolution, Freq, GridSpec, Lattice, ModeTable, MAX_GRID_POINTS};
pub use profile::{
    check_class_a, periodize_rescale, BoxProfile, BumpProfile, GaussianProfile, NotchedProfile,
    Profile,
};
