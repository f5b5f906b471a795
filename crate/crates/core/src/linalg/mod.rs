//! Unimodular matrices and their Cartan (singular value) decomposition.

mod element;
mod matrix;
mod svd;

pub use element::{cartan, cartan_with, CartanDecomposition, GroupElement};
pub use matrix::Matrix;
pub use svd::{singular_values, smallest_singular_value, spectral_norm, svd, Svd};

pub(crate) use matrix::orthonormalize;
