//! Exterior powers of `R^{d+1}`, unimodular lattices and height functions on the space of lattices.

mod action;
mod height;
pub mod integer;
mod lattice;
mod vector;

pub use action::{apply_diagonal, apply_unipotent, diagonal_weight, g_matrix, u_matrix, wedge_action, wedge_matrix};
pub use height::{isolation_profile, margulis_height, HeightParams, HeightValue, IsolationLevel, IsolationReport};
pub use lattice::{exterior_op_norm, lll, phi_ell, set_norm, Lattice, PhiResult, Subgroup};
pub use vector::{exterior_basis, ExteriorVector};
