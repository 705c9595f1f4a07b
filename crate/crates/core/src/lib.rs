//! Discrete Čech-de Rham complexes on overlapping covers of simplicial meshes.
//!
//! The total complex `A^k = ⊕_{p+q=k} A^{p,q}` is assembled from lowest-order
//! cochains on the sub-meshes of every nonempty cover intersection, with the
//! total differential `D^k = d + (-1)^k δ`, weighted mass matrices, and the
//! codifferentials and Hodge-Laplacians they induce.

pub mod complex;
pub mod cover;
pub mod error;
pub mod evolution;
pub mod hodge;
pub mod linalg;
pub mod mesh;
pub mod models;
pub mod par;

pub use error::{Error, Result};
