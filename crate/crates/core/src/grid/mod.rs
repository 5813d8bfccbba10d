//! Degeneracy profiles, their classification, graded meshes and the weight
//! functions `W`, `W~`.

mod mesh;
mod profile;
mod weights;

pub use mesh::Mesh;
pub use profile::{classify, DegeneracyClass, DegeneracyProfile, Integrability, ProfileKind, PROBE_LEVELS};
pub use weights::{eval_w, eval_w_tilde, hs_norm_k, w_l1_norm, QUAD_TOL, W_L1_AGREEMENT};

pub(crate) use profile::power_integral;
