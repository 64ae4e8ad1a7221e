//! Exact cubes, lattices and linear maps.

mod clip;
mod cube;
mod lattice;
mod linear;
mod rational;

pub use clip::{clipped_area, cube_image_intersection_volume};
pub use cube::Cube;
pub use lattice::{
    audit_shifted_lattices, containing_triple, make_shifted_lattices, DyadicLattice, LatticeAudit,
    LatticeKind,
};
pub use linear::{check_hypothesis_h, HypothesisCheck, LinearMap};
pub use rational::DyadicRational;
