//! Exact computation of automorphism groups of orbifold vertex operator
//! algebras built from coinvariant sublattices of the Leech lattice.
//!
//! The crate is layered: [`exactmat`] supplies exact integer/rational
//! linear algebra, [`lattice`] and [`shortvec`] handle positive-definite
//! lattices and their short vectors, [`isogroup`] computes isometry groups,
//! centralizers and normalizers, [`fqspace`] models quadratic spaces over
//! prime fields, [`leech`] builds the Golay code, the Leech lattice and
//! conjugacy class representatives of its isometry group, and [`orbifold`]
//! assembles the group-order derivations.

pub mod error;
pub mod exactmat;
pub mod fqspace;
pub mod isogroup;
pub mod lattice;
pub mod leech;
pub mod orbifold;
pub mod shortvec;

pub use error::{Error, Result};
pub use exactmat::{IntMatrix, RatMatrix};
