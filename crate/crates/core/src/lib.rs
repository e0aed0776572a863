//! Executable Bass-Serre theory for a family of concrete groups.
//!
//! The crate builds graphs of groups, computes normal forms in their
//! fundamental groups, constructs finite balls of the associated
//! Bass-Serre trees, classifies elements as elliptic or hyperbolic with
//! certificates, verifies `(k,C)`-acylindricity, folds trees by
//! equivariant families of subgroups, and checks the sufficient
//! conditions under which quotient actions stay non-elementary
//! acylindrical or an action is the largest acylindrical one.
//!
//! The `outbs` module instantiates all of this for the outer automorphism
//! groups of Baumslag-Solitar groups `BS(p, q)` with `p` properly
//! dividing `q`, in both their ray and edge graph-of-groups structures.
//!
//! Everything is exact integer arithmetic; all values are immutable after
//! construction and all operations are pure, so concurrent use is safe.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod acyl;
pub mod error;
pub mod gog;
pub mod groups;
pub mod largest;
pub mod outbs;
pub mod quotient;
pub mod tree;

pub use error::Error;
pub use gog::{GogWord, Graph, GraphOfGroups, PathNormalForm};
pub use groups::{Group, GroupElement, GroupKind, Subgroup};
