//! Meyer sets, their linear deformations, and numerical checks that untied
//! deformations keep the Meyer property and pure point diffraction.
//!
//! Points live in a finitely generated group `[M] ≃ ℤ^k` and are stored by
//! their exact integer coordinates; real positions are derived through an
//! [`Embedding`].

pub mod deformation;
pub mod diffraction;
pub mod error;
pub mod generators;
pub mod group;
pub mod index;
pub mod meyer;
pub mod numeric;

pub use error::{Error, Result};
pub use group::{
    difference_set, embed, span_rank, BoxWindow, Embedding, ModulePoint, PointPatch,
};
