//! The point sets under study: cut-and-project model sets, substitution
//! tilings and their products, plus the integer lattice as a control.

mod cut_project;
mod product;
mod source;
mod substitution;

pub use cut_project::{cut_and_project, fibonacci_scheme, CutProjectScheme, WindowBoundary};
pub use product::{product_set, ProductSource};
pub use source::{integer_patch, IntegerLattice, PointSource};
pub use substitution::{
    aba_aaaa_rule, fibonacci_rule, pf_lengths, substitute, substitution_word, SubstitutionRule,
};

/// The golden mean `(1 + √5)/2`.
pub const TAU: f64 = 1.618_033_988_749_895;
