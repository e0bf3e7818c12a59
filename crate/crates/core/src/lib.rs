//! Model checking and proof checking for modal logics read over topological
//! spaces: finite Kripke frames, finite (Alexandrov) spaces, and symbolic
//! definable subsets of Baire and Cantor space.

pub mod alexandrov;
pub mod foltrans;
pub mod formula;
pub mod hilbert;
pub mod kripke;
pub mod realize;
pub mod region;
pub mod sample;

pub use formula::{classify, parse, rewrite_eliminate, Formula, FormulaError, Fragment, RewriteRule};
