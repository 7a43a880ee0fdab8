//! Block-multilinear forms, matrix-valued witnesses for their completely
//! bounded norm, free-group moment combinatorics and the quantum-query
//! simulation built on them.

pub mod error;
pub mod forms;
pub mod matnum;
pub mod ncpoly;
pub mod freecomb;
pub mod quantum;
pub mod simulate;
pub mod witness;

pub use error::{Error, Result};
pub use forms::{BlockMultilinearForm, CubePoint, MaxInfluence, Monomial, Restriction, Variable};
pub use matnum::{Seed, SquareMatrix, C64};
