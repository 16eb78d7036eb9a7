//! Exact construction and verification of A∞-structures obtained by homotopy
//! transfer and by homotopy module-induction on finite-dimensional complexes.

pub mod analysis;
pub mod exactlin;
pub mod exprcalc;
pub mod homotopydata;
pub mod instances;
pub mod multimap;
pub mod towers;

pub use exactlin::{GradedMap, GradedSpace, Scalar, SparseVec};
pub use homotopydata::HomotopyData;
pub use multimap::MultiMap;
pub use towers::AInftyTower;
