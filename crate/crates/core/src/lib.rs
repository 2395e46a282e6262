//! Hermitian representation densities, GU(1,2) intersection numbers of
//! special cycles, and the brute-force oracles used to cross-check them.

pub mod density;
pub mod exactpoly;
pub mod intersect;
pub mod localgeom;
pub mod oracle;
pub mod padic;

pub use exactpoly::{LaurentPoly, PolyError, Rational};
pub use intersect::{CaseFormula, DivisorPattern, ValuationTriple};
pub use localgeom::{CycleDescriptor, DivisorLedger, Placement, TreeWindow};
pub use oracle::{CountResult, NormTable};
pub use padic::{ExponentVector, ExtMatrix, ExtRingElem, HermMatrix, RingParams};
