pub mod cocycle;
pub mod dfao;
pub mod dynamics;
pub mod error;
pub mod oracles;
pub mod poly;
pub mod residue;
pub mod substitution;
pub mod tower;

pub use dfao::{Dfao, Output, Reading};
pub use error::{Error, Result};
pub use poly::{BivarPoly, IntPoly, RationalBivar};
pub use residue::{DigitString, Modulus, Residue, TruncatedPadic};
pub use substitution::{IncidenceMatrix, Substitution};
pub use tower::{build_tower, SequenceSpec, Tower};
