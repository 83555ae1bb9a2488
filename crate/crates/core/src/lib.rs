//! Integrability objects of quantum-loop-algebra vertex models and the
//! functional identities between them, evaluated numerically.

pub mod cartan;
pub mod checks;
pub mod lattice;
pub mod error;
pub mod linalg;
pub mod rep;
pub mod rmatrix;
pub mod rqkz;
pub mod tensor;

pub use cartan::{build_cartan, Algebra, CartanData, Rational};
pub use error::{Error, Result};
pub use linalg::{CMat, C64};
pub use rep::{evaluation_rep, DualVariant, Generator, RepId, Representation, Tag};
pub use tensor::{permutation_operator, Dir, Leg, Tensor};
pub use rmatrix::{check_ybe, normalize_pair, solve_intertwiner, RFamily, ROperator};
pub use lattice::{DensityState, LatticeConfig, SpectralData, Vertical};
pub use rqkz::{apply_a_n, apply_b_n, lift_operator, verify_first_equation, verify_full_equation, verify_second_equation};
