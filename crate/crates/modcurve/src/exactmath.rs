//! Exact arithmetic: rationals, cyclotomic fields, homogeneous polynomials, linear algebra,
//! modular utilities and rational reconstruction.

pub mod cyclo;
pub mod lattice;
pub mod matrix;
pub mod modp;
pub mod poly;
pub mod rational;
pub mod reconstruct;

pub use cyclo::{cyclo_mul, field, galois_twist, CycloField, CyclotomicNumber};
pub use matrix::RatMatrix;
pub use poly::HomogPoly;
pub use rational::{format_rat, parse_rat, Rat};
pub use reconstruct::rational_reconstruct;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MathError {
    #[error("cyclotomic level mismatch: {0} vs {1}")]
    LevelMismatch(u32, u32),
    #[error("twist exponent {0} is not coprime to level {1}")]
    NotCoprime(i64, u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse rational {0:?}")]
    Parse(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("polynomial is not homogeneous: {0}")]
    NotHomogeneous(String),
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("linear system has no unique solution")]
    Singular,
}
