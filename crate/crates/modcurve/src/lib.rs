//! Certified maps from modular curves to rank-0 elliptic curves over ℚ, and the rational
//! points they pull back.

pub mod exactmath;
pub mod mpc;
pub mod qexp;
pub mod sl2z;
pub mod bundle;
pub mod elliptic;
pub mod hecke;
pub mod periods;
pub mod mapbuild;
pub mod ratpoints;
pub mod pipeline;
