//! Hat-monotile tilings, discrete elastic network models on circular
//! domains cut from them, and homogenization of their effective stiffness.

pub mod beam;
pub mod domain;
pub mod experiment;
pub mod homogenize;
pub mod lattice;
pub mod solver;
pub mod spring;
pub mod system;
pub mod tiling;
