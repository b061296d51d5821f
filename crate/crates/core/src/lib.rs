//! Two-scale toolkit for Stokes flow in thin layers perforated by periodic
//! vertical cylinders with slip (Robin) walls.
//!
//! The fine problem is posed on the rescaled layer `omega_eps x (0,1)` where
//! every vertical derivative carries a factor `1/eps`.

pub mod discretization;
pub mod geometry;
pub mod homogenization;
pub mod stokes;
pub mod unfolding;
