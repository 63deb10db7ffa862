//! Steady-state occupations, noise-flow statistics and parameter sweeps for
//! two bosonic modes with local and shared thermal baths.

pub mod cascaded;
pub mod fcs;
pub mod linalg;
pub mod optomech;
pub mod sweep;
pub mod thermal;
