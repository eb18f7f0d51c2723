//! Weighted fractional maximal operators on the upper half-plane: dyadic
//! machinery, exact and adaptive quadrature, Orlicz tools, weight-class
//! constants and a verification harness.

pub mod constants;
pub mod error;
pub mod field;
pub mod geometry;
pub mod lab;
pub mod operators;
pub mod orlicz;
pub mod quadrature;

pub use error::{Error, Result};
pub use field::ScalarField;
pub use geometry::{DyadicInterval, Interval, Point, Rect, ScaleWindow, Shift};
pub use quadrature::{BorelMeasure, Estimate, QuadratureSpec};
