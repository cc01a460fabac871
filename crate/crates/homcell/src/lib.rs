//! Computation of fixed-point indices, invariant manifolds and
//! homoclinic cells for orientation-preserving planar and sphere maps.
//!
//! The crate locates and classifies fixed and periodic points, computes
//! the fixed-point index as a certified winding number, grows
//! stable/unstable manifold branches at saddles, assembles simple
//! homoclinic loops into cells, and checks the resulting block-index
//! predictions (`rho` of a cell, sphere component indices, Lefschetz
//! counting bounds) numerically on concrete maps.
//!
//! ```
//! use homcell::map_model::builtin_map;
//! use homcell::geom::Point;
//! use std::collections::BTreeMap;
//!
//! let params = BTreeMap::from([("lambda".to_string(), 0.5), ("mu".to_string(), 2.0)]);
//! let saddle = builtin_map("linear_saddle", &params).unwrap();
//! assert_eq!(saddle.eval(Point::new(1.0, 1.0)).unwrap(), Point::new(0.5, 2.0));
//! ```

pub mod error;
pub mod expr;
pub mod geom;
pub mod ode;

pub mod map_model;

pub mod fixed_points;
pub mod index;
pub mod manifolds;

pub mod homoclinic;
pub mod periodic_cell;
pub mod sphere;

pub mod cli;
pub mod report;

pub use error::{Error, Result};
