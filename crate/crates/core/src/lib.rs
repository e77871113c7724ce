//! Means on metric spaces and the homotopies they induce.
//!
//! A contractive binary quasi-mean `p` with basepoint `θ` yields a dyadic
//! contraction `φ(x, t)` that is Hölder in `t`; averaging over a finite group
//! with an anonymous, equivariant mean makes any homotopy equivariant.
//!
//! ```
//! use equimean::dyadics::Dyadic;
//! use equimean::homotopy::ContractionBuilder;
//! use equimean::means::QuasiMeanMap;
//! use equimean::spaces::{MetricSpace, Point};
//!
//! let p = QuasiMeanMap::geometric(MetricSpace::interval(1.0, 4.0)?, 2)?;
//! let phi = ContractionBuilder::new(p, 2.0 / 3.0, Point::from(4.0))?;
//! let mid = phi.phi_at_dyadic(&Point::from(1.0), Dyadic::new(1, 1)?)?;
//! assert!((mid.coords()[0] - 2.0).abs() < 1e-12);
//! # Ok::<(), equimean::Error>(())
//! ```
//!
//! The guide in `book/` walks through each module.

pub mod dyadics;
pub mod error;
pub mod groups;
pub mod homotopy;
pub mod means;
pub mod rng;
pub mod spaces;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/intro.md")]
pub mod book_intro {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/spaces.md")]
pub mod book_spaces {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/groups.md")]
pub mod book_groups {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/means.md")]
pub mod book_means {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/dyadics.md")]
pub mod book_dyadics {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/homotopy.md")]
pub mod book_homotopy {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod book_cli {}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
pub mod readme {}
