//! Szegő kernel, Carathéodory and Szegő metrics, their curvatures and
//! geodesics on planar annuli.
//!
//! Curvature conventions use `Δ = 4∂∂̄`, so both metrics on the unit disc
//! have curvature `-4`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elliptic;
pub mod error;
pub mod geodesics;
pub mod hardy;
pub mod jets;
pub mod metrics;
pub mod ode;
pub mod report;
pub mod selftest;
pub mod summation;
pub mod variation;

pub use elliptic::EllipticContext;
pub use error::{Error, Result};
