//! Localization from the curvature of the wavefront impinging on a single
//! receiving aperture.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod estimation;
pub mod frontend;
pub mod geometry;
pub mod harness;
pub mod interference;
pub mod quadrature;

pub use channel::{LinkBudget, Snapshot};
pub use error::{Error, Result};
pub use frontend::{Frontend, RLensProfile};
pub use geometry::{ApertureSpec, Architecture, ArrayLayout, SourcePosition, SurfacePoint};
pub use quadrature::QuadratureGrid;
