//! Bi-infinite ordered Bratteli diagrams, their weights, flat surfaces and
//! renormalization, and a unique-ergodicity certifier.

pub mod bundle;
pub mod certify;
pub mod components;
pub mod cone;
pub mod diagram;
pub mod error;
pub mod examples;
pub mod matrix;
pub mod orders;
pub mod paths;
pub mod random;
pub mod renorm;
pub mod scalar;
pub mod source;
pub mod stacks;
pub mod surface;
pub mod weights;

pub use diagram::BiInfiniteDiagram;
pub use error::{Error, Result};
pub use matrix::TransitionMatrix;
pub use scalar::{Scalar, Q};
pub use source::{MatrixSource, Side, TailPolicy};
