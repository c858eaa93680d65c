//! Few-shot glyph synthesis with a variational grid setting network.
//!
//! The crate is self-contained: tensors and reverse-mode differentiation
//! ([`autodiff`]), the layer vocabulary ([`nn`]), the network and its model
//! file format ([`model`]), optimizers and the training loop ([`optim`],
//! [`train`]), PGM glyph corpora ([`corpus`], [`pgm`]), finite-difference
//! gradient checks ([`gradcheck`]) and the `vgsn` command line ([`cli`]).

pub mod autodiff;
pub mod bench;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod gradcheck;
pub mod model;
pub mod nn;
pub mod optim;
pub mod pgm;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, FormatError, Result};
pub use model::{Model, ModelConfig, Variant};
pub use rng::Rng;
pub use tensor::{Scalar, Tensor};
