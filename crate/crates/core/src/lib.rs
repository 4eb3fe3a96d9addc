//! Quantify how strongly vector representations of strings correspond to
//! symbolic tree structures.
//!
//! The toolkit has three layers:
//!
//! * structural similarity between labeled ordered trees, measured by a
//!   convolution tree kernel ([`kernel`]) over bracketed constituency trees
//!   ([`treebank`]);
//! * pairwise (dis)similarity structures over collections of items — square
//!   dissimilarity matrices and rectangular anchor embeddings ([`simspace`]);
//! * correlation of two representation spaces, either directly over matrix
//!   upper triangulars or through a cross-validated ridge regression between
//!   anchor embeddings ([`rsa`]).
//!
//! A small synthetic language of arithmetic expressions ([`arithlang`]) with
//! exactly known syntax and semantics is built in for end-to-end validation,
//! along with a bag-of-words baseline encoder and embedding-file ingestion
//! ([`encoders`]). Brute-force reference implementations used to cross-check
//! the fast paths live in [`oracle`].
//!
//! Numeric routines are generic over the scalar type through [`Scalar`];
//! concrete `f64`/`f32` aliases for the main data types are exported at the
//! crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

pub mod arithlang;
pub mod encoders;
pub mod kernel;
pub mod oracle;
pub mod prng;
pub mod rsa;
pub mod simspace;
pub mod treebank;

/// Floating-point scalar the numeric layers are generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + Display + Debug + Send + Sync + 'static
{
}

impl<T> Scalar for T where T: Float + FromPrimitive + Display + Debug + Send + Sync + 'static {}

pub use treebank::{Production, SymTree};

/// `f64` dissimilarity matrix.
pub type DissimMatrixF64 = simspace::DissimMatrix<f64>;
/// `f32` dissimilarity matrix.
pub type DissimMatrixF32 = simspace::DissimMatrix<f32>;
/// `f64` anchor-similarity embedding.
pub type SimEmbeddingF64 = simspace::SimEmbedding<f64>;
/// `f32` anchor-similarity embedding.
pub type SimEmbeddingF32 = simspace::SimEmbedding<f32>;
/// `f64` kernel parameters.
pub type KernelParamsF64 = kernel::KernelParams<f64>;
/// `f32` kernel parameters.
pub type KernelParamsF32 = kernel::KernelParams<f32>;
/// `f64` ridge regression model.
pub type RidgeModelF64 = rsa::RidgeModel<f64>;
/// `f32` ridge regression model.
pub type RidgeModelF32 = rsa::RidgeModel<f32>;
/// `f64` embedding table.
pub type EmbeddingTableF64 = encoders::EmbeddingTable<f64>;
/// `f32` embedding table.
pub type EmbeddingTableF32 = encoders::EmbeddingTable<f32>;
