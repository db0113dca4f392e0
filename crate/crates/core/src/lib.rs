//! Semi-supervised graph classification by jointly training two views of a graph.
//!
//! One view is a GIN-style message-passing classifier over node features
//! ([`gnn`]); the other is a multi-hop memory network whose memories are
//! Weisfeiler-Lehman subtree count vectors of the labeled graphs ([`memnet`],
//! [`wl`]). The two networks are trained in alternation ([`train`]): each one
//! annotates the unlabeled pool, the other learns from its most confident
//! annotations, and graphs on which both agree are promoted into the labeled
//! set.
//!
//! Layout:
//!
//! - [`graph`]: immutable graphs, datasets and train/val/test splits
//! - [`tudataset`]: TUDataset text-format loader and split files
//! - [`wl`]: WL relabeling, sparse feature vectors and Gram matrices
//! - [`tensor`]: small reverse-mode autodiff engine with Adam
//! - [`gnn`], [`memnet`], [`ensemble`]: the classifiers
//! - [`train`]: the alternating loop and its ablation variants
//! - [`experiment`]: seeded multi-run harness, configs and reports
//! - [`synthetic`]: toy graph families used by tests and examples

pub mod batch;
pub mod classifier;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod gnn;
pub mod graph;
pub mod memnet;
pub mod rng;
pub mod synthetic;
pub mod tensor;
pub mod train;
pub mod tudataset;
pub mod wl;

pub use error::{Error, Result};
pub use graph::{make_split, validate_graph, Graph, GraphDataset, GraphParts, SplitSpec, Violation};
pub use tensor::{Tensor, TensorError};
