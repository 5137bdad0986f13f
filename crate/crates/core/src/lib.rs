//! Canonical forms for graph eigendecompositions and the tools used to probe
//! their limits.
//!
//! The crate has two halves:
//!
//! * [`prism`] canonicalizes the eigenvector matrix of a graph with a simple
//!   spectrum. It resolves the per-column sign ambiguity exactly by solving a
//!   linear system over GF(2) ([`gf2`]) and the vertex-order ambiguity by
//!   lexicographic sorting. Its output, a [`prism::CanonCertificate`], decides
//!   isomorphism of simple-spectrum graphs ([`iso`]).
//! * [`cfi`] builds pairs of non-isomorphic simple-spectrum multigraphs from the
//!   Cai-Fürer-Immerman construction, and [`wl`] runs weighted 1-WL and k-WL on
//!   them to show that Weisfeiler-Leman cannot tell them apart.
//!
//! [`graph`] and [`spectral`] hold the shared graph and eigendecomposition types.

pub mod cfi;
pub mod error;
pub mod gf2;
pub mod graph;
pub mod iso;
pub mod prism;
pub mod spectral;
pub mod wl;

pub use error::{Error, Result};
