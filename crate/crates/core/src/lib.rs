//! Numerical curvature of oriented Riemannian 4-manifolds given by an
//! orthonormal coframe on a chart: Cartan connection and curvature operator,
//! Weyl decomposition, Hermitian structure from `W+`, bisectional curvature
//! scans, conformal Kahler data, normal bundles of surfaces and the
//! Weitzenbock identity on 2-forms.
//!
//! The catalog provides the Page metric on CP2 # -CP2 and reference metrics
//! (Fubini-Study, round S4, flat T4, S2 x S2). The `ehcurv` binary wraps the
//! checks as subcommands; see [`cli`].

// Index loops mirror the tensor notation; NaN must fail range checks.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod coframe;
pub mod conformal;
pub mod curvature;
pub mod error;
pub mod fd;
pub mod forms;
pub mod hermitian;
pub mod report;
pub mod scan;
pub mod submanifold;
pub mod weitzenbock;
