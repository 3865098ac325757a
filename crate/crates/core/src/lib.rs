//! # polyclt
//!
//! Numerical toolkit for the uniform distribution on a compact polytope
//!
//! ```text
//! K_n = { x in R^n : x >= 0, A x = b }      (A is m x n, rank m, n > m)
//! ```
//!
//! The crate computes the entropy barycenter `1/w` of `K_n` (the mean of the
//! maximum-entropy product-exponential law living on the orthant), builds the
//! standardized constraint matrix `Â = (ÃÃᵗ)^{-1/2} Ã` with `Ã_ij = A_ij / w_j`,
//! and checks the large-`n` limit behaviour of linear statistics and marginals
//! with samplers, cubature of characteristic-function ratios, and
//! Kolmogorov–Smirnov tests.
//!
//! | Module | What it does |
//! |--------|--------------|
//! | [`constraint_model`] | `(A, b)` container, dense simplex LP, validation, positive representation |
//! | [`entropy_center`] | dual objective, damped Newton solve for `w = AᵗΛ₀`, entropy certificate |
//! | [`standardization`] | `Ã`, `Â`, `b̂`, `σ`, assumption report, column partitions with determinant certificates |
//! | [`samplers`] | hit-and-run on `K_n`, exact Dirichlet sampler for the symmetric simplex, product exponentials |
//! | [`fourier`] | product characteristic functions, cumulants, Bartlett ratio, box probabilities, Gaussian-penalty approximation |
//! | [`diagnostics`] | KS tests, CLT / marginal experiments, random instances with a known dual optimum |
//! | [`cli`] | the `polyclt` command line front end |
//!
//! ```rust
//! use polyclt::constraint_model::ConstraintSystem;
//! use polyclt::entropy_center::{solve_barycenter, BarycenterOptions};
//!
//! // four variables summing to one: the barycenter is (1/4, 1/4, 1/4, 1/4)
//! let cs = ConstraintSystem::from_rows(&[vec![1.0; 4]], &[1.0]).unwrap();
//! let bc = solve_barycenter(&cs, &BarycenterOptions::default()).unwrap();
//! assert!(bc.w.iter().all(|w| (w - 4.0).abs() < 1e-9));
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constraint_model;
pub mod diagnostics;
pub mod entropy_center;
pub mod fourier;
pub mod linalg;
pub mod samplers;
pub mod standardization;

pub use constraint_model::{ConstraintSystem, ValidationReport};
pub use entropy_center::{Barycenter, BarycenterOptions};
pub use standardization::{StandardizedSystem, WeightSpec};
