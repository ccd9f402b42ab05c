//! Dense numeric kernel: matrices, nonlinearities, reverse-mode gradients,
//! finite-difference checking, the adaptive-moment optimizer and seeded
//! randomness. Everything is `f64`.

mod grad;
mod matrix;
mod optim;
mod params;
pub mod rng;
pub mod tape;

pub use grad::{grad_check, grad_eval, relative_error, CheckReport, Objective};
pub use matrix::{matmul, relu, sigmoid, sigmoid_scalar, tanh, tanh_scalar, Matrix};
pub(crate) use matrix::{dot, gemm_nn, gemm_tn_acc};
pub use optim::{opt_step, AdamConfig, OptimizerState};
pub use params::ParamSet;
pub use rng::{derive_seed, RandomSource};
