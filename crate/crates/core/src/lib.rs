//! Transition fronts for ignition-type reaction-diffusion equations
//! `u_t = u_xx + f(t, u)` in time-heterogeneous media.

pub mod comparison_verify;
pub mod config;
pub mod ensemble_random;
pub mod error;
pub mod front_builder;
pub mod interface_track;
pub mod output;
pub mod parallel;
pub mod pde_core;
pub mod reaction_env;
pub mod tolerances;
pub mod wave_profile;

pub use error::{FrontError, Result};
