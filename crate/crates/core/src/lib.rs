//! Loop-space variational solver for periodic magnetic geodesics.
//!
//! The crate discretizes closed curves on 2-D charts carrying an exact
//! magnetic field, evaluates the length-type action `S_E = ∫ √E|ẋ| + A(ẋ)`
//! and its regularizations, computes mountain-pass levels over sweep
//! families of loops, and drives the regularization to zero while
//! classifying the outcome.
//!
//! Everything is generic over a [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix `f64`, which is what the CLI and the acceptance suite use.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuation;
pub mod dynamics;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod loopspace;
pub mod minimax;
pub mod oracle;
pub mod saddle;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use continuation::{
    classify_outcome, continuation_run, implied_energy, Classification, ContinuationOptions,
    ContinuationOutcome, ContinuationRecord, Schedule, ScheduleMode,
};
pub use dynamics::{
    el_residual_deq, el_residual_se, integrate_flow, kinetic_energy, FlowState, ResidualReport,
};
pub use functional::{
    action_f_cutoff, action_s, action_s_eps_tau, cutoff_f, grad_action, ActionParams, CutoffSpec,
};
pub use geometry::{ChartPoint, GeometryKind, GeometrySpec};
pub use loopspace::{
    concat, length, make_circle, make_point_loop, resample_arclength, Loop, LoopFamily,
    ParameterShape,
};
pub use minimax::{
    descend_loop, family_minimax, init_sweep_family, mountain_pass, DescentSettings, MinimaxResult,
};
pub use oracle::{
    circle_action_profile, fd_gradient, larmor_orbit, shooting_periodic, OrbitCandidate,
};

pub type Real = f64;
pub type ChartPoint64 = ChartPoint<f64>;
pub type GeometrySpec64 = GeometrySpec<f64>;
pub type Loop64 = Loop<f64>;
pub type LoopFamily64 = LoopFamily<f64>;
pub type ActionParams64 = ActionParams<f64>;
pub type CutoffSpec64 = CutoffSpec<f64>;
pub type DescentSettings64 = DescentSettings<f64>;
pub type MinimaxResult64 = MinimaxResult<f64>;
pub type Schedule64 = Schedule<f64>;
pub type ContinuationRecord64 = ContinuationRecord<f64>;
pub type Classification64 = Classification<f64>;
pub type FlowState64 = FlowState<f64>;
pub type ResidualReport64 = ResidualReport<f64>;
pub type OrbitCandidate64 = OrbitCandidate<f64>;
