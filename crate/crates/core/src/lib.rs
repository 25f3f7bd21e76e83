//! Secrecy-rate maximization for a multicast MIMO dual-function
//! radar-communication (DFRC) transmitter with eavesdropping targets and an
//! intelligent reflecting surface (IRS).
//!
//! The optimizer alternates three blocks: closed-form weighted-MMSE
//! auxiliaries, a convex precoder subproblem with linearized radar SINR
//! floors, and SPSA over the IRS phases.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod bcd;
pub mod error;
pub mod experiment;
pub mod numerics;
pub mod precoder;
pub mod rates;
pub mod scenario;
pub mod spsa;
pub mod surrogate;

pub use bcd::{optimize, BcdOptions, BcdOutcome, IterationRecord, OptimizerTrace};
pub use error::{Error, Result};
pub use experiment::{
    run_sweep, GroupSummary, IrsMode, ScenarioVariant, SweepResult, SweepSpec, TrialRecord,
};
pub use numerics::{CMatrix, CVector};
pub use precoder::{solve_precoders, LinearizedSinrConstraint, SolverOptions, SubproblemSolution};
pub use rates::PrecoderPair;
pub use scenario::{ChannelSet, EffectiveChannels, PhaseVector, ScenarioConfig};
pub use spsa::{optimize_phases, SpsaSchedule};
pub use surrogate::{AuxiliarySet, PairAux};
