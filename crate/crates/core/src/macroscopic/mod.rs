//! Parabolic rescaling of lattice data and the macroscopic reference problem.

pub mod diagnostics;
pub mod fields;
pub mod stefan;

pub use diagnostics::{
    compare, flow_rule, has_depinning, is_advance_then_pin, segment_regimes, ConvergenceReport, DetectOptions,
    FlowRuleOptions, FlowRuleReport, Segment,
};
pub use fields::{data_hash, rescale, xi_index, InterfaceCurves, MacroFields};
pub use stefan::{solve_stefan, Regime, StefanGrid, StefanSolution};
