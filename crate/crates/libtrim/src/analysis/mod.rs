//! Static analyses over verified modules.
//!
//! The pipeline: [`cfg`] builds per-function control-flow graphs, [`reach`]
//! computes reaching definitions (the def-use substrate), [`postdom`] and
//! [`control`] derive post-dominators and control dependence, [`census`]
//! attributes every load and store to a field key split by region,
//! [`variants`] finds tag dispatches and the produced/consumed split, and
//! [`slice`] takes backward data slices used by the removal passes.

pub mod census;
pub mod cfg;
pub mod control;
pub mod postdom;
pub mod reach;
pub mod slice;
pub mod variants;

pub use census::{field_census, resultless_fields, Access, AccessSummary, Sites, Target};
pub use cfg::{Cfg, EdgeKind};
pub use control::{control_dependence, ControlDeps, ControlEdge};
pub use postdom::{postdominators, PostDoms};
pub use reach::{reaching_defs, Def, ReachingDefs};
pub use slice::backward_data_slice;
pub use variants::{
    case_region, find_dispatches, variant_analysis, Dispatch, DispatchCase, DispatchStyle,
    VariantReport,
};
