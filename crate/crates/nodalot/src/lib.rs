//! Optimal transport between the positive and negative parts of zero-mean
//! step functions on one-dimensional domains.
//!
//! A balanced step function `f` (piecewise constant, `∫f = 0`) splits into
//! `f = f₊ − f₋`, two measures of equal mass. This crate computes the
//! Wasserstein-p distance `W_p(f₊, f₋)` exactly on three domain kinds —
//! intervals, the unit circle, and metric star graphs — together with:
//!
//! * closed-form minimizers of `W_p` over classes of functions with fixed
//!   sup-norm, L¹-norm, and number of effective nodal points
//!   ([`minimize`]);
//! * cost-decreasing reductions that concentrate mass into full-height
//!   steps and make every transport move cross only a single nodal point
//!   ([`reduce`]);
//! * an independent discrete oracle (midpoint discretization + a
//!   transportation simplex with a duality certificate) used to verify the
//!   analytic solvers ([`oracle`]);
//! * a seeded verification campaign over random instances ([`campaign`]).
//!
//! The "effective nodal set" of `f` is the set of sign interfaces: points
//! where `f` changes sign directly, plus one representative per zero
//! plateau that separates regions of opposite sign. All solvers report
//! transport plans as lists of matched segments with their mass and cost
//! contribution.

pub mod campaign;
pub mod circle;
pub mod domain;
pub mod error;
pub mod line;
pub mod minimize;
pub mod oracle;
pub mod plan;
pub mod reduce;
pub mod sample;
pub mod star;
pub mod stepfn;
pub mod tol;

pub use campaign::{run_campaign, CampaignReport, CheckKind, CheckSummary, VerificationCampaign};
pub use circle::{wasserstein_circle, CircleTransport};
pub use domain::{Domain, DomainPoint};
pub use error::{Error, Result};
pub use line::{wasserstein_interval, wasserstein_w1_cdf};
pub use minimize::{
    closed_form_value, minimize_circle, minimize_interval, minimize_star_closed_form,
    minimize_star_numeric, minimize_star_short_edge_d3, sharp_lower_bound, short_edge_value,
    MinimizerCase, MinimizerResult, StarConfig,
};
pub use oracle::{discretize, solve_discrete_ot, solve_line_sorted, Atom, DiscreteMeasurePair, DiscreteSolution};
pub use plan::{Segment, TransportMove, TransportPlan};
pub use reduce::{
    concentrate_to_steps, plan_is_nodally_adjacent, reduce_to_adjacent_steps, shift_to_adjacent,
    Reduction, ReductionKind, ReductionStep,
};
pub use sample::{
    random_atom_pair, random_member, random_spec, random_vertex_split_star, sample_instance,
    trial_rng, DomainKind, SampledInstance,
};
pub use star::{
    check_plan_monotonicity, fold_to_line, wasserstein_star, wasserstein_star_discretized,
    FoldedFunction, StarMethod, StarTransport,
};
pub use stepfn::{ClassSpec, NodalKind, NodalPoint, NodalSet, Piece, StepFunction, Verdict};
