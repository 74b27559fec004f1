//! Seeded verification campaigns: randomized property checks over sampled
//! class members, with deterministic, thread-count-independent reports.
//!
//! A campaign draws one instance per trial (see [`crate::sample`]) and runs
//! the selected checks on it:
//!
//! * **bound** — the measured cost respects the sharp lower bound:
//!   `W_p(f) ≥ sharp_lower_bound(spec, p) − 1e−8` (minus any certified
//!   solver error). Skipped where no closed bound exists.
//! * **sharpness** — the constructed minimizer attains the bound: its
//!   reported value matches the bound, and re-measuring the constructed
//!   function agrees within `1e−8` plus any certified solver error.
//! * **reduction** — concentration never increases cost (slack
//!   `≥ −1e−10`) and strictly decreases it for members outside the
//!   step-structured subclass; on intervals, the composed reduction ends
//!   with a plan whose every move stays next to one nodal point.
//! * **oracle** — an independent midpoint discretization solved by the
//!   transportation simplex agrees with the analytic value within
//!   `3h` plus certified errors.
//! * **monotonicity** — the oracle's optimal plan admits no
//!   cost-reducing two-move swap.
//!
//! Trials run in parallel; per-trial RNG streams are derived from
//! `(seed, trial)` and results are aggregated in trial order, so the
//! report is byte-identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use std::fmt;
use std::str::FromStr;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::line::wasserstein_interval;
use crate::minimize::{
    minimize_circle, minimize_interval, minimize_star_closed_form, minimize_star_short_edge_d3,
    sharp_lower_bound,
};
use crate::oracle::{discretize, solve_discrete_ot};
use crate::plan::TransportPlan;
use crate::reduce::{concentrate_to_steps, plan_is_nodally_adjacent, reduce_to_adjacent_steps};
use crate::sample::{sample_instance, trial_rng, DomainKind, SampledInstance};
use crate::star::{wasserstein_star, StarMethod};
use crate::stepfn::StepFunction;
use crate::{circle::wasserstein_circle, tol};

/// One verifiable property family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Sharp lower bound on the transport cost.
    Bound,
    /// Cost-decreasing reductions and plan adjacency.
    Reduction,
    /// Constructed minimizers attain the bound.
    Sharpness,
    /// Agreement with the discrete oracle.
    Oracle,
    /// No cost-reducing swap in oracle plans.
    Monotonicity,
}

impl CheckKind {
    /// Every check, in reporting order.
    pub const ALL: [CheckKind; 5] = [
        CheckKind::Bound,
        CheckKind::Reduction,
        CheckKind::Sharpness,
        CheckKind::Oracle,
        CheckKind::Monotonicity,
    ];
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckKind::Bound => "bound",
            CheckKind::Reduction => "reduction",
            CheckKind::Sharpness => "sharpness",
            CheckKind::Oracle => "oracle",
            CheckKind::Monotonicity => "monotonicity",
        })
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bound" => Ok(CheckKind::Bound),
            "reduction" => Ok(CheckKind::Reduction),
            "sharpness" => Ok(CheckKind::Sharpness),
            "oracle" => Ok(CheckKind::Oracle),
            "monotonicity" => Ok(CheckKind::Monotonicity),
            other => Err(Error::InvalidInput(format!(
                "unknown check {other:?}; expected bound, reduction, sharpness, oracle, \
                 or monotonicity"
            ))),
        }
    }
}

/// A randomized verification run: how many instances to draw, from where,
/// and which properties to check on each.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationCampaign {
    /// Number of independent trials.
    pub trials: u64,
    /// Master seed; together with the trial index it determines every draw.
    pub seed: u64,
    /// Properties to check on each trial.
    pub checks: Vec<CheckKind>,
    /// Domain geometries to sample from (uniformly per trial).
    pub domain_kinds: Vec<DomainKind>,
    /// Worker threads (`None` = the global default pool).
    pub threads: Option<usize>,
}

/// Outcome of one check on one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Status {
    Pass,
    Fail,
    /// The check does not apply to this instance (e.g. no closed bound).
    Skip,
}

/// One check's result on one trial.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct CheckOutcome {
    check: CheckKind,
    status: Status,
    /// Slack over the requirement (negative means violated); semantics
    /// per check, e.g. `W_p(f) − bound` for [`CheckKind::Bound`].
    margin: Option<f64>,
    note: Option<String>,
}

/// Aggregated results for one check across all trials.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckSummary {
    /// Which property family.
    pub check: CheckKind,
    /// Trials on which the check held.
    pub passes: u64,
    /// Trials on which the check was violated.
    pub failures: u64,
    /// Trials on which the check did not apply.
    pub skips: u64,
    /// Smallest slack observed over all applicable trials (negative iff
    /// some trial failed).
    pub worst_margin: Option<f64>,
}

/// Full campaign report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CampaignReport {
    /// Trials run.
    pub trials: u64,
    /// Master seed used.
    pub seed: u64,
    /// Per-check aggregates, in [`CheckKind::ALL`] order (selected only).
    pub summaries: Vec<CheckSummary>,
    /// Total violations across all checks and trials.
    pub total_failures: u64,
    /// Human-readable details of the first violations (capped).
    pub failure_details: Vec<String>,
}

impl CampaignReport {
    /// `true` when no check on any trial was violated.
    pub fn all_passed(&self) -> bool {
        self.total_failures == 0
    }
}

/// Measured transport cost of `f` plus a certified absolute error bound
/// on the measurement (`0` for the exact solvers) and the solver's plan.
fn measure(f: &StepFunction, p: f64) -> Result<(f64, f64, TransportPlan)> {
    match f.domain() {
        Domain::Interval { .. } => {
            let (w, plan) = wasserstein_interval(f, p)?;
            Ok((w, 0.0, plan))
        }
        Domain::Circle => {
            let sol = wasserstein_circle(f, p)?;
            Ok((sol.value, 0.0, sol.plan))
        }
        Domain::Star { .. } => {
            let sol = wasserstein_star(f, p)?;
            let err = match sol.method {
                StarMethod::Folded => 0.0,
                StarMethod::Discretized { error_bound, .. } => error_bound,
            };
            Ok((sol.value, err, sol.plan))
        }
    }
}

fn outcome(check: CheckKind, status: Status, margin: Option<f64>, note: Option<String>) -> CheckOutcome {
    CheckOutcome { check, status, margin, note }
}

fn fail(check: CheckKind, margin: Option<f64>, note: String) -> CheckOutcome {
    outcome(check, Status::Fail, margin, Some(note))
}

fn skip(check: CheckKind, note: String) -> CheckOutcome {
    outcome(check, Status::Skip, None, Some(note))
}

fn pass(check: CheckKind, margin: f64) -> CheckOutcome {
    outcome(check, Status::Pass, Some(margin), None)
}

/// The sharp-bound check: `W_p(f) ≥ bound − 1e−8 − solver error`.
fn check_bound(inst: &SampledInstance, w: f64, w_err: f64) -> CheckOutcome {
    match sharp_lower_bound(&inst.spec, inst.p) {
        Ok(bound) => {
            let margin = w - bound;
            if margin >= -(tol::SELF_CONSISTENCY_REL + w_err) {
                pass(CheckKind::Bound, margin)
            } else {
                fail(
                    CheckKind::Bound,
                    Some(margin),
                    format!("W_p = {w} below bound {bound} (error allowance {w_err})"),
                )
            }
        }
        Err(Error::UnsupportedCase(_)) => {
            skip(CheckKind::Bound, "no closed bound for this geometry".into())
        }
        Err(e) => fail(CheckKind::Bound, None, format!("bound evaluation failed: {e}")),
    }
}

/// The sharpness check: the constructed minimizer attains the bound.
fn check_sharpness(inst: &SampledInstance) -> CheckOutcome {
    let spec = &inst.spec;
    let p = inst.p;
    let minimized = match spec.domain {
        Domain::Interval { .. } => minimize_interval(spec, p),
        Domain::Circle => minimize_circle(spec, p),
        Domain::Star { .. } => minimize_star_closed_form(spec, p)
            .or_else(|_| minimize_star_short_edge_d3(spec, p)),
    };
    let res = match minimized {
        Ok(res) => res,
        Err(Error::UnsupportedCase(_)) | Err(Error::Precondition(_)) => {
            return skip(CheckKind::Sharpness, "no closed-form minimizer here".into())
        }
        Err(e) => return fail(CheckKind::Sharpness, None, format!("minimizer failed: {e}")),
    };
    let bound = match sharp_lower_bound(spec, p) {
        Ok(b) => b,
        Err(Error::UnsupportedCase(_)) => {
            return skip(CheckKind::Sharpness, "no closed bound for this geometry".into())
        }
        Err(e) => return fail(CheckKind::Sharpness, None, format!("bound failed: {e}")),
    };
    if (res.value - bound).abs() > tol::SELF_CONSISTENCY_REL * (1.0 + bound) {
        return fail(
            CheckKind::Sharpness,
            Some(bound - res.value),
            format!("minimizer value {} differs from bound {bound}", res.value),
        );
    }
    let (w, w_err, _) = match measure(&res.f_star, p) {
        Ok(m) => m,
        Err(e) => {
            return fail(CheckKind::Sharpness, None, format!("re-measuring f_star failed: {e}"))
        }
    };
    let slack = tol::SELF_CONSISTENCY_REL * (1.0 + bound) + w_err;
    let gap = (w - bound).abs();
    if gap <= slack {
        pass(CheckKind::Sharpness, slack - gap)
    } else {
        fail(
            CheckKind::Sharpness,
            Some(slack - gap),
            format!("re-measured {w} vs bound {bound} (allowance {slack})"),
        )
    }
}

/// The reduction check: concentration is cost-nonincreasing (strictly
/// decreasing off the step-structured subclass), and on intervals the
/// composed reduction yields an interface-adjacent plan.
fn check_reduction(inst: &SampledInstance) -> CheckOutcome {
    let red = match concentrate_to_steps(&inst.f, inst.p) {
        Ok(r) => r,
        Err(Error::Precondition(note)) => return skip(CheckKind::Reduction, note),
        Err(e) => return fail(CheckKind::Reduction, None, format!("concentration failed: {e}")),
    };
    let slack = red.initial_cost() - red.final_cost();
    if slack < -tol::REDUCTION_SLACK_ABS {
        return fail(
            CheckKind::Reduction,
            Some(slack),
            format!("concentration increased cost by {}", -slack),
        );
    }
    if !inst.in_step_class && slack <= 0.0 {
        return fail(
            CheckKind::Reduction,
            Some(slack),
            "no strict decrease on a roughened member".into(),
        );
    }
    if matches!(inst.spec.domain, Domain::Interval { .. }) {
        let full = match reduce_to_adjacent_steps(&inst.f, inst.p) {
            Ok(r) => r,
            Err(e) => {
                return fail(CheckKind::Reduction, Some(slack), format!("composition failed: {e}"))
            }
        };
        let (_, _, plan) = match measure(&full.result, inst.p) {
            Ok(m) => m,
            Err(e) => {
                return fail(
                    CheckKind::Reduction,
                    Some(slack),
                    format!("re-solving the reduced function failed: {e}"),
                )
            }
        };
        match plan_is_nodally_adjacent(&full.result, &plan) {
            Ok(true) => {}
            Ok(false) => {
                return fail(
                    CheckKind::Reduction,
                    Some(slack),
                    "composed reduction left a non-adjacent move".into(),
                )
            }
            Err(e) => {
                return fail(CheckKind::Reduction, Some(slack), format!("adjacency check: {e}"))
            }
        }
    }
    pass(CheckKind::Reduction, slack)
}

/// The oracle (and optionally monotonicity) check: discretize, solve the
/// finite problem exactly, compare values; the returned plan feeds the
/// swap test.
fn check_oracle(
    inst: &SampledInstance,
    w: f64,
    w_err: f64,
    want_value_check: bool,
    want_monotonicity: bool,
) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let support = inst.spec.c_1 / inst.spec.c_inf;
    let h = support / 250.0;
    let sol = discretize(&inst.f, h)
        .and_then(|pair| solve_discrete_ot(inst.f.domain(), &pair, inst.p));
    let sol = match sol {
        Ok(s) => s,
        Err(e) => {
            let note = format!("oracle solve failed: {e}");
            if want_value_check {
                out.push(fail(CheckKind::Oracle, None, note.clone()));
            }
            if want_monotonicity {
                out.push(fail(CheckKind::Monotonicity, None, note));
            }
            return out;
        }
    };
    if want_value_check {
        let allowance = tol::ORACLE_ERR_PER_H * h + w_err + 1e-9;
        let diff = (sol.value - w).abs();
        if diff <= allowance {
            out.push(pass(CheckKind::Oracle, allowance - diff));
        } else {
            out.push(fail(
                CheckKind::Oracle,
                Some(allowance - diff),
                format!("oracle {} vs analytic {w}, allowance {allowance}", sol.value),
            ));
        }
    }
    if want_monotonicity {
        match crate::star::check_plan_monotonicity(&sol.plan, inst.f.domain()) {
            Ok(violations) if violations.is_empty() => {
                out.push(pass(CheckKind::Monotonicity, 0.0));
            }
            Ok(violations) => out.push(fail(
                CheckKind::Monotonicity,
                None,
                format!("{} cost-reducing swaps in the oracle plan", violations.len()),
            )),
            Err(e) => out.push(fail(CheckKind::Monotonicity, None, format!("swap test: {e}"))),
        }
    }
    out
}

/// Runs every selected check on one trial.
fn run_trial(campaign: &VerificationCampaign, trial: u64) -> Vec<CheckOutcome> {
    let mut rng = trial_rng(campaign.seed, trial);
    let kind = campaign.domain_kinds
        [rand::Rng::gen_range(&mut rng, 0..campaign.domain_kinds.len())];
    let inst = match sample_instance(&mut rng, kind) {
        Ok(i) => i,
        Err(e) => {
            return campaign
                .checks
                .iter()
                .map(|&c| skip(c, format!("sampler declined the draw: {e}")))
                .collect()
        }
    };
    let wants = |c: CheckKind| campaign.checks.contains(&c);
    let needs_measure = wants(CheckKind::Bound) || wants(CheckKind::Oracle)
        || wants(CheckKind::Monotonicity);
    let mut outcomes = Vec::new();
    let measured = if needs_measure {
        match measure(&inst.f, inst.p) {
            Ok(m) => Some(m),
            Err(e) => {
                for &c in &campaign.checks {
                    if matches!(c, CheckKind::Bound | CheckKind::Oracle | CheckKind::Monotonicity)
                    {
                        outcomes.push(fail(c, None, format!("measuring W_p failed: {e}")));
                    }
                }
                None
            }
        }
    } else {
        None
    };
    if let Some((w, w_err, _)) = &measured {
        if wants(CheckKind::Bound) {
            outcomes.push(check_bound(&inst, *w, *w_err));
        }
    }
    if wants(CheckKind::Reduction) {
        outcomes.push(check_reduction(&inst));
    }
    if wants(CheckKind::Sharpness) {
        outcomes.push(check_sharpness(&inst));
    }
    if let Some((w, w_err, _)) = &measured {
        if wants(CheckKind::Oracle) || wants(CheckKind::Monotonicity) {
            outcomes.extend(check_oracle(
                &inst,
                *w,
                *w_err,
                wants(CheckKind::Oracle),
                wants(CheckKind::Monotonicity),
            ));
        }
    }
    outcomes
}

/// Runs the campaign and aggregates per-check statistics. Trials execute
/// in parallel but are aggregated in trial order, so the report does not
/// depend on the thread count.
///
/// # Errors
/// [`Error::InvalidInput`] for an empty domain-kind list, duplicate
/// checks, or an unusable thread count.
pub fn run_campaign(campaign: &VerificationCampaign) -> Result<CampaignReport> {
    if campaign.domain_kinds.is_empty() {
        return Err(Error::InvalidInput("domain_kinds must not be empty".into()));
    }
    let mut seen = Vec::new();
    for c in &campaign.checks {
        if seen.contains(c) {
            return Err(Error::InvalidInput(format!("duplicate check {c}")));
        }
        seen.push(*c);
    }
    let run = || -> Vec<Vec<CheckOutcome>> {
        (0..campaign.trials).into_par_iter().map(|t| run_trial(campaign, t)).collect()
    };
    let per_trial = match campaign.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let mut summaries: Vec<CheckSummary> = CheckKind::ALL
        .iter()
        .filter(|c| campaign.checks.contains(c))
        .map(|&check| CheckSummary {
            check,
            passes: 0,
            failures: 0,
            skips: 0,
            worst_margin: None,
        })
        .collect();
    let mut failure_details = Vec::new();
    let mut total_failures = 0u64;
    for (trial, outcomes) in per_trial.iter().enumerate() {
        for o in outcomes {
            let summary = summaries
                .iter_mut()
                .find(|s| s.check == o.check)
                .expect("outcome for an unselected check");
            match o.status {
                Status::Pass => summary.passes += 1,
                Status::Fail => {
                    summary.failures += 1;
                    total_failures += 1;
                    if failure_details.len() < 20 {
                        failure_details.push(format!(
                            "trial {trial}, {}: {}",
                            o.check,
                            o.note.as_deref().unwrap_or("violated")
                        ));
                    }
                }
                Status::Skip => summary.skips += 1,
            }
            if let Some(m) = o.margin {
                summary.worst_margin =
                    Some(summary.worst_margin.map_or(m, |w: f64| w.min(m)));
            }
        }
    }
    Ok(CampaignReport {
        trials: campaign.trials,
        seed: campaign.seed,
        summaries,
        total_failures,
        failure_details,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_campaign() -> VerificationCampaign {
        VerificationCampaign {
            trials: 16,
            seed: 42,
            checks: vec![
                CheckKind::Bound,
                CheckKind::Reduction,
                CheckKind::Sharpness,
                CheckKind::Oracle,
                CheckKind::Monotonicity,
            ],
            domain_kinds: vec![DomainKind::Interval, DomainKind::Circle],
            threads: None,
        }
    }

    #[test]
    fn line_campaign_passes_every_check() {
        let report = run_campaign(&base_campaign()).unwrap();
        assert!(report.all_passed(), "failures: {:?}", report.failure_details);
        // The sharp bound applies on every line instance (no skips). A
        // sampled member may sit essentially at the bound, so the worst
        // slack can be float-noise negative but no worse.
        let bound = &report.summaries[0];
        assert_eq!(bound.check, CheckKind::Bound);
        assert_eq!(bound.passes, 16);
        assert!(bound.worst_margin.unwrap() >= -1e-8);
    }

    #[test]
    fn star_campaign_passes_with_expected_skips() {
        let campaign = VerificationCampaign {
            trials: 8,
            seed: 9,
            checks: vec![CheckKind::Bound, CheckKind::Oracle, CheckKind::Monotonicity],
            domain_kinds: vec![DomainKind::Star],
            threads: None,
        };
        let report = run_campaign(&campaign).unwrap();
        assert!(report.all_passed(), "failures: {:?}", report.failure_details);
        // Random star geometries often have no closed bound; those trials
        // must be skipped, not failed.
        let bound = &report.summaries[0];
        assert_eq!(bound.passes + bound.skips, 8);
    }

    #[test]
    fn report_is_identical_across_thread_counts() {
        let mut one = base_campaign();
        one.trials = 10;
        one.threads = Some(1);
        let mut four = one.clone();
        four.threads = Some(4);
        let a = serde_json::to_string(&run_campaign(&one).unwrap()).unwrap();
        let b = serde_json::to_string(&run_campaign(&four).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_trials_is_a_trivial_pass() {
        let mut c = base_campaign();
        c.trials = 0;
        let report = run_campaign(&c).unwrap();
        assert!(report.all_passed());
        assert_eq!(report.summaries.len(), 5);
        assert_eq!(report.summaries[0].passes, 0);
    }

    #[test]
    fn invalid_campaigns_are_rejected() {
        let mut c = base_campaign();
        c.domain_kinds.clear();
        assert!(matches!(run_campaign(&c), Err(Error::InvalidInput(_))));
        let mut c = base_campaign();
        c.checks = vec![CheckKind::Bound, CheckKind::Bound];
        assert!(matches!(run_campaign(&c), Err(Error::InvalidInput(_))));
    }
}
