//! Independent discrete verification oracle.
//!
//! The analytic solvers in this crate are checked against a route that
//! shares none of their machinery: the two parts of a step function are
//! discretized into midpoint atoms ([`discretize`]) and the resulting
//! finite transport problem is solved exactly by a transportation
//! simplex with an optimality certificate ([`solve_discrete_ot`]).
//!
//! For atoms spaced at most `h` apart within their cells, the discrete
//! optimum differs from the continuum cost by at most a few multiples
//! of `h` (each particle is displaced by at most `h/2` on each side),
//! so agreement within `3h` is the standard acceptance bound used by
//! the verification campaign.
//!
//! On interval domains a second, simpler exact method is available:
//! sorting both atom lists and matching them monotonically
//! ([`solve_line_sorted`]). The simplex result is cross-checked against
//! it on every interval solve; the two must agree to `1e-12`.

mod simplex;

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, DomainPoint};
use crate::error::{Error, Result};
use crate::line::check_exponent;
use crate::plan::{Segment, TransportMove, TransportPlan};
use crate::stepfn::StepFunction;
use crate::tol;

/// Hard cap on atoms per side, to keep cost matrices in memory.
const MAX_ATOMS_PER_SIDE: usize = 20_000;

/// A point mass.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Atom {
    /// Location of the mass.
    pub point: DomainPoint,
    /// Mass carried (`> 0`).
    pub mass: f64,
}

/// Midpoint discretizations of the two parts of a step function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscreteMeasurePair {
    /// Atoms of the positive part.
    pub plus: Vec<Atom>,
    /// Atoms of the negative part.
    pub minus: Vec<Atom>,
    /// Cell-size bound the atoms were generated with.
    pub h: f64,
}

impl DiscreteMeasurePair {
    /// Total mass of the positive side.
    pub fn mass_plus(&self) -> f64 {
        self.plus.iter().map(|a| a.mass).sum()
    }

    /// Total mass of the negative side.
    pub fn mass_minus(&self) -> f64 {
        self.minus.iter().map(|a| a.mass).sum()
    }
}

/// Splits every constant-sign piece of `f` into cells of length at most
/// `h` and places the cell mass at the cell midpoint. The lighter side
/// is then rescaled to match the heavier one exactly; the rescaling
/// factor may differ from 1 only by the balance slack of the input.
///
/// # Errors
/// [`Error::InvalidInput`] for a non-positive `h` or an instance that
/// would need more than 20 000 atoms per side; balance/degeneracy
/// errors as in the continuum solvers.
pub fn discretize(f: &StepFunction, h: f64) -> Result<DiscreteMeasurePair> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidInput(format!("cell size must be positive, got {h}")));
    }
    crate::line::balance_check(f)?;
    let mut sides: [Vec<Atom>; 2] = [Vec::new(), Vec::new()];
    for (slot, sign) in [(0usize, 1i8), (1usize, -1i8)] {
        for (edge, a, b, rho) in f.signed_support(sign) {
            let len = b - a;
            let cells = (len / h).ceil().max(1.0) as usize;
            let cell = len / cells as f64;
            for k in 0..cells {
                let mid = a + (k as f64 + 0.5) * cell;
                sides[slot].push(Atom {
                    point: DomainPoint::new(edge, mid),
                    mass: rho * cell,
                });
            }
            if sides[slot].len() > MAX_ATOMS_PER_SIDE {
                return Err(Error::InvalidInput(format!(
                    "discretization at h={h} needs more than {MAX_ATOMS_PER_SIDE} atoms per side"
                )));
            }
        }
    }
    let [plus, mut minus] = sides;
    let mp: f64 = plus.iter().map(|a| a.mass).sum();
    let mm: f64 = minus.iter().map(|a| a.mass).sum();
    if mp <= 0.0 || mm <= 0.0 {
        return Err(Error::Degenerate("a part carries no mass after discretization".into()));
    }
    let ratio = mp / mm;
    if (ratio - 1.0).abs() > 10.0 * tol::BALANCE_REL {
        return Err(Error::Unbalanced { integral: mp - mm, limit: 10.0 * tol::BALANCE_REL * mp });
    }
    for a in &mut minus {
        a.mass *= ratio;
    }
    Ok(DiscreteMeasurePair { plus, minus, h })
}

/// Exact solution of a finite transport problem.
#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    /// `W_p` of the discrete pair.
    pub value: f64,
    /// Optimal coupling as atom-to-atom moves.
    pub plan: TransportPlan,
    /// Largest dual-feasibility violation at termination (certificate;
    /// bounded by `1e-9` times the cost scale).
    pub max_dual_violation: f64,
    /// Simplex pivots performed.
    pub pivots: usize,
}

/// Solves the finite transport problem between the atom lists exactly
/// with a transportation simplex and certifies optimality by a full
/// dual-feasibility scan. On interval domains the result is
/// additionally cross-checked against the independent sorted matching.
///
/// # Errors
/// [`Error::InvalidInput`] on empty sides or bad exponent;
/// [`Error::Degenerate`] if the certificate fails (internal defect).
///
/// # Panics
/// If the interval cross-check between simplex and sorted matching
/// disagrees beyond `1e-12` — both are exact, so disagreement is a bug.
pub fn solve_discrete_ot(
    domain: &Domain,
    pair: &DiscreteMeasurePair,
    p: f64,
) -> Result<DiscreteSolution> {
    check_exponent(p)?;
    if pair.plus.is_empty() || pair.minus.is_empty() {
        return Err(Error::InvalidInput("both atom lists must be nonempty".into()));
    }
    // Order atoms so that the northwest-corner start is already close
    // to the optimal monotone structure of each geometry: by coordinate
    // on the interval and circle; on stars ascending distance from the
    // vertex on one side against descending on the other, which pairs
    // the far mass of one sign with the near mass of the other.
    let mut plus = pair.plus.clone();
    let mut minus = pair.minus.clone();
    let key = |a: &Atom| (a.point.edge, a.point.coord);
    match domain {
        Domain::Star { .. } => {
            plus.sort_by(|x, y| {
                x.point.coord.total_cmp(&y.point.coord).then(x.point.edge.cmp(&y.point.edge))
            });
            minus.sort_by(|x, y| {
                y.point.coord.total_cmp(&x.point.coord).then(x.point.edge.cmp(&y.point.edge))
            });
        }
        _ => {
            plus.sort_by(|x, y| key(x).1.total_cmp(&key(y).1));
            minus.sort_by(|x, y| key(x).1.total_cmp(&key(y).1));
        }
    }
    let n = plus.len();
    let m = minus.len();
    let mut cost = vec![0.0f64; n * m];
    for (i, ai) in plus.iter().enumerate() {
        for (j, bj) in minus.iter().enumerate() {
            let d = domain.dist_unchecked(ai.point, bj.point);
            cost[i * m + j] = if p == 1.0 { d } else { d.powf(p) };
        }
    }
    let supply: Vec<f64> = plus.iter().map(|a| a.mass).collect();
    let demand: Vec<f64> = minus.iter().map(|a| a.mass).collect();
    let outcome = simplex::transportation_simplex(&supply, &demand, &cost, m)?;

    if matches!(domain, Domain::Interval { .. }) {
        let sorted_p = sorted_matching_cost_p(&plus, &minus, p);
        assert!(
            (outcome.objective - sorted_p).abs()
                <= tol::ORACLE_CROSS_ABS * (1.0 + outcome.objective.abs()),
            "simplex ({}) and sorted matching ({}) disagree on an interval instance",
            outcome.objective,
            sorted_p
        );
    }

    let mass_scale: f64 = supply.iter().sum();
    let mut moves = Vec::new();
    for &(i, j, flow) in &outcome.flows {
        if flow > 1e-15 * mass_scale {
            moves.push(TransportMove {
                src: Segment::atom(plus[i].point.edge, plus[i].point.coord),
                dst: Segment::atom(minus[j].point.edge, minus[j].point.coord),
                mass: flow,
                cost: flow * cost[i * m + j],
            });
        }
    }
    let plan = TransportPlan { p, moves, total_cost_p: outcome.objective };
    Ok(DiscreteSolution {
        value: outcome.objective.powf(1.0 / p),
        plan,
        max_dual_violation: outcome.max_dual_violation,
        pivots: outcome.pivots,
    })
}

/// Exact `W_p` of an atom pair on a line by sorting and monotone
/// matching — the optimal coupling on the line for any convex cost.
///
/// # Errors
/// [`Error::InvalidInput`] on empty sides or a bad exponent.
pub fn solve_line_sorted(pair: &DiscreteMeasurePair, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if pair.plus.is_empty() || pair.minus.is_empty() {
        return Err(Error::InvalidInput("both atom lists must be nonempty".into()));
    }
    let mut plus = pair.plus.clone();
    let mut minus = pair.minus.clone();
    plus.sort_by(|x, y| x.point.coord.total_cmp(&y.point.coord));
    minus.sort_by(|x, y| x.point.coord.total_cmp(&y.point.coord));
    Ok(sorted_matching_cost_p(&plus, &minus, p).powf(1.0 / p))
}

/// Σ mass·|x−y|^p of the monotone matching of two coordinate-sorted
/// atom lists (two-pointer merge, matching the smaller remaining mass).
fn sorted_matching_cost_p(plus: &[Atom], minus: &[Atom], p: f64) -> f64 {
    let mut total = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let mut ra = plus.first().map_or(0.0, |a| a.mass);
    let mut rb = minus.first().map_or(0.0, |a| a.mass);
    while i < plus.len() && j < minus.len() {
        let q = ra.min(rb);
        let d = (plus[i].point.coord - minus[j].point.coord).abs();
        total += q * if p == 1.0 { d } else { d.powf(p) };
        ra -= q;
        rb -= q;
        if ra <= 0.0 {
            i += 1;
            if i < plus.len() {
                ra = plus[i].mass;
            }
        }
        if rb <= 0.0 {
            j += 1;
            if j < minus.len() {
                rb = minus[j].mass;
            }
        }
    }
    total
}
