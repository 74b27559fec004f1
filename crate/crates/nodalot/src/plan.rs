//! Transport plans: matched segment pairs with mass and cost.
//!
//! Every solver in this crate reports its coupling in the same shape: a
//! list of [`TransportMove`]s, each matching a source segment (in the
//! support of `f₊`) to a destination segment (in the support of `f₋`)
//! carrying `mass > 0` at cost `∫ d(x, T(x))^p dμ` over the block.
//! Discrete (oracle) plans use zero-length segments (atoms). On the
//! circle a segment may wrap: `start ∈ [0, 2π)` and `end ≤ start + 2π`,
//! with `end > 2π` denoting continuation across the seam.

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, CIRCLE_LEN};
use crate::error::{Error, Result};
use crate::stepfn::StepFunction;
use crate::tol;

/// A segment of one edge; `start == end` denotes an atom.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Segment {
    /// Edge the segment lies on.
    pub edge: usize,
    /// Left endpoint (on the circle: representative in `[0, 2π)`).
    pub start: f64,
    /// Right endpoint (on the circle: may exceed `2π` when wrapping).
    pub end: f64,
}

impl Segment {
    /// Point segment (used by discrete plans).
    pub fn atom(edge: usize, at: f64) -> Self {
        Segment { edge, start: at, end: at }
    }

    /// Segment length.
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    /// True for zero-length segments.
    pub fn is_atom(&self) -> bool {
        self.len() <= 0.0
    }

    /// Midpoint (wrapped into `[0, 2π)` by the circle-aware callers).
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

/// One matched block of the coupling.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TransportMove {
    /// Where the mass comes from (support of `f₊`).
    pub src: Segment,
    /// Where the mass goes (support of `f₋`).
    pub dst: Segment,
    /// Mass carried by the block (`> 0`).
    pub mass: f64,
    /// Exact cost contribution `∫ d(x, T(x))^p dμ` of the block.
    pub cost: f64,
}

/// A full transport plan with its total `p`-th-power cost.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportPlan {
    /// Cost exponent the plan was computed for.
    pub p: f64,
    /// Matched blocks in source order.
    pub moves: Vec<TransportMove>,
    /// `Σ cost` over the moves: the value of `W_p^p`.
    pub total_cost_p: f64,
}

impl TransportPlan {
    /// `W_p = total_cost_p^{1/p}`.
    pub fn value(&self) -> f64 {
        self.total_cost_p.powf(1.0 / self.p)
    }

    /// Total transported mass.
    pub fn total_mass(&self) -> f64 {
        self.moves.iter().map(|m| m.mass).sum()
    }

    /// Checks that the plan's marginals reproduce `f₊` and `f₋`:
    /// the aggregated density mismatch `∫|marginal − part|` must stay
    /// below `1e-9` of the transported mass. Only defined for continuum
    /// plans (segment moves); atom plans are validated by the discrete
    /// oracle against its own measure pair.
    ///
    /// # Errors
    /// [`Error::Precondition`] when the marginals do not match or the
    /// plan mixes atoms into a continuum check.
    pub fn check_marginals(&self, f: &StepFunction) -> Result<()> {
        let mass = self.total_mass();
        let limit = tol::PLAN_MASS_REL * mass.max(f64::MIN_POSITIVE);
        for (sign, pick) in [(1i8, 0usize), (-1i8, 1usize)] {
            let mut contributions: Vec<(usize, f64, f64, f64)> = Vec::new();
            for mv in &self.moves {
                let seg = if pick == 0 { mv.src } else { mv.dst };
                if seg.is_atom() {
                    return Err(Error::Precondition(
                        "marginal check on continuum plans only (atom move found)".into(),
                    ));
                }
                let density = mv.mass / seg.len();
                if f.domain().is_circle() && seg.end > CIRCLE_LEN {
                    contributions.push((seg.edge, seg.start, CIRCLE_LEN, density));
                    contributions.push((seg.edge, 0.0, seg.end - CIRCLE_LEN, density));
                } else {
                    contributions.push((seg.edge, seg.start, seg.end, density));
                }
            }
            let support = f.signed_support(sign);
            let mismatch = density_mismatch(f.domain(), &contributions, &support);
            if mismatch > limit {
                return Err(Error::Precondition(format!(
                    "plan marginal mismatch {mismatch:.3e} exceeds {limit:.3e} on the {} part",
                    if sign > 0 { "positive" } else { "negative" }
                )));
            }
        }
        Ok(())
    }
}

/// `∫ |Σ contributions − target|` per edge over the union of breakpoints.
fn density_mismatch(
    domain: &Domain,
    contributions: &[(usize, f64, f64, f64)],
    target: &[(usize, f64, f64, f64)],
) -> f64 {
    let mut total = 0.0;
    for e in 0..domain.edge_count() {
        let mut cuts: Vec<f64> = Vec::new();
        for &(ce, a, b, _) in contributions.iter().chain(target.iter()) {
            if ce == e {
                cuts.push(a);
                cuts.push(b);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= tol::POINT_EQ);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let got: f64 = contributions
                .iter()
                .filter(|&&(ce, s, t, _)| ce == e && s <= mid && mid < t)
                .map(|&(_, _, _, d)| d)
                .sum();
            let want: f64 = target
                .iter()
                .filter(|&&(ce, s, t, _)| ce == e && s <= mid && mid < t)
                .map(|&(_, _, _, d)| d)
                .sum();
            total += (got - want).abs() * (b - a);
        }
    }
    total
}
