//! Transport between the parts of a step function on a metric star
//! graph.
//!
//! When every edge carries a single sign (a *vertex-split* function),
//! the problem folds exactly onto a line: map each nonnegative edge to
//! the right of a common origin and each nonpositive edge, reflected,
//! to the left, summing densities where edges overlap. Positive mass
//! then sits entirely right of the origin and negative mass left of
//! it, so every line coupling moves mass across the origin and the
//! line distance `|x − y|` equals the star geodesic through the vertex.
//! Couplings of the star instance and of the folded instance are in
//! cost-preserving correspondence, hence the costs are equal and the
//! optimal line plan unfolds into an optimal star plan.
//!
//! Functions with a mixed-sign edge do not fold. For those the solver
//! falls back to midpoint discretization plus the exact finite solver,
//! which carries a certified error bound proportional to the cell
//! width.

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, DomainPoint, CIRCLE_LEN};
use crate::error::{Error, Result};
use crate::line::{abs_pow_integral, balance_check, check_exponent, wasserstein_interval};
use crate::oracle::{discretize, solve_discrete_ot};
use crate::plan::{Segment, TransportPlan};
use crate::stepfn::StepFunction;
use crate::tol;

/// A star instance folded onto an interval through the vertex.
#[derive(Clone, Debug)]
pub struct FoldedFunction {
    /// The folded line function (sum of edge densities per side).
    pub g: StepFunction,
    /// Coordinate of the star vertex inside the folded interval.
    pub vertex: f64,
    /// Edges carrying positive mass, mapped to the right of the vertex.
    pub plus_edges: Vec<usize>,
    /// Edges carrying negative mass, mapped (reflected) to the left.
    pub minus_edges: Vec<usize>,
}

/// How a star transport value was obtained.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StarMethod {
    /// Exact: the function was vertex-split and folded onto a line.
    Folded,
    /// Approximate: midpoint discretization with cell width `h`; the
    /// reported value is within `error_bound` of the true cost.
    Discretized {
        /// Cell width used for the discretization.
        h: f64,
        /// Certified absolute error bound on the value.
        error_bound: f64,
    },
}

/// Result of a star transport solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StarTransport {
    /// `W_p(f₊, f₋)` with the star geodesic ground distance (exact for
    /// [`StarMethod::Folded`], certified-approximate otherwise).
    pub value: f64,
    /// A transport plan in star coordinates.
    pub plan: TransportPlan,
    /// Which route produced the result.
    pub method: StarMethod,
}

/// Folds a vertex-split star function onto an interval.
///
/// # Errors
/// Rejects non-star domains and functions with an edge carrying both
/// signs ([`Error::Precondition`]).
pub fn fold_to_line(f: &StepFunction) -> Result<FoldedFunction> {
    let Domain::Star { edges } = f.domain() else {
        return Err(Error::DomainMismatch("fold_to_line requires a star domain".into()));
    };
    let mut plus_edges = Vec::new();
    let mut minus_edges = Vec::new();
    for e in 0..edges.len() {
        let mut has_pos = false;
        let mut has_neg = false;
        for pc in f.pieces(e) {
            has_pos |= pc.value > 0.0;
            has_neg |= pc.value < 0.0;
        }
        if has_pos && has_neg {
            return Err(Error::Precondition(format!(
                "edge {e} carries both signs; folding needs single-signed edges"
            )));
        }
        if has_pos {
            plus_edges.push(e);
        } else if has_neg {
            minus_edges.push(e);
        }
    }
    let reach = |list: &[usize]| list.iter().map(|&e| edges[e]).fold(0.0, f64::max);
    let vertex = reach(&minus_edges);
    let length = (vertex + reach(&plus_edges)).max(tol::POINT_EQ * 2.0);

    let mut contrib: Vec<(f64, f64, f64)> = Vec::new();
    for &e in &plus_edges {
        for pc in f.pieces(e) {
            if pc.value != 0.0 {
                contrib.push((vertex + pc.start, vertex + pc.end, pc.value));
            }
        }
    }
    for &e in &minus_edges {
        for pc in f.pieces(e) {
            if pc.value != 0.0 {
                contrib.push((vertex - pc.end, vertex - pc.start, pc.value));
            }
        }
    }
    let mut cuts: Vec<f64> = contrib.iter().flat_map(|&(a, b, _)| [a, b]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut pieces = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= tol::POINT_EQ {
            continue;
        }
        let mid = 0.5 * (a + b);
        let v: f64 = contrib
            .iter()
            .filter(|&&(s, e, _)| s <= mid && mid < e)
            .map(|&(_, _, v)| v)
            .sum();
        if v != 0.0 {
            pieces.push((0usize, a, b, v));
        }
    }
    let g = StepFunction::new(Domain::Interval { length }, pieces)?;
    Ok(FoldedFunction { g, vertex, plus_edges, minus_edges })
}

/// Optimal transport between the parts of a balanced step function on
/// a star graph: exact via folding when every edge is single-signed,
/// otherwise discretized with a certified error bound.
///
/// # Errors
/// Rejects non-star domains, `p < 1`, the zero function, and
/// unbalanced functions.
pub fn wasserstein_star(f: &StepFunction, p: f64) -> Result<StarTransport> {
    check_exponent(p)?;
    if !matches!(f.domain(), Domain::Star { .. }) {
        return Err(Error::DomainMismatch("wasserstein_star requires a star domain".into()));
    }
    balance_check(f)?;
    match fold_to_line(f) {
        Ok(fold) => {
            let (value, line_plan) = wasserstein_interval(&fold.g, p)?;
            let plan = unfold_line_plan(&fold, f, &line_plan, p);
            Ok(StarTransport { value, plan, method: StarMethod::Folded })
        }
        Err(Error::Precondition(_)) => {
            let h = f.domain().total_length() / 1000.0;
            wasserstein_star_discretized(f, p, h)
        }
        Err(e) => Err(e),
    }
}

/// Star transport via midpoint discretization at cell width `h` and
/// the exact finite solver; the value carries an absolute error bound
/// of three cell widths.
///
/// # Errors
/// As [`wasserstein_star`], plus the discretizer's atom-count limit.
pub fn wasserstein_star_discretized(f: &StepFunction, p: f64, h: f64) -> Result<StarTransport> {
    check_exponent(p)?;
    balance_check(f)?;
    let pair = discretize(f, h)?;
    let sol = solve_discrete_ot(f.domain(), &pair, p)?;
    Ok(StarTransport {
        value: sol.value,
        plan: sol.plan,
        method: StarMethod::Discretized { h, error_bound: tol::ORACLE_ERR_PER_H * h },
    })
}

/// Maps a monotone plan on the folded line back to star coordinates.
///
/// Every line move pairs mass right of the vertex (source) with mass
/// left of it (destination); within a move both sides have constant
/// density, so position is affine in the mass coordinate. The move is
/// split at every mass level where some edge's share of the stacked
/// density changes, and on each refined block the mass and the cost
/// divide across (source edge, destination edge) pairs in the product
/// of the density shares — the geodesic distance through the vertex
/// equals the line distance, so the split is cost-exact.
fn unfold_line_plan(
    fold: &FoldedFunction,
    f: &StepFunction,
    line_plan: &TransportPlan,
    p: f64,
) -> TransportPlan {
    let off = fold.vertex;
    let mut moves = Vec::new();
    for mv in &line_plan.moves {
        let (a, b) = (mv.src.start, mv.src.end);
        let (c, d) = (mv.dst.start, mv.dst.end);
        let m = mv.mass;
        let rho_s = m / (b - a);
        let rho_d = m / (d - c);
        // mass levels where a per-edge density boundary crosses the block
        let mut us = vec![0.0, m];
        let eps = 1e-14 * (1.0 + off);
        for &e in &fold.plus_edges {
            for pc in f.pieces(e) {
                if pc.value > 0.0 {
                    for t in [pc.start, pc.end] {
                        let x = off + t;
                        if x > a + eps && x < b - eps {
                            us.push(rho_s * (x - a));
                        }
                    }
                }
            }
        }
        for &e in &fold.minus_edges {
            for pc in f.pieces(e) {
                if pc.value < 0.0 {
                    for t in [pc.start, pc.end] {
                        let y = off - t;
                        if y > c + eps && y < d - eps {
                            us.push(rho_d * (y - c));
                        }
                    }
                }
            }
        }
        us.sort_by(f64::total_cmp);
        us.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * m);
        for w in us.windows(2) {
            let (u0, u1) = (w[0], w[1]);
            let du = u1 - u0;
            if du <= 0.0 {
                continue;
            }
            let x0 = a + u0 / rho_s;
            let x1 = a + u1 / rho_s;
            let y0 = c + u0 / rho_d;
            let y1 = c + u1 / rho_d;
            let block_cost = abs_pow_integral(x0 - y0, x1 - y1, du, p);
            let xm = 0.5 * (x0 + x1) - off;
            let ym = off - 0.5 * (y0 + y1);
            let src_shares = edge_shares(f, &fold.plus_edges, xm, 1.0);
            let dst_shares = edge_shares(f, &fold.minus_edges, ym, -1.0);
            for &(es, alpha) in &src_shares {
                for &(ed, beta) in &dst_shares {
                    let frac = alpha * beta;
                    moves.push(crate::plan::TransportMove {
                        src: Segment { edge: es, start: x0 - off, end: x1 - off },
                        dst: Segment { edge: ed, start: off - y1, end: off - y0 },
                        mass: frac * du,
                        cost: frac * block_cost,
                    });
                }
            }
        }
    }
    TransportPlan { p, moves, total_cost_p: line_plan.total_cost_p }
}

/// Density shares of the given edges at distance `t` from the vertex:
/// `(edge, ρ_e / Σρ)` over edges whose value at `t` has sign `sgn`.
fn edge_shares(f: &StepFunction, edges: &[usize], t: f64, sgn: f64) -> Vec<(usize, f64)> {
    let mut raw = Vec::new();
    let mut total = 0.0;
    for &e in edges {
        for pc in f.pieces(e) {
            if pc.start <= t && t < pc.end && pc.value * sgn > 0.0 {
                raw.push((e, pc.value.abs()));
                total += pc.value.abs();
                break;
            }
        }
    }
    for r in &mut raw {
        r.1 /= total;
    }
    raw
}

/// Scans a plan for pairs of moves whose sources and destinations
/// could be swapped at strictly lower total cost — a certificate of
/// suboptimality. Block moves are sampled at their midpoints. Returns
/// the offending move index pairs (empty for an optimal plan).
///
/// # Errors
/// Rejects plans whose segments fall outside the domain.
pub fn check_plan_monotonicity(
    plan: &TransportPlan,
    domain: &Domain,
) -> Result<Vec<(usize, usize)>> {
    let p = plan.p;
    let pts: Vec<(DomainPoint, DomainPoint)> = plan
        .moves
        .iter()
        .map(|mv| {
            let norm = |seg: &Segment| -> Result<DomainPoint> {
                let mut x = seg.midpoint();
                if domain.is_circle() {
                    x = x.rem_euclid(CIRCLE_LEN);
                }
                let pt = DomainPoint::new(seg.edge, x);
                domain.check_point(pt)?;
                Ok(pt)
            };
            Ok((norm(&mv.src)?, norm(&mv.dst)?))
        })
        .collect::<Result<_>>()?;
    let mut bad = Vec::new();
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let (xi, yi) = pts[i];
            let (xj, yj) = pts[j];
            let c_ii = domain.dist_unchecked(xi, yi).powf(p);
            let c_jj = domain.dist_unchecked(xj, yj).powf(p);
            let c_ij = domain.dist_unchecked(xi, yj).powf(p);
            let c_ji = domain.dist_unchecked(xj, yi).powf(p);
            let scale = c_ii + c_jj + c_ij + c_ji;
            if (c_ij + c_ji) - (c_ii + c_jj) < -tol::MONOTONE_SWAP_REL * scale {
                bad.push((i, j));
            }
        }
    }
    Ok(bad)
}
