//! Cost-decreasing reductions toward full-height, interface-adjacent form.
//!
//! Two transformations rewrite a balanced step function `f` without
//! increasing `W_p(f₊, f₋)`, without changing the domain, the sup-norm
//! `c∞ = ‖f‖∞`, the mass `‖f‖₁`, or the number of effective nodal points:
//!
//! * **Concentration** ([`concentrate_to_steps`]): every sign region is
//!   replaced by full-height blocks (`±c∞`) packed against the region's
//!   interfaces, with widths read off an optimal plan — the mass that
//!   leaves the region through each interface is stacked directly against
//!   it. Each piece of mass ends up at least as close to its destination
//!   as before, so the cost cannot go up.
//! * **Adjacency shift** ([`shift_to_adjacent`]): on full-height inputs,
//!   mass that an optimal plan carries across two or more interfaces is
//!   re-homed to the region right next to its source, shrinking the
//!   receiving block and growing a block adjacent to the donor. Iterating
//!   ends with a plan in which every move crosses exactly one interface
//!   ([`plan_is_nodally_adjacent`]).
//!
//! Circles are handled by cutting at an optimal point of the cyclic
//! solver and working on the cut-open interval: any rearrangement that
//! helps there helps on the circle, since the cyclic cost never exceeds
//! the cut-open cost and equals it at the chosen cut. The adjacency shift
//! is not defined on stars; concentration is, including the central
//! region around the vertex (overflow at one branch spills through the
//! vertex onto sibling branches, which are all equidistant from the exit).

use crate::circle::wasserstein_circle;
use crate::domain::{Domain, DomainPoint};
use crate::error::{Error, Result};
use crate::line::wasserstein_interval;
use crate::plan::{Segment, TransportPlan};
use crate::star::{wasserstein_star, StarMethod};
use crate::stepfn::StepFunction;
use crate::tol;
use serde::{Deserialize, Serialize};

/// Which rewriting a [`ReductionStep`] performed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionKind {
    /// Region masses packed into full-height blocks at the interfaces.
    Concentrate,
    /// Far-travelling mass re-homed next to its source until every move
    /// is interface-adjacent.
    AdjacencyShift,
}

/// Record of one reduction: costs before and after, and the (preserved)
/// number of effective nodal points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReductionStep {
    /// Which rewriting ran.
    pub kind: ReductionKind,
    /// `W_p` before the step.
    pub cost_before: f64,
    /// `W_p` after the step (`≤ cost_before` up to solver tolerance).
    pub cost_after: f64,
    /// Effective nodal points, identical before and after.
    pub nodal_count: usize,
    /// Solve–edit rounds used (1 for concentration).
    pub iterations: usize,
}

/// Result of a reduction chain: the rewritten function and one record
/// per step that ran.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Reduction {
    /// Cost exponent used throughout.
    pub p: f64,
    /// The rewritten function.
    pub result: StepFunction,
    /// Steps in execution order.
    pub steps: Vec<ReductionStep>,
}

impl Reduction {
    /// `W_p` of the original input (before the first step).
    pub fn initial_cost(&self) -> f64 {
        self.steps.first().map_or(f64::NAN, |s| s.cost_before)
    }

    /// `W_p` of [`Reduction::result`] (after the last step).
    pub fn final_cost(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.cost_after)
    }
}

// ---------------------------------------------------------------------------
// Interfaces, regions, and paths between them
// ---------------------------------------------------------------------------

/// Interface cut points, one per effective nodal point: per-edge sorted
/// coordinates plus a flag for a cut at the star vertex.
struct Cuts {
    per_edge: Vec<Vec<f64>>,
    vertex: bool,
}

impl Cuts {
    fn total(&self) -> usize {
        self.per_edge.iter().map(Vec::len).sum::<usize>() + usize::from(self.vertex)
    }
}

fn cut_points(f: &StepFunction) -> Cuts {
    let dom = f.domain();
    let is_star = matches!(dom, Domain::Star { .. });
    let mut per_edge = vec![Vec::new(); dom.edge_count()];
    let mut vertex = false;
    for s in f.nodal_structures() {
        if is_star && s.repr.coord <= tol::POINT_EQ {
            vertex = true;
        } else {
            per_edge[s.repr.edge].push(s.repr.coord);
        }
    }
    for cs in &mut per_edge {
        cs.sort_by(f64::total_cmp);
    }
    Cuts { per_edge, vertex }
}

/// First interface crossed walking from `from` toward `to`, or `None`
/// when both points sit in the same region.
enum PathCut {
    At(usize, f64),
    Vertex,
}

fn first_cut_on_path(cuts: &Cuts, from: DomainPoint, to: DomainPoint) -> Option<PathCut> {
    if from.edge == to.edge {
        let (lo, hi) = (from.coord.min(to.coord), from.coord.max(to.coord));
        let between = cuts.per_edge[from.edge]
            .iter()
            .copied()
            .filter(|&c| c > lo + tol::POINT_EQ && c < hi - tol::POINT_EQ);
        return if from.coord <= to.coord {
            between.fold(None, |best: Option<f64>, c| Some(best.map_or(c, |b| b.min(c))))
        } else {
            between.fold(None, |best: Option<f64>, c| Some(best.map_or(c, |b| b.max(c))))
        }
        .map(|c| PathCut::At(from.edge, c));
    }
    // Different edges: the geodesic runs through the vertex.
    if let Some(c) = cuts.per_edge[from.edge]
        .iter()
        .copied()
        .filter(|&c| c < from.coord - tol::POINT_EQ)
        .fold(None, |best: Option<f64>, c| Some(best.map_or(c, |b| b.max(c))))
    {
        return Some(PathCut::At(from.edge, c));
    }
    if cuts.vertex {
        return Some(PathCut::Vertex);
    }
    cuts.per_edge[to.edge]
        .iter()
        .copied()
        .filter(|&c| c < to.coord - tol::POINT_EQ)
        .fold(None, |best: Option<f64>, c| Some(best.map_or(c, |b| b.min(c))))
        .map(|c| PathCut::At(to.edge, c))
}

/// Number of interfaces crossed walking the geodesic from `a` to `b`.
fn cuts_crossed(cuts: &Cuts, a: DomainPoint, b: DomainPoint) -> usize {
    if a.edge == b.edge {
        let (lo, hi) = (a.coord.min(b.coord), a.coord.max(b.coord));
        return cuts.per_edge[a.edge]
            .iter()
            .filter(|&&c| c > lo + tol::POINT_EQ && c < hi - tol::POINT_EQ)
            .count();
    }
    let below = |edge: usize, coord: f64| {
        cuts.per_edge[edge]
            .iter()
            .filter(|&&c| c < coord - tol::POINT_EQ)
            .count()
    };
    below(a.edge, a.coord) + below(b.edge, b.coord) + usize::from(cuts.vertex)
}

/// One maximal interval of a region on a single edge.
#[derive(Clone, Copy, Debug)]
struct Stretch {
    edge: usize,
    lo: f64,
    hi: f64,
}

/// An interface on the boundary of a region, with the mass the optimal
/// plan carries across it (filled by the tally pass).
#[derive(Clone, Copy, Debug)]
struct RegionExit {
    edge: usize,
    coord: f64,
    at_low: bool,
    mass: f64,
}

/// A maximal connected component of the domain minus the interfaces:
/// single-signed, with the crossing mass tallied per boundary interface.
struct Region {
    sign: i8,
    mass: f64,
    stretches: Vec<Stretch>,
    exits: Vec<RegionExit>,
}

fn build_regions(f: &StepFunction) -> Result<(Vec<Region>, Cuts)> {
    let dom = f.domain();
    let is_star = matches!(dom, Domain::Star { .. });
    let cuts = cut_points(f);
    if cuts.total() == 0 {
        return Err(Error::Degenerate(
            "the function has no sign interfaces to concentrate against".into(),
        ));
    }

    let mut regions: Vec<Region> = Vec::new();
    let mut central: Vec<Stretch> = Vec::new();
    for e in 0..dom.edge_count() {
        let mut bounds = vec![0.0];
        bounds.extend_from_slice(&cuts.per_edge[e]);
        bounds.push(dom.edge_length(e));
        for w in bounds.windows(2) {
            if w[1] - w[0] <= tol::POINT_EQ {
                continue;
            }
            let st = Stretch { edge: e, lo: w[0], hi: w[1] };
            if is_star && !cuts.vertex && st.lo <= tol::POINT_EQ {
                central.push(st);
            } else {
                regions.push(Region { sign: 0, mass: 0.0, stretches: vec![st], exits: Vec::new() });
            }
        }
    }
    if !central.is_empty() {
        regions.push(Region { sign: 0, mass: 0.0, stretches: central, exits: Vec::new() });
    }

    let zero_abs = f.zero_threshold();
    let is_cut = |edge: usize, x: f64| {
        cuts.per_edge[edge].iter().any(|&c| (c - x).abs() <= tol::POINT_EQ)
    };
    for region in &mut regions {
        for st in &region.stretches {
            for piece in f.pieces(st.edge) {
                let lo = piece.start.max(st.lo);
                let hi = piece.end.min(st.hi);
                if hi - lo <= tol::POINT_EQ || piece.value.abs() <= zero_abs {
                    continue;
                }
                region.mass += piece.value.abs() * (hi - lo);
                let s: i8 = if piece.value > 0.0 { 1 } else { -1 };
                if region.sign == 0 {
                    region.sign = s;
                } else if region.sign != s {
                    return Err(Error::Precondition(
                        "concentration requires every interface-bounded region to carry a \
                         single sign; this function has a mixed region"
                            .into(),
                    ));
                }
            }
            let mut push_exit = |coord: f64, at_low: bool| {
                region.exits.push(RegionExit { edge: st.edge, coord, at_low, mass: 0.0 });
            };
            if st.lo <= tol::POINT_EQ {
                if is_star && cuts.vertex {
                    push_exit(0.0, true);
                }
            } else if is_cut(st.edge, st.lo) {
                push_exit(st.lo, true);
            }
            if is_cut(st.edge, st.hi) {
                push_exit(st.hi, false);
            }
        }
    }
    Ok((regions, cuts))
}

fn region_index_of(regions: &[Region], pt: DomainPoint) -> Option<usize> {
    regions.iter().position(|r| {
        r.stretches.iter().any(|st| {
            st.edge == pt.edge
                && pt.coord >= st.lo - tol::POINT_EQ
                && pt.coord <= st.hi + tol::POINT_EQ
        })
    })
}

fn segment_midpoint(seg: &Segment) -> DomainPoint {
    DomainPoint::new(seg.edge, 0.5 * (seg.start + seg.end))
}

/// Adds `mass` to the exit of `region` matched by `cut`.
fn credit_exit(region: &mut Region, cut: &PathCut, mass: f64) -> Result<()> {
    let found = region.exits.iter_mut().find(|e| match cut {
        PathCut::At(edge, coord) => e.edge == *edge && (e.coord - coord).abs() <= tol::POINT_EQ,
        PathCut::Vertex => e.coord <= tol::POINT_EQ,
    });
    match found {
        Some(e) => {
            e.mass += mass;
            Ok(())
        }
        None => Err(Error::Degenerate(
            "an optimal-plan move leaves a region through a point that is not one of \
             its interfaces"
                .into(),
        )),
    }
}

/// Packs a region's mass into full-height blocks hugging its exits.
///
/// Pass 1 stacks each exit's mass against that exit inside its own
/// stretch; pass 2 spills any overflow through the vertex onto sibling
/// stretches (multi-stretch regions only), filling from the vertex out.
fn pack_region(region: &Region, c_inf: f64) -> Result<Vec<(usize, f64, f64, f64)>> {
    if region.sign == 0 {
        return Ok(Vec::new());
    }
    let value = f64::from(region.sign) * c_inf;
    let n = region.stretches.len();
    let mut bottom = vec![0.0; n];
    let mut top = vec![0.0; n];

    let tallied: f64 = region.exits.iter().map(|e| e.mass).sum();
    if tallied <= 0.0 {
        return Err(Error::Degenerate(
            "a region carries mass but the optimal plan moves none of it across an \
             interface"
                .into(),
        ));
    }
    let scale = region.mass / tallied;

    let mut leftovers: Vec<f64> = Vec::new();
    for exit in &region.exits {
        let mut width = exit.mass * scale / c_inf;
        let si = region
            .stretches
            .iter()
            .position(|st| {
                st.edge == exit.edge
                    && if exit.at_low {
                        (st.lo - exit.coord).abs() <= tol::POINT_EQ
                    } else {
                        (st.hi - exit.coord).abs() <= tol::POINT_EQ
                    }
            })
            .expect("every exit lies at the end of one of its region's stretches");
        let cap = (region.stretches[si].hi - region.stretches[si].lo) - bottom[si] - top[si];
        let take = width.min(cap).max(0.0);
        if exit.at_low {
            bottom[si] += take;
        } else {
            top[si] += take;
        }
        width -= take;
        if width > tol::POINT_EQ {
            leftovers.push(width);
        }
    }
    for mut width in leftovers {
        for si in 0..n {
            let cap =
                (region.stretches[si].hi - region.stretches[si].lo) - bottom[si] - top[si];
            let take = width.min(cap).max(0.0);
            bottom[si] += take;
            width -= take;
            if width <= tol::POINT_EQ {
                break;
            }
        }
        if width > 1e-9 {
            return Err(Error::Degenerate(
                "a region's mass does not fit against its interfaces at full height".into(),
            ));
        }
    }

    let mut blocks = Vec::new();
    for (si, st) in region.stretches.iter().enumerate() {
        if bottom[si] > tol::POINT_EQ {
            blocks.push((st.edge, st.lo, st.lo + bottom[si], value));
        }
        if top[si] > tol::POINT_EQ {
            let start = (st.hi - top[si]).max(st.lo + bottom[si]);
            blocks.push((st.edge, start, st.hi, value));
        }
    }
    Ok(blocks)
}

// ---------------------------------------------------------------------------
// Solving per domain
// ---------------------------------------------------------------------------

/// Solves on the function's own domain and reports any approximation
/// slack (nonzero only for the discretized star fallback).
fn solve_cost(f: &StepFunction, p: f64) -> Result<(f64, TransportPlan, f64)> {
    match f.domain() {
        Domain::Interval { .. } => {
            let (value, plan) = wasserstein_interval(f, p)?;
            Ok((value, plan, 0.0))
        }
        Domain::Circle => {
            let r = wasserstein_circle(f, p)?;
            Ok((r.value, r.plan, 0.0))
        }
        Domain::Star { .. } => {
            let r = wasserstein_star(f, p)?;
            let slack = match r.method {
                StarMethod::Discretized { error_bound, .. } => error_bound,
                StarMethod::Folded => 0.0,
            };
            Ok((r.value, r.plan, slack))
        }
    }
}

fn assert_not_worse(before: f64, after: f64, slack: f64, what: &str) {
    let limit = before + slack + tol::REDUCTION_SLACK_ABS * (1.0 + before.abs());
    assert!(
        after <= limit,
        "{what} increased the cost: {before} -> {after} (allowed {limit})"
    );
}

// ---------------------------------------------------------------------------
// Concentration
// ---------------------------------------------------------------------------

/// Rewrites `f` with every region's mass packed into full-height blocks
/// (`±‖f‖∞`) stacked against the region's interfaces, sized by how much
/// mass an optimal plan carries across each interface.
///
/// Preserves the domain, `‖f‖∞`, `‖f‖₁`, and the number of effective
/// nodal points; never increases `W_p`. On the circle the rewriting is
/// performed on the interval cut open at an optimal point of the cyclic
/// solver and mapped back.
///
/// # Errors
/// Everything the underlying solvers report, plus
/// [`Error::Precondition`] when a star's central region carries both
/// signs (no single-signed packing exists there) and
/// [`Error::Degenerate`] when `f` has no sign interfaces.
pub fn concentrate_to_steps(f: &StepFunction, p: f64) -> Result<Reduction> {
    let nodal_count = f.effective_nodal_set().len();
    let (result, cost_before, cost_after) = match f.domain() {
        Domain::Circle => {
            let circ = wasserstein_circle(f, p)?;
            let unrolled = f.unrolled_at(circ.cut)?;
            let (g_line, _, _) = concentrate_core(&unrolled, p)?;
            let g = StepFunction::new(Domain::Circle, g_line.piece_tuples())?
                .rotated(circ.cut)?;
            let after = wasserstein_circle(&g, p)?.value;
            assert_not_worse(circ.value, after, 0.0, "concentration");
            (g, circ.value, after)
        }
        _ => concentrate_core(f, p)?,
    };
    let count_after = result.effective_nodal_set().len();
    assert_eq!(
        nodal_count, count_after,
        "concentration changed the number of effective nodal points"
    );
    Ok(Reduction {
        p,
        result,
        steps: vec![ReductionStep {
            kind: ReductionKind::Concentrate,
            cost_before,
            cost_after,
            nodal_count,
            iterations: 1,
        }],
    })
}

fn concentrate_core(f: &StepFunction, p: f64) -> Result<(StepFunction, f64, f64)> {
    let c_inf = f.norms().linf;
    if c_inf <= 0.0 {
        return Err(Error::Degenerate("the zero function has nothing to concentrate".into()));
    }
    let (before, plan, slack_before) = solve_cost(f, p)?;
    let (mut regions, cuts) = build_regions(f)?;

    let mass_floor = tol::PLAN_MASS_REL * plan.moves.iter().map(|m| m.mass).sum::<f64>();
    for mv in &plan.moves {
        if mv.mass <= mass_floor {
            continue;
        }
        let src = segment_midpoint(&mv.src);
        let dst = segment_midpoint(&mv.dst);
        let (si, di) = match (region_index_of(&regions, src), region_index_of(&regions, dst)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Degenerate(
                    "an optimal-plan move references a point outside every region".into(),
                ))
            }
        };
        if si == di {
            continue;
        }
        if let Some(cut) = first_cut_on_path(&cuts, src, dst) {
            credit_exit(&mut regions[si], &cut, mv.mass)?;
        }
        if let Some(cut) = first_cut_on_path(&cuts, dst, src) {
            credit_exit(&mut regions[di], &cut, mv.mass)?;
        }
    }

    let mut blocks = Vec::new();
    for region in &regions {
        if region.mass <= tol::POINT_EQ * c_inf {
            continue;
        }
        blocks.extend(pack_region(region, c_inf)?);
    }
    let g = StepFunction::new(f.domain().clone(), blocks)?;
    let (after, _, slack_after) = solve_cost(&g, p)?;
    assert_not_worse(before, after, slack_before + slack_after, "concentration");
    Ok((g, before, after))
}

// ---------------------------------------------------------------------------
// Adjacency shift
// ---------------------------------------------------------------------------

/// One interface of a full-height configuration with the block widths
/// hugging it: `l` to the left of `z`, `r` to the right. The sign right
/// of `z` is `s_right`; left of `z` it is `-s_right`.
#[derive(Clone, Copy, Debug)]
struct Cluster {
    z: f64,
    l: f64,
    r: f64,
    s_right: i8,
}

/// Reads the interface/block structure off a full-height interval
/// function: every signed run must have height `‖f‖∞` and stack against
/// an interface (plateaus against one consistent point).
fn interval_clusters(f: &StepFunction) -> Result<(Vec<Cluster>, f64)> {
    let norms = f.norms();
    let c_inf = norms.linf;
    if c_inf <= 0.0 {
        return Err(Error::Degenerate("the zero function has no blocks to shift".into()));
    }
    let zero_abs = f.zero_threshold();
    for piece in f.pieces(0) {
        let v = piece.value.abs();
        if v > zero_abs && (v - c_inf).abs() > tol::CLASS_REL * c_inf {
            return Err(Error::Precondition(
                "the adjacency shift needs a full-height input: every value must be 0 or \
                 ±‖f‖∞ (run concentration first)"
                    .into(),
            ));
        }
    }
    let structures = f.nodal_structures();
    if structures.is_empty() {
        return Err(Error::Degenerate("the function has no sign interfaces".into()));
    }
    let dom = f.domain();

    let mut claims: Vec<Option<DomainPoint>> = vec![None; structures.len()];
    let mut left_w = vec![0.0; structures.len()];
    let mut right_w = vec![0.0; structures.len()];
    let mut sign_right = vec![0i8; structures.len()];
    for run in f.sign_runs(0, zero_abs) {
        if run.sign == 0 {
            continue;
        }
        let width = run.end - run.start;
        let mut anchored = false;
        for (is_start, at) in [(true, run.start), (false, run.end)] {
            let pt = DomainPoint::new(0, at);
            let Some(idx) = structures.iter().position(|s| s.extent.contains(dom, pt)) else {
                continue;
            };
            let ok = match claims[idx] {
                None => true,
                Some(prev) => dom.dist_unchecked(prev, pt) <= tol::POINT_EQ,
            };
            if !ok {
                continue;
            }
            claims[idx].get_or_insert(pt);
            if is_start {
                right_w[idx] += width;
                sign_right[idx] = run.sign;
            } else {
                left_w[idx] += width;
                if sign_right[idx] == 0 {
                    sign_right[idx] = -run.sign;
                }
            }
            anchored = true;
            break;
        }
        if !anchored {
            return Err(Error::Precondition(
                "the adjacency shift needs every full-height block stacked against an \
                 interface (run concentration first)"
                    .into(),
            ));
        }
    }

    let mut clusters: Vec<Cluster> = structures
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let z = claims[i].map_or(s.repr.coord, |pt| pt.coord);
            Cluster { z, l: left_w[i], r: right_w[i], s_right: sign_right[i] }
        })
        .collect();
    clusters.sort_by(|a, b| a.z.total_cmp(&b.z));

    // Fill signs for interfaces that attracted no block (possible for a
    // plateau whose neighbours anchored elsewhere), then check the signs
    // alternate, as they must across sign interfaces.
    for cluster in &mut clusters {
        if cluster.s_right == 0 {
            let z = cluster.z;
            let next = f
                .pieces(0)
                .iter()
                .find(|p| p.end > z + tol::POINT_EQ && p.value.abs() > zero_abs);
            cluster.s_right = next.map_or(0, |p| if p.value > 0.0 { 1 } else { -1 });
        }
    }
    for w in clusters.windows(2) {
        if w[0].z >= w[1].z - tol::POINT_EQ || w[0].s_right != -w[1].s_right {
            return Err(Error::Precondition(
                "interfaces must be separated and strictly sign-alternating".into(),
            ));
        }
    }
    Ok((clusters, c_inf))
}

fn rebuild_clusters(
    clusters: &[Cluster],
    c_inf: f64,
    domain: &Domain,
) -> Result<StepFunction> {
    let mut pieces = Vec::new();
    for c in clusters {
        let sr = f64::from(c.s_right) * c_inf;
        if c.l > tol::POINT_EQ {
            pieces.push((0, c.z - c.l, c.z, -sr));
        }
        if c.r > tol::POINT_EQ {
            pieces.push((0, c.z, c.z + c.r, sr));
        }
    }
    StepFunction::new(domain.clone(), pieces)
}

/// Outcome of the interval shift loop.
struct ShiftOutcome {
    result: StepFunction,
    cost_before: f64,
    cost_after: f64,
    iterations: usize,
}

fn shift_interval_core(f: &StepFunction, p: f64) -> Result<ShiftOutcome> {
    let (mut clusters, c_inf) = interval_clusters(f)?;
    let dom = f.domain().clone();
    let length = dom.edge_length(0);
    let mut cur = rebuild_clusters(&clusters, c_inf, &dom)?;
    debug_assert!(
        cur.l1_distance(f).unwrap_or(f64::INFINITY) <= 1e-9 * (1.0 + f.norms().l1),
        "cluster extraction must reproduce the input exactly"
    );

    let mut cost_before = f64::NAN;
    let mut prev_cost: Option<f64> = None;
    let mut iterations = 0usize;
    loop {
        let (w, plan) = wasserstein_interval(&cur, p)?;
        if let Some(pw) = prev_cost {
            assert_not_worse(pw, w, 0.0, "adjacency shift iteration");
        } else {
            cost_before = w;
        }
        prev_cost = Some(w);

        let zs: Vec<f64> = clusters.iter().map(|c| c.z).collect();
        let region_of = |x: f64| zs.partition_point(|&z| z < x);
        let mass_floor =
            tol::PLAN_MASS_REL * plan.moves.iter().map(|m| m.mass).sum::<f64>();
        // Candidate fixes: moves crossing two or more interfaces. Fixing
        // the one with the farthest destination first keeps every region
        // inhabited: the region just before such a destination must
        // itself feed it in a monotone plan, so the fix never drains the
        // receiving region completely.
        let mut best: Option<(usize, usize, usize)> = None; // (move, src region, dst region)
        for (mi, mv) in plan.moves.iter().enumerate() {
            if mv.mass <= mass_floor {
                continue;
            }
            let i = region_of(0.5 * (mv.src.start + mv.src.end));
            let k = region_of(0.5 * (mv.dst.start + mv.dst.end));
            if k >= i + 2 {
                if best.is_none_or(|(_, bi, bk)| bk <= bi || k > bk) {
                    best = Some((mi, i, k));
                }
            } else if k + 2 <= i && best.is_none_or(|(_, bi, bk)| bk < bi && k < bk) {
                best = Some((mi, i, k));
            }
        }
        let Some((mi, i, k)) = best else {
            return Ok(ShiftOutcome {
                result: cur,
                cost_before,
                cost_after: w,
                iterations,
            });
        };

        let mv = &plan.moves[mi];
        let n = clusters.len();
        let dst_mid = 0.5 * (mv.dst.start + mv.dst.end);
        let want = mv.mass / c_inf;
        if k > i {
            // Rightward: take from the receiving block in region k, grow
            // the block just right of the donor's interface z_i.
            let near = k == n || dst_mid <= clusters[k - 1].z + clusters[k - 1].r;
            let delta = if near {
                let d = want.min(clusters[k - 1].r);
                clusters[k - 1].z += d;
                clusters[k - 1].r -= d;
                d
            } else {
                let d = want.min(clusters[k].l);
                clusters[k].l -= d;
                d
            };
            assert!(delta > 0.0, "an interface-skipping move targets an empty block");
            clusters[i].r += delta;
            let mut prev_end = 0.0;
            for c in clusters.iter_mut() {
                let lead = c.z - c.l;
                if lead < prev_end - tol::POINT_EQ {
                    c.z += prev_end - lead;
                }
                prev_end = c.z + c.r;
            }
            assert!(prev_end <= length + 1e-9, "repacking ran past the domain end");
        } else {
            // Leftward mirror.
            let near = k == 0 || dst_mid >= clusters[k].z - clusters[k].l;
            let delta = if near {
                let d = want.min(clusters[k].l);
                clusters[k].z -= d;
                clusters[k].l -= d;
                d
            } else {
                let d = want.min(clusters[k - 1].r);
                clusters[k - 1].r -= d;
                d
            };
            assert!(delta > 0.0, "an interface-skipping move targets an empty block");
            clusters[i - 1].l += delta;
            let mut next_start = length;
            for c in clusters.iter_mut().rev() {
                let trail = c.z + c.r;
                if trail > next_start + tol::POINT_EQ {
                    c.z -= trail - next_start;
                }
                next_start = c.z - c.l;
            }
            assert!(next_start >= -1e-9, "repacking ran past the domain start");
        }

        cur = rebuild_clusters(&clusters, c_inf, &dom)?;
        iterations += 1;
        if iterations > 10_000 {
            return Err(Error::Degenerate(
                "the adjacency shift did not converge within 10000 iterations".into(),
            ));
        }
    }
}

/// Iteratively re-homes mass that an optimal plan carries across two or
/// more interfaces until every move is interface-adjacent.
///
/// Requires a full-height input (values in `{0, ±‖f‖∞}` with blocks
/// stacked against interfaces — the output of [`concentrate_to_steps`]).
/// Preserves the domain, `‖f‖∞`, `‖f‖₁`, and the number of effective
/// nodal points; never increases `W_p`. Circles are cut open at an
/// optimal point and rewritten as intervals; stars are not supported.
///
/// # Errors
/// [`Error::Precondition`] for non-full-height inputs or star domains,
/// [`Error::Degenerate`] if the loop fails to converge, plus anything
/// the solvers report.
pub fn shift_to_adjacent(f: &StepFunction, p: f64) -> Result<Reduction> {
    let nodal_count = f.effective_nodal_set().len();
    let (result, cost_before, cost_after, iterations) = match f.domain() {
        Domain::Interval { .. } => {
            let out = shift_interval_core(f, p)?;
            (out.result, out.cost_before, out.cost_after, out.iterations)
        }
        Domain::Circle => {
            let circ = wasserstein_circle(f, p)?;
            let unrolled = f.unrolled_at(circ.cut)?;
            let out = shift_interval_core(&unrolled, p)?;
            let g = StepFunction::new(Domain::Circle, out.result.piece_tuples())?
                .rotated(circ.cut)?;
            let after = wasserstein_circle(&g, p)?.value;
            assert_not_worse(circ.value, after, 0.0, "adjacency shift");
            (g, circ.value, after, out.iterations)
        }
        Domain::Star { .. } => {
            return Err(Error::Precondition(
                "the adjacency shift is defined on intervals and circles only".into(),
            ))
        }
    };
    let count_after = result.effective_nodal_set().len();
    assert_eq!(
        nodal_count, count_after,
        "the adjacency shift changed the number of effective nodal points"
    );
    Ok(Reduction {
        p,
        result,
        steps: vec![ReductionStep {
            kind: ReductionKind::AdjacencyShift,
            cost_before,
            cost_after,
            nodal_count,
            iterations: iterations.max(1),
        }],
    })
}

/// Concentration followed by the adjacency shift: from an arbitrary
/// balanced step function to a full-height configuration whose optimal
/// plan only ever crosses a single interface.
///
/// Intervals and circles only (the shift is undefined on stars).
pub fn reduce_to_adjacent_steps(f: &StepFunction, p: f64) -> Result<Reduction> {
    if matches!(f.domain(), Domain::Star { .. }) {
        return Err(Error::Precondition(
            "the adjacency shift is defined on intervals and circles only".into(),
        ));
    }
    let first = concentrate_to_steps(f, p)?;
    let second = shift_to_adjacent(&first.result, p)?;
    let mut steps = first.steps;
    steps.extend(second.steps);
    Ok(Reduction { p, result: second.result, steps })
}

/// Whether every move of `plan` crosses exactly one interface of `f`.
///
/// Supports intervals and stars; for a circle instance, evaluate the
/// plan of the cut-open interval instead (the cyclic solver's plans are
/// produced that way).
///
/// # Errors
/// [`Error::Precondition`] on circle domains, [`Error::Degenerate`] when
/// `f` has no interfaces.
pub fn plan_is_nodally_adjacent(f: &StepFunction, plan: &TransportPlan) -> Result<bool> {
    if f.domain().is_circle() {
        return Err(Error::Precondition(
            "evaluate adjacency on the interval cut open at the plan's cut point".into(),
        ));
    }
    let cuts = cut_points(f);
    if cuts.total() == 0 {
        return Err(Error::Degenerate("the function has no sign interfaces".into()));
    }
    let mass_floor = tol::PLAN_MASS_REL * plan.moves.iter().map(|m| m.mass).sum::<f64>();
    for mv in &plan.moves {
        if mv.mass <= mass_floor {
            continue;
        }
        let crossed = cuts_crossed(&cuts, segment_midpoint(&mv.src), segment_midpoint(&mv.dst));
        if crossed != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}
