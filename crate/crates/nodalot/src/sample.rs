//! Seeded random generation of class specifications and member functions.
//!
//! The generators build functions that lie in their class **exactly** (by
//! construction, not by rejection): the L¹ norm, sup norm, and effective
//! nodal count all match the [`ClassSpec`]. Two flavors are produced:
//!
//! * **Step-structured skeletons**: full-height `±c∞` blocks hugging each
//!   nodal point — jittered equally spaced crossings on lines, a mixed-sign
//!   vertex cluster plus interior bumps on stars. Widths are
//!   Dirichlet-distributed (normalized exponentials) and clipped to the
//!   room between neighboring structures by proportional water filling.
//! * **Roughened members**: each skeleton block may be stretched away from
//!   its nodal point and split into 2–4 sub-pieces of varying height in
//!   `(0, c∞]`, preserving the block's mass and sign and keeping the piece
//!   that touches the nodal point at full height. The result stays in the
//!   class but leaves the step-structured subclass.
//!
//! Determinism: every generator takes an explicit RNG; [`trial_rng`]
//! derives an independent, reproducible stream per `(seed, trial)` pair so
//! parallel trial execution cannot change the sampled instances.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, CIRCLE_LEN};
use crate::error::{Error, Result};
use crate::stepfn::{ClassSpec, StepFunction};

/// Which domain geometry to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// A bounded interval.
    Interval,
    /// The circle of circumference 2π.
    Circle,
    /// A metric star graph.
    Star,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::Interval => "interval",
            DomainKind::Circle => "circle",
            DomainKind::Star => "star",
        })
    }
}

impl FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(DomainKind::Interval),
            "circle" => Ok(DomainKind::Circle),
            "star" => Ok(DomainKind::Star),
            other => Err(Error::InvalidInput(format!(
                "unknown domain kind {other:?}; expected interval, circle, or star"
            ))),
        }
    }
}

/// An independent, reproducible RNG stream for one trial: the stream index
/// of a counter-based generator is set to the trial number, so any subset
/// of trials can run in any order (or in parallel) with identical draws.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// A sampled class member, tagged with whether it is step-structured.
#[derive(Clone, Debug)]
pub struct SampledInstance {
    /// The class the function belongs to.
    pub spec: ClassSpec,
    /// Cost exponent to use with this instance.
    pub p: f64,
    /// The member function (in the class exactly, by construction).
    pub f: StepFunction,
    /// `true` when no block was roughened (the function is in the
    /// step-structured subclass).
    pub in_step_class: bool,
}

/// Draws a feasible class specification on the given domain kind:
/// `c∞ ∈ [0.5, 2]`, `N ∈ [1, 6]` (even on the circle), and `c₁` well
/// inside the feasible range so that jittered skeletons always fit.
pub fn random_spec(rng: &mut ChaCha8Rng, kind: DomainKind) -> ClassSpec {
    let c_inf = rng.gen_range(0.5..=2.0);
    match kind {
        DomainKind::Interval => {
            let length = rng.gen_range(1.0..=4.0);
            let n_nodal = rng.gen_range(1..=6);
            let c_1 = c_inf * length * rng.gen_range(0.1..=0.85);
            ClassSpec { c_inf, c_1, n_nodal, domain: Domain::Interval { length } }
        }
        DomainKind::Circle => {
            let n_nodal = 2 * rng.gen_range(1..=3);
            let c_1 = c_inf * CIRCLE_LEN * rng.gen_range(0.1..=0.85);
            ClassSpec { c_inf, c_1, n_nodal, domain: Domain::Circle }
        }
        DomainKind::Star => {
            let d_edges = rng.gen_range(2..=5);
            let edges: Vec<f64> = (0..d_edges).map(|_| rng.gen_range(0.3..=3.0)).collect();
            let total: f64 = edges.iter().sum();
            let n_nodal = rng.gen_range(1..=6);
            let c_1 = c_inf * total * rng.gen_range(0.08..=0.4);
            ClassSpec { c_inf, c_1, n_nodal, domain: Domain::Star { edges } }
        }
    }
}

/// Draws a cost exponent from `{1, 1.5, 2, 3}`.
pub fn random_exponent(rng: &mut ChaCha8Rng) -> f64 {
    [1.0, 1.5, 2.0, 3.0][rng.gen_range(0..4)]
}

/// A positive exponential draw (so normalized vectors of these are
/// uniformly Dirichlet-distributed).
fn exp_weight(rng: &mut ChaCha8Rng) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln().max(f64::MIN_POSITIVE.ln()) + 1e-12
}

/// Distributes `target` over slots proportionally to `weights`, clipping
/// at `caps` and re-spreading the excess among the unclipped slots.
/// Returns `None` when the caps cannot absorb the target.
fn proportional_fill(target: f64, weights: &[f64], caps: &[f64]) -> Option<Vec<f64>> {
    let total_cap: f64 = caps.iter().sum();
    if target > total_cap * (1.0 + 1e-12) {
        return None;
    }
    let mut out = vec![0.0; caps.len()];
    let mut open: Vec<usize> = (0..caps.len()).collect();
    let mut rem = target;
    for _ in 0..=caps.len() {
        if open.is_empty() || rem <= 0.0 {
            return Some(out);
        }
        let wsum: f64 = open.iter().map(|&j| weights[j]).sum();
        let mut clipped = false;
        open.retain(|&j| {
            let share = rem * weights[j] / wsum;
            if share > caps[j] {
                out[j] = caps[j];
                clipped = true;
                false
            } else {
                true
            }
        });
        if clipped {
            rem = target - out.iter().sum::<f64>();
        } else {
            for &j in &open {
                out[j] = rem * weights[j] / wsum;
            }
            return Some(out);
        }
    }
    Some(out)
}

/// One full-height block to be emitted, possibly roughened: the block
/// covers `width` starting at the nodal point and growing in `dir`
/// (`+1` right, `-1` left), with `headroom` of adjacent free space to
/// stretch into.
struct Block {
    edge: usize,
    anchor: f64,
    dir: f64,
    width: f64,
    headroom: f64,
    sign: f64,
}

/// Emits a block's pieces, roughening it with probability `rough_prob`
/// when there is room. Returns `true` if the block was roughened.
///
/// Roughening stretches the block away from its anchor into the headroom
/// and splits it into 2–4 sub-pieces with heights in `(0, 0.91·c∞]`,
/// keeping the anchor-adjacent piece at exactly `±c∞` and preserving the
/// block's total mass, so norms and nodal structure are unchanged.
fn emit_block(
    b: &Block,
    c_inf: f64,
    rough_prob: f64,
    rng: &mut ChaCha8Rng,
    pieces: &mut Vec<(usize, f64, f64, f64)>,
) -> bool {
    let span = |from: f64, to: f64| -> (f64, f64) {
        if b.dir > 0.0 {
            (b.anchor + from, b.anchor + to)
        } else {
            (b.anchor - to, b.anchor - from)
        }
    };
    let max_width = b.width + b.headroom;
    let rough = rng.gen_bool(rough_prob) && max_width >= 1.15 * b.width;
    if !rough {
        let (x0, x1) = span(0.0, b.width);
        pieces.push((b.edge, x0, x1, b.sign * c_inf));
        return false;
    }
    let stretched = rng.gen_range(1.12 * b.width..=max_width.min(4.0 * b.width));
    let k = rng.gen_range(2..=4usize);
    // Sub-piece lengths of the stretched block (Dirichlet, floored).
    let w: Vec<f64> = (0..k).map(|_| exp_weight(rng)).collect();
    let wsum: f64 = w.iter().sum();
    let floor = 0.05 * stretched / k as f64;
    let mut lens: Vec<f64> =
        w.iter().map(|wi| floor + (stretched - k as f64 * floor) * wi / wsum).collect();
    // The anchor piece keeps full height, so it must hold less than the
    // block's mass; hand any trim to the last piece.
    if lens[0] > 0.7 * b.width {
        let trim = lens[0] - 0.7 * b.width;
        lens[0] -= trim;
        lens[k - 1] += trim;
    }
    // Distribute the remaining mass over the shallow pieces.
    let rest_mass = c_inf * (b.width - lens[0]);
    let floors: Vec<f64> = lens[1..].iter().map(|l| 0.01 * c_inf * l).collect();
    let caps: Vec<f64> = lens[1..].iter().map(|l| 0.90 * c_inf * l).collect();
    let head: Vec<f64> = caps.iter().zip(&floors).map(|(c, f)| c - f).collect();
    let weights: Vec<f64> = (1..k).map(|_| exp_weight(rng)).collect();
    let spread = proportional_fill(rest_mass - floors.iter().sum::<f64>(), &weights, &head)
        .expect("roughening mass always fits: caps cover the block mass by construction");
    let mut cursor = 0.0;
    for (i, &len) in lens.iter().enumerate() {
        let value = if i == 0 { c_inf } else { (floors[i - 1] + spread[i - 1]) / len };
        let (x0, x1) = span(cursor, cursor + len);
        pieces.push((b.edge, x0, x1, b.sign * value));
        cursor += len;
    }
    true
}

/// Random member of an interval or circle class: jittered equally spaced
/// crossings, Dirichlet widths water-filled into the room between
/// neighbors, alternating orientation, optional roughening.
fn random_line_member(
    spec: &ClassSpec,
    rng: &mut ChaCha8Rng,
    rough_prob: f64,
) -> Result<(StepFunction, bool)> {
    let (length, circle) = match spec.domain {
        Domain::Interval { length } => (length, false),
        Domain::Circle => (CIRCLE_LEN, true),
        Domain::Star { .. } => {
            return Err(Error::DomainMismatch("line sampler got a star domain".into()))
        }
    };
    let n = spec.n_nodal;
    if circle && !n.is_multiple_of(2) {
        return Err(Error::Parity(n));
    }
    let half_total = spec.c_1 / (2.0 * spec.c_inf);
    let base = length / n as f64;
    // Shrink the jitter until the skeleton provably fits (amplitude 0 is
    // always feasible for the sampled c₁ range).
    for amp_frac in [0.35, 0.2, 0.1, 0.0] {
        let amp = amp_frac * base;
        let mut z: Vec<f64> =
            (0..n).map(|j| (j as f64 + 0.5) * base + rng.gen_range(-amp..=amp)).collect();
        z.sort_by(f64::total_cmp);
        // Confinement walls at neighbor midpoints and the domain ends (the
        // seam acts as a wall on the circle too, so pieces never wrap).
        let mut caps = Vec::with_capacity(n);
        for j in 0..n {
            let left_wall = if j == 0 { 0.0 } else { (z[j - 1] + z[j]) / 2.0 };
            let right_wall = if j + 1 == n { length } else { (z[j] + z[j + 1]) / 2.0 };
            caps.push(0.98 * (z[j] - left_wall).min(right_wall - z[j]));
        }
        let cap_sum: f64 = caps.iter().sum();
        if cap_sum < half_total {
            continue;
        }
        let w_min = (1e-5 * half_total).min(0.2 * caps.iter().cloned().fold(f64::MAX, f64::min));
        let weights: Vec<f64> = (0..n).map(|_| exp_weight(rng)).collect();
        let head: Vec<f64> = caps.iter().map(|c| c - w_min).collect();
        let Some(extra) =
            proportional_fill(half_total - n as f64 * w_min, &weights, &head)
        else {
            continue;
        };
        let widths: Vec<f64> = extra.iter().map(|e| w_min + e).collect();
        let s1: f64 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let mut pieces = Vec::new();
        let mut any_rough = false;
        for j in 0..n {
            let s = s1 * if j % 2 == 0 { 1.0 } else { -1.0 };
            let headroom = caps[j] - widths[j];
            for (dir, sign) in [(-1.0, s), (1.0, -s)] {
                let block = Block {
                    edge: 0,
                    anchor: z[j],
                    dir,
                    width: widths[j],
                    headroom,
                    sign,
                };
                any_rough |= emit_block(&block, spec.c_inf, rough_prob, rng, &mut pieces);
            }
        }
        let f = StepFunction::new(spec.domain.clone(), pieces)?;
        return Ok((f, !any_rough));
    }
    Err(Error::Infeasible(format!(
        "no room for {n} clusters of total width {} on a domain of length {length}",
        2.0 * half_total
    )))
}

/// Random member of a star class: a mixed-sign vertex cluster plus
/// `N−1` interior bumps placed greedily on the roomiest edges, optional
/// roughening of vertex blocks and bump halves that face free space.
fn random_star_member(
    spec: &ClassSpec,
    rng: &mut ChaCha8Rng,
    rough_prob: f64,
) -> Result<(StepFunction, bool)> {
    let Domain::Star { ref edges } = spec.domain else {
        return Err(Error::DomainMismatch("star sampler needs a star domain".into()));
    };
    let d_edges = edges.len();
    let n = spec.n_nodal;
    let k = n - 1;
    let total_width = spec.c_1 / spec.c_inf;
    'attempt: for attempt in 0..40 {
        // Mixed vertex signs (the vertex must be a sign interface).
        let mut signs = vec![0i8; d_edges];
        loop {
            for s in &mut signs {
                *s = if rng.gen_bool(0.5) { 1 } else { -1 };
            }
            if signs.iter().any(|s| *s > 0) && signs.iter().any(|s| *s < 0) {
                break;
            }
        }
        // Vertex mass fraction; later attempts concentrate less there.
        let t = if k == 0 { 1.0 } else { rng.gen_range(0.25..=0.75) * 0.95f64.powi(attempt) };
        let side_width = t * total_width / 2.0;
        let mut r = vec![0.0; d_edges];
        for sgn in [1i8, -1] {
            let idx: Vec<usize> = (0..d_edges).filter(|&j| signs[j] == sgn).collect();
            let caps: Vec<f64> = idx.iter().map(|&j| 0.45 * edges[j]).collect();
            let weights: Vec<f64> = idx.iter().map(|_| exp_weight(rng)).collect();
            let w_min = (1e-4 * side_width)
                .min(0.2 * caps.iter().cloned().fold(f64::MAX, f64::min));
            let head: Vec<f64> = caps.iter().map(|c| c - w_min).collect();
            let Some(extra) =
                proportional_fill(side_width - idx.len() as f64 * w_min, &weights, &head)
            else {
                continue 'attempt;
            };
            for (i, &j) in idx.iter().enumerate() {
                r[j] = w_min + extra[i];
            }
        }
        // Interior bump widths (Dirichlet over the non-vertex budget),
        // assigned widest-first to the edge with the most room.
        let bump_budget = (1.0 - t) * total_width / 2.0;
        let mut bump_w: Vec<f64> = if k == 0 {
            Vec::new()
        } else {
            let weights: Vec<f64> = (0..k).map(|_| exp_weight(rng)).collect();
            let wsum: f64 = weights.iter().sum();
            let floor = 1e-4 * bump_budget / k as f64;
            weights
                .iter()
                .map(|wi| floor + (bump_budget - k as f64 * floor) * wi / wsum)
                .collect()
        };
        bump_w.sort_by(|a, b| b.total_cmp(a));
        let mut room: Vec<f64> = (0..d_edges).map(|j| 0.95 * edges[j] - r[j]).collect();
        let mut per_edge: Vec<Vec<f64>> = vec![Vec::new(); d_edges];
        for &w in &bump_w {
            let best = (0..d_edges)
                .max_by(|&a, &b| room[a].total_cmp(&room[b]))
                .expect("at least two edges");
            if room[best] < 2.0 * w {
                continue 'attempt;
            }
            per_edge[best].push(w);
            room[best] -= 2.0 * w;
        }
        // Lay the pieces out edge by edge.
        let mut pieces = Vec::new();
        let mut any_rough = false;
        for j in 0..d_edges {
            let sigma = f64::from(signs[j]);
            let kj = per_edge[j].len();
            // Random positive gaps before, between, and after the bumps.
            let used = r[j] + 2.0 * per_edge[j].iter().sum::<f64>();
            let free = edges[j] - used;
            let gw: Vec<f64> = (0..=kj).map(|_| exp_weight(rng)).collect();
            let gsum: f64 = gw.iter().sum();
            let gap_floor = 0.02 * free / (kj + 1) as f64;
            let gaps: Vec<f64> = gw
                .iter()
                .map(|w| gap_floor + (free - (kj + 1) as f64 * gap_floor) * w / gsum)
                .collect();
            // Vertex block: anchored at the vertex, stretches into the
            // first gap (the vertex-adjacent piece stays full height).
            if r[j] > 0.0 {
                let block = Block {
                    edge: j,
                    anchor: 0.0,
                    dir: 1.0,
                    width: r[j],
                    headroom: 0.9 * gaps[0],
                    sign: sigma,
                };
                any_rough |= emit_block(&block, spec.c_inf, rough_prob, rng, &mut pieces);
            }
            let mut cursor = r[j] + gaps[0];
            for (i, &w) in per_edge[j].iter().enumerate() {
                let near = sigma * if i % 2 == 0 { 1.0 } else { -1.0 };
                let center = cursor + w;
                // Near half: kept crisp (it faces the structure behind it).
                pieces.push((j, cursor, center, near * spec.c_inf));
                // Far half: anchored at the crossing, stretches into the
                // following gap.
                let block = Block {
                    edge: j,
                    anchor: center,
                    dir: 1.0,
                    width: w,
                    headroom: 0.9 * gaps[i + 1],
                    sign: -near,
                };
                any_rough |= emit_block(&block, spec.c_inf, rough_prob, rng, &mut pieces);
                cursor = center + w + gaps[i + 1];
            }
        }
        let f = StepFunction::new(spec.domain.clone(), pieces)?;
        return Ok((f, !any_rough));
    }
    Err(Error::Infeasible(format!(
        "could not place {k} interior bumps and a vertex cluster of width {total_width} \
         on edges {edges:?}"
    )))
}

/// Random member of the class, exact by construction. Each block is
/// roughened independently with probability `rough_prob` (pass `0.0` for
/// a step-structured skeleton). Returns the function and whether it is
/// still step-structured.
pub fn random_member(
    spec: &ClassSpec,
    rng: &mut ChaCha8Rng,
    rough_prob: f64,
) -> Result<(StepFunction, bool)> {
    spec.validate()?;
    match spec.domain {
        Domain::Interval { .. } | Domain::Circle => random_line_member(spec, rng, rough_prob),
        Domain::Star { .. } => random_star_member(spec, rng, rough_prob),
    }
}

/// Draws a complete random instance: spec, exponent, and member function
/// (roughened on roughly half of the draws).
pub fn sample_instance(rng: &mut ChaCha8Rng, kind: DomainKind) -> Result<SampledInstance> {
    let spec = random_spec(rng, kind);
    let p = random_exponent(rng);
    let rough_prob = if rng.gen_bool(0.5) { 0.65 } else { 0.0 };
    let (f, in_step_class) = random_member(&spec, rng, rough_prob)?;
    Ok(SampledInstance { spec, p, f, in_step_class })
}

/// Random balanced star function that is single-signed on every edge
/// (so the exact fold solver applies): 2–5 edges, one block per edge at
/// a random offset, sides balanced exactly, sup norm `c∞` attained.
pub fn random_vertex_split_star(rng: &mut ChaCha8Rng) -> Result<StepFunction> {
    let d_edges = rng.gen_range(2..=5);
    let edges: Vec<f64> = (0..d_edges).map(|_| rng.gen_range(0.5..=2.5)).collect();
    let c_inf = rng.gen_range(0.5..=2.0);
    let mut signs = vec![0i8; d_edges];
    loop {
        for s in &mut signs {
            *s = if rng.gen_bool(0.5) { 1 } else { -1 };
        }
        if signs.iter().any(|s| *s > 0) && signs.iter().any(|s| *s < 0) {
            break;
        }
    }
    let side_cap = |sgn: i8| -> f64 {
        (0..d_edges).filter(|&j| signs[j] == sgn).map(|j| edges[j]).sum()
    };
    let side_width = rng.gen_range(0.3..=1.0) * 0.4 * side_cap(1).min(side_cap(-1));
    let mut pieces = Vec::new();
    for sgn in [1i8, -1] {
        let idx: Vec<usize> = (0..d_edges).filter(|&j| signs[j] == sgn).collect();
        let caps: Vec<f64> = idx.iter().map(|&j| 0.8 * edges[j]).collect();
        let weights: Vec<f64> = idx.iter().map(|_| exp_weight(rng)).collect();
        let widths = proportional_fill(side_width, &weights, &caps)
            .expect("side caps cover 0.4 of the side length by construction");
        for (i, &j) in idx.iter().enumerate() {
            let w = widths[i];
            if w <= 0.0 {
                continue;
            }
            let offset = rng.gen_range(0.0..=0.6 * (edges[j] - w));
            let block = Block {
                edge: j,
                anchor: offset,
                dir: 1.0,
                width: w,
                headroom: 0.9 * (edges[j] - offset - w),
                sign: f64::from(sgn),
            };
            emit_block(&block, c_inf, 0.5, rng, &mut pieces);
        }
    }
    StepFunction::new(Domain::Star { edges }, pieces)
}

/// Random discrete transport instance on an interval: up to `max_atoms`
/// point masses per side in `[0, 10]`, sides balanced exactly.
pub fn random_atom_pair(
    rng: &mut ChaCha8Rng,
    max_atoms: usize,
) -> crate::oracle::DiscreteMeasurePair {
    use crate::domain::DomainPoint;
    use crate::oracle::{Atom, DiscreteMeasurePair};
    let n_plus = rng.gen_range(1..=max_atoms);
    let n_minus = rng.gen_range(1..=max_atoms);
    let mut draw = |count: usize| -> Vec<Atom> {
        (0..count)
            .map(|_| Atom {
                point: DomainPoint::new(0, rng.gen_range(0.0..=10.0)),
                mass: rng.gen_range(0.01..=1.0),
            })
            .collect()
    };
    let plus = draw(n_plus);
    let mut minus = draw(n_minus);
    let mp: f64 = plus.iter().map(|a| a.mass).sum();
    let mm: f64 = minus.iter().map(|a| a.mass).sum();
    for a in &mut minus {
        a.mass *= mp / mm;
    }
    DiscreteMeasurePair { plus, minus, h: 0.0 }
}
