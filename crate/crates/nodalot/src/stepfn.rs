//! Step functions, their effective nodal sets, and membership in classes
//! with prescribed norms and nodal count.
//!
//! A [`StepFunction`] is piecewise constant on each edge of a [`Domain`]:
//! per edge, a sorted list of contiguous pieces `(start, end, value)`
//! covering `(0, edge length)`. Gaps in the input are filled with zero
//! pieces and adjacent pieces with exactly equal values are merged, so two
//! descriptions of the same function normalize to the same representation.
//!
//! The *effective nodal set* collects the sign interfaces of `f`:
//!
//! * [`NodalKind::Crossing`] — a point where a positive region directly
//!   abuts a negative region;
//! * [`NodalKind::Plateau`] — one representative per connected zero
//!   region that separates regions of opposite sign. The representative
//!   is the plateau endpoint adjacent to the *preceding* signed region in
//!   edge orientation (its start); on a star, a zero region spanning the
//!   central vertex uses the smallest non-vertex sign interface, falling
//!   back to the vertex itself.
//!
//! [`class_membership`] tests whether `f` has sup-norm `c∞`, L¹ norm
//! `c₁`, zero mean, and exactly `N` effective nodal points, and whether it
//! additionally belongs to the step subclass: values in `{0, ±c∞}` with
//! every full-height piece adjacent to a consistently chosen nodal
//! representative.

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, DomainPoint, CIRCLE_LEN};
use crate::error::{Error, Result};
use crate::tol;

/// One constant piece of a step function: value `value` on
/// `(start, end)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    /// Left endpoint along the edge.
    pub start: f64,
    /// Right endpoint along the edge.
    pub end: f64,
    /// Constant value on the open interval.
    pub value: f64,
}

impl Piece {
    /// Length of the piece.
    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

/// A piecewise-constant function on a [`Domain`].
///
/// Serializes as `{"domain": ..., "pieces": [[edge, start, end, value],
/// ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "StepFnWire", into = "StepFnWire")]
pub struct StepFunction {
    domain: Domain,
    /// Pieces per edge: sorted, contiguous, covering `(0, edge length)`.
    edges: Vec<Vec<Piece>>,
}

#[derive(Serialize, Deserialize)]
struct StepFnWire {
    domain: Domain,
    pieces: Vec<(usize, f64, f64, f64)>,
}

impl TryFrom<StepFnWire> for StepFunction {
    type Error = Error;
    fn try_from(w: StepFnWire) -> Result<Self> {
        StepFunction::new(w.domain, w.pieces)
    }
}

impl From<StepFunction> for StepFnWire {
    fn from(f: StepFunction) -> Self {
        StepFnWire { pieces: f.piece_tuples(), domain: f.domain }
    }
}

/// The three norms/integrals reported by [`StepFunction::norms`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Norms {
    /// `∫|f|`.
    pub l1: f64,
    /// `max |f|` over the pieces.
    pub linf: f64,
    /// `∫f` (signed).
    pub integral: f64,
}

/// Kind of an effective nodal point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodalKind {
    /// Direct sign interface: positive and negative regions touch.
    Crossing,
    /// Representative of a zero plateau separating opposite signs.
    Plateau,
}

/// One effective nodal point.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NodalPoint {
    /// Location of the point (for plateaus: the chosen representative).
    pub point: DomainPoint,
    /// Crossing or plateau representative.
    pub kind: NodalKind,
}

/// The effective nodal set, sorted by `(edge, coordinate)`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct NodalSet {
    /// Sorted nodal points.
    pub points: Vec<NodalPoint>,
}

impl NodalSet {
    /// Number of effective nodal points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// True when there are no nodal points.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A class of balanced step functions: sup-norm `c∞`, L¹ norm `c₁`,
/// exactly `n_nodal` effective nodal points, on `domain`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassSpec {
    /// Required sup-norm (`> 0`).
    pub c_inf: f64,
    /// Required L¹ norm (`> 0`).
    pub c_1: f64,
    /// Required number of effective nodal points (`≥ 1`).
    pub n_nodal: usize,
    /// Domain the functions live on.
    pub domain: Domain,
}

impl ClassSpec {
    /// Checks that the class is well-formed and nonempty:
    /// `c∞ > 0`, `c₁ > 0`, `n_nodal ≥ 1`, and `c₁ ≤ c∞ · |domain|`.
    ///
    /// # Errors
    /// [`Error::Infeasible`] when the class is empty,
    /// [`Error::InvalidInput`] when a parameter is malformed.
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if !(self.c_inf.is_finite() && self.c_inf > 0.0) {
            return Err(Error::InvalidInput(format!("c_inf must be positive, got {}", self.c_inf)));
        }
        if !(self.c_1.is_finite() && self.c_1 > 0.0) {
            return Err(Error::InvalidInput(format!("c_1 must be positive, got {}", self.c_1)));
        }
        if self.n_nodal == 0 {
            return Err(Error::InvalidInput("n_nodal must be at least 1".into()));
        }
        let cap = self.c_inf * self.domain.total_length();
        if self.c_1 > cap * (1.0 + tol::CLASS_REL) {
            return Err(Error::Infeasible(format!(
                "c_1 = {} exceeds c_inf·|domain| = {}",
                self.c_1, cap
            )));
        }
        Ok(())
    }
}

/// Result of testing a function against a [`ClassSpec`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// In the class, and additionally a full-height step configuration:
    /// values in `{0, ±c∞}` with every full-height piece adjacent to a
    /// consistently chosen nodal representative.
    StepStructured,
    /// In the class, but not of the step-structured form.
    Member,
    /// Not in the class; lists every violated constraint.
    NotMember {
        /// Human-readable description of each failed constraint.
        failures: Vec<String>,
    },
}

/// Maximal sign run on one edge: the union of consecutive pieces sharing
/// a sign (`+1`, `-1`, or `0` within the zero tolerance).
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct SignRun {
    pub start: f64,
    pub end: f64,
    pub sign: i8,
}

/// Extent of a nodal structure: a single point for crossings, the closure
/// of the zero region (per-edge segments) for plateaus.
#[derive(Clone, Debug)]
pub(crate) enum Extent {
    Point(DomainPoint),
    Segments(Vec<(usize, f64, f64)>),
}

impl Extent {
    /// Whether `p` lies in the closure of the extent (vertex-touching
    /// plateau segments contain the vertex on *any* edge).
    pub(crate) fn contains(&self, dom: &Domain, p: DomainPoint) -> bool {
        match self {
            Extent::Point(q) => dom.dist_unchecked(*q, p) <= tol::POINT_EQ,
            Extent::Segments(segs) => segs.iter().any(|&(e, a, b)| {
                let on_edge = p.edge == e && p.coord >= a - tol::POINT_EQ && p.coord <= b + tol::POINT_EQ;
                let through_vertex = a <= tol::POINT_EQ && p.coord <= tol::POINT_EQ;
                on_edge || through_vertex
            }),
        }
    }
}

/// A nodal structure: representative point, kind, and spatial extent.
#[derive(Clone, Debug)]
pub(crate) struct Structure {
    pub repr: DomainPoint,
    pub kind: NodalKind,
    pub extent: Extent,
}

impl StepFunction {
    /// Builds a step function from raw pieces `(edge, start, end, value)`.
    ///
    /// Pieces may arrive unsorted and may leave gaps (filled with zeros).
    /// Pieces shorter than the point tolerance are dropped; adjacent
    /// pieces with exactly equal values are merged.
    ///
    /// # Errors
    /// [`Error::InvalidInput`] on overlapping pieces, coordinates outside
    /// the edge, non-finite values, or an invalid domain.
    pub fn new(domain: Domain, pieces: Vec<(usize, f64, f64, f64)>) -> Result<Self> {
        domain.validate()?;
        let mut per_edge: Vec<Vec<Piece>> = vec![Vec::new(); domain.edge_count()];
        for (e, start, end, value) in pieces {
            if e >= domain.edge_count() {
                return Err(Error::InvalidInput(format!(
                    "piece on edge {e}, but the domain has {} edges",
                    domain.edge_count()
                )));
            }
            if !(start.is_finite() && end.is_finite() && value.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite piece ({e}, {start}, {end}, {value})"
                )));
            }
            let len = domain.edge_length(e);
            if start < -tol::POINT_EQ || end > len + tol::POINT_EQ || end < start {
                return Err(Error::InvalidInput(format!(
                    "piece ({start}, {end}) outside edge {e} of length {len}"
                )));
            }
            let p = Piece { start: start.clamp(0.0, len), end: end.clamp(0.0, len), value };
            if p.len() > tol::POINT_EQ {
                per_edge[e].push(p);
            }
        }
        for (e, list) in per_edge.iter_mut().enumerate() {
            let len = domain.edge_length(e);
            list.sort_by(|a, b| a.start.total_cmp(&b.start));
            // Reject overlaps, fill gaps, snap sub-tolerance seams.
            let mut filled: Vec<Piece> = Vec::with_capacity(list.len() + 2);
            let mut cursor = 0.0;
            for p in list.iter() {
                if p.start > cursor + tol::POINT_EQ {
                    filled.push(Piece { start: cursor, end: p.start, value: 0.0 });
                    cursor = p.start;
                } else if p.start < cursor - tol::POINT_EQ {
                    return Err(Error::InvalidInput(format!(
                        "overlapping pieces on edge {e} near coordinate {}",
                        p.start
                    )));
                }
                let mut q = *p;
                q.start = cursor;
                if q.end <= q.start + tol::POINT_EQ {
                    continue;
                }
                filled.push(q);
                cursor = q.end;
            }
            if cursor < len - tol::POINT_EQ {
                filled.push(Piece { start: cursor, end: len, value: 0.0 });
            } else if let Some(last) = filled.last_mut() {
                last.end = len;
            }
            if filled.is_empty() {
                filled.push(Piece { start: 0.0, end: len, value: 0.0 });
            }
            filled.first_mut().expect("nonempty").start = 0.0;
            // Merge adjacent pieces with identical values.
            let mut merged: Vec<Piece> = Vec::with_capacity(filled.len());
            for p in filled {
                match merged.last_mut() {
                    Some(last) if last.value == p.value => last.end = p.end,
                    _ => merged.push(p),
                }
            }
            *list = merged;
        }
        Ok(StepFunction { domain, edges: per_edge })
    }

    /// The identically-zero function on `domain`.
    pub fn zero(domain: Domain) -> Result<Self> {
        StepFunction::new(domain, Vec::new())
    }

    /// The domain this function lives on.
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Pieces of one edge (sorted, contiguous, covering the edge).
    pub fn pieces(&self, edge: usize) -> &[Piece] {
        &self.edges[edge]
    }

    /// All pieces as `(edge, start, end, value)` tuples (the wire format).
    pub fn piece_tuples(&self) -> Vec<(usize, f64, f64, f64)> {
        let mut out = Vec::new();
        for (e, list) in self.edges.iter().enumerate() {
            for p in list {
                out.push((e, p.start, p.end, p.value));
            }
        }
        out
    }

    /// Value at a point (right-continuous at piece boundaries; the last
    /// piece of an edge also covers its right endpoint).
    pub fn evaluate(&self, pt: DomainPoint) -> Result<f64> {
        self.domain.check_point(pt)?;
        let mut x = pt.coord;
        if self.domain.is_circle() {
            x = x.rem_euclid(CIRCLE_LEN);
        }
        let list = &self.edges[pt.edge];
        for p in list {
            if x < p.end || (p.end == self.domain.edge_length(pt.edge) && x <= p.end) {
                return Ok(p.value);
            }
        }
        Ok(list.last().map_or(0.0, |p| p.value))
    }

    /// `∫|f|`, `max|f|`, and `∫f` in one pass.
    pub fn norms(&self) -> Norms {
        let mut l1 = 0.0;
        let mut linf: f64 = 0.0;
        let mut integral = 0.0;
        for list in &self.edges {
            for p in list {
                l1 += p.value.abs() * p.len();
                linf = linf.max(p.value.abs());
                integral += p.value * p.len();
            }
        }
        Norms { l1, linf, integral }
    }

    /// Absolute threshold below which a value counts as zero for sign
    /// classification: `1e-12 · ‖f‖∞`.
    pub(crate) fn zero_threshold(&self) -> f64 {
        tol::ZERO_VALUE_REL * self.norms().linf
    }

    /// Maximal sign runs of one edge.
    pub(crate) fn sign_runs(&self, edge: usize, zero_abs: f64) -> Vec<SignRun> {
        let mut runs: Vec<SignRun> = Vec::new();
        for p in &self.edges[edge] {
            let sign = if p.value > zero_abs {
                1
            } else if p.value < -zero_abs {
                -1
            } else {
                0
            };
            match runs.last_mut() {
                Some(r) if r.sign == sign => r.end = p.end,
                _ => runs.push(SignRun { start: p.start, end: p.end, sign }),
            }
        }
        runs
    }

    /// Support segments of the positive (`sign = +1`) or negative
    /// (`sign = -1`) part: `(edge, start, end, density)` with
    /// `density = |value| > 0`, in `(edge, coordinate)` order.
    pub(crate) fn signed_support(&self, sign: i8) -> Vec<(usize, f64, f64, f64)> {
        let zero_abs = self.zero_threshold();
        let mut out = Vec::new();
        for (e, list) in self.edges.iter().enumerate() {
            for p in list {
                if (sign > 0 && p.value > zero_abs) || (sign < 0 && p.value < -zero_abs) {
                    out.push((e, p.start, p.end, p.value.abs()));
                }
            }
        }
        out
    }

    /// Pointwise negation.
    pub fn negated(&self) -> StepFunction {
        let mut f = self.clone();
        for list in &mut f.edges {
            for p in list {
                p.value = -p.value;
            }
        }
        f
    }

    /// Values multiplied by `a` (`a ≠ 0` keeps the nodal structure;
    /// `a > 0` keeps signs).
    pub fn values_scaled(&self, a: f64) -> StepFunction {
        let mut f = self.clone();
        for list in &mut f.edges {
            for p in list {
                p.value *= a;
            }
        }
        f
    }

    /// Circle only: rotation by `theta` (counterclockwise).
    ///
    /// # Errors
    /// [`Error::DomainMismatch`] off the circle.
    pub fn rotated(&self, theta: f64) -> Result<StepFunction> {
        if !self.domain.is_circle() {
            return Err(Error::DomainMismatch("rotation requires the circle domain".into()));
        }
        let mut pieces = Vec::new();
        for p in &self.edges[0] {
            let ns = (p.start + theta).rem_euclid(CIRCLE_LEN);
            let ne = ns + p.len();
            if ne <= CIRCLE_LEN + tol::POINT_EQ {
                pieces.push((0, ns, ne.min(CIRCLE_LEN), p.value));
            } else {
                pieces.push((0, ns, CIRCLE_LEN, p.value));
                pieces.push((0, 0.0, ne - CIRCLE_LEN, p.value));
            }
        }
        StepFunction::new(Domain::Circle, pieces)
    }

    /// Circle only: reflection `x ↦ 2π − x`.
    ///
    /// # Errors
    /// [`Error::DomainMismatch`] off the circle.
    pub fn reflected(&self) -> Result<StepFunction> {
        if !self.domain.is_circle() {
            return Err(Error::DomainMismatch("reflection requires the circle domain".into()));
        }
        let pieces = self.edges[0]
            .iter()
            .map(|p| (0, CIRCLE_LEN - p.end, CIRCLE_LEN - p.start, p.value))
            .collect();
        StepFunction::new(Domain::Circle, pieces)
    }

    /// Circle only: cut the circle at `s` and lay it out on the interval
    /// `(0, 2π)` (point `s + x` maps to coordinate `x`).
    ///
    /// # Errors
    /// [`Error::DomainMismatch`] off the circle.
    pub fn unrolled_at(&self, s: f64) -> Result<StepFunction> {
        if !self.domain.is_circle() {
            return Err(Error::DomainMismatch("unrolling requires the circle domain".into()));
        }
        let mut pieces = Vec::new();
        for p in &self.edges[0] {
            let ns = (p.start - s).rem_euclid(CIRCLE_LEN);
            let ne = ns + p.len();
            if ne <= CIRCLE_LEN + tol::POINT_EQ {
                pieces.push((0, ns, ne.min(CIRCLE_LEN), p.value));
            } else {
                pieces.push((0, ns, CIRCLE_LEN, p.value));
                pieces.push((0, 0.0, ne - CIRCLE_LEN, p.value));
            }
        }
        StepFunction::new(Domain::interval(CIRCLE_LEN)?, pieces)
    }

    /// Interval only: mass-preserving spatial dilation by `s > 0`
    /// (coordinates stretch by `s`, values shrink by `1/s`, so every
    /// region keeps its mass while distances scale).
    ///
    /// # Errors
    /// [`Error::DomainMismatch`] off an interval, [`Error::InvalidInput`]
    /// for `s ≤ 0`.
    pub fn spatially_rescaled(&self, s: f64) -> Result<StepFunction> {
        let Domain::Interval { length } = self.domain else {
            return Err(Error::DomainMismatch("spatial rescaling requires an interval".into()));
        };
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {s}")));
        }
        let pieces = self.edges[0]
            .iter()
            .map(|p| (0, p.start * s, p.end * s, p.value / s))
            .collect();
        StepFunction::new(Domain::interval(length * s)?, pieces)
    }

    /// `∫ |f − g|` over a shared domain (used to compare functions up to
    /// representation).
    ///
    /// # Errors
    /// [`Error::DomainMismatch`] when the domains differ.
    pub fn l1_distance(&self, other: &StepFunction) -> Result<f64> {
        if !self.domain.same_as(&other.domain) {
            return Err(Error::DomainMismatch("l1_distance needs matching domains".into()));
        }
        let mut total = 0.0;
        for e in 0..self.domain.edge_count() {
            let (a, b) = (&self.edges[e], &other.edges[e]);
            let (mut i, mut j) = (0, 0);
            let mut x = 0.0;
            while i < a.len() && j < b.len() {
                let hi = a[i].end.min(b[j].end);
                total += (a[i].value - b[j].value).abs() * (hi - x).max(0.0);
                x = hi;
                if a[i].end <= hi + tol::POINT_EQ {
                    i += 1;
                }
                if b[j].end <= hi + tol::POINT_EQ {
                    j += 1;
                }
            }
        }
        Ok(total)
    }

    /// Nodal structures (crossings and qualifying plateaus) with extents.
    pub(crate) fn nodal_structures(&self) -> Vec<Structure> {
        let zero_abs = self.zero_threshold();
        let mut out: Vec<Structure> = Vec::new();
        match &self.domain {
            Domain::Interval { .. } => {
                collect_open_edge(&self.sign_runs(0, zero_abs), 0, &mut out);
            }
            Domain::Circle => {
                collect_circle(&self.sign_runs(0, zero_abs), &mut out);
            }
            Domain::Star { edges } => {
                let runs: Vec<Vec<SignRun>> =
                    (0..edges.len()).map(|e| self.sign_runs(e, zero_abs)).collect();
                collect_star(&runs, &mut out);
            }
        }
        out.sort_by(|a, b| {
            (a.repr.edge, a.repr.coord)
                .partial_cmp(&(b.repr.edge, b.repr.coord))
                .expect("finite coordinates")
        });
        out
    }

    /// The effective nodal set: all sign interfaces of `f`, sorted by
    /// `(edge, coordinate)`.
    pub fn effective_nodal_set(&self) -> NodalSet {
        NodalSet {
            points: self
                .nodal_structures()
                .into_iter()
                .map(|s| NodalPoint { point: s.repr, kind: s.kind })
                .collect(),
        }
    }
}

/// Crossings and plateaus of an open edge (interval, or one star edge
/// ignoring the vertex, which the caller handles).
fn collect_open_edge(runs: &[SignRun], edge: usize, out: &mut Vec<Structure>) {
    for w in runs.windows(2) {
        if w[0].sign * w[1].sign == -1 {
            out.push(Structure {
                repr: DomainPoint::new(edge, w[0].end),
                kind: NodalKind::Crossing,
                extent: Extent::Point(DomainPoint::new(edge, w[0].end)),
            });
        }
    }
    for (i, r) in runs.iter().enumerate() {
        if r.sign == 0 && i > 0 && i + 1 < runs.len() && runs[i - 1].sign * runs[i + 1].sign == -1 {
            out.push(Structure {
                repr: DomainPoint::new(edge, r.start),
                kind: NodalKind::Plateau,
                extent: Extent::Segments(vec![(edge, r.start, r.end)]),
            });
        }
    }
}

/// Crossings and plateaus of the circle: the run sequence is cyclic, so
/// the first and last runs merge when they share a sign, and neighbor
/// lookups wrap around.
fn collect_circle(runs: &[SignRun], out: &mut Vec<Structure>) {
    if runs.len() < 2 {
        return; // constant sign: no interfaces
    }
    // Work on a cyclic list: (start, end, sign) with end possibly > 2π
    // after merging across the seam.
    let mut cyc: Vec<SignRun> = runs.to_vec();
    if cyc.len() >= 2 && cyc.first().unwrap().sign == cyc.last().unwrap().sign {
        let first = cyc.remove(0);
        let last = cyc.last_mut().unwrap();
        last.end += first.end - first.start;
    }
    if cyc.len() < 2 {
        return;
    }
    let n = cyc.len();
    for i in 0..n {
        let r = cyc[i];
        let next = cyc[(i + 1) % n];
        if r.sign * next.sign == -1 {
            let x = r.end.rem_euclid(CIRCLE_LEN);
            out.push(Structure {
                repr: DomainPoint::on_line(x),
                kind: NodalKind::Crossing,
                extent: Extent::Point(DomainPoint::on_line(x)),
            });
        }
        if r.sign == 0 {
            let prev = cyc[(i + n - 1) % n];
            if prev.sign * next.sign == -1 {
                let start = r.start.rem_euclid(CIRCLE_LEN);
                let segs = if r.end <= CIRCLE_LEN + tol::POINT_EQ {
                    vec![(0, r.start, r.end.min(CIRCLE_LEN))]
                } else {
                    vec![(0, r.start, CIRCLE_LEN), (0, 0.0, r.end - CIRCLE_LEN)]
                };
                out.push(Structure {
                    repr: DomainPoint::on_line(start),
                    kind: NodalKind::Plateau,
                    extent: Extent::Segments(segs),
                });
            }
        }
    }
}

/// Crossings and plateaus of a star graph. Per-edge interiors behave like
/// intervals; the vertex is a crossing when edges of both signs start
/// there, and zero regions touching the vertex merge into a single
/// component exactly when no edge carries sign up to the vertex.
fn collect_star(runs: &[Vec<SignRun>], out: &mut Vec<Structure>) {
    let d = runs.len();
    for (e, edge_runs) in runs.iter().enumerate() {
        collect_open_edge(edge_runs, e, out);
    }
    let first_sign = |e: usize| runs[e].first().map_or(0, |r| r.sign);
    let has_pos = (0..d).any(|e| first_sign(e) == 1);
    let has_neg = (0..d).any(|e| first_sign(e) == -1);
    let vertex_crossing = has_pos && has_neg;
    if vertex_crossing {
        out.push(Structure {
            repr: DomainPoint::new(0, 0.0),
            kind: NodalKind::Crossing,
            extent: Extent::Point(DomainPoint::new(0, 0.0)),
        });
    }
    // Zero runs that touch the vertex.
    let vertex_zero: Vec<usize> = (0..d).filter(|&e| first_sign(e) == 0).collect();
    if vertex_zero.is_empty() {
        return;
    }
    // Interfaces and adjacent signs of a vertex-touching zero run on one
    // edge: the following signed run, if any.
    let far_interface = |e: usize| -> Option<(DomainPoint, i8)> {
        let r = &runs[e];
        if r.len() >= 2 {
            Some((DomainPoint::new(e, r[0].end), r[1].sign))
        } else {
            None
        }
    };
    if has_pos || has_neg {
        // The vertex lies in the closure of a signed support, so each
        // vertex-touching zero run is its own component; through the
        // vertex it is adjacent to every sign that reaches the vertex.
        for &e in &vertex_zero {
            let mut signs = vec![];
            if has_pos {
                signs.push(1);
            }
            if has_neg {
                signs.push(-1);
            }
            let far = far_interface(e);
            if let Some((_, s)) = far {
                signs.push(s);
            }
            if signs.contains(&1) && signs.contains(&-1) {
                // Representative: smallest non-vertex interface, else the
                // vertex unless it is already a crossing.
                let repr = match far {
                    Some((p, _)) => p,
                    None if !vertex_crossing => DomainPoint::new(0, 0.0),
                    None => continue,
                };
                let seg_end = runs[e][0].end;
                out.push(Structure {
                    repr,
                    kind: NodalKind::Plateau,
                    extent: Extent::Segments(vec![(e, 0.0, seg_end)]),
                });
            }
        }
    } else {
        // No sign reaches the vertex: all vertex-touching zero runs form
        // one connected component.
        let mut signs = Vec::new();
        let mut interfaces = Vec::new();
        let mut segs = Vec::new();
        for &e in &vertex_zero {
            segs.push((e, 0.0, runs[e][0].end));
            if let Some((p, s)) = far_interface(e) {
                interfaces.push(p);
                signs.push(s);
            }
        }
        if signs.contains(&1) && signs.contains(&-1) {
            interfaces.sort_by(|a, b| {
                (a.edge, a.coord).partial_cmp(&(b.edge, b.coord)).expect("finite")
            });
            out.push(Structure {
                repr: interfaces[0],
                kind: NodalKind::Plateau,
                extent: Extent::Segments(segs),
            });
        }
    }
}

/// Tests `f` against a class: sup-norm, L¹ norm, zero mean, and nodal
/// count, each to relative tolerance `1e-9`; when all four hold, also
/// tests membership in the step subclass (values in `{0, ±c∞}`, every
/// full-height piece adjacent to a consistently chosen nodal
/// representative).
///
/// # Errors
/// [`Error::DomainMismatch`] when `f` lives on a different domain than
/// `spec`, or an invalid `spec`.
pub fn class_membership(f: &StepFunction, spec: &ClassSpec) -> Result<Verdict> {
    spec.validate()?;
    if !f.domain().same_as(&spec.domain) {
        return Err(Error::DomainMismatch(
            "function and class specification live on different domains".into(),
        ));
    }
    let norms = f.norms();
    let nodal = f.nodal_structures();
    let mut failures = Vec::new();
    if (norms.linf - spec.c_inf).abs() > tol::CLASS_REL * spec.c_inf {
        failures.push(format!("sup-norm is {}, class requires {}", norms.linf, spec.c_inf));
    }
    if (norms.l1 - spec.c_1).abs() > tol::CLASS_REL * spec.c_1 {
        failures.push(format!("L1 norm is {}, class requires {}", norms.l1, spec.c_1));
    }
    if norms.integral.abs() > tol::CLASS_REL * spec.c_1 {
        failures.push(format!("integral is {:.3e}, class requires mean zero", norms.integral));
    }
    if nodal.len() != spec.n_nodal {
        failures.push(format!(
            "effective nodal set has {} points, class requires {}",
            nodal.len(),
            spec.n_nodal
        ));
    }
    if !failures.is_empty() {
        return Ok(Verdict::NotMember { failures });
    }
    Ok(if step_structured(f, spec.c_inf, &nodal) {
        Verdict::StepStructured
    } else {
        Verdict::Member
    })
}

/// Whether `f` (already known to be in the class) is a full-height step
/// configuration: values in `{0, ±c∞}` and every full-height run adjacent
/// to a nodal structure, claiming at most one representative point per
/// plateau. Runs are scanned in `(edge, coordinate)` order, each claiming
/// the structure at its start when compatible, else at its end (greedy
/// chain matching, which is exact here because a run's two candidates are
/// adjacent in the structure order).
fn step_structured(f: &StepFunction, c_inf: f64, structures: &[Structure]) -> bool {
    let zero_abs = f.zero_threshold();
    for list in &f.edges {
        for p in list {
            let v = p.value.abs();
            if v > zero_abs && (v - c_inf).abs() > tol::CLASS_REL * c_inf {
                return false;
            }
        }
    }
    let dom = f.domain();
    // Claimed representative per plateau structure.
    let mut claims: Vec<Option<DomainPoint>> = vec![None; structures.len()];
    let claim = |idx: usize, at: DomainPoint, claims: &mut Vec<Option<DomainPoint>>| -> bool {
        match structures[idx].kind {
            NodalKind::Crossing => true,
            NodalKind::Plateau => match claims[idx] {
                None => {
                    claims[idx] = Some(at);
                    true
                }
                Some(prev) => dom.dist_unchecked(prev, at) <= tol::POINT_EQ,
            },
        }
    };
    for e in 0..dom.edge_count() {
        for run in f.sign_runs(e, zero_abs) {
            if run.sign == 0 {
                continue;
            }
            let ends = [DomainPoint::new(e, run.start), DomainPoint::new(e, run.end)];
            let candidate = |at: DomainPoint| -> Option<usize> {
                structures.iter().position(|s| s.extent.contains(dom, at))
            };
            let mut ok = false;
            for at in ends {
                if dom.is_circle() {
                    // normalize the seam
                    let at = DomainPoint::on_line(at.coord.rem_euclid(CIRCLE_LEN));
                    if let Some(idx) = candidate(at) {
                        if claim(idx, at, &mut claims) {
                            ok = true;
                            break;
                        }
                    }
                } else if let Some(idx) = candidate(at) {
                    if claim(idx, at, &mut claims) {
                        ok = true;
                        break;
                    }
                }
            }
            if !ok {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval_fn(length: f64, pieces: &[(f64, f64, f64)]) -> StepFunction {
        StepFunction::new(
            Domain::interval(length).unwrap(),
            pieces.iter().map(|&(a, b, v)| (0, a, b, v)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn constructor_fills_gaps_and_merges() {
        let f = interval_fn(2.0, &[(0.5, 1.0, 1.0), (1.0, 1.5, 1.0)]);
        let ps = f.pieces(0);
        assert_eq!(ps.len(), 3);
        assert_eq!(ps[0], Piece { start: 0.0, end: 0.5, value: 0.0 });
        assert_eq!(ps[1], Piece { start: 0.5, end: 1.5, value: 1.0 });
        assert_eq!(ps[2], Piece { start: 1.5, end: 2.0, value: 0.0 });
    }

    #[test]
    fn constructor_rejects_overlap_and_out_of_range() {
        let d = Domain::interval(1.0).unwrap();
        assert!(StepFunction::new(d.clone(), vec![(0, 0.0, 0.6, 1.0), (0, 0.5, 1.0, 2.0)]).is_err());
        assert!(StepFunction::new(d.clone(), vec![(0, 0.0, 1.5, 1.0)]).is_err());
        assert!(StepFunction::new(d, vec![(1, 0.0, 0.5, 1.0)]).is_err());
    }

    #[test]
    fn norms_are_exact_sums() {
        let f = interval_fn(1.0, &[(0.0, 0.4, 0.5), (0.5, 0.7, -1.0)]);
        let n = f.norms();
        assert!((n.l1 - 0.4).abs() < 1e-15);
        assert_eq!(n.linf, 1.0);
        assert!(n.integral.abs() < 1e-15);
    }

    /// Worked example: values [+1, 0, +1, −1, 0, −1, 0, +1] on unit pieces
    /// of (0,8). The effective nodal set has exactly two points: a
    /// crossing at x=3 and a plateau representative at x=6 (the plateau
    /// (6,7) separates − from +; the other plateaus separate equal signs).
    #[test]
    fn nodal_set_worked_example() {
        let vals = [1.0, 0.0, 1.0, -1.0, 0.0, -1.0, 0.0, 1.0];
        let pieces: Vec<(f64, f64, f64)> = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as f64, i as f64 + 1.0, v))
            .collect();
        let f = interval_fn(8.0, &pieces);
        let z = f.effective_nodal_set();
        assert_eq!(z.len(), 2);
        assert_eq!(z.points[0].kind, NodalKind::Crossing);
        assert_eq!(z.points[0].point.coord, 3.0);
        assert_eq!(z.points[1].kind, NodalKind::Plateau);
        assert_eq!(z.points[1].point.coord, 6.0);
    }

    #[test]
    fn nodal_set_is_invariant_under_piece_splitting() {
        let f = interval_fn(2.0, &[(0.0, 0.8, 1.0), (0.8, 2.0, -2.0 / 3.0)]);
        let g = interval_fn(
            2.0,
            &[(0.0, 0.3, 1.0), (0.3, 0.8, 1.0), (0.8, 1.1, -2.0 / 3.0), (1.1, 2.0, -2.0 / 3.0)],
        );
        let (zf, zg) = (f.effective_nodal_set(), g.effective_nodal_set());
        assert_eq!(zf.len(), zg.len());
        for (a, b) in zf.points.iter().zip(&zg.points) {
            assert_eq!(a.kind, b.kind);
            assert!((a.point.coord - b.point.coord).abs() <= 1e-12);
        }
        assert!(f.l1_distance(&g).unwrap() <= 1e-15);
    }

    #[test]
    fn circle_nodal_set_handles_the_seam() {
        // +1 on (5.5, 2π)∪(0, 0.5): one positive arc across the seam.
        let f = StepFunction::new(
            Domain::Circle,
            vec![
                (0, 0.0, 0.5, 1.0),
                (0, 0.5, 3.0, -1.0),
                (0, 3.0, 5.5, 0.0),
                (0, 5.5, CIRCLE_LEN, 1.0),
            ],
        )
        .unwrap();
        let z = f.effective_nodal_set();
        assert_eq!(z.len(), 2);
        assert_eq!(z.points[0].kind, NodalKind::Crossing);
        assert!((z.points[0].point.coord - 0.5).abs() < 1e-12);
        assert_eq!(z.points[1].kind, NodalKind::Plateau);
        assert!((z.points[1].point.coord - 3.0).abs() < 1e-12);
    }

    #[test]
    fn circle_crossing_at_the_seam_is_reported_once() {
        // −1 on (π, 2π), +1 on (0, π): crossings at 0 (seam) and π.
        let f = StepFunction::new(
            Domain::Circle,
            vec![
                (0, 0.0, std::f64::consts::PI, 1.0),
                (0, std::f64::consts::PI, CIRCLE_LEN, -1.0),
            ],
        )
        .unwrap();
        let z = f.effective_nodal_set();
        assert_eq!(z.len(), 2);
        assert!((z.points[0].point.coord - 0.0).abs() < 1e-12);
        assert!((z.points[1].point.coord - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn star_vertex_crossing() {
        // Edge 0 starts positive, edge 1 starts negative, edge 2 zero:
        // the vertex is a crossing.
        let f = StepFunction::new(
            Domain::star(vec![1.0, 1.0, 1.0]).unwrap(),
            vec![(0, 0.0, 0.4, 1.0), (1, 0.0, 0.4, -1.0)],
        )
        .unwrap();
        let z = f.effective_nodal_set();
        assert_eq!(z.len(), 1);
        assert_eq!(z.points[0].kind, NodalKind::Crossing);
        assert_eq!(z.points[0].point.coord, 0.0);
    }

    #[test]
    fn star_vertex_spanning_plateau() {
        // All edges start with a zero gap; the joint zero component
        // separates + (edge 0) from − (edge 1): one plateau whose
        // representative is the smallest far interface, (0, 0.2).
        let f = StepFunction::new(
            Domain::star(vec![1.0, 1.0, 1.0]).unwrap(),
            vec![(0, 0.2, 0.6, 1.0), (1, 0.3, 0.7, -1.0)],
        )
        .unwrap();
        let z = f.effective_nodal_set();
        assert_eq!(z.len(), 1);
        assert_eq!(z.points[0].kind, NodalKind::Plateau);
        assert_eq!(z.points[0].point.edge, 0);
        assert!((z.points[0].point.coord - 0.2).abs() < 1e-12);
    }

    #[test]
    fn star_interior_crossing_and_vertex() {
        // Edge 0: + then −; edge 1: − at vertex. Vertex crossing plus an
        // interior crossing on edge 0.
        let f = StepFunction::new(
            Domain::star(vec![2.0, 1.0]).unwrap(),
            vec![(0, 0.0, 0.5, 1.0), (0, 0.5, 1.0, -1.0), (1, 0.0, 0.5, -1.0)],
        )
        .unwrap();
        let z = f.effective_nodal_set();
        assert_eq!(z.len(), 2);
        assert_eq!(z.points[0].point, DomainPoint::new(0, 0.0));
        assert_eq!(z.points[1].point, DomainPoint::new(0, 0.5));
    }

    #[test]
    fn class_membership_step_structured() {
        // A single full-height bump pair: in the class and step-shaped.
        let f = interval_fn(1.0, &[(0.2, 0.4, 1.0), (0.4, 0.6, -1.0)]);
        let spec = ClassSpec {
            c_inf: 1.0,
            c_1: 0.4,
            n_nodal: 1,
            domain: Domain::interval(1.0).unwrap(),
        };
        assert_eq!(class_membership(&f, &spec).unwrap(), Verdict::StepStructured);
    }

    #[test]
    fn class_membership_member_but_not_step() {
        // Same mass, but the positive side is half-height: still in the
        // class (sup-norm carried by the negative side), not step-shaped.
        let f = interval_fn(1.0, &[(0.0, 0.4, 0.5), (0.5, 0.7, -1.0)]);
        let spec = ClassSpec {
            c_inf: 1.0,
            c_1: 0.4,
            n_nodal: 1,
            domain: Domain::interval(1.0).unwrap(),
        };
        assert_eq!(class_membership(&f, &spec).unwrap(), Verdict::Member);
    }

    #[test]
    fn class_membership_reports_all_failures() {
        let f = interval_fn(1.0, &[(0.2, 0.4, 1.0), (0.4, 0.6, -1.0)]);
        let spec = ClassSpec {
            c_inf: 2.0,
            c_1: 0.8,
            n_nodal: 3,
            domain: Domain::interval(1.0).unwrap(),
        };
        match class_membership(&f, &spec).unwrap() {
            Verdict::NotMember { failures } => assert_eq!(failures.len(), 3),
            v => panic!("expected NotMember, got {v:?}"),
        }
    }

    #[test]
    fn separated_full_bumps_are_not_step_structured() {
        // Two full-height pieces flank a wide plateau at different
        // endpoints: no single representative serves both, so the
        // function is a member but not step-structured.
        let f = interval_fn(1.0, &[(0.0, 0.1, 1.0), (0.5, 0.6, -1.0)]);
        let spec = ClassSpec {
            c_inf: 1.0,
            c_1: 0.2,
            n_nodal: 1,
            domain: Domain::interval(1.0).unwrap(),
        };
        assert_eq!(class_membership(&f, &spec).unwrap(), Verdict::Member);
    }

    #[test]
    fn adjacent_full_bumps_on_plateau_are_step_structured() {
        // Nodal set: crossings at 0.3 and 0.8 plus the plateau (0.5, 0.7)
        // separating − from +, so three points in all. The bumps around
        // each crossing claim it directly; only the (0.7, 0.8) bump
        // touches the plateau, claiming it at 0.7. Full-height bumps,
        // each adjacent to a nodal point, single claim per plateau:
        // step-structured.
        let f = interval_fn(1.0, &[(0.1, 0.3, 1.0), (0.3, 0.5, -1.0), (0.7, 0.8, 1.0), (0.8, 0.9, -1.0)]);
        let spec = ClassSpec {
            c_inf: 1.0,
            c_1: 0.6,
            n_nodal: 3,
            domain: Domain::interval(1.0).unwrap(),
        };
        assert_eq!(class_membership(&f, &spec).unwrap(), Verdict::StepStructured);
    }

    #[test]
    fn infeasible_class_is_an_error() {
        let spec = ClassSpec {
            c_inf: 1.0,
            c_1: 3.0,
            n_nodal: 1,
            domain: Domain::interval(2.0).unwrap(),
        };
        assert!(matches!(spec.validate(), Err(Error::Infeasible(_))));
    }

    #[test]
    fn json_wire_format_round_trips() {
        let f = interval_fn(1.0, &[(0.0, 0.4, 0.5), (0.5, 0.7, -1.0)]);
        let s = serde_json::to_string(&f).unwrap();
        let back: StepFunction = serde_json::from_str(&s).unwrap();
        assert!(f.l1_distance(&back).unwrap() <= 1e-15);
        assert!(s.contains("\"pieces\""));
    }

    #[test]
    fn rotation_and_reflection_preserve_norms() {
        let f = StepFunction::new(
            Domain::Circle,
            vec![(0, 0.0, 1.0, 1.0), (0, 2.0, 3.0, -1.0)],
        )
        .unwrap();
        let n0 = f.norms();
        for g in [f.rotated(4.5).unwrap(), f.reflected().unwrap()] {
            let n = g.norms();
            assert!((n.l1 - n0.l1).abs() < 1e-12);
            assert!((n.linf - n0.linf).abs() < 1e-12);
            assert!((n.integral - n0.integral).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluate_is_right_continuous() {
        let f = interval_fn(1.0, &[(0.0, 0.5, 2.0), (0.5, 1.0, -3.0)]);
        assert_eq!(f.evaluate(DomainPoint::on_line(0.5)).unwrap(), -3.0);
        assert_eq!(f.evaluate(DomainPoint::on_line(0.25)).unwrap(), 2.0);
        assert_eq!(f.evaluate(DomainPoint::on_line(1.0)).unwrap(), -3.0);
    }
}
