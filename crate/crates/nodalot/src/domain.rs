//! Domain geometry: intervals, the unit circle, and metric star graphs.
//!
//! All three domain kinds are unions of edges carrying a length
//! coordinate. An interval is a single edge `(0, L)`; the circle is a
//! single edge `(0, 2π)` whose endpoints are glued; a star with `D` edges
//! glues the `0` endpoint of every edge at a common vertex. Distances are
//! geodesic: along the edge, around the circle the shorter way, or through
//! the star vertex when two points sit on different edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

/// Circumference of the (unit) circle domain.
pub const CIRCLE_LEN: f64 = 2.0 * std::f64::consts::PI;

/// A one-dimensional domain: interval, unit circle, or metric star graph.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// The open interval `(0, length)`.
    Interval {
        /// Positive length of the interval.
        length: f64,
    },
    /// The circle of circumference `2π`, parametrized by `[0, 2π)`.
    Circle,
    /// A star graph: `edges.len() ≥ 2` segments glued at a common vertex,
    /// edge `j` parametrized by distance from the vertex in
    /// `(0, edges[j])`.
    Star {
        /// Positive length of each edge.
        edges: Vec<f64>,
    },
}

/// A point on a [`Domain`]: an edge index plus a coordinate along it.
///
/// For intervals and circles the edge index is always `0`. On a star,
/// coordinate `0` on any edge denotes the central vertex (all such points
/// are geodesically identical).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainPoint {
    /// Which edge the point lies on.
    #[serde(rename = "edge_index")]
    pub edge: usize,
    /// Distance along the edge (from the left end / the star vertex).
    #[serde(rename = "coordinate")]
    pub coord: f64,
}

impl DomainPoint {
    /// Convenience constructor.
    pub fn new(edge: usize, coord: f64) -> Self {
        DomainPoint { edge, coord }
    }

    /// A point at coordinate `x` on the single edge of an interval or
    /// circle.
    pub fn on_line(coord: f64) -> Self {
        DomainPoint { edge: 0, coord }
    }
}

impl Domain {
    /// Interval constructor with validation.
    ///
    /// # Errors
    /// Rejects nonpositive or non-finite lengths.
    pub fn interval(length: f64) -> Result<Self> {
        let d = Domain::Interval { length };
        d.validate()?;
        Ok(d)
    }

    /// Star constructor with validation.
    ///
    /// # Errors
    /// Rejects fewer than two edges and nonpositive edge lengths.
    pub fn star(edges: Vec<f64>) -> Result<Self> {
        let d = Domain::Star { edges };
        d.validate()?;
        Ok(d)
    }

    /// Checks the structural invariants of the domain description.
    ///
    /// # Errors
    /// Returns [`Error::InvalidInput`] when a length is nonpositive or a
    /// star has fewer than two edges.
    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Interval { length } => {
                if !(length.is_finite() && *length > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "interval length must be positive and finite, got {length}"
                    )));
                }
            }
            Domain::Circle => {}
            Domain::Star { edges } => {
                if edges.len() < 2 {
                    return Err(Error::InvalidInput(format!(
                        "a star needs at least 2 edges, got {}",
                        edges.len()
                    )));
                }
                for (j, l) in edges.iter().enumerate() {
                    if !(l.is_finite() && *l > 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "star edge {j} must have positive finite length, got {l}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of edges (1 for interval and circle).
    pub fn edge_count(&self) -> usize {
        match self {
            Domain::Interval { .. } | Domain::Circle => 1,
            Domain::Star { edges } => edges.len(),
        }
    }

    /// Length of edge `e`.
    ///
    /// # Panics
    /// Panics when `e` is out of range.
    pub fn edge_length(&self, e: usize) -> f64 {
        match self {
            Domain::Interval { length } => {
                assert_eq!(e, 0, "interval has a single edge");
                *length
            }
            Domain::Circle => {
                assert_eq!(e, 0, "circle has a single edge");
                CIRCLE_LEN
            }
            Domain::Star { edges } => edges[e],
        }
    }

    /// Total length `|domain|` (sum of edge lengths).
    pub fn total_length(&self) -> f64 {
        match self {
            Domain::Interval { length } => *length,
            Domain::Circle => CIRCLE_LEN,
            Domain::Star { edges } => edges.iter().sum(),
        }
    }

    /// True for the circle domain.
    pub fn is_circle(&self) -> bool {
        matches!(self, Domain::Circle)
    }

    /// Structural equality of two domains up to the point tolerance on
    /// edge lengths.
    pub fn same_as(&self, other: &Domain) -> bool {
        match (self, other) {
            (Domain::Interval { length: a }, Domain::Interval { length: b }) => {
                (a - b).abs() <= tol::POINT_EQ
            }
            (Domain::Circle, Domain::Circle) => true,
            (Domain::Star { edges: a }, Domain::Star { edges: b }) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol::POINT_EQ)
            }
            _ => false,
        }
    }

    /// Checks that `pt` lies on this domain (edge in range, coordinate in
    /// `[0, edge length]` with a tiny slack).
    ///
    /// # Errors
    /// Returns [`Error::DomainMismatch`] otherwise.
    pub fn check_point(&self, pt: DomainPoint) -> Result<()> {
        if pt.edge >= self.edge_count() {
            return Err(Error::DomainMismatch(format!(
                "edge index {} out of range (domain has {} edges)",
                pt.edge,
                self.edge_count()
            )));
        }
        let len = self.edge_length(pt.edge);
        if !pt.coord.is_finite() || pt.coord < -tol::POINT_EQ || pt.coord > len + tol::POINT_EQ {
            return Err(Error::DomainMismatch(format!(
                "coordinate {} outside edge {} of length {}",
                pt.coord, pt.edge, len
            )));
        }
        Ok(())
    }

    /// Geodesic distance between two points of the domain.
    ///
    /// Interval: `|a − b|`. Circle: the shorter arc. Star: `|a − b|` on a
    /// shared edge, `a + b` through the vertex otherwise.
    ///
    /// # Errors
    /// Returns [`Error::DomainMismatch`] when either point is not on the
    /// domain.
    pub fn geodesic_distance(&self, a: DomainPoint, b: DomainPoint) -> Result<f64> {
        self.check_point(a)?;
        self.check_point(b)?;
        Ok(self.dist_unchecked(a, b))
    }

    /// Geodesic distance without revalidating the points (hot path for
    /// solvers that already guarantee validity).
    pub(crate) fn dist_unchecked(&self, a: DomainPoint, b: DomainPoint) -> f64 {
        match self {
            Domain::Interval { .. } => (a.coord - b.coord).abs(),
            Domain::Circle => {
                let d = (a.coord - b.coord).rem_euclid(CIRCLE_LEN);
                d.min(CIRCLE_LEN - d)
            }
            Domain::Star { .. } => {
                if a.edge == b.edge {
                    (a.coord - b.coord).abs()
                } else {
                    a.coord + b.coord
                }
            }
        }
    }

    /// Whether two points coincide (geodesic distance below the point
    /// tolerance).
    ///
    /// # Errors
    /// Returns [`Error::DomainMismatch`] when either point is not on the
    /// domain.
    pub fn points_equal(&self, a: DomainPoint, b: DomainPoint) -> Result<bool> {
        Ok(self.geodesic_distance(a, b)? <= tol::POINT_EQ)
    }
}
