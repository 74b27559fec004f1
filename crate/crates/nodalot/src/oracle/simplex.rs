//! Transportation simplex on a dense cost matrix.
//!
//! Exact primal simplex specialized to the transportation polytope:
//! the basis is a spanning tree of the bipartite supply/demand graph,
//! potentials come from a tree traversal, and each pivot pushes flow
//! around the unique cycle closed by the entering arc.
//!
//! Design choices for robustness and speed on this crate's instances:
//!
//! * **Start basis**: northwest-corner on pre-sorted atoms. The callers
//!   sort atoms so that the NW start is already the monotone matching
//!   (exactly optimal on a line), which keeps pivot counts near zero.
//! * **Pricing**: block scan with a moving cursor — the most negative
//!   reduced cost within the current block enters; a full wrap without
//!   candidates proves optimality.
//! * **Anti-cycling**: after a long run of consecutive degenerate
//!   pivots the entering rule switches to Bland's smallest-index rule,
//!   which terminates finitely; ties for the leaving arc always break
//!   to the smallest `(row, column)`.
//! * **Certificate**: after termination a full reduced-cost scan over
//!   all cells bounds the dual-feasibility violation; it must stay
//!   below `1e-9` times the cost scale or the solve is rejected.

use crate::error::{Error, Result};
use crate::tol;

/// Result of an exact transportation solve.
#[derive(Clone, Debug)]
pub(crate) struct SimplexOutcome {
    /// Basic flows `(row, column, flow)` with `flow > 0`.
    pub flows: Vec<(usize, usize, f64)>,
    /// Optimal objective `Σ flow · cost`.
    pub objective: f64,
    /// `max(0, −min reduced cost)` over all cells at termination.
    pub max_dual_violation: f64,
    /// Number of pivots performed.
    pub pivots: usize,
}

#[derive(Clone, Copy, Debug)]
struct Arc {
    i: usize,
    j: usize,
    flow: f64,
}

/// Solves `min Σ c·x` over the transportation polytope with the given
/// row sums (`supply`) and column sums (`demand`); `cost` is row-major
/// with `m` columns.
///
/// # Errors
/// [`Error::InvalidInput`] on shape mismatches;
/// [`Error::Degenerate`] if the pivot budget is exhausted or the final
/// certificate fails (neither occurs on well-posed balanced inputs).
pub(crate) fn transportation_simplex(
    supply: &[f64],
    demand: &[f64],
    cost: &[f64],
    m: usize,
) -> Result<SimplexOutcome> {
    let n = supply.len();
    if m != demand.len() || cost.len() != n * m || n == 0 || m == 0 {
        return Err(Error::InvalidInput("cost matrix shape mismatch".into()));
    }
    let mass_scale: f64 = supply.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let cost_scale = cost.iter().fold(0.0f64, |a, &c| a.max(c.abs())).max(f64::MIN_POSITIVE);
    let eps_enter = 1e-12 * cost_scale;
    let tiny_flow = 1e-14 * mass_scale;

    // Northwest-corner start on the caller's atom order.
    let mut arcs: Vec<Arc> = Vec::with_capacity(n + m - 1);
    {
        let mut ra = supply.to_vec();
        let mut rb = demand.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let q = ra[i].min(rb[j]).max(0.0);
            arcs.push(Arc { i, j, flow: q });
            ra[i] -= q;
            rb[j] -= q;
            if arcs.len() == n + m - 1 {
                break;
            }
            if i + 1 < n && (ra[i] <= rb[j] || j + 1 == m) {
                i += 1;
            } else {
                j += 1;
            }
        }
    }
    // node ids: 0..n supplies, n..n+m demands
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
    for (slot, a) in arcs.iter().enumerate() {
        adj[a.i].push(slot);
        adj[n + a.j].push(slot);
    }

    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; m];
    let mut visited = vec![false; n + m];
    let mut stack: Vec<usize> = Vec::with_capacity(n + m);
    let mut parent: Vec<Option<usize>> = vec![None; n + m];

    let compute_potentials = |u: &mut [f64],
                              v: &mut [f64],
                              visited: &mut [bool],
                              stack: &mut Vec<usize>,
                              arcs: &[Arc],
                              adj: &[Vec<usize>]|
     -> Result<()> {
        visited.iter_mut().for_each(|x| *x = false);
        u[0] = 0.0;
        visited[0] = true;
        stack.clear();
        stack.push(0);
        let mut seen = 1usize;
        while let Some(node) = stack.pop() {
            for &aid in &adj[node] {
                let a = arcs[aid];
                let other = if node < n { n + a.j } else { a.i };
                if !visited[other] {
                    if node < n {
                        v[a.j] = cost[a.i * m + a.j] - u[a.i];
                    } else {
                        u[a.i] = cost[a.i * m + a.j] - v[a.j];
                    }
                    visited[other] = true;
                    seen += 1;
                    stack.push(other);
                }
            }
        }
        if seen != n + m {
            return Err(Error::Degenerate("simplex basis lost connectivity".into()));
        }
        Ok(())
    };

    let block = (4 * (n + m)).max(1024).min(n * m);
    let mut cursor = 0usize;
    let mut pivots = 0usize;
    let mut consecutive_degenerate = 0usize;
    let degen_limit = 50 * (n + m);
    let max_pivots = 1_000_000usize;

    loop {
        compute_potentials(&mut u, &mut v, &mut visited, &mut stack, &arcs, &adj)?;

        // --- pricing ---
        let bland = consecutive_degenerate > degen_limit;
        let mut entering: Option<(usize, usize, f64)> = None;
        if bland {
            for (k, &c) in cost.iter().enumerate() {
                let (i, j) = (k / m, k % m);
                let r = c - u[i] - v[j];
                if r < -eps_enter {
                    entering = Some((i, j, r));
                    break;
                }
            }
        } else {
            let mut scanned = 0usize;
            while scanned < n * m {
                let mut best: Option<(usize, usize, f64)> = None;
                for t in 0..block.min(n * m - scanned) {
                    let k = (cursor + t) % (n * m);
                    let (i, j) = (k / m, k % m);
                    let r = cost[k] - u[i] - v[j];
                    if r < -eps_enter && best.map_or(true, |(_, _, br)| r < br) {
                        best = Some((i, j, r));
                    }
                }
                cursor = (cursor + block.min(n * m - scanned)) % (n * m);
                scanned += block;
                if best.is_some() {
                    entering = best;
                    break;
                }
            }
        }
        let Some((ei, ej, _)) = entering else { break };

        if pivots >= max_pivots {
            return Err(Error::Degenerate("simplex exceeded its pivot budget".into()));
        }
        pivots += 1;

        // --- find the tree path from supply ei to demand ej ---
        parent.iter_mut().for_each(|x| *x = None);
        visited.iter_mut().for_each(|x| *x = false);
        stack.clear();
        stack.push(ei);
        visited[ei] = true;
        let target = n + ej;
        while let Some(node) = stack.pop() {
            if node == target {
                break;
            }
            for &aid in &adj[node] {
                let a = arcs[aid];
                let other = if node < n { n + a.j } else { a.i };
                if !visited[other] {
                    visited[other] = true;
                    parent[other] = Some(aid);
                    stack.push(other);
                }
            }
        }
        let mut path: Vec<usize> = Vec::new();
        let mut node = target;
        while node != ei {
            let aid = parent[node].ok_or_else(|| {
                Error::Degenerate("simplex basis lost connectivity on a pivot".into())
            })?;
            path.push(aid);
            let a = arcs[aid];
            node = if node >= n { a.i } else { n + a.j };
        }

        // Arcs at even positions from the demand end lose flow.
        let mut theta = f64::INFINITY;
        let mut leaving: Option<usize> = None;
        let mut leaving_key = (usize::MAX, usize::MAX);
        for (k, &aid) in path.iter().enumerate() {
            if k % 2 == 0 {
                let a = arcs[aid];
                let key = (a.i, a.j);
                if a.flow < theta - 1e-18 * mass_scale
                    || (a.flow <= theta && key < leaving_key)
                {
                    theta = a.flow.min(theta);
                    leaving = Some(aid);
                    leaving_key = key;
                }
            }
        }
        let leaving =
            leaving.ok_or_else(|| Error::Degenerate("pivot cycle had no leaving arc".into()))?;
        let theta = theta.max(0.0);

        for (k, &aid) in path.iter().enumerate() {
            if k % 2 == 0 {
                arcs[aid].flow = (arcs[aid].flow - theta).max(0.0);
            } else {
                arcs[aid].flow += theta;
            }
        }

        // Replace the leaving arc's slot with the entering arc.
        let old = arcs[leaving];
        adj[old.i].retain(|&s| s != leaving);
        adj[n + old.j].retain(|&s| s != leaving);
        arcs[leaving] = Arc { i: ei, j: ej, flow: theta };
        adj[ei].push(leaving);
        adj[n + ej].push(leaving);

        if theta <= tiny_flow {
            consecutive_degenerate += 1;
        } else {
            consecutive_degenerate = 0;
        }
    }

    // --- optimality certificate ---
    compute_potentials(&mut u, &mut v, &mut visited, &mut stack, &arcs, &adj)?;
    let mut min_r = 0.0f64;
    for k in 0..n * m {
        let r = cost[k] - u[k / m] - v[k % m];
        min_r = min_r.min(r);
    }
    let max_dual_violation = -min_r;
    if max_dual_violation > tol::SIMPLEX_OPT_REL * cost_scale {
        return Err(Error::Degenerate(format!(
            "simplex terminated with dual violation {max_dual_violation:.3e} \
             above {:.3e}",
            tol::SIMPLEX_OPT_REL * cost_scale
        )));
    }

    let objective = arcs.iter().map(|a| a.flow * cost[a.i * m + a.j]).sum();
    let flows = arcs
        .iter()
        .filter(|a| a.flow > 0.0)
        .map(|a| (a.i, a.j, a.flow))
        .collect();
    Ok(SimplexOutcome { flows, objective, max_dual_violation, pivots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn small_rectangular_instance() {
        // supplies [3,7] vs demands [4,6], costs rows [2,9],[5,1]:
        // optimum ships 3 at cost 2, 1 at cost 5, 6 at cost 1 → 17.
        let out = transportation_simplex(&[3.0, 7.0], &[4.0, 6.0], &[2.0, 9.0, 5.0, 1.0], 2)
            .unwrap();
        assert!((out.objective - 17.0).abs() < 1e-12);
        let shipped: f64 = out.flows.iter().map(|&(_, _, f)| f).sum();
        assert!((shipped - 10.0).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_assignment() {
        let mut rng = StdRng::seed_from_u64(0x51_317);
        for _ in 0..30 {
            let k = 6usize;
            let cost: Vec<f64> = (0..k * k).map(|_| rng.gen_range(0.0..1.0)).collect();
            let unit = vec![1.0; k];
            let out = transportation_simplex(&unit, &unit, &cost, k).unwrap();
            let best = brute_force_assignment(&cost, k);
            assert!(
                (out.objective - best).abs() < 1e-12,
                "simplex {} vs brute force {best}",
                out.objective
            );
        }
    }

    fn brute_force_assignment(cost: &[f64], k: usize) -> f64 {
        fn rec(cost: &[f64], k: usize, row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
            if row == k {
                *best = best.min(acc);
                return;
            }
            for j in 0..k {
                if !used[j] {
                    used[j] = true;
                    rec(cost, k, row + 1, used, acc + cost[row * k + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, k, 0, &mut vec![false; k], 0.0, &mut best);
        best
    }

    #[test]
    fn fully_degenerate_ties_terminate() {
        // equal unit supplies/demands with a flat cost surface: every
        // pivot is degenerate, exercising the anti-cycling fallback.
        let k = 8usize;
        let unit = vec![1.0; k];
        let cost = vec![1.0; k * k];
        let out = transportation_simplex(&unit, &unit, &cost, k).unwrap();
        assert!((out.objective - k as f64).abs() < 1e-12);
        assert!(out.max_dual_violation <= 1e-9);
    }

    #[test]
    fn rejects_shape_mismatch() {
        assert!(transportation_simplex(&[1.0], &[1.0, 2.0], &[1.0], 2).is_err());
    }
}
