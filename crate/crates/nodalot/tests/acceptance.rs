//! Acceptance suite: ten end-to-end criteria covering the closed-form
//! minimizers, the sharp bound, reductions, oracle agreement, plan
//! legality, and solver self-consistency. Each criterion is one test
//! that prints a single `criterion N: PASS` line; a failed assertion
//! marks it FAIL.
//!
//! Expected values are written out here as independent formulas rather
//! than calls back into the library, so a regression in the library's
//! arithmetic cannot hide itself.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nodalot::{
    check_plan_monotonicity, concentrate_to_steps, discretize, minimize_circle,
    minimize_interval, minimize_star_closed_form, minimize_star_numeric,
    plan_is_nodally_adjacent, random_atom_pair, random_member, random_spec,
    random_vertex_split_star, reduce_to_adjacent_steps, short_edge_value, solve_discrete_ot,
    solve_line_sorted, trial_rng, wasserstein_circle, wasserstein_interval, wasserstein_star,
    ClassSpec, Domain, DomainKind, StarMethod, StepFunction,
};

// ---- pinned tolerances ----------------------------------------------------

/// Closed-form values must match the written-out formulas to this
/// relative error.
const CLOSED_FORM_REL: f64 = 1e-12;
/// The numeric star solver must land on the closed forms within this.
const NUMERIC_ABS: f64 = 1e-7;
/// Discretization oracle error budget per unit of cell width.
const ORACLE_ERR_PER_H: f64 = 3.0;
/// Sharpness: random members sit above the bound, and constructed
/// minimizers attain it, to within this.
const SHARPNESS_ABS: f64 = 1e-8;
/// Circle minimum vs. the interval formula.
const CIRCLE_FORMULA_ABS: f64 = 1e-10;
/// Rotating a circle instance must not change its cost beyond this.
const ROTATION_ABS: f64 = 1e-9;
/// Concentration may lose at most this much to rounding.
const REDUCTION_SLACK_ABS: f64 = 1e-10;
/// Short-edge sweep endpoints vs. the interval / long-edge formulas.
const ENDPOINT_ABS: f64 = 1e-10;
/// Numeric solver vs. the short-edge interpolation formula.
const SHORT_EDGE_NUMERIC_ABS: f64 = 1e-6;
/// Fold-path value vs. the discrete oracle at h = 2e-3.
const FOLD_VS_ORACLE_ABS: f64 = 6e-3;
/// Transportation simplex vs. the sorting solver on identical input.
const SOLVER_CROSS_ABS: f64 = 1e-12;

// ---- independent expected-value formulas ----------------------------------

/// `2^{-(p+1)/p} · c₁^{1+1/p} / (Ñ·c∞)`.
fn expected_value(c_1: f64, c_inf: f64, effective_n: f64, p: f64) -> f64 {
    2f64.powf(-(p + 1.0) / p) * c_1.powf(1.0 + 1.0 / p) / (effective_n * c_inf)
}

/// Three-edge short-edge interpolation at `p = 1`:
/// `(c₁²/(4c∞))·((1-β)² + 3Nβ²)/N`.
fn expected_short_edge(c_1: f64, c_inf: f64, n: usize, beta: f64) -> f64 {
    let nf = n as f64;
    c_1 * c_1 / (4.0 * c_inf) * ((1.0 - beta) * (1.0 - beta) + 3.0 * nf * beta * beta) / nf
}

/// Effective nodal weight of the vertex for an odd number of edges:
/// `D̃ = (D+1)(D-1)/(2D)`.
fn odd_vertex_weight(d: usize) -> f64 {
    let df = d as f64;
    (df + 1.0) * (df - 1.0) / (2.0 * df)
}

// ---- shared star case sets (their oracle plans feed criterion 9) ----------

struct StarCase {
    d: usize,
    n: usize,
    p: f64,
    closed_value: f64,
    numeric_value: f64,
    oracle_value: f64,
    h: f64,
    monotonicity_violations: usize,
}

fn solve_star_case(d: usize, n: usize, p: f64, h: f64) -> StarCase {
    let spec = ClassSpec {
        c_inf: 1.0,
        c_1: 1.0,
        n_nodal: n,
        domain: Domain::Star { edges: vec![2.0; d] },
    };
    let closed = minimize_star_closed_form(&spec, p).expect("closed form applies");
    let numeric = minimize_star_numeric(&spec, p).expect("numeric solve");
    let pair = discretize(&closed.f_star, h).expect("discretize f_star");
    let sol = solve_discrete_ot(&spec.domain, &pair, p).expect("oracle solve");
    let violations =
        check_plan_monotonicity(&sol.plan, &spec.domain).expect("swap test").len();
    StarCase {
        d,
        n,
        p,
        closed_value: closed.value,
        numeric_value: numeric.value,
        oracle_value: sol.value,
        h,
        monotonicity_violations: violations,
    }
}

fn even_star_cases() -> &'static [StarCase] {
    static CASES: OnceLock<Vec<StarCase>> = OnceLock::new();
    CASES.get_or_init(|| {
        let mut out = Vec::new();
        for d in [2usize, 4, 6] {
            for n in 1..=3usize {
                for p in [1.0, 2.0] {
                    out.push(solve_star_case(d, n, p, 2e-3));
                }
            }
        }
        out
    })
}

fn odd_star_cases() -> &'static [StarCase] {
    static CASES: OnceLock<Vec<StarCase>> = OnceLock::new();
    CASES.get_or_init(|| {
        let mut out = Vec::new();
        for d in [3usize, 5] {
            for n in 1..=3usize {
                out.push(solve_star_case(d, n, 1.0, 2e-3));
            }
        }
        out
    })
}

struct FoldTrial {
    p: f64,
    fold_value: f64,
    oracle_value: f64,
    took_fold_route: bool,
    monotonicity_violations: usize,
}

fn fold_trials() -> &'static [FoldTrial] {
    static TRIALS: OnceLock<Vec<FoldTrial>> = OnceLock::new();
    TRIALS.get_or_init(|| {
        let mut out = Vec::new();
        for trial in 0..300u64 {
            let mut rng = trial_rng(801, trial);
            let f = random_vertex_split_star(&mut rng).expect("vertex-split draw");
            let pair = discretize(&f, 2e-3).expect("discretize");
            for p in [1.0, 2.0] {
                let sol = wasserstein_star(&f, p).expect("fold solve");
                let oracle = solve_discrete_ot(f.domain(), &pair, p).expect("oracle solve");
                let violations = check_plan_monotonicity(&oracle.plan, f.domain())
                    .expect("swap test")
                    .len();
                out.push(FoldTrial {
                    p,
                    fold_value: sol.value,
                    oracle_value: oracle.value,
                    took_fold_route: matches!(sol.method, StarMethod::Folded),
                    monotonicity_violations: violations,
                });
            }
        }
        out
    })
}

// ---- criteria --------------------------------------------------------------

#[test]
fn criterion_01_interval_closed_form_grid() {
    let start = Instant::now();
    let mut cases = 0;
    for c_inf in [0.5, 1.0, 2.0] {
        for n in [1usize, 2, 3, 5] {
            let spec = ClassSpec {
                c_inf,
                c_1: 1.0,
                n_nodal: n,
                domain: Domain::Interval { length: 4.0 },
            };
            for p in [1.0, 2.0] {
                let res = minimize_interval(&spec, p).expect("minimize");
                let expected = expected_value(1.0, c_inf, n as f64, p);
                let rel = (res.value - expected).abs() / expected;
                assert!(
                    rel <= CLOSED_FORM_REL,
                    "c_inf={c_inf} n={n} p={p}: value {} vs formula {expected} (rel {rel:.2e})",
                    res.value
                );
                let h = 1e-3;
                let pair = discretize(&res.f_star, h).expect("discretize");
                let oracle = solve_line_sorted(&pair, p).expect("oracle");
                let diff = (oracle - res.value).abs();
                assert!(
                    diff <= ORACLE_ERR_PER_H * h,
                    "c_inf={c_inf} n={n} p={p}: oracle {oracle} vs {} (diff {diff:.2e})",
                    res.value
                );
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}, budget 10 s");
    println!(
        "criterion 1: PASS — interval closed form on {cases} grid cases, formula rel \
         ≤ {CLOSED_FORM_REL:.0e}, oracle within 3e-3 ({elapsed:?})"
    );
}

#[test]
fn criterion_02_sharp_bound_on_random_members() {
    let start = Instant::now();
    let mut worst_slack = f64::INFINITY;
    for trial in 0..1000u64 {
        let mut rng = trial_rng(102, trial);
        let n = (trial % 4 + 1) as usize;
        let spec = ClassSpec {
            c_inf: 1.0,
            c_1: 1.0,
            n_nodal: n,
            domain: Domain::Interval { length: 2.0 },
        };
        use rand::Rng as _;
        let rough_prob = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
        let (f, _) = random_member(&spec, &mut rng, rough_prob).expect("member");
        for p in [1.0, 2.0] {
            let (w, _) = wasserstein_interval(&f, p).expect("measure");
            let bound = 2f64.powf(-1.0 - 1.0 / p);
            let slack = w * n as f64 - bound;
            worst_slack = worst_slack.min(slack);
            assert!(
                slack >= -SHARPNESS_ABS,
                "trial {trial} n={n} p={p}: W·N = {} below bound {bound}",
                w * n as f64
            );
        }
    }
    // The constructed minimizers attain the bound.
    for n in 1..=4usize {
        let spec = ClassSpec {
            c_inf: 1.0,
            c_1: 1.0,
            n_nodal: n,
            domain: Domain::Interval { length: 2.0 },
        };
        for p in [1.0, 2.0] {
            let bound = 2f64.powf(-1.0 - 1.0 / p);
            let res = minimize_interval(&spec, p).expect("minimize");
            assert!((res.value * n as f64 - bound).abs() <= SHARPNESS_ABS);
            let (w, _) = wasserstein_interval(&res.f_star, p).expect("re-measure");
            assert!(
                (w * n as f64 - bound).abs() <= SHARPNESS_ABS,
                "n={n} p={p}: re-measured {} vs bound {bound}",
                w * n as f64
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}, budget 30 s");
    println!(
        "criterion 2: PASS — 1000 random members respect the bound (worst slack \
         {worst_slack:.2e}) and minimizers attain it ({elapsed:?})"
    );
}

/// Rotates a circle function by `shift`, splitting any piece that wraps
/// past the seam.
fn rotate_circle(f: &StepFunction, shift: f64) -> StepFunction {
    let tau = std::f64::consts::TAU;
    let mut pieces = Vec::new();
    for piece in f.pieces(0) {
        let a = (piece.start + shift).rem_euclid(tau);
        let b = a + piece.len();
        if b <= tau {
            pieces.push((0, a, b, piece.value));
        } else {
            pieces.push((0, a, tau, piece.value));
            pieces.push((0, 0.0, b - tau, piece.value));
        }
    }
    StepFunction::new(Domain::Circle, pieces).expect("rotated function")
}

#[test]
fn criterion_03_circle_matches_interval_formula_and_rotation_invariance() {
    for n in [2usize, 4, 6] {
        let spec = ClassSpec { c_inf: 1.0, c_1: 1.0, n_nodal: n, domain: Domain::Circle };
        for p in [1.0, 2.0] {
            let res = minimize_circle(&spec, p).expect("minimize");
            let expected = expected_value(1.0, 1.0, n as f64, p);
            assert!(
                (res.value - expected).abs() <= CIRCLE_FORMULA_ABS,
                "n={n} p={p}: circle minimum {} vs interval formula {expected}",
                res.value
            );
            let sol = wasserstein_circle(&res.f_star, p).expect("re-measure");
            assert!((sol.value - expected).abs() <= SHARPNESS_ABS);
        }
    }
    let exponents = [1.0, 1.5, 2.0, 3.0];
    for trial in 0..200u64 {
        let mut rng = trial_rng(303, trial);
        let spec = random_spec(&mut rng, DomainKind::Circle);
        use rand::Rng as _;
        let rough_prob = if rng.gen_bool(0.5) { 0.65 } else { 0.0 };
        let (f, _) = random_member(&spec, &mut rng, rough_prob).expect("member");
        let p = exponents[(trial % 4) as usize];
        let shift = rng.gen_range(0.0..std::f64::consts::TAU);
        let before = wasserstein_circle(&f, p).expect("measure").value;
        let after = wasserstein_circle(&rotate_circle(&f, shift), p).expect("measure").value;
        assert!(
            (before - after).abs() <= ROTATION_ABS,
            "trial {trial} p={p} shift={shift}: {before} vs {after}"
        );
    }
    println!(
        "criterion 3: PASS — circle minima equal the interval formula (≤ \
         {CIRCLE_FORMULA_ABS:.0e}) and 200 rotations preserve cost (≤ {ROTATION_ABS:.0e})"
    );
}

#[test]
fn criterion_04_even_star_closed_form() {
    for case in even_star_cases() {
        let eff = case.n as f64 - 1.0 + case.d as f64 / 2.0;
        let expected = expected_value(1.0, 1.0, eff, case.p);
        let rel = (case.closed_value - expected).abs() / expected;
        assert!(
            rel <= CLOSED_FORM_REL,
            "D={} N={} p={}: closed {} vs formula {expected}",
            case.d, case.n, case.p, case.closed_value
        );
        assert!(
            (case.numeric_value - case.closed_value).abs() <= NUMERIC_ABS,
            "D={} N={} p={}: numeric {} vs closed {}",
            case.d, case.n, case.p, case.numeric_value, case.closed_value
        );
        assert!(
            (case.oracle_value - case.closed_value).abs() <= ORACLE_ERR_PER_H * case.h,
            "D={} N={} p={}: oracle {} vs closed {}",
            case.d, case.n, case.p, case.oracle_value, case.closed_value
        );
    }
    // A two-edge star is an interval in disguise: the values must agree
    // bit for bit.
    for n in 1..=3usize {
        for p in [1.0, 2.0] {
            let star = even_star_cases()
                .iter()
                .find(|c| c.d == 2 && c.n == n && c.p == p)
                .unwrap();
            let interval = minimize_interval(
                &ClassSpec {
                    c_inf: 1.0,
                    c_1: 1.0,
                    n_nodal: n,
                    domain: Domain::Interval { length: 4.0 },
                },
                p,
            )
            .expect("interval minimize");
            assert_eq!(
                star.closed_value.to_bits(),
                interval.value.to_bits(),
                "n={n} p={p}: degenerate star {} vs interval {}",
                star.closed_value,
                interval.value
            );
        }
    }
    println!(
        "criterion 4: PASS — {} even-star cases match the formula, the numeric solver \
         (≤ {NUMERIC_ABS:.0e}), and the oracle (≤ 6e-3); D=2 equals the interval bitwise",
        even_star_cases().len()
    );
}

#[test]
fn criterion_05_odd_star_closed_form_and_sandwich() {
    for case in odd_star_cases() {
        let eff = case.n as f64 - 1.0 + odd_vertex_weight(case.d);
        let expected = expected_value(1.0, 1.0, eff, 1.0);
        let rel = (case.closed_value - expected).abs() / expected;
        assert!(
            rel <= CLOSED_FORM_REL,
            "D={} N={}: closed {} vs formula {expected}",
            case.d, case.n, case.closed_value
        );
        assert!(
            (case.numeric_value - case.closed_value).abs() <= NUMERIC_ABS,
            "D={} N={}: numeric {} vs closed {}",
            case.d, case.n, case.numeric_value, case.closed_value
        );
        assert!(
            (case.oracle_value - case.closed_value).abs() <= ORACLE_ERR_PER_H * case.h,
            "D={} N={}: oracle {} vs closed {}",
            case.d, case.n, case.oracle_value, case.closed_value
        );
    }
    // For N = 1 the value is c₁²/(4D̃c∞); the vertex weight sits between
    // the two adjacent even counts.
    for d in [3usize, 5] {
        let quarter = 1.0 / (4.0 * odd_vertex_weight(d));
        let lo = 1.0 / (2.0 * (d as f64 + 1.0));
        let hi = 1.0 / (2.0 * (d as f64 - 1.0));
        assert!(
            lo <= quarter && quarter <= hi,
            "D={d}: {lo} ≤ {quarter} ≤ {hi} fails"
        );
    }
    println!(
        "criterion 5: PASS — {} odd-star p=1 cases match the formula, the numeric \
         solver, and the oracle; the N=1 constant is sandwiched",
        odd_star_cases().len()
    );
}

#[test]
fn criterion_06_short_edge_interpolation() {
    for n in [1usize, 2] {
        let beta_star = 1.0 / (3.0 * n as f64 + 1.0);
        let interval_value = expected_value(1.0, 1.0, n as f64, 1.0);
        let odd_value = expected_value(1.0, 1.0, n as f64 - 1.0 + odd_vertex_weight(3), 1.0);
        let sweep: Vec<f64> = (0..21)
            .map(|i| short_edge_value(1.0, 1.0, n, beta_star * i as f64 / 20.0))
            .collect();
        assert!(
            (sweep[0] - interval_value).abs() <= ENDPOINT_ABS,
            "n={n}: left endpoint {} vs interval {interval_value}",
            sweep[0]
        );
        assert!(
            (sweep[20] - odd_value).abs() <= ENDPOINT_ABS,
            "n={n}: right endpoint {} vs long-edge value {odd_value}",
            sweep[20]
        );
        for w in sweep.windows(2) {
            assert!(w[1] < w[0], "n={n}: sweep not strictly decreasing: {w:?}");
        }
        for k in [2usize, 6, 10, 14, 18] {
            let beta = beta_star * k as f64 / 20.0;
            let spec = ClassSpec {
                c_inf: 1.0,
                c_1: 1.0,
                n_nodal: n,
                domain: Domain::Star { edges: vec![2.0, 2.0, beta] },
            };
            let numeric = minimize_star_numeric(&spec, 1.0).expect("numeric");
            let expected = expected_short_edge(1.0, 1.0, n, beta);
            assert!(
                (numeric.value - expected).abs() <= SHORT_EDGE_NUMERIC_ABS,
                "n={n} beta={beta}: numeric {} vs formula {expected}",
                numeric.value
            );
        }
    }
    println!(
        "criterion 6: PASS — short-edge sweeps hit both endpoints (≤ {ENDPOINT_ABS:.0e}), \
         decrease strictly, and the numeric solver reproduces the formula at 10 β values"
    );
}

#[test]
fn criterion_07_reductions_on_random_interval_members() {
    let exponents = [1.0, 1.5, 2.0, 3.0];
    let mut rough_trials = 0usize;
    for trial in 0..1000u64 {
        let mut rng = trial_rng(707, trial);
        let mut spec = random_spec(&mut rng, DomainKind::Interval);
        spec.domain = Domain::Interval {
            length: match spec.domain {
                Domain::Interval { length } => length,
                _ => unreachable!(),
            },
        };
        use rand::Rng as _;
        let rough_prob = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
        let (f, in_step_class) = random_member(&spec, &mut rng, rough_prob).expect("member");
        if !in_step_class {
            rough_trials += 1;
        }
        let p = exponents[(trial % 4) as usize];
        let red = concentrate_to_steps(&f, p).expect("concentrate");
        let slack = red.initial_cost() - red.final_cost();
        assert!(
            slack >= -REDUCTION_SLACK_ABS,
            "trial {trial} p={p}: concentration increased cost by {}",
            -slack
        );
        if !in_step_class {
            assert!(
                slack > 0.0,
                "trial {trial} p={p}: no strict decrease on a non-step member"
            );
        }
        let full = reduce_to_adjacent_steps(&f, p).expect("compose");
        let (_, plan) = wasserstein_interval(&full.result, p).expect("final measure");
        assert!(
            plan_is_nodally_adjacent(&full.result, &plan).expect("adjacency"),
            "trial {trial} p={p}: composed reduction left a non-adjacent move"
        );
    }
    assert!(
        (350..=650).contains(&rough_trials),
        "expected roughly half the trials outside the step subclass, got {rough_trials}/1000"
    );
    println!(
        "criterion 7: PASS — 1000 reductions: slack ≥ -1e-10, strict decrease on all \
         {rough_trials} non-step members, adjacency on every composed plan"
    );
}

#[test]
fn criterion_08_fold_value_matches_oracle() {
    let trials = fold_trials();
    assert_eq!(trials.len(), 600);
    let mut worst = 0f64;
    for (i, t) in trials.iter().enumerate() {
        assert!(t.took_fold_route, "trial {i}: expected the exact fold route");
        let diff = (t.fold_value - t.oracle_value).abs();
        worst = worst.max(diff);
        assert!(
            diff <= FOLD_VS_ORACLE_ABS,
            "trial {i} p={}: fold {} vs oracle {} (diff {diff:.2e})",
            t.p, t.fold_value, t.oracle_value
        );
    }
    println!(
        "criterion 8: PASS — 300 vertex-split stars × p ∈ {{1,2}}: |fold − oracle| ≤ \
         {FOLD_VS_ORACLE_ABS:.0e} (worst {worst:.2e})"
    );
}

#[test]
fn criterion_09_oracle_plans_have_no_improving_swap() {
    let even: usize = even_star_cases().iter().map(|c| c.monotonicity_violations).sum();
    let odd: usize = odd_star_cases().iter().map(|c| c.monotonicity_violations).sum();
    let fold: usize = fold_trials().iter().map(|t| t.monotonicity_violations).sum();
    let plans = even_star_cases().len() + odd_star_cases().len() + fold_trials().len();
    assert_eq!(even + odd + fold, 0, "improving swaps found: {even}+{odd}+{fold}");
    println!(
        "criterion 9: PASS — zero cost-reducing swaps across {plans} oracle plans"
    );
}

#[test]
fn criterion_10_simplex_agrees_with_sorting_solver() {
    let domain = Domain::Interval { length: 10.0 };
    let mut worst = 0f64;
    for trial in 0..500u64 {
        let mut rng = trial_rng(1001, trial);
        let pair = random_atom_pair(&mut rng, 500);
        let p = if trial % 2 == 0 { 1.0 } else { 2.0 };
        let simplex = solve_discrete_ot(&domain, &pair, p).expect("simplex");
        let sorted = solve_line_sorted(&pair, p).expect("sorting solver");
        let diff = (simplex.value - sorted).abs();
        worst = worst.max(diff);
        assert!(
            diff <= SOLVER_CROSS_ABS,
            "trial {trial} p={p}: simplex {} vs sorted {sorted} (diff {diff:.2e})",
            simplex.value
        );
    }
    println!(
        "criterion 10: PASS — 500 atom sets: simplex and sorting solver agree to \
         {SOLVER_CROSS_ABS:.0e} (worst {worst:.2e})"
    );
}
