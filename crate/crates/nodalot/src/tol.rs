//! Central registry of numeric tolerances.
//!
//! Every comparison threshold used by the library lives here, with a note
//! on what it protects against. Tests assert the orderings between related
//! tolerances so a future edit cannot silently invert them.

/// Two domain points closer than this (geodesically) are the same point.
///
/// Also used when comparing edge lengths of two domains for equality.
pub const POINT_EQ: f64 = 1e-12;

/// A piece value `v` with `|v| < ZERO_VALUE_REL * ‖f‖∞` is treated as zero
/// when classifying sign runs. Relative, so rescaling a function does not
/// change its nodal structure.
pub const ZERO_VALUE_REL: f64 = 1e-12;

/// Relative tolerance for the four class-membership checks
/// (`‖f‖∞ = c∞`, `‖f‖₁ = c₁`, `∫f = 0`, nodal count) and for deciding
/// whether a value sits exactly at `±c∞` in the step-class check.
pub const CLASS_REL: f64 = 1e-9;

/// A function is balanced when `|∫f| ≤ BALANCE_REL * ‖f‖₁`.
pub const BALANCE_REL: f64 = 1e-9;

/// Mass-conservation slack allowed when validating a transport plan
/// against its marginals (relative to total mass).
pub const PLAN_MASS_REL: f64 = 1e-9;

/// The two independent `W₁` routes (inverse-CDF and CDF-difference) must
/// agree to this absolute tolerance on unit-scale instances.
pub const W1_CROSS_ABS: f64 = 1e-12;

/// Absolute bracket width at which the golden-section search over the
/// circle cut shift stops. The cost is locally quadratic around the
/// optimum, so the value error is far below measurement tolerances.
pub const CIRCLE_SHIFT_ABS: f64 = 1e-11;

/// Discretization error bound for the oracle: `|oracle(h) − exact| ≤ 3h`
/// for unit-mass-scale instances (midpoint atoms displace each marginal by
/// at most `h/2` in Wasserstein distance).
pub const ORACLE_ERR_PER_H: f64 = 3.0;

/// Reduced costs at simplex termination must be `≥ −SIMPLEX_OPT_REL *
/// scale`, where `scale` is the largest cost magnitude in the instance.
pub const SIMPLEX_OPT_REL: f64 = 1e-9;

/// The sorting-based 1-D oracle and the transportation simplex must agree
/// to this absolute tolerance on the transport value.
pub const ORACLE_CROSS_ABS: f64 = 1e-12;

/// Closed-form minimizer values and the numeric configuration solver must
/// agree to this absolute tolerance (unit-scale instances).
pub const NUMERIC_MATCH_ABS: f64 = 1e-7;

/// A constructed minimizer, re-measured by the analytic transport solver,
/// must reproduce the predicted value to this relative tolerance.
pub const SELF_CONSISTENCY_REL: f64 = 1e-8;

/// Reductions may not increase cost beyond this absolute slack.
pub const REDUCTION_SLACK_ABS: f64 = 1e-10;

/// A 2-cycle swap must lower the pair cost by more than
/// `MONOTONE_SWAP_REL * max(1, pair cost)` before a scenario match is
/// reported as a genuine monotonicity violation (ties are legal).
pub const MONOTONE_SWAP_REL: f64 = 1e-12;

#[cfg(test)]
mod tests {
    use super::*;

    /// The zero-classification and point-identity tolerances must stay
    /// strictly tighter than every verification tolerance, otherwise a
    /// "zero" piece could carry verifiable mass.
    #[test]
    #[allow(clippy::assertions_on_constants)]
    fn tolerance_ordering() {
        assert!(ZERO_VALUE_REL < CLASS_REL);
        assert!(POINT_EQ < CLASS_REL);
        assert!(W1_CROSS_ABS < REDUCTION_SLACK_ABS);
        assert!(ORACLE_CROSS_ABS < SIMPLEX_OPT_REL);
        assert!(NUMERIC_MATCH_ABS < 1e-3);
        assert!(CIRCLE_SHIFT_ABS < 1e-9);
        assert!(MONOTONE_SWAP_REL <= POINT_EQ);
    }
}
