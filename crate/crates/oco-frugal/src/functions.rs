//! Piecewise-quadratic convex functions on `[0,1]`.
//!
//! Every cost function the crate touches — the five simulation quadratics,
//! the three adversarial lower-bound functions, and anything loaded from a
//! config file — is a [`PiecewiseConvexSpec`]: an ordered list of quadratic
//! (or linear, `a = 0`) segments that tile `[0,1]` exactly, continuous in
//! value and with non-decreasing one-sided derivatives at every breakpoint.
//!
//! The standing assumptions the rest of the crate relies on:
//!
//! * **A1** — each function maps `[0,1]` into the non-negative reals, is
//!   convex and `M`-smooth, and attains minimum value 0. Non-negativity and
//!   convexity are enforced at construction; the zero-minimum is *reported*
//!   by [`validate_assumptions`] rather than enforced, so that deliberately
//!   offset functions can be built to exercise the validator.
//! * **A2** — each function is `L`-Lipschitz; the tight constant is derived
//!   by [`params`] (the derivative of a piecewise quadratic is piecewise
//!   linear, so its extreme magnitudes occur at segment endpoints).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute-plus-relative tolerance for value continuity and derivative
/// monotonicity at breakpoints. All bundled constructions are continuous in
/// exact arithmetic; the tolerance only absorbs floating-point rounding of
/// the closed-form coefficients.
pub const BREAKPOINT_TOL: f64 = 1e-9;

/// How far below zero the global minimum may sit before a function is
/// rejected as violating non-negativity (A1's codomain).
pub const NONNEGATIVITY_TOL: f64 = 1e-9;

/// Tolerance for the zero-minimum check of A1 in [`validate_assumptions`].
pub const ZERO_MIN_TOL: f64 = 1e-9;

/// One quadratic piece `a·x² + b·x + c` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Segment {
    /// Value of the segment polynomial at `x` (not range-checked; the
    /// containing spec picks the segment).
    #[inline]
    pub fn value_at(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    /// Derivative `2a·x + b` at `x`.
    #[inline]
    pub fn deriv_at(&self, x: f64) -> f64 {
        2.0 * self.a * x + self.b
    }

    fn validate(&self, idx: usize) -> Result<()> {
        let all_finite = [self.lo, self.hi, self.a, self.b, self.c]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Numeric(format!("segment {idx} has non-finite fields")));
        }
        if !(0.0..=1.0).contains(&self.lo) || !(0.0..=1.0).contains(&self.hi) {
            return Err(Error::Parameter(format!(
                "segment {idx} range [{}, {}] leaves the domain [0,1]",
                self.lo, self.hi
            )));
        }
        if self.lo >= self.hi {
            return Err(Error::Parameter(format!(
                "segment {idx} has lo {} >= hi {}",
                self.lo, self.hi
            )));
        }
        if self.a < 0.0 {
            return Err(Error::Parameter(format!(
                "segment {idx} has negative quadratic coefficient {} (piece not convex)",
                self.a
            )));
        }
        Ok(())
    }
}

/// Smoothness / Lipschitz summary of a spec, per assumptions A1 and A2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionParams {
    /// Curvature bound `M`: twice the largest quadratic coefficient.
    pub smoothness: f64,
    /// Lipschitz constant `L`: the largest derivative magnitude on `[0,1]`.
    pub lipschitz: f64,
    /// Location of the global minimum.
    pub x_star: f64,
}

/// A convex piecewise-quadratic function on `[0,1]`.
///
/// Immutable after construction; the minimizer and minimum value are cached
/// by per-segment vertex enumeration (exact for piecewise quadratics), so
/// sharing across threads is free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Segment>", into = "Vec<Segment>")]
pub struct PiecewiseConvexSpec {
    segments: Vec<Segment>,
    x_star: f64,
    min_value: f64,
}

impl PiecewiseConvexSpec {
    /// Builds a spec from segments, enforcing:
    ///
    /// * segments tile `[0,1]` exactly (`segments[i].hi == segments[i+1].lo`
    ///   bitwise, first `lo = 0`, last `hi = 1`);
    /// * value continuity at breakpoints within [`BREAKPOINT_TOL`]
    ///   (absolute plus relative to the larger magnitude);
    /// * non-decreasing one-sided derivatives at breakpoints (convexity
    ///   across pieces; within-piece convexity is `a >= 0`);
    /// * global minimum at least `-`[`NONNEGATIVITY_TOL`].
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Parameter("a spec needs at least one segment".into()));
        }
        for (i, s) in segments.iter().enumerate() {
            s.validate(i)?;
        }
        if segments[0].lo != 0.0 {
            return Err(Error::Parameter(format!(
                "first segment starts at {}, not 0",
                segments[0].lo
            )));
        }
        if segments[segments.len() - 1].hi != 1.0 {
            return Err(Error::Parameter(format!(
                "last segment ends at {}, not 1",
                segments[segments.len() - 1].hi
            )));
        }
        for w in segments.windows(2) {
            let (left, right) = (&w[0], &w[1]);
            if left.hi != right.lo {
                return Err(Error::Parameter(format!(
                    "segments do not tile: gap or overlap between hi {} and lo {}",
                    left.hi, right.lo
                )));
            }
            let bp = left.hi;
            let (lv, rv) = (left.value_at(bp), right.value_at(bp));
            let vtol = BREAKPOINT_TOL * (1.0 + lv.abs().max(rv.abs()));
            if (lv - rv).abs() > vtol {
                return Err(Error::Parameter(format!(
                    "discontinuity at breakpoint {bp}: left value {lv}, right value {rv}"
                )));
            }
            let (ld, rd) = (left.deriv_at(bp), right.deriv_at(bp));
            let dtol = BREAKPOINT_TOL * (1.0 + ld.abs().max(rd.abs()));
            if rd < ld - dtol {
                return Err(Error::Parameter(format!(
                    "convexity violated at breakpoint {bp}: derivative drops from {ld} to {rd}"
                )));
            }
        }
        let (x_star, min_value) = minimize(&segments);
        if min_value < -NONNEGATIVITY_TOL {
            return Err(Error::Parameter(format!(
                "function is negative: minimum {min_value} at {x_star}"
            )));
        }
        Ok(Self {
            segments,
            x_star,
            min_value,
        })
    }

    /// The segments, in domain order.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Cached global minimizer (leftmost when the minimum is attained on an
    /// interval).
    pub fn x_star(&self) -> f64 {
        self.x_star
    }

    /// Cached global minimum value.
    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    /// Function value at `x`. At an interior breakpoint the left segment is
    /// used (adjacent values agree within [`BREAKPOINT_TOL`] anyway).
    ///
    /// # Panics
    /// If `x` is outside `[0,1]` — evaluating out of domain is a caller bug.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        assert!(
            (0.0..=1.0).contains(&x),
            "eval domain error: x = {x} outside [0,1]"
        );
        // First segment with hi >= x; at x == hi this picks the left piece.
        let idx = self.segments.partition_point(|s| s.hi < x);
        self.segments[idx].value_at(x)
    }

    /// Derivative at `x`; at an interior breakpoint the *right* segment's
    /// derivative is returned (a deterministic subgradient selection).
    ///
    /// # Panics
    /// If `x` is outside `[0,1]`.
    #[inline]
    pub fn grad(&self, x: f64) -> f64 {
        assert!(
            (0.0..=1.0).contains(&x),
            "grad domain error: x = {x} outside [0,1]"
        );
        // First segment with hi > x; at x == 1 fall back to the last piece.
        let idx = self
            .segments
            .partition_point(|s| s.hi <= x)
            .min(self.segments.len() - 1);
        self.segments[idx].deriv_at(x)
    }

    /// Derives the tight smoothness/Lipschitz constants (A1/A2 symbols `M`
    /// and `L`). The derivative is piecewise linear, so `L` is attained at a
    /// segment endpoint; `M` is twice the largest quadratic coefficient.
    pub fn params(&self) -> FunctionParams {
        let mut smoothness: f64 = 0.0;
        let mut lipschitz: f64 = 0.0;
        for s in &self.segments {
            smoothness = smoothness.max(2.0 * s.a);
            lipschitz = lipschitz
                .max(s.deriv_at(s.lo).abs())
                .max(s.deriv_at(s.hi).abs());
        }
        FunctionParams {
            smoothness,
            lipschitz,
            x_star: self.x_star,
        }
    }
}

impl TryFrom<Vec<Segment>> for PiecewiseConvexSpec {
    type Error = Error;

    fn try_from(segments: Vec<Segment>) -> Result<Self> {
        Self::new(segments)
    }
}

impl From<PiecewiseConvexSpec> for Vec<Segment> {
    fn from(spec: PiecewiseConvexSpec) -> Self {
        spec.segments
    }
}

/// Exact global minimum of a piecewise quadratic: per segment, the candidates
/// are the endpoints and (for `a > 0`) the interior vertex. Ties keep the
/// leftmost candidate, scanning in domain order.
fn minimize(segments: &[Segment]) -> (f64, f64) {
    let mut best_x = segments[0].lo;
    let mut best_v = segments[0].value_at(best_x);
    for s in segments {
        let mut consider = |x: f64| {
            let v = s.value_at(x);
            if v < best_v {
                best_v = v;
                best_x = x;
            }
        };
        consider(s.lo);
        if s.a > 0.0 {
            let vertex = -s.b / (2.0 * s.a);
            if vertex > s.lo && vertex < s.hi {
                consider(vertex);
            }
        }
        consider(s.hi);
    }
    (best_x, best_v)
}

/// Pass/fail report of the standing assumptions for one function against
/// claimed parameters. Produced by [`validate_assumptions`].
#[derive(Debug, Clone, Copy)]
pub struct AssumptionReport {
    pub convexity: bool,
    pub continuity: bool,
    pub nonnegativity: bool,
    pub zero_minimum: bool,
    /// Derived smoothness `M` is at most the claimed `M`.
    pub smoothness_within_claim: bool,
    /// Derived Lipschitz `L` is at most the claimed `L`.
    pub lipschitz_within_claim: bool,
    /// The derived constants the claims were compared against.
    pub derived: FunctionParams,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.convexity
            && self.continuity
            && self.nonnegativity
            && self.zero_minimum
            && self.smoothness_within_claim
            && self.lipschitz_within_claim
    }

    /// Names of the failed checks, for error messages.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.convexity {
            out.push("convexity");
        }
        if !self.continuity {
            out.push("continuity");
        }
        if !self.nonnegativity {
            out.push("nonnegativity");
        }
        if !self.zero_minimum {
            out.push("zero minimum");
        }
        if !self.smoothness_within_claim {
            out.push("smoothness within claim");
        }
        if !self.lipschitz_within_claim {
            out.push("Lipschitz within claim");
        }
        out
    }
}

/// Re-checks A1/A2 for `spec` against claimed constants `(m_claim, l_claim)`.
///
/// Convexity, continuity and non-negativity are re-derived from the segments
/// (they hold for every constructed spec, but the report is self-contained);
/// the zero-minimum check is the one A1 condition *not* enforced at
/// construction, so offset functions report a failure here.
pub fn validate_assumptions(
    spec: &PiecewiseConvexSpec,
    m_claim: f64,
    l_claim: f64,
) -> AssumptionReport {
    let derived = spec.params();
    let mut convexity = true;
    let mut continuity = true;
    for w in spec.segments().windows(2) {
        let bp = w[0].hi;
        let (lv, rv) = (w[0].value_at(bp), w[1].value_at(bp));
        if (lv - rv).abs() > BREAKPOINT_TOL * (1.0 + lv.abs().max(rv.abs())) {
            continuity = false;
        }
        let (ld, rd) = (w[0].deriv_at(bp), w[1].deriv_at(bp));
        if rd < ld - BREAKPOINT_TOL * (1.0 + ld.abs().max(rd.abs())) {
            convexity = false;
        }
    }
    AssumptionReport {
        convexity,
        continuity,
        nonnegativity: spec.min_value() >= -NONNEGATIVITY_TOL,
        zero_minimum: spec.min_value().abs() <= ZERO_MIN_TOL,
        smoothness_within_claim: derived.smoothness <= m_claim + BREAKPOINT_TOL,
        lipschitz_within_claim: derived.lipschitz <= l_claim + BREAKPOINT_TOL,
        derived,
    }
}

/// Single-segment quadratic `a·(x − center)²` on `[0,1]` — the building
/// block of the simulation suite.
pub fn make_quadratic(a: f64, center: f64) -> Result<PiecewiseConvexSpec> {
    if !a.is_finite() || a < 0.0 {
        return Err(Error::Parameter(format!(
            "quadratic coefficient must be finite and >= 0, got {a}"
        )));
    }
    if !(0.0..=1.0).contains(&center) {
        return Err(Error::Parameter(format!(
            "quadratic center must lie in [0,1], got {center}"
        )));
    }
    PiecewiseConvexSpec::new(vec![Segment {
        lo: 0.0,
        hi: 1.0,
        a,
        b: -2.0 * a * center,
        c: a * center * center,
    }])
}

/// The three adversarial lower-bound functions.
///
/// All three agree in value (`∇²/M`) and derivative (`−∇`) at `x = 0`, so an
/// algorithm that has only seen the information at `x0 = 0` cannot tell them
/// apart; they differ in where the minimum sits:
///
/// * `which = 1`: linear descent to a quadratic valley at `1.5∇/M`;
/// * `which = 2`: quadratic, then a shallow linear stretch, valley at `2∇/M`;
/// * `which = 3`: like 2 with a longer stretch, valley at `2.5∇/M`.
///
/// Requires `grad_mag > 3` and `5·grad_mag/(2m) <= 1` (the farthest minimizer
/// must stay inside `[0,1]`).
pub fn make_lower_bound_g(which: u8, grad_mag: f64, m: f64) -> Result<PiecewiseConvexSpec> {
    if !grad_mag.is_finite() || !m.is_finite() || m <= 0.0 {
        return Err(Error::Parameter(format!(
            "need finite grad_mag and m > 0, got grad_mag = {grad_mag}, m = {m}"
        )));
    }
    if grad_mag <= 3.0 {
        return Err(Error::Parameter(format!(
            "precondition grad_mag > 3 fails: grad_mag = {grad_mag}"
        )));
    }
    let reach = 5.0 * grad_mag / (2.0 * m);
    if reach > 1.0 {
        return Err(Error::Parameter(format!(
            "precondition 5*grad_mag/(2m) <= 1 fails: 5*{grad_mag}/(2*{m}) = {reach}"
        )));
    }
    let (g, g2_over_m) = (grad_mag, grad_mag * grad_mag / m);
    let half_m = m / 2.0;
    let segments = match which {
        1 => {
            let k = g / (2.0 * m);
            vec![
                Segment { lo: 0.0, hi: k, a: 0.0, b: -g, c: g2_over_m },
                Segment { lo: k, hi: 1.0, a: half_m, b: -1.5 * g, c: 1.125 * g2_over_m },
            ]
        }
        2 => {
            let k1 = g / (2.0 * m);
            let k2 = 1.5 * g / m;
            vec![
                Segment { lo: 0.0, hi: k1, a: half_m, b: -g, c: g2_over_m },
                Segment { lo: k1, hi: k2, a: 0.0, b: -0.5 * g, c: 0.875 * g2_over_m },
                Segment { lo: k2, hi: 1.0, a: half_m, b: -2.0 * g, c: 2.0 * g2_over_m },
            ]
        }
        3 => {
            let k1 = 2.0 * g / (3.0 * m);
            let k2 = 13.0 * g / (6.0 * m);
            vec![
                Segment { lo: 0.0, hi: k1, a: half_m, b: -g, c: g2_over_m },
                Segment { lo: k1, hi: k2, a: 0.0, b: -g / 3.0, c: 7.0 * g2_over_m / 9.0 },
                Segment { lo: k2, hi: 1.0, a: half_m, b: -2.5 * g, c: 3.125 * g2_over_m },
            ]
        }
        other => {
            return Err(Error::Parameter(format!(
                "lower-bound function index must be 1, 2 or 3, got {other}"
            )))
        }
    };
    PiecewiseConvexSpec::new(segments)
}
