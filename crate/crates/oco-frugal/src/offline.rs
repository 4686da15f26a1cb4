//! Offline-optimal baseline: grid dynamic programming with a linear-time
//! min-plus sweep, an exact single-step oracle, and the exact balanced-point
//! solver.
//!
//! The offline problem minimizes `Σ f_t(x_t) + |x_t − x_{t−1}|` knowing the
//! whole sequence. On a uniform grid the Bellman recursion is
//! `V_t[i] = f_t(x_i) + min_j (V_{t−1}[j] + h·|i−j|)`, and the inner min is a
//! one-dimensional distance transform computable in O(n) per step.

use crate::error::{Error, Result};
use crate::functions::PiecewiseConvexSpec;

/// Default grid resolution for the DP (spacing 5e−4).
pub const DEFAULT_GRID_N: usize = 2001;

/// One DP row: values over the grid plus the argmin predecessor for the
/// transition that produced each value.
#[derive(Debug, Clone)]
pub struct GridValueFunction {
    /// Number of grid points (≥ 2); point `i` sits at `i/(n−1)`.
    pub n: usize,
    /// Grid spacing `1/(n−1)`.
    pub h: f64,
    /// `V_t` over the grid.
    pub values: Vec<f64>,
    /// Argmin predecessor index per point; the first row, which transitions
    /// from the off-grid `x0`, stores each point's own index.
    pub backptr: Vec<usize>,
}

impl GridValueFunction {
    /// Coordinate of grid point `i`, computed as a direct quotient so the
    /// last point is exactly 1.
    pub fn x_at(&self, i: usize) -> f64 {
        grid_x(i, self.n)
    }
}

fn grid_x(i: usize, n: usize) -> f64 {
    i as f64 / (n - 1) as f64
}

/// `min_j values[j] + h·|i−j|` for every `i`, in O(n).
///
/// Two sweeps (left-to-right, then right-to-left) carry the best origin `j`
/// seen so far and evaluate its candidate as `values[j] + h·(i−j)` — the
/// same float expression a brute-force scan over pairs produces, so results
/// agree with brute force exactly rather than up to accumulated rounding.
pub fn minplus_linear(values: &[f64], h: f64) -> Vec<f64> {
    minplus_with_origin(values, h).0
}

/// [`minplus_linear`] plus the argmin origin per point (ties to the smaller
/// index).
pub fn minplus_with_origin(values: &[f64], h: f64) -> (Vec<f64>, Vec<usize>) {
    assert!(h > 0.0 && h.is_finite(), "minplus_linear needs h > 0, got {h}");
    assert!(
        values.iter().all(|v| v.is_finite()),
        "minplus_linear needs finite values"
    );
    let n = values.len();
    let mut out = vec![0.0; n];
    let mut origin = vec![0usize; n];
    if n == 0 {
        return (out, origin);
    }
    // Forward: best origin among j ≤ i. A tie keeps the carried (smaller) j.
    let mut j = 0usize;
    for i in 0..n {
        let carried = values[j] + h * ((i - j) as f64);
        if values[i] < carried {
            j = i;
        }
        out[i] = values[j] + h * ((i - j) as f64);
        origin[i] = j;
    }
    // Backward: best origin among j ≥ i. A tie switches to i (smaller index).
    let mut j = n - 1;
    for i in (0..n).rev() {
        if values[i] <= values[j] + h * ((j - i) as f64) {
            j = i;
        }
        let cand = values[j] + h * ((j - i) as f64);
        // Overall tie goes to the forward origin, which is the smaller index.
        if cand < out[i] {
            out[i] = cand;
            origin[i] = j;
        }
    }
    (out, origin)
}

/// The offline optimum over a grid: cost, trajectory, per-step ledger, and a
/// certified resolution error bound.
#[derive(Debug, Clone)]
pub struct OptResult {
    /// Minimal total cost over the grid.
    pub cost: f64,
    /// Grid-snapped optimal actions `x_1..x_T`.
    pub trajectory: Vec<f64>,
    /// Hitting costs `f_t(x_t)` along the trajectory.
    pub hits: Vec<f64>,
    /// Switching costs `|x_t − x_{t−1}|` along the trajectory.
    pub moves: Vec<f64>,
    /// Grid points used.
    pub grid_n: usize,
    /// `T·(L_max+1)·h`: how far the grid optimum can sit above the
    /// continuous one (each continuous action rounds to a grid neighbor at
    /// distance ≤ h, costing at most (L_max+1)·h per step).
    pub error_bound: f64,
}

impl OptResult {
    /// Ledger total `Σ(H_t + M_t)`; equals `cost` within rounding.
    pub fn ledger_total(&self) -> f64 {
        self.hits.iter().sum::<f64>() + self.moves.iter().sum::<f64>()
    }
}

/// Solves the offline problem on an `n`-point grid by dynamic programming.
///
/// `V_1[i] = f_1(x_i) + |x_i − x0|`, then `V_t = f_t + minplus(V_{t−1})`;
/// the answer is `min_i V_T[i]` with the trajectory recovered through
/// backpointers, all ties broken toward the smaller grid index.
pub fn opt_dp(fseq: &[PiecewiseConvexSpec], x0: f64, n: usize) -> Result<OptResult> {
    if n < 2 {
        return Err(Error::Parameter(format!("opt_dp needs n >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&x0) {
        return Err(Error::Parameter(format!("x0 = {x0} outside [0,1]")));
    }
    if fseq.is_empty() {
        return Err(Error::Parameter("opt_dp needs at least one function".into()));
    }
    let t_len = fseq.len();
    let h = 1.0 / (n - 1) as f64;

    let mut rows: Vec<GridValueFunction> = Vec::with_capacity(t_len);
    let mut values: Vec<f64> = (0..n)
        .map(|i| {
            let x = grid_x(i, n);
            fseq[0].eval(x) + (x - x0).abs()
        })
        .collect();
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite DP value {bad} at t = 1")));
    }
    rows.push(GridValueFunction {
        n,
        h,
        values: values.clone(),
        backptr: (0..n).collect(),
    });

    for (t_idx, f_t) in fseq.iter().enumerate().skip(1) {
        let (moved, origin) = minplus_with_origin(&values, h);
        values = (0..n)
            .map(|i| f_t.eval(grid_x(i, n)) + moved[i])
            .collect();
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite DP value {bad} at t = {}",
                t_idx + 1
            )));
        }
        rows.push(GridValueFunction {
            n,
            h,
            values: values.clone(),
            backptr: origin,
        });
    }

    // Final argmin, ties toward the smaller index.
    let mut best = 0usize;
    for i in 1..n {
        if values[i] < values[best] {
            best = i;
        }
    }
    let cost = values[best];

    // Backtrack indices T..1.
    let mut idxs = vec![0usize; t_len];
    idxs[t_len - 1] = best;
    for t in (1..t_len).rev() {
        idxs[t - 1] = rows[t].backptr[idxs[t]];
    }

    let trajectory: Vec<f64> = idxs.iter().map(|&i| grid_x(i, n)).collect();
    let mut hits = Vec::with_capacity(t_len);
    let mut moves = Vec::with_capacity(t_len);
    let mut prev = x0;
    for (t, &x) in trajectory.iter().enumerate() {
        hits.push(fseq[t].eval(x));
        moves.push((x - prev).abs());
        prev = x;
    }

    let l_max = fseq
        .iter()
        .map(|f| f.params().lipschitz)
        .fold(0.0f64, f64::max);
    let error_bound = t_len as f64 * (l_max + 1.0) * h;

    let result = OptResult {
        cost,
        trajectory,
        hits,
        moves,
        grid_n: n,
        error_bound,
    };
    // The DP objective and the ledger recompute the same sum with different
    // association; they must agree to rounding.
    let drift = (result.cost - result.ledger_total()).abs();
    if drift > 1e-9 * (1.0 + result.cost.abs()) {
        return Err(Error::Numeric(format!(
            "DP cost {} disagrees with its ledger {} by {drift}",
            result.cost,
            result.ledger_total()
        )));
    }
    Ok(result)
}

/// Exact minimizer of `f(x) + |x − x0|` over `[0,1]` for one step.
///
/// On each quadratic segment the objective splits at `x0` into two
/// quadratics (`slope ± 1`); candidates are segment endpoints, `x0`, and the
/// two branch vertices, all evaluated against the true objective. Ties go to
/// the smaller `x`.
pub fn opt_single_step(f: &PiecewiseConvexSpec, x0: f64) -> (f64, f64) {
    assert!((0.0..=1.0).contains(&x0), "x0 = {x0} outside [0,1]");
    let objective = |x: f64| f.eval(x) + (x - x0).abs();
    let mut candidates: Vec<f64> = vec![x0];
    for seg in f.segments() {
        candidates.push(seg.lo);
        candidates.push(seg.hi);
        // Vertices of a·x² + (b±1)·x + const within the segment.
        if seg.a > 0.0 {
            for slope_shift in [1.0, -1.0] {
                let v = -(seg.b + slope_shift) / (2.0 * seg.a);
                if v > seg.lo && v < seg.hi {
                    candidates.push(v);
                }
            }
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best_x = candidates[0];
    let mut best_cost = objective(best_x);
    for &x in &candidates[1..] {
        let c = objective(x);
        if c < best_cost {
            best_cost = c;
            best_x = x;
        }
    }
    (best_cost, best_x)
}

/// The exact balanced point: the `x̂` between `x_prev` and the minimizer
/// with `f(x̂) = δ·|x̂ − x_prev|`, found by bisection.
///
/// `f − δ·|·−x_prev|` is strictly decreasing from `f(x_prev) > 0` toward the
/// minimizer, so the root is unique; bisection runs until the interval can
/// no longer shrink, leaving a residual far below 1e−10. `f(x_prev) = 0`
/// returns `x_prev` directly.
pub fn exact_balanced_point(f: &PiecewiseConvexSpec, x_prev: f64, delta: f64) -> Result<f64> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::Parameter(format!("delta must be > 0, got {delta}")));
    }
    if !(0.0..=1.0).contains(&x_prev) {
        return Err(Error::Parameter(format!("x_prev = {x_prev} outside [0,1]")));
    }
    let f_prev = f.eval(x_prev);
    if !f_prev.is_finite() {
        return Err(Error::Numeric(format!("f(x_prev) is not finite: {f_prev}")));
    }
    if f_prev == 0.0 {
        return Ok(x_prev);
    }
    let x_star = f.x_star();
    let g = |x: f64| f.eval(x) - delta * (x - x_prev).abs();
    if g(x_star) > 0.0 {
        return Err(Error::Parameter(format!(
            "no balanced point: f at its minimizer {x_star} still exceeds \
             {delta}·|x − x_prev| (minimum value {})",
            f.eval(x_star)
        )));
    }
    // g(a) > 0, g(b) ≤ 0 throughout.
    let (mut a, mut b) = (x_prev, x_star);
    loop {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if g(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(if g(a).abs() <= g(b).abs() { a } else { b })
}
