//! Cost accounting, competitive ratios, worst-case bound evaluators, and
//! per-step certificate checkers.
//!
//! Every guarantee the algorithm carries is checkable on a recorded run:
//!
//! * the fresh-setting sandwich `δ·M_t ≤ H_t ≤ (δ+M/2)·M_t`;
//! * the stale-setting shift identity (`x_t^stale = x_{t−1}^fresh`) and the
//!   cost relation `C_stale ≤ C_fresh + L·ΣM_t`;
//! * the noisy-setting sandwich with per-step and worst-case constants,
//!   plus the movement bracket `M̲_t ≤ M_t ≤ M̄_t` recomputed from the true
//!   gradient;
//! * the potential-function certificate
//!   `H_t + (L+1)·M_t + Δφ_t ≤ ρ·(H_t^OPT + M_t^OPT)` with
//!   `φ = γ·|x_t − x_t^OPT|`, the amortization the ratio proofs rest on.
//!
//! Checkers are pure functions of recorded data and return a [`CheckReport`]
//! rather than erroring, so a batch of runs can be audited and summarized.

use serde::Serialize;

use crate::algorithm::{Setting, Trajectory};
use crate::error::{Error, Result};
use crate::functions::PiecewiseConvexSpec;
use crate::offline::OptResult;

/// Per-step hitting and switching costs plus their sum.
#[derive(Debug, Clone, Serialize)]
pub struct CostLedger {
    /// `H_t = f_t(x_t)` — always against the true current function, even
    /// when the algorithm only saw stale or noisy information.
    pub hits: Vec<f64>,
    /// `M_t = |x_t − x_{t−1}|`.
    pub moves: Vec<f64>,
    /// `Σ (H_t + M_t)`.
    pub total: f64,
}

/// Recomputes the cost ledger of a run against the true function sequence.
pub fn total_cost(traj: &Trajectory, fseq: &[PiecewiseConvexSpec]) -> Result<CostLedger> {
    if traj.len() != fseq.len() {
        return Err(Error::LengthMismatch(format!(
            "trajectory has {} steps but fseq has {} functions",
            traj.len(),
            fseq.len()
        )));
    }
    let mut hits = Vec::with_capacity(traj.len());
    let mut moves = Vec::with_capacity(traj.len());
    let mut prev = traj.x0;
    for (step, f_t) in traj.steps.iter().zip(fseq) {
        hits.push(f_t.eval(step.x_new));
        moves.push((step.x_new - prev).abs());
        prev = step.x_new;
    }
    let total = hits.iter().sum::<f64>() + moves.iter().sum::<f64>();
    Ok(CostLedger { hits, moves, total })
}

/// A competitive ratio together with its grid-certified floor.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioPair {
    /// `alg_cost / opt.cost` (∞ when the offline cost is zero).
    pub ratio: f64,
    /// `alg_cost / (opt.cost + opt.error_bound)`: a value the ratio provably
    /// exceeds even if the grid optimum overshot the true one, so
    /// theorem-bound assertions never depend on grid exactness.
    pub ratio_lo: f64,
    /// Set when the offline cost is exactly zero.
    pub infinite: bool,
}

/// Ratio of an online cost to an [`OptResult`], with the conservative floor.
pub fn competitive_ratio(alg_cost: f64, opt: &OptResult) -> RatioPair {
    assert!(alg_cost >= 0.0, "alg_cost must be >= 0, got {alg_cost}");
    let infinite = opt.cost == 0.0;
    let ratio = if infinite { f64::INFINITY } else { alg_cost / opt.cost };
    let denom = opt.cost + opt.error_bound;
    let ratio_lo = if denom == 0.0 {
        f64::INFINITY
    } else {
        alg_cost / denom
    };
    RatioPair {
        ratio,
        ratio_lo,
        infinite,
    }
}

/// The noisy-setting worst-case sandwich constants.
///
/// With `β = G + L` (the per-step invariant `|∇ᵃᵛˡ| + δ_t = β`):
///
/// * `â = (L − αL/(β−2α)) · (1 − α/(β−α))` — the per-step lower constant at
///   its worst (`δ_t = L`);
/// * `b̂ = (G + L + M/2 + αL/β) · (1 + α/(β−α))` — the upper constant at its
///   worst (`δ_t = G + L`).
///
/// `â` uses a minus sign in its first factor, matching the derivation (the
/// worst case of the monotone per-step constant); `â ≤ 0` (which happens
/// once `α ≥ (G+L)/3`) makes the bound vacuous rather than wrong.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NoisyConstants {
    pub a_hat: f64,
    pub b_hat: f64,
    pub g: f64,
    pub l: f64,
    pub m: f64,
    pub alpha: f64,
}

impl NoisyConstants {
    pub fn new(g: f64, l: f64, m: f64, alpha: f64) -> Result<Self> {
        if !(g > 0.0 && l > 0.0 && m > 0.0 && alpha >= 0.0)
            || !(g.is_finite() && l.is_finite() && m.is_finite() && alpha.is_finite())
        {
            return Err(Error::Parameter(format!(
                "noisy constants need g, l, m > 0 and alpha >= 0, got \
                 g = {g}, l = {l}, m = {m}, alpha = {alpha}"
            )));
        }
        let beta = g + l;
        if alpha >= beta {
            return Err(Error::Parameter(format!(
                "alpha = {alpha} must stay below G + L = {beta}"
            )));
        }
        let stretch = 1.0 + alpha / (beta - alpha);
        let a_hat = if beta - 2.0 * alpha > 0.0 {
            (l - alpha * l / (beta - 2.0 * alpha)) * (1.0 - alpha / (beta - alpha))
        } else {
            // Outside the derivation's validity region; strictly vacuous.
            f64::NEG_INFINITY
        };
        let b_hat = (g + l + m / 2.0 + alpha * l / beta) * stretch;
        Ok(NoisyConstants {
            a_hat,
            b_hat,
            g,
            l,
            m,
            alpha,
        })
    }

    /// True when the lower constant is non-positive, so the ratio bound
    /// derived from it carries no information.
    pub fn is_vacuous(&self) -> bool {
        self.a_hat <= 0.0
    }

    /// `max{1 + (2+b̂)/â, 1 + b̂}`, or ∞ when vacuous.
    pub fn bound(&self) -> f64 {
        if self.is_vacuous() {
            f64::INFINITY
        } else {
            (1.0 + (2.0 + self.b_hat) / self.a_hat).max(1.0 + self.b_hat)
        }
    }
}

/// Fresh-setting worst-case ratio bound in printed closed form:
/// `M/4 + 3/2 + ½√((M/2+1)² + 7)` — the branch value `δ̂ + 1 + M/2` at the
/// closed-form δ̂.
pub fn bound_fresh_closed_form(m: f64) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Parameter(format!("bound needs m > 0, got {m}")));
    }
    let half_m = m / 2.0;
    Ok(m / 4.0 + 1.5 + 0.5 * ((half_m + 1.0) * (half_m + 1.0) + 7.0).sqrt())
}

/// Fresh-setting ratio bound at an explicit δ:
/// `max{δ + 1 + M/2, 2 + (2 + M/2)/δ}`.
pub fn bound_fresh_at(m: f64, delta: f64) -> Result<f64> {
    if !(m > 0.0 && delta > 0.0) || !m.is_finite() || !delta.is_finite() {
        return Err(Error::Parameter(format!(
            "bound needs m > 0 and delta > 0, got m = {m}, delta = {delta}"
        )));
    }
    Ok((delta + 1.0 + m / 2.0).max(2.0 + (2.0 + m / 2.0) / delta))
}

/// Stale-setting ratio bound at an explicit δ:
/// `max{δ + L + 1 + M/2, 2 + (2(L+1) + M/2)/δ}`.
pub fn bound_stale_at(m: f64, l: f64, delta: f64) -> Result<f64> {
    if !(m > 0.0 && l > 0.0 && delta > 0.0)
        || !(m.is_finite() && l.is_finite() && delta.is_finite())
    {
        return Err(Error::Parameter(format!(
            "bound needs m, l, delta > 0, got m = {m}, l = {l}, delta = {delta}"
        )));
    }
    Ok((delta + l + 1.0 + m / 2.0).max(2.0 + (2.0 * (l + 1.0) + m / 2.0) / delta))
}

/// Noisy-setting ratio bound (∞ when the constants are vacuous).
pub fn bound_noisy(g: f64, l: f64, m: f64, alpha: f64) -> Result<f64> {
    Ok(NoisyConstants::new(g, l, m, alpha)?.bound())
}

/// The worst-case competitive-ratio bound for a setting.
///
/// * `Fresh`: the printed closed form (a function of `M` alone; the bound at
///   the closed-form δ̂). Per-δ evaluation is [`bound_fresh_at`].
/// * `Stale`: [`bound_stale_at`] at the given δ, defaulting to the corrected
///   balance constant.
/// * `NoisyFresh`: the â/b̂ bound; ∞ when vacuous.
/// * `NoisyStale`: no closed-form bound exists for the combination — errors.
pub fn cr_upper_bound(
    setting: Setting,
    m: f64,
    l: f64,
    g: f64,
    alpha: f64,
    delta: Option<f64>,
) -> Result<f64> {
    match setting {
        Setting::Fresh => bound_fresh_closed_form(m),
        Setting::Stale => {
            let d = match delta {
                Some(d) => d,
                None => crate::algorithm::delta_stale(
                    m,
                    l,
                    crate::algorithm::StaleDeltaMode::Corrected,
                )?,
            };
            bound_stale_at(m, l, d)
        }
        Setting::NoisyFresh => bound_noisy(g, l, m, alpha),
        Setting::NoisyStale => Err(Error::Parameter(
            "no closed-form ratio bound for the stale-and-noisy combination".into(),
        )),
    }
}

/// Outcome of one certificate checker over a run.
///
/// Slacks are oriented so that nonnegative means the asserted inequality
/// held; the report passes iff the worst slack stays above `−tolerance`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    /// One flag per step of the checked run.
    pub step_pass: Vec<bool>,
    /// Most-violated normalized slack across all steps and inequalities.
    pub worst_slack: f64,
    /// Tolerance the slacks are judged against.
    pub tolerance: f64,
    /// Vacuous layers, skipped steps, and similar caveats.
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn pass(&self) -> bool {
        self.worst_slack >= -self.tolerance
    }
}

/// Checks the fresh-setting sandwich `δ·M_t ≤ H_t ≤ (δ + M/2)·M_t` on every
/// step, with slacks normalized by `1 + H_t`.
pub fn check_fresh_sandwich(
    traj: &Trajectory,
    fseq: &[PiecewiseConvexSpec],
    delta: f64,
    m: f64,
) -> CheckReport {
    assert_eq!(traj.len(), fseq.len(), "trajectory/fseq length mismatch");
    assert!(delta > 0.0 && m > 0.0, "need delta, m > 0");
    let tolerance = 1e-9;
    let mut step_pass = Vec::with_capacity(traj.len());
    let mut worst = f64::INFINITY;
    let mut prev = traj.x0;
    for (step, f_t) in traj.steps.iter().zip(fseq) {
        let hit = f_t.eval(step.x_new);
        let movement = (step.x_new - prev).abs();
        prev = step.x_new;
        let scale = 1.0 + hit;
        let lower = (hit - delta * movement) / scale;
        let upper = ((delta + m / 2.0) * movement - hit) / scale;
        let slack = lower.min(upper);
        step_pass.push(slack >= -tolerance);
        worst = worst.min(slack);
    }
    CheckReport {
        name: "fresh-sandwich".into(),
        step_pass,
        worst_slack: worst,
        tolerance,
        notes: Vec::new(),
    }
}

/// Checks the stale/fresh coupling: the shift identity
/// `x_t^stale = x_{t−1}^fresh` (bitwise, with `x_1^stale = x_0`) and the
/// cost relation `C_stale ≤ C_fresh + L·Σ M_t^fresh`.
pub fn check_stale_relation(
    fresh_traj: &Trajectory,
    stale_traj: &Trajectory,
    fseq: &[PiecewiseConvexSpec],
    l: f64,
) -> CheckReport {
    assert_eq!(fresh_traj.len(), stale_traj.len(), "paired runs must have equal length");
    assert_eq!(fresh_traj.len(), fseq.len(), "trajectory/fseq length mismatch");
    let tolerance = 1e-9;
    let t_len = fseq.len();
    let mut step_pass = Vec::with_capacity(t_len);
    let mut worst = f64::INFINITY;
    let mut notes = Vec::new();
    for t in 1..=t_len {
        let stale_x = stale_traj.steps[t - 1].x_new;
        let expected = if t == 1 {
            stale_traj.x0
        } else {
            fresh_traj.steps[t - 2].x_new
        };
        let identical = stale_x.to_bits() == expected.to_bits();
        step_pass.push(identical);
        if !identical {
            worst = f64::NEG_INFINITY;
            notes.push(format!(
                "shift identity broken at t = {t}: stale {stale_x} vs expected {expected}"
            ));
        }
    }
    // Cost relation, normalized by 1 + C_fresh.
    let c_fresh = total_cost(fresh_traj, fseq).expect("lengths already checked");
    let c_stale = total_cost(stale_traj, fseq).expect("lengths already checked");
    let move_sum: f64 = c_fresh.moves.iter().sum();
    let slack = (c_fresh.total + l * move_sum - c_stale.total) / (1.0 + c_fresh.total);
    worst = worst.min(slack);
    CheckReport {
        name: "stale-shift-and-cost-relation".into(),
        step_pass,
        worst_slack: worst,
        tolerance,
        notes,
    }
}

/// Checks the noisy-setting guarantees on a recorded run, in three layers:
///
/// 1. per-step sandwich `a_t·M_t ≤ H_t ≤ b_t·M_t` with the observed-gradient
///    constants
///    `a_t = (δ_t − αL/(∇ᵃᵛˡ+δ_t−2α))·(1 − α/(∇ᵃᵛˡ+δ_t−α))` and
///    `b_t = (δ_t + M/2 + αL/(∇ᵃᵛˡ+δ_t))·(1 + α/(∇ᵃᵛˡ+δ_t−α))`;
/// 2. the worst-case sandwich `â·M_t ≤ H_t ≤ b̂·M_t` (lower side skipped
///    with a note when `â ≤ 0`);
/// 3. the movement bracket: from the *true* gradient `∇_t` of the observed
///    function, `M_t^true = f_avl/(δ_t + |∇_t|)`, then
///    `M̄_t = M_t^true·(|∇_t|+δ_t)/(|∇_t|−α+δ_t)` and
///    `M̲_t = M_t^true·(|∇_t|+δ_t)/(|∇_t|+α+δ_t)` must bracket the actual
///    `M_t`.
///
/// The sandwich geometry ties the step to the function the observation came
/// from, so `H_t` in layers 1–2 is the *source* function's value at `x_t` —
/// identical to the true hitting cost when the information is fresh, and
/// the meaningful per-step statement when it is one step stale.
///
/// Gradient magnitudes are used throughout (`δ_t = G+L−|∇ᵃᵛˡ|` keeps
/// `|∇ᵃᵛˡ|+δ_t = G+L` constant). Slacks are normalized by `1 + H_t` (layers
/// 1–2) and `1 + M̄_t` (layer 3).
pub fn check_noisy_sandwich(
    traj: &Trajectory,
    fseq: &[PiecewiseConvexSpec],
    alpha: f64,
    g: f64,
    l: f64,
    m: f64,
) -> CheckReport {
    assert_eq!(traj.len(), fseq.len(), "trajectory/fseq length mismatch");
    let tolerance = 1e-9;
    let mut notes = Vec::new();
    let constants = match NoisyConstants::new(g, l, m, alpha) {
        Ok(c) => c,
        Err(e) => {
            return CheckReport {
                name: "noisy-sandwich".into(),
                step_pass: vec![false; traj.len()],
                worst_slack: f64::NEG_INFINITY,
                tolerance,
                notes: vec![format!("invalid constants: {e}")],
            }
        }
    };
    if constants.is_vacuous() {
        notes.push(format!(
            "worst-case lower constant is vacuous (a_hat = {}); its layer is skipped",
            constants.a_hat
        ));
    }
    let mut step_pass = Vec::with_capacity(traj.len());
    let mut worst = f64::INFINITY;
    let mut clip_note = 0usize;
    let mut prev = traj.x0;
    for step in &traj.steps {
        let x_prev = prev;
        prev = step.x_new;
        let obs = match step.obs {
            Some(o) => o,
            None => {
                // The no-information convention step: H, M unconstrained by
                // the sandwich (no update happened).
                step_pass.push(true);
                continue;
            }
        };
        let hit = fseq[obs.source_time - 1].eval(step.x_new);
        let movement = step.movement;
        let delta_t = step.delta;
        let grad_mag = obs.grad_avl.abs();
        let mut slack = f64::INFINITY;

        // Layer 1: per-step constants from the observed gradient.
        let denom_2a = grad_mag + delta_t - 2.0 * alpha;
        let denom_a = grad_mag + delta_t - alpha;
        if denom_2a > 0.0 && denom_a > 0.0 {
            let a_t = (delta_t - alpha * l / denom_2a) * (1.0 - alpha / denom_a);
            let b_t = (delta_t + m / 2.0 + alpha * l / (grad_mag + delta_t))
                * (1.0 + alpha / denom_a);
            let scale = 1.0 + hit;
            if a_t > 0.0 {
                slack = slack.min((hit - a_t * movement) / scale);
            }
            slack = slack.min((b_t * movement - hit) / scale);
        } else {
            clip_note += 1;
        }

        // Layer 2: worst-case constants.
        let scale = 1.0 + hit;
        if !constants.is_vacuous() {
            slack = slack.min((hit - constants.a_hat * movement) / scale);
        }
        slack = slack.min((constants.b_hat * movement - hit) / scale);

        // Layer 3: movement bracket from the true observed-function gradient.
        let true_grad = fseq[obs.source_time - 1].grad(x_prev);
        let nab = true_grad.abs();
        let m_true = obs.f_avl / (delta_t + nab);
        let lo_denom = nab - alpha + delta_t;
        if lo_denom > 0.0 {
            let m_bar = m_true * (nab + delta_t) / lo_denom;
            let m_under = m_true * (nab + delta_t) / (nab + alpha + delta_t);
            let scale = 1.0 + m_bar;
            slack = slack.min((m_bar - movement) / scale);
            slack = slack.min((movement - m_under) / scale);
        } else {
            clip_note += 1;
        }

        step_pass.push(slack >= -tolerance);
        worst = worst.min(slack);
    }
    if clip_note > 0 {
        notes.push(format!(
            "{clip_note} step(s) fell outside a layer's validity region and were skipped there"
        ));
    }
    if traj.clip_count > 0 {
        notes.push(format!(
            "{} noise draw(s) were clipped to preserve the gradient sign",
            traj.clip_count
        ));
    }
    CheckReport {
        name: "noisy-sandwich".into(),
        step_pass,
        worst_slack: worst,
        tolerance,
        notes,
    }
}

/// Checks the potential-function certificate behind the ratio bounds:
/// per step, `H_t + (L_term+1)·M_t + Δφ_t ≤ ρ·(H_t^OPT + M_t^OPT)` with
/// `φ = γ·|x_t − x_t^OPT|`, up to a grid-aware tolerance `γ·2h + 1e−9`
/// (the offline trajectory is grid-snapped, the proofs' is continuous).
/// Also asserts the telescoped potential did not leak: `ΣΔφ_t ≥ −tol·T`.
///
/// `γ` is the proof's choice: `δ + M/2 + 1` (fresh) or `δ + M/2 + L + 1`
/// (stale, with `L_term = L`).
pub fn check_potential_certificate(
    alg_traj: &Trajectory,
    opt: &OptResult,
    gamma: f64,
    rho: f64,
    l_term: f64,
) -> CheckReport {
    assert_eq!(
        alg_traj.len(),
        opt.trajectory.len(),
        "algorithm and offline trajectories must have equal length"
    );
    assert!(gamma > 0.0 && rho >= 1.0 && l_term >= 0.0);
    let h = 1.0 / (opt.grid_n - 1) as f64;
    let tolerance = gamma * 2.0 * h + 1e-9;
    let t_len = alg_traj.len();
    let mut step_pass = Vec::with_capacity(t_len);
    let mut worst = f64::INFINITY;
    let mut phi_prev = gamma * (alg_traj.x0 - alg_traj.x0).abs(); // both start at x0: 0
    let mut sum_dphi = 0.0;
    for t in 0..t_len {
        let step = &alg_traj.steps[t];
        let phi = gamma * (step.x_new - opt.trajectory[t]).abs();
        let dphi = phi - phi_prev;
        phi_prev = phi;
        sum_dphi += dphi;
        let lhs = step.hit + (l_term + 1.0) * step.movement + dphi;
        let rhs = rho * (opt.hits[t] + opt.moves[t]);
        let slack = rhs - lhs;
        step_pass.push(slack >= -tolerance);
        worst = worst.min(slack);
    }
    // Telescoped potential: Σ Δφ = φ_T − φ_0 = φ_T ≥ 0 up to rounding.
    let telescope_slack = sum_dphi / t_len as f64;
    worst = worst.min(telescope_slack);
    CheckReport {
        name: "potential-certificate".into(),
        step_pass,
        worst_slack: worst,
        tolerance,
        notes: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithm::{
        delta_fresh, delta_stale, run, DeltaPolicy, FreshDeltaMode, NoiseModel, Setting,
        StaleDeltaMode,
    };
    use crate::functions::make_quadratic;
    use crate::offline::opt_dp;

    fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
        assert!(
            (got - want).abs() <= tol,
            "{what}: got {got}, want {want} (tol {tol})"
        );
    }

    fn quad_seq(centers: &[f64], a: f64) -> Vec<PiecewiseConvexSpec> {
        centers.iter().map(|&c| make_quadratic(a, c).unwrap()).collect()
    }

    #[test]
    fn ledger_zero_at_shared_minimizer() {
        let fseq = quad_seq(&[0.3, 0.3, 0.3], 10.0);
        let policy = DeltaPolicy::FreshClosedForm { m: 20.0 };
        let traj = run(&fseq, Setting::Fresh, &policy, &NoiseModel::none(), 0.3, 0).unwrap();
        let ledger = total_cost(&traj, &fseq).unwrap();
        assert_eq!(ledger.total, 0.0);
        assert_eq!(ledger.hits.len(), 3);
        assert_eq!(ledger.moves.len(), 3);
    }

    #[test]
    fn ledger_sums_hits_and_moves() {
        let fseq = quad_seq(&[0.8], 10.0);
        let policy = DeltaPolicy::FreshClosedForm { m: 20.0 };
        let traj = run(&fseq, Setting::Fresh, &policy, &NoiseModel::none(), 0.0, 0).unwrap();
        let ledger = total_cost(&traj, &fseq).unwrap();
        let x1 = traj.steps[0].x_new;
        assert_close(
            ledger.total,
            10.0 * (x1 - 0.8) * (x1 - 0.8) + x1,
            1e-12,
            "H1 + M1",
        );
    }

    #[test]
    fn ledger_rejects_length_mismatch() {
        let fseq = quad_seq(&[0.8, 0.2], 10.0);
        let policy = DeltaPolicy::FreshClosedForm { m: 20.0 };
        let traj = run(&fseq[..1], Setting::Fresh, &policy, &NoiseModel::none(), 0.0, 0).unwrap();
        assert!(matches!(
            total_cost(&traj, &fseq),
            Err(Error::LengthMismatch(_))
        ));
    }

    #[test]
    fn ratio_basics() {
        let opt = OptResult {
            cost: 2.0,
            trajectory: vec![0.0],
            hits: vec![2.0],
            moves: vec![0.0],
            grid_n: 11,
            error_bound: 0.0,
        };
        let r = competitive_ratio(2.0, &opt);
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.ratio_lo, 1.0);
        assert!(!r.infinite);

        let with_bound = OptResult { error_bound: 2.0, ..opt.clone() };
        let r2 = competitive_ratio(2.0, &with_bound);
        assert_eq!(r2.ratio, 1.0);
        assert_eq!(r2.ratio_lo, 0.5, "floor divides by cost + bound");

        let zero = OptResult { cost: 0.0, error_bound: 0.0, ..opt };
        let r3 = competitive_ratio(1.0, &zero);
        assert!(r3.infinite);
        assert!(r3.ratio.is_infinite());
    }

    #[test]
    fn fresh_bound_closed_form_value() {
        let b = bound_fresh_closed_form(2.0).unwrap();
        assert_close(b, 2.0 + 0.5 * 11f64.sqrt(), 1e-12, "M = 2 closed form");
        assert_close(b, 3.6583123951777, 1e-9, "numeric value");
        // It equals the first branch of the two-branch bound at δ̂.
        let d = delta_fresh(2.0, FreshDeltaMode::ClosedForm).unwrap();
        assert_close(b, d + 1.0 + 2.0 / 2.0, 1e-12, "δ̂ + 1 + M/2");
    }

    #[test]
    fn fresh_bound_two_branch_form() {
        let d_hat = delta_fresh(2.0, FreshDeltaMode::ClosedForm).unwrap();
        let at_hat = bound_fresh_at(2.0, d_hat).unwrap();
        assert_close(at_hat, 2.0 + 3.0 / d_hat, 1e-12, "second branch dominates at δ̂");
        let d_bal = delta_fresh(2.0, FreshDeltaMode::Balanced).unwrap();
        let at_bal = bound_fresh_at(2.0, d_bal).unwrap();
        assert_close(at_bal, 3f64.sqrt() + 2.0, 1e-12, "branches meet at √3 + 2");
        assert!(at_bal <= at_hat, "balanced δ minimizes the two-branch form");
    }

    #[test]
    fn stale_bound_at_corrected_delta() {
        let d = delta_stale(10.0, 5.0, StaleDeltaMode::Corrected).unwrap();
        let b = bound_stale_at(10.0, 5.0, d).unwrap();
        assert_close(b, d + 5.0 + 1.0 + 5.0, 1e-12, "first branch at the balanced δ");
        assert_close(b, 12.603277807866851, 1e-9, "numeric value");
        let via_dispatch = cr_upper_bound(Setting::Stale, 10.0, 5.0, 0.0, 0.0, None).unwrap();
        assert_close(via_dispatch, b, 1e-12, "dispatcher defaults to the corrected δ");
    }

    #[test]
    fn noisy_constants_alpha_zero_collapse() {
        let c = NoisyConstants::new(16.0, 12.0, 20.0, 0.0).unwrap();
        assert_eq!(c.a_hat, 12.0, "â = L at α = 0");
        assert_eq!(c.b_hat, 16.0 + 12.0 + 10.0, "b̂ = G + L + M/2 at α = 0");
        assert!(!c.is_vacuous());
        let expected = (1.0 + (2.0 + c.b_hat) / c.a_hat).max(1.0 + c.b_hat);
        assert_eq!(c.bound(), expected);
    }

    #[test]
    fn noisy_constants_turn_vacuous_at_large_alpha() {
        // a_hat > 0 iff α < (G+L)/3.
        let edge = (4.0 + 2.0) / 3.0;
        let below = NoisyConstants::new(4.0, 2.0, 10.0, edge - 1e-6).unwrap();
        assert!(!below.is_vacuous());
        let above = NoisyConstants::new(4.0, 2.0, 10.0, edge + 1e-6).unwrap();
        assert!(above.is_vacuous());
        assert!(above.bound().is_infinite());
    }

    #[test]
    fn noisy_constants_ordering() {
        for alpha in [0.0, 0.25, 0.5, 1.0, 2.0] {
            let c = NoisyConstants::new(16.5, 16.0, 20.0, alpha).unwrap();
            assert!(c.b_hat >= c.a_hat, "b̂ ≥ â at α = {alpha}");
        }
    }

    #[test]
    fn dispatcher_rejects_noisy_stale() {
        assert!(cr_upper_bound(Setting::NoisyStale, 10.0, 5.0, 6.0, 0.5, None).is_err());
    }

    #[test]
    fn fresh_sandwich_passes_on_real_runs() {
        let fseq = quad_seq(&[0.1, 0.8, 0.3, 0.6, 0.2, 0.4, 0.7], 10.0);
        let policy = DeltaPolicy::FreshClosedForm { m: 20.0 };
        let traj = run(&fseq, Setting::Fresh, &policy, &NoiseModel::none(), 0.0, 3).unwrap();
        let delta = delta_fresh(20.0, FreshDeltaMode::ClosedForm).unwrap();
        let report = check_fresh_sandwich(&traj, &fseq, delta, 20.0);
        assert!(report.pass(), "worst slack {}", report.worst_slack);
        assert!(report.step_pass.iter().all(|&p| p));
    }

    #[test]
    fn fresh_sandwich_catches_overshoot() {
        let fseq = quad_seq(&[0.8], 10.0);
        let policy = DeltaPolicy::FreshClosedForm { m: 20.0 };
        let mut traj = run(&fseq, Setting::Fresh, &policy, &NoiseModel::none(), 0.0, 0).unwrap();
        // Move the step all the way to the minimizer: zero hit, positive
        // movement — the lower sandwich must flag it.
        traj.steps[0].x_new = 0.8;
        let delta = delta_fresh(20.0, FreshDeltaMode::ClosedForm).unwrap();
        let report = check_fresh_sandwich(&traj, &fseq, delta, 20.0);
        assert!(!report.pass());
        assert!(!report.step_pass[0]);
    }

    #[test]
    fn stale_relation_passes_on_paired_runs() {
        let fseq = quad_seq(&[0.1, 0.8, 0.3, 0.6, 0.2], 10.0);
        let policy = DeltaPolicy::StaleCorrected { m: 20.0, l: 18.0 };
        let fresh = run(&fseq, Setting::Fresh, &policy, &NoiseModel::none(), 0.0, 0).unwrap();
        let stale = run(&fseq, Setting::Stale, &policy, &NoiseModel::none(), 0.0, 0).unwrap();
        let report = check_stale_relation(&fresh, &stale, &fseq, 18.0);
        assert!(report.pass(), "worst slack {}", report.worst_slack);
    }

    #[test]
    fn stale_relation_catches_broken_identity() {
        let fseq = quad_seq(&[0.1, 0.8, 0.3], 10.0);
        let policy = DeltaPolicy::StaleCorrected { m: 20.0, l: 18.0 };
        let fresh = run(&fseq, Setting::Fresh, &policy, &NoiseModel::none(), 0.0, 0).unwrap();
        let mut stale = run(&fseq, Setting::Stale, &policy, &NoiseModel::none(), 0.0, 0).unwrap();
        stale.steps[1].x_new += 1e-6;
        let report = check_stale_relation(&fresh, &stale, &fseq, 18.0);
        assert!(!report.pass());
        assert!(!report.step_pass[1]);
        assert!(!report.notes.is_empty());
    }

    #[test]
    fn noisy_sandwich_passes_with_and_without_noise() {
        let fseq = quad_seq(&[0.1, 0.8, 0.3, 0.6, 0.2, 0.4], 10.0);
        let (l, m) = (18.0, 20.0);
        for alpha in [0.0, 0.25, 0.5] {
            let g = l + alpha;
            let policy = DeltaPolicy::Noisy { g, l };
            let noise = NoiseModel::uniform(alpha);
            let traj = run(&fseq, Setting::NoisyFresh, &policy, &noise, 0.0, 9).unwrap();
            let report = check_noisy_sandwich(&traj, &fseq, alpha, g, l, m);
            assert!(
                report.pass(),
                "alpha = {alpha}: worst slack {}",
                report.worst_slack
            );
        }
    }

    #[test]
    fn noisy_sandwich_covers_stale_information_too() {
        let fseq = quad_seq(&[0.1, 0.8, 0.3, 0.6, 0.2, 0.4], 10.0);
        let (l, m, alpha) = (18.0, 20.0, 0.25);
        let g = l + alpha;
        let policy = DeltaPolicy::Noisy { g, l };
        let noise = NoiseModel::uniform(alpha);
        let traj = run(&fseq, Setting::NoisyStale, &policy, &noise, 0.0, 5).unwrap();
        let report = check_noisy_sandwich(&traj, &fseq, alpha, g, l, m);
        // The t = 1 convention step is vacuously true; the rest must hold
        // against the stale source functions.
        assert!(report.pass(), "worst slack {}", report.worst_slack);
    }

    #[test]
    fn potential_certificate_passes_fresh_run_against_dp() {
        let fseq = quad_seq(&[0.1, 0.8, 0.3, 0.6, 0.2, 0.4, 0.7, 0.5], 10.0);
        let m = 20.0;
        let policy = DeltaPolicy::FreshClosedForm { m };
        let traj = run(&fseq, Setting::Fresh, &policy, &NoiseModel::none(), 0.0, 0).unwrap();
        let opt = opt_dp(&fseq, 0.0, 2001).unwrap();
        let delta = delta_fresh(m, FreshDeltaMode::ClosedForm).unwrap();
        let gamma = delta + m / 2.0 + 1.0;
        let rho = bound_fresh_at(m, delta).unwrap();
        let report = check_potential_certificate(&traj, &opt, gamma, rho, 0.0);
        assert!(report.pass(), "worst slack {}", report.worst_slack);
    }

    #[test]
    fn potential_certificate_trivial_when_trajectories_coincide() {
        let fseq = quad_seq(&[0.5, 0.5], 10.0);
        let policy = DeltaPolicy::FreshClosedForm { m: 20.0 };
        let traj = run(&fseq, Setting::Fresh, &policy, &NoiseModel::none(), 0.5, 0).unwrap();
        // OPT that equals the algorithm exactly.
        let opt = OptResult {
            cost: 0.0,
            trajectory: traj.actions(),
            hits: vec![0.0, 0.0],
            moves: vec![0.0, 0.0],
            grid_n: 2001,
            error_bound: 0.0,
        };
        let report = check_potential_certificate(&traj, &opt, 1.0, 1.0, 0.0);
        assert!(report.pass());
    }

    #[test]
    fn potential_certificate_fails_at_rho_one_when_suboptimal() {
        // Alternating far-apart quadratics: the online run pays real cost,
        // the offline one parks in between; ρ = 1 cannot hold.
        let fseq = quad_seq(&[0.1, 0.9, 0.1, 0.9, 0.1, 0.9], 10.0);
        let m = 20.0;
        let policy = DeltaPolicy::FreshClosedForm { m };
        let traj = run(&fseq, Setting::Fresh, &policy, &NoiseModel::none(), 0.0, 0).unwrap();
        let opt = opt_dp(&fseq, 0.0, 2001).unwrap();
        let ledger = total_cost(&traj, &fseq).unwrap();
        assert!(ledger.total > opt.cost + opt.error_bound, "run is strictly suboptimal");
        let delta = delta_fresh(m, FreshDeltaMode::ClosedForm).unwrap();
        let gamma = delta + m / 2.0 + 1.0;
        let report = check_potential_certificate(&traj, &opt, gamma, 1.0, 0.0);
        assert!(!report.pass(), "ρ = 1 must be rejected");
    }
}
