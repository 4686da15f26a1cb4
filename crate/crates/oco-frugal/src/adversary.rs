//! Hard-instance games that force the lower bounds.
//!
//! The fresh-setting game exploits first-step indistinguishability: three
//! functions `g1, g2, g3` share the same value and gradient at the start
//! `x₀ = 0`, so no online algorithm can tell them apart before committing to
//! `x₁`. The adversary partitions `[0,1]` into four intervals and answers
//! each choice of `x₁` with the function that punishes it most; the minimum
//! over `x₁` of the resulting cost ratio is a constructive lower bound on
//! the competitive ratio of *every* deterministic algorithm, and it scales
//! linearly in the smoothness parameter `M`.
//!
//! The stale-setting game is simpler: with one-step-stale information the
//! first action is blind, and two slope-`L` linear functions mirrored about
//! the domain make any blind action pay a factor `L` (or infinitely more).

use serde::Serialize;

use crate::algorithm::Observation;
use crate::error::{Error, Result};
use crate::functions::{make_lower_bound_g, PiecewiseConvexSpec, Segment};
use crate::offline::opt_single_step;

/// The fresh-setting hard instance: the three indistinguishable functions
/// and the interval partition of the first action's range.
#[derive(Debug, Clone)]
pub struct GameInstance {
    /// Shared gradient magnitude ∇ at the start (each `g` opens with slope
    /// −∇ and value ∇²/M at 0). Must exceed 3 so every interval punishes
    /// movement (the flattest response slope is ∇/3).
    pub grad_mag: f64,
    /// Smoothness scale of the responses.
    pub m: f64,
    /// `g1, g2, g3`.
    pub functions: [PiecewiseConvexSpec; 3],
    /// Interval boundaries `{∇/2M, 3∇/2M, 13∇/6M}`; a point on a boundary
    /// belongs to the lower-indexed interval.
    pub boundaries: [f64; 3],
    /// Offline cost of each response from `x₀ = 0`, via the exact oracle.
    pub opt_costs: [f64; 3],
}

impl GameInstance {
    /// Builds the instance, checking feasibility: `∇ > 3` and the last
    /// response's minimizer `5∇/(2M)` inside the domain.
    pub fn new(grad_mag: f64, m: f64) -> Result<Self> {
        if !(grad_mag > 3.0) || !grad_mag.is_finite() {
            return Err(Error::Parameter(format!(
                "game needs grad_mag > 3 (flattest response slope ∇/3 must \
                 beat the unit switching slope), got {grad_mag}"
            )));
        }
        let functions = [
            make_lower_bound_g(1, grad_mag, m)?,
            make_lower_bound_g(2, grad_mag, m)?,
            make_lower_bound_g(3, grad_mag, m)?,
        ];
        let boundaries = [
            grad_mag / (2.0 * m),
            3.0 * grad_mag / (2.0 * m),
            13.0 * grad_mag / (6.0 * m),
        ];
        let opt_costs = [
            opt_single_step(&functions[0], 0.0).0,
            opt_single_step(&functions[1], 0.0).0,
            opt_single_step(&functions[2], 0.0).0,
        ];
        Ok(GameInstance {
            grad_mag,
            m,
            functions,
            boundaries,
            opt_costs,
        })
    }

    /// The common first observation at `x₀ = 0`: value ∇²/M, gradient −∇ —
    /// identical across the three responses.
    pub fn observation(&self) -> Observation {
        Observation {
            f_avl: self.functions[0].eval(0.0),
            grad_avl: self.functions[0].grad(0.0),
            source_time: 1,
        }
    }

    /// Interval index (1..=4) of a first action; boundary points go to the
    /// lower-indexed interval.
    pub fn interval_of(&self, x1: f64) -> usize {
        if x1 <= self.boundaries[0] {
            1
        } else if x1 <= self.boundaries[1] {
            2
        } else if x1 <= self.boundaries[2] {
            3
        } else {
            4
        }
    }

    /// Which response (1, 2 or 3) the adversary plays against an interval.
    fn response_index(interval: usize) -> usize {
        match interval {
            1 => 1,
            2 => 2,
            3 => 3,
            4 => 1,
            _ => unreachable!("interval index out of range"),
        }
    }
}

/// The adversary's response to a first action: `g1` on the first and last
/// intervals, `g2` and `g3` on the middle two.
pub fn adversary_respond(x1: f64, inst: &GameInstance) -> Result<&PiecewiseConvexSpec> {
    if !(0.0..=1.0).contains(&x1) {
        return Err(Error::Parameter(format!("x1 = {x1} outside [0,1]")));
    }
    let k = GameInstance::response_index(inst.interval_of(x1));
    Ok(&inst.functions[k - 1])
}

/// Result of one round of a lower-bound game.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GameOutcome {
    /// The (possibly clamped) first action.
    pub x1: f64,
    /// Index of the response function the adversary played.
    pub chosen: usize,
    /// `g(x1) + |x1 − x0|`.
    pub alg_cost: f64,
    /// Offline cost of the response, via the exact single-step oracle.
    pub opt_cost: f64,
    /// `alg_cost / opt_cost` (∞ when the offline cost is zero).
    pub ratio: f64,
    /// Set when the algorithm's raw action left `[0,1]` and was clamped.
    pub clamped: bool,
}

/// Plays one round of the fresh-setting game against any first-action rule.
///
/// The rule sees only the shared observation at `x₀ = 0`; the adversary then
/// reveals the punishing response. `grad_mag` defaults to `2M/5`, the
/// largest feasible gradient scale.
pub fn play_game<F>(first_action: F, m: f64, grad_mag: Option<f64>) -> Result<GameOutcome>
where
    F: FnOnce(&Observation) -> f64,
{
    let inst = GameInstance::new(grad_mag.unwrap_or(2.0 * m / 5.0), m)?;
    let raw = first_action(&inst.observation());
    if !raw.is_finite() {
        return Err(Error::Numeric(format!("first action is not finite: {raw}")));
    }
    let x1 = raw.clamp(0.0, 1.0);
    let clamped = x1 != raw;
    let interval = inst.interval_of(x1);
    let chosen = GameInstance::response_index(interval);
    let g = &inst.functions[chosen - 1];
    let alg_cost = g.eval(x1) + x1;
    let opt_cost = inst.opt_costs[chosen - 1];
    let ratio = if opt_cost == 0.0 {
        f64::INFINITY
    } else {
        alg_cost / opt_cost
    };
    Ok(GameOutcome {
        x1,
        chosen,
        alg_cost,
        opt_cost,
        ratio,
        clamped,
    })
}

/// Result of exhausting every first action against the adversary.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FirstActionSweep {
    /// The best any deterministic algorithm can do: `min_{x1} ratio(x1)`.
    pub min_max_ratio: f64,
    /// A grid point attaining it.
    pub argmin_x1: f64,
    /// Worst-for-the-adversary (minimum) ratio inside each interval, over
    /// the grid.
    pub per_interval_min: [f64; 4],
    /// Grid argmin inside each interval.
    pub per_interval_argmin: [f64; 4],
}

/// Sweeps all first actions on a grid and reports the minimum punished
/// ratio globally and per interval. This certifies the lower bound for
/// every deterministic algorithm: whatever `x₁` it picks, the adversary's
/// response costs at least `min_max_ratio` times the offline optimum.
pub fn sweep_first_action(inst: &GameInstance, grid_n: usize) -> Result<FirstActionSweep> {
    if grid_n < 101 {
        return Err(Error::Parameter(format!(
            "sweep needs grid_n >= 101, got {grid_n}"
        )));
    }
    let mut min_ratio = f64::INFINITY;
    let mut argmin = 0.0;
    let mut per_min = [f64::INFINITY; 4];
    let mut per_arg = [0.0f64; 4];
    for i in 0..grid_n {
        let x1 = i as f64 / (grid_n - 1) as f64;
        let interval = inst.interval_of(x1);
        let k = GameInstance::response_index(interval);
        let g = &inst.functions[k - 1];
        let ratio = (g.eval(x1) + x1) / inst.opt_costs[k - 1];
        if ratio < min_ratio {
            min_ratio = ratio;
            argmin = x1;
        }
        if ratio < per_min[interval - 1] {
            per_min[interval - 1] = ratio;
            per_arg[interval - 1] = x1;
        }
    }
    Ok(FirstActionSweep {
        min_max_ratio: min_ratio,
        argmin_x1: argmin,
        per_interval_min: per_min,
        per_interval_argmin: per_arg,
    })
}

/// Exact per-interval minimum ratios by endpoint analysis.
///
/// Within each interval the punished objective `g(x1) + x1` is piecewise
/// linear or convex with slope `1 − ∇`, `1 − ∇/2`, `1 − ∇/3` (all negative
/// for ∇ > 3) on the first three intervals — minimized at the right
/// endpoint — and increasing on the fourth (right of `g1`'s vertex) —
/// infimum at its open left endpoint. Evaluating there:
///
/// * `I₁`: `(∇² + ∇) / (3∇ − 1)`
/// * `I₂`: `(∇² + 12∇) / (16∇ − 4)`
/// * `I₃`: `(∇² + 39∇) / (45∇ − 9)`  ← the global minimum
/// * `I₄`: `(4∇² + 39∇) / (27∇ − 9)`
///
/// The leading terms for large ∇ are `∇/3, ∇/16, ∇/45, 4∇/27`.
pub fn per_interval_exact_minima(inst: &GameInstance) -> [f64; 4] {
    let n = inst.grad_mag;
    [
        (n * n + n) / (3.0 * n - 1.0),
        (n * n + 12.0 * n) / (16.0 * n - 4.0),
        (n * n + 39.0 * n) / (45.0 * n - 9.0),
        (4.0 * n * n + 39.0 * n) / (27.0 * n - 9.0),
    ]
}

/// The stale-setting blind-first-action game.
///
/// With one-step-stale information the algorithm knows nothing at `t = 1`.
/// The adversary holds two nonnegative linear functions of slope `L` with
/// minimizers at the opposite ends, `h₁(x) = L·x` and `h₂(x) = L·(1−x)`,
/// and answers a blind `x₁` with the worse one: staying at `x₀ = 0` meets
/// `h₂` (cost `L` versus an offline cost of `min(L, 1)`), while any move
/// meets `h₁` (positive cost versus an offline zero — infinite ratio). So
/// every blind action is at least a factor `L` worse than the optimum.
pub fn stale_lb_game(first_action_blind: f64, l: f64) -> Result<GameOutcome> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::Parameter(format!("stale game needs l > 0, got {l}")));
    }
    if !first_action_blind.is_finite() {
        return Err(Error::Numeric(format!(
            "first action is not finite: {first_action_blind}"
        )));
    }
    let x1 = first_action_blind.clamp(0.0, 1.0);
    let clamped = x1 != first_action_blind;
    let h1 = PiecewiseConvexSpec::new(vec![Segment {
        lo: 0.0,
        hi: 1.0,
        a: 0.0,
        b: l,
        c: 0.0,
    }])?;
    let h2 = PiecewiseConvexSpec::new(vec![Segment {
        lo: 0.0,
        hi: 1.0,
        a: 0.0,
        b: -l,
        c: l,
    }])?;
    let (chosen, h) = if x1 == 0.0 { (2, &h2) } else { (1, &h1) };
    let alg_cost = h.eval(x1) + x1;
    let opt_cost = opt_single_step(h, 0.0).0;
    let ratio = if opt_cost == 0.0 {
        f64::INFINITY
    } else {
        alg_cost / opt_cost
    };
    Ok(GameOutcome {
        x1,
        chosen,
        alg_cost,
        opt_cost,
        ratio,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithm::{aobd_step, delta_fresh, FreshDeltaMode};

    fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
        assert!(
            (got - want).abs() <= tol,
            "{what}: got {got}, want {want} (tol {tol})"
        );
    }

    #[test]
    fn instance_feasibility() {
        assert!(GameInstance::new(4.0, 10.0).is_ok());
        assert!(GameInstance::new(20.0, 50.0).is_ok());
        let too_steep = GameInstance::new(5.0, 10.0).unwrap_err().to_string();
        assert!(too_steep.contains("5*5/(2*10)"), "names the reach: {too_steep}");
        assert!(GameInstance::new(3.0, 10.0).is_err(), "needs grad_mag > 3");
    }

    #[test]
    fn responses_indistinguishable_at_origin() {
        let inst = GameInstance::new(4.0, 10.0).unwrap();
        let obs = inst.observation();
        assert_close(obs.f_avl, 1.6, 1e-12, "∇²/M at the start");
        assert_close(obs.grad_avl, -4.0, 1e-12, "shared slope −∇");
        for g in &inst.functions {
            assert_close(g.eval(0.0), obs.f_avl, 1e-12, "values agree");
            assert_close(g.grad(0.0), obs.grad_avl, 1e-12, "gradients agree");
        }
    }

    #[test]
    fn offline_costs_match_closed_forms() {
        for (grad, m) in [(4.0, 10.0), (20.0, 50.0)] {
            let inst = GameInstance::new(grad, m).unwrap();
            let expected = [
                3.0 * grad / (2.0 * m) - 1.0 / (2.0 * m),
                2.0 * grad / m - 1.0 / (2.0 * m),
                5.0 * grad / (2.0 * m) - 1.0 / (2.0 * m),
            ];
            for (k, want) in expected.iter().enumerate() {
                assert_close(
                    inst.opt_costs[k],
                    *want,
                    1e-9,
                    &format!("offline cost of response {} at (∇, M) = ({grad}, {m})", k + 1),
                );
            }
        }
    }

    #[test]
    fn interval_rule_with_boundaries_down() {
        let inst = GameInstance::new(4.0, 10.0).unwrap();
        // Boundaries: 0.2, 0.6, 13/15 ≈ 0.8667.
        assert_eq!(inst.interval_of(0.0), 1);
        assert_eq!(inst.interval_of(0.2), 1, "boundary to the lower interval");
        assert_eq!(inst.interval_of(0.4), 2);
        assert_eq!(inst.interval_of(0.6), 2, "boundary to the lower interval");
        assert_eq!(inst.interval_of(0.7), 3);
        assert_eq!(inst.interval_of(13.0 / 15.0), 3);
        assert_eq!(inst.interval_of(0.9), 4);
        assert_eq!(inst.interval_of(1.0), 4);
        // Responses: g1, g2, g3, g1.
        let r0 = adversary_respond(0.0, &inst).unwrap();
        assert_eq!(r0.segments(), inst.functions[0].segments());
        let r2 = adversary_respond(0.4, &inst).unwrap();
        assert_eq!(r2.segments(), inst.functions[1].segments());
        let r4 = adversary_respond(1.0, &inst).unwrap();
        assert_eq!(r4.segments(), inst.functions[0].segments());
        assert!(adversary_respond(1.5, &inst).is_err());
    }

    #[test]
    fn play_game_punishes_the_descent_step() {
        // A-OBD's first action from the shared observation.
        let m = 50.0;
        let delta = delta_fresh(m, FreshDeltaMode::ClosedForm).unwrap();
        let outcome = play_game(
            |obs| aobd_step(obs, 0.0, delta).unwrap(),
            m,
            Some(20.0),
        )
        .unwrap();
        assert!(!outcome.clamped);
        // x1 = (∇²/M)/(δ̂ + ∇) = 8/(δ̂(50) + 20) ≈ 0.3797 lands in I₂.
        assert_close(outcome.x1, 8.0 / (delta + 20.0), 1e-12, "first action");
        assert_eq!(outcome.chosen, 2);
        let inst = GameInstance::new(20.0, 50.0).unwrap();
        let exact = per_interval_exact_minima(&inst);
        assert!(
            outcome.ratio >= exact[1] - 1e-9,
            "ratio {} below its interval's floor {}",
            outcome.ratio,
            exact[1]
        );
        assert!(outcome.ratio >= 20.0 / 45.0, "at least ∇/45");
    }

    #[test]
    fn play_game_clamps_wild_actions() {
        let outcome = play_game(|_| 7.5, 50.0, Some(20.0)).unwrap();
        assert!(outcome.clamped);
        assert_eq!(outcome.x1, 1.0);
        assert_eq!(outcome.chosen, 1, "interval 4 answers with g1");
    }

    #[test]
    fn sweep_matches_exact_endpoint_analysis() {
        let inst = GameInstance::new(4.0, 10.0).unwrap();
        let sweep = sweep_first_action(&inst, 20001).unwrap();
        let exact = per_interval_exact_minima(&inst);
        // ∇ = 4: exact minima (20/11, 64/60, 172/171, 220/99).
        assert_close(exact[0], 20.0 / 11.0, 1e-12, "I₁ closed form");
        assert_close(exact[1], 64.0 / 60.0, 1e-12, "I₂ closed form");
        assert_close(exact[2], 172.0 / 171.0, 1e-12, "I₃ closed form");
        assert_close(exact[3], 220.0 / 99.0, 1e-12, "I₄ closed form");
        for k in 0..4 {
            assert!(
                sweep.per_interval_min[k] >= exact[k] - 1e-9,
                "grid found a ratio below the exact minimum in interval {}",
                k + 1
            );
            assert_close(
                sweep.per_interval_min[k],
                exact[k],
                2e-3,
                &format!("grid minimum near the exact one in interval {}", k + 1),
            );
        }
        // Global minimum sits in I₃, at its right boundary.
        assert_eq!(inst.interval_of(sweep.argmin_x1), 3);
        assert_close(sweep.argmin_x1, inst.boundaries[2], 1e-3, "argmin near 13∇/6M");
        assert_close(sweep.min_max_ratio, exact[2], 2e-3, "global = I₃ minimum");
    }

    #[test]
    fn sweep_scales_linearly_in_m_at_max_gradient() {
        // ∇ = 2M/5: exact global minimum (4M² + 390M)/(225(2M − 1)).
        for (m, want) in [(10.0, 1.0058479532163742), (25.0, 10.0 / 9.0), (50.0, 1.3243546576879911)] {
            let inst = GameInstance::new(2.0 * m / 5.0, m).unwrap();
            let sweep = sweep_first_action(&inst, 10001).unwrap();
            let closed = (4.0 * m * m + 390.0 * m) / (225.0 * (2.0 * m - 1.0));
            assert_close(closed, want, 1e-9, "frozen closed form");
            assert_close(sweep.min_max_ratio, closed, 5e-3, "sweep reproduces it");
            assert!(sweep.min_max_ratio >= (2.0 / 135.0) * m, "linear floor in M");
        }
    }

    #[test]
    fn sweep_rejects_tiny_grids() {
        let inst = GameInstance::new(4.0, 10.0).unwrap();
        assert!(sweep_first_action(&inst, 100).is_err());
    }

    #[test]
    fn stale_game_charges_l_for_staying() {
        let out = stale_lb_game(0.0, 30.0).unwrap();
        assert_eq!(out.chosen, 2);
        assert_close(out.alg_cost, 30.0, 1e-12, "pays the full slope at 0");
        assert_close(out.opt_cost, 1.0, 1e-12, "offline walks to the far minimizer");
        assert_close(out.ratio, 30.0, 1e-9, "ratio L");
    }

    #[test]
    fn stale_game_charges_infinity_for_moving() {
        let out = stale_lb_game(0.5, 30.0).unwrap();
        assert_eq!(out.chosen, 1);
        assert_eq!(out.opt_cost, 0.0);
        assert!(out.ratio.is_infinite());
    }

    #[test]
    fn stale_game_ratio_at_least_l_everywhere() {
        for l in [1.0, 5.0, 30.0] {
            for i in 0..=100 {
                let x1 = i as f64 / 100.0;
                let out = stale_lb_game(x1, l).unwrap();
                // ∞ counts as ≥ L; L = 1 degenerates to ratio 1.
                assert!(out.ratio >= l.min(l.max(1.0)) - 1e-9, "x1 = {x1}, l = {l}");
                if x1 > 0.0 {
                    assert!(out.ratio.is_infinite());
                }
            }
        }
    }
}
