//! The A-OBD online update, its δ policies, and the information oracles.
//!
//! A-OBD (approximate online balanced descent) sees a single value/gradient
//! pair per step — fresh (current function), stale (previous function), or
//! noisy (gradient off by at most α, sign preserved) — and moves from
//! `x_prev` to the intersection of two lines:
//!
//! * `L1`, the first-order model of the observed function:
//!   `f_avl + grad_avl · (x − x_prev)`;
//! * `L2`, the switching-cost line of slope `δ` through `(x_prev, 0)`:
//!   `δ · |x − x_prev|`.
//!
//! For `grad_avl != 0` the intersection is at distance
//! `f_avl / (δ + |grad_avl|)` on the descent side, which
//! [`aobd_step`] evaluates in closed form. The balance parameter `δ` trades
//! hitting cost against switching cost; each information setting has its own
//! closed-form policy ([`delta_fresh`], [`delta_stale`], [`delta_noisy`]).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::{validate_assumptions, PiecewiseConvexSpec};

/// Factor applied to `|true gradient|` when a noise draw would flip or zero
/// the observed gradient's sign: the error is clipped to just under the true
/// magnitude so that `sign(grad + e) = sign(grad)` (assumption A4) holds
/// strictly.
pub const A4_CLIP_FACTOR: f64 = 1.0 - 1e-9;

/// Salt XOR-ed into the run seed for the noise stream, so that noise draws
/// are decorrelated from the function-sequence draws made elsewhere with the
/// same seed integer.
const NOISE_STREAM_SALT: u64 = 0x517c_c1b7_2722_0a95;

/// Which information oracle feeds the algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Setting {
    /// Value and gradient of the *current* function at `x_prev`.
    Fresh,
    /// Value and gradient of the *previous* function at `x_prev`; nothing at t = 1.
    Stale,
    /// Fresh information with a noisy gradient.
    NoisyFresh,
    /// Stale information with a noisy gradient.
    NoisyStale,
}

impl Setting {
    /// Stable lowercase name, used in CSV rows and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            Setting::Fresh => "fresh",
            Setting::Stale => "stale",
            Setting::NoisyFresh => "noisy-fresh",
            Setting::NoisyStale => "noisy-stale",
        }
    }

    /// Parses a CLI/CSV name; `noisy` is shorthand for `noisy-fresh`.
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "fresh" => Ok(Setting::Fresh),
            "stale" => Ok(Setting::Stale),
            "noisy" | "noisy-fresh" => Ok(Setting::NoisyFresh),
            "noisy-stale" => Ok(Setting::NoisyStale),
            other => Err(Error::Parameter(format!(
                "unknown setting `{other}` (expect fresh, stale, noisy, noisy-fresh or noisy-stale)"
            ))),
        }
    }

    /// True when the information source lags one step behind.
    pub fn is_stale_info(self) -> bool {
        matches!(self, Setting::Stale | Setting::NoisyStale)
    }

    /// True when the gradient channel carries noise.
    pub fn is_noisy(self) -> bool {
        matches!(self, Setting::NoisyFresh | Setting::NoisyStale)
    }
}

/// The frugal information tuple delivered to the algorithm at step `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Available function value at `x_prev` (exact in every setting).
    pub f_avl: f64,
    /// Available gradient value at `x_prev` (noisy in the noisy settings).
    pub grad_avl: f64,
    /// Which function the pair comes from: `t` (fresh) or `t − 1` (stale).
    pub source_time: usize,
}

/// Mode selector for [`delta_fresh`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FreshDeltaMode {
    /// The fixed closed form `½√((M/2+1)² + 7) − M/4 + ½`.
    ClosedForm,
    /// The δ equating the two branches of the fresh worst-case bound
    /// `max{δ+1+M/2, 2+(2+M/2)/δ}`: the positive root of
    /// `δ² + (M/2−1)δ − (2+M/2) = 0`.
    ///
    /// Note the two modes differ (7 vs 8 under the root); both are exposed
    /// rather than silently reconciled.
    Balanced,
}

/// Mode selector for [`delta_stale`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StaleDeltaMode {
    /// The fixed closed form `¼√((M+2L−2)² − 8(M+4L+4)) − (M+2L−2)/4`,
    /// preserved for fidelity. Its discriminant is negative for small `M, L`
    /// and the root is non-positive otherwise, so this mode always errors
    /// for `M, L > 0`; see [`delta_stale`].
    Literal,
    /// The δ balancing the two branches of the stale worst-case bound
    /// `max{δ+L+1+M/2, 2+(2(L+1)+M/2)/δ}`: the positive root of
    /// `δ² + (M/2+L−1)δ − (2L+2+M/2) = 0`. The default everywhere.
    Corrected,
}

/// The rule producing `δ_t` for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaPolicy {
    /// Fresh setting, fixed closed-form constant for smoothness `m`.
    FreshClosedForm { m: f64 },
    /// Fresh setting, branch-balancing constant for smoothness `m`.
    FreshBalanced { m: f64 },
    /// Stale setting, the as-printed constant (always errors; kept callable).
    StaleLiteral { m: f64, l: f64 },
    /// Stale setting, branch-balancing constant (the default stale policy).
    StaleCorrected { m: f64, l: f64 },
    /// Noisy setting: `δ_t = G + L − |grad_avl|`, so that
    /// `|grad_avl| + δ_t = G + L` is constant across steps.
    Noisy { g: f64, l: f64 },
}

impl DeltaPolicy {
    /// The δ for one step. Constant policies ignore the observation; the
    /// noisy policy consumes `grad_avl`.
    pub fn delta_for(&self, obs: &Observation) -> Result<f64> {
        match *self {
            DeltaPolicy::FreshClosedForm { m } => delta_fresh(m, FreshDeltaMode::ClosedForm),
            DeltaPolicy::FreshBalanced { m } => delta_fresh(m, FreshDeltaMode::Balanced),
            DeltaPolicy::StaleLiteral { m, l } => delta_stale(m, l, StaleDeltaMode::Literal),
            DeltaPolicy::StaleCorrected { m, l } => delta_stale(m, l, StaleDeltaMode::Corrected),
            DeltaPolicy::Noisy { g, l } => delta_noisy(g, l, obs.grad_avl),
        }
    }

    /// Smoothness bound the policy believes in, used to pre-validate runs.
    pub fn claimed_smoothness(&self) -> Option<f64> {
        match *self {
            DeltaPolicy::FreshClosedForm { m }
            | DeltaPolicy::FreshBalanced { m }
            | DeltaPolicy::StaleLiteral { m, .. }
            | DeltaPolicy::StaleCorrected { m, .. } => Some(m),
            DeltaPolicy::Noisy { .. } => None,
        }
    }

    /// Lipschitz bound the policy believes in, used to pre-validate runs.
    pub fn claimed_lipschitz(&self) -> Option<f64> {
        match *self {
            DeltaPolicy::StaleLiteral { l, .. }
            | DeltaPolicy::StaleCorrected { l, .. }
            | DeltaPolicy::Noisy { l, .. } => Some(l),
            DeltaPolicy::FreshClosedForm { .. } | DeltaPolicy::FreshBalanced { .. } => None,
        }
    }
}

/// Positive root of `δ² + p·δ + q = 0` for `q < 0`, in the cancellation-free
/// form `2|q| / (p + √(p² − 4q))`.
fn positive_quadratic_root(p: f64, q: f64) -> f64 {
    debug_assert!(q < 0.0);
    let disc = (p * p - 4.0 * q).sqrt();
    2.0 * (-q) / (p + disc)
}

/// The fresh-setting balance constant δ̂ for smoothness `m`.
///
/// Both modes are decreasing in `m` and tend to 1 as `m → ∞`.
pub fn delta_fresh(m: f64, mode: FreshDeltaMode) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Parameter(format!("delta_fresh needs m > 0, got {m}")));
    }
    Ok(match mode {
        FreshDeltaMode::ClosedForm => {
            let half_m = m / 2.0;
            0.5 * ((half_m + 1.0) * (half_m + 1.0) + 7.0).sqrt() - m / 4.0 + 0.5
        }
        FreshDeltaMode::Balanced => positive_quadratic_root(m / 2.0 - 1.0, -(2.0 + m / 2.0)),
    })
}

/// The stale-setting balance constant δ̃ for smoothness `m`, Lipschitz `l`.
///
/// `Corrected` is real and positive for all `m, l > 0` and collapses to the
/// fresh balanced constant as `l → 0`. `Literal` is the as-printed formula
/// with `−8(M+4L+4)` under the root; writing `A = M+2L−2`, either `A ≤ 0`
/// (then `A² < 4 < 32 ≤ 8(M+4L+4)`, negative discriminant) or `A > 0` (then
/// `√(A²−B) < A`, non-positive root), so it errors for every `m, l > 0`.
pub fn delta_stale(m: f64, l: f64, mode: StaleDeltaMode) -> Result<f64> {
    if !(m > 0.0 && l > 0.0) || !m.is_finite() || !l.is_finite() {
        return Err(Error::Parameter(format!(
            "delta_stale needs m > 0 and l > 0, got m = {m}, l = {l}"
        )));
    }
    match mode {
        StaleDeltaMode::Literal => {
            let a = m + 2.0 * l - 2.0;
            let disc = a * a - 8.0 * (m + 4.0 * l + 4.0);
            if disc < 0.0 {
                return Err(Error::FormulaInvalid(format!(
                    "literal stale δ has negative discriminant at (m, l) = ({m}, {l}): \
                     ({a})² − 8({m} + 4·{l} + 4) = {disc}"
                )));
            }
            let root = 0.25 * disc.sqrt() - a / 4.0;
            if root <= 0.0 {
                return Err(Error::FormulaInvalid(format!(
                    "literal stale δ is non-positive at (m, l) = ({m}, {l}): {root}"
                )));
            }
            Ok(root)
        }
        StaleDeltaMode::Corrected => Ok(positive_quadratic_root(
            m / 2.0 + l - 1.0,
            -(2.0 * l + 2.0 + m / 2.0),
        )),
    }
}

/// The noisy-setting per-step δ: `G + L − |grad_avl|`.
///
/// Applied to the gradient *magnitude* so that `|grad_avl| + δ_t = G + L`
/// stays constant (the invariant the noisy analysis needs) and `δ_t ≥ L > 0`
/// for gradients of either sign; the raw signed formula would yield
/// `δ > G + L` for negative gradients and break that invariant.
pub fn delta_noisy(g: f64, l: f64, grad_avl: f64) -> Result<f64> {
    if !(g > 0.0 && l > 0.0) || !g.is_finite() || !l.is_finite() {
        return Err(Error::Parameter(format!(
            "delta_noisy needs g > 0 and l > 0, got g = {g}, l = {l}"
        )));
    }
    if !grad_avl.is_finite() {
        return Err(Error::Numeric(format!("grad_avl is not finite: {grad_avl}")));
    }
    if grad_avl.abs() > g {
        return Err(Error::Assumption(format!(
            "received gradient magnitude {} exceeds the bound G = {g}",
            grad_avl.abs()
        )));
    }
    Ok(g + l - grad_avl.abs())
}

/// Extremal-noise sign: always `+α` or always `−α` before A4 clipping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremalSign {
    Plus,
    Minus,
}

/// Gradient-noise law for the noisy settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// No perturbation (the fresh/stale settings, or α = 0 experiments).
    None,
    /// `e ~ Uniform(−α, α)` per step.
    Uniform { alpha: f64 },
    /// `e = ±α` with a fixed sign, the worst case the analysis allows.
    Extremal { alpha: f64, sign: ExtremalSign },
}

/// Noise law plus the A4-enforcement mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// When true, a draw that would need clipping aborts the run instead of
    /// being clipped-and-counted.
    pub strict: bool,
}

impl NoiseModel {
    /// No noise, non-strict: the model for fresh/stale runs.
    pub fn none() -> Self {
        NoiseModel {
            kind: NoiseKind::None,
            strict: false,
        }
    }

    /// Uniform(−α, α) noise with clip-and-count A4 enforcement.
    pub fn uniform(alpha: f64) -> Self {
        NoiseModel {
            kind: NoiseKind::Uniform { alpha },
            strict: false,
        }
    }

    /// Maximum error magnitude α of the law (0 for `None`).
    pub fn alpha(&self) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::Uniform { alpha } | NoiseKind::Extremal { alpha, .. } => alpha,
        }
    }
}

/// An observation plus whether A4 clipping fired while producing it.
#[derive(Debug, Clone, Copy)]
pub struct Observed {
    pub obs: Observation,
    pub clipped: bool,
}

/// Draws the gradient error and enforces A4 (sign preservation).
///
/// Returns `(perturbed gradient, clipped)`. A zero true gradient admits only
/// `e = 0`; otherwise `|e| ≥ |grad|` is clipped to `A4_CLIP_FACTOR · |grad|`
/// keeping the error's own sign.
fn perturb_gradient<R: Rng>(
    true_grad: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let alpha = noise.alpha();
    let mut e = match noise.kind {
        NoiseKind::None => 0.0,
        NoiseKind::Uniform { alpha } => {
            if alpha == 0.0 {
                0.0
            } else {
                rng.gen_range(-alpha..=alpha)
            }
        }
        NoiseKind::Extremal { alpha, sign } => match sign {
            ExtremalSign::Plus => alpha,
            ExtremalSign::Minus => -alpha,
        },
    };
    debug_assert!(e.abs() <= alpha);
    let mut clipped = false;
    if true_grad == 0.0 {
        clipped = e != 0.0;
        e = 0.0;
    } else if e.abs() >= true_grad.abs() {
        e = (A4_CLIP_FACTOR * true_grad.abs()).copysign(e);
        clipped = true;
    }
    if clipped && noise.strict {
        return Err(Error::Assumption(format!(
            "noise draw would violate sign preservation at gradient {true_grad} (strict mode)"
        )));
    }
    Ok((true_grad + e, clipped))
}

/// Produces the information tuple for step `t` of a run.
///
/// Fresh settings read `f_t`; stale settings read `f_{t−1}` and return
/// [`Error::NoInformation`] at `t = 1` (the caller applies the `x₁ = x₀`
/// convention). Noisy settings perturb the gradient component only — the
/// value channel is exact in every setting.
pub fn observe<R: Rng>(
    setting: Setting,
    fseq: &[PiecewiseConvexSpec],
    t: usize,
    x_prev: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Observed> {
    if t == 0 || t > fseq.len() {
        return Err(Error::Parameter(format!(
            "step index t = {t} outside 1..={}",
            fseq.len()
        )));
    }
    let source_time = if setting.is_stale_info() {
        if t == 1 {
            return Err(Error::NoInformation);
        }
        t - 1
    } else {
        t
    };
    let f = &fseq[source_time - 1];
    let f_avl = f.eval(x_prev);
    let true_grad = f.grad(x_prev);
    let (grad_avl, clipped) = if setting.is_noisy() {
        perturb_gradient(true_grad, noise, rng)?
    } else {
        (true_grad, false)
    };
    Ok(Observed {
        obs: Observation {
            f_avl,
            grad_avl,
            source_time,
        },
        clipped,
    })
}

fn step_with_clamp(obs: &Observation, x_prev: f64, delta: f64) -> Result<(f64, bool)> {
    if !obs.f_avl.is_finite() || !obs.grad_avl.is_finite() || !x_prev.is_finite() || !delta.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite step input: f_avl = {}, grad_avl = {}, x_prev = {x_prev}, delta = {delta}",
            obs.f_avl, obs.grad_avl
        )));
    }
    if obs.f_avl < 0.0 {
        return Err(Error::Parameter(format!(
            "available function value must be >= 0, got {}",
            obs.f_avl
        )));
    }
    if delta <= 0.0 {
        return Err(Error::Parameter(format!("delta must be > 0, got {delta}")));
    }
    if obs.grad_avl == 0.0 {
        return Ok((x_prev, false));
    }
    let magnitude = obs.f_avl / (delta + obs.grad_avl.abs());
    let raw = if obs.grad_avl < 0.0 {
        x_prev + magnitude
    } else {
        x_prev - magnitude
    };
    let clamped = raw.clamp(0.0, 1.0);
    Ok((clamped, clamped != raw))
}

/// One A-OBD update: from `x_prev`, move `f_avl / (δ + |grad_avl|)` against
/// the observed gradient (staying put on a zero gradient), clamped to `[0,1]`.
pub fn aobd_step(obs: &Observation, x_prev: f64, delta: f64) -> Result<f64> {
    step_with_clamp(obs, x_prev, delta).map(|(x, _)| x)
}

/// Everything recorded about one step of a run.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    /// 1-based step index.
    pub t: usize,
    pub x_prev: f64,
    /// What the algorithm saw; `None` for the no-information stale step at
    /// t = 1 (where `x₁ = x₀` by convention).
    pub obs: Option<Observation>,
    /// The δ used; NaN for the no-information step (no update happened).
    pub delta: f64,
    pub x_new: f64,
    /// Hitting cost `H_t = f_t(x_new)` against the *true* current function.
    pub hit: f64,
    /// Switching cost `M_t = |x_new − x_prev|`.
    pub movement: f64,
    /// `∇f_t(x_prev)`, recorded by the harness for the checkers; the
    /// algorithm itself never sees this in the stale/noisy settings.
    pub true_grad: f64,
}

/// A full run: starting point, per-step records, and A4/domain event counts.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub x0: f64,
    pub setting: Setting,
    pub steps: Vec<StepRecord>,
    /// Noise draws clipped to preserve the gradient sign (A4).
    pub clip_count: usize,
    /// Steps whose raw target left `[0,1]` and was clamped.
    pub clamp_count: usize,
}

impl Trajectory {
    /// Number of steps T.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The action sequence `x_1..x_T`.
    pub fn actions(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.x_new).collect()
    }
}

/// Runs A-OBD over `fseq` under the given setting, δ policy and noise model.
///
/// Every function is first validated against the policy's claimed `(M, L)`;
/// a failure aborts with a named report, because the δ formulas are only
/// meaningful when the claims hold. The stale settings take no update at
/// t = 1 (`x₁ = x₀`) and consume information from t = 2 on. Deterministic
/// for fixed inputs and seed; the noise stream is salted so it is
/// independent of function-sequence draws keyed by the same seed.
pub fn run(
    fseq: &[PiecewiseConvexSpec],
    setting: Setting,
    policy: &DeltaPolicy,
    noise: &NoiseModel,
    x0: f64,
    seed: u64,
) -> Result<Trajectory> {
    if fseq.is_empty() {
        return Err(Error::Parameter("run needs at least one function".into()));
    }
    if !(0.0..=1.0).contains(&x0) {
        return Err(Error::Parameter(format!("x0 = {x0} outside [0,1]")));
    }
    let m_claim = policy.claimed_smoothness().unwrap_or(f64::INFINITY);
    let l_claim = policy.claimed_lipschitz().unwrap_or(f64::INFINITY);
    for (i, f) in fseq.iter().enumerate() {
        let report = validate_assumptions(f, m_claim, l_claim);
        if !report.all_pass() {
            return Err(Error::Assumption(format!(
                "function {} of {} fails validation against claimed (M, L) = ({m_claim}, {l_claim}): {}",
                i + 1,
                fseq.len(),
                report.failures().join(", ")
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ NOISE_STREAM_SALT);
    let mut steps = Vec::with_capacity(fseq.len());
    let mut clip_count = 0usize;
    let mut clamp_count = 0usize;
    let mut x_prev = x0;
    for (idx, f_t) in fseq.iter().enumerate() {
        let t = idx + 1;
        if setting.is_stale_info() && t == 1 {
            steps.push(StepRecord {
                t,
                x_prev,
                obs: None,
                delta: f64::NAN,
                x_new: x_prev,
                hit: f_t.eval(x_prev),
                movement: 0.0,
                true_grad: f_t.grad(x_prev),
            });
            continue;
        }
        let observed = observe(setting, fseq, t, x_prev, noise, &mut rng)?;
        if observed.clipped {
            clip_count += 1;
        }
        let delta = policy.delta_for(&observed.obs)?;
        let (x_new, clamped) = step_with_clamp(&observed.obs, x_prev, delta)?;
        if clamped {
            clamp_count += 1;
        }
        steps.push(StepRecord {
            t,
            x_prev,
            obs: Some(observed.obs),
            delta,
            x_new,
            hit: f_t.eval(x_new),
            movement: (x_new - x_prev).abs(),
            true_grad: f_t.grad(x_prev),
        });
        x_prev = x_new;
    }
    Ok(Trajectory {
        x0,
        setting,
        steps,
        clip_count,
        clamp_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::make_quadratic;

    fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
        assert!(
            (got - want).abs() <= tol,
            "{what}: got {got}, want {want} (tol {tol})"
        );
    }

    #[test]
    fn step_solves_line_intersection() {
        let obs = Observation { f_avl: 4.0, grad_avl: -4.0, source_time: 1 };
        let x = aobd_step(&obs, 0.0, 2.0).unwrap();
        assert_close(x, 2.0 / 3.0, 1e-15, "-4Δ + 4 = 2Δ at Δ = 2/3");
    }

    #[test]
    fn step_zero_value_stays_put() {
        let obs = Observation { f_avl: 0.0, grad_avl: -4.0, source_time: 1 };
        assert_eq!(aobd_step(&obs, 0.5, 2.0).unwrap(), 0.5);
    }

    #[test]
    fn step_zero_gradient_stays_put() {
        let obs = Observation { f_avl: 3.0, grad_avl: 0.0, source_time: 1 };
        assert_eq!(aobd_step(&obs, 0.25, 2.0).unwrap(), 0.25);
    }

    #[test]
    fn step_with_fresh_delta_constant() {
        // f_avl = 1.6, grad = -4, δ = δ̂(m = 2): distance 1.6/(δ̂ + 4).
        let delta = delta_fresh(2.0, FreshDeltaMode::ClosedForm).unwrap();
        let obs = Observation { f_avl: 1.6, grad_avl: -4.0, source_time: 1 };
        let x = aobd_step(&obs, 0.0, delta).unwrap();
        assert_eq!(x, 1.6 / (delta + 4.0), "matches the closed form exactly");
        assert_close(x, 0.28277, 1e-5, "numeric value");
    }

    #[test]
    fn step_moves_against_positive_gradient_and_clamps() {
        let obs = Observation { f_avl: 4.0, grad_avl: 4.0, source_time: 1 };
        assert_close(aobd_step(&obs, 1.0, 2.0).unwrap(), 1.0 - 2.0 / 3.0, 1e-15, "descends left");
        // Large value forces the raw target below 0: clamps.
        let big = Observation { f_avl: 40.0, grad_avl: 4.0, source_time: 1 };
        assert_eq!(aobd_step(&big, 0.1, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn step_rejects_bad_inputs() {
        let obs = Observation { f_avl: 1.0, grad_avl: -1.0, source_time: 1 };
        assert!(aobd_step(&obs, 0.0, 0.0).is_err(), "delta must be positive");
        let neg = Observation { f_avl: -1.0, grad_avl: -1.0, source_time: 1 };
        assert!(aobd_step(&neg, 0.0, 1.0).is_err(), "negative value rejected");
        let nan = Observation { f_avl: f64::NAN, grad_avl: -1.0, source_time: 1 };
        assert!(aobd_step(&nan, 0.0, 1.0).is_err(), "non-finite rejected");
    }

    #[test]
    fn fresh_delta_closed_form_values() {
        let d2 = delta_fresh(2.0, FreshDeltaMode::ClosedForm).unwrap();
        assert_close(d2, 0.5 * 11f64.sqrt(), 1e-15, "δ̂(2) = ½√11");
        let d50 = delta_fresh(50.0, FreshDeltaMode::ClosedForm).unwrap();
        assert_close(d50, 0.5 * 683f64.sqrt() - 12.0, 1e-12, "δ̂(50) = ½√683 − 12");
        assert_close(d50, 1.0671343453719793, 1e-12, "δ̂(50) numeric");
    }

    #[test]
    fn fresh_delta_balanced_values() {
        let d2 = delta_fresh(2.0, FreshDeltaMode::Balanced).unwrap();
        assert_close(d2, 3f64.sqrt(), 1e-15, "balanced δ(2) = √3");
    }

    #[test]
    fn balanced_delta_minimizes_the_two_branch_bound() {
        // Numeric cross-check: grid-minimize max{δ+1+m/2, 2+(2+m/2)/δ}.
        for m in [2.0, 10.0, 50.0] {
            let balanced = delta_fresh(m, FreshDeltaMode::Balanced).unwrap();
            let bound = |d: f64| (d + 1.0 + m / 2.0).max(2.0 + (2.0 + m / 2.0) / d);
            let mut best = (f64::INFINITY, 0.0);
            let mut d = 0.05;
            while d < 6.0 {
                if bound(d) < best.0 {
                    best = (bound(d), d);
                }
                d += 1e-4;
            }
            assert_close(best.1, balanced, 2e-4, "grid argmin matches the root");
            assert_close(
                balanced + 1.0 + m / 2.0,
                2.0 + (2.0 + m / 2.0) / balanced,
                1e-9,
                "branches equal at the balanced δ",
            );
        }
    }

    #[test]
    fn fresh_delta_tends_to_one_from_above() {
        let mut prev = f64::INFINITY;
        for m in [2.0, 10.0, 100.0, 1e4, 1e6] {
            let d = delta_fresh(m, FreshDeltaMode::ClosedForm).unwrap();
            assert!(d > 1.0 && d < prev, "decreasing toward 1, got {d} after {prev}");
            prev = d;
        }
        assert_close(prev, 1.0, 1e-3, "near the limit at m = 1e6");
    }

    #[test]
    fn stale_delta_corrected_values() {
        let d = delta_stale(10.0, 5.0, StaleDeltaMode::Corrected).unwrap();
        assert_close(d, (149f64.sqrt() - 9.0) / 2.0, 1e-14, "δ̃(10,5) = (√149 − 9)/2");
        assert_close(d, 1.603277807866851, 1e-12, "δ̃(10,5) numeric");
        assert_close(d, 0.25 * 596f64.sqrt() - 4.5, 1e-12, "equivalent radical form");
        // Branch balance: δ+L+1+M/2 = 2+(2(L+1)+M/2)/δ.
        assert_close(d + 5.0 + 1.0 + 5.0, 2.0 + (2.0 * 6.0 + 5.0) / d, 1e-9, "branches equal");
    }

    #[test]
    fn stale_delta_collapses_to_fresh_as_l_vanishes() {
        let d = delta_stale(2.0, 1e-12, StaleDeltaMode::Corrected).unwrap();
        assert_close(d, 3f64.sqrt(), 1e-6, "L → 0 recovers the fresh balanced δ");
    }

    #[test]
    fn stale_literal_always_errors() {
        let err = delta_stale(2.0, 2.0, StaleDeltaMode::Literal).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("discriminant"), "names the discriminant: {text}");
        assert!(text.contains("-96"), "16 − 112 = −96 spelled out: {text}");
        // No (m, l) on a broad grid yields a usable literal value.
        for i in 1..=100 {
            for j in 1..=100 {
                let (m, l) = (0.5 * i as f64, 0.5 * j as f64);
                assert!(
                    delta_stale(m, l, StaleDeltaMode::Literal).is_err(),
                    "literal unexpectedly succeeded at ({m}, {l})"
                );
            }
        }
    }

    #[test]
    fn noisy_delta_magnitude_rule() {
        assert_eq!(delta_noisy(5.0, 2.0, -3.0).unwrap(), 4.0);
        assert_eq!(delta_noisy(5.0, 2.0, 0.0).unwrap(), 7.0);
        assert_eq!(delta_noisy(5.0, 2.0, -5.0).unwrap(), 2.0, "δ bottoms out at L");
        assert!(delta_noisy(5.0, 2.0, -5.1).is_err(), "gradient beyond G violates A3");
    }

    #[test]
    fn observe_fresh_and_stale() {
        let f1 = make_quadratic(10.0, 0.2).unwrap();
        let f2 = make_quadratic(10.0, 0.8).unwrap();
        let fseq = vec![f1, f2];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fresh = observe(Setting::Fresh, &fseq, 1, 0.0, &NoiseModel::none(), &mut rng).unwrap();
        assert_eq!(fresh.obs.f_avl, 0.4);
        assert_eq!(fresh.obs.grad_avl, -4.0);
        assert_eq!(fresh.obs.source_time, 1);
        let stale = observe(Setting::Stale, &fseq, 2, 0.1, &NoiseModel::none(), &mut rng).unwrap();
        assert_eq!(stale.obs.source_time, 1, "reads the previous function");
        assert_close(stale.obs.f_avl, 10.0 * 0.01, 1e-15, "f1 at 0.1");
        assert!(matches!(
            observe(Setting::Stale, &fseq, 1, 0.0, &NoiseModel::none(), &mut rng),
            Err(Error::NoInformation)
        ));
    }

    #[test]
    fn observe_extremal_noise_preserves_sign() {
        let f = make_quadratic(10.0, 0.2).unwrap();
        let fseq = vec![f];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let noise = NoiseModel {
            kind: NoiseKind::Extremal { alpha: 1.0, sign: ExtremalSign::Plus },
            strict: false,
        };
        let got = observe(Setting::NoisyFresh, &fseq, 1, 0.0, &noise, &mut rng).unwrap();
        assert_eq!(got.obs.grad_avl, -3.0, "true −4 plus error +1");
        assert!(!got.clipped);
        // α larger than the gradient magnitude: clipped to keep the sign.
        let big = NoiseModel {
            kind: NoiseKind::Extremal { alpha: 10.0, sign: ExtremalSign::Plus },
            strict: false,
        };
        let clipped = observe(Setting::NoisyFresh, &fseq, 1, 0.0, &big, &mut rng).unwrap();
        assert!(clipped.clipped);
        assert!(clipped.obs.grad_avl < 0.0, "sign preserved after clipping");
        assert_close(clipped.obs.grad_avl, -4.0 + A4_CLIP_FACTOR * 4.0, 1e-15, "clip lands just inside");
        // Strict mode turns the clip into an error.
        let strict = NoiseModel { strict: true, ..big };
        assert!(observe(Setting::NoisyFresh, &fseq, 1, 0.0, &strict, &mut rng).is_err());
    }

    #[test]
    fn run_single_fresh_step_composes_the_pieces() {
        let f = make_quadratic(10.0, 0.2).unwrap();
        let policy = DeltaPolicy::FreshClosedForm { m: 20.0 };
        let traj = run(&[f], Setting::Fresh, &policy, &NoiseModel::none(), 0.0, 0).unwrap();
        let delta = delta_fresh(20.0, FreshDeltaMode::ClosedForm).unwrap();
        assert_eq!(traj.steps.len(), 1);
        assert_eq!(traj.steps[0].x_new, 0.4 / (delta + 4.0));
        assert_eq!(traj.clamp_count, 0);
    }

    #[test]
    fn run_rests_at_a_shared_minimizer() {
        let f = make_quadratic(10.0, 0.3).unwrap();
        let fseq = vec![f; 8];
        let policy = DeltaPolicy::FreshClosedForm { m: 20.0 };
        let traj = run(&fseq, Setting::Fresh, &policy, &NoiseModel::none(), 0.3, 7).unwrap();
        for s in &traj.steps {
            assert_eq!(s.x_new, 0.3);
            assert_eq!(s.hit, 0.0);
            assert_eq!(s.movement, 0.0);
        }
    }

    #[test]
    fn run_stale_is_fresh_shifted_bitwise() {
        // Same δ for both runs (the stale policy works as a constant anywhere).
        let fseq: Vec<_> = [0.1, 0.8, 0.3, 0.6, 0.2, 0.4]
            .iter()
            .map(|&c| make_quadratic(10.0, c).unwrap())
            .collect();
        let policy = DeltaPolicy::StaleCorrected { m: 20.0, l: 18.0 };
        let fresh = run(&fseq, Setting::Fresh, &policy, &NoiseModel::none(), 0.0, 0).unwrap();
        let stale = run(&fseq, Setting::Stale, &policy, &NoiseModel::none(), 0.0, 0).unwrap();
        assert_eq!(stale.steps[0].x_new.to_bits(), 0.0f64.to_bits(), "x₁ = x₀");
        assert!(stale.steps[0].obs.is_none());
        for t in 2..=fseq.len() {
            assert_eq!(
                stale.steps[t - 1].x_new.to_bits(),
                fresh.steps[t - 2].x_new.to_bits(),
                "x_t stale = x_(t−1) fresh at t = {t}"
            );
        }
    }

    #[test]
    fn run_validates_assumptions_before_stepping() {
        // Claimed smoothness below the true one aborts.
        let f = make_quadratic(10.0, 0.2).unwrap(); // smoothness 20
        let policy = DeltaPolicy::FreshClosedForm { m: 10.0 };
        let err = run(&[f], Setting::Fresh, &policy, &NoiseModel::none(), 0.0, 0).unwrap_err();
        assert!(err.to_string().contains("smoothness within claim"), "{err}");
    }

    #[test]
    fn run_noisy_is_deterministic_and_a4_clean() {
        let fseq: Vec<_> = [0.1, 0.8, 0.3, 0.6]
            .iter()
            .map(|&c| make_quadratic(10.0, c).unwrap())
            .collect();
        let policy = DeltaPolicy::Noisy { g: 18.5, l: 18.0 };
        let noise = NoiseModel::uniform(0.5);
        let a = run(&fseq, Setting::NoisyFresh, &policy, &noise, 0.0, 42).unwrap();
        let b = run(&fseq, Setting::NoisyFresh, &policy, &noise, 0.0, 42).unwrap();
        for (sa, sb) in a.steps.iter().zip(&b.steps) {
            assert_eq!(sa.x_new.to_bits(), sb.x_new.to_bits(), "same seed, same bits");
        }
        for s in &a.steps {
            let obs = s.obs.unwrap();
            if s.true_grad != 0.0 {
                assert_eq!(obs.grad_avl.signum(), s.true_grad.signum(), "A4 sign preserved");
            }
            assert!((obs.grad_avl - s.true_grad).abs() <= 0.5 + 1e-15, "|error| ≤ α");
        }
    }

    #[test]
    fn setting_names_round_trip() {
        for s in [Setting::Fresh, Setting::Stale, Setting::NoisyFresh, Setting::NoisyStale] {
            assert_eq!(Setting::parse(s.name()).unwrap(), s);
        }
        assert_eq!(Setting::parse("noisy").unwrap(), Setting::NoisyFresh);
        assert!(Setting::parse("nope").is_err());
    }
}
