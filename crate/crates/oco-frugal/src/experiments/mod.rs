//! Scenario generation, parameter sweeps, and reporting.
//!
//! The standard scenario draws each step's cost uniformly from a five-element
//! suite of quadratics parameterized by a scale `s`:
//! `{0.5s(x−0.1)², 0.3s(x−0.3)², s(x−0.2)², s(x−0.8)², s(x−0.4)²}`.
//! Its tight constants are smoothness `2s` (three members) and Lipschitz
//! `1.6s` (gradient of the 0.8-centered member at 0). Sweeps are indexed by
//! the *policy smoothness* `M = 2s`, the quantity every δ formula and bound
//! consumes, so the suite for a row at `M` is the scale-`M/2` suite and its
//! true Lipschitz constant is `0.8·M`.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod svg;

use std::collections::HashMap;
use std::sync::Arc;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algorithm::{
    delta_fresh, delta_stale, run, DeltaPolicy, FreshDeltaMode, NoiseModel, Setting,
    StaleDeltaMode, Trajectory,
};
use crate::analysis::{
    bound_fresh_at, bound_stale_at, check_fresh_sandwich, check_noisy_sandwich,
    check_potential_certificate, check_stale_relation, competitive_ratio, cr_upper_bound,
    total_cost, CheckReport,
};
use crate::error::{Error, Result};
use crate::functions::{make_quadratic, PiecewiseConvexSpec};
use crate::offline::{opt_dp, OptResult};

/// The five suite members at scale `s`: `(coefficient, center)` pairs of
/// `a(x−c)²`.
const SUITE: [(f64, f64); 5] = [
    (0.5, 0.1),
    (0.3, 0.3),
    (1.0, 0.2),
    (1.0, 0.8),
    (1.0, 0.4),
];

/// The five standard cost functions at scale `s`.
pub fn standard_suite(scale: f64) -> Result<Vec<PiecewiseConvexSpec>> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Parameter(format!("suite scale must be > 0, got {scale}")));
    }
    SUITE
        .iter()
        .map(|&(a, c)| make_quadratic(a * scale, c))
        .collect()
}

/// Tight smoothness constant of the scale-`s` suite.
pub fn suite_smoothness(scale: f64) -> f64 {
    2.0 * scale
}

/// Tight Lipschitz constant of the scale-`s` suite on `[0,1]`.
pub fn suite_lipschitz(scale: f64) -> f64 {
    1.6 * scale
}

/// `T` functions drawn uniformly (seeded) from the scale-`s` suite.
pub fn scenario_standard(scale: f64, t: usize, seed: u64) -> Result<Vec<PiecewiseConvexSpec>> {
    if t == 0 {
        return Err(Error::Parameter("scenario needs t >= 1".into()));
    }
    let suite = standard_suite(scale)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = Uniform::from(0..suite.len());
    Ok((0..t).map(|_| suite[pick.sample(&mut rng)].clone()).collect())
}

/// One cell of work: a setting with explicit policy parameters.
///
/// `m` is the policy smoothness (the suite runs at scale `m/2`); `l_param`
/// is the Lipschitz value fed to the stale/noisy δ policies, which defaults
/// to the suite's true constant `0.8·m` and may be swept independently of
/// the functions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Scenario {
    pub setting: Setting,
    pub m: f64,
    pub l_param: f64,
    pub g: f64,
    pub alpha: f64,
    pub t: usize,
    pub seed: u64,
    pub x0: f64,
    pub fresh_mode: FreshDeltaMode,
    pub stale_mode: StaleDeltaMode,
}

impl Scenario {
    /// A scenario with every derived default: true suite Lipschitz constant,
    /// gradient bound `G = 0.8·m + α`, start at 0, closed-form/corrected
    /// policy modes.
    pub fn new(setting: Setting, m: f64, alpha: f64, t: usize, seed: u64) -> Self {
        let scale = m / 2.0;
        let alpha = if setting.is_noisy() { alpha } else { 0.0 };
        Scenario {
            setting,
            m,
            l_param: suite_lipschitz(scale),
            g: suite_lipschitz(scale) + alpha,
            alpha,
            t,
            seed,
            x0: 0.0,
            fresh_mode: FreshDeltaMode::ClosedForm,
            stale_mode: StaleDeltaMode::Corrected,
        }
    }

    /// The δ policy this scenario's setting uses.
    pub fn policy(&self) -> DeltaPolicy {
        match self.setting {
            Setting::Fresh => match self.fresh_mode {
                FreshDeltaMode::ClosedForm => DeltaPolicy::FreshClosedForm { m: self.m },
                FreshDeltaMode::Balanced => DeltaPolicy::FreshBalanced { m: self.m },
            },
            Setting::Stale => match self.stale_mode {
                StaleDeltaMode::Corrected => DeltaPolicy::StaleCorrected {
                    m: self.m,
                    l: self.l_param,
                },
                StaleDeltaMode::Literal => DeltaPolicy::StaleLiteral {
                    m: self.m,
                    l: self.l_param,
                },
            },
            Setting::NoisyFresh | Setting::NoisyStale => DeltaPolicy::Noisy {
                g: self.g,
                l: self.l_param,
            },
        }
    }

    /// The noise model this scenario's setting uses.
    pub fn noise(&self) -> NoiseModel {
        if self.setting.is_noisy() {
            NoiseModel::uniform(self.alpha)
        } else {
            NoiseModel::none()
        }
    }

    /// The seeded function sequence (shared across settings at equal
    /// `(m, seed)`).
    pub fn functions(&self) -> Result<Vec<PiecewiseConvexSpec>> {
        scenario_standard(self.m / 2.0, self.t, self.seed)
    }
}

/// One row of sweep output (one scenario against its offline baseline).
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub setting: Setting,
    pub m: f64,
    pub l: f64,
    pub g: f64,
    pub alpha: f64,
    pub seed: u64,
    pub t: usize,
    pub total_cost: f64,
    pub opt_cost: f64,
    pub opt_error_bound: f64,
    pub ratio: f64,
    pub ratio_lo: f64,
    pub theorem_bound: f64,
    pub checks_passed: bool,
}

/// Everything a single scenario produces: its row, the certificate reports,
/// and the run counters.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub row: SweepRow,
    pub reports: Vec<CheckReport>,
    pub clip_count: usize,
    pub clamp_count: usize,
    /// A run-level failure (for example a policy whose claimed constants the
    /// functions violate), recorded instead of a cost.
    pub failure: Option<String>,
}

fn nan_row(sc: &Scenario, theorem_bound: f64) -> SweepRow {
    SweepRow {
        setting: sc.setting,
        m: sc.m,
        l: sc.l_param,
        g: if sc.setting.is_noisy() { sc.g } else { 0.0 },
        alpha: sc.alpha,
        seed: sc.seed,
        t: sc.t,
        total_cost: f64::NAN,
        opt_cost: f64::NAN,
        opt_error_bound: f64::NAN,
        ratio: f64::NAN,
        ratio_lo: f64::NAN,
        theorem_bound,
        checks_passed: false,
    }
}

/// Runs one scenario end to end: trajectory, offline baseline (reused if
/// provided), ratio, theorem bound, and every checker that applies to the
/// setting. Run-level errors become a recorded failure, not a panic.
pub fn run_scenario(sc: &Scenario, shared_opt: Option<Arc<OptResult>>, opt_grid_n: usize) -> ScenarioReport {
    let theorem_bound = cr_upper_bound(sc.setting, sc.m, sc.l_param, sc.g, sc.alpha, None)
        .unwrap_or(f64::INFINITY);
    let fseq = match sc.functions() {
        Ok(f) => f,
        Err(e) => {
            return ScenarioReport {
                row: nan_row(sc, theorem_bound),
                reports: Vec::new(),
                clip_count: 0,
                clamp_count: 0,
                failure: Some(e.to_string()),
            }
        }
    };
    let attempt = (|| -> Result<(Trajectory, Vec<CheckReport>, Arc<OptResult>)> {
        let policy = sc.policy();
        let noise = sc.noise();
        let traj = run(&fseq, sc.setting, &policy, &noise, sc.x0, sc.seed)?;
        let opt = match shared_opt {
            Some(o) => o,
            None => Arc::new(opt_dp(&fseq, sc.x0, opt_grid_n)?),
        };
        let mut reports = Vec::new();
        match sc.setting {
            Setting::Fresh => {
                let delta = delta_fresh(sc.m, sc.fresh_mode)?;
                reports.push(check_fresh_sandwich(&traj, &fseq, delta, sc.m));
                let gamma = delta + sc.m / 2.0 + 1.0;
                let rho = bound_fresh_at(sc.m, delta)?;
                reports.push(check_potential_certificate(&traj, &opt, gamma, rho, 0.0));
            }
            Setting::Stale => {
                // The stale guarantees are routed through the fresh run at
                // the same δ: the shift identity couples the two, and the
                // certificate weights the fresh ledger by (L+1).
                let delta = delta_stale(sc.m, sc.l_param, sc.stale_mode)?;
                let aux_fresh = run(&fseq, Setting::Fresh, &policy, &noise, sc.x0, sc.seed)?;
                reports.push(check_stale_relation(&aux_fresh, &traj, &fseq, sc.l_param));
                let gamma = delta + sc.m / 2.0 + sc.l_param + 1.0;
                let rho = bound_stale_at(sc.m, sc.l_param, delta)?;
                reports.push(check_potential_certificate(
                    &aux_fresh, &opt, gamma, rho, sc.l_param,
                ));
            }
            Setting::NoisyFresh | Setting::NoisyStale => {
                reports.push(check_noisy_sandwich(
                    &traj, &fseq, sc.alpha, sc.g, sc.l_param, sc.m,
                ));
            }
        }
        Ok((traj, reports, opt))
    })();
    match attempt {
        Ok((traj, reports, opt)) => {
            let ledger = total_cost(&traj, &fseq).expect("run/fseq lengths match");
            let pair = competitive_ratio(ledger.total, &opt);
            let bound_ok = !theorem_bound.is_finite() || pair.ratio_lo <= theorem_bound;
            let checks_passed = bound_ok && reports.iter().all(|r| r.pass());
            ScenarioReport {
                row: SweepRow {
                    setting: sc.setting,
                    m: sc.m,
                    l: sc.l_param,
                    g: if sc.setting.is_noisy() { sc.g } else { 0.0 },
                    alpha: sc.alpha,
                    seed: sc.seed,
                    t: sc.t,
                    total_cost: ledger.total,
                    opt_cost: opt.cost,
                    opt_error_bound: opt.error_bound,
                    ratio: pair.ratio,
                    ratio_lo: pair.ratio_lo,
                    theorem_bound,
                    checks_passed,
                },
                reports,
                clip_count: traj.clip_count,
                clamp_count: traj.clamp_count,
                failure: None,
            }
        }
        Err(e) => ScenarioReport {
            row: nan_row(sc, theorem_bound),
            reports: Vec::new(),
            clip_count: 0,
            clamp_count: 0,
            failure: Some(e.to_string()),
        },
    }
}

/// Sweep configuration: which settings, which axes, and the shared run
/// parameters.
#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub settings: Vec<Setting>,
    /// Policy-smoothness axis; each value runs with the true suite Lipschitz
    /// constant (`0.8·M`).
    pub m_values: Vec<f64>,
    /// Policy-Lipschitz axis at fixed `l_axis_m`: only the L fed to the
    /// stale/noisy δ policies varies, the functions stay the same.
    pub l_values: Vec<f64>,
    pub l_axis_m: f64,
    pub t: usize,
    pub seeds: Vec<u64>,
    pub opt_grid_n: usize,
    pub alpha: f64,
    pub x0: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            settings: vec![Setting::Fresh, Setting::Stale, Setting::NoisyFresh],
            m_values: range_values(2.0, 50.0, 6.0),
            // Starts at the suite's true constant (0.8·10): smaller claimed
            // L values fail the run's assumption validation by design.
            l_values: range_values(8.0, 50.0, 6.0),
            l_axis_m: 10.0,
            t: 100,
            seeds: (0..5).collect(),
            opt_grid_n: 2001,
            alpha: 0.5,
            x0: 0.0,
        }
    }
}

/// `lo:hi:step` expansion, inclusive of `hi` when the step lands on it.
pub fn range_values(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && hi >= lo);
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let v = lo + f64::from(i) * step;
        if v > hi + 1e-12 {
            break;
        }
        out.push(v);
        i += 1;
    }
    out
}

/// Runs the full sweep: the `M` axis at true-L policies and the `L` axis at
/// fixed `M`. Function sequences and offline baselines are shared across
/// settings and L-cells keyed by `(M, seed)`, and rows come back sorted by
/// `(setting, M, L, seed)` regardless of execution order, so output bytes
/// never depend on parallelism.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.settings.is_empty() || config.m_values.is_empty() || config.seeds.is_empty() {
        return Err(Error::Parameter(
            "sweep needs at least one setting, one M value and one seed".into(),
        ));
    }
    let mut scenarios: Vec<Scenario> = Vec::new();
    for &m in &config.m_values {
        for &seed in &config.seeds {
            for &setting in &config.settings {
                let mut sc = Scenario::new(setting, m, config.alpha, config.t, seed);
                sc.x0 = config.x0;
                scenarios.push(sc);
            }
        }
    }
    for &l in &config.l_values {
        for &seed in &config.seeds {
            for &setting in &config.settings {
                let mut sc = Scenario::new(setting, config.l_axis_m, config.alpha, config.t, seed);
                sc.x0 = config.x0;
                if setting != Setting::Fresh {
                    sc.l_param = l;
                    if setting.is_noisy() {
                        // G stays pinned to the true gradient bound; only the
                        // policy's L belief moves.
                        sc.g = suite_lipschitz(config.l_axis_m / 2.0) + sc.alpha;
                    }
                }
                scenarios.push(sc);
            }
        }
    }

    // One DP per distinct (m, seed): compute the shared baselines first.
    let mut keys: Vec<(u64, u64)> = scenarios
        .iter()
        .map(|sc| (sc.m.to_bits(), sc.seed))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let baselines: HashMap<(u64, u64), Arc<OptResult>> = keys
        .par_iter()
        .map(|&(m_bits, seed)| {
            let m = f64::from_bits(m_bits);
            let fseq = scenario_standard(m / 2.0, config.t, seed)?;
            let opt = opt_dp(&fseq, config.x0, config.opt_grid_n)?;
            Ok(((m_bits, seed), Arc::new(opt)))
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<SweepRow> = scenarios
        .par_iter()
        .map(|sc| {
            let opt = baselines
                .get(&(sc.m.to_bits(), sc.seed))
                .expect("baseline precomputed for every scenario")
                .clone();
            run_scenario(sc, Some(opt), config.opt_grid_n).row
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.setting.name(), a.m.to_bits(), a.l.to_bits(), a.seed).cmp(&(
            b.setting.name(),
            b.m.to_bits(),
            b.l.to_bits(),
            b.seed,
        ))
    });
    Ok(rows)
}

/// Least-squares line fit quality: the fraction of variance explained, in
/// `[0, 1]` (0 when the data has no variance to explain or fewer than two
/// points).
pub fn linear_fit_r2(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy * sxy) / (sxx * syy)
}

/// Mean total cost per axis value for one setting, skipping failed rows.
/// `axis` picks the row field: the policy-smoothness or policy-L column.
pub fn series_means(rows: &[SweepRow], setting: Setting, axis: SweepAxis) -> Vec<(f64, f64)> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for row in rows {
        if row.setting != setting || !row.total_cost.is_finite() {
            continue;
        }
        let x = match axis {
            SweepAxis::M => row.m,
            SweepAxis::L => row.l,
        };
        let e = acc.entry(x.to_bits()).or_insert((0.0, 0));
        e.0 += row.total_cost;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(bits, (sum, count))| (f64::from_bits(bits), sum / count as f64))
        .collect()
}

/// Which sweep column serves as a chart's x-axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    M,
    L,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::M => "M",
            SweepAxis::L => "L",
        }
    }
}
