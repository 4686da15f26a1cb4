//! The command-line interface.
//!
//! Subcommands: `run` (one scenario with its checks), `sweep` (CSV + SVG
//! figure reproduction), `lowerbound` (the hard-instance games), `verify`
//! (the cross-oracle invariant suite) and `plot` (CSV → SVG). Exit codes:
//! 0 success, 1 check/run failure, 2 usage error. `OCO_FRUGAL_THREADS`
//! caps the worker pool.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::Rng as _;
use rand::SeedableRng as _;

use crate::adversary::{
    per_interval_exact_minima, play_game, stale_lb_game, sweep_first_action, GameInstance,
};
use crate::algorithm::{
    aobd_step, delta_fresh, run, DeltaPolicy, FreshDeltaMode, NoiseModel, Setting,
};
use crate::analysis::{
    bound_fresh_at, check_fresh_sandwich, check_noisy_sandwich, check_potential_certificate,
    check_stale_relation,
};
use crate::error::{Error, Result};
use crate::experiments::config::{parse_settings, resolve_sweep, ConfigFile, SweepOverrides};
use crate::experiments::csvio::{emit_csv, parse_csv};
use crate::experiments::svg::emit_svg_linechart;
use crate::experiments::{
    run_scenario, scenario_standard, standard_suite, suite_lipschitz, sweep, Scenario, SweepAxis,
};
use crate::functions::{make_quadratic, validate_assumptions};
use crate::offline::{exact_balanced_point, minplus_linear, opt_dp, opt_single_step};

#[derive(Parser)]
#[command(
    name = "oco-frugal",
    about = "Single-gradient online convex optimization with switching costs: \
             runs, sweeps, hard instances, and invariant checks",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and print its ledger, ratio, bound and checks.
    Run(RunArgs),
    /// Run the M/L parameter sweeps and write CSV plus charts.
    Sweep(SweepArgs),
    /// Play the hard-instance games and print the ratio tables.
    Lowerbound(LowerboundArgs),
    /// Run the cross-oracle invariant suite.
    Verify(VerifyArgs),
    /// Render an existing sweep CSV as an SVG chart.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Information setting: fresh, stale, noisy[-fresh] or noisy-stale
    /// [default: fresh].
    #[arg(long)]
    setting: Option<String>,
    /// Policy smoothness M; the cost suite runs at scale M/2 [default: 10].
    #[arg(long = "M")]
    m: Option<f64>,
    /// Policy Lipschitz parameter [default: the true suite constant 0.8*M].
    #[arg(long = "L")]
    l: Option<f64>,
    /// Gradient bound G for noisy settings [default: 0.8*M + alpha].
    #[arg(long = "G")]
    g: Option<f64>,
    /// Noise half-width for noisy settings [default: 0.5].
    #[arg(long)]
    alpha: Option<f64>,
    /// Horizon [default: 100].
    #[arg(long = "T")]
    t: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Starting point in [0,1] [default: 0].
    #[arg(long)]
    x0: Option<f64>,
    /// Offline baseline grid size [default: 2001].
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    /// Emit the full report as JSON instead of text.
    #[arg(long)]
    json: bool,
    /// Config file; CLI flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated settings list [default: fresh,stale,noisy].
    #[arg(long)]
    settings: Option<String>,
    /// Policy-smoothness axis: lo:hi:step or a comma list [default: 2:50:6].
    #[arg(long = "M")]
    m: Option<String>,
    /// Policy-L axis at fixed M: lo:hi:step or a comma list
    /// [default: 0.8*l_axis_m:50:6].
    #[arg(long = "L")]
    l: Option<String>,
    /// The fixed M for the L axis [default: 10].
    #[arg(long = "l-axis-m")]
    l_axis_m: Option<f64>,
    /// Horizon [default: 100].
    #[arg(long = "T")]
    t: Option<usize>,
    /// Number of seeds, seed_start..seed_start+seeds [default: 5].
    #[arg(long)]
    seeds: Option<usize>,
    /// [default: 0]
    #[arg(long = "seed-start")]
    seed_start: Option<u64>,
    /// Offline baseline grid size [default: 2001].
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    /// Noise half-width for noisy settings [default: 0.5].
    #[arg(long)]
    alpha: Option<f64>,
    /// Starting point [default: 0].
    #[arg(long)]
    x0: Option<f64>,
    /// Output directory for sweep.csv, cost_vs_m.svg and cost_vs_l.svg.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Config file; CLI flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct LowerboundArgs {
    /// Smoothness parameter of the game instance.
    #[arg(long = "M", default_value_t = 50.0)]
    m: f64,
    /// First-step gradient magnitude (must exceed 3) [default: 2M/5].
    #[arg(long)]
    grad: Option<f64>,
    /// First-action sweep grid size.
    #[arg(long = "grid-n", default_value_t = 10001)]
    grid_n: usize,
    /// Lipschitz constant for the stale-information game.
    #[arg(long = "stale-L", default_value_t = 5.0)]
    stale_l: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Smaller sample counts for a faster pass.
    #[arg(long)]
    quick: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Sweep CSV produced by the sweep subcommand.
    #[arg(long)]
    csv: PathBuf,
    /// Chart x-axis: M or L.
    #[arg(long = "x-axis", default_value = "M")]
    x_axis: String,
    /// Comma-separated settings to draw.
    #[arg(long, default_value = "fresh,stale,noisy")]
    series: String,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

/// Entry point used by `main` and by the integration tests. Returns the
/// process exit code.
pub fn cli_main<I>(argv: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let body = || -> Result<i32> {
        match cli.cmd {
            Cmd::Run(args) => cmd_run(args),
            Cmd::Sweep(args) => cmd_sweep(args),
            Cmd::Lowerbound(args) => cmd_lowerbound(args),
            Cmd::Verify(args) => cmd_verify(args),
            Cmd::Plot(args) => cmd_plot(args),
        }
    };
    let outcome = match thread_cap() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(body),
            Err(e) => {
                eprintln!("error: cannot build {n}-thread pool: {e}");
                return 1;
            }
        },
        None => body(),
    };
    match outcome {
        Ok(code) => code,
        Err(e @ (Error::Parameter(_) | Error::Config(_))) => {
            eprintln!("error: {e}");
            eprintln!("run `oco-frugal --help` for usage");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn thread_cap() -> Option<usize> {
    let raw = std::env::var("OCO_FRUGAL_THREADS").ok()?;
    match raw.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Some(n),
        _ => {
            eprintln!("warning: ignoring OCO_FRUGAL_THREADS={raw:?} (need an integer >= 1)");
            None
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?.run.unwrap_or_default(),
        None => Default::default(),
    };
    let setting = Setting::parse(
        args.setting
            .or(file.setting)
            .as_deref()
            .unwrap_or("fresh"),
    )?;
    let m = args.m.or(file.m).unwrap_or(10.0);
    let alpha = args.alpha.or(file.alpha).unwrap_or(0.5);
    let t = args.t.or(file.t).unwrap_or(100);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let grid_n = args.grid_n.or(file.opt_grid_n).unwrap_or(2001);
    let mut sc = Scenario::new(setting, m, alpha, t, seed);
    sc.x0 = args.x0.or(file.x0).unwrap_or(0.0);
    if let Some(l) = args.l.or(file.l) {
        sc.l_param = l;
    }
    if let Some(g) = args.g {
        sc.g = g;
    }
    let report = run_scenario(&sc, None, grid_n);
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Parameter(format!("JSON encoding failed: {e}")))?
        );
        return Ok(if report.failure.is_none() && report.row.checks_passed { 0 } else { 1 });
    }
    let row = &report.row;
    println!("setting        {}", row.setting.name());
    println!("M (policy)     {}", row.m);
    println!("L (policy)     {}", row.l);
    if setting.is_noisy() {
        println!("G              {}", row.g);
        println!("alpha          {}", row.alpha);
    }
    println!("T              {}", row.t);
    println!("seed           {}", row.seed);
    if let Some(failure) = &report.failure {
        println!("run FAILED     {failure}");
        return Ok(1);
    }
    println!("total cost     {:.6}", row.total_cost);
    println!(
        "offline opt    {:.6} (+/- {:.2e}, grid n = {})",
        row.opt_cost, row.opt_error_bound, grid_n
    );
    println!(
        "ratio          {:.6} (certified floor {:.6})",
        row.ratio, row.ratio_lo
    );
    if row.theorem_bound.is_finite() {
        println!("ratio bound    {:.6}", row.theorem_bound);
    } else {
        println!("ratio bound    none (vacuous or not covered for this setting)");
    }
    if report.clip_count > 0 {
        println!("noise clips    {}", report.clip_count);
    }
    if report.clamp_count > 0 {
        println!("boundary hits  {}", report.clamp_count);
    }
    for check in &report.reports {
        println!(
            "check {:<30} {} (worst slack {:+.3e}, tol {:.1e})",
            check.name,
            if check.pass() { "PASS" } else { "FAIL" },
            check.worst_slack,
            check.tolerance
        );
        for note in &check.notes {
            println!("      note: {note}");
        }
    }
    Ok(if report.row.checks_passed { 0 } else { 1 })
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?.sweep,
        None => None,
    };
    let overrides = SweepOverrides {
        settings: args.settings,
        m: args.m,
        l: args.l,
        l_axis_m: args.l_axis_m,
        t: args.t,
        seeds: args.seeds,
        seed_start: args.seed_start,
        opt_grid_n: args.grid_n,
        alpha: args.alpha,
        x0: args.x0,
    };
    let config = resolve_sweep(&overrides, file.as_ref())?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let rows = sweep(&config)?;
    let failed = rows.iter().filter(|r| !r.checks_passed).count();

    let csv_path = args.out.join("sweep.csv");
    emit_csv(&rows, &csv_path)?;
    println!("wrote {} rows to {}", rows.len(), csv_path.display());

    let m_chart = args.out.join("cost_vs_m.svg");
    emit_svg_linechart(
        &rows,
        SweepAxis::M,
        &config.settings,
        "mean total cost vs M",
        &m_chart,
    )?;
    println!("wrote {}", m_chart.display());

    // The L chart only makes sense for settings whose policy consumes L,
    // over the fixed-M rows.
    let l_series: Vec<Setting> = config
        .settings
        .iter()
        .copied()
        .filter(|s| *s != Setting::Fresh)
        .collect();
    if !config.l_values.is_empty() && !l_series.is_empty() {
        let l_rows: Vec<_> = rows
            .iter()
            .filter(|r| r.m == config.l_axis_m)
            .cloned()
            .collect();
        let l_chart = args.out.join("cost_vs_l.svg");
        emit_svg_linechart(
            &l_rows,
            SweepAxis::L,
            &l_series,
            &format!("mean total cost vs L (M = {})", config.l_axis_m),
            &l_chart,
        )?;
        println!("wrote {}", l_chart.display());
    }
    if failed > 0 {
        println!("{failed} of {} cells failed their checks", rows.len());
        Ok(1)
    } else {
        println!("all {} cells passed their checks", rows.len());
        Ok(0)
    }
}

fn cmd_lowerbound(args: LowerboundArgs) -> Result<i32> {
    let grad = args.grad.unwrap_or(2.0 * args.m / 5.0);
    let inst = GameInstance::new(grad, args.m)?;
    println!(
        "first-step game: M = {}, first gradient magnitude = {}",
        inst.m, inst.grad_mag
    );
    println!(
        "indistinguishable responses at x0 = 0: value {:.6}, derivative {:.6}",
        inst.functions[0].eval(0.0),
        inst.functions[0].grad(0.0)
    );

    let action_sweep = sweep_first_action(&inst, args.grid_n)?;
    let exact = per_interval_exact_minima(&inst);
    println!(
        "per-interval worst-case ratio minima (grid n = {}):",
        args.grid_n
    );
    println!("  interval                          grid min     exact min");
    let labels = [
        format!("1: x1 <= {:.4}", inst.boundaries[0]),
        format!("2: {:.4} < x1 <= {:.4}", inst.boundaries[0], inst.boundaries[1]),
        format!("3: {:.4} < x1 <= {:.4}", inst.boundaries[1], inst.boundaries[2]),
        format!("4: x1 > {:.4}", inst.boundaries[2]),
    ];
    for i in 0..4 {
        println!(
            "  {:<31} {:>12.6}  {:>12.6}",
            labels[i], action_sweep.per_interval_min[i], exact[i]
        );
    }
    println!(
        "min-max ratio {:.6} at x1 = {:.6}",
        action_sweep.min_max_ratio, action_sweep.argmin_x1
    );
    let scaling_floor = 2.0 / 135.0 * inst.m;
    let floor_holds = action_sweep.min_max_ratio >= scaling_floor;
    println!(
        "linear-growth floor (2/135)*M = {:.6}: {}",
        scaling_floor,
        if floor_holds { "holds" } else { "VIOLATED" }
    );

    // What the balance policy itself does against this adversary.
    let m = inst.m;
    let outcome = play_game(
        |obs| {
            let delta = delta_fresh(m, FreshDeltaMode::ClosedForm).expect("m > 0");
            aobd_step(obs, 0.0, delta).expect("nonzero observed gradient")
        },
        args.m,
        args.grad,
    )?;
    println!(
        "balance policy first action {:.6} -> response g{}, ratio {:.6}",
        outcome.x1, outcome.chosen, outcome.ratio
    );

    println!();
    println!("stale-information game (L = {}):", args.stale_l);
    let stay = stale_lb_game(0.0, args.stale_l)?;
    println!(
        "  stay at 0:   cost {:.6}, offline {:.6}, ratio {:.6}",
        stay.alg_cost, stay.opt_cost, stay.ratio
    );
    let step = stale_lb_game(0.5, args.stale_l)?;
    println!(
        "  move to 0.5: cost {:.6}, offline {:.6}, ratio {}",
        step.alg_cost,
        step.opt_cost,
        if step.ratio.is_finite() {
            format!("{:.6}", step.ratio)
        } else {
            "inf".into()
        }
    );
    println!("  any blind first step is punished: ratio >= min over responses is L or worse");

    Ok(if floor_holds { 0 } else { 1 })
}

struct VerifyTally {
    failures: usize,
}

impl VerifyTally {
    fn group(&mut self, name: &str, ok: bool, detail: &str) {
        println!(
            "{} {name}{}{detail}",
            if ok { "OK  " } else { "FAIL" },
            if detail.is_empty() { "" } else { ": " }
        );
        if !ok {
            self.failures += 1;
        }
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let (n_arrays, n_specs) = if args.quick { (50, 20) } else { (200, 100) };
    let mut tally = VerifyTally { failures: 0 };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7e57_5eed);

    // Function validators over the standard suite and the game functions.
    let mut ok = true;
    for &scale in &[1.0, 5.0, 25.0] {
        for f in standard_suite(scale)? {
            let p = f.params();
            ok &= validate_assumptions(&f, p.smoothness, p.lipschitz).all_pass();
        }
    }
    let inst = GameInstance::new(20.0, 50.0)?;
    for f in &inst.functions {
        let p = f.params();
        ok &= validate_assumptions(f, p.smoothness, p.lipschitz).all_pass();
    }
    tally.group("function validators (suite + game responses)", ok, "");

    // Min-plus oracle equivalence against brute force.
    let mut ok = true;
    for _ in 0..n_arrays {
        let n = rng.gen_range(2..=64usize);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
        let h = rng.gen_range(0.01..1.0);
        let fast = minplus_linear(&values, h);
        for i in 0..n {
            let brute = (0..n)
                .map(|j| values[j] + h * (i as f64 - j as f64).abs())
                .fold(f64::INFINITY, f64::min);
            ok &= fast[i] == brute;
        }
    }
    tally.group(
        &format!("min-plus transform vs brute force ({n_arrays} random arrays)"),
        ok,
        "",
    );

    // One-step offline solver vs the grid baseline.
    let mut ok = true;
    for _ in 0..n_specs {
        let a = rng.gen_range(0.5..30.0);
        let c = rng.gen_range(0.0..1.0);
        let x0 = rng.gen_range(0.0..1.0);
        let f = make_quadratic(a, c)?;
        let (exact_cost, _) = opt_single_step(&f, x0);
        let dp = opt_dp(std::slice::from_ref(&f), x0, 4001)?;
        ok &= (dp.cost - exact_cost).abs() <= dp.error_bound + 1e-12;
    }
    tally.group(
        &format!("one-step solver vs grid baseline ({n_specs} random quadratics)"),
        ok,
        "",
    );

    // Balanced-point residuals.
    let mut ok = true;
    for _ in 0..n_specs {
        let a = rng.gen_range(0.5..30.0);
        let c = rng.gen_range(0.0..1.0);
        let f = make_quadratic(a, c)?;
        let x_prev = rng.gen_range(0.0..1.0);
        let delta = rng.gen_range(0.2..3.0);
        if f.eval(x_prev) <= 0.0 {
            continue;
        }
        if let Ok(x_star) = exact_balanced_point(&f, x_prev, delta) {
            let residual = (f.eval(x_star) - delta * (x_star - x_prev).abs()).abs();
            ok &= residual <= 1e-10;
        }
    }
    tally.group("balanced-point residuals <= 1e-10", ok, "");

    // One scenario per setting with its full check stack.
    let mut details = Vec::new();
    let mut ok = true;
    for setting in [
        Setting::Fresh,
        Setting::Stale,
        Setting::NoisyFresh,
        Setting::NoisyStale,
    ] {
        let sc = Scenario::new(setting, 10.0, 0.25, 60, 17);
        let report = run_scenario(&sc, None, 1201);
        let pass = report.failure.is_none() && report.row.checks_passed;
        if !pass {
            details.push(format!(
                "{} failed{}",
                setting.name(),
                report
                    .failure
                    .map(|f| format!(" ({f})"))
                    .unwrap_or_default()
            ));
        }
        ok &= pass;
    }
    tally.group(
        "per-setting sandwich/identity/ratio checks",
        ok,
        &details.join("; "),
    );

    // Certificate behavior: the theorem rho passes, rho = 1 must not.
    let fseq = scenario_standard(5.0, 40, 3)?;
    let policy = DeltaPolicy::FreshClosedForm { m: 10.0 };
    let traj = run(&fseq, Setting::Fresh, &policy, &NoiseModel::none(), 0.0, 3)?;
    let opt = opt_dp(&fseq, 0.0, 1201)?;
    let delta = delta_fresh(10.0, FreshDeltaMode::ClosedForm)?;
    let gamma = delta + 6.0;
    let honest =
        check_potential_certificate(&traj, &opt, gamma, bound_fresh_at(10.0, delta)?, 0.0);
    let too_tight = check_potential_certificate(&traj, &opt, gamma, 1.0, 0.0);
    tally.group(
        "certificate accepts theorem rho and rejects rho = 1",
        honest.pass() && !too_tight.pass(),
        "",
    );

    // Paired stale consistency at matching delta.
    let l = suite_lipschitz(5.0);
    let stale_policy = DeltaPolicy::StaleCorrected { m: 10.0, l };
    let fresh_at_stale_delta =
        run(&fseq, Setting::Fresh, &stale_policy, &NoiseModel::none(), 0.0, 3)?;
    let stale_traj = run(&fseq, Setting::Stale, &stale_policy, &NoiseModel::none(), 0.0, 3)?;
    let relation = check_stale_relation(&fresh_at_stale_delta, &stale_traj, &fseq, l);
    tally.group("stale shift identity and cost relation", relation.pass(), "");

    // The per-step lemma at its native tolerance.
    let sandwich = check_fresh_sandwich(&traj, &fseq, delta, 10.0);
    tally.group("fresh per-step sandwich", sandwich.pass(), "");

    // Noise-free noisy run collapses to the exact-gradient layers.
    let noisy_policy = DeltaPolicy::Noisy { g: l, l };
    let noisy_traj = run(
        &fseq,
        Setting::NoisyFresh,
        &noisy_policy,
        &NoiseModel::uniform(0.0),
        0.0,
        3,
    )?;
    let noisy = check_noisy_sandwich(&noisy_traj, &fseq, 0.0, l, l, 10.0);
    tally.group("noisy sandwich at alpha = 0", noisy.pass(), "");

    if tally.failures == 0 {
        println!("verify: all groups passed");
        Ok(0)
    } else {
        println!("verify: {} group(s) failed", tally.failures);
        Ok(1)
    }
}

fn cmd_plot(args: PlotArgs) -> Result<i32> {
    let rows = parse_csv(&args.csv)?;
    let axis = match args.x_axis.trim() {
        "M" | "m" => SweepAxis::M,
        "L" | "l" => SweepAxis::L,
        other => {
            return Err(Error::Parameter(format!(
                "x-axis must be M or L, got `{other}`"
            )))
        }
    };
    let series = parse_settings(&args.series)?;
    let title = args
        .title
        .unwrap_or_else(|| format!("mean total cost vs {}", axis.name()));
    emit_svg_linechart(&rows, axis, &series, &title, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(0)
}
