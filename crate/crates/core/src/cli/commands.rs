//! Subcommand implementations.
//!
//! `check` prints the assumption report; `solve` writes the exposure and
//! policy surfaces; `simulate` writes factor paths; `policy-paths`
//! evaluates the solved policy along simulated paths next to the
//! constant-factor reference curve; `verify` runs the Monte-Carlo
//! verification suite; `reproduce --figure k` runs the full pipeline for
//! the matching preset at the production grid sizes and emits CSV + SVG.
//!
//! All validation happens before any computation or file output, and
//! files are written atomically (temp + rename).

use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};

use crate::cli::config::{parse_config, RunConfig};
use crate::cli::svg::{emit_svg, PlotStyle, Series};
use crate::error::{Error, Result};
use crate::factor::{simulate_paths, PathBundle, RngSpec};
use crate::market::{exposure_to_strategy, ModelSpec};
use crate::presets::PresetId;
use crate::solver::{
    policy_surface, solve_ode_constant, solve_pde, PolicySurface, SolverConfig, ValueSurface,
};
use crate::verify::{
    cash_lower_bound_check, comparison_check, martingale_check, wealth_representation_check,
    CrashRule, PolicyRef, VerificationReport, DEFAULT_K_SE,
};

#[derive(Parser, Debug)]
#[command(
    name = "wcinvest",
    version,
    about = "Crash-robust optimal investment: exposure PDE solver, exact factor simulation, Monte-Carlo verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Model preset: a, b, c, d or ko
    #[arg(long)]
    model: Option<String>,
    /// Config file (flat `key = value` lines, `#` comments)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Master seed for simulation subcommands
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the model assumption report (Feller index, thresholds, flags)
    Check {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve the exposure PDE; write surface.csv and policy.csv
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        n_t: Option<usize>,
        #[arg(long)]
        n_x: Option<usize>,
    },
    /// Simulate factor paths; write paths.csv
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Evaluate the solved policy along simulated paths; write policy_paths.csv
    PolicyPaths {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        n_t: Option<usize>,
        #[arg(long)]
        n_x: Option<usize>,
    },
    /// Run the verification suite; write per-check CSVs and a summary
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Monte-Carlo paths per check
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
    },
    /// Reproduce figure 1..7 end to end (CSV + SVG)
    Reproduce {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        figure: u32,
    },
}

/// Entry point shared by the binary and the tests; returns the exit status.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Check { common } => cmd_check(&resolve(&common)?),
        Command::Solve { common, n_t, n_x } => {
            let mut cfg = resolve(&common)?;
            if let Some(v) = n_t {
                cfg.solver.n_t = v;
            }
            if let Some(v) = n_x {
                cfg.solver.n_x = v;
            }
            cfg.solver.validate()?;
            cmd_solve(&cfg)
        }
        Command::Simulate { common, paths, steps } => {
            let mut cfg = resolve(&common)?;
            if let Some(v) = paths {
                cfg.sim.n_paths = v;
            }
            if let Some(v) = steps {
                cfg.sim.n_steps = v;
            }
            cmd_simulate(&cfg)
        }
        Command::PolicyPaths { common, paths, steps, n_t, n_x } => {
            let mut cfg = resolve(&common)?;
            if let Some(v) = paths {
                cfg.sim.n_paths = v;
            }
            if let Some(v) = steps {
                cfg.sim.n_steps = v;
            }
            if let Some(v) = n_t {
                cfg.solver.n_t = v;
            }
            if let Some(v) = n_x {
                cfg.solver.n_x = v;
            }
            cfg.solver.validate()?;
            cmd_policy_paths(&cfg)
        }
        Command::Verify { common, paths } => {
            let mut cfg = resolve(&common)?;
            cfg.sim.n_paths = paths;
            cmd_verify(&cfg)
        }
        Command::Reproduce { common, figure } => {
            let seed = common.seed.unwrap_or(42);
            cmd_reproduce(figure, seed, &common.out)
        }
    }
}

fn resolve(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => {
            let name = common.model.as_deref().ok_or_else(|| Error::Config {
                line: 0,
                msg: "model required (pass --model or --config)".into(),
            })?;
            parse_config(&format!("model = {name}\n"))?
        }
    };
    if common.config.is_some() {
        if let Some(name) = common.model.as_deref() {
            let id = PresetId::parse(name)?;
            cfg.model = crate::presets::preset(id);
            cfg.preset = Some(id);
        }
    }
    if let Some(seed) = common.seed {
        cfg.sim.seed = seed;
    }
    if common.out != Path::new(".") {
        cfg.out_dir = common.out.clone();
    }
    cfg.model.validate()?;
    Ok(cfg)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn cmd_check(cfg: &RunConfig) -> Result<i32> {
    let rep = cfg.model.check_conditions();
    if let Some(p) = cfg.preset {
        println!("model: {p}");
    }
    match rep.feller_index {
        Some(v) => println!("feller_index = {v:.4}"),
        None => println!("feller_index = n/a (no CIR factor)"),
    }
    match rep.exp_moment_threshold {
        Some(v) => println!("exp_moment_threshold = {v:.4}"),
        None => println!("exp_moment_threshold = n/a"),
    }
    println!("admissible_cap = {:.4}", rep.admissible_cap);
    if let Some(flag) = rep.alpha_exceeds_cap {
        println!("alpha_exceeds_cap = {flag}");
    }
    println!("levy_below_woc = {}", rep.levy_below_woc);
    println!("infinite_activity = {}", rep.infinite_activity);
    Ok(0)
}

fn cmd_solve(cfg: &RunConfig) -> Result<i32> {
    let surface = solve_pde(&cfg.model, &cfg.solver)?;
    let policy = policy_surface(&surface, cfg.model.crash.l_woc);
    let mut buf = Vec::new();
    surface.write_csv(&mut buf)?;
    write_atomic(&cfg.out_dir.join("surface.csv"), &buf)?;
    buf.clear();
    policy.write_csv(&mut buf)?;
    write_atomic(&cfg.out_dir.join("policy.csv"), &buf)?;
    let (v0, _) = surface.value_at(0.0, cfg.model.factor.z0);
    println!(
        "solved {}x{} grid on [{:.4}, {:.4}]: v(0, z0) = {:.6}, pi(0, z0) = {:.6}",
        cfg.solver.n_t,
        cfg.solver.n_x,
        surface.grid.x_min,
        surface.grid.x_max,
        v0,
        exposure_to_strategy(v0, cfg.model.crash.l_woc)
    );
    Ok(0)
}

fn cmd_simulate(cfg: &RunConfig) -> Result<i32> {
    let bundle = simulate_paths(
        &cfg.model.factor,
        cfg.sim.n_paths,
        cfg.sim.n_steps,
        cfg.model.horizon,
        &RngSpec::new(cfg.sim.seed),
    )?;
    let mut buf = Vec::new();
    bundle.write_csv(&mut buf)?;
    write_atomic(&cfg.out_dir.join("paths.csv"), &buf)?;
    println!(
        "simulated {} paths x {} steps over [0, {}] (seed {})",
        cfg.sim.n_paths, cfg.sim.n_steps, cfg.model.horizon, cfg.sim.seed
    );
    Ok(0)
}

/// Policy evaluated along each simulated path.
fn policy_along_paths(policy: &PolicySurface, bundle: &PathBundle) -> Vec<Vec<f64>> {
    (0..bundle.n_paths())
        .map(|p| {
            bundle
                .times
                .iter()
                .zip(bundle.path(p).iter())
                .map(|(&t, &z)| policy.eval(t, z).0)
                .collect()
        })
        .collect()
}

fn reference_curve(model: &ModelSpec, n_t: usize) -> Result<Vec<f64>> {
    let v = solve_ode_constant(model, model.factor.theta, n_t)?;
    Ok(v.into_iter().map(|y| exposure_to_strategy(y, model.crash.l_woc)).collect())
}

fn cmd_policy_paths(cfg: &RunConfig) -> Result<i32> {
    let surface = solve_pde(&cfg.model, &cfg.solver)?;
    let policy = policy_surface(&surface, cfg.model.crash.l_woc);
    let bundle = simulate_paths(
        &cfg.model.factor,
        cfg.sim.n_paths,
        cfg.sim.n_steps,
        cfg.model.horizon,
        &RngSpec::new(cfg.sim.seed),
    )?;
    let curves = policy_along_paths(&policy, &bundle);
    let reference = reference_curve(&cfg.model, cfg.sim.n_steps)?;

    let mut buf = String::new();
    buf.push('t');
    for p in 0..bundle.n_paths() {
        buf.push_str(&format!(",pi_path{p}"));
    }
    buf.push_str(",reference\n");
    for (k, &t) in bundle.times.iter().enumerate() {
        buf.push_str(&format!("{t:.10}"));
        for curve in &curves {
            buf.push_str(&format!(",{:.12e}", curve[k]));
        }
        buf.push_str(&format!(",{:.12e}\n", reference[k]));
    }
    write_atomic(&cfg.out_dir.join("policy_paths.csv"), buf.as_bytes())?;
    println!("wrote policy_paths.csv ({} paths, seed {})", bundle.n_paths(), cfg.sim.seed);
    Ok(0)
}

fn cmd_verify(cfg: &RunConfig) -> Result<i32> {
    let model = &cfg.model;
    let n_paths = cfg.sim.n_paths.max(100);
    let n_steps = cfg.sim.n_steps;
    let seed = RngSpec::new(cfg.sim.seed);
    let mut reports: Vec<VerificationReport> = Vec::new();

    // martingale of Z under the reference indifference policy, with the
    // coefficients frozen at theta
    let frozen = model.frozen_at(model.factor.theta);
    let v_ode = solve_ode_constant(&frozen, model.factor.theta, n_steps)?;
    let times: Vec<f64> =
        (0..=n_steps).map(|i| model.horizon * i as f64 / n_steps as f64).collect();
    let pi_ode: Vec<f64> =
        v_ode.iter().map(|&y| exposure_to_strategy(y, model.crash.l_woc)).collect();
    let frozen_paths =
        simulate_paths(&frozen.factor, n_paths.min(10_000), n_steps, model.horizon, &seed)?;
    let checkpoints: Vec<f64> = (0..=10).map(|i| model.horizon * i as f64 / 10.0).collect();
    reports.push(martingale_check(
        &frozen,
        &PolicyRef::Curve(&times, &pi_ode),
        &frozen_paths,
        &checkpoints,
        DEFAULT_K_SE,
    )?);

    // comparison: the frozen generator against a small uniform lift
    let x0 = model.factor.theta;
    reports.push(comparison_check(
        &|y| frozen.generator(x0, y),
        &|y| Ok(frozen.generator(x0, y)? + 0.01),
        model.horizon,
        n_steps.max(100),
        &(0..=60).map(|i| 10.0 * i as f64 / 60.0).collect::<Vec<_>>(),
    )?);

    // PDE policy, cash lower bound and the wealth representation on the
    // full stochastic-factor model
    let surface = solve_pde(model, &cfg.solver)?;
    let paths = simulate_paths(&model.factor, n_paths, n_steps, model.horizon, &seed)?;
    reports.push(cash_lower_bound_check(model, &surface, &paths, DEFAULT_K_SE)?);

    let policy = policy_surface(&surface, model.crash.l_woc);
    reports.push(wealth_representation_check(
        model,
        &PolicyRef::Surface(&policy),
        &PolicyRef::Merton,
        CrashRule::At(0.5 * model.horizon),
        n_paths,
        n_steps,
        &seed,
        DEFAULT_K_SE,
    )?);

    let mut summary = String::new();
    for r in &reports {
        summary.push_str(&r.summary());
        let mut buf = Vec::new();
        r.write_csv(&mut buf)?;
        write_atomic(&cfg.out_dir.join(format!("verify_{}.csv", r.check)), &buf)?;
    }
    write_atomic(&cfg.out_dir.join("verify_summary.txt"), summary.as_bytes())?;
    print!("{summary}");
    Ok(if reports.iter().all(|r| r.passed) { 0 } else { 1 })
}

struct FigureSpec {
    preset: PresetId,
    /// Plot the post-crash optimal allocation along paths.
    merton_paths: bool,
    /// Plot the solved policy along paths.
    policy_paths: bool,
    /// Dash the policy curves (overlay style of the combined plot).
    dashed_policy: bool,
    /// Include the constant-factor reference curve.
    reference: bool,
    title: &'static str,
}

fn figure_spec(k: u32) -> Result<FigureSpec> {
    Ok(match k {
        1 => FigureSpec {
            preset: PresetId::A,
            merton_paths: false,
            policy_paths: true,
            dashed_policy: false,
            reference: true,
            title: "strategy samples, infinite-activity jumps",
        },
        2 => FigureSpec {
            preset: PresetId::B,
            merton_paths: false,
            policy_paths: true,
            dashed_policy: false,
            reference: true,
            title: "strategy samples, constant-size jumps",
        },
        3 => FigureSpec {
            preset: PresetId::C,
            merton_paths: false,
            policy_paths: true,
            dashed_policy: false,
            reference: true,
            title: "strategy samples, no jumps",
        },
        4 => FigureSpec {
            preset: PresetId::D,
            merton_paths: true,
            policy_paths: true,
            dashed_policy: true,
            reference: false,
            title: "post-crash optimum and strategy, constant excess return",
        },
        5 => FigureSpec {
            preset: PresetId::D,
            merton_paths: false,
            policy_paths: true,
            dashed_policy: false,
            reference: true,
            title: "strategy samples, constant excess return",
        },
        6 => FigureSpec {
            preset: PresetId::Ko,
            merton_paths: true,
            policy_paths: false,
            dashed_policy: false,
            reference: false,
            title: "post-crash optimum, stochastic excess return",
        },
        7 => FigureSpec {
            preset: PresetId::Ko,
            merton_paths: false,
            policy_paths: true,
            dashed_policy: false,
            reference: true,
            title: "strategy samples, stochastic excess return",
        },
        other => {
            return Err(Error::InvalidModel(format!("figure must lie in 1..=7, got {other}")))
        }
    })
}

fn cmd_reproduce(figure: u32, seed: u64, out_dir: &Path) -> Result<i32> {
    let spec = figure_spec(figure)?;
    let model = crate::presets::preset(spec.preset);
    let solver = SolverConfig::default(); // production sizes: 1000 x 200
    let n_steps = solver.n_t;
    let n_paths = 2;

    let surface: Option<ValueSurface> =
        if spec.policy_paths { Some(solve_pde(&model, &solver)?) } else { None };
    let bundle =
        simulate_paths(&model.factor, n_paths, n_steps, model.horizon, &RngSpec::new(seed))?;

    let mut columns: Vec<(String, Vec<f64>, bool)> = Vec::new();
    if spec.merton_paths {
        for p in 0..n_paths {
            let curve: Vec<f64> = bundle
                .path(p)
                .iter()
                .map(|&z| model.merton(z.max(1e-12)).unwrap_or(f64::NAN))
                .collect();
            columns.push((format!("merton_path{p}"), curve, false));
        }
    }
    if let Some(surface) = &surface {
        let policy = policy_surface(surface, model.crash.l_woc);
        for (p, curve) in policy_along_paths(&policy, &bundle).into_iter().enumerate() {
            columns.push((format!("pi_path{p}"), curve, spec.dashed_policy));
        }
    }
    if spec.reference {
        columns.push(("reference".to_string(), reference_curve(&model, n_steps)?, true));
    }

    let mut csv = String::from("t");
    for (name, _, _) in &columns {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push('\n');
    for (k, &t) in bundle.times.iter().enumerate() {
        csv.push_str(&format!("{t:.10}"));
        for (_, curve, _) in &columns {
            csv.push_str(&format!(",{:.12e}", curve[k]));
        }
        csv.push('\n');
    }
    write_atomic(&out_dir.join(format!("fig{figure}.csv")), csv.as_bytes())?;

    let series: Vec<Series> = columns
        .iter()
        .map(|(name, curve, dashed)| Series {
            name: name.clone(),
            xs: bundle.times.clone(),
            ys: curve.clone(),
            dashed: *dashed,
        })
        .collect();
    let style = PlotStyle {
        title: format!("figure {figure}: {}", spec.title),
        x_label: "t".into(),
        y_label: "allocation".into(),
        ..Default::default()
    };
    let svg = emit_svg(&series, &style)?;
    write_atomic(&out_dir.join(format!("fig{figure}.svg")), svg.as_bytes())?;
    println!("wrote fig{figure}.csv and fig{figure}.svg (preset {}, seed {seed})", spec.preset);
    Ok(0)
}
