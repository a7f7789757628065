use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use conic_glimm::coeffs::{coefficients_for, limits_for, stability_margin};
use conic_glimm::diagnostics::{
    asymptotic_deviation, asymptotic_state, background_limit_gaps, default_test_functions, entropy_audit, loglog_slope,
    weak_form_residuals,
};
use conic_glimm::functional::{audit, displacement_constant, sigma_bounds_from_constant};
use conic_glimm::io::{self, CoefficientRow, ExperimentConfig, RunMode};
use conic_glimm::scheme::{build_grid, discretize_pressure, Scheme, Trajectory};
use conic_glimm::selfsim::{background_solution, BackgroundSolution};
use conic_glimm::{Error, FlowParams};

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_VIOLATION: u8 = 4;

/// Random-choice solver for supersonic flow past a curved cone with
/// prescribed surface pressure.
#[derive(Parser, Debug)]
#[command(name = "conic-glimm", version)]
struct Cli {
    /// `key = value` experiment file.
    config: PathBuf,
    /// Exit 4 when the functional audit reports a violation, and 2 when no
    /// admissible weights exist.
    #[arg(long)]
    strict: bool,
    /// Write gnuplot scripts next to the CSV output.
    #[arg(long)]
    emit_plots: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error that maps to a specific exit code.
#[derive(Debug)]
struct Exit(u8, anyhow::Error);

type Outcome<T> = std::result::Result<T, Exit>;

fn config_err(e: impl Into<anyhow::Error>) -> Exit {
    Exit(EXIT_CONFIG, e.into())
}

struct Ctx {
    cfg: ExperimentConfig,
    base: PathBuf,
    out: PathBuf,
    strict: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn execute(cli: Cli) -> Outcome<u8> {
    let text = fs::read_to_string(&cli.config)
        .with_context(|| format!("reading {}", cli.config.display()))
        .map_err(config_err)?;
    let mut cfg =
        io::parse_config(&text).with_context(|| format!("in {}", cli.config.display())).map_err(config_err)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    let base = cli.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display())).map_err(|e| Exit(1, e))?;
    fs::write(out.join("config.effective"), io::emit_config(&cfg)).map_err(|e| Exit(1, e.into()))?;
    let ctx = Ctx { cfg, base, out, strict: cli.strict };
    let code = match ctx.cfg.mode {
        RunMode::Run => run_mode(&ctx)?,
        RunMode::Refine => refine_mode(&ctx)?,
        RunMode::SweepMach => sweep_mode(&ctx)?,
        RunMode::Coeffs => coeffs_mode(&ctx)?,
        RunMode::Background => background_mode(&ctx)?,
    };
    if cli.emit_plots {
        io::write_plots(&ctx.out, ctx.cfg.mode).map_err(|e| Exit(1, e.into()))?;
    }
    Ok(code)
}

fn output<T>(r: conic_glimm::Result<T>) -> Outcome<T> {
    r.map_err(|e| Exit(1, e.into()))
}

fn setup(cfg: &ExperimentConfig) -> Outcome<(FlowParams, BackgroundSolution)> {
    let p = cfg.flow_params().map_err(config_err)?;
    let p0 = cfg.p0_value().map_err(config_err)?;
    let bg =
        background_solution(p0, &p).context("no background cone flow for this configuration").map_err(config_err)?;
    Ok((p, bg))
}

/// Runs with `dx` and `steps` replaced, keeping the partial trajectory on
/// failure.
fn simulate(
    ctx: &Ctx,
    p: FlowParams,
    bg: &BackgroundSolution,
    dx: Option<f64>,
    steps: usize,
) -> Outcome<(Trajectory, Option<Error>)> {
    let cfg = &ctx.cfg;
    let mut scfg = cfg.scheme_config(bg, &p).map_err(config_err)?;
    if let Some(d) = dx {
        scfg.dx = d;
    }
    scfg.steps = steps;
    let curve = cfg.pressure_curve(&ctx.base).map_err(config_err)?;
    let grid = build_grid(scfg.x0, scfg.dx, scfg.dsigma, bg, &p).map_err(config_err)?;
    let sched = discretize_pressure(&curve, &grid, steps, bg.p0).map_err(config_err)?;
    let scheme = Scheme::new(p, bg, &sched, scfg).map_err(config_err)?;
    Ok(scheme.run_partial(|_, _| {}))
}

fn run_mode(ctx: &Ctx) -> Outcome<u8> {
    let (cfg, out) = (&ctx.cfg, &ctx.out);
    let (p, bg) = setup(cfg)?;
    let (traj, err) = simulate(ctx, p, &bg, None, cfg.steps)?;
    let last = traj.rows.len() - 1;
    println!("rows {} (x = {:.6}), s0 = {:.6}, b0 = {:.6}", last + 1, traj.rows[last].x, bg.s0, bg.b0);

    output(io::write_boundary(&out.join("boundary.csv"), &traj))?;
    output(io::write_shock(&out.join("shock.csv"), &traj))?;
    output(io::write_waves(&out.join("waves.csv"), &traj))?;
    for (h, row) in traj.rows.iter().enumerate() {
        let every = cfg.field_every > 0 && h % cfg.field_every == 0;
        if every || h == 0 || h == last {
            output(io::write_field(&out.join(format!("field_{h}.csv")), row, &p))?;
        }
    }

    let ent = output(entropy_audit(&traj, &p))?;
    output(io::write_entropy(&out.join("entropy.csv"), &ent))?;
    println!(
        "entropy: {} shocks, min Lax margin {:.3e}, admissible {}",
        ent.shocks,
        ent.min_lax_margin,
        ent.admissible()
    );

    let p_end = traj.schedule.at(last);
    let asym = output(asymptotic_state(p_end, &p))?;
    let mut rows = Vec::with_capacity(traj.rows.len());
    for (h, r) in traj.rows.iter().enumerate() {
        let d = output(asymptotic_deviation(&traj, h, &asym, &p))?;
        rows.push((h, d, r.s - asym.s_inf, r.bprime - asym.b_prime_inf));
    }
    output(io::write_asymptotics(&out.join("asymptotics.csv"), &rows))?;

    let mut code = 0;
    let set = output(coefficients_for(&bg, &p))?;
    match io::weights_for(cfg, &set) {
        Ok(w) => {
            let bounds =
                sigma_bounds_from_constant(bg.s0, bg.b0, &traj.schedule, displacement_constant(&traj, bg.s0, bg.b0));
            let rep = audit(&traj, &w, bounds);
            output(io::write_functional(&out.join("functional.csv"), &rep))?;
            let f0 = rep.rows.first().map_or(0.0, |r| r.f);
            println!("functional: F(0) = {f0:.3e}, sum E = {:.3e}, violations {}", rep.total_e(), rep.violations());
            if rep.violations() > 0 && ctx.strict {
                code = EXIT_VIOLATION;
            }
        }
        Err(e) if ctx.strict => return Err(config_err(e)),
        Err(e) => eprintln!("warning: functional audit skipped: {e}"),
    }

    if let Some(e) = err {
        return Err(Exit(EXIT_DIVERGED, anyhow::Error::new(e).context("scheme stopped")));
    }
    Ok(code)
}

fn refine_mode(ctx: &Ctx) -> Outcome<u8> {
    let cfg = &ctx.cfg;
    let (p, bg) = setup(cfg)?;
    let dx0 = cfg.scheme_config(&bg, &p).map_err(config_err)?.dx;
    let tfs = default_test_functions(cfg.x0, cfg.steps as f64 * dx0, &bg);
    let mut rows = Vec::new();
    let mut norms = Vec::new();
    for l in 0..cfg.levels {
        let k = 1usize << l;
        let dx = dx0 / k as f64;
        let (traj, err) = simulate(ctx, p, &bg, Some(dx), cfg.steps * k)?;
        if let Some(e) = err {
            return Err(Exit(EXIT_DIVERGED, anyhow::Error::new(e).context(format!("level {l} stopped"))));
        }
        let res = output(weak_form_residuals(&traj, &tfs, &p))?;
        let mut norm: f64 = 0.0;
        for (i, r) in res.iter().enumerate() {
            let c = r.consistency();
            rows.push((dx, i, c.mass, c.curl));
            norm = norm.max(c.mass.abs()).max(c.curl.abs());
        }
        println!("dx = {dx:.4e}: max consistency residual {norm:.3e}");
        norms.push(norm);
    }
    for w in norms.windows(2) {
        println!("ratio {:.3}", w[0] / w[1]);
    }
    output(io::write_residuals(&ctx.out.join("residuals.csv"), &rows))?;
    Ok(0)
}

fn sweep_mode(ctx: &Ctx) -> Outcome<u8> {
    let cfg = &ctx.cfg;
    let mut rows = Vec::new();
    for &m in &cfg.mach_list {
        let c = ExperimentConfig { mach_inf: m, ..cfg.clone() };
        let (p, bg) = setup(&c)?;
        let gaps = output(background_limit_gaps(&bg, &p))?;
        let g: Vec<String> = gaps.iter().map(|x| format!("{x:.3e}")).collect();
        println!("M = {m:e}: gaps u, v, c2, s0, b0 = {}", g.join(", "));
        rows.push((m, gaps));
    }
    if rows.len() > 1 {
        let ms: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let gs: Vec<f64> = rows.iter().map(|r| r.1.iter().fold(0.0f64, |a, b| a.max(*b))).collect();
        println!("log-log slope of the largest gap: {:.3}", loglog_slope(&ms, &gs));
    }
    output(io::write_sweep(&ctx.out.join("sweep.csv"), &rows))?;
    Ok(0)
}

fn coeffs_mode(ctx: &Ctx) -> Outcome<u8> {
    let cfg = &ctx.cfg;
    let p0 = cfg.p0_value().map_err(config_err)?;
    let mut rows = Vec::new();
    for &m in &cfg.mach_list {
        let p = FlowParams::new(cfg.gamma, m).map_err(config_err)?;
        let (set, sm) = stability_margin(&p, p0).map_err(config_err)?;
        let lim = limits_for(&p, p0).map_err(config_err)?;
        println!("M = {m:e}: margin {:.6} (limit {:.6}), below 1: {}", sm.margin, sm.limit, sm.pass);
        for (name, value, limit) in io::coefficient_rows(&set, &lim, sm.margin) {
            rows.push(CoefficientRow { gamma: cfg.gamma, p0, mach_inf: m, name, value, limit });
        }
    }
    output(io::write_coefficients(&ctx.out.join("coefficients.csv"), &rows))?;
    Ok(0)
}

fn background_mode(ctx: &Ctx) -> Outcome<u8> {
    let (p, bg) = setup(&ctx.cfg)?;
    println!("p0 = {:.6e}, s0 = {:.8}, b0 = {:.8}", bg.p0, bg.s0, bg.b0);
    output(io::write_profile(&ctx.out.join("profile.csv"), &bg, &p))?;
    Ok(0)
}
