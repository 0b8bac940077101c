//! hjc — stationary solutions of h(x, u') + lambda(x) u = c on the circle.
//!
//! `solve` runs the three-leg fixed-point recipe (backward, forward, then
//! backward from the forward limit) and writes the solution profiles;
//! `critical` bisects for the critical level; `flow` integrates a single
//! contact characteristic; `reproduce-figure` cross-checks the grid pipeline
//! against traced-manifold assemblies over a list of levels; `compare` takes
//! the sup-distance of two profile CSVs.

mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{CommonOpts, RunConfig, SeedKind};
use contact_hj::characteristics::{
    assemble_solutions, rk4_integrate, CharacteristicsError, ContactState,
};
use contact_hj::critical::{default_bracket, estimate_critical_value, CriticalError};
use contact_hj::model::{make_grid, sup_dist, ContactModel, PeriodicGrid};
use contact_hj::semigroup::{
    residual_gate, residual_report, solve_fixed_point, Direction, SolveReport, SolveStatus,
    StepParams,
};
use output::Series;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hjc", version, about = "Contact Hamilton-Jacobi solver on the circle")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the three-leg fixed-point recipe and write solution profiles
    Solve(SolveArgs),
    /// Bisect for the critical level of the model
    Critical(CriticalArgs),
    /// Integrate one contact characteristic and dump t,x,p,u,H
    Flow(FlowArgs),
    /// Per-level panels cross-checking both pipelines
    ReproduceFigure(ReproArgs),
    /// Sup-distance between two x,u profile CSVs
    Compare(CompareArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    opts: CommonOpts,
}

#[derive(Args)]
struct CriticalArgs {
    #[command(flatten)]
    opts: CommonOpts,
    /// Lower bracket end (default: model-derived)
    #[arg(long, allow_negative_numbers = true)]
    c_lo: Option<f64>,
    /// Upper bracket end (default: model-derived)
    #[arg(long, allow_negative_numbers = true)]
    c_hi: Option<f64>,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    opts: CommonOpts,
    /// Initial position
    #[arg(long, allow_negative_numbers = true)]
    x0: f64,
    /// Initial momentum
    #[arg(long, allow_negative_numbers = true)]
    p0: f64,
    /// Initial value (default: projected onto the shell H = c)
    #[arg(long, allow_negative_numbers = true)]
    u0: Option<f64>,
}

#[derive(Args)]
struct ReproArgs {
    #[command(flatten)]
    opts: CommonOpts,
    /// Levels to panel; pass with no value for an empty list
    #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = vec![0.8, 1.0, 2.0])]
    c_list: Vec<f64>,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    let code = match &cli.cmd {
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Critical(a) => cmd_critical(a),
        Cmd::Flow(a) => cmd_flow(a),
        Cmd::ReproduceFigure(a) => cmd_reproduce(a),
        Cmd::Compare(a) => cmd_compare(a),
    };
    ExitCode::from(code)
}

fn fail_config(msg: &str) -> u8 {
    eprintln!("config error: {msg}");
    1
}

fn step_params(cfg: &RunConfig, m: &ContactModel, grid: &PeriodicGrid) -> StepParams {
    let mut sp = StepParams::for_model(m, grid, cfg.delta);
    sp.tol = cfg.tol;
    sp.t_max = cfg.t_max;
    sp
}

fn build_seed(cfg: &RunConfig, grid: &PeriodicGrid) -> Result<Vec<f64>, String> {
    match &cfg.seed {
        SeedKind::Zero => Ok(vec![0.0; grid.n]),
        SeedKind::ConstC => Ok(vec![cfg.c; grid.n]),
        SeedKind::File(p) => {
            let (xs, us) = output::read_profile_csv(p)?;
            output::resample_periodic(&xs, &us, grid)
        }
    }
}

fn status_str(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::Plateau => "plateau",
        SolveStatus::HorizonReached => "horizon",
        SolveStatus::Diverged => "diverged",
    }
}

/// A leg counts as usable when the iteration settled and its fixed point
/// actually satisfies the equation to within the scheme-error gate.
fn leg_ok(rep: &SolveReport, gate: f64) -> bool {
    matches!(rep.status, SolveStatus::Converged | SolveStatus::Plateau)
        && rep.pde_residual <= gate
}

fn leg_line(name: &str, rep: &SolveReport, gate: f64) -> String {
    format!(
        "leg={name} status={} iterations={} rate={:.3e} pde_residual={:.3e} gate={gate:.3e} \
         monotone_violations={} ok={}",
        status_str(rep.status),
        rep.iterations,
        rep.final_residual,
        rep.pde_residual,
        rep.monotone_violations,
        leg_ok(rep, gate),
    )
}

fn cmd_solve(args: &SolveArgs) -> u8 {
    let cfg = match args.opts.resolve() {
        Ok(c) => c,
        Err(e) => return fail_config(&e),
    };
    let m = cfg.build_model();
    let grid = match make_grid(cfg.n) {
        Ok(g) => g,
        Err(e) => return fail_config(&e.to_string()),
    };
    let sp = step_params(&cfg, &m, &grid);
    let seed = match build_seed(&cfg, &grid) {
        Ok(s) => s,
        Err(e) => return fail_config(&e),
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        return fail_config(&format!("out dir {}: {e}", cfg.out.display()));
    }
    let gate = residual_gate(&m, &grid, sp.delta);

    let up = match solve_fixed_point(&seed, &m, &grid, &sp, Direction::Backward) {
        Ok(r) => r,
        Err(e) => return fail_config(&e.to_string()),
    };
    let down = match solve_fixed_point(&seed, &m, &grid, &sp, Direction::Forward) {
        Ok(r) => r,
        Err(e) => return fail_config(&e.to_string()),
    };
    let bar = if leg_ok(&down, gate) {
        match solve_fixed_point(&down.solution, &m, &grid, &sp, Direction::Backward) {
            Ok(r) => Some(r),
            Err(e) => return fail_config(&e.to_string()),
        }
    } else {
        None
    };

    let mut report = String::new();
    let mut all_ok = true;
    let mut any_diverged = false;
    let mut plotted: Vec<(&str, &str, &[f64])> = Vec::new();
    let mut legs: Vec<(&str, &SolveReport)> =
        vec![("u_minus", &up), ("u_plus", &down)];
    if let Some(b) = &bar {
        legs.push(("u_bar_minus", b));
    }
    for (name, rep) in &legs {
        let line = leg_line(name, rep, gate);
        println!("{line}");
        let _ = writeln!(report, "{line}");
        any_diverged |= rep.status == SolveStatus::Diverged;
        if leg_ok(rep, gate) {
            let path = cfg.out.join(format!("{name}.csv"));
            if let Err(e) = output::write_profile_csv(&path, &grid.xs, &rep.solution) {
                return fail_config(&e);
            }
        } else {
            all_ok = false;
        }
    }
    if bar.is_none() {
        let line = "leg=u_bar_minus status=skipped (forward leg unusable)";
        println!("{line}");
        let _ = writeln!(report, "{line}");
        all_ok = false;
    }
    if let Err(e) = std::fs::write(cfg.out.join("residuals.txt"), &report) {
        return fail_config(&format!("write residuals.txt: {e}"));
    }
    let palette = ["#1f77b4", "#2ca02c", "#d62728"];
    for (i, (name, rep)) in legs.iter().enumerate() {
        if leg_ok(rep, gate) {
            plotted.push((name, palette[i % palette.len()], &rep.solution));
        }
    }
    if !plotted.is_empty() {
        let series: Vec<Series> = plotted
            .iter()
            .map(|(label, color, ys)| Series { label, color, ys })
            .collect();
        let title = format!("stationary profiles, c = {}", m.c);
        if let Err(e) = output::write_svg(&cfg.out.join("solutions.svg"), &title, &grid.xs, &series)
        {
            return fail_config(&e);
        }
    }
    if any_diverged || !all_ok {
        2
    } else {
        0
    }
}

fn cmd_critical(args: &CriticalArgs) -> u8 {
    let cfg = match args.opts.resolve() {
        Ok(c) => c,
        Err(e) => return fail_config(&e),
    };
    let m = cfg.build_model();
    let grid = match make_grid(cfg.n) {
        Ok(g) => g,
        Err(e) => return fail_config(&e.to_string()),
    };
    // --tol here means the bisection tolerance; the probes keep the strict
    // solver default internally
    let bis_tol = if args.opts.tol_explicit() { cfg.tol } else { 0.01 };
    let mut sp = StepParams::for_model(&m, &grid, cfg.delta);
    sp.t_max = cfg.horizon;
    let (dlo, dhi) = default_bracket(&m);
    let lo = args.c_lo.unwrap_or(dlo);
    let hi = args.c_hi.unwrap_or(dhi);
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        return fail_config(&format!("out dir {}: {e}", cfg.out.display()));
    }
    match estimate_critical_value(&m, lo, hi, bis_tol, &grid, &sp) {
        Ok(est) => {
            let c_hat = if est.c_hat.is_finite() {
                format!("{:.11e}", est.c_hat)
            } else {
                "-inf".to_string()
            };
            let line = format!(
                "c_hat={c_hat} c_lo={:.11e} c_hi={:.11e} tol={:.11e} probes={} horizon={} \
                 unbounded_below={}",
                est.c_lo, est.c_hi, est.tol, est.probes, est.horizon, est.unbounded_below
            );
            println!("{line}");
            if let Err(e) = std::fs::write(cfg.out.join("critical.txt"), format!("{line}\n")) {
                return fail_config(&format!("write critical.txt: {e}"));
            }
            0
        }
        Err(CriticalError::UpperEndDiverges { c_hi }) => {
            eprintln!("divergence at the upper bracket end c = {c_hi}; no critical level inside");
            2
        }
        Err(e) => fail_config(&e.to_string()),
    }
}

fn cmd_flow(args: &FlowArgs) -> u8 {
    let cfg = match args.opts.resolve() {
        Ok(c) => c,
        Err(e) => return fail_config(&e),
    };
    let m = cfg.build_model();
    let lam = m.lam(args.x0);
    let u0 = match args.u0 {
        Some(u) => u,
        None if lam.abs() < 1e-12 => {
            return fail_config(
                "on-shell u0 undefined where lambda vanishes; pass --u0 explicitly",
            )
        }
        None => (m.c - m.h(args.x0, args.p0)) / lam,
    };
    let s0 = ContactState::new(args.x0, args.p0, u0);
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        return fail_config(&format!("out dir {}: {e}", cfg.out.display()));
    }
    let (traj, blowup) = match rk4_integrate(s0, (0.0, cfg.t_max), cfg.delta, &m) {
        Ok(t) => (t, None),
        Err(CharacteristicsError::Blowup { t }) => {
            let t_safe = t - 2.0 * cfg.delta;
            let partial = if t_safe >= cfg.delta {
                rk4_integrate(s0, (0.0, t_safe), cfg.delta, &m).unwrap_or_else(|_| vec![(0.0, s0)])
            } else {
                vec![(0.0, s0)]
            };
            (partial, Some(t))
        }
        Err(e) => return fail_config(&e.to_string()),
    };
    let rows: Vec<(f64, f64, f64, f64, f64)> = traj
        .iter()
        .map(|(t, s)| (*t, s.x, s.p, s.u, m.hamiltonian_value(s.x, s.p, s.u)))
        .collect();
    if let Err(e) = output::write_flow_csv(&cfg.out.join("flow.csv"), &rows) {
        return fail_config(&e);
    }
    let t_end = rows.last().map(|r| r.0).unwrap_or(0.0);
    match blowup {
        Some(t) => {
            println!("rows={} t_end={t_end} blowup_at={t}", rows.len());
            2
        }
        None => {
            println!("rows={} t_end={t_end} blowup_at=none", rows.len());
            0
        }
    }
}

fn reflected_negated(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|i| -u[(i + n / 2) % n]).collect()
}

fn cmd_reproduce(args: &ReproArgs) -> u8 {
    let cfg = match args.opts.resolve() {
        Ok(c) => c,
        Err(e) => return fail_config(&e),
    };
    if args.c_list.is_empty() {
        println!("no levels requested");
        return 0;
    }
    if let Some(bad) = args.c_list.iter().find(|&&c| c.is_nan() || c <= 0.0) {
        return fail_config(&format!("reproduce-figure requires c > 0, got {bad}"));
    }
    let grid = match make_grid(cfg.n) {
        Ok(g) => g,
        Err(e) => return fail_config(&e.to_string()),
    };
    let mut table = String::new();
    let mut code = 0u8;
    for &c in &args.c_list {
        let mc = cfg.build_model().with_level(c);
        let sp = step_params(&cfg, &mc, &grid);
        let gate = residual_gate(&mc, &grid, sp.delta);
        let dir = cfg.out.join(format!("c-{c}"));
        if let Err(e) = std::fs::create_dir_all(&dir) {
            return fail_config(&format!("out dir {}: {e}", dir.display()));
        }

        let (u0, u1) = match assemble_solutions(&mc, &grid) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("c={c}: assembly failed: {e}");
                code = 2;
                continue;
            }
        };
        for (name, u) in [("u0", &u0), ("u1", &u1)] {
            let rr = residual_report(u, &mc, &grid);
            if rr.max_smooth_residual > gate {
                eprintln!(
                    "c={c}: {name} assembly residual {} over gate {gate}",
                    rr.max_smooth_residual
                );
                code = 2;
                continue;
            }
            if let Err(e) = output::write_profile_csv(&dir.join(format!("{name}.csv")), &grid.xs, u)
            {
                return fail_config(&e);
            }
        }

        let zero = vec![0.0; grid.n];
        let run = |seed: &[f64], d: Direction| solve_fixed_point(seed, &mc, &grid, &sp, d);
        let up = match run(&zero, Direction::Backward) {
            Ok(r) => r,
            Err(e) => return fail_config(&e.to_string()),
        };
        let down = match run(&zero, Direction::Forward) {
            Ok(r) => r,
            Err(e) => return fail_config(&e.to_string()),
        };
        let bar = if leg_ok(&down, gate) {
            match run(&down.solution, Direction::Backward) {
                Ok(r) => Some(r),
                Err(e) => return fail_config(&e.to_string()),
            }
        } else {
            None
        };
        let mut legs: Vec<(&str, &SolveReport)> = vec![("u_minus", &up), ("u_plus", &down)];
        if let Some(b) = &bar {
            legs.push(("u_bar_minus", b));
        }
        for (name, rep) in &legs {
            if leg_ok(rep, gate) {
                if let Err(e) =
                    output::write_profile_csv(&dir.join(format!("{name}.csv")), &grid.xs, &rep.solution)
                {
                    return fail_config(&e);
                }
            } else {
                eprintln!("c={c}: leg {name} unusable ({})", status_str(rep.status));
                code = 2;
            }
        }

        let d_upper = sup_dist(&up.solution, &u1);
        let d_forward = sup_dist(&down.solution, &reflected_negated(&u1));
        let d_lower = match &bar {
            Some(b) => sup_dist(&b.solution, &u0),
            None => f64::NAN,
        };
        let line =
            format!("c={c} d_upper={d_upper:.3e} d_lower={d_lower:.3e} d_forward={d_forward:.3e}");
        println!("{line}");
        let _ = writeln!(table, "{line}");

        let mut series = vec![
            Series { label: "u0 (traced)", color: "#1f77b4", ys: &u0 },
            Series { label: "u1 (traced)", color: "#d62728", ys: &u1 },
            Series { label: "u_minus (grid)", color: "#2ca02c", ys: &up.solution },
            Series { label: "u_plus (grid)", color: "#9467bd", ys: &down.solution },
        ];
        if let Some(b) = &bar {
            series.push(Series { label: "u_bar_minus (grid)", color: "#ff7f0e", ys: &b.solution });
        }
        let title = format!("both pipelines at c = {c}");
        if let Err(e) = output::write_svg(&dir.join("panel.svg"), &title, &grid.xs, &series) {
            return fail_config(&e);
        }
    }
    if let Err(e) = std::fs::write(cfg.out.join("distances.txt"), &table) {
        return fail_config(&format!("write distances.txt: {e}"));
    }
    code
}

fn cmd_compare(args: &CompareArgs) -> u8 {
    let (xa, ua) = match output::read_profile_csv(&args.a) {
        Ok(v) => v,
        Err(e) => return fail_config(&e),
    };
    let (xb, ub) = match output::read_profile_csv(&args.b) {
        Ok(v) => v,
        Err(e) => return fail_config(&e),
    };
    if xa.len() != xb.len() {
        return fail_config(&format!("row count mismatch: {} vs {}", xa.len(), xb.len()));
    }
    let x_mismatch = xa.iter().zip(&xb).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
    if x_mismatch > 1e-9 {
        return fail_config(&format!("x grids differ by up to {x_mismatch}"));
    }
    let d = sup_dist(&ua, &ub);
    println!("sup_dist={d:.11e}");
    0
}
