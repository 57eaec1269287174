use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use thermoslip::coupling::run_coupled;
use thermoslip::harness::export::{export_state, RunReport};
use thermoslip::harness::mms::{run_mms, MmsCase};
use thermoslip::harness::suite::{
    run_invariant_suite, SuiteSizes, EXIT_CONFIG, EXIT_EXPECTED_FAIL, EXIT_NON_CONVERGENCE, EXIT_OK, EXIT_VIOLATION,
};
use thermoslip::harness::{RunConfig, Scenario};
use thermoslip::rheology::Monotonicity;
use thermoslip::Error;

/// Coupled non-Newtonian flow and heat solver with Tresca slip.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coupled problem and write fields, history and report.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant battery at a fixed seed.
    Invariants {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write per-check results as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Manufactured-solution refinement study.
    Mms {
        #[arg(long, value_parser = parse_case)]
        case: MmsCase,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the effective configuration and the estimated constants.
    Info {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_case(s: &str) -> Result<MmsCase, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
        _ => 1,
    }
}

fn write_json(path: &Path, text: &str) -> thermoslip::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn solve(config: &Path, out: Option<PathBuf>) -> thermoslip::Result<i32> {
    let cfg = RunConfig::load(config)?;
    let sc = Scenario::new(&cfg)?;
    let pb = sc.coupled()?;
    let seed = cfg.output.seed;
    let st = run_coupled(&pb, &cfg.coupling.cfg, &sc.theta0(seed))?;
    let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let report = RunReport::new(&pb, &st, cfg.coupling.cfg.mode.name(), seed, cfg.to_ini());
    let files = export_state(&pb, &st, &report, &cfg.output, &dir)?;
    std::fs::write(dir.join("effective.ini"), cfg.to_ini()).map_err(|e| Error::Io {
        path: dir.join("effective.ini"),
        source: e,
    })?;

    let bounded = st.history.iter().all(|r| r.bound_slack >= -1e-8 * r.bound_rhs);
    let vi = pb.flow.variational_residual(&st.theta_flow, &st.flow, 1e-6)?;
    let heat_ok = st.heat.galerkin_residual <= 1e-9 && st.heat.flux_balance <= 1e-9;
    println!(
        "mode {} converged {} outer iterations {} final residual {:.3e}",
        cfg.coupling.cfg.mode.name(),
        st.converged,
        st.outer_iterations(),
        st.history.last().map_or(f64::NAN, |r| r.residual)
    );
    println!(
        "L_hat {:.4e} C_star {:.4e} velocity bound {:.4e}",
        st.lipschitz.l_hat, st.lipschitz.c_star, st.flow.report.apriori.c_bound
    );
    for f in &files {
        println!("wrote {}", f.display());
    }
    if !bounded || vi < -1e-8 || !heat_ok {
        eprintln!("invariant violation: bounded {bounded}, flow variational residual {vi:.3e}, heat ok {heat_ok}");
        return Ok(EXIT_VIOLATION);
    }
    if !st.converged {
        return Ok(EXIT_NON_CONVERGENCE);
    }
    if sc.models.viscosity.monotone_in_s == Monotonicity::Nonincreasing {
        eprintln!("note: viscosity is not nondecreasing in the shear rate; the existence theory does not cover this model");
        return Ok(EXIT_EXPECTED_FAIL);
    }
    Ok(EXIT_OK)
}

fn invariants(config: &Path, seed: Option<u64>, json: Option<PathBuf>) -> thermoslip::Result<i32> {
    let cfg = RunConfig::load(config)?;
    let sc = Scenario::new(&cfg)?;
    let rep = run_invariant_suite(&sc, seed.unwrap_or(cfg.output.seed), &SuiteSizes::default())?;
    print!("{}", rep.summary());
    if let Some(path) = json {
        write_json(&path, &to_json(&rep))?;
    }
    Ok(rep.exit_code)
}

fn mms(case: MmsCase, levels: usize, json: Option<PathBuf>) -> thermoslip::Result<i32> {
    let table = run_mms(case, levels)?;
    print!("{}", table.to_text());
    if let Some(path) = json {
        write_json(&path, &to_json(&table))?;
    }
    Ok(if table.passed() { EXIT_OK } else { EXIT_VIOLATION })
}

fn info(config: &Path) -> thermoslip::Result<i32> {
    let cfg = RunConfig::load(config)?;
    print!("{}", cfg.to_ini());
    let sc = Scenario::new(&cfg)?;
    let pb = sc.coupled()?;
    let theta = sc.theta0(cfg.output.seed);
    let sol = pb.flow.solve(&theta, None)?;
    let lip = pb.lipschitz(&sol.v, cfg.coupling.cfg.p_exponent)?;
    let c = &pb.constants;
    println!("# estimated constants");
    println!("cells = {}", sc.disc.n_cells());
    println!("volume = {:.6e}", sc.disc.volume);
    println!("poincare C_P = {:.6e} ({} power iterations)", c.poincare, c.power_iterations);
    println!("trace C'' = {:.6e}", c.trace);
    println!("L4 embedding C' = {:.6e} (sampled lower bound {:.6e})", c.l4_analytic, c.l4_sampled);
    println!("velocity bound C = {:.6e}", sol.report.apriori.c_bound);
    println!("strain norm |D(v)|_p = {:.6e}", lip.strain_p);
    println!("lipschitz L_hat = {:.6e}", lip.l_hat);
    println!("boundedness C_star = {:.6e}", lip.c_star);
    Ok(EXIT_OK)
}

fn configure_threads() {
    if let Ok(v) = std::env::var("THERMOSLIP_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("ignoring THERMOSLIP_THREADS={v}: expected a positive integer"),
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config, out } => solve(&config, out),
        Command::Invariants { config, seed, json } => invariants(&config, seed, json),
        Command::Mms { case, levels, json } => mms(case, levels, json),
        Command::Info { config } => info(&config),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    };
    ExitCode::from(code as u8)
}
