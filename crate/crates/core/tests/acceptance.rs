//! End-to-end acceptance battery. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use thermoslip::harness::mms::{run_mms, MmsCase};
use thermoslip::harness::scenario::random_temperature;
use thermoslip::harness::suite::{run_invariant_suite, CheckResult, Status, SuiteReport, SuiteSizes};
use thermoslip::harness::{RunConfig, Scenario};
use thermoslip::rheology::{verify_hypotheses, HypothesisGrid};

const SEED: u64 = 42;
const MINIMAL: &str = "[domain]\ndim = 2\n\n[rheology]\nkind = carreau\n";

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn suite() -> &'static SuiteReport {
    static REPORT: OnceLock<SuiteReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let sc = Scenario::default_scenario().expect("default scenario");
        run_invariant_suite(&sc, SEED, &SuiteSizes::default()).expect("suite runs")
    })
}

fn check(name: &str) -> Result<&'static CheckResult, String> {
    suite().check(name).ok_or_else(|| format!("{name} missing from the suite"))
}

fn metric(c: &CheckResult, key: &str) -> Result<f64, String> {
    c.metrics.get(key).copied().ok_or_else(|| format!("{}: no metric {key}", c.name))
}

fn passed(name: &str) -> Result<&'static CheckResult, String> {
    let c = check(name)?;
    match c.status {
        Status::Pass => Ok(c),
        s => Err(format!("{name} is {s:?}: {}", c.note)),
    }
}

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn hypotheses() -> Outcome {
    let mut notes = Vec::new();
    for kind in ["carreau", "bingham"] {
        let cfg = RunConfig::parse(&MINIMAL.replace("carreau", kind)).map_err(|e| e.to_string())?;
        let sc = Scenario::new(&cfg).map_err(|e| e.to_string())?;
        let grid = HypothesisGrid {
            n_theta: 100,
            n_s: 100,
            ..HypothesisGrid::default()
        };
        let rep = verify_hypotheses(&sc.models, &grid, &sc.disc.mesh.vertices);
        ensure(rep.samples >= 10_000, || format!("{kind}: only {} samples", rep.samples))?;
        let f = rep.failures(1e-12);
        ensure(f.is_empty(), || format!("{kind}: {}", f.join(", ")))?;
        notes.push(format!("{kind} {} samples", rep.samples));
    }
    Ok(notes.join(", "))
}

fn operator_probes() -> Outcome {
    let mono = passed("operator_monotonicity")?;
    let bound = passed("operator_boundedness")?;
    let pairs = metric(mono, "pairs")?;
    ensure(pairs >= 200.0, || format!("{pairs} pairs"))?;
    ensure(metric(bound, "violations")? == 0.0, || "boundedness violations".into())?;
    Ok(format!(
        "{pairs} pairs, min monotonicity {:.3e}, max bound ratio {:.3}",
        metric(mono, "min_monotonicity")?,
        metric(bound, "max_bound_ratio")?
    ))
}

fn korn() -> Outcome {
    let c = passed("korn_band")?;
    let (lo, hi) = (metric(c, "min_ratio")?, metric(c, "max_ratio")?);
    ensure(metric(c, "samples")? >= 1000.0, || "fewer than 1000 samples".into())?;
    ensure(lo >= 0.5 - 1e-12 && hi <= 1.0 + 1e-12, || format!("ratios in [{lo}, {hi}]"))?;
    Ok(format!("ratios in [{lo:.4}, {hi:.4}]"))
}

fn tresca() -> Outcome {
    let sc = Scenario::default_scenario().map_err(|e| e.to_string())?;
    let c = passed("tresca_complementarity")?;
    // The solver tolerance is comp_tol_factor times the same scale the
    // criterion multiplies by 1e-8.
    let scale = metric(c, "tolerance")? / sc.cfg.flow.comp_tol_factor;
    let res = metric(c, "residual")?;
    ensure(res <= 1e-8 * scale, || format!("residual {res:.3e} > {:.3e}", 1e-8 * scale))?;
    let stick = passed("stick_limit")?;
    let (slip, s) = (metric(stick, "slip_l2")?, metric(stick, "s_l2")?);
    ensure(slip <= 1e-6 * s, || format!("slip {slip:.3e}"))?;
    let free = passed("frictionless_multiplier")?;
    ensure(metric(free, "max_lambda")? == 0.0, || "multiplier nonzero at k = 0".into())?;
    Ok(format!("residual {res:.2e} (bound {:.2e}), stick slip {slip:.2e} of {s:.3}", 1e-8 * scale))
}

fn pressure() -> Outcome {
    let sc = Scenario::default_scenario().map_err(|e| e.to_string())?;
    let solver = sc.flow_solver().map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..5 {
        let theta = random_temperature(&sc.disc, 3.0, SEED + i);
        let sol = solver.solve(&theta, None).map_err(|e| e.to_string())?;
        let r = &sol.report;
        let rel = r.pressure_mean.abs() / (r.pressure_l2 * sc.disc.volume);
        ensure(rel <= 1e-10, || format!("solve {i}: |mean| / (|pi| |Omega|) = {rel:.3e}"))?;
        worst = worst.max(rel);
    }
    passed("pressure_zero_mean")?;
    let shift = passed("pressure_gauge_shift")?;
    let dv = metric(shift, "velocity_change")?;
    ensure(dv <= 1e-10, || format!("gauge shift moved v by {dv:.3e}"))?;
    Ok(format!("worst relative mean {worst:.2e}, gauge shift changes v by {dv:.2e}"))
}

fn coercivity() -> Outcome {
    let c = passed("heat_coercivity")?;
    let gap = metric(c, "max_relative_gap")?;
    ensure(metric(c, "fields")? >= 100.0, || "fewer than 100 fields".into())?;
    ensure(gap <= 1e-12, || format!("gap {gap:.3e}"))?;
    Ok(format!("max relative gap {gap:.2e}, min ratio {:.4}", metric(c, "min_coercivity_ratio")?))
}

fn bound() -> Outcome {
    let c = passed("temperature_independent_bound")?;
    ensure(metric(c, "solves")? >= 20.0, || "fewer than 20 solves".into())?;
    let slack = metric(c, "min_relative_slack")?;
    ensure(slack >= -1e-8, || format!("slack {slack:.3e}"))?;
    Ok(format!("min relative slack {slack:.4}, C = {:.4e}", metric(c, "c_bound")?))
}

fn lipschitz() -> Outcome {
    let c = passed("temperature_map_lipschitz")?;
    let (r, l) = (metric(c, "max_ratio")?, metric(c, "l_hat")?);
    ensure(metric(c, "pairs")? >= 50.0, || "fewer than 50 pairs".into())?;
    ensure(r <= l, || format!("ratio {r} above {l}"))?;
    let frozen = passed("temperature_map_constant")?;
    let fr = metric(frozen, "ratio")?;
    ensure(fr <= 1e-10, || format!("frozen ratio {fr:.3e}"))?;
    Ok(format!("max ratio {r:.3e} <= L_hat {l:.3e}, frozen data ratio {fr:.2e}"))
}

fn uniqueness() -> Outcome {
    let c = passed("multi_start_agreement")?;
    let (d, tol) = (metric(c, "difference")?, metric(c, "tolerance")?);
    ensure(d <= tol, || format!("difference {d:.3e}"))?;
    Ok(format!("difference {d:.2e} <= {tol:.1e}"))
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_thermoslip"));
    cmd.env("THERMOSLIP_THREADS", "1");
    cmd
}

fn solve_into(config: &Path, out: &Path) -> Result<i32, String> {
    let o = bin()
        .args(["solve", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    o.status.code().ok_or_else(|| "solver killed by a signal".into())
}

fn existence() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("run.ini");
    std::fs::write(&cfg, MINIMAL).map_err(|e| e.to_string())?;
    let code = solve_into(&cfg, &dir.path().join("out"))?;
    ensure(code == 0, || format!("exit code {code}"))?;
    let conv = passed("coupled_convergence")?;
    let n = metric(conv, "outer_iterations")?;
    ensure(n <= 40.0, || format!("{n} outer iterations"))?;
    let modes = passed("coupling_modes_agree")?;
    let (d, tol) = (metric(modes, "difference")?, metric(modes, "tolerance")?);
    ensure(d <= tol, || format!("modes differ by {d:.3e}"))?;
    Ok(format!("exit 0 after {n} outer iterations, modes differ by {d:.2e}"))
}

fn discretization() -> Outcome {
    let heat = run_mms(MmsCase::Heat, 4).map_err(|e| e.to_string())?;
    let q = heat.quantities.iter().position(|q| q == "theta_l2").ok_or("no theta_l2")?;
    let rates: Vec<f64> = heat.rates.iter().map(|r| r[q]).collect();
    ensure(rates.len() == 3 && rates.iter().all(|&r| r >= 1.8), || format!("heat rates {rates:?}"))?;
    let flow = run_mms(MmsCase::Flow, 3).map_err(|e| e.to_string())?;
    let qe = flow.quadratic_error.ok_or("no quadratic reproduction")?;
    ensure(qe <= 1e-8, || format!("quadratic error {qe:.3e}"))?;
    let lip = passed("temperature_map_lipschitz")?;
    let fin = passed("final_state_residuals")?;
    let balance = metric(lip, "max_energy_balance")?.max(metric(fin, "heat_balance")?);
    ensure(balance <= 1e-9, || format!("energy balance {balance:.3e}"))?;
    let shown: Vec<String> = rates.iter().map(|r| format!("{r:.3}")).collect();
    Ok(format!("heat L2 rates {}, quadratic error {qe:.2e}, energy balance {balance:.2e}", shown.join(" ")))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("run.ini");
    std::fs::write(&cfg, MINIMAL).map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let code = solve_into(&cfg, out)?;
        ensure(code == 0, || format!("exit code {code}"))?;
    }
    let mut bytes = 0;
    for f in ["history.csv", "report.json", "velocity.vtk", "pressure.vtk", "temperature.vtk"] {
        let x = std::fs::read(a.join(f)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(f)).map_err(|e| e.to_string())?;
        ensure(x == y, || format!("{f} differs between runs"))?;
        bytes += x.len();
    }
    // The seeded generators must not depend on anything but the seed.
    let sc = Scenario::default_scenario().map_err(|e| e.to_string())?;
    ensure(
        random_temperature(&sc.disc, 1.0, 7) == random_temperature(&sc.disc, 1.0, 7),
        || "seeded field differs".into(),
    )?;
    Ok(format!("{bytes} bytes identical across two runs"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("ac01 constitutive hypotheses", hypotheses),
        ("ac02 operator monotonicity and boundedness", operator_probes),
        ("ac03 korn band", korn),
        ("ac04 tresca complementarity", tresca),
        ("ac05 pressure gauge", pressure),
        ("ac06 discrete coercivity", coercivity),
        ("ac07 temperature-independent bound", bound),
        ("ac08 temperature map lipschitz", lipschitz),
        ("ac09 uniqueness from different starts", uniqueness),
        ("ac10 coupled existence pipeline", existence),
        ("ac11 discretization correctness", discretization),
        ("ac12 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let result = run();
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name}: {detail} ({secs:.1}s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} ({secs:.1}s)");
            }
        }
    }
    println!("{} of 12 acceptance criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
