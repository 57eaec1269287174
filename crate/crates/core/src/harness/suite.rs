//! The invariant battery: every property check of the solver stack run on one
//! scenario at a fixed seed, with per-check machine-readable results.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{random_temperature, Scenario};
use crate::coupling::{run_coupled, CoupledProblem, CoupledState, CouplingConfig, CouplingMode};
use crate::error::Result;
use crate::fem::assemble_stiffness;
use crate::flow::{operator, FlowConfig, FlowProblem, FlowSolution, FlowSolver, KField};
use crate::heat::HeatSolver;
use crate::rheology::{verify_hypotheses, HypothesisGrid, Monotonicity, SourceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Failed, but the model is declared outside the hypotheses the check relies on.
    ExpectedFail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub metrics: BTreeMap<String, f64>,
    pub note: String,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            status: Status::Pass,
            metrics: BTreeMap::new(),
            note: String::new(),
        }
    }

    fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    fn require(mut self, ok: bool, why: impl Into<String>) -> Self {
        if !ok && self.status == Status::Pass {
            self.status = Status::Fail;
            self.note = why.into();
        }
        self
    }
}

/// Sample sizes of the randomized checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSizes {
    pub operator_pairs: usize,
    pub korn_samples: usize,
    pub bound_solves: usize,
    pub lipschitz_pairs: usize,
    pub coercivity_fields: usize,
    /// Grid points per axis of the hypothesis grid.
    pub hypothesis_axis: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        Self {
            operator_pairs: 200,
            korn_samples: 1000,
            bound_solves: 20,
            lipschitz_pairs: 50,
            coercivity_fields: 100,
            hypothesis_axis: 100,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_EXPECTED_FAIL: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;
pub const EXIT_CONFIG: i32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub sizes: SuiteSizes,
    pub checks: Vec<CheckResult>,
    pub coupled_converged: bool,
    pub exit_code: i32,
}

impl SuiteReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::ExpectedFail => "XFAIL",
                Status::Skipped => "SKIP",
            };
            out += &format!("{tag:<5} {}", c.name);
            if !c.note.is_empty() {
                out += &format!(": {}", c.note);
            }
            out.push('\n');
        }
        out += &format!("seed {} exit {}\n", self.seed, self.exit_code);
        out
    }
}

/// Exit code for a set of check outcomes; violations outrank non-convergence,
/// which outranks expected-fail notes.
pub fn exit_code(checks: &[CheckResult], converged: bool) -> i32 {
    if checks.iter().any(|c| c.status == Status::Fail) {
        EXIT_VIOLATION
    } else if !converged {
        EXIT_NON_CONVERGENCE
    } else if checks.iter().any(|c| c.status == Status::ExpectedFail) {
        EXIT_EXPECTED_FAIL
    } else {
        EXIT_OK
    }
}

fn diff_norm(pb: &CoupledProblem, a: &[f64], b: &[f64]) -> Result<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    pb.theta_norm(&d)
}

fn with_threshold(problem: &FlowProblem, scale: f64) -> FlowProblem {
    let k = match &problem.friction.k {
        KField::Constant(k) => KField::Constant(k * scale),
        KField::PerFacet(v) => KField::PerFacet(v.iter().map(|k| k * scale).collect()),
        KField::Function(f) => {
            let f = f.clone();
            KField::Function(Arc::new(move |x| scale * f(x)))
        }
    };
    let mut p = problem.clone();
    p.friction.k = k;
    p
}

fn hypotheses(sc: &Scenario, sizes: &SuiteSizes) -> CheckResult {
    let grid = HypothesisGrid {
        n_theta: sizes.hypothesis_axis,
        n_s: sizes.hypothesis_axis,
        ..HypothesisGrid::default()
    };
    let mut pts = sc.disc.mesh.vertices.clone();
    pts.extend(sc.disc.cells.iter().flat_map(|c| c.qp.iter().map(|q| q.x)));
    let rep = verify_hypotheses(&sc.models, &grid, &pts);
    let failures = rep.failures(1e-12);
    CheckResult::new("constitutive_hypotheses")
        .metric("samples", rep.samples as f64)
        .metric("mu_bound_violation", rep.mu_bound_violation)
        .metric("s_monotonicity_violation", rep.s_monotonicity_violation)
        .metric("c_mu_violation", rep.c_mu_violation)
        .metric("k_bound_violation", rep.k_bound_violation)
        .require(failures.is_empty(), format!("violated: {}", failures.join(", ")))
}

fn operator_checks(sc: &Scenario, sizes: &SuiteSizes, theta: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let disc = &*sc.disc;
    let model = &sc.models.viscosity;
    let cons = disc.velocity_constraints(&|_| [0.0; 3]);
    let p = operator::probe_operator(disc, model, theta, &cons, sizes.operator_pairs, rng, 1e-10)?;
    let mut mono = CheckResult::new("operator_monotonicity")
        .metric("pairs", p.pairs as f64)
        .metric("min_monotonicity", p.min_monotonicity)
        .metric("violations", p.monotonicity_violations as f64);
    if p.monotonicity_violations > 0 {
        if model.monotone_in_s == Monotonicity::Nonincreasing {
            mono.status = Status::ExpectedFail;
            mono.note = "viscosity is not nondecreasing in the shear rate; monotonicity is not guaranteed".into();
        } else {
            mono = mono.require(false, format!("{} pairs with negative monotonicity product", p.monotonicity_violations));
        }
    }
    let bound = CheckResult::new("operator_boundedness")
        .metric("max_bound_ratio", p.max_bound_ratio)
        .metric("violations", p.bound_violations as f64)
        .require(p.bound_violations == 0, "|<A(u),phi>| exceeded 2 mu1 |u| |phi|");
    let h = operator::probe_hemicontinuity(disc, model, theta, &cons, rng, 16, 128)?;
    let hemi = CheckResult::new("operator_hemicontinuity")
        .metric("coarse_jump", h.coarse_jump)
        .metric("fine_jump", h.fine_jump)
        .metric("allowed_fine_jump", h.allowed_fine_jump)
        .require(h.passed, "jump along a line did not shrink with the sampling step");
    let k = operator::probe_korn(disc, &cons, sizes.korn_samples, rng)?;
    let korn = CheckResult::new("korn_band")
        .metric("samples", k.samples as f64)
        .metric("min_ratio", k.min_ratio)
        .metric("max_ratio", k.max_ratio)
        .require(k.violations == 0, format!("{} ratios outside [1/2, 1]", k.violations));
    Ok(vec![mono, bound, hemi, korn])
}

fn flow_checks(sc: &Scenario, solver: &FlowSolver, theta: &[f64]) -> Result<(Vec<CheckResult>, FlowSolution)> {
    let sol = solver.solve(theta, None)?;
    let r = &sol.report;
    let mut out = Vec::new();
    out.push(
        CheckResult::new("tresca_complementarity")
            .metric("residual", r.complementarity_residual)
            .metric("tolerance", r.tol_comp)
            .metric("max_lambda", r.max_lambda)
            .require(r.complementarity_residual <= r.tol_comp, "complementarity residual above tolerance")
            .require(r.max_lambda <= 1.0 + 1e-12, "multiplier left the unit ball"),
    );
    let vi = solver.variational_residual(theta, &sol, 1e-6)?;
    out.push(
        CheckResult::new("flow_variational_inequality")
            .metric("min_residual", vi)
            .require(vi >= -1e-8, "variational inequality violated"),
    );
    out.push(
        CheckResult::new("pressure_zero_mean")
            .metric("mean", r.pressure_mean)
            .metric("l2", r.pressure_l2)
            .require(
                (r.pressure_mean - sc.cfg.flow.gauge).abs() <= 1e-10 * r.pressure_l2.max(1.0) * sc.disc.volume,
                "pressure integral differs from the gauge",
            ),
    );
    let shifted_cfg = FlowConfig {
        gauge: sc.cfg.flow.gauge + 0.37,
        ..sc.cfg.flow.clone()
    };
    let shifted = FlowSolver::new(sc.disc.clone(), &sc.flow_problem, sc.models.viscosity.clone(), shifted_cfg)?;
    let sol2 = shifted.solve(theta, None)?;
    let dv = sol.v.iter().zip(&sol2.v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.push(
        CheckResult::new("pressure_gauge_shift")
            .metric("velocity_change", dv)
            .require(dv <= 1e-10, "velocity depends on the pressure gauge"),
    );
    let free = FlowSolver::new(
        sc.disc.clone(),
        &with_threshold(&sc.flow_problem, 0.0),
        sc.models.viscosity.clone(),
        sc.cfg.flow.clone(),
    )?;
    let fs = free.solve(theta, None)?;
    let lam_max = fs.lam.max_norm();
    out.push(
        CheckResult::new("frictionless_multiplier")
            .metric("max_lambda", lam_max)
            .require(lam_max == 0.0, "multiplier nonzero without friction"),
    );
    let s_l2 = solver.s_l2();
    let mut stick = CheckResult::new("stick_limit");
    if s_l2 > 0.0 {
        let big = FlowSolver::new(
            sc.disc.clone(),
            &with_threshold(&sc.flow_problem, 1e6),
            sc.models.viscosity.clone(),
            sc.cfg.flow.clone(),
        )?;
        let bs = big.solve(theta, None)?;
        stick = stick
            .metric("slip_l2", bs.report.slip_l2)
            .metric("s_l2", s_l2)
            .require(bs.report.slip_l2 <= 1e-6 * s_l2, "surface does not stick at a large threshold");
    } else {
        stick.status = Status::Skipped;
        stick.note = "surface velocity is zero".into();
    }
    out.push(stick);
    let b = &r.apriori;
    out.push(
        CheckResult::new("flow_energy_bound")
            .metric("v_norm", b.inputs.v_norm)
            .metric("c_bound", b.c_bound)
            .metric("slack", b.slack)
            .require(b.holds(1e-8), "velocity exceeds the temperature-independent bound"),
    );
    Ok((out, sol))
}

fn bound_sweep(sc: &Scenario, solver: &FlowSolver, sizes: &SuiteSizes, rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut worst = f64::INFINITY;
    let mut c_bound = None;
    let mut drift = 0.0f64;
    let mut failures = 0;
    for _ in 0..sizes.bound_solves {
        let theta = random_field(sc, rng, -1.0, 5.0);
        let sol = solver.solve(&theta, None)?;
        let b = sol.report.apriori;
        worst = worst.min(b.slack / b.rhs.max(f64::MIN_POSITIVE));
        let c = *c_bound.get_or_insert(b.c_bound);
        drift = drift.max((b.c_bound - c).abs() / c.max(f64::MIN_POSITIVE));
        if !b.holds(1e-8) {
            failures += 1;
        }
    }
    Ok(CheckResult::new("temperature_independent_bound")
        .metric("solves", sizes.bound_solves as f64)
        .metric("min_relative_slack", worst)
        .metric("c_bound", c_bound.unwrap_or(0.0))
        .metric("c_bound_drift", drift)
        .require(failures == 0, format!("{failures} solves broke the bound"))
        .require(drift <= 1e-12, "bound constant depends on the temperature"))
}

fn random_field(sc: &Scenario, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec<f64> {
    use rand::Rng;
    let cons = sc.disc.temperature_constraints();
    let free: Vec<f64> = (0..cons.n_free()).map(|_| rng.random_range(lo..hi)).collect();
    cons.expand(&free)
}

fn heat_checks(
    sc: &Scenario,
    pb: &CoupledProblem,
    v: &[f64],
    sizes: &SuiteSizes,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CheckResult>> {
    let heat = &pb.heat;
    let op = heat.operator(v)?;
    let cond = sc.models.conductivity.clone();
    let k_only = assemble_stiffness(&sc.disc, &|x| cond.eval(x));
    let unit = assemble_stiffness(&sc.disc, &|_| 1.0);
    let mut worst_gap = 0.0f64;
    let mut worst_coercive = f64::INFINITY;
    for _ in 0..sizes.coercivity_fields {
        let t = random_field(sc, rng, -1.0, 1.0);
        let btt = op.b.bilinear(&t, &t);
        let ktt = k_only.bilinear(&t, &t);
        worst_gap = worst_gap.max((btt - ktt).abs() / ktt.max(f64::MIN_POSITIVE));
        worst_coercive = worst_coercive.min(btt / (sc.models.conductivity.k0 * unit.bilinear(&t, &t)));
    }
    let coercive = CheckResult::new("heat_coercivity")
        .metric("fields", sizes.coercivity_fields as f64)
        .metric("max_relative_gap", worst_gap)
        .metric("min_coercivity_ratio", worst_coercive)
        .require(
            sc.cfg.heat.artificial_diffusion > 0.0 || worst_gap <= 1e-12,
            "convection contributes to the quadratic form",
        )
        .require(worst_coercive >= 1.0 - 1e-12, "quadratic form below k0 |grad theta|^2");

    let lipschitz = lipschitz_check(sc, pb, &op, v, sizes, rng)?;
    let frozen = frozen_map_check(sc, v, rng)?;
    Ok(vec![coercive, lipschitz, frozen])
}

fn lipschitz_check(
    sc: &Scenario,
    pb: &CoupledProblem,
    op: &crate::heat::HeatOperator,
    v: &[f64],
    sizes: &SuiteSizes,
    rng: &mut ChaCha8Rng,
) -> Result<CheckResult> {
    let est = pb.lipschitz(v, 4.0)?;
    let mut worst = 0.0f64;
    let mut balance = 0.0f64;
    for _ in 0..sizes.lipschitz_pairs {
        let e1 = random_field(sc, rng, 0.0, 3.0);
        let e2 = random_field(sc, rng, 0.0, 3.0);
        let (t1, h1) = pb.map_t(op, &e1, v)?;
        let (t2, h2) = pb.map_t(op, &e2, v)?;
        balance = balance.max(h1.flux_balance).max(h2.flux_balance);
        let r = diff_norm(pb, &t1, &t2)? / diff_norm(pb, &e1, &e2)?;
        worst = worst.max(r);
    }
    Ok(CheckResult::new("temperature_map_lipschitz")
        .metric("pairs", sizes.lipschitz_pairs as f64)
        .metric("max_ratio", worst)
        .metric("l_hat", est.l_hat)
        .metric("c_star", est.c_star)
        .metric("max_energy_balance", balance)
        .require(worst <= est.l_hat, "observed ratio exceeds the Lipschitz estimate")
        .require(balance <= 1e-9, "energy balance residual too large"))
}

/// With temperature-independent viscosity and source the map is constant.
fn frozen_map_check(sc: &Scenario, v: &[f64], rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut models = sc.models.clone();
    models.viscosity.beta = 0.0;
    models.viscosity.c_mu = 0.0;
    models.source = SourceModel::Constant {
        value: models.source.eval(0.0),
    };
    let heat = HeatSolver::new(sc.disc.clone(), models, &sc.heat_bcs, sc.cfg.heat.clone())?;
    let op = heat.operator(v)?;
    let e1 = random_field(sc, rng, -1.0, 3.0);
    let e2 = random_field(sc, rng, -1.0, 3.0);
    let (t1, _) = heat.solve_with(&op, &e1, v)?;
    let (t2, _) = heat.solve_with(&op, &e2, v)?;
    let d: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| a - b).collect();
    let de: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| a - b).collect();
    let ratio = crate::fem::scalar_w1p(&sc.disc, &d, 2.0)? / crate::fem::scalar_w1p(&sc.disc, &de, 2.0)?;
    Ok(CheckResult::new("temperature_map_constant")
        .metric("ratio", ratio)
        .require(ratio <= 1e-10, "map depends on the temperature without temperature-dependent data"))
}

fn coupled_checks(sc: &Scenario, pb: &CoupledProblem, seed: u64) -> Result<(Vec<CheckResult>, CoupledState)> {
    let cfg = &sc.cfg.coupling.cfg;
    let st = run_coupled(pb, cfg, &sc.theta0(seed))?;
    let tol = cfg.tol_outer;
    let mut out = Vec::new();
    let last = st.history.last();
    let mut conv = CheckResult::new("coupled_convergence")
        .metric("outer_iterations", st.outer_iterations() as f64)
        .metric("final_residual", last.map_or(f64::NAN, |r| r.residual))
        .metric("final_damping", st.final_damping)
        .metric("l_hat", st.lipschitz.l_hat)
        .metric("c_star", st.lipschitz.c_star);
    if !st.converged {
        conv.status = Status::Skipped;
        conv.note = format!("no convergence in {} outer iterations", cfg.max_outer);
    }
    out.push(conv);

    let ratios: Vec<f64> = st.history.iter().skip(1).map(|r| r.ratio).collect();
    let decreasing = !ratios.is_empty() && ratios.iter().all(|&r| r < 1.0);
    out.push(
        CheckResult::new("monotone_decrease_certificate")
            .metric("max_ratio", ratios.iter().copied().fold(0.0, f64::max))
            .require(!decreasing || st.converged, "ratios stayed below one yet the run did not converge"),
    );
    let worst_slack = st
        .history
        .iter()
        .map(|r| r.bound_slack / r.bound_rhs.max(f64::MIN_POSITIVE))
        .fold(f64::INFINITY, f64::min);
    out.push(
        CheckResult::new("outer_iterates_bounded")
            .metric("min_relative_slack", worst_slack)
            .require(worst_slack >= -1e-8, "an outer flow solve broke the energy bound"),
    );
    let vi = pb.flow.variational_residual(&st.theta_flow, &st.flow, 1e-6)?;
    out.push(
        CheckResult::new("final_state_residuals")
            .metric("flow_variational", vi)
            .metric("heat_galerkin", st.heat.galerkin_residual)
            .metric("heat_balance", st.heat.flux_balance)
            .require(vi >= -1e-8, "flow variational inequality violated")
            .require(st.heat.galerkin_residual <= 1e-9, "heat Galerkin residual too large")
            .require(st.heat.flux_balance <= 1e-9, "energy balance residual too large"),
    );
    if !st.converged {
        return Ok((out, st));
    }

    let other_mode = match cfg.mode {
        CouplingMode::GaussSeidel => CouplingMode::PaperNested,
        CouplingMode::PaperNested => CouplingMode::GaussSeidel,
    };
    let other_cfg = CouplingConfig {
        mode: other_mode,
        ..cfg.clone()
    };
    let alt = run_coupled(pb, &other_cfg, &sc.theta0(seed))?;
    let dm = diff_norm(pb, &alt.theta, &st.theta)?;
    out.push(
        CheckResult::new("coupling_modes_agree")
            .metric("difference", dm)
            .metric("tolerance", 10.0 * tol)
            .require(alt.converged, format!("{} mode did not converge", other_mode.name()))
            .require(dm <= 10.0 * tol, "coupling modes reached different limits"),
    );
    let nested = if cfg.mode == CouplingMode::PaperNested { &st } else { &alt };
    let mut contraction = CheckResult::new("nested_contraction");
    let l_max = nested.history.iter().map(|r| r.l_hat).fold(0.0, f64::max);
    let inner = nested.history.iter().map(|r| r.inner_max_ratio).fold(0.0, f64::max);
    contraction = contraction.metric("max_inner_ratio", inner).metric("max_l_hat", l_max);
    if l_max < 1.0 {
        contraction = contraction.require(inner <= l_max + 0.05, "inner iteration contracted slower than the estimate");
    } else {
        contraction.status = Status::Skipped;
        contraction.note = "estimated Lipschitz constant is not below one".into();
    }
    out.push(contraction);

    let mut unique = CheckResult::new("multi_start_agreement");
    let nonincreasing = sc.models.source.is_nonincreasing() && sc.models.viscosity.beta >= 0.0;
    if nonincreasing {
        let start = random_temperature(&sc.disc, sc.cfg.coupling.theta0_amplitude.max(1.0), seed.wrapping_add(1));
        let other = run_coupled(pb, cfg, &start)?;
        let du = diff_norm(pb, &other.theta, &st.theta)?;
        unique = unique
            .metric("difference", du)
            .metric("tolerance", 10.0 * tol)
            .require(other.converged, "run from the random start did not converge")
            .require(du <= 10.0 * tol, "runs from different starts reached different limits");
    } else {
        unique.status = Status::Skipped;
        unique.note = "viscosity or source may increase with temperature".into();
    }
    out.push(unique);
    Ok((out, st))
}

/// Run every check on the scenario. Errors are component faults only.
pub fn run_invariant_suite(sc: &Scenario, seed: u64, sizes: &SuiteSizes) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = vec![hypotheses(sc, sizes)];
    let probe_theta = random_field(sc, &mut rng, 0.0, 2.0);
    checks.extend(operator_checks(sc, sizes, &probe_theta, &mut rng)?);
    let solver = sc.flow_solver()?;
    let zero = vec![0.0; sc.disc.n_scalar()];
    let (flow, sol) = flow_checks(sc, &solver, &zero)?;
    checks.extend(flow);
    checks.push(bound_sweep(sc, &solver, sizes, &mut rng)?);
    let pb = sc.coupled()?;
    checks.extend(heat_checks(sc, &pb, &sol.v, sizes, &mut rng)?);
    let (coupled, st) = coupled_checks(sc, &pb, seed)?;
    checks.extend(coupled);
    let exit = exit_code(&checks, st.converged);
    Ok(SuiteReport {
        seed,
        sizes: sizes.clone(),
        checks,
        coupled_converged: st.converged,
        exit_code: exit,
    })
}
