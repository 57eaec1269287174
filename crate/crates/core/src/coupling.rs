//! Temperature map `η ↦ T(η)` for a fixed velocity, the embedding constants
//! behind its Lipschitz and boundedness estimates, and the coupled iteration.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble_mass, assemble_omega_mass, assemble_stiffness, scalar_lp, scalar_w1p, strain_norm, Discretization};
use crate::flow::{FlowSolution, FlowSolver};
use crate::heat::{HeatOperator, HeatReport, HeatSolver};
use crate::linalg::{dot, CsrMatrix, SparseLu};
use crate::rheology::MaterialModels;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// One flow solve and one heat solve per outer step.
    GaussSeidel,
    /// Iterate the temperature map to its fixed point for the current
    /// velocity, then update the flow.
    PaperNested,
}

impl CouplingMode {
    pub fn name(&self) -> &'static str {
        match self {
            CouplingMode::GaussSeidel => "gauss_seidel",
            CouplingMode::PaperNested => "paper_nested",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub mode: CouplingMode,
    pub damping: f64,
    /// Halve the damping after this many consecutive growing steps; 0 disables.
    pub auto_damping_after: usize,
    pub tol_outer: f64,
    pub max_outer: usize,
    /// Inner tolerance of the nested mode.
    pub tol_inner: f64,
    pub max_inner: usize,
    pub p_exponent: f64,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            mode: CouplingMode::GaussSeidel,
            damping: 1.0,
            auto_damping_after: 3,
            tol_outer: 1e-8,
            max_outer: 100,
            tol_inner: 1e-10,
            max_inner: 200,
            p_exponent: 4.0,
        }
    }
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            errs.push(format!("coupling damping must lie in (0, 1], got {}", self.damping));
        }
        if !(self.p_exponent >= 4.0) {
            errs.push(format!(
                "coupling p_exponent must be at least 4 for the heat estimates, got {}",
                self.p_exponent
            ));
        }
        if !(self.tol_outer > 0.0 && self.tol_inner > 0.0) {
            errs.push("coupling tolerances must be positive".to_string());
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            errs.push("coupling iteration limits must be at least 1".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Embedding constants of the temperature space (zero on top and sides).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConstants {
    /// `‖u‖₂ ≤ C_P‖∇u‖₂`, power iteration converged.
    pub poincare: f64,
    /// `‖u‖_{L²(ω)} ≤ C″‖∇u‖₂`.
    pub trace: f64,
    /// `‖u‖₄ ≤ C′‖∇u‖₂` from the reflected Ladyzhenskaya inequality and `C_P`.
    pub l4_analytic: f64,
    /// Largest sampled `‖u‖₄/‖∇u‖₂`, a lower bound for the true constant.
    pub l4_sampled: f64,
    pub power_iterations: usize,
}

/// Largest eigenvalue of `K⁻¹M` by power iteration on the constrained space.
fn generalized_power(k_lu: &SparseLu, k: &CsrMatrix, m: &CsrMatrix, max_iter: usize) -> Result<(f64, Vec<f64>, usize)> {
    let n = k.nrows;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i as f64) * 1.3).sin()).collect();
    let mut est = 0.0;
    for it in 1..=max_iter {
        let y = k_lu.solve(&m.matvec(&x))?;
        let ky = k.matvec(&y);
        let num = dot(&y, &m.matvec(&y));
        let den = dot(&y, &ky);
        let next = num / den;
        let norm = den.sqrt();
        x = y.iter().map(|a| a / norm).collect();
        if it > 3 && (next - est).abs() <= 1e-13 * next {
            return Ok((next, x, it));
        }
        est = next;
    }
    Ok((est, x, max_iter))
}

impl EmbeddingConstants {
    pub fn estimate(disc: &Discretization, samples: usize, seed: u64) -> Result<Self> {
        let cons = disc.temperature_constraints();
        let nf = cons.n_free();
        if nf == 0 {
            return Err(Error::invalid("temperature space has no free nodes"));
        }
        let free = &cons.free_index;
        let k = assemble_stiffness(disc, &|_| 1.0).submatrix(free, nf, free, nf);
        let m = assemble_mass(disc).submatrix(free, nf, free, nf);
        let mw = assemble_omega_mass(disc).submatrix(free, nf, free, nf);
        let lu = SparseLu::factor(&k)?;
        let (lp, xp, it1) = generalized_power(&lu, &k, &m, 2000)?;
        let (lt, _, it2) = generalized_power(&lu, &k, &mw, 2000)?;
        let poincare = lp.sqrt();
        let l4_analytic = if disc.dim == 2 {
            (2.0 * poincare).sqrt()
        } else {
            (8.0 * poincare).powf(0.25)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = 0.0f64;
        let ratio = |u: &[f64]| -> Result<f64> {
            let g = scalar_w1p(disc, u, 2.0)?;
            Ok(if g > 0.0 { scalar_lp(disc, u, 4.0)? / g } else { 0.0 })
        };
        best = best.max(ratio(&cons.expand(&xp))?);
        for i in 0..samples {
            let raw: Vec<f64> = (0..nf).map(|_| rng.random_range(-1.0..1.0)).collect();
            let field = if i % 2 == 0 {
                raw
            } else {
                // one smoothing step toward the low modes
                let shifted: Vec<f64> = raw.iter().map(|a| a + 1.0).collect();
                lu.solve(&m.matvec(&shifted))?
            };
            best = best.max(ratio(&cons.expand(&field))?);
        }
        Ok(Self {
            poincare,
            trace: lt.sqrt(),
            l4_analytic,
            l4_sampled: best,
            power_iterations: it1.max(it2),
        })
    }
}

/// Lipschitz and boundedness constants of the temperature map for one velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub l_hat: f64,
    pub c_star: f64,
    /// `‖D(v)‖_p`.
    pub strain_p: f64,
    /// `|Ω|^{(p−4)/(2p)}`.
    pub volume_factor: f64,
    pub c_mu: f64,
    pub c_r: f64,
    pub k0: f64,
}

/// `L̂ = k₀⁻¹(2|Ω|^{(p−4)/(2p)} C_μ C′² ‖D(v)‖²_p + C_P² C_r)` and
/// `C* = k₀⁻¹(2|Ω|^{(p−4)/(2p)} μ₁ C_P ‖D(v)‖²_p + C″‖θ_ω‖_{L²(ω)} + C_P |Ω|^{1/2} r₁)`.
///
/// Both follow from testing the heat problem with the difference (or the
/// solution) and Hölder with exponents (4, 4, 2); the embedding constants
/// enter squared because both factors are estimated by the same gradient norm.
pub fn lipschitz_estimate(
    disc: &Discretization,
    models: &MaterialModels,
    consts: &EmbeddingConstants,
    v: &[f64],
    flux_l2: f64,
    p: f64,
) -> Result<LipschitzEstimate> {
    if !(p >= 4.0) {
        return Err(Error::invalid(format!("exponent p must be at least 4, got {p}")));
    }
    let strain_p = strain_norm(disc, v, p)?;
    let vol = disc.volume;
    let volume_factor = vol.powf((p - 4.0) / (2.0 * p));
    let c_mu = models.viscosity.c_mu;
    let c_r = models.source.lipschitz();
    let k0 = models.conductivity.k0;
    let cp = consts.poincare;
    let cl4 = consts.l4_analytic;
    let l_hat = (2.0 * volume_factor * c_mu * cl4 * cl4 * strain_p * strain_p + cp * cp * c_r) / k0;
    let c_star = (2.0 * volume_factor * models.viscosity.mu1 * cp * strain_p * strain_p
        + consts.trace * flux_l2
        + cp * vol.sqrt() * models.source.r1())
        / k0;
    Ok(LipschitzEstimate {
        l_hat,
        c_star,
        strain_p,
        volume_factor,
        c_mu,
        c_r,
        k0,
    })
}

/// Flow, heat and constants for one coupled problem.
pub struct CoupledProblem {
    pub disc: Arc<Discretization>,
    pub models: MaterialModels,
    pub flow: FlowSolver,
    pub heat: HeatSolver,
    pub constants: EmbeddingConstants,
}

impl CoupledProblem {
    pub fn new(flow: FlowSolver, heat: HeatSolver, constant_samples: usize, seed: u64) -> Result<Self> {
        if !Arc::ptr_eq(&flow.disc, &heat.disc) {
            return Err(Error::invalid("flow and heat must share one discretization"));
        }
        if flow.viscosity != heat.models.viscosity {
            return Err(Error::invalid("flow and heat disagree on the viscosity model"));
        }
        let disc = flow.disc.clone();
        let constants = EmbeddingConstants::estimate(&disc, constant_samples, seed)?;
        Ok(Self {
            models: heat.models.clone(),
            disc,
            flow,
            heat,
            constants,
        })
    }

    /// `T(η)` for the velocity `v`.
    pub fn map_t(&self, op: &HeatOperator, eta: &[f64], v: &[f64]) -> Result<(Vec<f64>, HeatReport)> {
        self.heat.solve_with(op, eta, v)
    }

    pub fn lipschitz(&self, v: &[f64], p: f64) -> Result<LipschitzEstimate> {
        lipschitz_estimate(&self.disc, &self.models, &self.constants, v, self.heat.flux_l2, p)
    }

    pub fn theta_norm(&self, theta: &[f64]) -> Result<f64> {
        scalar_w1p(&self.disc, theta, 2.0)
    }

    fn diff_norm(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        scalar_w1p(&self.disc, &d, 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub iter: usize,
    /// `‖θᵏ⁺¹ − θᵏ‖₁,₂` of the accepted (damped) step.
    pub step: f64,
    /// Undamped fixed-point residual; drives the stopping test.
    pub residual: f64,
    /// `residual / previous residual`.
    pub ratio: f64,
    pub damping: f64,
    pub picard_iters: usize,
    pub uzawa_iters: usize,
    pub complementarity: f64,
    pub bound_slack: f64,
    pub bound_rhs: f64,
    pub v_norm: f64,
    pub c_bound: f64,
    pub heat_balance: f64,
    pub inner_iters: usize,
    pub inner_max_ratio: f64,
    pub l_hat: f64,
}

#[derive(Debug, Clone)]
pub struct CoupledState {
    pub v: Vec<f64>,
    pub pi: Vec<f64>,
    pub theta: Vec<f64>,
    /// Temperature the final flow solve was frozen at.
    pub theta_flow: Vec<f64>,
    pub flow: FlowSolution,
    pub heat: HeatReport,
    pub history: Vec<OuterRecord>,
    pub converged: bool,
    pub final_damping: f64,
    pub lipschitz: LipschitzEstimate,
}

impl CoupledState {
    pub fn outer_iterations(&self) -> usize {
        self.history.len()
    }
}

/// Damped outer iteration on the temperature.
pub fn run_coupled(pb: &CoupledProblem, cfg: &CouplingConfig, theta0: &[f64]) -> Result<CoupledState> {
    cfg.validate()?;
    if theta0.len() != pb.disc.n_scalar() {
        return Err(Error::invalid("initial temperature has the wrong length"));
    }
    let mut theta = theta0.to_vec();
    pb.heat.cons.fixed.iter().enumerate().for_each(|(i, f)| {
        if let Some(val) = f {
            theta[i] = *val;
        }
    });
    let mut damping = cfg.damping;
    let mut history: Vec<OuterRecord> = Vec::new();
    let mut warm: Option<FlowSolution> = None;
    let mut growing = 0usize;
    for iter in 1..=cfg.max_outer {
        let flow = pb.flow.solve(&theta, warm.as_ref())?;
        let op = pb.heat.operator(&flow.v)?;
        let (t_new, heat, inner_iters, inner_max_ratio) = match cfg.mode {
            CouplingMode::GaussSeidel => {
                let (t, h) = pb.map_t(&op, &theta, &flow.v)?;
                (t, h, 1, 0.0)
            }
            CouplingMode::PaperNested => nested_fixed_point(pb, cfg, &op, &theta, &flow.v)?,
        };
        let residual = pb.diff_norm(&t_new, &theta)?;
        let next: Vec<f64> = theta.iter().zip(&t_new).map(|(a, b)| a + damping * (b - a)).collect();
        let step = pb.diff_norm(&next, &theta)?;
        let ratio = history.last().map_or(f64::NAN, |r| residual / r.residual);
        let lip = pb.lipschitz(&flow.v, cfg.p_exponent)?;
        let r = &flow.report;
        history.push(OuterRecord {
            iter,
            step,
            residual,
            ratio,
            damping,
            picard_iters: r.picard_iters,
            uzawa_iters: r.uzawa_iters,
            complementarity: r.complementarity_residual,
            bound_slack: r.apriori.slack,
            bound_rhs: r.apriori.rhs,
            v_norm: r.apriori.inputs.v_norm,
            c_bound: r.apriori.c_bound,
            heat_balance: heat.flux_balance,
            inner_iters,
            inner_max_ratio,
            l_hat: lip.l_hat,
        });
        if residual <= cfg.tol_outer {
            return Ok(CoupledState {
                v: flow.v.clone(),
                pi: flow.pi.clone(),
                theta: t_new,
                theta_flow: theta,
                flow,
                heat,
                history,
                converged: true,
                final_damping: damping,
                lipschitz: lip,
            });
        }
        if ratio > 1.0 {
            growing += 1;
            if cfg.auto_damping_after > 0 && growing >= cfg.auto_damping_after {
                damping *= 0.5;
                growing = 0;
            }
        } else {
            growing = 0;
        }
        theta = next;
        warm = Some(flow);
    }
    // report the last state without claiming convergence
    let flow = pb.flow.solve(&theta, warm.as_ref())?;
    let op = pb.heat.operator(&flow.v)?;
    let (t_new, heat) = pb.map_t(&op, &theta, &flow.v)?;
    let lip = pb.lipschitz(&flow.v, cfg.p_exponent)?;
    Ok(CoupledState {
        v: flow.v.clone(),
        pi: flow.pi.clone(),
        theta: t_new,
        theta_flow: theta,
        flow,
        heat,
        history,
        converged: false,
        final_damping: damping,
        lipschitz: lip,
    })
}

/// Fixed point of `T` for a frozen velocity; returns the largest contraction ratio seen.
fn nested_fixed_point(
    pb: &CoupledProblem,
    cfg: &CouplingConfig,
    op: &HeatOperator,
    theta: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, HeatReport, usize, f64)> {
    let mut eta = theta.to_vec();
    let mut prev_diff = f64::NAN;
    let mut max_ratio = 0.0f64;
    for it in 1..=cfg.max_inner {
        let (t, h) = pb.map_t(op, &eta, v)?;
        let diff = pb.diff_norm(&t, &eta)?;
        if prev_diff.is_finite() && prev_diff > 0.0 && diff > 1e3 * cfg.tol_inner {
            max_ratio = max_ratio.max(diff / prev_diff);
        }
        prev_diff = diff;
        eta = t;
        if diff <= cfg.tol_inner {
            return Ok((eta, h, it, max_ratio));
        }
    }
    Err(Error::NonConvergence {
        solver: "temperature map",
        iterations: cfg.max_inner,
        last_residual: prev_diff,
        history: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_mass;
    use crate::mesh::{build_slab_mesh, DomainSpec};

    fn square(n: usize) -> Arc<Discretization> {
        Arc::new(Discretization::new(build_slab_mesh(&DomainSpec::rectangle(1.0, 1.0), &[n, n]).unwrap()))
    }

    #[test]
    fn poincare_constant_of_mixed_square() {
        // zero on top and sides, natural at the bottom: first mode sin(πx)cos(πy/2),
        // eigenvalue π² + π²/4
        let d = square(16);
        let c = EmbeddingConstants::estimate(&d, 20, 1).unwrap();
        let exact = 1.0 / (std::f64::consts::PI.powi(2) * 1.25).sqrt();
        assert!((c.poincare - exact).abs() < 0.01 * exact, "{} vs {exact}", c.poincare);
        assert!(c.l4_sampled <= c.l4_analytic);
        assert!(c.trace > 0.0);
    }

    #[test]
    fn power_iteration_upper_bounds_rayleigh_quotients() {
        let d = square(6);
        let c = EmbeddingConstants::estimate(&d, 0, 1).unwrap();
        let cons = d.temperature_constraints();
        let k = assemble_stiffness(&d, &|_| 1.0);
        let m = assemble_mass(&d);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let f: Vec<f64> = (0..cons.n_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let u = cons.expand(&f);
            assert!(m.bilinear(&u, &u) <= c.poincare.powi(2) * k.bilinear(&u, &u) * (1.0 + 1e-10));
        }
    }

    #[test]
    fn rejects_small_exponent() {
        let d = square(2);
        let models = MaterialModels {
            viscosity: crate::rheology::ViscosityModel::constant(1.0),
            conductivity: crate::rheology::ConductivityModel::constant(1.0),
            source: crate::rheology::SourceModel::Zero,
        };
        let c = EmbeddingConstants::estimate(&d, 0, 1).unwrap();
        let v = vec![0.0; d.n_velocity()];
        assert!(lipschitz_estimate(&d, &models, &c, &v, 0.0, 3.0).is_err());
        let e = lipschitz_estimate(&d, &models, &c, &v, 0.0, 4.0).unwrap();
        assert_eq!(e.l_hat, 0.0);
    }

    #[test]
    fn config_gates() {
        let mut c = CouplingConfig::default();
        assert!(c.validate().is_ok());
        c.p_exponent = 3.0;
        c.damping = 0.0;
        match c.validate() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
