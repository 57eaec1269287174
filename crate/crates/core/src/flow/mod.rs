//! Velocity–pressure solve for a frozen temperature: Picard on the viscosity,
//! Uzawa on the friction multiplier, one sparse LU per Picard step.

pub mod bounds;
pub mod friction;
pub mod operator;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_divergence, assemble_p1_integrals, assemble_tangential_trace, assemble_viscous, deformation_tensor,
    frobenius, velocity_load, velocity_w1p, Constraints, Discretization, ScalarFn, VectorFn,
};
use crate::linalg::{dot, norm_inf, CooBuilder, CsrMatrix, SparseLu};
use crate::mesh::{BoundaryTag, DomainSpec, Point};
use crate::rheology::ViscosityModel;

/// Complementarity floor relative to `∫k` times the largest boundary speed.
pub const COMP_FLOOR_FRACTION: f64 = 1e-2;

pub use bounds::{apriori_check, embedding_constant, quadratic_bound, BoundInputs, BoundReport};
pub use friction::{complementarity_residual, friction_functional, uzawa_update};

/// Friction threshold on the bottom surface.
#[derive(Clone)]
pub enum KField {
    Constant(f64),
    /// One value per bottom facet, in mesh order.
    PerFacet(Vec<f64>),
    Function(ScalarFn),
}

impl std::fmt::Debug for KField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KField::Constant(k) => write!(f, "Constant({k})"),
            KField::PerFacet(v) => write!(f, "PerFacet({} values)", v.len()),
            KField::Function(_) => write!(f, "Function"),
        }
    }
}

/// Threshold `k ≥ 0` and surface velocity `s` (tangential components first).
#[derive(Clone)]
pub struct FrictionData {
    pub k: KField,
    pub s: VectorFn,
}

impl FrictionData {
    pub fn frictionless() -> Self {
        Self {
            k: KField::Constant(0.0),
            s: Arc::new(|_| [0.0; 3]),
        }
    }
}

/// Lateral profile along axis 0: Couette part with wall speed `surface` at the
/// bottom plus a parabolic part sized so the volume flux per unit width is
/// `flux` at every section.
pub fn couette_poiseuille(spec: &DomainSpec, surface: f64, flux: f64) -> VectorFn {
    let spec = spec.clone();
    Arc::new(move |x: &Point| {
        let d = spec.dim;
        let xp = if d == 2 { [x[0], 0.0] } else { [x[0], x[1]] };
        let h = spec.height_at(xp);
        let xi = (x[d - 1] / h).clamp(0.0, 1.0);
        let up = flux / h - 0.5 * surface;
        [surface * (1.0 - xi) + 6.0 * up * xi * (1.0 - xi), 0.0, 0.0]
    })
}

/// Boundary data and body force of one flow problem.
#[derive(Clone)]
pub struct FlowProblem {
    /// Velocity on the lateral sides.
    pub g: VectorFn,
    /// Body force density.
    pub f: VectorFn,
    pub friction: FrictionData,
}

impl FlowProblem {
    pub fn zero() -> Self {
        Self {
            g: Arc::new(|_| [0.0; 3]),
            f: Arc::new(|_| [0.0; 3]),
            friction: FrictionData::frictionless(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BottomCondition {
    /// Tresca friction through the multiplier.
    Friction,
    /// Tangential velocity pinned to `s` at the bottom nodes.
    Stick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub tol_picard: f64,
    pub max_picard: usize,
    pub max_uzawa: usize,
    /// Complementarity tolerance relative to `∫_ω k (‖s‖_∞ + U_ref)`.
    pub comp_tol_factor: f64,
    /// Uzawa step as a multiple of the inverse dual Lipschitz constant.
    pub rho_factor: f64,
    pub picard_relax: f64,
    /// Target of `∫π`; nonzero values shift the pressure by a constant.
    pub gauge: f64,
    /// Exponent `p` of the force norm in the energy bound.
    pub p_exponent: f64,
    pub power_iters: usize,
    pub bottom: BottomCondition,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            tol_picard: 1e-10,
            max_picard: 200,
            max_uzawa: 2000,
            comp_tol_factor: 1e-10,
            rho_factor: 1.0,
            picard_relax: 1.0,
            gauge: 0.0,
            p_exponent: 4.0,
            power_iters: 30,
            bottom: BottomCondition::Friction,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.tol_picard > 0.0) {
            errs.push("flow tol_picard must be positive".to_string());
        }
        if !(self.comp_tol_factor > 0.0) {
            errs.push("flow comp_tol_factor must be positive".to_string());
        }
        if !(self.rho_factor > 0.0) {
            errs.push("flow rho_factor must be positive".to_string());
        }
        if !(self.picard_relax > 0.0 && self.picard_relax <= 1.0) {
            errs.push(format!("flow picard_relax must lie in (0, 1], got {}", self.picard_relax));
        }
        if self.max_picard == 0 || self.max_uzawa == 0 {
            errs.push("flow iteration limits must be at least 1".to_string());
        }
        if !(self.p_exponent >= 1.0) {
            errs.push(format!("flow p_exponent must be at least 1, got {}", self.p_exponent));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Normalized friction traction at the bottom quadrature points; `σ_t = −k λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrictionState {
    pub lambda: Vec<f64>,
    /// Tangential components per point.
    pub nt: usize,
}

impl FrictionState {
    pub fn zeros(n_points: usize, nt: usize) -> Self {
        Self {
            lambda: vec![0.0; n_points * nt],
            nt,
        }
    }

    pub fn max_norm(&self) -> f64 {
        friction::max_pointwise_norm(&self.lambda, self.nt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub picard_iters: usize,
    pub uzawa_iters: usize,
    pub picard_history: Vec<f64>,
    /// Complementarity residual after every Uzawa step, all Picard steps.
    pub uzawa_history: Vec<f64>,
    pub complementarity_residual: f64,
    pub tol_comp: f64,
    pub rho: f64,
    pub momentum_residual: f64,
    pub continuity_residual: f64,
    pub pressure_mean: f64,
    pub pressure_l2: f64,
    pub max_lambda: f64,
    pub slip_l2: f64,
    pub apriori: BoundReport,
}

#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub v: Vec<f64>,
    pub pi: Vec<f64>,
    pub lam: FrictionState,
    /// Viscosity at cell quadrature points used by the final linear solve.
    pub mu: Vec<f64>,
    pub report: FlowReport,
}

/// Viscosity at every cell quadrature point for frozen `(θ, v)`.
pub fn frozen_viscosity(disc: &Discretization, model: &ViscosityModel, theta: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let nq = disc.n_qp();
    let per_cell: Vec<Result<Vec<f64>>> = (0..disc.n_cells())
        .into_par_iter()
        .map(|c| {
            (0..nq)
                .map(|q| {
                    let t = disc.scalar_at(theta, c, disc.p1_values_at(q));
                    let (val, grad) = disc.velocity_at_qp(v, c, q);
                    let s = frobenius(&deformation_tensor(&grad));
                    let mu = model.mu(t, &val, s)?;
                    if !(mu >= model.mu0 && mu <= model.mu1) {
                        return Err(Error::ModelViolation(format!(
                            "viscosity {mu} outside [{}, {}] at θ = {t}, s = {s}",
                            model.mu0, model.mu1
                        )));
                    }
                    Ok(mu)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(disc.n_cells() * nq);
    for r in per_cell {
        out.extend(r?);
    }
    Ok(out)
}

/// Viscous matrix with the viscosity frozen at `(θ, v_frozen)`.
pub fn assemble_viscous_frozen(
    disc: &Discretization,
    model: &ViscosityModel,
    theta: &[f64],
    v_frozen: &[f64],
) -> Result<CsrMatrix> {
    Ok(assemble_viscous(disc, &frozen_viscosity(disc, model, theta, v_frozen)?))
}

/// Factored saddle system `[A −Bᵀ 0; −B 0 m; 0 mᵀ 0]` on the free velocity dofs.
pub struct Saddle {
    lu: SparseLu,
    a: CsrMatrix,
    nf: usize,
}

/// Velocity–pressure solver bound to one discretization, problem and viscosity model.
pub struct FlowSolver {
    pub disc: Arc<Discretization>,
    pub viscosity: ViscosityModel,
    pub cfg: FlowConfig,
    pub cons: Constraints,
    pub b: CsrMatrix,
    /// `∫ψ_q`, the gauge row.
    pub m: Vec<f64>,
    pub trace: CsrMatrix,
    trace_t: CsrMatrix,
    pub nt: usize,
    pub w_q: Vec<f64>,
    pub k_q: Vec<f64>,
    pub s_q: Vec<f64>,
    pub f_load: Vec<f64>,
    pub f_lp: f64,
    /// Discrete lifting of the boundary data.
    pub lifting: Vec<f64>,
    pub tol_comp: f64,
}

impl FlowSolver {
    pub fn new(disc: Arc<Discretization>, problem: &FlowProblem, viscosity: ViscosityModel, cfg: FlowConfig) -> Result<Self> {
        cfg.validate()?;
        viscosity.validate()?;
        let d = disc.dim;
        let nt = d - 1;
        let mut cons = disc.velocity_constraints(&*problem.g);
        if cfg.bottom == BottomCondition::Stick {
            let bottom = BoundaryTag::Omega.bit();
            let pinned = BoundaryTag::Gamma1.bit() | BoundaryTag::GammaL.bit();
            let mut fixed = cons.fixed.clone();
            for n in 0..disc.n_p2 {
                if disc.p2_tags[n] & bottom != 0 && disc.p2_tags[n] & pinned == 0 {
                    let sv = (problem.friction.s)(&disc.p2_coords[n]);
                    for t in 0..nt {
                        fixed[n * d + t] = Some(sv[t]);
                    }
                }
            }
            cons = Constraints::from_fixed(fixed);
        }
        let b = assemble_divergence(&disc);
        let m = assemble_p1_integrals(&disc);
        // ∫ div G over Ω equals the net lateral inflow; the rows of B sum to it
        let lift = cons.lifting();
        let net: f64 = b.matvec(&lift).iter().sum();
        let gross: f64 = (0..b.nrows).flat_map(|i| b.row(i)).map(|(j, val)| (val * lift[j]).abs()).sum();
        if net.abs() > 1e-9 * gross.max(f64::MIN_POSITIVE) {
            return Err(Error::invalid(format!(
                "lateral velocity data carries a net flux of {net:.3e} through the boundary; no incompressible flow matches it"
            )));
        }
        let trace = assemble_tangential_trace(&disc);
        let trace_t = trace.transpose();

        let omega_facets: Vec<usize> = disc.mesh.facets_with_tag(BoundaryTag::Omega).map(|(i, _)| i).collect();
        let mut w_q = Vec::with_capacity(disc.omega_qp.len());
        let mut k_q = Vec::with_capacity(disc.omega_qp.len());
        let mut s_q = Vec::with_capacity(disc.omega_qp.len() * nt);
        for q in &disc.omega_qp {
            w_q.push(q.w);
            let k = match &problem.friction.k {
                KField::Constant(k) => *k,
                KField::PerFacet(vals) => {
                    if vals.len() != omega_facets.len() {
                        return Err(Error::invalid(format!(
                            "per-facet friction needs {} values, got {}",
                            omega_facets.len(),
                            vals.len()
                        )));
                    }
                    vals[omega_facets.binary_search(&q.facet).unwrap()]
                }
                KField::Function(f) => f(&q.x),
            };
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::invalid(format!("friction threshold must be nonnegative, got {k}")));
            }
            k_q.push(if cfg.bottom == BottomCondition::Stick { 0.0 } else { k });
            let sv = (problem.friction.s)(&q.x);
            s_q.extend_from_slice(&sv[..nt]);
        }
        let f_load = velocity_load(&disc, &*problem.f);
        let p = cfg.p_exponent;
        let mut acc = 0.0;
        for cell in &disc.cells {
            for qp in &cell.qp {
                let fv = (problem.f)(&qp.x);
                acc += qp.w * (fv[0] * fv[0] + fv[1] * fv[1] + fv[2] * fv[2]).sqrt().powf(p);
            }
        }
        let f_lp = acc.powf(1.0 / p);

        let mut solver = Self {
            disc,
            viscosity,
            cfg,
            cons,
            b,
            m,
            trace,
            trace_t,
            nt,
            w_q,
            k_q,
            s_q,
            f_load,
            f_lp,
            lifting: Vec::new(),
            tol_comp: 0.0,
        };
        solver.lifting = solver.compute_lifting()?;
        let u_ref = solver
            .lifting
            .chunks(d)
            .map(|c| c.iter().map(|a| a * a).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let s_inf = solver.s_q.chunks(nt).map(|c| c.iter().map(|a| a * a).sum::<f64>().sqrt()).fold(0.0, f64::max);
        let k_int: f64 = solver.w_q.iter().zip(&solver.k_q).map(|(w, k)| w * k).sum();
        // the floor keeps the test meaningful when s vanishes
        solver.tol_comp = solver.cfg.comp_tol_factor * (k_int * s_inf + COMP_FLOOR_FRACTION * k_int * u_ref + f64::MIN_POSITIVE);
        Ok(solver)
    }

    pub fn n_omega_points(&self) -> usize {
        self.w_q.len()
    }

    /// Constant-viscosity (`μ₁`), frictionless, force-free flow with the same
    /// boundary data: the discrete lifting `G`.
    fn compute_lifting(&self) -> Result<Vec<f64>> {
        let mu = vec![self.viscosity.mu1; self.disc.n_cells() * self.disc.n_qp()];
        let a = assemble_viscous(&self.disc, &mu);
        let saddle = self.factor(a)?;
        let zero = vec![0.0; self.disc.n_velocity()];
        let (v, _) = self.saddle_solve(&saddle, &zero, 0.0, true)?;
        Ok(v)
    }

    pub fn factor(&self, a: CsrMatrix) -> Result<Saddle> {
        let cons = &self.cons;
        let nf = cons.n_free();
        let np = self.disc.n_scalar();
        let n = nf + np + 1;
        let mut coo = CooBuilder::with_capacity(n, n, a.nnz() + 2 * self.b.nnz() + 2 * np);
        for (r, &gi) in cons.free_dofs.iter().enumerate() {
            for (gj, val) in a.row(gi) {
                if let Some(c) = cons.free_index[gj] {
                    coo.push(r, c, val);
                }
            }
        }
        for q in 0..np {
            for (gj, val) in self.b.row(q) {
                if let Some(c) = cons.free_index[gj] {
                    coo.push(nf + q, c, -val);
                    coo.push(c, nf + q, -val);
                }
            }
            coo.push(nf + q, nf + np, self.m[q]);
            coo.push(nf + np, nf + q, self.m[q]);
        }
        let lu = SparseLu::factor(&coo.build())?;
        Ok(Saddle { lu, a, nf })
    }

    /// Solve with full-length momentum load; `with_data` applies the
    /// prescribed boundary values, otherwise they are taken as zero.
    pub fn saddle_solve(&self, s: &Saddle, load: &[f64], gauge: f64, with_data: bool) -> Result<(Vec<f64>, Vec<f64>)> {
        let cons = &self.cons;
        let np = self.disc.n_scalar();
        let mut rhs = vec![0.0; s.nf + np + 1];
        if with_data {
            let lift = cons.lifting();
            let alift = s.a.matvec(&lift);
            let blift = self.b.matvec(&lift);
            for (r, &gi) in cons.free_dofs.iter().enumerate() {
                rhs[r] = load[gi] - alift[gi];
            }
            rhs[s.nf..s.nf + np].copy_from_slice(&blift);
        } else {
            for (r, &gi) in cons.free_dofs.iter().enumerate() {
                rhs[r] = load[gi];
            }
        }
        rhs[s.nf + np] = gauge;
        let x = s.lu.solve(&rhs)?;
        let v = if with_data {
            cons.expand(&x[..s.nf])
        } else {
            cons.homogeneous().expand(&x[..s.nf])
        };
        Ok((v, x[s.nf..s.nf + np].to_vec()))
    }

    /// Momentum load `F − Tᵀ(w k λ)`.
    fn friction_load(&self, lam: &[f64]) -> Vec<f64> {
        let nt = self.nt;
        let scaled: Vec<f64> = lam
            .iter()
            .enumerate()
            .map(|(i, l)| -self.w_q[i / nt] * self.k_q[i / nt] * l)
            .collect();
        let mut load = self.trace_t.matvec(&scaled);
        load.iter_mut().zip(&self.f_load).for_each(|(a, f)| *a += f);
        load
    }

    /// Largest eigenvalue of `λ ↦ T S Tᵀ K λ` (S the constrained solve), the
    /// Lipschitz constant of the dual gradient in the `K`-weighted metric.
    pub fn dual_lipschitz(&self, s: &Saddle) -> Result<f64> {
        let nt = self.nt;
        let kw: Vec<f64> = (0..self.w_q.len()).map(|q| self.w_q[q] * self.k_q[q]).collect();
        let knorm = |x: &[f64]| -> f64 { x.iter().enumerate().map(|(i, a)| kw[i / nt] * a * a).sum::<f64>() };
        let mut x: Vec<f64> = (0..self.w_q.len() * nt)
            .map(|i| if kw[i / nt] > 0.0 { 1.0 + 0.3 * ((i as f64) * 0.7).sin() } else { 0.0 })
            .collect();
        let mut est = 0.0;
        for _ in 0..self.cfg.power_iters.max(1) {
            let n = knorm(&x).sqrt();
            if n == 0.0 {
                return Ok(0.0);
            }
            x.iter_mut().for_each(|a| *a /= n);
            let load: Vec<f64> = self
                .trace_t
                .matvec(&x.iter().enumerate().map(|(i, a)| kw[i / nt] * a).collect::<Vec<_>>());
            let (u, _) = self.saddle_solve(s, &load, 0.0, false)?;
            let y = self.trace.matvec(&u);
            let mut y: Vec<f64> = y.iter().enumerate().map(|(i, a)| if kw[i / nt] > 0.0 { *a } else { 0.0 }).collect();
            // Rayleigh quotient in the K metric, x normalized
            est = x.iter().zip(&y).enumerate().map(|(i, (a, b))| kw[i / nt] * a * b).sum::<f64>();
            std::mem::swap(&mut x, &mut y);
        }
        Ok(est)
    }

    /// Accelerated projected-gradient Uzawa iteration for one frozen viscosity.
    fn uzawa(
        &self,
        s: &Saddle,
        lam0: &[f64],
        history: &mut Vec<f64>,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, usize, f64)> {
        let nt = self.nt;
        let active: Vec<bool> = self.k_q.iter().map(|&k| k > 0.0).collect();
        let mask = |lam: &mut [f64]| {
            for (i, l) in lam.iter_mut().enumerate() {
                if !active[i / nt] {
                    *l = 0.0;
                }
            }
        };
        if !active.iter().any(|&a| a) {
            let (v, pi) = self.saddle_solve(s, &self.f_load, self.cfg.gauge, true)?;
            history.push(0.0);
            return Ok((v, pi, vec![0.0; lam0.len()], 0, 0.0));
        }
        let big_l = self.dual_lipschitz(s)? * 1.05;
        let rho = self.cfg.rho_factor / big_l.max(f64::MIN_POSITIVE);

        let mut lam = lam0.to_vec();
        for c in lam.chunks_mut(nt) {
            friction::project_unit_ball(c);
        }
        mask(&mut lam);
        let (mut v, mut pi) = self.saddle_solve(s, &self.friction_load(&lam), self.cfg.gauge, true)?;
        let mut lam_prev = lam.clone();
        let mut v_prev = v.clone();
        let mut t = 1.0f64;
        for it in 0..=self.cfg.max_uzawa {
            let vt = self.trace.matvec(&v);
            let res = complementarity_residual(&self.w_q, &self.k_q, &lam, &vt, &self.s_q, nt);
            history.push(res);
            if res <= self.tol_comp {
                return Ok((v, pi, lam, it, rho));
            }
            if it == self.cfg.max_uzawa {
                return Err(Error::NonConvergence {
                    solver: "uzawa",
                    iterations: it,
                    last_residual: res,
                    history: history.clone(),
                });
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            let y: Vec<f64> = lam.iter().zip(&lam_prev).map(|(a, b)| a + beta * (a - b)).collect();
            let vy: Vec<f64> = v.iter().zip(&v_prev).map(|(a, b)| a + beta * (a - b)).collect();
            let mut lam_new = uzawa_update(&y, &self.trace.matvec(&vy), &self.s_q, rho, nt);
            mask(&mut lam_new);
            let restart: f64 = y
                .iter()
                .zip(&lam_new)
                .zip(&lam)
                .map(|((yy, ln), l)| (yy - ln) * (ln - l))
                .sum();
            t = if restart > 0.0 { 1.0 } else { t_next };
            let (v_new, pi_new) = self.saddle_solve(s, &self.friction_load(&lam_new), self.cfg.gauge, true)?;
            lam_prev = std::mem::replace(&mut lam, lam_new);
            v_prev = std::mem::replace(&mut v, v_new);
            pi = pi_new;
        }
        unreachable!()
    }

    /// Solve for frozen temperature `theta`, optionally warm-started.
    pub fn solve(&self, theta: &[f64], warm: Option<&FlowSolution>) -> Result<FlowSolution> {
        let disc = &*self.disc;
        if theta.len() != disc.n_scalar() {
            return Err(Error::invalid("temperature field has the wrong length"));
        }
        let mut v = match warm {
            Some(w) => {
                let mut v = w.v.clone();
                for (i, f) in self.cons.fixed.iter().enumerate() {
                    if let Some(val) = f {
                        v[i] = *val;
                    }
                }
                v
            }
            None => self.lifting.clone(),
        };
        let mut lam = match warm {
            Some(w) if w.lam.lambda.len() == self.w_q.len() * self.nt => w.lam.lambda.clone(),
            _ => vec![0.0; self.w_q.len() * self.nt],
        };
        let mut picard_history = Vec::new();
        let mut uzawa_history = Vec::new();
        let mut uzawa_iters = 0;
        for it in 1..=self.cfg.max_picard {
            let mu = frozen_viscosity(disc, &self.viscosity, theta, &v)?;
            let saddle = self.factor(assemble_viscous(disc, &mu))?;
            let (v_new, pi, lam_new, n_uz, rho) = self.uzawa(&saddle, &lam, &mut uzawa_history)?;
            uzawa_iters += n_uz;
            let diff: Vec<f64> = v_new.iter().zip(&v).map(|(a, b)| a - b).collect();
            let dn = velocity_w1p(disc, &diff, 2.0)?;
            let vn = velocity_w1p(disc, &v, 2.0)?;
            let rel = if vn > 0.0 { dn / vn } else if dn == 0.0 { 0.0 } else { f64::INFINITY };
            picard_history.push(rel);
            lam = lam_new;
            if rel <= self.cfg.tol_picard {
                return self.finish(theta, v_new, pi, lam, mu, saddle, it, uzawa_iters, picard_history, uzawa_history, rho);
            }
            let w = self.cfg.picard_relax;
            v = v.iter().zip(&v_new).map(|(a, b)| a + w * (b - a)).collect();
        }
        let last = *picard_history.last().unwrap_or(&f64::NAN);
        Err(Error::NonConvergence {
            solver: "picard",
            iterations: self.cfg.max_picard,
            last_residual: last,
            history: picard_history,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        _theta: &[f64],
        v: Vec<f64>,
        pi: Vec<f64>,
        lam: Vec<f64>,
        mu: Vec<f64>,
        saddle: Saddle,
        picard_iters: usize,
        uzawa_iters: usize,
        picard_history: Vec<f64>,
        uzawa_history: Vec<f64>,
        rho: f64,
    ) -> Result<FlowSolution> {
        let disc = &*self.disc;
        let nt = self.nt;
        // momentum residual on free dofs: A v − Bᵀπ − (F − Tᵀ K λ)
        let av = saddle.a.matvec(&v);
        let btp = self.b.transpose().matvec(&pi);
        let load = self.friction_load(&lam);
        let mut mom = 0.0f64;
        let mut scale = 0.0f64;
        for &i in &self.cons.free_dofs {
            mom = mom.max((av[i] - btp[i] - load[i]).abs());
            scale = scale.max(av[i].abs()).max(btp[i].abs()).max(load[i].abs());
        }
        let momentum_residual = if scale > 0.0 { mom / scale } else { mom };
        let bv = self.b.matvec(&v);
        let cont_scale = self.b.max_abs() * norm_inf(&v);
        let continuity_residual = if cont_scale > 0.0 { norm_inf(&bv) / cont_scale } else { norm_inf(&bv) };
        if momentum_residual > 1e-8 || continuity_residual > 1e-8 {
            return Err(Error::SolverFault(format!(
                "saddle solve inaccurate (momentum {momentum_residual:.2e}, continuity {continuity_residual:.2e}); system is singular or ill-conditioned"
            )));
        }
        let vt = self.trace.matvec(&v);
        let comp = complementarity_residual(&self.w_q, &self.k_q, &lam, &vt, &self.s_q, nt);
        let pressure_mean = dot(&self.m, &pi);
        let pressure_l2 = crate::fem::scalar_lp(disc, &pi, 2.0)?;
        let lam_state = FrictionState { lambda: lam, nt };
        let apriori = self.apriori(&v)?;
        let report = FlowReport {
            picard_iters,
            uzawa_iters,
            picard_history,
            uzawa_history,
            complementarity_residual: comp,
            tol_comp: self.tol_comp,
            rho,
            momentum_residual,
            continuity_residual,
            pressure_mean,
            pressure_l2,
            max_lambda: lam_state.max_norm(),
            slip_l2: friction::slip_l2(&self.w_q, &vt, &self.s_q, nt),
            apriori,
        };
        Ok(FlowSolution {
            v,
            pi,
            lam: lam_state,
            mu,
            report,
        })
    }

    /// Energy bound inputs for a velocity `v` of this problem.
    pub fn bound_inputs(&self, v: &[f64]) -> Result<BoundInputs> {
        let disc = &*self.disc;
        let p = self.cfg.p_exponent;
        let q = p / (p - 1.0);
        let tg = self.trace.matvec(&self.lifting);
        Ok(BoundInputs {
            mu0: self.viscosity.mu0,
            mu1: self.viscosity.mu1,
            v_norm: velocity_w1p(disc, v, 2.0)?,
            g_norm: velocity_w1p(disc, &self.lifting, 2.0)?,
            g_norm_q: velocity_w1p(disc, &self.lifting, q)?,
            f_norm: disc.mesh.height_max() * self.f_lp,
            beta_emb: embedding_constant(disc.volume, q),
            j_g: friction_functional(&self.w_q, &self.k_q, &tg, &self.s_q, self.nt),
        })
    }

    pub fn apriori(&self, v: &[f64]) -> Result<BoundReport> {
        Ok(apriori_check(&self.bound_inputs(v)?))
    }

    /// `L²(ω)` norm of `s`.
    pub fn s_l2(&self) -> f64 {
        let zero = vec![0.0; self.s_q.len()];
        friction::slip_l2(&self.w_q, &zero, &self.s_q, self.nt)
    }

    /// Stress `σ = 2μD(v) − πI` at the bottom points split along `n = −e_d`.
    pub fn traction_postprocess(&self, theta: &[f64], sol: &FlowSolution) -> Result<TractionReport> {
        let disc = &*self.disc;
        let d = disc.dim;
        let nt = self.nt;
        let mut sigma_t = Vec::with_capacity(self.w_q.len() * nt);
        let mut sigma_n = Vec::with_capacity(self.w_q.len());
        for q in &disc.omega_qp {
            let (val, grad) = disc.velocity_at(&sol.v, q.cell, &q.bary);
            let dd = deformation_tensor(&grad);
            let t = disc.scalar_at(theta, q.cell, &q.bary);
            let mu = self.viscosity.mu(t, &val, frobenius(&dd))?;
            let p = disc.scalar_at(&sol.pi, q.cell, &q.bary);
            // σn with n = −e_d is minus the last column of σ
            for i in 0..nt {
                sigma_t.push(-2.0 * mu * dd[i][d - 1]);
            }
            sigma_n.push(2.0 * mu * dd[d - 1][d - 1] - p);
        }
        Ok(TractionReport::new(sigma_t, sigma_n, &self.k_q, &self.w_q, &sol.lam))
    }

    /// Smallest value of `a(v, φ−v) − (π, div(φ−v)) + j(φ) − j(v) − (f, φ−v)`
    /// over `φ = v ± δ e_i` for every free dof, divided by `δ` times the
    /// size of the terms. The viscosity is evaluated at `(θ, v)`.
    pub fn variational_residual(&self, theta: &[f64], sol: &FlowSolution, delta: f64) -> Result<f64> {
        let disc = &*self.disc;
        let nt = self.nt;
        let a = assemble_viscous_frozen(disc, &self.viscosity, theta, &sol.v)?;
        let av = a.matvec(&sol.v);
        let btp = self.b.transpose().matvec(&sol.pi);
        let r: Vec<f64> = (0..av.len()).map(|i| av[i] - btp[i] - self.f_load[i]).collect();
        let vt = self.trace.matvec(&sol.v);
        let jq = |q: usize, x: &[f64]| -> f64 {
            let n2: f64 = (0..nt).map(|t| (x[t] - self.s_q[q * nt + t]).powi(2)).sum();
            self.w_q[q] * self.k_q[q] * n2.sqrt()
        };
        let kmax = (0..disc.n_velocity())
            .map(|i| self.trace_t.row(i).map(|(r, t)| (self.w_q[r / nt] * self.k_q[r / nt] * t).abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let scale = delta * (norm_inf(&av) + norm_inf(&btp) + norm_inf(&self.f_load) + kmax);
        let mut worst = f64::INFINITY;
        for &i in &self.cons.free_dofs {
            for sign in [1.0, -1.0] {
                let step = sign * delta;
                let mut dj = 0.0;
                for (row, tv) in self.trace_t.row(i) {
                    let q = row / nt;
                    let base = &vt[q * nt..q * nt + nt];
                    let mut moved = [0.0; 2];
                    moved[..nt].copy_from_slice(base);
                    moved[row % nt] += step * tv;
                    dj += jq(q, &moved[..nt]) - jq(q, base);
                }
                worst = worst.min(step * r[i] + dj);
            }
        }
        Ok(if scale > 0.0 { worst / scale } else { worst })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractionReport {
    pub sigma_t: Vec<f64>,
    pub sigma_n: Vec<f64>,
    /// `max(|σ_t| − k)` over the points.
    pub max_overshoot: f64,
    /// Share of points with `|σ_t| ≤ 1.05 k`.
    pub fraction_within: f64,
    /// `‖σ_t + kλ‖_{L²(ω)} / ‖kλ‖_{L²(ω)}`.
    pub multiplier_gap: f64,
}

impl TractionReport {
    pub fn new(sigma_t: Vec<f64>, sigma_n: Vec<f64>, k: &[f64], w: &[f64], lam: &FrictionState) -> Self {
        let nt = lam.nt;
        let mut over = f64::NEG_INFINITY;
        let mut within = 0usize;
        let mut gap = 0.0;
        let mut mag = 0.0;
        for q in 0..k.len() {
            let st = &sigma_t[q * nt..q * nt + nt];
            let n = st.iter().map(|a| a * a).sum::<f64>().sqrt();
            over = over.max(n - k[q]);
            if n <= 1.05 * k[q] {
                within += 1;
            }
            for t in 0..nt {
                let m = k[q] * lam.lambda[q * nt + t];
                gap += w[q] * (st[t] + m).powi(2);
                mag += w[q] * m * m;
            }
        }
        Self {
            sigma_t,
            sigma_n,
            max_overshoot: over,
            fraction_within: if k.is_empty() { 1.0 } else { within as f64 / k.len() as f64 },
            multiplier_gap: if mag > 0.0 { (gap / mag).sqrt() } else { gap.sqrt() },
        }
    }
}

/// Evaluate `σn` split at given points for a prescribed `μ`-free state; used
/// for hydrostatic and rigid-motion checks.
pub fn hydrostatic_traction(pressure: f64, normal: &Point) -> Point {
    [-pressure * normal[0], -pressure * normal[1], -pressure * normal[2]]
}
