//! Linearized temperature problem for a given velocity: diffusion plus skew
//! convection on the left, dissipation, source and bottom flux on the right.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_convection, assemble_stiffness, deformation_tensor, frobenius, omega_scalar_load, scalar_load, scalar_w1p,
    Constraints, Discretization, ScalarFn,
};
use crate::linalg::{dot, CsrMatrix, SparseLu};
use crate::mesh::BoundaryTag;
use crate::rheology::MaterialModels;

/// Prescribed heat flux `K ∂θ/∂n` on the bottom.
#[derive(Clone)]
pub enum FluxField {
    Constant(f64),
    /// One value per bottom facet, in mesh order.
    PerFacet(Vec<f64>),
    Function(ScalarFn),
}

impl std::fmt::Debug for FluxField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FluxField::Constant(c) => write!(f, "Constant({c})"),
            FluxField::PerFacet(v) => write!(f, "PerFacet({} values)", v.len()),
            FluxField::Function(_) => write!(f, "Function"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HeatBcs {
    pub theta_omega: FluxField,
}

impl HeatBcs {
    pub fn insulated() -> Self {
        Self {
            theta_omega: FluxField::Constant(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatConfig {
    /// Extra isotropic diffusion added to `K`; zero keeps the plain form.
    pub artificial_diffusion: f64,
    /// Random fields used for the coercivity probe in every report.
    pub coercivity_probes: usize,
    pub seed: u64,
}

impl Default for HeatConfig {
    fn default() -> Self {
        Self {
            artificial_diffusion: 0.0,
            coercivity_probes: 4,
            seed: 7,
        }
    }
}

impl HeatConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.artificial_diffusion >= 0.0 && self.artificial_diffusion.is_finite()) {
            return Err(Error::Config(vec![format!(
                "heat artificial_diffusion must be finite and nonnegative, got {}",
                self.artificial_diffusion
            )]));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatReport {
    /// `min B(θ,θ)/‖θ‖²₁,₂ − k₀` over the probe fields.
    pub coercivity_gap: f64,
    /// `|B(θ,ψ̂) − L(ψ̂)| / scale` with `ψ̂` the indicator of the free nodes.
    pub flux_balance: f64,
    pub l_scale: f64,
    /// Largest relative Galerkin residual on the free rows.
    pub galerkin_residual: f64,
    pub added_diffusion: f64,
    pub free_dofs: usize,
}

/// `B = stiffness + skew convection` for one velocity, factored once on the free dofs.
pub struct HeatOperator {
    pub b: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub convection: CsrMatrix,
    lu: SparseLu,
}

/// Heat problem bound to one discretization, material set and bottom flux.
pub struct HeatSolver {
    pub disc: Arc<Discretization>,
    pub models: MaterialModels,
    pub cfg: HeatConfig,
    pub cons: Constraints,
    /// `∫_ω θ_ω ψ_i`.
    pub flux_load: Vec<f64>,
    /// `‖θ_ω‖_{L²(ω)}`.
    pub flux_l2: f64,
    /// Additional volumetric source, e.g. for manufactured solutions.
    pub extra_source: Option<ScalarFn>,
    extra_load: Vec<f64>,
    stiffness: CsrMatrix,
}

impl HeatSolver {
    pub fn new(disc: Arc<Discretization>, models: MaterialModels, bcs: &HeatBcs, cfg: HeatConfig) -> Result<Self> {
        models.validate()?;
        cfg.validate()?;
        let omega_facets: Vec<usize> = disc.mesh.facets_with_tag(BoundaryTag::Omega).map(|(i, _)| i).collect();
        if let FluxField::PerFacet(v) = &bcs.theta_omega {
            if v.len() != omega_facets.len() {
                return Err(Error::invalid(format!(
                    "per-facet heat flux needs {} values, got {}",
                    omega_facets.len(),
                    v.len()
                )));
            }
        }
        let flux_at = |q: &crate::fem::OmegaQp| match &bcs.theta_omega {
            FluxField::Constant(c) => *c,
            FluxField::PerFacet(v) => v[omega_facets.binary_search(&q.facet).unwrap()],
            FluxField::Function(f) => f(&q.x),
        };
        let flux_load = omega_scalar_load(&disc, &|_, q| flux_at(q));
        let flux_l2 = disc.omega_qp.iter().map(|q| q.w * flux_at(q).powi(2)).sum::<f64>().sqrt();
        let eps = cfg.artificial_diffusion;
        let cond = models.conductivity.clone();
        let stiffness = assemble_stiffness(&disc, &|x| cond.eval(x) + eps);
        let cons = disc.temperature_constraints();
        let n = disc.n_scalar();
        Ok(Self {
            disc,
            models,
            cfg,
            cons,
            flux_load,
            flux_l2,
            extra_source: None,
            extra_load: vec![0.0; n],
            stiffness,
        })
    }

    pub fn with_extra_source(mut self, f: ScalarFn) -> Self {
        self.extra_load = scalar_load(&self.disc, &|_, _, x| f(x));
        self.extra_source = Some(f);
        self
    }

    /// Assemble and factor `B` for the velocity `v`.
    pub fn operator(&self, v: &[f64]) -> Result<HeatOperator> {
        if v.len() != self.disc.n_velocity() {
            return Err(Error::invalid("velocity field has the wrong length"));
        }
        let convection = assemble_convection(&self.disc, v);
        let b = self.stiffness.add(&convection);
        let free = &self.cons.free_index;
        let bf = b.submatrix(free, self.cons.n_free(), free, self.cons.n_free());
        let lu = SparseLu::factor(&bf).map_err(|e| Error::SolverFault(format!("heat matrix: {e}")))?;
        Ok(HeatOperator {
            b,
            stiffness: self.stiffness.clone(),
            convection,
            lu,
        })
    }

    /// `L(η, ψ_i) = ∫2μ(η,v,|D(v)|)|D(v)|²ψ_i + ∫r(η)ψ_i + ∫_ω θ_ω ψ_i`.
    pub fn assemble_l(&self, eta: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let disc = &*self.disc;
        if eta.len() != disc.n_scalar() || v.len() != disc.n_velocity() {
            return Err(Error::invalid("heat load inputs have the wrong length"));
        }
        let visc = &self.models.viscosity;
        let src = &self.models.source;
        // values first so model errors surface before any accumulation
        let mut dens = vec![0.0; disc.n_cells() * disc.n_qp()];
        for c in 0..disc.n_cells() {
            for q in 0..disc.n_qp() {
                let t = disc.scalar_at(eta, c, disc.p1_values_at(q));
                let (val, grad) = disc.velocity_at_qp(v, c, q);
                let dd = frobenius(&deformation_tensor(&grad));
                let mu = visc.mu(t, &val, dd)?;
                dens[c * disc.n_qp() + q] = 2.0 * mu * dd * dd + src.eval(t);
            }
        }
        let nq = disc.n_qp();
        let mut l = scalar_load(disc, &|c, q, _| dens[c * nq + q]);
        for i in 0..l.len() {
            l[i] += self.flux_load[i] + self.extra_load[i];
        }
        Ok(l)
    }

    /// Solve `B(θ, ψ) = L(η, ψ)` with the operator already factored.
    pub fn solve_with(&self, op: &HeatOperator, eta: &[f64], v: &[f64]) -> Result<(Vec<f64>, HeatReport)> {
        let l = self.assemble_l(eta, v)?;
        let rhs = self.cons.restrict(&l);
        let x = op.lu.solve(&rhs)?;
        let theta = self.cons.expand(&x);
        let report = self.report(op, &theta, &l)?;
        if report.galerkin_residual > 1e-9 {
            return Err(Error::SolverFault(format!(
                "heat solve residual {:.2e} too large",
                report.galerkin_residual
            )));
        }
        Ok((theta, report))
    }

    pub fn solve(&self, eta: &[f64], v: &[f64]) -> Result<(Vec<f64>, HeatReport)> {
        let op = self.operator(v)?;
        self.solve_with(&op, eta, v)
    }

    /// Free-node indicator `ψ̂`.
    pub fn free_indicator(&self) -> Vec<f64> {
        self.cons.fixed.iter().map(|f| if f.is_none() { 1.0 } else { 0.0 }).collect()
    }

    /// `(B(θ, ψ̂) − L(η, ψ̂), scale)`, scale being `Σ_free |L_i|`.
    pub fn energy_balance(&self, op: &HeatOperator, theta: &[f64], l: &[f64]) -> (f64, f64) {
        let psi = self.free_indicator();
        let bt = op.b.matvec(theta);
        let res = dot(&bt, &psi) - dot(l, &psi);
        let scale: f64 = l.iter().zip(&psi).map(|(a, p)| a.abs() * p).sum();
        (res, scale)
    }

    fn report(&self, op: &HeatOperator, theta: &[f64], l: &[f64]) -> Result<HeatReport> {
        let (res, scale) = self.energy_balance(op, theta, l);
        let bt = op.b.matvec(theta);
        let mut worst = 0.0f64;
        let mut mag = 0.0f64;
        for &i in &self.cons.free_dofs {
            worst = worst.max((bt[i] - l[i]).abs());
            mag = mag.max(l[i].abs()).max(bt[i].abs());
        }
        let galerkin_residual = if mag > 0.0 { worst / mag } else { worst };
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let mut probes: Vec<Vec<f64>> = Vec::new();
        if theta.iter().any(|&t| t != 0.0) {
            probes.push(theta.to_vec());
        }
        for _ in 0..self.cfg.coercivity_probes {
            let free: Vec<f64> = (0..self.cons.n_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
            probes.push(self.cons.homogeneous().expand(&free));
        }
        let k0 = self.models.conductivity.k0;
        let mut gap = f64::INFINITY;
        for p in &probes {
            let n = scalar_w1p(&self.disc, p, 2.0)?;
            if n > 0.0 {
                gap = gap.min(op.b.bilinear(p, p) / (n * n) - k0);
            }
        }
        Ok(HeatReport {
            coercivity_gap: if gap.is_finite() { gap } else { 0.0 },
            flux_balance: if scale > 0.0 { res.abs() / scale } else { res.abs() },
            l_scale: scale,
            galerkin_residual,
            added_diffusion: self.cfg.artificial_diffusion,
            free_dofs: self.cons.n_free(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, scalar_lp};
    use crate::mesh::{build_slab_mesh, DomainSpec};
    use crate::rheology::{ConductivityModel, SourceModel, ViscosityModel};
    use std::f64::consts::PI;

    fn square(n: usize) -> Arc<Discretization> {
        Arc::new(Discretization::new(build_slab_mesh(&DomainSpec::rectangle(1.0, 1.0), &[n, n]).unwrap()))
    }

    fn models(source: SourceModel) -> MaterialModels {
        MaterialModels {
            viscosity: ViscosityModel::constant(1.5),
            conductivity: ConductivityModel::constant(1.0),
            source,
        }
    }

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_data_gives_zero_temperature() {
        let d = square(3);
        let s = HeatSolver::new(d.clone(), models(SourceModel::Zero), &HeatBcs::insulated(), HeatConfig::default()).unwrap();
        let v = vec![0.0; d.n_velocity()];
        let eta = vec![0.0; d.n_scalar()];
        let l = s.assemble_l(&eta, &v).unwrap();
        assert!(l.iter().all(|&x| x == 0.0));
        let (theta, rep) = s.solve(&eta, &v).unwrap();
        assert!(theta.iter().all(|&x| x == 0.0));
        assert_eq!(rep.flux_balance, 0.0);
    }

    #[test]
    fn constant_source_load_is_mass_row_sum() {
        let d = square(3);
        let s = HeatSolver::new(d.clone(), models(SourceModel::Constant { value: 2.5 }), &HeatBcs::insulated(), HeatConfig::default())
            .unwrap();
        let l = s.assemble_l(&vec![0.3; d.n_scalar()], &vec![0.0; d.n_velocity()]).unwrap();
        let row_sums = assemble_mass(&d).matvec(&vec![2.5; d.n_scalar()]);
        for (a, b) in l.iter().zip(&row_sums) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn dissipation_load_matches_refined_quadrature() {
        // v = (y², 0): |D|² = 2y², dissipation 4μy²
        let d = square(3);
        let s = HeatSolver::new(d.clone(), models(SourceModel::Zero), &HeatBcs::insulated(), HeatConfig::default()).unwrap();
        let v = d.interpolate_velocity(&|x| [x[1] * x[1], 0.0, 0.0]);
        let l = s.assemble_l(&vec![0.0; d.n_scalar()], &v).unwrap();
        let fine = crate::quadrature::simplex_rule(2, 9);
        let mut oracle = vec![0.0; d.n_scalar()];
        for c in 0..d.n_cells() {
            let pts = d.mesh.cell_points(c);
            for (bary, w) in fine.iter() {
                let y: f64 = (0..3).map(|k| bary[k] * pts[k][1]).sum();
                for (k, &vi) in d.cell_p1(c).iter().enumerate() {
                    oracle[vi] += w * d.cells[c].volume * 4.0 * 1.5 * y * y * bary[k];
                }
            }
        }
        for (a, b) in l.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()));
            assert!(*a >= 0.0);
        }
    }

    #[test]
    fn quadratic_form_is_pure_diffusion() {
        let d = square(4);
        let s = HeatSolver::new(d.clone(), models(SourceModel::Zero), &HeatBcs::insulated(), HeatConfig::default()).unwrap();
        let v: Vec<f64> = random_vec(d.n_velocity(), 1).iter().map(|x| 5.0 * x).collect();
        let op = s.operator(&v).unwrap();
        assert!(op.convection.sub_max_abs(&op.convection.transpose(), -1.0) <= 1e-12 * op.convection.max_abs());
        for seed in 0..10 {
            let t = random_vec(d.n_scalar(), 100 + seed);
            let q = op.b.bilinear(&t, &t);
            let k = op.stiffness.bilinear(&t, &t);
            assert!((q - k).abs() <= 1e-12 * k);
        }
        let zero = s.operator(&vec![0.0; d.n_velocity()]).unwrap();
        assert!(zero.b.asymmetry() <= 1e-14 * zero.b.max_abs());
    }

    #[test]
    fn manufactured_temperature_converges_at_second_order() {
        // θ* = sin(πx) y(1−y), K = 1, v = 0
        let exact = |x: &crate::mesh::Point| (PI * x[0]).sin() * x[1] * (1.0 - x[1]);
        let mut errs = Vec::new();
        for n in [4, 8, 16, 32] {
            let d = square(n);
            let bcs = HeatBcs {
                theta_omega: FluxField::Function(Arc::new(|x| -(PI * x[0]).sin())),
            };
            let src: ScalarFn =
                Arc::new(|x| (PI * x[0]).sin() * (PI * PI * x[1] * (1.0 - x[1]) + 2.0));
            let s = HeatSolver::new(d.clone(), models(SourceModel::Zero), &bcs, HeatConfig::default())
                .unwrap()
                .with_extra_source(src);
            let (theta, rep) = s.solve(&vec![0.0; d.n_scalar()], &vec![0.0; d.n_velocity()]).unwrap();
            assert!(rep.flux_balance <= 1e-9);
            // L² error against the exact field at quadrature points
            let mut acc = 0.0;
            for c in 0..d.n_cells() {
                for q in 0..d.n_qp() {
                    let qp = &d.cells[c].qp[q];
                    let e = d.scalar_at(&theta, c, d.p1_values_at(q)) - exact(&qp.x);
                    acc += qp.w * e * e;
                }
            }
            errs.push(acc.sqrt());
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.8, "{errs:?}");
        }
    }

    #[test]
    fn uniform_drift_with_bottom_heating_stays_nonnegative() {
        let d = square(8);
        let bcs = HeatBcs {
            theta_omega: FluxField::Constant(1.0),
        };
        let s = HeatSolver::new(d.clone(), models(SourceModel::Zero), &bcs, HeatConfig::default()).unwrap();
        let v = d.interpolate_velocity(&|_| [1.0, 0.0, 0.0]);
        // dissipation vanishes for a uniform field
        let (theta, _) = s.solve(&vec![0.0; d.n_scalar()], &v).unwrap();
        assert!(theta.iter().all(|&t| t >= -1e-10));
        assert!(theta.iter().any(|&t| t > 0.0));
    }

    #[test]
    fn energy_balance_detects_perturbation() {
        let d = square(4);
        let bcs = HeatBcs {
            theta_omega: FluxField::Constant(0.5),
        };
        let s = HeatSolver::new(d.clone(), models(SourceModel::Constant { value: 1.0 }), &bcs, HeatConfig::default()).unwrap();
        let v = d.interpolate_velocity(&|x| [x[1] * (1.0 - x[1]), 0.0, 0.0]);
        let eta = vec![0.0; d.n_scalar()];
        let op = s.operator(&v).unwrap();
        let (theta, rep) = s.solve_with(&op, &eta, &v).unwrap();
        assert!(rep.flux_balance <= 1e-9);
        assert!(rep.coercivity_gap >= -1e-12);
        let l = s.assemble_l(&eta, &v).unwrap();
        let noise = random_vec(d.n_scalar(), 9);
        let mut last = 0.0;
        for amp in [1e-3, 2e-3, 4e-3] {
            let mut pert = theta.clone();
            for &i in &s.cons.free_dofs {
                pert[i] += amp * noise[i];
            }
            let (r, _) = s.energy_balance(&op, &pert, &l);
            if last != 0.0 {
                assert!((r.abs() / last - 2.0).abs() < 1e-6);
            }
            last = r.abs();
        }
    }

    #[test]
    fn superposition_of_source_and_flux() {
        let d = square(4);
        let v = d.interpolate_velocity(&|x| [x[1] * (1.0 - x[1]), 0.0, 0.0]);
        let eta = vec![0.0; d.n_scalar()];
        let run = |src: f64, flux: f64| {
            let bcs = HeatBcs {
                theta_omega: FluxField::Constant(flux),
            };
            let s = HeatSolver::new(d.clone(), models(SourceModel::Constant { value: src }), &bcs, HeatConfig::default())
                .unwrap();
            s.solve(&eta, &v).unwrap().0
        };
        let a = run(1.0, 0.0);
        let b = run(0.0, 2.0);
        let ab = run(1.0, 2.0);
        let base = run(0.0, 0.0);
        for i in 0..ab.len() {
            // the dissipation part is shared by all four runs
            assert!((ab[i] - (a[i] + b[i] - base[i])).abs() < 1e-10);
        }
        assert!(scalar_lp(&d, &ab, 2.0).unwrap() > 0.0);
    }
}
