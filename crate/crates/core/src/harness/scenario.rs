//! Turns a validated [`RunConfig`] into meshes, models and solvers.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::RunConfig;
use crate::coupling::CoupledProblem;
use crate::error::{Error, Result};
use crate::fem::Discretization;
use crate::flow::{couette_poiseuille, FlowProblem, FlowSolver, FrictionData, KField};
use crate::heat::{FluxField, HeatBcs, HeatSolver};
use crate::mesh::{build_slab_mesh, DomainSpec, HeightFn};
use crate::rheology::{
    ConductivityKind, ConductivityModel, MaterialModels, Monotonicity, SourceModel, ViscosityKind, ViscosityModel,
};

pub struct Scenario {
    pub cfg: RunConfig,
    pub spec: DomainSpec,
    pub disc: Arc<Discretization>,
    pub models: MaterialModels,
    pub flow_problem: FlowProblem,
    pub heat_bcs: HeatBcs,
}

pub fn domain_spec(cfg: &RunConfig) -> Result<DomainSpec> {
    let d = &cfg.domain;
    let height = match d.height_kind.as_str() {
        "constant" => HeightFn::Constant(d.height_base),
        "affine" => HeightFn::Affine {
            base: d.height_base,
            slope: d.height_slope,
        },
        "sampled" => HeightFn::Sampled {
            nx: d.height_nx.max(1),
            ny: d.height_ny.max(1),
            values: d.height_samples.clone(),
        },
        other => return Err(Error::Config(vec![format!("[domain] unknown height_kind '{other}'")])),
    };
    let spec = DomainSpec {
        dim: d.dim,
        omega_extent: d.length[..d.dim - 1].to_vec(),
        height,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn material_models(cfg: &RunConfig) -> Result<MaterialModels> {
    let r = &cfg.rheology;
    let mut viscosity = match r.kind.as_str() {
        "constant" => {
            let mut m = ViscosityModel::constant(r.eta0);
            m.mu0 = r.mu0;
            m.mu1 = r.mu1;
            m
        }
        "carreau" => ViscosityModel::carreau(r.mu_inf, r.eta0, r.lambda_c, r.r_exp, r.beta, r.mu0, r.mu1),
        "bingham" => ViscosityModel::bingham(r.mu_inf, r.eta0, r.tau_y, r.eps, r.beta, r.mu0, r.mu1),
        "power" => {
            let mut m = ViscosityModel::carreau(r.mu_inf, r.eta0, r.lambda_c, r.r_exp, r.beta, r.mu0, r.mu1);
            m.kind = ViscosityKind::PowerClamped;
            m.eps = r.eps;
            m.c_mu = m.analytic_c_mu();
            m.monotone_in_s = m.analytic_monotonicity();
            m
        }
        other => return Err(Error::Config(vec![format!("[rheology] unknown kind '{other}'")])),
    };
    match r.monotone_in_s.as_str() {
        "nondecreasing" => viscosity.monotone_in_s = Monotonicity::Nondecreasing,
        "nonincreasing" => viscosity.monotone_in_s = Monotonicity::Nonincreasing,
        _ => {}
    }
    if r.c_mu >= 0.0 {
        viscosity.c_mu = r.c_mu;
    }
    let k = &cfg.conductivity;
    let conductivity = ConductivityModel {
        kind: match k.kind.as_str() {
            "affine" => ConductivityKind::Affine { base: k.k, grad: k.grad },
            _ => ConductivityKind::Constant { k: k.k },
        },
        k0: k.k0,
        k1: k.k1,
    };
    let s = &cfg.source;
    let source = match s.kind.as_str() {
        "zero" => SourceModel::Zero,
        "constant" => SourceModel::Constant { value: s.value },
        _ => SourceModel::Tanh {
            r0: s.r0,
            a: s.a,
            t_ref: s.t_ref,
        },
    };
    let models = MaterialModels {
        viscosity,
        conductivity,
        source,
    };
    models.validate()?;
    Ok(models)
}

impl Scenario {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let errs = cfg.violations();
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        let spec = domain_spec(cfg)?;
        let mesh = build_slab_mesh(&spec, &cfg.domain.resolution)?;
        let disc = Arc::new(Discretization::with_degrees(
            mesh,
            cfg.domain.cell_degree,
            cfg.domain.facet_degree,
        ));
        let models = material_models(cfg)?;
        let s = cfg.friction.s;
        let g = match cfg.bcs.lateral.as_str() {
            "zero" => Arc::new(|_: &crate::mesh::Point| [0.0; 3]) as crate::fem::VectorFn,
            _ => couette_poiseuille(&spec, s[0], cfg.bcs.flux),
        };
        let force = cfg.bcs.force;
        let k = if cfg.friction.k_per_facet.is_empty() {
            KField::Constant(cfg.friction.k)
        } else {
            KField::PerFacet(cfg.friction.k_per_facet.clone())
        };
        let flow_problem = FlowProblem {
            g,
            f: Arc::new(move |_| force),
            friction: FrictionData {
                k,
                s: Arc::new(move |_| [s[0], s[1], 0.0]),
            },
        };
        let heat_bcs = HeatBcs {
            theta_omega: if cfg.bcs.theta_omega_per_facet.is_empty() {
                FluxField::Constant(cfg.bcs.theta_omega)
            } else {
                FluxField::PerFacet(cfg.bcs.theta_omega_per_facet.clone())
            },
        };
        Ok(Self {
            cfg: cfg.clone(),
            spec,
            disc,
            models,
            flow_problem,
            heat_bcs,
        })
    }

    pub fn default_scenario() -> Result<Self> {
        Self::new(&RunConfig::default())
    }

    pub fn flow_solver(&self) -> Result<FlowSolver> {
        FlowSolver::new(
            self.disc.clone(),
            &self.flow_problem,
            self.models.viscosity.clone(),
            self.cfg.flow.clone(),
        )
    }

    pub fn heat_solver(&self) -> Result<HeatSolver> {
        HeatSolver::new(self.disc.clone(), self.models.clone(), &self.heat_bcs, self.cfg.heat.clone())
    }

    pub fn coupled(&self) -> Result<CoupledProblem> {
        CoupledProblem::new(
            self.flow_solver()?,
            self.heat_solver()?,
            self.cfg.output.constant_samples,
            self.cfg.output.seed,
        )
    }

    /// Initial temperature: zero, or seeded uniform noise on the free nodes.
    pub fn theta0(&self, seed: u64) -> Vec<f64> {
        let n = self.disc.n_scalar();
        match self.cfg.coupling.theta0.as_str() {
            "random" => random_temperature(&self.disc, self.cfg.coupling.theta0_amplitude, seed),
            _ => vec![0.0; n],
        }
    }
}

/// Uniform noise in `[0, amplitude)` on the free temperature nodes.
pub fn random_temperature(disc: &Discretization, amplitude: f64, seed: u64) -> Vec<f64> {
    let cons = disc.temperature_constraints();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free: Vec<f64> = (0..cons.n_free()).map(|_| amplitude * rng.random::<f64>()).collect();
    cons.expand(&free)
}
