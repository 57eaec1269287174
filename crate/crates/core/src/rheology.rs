//! Constitutive models: viscosity `μ(θ, v, s)`, conductivity `K(x)` and heat
//! source `r(θ)`, each with the bounds and monotonicity it promises so the
//! promises can be sampled and checked.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViscosityKind {
    Constant,
    CarreauClamped,
    BinghamRegularized,
    PowerClamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
}

/// Shear- and temperature-dependent viscosity, clamped to `[mu0, mu1]`.
///
/// The temperature factor is `η(θ) = mu_inf + (eta0 − mu_inf)·exp(−β·max(θ, 0))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViscosityModel {
    pub kind: ViscosityKind,
    pub mu_inf: f64,
    /// Zero-shear viscosity at `θ ≤ 0`; the value of the constant model.
    pub eta0: f64,
    pub lambda_c: f64,
    pub r_exp: f64,
    pub beta: f64,
    /// Yield stress of the regularized Bingham law.
    pub tau_y: f64,
    /// Shear-rate regularization for the Bingham and power laws.
    pub eps: f64,
    pub mu0: f64,
    pub mu1: f64,
    /// Declared temperature Lipschitz constant.
    pub c_mu: f64,
    pub monotone_in_s: Monotonicity,
}

impl ViscosityModel {
    pub fn constant(mu: f64) -> Self {
        Self {
            kind: ViscosityKind::Constant,
            mu_inf: mu,
            eta0: mu,
            lambda_c: 0.0,
            r_exp: 2.0,
            beta: 0.0,
            tau_y: 0.0,
            eps: 1e-4,
            mu0: mu,
            mu1: mu,
            c_mu: 0.0,
            monotone_in_s: Monotonicity::Nondecreasing,
        }
    }

    /// Clamped Carreau law with the analytic Lipschitz constant and the
    /// monotonicity its exponent implies.
    pub fn carreau(mu_inf: f64, eta0: f64, lambda_c: f64, r_exp: f64, beta: f64, mu0: f64, mu1: f64) -> Self {
        let mut m = Self {
            kind: ViscosityKind::CarreauClamped,
            mu_inf,
            eta0,
            lambda_c,
            r_exp,
            beta,
            tau_y: 0.0,
            eps: 1e-4,
            mu0,
            mu1,
            c_mu: 0.0,
            monotone_in_s: Monotonicity::Nondecreasing,
        };
        m.c_mu = m.analytic_c_mu();
        m.monotone_in_s = m.analytic_monotonicity();
        m
    }

    pub fn bingham(mu_inf: f64, eta0: f64, tau_y: f64, eps: f64, beta: f64, mu0: f64, mu1: f64) -> Self {
        let mut m = Self {
            kind: ViscosityKind::BinghamRegularized,
            mu_inf,
            eta0,
            lambda_c: 0.0,
            r_exp: 2.0,
            beta,
            tau_y,
            eps,
            mu0,
            mu1,
            c_mu: 0.0,
            monotone_in_s: Monotonicity::Nonincreasing,
        };
        m.c_mu = m.analytic_c_mu();
        m
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.mu0 > 0.0) {
            errs.push(format!("mu0 must be positive (lower viscosity bound), got {}", self.mu0));
        }
        if !(self.mu1 >= self.mu0) {
            errs.push(format!("mu1 = {} is below mu0 = {}", self.mu1, self.mu0));
        }
        if self.kind != ViscosityKind::Constant {
            if !(self.mu_inf >= 0.0) {
                errs.push(format!("mu_inf must be nonnegative, got {}", self.mu_inf));
            }
            if !(self.eta0 >= self.mu_inf) {
                errs.push(format!("eta0 = {} is below mu_inf = {}", self.eta0, self.mu_inf));
            }
            if !(self.beta >= 0.0) {
                errs.push(format!("beta must be nonnegative, got {}", self.beta));
            }
            if !(self.lambda_c >= 0.0) {
                errs.push(format!("lambda_c must be nonnegative, got {}", self.lambda_c));
            }
            if !(self.eps > 0.0) {
                errs.push(format!("eps must be positive, got {}", self.eps));
            }
            if !(self.tau_y >= 0.0) {
                errs.push(format!("tau_y must be nonnegative, got {}", self.tau_y));
            }
        } else if !(self.eta0 >= self.mu0 && self.eta0 <= self.mu1) {
            errs.push(format!("constant viscosity {} outside [mu0, mu1]", self.eta0));
        }
        if !(self.c_mu >= 0.0) {
            errs.push(format!("c_mu must be nonnegative, got {}", self.c_mu));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Temperature factor `η(θ)`.
    pub fn eta(&self, theta: f64) -> f64 {
        self.mu_inf + (self.eta0 - self.mu_inf) * (-self.beta * theta.max(0.0)).exp()
    }

    fn unclamped(&self, theta: f64, s: f64) -> f64 {
        let eta = self.eta(theta);
        match self.kind {
            ViscosityKind::Constant => self.eta0,
            ViscosityKind::CarreauClamped => {
                let f = (1.0 + self.lambda_c * self.lambda_c * s * s).powf(0.5 * (self.r_exp - 2.0));
                self.mu_inf + (eta - self.mu_inf) * f
            }
            ViscosityKind::BinghamRegularized => eta + self.tau_y / (s * s + self.eps * self.eps).sqrt(),
            ViscosityKind::PowerClamped => {
                eta * (self.eps * self.eps + self.lambda_c * self.lambda_c * s * s).powf(0.5 * (self.r_exp - 2.0))
            }
        }
    }

    /// `μ(θ, v, s)`. The velocity slot is accepted but unused by every kind.
    pub fn mu(&self, theta: f64, _v: &Point, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::invalid(format!("shear magnitude must be nonnegative, got {s}")));
        }
        Ok(self.mu_of(theta, s))
    }

    /// Same as [`mu`](Self::mu) without the input check.
    #[inline]
    pub fn mu_of(&self, theta: f64, s: f64) -> f64 {
        self.unclamped(theta, s).clamp(self.mu0, self.mu1)
    }

    pub fn analytic_monotonicity(&self) -> Monotonicity {
        match self.kind {
            ViscosityKind::Constant => Monotonicity::Nondecreasing,
            ViscosityKind::CarreauClamped | ViscosityKind::PowerClamped if self.r_exp >= 2.0 => {
                Monotonicity::Nondecreasing
            }
            _ => Monotonicity::Nonincreasing,
        }
    }

    /// Temperature Lipschitz constant implied by the formula and the clamp.
    pub fn analytic_c_mu(&self) -> f64 {
        match self.kind {
            ViscosityKind::Constant => 0.0,
            // the slope of the unclamped value is β·(its excess over mu_inf), which the clamp caps
            ViscosityKind::CarreauClamped if self.r_exp > 2.0 => self.beta * (self.mu1 - self.mu_inf).max(0.0),
            ViscosityKind::CarreauClamped | ViscosityKind::BinghamRegularized => {
                self.beta * (self.eta0 - self.mu_inf)
            }
            ViscosityKind::PowerClamped => self.beta * self.mu1,
        }
    }

    /// True when the proof-relevant requirement (nondecreasing in `s`) holds.
    pub fn is_shear_monotone_nondecreasing(&self) -> bool {
        self.analytic_monotonicity() == Monotonicity::Nondecreasing
    }
}

/// Viscous dissipation density `2μ|D|²`.
pub fn dissipation(model: &ViscosityModel, theta: f64, v: &Point, dv: &[[f64; 3]; 3]) -> Result<f64> {
    let s2: f64 = dv.iter().flatten().map(|x| x * x).sum();
    Ok(2.0 * model.mu(theta, v, s2.sqrt())? * s2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConductivityKind {
    Constant { k: f64 },
    /// `K(x) = base + grad·x`
    Affine { base: f64, grad: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductivityModel {
    pub kind: ConductivityKind,
    pub k0: f64,
    pub k1: f64,
}

impl ConductivityModel {
    pub fn constant(k: f64) -> Self {
        Self {
            kind: ConductivityKind::Constant { k },
            k0: k,
            k1: k,
        }
    }

    pub fn eval(&self, x: &Point) -> f64 {
        match &self.kind {
            ConductivityKind::Constant { k } => *k,
            ConductivityKind::Affine { base, grad } => base + grad[0] * x[0] + grad[1] * x[1] + grad[2] * x[2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.k0 > 0.0) {
            errs.push(format!("k0 must be positive (lower conductivity bound), got {}", self.k0));
        }
        if !(self.k1 >= self.k0) {
            errs.push(format!("k1 = {} is below k0 = {}", self.k1, self.k0));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Largest distance by which `K` leaves `[k0, k1]` over the given points.
    pub fn bound_violation(&self, points: &[Point]) -> f64 {
        points.iter().fold(0.0f64, |m, x| {
            let k = self.eval(x);
            m.max(self.k0 - k).max(k - self.k1)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceModel {
    Zero,
    Constant { value: f64 },
    /// `r(θ) = r0 − a·tanh(θ / t_ref)`; nonincreasing for `a ≥ 0`.
    Tanh { r0: f64, a: f64, t_ref: f64 },
}

impl SourceModel {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            SourceModel::Zero => 0.0,
            SourceModel::Constant { value } => *value,
            SourceModel::Tanh { r0, a, t_ref } => r0 - a * (theta / t_ref).tanh(),
        }
    }

    /// `sup |r|`.
    pub fn r1(&self) -> f64 {
        match self {
            SourceModel::Zero => 0.0,
            SourceModel::Constant { value } => value.abs(),
            SourceModel::Tanh { r0, a, .. } => r0.abs() + a.abs(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            SourceModel::Tanh { a, t_ref, .. } => a.abs() / t_ref,
            _ => 0.0,
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        match self {
            SourceModel::Tanh { a, .. } => *a >= 0.0,
            _ => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let SourceModel::Tanh { t_ref, .. } = self {
            if !(*t_ref > 0.0) {
                return Err(Error::Config(vec![format!("source t_ref must be positive, got {t_ref}")]));
            }
        }
        Ok(())
    }
}

/// Everything the coupled problem needs to know about the material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialModels {
    pub viscosity: ViscosityModel,
    pub conductivity: ConductivityModel,
    pub source: SourceModel,
}

impl MaterialModels {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        for r in [self.viscosity.validate(), self.conductivity.validate(), self.source.validate()] {
            match r {
                Err(Error::Config(e)) => errs.extend(e),
                Err(e) => errs.push(e.to_string()),
                Ok(()) => {}
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisGrid {
    pub theta_min: f64,
    pub theta_max: f64,
    pub n_theta: usize,
    pub s_max: f64,
    pub n_s: usize,
}

impl Default for HypothesisGrid {
    fn default() -> Self {
        Self {
            theta_min: -1.0,
            theta_max: 10.0,
            n_theta: 100,
            s_max: 1e3,
            n_s: 100,
        }
    }
}

/// Sampled check of the viscosity, source and conductivity hypotheses.
/// Violations are distances past the promised bound; zero means clean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub samples: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_bound_violation: f64,
    pub s_monotonicity_violation: f64,
    pub theta_increase_violation: f64,
    pub max_theta_slope: f64,
    pub c_mu: f64,
    pub c_mu_violation: f64,
    pub r_bound_violation: f64,
    pub max_r_slope: f64,
    pub c_r_violation: f64,
    pub r_increase_violation: f64,
    pub k_bound_violation: f64,
}

impl HypothesisReport {
    /// Names of checks whose violation exceeds rounding (`tol` relative to the scale).
    pub fn failures(&self, tol: f64) -> Vec<&'static str> {
        let mu_scale = self.mu_max.abs().max(1.0);
        let checks = [
            ("viscosity bounds", self.mu_bound_violation, mu_scale),
            ("shear monotonicity", self.s_monotonicity_violation, mu_scale),
            ("temperature nonincreasing", self.theta_increase_violation, mu_scale),
            ("temperature Lipschitz", self.c_mu_violation, self.c_mu.max(1.0)),
            ("source bound", self.r_bound_violation, 1.0),
            ("source Lipschitz", self.c_r_violation, 1.0),
            ("source nonincreasing", self.r_increase_violation, 1.0),
            ("conductivity bounds", self.k_bound_violation, 1.0),
        ];
        checks
            .iter()
            .filter(|(_, v, s)| *v > tol * s)
            .map(|(n, _, _)| *n)
            .collect()
    }
}

pub fn verify_hypotheses(models: &MaterialModels, grid: &HypothesisGrid, k_points: &[Point]) -> HypothesisReport {
    let m = &models.viscosity;
    let thetas: Vec<f64> = (0..grid.n_theta)
        .map(|i| grid.theta_min + (grid.theta_max - grid.theta_min) * i as f64 / (grid.n_theta - 1).max(1) as f64)
        .collect();
    let ss: Vec<f64> = (0..grid.n_s)
        .map(|j| grid.s_max * j as f64 / (grid.n_s - 1).max(1) as f64)
        .collect();
    let table: Vec<Vec<f64>> = thetas.iter().map(|&t| ss.iter().map(|&s| m.mu_of(t, s)).collect()).collect();

    let mut rep = HypothesisReport {
        samples: thetas.len() * ss.len(),
        mu_min: f64::INFINITY,
        mu_max: f64::NEG_INFINITY,
        mu_bound_violation: 0.0,
        s_monotonicity_violation: 0.0,
        theta_increase_violation: 0.0,
        max_theta_slope: 0.0,
        c_mu: m.c_mu,
        c_mu_violation: 0.0,
        r_bound_violation: 0.0,
        max_r_slope: 0.0,
        c_r_violation: 0.0,
        r_increase_violation: 0.0,
        k_bound_violation: models.conductivity.bound_violation(k_points),
    };
    for (i, row) in table.iter().enumerate() {
        for (j, &mu) in row.iter().enumerate() {
            rep.mu_min = rep.mu_min.min(mu);
            rep.mu_max = rep.mu_max.max(mu);
            rep.mu_bound_violation = rep.mu_bound_violation.max(m.mu0 - mu).max(mu - m.mu1);
            if !mu.is_finite() {
                rep.mu_bound_violation = f64::INFINITY;
            }
            if j + 1 < row.len() {
                let step = row[j + 1] - mu;
                let bad = match m.monotone_in_s {
                    Monotonicity::Nondecreasing => -step,
                    Monotonicity::Nonincreasing => step,
                };
                rep.s_monotonicity_violation = rep.s_monotonicity_violation.max(bad);
            }
            if i + 1 < table.len() {
                let dt = thetas[i + 1] - thetas[i];
                let diff = table[i + 1][j] - mu;
                rep.theta_increase_violation = rep.theta_increase_violation.max(diff);
                let slope = diff.abs() / dt;
                rep.max_theta_slope = rep.max_theta_slope.max(slope);
                rep.c_mu_violation = rep.c_mu_violation.max(slope - m.c_mu);
            }
        }
    }
    let src = &models.source;
    let r1 = src.r1();
    let cr = src.lipschitz();
    for w in thetas.windows(2) {
        let (a, b) = (src.eval(w[0]), src.eval(w[1]));
        rep.r_bound_violation = rep.r_bound_violation.max(a.abs() - r1).max(b.abs() - r1);
        let slope = (b - a).abs() / (w[1] - w[0]);
        rep.max_r_slope = rep.max_r_slope.max(slope);
        rep.c_r_violation = rep.c_r_violation.max(slope - cr);
        if src.is_nonincreasing() {
            rep.r_increase_violation = rep.r_increase_violation.max(b - a);
        }
    }
    rep
}
