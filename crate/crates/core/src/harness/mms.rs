//! Manufactured solutions on the unit square and the refinement study that
//! measures observed convergence rates against them.
//!
//! The velocity field comes from the stream function `ψ = sin²(πx)·φ(y)`
//! with `φ(y) = y − 3y³ + 2y⁴`, which vanishes with its normal derivative on
//! the sides and the top, has `v_y = 0` and zero shear at the bottom. That
//! makes it a solution of the frictionless (`k = 0`) bottom condition with
//! homogeneous lateral data, so the flux check never sees interpolation error.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coupling::{run_coupled, CoupledProblem, CouplingConfig};
use crate::error::{Error, Result};
use crate::fem::{Discretization, ScalarFn};
use crate::flow::{FlowConfig, FlowProblem, FlowSolver};
use crate::heat::{FluxField, HeatBcs, HeatConfig, HeatSolver};
use crate::mesh::{build_slab_mesh, DomainSpec, Point};
use crate::rheology::{ConductivityModel, MaterialModels, SourceModel, ViscosityModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmsCase {
    Flow,
    Heat,
    Coupled,
}

impl MmsCase {
    pub fn name(&self) -> &'static str {
        match self {
            MmsCase::Flow => "flow",
            MmsCase::Heat => "heat",
            MmsCase::Coupled => "coupled",
        }
    }
}

impl FromStr for MmsCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flow" => Ok(MmsCase::Flow),
            "heat" => Ok(MmsCase::Heat),
            "coupled" => Ok(MmsCase::Coupled),
            other => Err(Error::Config(vec![format!(
                "unknown manufactured case '{other}' (expected flow, heat or coupled)"
            )])),
        }
    }
}

/// Expected range of an observed rate; `max` is infinite when only a floor applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub quantity: String,
    pub min: f64,
    pub max: f64,
    pub observed_min: f64,
    pub observed_max: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmsTable {
    pub case: String,
    pub quantities: Vec<String>,
    /// Cells per unit length at each level.
    pub resolutions: Vec<usize>,
    /// `errors[level][quantity]`.
    pub errors: Vec<Vec<f64>>,
    /// `rates[level − 1][quantity]`, `log₂` of successive error ratios.
    pub rates: Vec<Vec<f64>>,
    /// Quantities whose error failed to decrease between some pair of levels.
    pub non_monotone: Vec<String>,
    pub checks: Vec<RateCheck>,
    /// Largest velocity error of the quadratic reproduction test (flow case only).
    pub quadratic_error: Option<f64>,
}

impl MmsTable {
    pub fn passed(&self) -> bool {
        self.non_monotone.is_empty()
            && self.checks.iter().all(|c| c.pass)
            && self.quadratic_error.is_none_or(|e| e <= QUADRATIC_TOL)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("case {}\n{:>6}", self.case, "n");
        for q in &self.quantities {
            out += &format!(" {:>12} {:>6}", q, "rate");
        }
        out.push('\n');
        for (l, n) in self.resolutions.iter().enumerate() {
            out += &format!("{n:>6}");
            for (k, e) in self.errors[l].iter().enumerate() {
                let rate = if l == 0 {
                    "-".to_string()
                } else {
                    format!("{:.3}", self.rates[l - 1][k])
                };
                out += &format!(" {e:>12.4e} {rate:>6}");
            }
            out.push('\n');
        }
        if let Some(e) = self.quadratic_error {
            out += &format!("quadratic reproduction error {e:.3e} (limit {QUADRATIC_TOL:.0e})\n");
        }
        for c in &self.checks {
            let range = if c.max.is_finite() {
                format!("[{}, {}]", c.min, c.max)
            } else {
                format!(">= {}", c.min)
            };
            out += &format!(
                "{} rate {} observed [{:.3}, {:.3}]: {}\n",
                c.quantity,
                range,
                c.observed_min,
                c.observed_max,
                if c.pass { "ok" } else { "FAIL" }
            );
        }
        for q in &self.non_monotone {
            out += &format!("{q}: error did not decrease monotonically\n");
        }
        out
    }
}

pub const QUADRATIC_TOL: f64 = 1e-8;
const BASE_RESOLUTION: usize = 8;

fn unit_square(n: usize) -> Result<Arc<Discretization>> {
    Ok(Arc::new(Discretization::new(build_slab_mesh(&DomainSpec::rectangle(1.0, 1.0), &[n, n])?)))
}

/// `X(x) = sin²(πx)` and its first three derivatives.
fn profile_x(x: f64) -> [f64; 4] {
    let (s2, c2) = (2.0 * PI * x).sin_cos();
    [0.5 * (1.0 - c2), PI * s2, 2.0 * PI * PI * c2, -4.0 * PI.powi(3) * s2]
}

/// `φ(y) = y − 3y³ + 2y⁴` and its first three derivatives.
fn profile_y(y: f64) -> [f64; 4] {
    [
        y - 3.0 * y.powi(3) + 2.0 * y.powi(4),
        1.0 - 9.0 * y * y + 8.0 * y.powi(3),
        -18.0 * y + 24.0 * y * y,
        -18.0 + 48.0 * y,
    ]
}

/// Exact velocity value and gradient (`grad[i][j] = ∂_j v_i`).
fn stream_velocity(x: &Point) -> (Point, [[f64; 3]; 3]) {
    let [a, a1, a2, _] = profile_x(x[0]);
    let [b, b1, b2, _] = profile_y(x[1]);
    let val = [a * b1, -a1 * b, 0.0];
    let mut grad = [[0.0; 3]; 3];
    grad[0][0] = a1 * b1;
    grad[0][1] = a * b2;
    grad[1][0] = -a2 * b;
    grad[1][1] = -a1 * b1;
    (val, grad)
}

fn stream_laplacian(x: &Point) -> [f64; 2] {
    let [a, a1, a2, a3] = profile_x(x[0]);
    let [b, b1, b2, b3] = profile_y(x[1]);
    [a2 * b1 + a * b3, -(a3 * b + a1 * b2)]
}

/// `π* = cos(πx)cos(πy)`, zero mean on the unit square.
fn pressure(x: &Point) -> (f64, Point) {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    (cx * cy, [-PI * sx * cy, -PI * cx * sy, 0.0])
}

/// `θ* = sin(πx)·y(1 − y)`.
fn temperature(x: &Point) -> (f64, Point) {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let w = x[1] * (1.0 - x[1]);
    (sx * w, [PI * cx * w, sx * (1.0 - 2.0 * x[1]), 0.0])
}

fn temperature_laplacian(x: &Point) -> f64 {
    let sx = (PI * x[0]).sin();
    -sx * (PI * PI * x[1] * (1.0 - x[1]) + 2.0)
}

/// Bottom flux matching `K∂θ*/∂n` with outward normal `−e_y`.
fn temperature_flux(k: f64) -> FluxField {
    FluxField::Function(Arc::new(move |x| -k * (PI * x[0]).sin()))
}

fn strain(grad: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    crate::fem::deformation_tensor(grad)
}

/// Body force `−div(2μD(v*)) + ∇π*` for a viscosity field `μ(x)` with gradient `∇μ`.
fn stokes_force(x: &Point, mu: f64, grad_mu: Point) -> Point {
    let lap = stream_laplacian(x);
    let (_, g) = stream_velocity(x);
    let d = strain(&g);
    let (_, gp) = pressure(x);
    let mut f = [0.0; 3];
    for i in 0..2 {
        let dmu = d[i][0] * grad_mu[0] + d[i][1] * grad_mu[1];
        f[i] = -mu * lap[i] - 2.0 * dmu + gp[i];
    }
    f
}

/// `(‖u − u*‖₂, |u − u*|₁,₂)` for a quadratic velocity field.
pub fn velocity_errors(disc: &Discretization, v: &[f64], exact: &dyn Fn(&Point) -> (Point, [[f64; 3]; 3])) -> (f64, f64) {
    let d = disc.dim;
    let (mut l2, mut h1) = (0.0, 0.0);
    for c in 0..disc.n_cells() {
        for q in 0..disc.n_qp() {
            let qp = &disc.cells[c].qp[q];
            let (val, grad) = disc.velocity_at_qp(v, c, q);
            let (ev, eg) = exact(&qp.x);
            for i in 0..d {
                l2 += qp.w * (val[i] - ev[i]).powi(2);
                for j in 0..d {
                    h1 += qp.w * (grad[i][j] - eg[i][j]).powi(2);
                }
            }
        }
    }
    (l2.sqrt(), h1.sqrt())
}

/// `(‖u − u*‖₂, |u − u*|₁,₂)` for a linear scalar field.
pub fn scalar_errors(disc: &Discretization, u: &[f64], exact: &dyn Fn(&Point) -> (f64, Point)) -> (f64, f64) {
    let d = disc.dim;
    let (mut l2, mut h1) = (0.0, 0.0);
    for c in 0..disc.n_cells() {
        let g = disc.scalar_grad(u, c);
        for q in 0..disc.n_qp() {
            let qp = &disc.cells[c].qp[q];
            let (ev, eg) = exact(&qp.x);
            l2 += qp.w * (disc.scalar_at(u, c, disc.p1_values_at(q)) - ev).powi(2);
            for j in 0..d {
                h1 += qp.w * (g[j] - eg[j]).powi(2);
            }
        }
    }
    (l2.sqrt(), h1.sqrt())
}

fn frictionless(g: crate::fem::VectorFn, f: crate::fem::VectorFn) -> FlowProblem {
    FlowProblem { g, f, ..FlowProblem::zero() }
}

const FLOW_MU: f64 = 1.5;

fn flow_level(n: usize) -> Result<Vec<f64>> {
    let disc = unit_square(n)?;
    let problem = frictionless(
        Arc::new(|_| [0.0; 3]),
        Arc::new(|x| stokes_force(x, FLOW_MU, [0.0; 3])),
    );
    let solver = FlowSolver::new(disc.clone(), &problem, ViscosityModel::constant(FLOW_MU), FlowConfig::default())?;
    let sol = solver.solve(&vec![0.0; disc.n_scalar()], None)?;
    let (vl2, vh1) = velocity_errors(&disc, &sol.v, &stream_velocity);
    let (pl2, _) = scalar_errors(&disc, &sol.pi, &pressure);
    Ok(vec![vl2, vh1, pl2])
}

/// Half-channel Poiseuille `u = 1 − y²`, `π = −2μ(x − ½)`: exactly representable.
fn quadratic_flow_error(n: usize) -> Result<f64> {
    let disc = unit_square(n)?;
    let problem = frictionless(Arc::new(|x| [1.0 - x[1] * x[1], 0.0, 0.0]), Arc::new(|_| [0.0; 3]));
    let solver = FlowSolver::new(disc.clone(), &problem, ViscosityModel::constant(FLOW_MU), FlowConfig::default())?;
    let sol = solver.solve(&vec![0.0; disc.n_scalar()], None)?;
    let exact = |x: &Point| {
        let mut g = [[0.0; 3]; 3];
        g[0][1] = -2.0 * x[1];
        ([1.0 - x[1] * x[1], 0.0, 0.0], g)
    };
    let (l2, h1) = velocity_errors(&disc, &sol.v, &exact);
    let (pl2, _) = scalar_errors(&disc, &sol.pi, &|x| (-2.0 * FLOW_MU * (x[0] - 0.5), [-2.0 * FLOW_MU, 0.0, 0.0]));
    Ok(l2.max(h1).max(pl2))
}

fn heat_models(viscosity: ViscosityModel) -> MaterialModels {
    MaterialModels {
        viscosity,
        conductivity: ConductivityModel::constant(1.0),
        source: SourceModel::Zero,
    }
}

fn heat_level(n: usize) -> Result<Vec<f64>> {
    let disc = unit_square(n)?;
    let bcs = HeatBcs {
        theta_omega: temperature_flux(1.0),
    };
    let src: ScalarFn = Arc::new(|x| -temperature_laplacian(x));
    let solver = HeatSolver::new(disc.clone(), heat_models(ViscosityModel::constant(1.0)), &bcs, HeatConfig::default())?
        .with_extra_source(src);
    let (theta, _) = solver.solve(&vec![0.0; disc.n_scalar()], &vec![0.0; disc.n_velocity()])?;
    let (l2, h1) = scalar_errors(&disc, &theta, &temperature);
    Ok(vec![l2, h1])
}

/// Temperature-dependent Carreau law with exponent 2, so `μ = η(θ)`.
pub fn coupled_viscosity() -> ViscosityModel {
    ViscosityModel::carreau(1.0, 2.0, 1.0, 2.0, 0.5, 0.5, 10.0)
}

fn coupled_level(n: usize) -> Result<Vec<f64>> {
    let disc = unit_square(n)?;
    let model = coupled_viscosity();
    let m = model.clone();
    let force = Arc::new(move |x: &Point| {
        let (t, gt) = temperature(x);
        // θ* ≥ 0 so η is smooth along it
        let mu = m.mu_of(t, 0.0);
        let dmu = -m.beta * (m.eta0 - m.mu_inf) * (-m.beta * t).exp();
        stokes_force(x, mu, [dmu * gt[0], dmu * gt[1], 0.0])
    });
    let problem = frictionless(Arc::new(|_| [0.0; 3]), force);
    let flow = FlowSolver::new(disc.clone(), &problem, model.clone(), FlowConfig::default())?;
    let m = model.clone();
    let src: ScalarFn = Arc::new(move |x| {
        let (t, gt) = temperature(x);
        let (v, g) = stream_velocity(x);
        let d = strain(&g);
        let dd: f64 = d.iter().flatten().map(|a| a * a).sum();
        -temperature_laplacian(x) + v[0] * gt[0] + v[1] * gt[1] - 2.0 * m.mu_of(t, dd.sqrt()) * dd
    });
    let bcs = HeatBcs {
        theta_omega: temperature_flux(1.0),
    };
    let heat = HeatSolver::new(disc.clone(), heat_models(model), &bcs, HeatConfig::default())?.with_extra_source(src);
    let pb = CoupledProblem::new(flow, heat, 16, 1)?;
    let st = run_coupled(&pb, &CouplingConfig::default(), &vec![0.0; disc.n_scalar()])?;
    if !st.converged {
        return Err(Error::NonConvergence {
            solver: "coupled manufactured solution",
            iterations: st.outer_iterations(),
            last_residual: st.history.last().map_or(f64::NAN, |r| r.residual),
            history: st.history.iter().map(|r| r.residual).collect(),
        });
    }
    let (tl2, th1) = scalar_errors(&disc, &st.theta, &temperature);
    let (vl2, vh1) = velocity_errors(&disc, &st.v, &stream_velocity);
    Ok(vec![tl2, th1, vl2, vh1])
}

fn rate_check(quantity: &str, min: f64, max: f64, rates: &[Vec<f64>], k: usize) -> RateCheck {
    let col: Vec<f64> = rates.iter().map(|r| r[k]).collect();
    let observed_min = col.iter().copied().fold(f64::INFINITY, f64::min);
    let observed_max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    RateCheck {
        quantity: quantity.to_string(),
        min,
        max,
        observed_min,
        observed_max,
        pass: observed_min >= min && observed_max <= max,
    }
}

/// Refinement study on `levels` meshes of `8·2ˡ` cells per side; coarser
/// meshes sit outside the asymptotic range of the coupled case.
pub fn run_mms(case: MmsCase, levels: usize) -> Result<MmsTable> {
    if levels < 3 {
        return Err(Error::Config(vec![format!(
            "a convergence study needs at least 3 levels, got {levels}"
        )]));
    }
    let resolutions: Vec<usize> = (0..levels).map(|l| BASE_RESOLUTION << l).collect();
    let (quantities, expected): (Vec<&str>, Vec<(f64, f64)>) = match case {
        MmsCase::Flow => (
            vec!["v_l2", "v_h1", "p_l2"],
            vec![(1.8, f64::INFINITY), (0.9, f64::INFINITY), (0.9, f64::INFINITY)],
        ),
        MmsCase::Heat => (vec!["theta_l2", "theta_h1"], vec![(1.8, f64::INFINITY), (0.9, f64::INFINITY)]),
        MmsCase::Coupled => (
            vec!["theta_l2", "theta_h1", "v_l2", "v_h1"],
            vec![(1.8, 2.5), (0.9, f64::INFINITY), (1.8, f64::INFINITY), (0.9, f64::INFINITY)],
        ),
    };
    let errors = resolutions
        .iter()
        .map(|&n| match case {
            MmsCase::Flow => flow_level(n),
            MmsCase::Heat => heat_level(n),
            MmsCase::Coupled => coupled_level(n),
        })
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<Vec<f64>> = errors
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a / b).log2()).collect())
        .collect();
    let non_monotone = quantities
        .iter()
        .enumerate()
        .filter(|(k, _)| errors.windows(2).any(|w| !(w[1][*k] < w[0][*k])))
        .map(|(_, q)| q.to_string())
        .collect();
    let checks = quantities
        .iter()
        .zip(&expected)
        .enumerate()
        .map(|(k, (q, (lo, hi)))| rate_check(q, *lo, *hi, &rates, k))
        .collect();
    let quadratic_error = match case {
        MmsCase::Flow => Some(
            resolutions
                .iter()
                .map(|&n| quadratic_flow_error(n))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max),
        ),
        _ => None,
    };
    Ok(MmsTable {
        case: case.name().to_string(),
        quantities: quantities.iter().map(|q| q.to_string()).collect(),
        resolutions,
        errors,
        rates,
        non_monotone,
        checks,
        quadratic_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let h = 1e-5;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn profiles_match_finite_differences() {
        for &t in &[0.13, 0.5, 0.77] {
            let px = profile_x(t);
            let py = profile_y(t);
            for k in 0..3 {
                let dx = fd(|s| profile_x(s)[k], t);
                let dy = fd(|s| profile_y(s)[k], t);
                assert!((dx - px[k + 1]).abs() < 1e-6 * (1.0 + dx.abs()), "x order {k}");
                assert!((dy - py[k + 1]).abs() < 1e-6 * (1.0 + dy.abs()), "y order {k}");
            }
        }
    }

    #[test]
    fn stream_field_satisfies_boundary_conditions() {
        for &t in &[0.0, 0.3, 0.8, 1.0] {
            let (v, _) = stream_velocity(&[0.0, t, 0.0]);
            assert!(v[0].abs() < 1e-14 && v[1].abs() < 1e-14);
            let (v, _) = stream_velocity(&[1.0, t, 0.0]);
            assert!(v[0].abs() < 1e-14 && v[1].abs() < 1e-14);
            let (v, _) = stream_velocity(&[t, 1.0, 0.0]);
            assert!(v[0].abs() < 1e-14 && v[1].abs() < 1e-14);
            let (v, g) = stream_velocity(&[t, 0.0, 0.0]);
            assert!(v[1].abs() < 1e-14);
            assert!((g[0][1] + g[1][0]).abs() < 1e-13);
        }
        for &x in &[0.2, 0.6] {
            let (_, g) = stream_velocity(&[x, 0.4, 0.0]);
            assert!((g[0][0] + g[1][1]).abs() < 1e-13);
        }
    }

    #[test]
    fn laplacian_matches_finite_differences() {
        let x = [0.31, 0.57, 0.0];
        let h = 1e-4;
        let lap = stream_laplacian(&x);
        for i in 0..2 {
            let f = |p: [f64; 3]| stream_velocity(&p).0[i];
            let mut fd = -4.0 * f(x);
            fd += f([x[0] + h, x[1], 0.0]) + f([x[0] - h, x[1], 0.0]);
            fd += f([x[0], x[1] + h, 0.0]) + f([x[0], x[1] - h, 0.0]);
            fd /= h * h;
            assert!((fd - lap[i]).abs() < 1e-5 * (1.0 + lap[i].abs()), "{fd} vs {}", lap[i]);
        }
    }

    #[test]
    fn too_few_levels_rejected() {
        assert!(run_mms(MmsCase::Heat, 2).is_err());
    }

    #[test]
    fn case_names_round_trip() {
        for c in [MmsCase::Flow, MmsCase::Heat, MmsCase::Coupled] {
            assert_eq!(c.name().parse::<MmsCase>().unwrap(), c);
        }
        assert!("thermal".parse::<MmsCase>().is_err());
    }

    #[test]
    fn heat_study_converges_at_second_order() {
        let t = run_mms(MmsCase::Heat, 3).unwrap();
        assert!(t.passed(), "{}", t.to_text());
    }
}
