//! Probes of the nonlinear viscous operator `⟨A(u), φ⟩ = ∫ 2μ(θ, u, |D(u)|) D(u):D(φ)`:
//! monotonicity, boundedness and hemicontinuity on random discrete fields.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::frozen_viscosity;
use crate::error::Result;
use crate::fem::{assemble_viscous, korn_ratio, velocity_w1p, Constraints, Discretization};
use crate::linalg::dot;
use crate::rheology::ViscosityModel;

/// Residual vector `⟨A(u), e_i⟩` over all velocity dofs.
pub fn apply(disc: &Discretization, model: &ViscosityModel, theta: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let mu = frozen_viscosity(disc, model, theta, u)?;
    Ok(assemble_viscous(disc, &mu).matvec(u))
}

pub fn pairing(disc: &Discretization, model: &ViscosityModel, theta: &[f64], u: &[f64], phi: &[f64]) -> Result<f64> {
    Ok(dot(&apply(disc, model, theta, u)?, phi))
}

/// Random field satisfying the constraints, with a random amplitude spread
/// over several decades so that both clamp bounds are reached.
pub fn random_admissible(cons: &Constraints, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let amp = 10f64.powf(rng.random_range(-2.0..2.0));
    let free: Vec<f64> = (0..cons.n_free()).map(|_| amp * rng.random_range(-1.0..1.0)).collect();
    cons.expand(&free)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorProbe {
    pub pairs: usize,
    /// `min ⟨A(u)−A(w), u−w⟩ / (‖u‖+‖w‖)²`.
    pub min_monotonicity: f64,
    pub monotonicity_violations: usize,
    /// `max |⟨A(u),φ⟩| / (2μ₁‖u‖‖φ‖)`.
    pub max_bound_ratio: f64,
    pub bound_violations: usize,
}

/// Monotonicity and boundedness over `pairs` random pairs in the constrained space.
/// Fields vanish on the constrained dofs so both members are admissible for
/// the homogeneous problem.
pub fn probe_operator(
    disc: &Discretization,
    model: &ViscosityModel,
    theta: &[f64],
    cons: &Constraints,
    pairs: usize,
    rng: &mut ChaCha8Rng,
    tol: f64,
) -> Result<OperatorProbe> {
    let mut out = OperatorProbe {
        pairs,
        min_monotonicity: f64::INFINITY,
        monotonicity_violations: 0,
        max_bound_ratio: 0.0,
        bound_violations: 0,
    };
    for i in 0..pairs {
        let u = random_admissible(cons, rng);
        // every other pair is collinear, which isolates the radial flux `s ↦ sμ(s)`
        let w = if i % 2 == 1 {
            let f = rng.random_range(1.1..2.0);
            u.iter().map(|a| a * f).collect()
        } else {
            random_admissible(cons, rng)
        };
        let au = apply(disc, model, theta, &u)?;
        let aw = apply(disc, model, theta, &w)?;
        let diff: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a - b).collect();
        let adiff: Vec<f64> = au.iter().zip(&aw).map(|(a, b)| a - b).collect();
        let nu = velocity_w1p(disc, &u, 2.0)?;
        let nw = velocity_w1p(disc, &w, 2.0)?;
        let scale = (nu + nw).powi(2);
        let m = dot(&adiff, &diff) / scale;
        out.min_monotonicity = out.min_monotonicity.min(m);
        if m < -tol {
            out.monotonicity_violations += 1;
        }
        // boundedness with φ = w
        let bound = 2.0 * model.mu1 * nu * nw;
        let r = dot(&au, &w).abs() / bound;
        out.max_bound_ratio = out.max_bound_ratio.max(r);
        if r > 1.0 + 1e-12 {
            out.bound_violations += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HemicontinuityProbe {
    pub coarse_samples: usize,
    pub fine_samples: usize,
    pub coarse_jump: f64,
    pub fine_jump: f64,
    /// Jump allowed on the fine grid: a Lipschitz curve shrinks its largest
    /// step with the spacing.
    pub allowed_fine_jump: f64,
    pub passed: bool,
}

fn max_jump(
    disc: &Discretization,
    model: &ViscosityModel,
    theta: &[f64],
    u: &[f64],
    w: &[f64],
    z: &[f64],
    n: usize,
) -> Result<f64> {
    let mut prev: Option<f64> = None;
    let mut jump = 0.0f64;
    for i in 0..=n {
        let t = -1.0 + 2.0 * i as f64 / n as f64;
        let x: Vec<f64> = u.iter().zip(w).map(|(a, b)| a + t * b).collect();
        let val = pairing(disc, model, theta, &x, z)?;
        if let Some(p) = prev {
            jump = jump.max((val - p).abs());
        }
        prev = Some(val);
    }
    Ok(jump)
}

/// Samples `t ↦ ⟨A(u + t w), z⟩` on `[−1, 1]` at two resolutions.
pub fn probe_hemicontinuity(
    disc: &Discretization,
    model: &ViscosityModel,
    theta: &[f64],
    cons: &Constraints,
    rng: &mut ChaCha8Rng,
    coarse: usize,
    fine: usize,
) -> Result<HemicontinuityProbe> {
    let u = random_admissible(cons, rng);
    let w = random_admissible(cons, rng);
    let z = random_admissible(cons, rng);
    let cj = max_jump(disc, model, theta, &u, &w, &z, coarse)?;
    let fj = max_jump(disc, model, theta, &u, &w, &z, fine)?;
    let floor = 1e-12 * 2.0 * model.mu1 * velocity_w1p(disc, &z, 2.0)? * (velocity_w1p(disc, &u, 2.0)? + velocity_w1p(disc, &w, 2.0)?);
    let allowed = 4.0 * cj * coarse as f64 / fine as f64 + floor;
    Ok(HemicontinuityProbe {
        coarse_samples: coarse,
        fine_samples: fine,
        coarse_jump: cj,
        fine_jump: fj,
        allowed_fine_jump: allowed,
        passed: fj <= allowed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KornProbe {
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub violations: usize,
}

/// Korn ratio over random fields with homogeneous constraints.
pub fn probe_korn(disc: &Discretization, cons: &Constraints, samples: usize, rng: &mut ChaCha8Rng) -> Result<KornProbe> {
    let hom = cons.homogeneous();
    let mut out = KornProbe {
        samples,
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
        violations: 0,
    };
    for _ in 0..samples {
        let u = random_admissible(&hom, rng);
        let r = korn_ratio(disc, &u)?;
        out.min_ratio = out.min_ratio.min(r);
        out.max_ratio = out.max_ratio.max(r);
        if !(0.5 - 1e-12..=1.0 + 1e-12).contains(&r) {
            out.violations += 1;
        }
    }
    Ok(out)
}
