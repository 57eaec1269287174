//! Temperature-independent energy bound on the velocity.
//!
//! With `w = v − G` admissible for the homogeneous conditions, testing the
//! inequality with `φ = G` and using `2‖D(w)‖² ≥ ‖∇w‖²` gives
//!
//! `μ₀‖v‖² ≤ 2(μ₀+μ₁)‖v‖‖G‖ + β‖f‖‖v‖ + 2μ₁‖G‖² + ‖f‖‖G‖_{1,q} + j(G)`
//!
//! where norms are gradient seminorms, `‖f‖ = h_max·‖f‖_{L^p}` (vertical
//! Poincaré on the slab, `v = 0` on top) and `β = |Ω|^{1/q − 1/2}` (Hölder).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub mu0: f64,
    pub mu1: f64,
    /// `‖v‖_{1,2}`
    pub v_norm: f64,
    /// `‖G‖_{1,2}`
    pub g_norm: f64,
    /// `‖G‖_{1,q}`
    pub g_norm_q: f64,
    /// `h_max·‖f‖_{L^p}`
    pub f_norm: f64,
    pub beta_emb: f64,
    /// `j(G)`
    pub j_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// Largest `‖v‖_{1,2}` compatible with the quadratic inequality.
    pub c_bound: f64,
    pub inputs: BoundInputs,
}

impl BoundReport {
    /// Slack is allowed to dip below zero by `rel_tol · rhs`.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.slack >= -rel_tol * self.rhs && self.inputs.v_norm <= self.c_bound * (1.0 + rel_tol)
    }
}

/// Root of `μ₀X² = bX + c`, the bound on `‖v‖_{1,2}`.
pub fn quadratic_bound(mu0: f64, b: f64, c: f64) -> f64 {
    (b + (b * b + 4.0 * mu0 * c).sqrt()) / (2.0 * mu0)
}

pub fn apriori_check(i: &BoundInputs) -> BoundReport {
    let lhs = i.mu0 * i.v_norm * i.v_norm;
    let b = 2.0 * (i.mu0 + i.mu1) * i.g_norm + i.beta_emb * i.f_norm;
    let c = 2.0 * i.mu1 * i.g_norm * i.g_norm + i.f_norm * i.g_norm_q + i.j_g;
    let rhs = b * i.v_norm + c;
    BoundReport {
        lhs,
        rhs,
        slack: rhs - lhs,
        c_bound: quadratic_bound(i.mu0, b, c),
        inputs: *i,
    }
}

/// `|Ω|^{1/q − 1/2}`: `‖∇u‖_q ≤ β‖∇u‖_2` for `q ≤ 2`.
pub fn embedding_constant(volume: f64, q: f64) -> f64 {
    volume.powf(1.0 / q - 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> BoundInputs {
        BoundInputs {
            mu0: 0.5,
            mu1: 20.0,
            v_norm: 1.0,
            g_norm: 0.8,
            g_norm_q: 0.9,
            f_norm: 0.3,
            beta_emb: 1.2,
            j_g: 0.1,
        }
    }

    #[test]
    fn zero_data() {
        let r = apriori_check(&BoundInputs {
            v_norm: 0.0,
            g_norm: 0.0,
            g_norm_q: 0.0,
            f_norm: 0.0,
            j_g: 0.0,
            ..inputs()
        });
        assert_eq!(r.lhs, 0.0);
        assert!(r.slack >= 0.0);
        assert_eq!(r.c_bound, 0.0);
    }

    #[test]
    fn root_solves_the_quadratic() {
        let (mu0, b, c) = (0.7, 3.0, 5.0);
        let x = quadratic_bound(mu0, b, c);
        assert!((mu0 * x * x - b * x - c).abs() < 1e-12);
    }

    #[test]
    fn doubling_force_raises_bound() {
        let base = apriori_check(&inputs());
        let twice = apriori_check(&BoundInputs {
            f_norm: 0.6,
            ..inputs()
        });
        assert!(twice.c_bound > base.c_bound);
    }

    #[test]
    fn hoelder_constant() {
        assert_eq!(embedding_constant(1.0, 4.0 / 3.0), 1.0);
        assert!((embedding_constant(2.5, 4.0 / 3.0) - 2.5f64.powf(0.25)).abs() < 1e-15);
    }
}
