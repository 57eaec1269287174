//! Pointwise Tresca friction pieces at the friction-surface quadrature points.
//! Multipliers and tangential traces are flat arrays with `nt` components per point.

/// `λ' = P(λ + ρ(v_t − s))` with `P` the projection onto the unit ball.
pub fn uzawa_update(lam: &[f64], vt: &[f64], s: &[f64], rho: f64, nt: usize) -> Vec<f64> {
    let mut out = vec![0.0; lam.len()];
    for q in 0..lam.len() / nt {
        let r = q * nt..(q + 1) * nt;
        let mut y = [0.0; 2];
        for t in 0..nt {
            y[t] = lam[r.start + t] + rho * (vt[r.start + t] - s[r.start + t]);
        }
        project_unit_ball(&mut y[..nt]);
        out[r].copy_from_slice(&y[..nt]);
    }
    out
}

pub fn project_unit_ball(y: &mut [f64]) {
    let n = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n > 1.0 {
        y.iter_mut().for_each(|a| *a /= n);
    }
}

/// `Σ_q w_q |(v_t − s)·(−k λ) + k|v_t − s||`, the quadrature form of the
/// complementarity integral.
pub fn complementarity_residual(w: &[f64], k: &[f64], lam: &[f64], vt: &[f64], s: &[f64], nt: usize) -> f64 {
    let mut acc = 0.0;
    for q in 0..w.len() {
        let mut dot = 0.0;
        let mut n2 = 0.0;
        for t in 0..nt {
            let x = vt[q * nt + t] - s[q * nt + t];
            dot += x * lam[q * nt + t];
            n2 += x * x;
        }
        acc += w[q] * (k[q] * (n2.sqrt() - dot)).abs();
    }
    acc
}

/// `j(φ) = Σ_q w_q k_q |φ_t − s|`.
pub fn friction_functional(w: &[f64], k: &[f64], vt: &[f64], s: &[f64], nt: usize) -> f64 {
    (0..w.len())
        .map(|q| {
            let n2: f64 = (0..nt).map(|t| (vt[q * nt + t] - s[q * nt + t]).powi(2)).sum();
            w[q] * k[q] * n2.sqrt()
        })
        .sum()
}

/// `L²(ω)` norm of `v_t − s`.
pub fn slip_l2(w: &[f64], vt: &[f64], s: &[f64], nt: usize) -> f64 {
    (0..w.len())
        .map(|q| w[q] * (0..nt).map(|t| (vt[q * nt + t] - s[q * nt + t]).powi(2)).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

pub fn max_pointwise_norm(lam: &[f64], nt: usize) -> f64 {
    lam.chunks(nt)
        .map(|c| c.iter().map(|a| a * a).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stick_with_zero_traction_is_fixed() {
        let out = uzawa_update(&[0.0], &[2.0], &[2.0], 5.0, 1);
        assert_eq!(out, vec![0.0]);
    }

    #[test]
    fn radial_projection() {
        // λ + ρ(v_t − s) = (3, 0)
        let out = uzawa_update(&[1.0, 0.0], &[1.5, 0.0], &[0.5, 0.0], 2.0, 2);
        assert_eq!(out, vec![1.0, 0.0]);
        let out = uzawa_update(&[0.0, 0.0], &[3.0, 4.0], &[0.0, 0.0], 1.0, 2);
        assert!((out[0] - 0.6).abs() < 1e-15 && (out[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn complementarity_cases() {
        let w = [0.5, 0.5];
        let k = [2.0, 2.0];
        // stick
        assert_eq!(complementarity_residual(&w, &k, &[0.3, -0.1], &[1.0, 1.0], &[1.0, 1.0], 1), 0.0);
        // aligned slip
        assert_eq!(complementarity_residual(&w, &k, &[1.0, -1.0], &[2.0, 0.0], &[1.0, 1.0], 1), 0.0);
        // unbalanced: λ = 0, residual = ∫ k|v_t − s|
        let r = complementarity_residual(&w, &k, &[0.0, 0.0], &[2.0, 0.0], &[1.0, 1.0], 1);
        assert_eq!(r, friction_functional(&w, &k, &[2.0, 0.0], &[1.0, 1.0], 1));
        assert!(r > 0.0);
    }
}
