//! Quadrature on simplices by collapsing a tensor Gauss–Legendre rule onto the
//! reference simplex. Weights are positive and normalized to sum to one, so a
//! physical integral is `measure · Σ w f(x_q)`.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

/// Barycentric points (first `dim + 1` entries used) with normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexRule {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 4], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Rule exact for polynomials of total degree `degree` on a `dim`-simplex,
/// `dim` in 1..=3.
pub fn simplex_rule(dim: usize, degree: usize) -> SimplexRule {
    assert!((1..=3).contains(&dim), "simplex dimension {dim} unsupported");
    // the collapse multiplies the integrand by (1-t)^(dim-1) in the worst direction
    let n = (degree + dim).div_ceil(2).max(1);
    let gl = GaussLegendre::new(NonZeroUsize::new(n).unwrap());
    let line: Vec<(f64, f64)> = gl.iter().map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();

    let mut points = Vec::new();
    let mut weights = Vec::new();
    match dim {
        1 => {
            for &(u, wu) in &line {
                points.push([1.0 - u, u, 0.0, 0.0]);
                weights.push(wu);
            }
        }
        2 => {
            for &(u, wu) in &line {
                for &(v, wv) in &line {
                    let x1 = u;
                    let x2 = v * (1.0 - u);
                    points.push([1.0 - x1 - x2, x1, x2, 0.0]);
                    weights.push(wu * wv * (1.0 - u));
                }
            }
        }
        _ => {
            for &(u, wu) in &line {
                for &(v, wv) in &line {
                    for &(w, ww) in &line {
                        let x1 = u;
                        let x2 = v * (1.0 - u);
                        let x3 = w * (1.0 - u) * (1.0 - v);
                        points.push([1.0 - x1 - x2 - x3, x1, x2, x3]);
                        weights.push(wu * wv * ww * (1.0 - u) * (1.0 - u) * (1.0 - v));
                    }
                }
            }
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    SimplexRule {
        dim,
        degree,
        points,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    // ∫ over the reference simplex of Π λ_i^{a_i}, divided by its volume 1/d!
    fn exact_monomial(exps: &[usize]) -> f64 {
        let d = exps.len() - 1;
        let num: f64 = exps.iter().map(|&a| factorial(a)).product();
        num * factorial(d) / factorial(exps.iter().sum::<usize>() + d)
    }

    #[test]
    fn weights_positive_and_normalized() {
        for dim in 1..=3 {
            for deg in 0..=8 {
                let r = simplex_rule(dim, deg);
                assert!(r.weights.iter().all(|&w| w > 0.0));
                assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn exact_for_barycentric_monomials() {
        for dim in 1..=3 {
            for deg in 0..=6 {
                let r = simplex_rule(dim, deg);
                let mut exps = vec![0usize; dim + 1];
                // enumerate all exponent tuples with total ≤ deg
                loop {
                    if exps.iter().sum::<usize>() <= deg {
                        let q: f64 = r
                            .iter()
                            .map(|(p, w)| w * exps.iter().enumerate().map(|(i, &a)| p[i].powi(a as i32)).product::<f64>())
                            .sum();
                        let e = exact_monomial(&exps);
                        assert!((q - e).abs() < 1e-13 * e.max(1.0), "dim {dim} deg {deg} {exps:?}: {q} vs {e}");
                    }
                    let mut k = 0;
                    loop {
                        if k > dim {
                            break;
                        }
                        exps[k] += 1;
                        if exps[k] <= deg {
                            break;
                        }
                        exps[k] = 0;
                        k += 1;
                    }
                    if k > dim {
                        break;
                    }
                }
            }
        }
    }
}
