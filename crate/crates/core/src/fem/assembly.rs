//! Global matrices and load vectors. Local element matrices may be computed
//! in parallel; they are always inserted in cell order, so the assembled
//! matrix does not depend on the thread count.

use rayon::prelude::*;

use super::{Discretization, OmegaQp};
use crate::linalg::{CooBuilder, CsrMatrix};
use crate::mesh::Point;

/// `∫ 2μ D(φ_a):D(φ_b)` over the velocity space with `μ` given per cell
/// quadrature point (`mu[c * nq + q]`).
pub fn assemble_viscous(disc: &Discretization, mu: &[f64]) -> CsrMatrix {
    let d = disc.dim;
    let nloc = disc.n_local_p2();
    let nq = disc.n_qp();
    assert_eq!(mu.len(), disc.n_cells() * nq);
    let ndof = nloc * d;
    let locals: Vec<Vec<f64>> = (0..disc.n_cells())
        .into_par_iter()
        .map(|c| {
            let mut k = vec![0.0; ndof * ndof];
            for q in 0..nq {
                let wm = disc.cells[c].qp[q].w * mu[c * nq + q];
                let g = disc.p2_grads_at(c, q);
                for a in 0..nloc {
                    for b in 0..nloc {
                        let gg: f64 = (0..d).map(|j| g[a][j] * g[b][j]).sum();
                        for ci in 0..d {
                            for e in 0..d {
                                // D(N_a e_c):D(N_b e_e) = ½(δ_ce ∇N_a·∇N_b + ∂_e N_a ∂_c N_b)
                                let mut v = g[a][e] * g[b][ci];
                                if ci == e {
                                    v += gg;
                                }
                                k[(a * d + ci) * ndof + b * d + e] += wm * v;
                            }
                        }
                    }
                }
            }
            k
        })
        .collect();
    let mut coo = CooBuilder::with_capacity(disc.n_velocity(), disc.n_velocity(), disc.n_cells() * ndof * ndof);
    for (c, k) in locals.iter().enumerate() {
        let nodes = disc.cell_p2(c);
        for a in 0..nloc {
            for ci in 0..d {
                let row = nodes[a] * d + ci;
                for b in 0..nloc {
                    for e in 0..d {
                        coo.push(row, nodes[b] * d + e, k[(a * d + ci) * ndof + b * d + e]);
                    }
                }
            }
        }
    }
    coo.build()
}

/// `(ψ_q, div φ_a)`: rows are pressure vertices, columns velocity dofs.
pub fn assemble_divergence(disc: &Discretization) -> CsrMatrix {
    let d = disc.dim;
    let mut coo = CooBuilder::new(disc.n_scalar(), disc.n_velocity());
    for c in 0..disc.n_cells() {
        let nodes = disc.cell_p2(c);
        let verts = disc.cell_p1(c);
        for q in 0..disc.n_qp() {
            let w = disc.cells[c].qp[q].w;
            let psi = disc.p1_values_at(q);
            let g = disc.p2_grads_at(c, q);
            for (k, &pv) in verts.iter().enumerate() {
                for (a, &n) in nodes.iter().enumerate() {
                    for ci in 0..d {
                        coo.push(pv, n * d + ci, w * psi[k] * g[a][ci]);
                    }
                }
            }
        }
    }
    coo.build()
}

/// `∫ ψ_q` for every linear basis function.
pub fn assemble_p1_integrals(disc: &Discretization) -> Vec<f64> {
    scalar_load(disc, &|_, _, _| 1.0)
}

/// `∫ κ ∇ψ_i·∇ψ_j` with `κ` evaluated at cell quadrature points.
pub fn assemble_stiffness(disc: &Discretization, kappa: &dyn Fn(&Point) -> f64) -> CsrMatrix {
    let mut coo = CooBuilder::new(disc.n_scalar(), disc.n_scalar());
    for c in 0..disc.n_cells() {
        let verts = disc.cell_p1(c);
        let gl = &disc.cells[c].grad_bary;
        let kbar: f64 = disc.cells[c].qp.iter().map(|qp| qp.w * kappa(&qp.x)).sum();
        for (i, &vi) in verts.iter().enumerate() {
            for (j, &vj) in verts.iter().enumerate() {
                let gg: f64 = (0..disc.dim).map(|a| gl[i][a] * gl[j][a]).sum();
                coo.push(vi, vj, kbar * gg);
            }
        }
    }
    coo.build()
}

/// `∫ ψ_i ψ_j`.
pub fn assemble_mass(disc: &Discretization) -> CsrMatrix {
    let mut coo = CooBuilder::new(disc.n_scalar(), disc.n_scalar());
    for c in 0..disc.n_cells() {
        let verts = disc.cell_p1(c);
        for q in 0..disc.n_qp() {
            let w = disc.cells[c].qp[q].w;
            let l = disc.p1_values_at(q);
            for (i, &vi) in verts.iter().enumerate() {
                for (j, &vj) in verts.iter().enumerate() {
                    coo.push(vi, vj, w * l[i] * l[j]);
                }
            }
        }
    }
    coo.build()
}

/// `∫_ω ψ_i ψ_j dx'`.
pub fn assemble_omega_mass(disc: &Discretization) -> CsrMatrix {
    let mut coo = CooBuilder::new(disc.n_scalar(), disc.n_scalar());
    for q in &disc.omega_qp {
        let verts = disc.cell_p1(q.cell);
        for (i, &vi) in verts.iter().enumerate() {
            for (j, &vj) in verts.iter().enumerate() {
                let v = q.w * q.bary[i] * q.bary[j];
                if v != 0.0 {
                    coo.push(vi, vj, v);
                }
            }
        }
    }
    coo.build()
}

/// Skew convection `c(θ,ψ) = ½∫(ψ v·∇θ − θ v·∇ψ)`; entry `(i, j)` pairs test
/// `ψ_i` with trial `θ_j`. Each pair is inserted once with opposite signs, so
/// the matrix is antisymmetric to the last bit.
pub fn assemble_convection(disc: &Discretization, v: &[f64]) -> CsrMatrix {
    let mut coo = CooBuilder::new(disc.n_scalar(), disc.n_scalar());
    let d = disc.dim;
    for c in 0..disc.n_cells() {
        let verts = disc.cell_p1(c);
        let gl = &disc.cells[c].grad_bary;
        let n = verts.len();
        let mut local = vec![0.0; n * n];
        for q in 0..disc.n_qp() {
            let w = disc.cells[c].qp[q].w;
            let l = disc.p1_values_at(q);
            let (vel, _) = disc.velocity_at_qp(v, c, q);
            let vg: Vec<f64> = (0..n).map(|k| (0..d).map(|a| vel[a] * gl[k][a]).sum()).collect();
            for i in 0..n {
                for j in i + 1..n {
                    local[i * n + j] += 0.5 * w * (l[i] * vg[j] - l[j] * vg[i]);
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let cij = local[i * n + j];
                coo.push(verts[i], verts[j], cij);
                coo.push(verts[j], verts[i], -cij);
            }
        }
    }
    coo.build()
}

/// `∫ f ψ_i` with `f(cell, qp, x)`.
pub fn scalar_load(disc: &Discretization, f: &dyn Fn(usize, usize, &Point) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; disc.n_scalar()];
    for c in 0..disc.n_cells() {
        let verts = disc.cell_p1(c);
        for q in 0..disc.n_qp() {
            let qp = &disc.cells[c].qp[q];
            let fw = qp.w * f(c, q, &qp.x);
            let l = disc.p1_values_at(q);
            for (k, &v) in verts.iter().enumerate() {
                out[v] += fw * l[k];
            }
        }
    }
    out
}

/// `∫_ω g ψ_i dx'` with `g(omega quadrature point index, point)`.
pub fn omega_scalar_load(disc: &Discretization, g: &dyn Fn(usize, &OmegaQp) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; disc.n_scalar()];
    for (k, q) in disc.omega_qp.iter().enumerate() {
        let gw = q.w * g(k, q);
        for (i, &v) in disc.cell_p1(q.cell).iter().enumerate() {
            out[v] += gw * q.bary[i];
        }
    }
    out
}

/// `∫ f·φ_a` for a body force density.
pub fn velocity_load(disc: &Discretization, f: &dyn Fn(&Point) -> Point) -> Vec<f64> {
    let d = disc.dim;
    let mut out = vec![0.0; disc.n_velocity()];
    for c in 0..disc.n_cells() {
        let nodes = disc.cell_p2(c);
        for q in 0..disc.n_qp() {
            let qp = &disc.cells[c].qp[q];
            let fv = f(&qp.x);
            let vals = disc.p2_values_at(q);
            for (a, &n) in nodes.iter().enumerate() {
                for ci in 0..d {
                    out[n * d + ci] += qp.w * fv[ci] * vals[a];
                }
            }
        }
    }
    out
}

/// Tangential trace at the friction-surface quadrature points: row
/// `q * (dim - 1) + t` evaluates velocity component `t` at point `q`.
pub fn assemble_tangential_trace(disc: &Discretization) -> CsrMatrix {
    let d = disc.dim;
    let nt = d - 1;
    let mut coo = CooBuilder::new(disc.omega_qp.len() * nt, disc.n_velocity());
    for (k, q) in disc.omega_qp.iter().enumerate() {
        let vals = super::p2_values(d, &q.bary);
        for (a, &n) in disc.cell_p2(q.cell).iter().enumerate() {
            if vals[a] == 0.0 {
                continue;
            }
            for t in 0..nt {
                coo.push(k * nt + t, n * d + t, vals[a]);
            }
        }
    }
    coo.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{deformation_tensor, Discretization};
    use crate::linalg::dot;
    use crate::mesh::{build_slab_mesh, DomainSpec, HeightFn};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sloped(n: usize, m: usize) -> Discretization {
        let spec = DomainSpec {
            dim: 2,
            omega_extent: vec![2.0],
            height: HeightFn::Affine { base: 1.0, slope: [0.25, 0.0] },
        };
        Discretization::new(build_slab_mesh(&spec, &[n, m]).unwrap())
    }

    fn constant_mu(disc: &Discretization, m: f64) -> Vec<f64> {
        vec![m; disc.n_cells() * disc.n_qp()]
    }

    fn energy_by_quadrature(disc: &Discretization, phi: &[f64], mu: f64) -> f64 {
        let mut e = 0.0;
        for c in 0..disc.n_cells() {
            for q in 0..disc.n_qp() {
                let (_, g) = disc.velocity_at_qp(phi, c, q);
                let dd = deformation_tensor(&g);
                let s: f64 = dd.iter().flatten().map(|x| x * x).sum();
                e += disc.cells[c].qp[q].w * 2.0 * mu * s;
            }
        }
        e
    }

    #[test]
    fn viscous_quadratic_form_is_strain_energy() {
        let disc = sloped(3, 2);
        let a = assemble_viscous(&disc, &constant_mu(&disc, 1.7));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let phi: Vec<f64> = (0..disc.n_velocity()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lhs = a.bilinear(&phi, &phi);
            let rhs = energy_by_quadrature(&disc, &phi, 1.7);
            assert!((lhs - rhs).abs() <= 1e-10 * rhs);
        }
        assert!(a.asymmetry() <= 1e-12 * a.max_abs());
    }

    #[test]
    fn constant_viscosity_scales_linearly() {
        let disc = sloped(2, 2);
        let a1 = assemble_viscous(&disc, &constant_mu(&disc, 1.0));
        let a3 = assemble_viscous(&disc, &constant_mu(&disc, 3.0));
        assert!(a3.sub_max_abs(&a1.scaled(3.0), 1.0) <= 1e-13 * a3.max_abs());
    }

    #[test]
    fn poiseuille_energy_matches_closed_form() {
        // v = (U(1 − y²), 0) on (0,L)×(0,1): |D|² = 2·(U y)², ∫2μ|D|² = 4μU²L/3
        let spec = DomainSpec::rectangle(2.0, 1.0);
        let disc = Discretization::new(build_slab_mesh(&spec, &[3, 3]).unwrap());
        let u = 0.8;
        let v = disc.interpolate_velocity(&|p| [u * (1.0 - p[1] * p[1]), 0.0, 0.0]);
        let a = assemble_viscous(&disc, &constant_mu(&disc, 1.3));
        let expect = 4.0 * 1.3 * u * u * 2.0 / 3.0;
        assert!((a.bilinear(&v, &v) - expect).abs() < 1e-12);
    }

    #[test]
    fn divergence_of_translation_and_dilation() {
        let disc = sloped(3, 3);
        let b = assemble_divergence(&disc);
        let t = disc.interpolate_velocity(&|_| [1.0, -2.0, 0.0]);
        assert!(b.matvec(&t).iter().all(|x| x.abs() < 1e-13));
        let dil = disc.interpolate_velocity(&|p| [0.5 * p[0], 0.5 * p[1], 0.0]);
        let ones = vec![1.0; disc.n_scalar()];
        let total = dot(&ones, &b.matvec(&dil));
        assert!((total - disc.volume).abs() < 1e-12);
        // |Ω| = 2 + 0.25·2 = 2.5
        assert!((disc.volume - 2.5).abs() < 1e-12);
    }

    #[test]
    fn divergence_matches_cellwise_oracle() {
        let disc = sloped(2, 2);
        let b = assemble_divergence(&disc);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi: Vec<f64> = (0..disc.n_velocity()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q: Vec<f64> = (0..disc.n_scalar()).map(|_| rng.random_range(-1.0..1.0)).collect();
        // independent path: degree-8 rule, field evaluation through velocity_at
        let fine = crate::quadrature::simplex_rule(2, 8);
        let mut oracle = 0.0;
        for c in 0..disc.n_cells() {
            for (l, w) in fine.iter() {
                let (_, g) = disc.velocity_at(&phi, c, l);
                oracle += w * disc.cells[c].volume * disc.scalar_at(&q, c, l) * (g[0][0] + g[1][1]);
            }
        }
        assert!((b.bilinear(&q, &phi) - oracle).abs() < 1e-12 * oracle.abs().max(1.0));
    }

    #[test]
    fn doubling_quadrature_degree_leaves_entries_unchanged() {
        let spec = DomainSpec {
            dim: 2,
            omega_extent: vec![2.0],
            height: HeightFn::Affine { base: 1.0, slope: [0.25, 0.0] },
        };
        let mesh = build_slab_mesh(&spec, &[2, 2]).unwrap();
        let coarse = Discretization::new(mesh.clone());
        let fine = Discretization::with_degrees(mesh, 8, 6);
        let a = assemble_viscous(&coarse, &constant_mu(&coarse, 2.0));
        let af = assemble_viscous(&fine, &constant_mu(&fine, 2.0));
        assert!(a.sub_max_abs(&af, 1.0) <= 1e-10 * a.max_abs());
        let b = assemble_divergence(&coarse);
        let bf = assemble_divergence(&fine);
        assert!(b.sub_max_abs(&bf, 1.0) <= 1e-10 * b.max_abs());
        let m = assemble_mass(&coarse);
        let mf = assemble_mass(&fine);
        assert!(m.sub_max_abs(&mf, 1.0) <= 1e-10 * m.max_abs());
    }

    #[test]
    fn convection_is_exactly_antisymmetric() {
        let disc = sloped(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v: Vec<f64> = (0..disc.n_velocity()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = assemble_convection(&disc, &v);
        assert_eq!(c.sub_max_abs(&c.transpose(), -1.0), 0.0);
        let th: Vec<f64> = (0..disc.n_scalar()).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(c.bilinear(&th, &th).abs() <= 1e-14 * c.max_abs() * dot(&th, &th));
    }

    #[test]
    fn loads_are_linear() {
        let disc = sloped(2, 2);
        let f1 = |p: &Point| [p[0], 1.0, 0.0];
        let f2 = |p: &Point| [p[1] * p[1], -p[0], 0.0];
        let l1 = velocity_load(&disc, &f1);
        let l2 = velocity_load(&disc, &f2);
        let l12 = velocity_load(&disc, &|p| {
            let (a, b) = (f1(p), f2(p));
            [2.0 * a[0] - 0.5 * b[0], 2.0 * a[1] - 0.5 * b[1], 0.0]
        });
        for i in 0..l1.len() {
            assert!((l12[i] - (2.0 * l1[i] - 0.5 * l2[i])).abs() <= 1e-12);
        }
    }

    #[test]
    fn constant_source_gives_mass_row_sums() {
        let disc = sloped(3, 3);
        let m = assemble_mass(&disc);
        let ones = vec![1.0; disc.n_scalar()];
        let rows = m.matvec(&ones);
        let load = scalar_load(&disc, &|_, _, _| 2.5);
        for (a, b) in rows.iter().zip(&load) {
            assert!((2.5 * a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn trace_reproduces_boundary_values() {
        let disc = sloped(3, 2);
        let t = assemble_tangential_trace(&disc);
        let v = disc.interpolate_velocity(&|p| [1.0 + p[0] * p[0], 0.0, 0.0]);
        let tv = t.matvec(&v);
        for (k, q) in disc.omega_qp.iter().enumerate() {
            assert!((tv[k] - (1.0 + q.x[0] * q.x[0])).abs() < 1e-13);
        }
    }
}
