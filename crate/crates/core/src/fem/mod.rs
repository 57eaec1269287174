//! Finite-element spaces on a slab mesh: vector quadratic velocity, linear
//! pressure and linear temperature, plus the per-cell geometry and
//! quadrature tables every assembly routine walks.

pub mod assembly;
pub mod norms;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh, Point};
use crate::quadrature::{simplex_rule, SimplexRule};

pub use assembly::*;
pub use norms::*;

pub type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

pub const DEFAULT_CELL_DEGREE: usize = 4;
pub const DEFAULT_FACET_DEGREE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceKind {
    /// Continuous vector quadratic.
    Velocity,
    /// Continuous scalar linear, no essential conditions.
    Pressure,
    /// Continuous scalar linear, zero on the top and lateral sides.
    Temperature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    pub kind: SpaceKind,
    pub ncomp: usize,
    pub n_nodes: usize,
    /// Tags carrying essential conditions.
    pub constraint_tags: Vec<BoundaryTag>,
}

impl Space {
    pub fn n_dofs(&self) -> usize {
        self.ncomp * self.n_nodes
    }
}

/// Coefficient vector on one of the spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub kind: SpaceKind,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(space: &Space, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.n_dofs() {
            return Err(Error::invalid(format!(
                "{:?} field needs {} values, got {}",
                space.kind,
                space.n_dofs(),
                values.len()
            )));
        }
        Ok(Self {
            kind: space.kind,
            values,
        })
    }

    pub fn zeros(space: &Space) -> Self {
        Self {
            kind: space.kind,
            values: vec![0.0; space.n_dofs()],
        }
    }
}

/// Essential conditions on a space: `fixed[i] = Some(value)` pins dof `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraints {
    pub fixed: Vec<Option<f64>>,
    /// Position of each free dof in the reduced numbering.
    pub free_index: Vec<Option<usize>>,
    pub free_dofs: Vec<usize>,
}

impl Constraints {
    pub fn from_fixed(fixed: Vec<Option<f64>>) -> Self {
        let mut free_index = vec![None; fixed.len()];
        let mut free_dofs = Vec::new();
        for (i, f) in fixed.iter().enumerate() {
            if f.is_none() {
                free_index[i] = Some(free_dofs.len());
                free_dofs.push(i);
            }
        }
        Self {
            fixed,
            free_index,
            free_dofs,
        }
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.fixed.len()
    }

    /// Full vector carrying the prescribed values and zeros elsewhere.
    pub fn lifting(&self) -> Vec<f64> {
        self.fixed.iter().map(|f| f.unwrap_or(0.0)).collect()
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&i| full[i]).collect()
    }

    /// Scatter free values into a full vector with the prescribed values.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut out = self.lifting();
        for (k, &i) in self.free_dofs.iter().enumerate() {
            out[i] = free[k];
        }
        out
    }

    /// Same pattern with every prescribed value replaced by zero.
    pub fn homogeneous(&self) -> Constraints {
        Constraints::from_fixed(self.fixed.iter().map(|f| f.map(|_| 0.0)).collect())
    }

    /// Zero the constrained entries of a full vector.
    pub fn project_homogeneous(&self, full: &mut [f64]) {
        for (i, f) in self.fixed.iter().enumerate() {
            if f.is_some() {
                full[i] = 0.0;
            }
        }
    }
}

/// One cell quadrature point: physical location and the weight times cell volume.
#[derive(Debug, Clone, PartialEq)]
pub struct CellQp {
    pub x: Point,
    pub w: f64,
}

#[derive(Debug, Clone)]
pub struct CellData {
    pub volume: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_bary: Vec<Point>,
    pub qp: Vec<CellQp>,
    /// Quadratic-basis gradients, `nq × n_local` row-major.
    pub p2_grads: Vec<Point>,
}

/// Quadrature point on the friction surface with everything needed to
/// evaluate cell basis functions there.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaQp {
    pub x: Point,
    pub w: f64,
    pub cell: usize,
    pub facet: usize,
    pub bary: [f64; 4],
}

pub fn p2_local_count(dim: usize) -> usize {
    (dim + 1) * (dim + 2) / 2
}

/// Local edge list for a `dim`-simplex, lexicographic in vertex pairs.
pub fn local_edges(dim: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for i in 0..=dim {
        for j in i + 1..=dim {
            e.push((i, j));
        }
    }
    e
}

/// Quadratic basis values at barycentric point `l`: vertex functions first,
/// then edge functions in [`local_edges`] order.
pub fn p2_values(dim: usize, l: &[f64; 4]) -> Vec<f64> {
    let mut out = Vec::with_capacity(p2_local_count(dim));
    for i in 0..=dim {
        out.push(l[i] * (2.0 * l[i] - 1.0));
    }
    for (i, j) in local_edges(dim) {
        out.push(4.0 * l[i] * l[j]);
    }
    out
}

pub fn p2_gradients(dim: usize, l: &[f64; 4], gl: &[Point]) -> Vec<Point> {
    let mut out = Vec::with_capacity(p2_local_count(dim));
    for i in 0..=dim {
        let f = 4.0 * l[i] - 1.0;
        out.push([f * gl[i][0], f * gl[i][1], f * gl[i][2]]);
    }
    for (i, j) in local_edges(dim) {
        let mut g = [0.0; 3];
        for a in 0..3 {
            g[a] = 4.0 * (l[j] * gl[i][a] + l[i] * gl[j][a]);
        }
        out.push(g);
    }
    out
}

/// Gradients of the barycentric coordinates of a simplex.
pub fn barycentric_gradients(pts: &[Point], dim: usize) -> Vec<Point> {
    // rows of the inverse Jacobian give ∇λ_1..∇λ_d; ∇λ_0 = −Σ
    let mut jac = [[0.0; 3]; 3];
    for k in 0..dim {
        for a in 0..dim {
            jac[a][k] = pts[k + 1][a] - pts[0][a];
        }
    }
    let inv = invert(&jac, dim);
    let mut g = vec![[0.0; 3]; dim + 1];
    for k in 0..dim {
        for a in 0..dim {
            g[k + 1][a] = inv[k][a];
            g[0][a] -= inv[k][a];
        }
    }
    g
}

fn invert(m: &[[f64; 3]; 3], dim: usize) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    if dim == 2 {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        r[0][0] = m[1][1] / det;
        r[0][1] = -m[0][1] / det;
        r[1][0] = -m[1][0] / det;
        r[1][1] = m[0][0] / det;
    } else {
        let c = |i: usize, j: usize| -> f64 {
            let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
            let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
            m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]
        };
        let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
        for i in 0..3 {
            for j in 0..3 {
                r[j][i] = c(i, j) / det;
            }
        }
    }
    r
}

/// Spaces, dof maps and quadrature tables over one mesh.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub dim: usize,
    pub n_p2: usize,
    /// Quadratic nodes per cell, stride [`p2_local_count`].
    pub cell_p2: Vec<usize>,
    pub p2_coords: Vec<Point>,
    /// OR of [`BoundaryTag::bit`] over the boundary facets touching each node.
    pub p2_tags: Vec<u8>,
    pub cell_rule: SimplexRule,
    pub facet_rule: SimplexRule,
    /// Quadratic basis values at the cell rule points, `nq × n_local`.
    pub p2_ref_values: Vec<f64>,
    pub cells: Vec<CellData>,
    pub omega_qp: Vec<OmegaQp>,
    pub volume: f64,
}

impl Discretization {
    pub fn new(mesh: Mesh) -> Self {
        Self::with_degrees(mesh, DEFAULT_CELL_DEGREE, DEFAULT_FACET_DEGREE)
    }

    pub fn with_degrees(mesh: Mesh, cell_degree: usize, facet_degree: usize) -> Self {
        let dim = mesh.dim;
        let nv = mesh.n_vertices();
        let nloc = p2_local_count(dim);
        let edges = local_edges(dim);

        let mut edge_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut cell_p2 = Vec::with_capacity(mesh.n_cells() * nloc);
        let mut p2_coords = mesh.vertices.clone();
        for c in 0..mesh.n_cells() {
            let cv = mesh.cell(c).to_vec();
            cell_p2.extend_from_slice(&cv);
            for &(i, j) in &edges {
                let key = (cv[i].min(cv[j]), cv[i].max(cv[j]));
                let next = nv + edge_ids.len();
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    let (a, b) = (mesh.vertices[key.0], mesh.vertices[key.1]);
                    p2_coords.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])]);
                    next
                });
                cell_p2.push(id);
            }
        }
        let n_p2 = nv + edge_ids.len();

        let mut p2_tags = vec![0u8; n_p2];
        for f in &mesh.boundary_facets {
            let bit = f.tag.bit();
            for (k, &a) in f.vertices.iter().enumerate() {
                p2_tags[a] |= bit;
                for &b in &f.vertices[k + 1..] {
                    p2_tags[edge_ids[&(a.min(b), a.max(b))]] |= bit;
                }
            }
        }

        let cell_rule = simplex_rule(dim, cell_degree);
        let facet_rule = simplex_rule(dim - 1, facet_degree);
        let nq = cell_rule.len();
        let mut p2_ref_values = Vec::with_capacity(nq * nloc);
        for (l, _) in cell_rule.iter() {
            p2_ref_values.extend(p2_values(dim, l));
        }

        let mut volume = 0.0;
        let cells: Vec<CellData> = (0..mesh.n_cells())
            .map(|c| {
                let pts = mesh.cell_points(c);
                let vol = mesh.cell_volume(c);
                volume += vol;
                let gl = barycentric_gradients(&pts, dim);
                let mut qp = Vec::with_capacity(nq);
                let mut p2_grads = Vec::with_capacity(nq * nloc);
                for (l, w) in cell_rule.iter() {
                    let mut x = [0.0; 3];
                    for (k, p) in pts.iter().enumerate() {
                        for a in 0..3 {
                            x[a] += l[k] * p[a];
                        }
                    }
                    qp.push(CellQp { x, w: w * vol });
                    p2_grads.extend(p2_gradients(dim, l, &gl));
                }
                CellData {
                    volume: vol,
                    grad_bary: gl,
                    qp,
                    p2_grads,
                }
            })
            .collect();

        let mut omega_qp = Vec::new();
        for (fi, f) in mesh.facets_with_tag(BoundaryTag::Omega) {
            let cv = mesh.cell(f.cell);
            let pts: Vec<Point> = f.vertices.iter().map(|&v| mesh.vertices[v]).collect();
            let meas = mesh.facet_measure(fi);
            for (b, w) in facet_rule.iter() {
                let mut bary = [0.0; 4];
                let mut x = [0.0; 3];
                for (k, &v) in f.vertices.iter().enumerate() {
                    let local = cv.iter().position(|&u| u == v).unwrap();
                    bary[local] = b[k];
                    for a in 0..3 {
                        x[a] += b[k] * pts[k][a];
                    }
                }
                omega_qp.push(OmegaQp {
                    x,
                    w: w * meas,
                    cell: f.cell,
                    facet: fi,
                    bary,
                });
            }
        }

        Self {
            mesh,
            dim,
            n_p2,
            cell_p2,
            p2_coords,
            p2_tags,
            cell_rule,
            facet_rule,
            p2_ref_values,
            cells,
            omega_qp,
            volume,
        }
    }

    pub fn n_local_p2(&self) -> usize {
        p2_local_count(self.dim)
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_qp(&self) -> usize {
        self.cell_rule.len()
    }

    pub fn cell_p2(&self, c: usize) -> &[usize] {
        let n = self.n_local_p2();
        &self.cell_p2[c * n..(c + 1) * n]
    }

    pub fn cell_p1(&self, c: usize) -> &[usize] {
        self.mesh.cell(c)
    }

    /// Quadratic basis values at cell quadrature point `q`.
    pub fn p2_values_at(&self, q: usize) -> &[f64] {
        let n = self.n_local_p2();
        &self.p2_ref_values[q * n..(q + 1) * n]
    }

    pub fn p2_grads_at(&self, c: usize, q: usize) -> &[Point] {
        let n = self.n_local_p2();
        &self.cells[c].p2_grads[q * n..(q + 1) * n]
    }

    /// Barycentric coordinates of cell quadrature point `q` (linear basis values).
    pub fn p1_values_at(&self, q: usize) -> &[f64; 4] {
        &self.cell_rule.points[q]
    }

    pub fn velocity_space(&self) -> Space {
        Space {
            kind: SpaceKind::Velocity,
            ncomp: self.dim,
            n_nodes: self.n_p2,
            constraint_tags: vec![BoundaryTag::Gamma1, BoundaryTag::GammaL, BoundaryTag::Omega],
        }
    }

    pub fn pressure_space(&self) -> Space {
        Space {
            kind: SpaceKind::Pressure,
            ncomp: 1,
            n_nodes: self.mesh.n_vertices(),
            constraint_tags: Vec::new(),
        }
    }

    pub fn temperature_space(&self) -> Space {
        Space {
            kind: SpaceKind::Temperature,
            ncomp: 1,
            n_nodes: self.mesh.n_vertices(),
            constraint_tags: vec![BoundaryTag::Gamma1, BoundaryTag::GammaL],
        }
    }

    pub fn n_velocity(&self) -> usize {
        self.n_p2 * self.dim
    }

    pub fn n_scalar(&self) -> usize {
        self.mesh.n_vertices()
    }

    /// Velocity constraints: zero on the top, `g` on the lateral sides (the
    /// top wins where both touch), and zero normal component on the flat bottom.
    pub fn velocity_constraints(&self, g: &dyn Fn(&Point) -> Point) -> Constraints {
        let d = self.dim;
        let top = BoundaryTag::Gamma1.bit();
        let side = BoundaryTag::GammaL.bit();
        let bottom = BoundaryTag::Omega.bit();
        let mut fixed = vec![None; self.n_velocity()];
        for n in 0..self.n_p2 {
            let t = self.p2_tags[n];
            if t & top != 0 {
                for c in 0..d {
                    fixed[n * d + c] = Some(0.0);
                }
            } else if t & side != 0 {
                let gv = g(&self.p2_coords[n]);
                for c in 0..d {
                    fixed[n * d + c] = Some(gv[c]);
                }
            } else if t & bottom != 0 {
                fixed[n * d + d - 1] = Some(0.0);
            }
        }
        Constraints::from_fixed(fixed)
    }

    /// Zero on the top and lateral sides.
    pub fn temperature_constraints(&self) -> Constraints {
        let mask = BoundaryTag::Gamma1.bit() | BoundaryTag::GammaL.bit();
        let fixed = (0..self.n_scalar())
            .map(|v| if self.p2_tags[v] & mask != 0 { Some(0.0) } else { None })
            .collect();
        Constraints::from_fixed(fixed)
    }

    /// Velocity value and gradient (`grad[i][j] = ∂_j v_i`) at cell quadrature point.
    pub fn velocity_at_qp(&self, v: &[f64], c: usize, q: usize) -> (Point, [[f64; 3]; 3]) {
        let d = self.dim;
        let nodes = self.cell_p2(c);
        let vals = self.p2_values_at(q);
        let grads = self.p2_grads_at(c, q);
        let mut val = [0.0; 3];
        let mut grad = [[0.0; 3]; 3];
        for (a, &n) in nodes.iter().enumerate() {
            for i in 0..d {
                let coef = v[n * d + i];
                val[i] += coef * vals[a];
                for j in 0..d {
                    grad[i][j] += coef * grads[a][j];
                }
            }
        }
        (val, grad)
    }

    /// Velocity value and gradient at barycentric point `l` of cell `c`.
    pub fn velocity_at(&self, v: &[f64], c: usize, l: &[f64; 4]) -> (Point, [[f64; 3]; 3]) {
        let d = self.dim;
        let nodes = self.cell_p2(c);
        let vals = p2_values(d, l);
        let grads = p2_gradients(d, l, &self.cells[c].grad_bary);
        let mut val = [0.0; 3];
        let mut grad = [[0.0; 3]; 3];
        for (a, &n) in nodes.iter().enumerate() {
            for i in 0..d {
                let coef = v[n * d + i];
                val[i] += coef * vals[a];
                for j in 0..d {
                    grad[i][j] += coef * grads[a][j];
                }
            }
        }
        (val, grad)
    }

    /// Linear field value at barycentric point `l` of cell `c`.
    pub fn scalar_at(&self, u: &[f64], c: usize, l: &[f64; 4]) -> f64 {
        self.cell_p1(c).iter().enumerate().map(|(k, &n)| l[k] * u[n]).sum()
    }

    pub fn scalar_grad(&self, u: &[f64], c: usize) -> Point {
        let mut g = [0.0; 3];
        for (k, &n) in self.cell_p1(c).iter().enumerate() {
            for a in 0..3 {
                g[a] += u[n] * self.cells[c].grad_bary[k][a];
            }
        }
        g
    }

    /// Interpolate a vector function at the quadratic nodes.
    pub fn interpolate_velocity(&self, f: &dyn Fn(&Point) -> Point) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; self.n_velocity()];
        for n in 0..self.n_p2 {
            let fv = f(&self.p2_coords[n]);
            out[n * d..n * d + d].copy_from_slice(&fv[..d]);
        }
        out
    }

    pub fn interpolate_scalar(&self, f: &dyn Fn(&Point) -> f64) -> Vec<f64> {
        self.mesh.vertices.iter().map(f).collect()
    }

    /// Vertex values of a velocity field (first `dim` quadratic nodes are the vertices).
    pub fn velocity_at_vertices(&self, v: &[f64]) -> Vec<Point> {
        let d = self.dim;
        (0..self.mesh.n_vertices())
            .map(|n| {
                let mut p = [0.0; 3];
                p[..d].copy_from_slice(&v[n * d..n * d + d]);
                p
            })
            .collect()
    }

    /// Measure of the friction surface.
    pub fn omega_measure(&self) -> f64 {
        self.omega_qp.iter().map(|q| q.w).sum()
    }
}

/// Symmetric part of a velocity gradient.
pub fn deformation_tensor(grad: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut d = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = 0.5 * (grad[i][j] + grad[j][i]);
        }
    }
    d
}

/// Frobenius norm of a 3×3 tensor.
pub fn frobenius(m: &[[f64; 3]; 3]) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_slab_mesh, DomainSpec, HeightFn};

    fn square(n: usize) -> Discretization {
        Discretization::new(build_slab_mesh(&DomainSpec::rectangle(1.0, 1.0), &[n, n]).unwrap())
    }

    #[test]
    fn rigid_rotation_has_zero_strain() {
        let g = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0; 3]];
        let d = deformation_tensor(&g);
        assert_eq!(frobenius(&d), 0.0);
    }

    #[test]
    fn linear_field_strain() {
        let g = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0; 3]];
        let d = deformation_tensor(&g);
        assert_eq!(d[0][0], 1.0);
        assert_eq!(d[1][1], -1.0);
        assert!((frobenius(&d) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn p2_partition_of_unity() {
        for dim in [2, 3] {
            let l = [0.1, 0.2, 0.3, 0.4];
            let mut l = l;
            if dim == 2 {
                l = [0.2, 0.3, 0.5, 0.0];
            }
            let s: f64 = p2_values(dim, &l).iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn p2_node_count() {
        let disc = square(3);
        // (2n+1)^2 nodes on a uniform quadratic grid
        assert_eq!(disc.n_p2, 49);
        assert!((disc.volume - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadratic_interpolation_is_exact_with_fd_gradient() {
        let mesh = build_slab_mesh(
            &DomainSpec {
                dim: 2,
                omega_extent: vec![1.5],
                height: HeightFn::Affine { base: 1.0, slope: [0.3, 0.0] },
            },
            &[3, 2],
        )
        .unwrap();
        let disc = Discretization::new(mesh);
        let f = |p: &Point| -> Point {
            [
                0.3 + p[0] * p[0] - 2.0 * p[0] * p[1] + 0.5 * p[1],
                -p[1] * p[1] + 0.7 * p[0] * p[1] - p[0],
                0.0,
            ]
        };
        let v = disc.interpolate_velocity(&f);
        let h = 1e-5;
        for c in [0, 5, 11] {
            for q in [0, 3] {
                let (val, grad) = disc.velocity_at_qp(&v, c, q);
                let x = disc.cells[c].qp[q].x;
                let fx = f(&x);
                for i in 0..2 {
                    assert!((val[i] - fx[i]).abs() < 1e-13);
                    for j in 0..2 {
                        let mut xp = x;
                        let mut xm = x;
                        xp[j] += h;
                        xm[j] -= h;
                        let fd = (f(&xp)[i] - f(&xm)[i]) / (2.0 * h);
                        assert!((grad[i][j] - fd).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn constraint_pattern_on_unit_square() {
        let disc = square(2);
        let cons = disc.velocity_constraints(&|_| [1.0, 0.0, 0.0]);
        for n in 0..disc.n_p2 {
            let p = disc.p2_coords[n];
            let (u, w) = (cons.fixed[2 * n], cons.fixed[2 * n + 1]);
            if p[1] == 1.0 {
                assert_eq!((u, w), (Some(0.0), Some(0.0)));
            } else if p[0] == 0.0 || p[0] == 1.0 {
                assert_eq!((u, w), (Some(1.0), Some(0.0)));
            } else if p[1] == 0.0 {
                assert_eq!((u, w), (None, Some(0.0)));
            } else {
                assert_eq!((u, w), (None, None));
            }
        }
        let tc = disc.temperature_constraints();
        for (v, p) in disc.mesh.vertices.iter().enumerate() {
            let fixed = p[1] == 1.0 || p[0] == 0.0 || p[0] == 1.0;
            assert_eq!(tc.fixed[v].is_some(), fixed);
        }
    }

    #[test]
    fn omega_points_lie_on_bottom() {
        let disc = square(3);
        assert!((disc.omega_measure() - 1.0).abs() < 1e-14);
        for q in &disc.omega_qp {
            assert_eq!(q.x[1], 0.0);
            let s: f64 = q.bary.iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
