//! Structured simplicial meshes of the slab `{(x', x_d) : x' ∈ ω, 0 < x_d < h(x')}`.
//!
//! Points are stored as `[f64; 3]` in both dimensions; in 2-D the third
//! coordinate is zero and the vertical axis is index 1. The bottom `ω` is
//! always the flat plane `x_d = 0`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{simplex_rule, SimplexRule};

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot3(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm3(a: &Point) -> f64 {
    dot3(a, a).sqrt()
}

/// Boundary part of the slab.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// Bottom `x_d = 0`, the friction surface.
    Omega,
    /// Top surface `x_d = h(x')`.
    Gamma1,
    /// Lateral sides.
    GammaL,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 3] = [BoundaryTag::Omega, BoundaryTag::Gamma1, BoundaryTag::GammaL];

    pub fn bit(self) -> u8 {
        match self {
            BoundaryTag::Omega => 1,
            BoundaryTag::Gamma1 => 2,
            BoundaryTag::GammaL => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Omega => "OMEGA",
            BoundaryTag::Gamma1 => "GAMMA1",
            BoundaryTag::GammaL => "GAMMAL",
        }
    }
}

/// Height of the top surface over `ω`.
#[derive(Debug, Clone, PartialEq)]
pub enum HeightFn {
    Constant(f64),
    /// `h(x') = base + slope · x'`
    Affine { base: f64, slope: [f64; 2] },
    /// Samples on a uniform `nx × ny` grid spanning `ω` (corners included),
    /// bilinearly interpolated; `ny = 1` in 2-D.
    Sampled { nx: usize, ny: usize, values: Vec<f64> },
}

impl HeightFn {
    pub fn eval(&self, xp: [f64; 2], extent: &[f64]) -> f64 {
        match self {
            HeightFn::Constant(h) => *h,
            HeightFn::Affine { base, slope } => base + slope[0] * xp[0] + slope[1] * xp[1],
            HeightFn::Sampled { nx, ny, values } => {
                let locate = |x: f64, len: f64, n: usize| -> (usize, f64) {
                    if n <= 1 {
                        return (0, 0.0);
                    }
                    let t = (x / len).clamp(0.0, 1.0) * (n - 1) as f64;
                    let i = (t.floor() as usize).min(n - 2);
                    (i, t - i as f64)
                };
                let (i, a) = locate(xp[0], extent[0], *nx);
                let (j, b) = if extent.len() > 1 {
                    locate(xp[1], extent[1], *ny)
                } else {
                    (0, 0.0)
                };
                let at = |ii: usize, jj: usize| values[(jj.min(ny - 1)) * nx + ii.min(nx - 1)];
                let i1 = if *nx > 1 { i + 1 } else { i };
                let j1 = if *ny > 1 { j + 1 } else { j };
                (1.0 - a) * (1.0 - b) * at(i, j)
                    + a * (1.0 - b) * at(i1, j)
                    + (1.0 - a) * b * at(i, j1)
                    + a * b * at(i1, j1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    /// 2 or 3.
    pub dim: usize,
    /// Interval lengths of `ω`, one per horizontal axis (`dim - 1` entries).
    pub omega_extent: Vec<f64>,
    pub height: HeightFn,
}

impl DomainSpec {
    pub fn rectangle(length: f64, height: f64) -> Self {
        Self {
            dim: 2,
            omega_extent: vec![length],
            height: HeightFn::Constant(height),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::invalid(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        if self.omega_extent.len() != self.dim - 1 {
            return Err(Error::invalid(format!(
                "omega_extent needs {} entries, got {}",
                self.dim - 1,
                self.omega_extent.len()
            )));
        }
        if self.omega_extent.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::invalid("omega_extent entries must be positive"));
        }
        if let HeightFn::Sampled { nx, ny, values } = &self.height {
            if *nx < 2 || *ny < 1 || values.len() != nx * ny || (self.dim == 3 && *ny < 2) {
                return Err(Error::invalid("sampled height grid has inconsistent shape"));
            }
            if let Some(bad) = values.iter().find(|&&h| !(h > 0.0)) {
                return Err(Error::invalid(format!("non-positive height sample {bad}")));
            }
        }
        Ok(())
    }

    pub fn height_at(&self, xp: [f64; 2]) -> f64 {
        self.height.eval(xp, &self.omega_extent)
    }
}

/// A boundary facet: `dim` vertices, its tag, the adjacent cell and the unit
/// outward normal.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFacet {
    pub vertices: Vec<usize>,
    pub tag: BoundaryTag,
    pub cell: usize,
    pub normal: Point,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    pub vertices: Vec<Point>,
    /// Flat cell connectivity with stride `dim + 1`.
    pub cells: Vec<usize>,
    pub boundary_facets: Vec<BoundaryFacet>,
    pub omega_extent: Vec<f64>,
}

/// One point of a boundary quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryQuadPoint {
    pub point: Point,
    pub weight: f64,
    pub normal: Point,
    pub facet: usize,
    pub cell: usize,
}

impl Mesh {
    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let n = self.dim + 1;
        &self.cells[c * n..(c + 1) * n]
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        signed_volume(&self.cell_points(c), self.dim)
    }

    pub fn cell_centroid(&self, c: usize) -> Point {
        centroid(&self.cell_points(c))
    }

    pub fn volume(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_volume(c)).sum()
    }

    /// Largest vertical coordinate, i.e. `max h` over the mesh.
    pub fn height_max(&self) -> f64 {
        let d = self.dim - 1;
        self.vertices.iter().fold(0.0, |m, p| m.max(p[d]))
    }

    pub fn facets_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = (usize, &BoundaryFacet)> {
        self.boundary_facets
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.tag == tag)
    }

    pub fn facet_measure(&self, facet: usize) -> f64 {
        let pts: Vec<Point> = self.boundary_facets[facet]
            .vertices
            .iter()
            .map(|&v| self.vertices[v])
            .collect();
        facet_measure(&pts)
    }

    pub fn tag_measure(&self, tag: BoundaryTag) -> f64 {
        self.facets_with_tag(tag).map(|(i, _)| self.facet_measure(i)).sum()
    }

    /// Unit outward normal of boundary facet `facet`.
    pub fn outward_normal(&self, facet: usize) -> Result<Point> {
        self.boundary_facets
            .get(facet)
            .map(|f| f.normal)
            .ok_or_else(|| Error::invalid(format!("facet {facet} is not a boundary facet")))
    }

    /// Look up a facet by its vertex set; interior facets are rejected.
    pub fn boundary_facet_index(&self, vertices: &[usize]) -> Result<usize> {
        let mut key = vertices.to_vec();
        key.sort_unstable();
        self.boundary_facets
            .iter()
            .position(|f| {
                let mut k = f.vertices.clone();
                k.sort_unstable();
                k == key
            })
            .ok_or_else(|| Error::invalid(format!("{vertices:?} is not a boundary facet")))
    }

    /// Facet quadrature over every facet carrying `tag`, exact to `degree`.
    pub fn boundary_quadrature(&self, tag: BoundaryTag, degree: usize) -> Vec<BoundaryQuadPoint> {
        let rule = simplex_rule(self.dim - 1, degree);
        self.boundary_quadrature_with(tag, &rule)
    }

    pub fn boundary_quadrature_with(&self, tag: BoundaryTag, rule: &SimplexRule) -> Vec<BoundaryQuadPoint> {
        let mut out = Vec::new();
        for (fi, f) in self.facets_with_tag(tag) {
            let pts: Vec<Point> = f.vertices.iter().map(|&v| self.vertices[v]).collect();
            let meas = facet_measure(&pts);
            for (bary, w) in rule.iter() {
                let mut p = [0.0; 3];
                for (k, q) in pts.iter().enumerate() {
                    for a in 0..3 {
                        p[a] += bary[k] * q[a];
                    }
                }
                out.push(BoundaryQuadPoint {
                    point: p,
                    weight: w * meas,
                    normal: f.normal,
                    facet: fi,
                    cell: f.cell,
                });
            }
        }
        out
    }

    /// Legacy-VTK ASCII unstructured grid with optional point data.
    pub fn to_vtk(&self, title: &str, point_data: &[(&str, PointData<'_>)]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0");
        let _ = writeln!(s, "{title}");
        let _ = writeln!(s, "ASCII");
        let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
        let _ = writeln!(s, "POINTS {} double", self.n_vertices());
        for p in &self.vertices {
            let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
        }
        let npc = self.dim + 1;
        let nc = self.n_cells();
        let _ = writeln!(s, "CELLS {} {}", nc, nc * (npc + 1));
        for c in 0..nc {
            let ids: Vec<String> = self.cell(c).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{} {}", npc, ids.join(" "));
        }
        let _ = writeln!(s, "CELL_TYPES {nc}");
        let ty = if self.dim == 2 { 5 } else { 10 };
        for _ in 0..nc {
            let _ = writeln!(s, "{ty}");
        }
        if !point_data.is_empty() {
            let _ = writeln!(s, "POINT_DATA {}", self.n_vertices());
            for (name, data) in point_data {
                match data {
                    PointData::Scalars(v) => {
                        let _ = writeln!(s, "SCALARS {name} double 1");
                        let _ = writeln!(s, "LOOKUP_TABLE default");
                        for x in v.iter() {
                            let _ = writeln!(s, "{x}");
                        }
                    }
                    PointData::Vectors(v) => {
                        let _ = writeln!(s, "VECTORS {name} double");
                        for x in v.iter() {
                            let _ = writeln!(s, "{} {} {}", x[0], x[1], x[2]);
                        }
                    }
                }
            }
        }
        s
    }

    pub fn write_vtk(&self, path: &Path, title: &str, point_data: &[(&str, PointData<'_>)]) -> Result<()> {
        std::fs::write(path, self.to_vtk(title, point_data)).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PointData<'a> {
    Scalars(&'a [f64]),
    Vectors(&'a [Point]),
}

pub fn centroid(pts: &[Point]) -> Point {
    let n = pts.len() as f64;
    let mut c = [0.0; 3];
    for p in pts {
        for a in 0..3 {
            c[a] += p[a] / n;
        }
    }
    c
}

/// Signed volume of a simplex given by `dim + 1` points.
pub fn signed_volume(pts: &[Point], dim: usize) -> f64 {
    let e1 = sub(&pts[1], &pts[0]);
    let e2 = sub(&pts[2], &pts[0]);
    if dim == 2 {
        0.5 * (e1[0] * e2[1] - e1[1] * e2[0])
    } else {
        let e3 = sub(&pts[3], &pts[0]);
        dot3(&cross(&e1, &e2), &e3) / 6.0
    }
}

/// Length (2-D) or area (3-D) of a boundary facet.
pub fn facet_measure(pts: &[Point]) -> f64 {
    let e1 = sub(&pts[1], &pts[0]);
    if pts.len() == 2 {
        norm3(&e1)
    } else {
        0.5 * norm3(&cross(&e1, &sub(&pts[2], &pts[0])))
    }
}

/// Build the structured slab mesh. `resolution` holds one subdivision count per
/// axis, horizontal axes first and the vertical axis last.
pub fn build_slab_mesh(spec: &DomainSpec, resolution: &[usize]) -> Result<Mesh> {
    spec.validate()?;
    let dim = spec.dim;
    if resolution.len() != dim {
        return Err(Error::invalid(format!(
            "resolution needs {dim} entries, got {}",
            resolution.len()
        )));
    }
    if resolution.contains(&0) {
        return Err(Error::invalid("every subdivision count must be at least 1"));
    }
    let (nx, ny, nz) = if dim == 2 {
        (resolution[0], 1usize, resolution[1])
    } else {
        (resolution[0], resolution[1], resolution[2])
    };
    let lx = spec.omega_extent[0];
    let ly = if dim == 3 { spec.omega_extent[1] } else { 0.0 };

    // vertices: horizontal index fastest, vertical layer slowest
    let ny_pts = if dim == 2 { 1 } else { ny + 1 };
    let mut heights = Vec::with_capacity((nx + 1) * ny_pts);
    for j in 0..ny_pts {
        for i in 0..=nx {
            let xp = [lx * i as f64 / nx as f64, if dim == 3 { ly * j as f64 / ny as f64 } else { 0.0 }];
            let h = spec.height_at(xp);
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid(format!("non-positive height {h} at x' = {xp:?}")));
            }
            heights.push((xp, h));
        }
    }
    let mut vertices = Vec::with_capacity(heights.len() * (nz + 1));
    let mut layer = Vec::with_capacity(vertices.capacity());
    for k in 0..=nz {
        let xi = k as f64 / nz as f64;
        for &(xp, h) in &heights {
            let p = if dim == 2 {
                [xp[0], xi * h, 0.0]
            } else {
                [xp[0], xp[1], xi * h]
            };
            vertices.push(p);
            layer.push(k);
        }
    }
    let plane = heights.len();
    let vid = |i: usize, j: usize, k: usize| -> usize { k * plane + j * (nx + 1) + i };

    let mut cells = Vec::new();
    if dim == 2 {
        for k in 0..nz {
            for i in 0..nx {
                let v00 = vid(i, 0, k);
                let v10 = vid(i + 1, 0, k);
                let v01 = vid(i, 0, k + 1);
                let v11 = vid(i + 1, 0, k + 1);
                cells.extend_from_slice(&[v00, v10, v11]);
                cells.extend_from_slice(&[v00, v11, v01]);
            }
        }
    } else {
        // Kuhn split: one tetrahedron per axis permutation
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    for perm in PERMS {
                        let mut at = [i, j, k];
                        let mut tet = [vid(i, j, k), 0, 0, 0];
                        for (s, &axis) in perm.iter().enumerate() {
                            at[axis] += 1;
                            tet[s + 1] = vid(at[0], at[1], at[2]);
                        }
                        cells.extend_from_slice(&tet);
                    }
                }
            }
        }
    }

    // orient every cell positively
    let npc = dim + 1;
    for c in 0..cells.len() / npc {
        let pts: Vec<Point> = cells[c * npc..(c + 1) * npc].iter().map(|&v| vertices[v]).collect();
        let vol = signed_volume(&pts, dim);
        if vol < 0.0 {
            cells.swap(c * npc, c * npc + 1);
        } else if vol == 0.0 {
            return Err(Error::invalid(format!("degenerate cell {c}")));
        }
    }

    // boundary facets: faces owned by exactly one cell
    let mut owners: BTreeMap<Vec<usize>, (usize, Vec<usize>, usize)> = BTreeMap::new();
    let mut order = Vec::new();
    for c in 0..cells.len() / npc {
        let cv = &cells[c * npc..(c + 1) * npc];
        for skip in 0..npc {
            let face: Vec<usize> = (0..npc).filter(|&a| a != skip).map(|a| cv[a]).collect();
            let mut key = face.clone();
            key.sort_unstable();
            let entry = owners.entry(key.clone()).or_insert_with(|| {
                order.push(key.clone());
                (0, face, c)
            });
            entry.0 += 1;
        }
    }
    let mut boundary_facets = Vec::new();
    for key in order {
        let (count, face, cell) = owners.remove(&key).unwrap();
        if count != 1 {
            continue;
        }
        let tag = if face.iter().all(|&v| layer[v] == 0) {
            BoundaryTag::Omega
        } else if face.iter().all(|&v| layer[v] == nz) {
            BoundaryTag::Gamma1
        } else {
            BoundaryTag::GammaL
        };
        let pts: Vec<Point> = face.iter().map(|&v| vertices[v]).collect();
        let mut normal = if dim == 2 {
            let t = sub(&pts[1], &pts[0]);
            [t[1], -t[0], 0.0]
        } else {
            cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0]))
        };
        let len = norm3(&normal);
        normal.iter_mut().for_each(|x| *x /= len);
        let cell_pts: Vec<Point> = cells[cell * npc..(cell + 1) * npc].iter().map(|&v| vertices[v]).collect();
        let outward = sub(&centroid(&pts), &centroid(&cell_pts));
        if dot3(&normal, &outward) < 0.0 {
            normal.iter_mut().for_each(|x| *x = -*x);
        }
        boundary_facets.push(BoundaryFacet {
            vertices: face,
            tag,
            cell,
            normal,
        });
    }

    Ok(Mesh {
        dim,
        vertices,
        cells,
        boundary_facets,
        omega_extent: spec.omega_extent.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(n: usize, m: usize) -> Mesh {
        build_slab_mesh(&DomainSpec::rectangle(1.0, 1.0), &[n, m]).unwrap()
    }

    #[test]
    fn smallest_square_has_two_triangles() {
        let mesh = unit_square(1, 1);
        assert_eq!(mesh.n_vertices(), 4);
        assert_eq!(mesh.n_cells(), 2);
        assert_eq!(mesh.boundary_facets.len(), 4);
    }

    #[test]
    fn counting_identity() {
        for (n, m) in [(3, 2), (5, 4), (8, 1)] {
            let mesh = unit_square(n, m);
            assert_eq!(mesh.n_vertices(), (n + 1) * (m + 1));
            assert_eq!(mesh.n_cells(), 2 * n * m);
            assert_eq!(mesh.facets_with_tag(BoundaryTag::Omega).count(), n);
            assert_eq!(mesh.facets_with_tag(BoundaryTag::Gamma1).count(), n);
            assert_eq!(mesh.facets_with_tag(BoundaryTag::GammaL).count(), 2 * m);
        }
    }

    #[test]
    fn affine_height_reaches_two() {
        let spec = DomainSpec {
            dim: 2,
            omega_extent: vec![1.0],
            height: HeightFn::Affine { base: 1.0, slope: [1.0, 0.0] },
        };
        let mesh = build_slab_mesh(&spec, &[4, 4]).unwrap();
        let top = mesh.vertices.iter().fold(f64::MIN, |m, p| m.max(p[1]));
        assert_eq!(top, 2.0);
        let at = mesh.vertices.iter().find(|p| p[1] == 2.0).unwrap();
        assert_eq!(at[0], 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = DomainSpec::rectangle(1.0, 1.0);
        assert!(build_slab_mesh(&spec, &[0, 2]).is_err());
        assert!(build_slab_mesh(&spec, &[2]).is_err());
        let neg = DomainSpec {
            dim: 2,
            omega_extent: vec![1.0],
            height: HeightFn::Affine { base: 0.5, slope: [-1.0, 0.0] },
        };
        assert!(build_slab_mesh(&neg, &[4, 2]).is_err());
        let sampled = DomainSpec {
            dim: 2,
            omega_extent: vec![1.0],
            height: HeightFn::Sampled { nx: 3, ny: 1, values: vec![1.0, 0.0, 1.0] },
        };
        assert!(build_slab_mesh(&sampled, &[4, 2]).is_err());
    }

    #[test]
    fn axis_aligned_normals() {
        let mesh = unit_square(3, 3);
        for f in &mesh.boundary_facets {
            let pts: Vec<Point> = f.vertices.iter().map(|&v| mesh.vertices[v]).collect();
            let c = centroid(&pts);
            let expected = match f.tag {
                BoundaryTag::Omega => [0.0, -1.0, 0.0],
                BoundaryTag::Gamma1 => [0.0, 1.0, 0.0],
                BoundaryTag::GammaL if c[0] == 0.0 => [-1.0, 0.0, 0.0],
                BoundaryTag::GammaL => [1.0, 0.0, 0.0],
            };
            for a in 0..3 {
                assert!((f.normal[a] - expected[a]).abs() < 1e-15, "{:?} vs {:?}", f.normal, expected);
            }
        }
    }

    #[test]
    fn interior_facet_lookup_rejected() {
        let mesh = unit_square(1, 1);
        // the diagonal 0-3 is shared by both triangles
        assert!(mesh.boundary_facet_index(&[0, 3]).is_err());
        let i = mesh.boundary_facet_index(&[1, 0]).unwrap();
        assert_eq!(mesh.outward_normal(i).unwrap(), [0.0, -1.0, 0.0]);
        assert!(mesh.outward_normal(99).is_err());
    }

    #[test]
    fn boundary_weights_sum_to_measure() {
        let mesh = unit_square(4, 3);
        let sum = |t| mesh.boundary_quadrature(t, 3).iter().map(|q| q.weight).sum::<f64>();
        assert!((sum(BoundaryTag::Omega) - 1.0).abs() < 1e-14);
        assert!((sum(BoundaryTag::Gamma1) - 1.0).abs() < 1e-14);
        assert!((sum(BoundaryTag::GammaL) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sloped_top_arc_length_matches_numeric_oracle() {
        let spec = DomainSpec {
            dim: 2,
            omega_extent: vec![1.0],
            height: HeightFn::Affine { base: 1.0, slope: [1.0, 0.0] },
        };
        let mesh = build_slab_mesh(&spec, &[5, 2]).unwrap();
        let total: f64 = mesh.boundary_quadrature(BoundaryTag::Gamma1, 3).iter().map(|q| q.weight).sum();
        // polyline arc length of the graph of h on a fine sampling
        let n = 100_000;
        let oracle: f64 = (0..n)
            .map(|i| {
                let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
                let dh = spec.height_at([b, 0.0]) - spec.height_at([a, 0.0]);
                ((b - a).powi(2) + dh * dh).sqrt()
            })
            .sum();
        assert!((total - oracle).abs() < 1e-10);
        assert!((total - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn volumes_and_orientation_3d() {
        let spec = DomainSpec {
            dim: 3,
            omega_extent: vec![1.0, 2.0],
            height: HeightFn::Affine { base: 1.0, slope: [0.5, 0.25] },
        };
        let mesh = build_slab_mesh(&spec, &[3, 2, 2]).unwrap();
        assert_eq!(mesh.n_cells(), 6 * 12);
        assert!((0..mesh.n_cells()).all(|c| mesh.cell_volume(c) > 0.0));
        // ∫_ω h = 2 + 0.5·(1/2)·2 + 0.25·(2)·1 = 3
        assert!((mesh.volume() - 3.0).abs() < 1e-12);
        assert!((mesh.tag_measure(BoundaryTag::Omega) - 2.0).abs() < 1e-12);
        for f in &mesh.boundary_facets {
            assert!((norm3(&f.normal) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn vtk_has_expected_sections() {
        let mesh = unit_square(1, 1);
        let vals = vec![0.0; 4];
        let s = mesh.to_vtk("t", &[("theta", PointData::Scalars(&vals))]);
        assert!(s.contains("POINTS 4 double"));
        assert!(s.contains("CELLS 2 8"));
        assert!(s.contains("CELL_TYPES 2"));
        assert!(s.contains("POINT_DATA 4"));
    }
}
