//! Triangular meshes over planar or spherical domains.

use std::collections::HashMap;
use std::fmt::Write as _;

use spade::handles::FixedVertexHandle;
use spade::{ConstrainedDelaunayTriangulation, DelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// Points in the plane, embedded with zero third coordinate.
    Planar,
    /// Longitude/latitude in degrees, embedded on the unit sphere.
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Interior,
    Extension,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub position: [f64; 3],
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub region: Region,
}

/// Options for [`build_mesh`].
#[derive(Debug, Clone)]
pub struct MeshOptions {
    /// Width of the extension zone in chart units (degrees on the sphere).
    pub extension_width: f64,
    /// Lattice spacing of extension points; defaults to the median
    /// nearest-neighbour distance of the input points.
    pub extension_spacing: Option<f64>,
}

impl MeshOptions {
    pub fn new(extension_width: f64) -> Self {
        MeshOptions { extension_width, extension_spacing: None }
    }
}

/// Piecewise planar triangulation with a 2D chart for every vertex.
#[derive(Debug, Clone)]
pub struct Mesh {
    geometry: Geometry,
    vertices: Vec<Vertex>,
    chart: Vec<[f64; 2]>,
    triangles: Vec<Triangle>,
    locator: Locator,
    /// Observation matrix attached with [`Mesh::attach_observations`].
    pub observation_map: Option<CsrMatrix>,
}

pub fn lonlat_to_unit(lon: f64, lat: f64) -> [f64; 3] {
    let (l, p) = (lon.to_radians(), lat.to_radians());
    [p.cos() * l.cos(), p.cos() * l.sin(), p.sin()]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn cross2(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl Mesh {
    /// Assembles a mesh from chart coordinates and triangles, validating it.
    pub fn from_parts(geometry: Geometry, chart: Vec<[f64; 2]>, triangles: Vec<Triangle>) -> Result<Self> {
        let vertices: Vec<Vertex> = chart
            .iter()
            .enumerate()
            .map(|(index, c)| {
                let position = match geometry {
                    Geometry::Planar => [c[0], c[1], 0.0],
                    Geometry::Sphere => lonlat_to_unit(c[0], c[1]),
                };
                Vertex { position, index }
            })
            .collect();
        for v in &vertices {
            if v.position.iter().any(|x| !x.is_finite()) {
                return Err(Error::Mesh(format!("vertex {} is not finite", v.index)));
            }
        }
        let n = vertices.len();
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.vertices;
            if a >= n || b >= n || c >= n || a == b || b == c || a == c {
                return Err(Error::Mesh(format!("triangle {t} has invalid vertex indices")));
            }
            for (i, j) in [(a, b), (b, c), (c, a)] {
                *edges.entry((i.min(j), i.max(j))).or_insert(0) += 1;
            }
        }
        if let Some((e, _)) = edges.iter().find(|(_, &c)| c > 2) {
            return Err(Error::Mesh(format!("edge {e:?} is shared by more than two triangles")));
        }
        let mut mesh = Mesh {
            geometry,
            vertices,
            chart,
            triangles,
            locator: Locator::default(),
            observation_map: None,
        };
        for t in 0..mesh.triangles.len() {
            if !(mesh.triangle_area(t) > 0.0) {
                return Err(Error::Mesh(format!("triangle {t} has zero area")));
            }
        }
        mesh.locator = Locator::build(&mesh.chart, &mesh.triangles);
        Ok(mesh)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Chart coordinates (lon/lat degrees on the sphere, x/y in the plane).
    pub fn chart(&self) -> &[[f64; 2]] {
        &self.chart
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].vertices;
        let (pa, pb, pc) = (self.vertices[a].position, self.vertices[b].position, self.vertices[c].position);
        0.5 * norm(cross(sub(pb, pa), sub(pc, pa)))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn interior_area(&self) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.triangles[t].region == Region::Interior)
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Mean of the chart coordinates of the triangle's vertices.
    pub fn chart_centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t].vertices;
        let (pa, pb, pc) = (self.chart[a], self.chart[b], self.chart[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    /// Vertex coordinates in an orthonormal frame of the triangle's plane.
    ///
    /// The first axis follows the chart's first coordinate direction
    /// (east on the sphere), so anisotropy in the chart carries over.
    pub fn local_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t].vertices;
        let p = [self.vertices[a].position, self.vertices[b].position, self.vertices[c].position];
        let (e1, e2) = match self.geometry {
            Geometry::Planar => ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
            Geometry::Sphere => {
                let mut nrm = cross(sub(p[1], p[0]), sub(p[2], p[0]));
                let cen = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0, (p[0][2] + p[1][2] + p[2][2]) / 3.0];
                let nn = norm(nrm);
                nrm = [nrm[0] / nn, nrm[1] / nn, nrm[2] / nn];
                if dot(nrm, cen) < 0.0 {
                    nrm = [-nrm[0], -nrm[1], -nrm[2]];
                }
                let lon = cen[1].atan2(cen[0]);
                let mut east = [-lon.sin(), lon.cos(), 0.0];
                let d = dot(east, nrm);
                east = [east[0] - d * nrm[0], east[1] - d * nrm[1], east[2] - d * nrm[2]];
                let en = norm(east);
                let e1 = [east[0] / en, east[1] / en, east[2] / en];
                (e1, cross(nrm, e1))
            }
        };
        let o = p[0];
        let mut q = [[0.0; 2]; 3];
        for k in 0..3 {
            let d = sub(p[k], o);
            q[k] = [dot(d, e1), dot(d, e2)];
        }
        q
    }

    /// Vertices on edges that belong to exactly one triangle.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            let [a, b, c] = tri.vertices;
            for (i, j) in [(a, b), (b, c), (c, a)] {
                *edges.entry((i.min(j), i.max(j))).or_insert(0) += 1;
            }
        }
        let mut on = vec![false; self.vertices.len()];
        for ((i, j), c) in edges {
            if c == 1 {
                on[i] = true;
                on[j] = true;
            }
        }
        (0..on.len()).filter(|&i| on[i]).collect()
    }

    /// Vertices not on the outer boundary, in increasing order.
    pub fn free_vertices(&self) -> Vec<usize> {
        let b = self.boundary_vertices();
        let mut on = vec![false; self.vertices.len()];
        for i in b {
            on[i] = true;
        }
        (0..on.len()).filter(|&i| !on[i]).collect()
    }

    pub fn num_edges(&self) -> usize {
        let mut edges = std::collections::HashSet::new();
        for tri in &self.triangles {
            let [a, b, c] = tri.vertices;
            for (i, j) in [(a, b), (b, c), (c, a)] {
                edges.insert((i.min(j), i.max(j)));
            }
        }
        edges.len()
    }

    /// Containing triangle and barycentric coordinates of a chart point.
    pub fn locate(&self, s: [f64; 2]) -> Option<(usize, [f64; 3])> {
        self.locator.locate(&self.chart, &self.triangles, s)
    }

    /// Barycentric interpolation matrix, one row per location.
    pub fn observation_matrix(&self, locations: &[[f64; 2]]) -> Result<CsrMatrix> {
        let mut t = Vec::with_capacity(3 * locations.len());
        for (i, &s) in locations.iter().enumerate() {
            let (tri, w) = self.locate(s).ok_or(Error::Lookup { index: i })?;
            for k in 0..3 {
                if w[k] != 0.0 {
                    t.push((i, self.triangles[tri].vertices[k], w[k]));
                }
            }
        }
        Ok(CsrMatrix::from_triplets(locations.len(), self.vertices.len(), &t))
    }

    pub fn attach_observations(&mut self, locations: &[[f64; 2]]) -> Result<()> {
        self.observation_map = Some(self.observation_matrix(locations)?);
        Ok(())
    }

    /// Plain-text export: `v x y z` and `t i j k flag` lines, flag 0 for
    /// interior and 1 for extension.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self.geometry {
            Geometry::Planar => s.push_str("# geometry planar\n"),
            Geometry::Sphere => {
                let lo = self.chart.iter().map(|c| c[0]).fold(f64::INFINITY, f64::min);
                let hi = self.chart.iter().map(|c| c[0]).fold(f64::NEG_INFINITY, f64::max);
                let _ = writeln!(s, "# geometry sphere\n# lon_center {:.17e}", 0.5 * (lo + hi));
            }
        }
        for v in &self.vertices {
            let p = v.position;
            let _ = writeln!(s, "v {:.17e} {:.17e} {:.17e}", p[0], p[1], p[2]);
        }
        for t in &self.triangles {
            let [a, b, c] = t.vertices;
            let f = match t.region {
                Region::Interior => 0,
                Region::Extension => 1,
            };
            let _ = writeln!(s, "t {a} {b} {c} {f}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut geometry = Geometry::Planar;
        let mut lon_center = 0.0;
        let mut pos: Vec<[f64; 3]> = Vec::new();
        let mut tris = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            let err = |m: &str| Error::Parse { line: ln + 1, msg: m.to_string() };
            if let Some(rest) = line.strip_prefix('#') {
                let f: Vec<&str> = rest.split_whitespace().collect();
                match f.as_slice() {
                    ["geometry", "sphere"] => geometry = Geometry::Sphere,
                    ["geometry", "planar"] => geometry = Geometry::Planar,
                    ["lon_center", v] => lon_center = v.parse().map_err(|_| err("bad lon_center"))?,
                    _ => {}
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            match f[0] {
                "v" if f.len() == 4 => {
                    let mut p = [0.0; 3];
                    for k in 0..3 {
                        p[k] = f[k + 1].parse().map_err(|_| err("bad vertex coordinate"))?;
                    }
                    pos.push(p);
                }
                "t" if f.len() == 5 => {
                    let mut v = [0usize; 3];
                    for k in 0..3 {
                        v[k] = f[k + 1].parse().map_err(|_| err("bad triangle index"))?;
                    }
                    let region = match f[4] {
                        "0" | "interior" => Region::Interior,
                        "1" | "extension" => Region::Extension,
                        _ => return Err(err("bad region flag")),
                    };
                    tris.push(Triangle { vertices: v, region });
                }
                _ => return Err(err("unrecognised line")),
            }
        }
        let chart = pos
            .iter()
            .map(|p| match geometry {
                Geometry::Planar => [p[0], p[1]],
                Geometry::Sphere => {
                    let mut lon = p[1].atan2(p[0]).to_degrees();
                    while lon > lon_center + 180.0 {
                        lon -= 360.0;
                    }
                    while lon <= lon_center - 180.0 {
                        lon += 360.0;
                    }
                    [lon, p[2].clamp(-1.0, 1.0).asin().to_degrees()]
                }
            })
            .collect();
        Mesh::from_parts(geometry, chart, tris)
    }
}

/// Uniform bucket grid over the chart for point location.
#[derive(Debug, Clone, Default)]
struct Locator {
    origin: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    fn build(chart: &[[f64; 2]], tris: &[Triangle]) -> Self {
        if tris.is_empty() {
            return Locator::default();
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in chart {
            for k in 0..2 {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        let side = (tris.len() as f64).sqrt().ceil().max(1.0) as usize;
        let dims = [side, side];
        let cell = [((hi[0] - lo[0]) / side as f64).max(1e-300), ((hi[1] - lo[1]) / side as f64).max(1e-300)];
        let mut buckets = vec![Vec::new(); side * side];
        let idx = |v: f64, k: usize| (((v - lo[k]) / cell[k]).floor().max(0.0) as usize).min(dims[k] - 1);
        for (t, tri) in tris.iter().enumerate() {
            let mut tl = [f64::INFINITY; 2];
            let mut th = [f64::NEG_INFINITY; 2];
            for &v in &tri.vertices {
                for k in 0..2 {
                    tl[k] = tl[k].min(chart[v][k]);
                    th[k] = th[k].max(chart[v][k]);
                }
            }
            for i in idx(tl[0], 0)..=idx(th[0], 0) {
                for j in idx(tl[1], 1)..=idx(th[1], 1) {
                    buckets[i * side + j].push(t);
                }
            }
        }
        Locator { origin: lo, cell, dims, buckets }
    }

    fn locate(&self, chart: &[[f64; 2]], tris: &[Triangle], s: [f64; 2]) -> Option<(usize, [f64; 3])> {
        if self.buckets.is_empty() {
            return None;
        }
        let tol = 1e-10;
        let mut cand = Vec::with_capacity(4);
        let fi = (s[0] - self.origin[0]) / self.cell[0];
        let fj = (s[1] - self.origin[1]) / self.cell[1];
        if fi < -tol || fj < -tol || fi > self.dims[0] as f64 + tol || fj > self.dims[1] as f64 + tol {
            return None;
        }
        let i0 = (fi.floor().max(0.0) as usize).min(self.dims[0] - 1);
        let j0 = (fj.floor().max(0.0) as usize).min(self.dims[1] - 1);
        // also look at neighbouring cells when the point sits on a cell edge
        for i in i0.saturating_sub(1)..=(i0 + 1).min(self.dims[0] - 1) {
            for j in j0.saturating_sub(1)..=(j0 + 1).min(self.dims[1] - 1) {
                cand.push(i * self.dims[1] + j);
            }
        }
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for b in cand {
            for &t in &self.buckets[b] {
                let [a, bb, c] = tris[t].vertices;
                let (pa, pb, pc) = (chart[a], chart[bb], chart[c]);
                let d = cross2(pa, pb, pc);
                let l1 = cross2(pa, s, pc) / d;
                let l2 = cross2(pa, pb, s) / d;
                let l0 = 1.0 - l1 - l2;
                let m = l0.min(l1).min(l2);
                if m >= -tol && best.map_or(true, |(_, _, bm)| m > bm) {
                    best = Some((t, [l0, l1, l2], m));
                }
            }
        }
        best.map(|(t, mut w, _)| {
            if w.iter().any(|&x| x < 0.0) {
                for x in w.iter_mut() {
                    *x = x.max(0.0);
                }
                let s: f64 = w.iter().sum();
                for x in w.iter_mut() {
                    *x /= s;
                }
            }
            (t, w)
        })
    }
}

fn nearest_spacing(points: &[[f64; 2]]) -> f64 {
    let dt = match DelaunayTriangulation::<Point2<f64>>::bulk_load(points.iter().map(|p| Point2::new(p[0], p[1])).collect()) {
        Ok(d) => d,
        Err(_) => return 1.0,
    };
    let mut nn = vec![f64::INFINITY; dt.num_vertices()];
    for e in dt.undirected_edges() {
        let [a, b] = e.vertices();
        let len = e.length_2().sqrt();
        nn[a.fix().index()] = nn[a.fix().index()].min(len);
        nn[b.fix().index()] = nn[b.fix().index()].min(len);
    }
    nn.retain(|v| v.is_finite());
    if nn.is_empty() {
        return 1.0;
    }
    nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nn[nn.len() / 2]
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Constrained Delaunay mesh of `points` plus an extension ring.
///
/// The convex hull of the input is constrained so that triangles inside it
/// use input points only and are flagged interior; everything else is
/// flagged extension.
pub fn build_mesh(points: &[[f64; 2]], geometry: Geometry, opts: &MeshOptions) -> Result<Mesh> {
    if points.len() < 3 {
        return Err(Error::Mesh("need at least three points".into()));
    }
    if !(opts.extension_width >= 0.0) {
        return Err(Error::Mesh("extension width must be nonnegative".into()));
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::Mesh("non-finite input point".into()));
    }
    let mut dt = DelaunayTriangulation::<Point2<f64>>::new();
    for (i, p) in points.iter().enumerate() {
        let h = dt.insert(Point2::new(p[0], p[1])).map_err(|e| Error::Mesh(format!("point {i}: {e:?}")))?;
        if h.index() != i {
            return Err(Error::Mesh(format!("duplicate point {i}")));
        }
    }
    if dt.all_vertices_on_line() {
        return Err(Error::Mesh("input points are collinear".into()));
    }
    let hull: Vec<usize> = dt.convex_hull().map(|e| e.from().fix().index()).collect();

    let mut all: Vec<[f64; 2]> = points.to_vec();
    let w = opts.extension_width;
    if w > 0.0 {
        let h = opts.extension_spacing.unwrap_or_else(|| nearest_spacing(points));
        if !(h > 0.0) {
            return Err(Error::Mesh("extension spacing must be positive".into()));
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let hp: Vec<[f64; 2]> = hull.iter().map(|&i| points[i]).collect();
        let inside = |p: [f64; 2]| {
            // hull from spade runs clockwise around the outer face
            let m = hp.len();
            let s0 = (0..m).map(|k| cross2(hp[k], hp[(k + 1) % m], p)).collect::<Vec<_>>();
            s0.iter().all(|&v| v >= 0.0) || s0.iter().all(|&v| v <= 0.0)
        };
        let nx = ((hi[0] - lo[0] + 2.0 * w) / h).ceil() as i64;
        let ny = ((hi[1] - lo[1] + 2.0 * w) / h).ceil() as i64;
        for i in 0..=nx {
            for j in 0..=ny {
                let p = [lo[0] - w + i as f64 * h, lo[1] - w + j as f64 * h];
                if inside(p) {
                    continue;
                }
                let m = hp.len();
                let d = (0..m).map(|k| point_segment_distance(p, hp[k], hp[(k + 1) % m])).fold(f64::INFINITY, f64::min);
                if d >= 0.5 * h && d <= w + 1e-9 * h {
                    all.push(p);
                }
            }
        }
        if geometry == Geometry::Sphere {
            all.retain(|p| p[1].abs() < 89.9);
            if all.len() < points.len() {
                return Err(Error::Mesh("input points near the poles".into()));
            }
        }
    }

    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let mut handles: Vec<FixedVertexHandle> = Vec::with_capacity(all.len());
    for (i, p) in all.iter().enumerate() {
        let h = cdt.insert(Point2::new(p[0], p[1])).map_err(|e| Error::Mesh(format!("point {i}: {e:?}")))?;
        if h.index() != i {
            return Err(Error::Mesh(format!("duplicate point {i}")));
        }
        handles.push(h);
    }
    if all.len() > points.len() {
        for k in 0..hull.len() {
            let (a, b) = (hull[k], hull[(k + 1) % hull.len()]);
            cdt.add_constraint(handles[a], handles[b]);
        }
    }
    let n_in = points.len();
    let mut tris = Vec::with_capacity(cdt.num_inner_faces());
    for f in cdt.inner_faces() {
        let v = f.vertices().map(|h| h.fix().index());
        let region = if v.iter().all(|&i| i < n_in) { Region::Interior } else { Region::Extension };
        tris.push(Triangle { vertices: v, region });
    }
    Mesh::from_parts(geometry, all, tris)
}

/// Mesh over lon/lat grid points on the unit sphere.
pub fn build_lonlat_mesh(grid: &[[f64; 2]], extension_width: f64) -> Result<Mesh> {
    build_mesh(grid, Geometry::Sphere, &MeshOptions::new(extension_width))
}

/// Structured planar mesh on an `nx × ny` vertex lattice, all triangles interior.
pub fn regular_grid(nx: usize, ny: usize, origin: [f64; 2], spacing: [f64; 2]) -> Result<Mesh> {
    if nx < 2 || ny < 2 {
        return Err(Error::Mesh("grid needs at least 2x2 vertices".into()));
    }
    let mut chart = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            chart.push([origin[0] + i as f64 * spacing[0], origin[1] + j as f64 * spacing[1]]);
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut tris = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            tris.push(Triangle { vertices: [a, b, c], region: Region::Interior });
            tris.push(Triangle { vertices: [a, c, d], region: Region::Interior });
        }
    }
    Mesh::from_parts(Geometry::Planar, chart, tris)
}

/// Marks triangles whose centroid lies outside the axis-aligned box as extension.
pub fn flag_outside_box(mesh: &Mesh, lo: [f64; 2], hi: [f64; 2]) -> Result<Mesh> {
    let tris = (0..mesh.num_triangles())
        .map(|t| {
            let c = mesh.chart_centroid(t);
            let inside = c[0] >= lo[0] && c[0] <= hi[0] && c[1] >= lo[1] && c[1] <= hi[1];
            Triangle {
                vertices: mesh.triangles[t].vertices,
                region: if inside { Region::Interior } else { Region::Extension },
            }
        })
        .collect();
    Mesh::from_parts(mesh.geometry, mesh.chart.clone(), tris)
}
