//! Convex domains in dimensions 1 and 2, mesh generation, and
//! Gaussian-weighted quadrature.
//!
//! Meshes carry their quadrature (3-point Gauss per segment, 6-point
//! order-4 rule per triangle) with the Gaussian density evaluated at the
//! quadrature points, so every downstream integral is a plain weighted
//! sum.

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{gaussian_cdf, gaussian_density, gamma_halfspace, SQRT_2PI};
use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, Point2, Triangulation};

/// Truncation length for half-line meshes. The Gaussian weight beyond
/// `s + 12` is below 1e-25 relative in every integral used, so the
/// artificial right end gets a homogeneous Neumann closure.
pub const HALFLINE_TRUNCATION: f64 = 12.0;

/// Geometric description of a convex region of the line or plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    /// `(a, b)` on the line.
    Interval { a: f64, b: f64 },
    /// `{x_1 >= s}` on the line.
    HalfLine { s: f64 },
    /// Strictly convex polygon (either orientation on input).
    Polygon { vertices: Vec<[f64; 2]> },
    /// Disk, meshed as an inscribed polygon with chord length <= h.
    Disk { center: [f64; 2], radius: f64 },
}

impl Domain {
    pub fn dimension(&self) -> usize {
        match self {
            Domain::Interval { .. } | Domain::HalfLine { .. } => 1,
            Domain::Polygon { .. } | Domain::Disk { .. } => 2,
        }
    }

    /// Validate the domain invariants. With `allow_nonconvex` the
    /// convexity requirement on polygons is skipped (the resulting mesh
    /// carries a "hypothesis not satisfied" marker).
    pub fn validate(&self, allow_nonconvex: bool) -> Result<bool> {
        match self {
            Domain::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::Validation(format!(
                        "interval requires finite a < b, got a = {a}, b = {b}"
                    )));
                }
                Ok(true)
            }
            Domain::HalfLine { s } => {
                if !s.is_finite() {
                    return Err(Error::Validation("halfline requires finite s".into()));
                }
                Ok(true)
            }
            Domain::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::Validation("polygon needs >= 3 vertices".into()));
                }
                for v in vertices {
                    if !(v[0].is_finite() && v[1].is_finite()) {
                        return Err(Error::Validation("polygon vertex not finite".into()));
                    }
                }
                let n = vertices.len();
                for i in 0..n {
                    for j in i + 1..n {
                        let dx = vertices[i][0] - vertices[j][0];
                        let dy = vertices[i][1] - vertices[j][1];
                        if dx.abs() < 1e-14 && dy.abs() < 1e-14 {
                            return Err(Error::Validation(format!(
                                "repeated polygon vertices {i} and {j}"
                            )));
                        }
                    }
                }
                if polygon_signed_area(vertices).abs() < 1e-14 {
                    return Err(Error::Validation("degenerate polygon (zero area)".into()));
                }
                let convex = polygon_is_strictly_convex(vertices);
                if !convex && !allow_nonconvex {
                    return Err(Error::Validation(
                        "polygon is not strictly convex (pass the convexity override to proceed)"
                            .into(),
                    ));
                }
                Ok(convex)
            }
            Domain::Disk { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0)
                    || !center[0].is_finite()
                    || !center[1].is_finite()
                {
                    return Err(Error::Validation(format!(
                        "disk requires finite center and radius > 0, got radius = {radius}"
                    )));
                }
                Ok(true)
            }
        }
    }
}

pub fn polygon_signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        acc += v[i][0] * v[j][1] - v[j][0] * v[i][1];
    }
    0.5 * acc
}

/// All cross products of consecutive edges share a strict sign.
pub fn polygon_is_strictly_convex(v: &[[f64; 2]]) -> bool {
    let n = v.len();
    let mut sign = 0.0f64;
    for i in 0..n {
        let p = v[i];
        let q = v[(i + 1) % n];
        let r = v[(i + 2) % n];
        let cross = (q[0] - p[0]) * (r[1] - q[1]) - (q[1] - p[1]) * (r[0] - q[0]);
        if cross == 0.0 {
            return false;
        }
        if sign == 0.0 {
            sign = cross.signum();
        } else if cross.signum() != sign {
            return false;
        }
    }
    true
}

fn point_in_polygon(v: &[[f64; 2]], p: [f64; 2]) -> bool {
    // even-odd ray casting
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn dist_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt()
}

// ---------------------------------------------------------------------
// Quadrature rules (reference element)
// ---------------------------------------------------------------------

/// 3-point Gauss on [0, 1]: (local coordinate, weight).
pub const SEGMENT_RULE: [(f64, f64); 3] = [
    (0.11270166537925831, 0.2777777777777778),
    (0.5, 0.4444444444444444),
    (0.8872983346207417, 0.2777777777777778),
];

/// 6-point order-4 triangle rule: (barycentric l1, l2, weight), weights
/// summing to 1 (multiply by the triangle area).
pub const TRIANGLE_RULE: [(f64, f64, f64); 6] = [
    (0.816847572980459, 0.091576213509771, 0.109951743655322),
    (0.091576213509771, 0.816847572980459, 0.109951743655322),
    (0.091576213509771, 0.091576213509771, 0.109951743655322),
    (0.108103018168070, 0.445948490915965, 0.223381589678011),
    (0.445948490915965, 0.108103018168070, 0.223381589678011),
    (0.445948490915965, 0.445948490915965, 0.223381589678011),
];

/// Element connectivity: segments in 1D, triangles in 2D.
#[derive(Debug, Clone)]
pub enum Cells {
    Segments(Vec<[usize; 2]>),
    Triangles(Vec<[usize; 3]>),
}

impl Cells {
    pub fn len(&self) -> usize {
        match self {
            Cells::Segments(v) => v.len(),
            Cells::Triangles(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Discretization of a [`Domain`] with Gaussian-weighted quadrature and
/// boundary markers. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub dimension: usize,
    pub nodes: Vec<[f64; 2]>,
    pub cells: Cells,
    /// Sorted indices of nodes on the Dirichlet boundary.
    pub boundary_nodes: Vec<usize>,
    /// Quadrature points, grouped per element (3 per segment, 6 per triangle).
    pub quad_points: Vec<[f64; 2]>,
    /// Gaussian-weighted quadrature weights matching `quad_points`.
    pub quad_weights: Vec<f64>,
    /// Advertised tolerance on `sum(quad_weights) - gamma(domain)`.
    pub measure_tolerance: f64,
    /// Committed boundary-approximation error (inscribed polygon for disks).
    pub geometry_error: f64,
    /// False when the convexity hypothesis was overridden.
    pub hypothesis_satisfied: bool,
    pub h: f64,
    pub domain: Domain,
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.cells.len()
    }

    pub fn quad_per_element(&self) -> usize {
        match self.cells {
            Cells::Segments(_) => SEGMENT_RULE.len(),
            Cells::Triangles(_) => TRIANGLE_RULE.len(),
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_nodes.binary_search(&node).is_ok()
    }

    /// Total Gaussian quadrature mass, approximating `gamma(K)`.
    pub fn gaussian_mass(&self) -> f64 {
        self.quad_weights.iter().sum()
    }

    /// Largest element diameter.
    pub fn max_diameter(&self) -> f64 {
        let mut best = 0.0f64;
        match &self.cells {
            Cells::Segments(segs) => {
                for s in segs {
                    let d = (self.nodes[s[1]][0] - self.nodes[s[0]][0]).abs();
                    best = best.max(d);
                }
            }
            Cells::Triangles(tris) => {
                for t in tris {
                    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                        let a = self.nodes[t[i]];
                        let b = self.nodes[t[j]];
                        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                        best = best.max(d);
                    }
                }
            }
        }
        best
    }

    /// Lebesgue measure covered by the elements.
    pub fn lebesgue_volume(&self) -> f64 {
        match &self.cells {
            Cells::Segments(segs) => segs
                .iter()
                .map(|s| (self.nodes[s[1]][0] - self.nodes[s[0]][0]).abs())
                .sum(),
            Cells::Triangles(tris) => tris
                .iter()
                .map(|t| {
                    triangle_area(self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]).abs()
                })
                .sum(),
        }
    }
}

pub fn triangle_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

// ---------------------------------------------------------------------
// Mesh construction
// ---------------------------------------------------------------------

/// Build a quasi-uniform mesh with max element diameter <= `h`.
pub fn build_mesh(domain: &Domain, h: f64) -> Result<Mesh> {
    build_mesh_with_override(domain, h, false)
}

/// As [`build_mesh`], optionally skipping the convexity validation.
pub fn build_mesh_with_override(domain: &Domain, h: f64, allow_nonconvex: bool) -> Result<Mesh> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Validation(format!("mesh size h must be positive, got {h}")));
    }
    let hypothesis_satisfied = domain.validate(allow_nonconvex)?;
    match domain {
        Domain::Interval { a, b } => Ok(mesh_1d(domain.clone(), *a, *b, h, true)),
        Domain::HalfLine { s } => Ok(mesh_1d(
            domain.clone(),
            *s,
            *s + HALFLINE_TRUNCATION,
            h,
            false,
        )),
        Domain::Polygon { vertices } => {
            mesh_polygon(domain.clone(), vertices, h, 0.0, hypothesis_satisfied)
        }
        Domain::Disk { center, radius } => {
            let n = ((2.0 * std::f64::consts::PI * radius / h).ceil() as usize).max(8);
            let verts: Vec<[f64; 2]> = (0..n)
                .map(|k| {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
                })
                .collect();
            // inscribed-polygon area defect, reported as committed error
            let exact_area = std::f64::consts::PI * radius * radius;
            let poly_area = polygon_signed_area(&verts).abs();
            let geom_err = (exact_area - poly_area) / (2.0 * std::f64::consts::PI);
            mesh_polygon(domain.clone(), &verts, h, geom_err, true)
        }
    }
}

fn mesh_1d(domain: Domain, a: f64, b: f64, h: f64, dirichlet_right: bool) -> Mesh {
    let n = ((b - a) / h).ceil() as usize;
    let n = n.max(2);
    let step = (b - a) / n as f64;
    let nodes: Vec<[f64; 2]> = (0..=n).map(|i| [a + i as f64 * step, 0.0]).collect();
    let segs: Vec<[usize; 2]> = (0..n).map(|i| [i, i + 1]).collect();
    let mut quad_points = Vec::with_capacity(3 * n);
    let mut quad_weights = Vec::with_capacity(3 * n);
    for s in &segs {
        let (x0, x1) = (nodes[s[0]][0], nodes[s[1]][0]);
        let len = x1 - x0;
        for (t, w) in SEGMENT_RULE {
            let x = x0 + t * len;
            quad_points.push([x, 0.0]);
            quad_weights.push(w * len * gaussian_density(x));
        }
    }
    let boundary_nodes = if dirichlet_right { vec![0, n] } else { vec![0] };
    Mesh {
        dimension: 1,
        nodes,
        cells: Cells::Segments(segs),
        boundary_nodes,
        quad_points,
        quad_weights,
        measure_tolerance: 1e-9_f64.max(0.02 * step * step * step),
        geometry_error: if dirichlet_right { 0.0 } else { 1e-25 },
        hypothesis_satisfied: true,
        h,
        domain,
    }
}

fn mesh_polygon(
    domain: Domain,
    vertices: &[[f64; 2]],
    h: f64,
    geometry_error: f64,
    hypothesis_satisfied: bool,
) -> Result<Mesh> {
    // point spacing chosen so Delaunay diameters stay below h
    let spacing = 0.65 * h;
    let mut points: Vec<[f64; 2]> = Vec::new();
    // boundary points, in order along the edges
    let nv = vertices.len();
    for i in 0..nv {
        let a = vertices[i];
        let b = vertices[(i + 1) % nv];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let pieces = (len / spacing).ceil().max(1.0) as usize;
        for k in 0..pieces {
            let t = k as f64 / pieces as f64;
            points.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    let n_boundary = points.len();
    // interior grid points, kept clear of the boundary
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for v in vertices {
        xmin = xmin.min(v[0]);
        xmax = xmax.max(v[0]);
        ymin = ymin.min(v[1]);
        ymax = ymax.max(v[1]);
    }
    let margin = 0.5 * spacing;
    let nx = ((xmax - xmin) / spacing).ceil() as usize;
    let ny = ((ymax - ymin) / spacing).ceil() as usize;
    for iy in 0..=ny {
        for ix in 0..=nx {
            let p = [xmin + ix as f64 * spacing, ymin + iy as f64 * spacing];
            if !point_in_polygon(vertices, p) {
                continue;
            }
            let near_boundary = (0..nv).any(|i| {
                dist_to_segment(p, vertices[i], vertices[(i + 1) % nv]) < margin
            });
            if !near_boundary {
                points.push(p);
            }
        }
    }
    // Delaunay triangulation (stable order keeps node indices = insertion order)
    let spade_points: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let tri = DelaunayTriangulation::<Point2<f64>>::bulk_load_stable(spade_points)
        .map_err(|e| Error::numerical("mesh", format!("triangulation failed: {e:?}")))?;
    let mut tris: Vec<[usize; 3]> = Vec::new();
    for face in tri.inner_faces() {
        let vs = face.vertices();
        let idx = [vs[0].index(), vs[1].index(), vs[2].index()];
        let (a, b, c) = (points[idx[0]], points[idx[1]], points[idx[2]]);
        let centroid = [
            (a[0] + b[0] + c[0]) / 3.0,
            (a[1] + b[1] + c[1]) / 3.0,
        ];
        // for convex input every face is inside; the test only matters
        // under the non-convex override
        if !hypothesis_satisfied && !point_in_polygon(vertices, centroid) {
            continue;
        }
        let area = triangle_area(a, b, c);
        if area.abs() < 1e-16 {
            continue;
        }
        if area > 0.0 {
            tris.push(idx);
        } else {
            tris.push([idx[0], idx[2], idx[1]]);
        }
    }
    if tris.is_empty() {
        return Err(Error::Validation(
            "mesh generation produced no triangles (h too large for the domain?)".into(),
        ));
    }
    let mut quad_points = Vec::with_capacity(6 * tris.len());
    let mut quad_weights = Vec::with_capacity(6 * tris.len());
    for t in &tris {
        let (a, b, c) = (points[t[0]], points[t[1]], points[t[2]]);
        let area = triangle_area(a, b, c);
        for (l1, l2, w) in TRIANGLE_RULE {
            let l3 = 1.0 - l1 - l2;
            let x = l1 * a[0] + l2 * b[0] + l3 * c[0];
            let y = l1 * a[1] + l2 * b[1] + l3 * c[1];
            let density = (-0.5 * (x * x + y * y)).exp() / (2.0 * std::f64::consts::PI);
            quad_points.push([x, y]);
            quad_weights.push(w * area * density);
        }
    }
    let boundary_nodes: Vec<usize> = (0..n_boundary).collect();
    Ok(Mesh {
        dimension: 2,
        nodes: points,
        cells: Cells::Triangles(tris),
        boundary_nodes,
        quad_points,
        quad_weights,
        measure_tolerance: 1e-8_f64.max(0.02 * h * h * h) + 0.1 * geometry_error.abs(),
        geometry_error,
        hypothesis_satisfied,
        h,
        domain,
    })
}

// ---------------------------------------------------------------------
// Gaussian measure and quadrature of fields
// ---------------------------------------------------------------------

/// Gaussian measure of a domain: closed forms in 1D and for centered
/// disks, adaptive slice quadrature (relative error <= 1e-8) otherwise.
pub fn gaussian_measure(domain: &Domain) -> Result<f64> {
    domain.validate(true)?;
    match domain {
        Domain::Interval { a, b } => Ok(gaussian_cdf(*b) - gaussian_cdf(*a)),
        Domain::HalfLine { s } => Ok(gamma_halfspace(*s)),
        Domain::Disk { center, radius } => {
            if center[0] == 0.0 && center[1] == 0.0 {
                return Ok(-(-0.5 * radius * radius).exp_m1());
            }
            // theta substitution keeps the integrand smooth at the rim
            let (cx, cy, r) = (center[0], center[1], *radius);
            let g = |theta: f64| {
                let x = cx + r * theta.sin();
                let half_width = r * theta.cos();
                gaussian_density(x)
                    * (gaussian_cdf(cy + half_width) - gaussian_cdf(cy - half_width))
                    * r
                    * theta.cos()
            };
            Ok(quad::integrate(
                g,
                -std::f64::consts::FRAC_PI_2,
                std::f64::consts::FRAC_PI_2,
                1e-10,
                1e-16,
            ))
        }
        Domain::Polygon { vertices } => {
            let mut xs: Vec<f64> = vertices.iter().map(|v| v[0]).collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
            let g = |x: f64| {
                // even-odd pairing of the section's y-crossings
                let mut ys: Vec<f64> = Vec::new();
                let n = vertices.len();
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    if (a[0] > x) != (b[0] > x) {
                        ys.push(a[1] + (x - a[0]) / (b[0] - a[0]) * (b[1] - a[1]));
                    }
                }
                ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
                let mut acc = 0.0;
                let mut k = 0;
                while k + 1 < ys.len() {
                    acc += gaussian_cdf(ys[k + 1]) - gaussian_cdf(ys[k]);
                    k += 2;
                }
                gaussian_density(x) * acc
            };
            let mut total = 0.0;
            for w in xs.windows(2) {
                total += quad::integrate(g, w[0], w[1], 1e-10, 1e-16);
            }
            Ok(total)
        }
    }
}

/// Integrate a piecewise-linear nodal field over the mesh:
/// `integral_K u dgamma` by the element quadrature rule.
pub fn integrate(mesh: &Mesh, values: &[f64]) -> Result<f64> {
    if values.len() != mesh.num_nodes() {
        return Err(Error::Validation(format!(
            "field has {} values but mesh has {} nodes",
            values.len(),
            mesh.num_nodes()
        )));
    }
    let mut acc = 0.0;
    let mut q = 0;
    match &mesh.cells {
        Cells::Segments(segs) => {
            for s in segs {
                for (t, _) in SEGMENT_RULE {
                    let u = (1.0 - t) * values[s[0]] + t * values[s[1]];
                    acc += mesh.quad_weights[q] * u;
                    q += 1;
                }
            }
        }
        Cells::Triangles(tris) => {
            for t in tris {
                for (l1, l2, _) in TRIANGLE_RULE {
                    let l3 = 1.0 - l1 - l2;
                    let u = l1 * values[t[0]] + l2 * values[t[1]] + l3 * values[t[2]];
                    acc += mesh.quad_weights[q] * u;
                    q += 1;
                }
            }
        }
    }
    Ok(acc)
}

/// Evaluate a closed-form function at every node.
pub fn nodal_field(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    mesh.nodes.iter().map(|p| f(p[0], p[1])).collect()
}

/// Gaussian perimeter weight along the 1D axis (used by tests).
pub fn axis_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}
