//! Convex polytopes in the horizontal layer.
//!
//! Inputs are first reduced to their affine hull. In affine dimension ≤ 3 the
//! hull is built exactly (interval, monotone chain, incremental 3-D hull) and
//! distance queries are exact; above that the point cloud is kept as is and
//! distances come from Frank–Wolfe iterations.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::linalg::{dot, norm2, sub};

/// Point spread below this (relative to the point magnitudes) is treated as
/// roundoff when computing the affine dimension.
const FLAT_TOL: f64 = 1e-9;
const FW_ITERS: usize = 4000;

#[derive(Clone, Debug)]
enum Shape {
    Point,
    /// Extreme parameters along the single affine direction.
    Interval { lo: f64, hi: f64 },
    /// Counter-clockwise polygon in local coordinates.
    Polygon { ring: Vec<[f64; 2]> },
    /// Outward-oriented triangles over local points.
    Polyhedron { pts: Vec<[f64; 3]>, faces: Vec<[usize; 3]> },
    Cloud,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexPolytope {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    #[serde(skip)]
    origin: Vec<f64>,
    /// Orthonormal basis of the affine hull directions.
    #[serde(skip)]
    basis: Vec<Vec<f64>>,
    #[serde(skip)]
    shape: Shape,
}

impl ConvexPolytope {
    /// Convex hull of a nonempty point set in ℝ^dim.
    pub fn from_points(points: &[Vec<f64>]) -> Option<Self> {
        let first = points.first()?;
        let dim = first.len();
        let npts = points.len() as f64;
        let origin: Vec<f64> = (0..dim)
            .map(|i| points.iter().map(|p| p[i]).sum::<f64>() / npts)
            .collect();
        let mag = points
            .iter()
            .map(|p| norm2(p))
            .fold(0.0, f64::max)
            .max(1.0);
        let centered = DMatrix::from_fn(points.len(), dim, |r, c| points[r][c] - origin[c]);
        let svd = centered.svd(false, true);
        let vt = svd.v_t.expect("requested V^T");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let basis: Vec<Vec<f64>> = order
            .into_iter()
            .filter(|&k| svd.singular_values[k] / npts.sqrt() > FLAT_TOL * mag)
            .map(|k| vt.row(k).iter().copied().collect())
            .collect();
        let local: Vec<Vec<f64>> = points
            .iter()
            .map(|p| {
                let d = sub(p, &origin);
                basis.iter().map(|b| dot(b, &d)).collect()
            })
            .collect();

        let (shape, keep): (Shape, Vec<usize>) = match basis.len() {
            0 => (Shape::Point, vec![0]),
            1 => {
                let (mut imin, mut imax) = (0, 0);
                for (i, l) in local.iter().enumerate() {
                    if l[0] < local[imin][0] {
                        imin = i;
                    }
                    if l[0] > local[imax][0] {
                        imax = i;
                    }
                }
                (
                    Shape::Interval {
                        lo: local[imin][0],
                        hi: local[imax][0],
                    },
                    vec![imin, imax],
                )
            }
            2 => {
                let idx = monotone_chain(&local);
                let ring = idx.iter().map(|&i| [local[i][0], local[i][1]]).collect();
                (Shape::Polygon { ring }, idx)
            }
            3 => {
                let pts3: Vec<[f64; 3]> = local.iter().map(|l| [l[0], l[1], l[2]]).collect();
                match hull3(&pts3) {
                    Some((idx, faces)) => {
                        let pts = idx.iter().map(|&i| pts3[i]).collect();
                        (Shape::Polyhedron { pts, faces }, idx)
                    }
                    None => (Shape::Cloud, (0..points.len()).collect()),
                }
            }
            _ => (Shape::Cloud, dedup(points)),
        };
        let vertices = keep.iter().map(|&i| points[i].clone()).collect();
        Some(Self {
            dim,
            vertices,
            origin,
            basis,
            shape,
        })
    }

    pub fn singleton(p: Vec<f64>) -> Self {
        Self::from_points(&[p]).expect("nonempty")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Dimension of the affine hull (after discarding roundoff spread).
    pub fn affine_dim(&self) -> usize {
        self.basis.len()
    }

    /// True when distances are exact (affine dimension ≤ 3).
    pub fn is_exact(&self) -> bool {
        !matches!(self.shape, Shape::Cloud)
    }

    /// Support function max_{p} ⟨p, h⟩.
    pub fn support(&self, h: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| dot(v, h))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self, h: &[f64]) -> &[f64] {
        self.extreme(h, true)
    }

    pub fn argmin(&self, h: &[f64]) -> &[f64] {
        self.extreme(h, false)
    }

    fn extreme(&self, h: &[f64], max: bool) -> &[f64] {
        let mut best = 0;
        for (i, v) in self.vertices.iter().enumerate() {
            let (a, b) = (dot(v, h), dot(&self.vertices[best], h));
            if (max && a > b) || (!max && a < b) {
                best = i;
            }
        }
        &self.vertices[best]
    }

    pub fn centroid(&self) -> Vec<f64> {
        let k = self.vertices.len() as f64;
        (0..self.dim)
            .map(|i| self.vertices.iter().map(|v| v[i]).sum::<f64>() / k)
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(norm2(&sub(a, b)));
            }
        }
        d
    }

    /// Euclidean distance from `q` to the polytope.
    pub fn distance_to(&self, q: &[f64]) -> f64 {
        let d = sub(q, &self.origin);
        let local: Vec<f64> = self.basis.iter().map(|b| dot(b, &d)).collect();
        let perp2 = (dot(&d, &d) - dot(&local, &local)).max(0.0);
        let inplane = match &self.shape {
            Shape::Point => 0.0,
            Shape::Interval { lo, hi } => {
                let t = local[0];
                if t < *lo {
                    lo - t
                } else if t > *hi {
                    t - hi
                } else {
                    0.0
                }
            }
            Shape::Polygon { ring } => polygon_distance(ring, [local[0], local[1]]),
            Shape::Polyhedron { pts, faces } => polyhedron_distance(pts, faces, [local[0], local[1], local[2]]),
            Shape::Cloud => return frank_wolfe_distance(&self.vertices, q),
        };
        (perp2 + inplane * inplane).sqrt()
    }

    pub fn contains(&self, q: &[f64], tol: f64) -> bool {
        self.distance_to(q) <= tol
    }

    /// max_{a ∈ self} dist(a, other), attained at a vertex of `self`.
    pub fn excess_over(&self, other: &ConvexPolytope) -> f64 {
        self.vertices
            .iter()
            .map(|v| other.distance_to(v))
            .fold(0.0, f64::max)
    }

    pub fn hausdorff(&self, other: &ConvexPolytope) -> f64 {
        self.excess_over(other).max(other.excess_over(self))
    }

    /// Range [min, max] of ⟨p, h⟩ over the polytope.
    pub fn support_range(&self, h: &[f64]) -> (f64, f64) {
        let neg: Vec<f64> = h.iter().map(|x| -x).collect();
        (-self.support(&neg), self.support(h))
    }

    /// A point p with ⟨p, h⟩ = σ on the segment between the minimizing and
    /// maximizing vertices of ⟨·, h⟩. Outside the support range the nearer
    /// extreme vertex is returned together with the gap.
    pub fn hyperplane_point(&self, h: &[f64], sigma: f64) -> (Vec<f64>, f64) {
        let lo = self.argmin(h).to_vec();
        let hi = self.argmax(h).to_vec();
        let (a, b) = (dot(&lo, h), dot(&hi, h));
        if sigma <= a {
            return (lo, a - sigma);
        }
        if sigma >= b {
            return (hi, sigma - b);
        }
        let t = (sigma - a) / (b - a);
        let p = lo.iter().zip(&hi).map(|(x, y)| x + t * (y - x)).collect();
        (p, 0.0)
    }
}

fn dedup(points: &[Vec<f64>]) -> Vec<usize> {
    let mut keep: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !keep.iter().any(|&k| points[k] == *p) {
            keep.push(i);
        }
    }
    keep
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain; returns indices in counter-clockwise order.
fn monotone_chain(pts: &[Vec<f64>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| {
        pts[a][0]
            .total_cmp(&pts[b][0])
            .then(pts[a][1].total_cmp(&pts[b][1]))
    });
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2
                && cross(&pts[hull[hull.len() - 2]], &pts[hull[hull.len() - 1]], &pts[i]) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

fn seg_dist2(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    d[0] * d[0] + d[1] * d[1]
}

fn polygon_distance(ring: &[[f64; 2]], q: [f64; 2]) -> f64 {
    let n = ring.len();
    let inside = (0..n).all(|i| {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) >= 0.0
    });
    if inside {
        return 0.0;
    }
    (0..n)
        .map(|i| seg_dist2(q, ring[i], ring[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

type V3 = [f64; 3];

fn v3sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn v3dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn v3cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn face_normal(pts: &[V3], f: [usize; 3]) -> V3 {
    v3cross(v3sub(pts[f[1]], pts[f[0]]), v3sub(pts[f[2]], pts[f[0]]))
}

/// Incremental 3-D hull. Returns the vertex indices and faces re-indexed into
/// that vertex list, or `None` if no nondegenerate tetrahedron exists.
fn hull3(pts: &[V3]) -> Option<(Vec<usize>, Vec<[usize; 3]>)> {
    let scale = pts
        .iter()
        .map(|p| v3dot(*p, *p).sqrt())
        .fold(0.0, f64::max)
        .max(1e-300);
    let eps = 1e-12 * scale;
    // initial tetrahedron: extreme in x, farthest from it, farthest from the
    // line, farthest from the plane
    let i0 = (0..pts.len()).min_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0]))?;
    let i1 = (0..pts.len()).max_by(|&a, &b| {
        let da = v3dot(v3sub(pts[a], pts[i0]), v3sub(pts[a], pts[i0]));
        let db = v3dot(v3sub(pts[b], pts[i0]), v3sub(pts[b], pts[i0]));
        da.total_cmp(&db)
    })?;
    let line = v3sub(pts[i1], pts[i0]);
    let i2 = (0..pts.len()).max_by(|&a, &b| {
        let ca = v3cross(line, v3sub(pts[a], pts[i0]));
        let cb = v3cross(line, v3sub(pts[b], pts[i0]));
        v3dot(ca, ca).total_cmp(&v3dot(cb, cb))
    })?;
    let n012 = v3cross(line, v3sub(pts[i2], pts[i0]));
    if v3dot(n012, n012).sqrt() <= eps * scale {
        return None;
    }
    let i3 = (0..pts.len()).max_by(|&a, &b| {
        v3dot(n012, v3sub(pts[a], pts[i0]))
            .abs()
            .total_cmp(&v3dot(n012, v3sub(pts[b], pts[i0])).abs())
    })?;
    let vol = v3dot(n012, v3sub(pts[i3], pts[i0]));
    if vol.abs() <= eps * v3dot(n012, n012).sqrt() {
        return None;
    }
    let mut faces: Vec<[usize; 3]> = if vol < 0.0 {
        vec![[i0, i1, i2], [i0, i3, i1], [i1, i3, i2], [i2, i3, i0]]
    } else {
        vec![[i0, i2, i1], [i0, i1, i3], [i1, i2, i3], [i2, i0, i3]]
    };
    for (p, &q) in pts.iter().enumerate() {
        if [i0, i1, i2, i3].contains(&p) {
            continue;
        }
        let visible: Vec<bool> = faces
            .iter()
            .map(|&f| {
                let n = face_normal(pts, f);
                let nn = v3dot(n, n).sqrt();
                nn > 0.0 && v3dot(n, v3sub(q, pts[f[0]])) / nn > eps
            })
            .collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut vis_edges = std::collections::BTreeSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, v)| **v) {
            for e in 0..3 {
                vis_edges.insert((f[e], f[(e + 1) % 3]));
            }
        }
        let mut next = Vec::with_capacity(faces.len() + 4);
        for (f, v) in faces.iter().zip(&visible) {
            if !v {
                next.push(*f);
            }
        }
        for &(a, b) in &vis_edges {
            if !vis_edges.contains(&(b, a)) {
                next.push([a, b, p]);
            }
        }
        faces = next;
    }
    let mut used: Vec<usize> = faces.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    let remap = |i: usize| used.binary_search(&i).expect("face vertex");
    let faces = faces
        .into_iter()
        .map(|f| [remap(f[0]), remap(f[1]), remap(f[2])])
        .collect();
    Some((used, faces))
}

fn point_triangle_dist2(p: V3, a: V3, b: V3, c: V3) -> f64 {
    // region tests from Ericson, Real-Time Collision Detection, 5.1.5
    let ab = v3sub(b, a);
    let ac = v3sub(c, a);
    let ap = v3sub(p, a);
    let d1 = v3dot(ab, ap);
    let d2 = v3dot(ac, ap);
    let closest = if d1 <= 0.0 && d2 <= 0.0 {
        a
    } else {
        let bp = v3sub(p, b);
        let d3 = v3dot(ab, bp);
        let d4 = v3dot(ac, bp);
        let cp = v3sub(p, c);
        let d5 = v3dot(ab, cp);
        let d6 = v3dot(ac, cp);
        let vc = d1 * d4 - d3 * d2;
        let vb = d5 * d2 - d1 * d6;
        let va = d3 * d6 - d5 * d4;
        let lerp = |o: V3, d: V3, t: f64| [o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]];
        if d3 >= 0.0 && d4 <= d3 {
            b
        } else if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
            lerp(a, ab, d1 / (d1 - d3))
        } else if d6 >= 0.0 && d5 <= d6 {
            c
        } else if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
            lerp(a, ac, d2 / (d2 - d6))
        } else if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
            lerp(b, v3sub(c, b), (d4 - d3) / ((d4 - d3) + (d5 - d6)))
        } else {
            let denom = 1.0 / (va + vb + vc);
            let (v, w) = (vb * denom, vc * denom);
            [
                a[0] + ab[0] * v + ac[0] * w,
                a[1] + ab[1] * v + ac[1] * w,
                a[2] + ab[2] * v + ac[2] * w,
            ]
        }
    };
    let d = v3sub(p, closest);
    v3dot(d, d)
}

fn polyhedron_distance(pts: &[V3], faces: &[[usize; 3]], q: V3) -> f64 {
    let inside = faces.iter().all(|&f| {
        let n = face_normal(pts, f);
        v3dot(n, v3sub(q, pts[f[0]])) <= 0.0
    });
    if inside {
        return 0.0;
    }
    faces
        .iter()
        .map(|&f| point_triangle_dist2(q, pts[f[0]], pts[f[1]], pts[f[2]]))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Distance from `q` to conv(vertices) by Frank–Wolfe with exact line search.
fn frank_wolfe_distance(vertices: &[Vec<f64>], q: &[f64]) -> f64 {
    let mut x = vertices
        .iter()
        .min_by(|a, b| norm2(&sub(a, q)).total_cmp(&norm2(&sub(b, q))))
        .expect("nonempty")
        .clone();
    for _ in 0..FW_ITERS {
        let grad = sub(&x, q);
        let s = vertices
            .iter()
            .min_by(|a, b| dot(a, &grad).total_cmp(&dot(b, &grad)))
            .expect("nonempty");
        let d = sub(s, &x);
        let gap = -dot(&grad, &d);
        if gap <= 1e-14 {
            break;
        }
        let t = (gap / dot(&d, &d)).clamp(0.0, 1.0);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += t * di;
        }
    }
    norm2(&sub(&x, q))
}
