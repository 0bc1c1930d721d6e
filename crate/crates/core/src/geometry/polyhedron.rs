//! Convex polyhedra in half-space + vertex-cycle representation, their
//! tetrahedral decompositions, and the predicates the scene checks need.

use super::vec3::{Mat3, Point3, UnitVector3};
use crate::error::{Error, Result};
use crate::num::{real, Real};
use std::collections::BTreeMap;

/// Geometric predicate tolerance, coordinates assumed O(1).
pub const GEOM_TOL: f64 = 1e-10;
/// Containment tolerance (boundary counts as inside).
pub const CONTAIN_TOL: f64 = 1e-12;

/// One facet: supporting plane `n . x = d` with outward unit normal, plus the
/// cyclic vertex indices bounding it.
#[derive(Debug, Clone)]
pub struct Face<R> {
    pub normal: UnitVector3<R>,
    pub offset: R,
    pub cycle: Vec<usize>,
}

/// Bounded convex polyhedron. Invariants checked at construction: every vertex
/// satisfies every face inequality within 1e-10, every face cycle is planar,
/// every vertex lies on at least three faces, and the face graph closes up
/// (each edge shared by exactly two faces, Euler characteristic 2).
#[derive(Debug, Clone)]
pub struct ConvexPolyhedron<R> {
    vertices: Vec<Point3<R>>,
    faces: Vec<Face<R>>,
}

/// Positively oriented tetrahedron (signed volume > 0).
#[derive(Debug, Clone, Copy)]
pub struct Tetrahedron<R> {
    pub corners: [Point3<R>; 4],
}

impl<R: Real> Tetrahedron<R> {
    /// Reorders the last two corners if needed to make the orientation
    /// positive; errors on (near-)degenerate input.
    pub fn new(a: Point3<R>, b: Point3<R>, c: Point3<R>, d: Point3<R>) -> Result<Self> {
        let vol6 = (b - a).dot(&(c - a).cross(&(d - a)));
        let scale = (b - a)
            .norm()
            .max((c - a).norm())
            .max((d - a).norm())
            .max(real(1e-30));
        if vol6.abs() < real::<R>(1e-14) * scale.powi(3) {
            return Err(Error::DegeneratePolyhedron(
                "flat tetrahedron in decomposition".into(),
            ));
        }
        if vol6 > R::zero() {
            Ok(Tetrahedron {
                corners: [a, b, c, d],
            })
        } else {
            Ok(Tetrahedron {
                corners: [a, b, d, c],
            })
        }
    }

    pub fn volume(&self) -> R {
        let [a, b, c, d] = self.corners;
        (b - a).dot(&(c - a).cross(&(d - a))) / real(6.0)
    }

    pub fn centroid(&self) -> Point3<R> {
        let [a, b, c, d] = self.corners;
        (a + b + c + d).scale(real(0.25))
    }

    pub fn longest_edge(&self) -> R {
        let mut best = R::zero();
        for i in 0..4 {
            for j in (i + 1)..4 {
                best = best.max(self.corners[i].dist(&self.corners[j]));
            }
        }
        best
    }

    /// Splits across the midpoint of the longest edge.
    pub fn bisect(&self) -> (Tetrahedron<R>, Tetrahedron<R>) {
        let mut best = (0usize, 1usize);
        let mut best_len = R::zero();
        for i in 0..4 {
            for j in (i + 1)..4 {
                let len = self.corners[i].dist(&self.corners[j]);
                if len > best_len {
                    best_len = len;
                    best = (i, j);
                }
            }
        }
        let (i, j) = best;
        let mid = (self.corners[i] + self.corners[j]).scale(real(0.5));
        let mut c1 = self.corners;
        let mut c2 = self.corners;
        c1[j] = mid;
        c2[i] = mid;
        (Tetrahedron { corners: c1 }, Tetrahedron { corners: c2 })
    }

    /// Distance from `p` to the (solid) tetrahedron; 0 when inside.
    pub fn distance_to_point(&self, p: &Point3<R>) -> R {
        let [a, b, c, d] = self.corners;
        let faces = [[a, b, c, d], [a, c, d, b], [a, d, b, c], [b, d, c, a]];
        let mut inside = true;
        let mut min_face = R::max_value();
        for [fa, fb, fc, opp] in faces {
            let n = (fb - fa).cross(&(fc - fa));
            let n = match n.normalize() {
                Some(u) => u.as_point(),
                None => continue,
            };
            // orient outward: opposite corner on the negative side
            let n = if n.dot(&(opp - fa)) > R::zero() {
                -n
            } else {
                n
            };
            if n.dot(&(*p - fa)) > R::zero() {
                inside = false;
            }
            min_face = min_face.min(point_triangle_distance(p, &fa, &fb, &fc));
        }
        if inside {
            R::zero()
        } else {
            min_face
        }
    }
}

/// Distance from `p` to the closed triangle (a, b, c).
pub fn point_triangle_distance<R: Real>(
    p: &Point3<R>,
    a: &Point3<R>,
    b: &Point3<R>,
    c: &Point3<R>,
) -> R {
    // Ericson's barycentric region walk
    let ab = *b - *a;
    let ac = *c - *a;
    let ap = *p - *a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= R::zero() && d2 <= R::zero() {
        return ap.norm();
    }
    let bp = *p - *b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= R::zero() && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= R::zero() && d1 >= R::zero() && d3 <= R::zero() {
        let v = d1 / (d1 - d3);
        return (ap - ab.scale(v)).norm();
    }
    let cp = *p - *c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= R::zero() && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= R::zero() && d2 >= R::zero() && d6 <= R::zero() {
        let w = d2 / (d2 - d6);
        return (ap - ac.scale(w)).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= R::zero() && (d4 - d3) >= R::zero() && (d5 - d6) >= R::zero() {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - (*c - *b).scale(w)).norm();
    }
    let denom = R::one() / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (ap - ab.scale(v) - ac.scale(w)).norm()
}

impl<R: Real> ConvexPolyhedron<R> {
    /// Builds and validates a polyhedron from vertices and face cycles.
    /// Normals are derived from the cycles and forced outward.
    pub fn new(vertices: Vec<Point3<R>>, cycles: Vec<Vec<usize>>) -> Result<Self> {
        if vertices.len() < 4 || cycles.len() < 4 {
            return Err(Error::InvalidPolyhedron(
                "need at least 4 vertices and 4 faces".into(),
            ));
        }
        let n_v = vertices.len();
        let mut interior = Point3::zero();
        for v in &vertices {
            interior = interior + *v;
        }
        let interior = interior.scale(R::one() / real(n_v as f64));

        let tol = real::<R>(GEOM_TOL);
        let mut faces = Vec::with_capacity(cycles.len());
        for cycle in &cycles {
            if cycle.len() < 3 {
                return Err(Error::InvalidPolyhedron("face cycle shorter than 3".into()));
            }
            if cycle.iter().any(|&i| i >= n_v) {
                return Err(Error::InvalidPolyhedron("face index out of range".into()));
            }
            // Newell normal
            let mut n = Point3::zero();
            for w in 0..cycle.len() {
                let p = vertices[cycle[w]];
                let q = vertices[cycle[(w + 1) % cycle.len()]];
                n = n + Point3::new(
                    (p.y() - q.y()) * (p.z() + q.z()),
                    (p.z() - q.z()) * (p.x() + q.x()),
                    (p.x() - q.x()) * (p.y() + q.y()),
                );
            }
            let mut normal = n
                .normalize()
                .ok_or_else(|| Error::DegeneratePolyhedron("zero-area face".into()))?;
            let mut offset = normal.dot(&vertices[cycle[0]]);
            if normal.dot(&interior) > offset {
                normal = -normal;
                offset = -offset;
            }
            // planarity of the cycle
            for &i in cycle {
                if (normal.dot(&vertices[i]) - offset).abs() > tol {
                    return Err(Error::InvalidPolyhedron("non-planar face cycle".into()));
                }
            }
            faces.push(Face {
                normal,
                offset,
                cycle: cycle.clone(),
            });
        }

        let poly = ConvexPolyhedron { vertices, faces };
        poly.validate()?;
        Ok(poly)
    }

    fn validate(&self) -> Result<()> {
        let tol = real::<R>(GEOM_TOL);
        // every vertex inside every half-space
        for (vi, v) in self.vertices.iter().enumerate() {
            for (fi, f) in self.faces.iter().enumerate() {
                if f.normal.dot(v) - f.offset > tol {
                    return Err(Error::InvalidPolyhedron(format!(
                        "vertex {vi} violates face {fi} half-space (not convex or bad cycle)"
                    )));
                }
            }
        }
        // every vertex on >= 3 faces
        for (vi, v) in self.vertices.iter().enumerate() {
            let incident = self
                .faces
                .iter()
                .filter(|f| (f.normal.dot(v) - f.offset).abs() <= tol)
                .count();
            if incident < 3 {
                return Err(Error::InvalidPolyhedron(format!(
                    "vertex {vi} lies on only {incident} face planes"
                )));
            }
        }
        // closed surface: each edge in exactly two cycles, Euler characteristic 2
        let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for f in &self.faces {
            for w in 0..f.cycle.len() {
                let a = f.cycle[w];
                let b = f.cycle[(w + 1) % f.cycle.len()];
                let key = (a.min(b), a.max(b));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        if edge_count.values().any(|&c| c != 2) {
            return Err(Error::InvalidPolyhedron(
                "surface not closed: an edge is not shared by exactly two faces".into(),
            ));
        }
        let euler = self.vertices.len() as i64 - edge_count.len() as i64 + self.faces.len() as i64;
        if euler != 2 {
            return Err(Error::InvalidPolyhedron(format!(
                "Euler characteristic {euler} != 2"
            )));
        }
        if self.volume() < real::<R>(1e-14) * self.diameter().powi(3).max(real(1e-30)) {
            return Err(Error::DegeneratePolyhedron(
                "volume numerically zero".into(),
            ));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point3<R>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[Face<R>] {
        &self.faces
    }

    /// Mean of the vertices; strictly interior for a valid convex polyhedron.
    pub fn interior_point(&self) -> Point3<R> {
        let mut c = Point3::zero();
        for v in &self.vertices {
            c = c + *v;
        }
        c.scale(R::one() / real(self.vertices.len() as f64))
    }

    pub fn diameter(&self) -> R {
        let mut best = R::zero();
        for i in 0..self.vertices.len() {
            for j in (i + 1)..self.vertices.len() {
                best = best.max(self.vertices[i].dist(&self.vertices[j]));
            }
        }
        best
    }

    /// True iff `p` satisfies every face inequality; boundary counts as
    /// inside (tolerance 1e-12).
    pub fn contains(&self, p: &Point3<R>) -> bool {
        let tol = real::<R>(CONTAIN_TOL);
        self.faces.iter().all(|f| f.normal.dot(p) - f.offset <= tol)
    }

    /// Fan decomposition from the interior point; tetrahedra are pairwise
    /// non-overlapping and their volumes sum to the polyhedron volume.
    pub fn tetrahedralize(&self) -> Result<Vec<Tetrahedron<R>>> {
        let c = self.interior_point();
        let mut out = Vec::new();
        for f in &self.faces {
            let anchor = self.vertices[f.cycle[0]];
            for w in 1..(f.cycle.len() - 1) {
                let b = self.vertices[f.cycle[w]];
                let d = self.vertices[f.cycle[w + 1]];
                out.push(Tetrahedron::new(c, anchor, b, d)?);
            }
        }
        Ok(out)
    }

    /// Volume by the divergence theorem: V = (1/3) sum_f d_f area_f.
    pub fn volume(&self) -> R {
        let mut v = R::zero();
        for f in &self.faces {
            let anchor = self.vertices[f.cycle[0]];
            let mut area2 = R::zero();
            for w in 1..(f.cycle.len() - 1) {
                let b = self.vertices[f.cycle[w]] - anchor;
                let d = self.vertices[f.cycle[w + 1]] - anchor;
                area2 += b.cross(&d).norm();
            }
            v += f.offset * area2 * real(0.5);
        }
        v / real(3.0)
    }

    /// Distance from `p` to the solid polyhedron (0 when inside).
    pub fn distance_to_point(&self, p: &Point3<R>) -> R {
        if self.contains(p) {
            return R::zero();
        }
        let mut best = R::max_value();
        for f in &self.faces {
            let anchor = self.vertices[f.cycle[0]];
            for w in 1..(f.cycle.len() - 1) {
                let b = self.vertices[f.cycle[w]];
                let d = self.vertices[f.cycle[w + 1]];
                best = best.min(point_triangle_distance(p, &anchor, &b, &d));
            }
        }
        best
    }

    /// Minimal distance between two disjoint convex polyhedra (0 if they
    /// touch or overlap). Brute force over vertex/triangle pairs both ways;
    /// exact for convex bodies since the closest pair lies on the boundaries.
    pub fn distance_to_poly(&self, other: &Self) -> R {
        if self.overlaps(other) {
            return R::zero();
        }
        let mut best = R::max_value();
        for v in &self.vertices {
            best = best.min(other.distance_to_point(v));
        }
        for v in &other.vertices {
            best = best.min(self.distance_to_point(v));
        }
        // edge-edge pairs can realize the minimum away from vertices
        for (ea, eb) in self.edges() {
            for (fa, fb) in other.edges() {
                best = best.min(segment_segment_distance(
                    &self.vertices[ea],
                    &self.vertices[eb],
                    &other.vertices[fa],
                    &other.vertices[fb],
                ));
            }
        }
        best
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeMap::new();
        for f in &self.faces {
            for w in 0..f.cycle.len() {
                let a = f.cycle[w];
                let b = f.cycle[(w + 1) % f.cycle.len()];
                set.insert((a.min(b), a.max(b)), ());
            }
        }
        set.into_keys().collect()
    }

    /// Separating-axis test: true iff the interiors intersect.
    pub fn overlaps(&self, other: &Self) -> bool {
        let mut axes: Vec<Point3<R>> = Vec::new();
        for f in &self.faces {
            axes.push(f.normal.as_point());
        }
        for f in &other.faces {
            axes.push(f.normal.as_point());
        }
        for (a0, a1) in self.edges() {
            let da = self.vertices[a1] - self.vertices[a0];
            for (b0, b1) in other.edges() {
                let db = other.vertices[b1] - other.vertices[b0];
                let c = da.cross(&db);
                if c.norm() > real(1e-12) {
                    axes.push(c);
                }
            }
        }
        let tol = real::<R>(1e-12);
        for axis in axes {
            let axis = axis.scale(R::one() / axis.norm());
            let (mut lo_a, mut hi_a) = (R::max_value(), R::min_value());
            for v in &self.vertices {
                let t = v.dot(&axis);
                lo_a = lo_a.min(t);
                hi_a = hi_a.max(t);
            }
            let (mut lo_b, mut hi_b) = (R::max_value(), R::min_value());
            for v in &other.vertices {
                let t = v.dot(&axis);
                lo_b = lo_b.min(t);
                hi_b = hi_b.max(t);
            }
            if hi_a < lo_b - tol || hi_b < lo_a - tol {
                return false;
            }
        }
        true
    }

    /// Rigid motion of the whole polyhedron: x -> rot x + shift.
    pub fn transformed(&self, rot: &Mat3<R>, shift: Point3<R>) -> Result<Self> {
        let vertices = self
            .vertices
            .iter()
            .map(|v| rot.apply(*v) + shift)
            .collect();
        let cycles = self.faces.iter().map(|f| f.cycle.clone()).collect();
        ConvexPolyhedron::new(vertices, cycles)
    }

    /// Axis-aligned box [lo, hi].
    pub fn axis_aligned_box(lo: Point3<R>, hi: Point3<R>) -> Result<Self> {
        let (x0, y0, z0) = (lo.x(), lo.y(), lo.z());
        let (x1, y1, z1) = (hi.x(), hi.y(), hi.z());
        let vertices = vec![
            Point3::new(x0, y0, z0),
            Point3::new(x1, y0, z0),
            Point3::new(x1, y1, z0),
            Point3::new(x0, y1, z0),
            Point3::new(x0, y0, z1),
            Point3::new(x1, y0, z1),
            Point3::new(x1, y1, z1),
            Point3::new(x0, y1, z1),
        ];
        let cycles = vec![
            vec![0, 3, 2, 1], // z = z0
            vec![4, 5, 6, 7], // z = z1
            vec![0, 1, 5, 4], // y = y0
            vec![2, 3, 7, 6], // y = y1
            vec![0, 4, 7, 3], // x = x0
            vec![1, 2, 6, 5], // x = x1
        ];
        ConvexPolyhedron::new(vertices, cycles)
    }

    pub fn tetrahedron(a: Point3<R>, b: Point3<R>, c: Point3<R>, d: Point3<R>) -> Result<Self> {
        let t = Tetrahedron::new(a, b, c, d)?;
        let [a, b, c, d] = t.corners;
        ConvexPolyhedron::new(
            vec![a, b, c, d],
            vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
        )
    }

    /// Subdivided icosahedron with vertices on the sphere of radius `a`
    /// about `center`; polyhedral (inscribed) approximation of the ball.
    pub fn icosphere(center: Point3<R>, a: R, subdivisions: u32) -> Result<Self> {
        let phi = (R::one() + real::<R>(5.0).sqrt()) / real(2.0);
        let mut verts: Vec<Point3<R>> = vec![
            Point3::new(-R::one(), phi, R::zero()),
            Point3::new(R::one(), phi, R::zero()),
            Point3::new(-R::one(), -phi, R::zero()),
            Point3::new(R::one(), -phi, R::zero()),
            Point3::new(R::zero(), -R::one(), phi),
            Point3::new(R::zero(), R::one(), phi),
            Point3::new(R::zero(), -R::one(), -phi),
            Point3::new(R::zero(), R::one(), -phi),
            Point3::new(phi, R::zero(), -R::one()),
            Point3::new(phi, R::zero(), R::one()),
            Point3::new(-phi, R::zero(), -R::one()),
            Point3::new(-phi, R::zero(), R::one()),
        ];
        for v in verts.iter_mut() {
            *v = v.scale(R::one() / v.norm());
        }
        let mut tris: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            let mut next = Vec::with_capacity(tris.len() * 4);
            for [i, j, k] in tris {
                let mid =
                    |a: usize,
                     b: usize,
                     verts: &mut Vec<Point3<R>>,
                     midpoint: &mut BTreeMap<(usize, usize), usize>| {
                        let key = (a.min(b), a.max(b));
                        *midpoint.entry(key).or_insert_with(|| {
                            let m = (verts[a] + verts[b]).scale(real(0.5));
                            let m = m.scale(R::one() / m.norm());
                            verts.push(m);
                            verts.len() - 1
                        })
                    };
                let ij = mid(i, j, &mut verts, &mut midpoint);
                let jk = mid(j, k, &mut verts, &mut midpoint);
                let ki = mid(k, i, &mut verts, &mut midpoint);
                next.push([i, ij, ki]);
                next.push([j, jk, ij]);
                next.push([k, ki, jk]);
                next.push([ij, jk, ki]);
            }
            tris = next;
        }
        let vertices = verts
            .into_iter()
            .map(|v| center + v.scale(a))
            .collect::<Vec<_>>();
        let cycles = tris.into_iter().map(|t| t.to_vec()).collect();
        ConvexPolyhedron::new(vertices, cycles)
    }

    /// Convex hull of a point cloud in general position (simplicial output).
    /// Incremental construction; intended for small point sets.
    pub fn convex_hull(points: &[Point3<R>]) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::InvalidPolyhedron("hull needs >= 4 points".into()));
        }
        let tol = real::<R>(1e-12);
        // initial simplex from spread-out points
        let i0 = 0;
        let i1 = (1..points.len())
            .max_by(|&a, &b| {
                points[a]
                    .dist(&points[i0])
                    .partial_cmp(&points[b].dist(&points[i0]))
                    .unwrap()
            })
            .unwrap();
        let i2 = (0..points.len())
            .filter(|&i| i != i0 && i != i1)
            .max_by(|&a, &b| {
                let area_of = |i: usize| {
                    (points[i1] - points[i0])
                        .cross(&(points[i] - points[i0]))
                        .norm()
                };
                area_of(a).partial_cmp(&area_of(b)).unwrap()
            })
            .unwrap();
        let i3 = (0..points.len())
            .filter(|&i| i != i0 && i != i1 && i != i2)
            .max_by(|&a, &b| {
                let vol_of = |i: usize| {
                    (points[i1] - points[i0])
                        .dot(&(points[i2] - points[i0]).cross(&(points[i] - points[i0])))
                        .abs()
                };
                vol_of(a).partial_cmp(&vol_of(b)).unwrap()
            })
            .unwrap();

        let vol = (points[i1] - points[i0])
            .dot(&(points[i2] - points[i0]).cross(&(points[i3] - points[i0])));
        if vol.abs() < tol {
            return Err(Error::DegeneratePolyhedron("all points coplanar".into()));
        }

        // oriented triangles (outward)
        let mut tris: Vec<[usize; 3]> = if vol > R::zero() {
            vec![[i0, i2, i1], [i0, i1, i3], [i0, i3, i2], [i1, i2, i3]]
        } else {
            vec![[i0, i1, i2], [i0, i3, i1], [i0, i2, i3], [i1, i3, i2]]
        };

        let outward = |t: &[usize; 3], p: &Point3<R>| -> R {
            let n = (points[t[1]] - points[t[0]]).cross(&(points[t[2]] - points[t[0]]));
            n.dot(&(*p - points[t[0]])) / n.norm()
        };

        for (pi, &p) in points.iter().enumerate() {
            if [i0, i1, i2, i3].contains(&pi) {
                continue;
            }
            let visible: Vec<usize> = (0..tris.len())
                .filter(|&t| outward(&tris[t], &p) > tol)
                .collect();
            if visible.is_empty() {
                continue;
            }
            // horizon: edges of visible triangles not shared with another visible one
            let mut horizon: Vec<(usize, usize)> = Vec::new();
            for &t in &visible {
                let tri = tris[t];
                for e in 0..3 {
                    let edge = (tri[e], tri[(e + 1) % 3]);
                    let shared = visible.iter().any(|&s| {
                        s != t && {
                            let st = tris[s];
                            (0..3).any(|w| st[w] == edge.1 && st[(w + 1) % 3] == edge.0)
                        }
                    });
                    if !shared {
                        horizon.push(edge);
                    }
                }
            }
            let mut keep: Vec<[usize; 3]> = (0..tris.len())
                .filter(|t| !visible.contains(t))
                .map(|t| tris[t])
                .collect();
            for (a, b) in horizon {
                keep.push([a, b, pi]);
            }
            tris = keep;
        }

        // compact the vertex list
        let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
        for t in &tris {
            for &v in t {
                let next = remap.len();
                remap.entry(v).or_insert(next);
            }
        }
        let mut vertices = vec![Point3::zero(); remap.len()];
        for (&old, &new) in &remap {
            vertices[new] = points[old];
        }
        let cycles = tris
            .into_iter()
            .map(|t| t.iter().map(|v| remap[v]).collect())
            .collect();
        ConvexPolyhedron::new(vertices, cycles)
    }
}

/// Distance between closed segments [a0, a1] and [b0, b1].
pub fn segment_segment_distance<R: Real>(
    a0: &Point3<R>,
    a1: &Point3<R>,
    b0: &Point3<R>,
    b1: &Point3<R>,
) -> R {
    let d1 = *a1 - *a0;
    let d2 = *b1 - *b0;
    let r = *a0 - *b0;
    let a = d1.norm_sq();
    let e = d2.norm_sq();
    let f = d2.dot(&r);
    let tiny = real::<R>(1e-30);
    let (s, t);
    if a <= tiny && e <= tiny {
        return r.norm();
    }
    if a <= tiny {
        s = R::zero();
        t = (f / e).max(R::zero()).min(R::one());
    } else {
        let c = d1.dot(&r);
        if e <= tiny {
            t = R::zero();
            s = (-c / a).max(R::zero()).min(R::one());
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let s0 = if denom > tiny {
                ((b * f - c * e) / denom).max(R::zero()).min(R::one())
            } else {
                R::zero()
            };
            let t0 = (b * s0 + f) / e;
            if t0 < R::zero() {
                t = R::zero();
                s = (-c / a).max(R::zero()).min(R::one());
            } else if t0 > R::one() {
                t = R::one();
                s = ((b - c) / a).max(R::zero()).min(R::one());
            } else {
                s = s0;
                t = t0;
            }
        }
    }
    (*a0 + d1.scale(s) - (*b0 + d2.scale(t))).norm()
}
