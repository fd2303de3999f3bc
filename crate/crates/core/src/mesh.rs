//! Friedrichs-Keller triangulations of the unit square.
//!
//! Every grid square `[i/N,(i+1)/N] x [j/N,(j+1)/N]` is cut along the diagonal
//! from its lower-left to its upper-right corner. Vertex `(i, j)` has index
//! `j * (N + 1) + i`; square `(i, j)` owns triangles `2 * (j * N + i)` (below
//! the diagonal) and `2 * (j * N + i) + 1` (above it).
//!
//! Edges are stored with the lower vertex index first. The global unit normal
//! of an edge is the counterclockwise rotation of its direction, and
//! `tri_edge_signs` records `+1` where that normal points out of a triangle.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    n: usize,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    /// Local edge `k` of a triangle is the edge opposite its local vertex `k`.
    tri_edges: Vec<[usize; 3]>,
    tri_edge_signs: Vec<[f64; 3]>,
    boundary_vertex: Vec<bool>,
    boundary_edge: Vec<bool>,
    areas: Vec<f64>,
    centroids: Vec<Point>,
    /// `int_T |x - centroid|^2 dx`
    polar_moments: Vec<f64>,
    edge_lengths: Vec<f64>,
    edge_normals: Vec<Point>,
}

impl Mesh {
    /// Builds the `n x n` Friedrichs-Keller mesh of `(0,1)^2`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "mesh resolution must be at least 1".into(),
            ));
        }
        let nv = n + 1;
        let inv = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity(nv * nv);
        let mut boundary_vertex = Vec::with_capacity(nv * nv);
        for j in 0..nv {
            for i in 0..nv {
                vertices.push([i as f64 * inv, j as f64 * inv]);
                boundary_vertex.push(i == 0 || j == 0 || i == n || j == n);
            }
        }

        let vid = |i: usize, j: usize| j * nv + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let a = vid(i, j);
                let b = vid(i + 1, j);
                let c = vid(i + 1, j + 1);
                let d = vid(i, j + 1);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges: Vec<[usize; 2]> = Vec::with_capacity(3 * n * n + 2 * n);
        let mut edge_count: Vec<u8> = Vec::with_capacity(3 * n * n + 2 * n);
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let mut local = [0usize; 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let p = tri[(k + 1) % 3];
                let q = tri[(k + 2) % 3];
                let key = [p.min(q), p.max(q)];
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_count.push(0);
                    edges.len() - 1
                });
                edge_count[e] += 1;
                *slot = e;
            }
            tri_edges.push(local);
        }
        let boundary_edge: Vec<bool> = edge_count.iter().map(|&c| c == 1).collect();

        let mut edge_lengths = Vec::with_capacity(edges.len());
        let mut edge_normals = Vec::with_capacity(edges.len());
        for &[lo, hi] in &edges {
            let d = sub(vertices[hi], vertices[lo]);
            let len = d[0].hypot(d[1]);
            edge_lengths.push(len);
            edge_normals.push([-d[1] / len, d[0] / len]);
        }

        let mut areas = Vec::with_capacity(triangles.len());
        let mut centroids = Vec::with_capacity(triangles.len());
        let mut polar_moments = Vec::with_capacity(triangles.len());
        let mut tri_edge_signs = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let [p0, p1, p2] = tri.map(|v| vertices[v]);
            let e1 = sub(p1, p0);
            let e2 = sub(p2, p0);
            // All triangles are congruent; store the exact area rather than
            // the rounded cross product.
            debug_assert!(e1[0] * e2[1] - e1[1] * e2[0] > 0.0);
            areas.push(0.5 / (n * n) as f64);
            let c = [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0];
            centroids.push(c);
            let area = *areas.last().unwrap();
            let mids = [mid(p1, p2), mid(p0, p2), mid(p0, p1)];
            polar_moments.push(
                area / 3.0 * mids.iter().map(|&m| dot(sub(m, c), sub(m, c))).sum::<f64>(),
            );
            let mut signs = [0.0; 3];
            for k in 0..3 {
                let e = tri_edges[t][k];
                let [lo, hi] = edges[e];
                let outward = sub(mid(vertices[lo], vertices[hi]), vertices[tri[k]]);
                signs[k] = if dot(outward, edge_normals[e]) > 0.0 { 1.0 } else { -1.0 };
            }
            tri_edge_signs.push(signs);
        }

        Ok(Mesh {
            n,
            vertices,
            triangles,
            edges,
            tri_edges,
            tri_edge_signs,
            boundary_vertex,
            boundary_edge,
            areas,
            centroids,
            polar_moments,
            edge_lengths,
            edge_normals,
        })
    }

    /// Number of grid squares per side.
    pub fn resolution(&self) -> usize {
        self.n
    }

    /// Mesh size `h = sqrt(2) / N` (triangle diameter).
    pub fn h(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.n as f64
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn tri_edges(&self) -> &[[usize; 3]] {
        &self.tri_edges
    }

    pub fn tri_edge_signs(&self) -> &[[f64; 3]] {
        &self.tri_edge_signs
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn centroids(&self) -> &[Point] {
        &self.centroids
    }

    pub fn polar_moments(&self) -> &[f64] {
        &self.polar_moments
    }

    pub fn area(&self, t: usize) -> Result<f64> {
        self.check_triangle(t)?;
        Ok(self.areas[t])
    }

    pub fn centroid(&self, t: usize) -> Result<Point> {
        self.check_triangle(t)?;
        Ok(self.centroids[t])
    }

    pub fn edge_length(&self, e: usize) -> Result<f64> {
        self.check_edge(e)?;
        Ok(self.edge_lengths[e])
    }

    pub fn edge_normal(&self, e: usize) -> Result<Point> {
        self.check_edge(e)?;
        Ok(self.edge_normals[e])
    }

    pub(crate) fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    pub(crate) fn edge_normals(&self) -> &[Point] {
        &self.edge_normals
    }

    /// Vertex coordinates of triangle `t` in counterclockwise order.
    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    /// Index of the triangle containing `p`. Points on shared boundaries are
    /// attributed to the triangle below/left of them; points outside the unit
    /// square are clamped onto it.
    pub fn locate(&self, p: Point) -> usize {
        let n = self.n;
        let scaled = [p[0] * n as f64, p[1] * n as f64];
        let i = (scaled[0].floor().max(0.0) as usize).min(n - 1);
        let j = (scaled[1].floor().max(0.0) as usize).min(n - 1);
        let local = [scaled[0] - i as f64, scaled[1] - j as f64];
        let square = j * n + i;
        if local[0] >= local[1] {
            2 * square
        } else {
            2 * square + 1
        }
    }

    pub(crate) fn check_triangle(&self, t: usize) -> Result<()> {
        if t < self.triangles.len() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "triangle",
                index: t,
                len: self.triangles.len(),
            })
        }
    }

    fn check_edge(&self, e: usize) -> Result<()> {
        if e < self.edges.len() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "edge",
                index: e,
                len: self.edges.len(),
            })
        }
    }
}

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn mid(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
