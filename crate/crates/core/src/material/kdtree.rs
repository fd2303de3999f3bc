//! Exact nearest-neighbour search in `R^4`.
//!
//! Ties are broken by the lowest point index, so queries are deterministic
//! and agree with a linear scan.
//!
//! The tree is built in the principal-axis frame of the points, since
//! material data typically concentrates near a low-dimensional manifold that
//! is not aligned with the coordinate axes. The rotated coordinates are only
//! used for pruning; candidate distances are computed in the original frame.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

pub type Point4 = [f64; 4];

#[derive(Debug, Clone, Copy)]
struct Node {
    point: usize,
    axis: u8,
    left: Option<u32>,
    right: Option<u32>,
    /// Bounding box of the subtree in the rotated frame.
    lo: Point4,
    hi: Point4,
}

fn box_dist2(lo: &Point4, hi: &Point4, q: &Point4) -> f64 {
    (0..4)
        .map(|k| {
            let d = (lo[k] - q[k]).max(q[k] - hi[k]).max(0.0);
            d * d
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct KdTree {
    nodes: Vec<Node>,
    root: Option<u32>,
    /// Rows are the principal axes.
    frame: [[f64; 4]; 4],
    rotated: Vec<Point4>,
}

/// Relative slack on pruning bounds, covering rounding in the rotation.
const PRUNE_SLACK: f64 = 1.0 + 1e-9;

fn principal_frame(points: &[Point4]) -> [[f64; 4]; 4] {
    let mut frame = [[0.0; 4]; 4];
    for (k, row) in frame.iter_mut().enumerate() {
        row[k] = 1.0;
    }
    if points.len() < 2 {
        return frame;
    }
    let n = points.len() as f64;
    let mut mean = [0.0; 4];
    for p in points {
        for k in 0..4 {
            mean[k] += p[k] / n;
        }
    }
    let cov = faer::Mat::from_fn(4, 4, |i, j| {
        points.iter().map(|p| (p[i] - mean[i]) * (p[j] - mean[j])).sum::<f64>() / n
    });
    let Ok(evd) = cov.self_adjoint_eigen(faer::Side::Lower) else {
        return frame;
    };
    let u = evd.U();
    if (0..4).any(|i| (0..4).any(|j| !u[(i, j)].is_finite())) {
        return frame;
    }
    for (k, row) in frame.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            *v = u[(i, k)];
        }
    }
    frame
}

fn rotate(frame: &[[f64; 4]; 4], p: &Point4) -> Point4 {
    let mut out = [0.0; 4];
    for (o, row) in out.iter_mut().zip(frame) {
        *o = (0..4).map(|k| row[k] * p[k]).sum();
    }
    out
}

pub fn dist2(a: &Point4, b: &Point4) -> f64 {
    (0..4).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d.total_cmp(&other.d).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdTree {
    pub fn build(points: &[Point4]) -> Self {
        let frame = principal_frame(points);
        let rotated: Vec<Point4> = points.iter().map(|p| rotate(&frame, p)).collect();
        let mut idx: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(points.len());
        let root = build_rec(&rotated, &mut idx, &mut nodes);
        KdTree {
            nodes,
            root,
            frame,
            rotated,
        }
    }

    /// Index of the nearest point (lowest index among equidistant ones).
    pub fn nearest(&self, points: &[Point4], q: &Point4) -> Option<usize> {
        let mut best = Candidate {
            d: f64::INFINITY,
            index: usize::MAX,
        };
        let rq = rotate(&self.frame, q);
        if let Some(root) = self.root {
            self.nearest_rec(points, root, q, &rq, &mut best);
        }
        (best.index != usize::MAX).then_some(best.index)
    }

    fn children(&self, node: &Node, rq: &Point4) -> [Option<u32>; 2] {
        let axis = node.axis as usize;
        if rq[axis] < self.rotated[node.point][axis] {
            [node.left, node.right]
        } else {
            [node.right, node.left]
        }
    }

    fn nearest_rec(&self, points: &[Point4], id: u32, q: &Point4, rq: &Point4, best: &mut Candidate) {
        let node = &self.nodes[id as usize];
        let cand = Candidate {
            d: dist2(&points[node.point], q),
            index: node.point,
        };
        if cand < *best {
            *best = cand;
        }
        for child in self.children(node, rq).into_iter().flatten() {
            let c = &self.nodes[child as usize];
            if box_dist2(&c.lo, &c.hi, rq) <= best.d * PRUNE_SLACK {
                self.nearest_rec(points, child, q, rq, best);
            }
        }
    }

    /// The `k` nearest points ordered by distance, then index.
    pub fn k_nearest(&self, points: &[Point4], q: &Point4, k: usize) -> Vec<usize> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        let rq = rotate(&self.frame, q);
        if let Some(root) = self.root {
            self.knn_rec(points, root, q, &rq, k, &mut heap);
        }
        let mut out = heap.into_sorted_vec();
        out.truncate(k);
        out.into_iter().map(|c| c.index).collect()
    }

    fn knn_rec(
        &self,
        points: &[Point4],
        id: u32,
        q: &Point4,
        rq: &Point4,
        k: usize,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        let node = &self.nodes[id as usize];
        let cand = Candidate {
            d: dist2(&points[node.point], q),
            index: node.point,
        };
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().unwrap() {
            heap.pop();
            heap.push(cand);
        }
        for child in self.children(node, rq).into_iter().flatten() {
            let c = &self.nodes[child as usize];
            if heap.len() < k || box_dist2(&c.lo, &c.hi, rq) <= heap.peek().unwrap().d * PRUNE_SLACK {
                self.knn_rec(points, child, q, rq, k, heap);
            }
        }
    }
}

fn build_rec(points: &[Point4], idx: &mut [usize], nodes: &mut Vec<Node>) -> Option<u32> {
    if idx.is_empty() {
        return None;
    }
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    for &i in idx.iter() {
        for a in 0..4 {
            lo[a] = lo[a].min(points[i][a]);
            hi[a] = hi[a].max(points[i][a]);
        }
    }
    // split along the axis of largest spread
    let axis = (0..4).fold(0, |best, a| if hi[a] - lo[a] > hi[best] - lo[best] { a } else { best });
    let mid = idx.len() / 2;
    idx.select_nth_unstable_by(mid, |&a, &b| {
        points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
    });
    let id = nodes.len() as u32;
    nodes.push(Node {
        point: idx[mid],
        axis: axis as u8,
        left: None,
        right: None,
        lo,
        hi,
    });
    let (left, rest) = idx.split_at_mut(mid);
    let l = build_rec(points, left, nodes);
    let r = build_rec(points, &mut rest[1..], nodes);
    nodes[id as usize].left = l;
    nodes[id as usize].right = r;
    Some(id)
}
