//! k-d tree for exact fixed-radius queries on the open Euclidean ball
//! ‖x − q‖ < ε. Nodes carry aggregate weights and moments of an optional
//! per-point payload, so balls covering whole subtrees are answered
//! without visiting their points.

use thiserror::Error;

const LEAF_SIZE: usize = 16;
const NONE: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("point coordinates must be finite (row {0})")]
    NonFinite(usize),
    #[error("coordinate buffer of length {len} is not a multiple of dimension {dim}")]
    Ragged { len: usize, dim: usize },
    #[error("dimension must be at least 1")]
    ZeroDim,
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("too many points for the index ({0})")]
    TooLarge(usize),
}

/// Count, mean and sum of squared deviations of a cloud of vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: Vec<f64>,
    pub m2: f64,
}

impl Moments {
    pub fn new(dim: usize) -> Moments {
        Moments { count: 0, mean: vec![0.0; dim], m2: 0.0 }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        let mut acc = 0.0;
        for (m, &xi) in self.mean.iter_mut().zip(x) {
            let d = xi - *m;
            *m += d / n;
            acc += d * (xi - *m);
        }
        self.m2 += acc;
    }

    /// Pairwise combination of two partial summaries.
    pub fn merge(&mut self, count: usize, mean: &[f64], m2: f64) {
        if count == 0 {
            return;
        }
        if self.count == 0 {
            self.count = count;
            self.mean.copy_from_slice(mean);
            self.m2 = m2;
            return;
        }
        let (na, nb) = (self.count as f64, count as f64);
        let n = na + nb;
        let mut d2 = 0.0;
        for (m, &mb) in self.mean.iter_mut().zip(mean) {
            let d = mb - *m;
            *m += d * nb / n;
            d2 += d * d;
        }
        self.m2 += m2 + d2 * na * nb / n;
        self.count += count;
    }

    /// Mean squared distance to the mean.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            (self.m2 / self.count as f64).max(0.0)
        }
    }
}

/// Vectors attached to the indexed points; points with `present[i] ==
/// false` carry none.
#[derive(Debug, Clone)]
pub struct Payload {
    pub dim: usize,
    pub rows: Vec<f64>,
    pub present: Vec<bool>,
}

enum Hit {
    Node(usize),
    Row(usize),
}

#[derive(Debug, Clone)]
struct Node {
    start: u32,
    end: u32,
    left: u32,
    right: u32,
    weight: f64,
    count: u32,
    m2: f64,
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    index: Vec<u32>,
    weights: Option<Vec<f64>>,
    payload: Option<Payload>,
    nodes: Vec<Node>,
    bbox: Vec<f64>,
    means: Vec<f64>,
}

impl KdTree {
    pub fn new(points: &[f64], dim: usize) -> Result<KdTree, TreeError> {
        KdTree::build(points, dim, None, None)
    }

    /// Indexes row-major `points`; `weights` and `payload` are given in the
    /// original point order.
    pub fn build(
        points: &[f64],
        dim: usize,
        weights: Option<&[f64]>,
        payload: Option<Payload>,
    ) -> Result<KdTree, TreeError> {
        if dim == 0 {
            return Err(TreeError::ZeroDim);
        }
        if points.len() % dim != 0 {
            return Err(TreeError::Ragged { len: points.len(), dim });
        }
        let n = points.len() / dim;
        if n >= NONE as usize {
            return Err(TreeError::TooLarge(n));
        }
        if let Some(i) = points.iter().position(|x| !x.is_finite()) {
            return Err(TreeError::NonFinite(i / dim));
        }
        if let Some(w) = weights {
            if w.len() != n {
                return Err(TreeError::LengthMismatch { expected: n, got: w.len() });
            }
        }
        if let Some(p) = &payload {
            if p.present.len() != n || p.rows.len() != n * p.dim {
                return Err(TreeError::LengthMismatch { expected: n, got: p.present.len() });
            }
        }

        let mut perm: Vec<u32> = (0..n as u32).collect();
        let mut tree = KdTree {
            dim,
            points: Vec::new(),
            index: Vec::new(),
            weights: None,
            payload: None,
            nodes: Vec::new(),
            bbox: Vec::new(),
            means: Vec::new(),
        };
        if n > 0 {
            tree.split(points, &mut perm, 0, n);
        }

        tree.points = perm.iter().flat_map(|&i| points[i as usize * dim..(i as usize + 1) * dim].iter().copied()).collect();
        tree.weights = weights.map(|w| perm.iter().map(|&i| w[i as usize]).collect());
        tree.payload = payload.map(|p| Payload {
            dim: p.dim,
            rows: perm
                .iter()
                .flat_map(|&i| p.rows[i as usize * p.dim..(i as usize + 1) * p.dim].iter().copied())
                .collect(),
            present: perm.iter().map(|&i| p.present[i as usize]).collect(),
        });
        tree.index = perm;
        tree.aggregate();
        Ok(tree)
    }

    fn split(&mut self, points: &[f64], perm: &mut [u32], start: usize, end: usize) -> u32 {
        let d = self.dim;
        let id = self.nodes.len() as u32;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &i in &perm[start..end] {
            let p = &points[i as usize * d..(i as usize + 1) * d];
            for j in 0..d {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        self.bbox.extend_from_slice(&lo);
        self.bbox.extend_from_slice(&hi);
        self.nodes.push(Node { start: start as u32, end: end as u32, left: NONE, right: NONE, weight: 0.0, count: 0, m2: 0.0 });

        let (axis, extent) = (0..d)
            .map(|j| (j, hi[j] - lo[j]))
            .fold((0, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        // identical points stay in one leaf whatever their number
        if end - start <= LEAF_SIZE || extent <= 0.0 {
            return id;
        }
        let mid = start + (end - start) / 2;
        perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a as usize * d + axis].total_cmp(&points[b as usize * d + axis])
        });
        let left = self.split(points, perm, start, mid);
        let right = self.split(points, perm, mid, end);
        self.nodes[id as usize].left = left;
        self.nodes[id as usize].right = right;
        id
    }

    fn aggregate(&mut self) {
        let pdim = self.payload.as_ref().map_or(0, |p| p.dim);
        self.means = vec![0.0; self.nodes.len() * pdim];
        // children always have larger ids than their parent
        for id in (0..self.nodes.len()).rev() {
            let node = self.nodes[id].clone();
            let mut acc = Moments::new(pdim);
            let weight;
            if node.left == NONE {
                let range = node.start as usize..node.end as usize;
                weight = match &self.weights {
                    Some(w) => w[range.clone()].iter().sum(),
                    None => range.len() as f64,
                };
                if let Some(p) = &self.payload {
                    for r in range {
                        if p.present[r] {
                            acc.push(&p.rows[r * pdim..(r + 1) * pdim]);
                        }
                    }
                }
            } else {
                let (l, r) = (node.left as usize, node.right as usize);
                weight = self.nodes[l].weight + self.nodes[r].weight;
                for c in [l, r] {
                    let m = &self.means[c * pdim..(c + 1) * pdim];
                    acc.merge(self.nodes[c].count as usize, m, self.nodes[c].m2);
                }
            }
            let n = &mut self.nodes[id];
            n.weight = weight;
            n.count = acc.count as u32;
            n.m2 = acc.m2;
            self.means[id * pdim..(id + 1) * pdim].copy_from_slice(&acc.mean);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    fn bounds(&self, id: usize) -> (&[f64], &[f64]) {
        let d = self.dim;
        let b = &self.bbox[id * 2 * d..(id + 1) * 2 * d];
        b.split_at(d)
    }

    /// Walks the tree, reporting whole nodes inside the ball and single rows
    /// inside the ball from partially covered leaves.
    fn visit(&self, q: &[f64], eps: f64, mut on_hit: impl FnMut(Hit)) {
        assert_eq!(q.len(), self.dim, "query dimension");
        if self.nodes.is_empty() || !(eps > 0.0) {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let (lo, hi) = self.bounds(id);
            let (mut near, mut far) = (0.0, 0.0);
            for j in 0..self.dim {
                let (a, b) = ((lo[j] - q[j]).abs(), (hi[j] - q[j]).abs());
                let gap = if q[j] < lo[j] {
                    lo[j] - q[j]
                } else if q[j] > hi[j] {
                    q[j] - hi[j]
                } else {
                    0.0
                };
                near += gap * gap;
                let m = a.max(b);
                far += m * m;
            }
            if near.sqrt() >= eps {
                continue;
            }
            if far.sqrt() < eps {
                on_hit(Hit::Node(id));
                continue;
            }
            let node = &self.nodes[id];
            if node.left == NONE {
                for r in node.start as usize..node.end as usize {
                    if self.row_distance(r, q) < eps {
                        on_hit(Hit::Row(r));
                    }
                }
            } else {
                stack.push(node.right as usize);
                stack.push(node.left as usize);
            }
        }
    }

    fn row_distance(&self, r: usize, q: &[f64]) -> f64 {
        let p = &self.points[r * self.dim..(r + 1) * self.dim];
        p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Original indices of all points with ‖p − q‖ < eps, ascending.
    pub fn within(&self, q: &[f64], eps: f64) -> Vec<usize> {
        let mut rows = Vec::new();
        self.visit(q, eps, |hit| match hit {
            Hit::Node(id) => rows.extend(self.nodes[id].start as usize..self.nodes[id].end as usize),
            Hit::Row(r) => rows.push(r),
        });
        let mut out: Vec<usize> = rows.into_iter().map(|r| self.index[r] as usize).collect();
        out.sort_unstable();
        out
    }

    pub fn count_within(&self, q: &[f64], eps: f64) -> usize {
        let mut c = 0;
        self.visit(q, eps, |hit| match hit {
            Hit::Node(id) => c += (self.nodes[id].end - self.nodes[id].start) as usize,
            Hit::Row(_) => c += 1,
        });
        c
    }

    /// Total weight inside the ball (point count when unweighted).
    pub fn mass_within(&self, q: &[f64], eps: f64) -> f64 {
        let mut m = 0.0;
        self.visit(q, eps, |hit| match hit {
            Hit::Node(id) => m += self.nodes[id].weight,
            Hit::Row(r) => m += self.weights.as_ref().map_or(1.0, |w| w[r]),
        });
        m
    }

    /// Moments of the payload vectors of points inside the ball.
    pub fn moments_within(&self, q: &[f64], eps: f64) -> Moments {
        let Some(p) = &self.payload else {
            return Moments::new(0);
        };
        let pd = p.dim;
        let mut acc = Moments::new(pd);
        let mut rows = Vec::new();
        self.visit(q, eps, |hit| match hit {
            Hit::Node(id) => {
                let n = &self.nodes[id];
                acc.merge(n.count as usize, &self.means[id * pd..(id + 1) * pd], n.m2);
            }
            Hit::Row(r) => rows.push(r),
        });
        let mut loose = Moments::new(pd);
        for r in rows {
            if p.present[r] {
                loose.push(&p.rows[r * pd..(r + 1) * pd]);
            }
        }
        acc.merge(loose.count, &loose.mean, loose.m2);
        acc
    }
}
