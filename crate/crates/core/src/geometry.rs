//! Boundary geometry: pairwise boundary distances, the boundary-distance
//! field `d_D`, closed-ball measure queries and radius grids.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ResistanceNetwork;

/// Relative slack used when testing `d ≤ r` for closed balls.
const CLOSED_BALL_SLACK: f64 = 1e-9;

#[inline]
pub fn within(d: f64, r: f64) -> bool {
    d <= r * (1.0 + CLOSED_BALL_SLACK) + 1e-300
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum RadiusGrid {
    /// `base · 2^{-k}`, k = 0, 1, 2, …
    Dyadic { base: f64 },
    /// Positive integers.
    Integer,
}

impl RadiusGrid {
    /// Grid radii in `(lo, hi]`, ascending.
    pub fn radii(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match *self {
            RadiusGrid::Dyadic { base } => {
                let mut r = base;
                while r > hi * (1.0 + CLOSED_BALL_SLACK) {
                    r /= 2.0;
                }
                while r > lo * (1.0 + CLOSED_BALL_SLACK) {
                    out.push(r);
                    r /= 2.0;
                }
                out.reverse();
            }
            RadiusGrid::Integer => {
                let mut r = lo.floor() + 1.0;
                while within(r, hi) {
                    out.push(r);
                    r += 1.0;
                }
            }
        }
        out
    }
}

/// Metric data of a domain: `rho` on boundary × boundary, graph distances
/// from each boundary point to every vertex, and `d_D` per vertex.
#[derive(Debug, Clone)]
pub struct BoundaryGeometry {
    boundary: Vec<usize>,
    rho: DMatrix<f64>,
    to_vertex: DMatrix<f64>,
    d_boundary: Vec<f64>,
    edge_length: f64,
    diam: f64,
    grid: RadiusGrid,
    labels: Vec<String>,
}

/// Breadth-first hop distances from `sources` (usize::MAX where unreachable).
pub fn hop_distances(net: &ResistanceNetwork, sources: &[usize]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; net.vertex_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        dist[s] = 0;
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        for &(w, _) in net.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

impl BoundaryGeometry {
    /// Graph shortest-path geometry with uniform edge length.
    pub fn graph_metric(net: &ResistanceNetwork, edge_length: f64, grid: RadiusGrid) -> Result<Self> {
        let boundary = net.boundary().to_vec();
        let nb = boundary.len();
        let to_vertex = Self::boundary_to_vertex(net, edge_length);
        let mut rho = DMatrix::zeros(nb, nb);
        for a in 0..nb {
            for b in 0..nb {
                rho[(a, b)] = to_vertex[(a, boundary[b])];
            }
        }
        let labels = boundary.iter().map(|&v| net.id(v).to_string()).collect();
        Self::assemble(net, rho, to_vertex, edge_length, grid, labels)
    }

    /// Geometry with an explicitly supplied boundary metric; mixed
    /// boundary/interior distances still come from the graph.
    pub fn with_boundary_metric(
        net: &ResistanceNetwork,
        rho: DMatrix<f64>,
        edge_length: f64,
        grid: RadiusGrid,
        labels: Vec<String>,
    ) -> Result<Self> {
        let nb = net.boundary().len();
        if rho.nrows() != nb || rho.ncols() != nb || labels.len() != nb {
            return Err(Error::DimensionMismatch {
                expected: nb,
                got: rho.nrows(),
            });
        }
        let to_vertex = Self::boundary_to_vertex(net, edge_length);
        Self::assemble(net, rho, to_vertex, edge_length, grid, labels)
    }

    fn boundary_to_vertex(net: &ResistanceNetwork, edge_length: f64) -> DMatrix<f64> {
        let boundary = net.boundary();
        let n = net.vertex_count();
        let mut m = DMatrix::zeros(boundary.len(), n);
        for (k, &b) in boundary.iter().enumerate() {
            let hops = hop_distances(net, &[b]);
            for v in 0..n {
                m[(k, v)] = if hops[v] == usize::MAX {
                    f64::INFINITY
                } else {
                    hops[v] as f64 * edge_length
                };
            }
        }
        m
    }

    fn assemble(
        net: &ResistanceNetwork,
        rho: DMatrix<f64>,
        to_vertex: DMatrix<f64>,
        edge_length: f64,
        grid: RadiusGrid,
        labels: Vec<String>,
    ) -> Result<Self> {
        if net.boundary().is_empty() {
            return Err(Error::EmptyBoundary);
        }
        let hops = hop_distances(net, net.boundary());
        let d_boundary = hops.iter().map(|&h| h as f64 * edge_length).collect();
        let diam = rho.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            boundary: net.boundary().to_vec(),
            rho,
            to_vertex,
            d_boundary,
            edge_length,
            diam,
            grid,
            labels,
        })
    }

    pub fn boundary_len(&self) -> usize {
        self.boundary.len()
    }

    /// `rho` between boundary positions `a` and `b`.
    pub fn rho(&self, a: usize, b: usize) -> f64 {
        self.rho[(a, b)]
    }

    pub fn rho_matrix(&self) -> &DMatrix<f64> {
        &self.rho
    }

    /// Distance from boundary position `a` to vertex `v`.
    pub fn to_vertex(&self, a: usize, v: usize) -> f64 {
        self.to_vertex[(a, v)]
    }

    /// `d_D(v)`: distance from vertex `v` to the boundary.
    pub fn d_boundary(&self, v: usize) -> f64 {
        self.d_boundary[v]
    }

    pub fn d_boundary_field(&self) -> &[f64] {
        &self.d_boundary
    }

    pub fn edge_length(&self) -> f64 {
        self.edge_length
    }

    pub fn diam(&self) -> f64 {
        self.diam
    }

    pub fn grid(&self) -> RadiusGrid {
        self.grid
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Grid radii in `[edge length, cap]`.
    pub fn radii(&self, cap: f64) -> Vec<f64> {
        self.grid.radii(0.99 * self.edge_length, cap)
    }

    /// Boundary positions in the closed ball `B(a, r)`.
    pub fn boundary_ball(&self, a: usize, r: f64) -> Vec<usize> {
        (0..self.boundary.len())
            .filter(|&b| within(self.rho[(a, b)], r))
            .collect()
    }

    /// All vertices (interior and boundary) in the closed ball `B(a, r)`;
    /// boundary membership uses `rho`, interior membership the graph metric.
    pub fn vertex_ball(&self, net: &ResistanceNetwork, a: usize, r: f64) -> Vec<usize> {
        (0..net.vertex_count())
            .filter(|&v| {
                if net.is_boundary(v) {
                    within(self.rho[(a, net.position(v))], r)
                } else {
                    within(self.to_vertex[(a, v)], r)
                }
            })
            .collect()
    }

    /// Graph distances (scaled by the edge length) from an arbitrary vertex.
    pub fn distances_from(&self, net: &ResistanceNetwork, v: usize) -> Vec<f64> {
        hop_distances(net, &[v])
            .into_iter()
            .map(|h| {
                if h == usize::MAX {
                    f64::INFINITY
                } else {
                    h as f64 * self.edge_length
                }
            })
            .collect()
    }

    /// Interior vertex maximizing `d_D` (lowest index on ties).
    pub fn deepest_interior(&self, net: &ResistanceNetwork) -> Option<usize> {
        net.interior().iter().copied().fold(None, |best, v| match best {
            Some(b) if self.d_boundary[b] >= self.d_boundary[v] => Some(b),
            _ => Some(v),
        })
    }

    /// Ball-mass index for a measure on boundary positions.
    pub fn boundary_ball_index(&self, mass: &[f64]) -> BallIndex {
        let nb = self.boundary.len();
        BallIndex::build(nb, |a| (0..nb).map(|b| (self.rho[(a, b)], mass[b])).collect())
    }

    /// Ball-mass index for a vertex measure (e.g. `m0`), over graph distances.
    pub fn vertex_ball_index(&self, mass: &[f64]) -> BallIndex {
        let nb = self.boundary.len();
        BallIndex::build(nb, |a| {
            mass.iter()
                .enumerate()
                .filter(|(_, &m)| m > 0.0)
                .map(|(v, &m)| (self.to_vertex[(a, v)], m))
                .collect()
        })
    }

    /// Exhaustive metric-axiom check on `rho`; returns the worst violation.
    pub fn metric_defect(&self) -> f64 {
        let nb = self.boundary.len();
        let mut worst: f64 = 0.0;
        for a in 0..nb {
            worst = worst.max(self.rho[(a, a)].abs());
            for b in 0..nb {
                worst = worst.max((self.rho[(a, b)] - self.rho[(b, a)]).abs());
                if a != b && self.rho[(a, b)] <= 0.0 {
                    worst = worst.max(1.0);
                }
                for c in 0..nb {
                    worst = worst.max(self.rho[(a, c)] - self.rho[(a, b)] - self.rho[(b, c)]);
                }
            }
        }
        worst
    }

    pub fn to_sidecar(&self, net: &ResistanceNetwork) -> GeometrySidecar {
        let nb = self.boundary.len();
        GeometrySidecar {
            rho_boundary: (0..nb).map(|a| (0..nb).map(|b| self.rho[(a, b)]).collect()).collect(),
            d_d: (0..net.vertex_count())
                .map(|v| (net.id(v).to_string(), self.d_boundary[v]))
                .collect(),
            labels: self
                .boundary
                .iter()
                .zip(&self.labels)
                .map(|(&v, l)| (net.id(v).to_string(), l.clone()))
                .collect(),
        }
    }

    /// Rebuilds a geometry from a sidecar. The edge length is recovered as
    /// the smallest positive `d_D`.
    pub fn from_sidecar(net: &ResistanceNetwork, side: &GeometrySidecar, grid: RadiusGrid) -> Result<Self> {
        let nb = net.boundary().len();
        if side.rho_boundary.len() != nb || side.rho_boundary.iter().any(|r| r.len() != nb) {
            return Err(Error::DimensionMismatch {
                expected: nb,
                got: side.rho_boundary.len(),
            });
        }
        let rho = DMatrix::from_fn(nb, nb, |a, b| side.rho_boundary[a][b]);
        let edge_length = side
            .d_d
            .values()
            .copied()
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !edge_length.is_finite() {
            return Err(Error::Json("sidecar d_D has no positive entry".into()));
        }
        let labels = net
            .boundary()
            .iter()
            .map(|&v| side.labels.get(net.id(v)).cloned().unwrap_or_else(|| net.id(v).to_string()))
            .collect();
        Self::with_boundary_metric(net, rho, edge_length, grid, labels)
    }
}

/// Geometry sidecar JSON written next to a network file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySidecar {
    pub rho_boundary: Vec<Vec<f64>>,
    #[serde(rename = "d_D")]
    pub d_d: BTreeMap<String, f64>,
    pub labels: BTreeMap<String, String>,
}

/// Per-center sorted distances with cumulative masses, answering closed-ball
/// mass queries by binary search.
#[derive(Debug, Clone)]
pub struct BallIndex {
    dist: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
}

impl BallIndex {
    fn build(centers: usize, pairs: impl Fn(usize) -> Vec<(f64, f64)>) -> Self {
        let mut dist = Vec::with_capacity(centers);
        let mut cumulative = Vec::with_capacity(centers);
        for a in 0..centers {
            let mut p = pairs(a);
            p.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut acc = 0.0;
            let mut d = Vec::with_capacity(p.len());
            let mut c = Vec::with_capacity(p.len());
            for (di, mi) in p {
                acc += mi;
                d.push(di);
                c.push(acc);
            }
            dist.push(d);
            cumulative.push(c);
        }
        Self { dist, cumulative }
    }

    /// Mass of the closed ball of radius `r` around center `a`.
    pub fn mass(&self, a: usize, r: f64) -> f64 {
        let d = &self.dist[a];
        let k = d.partition_point(|&x| within(x, r));
        if k == 0 {
            0.0
        } else {
            self.cumulative[a][k - 1]
        }
    }

    pub fn total(&self, a: usize) -> f64 {
        self.cumulative[a].last().copied().unwrap_or(0.0)
    }
}
