//! Resistance networks: weighted graphs with an interior/boundary split,
//! a vertex measure `m0`, and an optional absorbing ghost vertex.
//!
//! The energy form carries no ½ factor:
//! `E(f, f) = Σ_edges c_uv (f_u − f_v)² + Σ_u g_u f_u²`, where `g_u` is the
//! conductance from `u` to the ghost (held at 0).

use std::collections::{HashMap, HashSet};
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseSymmetric;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpec {
    pub id: String,
    pub m0: f64,
    pub boundary: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coord: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub u: String,
    pub v: String,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GhostEdgeSpec {
    pub u: String,
    pub c: f64,
}

/// Network description as exchanged in JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ghost_edges: Option<Vec<GhostEdgeSpec>>,
}

impl NetworkSpec {
    pub fn vertex(&mut self, id: impl Into<String>, m0: f64, boundary: bool) -> &mut Self {
        self.vertices.push(VertexSpec {
            id: id.into(),
            m0,
            boundary,
            coord: None,
        });
        self
    }

    pub fn edge(&mut self, u: impl Into<String>, v: impl Into<String>, c: f64) -> &mut Self {
        self.edges.push(EdgeSpec {
            u: u.into(),
            v: v.into(),
            c,
        });
        self
    }

    pub fn ghost_edge(&mut self, u: impl Into<String>, c: f64) -> &mut Self {
        self.ghost_edges
            .get_or_insert_with(Vec::new)
            .push(GhostEdgeSpec { u: u.into(), c });
        self
    }

    pub fn build(&self) -> Result<ResistanceNetwork> {
        build_network(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureRole {
    M0,
    Sigma,
    Omega,
}

/// Nonnegative masses with a role tag. `M0` measures are indexed by vertex,
/// boundary measures (`Sigma`, `Omega`) by boundary position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexMeasure {
    pub role: MeasureRole,
    mass: Vec<f64>,
}

impl VertexMeasure {
    pub fn new(role: MeasureRole, mass: Vec<f64>) -> Result<Self> {
        for (i, &m) in mass.iter().enumerate() {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::InvalidMeasure {
                    id: i.to_string(),
                    value: m,
                });
            }
            if role != MeasureRole::M0 && m == 0.0 {
                return Err(Error::ZeroMass(i));
            }
        }
        Ok(Self { role, mass })
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    /// Same measure multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            role: self.role,
            mass: self.mass.iter().map(|m| m * factor).collect(),
        }
    }
}

impl Deref for VertexMeasure {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.mass
    }
}

/// Immutable resistance network with dense vertex indices.
#[derive(Debug, Clone)]
pub struct ResistanceNetwork {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    coords: Vec<Option<Vec<f64>>>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    ghost: Vec<f64>,
    m0: Vec<f64>,
    is_boundary: Vec<bool>,
    boundary: Vec<usize>,
    interior: Vec<usize>,
    position: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub boundary_count: usize,
    pub interior_count: usize,
    pub ghost_edge_count: usize,
    pub components: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    pub mean_degree: f64,
    pub total_m0: f64,
    pub total_conductance: f64,
}

/// Checks every structural invariant of `spec` and reports all violations.
pub fn validate(spec: &NetworkSpec) -> std::result::Result<Diagnostics, Vec<Error>> {
    let mut errors = Vec::new();
    let mut index = HashMap::new();
    for (i, v) in spec.vertices.iter().enumerate() {
        if index.insert(v.id.clone(), i).is_some() {
            errors.push(Error::DuplicateVertex(v.id.clone()));
        }
        if !(v.m0.is_finite() && v.m0 >= 0.0) {
            errors.push(Error::InvalidMeasure {
                id: v.id.clone(),
                value: v.m0,
            });
        }
        if v.boundary && v.m0 != 0.0 {
            errors.push(Error::BoundaryMass(v.id.clone()));
        }
    }
    let n = spec.vertices.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut seen = HashSet::new();
    let mut degree = vec![0usize; n];
    let mut total_c = 0.0;
    for e in &spec.edges {
        let (Some(&a), Some(&b)) = (index.get(&e.u), index.get(&e.v)) else {
            for id in [&e.u, &e.v] {
                if !index.contains_key(id) {
                    errors.push(Error::UnknownVertex(id.clone()));
                }
            }
            continue;
        };
        if a == b {
            errors.push(Error::SelfLoop(e.u.clone()));
            continue;
        }
        if !(e.c.is_finite() && e.c > 0.0) {
            errors.push(Error::NonpositiveConductance {
                u: e.u.clone(),
                v: e.v.clone(),
                c: e.c,
            });
        }
        if !seen.insert((a.min(b), a.max(b))) {
            errors.push(Error::DuplicateEdge {
                u: e.u.clone(),
                v: e.v.clone(),
            });
            continue;
        }
        degree[a] += 1;
        degree[b] += 1;
        total_c += e.c;
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut ghost_seen = HashSet::new();
    let ghost_edges = spec.ghost_edges.as_deref().unwrap_or(&[]);
    for g in ghost_edges {
        match index.get(&g.u) {
            None => errors.push(Error::UnknownVertex(g.u.clone())),
            Some(&a) => {
                if !(g.c.is_finite() && g.c > 0.0) {
                    errors.push(Error::NonpositiveConductance {
                        u: g.u.clone(),
                        v: "ghost".into(),
                        c: g.c,
                    });
                }
                if !ghost_seen.insert(a) {
                    errors.push(Error::DuplicateEdge {
                        u: g.u.clone(),
                        v: "ghost".into(),
                    });
                }
            }
        }
    }
    let components = (0..n)
        .map(|i| find(&mut parent, i))
        .collect::<HashSet<_>>()
        .len();
    if components > 1 {
        errors.push(Error::DisconnectedGraph { components });
    }
    let interior_mass: f64 = spec
        .vertices
        .iter()
        .filter(|v| !v.boundary && v.m0.is_finite())
        .map(|v| v.m0)
        .sum();
    if !(interior_mass > 0.0) {
        errors.push(Error::EmptyInterior);
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let boundary_count = spec.vertices.iter().filter(|v| v.boundary).count();
    Ok(Diagnostics {
        vertex_count: n,
        edge_count: spec.edges.len(),
        boundary_count,
        interior_count: n - boundary_count,
        ghost_edge_count: ghost_edges.len(),
        components,
        min_degree: degree.iter().copied().min().unwrap_or(0),
        max_degree: degree.iter().copied().max().unwrap_or(0),
        mean_degree: if n > 0 {
            degree.iter().sum::<usize>() as f64 / n as f64
        } else {
            0.0
        },
        total_m0: spec.vertices.iter().map(|v| v.m0).sum(),
        total_conductance: total_c,
    })
}

/// Validates `spec` and freezes it into a network.
pub fn build_network(spec: &NetworkSpec) -> Result<ResistanceNetwork> {
    validate(spec).map_err(|mut errs| errs.remove(0))?;
    let n = spec.vertices.len();
    let ids: Vec<String> = spec.vertices.iter().map(|v| v.id.clone()).collect();
    let index: HashMap<String, usize> = ids.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let mut edges: Vec<Edge> = spec
        .edges
        .iter()
        .map(|e| {
            let (a, b) = (index[&e.u], index[&e.v]);
            Edge {
                u: a.min(b),
                v: a.max(b),
                c: e.c,
            }
        })
        .collect();
    edges.sort_by_key(|e| (e.u, e.v));
    let mut adjacency = vec![Vec::new(); n];
    for e in &edges {
        adjacency[e.u].push((e.v, e.c));
        adjacency[e.v].push((e.u, e.c));
    }
    for a in &mut adjacency {
        a.sort_by_key(|&(w, _)| w);
    }
    let mut ghost = vec![0.0; n];
    for g in spec.ghost_edges.as_deref().unwrap_or(&[]) {
        ghost[index[&g.u]] = g.c;
    }
    let is_boundary: Vec<bool> = spec.vertices.iter().map(|v| v.boundary).collect();
    let mut boundary = Vec::new();
    let mut interior = Vec::new();
    let mut position = vec![0; n];
    for i in 0..n {
        if is_boundary[i] {
            position[i] = boundary.len();
            boundary.push(i);
        } else {
            position[i] = interior.len();
            interior.push(i);
        }
    }
    Ok(ResistanceNetwork {
        ids,
        index,
        coords: spec.vertices.iter().map(|v| v.coord.clone()).collect(),
        edges,
        adjacency,
        ghost,
        m0: spec.vertices.iter().map(|v| v.m0).collect(),
        is_boundary,
        boundary,
        interior,
        position,
    })
}

impl ResistanceNetwork {
    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn coord(&self, v: usize) -> Option<&[f64]> {
        self.coords[v].as_deref()
    }

    pub fn m0(&self) -> &[f64] {
        &self.m0
    }

    /// Conductance from each vertex to the ghost (0 where absent).
    pub fn ghost_conductance(&self) -> &[f64] {
        &self.ghost
    }

    pub fn has_ghost(&self) -> bool {
        self.ghost.iter().any(|&g| g > 0.0)
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.is_boundary[v]
    }

    /// Boundary vertices in ascending index order; a vertex's place in this
    /// list is its *boundary position*.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Position of `v` within `boundary()` or `interior()`.
    pub fn position(&self, v: usize) -> usize {
        self.position[v]
    }

    pub fn interior_mass(&self) -> f64 {
        self.interior.iter().map(|&v| self.m0[v]).sum()
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: self.vertex_count(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// Bilinear energy `E(f, g)`.
    pub fn energy_form(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        self.check_len(g)?;
        let mut s = 0.0;
        for e in &self.edges {
            s += e.c * (f[e.u] - f[e.v]) * (g[e.u] - g[e.v]);
        }
        for (v, &k) in self.ghost.iter().enumerate() {
            if k > 0.0 {
                s += k * f[v] * g[v];
            }
        }
        Ok(s)
    }

    pub fn energy(&self, f: &[f64]) -> Result<f64> {
        self.energy_form(f, f)
    }

    /// Matrix of the energy form: `fᵀ L g = E(f, g)`.
    pub fn laplacian(&self) -> SparseSymmetric {
        let mut t = Vec::with_capacity(3 * self.edges.len() + self.vertex_count());
        for e in &self.edges {
            t.push((e.u, e.u, e.c));
            t.push((e.v, e.v, e.c));
            t.push((e.u, e.v, -e.c));
        }
        for (v, &k) in self.ghost.iter().enumerate() {
            if k > 0.0 {
                t.push((v, v, k));
            }
        }
        for v in 0..self.vertex_count() {
            t.push((v, v, 0.0));
        }
        SparseSymmetric::from_triplets(self.vertex_count(), &t)
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let degree: Vec<usize> = self.adjacency.iter().map(Vec::len).collect();
        let n = self.vertex_count();
        Diagnostics {
            vertex_count: n,
            edge_count: self.edges.len(),
            boundary_count: self.boundary.len(),
            interior_count: self.interior.len(),
            ghost_edge_count: self.ghost.iter().filter(|&&g| g > 0.0).count(),
            components: 1,
            min_degree: degree.iter().copied().min().unwrap_or(0),
            max_degree: degree.iter().copied().max().unwrap_or(0),
            mean_degree: degree.iter().sum::<usize>() as f64 / n.max(1) as f64,
            total_m0: self.m0.iter().sum(),
            total_conductance: self.edges.iter().map(|e| e.c).sum(),
        }
    }

    /// Lifts boundary-position values to a full vertex function (0 elsewhere).
    pub fn lift_boundary(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.boundary.len() {
            return Err(Error::DimensionMismatch {
                expected: self.boundary.len(),
                got: u.len(),
            });
        }
        let mut f = vec![0.0; self.vertex_count()];
        for (k, &v) in self.boundary.iter().enumerate() {
            f[v] = u[k];
        }
        Ok(f)
    }

    pub fn restrict_to_boundary(&self, f: &[f64]) -> Vec<f64> {
        self.boundary.iter().map(|&v| f[v]).collect()
    }

    pub fn to_spec(&self) -> NetworkSpec {
        let vertices = (0..self.vertex_count())
            .map(|v| VertexSpec {
                id: self.ids[v].clone(),
                m0: self.m0[v],
                boundary: self.is_boundary[v],
                coord: self.coords[v].clone(),
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| EdgeSpec {
                u: self.ids[e.u].clone(),
                v: self.ids[e.v].clone(),
                c: e.c,
            })
            .collect();
        let ghost: Vec<GhostEdgeSpec> = self
            .ghost
            .iter()
            .enumerate()
            .filter(|(_, &g)| g > 0.0)
            .map(|(v, &c)| GhostEdgeSpec {
                u: self.ids[v].clone(),
                c,
            })
            .collect();
        NetworkSpec {
            vertices,
            edges,
            ghost_edges: if ghost.is_empty() { None } else { Some(ghost) },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn star(c: &[f64]) -> ResistanceNetwork {
        let mut s = NetworkSpec::default();
        s.vertex("o", 1.0, false);
        for (i, &ci) in c.iter().enumerate() {
            let id = format!("x{}", i + 1);
            s.vertex(id.clone(), 0.0, true);
            s.edge("o", id, ci);
        }
        s.build().unwrap()
    }

    fn path(n: usize) -> ResistanceNetwork {
        let mut s = NetworkSpec::default();
        for i in 0..=n {
            let b = i == 0 || i == n;
            s.vertex(i.to_string(), if b { 0.0 } else { 1.0 }, b);
        }
        for i in 0..n {
            s.edge(i.to_string(), (i + 1).to_string(), 1.0);
        }
        s.build().unwrap()
    }

    #[test]
    fn star_construction() {
        let net = star(&[1.0, 1.0]);
        assert_eq!(net.vertex_count(), 3);
        assert_eq!(net.edges().len(), 2);
        let b: Vec<&str> = net.boundary().iter().map(|&v| net.id(v)).collect();
        assert_eq!(b, ["x1", "x2"]);
    }

    #[test]
    fn path_is_valid() {
        let net = path(2);
        assert_eq!(net.boundary(), &[0, 2]);
        assert_eq!(net.interior(), &[1]);
    }

    #[test]
    fn zero_conductance_rejected() {
        let mut s = NetworkSpec::default();
        s.vertex("a", 1.0, false).vertex("b", 0.0, true).edge("a", "b", 0.0);
        assert!(matches!(s.build(), Err(Error::NonpositiveConductance { .. })));
    }

    #[test]
    fn structural_errors() {
        let mut s = NetworkSpec::default();
        s.vertex("a", 1.0, false).vertex("b", 0.0, true).edge("a", "b", 1.0).edge("b", "a", 2.0);
        assert!(matches!(s.build(), Err(Error::DuplicateEdge { .. })));

        let mut s = NetworkSpec::default();
        s.vertex("a", 0.0, false).vertex("b", 0.0, true).edge("a", "b", 1.0);
        assert!(matches!(s.build(), Err(Error::EmptyInterior)));

        let mut s = NetworkSpec::default();
        s.vertex("a", 1.0, false).vertex("b", 0.5, true).edge("a", "b", 1.0);
        assert!(matches!(s.build(), Err(Error::BoundaryMass(_))));

        let mut s = NetworkSpec::default();
        s.vertex("a", 1.0, false).edge("a", "a", 1.0);
        assert!(matches!(s.build(), Err(Error::SelfLoop(_))));
    }

    #[test]
    fn energy_examples() {
        let net = star(&[1.0, 1.0]);
        assert_eq!(net.energy(&[0.0, 1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(net.energy(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        // 1/4 + 1/4
        assert_eq!(path(2).energy(&[0.0, 0.5, 1.0]).unwrap(), 0.5);
        assert!(matches!(
            net.energy(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn laplacian_examples() {
        let l = star(&[1.0, 1.0]).laplacian().to_dense();
        let expected = nalgebra::DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 1.0, 0.0, -1.0, 0.0, 1.0]);
        assert_eq!(l, expected);

        let mut s = NetworkSpec::default();
        s.vertex("a", 1.0, false).vertex("b", 0.0, true).edge("a", "b", 2.5);
        let l = s.build().unwrap().laplacian().to_dense();
        assert_eq!(l, nalgebra::DMatrix::from_row_slice(2, 2, &[2.5, -2.5, -2.5, 2.5]));
    }

    #[test]
    fn laplacian_row_sums_carry_ghost_conductance() {
        let mut s = NetworkSpec::default();
        s.vertex("a", 1.0, false)
            .vertex("b", 1.0, false)
            .vertex("z", 0.0, true)
            .edge("a", "b", 1.0)
            .edge("b", "z", 2.0)
            .ghost_edge("a", 0.25);
        let net = s.build().unwrap();
        assert_eq!(net.laplacian().row_sums(), vec![0.25, 0.0, 0.0]);
        assert_eq!(path(6).laplacian().row_sums(), vec![0.0; 7]);
        // ghost pinned at 0: constants have energy Σg
        assert_eq!(net.energy(&[1.0, 1.0, 1.0]).unwrap(), 0.25);
    }

    #[test]
    fn validate_examples() {
        let mut s = NetworkSpec::default();
        s.vertex("o", 1.0, false);
        for (i, c) in [1.0, 2.0, 3.0].into_iter().enumerate() {
            s.vertex(format!("x{i}"), 0.0, true).edge("o", format!("x{i}"), c);
        }
        let d = validate(&s).unwrap();
        assert_eq!((d.boundary_count, d.interior_count), (3, 1));

        let mut s = NetworkSpec::default();
        s.vertex("a", 1.0, false)
            .vertex("b", 0.0, true)
            .vertex("c", 1.0, false)
            .vertex("d", 0.0, true)
            .edge("a", "b", 1.0)
            .edge("c", "d", 1.0);
        let errs = validate(&s).unwrap_err();
        assert!(errs.contains(&Error::DisconnectedGraph { components: 2 }));
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let bad = r#"{"vertices": [], "edges": [], "extra": 1}"#;
        assert!(serde_json::from_str::<NetworkSpec>(bad).is_err());
        let ok = r#"{"vertices": [{"id": "a", "m0": 1.0, "boundary": false}], "edges": []}"#;
        assert!(serde_json::from_str::<NetworkSpec>(ok).is_ok());
    }

    fn random_network(seed: &[f64]) -> ResistanceNetwork {
        // wheel: hub + rim, with conductances from the seed
        let n = seed.len();
        let mut s = NetworkSpec::default();
        s.vertex("hub", 1.0, false);
        for i in 0..n {
            s.vertex(format!("r{i}"), if i % 2 == 0 { 0.0 } else { 0.5 }, i % 2 == 0);
        }
        for i in 0..n {
            s.edge("hub", format!("r{i}"), seed[i]);
            s.edge(format!("r{i}"), format!("r{}", (i + 1) % n), seed[(i + 3) % n] + 0.1);
        }
        s.build().unwrap()
    }

    proptest! {
        #[test]
        fn energy_is_a_nonnegative_quadratic_form(
            c in prop::collection::vec(0.01f64..10.0, 4..9),
            f in prop::collection::vec(-5.0f64..5.0, 9),
            g in prop::collection::vec(-5.0f64..5.0, 9),
            a in -3.0f64..3.0,
        ) {
            let net = random_network(&c);
            let n = net.vertex_count();
            let (f, g) = (&f[..n], &g[..n]);
            let ef = net.energy(f).unwrap();
            prop_assert!(ef >= 0.0);
            let af: Vec<f64> = f.iter().map(|x| a * x).collect();
            prop_assert!((net.energy(&af).unwrap() - a * a * ef).abs() <= 1e-12 * (1.0 + a * a * ef));
            // parallelogram law
            let sum: Vec<f64> = f.iter().zip(g).map(|(x, y)| x + y).collect();
            let diff: Vec<f64> = f.iter().zip(g).map(|(x, y)| x - y).collect();
            let lhs = net.energy(&sum).unwrap() + net.energy(&diff).unwrap();
            let rhs = 2.0 * (ef + net.energy(g).unwrap());
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
            // matrix/form consistency
            let l = net.laplacian();
            let q = l.quadratic_form(f, g);
            let e = net.energy_form(f, g).unwrap();
            prop_assert!((q - e).abs() <= 1e-12 * (1.0 + e.abs() + ef));
            // Markov property
            let clamped: Vec<f64> = f.iter().map(|x| x.clamp(0.0, 1.0)).collect();
            prop_assert!(net.energy(&clamped).unwrap() <= ef + 1e-12);
        }

        #[test]
        fn energy_vanishes_only_on_constants(
            c in prop::collection::vec(0.01f64..10.0, 4..9),
            k in -5.0f64..5.0,
            bump in 1e-3f64..1.0,
            at in 0usize..9,
        ) {
            let net = random_network(&c);
            let n = net.vertex_count();
            let mut f = vec![k; n];
            prop_assert!(net.energy(&f).unwrap().abs() < 1e-12);
            f[at % n] += bump;
            prop_assert!(net.energy(&f).unwrap() > 0.0);
        }
    }
}
