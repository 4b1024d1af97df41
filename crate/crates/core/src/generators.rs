//! Deterministic builders for the example domains.
//!
//! * `gen_star`, `gen_path`: small closed-form test networks.
//! * `gen_sg_slit`: level-n Sierpinski pre-gasket with the bottom segment
//!   cut out; interior bottom vertices are split so that each boundary
//!   point is a degree-1 vertex labeled by a word in `{1,2}^{n+1}`.
//! * `gen_half_strip`, `gen_grid_slit`: lattice domains whose boundary
//!   traces behave like Cauchy processes.
//! * `gen_skewed_comb`, `gen_attenuated_strip`: designed stress cases on
//!   which the doubling / capacity-density constants must degrade.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryGeometry, RadiusGrid};
use crate::network::{MeasureRole, NetworkSpec, ResistanceNetwork, VertexMeasure, VertexSpec};

pub const SG_MIN_LEVEL: usize = 1;
pub const SG_MAX_LEVEL: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FarMode {
    Reflecting,
    Absorbing,
}

#[derive(Debug, Clone)]
pub struct GeneratedDomain {
    pub label: String,
    pub level: Option<usize>,
    pub net: ResistanceNetwork,
    pub geom: BoundaryGeometry,
    /// Reference boundary measure, indexed by boundary position.
    pub sigma_uniform: VertexMeasure,
    /// Distinguished deep interior vertex (gasket apex, strip top-center…).
    pub pole: usize,
    /// Vertex permutation realizing a mirror automorphism, when one exists.
    pub mirror: Option<Vec<usize>>,
}

impl GeneratedDomain {
    pub fn boundary_len(&self) -> usize {
        self.net.boundary().len()
    }
}

fn uniform(nb: usize, mass: f64) -> VertexMeasure {
    VertexMeasure::new(MeasureRole::Sigma, vec![mass; nb]).expect("positive uniform mass")
}

pub fn gen_star(c: &[f64]) -> Result<GeneratedDomain> {
    if c.len() < 2 {
        return Err(Error::BadDimensions(format!(
            "star needs at least 2 leaves, got {}",
            c.len()
        )));
    }
    let mut s = NetworkSpec::default();
    s.vertex("o", 1.0, false);
    for (i, &ci) in c.iter().enumerate() {
        let id = format!("x{}", i + 1);
        s.vertex(id.clone(), 0.0, true);
        s.edge("o", id, ci);
    }
    let net = s.build()?;
    let geom = BoundaryGeometry::graph_metric(&net, 1.0, RadiusGrid::Integer)?;
    let n = c.len();
    Ok(GeneratedDomain {
        label: format!("star-{n}"),
        level: None,
        pole: net.index_of("o")?,
        net,
        geom,
        sigma_uniform: uniform(n, 1.0 / n as f64),
        mirror: None,
    })
}

pub fn gen_path(n_edges: usize, c: Option<&[f64]>) -> Result<GeneratedDomain> {
    if n_edges < 2 {
        return Err(Error::BadDimensions(format!("path needs at least 2 edges, got {n_edges}")));
    }
    if let Some(c) = c {
        if c.len() != n_edges {
            return Err(Error::DimensionMismatch {
                expected: n_edges,
                got: c.len(),
            });
        }
    }
    let mut s = NetworkSpec::default();
    for i in 0..=n_edges {
        let b = i == 0 || i == n_edges;
        s.vertex(i.to_string(), if b { 0.0 } else { 1.0 }, b);
    }
    for i in 0..n_edges {
        s.edge(i.to_string(), (i + 1).to_string(), c.map_or(1.0, |c| c[i]));
    }
    let net = s.build()?;
    let geom = BoundaryGeometry::graph_metric(&net, 1.0, RadiusGrid::Integer)?;
    let mirror = (0..=n_edges).rev().collect();
    Ok(GeneratedDomain {
        label: format!("path-{n_edges}"),
        level: None,
        pole: n_edges / 2,
        net,
        geom,
        sigma_uniform: uniform(2, 0.5),
        mirror: Some(mirror),
    })
}

/// Word distance on the gasket boundary: `(3/2)·2^{-k}` with `k` the length
/// of the common prefix (words are extended by repeating their last letter,
/// so equal finite words are the only pairs at distance 0).
pub fn word_distance(a: &str, b: &str) -> f64 {
    if a == b {
        return 0.0;
    }
    let k = a.bytes().zip(b.bytes()).take_while(|(x, y)| x == y).count();
    1.5 * 0.5f64.powi(k as i32)
}

/// Number of interior vertices of the level-`n` slit gasket.
pub fn sg_interior_count(n: usize) -> usize {
    (3usize.pow(n as u32 + 1) + 3) / 2 - ((1usize << n) + 1)
}

/// Total interior `m0` mass of the level-`n` slit gasket:
/// `3 − 2^{n+1}/3^n` (three corners per cell, bottom corners removed).
pub fn sg_interior_mass(n: usize) -> f64 {
    3.0 - 2f64.powi(n as i32 + 1) / 3f64.powi(n as i32)
}

pub fn gen_sg_slit(level: usize) -> Result<GeneratedDomain> {
    if !(SG_MIN_LEVEL..=SG_MAX_LEVEL).contains(&level) {
        return Err(Error::LevelOutOfRange {
            level,
            min: SG_MIN_LEVEL,
            max: SG_MAX_LEVEL,
        });
    }
    let side = 1i64 << level;
    // cells as (corner a, corner b, word); integer coordinates (i, j) mean
    // i·(1,0)/N + j·(1/2, √3/2)/N with N = 2^level.
    let mut cells: Vec<(i64, i64, String)> = Vec::new();
    fn subdivide(a: i64, b: i64, s: i64, word: String, out: &mut Vec<(i64, i64, String)>) {
        if s == 1 {
            out.push((a, b, word));
            return;
        }
        let h = s / 2;
        subdivide(a, b + h, h, format!("{word}0"), out);
        subdivide(a, b, h, format!("{word}1"), out);
        subdivide(a + h, b, h, format!("{word}2"), out);
    }
    subdivide(0, 0, side, String::new(), &mut cells);

    let conductance = (5.0f64 / 3.0).powi(level as i32);
    let cell_mass = 3f64.powi(-(level as i32));
    let point_id = |i: i64, j: i64| format!("v{i}_{j}");
    let coord = |i: i64, j: i64| {
        let n = side as f64;
        vec![(i as f64 + 0.5 * j as f64) / n, (3f64.sqrt() / 2.0) * j as f64 / n]
    };

    let mut interior_mass: HashMap<(i64, i64), f64> = HashMap::new();
    let mut order: Vec<(i64, i64)> = Vec::new();
    let mut spec = NetworkSpec::default();
    let mut boundary_words: Vec<(String, i64)> = Vec::new();
    for (a, b, word) in &cells {
        let (a, b) = (*a, *b);
        let corners = [(a, b), (a + 1, b), (a, b + 1)];
        for &(i, j) in &corners {
            if j > 0 {
                let e = interior_mass.entry((i, j)).or_insert_with(|| {
                    order.push((i, j));
                    0.0
                });
                *e += cell_mass;
            }
        }
        let apex = point_id(a, b + 1);
        if b == 0 {
            let left = format!("w{word}1");
            let right = format!("w{word}2");
            spec.edge(left.clone(), apex.clone(), conductance);
            spec.edge(right.clone(), apex, conductance);
            boundary_words.push((format!("{word}1"), a));
            boundary_words.push((format!("{word}2"), a + 1));
        } else {
            spec.edge(point_id(a, b), apex.clone(), conductance);
            spec.edge(point_id(a + 1, b), apex, conductance);
            spec.edge(point_id(a, b), point_id(a + 1, b), conductance);
        }
    }
    order.sort_by_key(|&(i, j)| (j, i));
    for &(i, j) in &order {
        spec.vertices.push(VertexSpec {
            id: point_id(i, j),
            m0: interior_mass[&(i, j)],
            boundary: false,
            coord: Some(coord(i, j)),
        });
    }
    boundary_words.sort();
    for (w, i) in &boundary_words {
        spec.vertices.push(VertexSpec {
            id: format!("w{w}"),
            m0: 0.0,
            boundary: true,
            coord: Some(coord(*i, 0)),
        });
    }
    let net = spec.build()?;
    let labels: Vec<String> = net.boundary().iter().map(|&v| net.id(v)[1..].to_string()).collect();
    let nb = labels.len();
    let rho = DMatrix::from_fn(nb, nb, |x, y| word_distance(&labels[x], &labels[y]));
    let edge_length = 0.5f64.powi(level as i32);
    let geom = BoundaryGeometry::with_boundary_metric(
        &net,
        rho,
        edge_length,
        RadiusGrid::Dyadic { base: 1.5 },
        labels,
    )?;

    let mirror: Vec<usize> = (0..net.vertex_count())
        .map(|v| {
            let id = net.id(v);
            let image = if let Some(w) = id.strip_prefix('w') {
                let flipped: String = w.chars().map(|c| if c == '1' { '2' } else { '1' }).collect();
                format!("w{flipped}")
            } else {
                let (i, j) = id[1..].split_once('_').expect("interior id");
                let (i, j): (i64, i64) = (i.parse().unwrap(), j.parse().unwrap());
                point_id(side - i - j, j)
            };
            net.index_of(&image).expect("mirror image exists")
        })
        .collect();

    Ok(GeneratedDomain {
        label: format!("sg-slit-{level}"),
        level: Some(level),
        pole: net.index_of(&point_id(0, side))?,
        sigma_uniform: uniform(nb, 0.5f64.powi(level as i32 + 1)),
        net,
        geom,
        mirror: Some(mirror),
    })
}

fn lattice_id(x: usize, y: usize) -> String {
    format!("{x}_{y}")
}

fn strip_spec(w: usize, h: usize, boundary_scale: f64) -> NetworkSpec {
    let mut s = NetworkSpec::default();
    for y in 0..=h {
        for x in 0..=w {
            s.vertices.push(VertexSpec {
                id: lattice_id(x, y),
                m0: if y == 0 { 0.0 } else { 1.0 },
                boundary: y == 0,
                coord: Some(vec![x as f64, y as f64]),
            });
        }
    }
    for y in 0..=h {
        for x in 0..=w {
            if x < w {
                let c = if y == 0 { boundary_scale } else { 1.0 };
                s.edge(lattice_id(x, y), lattice_id(x + 1, y), c);
            }
            if y < h {
                let c = if y == 0 { boundary_scale } else { 1.0 };
                s.edge(lattice_id(x, y), lattice_id(x, y + 1), c);
            }
        }
    }
    s
}

fn strip_domain(label: String, spec: NetworkSpec, w: usize, h: usize) -> Result<GeneratedDomain> {
    let net = spec.build()?;
    let geom = BoundaryGeometry::graph_metric(&net, 1.0, RadiusGrid::Integer)?;
    let nb = net.boundary().len();
    let mirror = (0..net.vertex_count())
        .map(|v| {
            let c = net.coord(v).expect("lattice coords");
            net.index_of(&lattice_id(w - c[0] as usize, c[1] as usize)).unwrap()
        })
        .collect();
    Ok(GeneratedDomain {
        label,
        level: None,
        pole: net.index_of(&lattice_id(w / 2, h))?,
        net,
        geom,
        sigma_uniform: uniform(nb, 1.0),
        mirror: Some(mirror),
    })
}

fn check_strip(w: usize, h: usize) -> Result<()> {
    if w < 8 || 2 * h < w {
        return Err(Error::BadDimensions(format!(
            "half-strip needs W ≥ 8 and H ≥ W/2 (got W={w}, H={h})"
        )));
    }
    Ok(())
}

/// Lattice `{0..W}×{0..H}` with the bottom row as boundary.
pub fn gen_half_strip(w: usize, h: usize, far_mode: FarMode) -> Result<GeneratedDomain> {
    check_strip(w, h)?;
    let mut spec = strip_spec(w, h, 1.0);
    if far_mode == FarMode::Absorbing {
        for x in 0..=w {
            spec.ghost_edge(lattice_id(x, h), 1.0);
        }
    }
    let mode = match far_mode {
        FarMode::Reflecting => "reflecting",
        FarMode::Absorbing => "absorbing",
    };
    strip_domain(format!("half-strip-{w}x{h}-{mode}"), spec, w, h)
}

/// Reflecting half-strip whose edges incident to the boundary row carry
/// conductance `3^{-depth}`.
pub fn gen_attenuated_strip(w: usize, h: usize, depth: u32) -> Result<GeneratedDomain> {
    check_strip(w, h)?;
    let spec = strip_spec(w, h, 3f64.powi(-(depth as i32)));
    strip_domain(format!("attenuated-strip-{w}x{h}-d{depth}"), spec, w, h)
}

/// Square lattice `{0..W}²` with a horizontal slit of `slit_len` edges
/// centered on row `W/2`. Slit vertices other than the two tips are split
/// into upper and lower copies; each lattice edge along the slit is shared
/// by the two sides with conductance ½ each.
pub fn gen_grid_slit(w: usize, slit_len: usize) -> Result<GeneratedDomain> {
    if slit_len == 0 || 2 * slit_len >= w {
        return Err(Error::BadDimensions(format!(
            "grid slit needs 0 < slit_len < W/2 (got W={w}, slit_len={slit_len})"
        )));
    }
    let y0 = w / 2;
    let x0 = (w - slit_len) / 2;
    let x1 = x0 + slit_len;
    let inner = |x: usize, y: usize| y == y0 && x > x0 && x < x1;
    let on_slit = |x: usize, y: usize| y == y0 && x >= x0 && x <= x1;
    let mut s = NetworkSpec::default();
    for y in 0..=w {
        for x in 0..=w {
            if inner(x, y) {
                for side in ["u", "l"] {
                    s.vertices.push(VertexSpec {
                        id: format!("{x}_{y}{side}"),
                        m0: 0.0,
                        boundary: true,
                        coord: Some(vec![x as f64, y as f64]),
                    });
                }
            } else {
                let b = on_slit(x, y);
                s.vertices.push(VertexSpec {
                    id: lattice_id(x, y),
                    m0: if b { 0.0 } else { 1.0 },
                    boundary: b,
                    coord: Some(vec![x as f64, y as f64]),
                });
            }
        }
    }
    // id of the copy of (x, y) seen from the given side of the slit
    let copy = |x: usize, y: usize, upper: bool| {
        if inner(x, y) {
            format!("{x}_{y}{}", if upper { "u" } else { "l" })
        } else {
            lattice_id(x, y)
        }
    };
    for y in 0..=w {
        for x in 0..=w {
            if x < w {
                if on_slit(x, y) && on_slit(x + 1, y) {
                    if slit_len == 1 {
                        s.edge(lattice_id(x, y), lattice_id(x + 1, y), 1.0);
                    } else {
                        s.edge(copy(x, y, true), copy(x + 1, y, true), 0.5);
                        s.edge(copy(x, y, false), copy(x + 1, y, false), 0.5);
                    }
                } else {
                    s.edge(lattice_id(x, y), lattice_id(x + 1, y), 1.0);
                }
            }
            if y < w {
                // the edge leaves (x, y) upward and enters (x, y+1) from below
                s.edge(copy(x, y, true), copy(x, y + 1, false), 1.0);
            }
        }
    }
    let net = s.build()?;
    let geom = BoundaryGeometry::graph_metric(&net, 1.0, RadiusGrid::Integer)?;
    let nb = net.boundary().len();
    let mirror = (0..net.vertex_count())
        .map(|v| {
            let id = net.id(v);
            let c = net.coord(v).unwrap();
            let (x, y) = (c[0] as usize, c[1] as usize);
            let suffix = &id[lattice_id(x, y).len()..];
            net.index_of(&format!("{}{}", lattice_id(w - x, y), suffix)).unwrap()
        })
        .collect();
    Ok(GeneratedDomain {
        label: format!("grid-slit-{w}-{slit_len}"),
        level: None,
        pole: net.index_of(&lattice_id(w / 2, w))?,
        net,
        geom,
        sigma_uniform: uniform(nb, 1.0),
        mirror: Some(mirror),
    })
}

/// Comb with `teeth` boundary leaves hanging from a unit-conductance spine;
/// tooth `i` has conductance `4^{i - teeth + 1}`. A handle of `teeth` unit
/// edges rises from the last spine vertex to the pole.
pub fn gen_skewed_comb(teeth: usize) -> Result<GeneratedDomain> {
    if teeth < 4 {
        return Err(Error::BadDimensions(format!("comb needs at least 4 teeth, got {teeth}")));
    }
    let mut s = NetworkSpec::default();
    for i in 0..teeth {
        s.vertex(format!("s{i}"), 1.0, false);
        s.vertex(format!("b{i}"), 0.0, true);
        s.edge(format!("s{i}"), format!("b{i}"), 4f64.powi(i as i32 - teeth as i32 + 1));
        if i > 0 {
            s.edge(format!("s{}", i - 1), format!("s{i}"), 1.0);
        }
    }
    let mut prev = format!("s{}", teeth - 1);
    for k in 0..teeth {
        let id = format!("h{k}");
        s.vertex(id.clone(), 1.0, false);
        s.edge(prev, id.clone(), 1.0);
        prev = id;
    }
    let net = s.build()?;
    let nb = teeth;
    let rho = DMatrix::from_fn(nb, nb, |a, b| (a as f64 - b as f64).abs());
    let labels = (0..nb).map(|i| format!("b{i}")).collect();
    let geom = BoundaryGeometry::with_boundary_metric(&net, rho, 1.0, RadiusGrid::Integer, labels)?;
    Ok(GeneratedDomain {
        label: format!("skewed-comb-{teeth}"),
        level: None,
        pole: net.index_of(&prev)?,
        net,
        geom,
        sigma_uniform: uniform(nb, 1.0),
        mirror: None,
    })
}
