//! Kron (Schur) reduction onto the boundary: the trace form `Ě`, its jump
//! conductances `ĉ` and killing weights `κ`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dense_schur_complement, SolverConfig};
use crate::network::ResistanceNetwork;
use crate::potential::DirichletSolver;

/// Relative magnitude below which computed off-diagonals are set to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-13;
/// Relative tolerance of the energy identity `Ě(u) = Ē(Hu)`.
pub const ENERGY_IDENTITY_TOLERANCE: f64 = 1e-10;
const IDENTITY_SAMPLES: usize = 10;
const IDENTITY_SEED: u64 = 0x0074_7261_6365;

/// Where a trace form came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    /// Source network has a ghost (is transient).
    pub ghost: bool,
    pub tolerance: f64,
}

/// The trace form on a finite boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceForm {
    boundary: Vec<String>,
    /// Symmetric jump conductances with zero diagonal.
    jumps: DMatrix<f64>,
    kappa: Vec<f64>,
    measure: Vec<f64>,
    provenance: Provenance,
}

impl TraceForm {
    /// Builds a trace form from `ĉ` and `κ`; the reference measure defaults
    /// to the normalized uniform measure.
    pub fn new(boundary: Vec<String>, jumps: DMatrix<f64>, kappa: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let nb = boundary.len();
        if jumps.nrows() != nb || jumps.ncols() != nb || kappa.len() != nb {
            return Err(Error::DimensionMismatch {
                expected: nb,
                got: jumps.nrows(),
            });
        }
        for x in 0..nb {
            if !(kappa[x] >= 0.0) || !kappa[x].is_finite() {
                return Err(Error::NegativeKilling { x, value: kappa[x] });
            }
            for y in 0..nb {
                let c = jumps[(x, y)];
                if !c.is_finite() {
                    return Err(Error::NonFinite);
                }
                if x != y && c < 0.0 {
                    return Err(Error::NegativeOffDiagonal { x, y, value: -c });
                }
            }
        }
        let mut jumps = jumps;
        jumps.fill_diagonal(0.0);
        Ok(Self {
            measure: vec![1.0 / nb as f64; nb],
            boundary,
            jumps,
            kappa,
            provenance,
        })
    }

    /// Replaces the reference measure (indexed by boundary position).
    pub fn with_measure(mut self, measure: &[f64]) -> Result<Self> {
        check_measure(measure, self.len())?;
        self.measure = measure.to_vec();
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn boundary(&self) -> &[String] {
        &self.boundary
    }

    /// `ĉ_{xy}` (0 on the diagonal).
    pub fn jump(&self, x: usize, y: usize) -> f64 {
        self.jumps[(x, y)]
    }

    pub fn jumps(&self) -> &DMatrix<f64> {
        &self.jumps
    }

    /// Ordered-pair jump kernel `J_{xy} = ĉ_{xy}/2`.
    pub fn jump_kernel(&self, x: usize, y: usize) -> f64 {
        0.5 * self.jumps[(x, y)]
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// `Cap₀(∂) = Ě(1, 1) = Σκ`.
    pub fn total_killing(&self) -> f64 {
        self.kappa.iter().sum()
    }

    /// The matrix `Ľ` reassembled from `ĉ` and `κ`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let nb = self.len();
        let mut m = -self.jumps.clone();
        for x in 0..nb {
            m[(x, x)] = self.kappa[x] + self.jumps.row(x).sum();
        }
        m
    }

    /// `Ě(u, u) = Σ_{pairs} ĉ (u_x − u_y)² + Σ κ u²`.
    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        self.energy_form(u, u)
    }

    pub fn energy_form(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let nb = self.len();
        for w in [u, v] {
            if w.len() != nb {
                return Err(Error::DimensionMismatch {
                    expected: nb,
                    got: w.len(),
                });
            }
        }
        let mut s = 0.0;
        for x in 0..nb {
            for y in x + 1..nb {
                let c = self.jumps[(x, y)];
                if c > 0.0 {
                    s += c * (u[x] - u[y]) * (v[x] - v[y]);
                }
            }
            s += self.kappa[x] * u[x] * v[x];
        }
        Ok(s)
    }

    /// Effective resistance between boundary positions `a ≠ b` in the trace
    /// network: the reciprocal of the minimal `Ě(u)` with `u(a)=1, u(b)=0`.
    pub fn effective_resistance(&self, a: usize, b: usize) -> Result<f64> {
        if a == b || a >= self.len() || b >= self.len() {
            return Err(Error::BadSet(format!("resistance needs two distinct points, got {a},{b}")));
        }
        let elim: Vec<usize> = (0..self.len()).filter(|&k| k != a && k != b).collect();
        let m = dense_schur_complement(&self.matrix(), &[a, b], &elim)?;
        if !(m[(0, 0)] > 0.0) {
            return Err(Error::ZeroCapacity);
        }
        Ok(1.0 / m[(0, 0)])
    }

    pub fn to_json(&self) -> TraceFormJson {
        let nb = self.len();
        let mut jumps = Vec::new();
        for x in 0..nb {
            for y in x + 1..nb {
                let c = self.jumps[(x, y)];
                if c > 0.0 {
                    jumps.push(JumpJson {
                        x: self.boundary[x].clone(),
                        y: self.boundary[y].clone(),
                        c,
                    });
                }
            }
        }
        TraceFormJson {
            boundary: self.boundary.clone(),
            jumps,
            kappa: self.boundary.iter().cloned().zip(self.kappa.iter().copied()).collect(),
            measure: self.boundary.iter().cloned().zip(self.measure.iter().copied()).collect(),
            provenance: Some(self.provenance.clone()),
        }
    }

    pub fn from_json(json: &TraceFormJson) -> Result<Self> {
        let nb = json.boundary.len();
        let index: BTreeMap<&str, usize> = json.boundary.iter().enumerate().map(|(k, id)| (id.as_str(), k)).collect();
        if index.len() != nb {
            return Err(Error::Json("duplicate boundary id".into()));
        }
        let lookup = |id: &str| index.get(id).copied().ok_or_else(|| Error::UnknownVertex(id.to_string()));
        let mut jumps = DMatrix::zeros(nb, nb);
        for j in &json.jumps {
            let (x, y) = (lookup(&j.x)?, lookup(&j.y)?);
            if x == y {
                return Err(Error::SelfLoop(j.x.clone()));
            }
            jumps[(x, y)] = j.c;
            jumps[(y, x)] = j.c;
        }
        let per_vertex = |map: &BTreeMap<String, f64>, what: &str| -> Result<Vec<f64>> {
            let mut out = vec![f64::NAN; nb];
            for (id, &v) in map {
                out[lookup(id)?] = v;
            }
            if out.iter().any(|v| v.is_nan()) {
                return Err(Error::Json(format!("{what} misses a boundary vertex")));
            }
            Ok(out)
        };
        let kappa = per_vertex(&json.kappa, "kappa")?;
        let measure = per_vertex(&json.measure, "measure")?;
        let provenance = json.provenance.clone().unwrap_or(Provenance {
            ghost: kappa.iter().any(|&k| k > 0.0),
            tolerance: SolverConfig::default().tolerance,
        });
        Self::new(json.boundary.clone(), jumps, kappa, provenance)?.with_measure(&measure)
    }
}

fn check_measure(measure: &[f64], nb: usize) -> Result<()> {
    if measure.len() != nb {
        return Err(Error::DimensionMismatch {
            expected: nb,
            got: measure.len(),
        });
    }
    if let Some(k) = measure.iter().position(|&m| !(m > 0.0) || !m.is_finite()) {
        return Err(Error::ZeroMass(k));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpJson {
    pub x: String,
    pub y: String,
    pub c: f64,
}

/// Serialized trace form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFormJson {
    pub boundary: Vec<String>,
    pub jumps: Vec<JumpJson>,
    pub kappa: BTreeMap<String, f64>,
    pub measure: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Dense Schur complement of the network Laplacian onto `keep` (in the
/// given order), computed one harmonic extension per kept vertex.
pub fn schur_complement_onto(net: &ResistanceNetwork, keep: &[usize], config: &SolverConfig) -> Result<DMatrix<f64>> {
    let n = net.vertex_count();
    let mut kept = vec![false; n];
    for &v in keep {
        if v >= n || kept[v] {
            return Err(Error::BadSet("keep set has out-of-range or repeated vertices".into()));
        }
        kept[v] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&v| !kept[v]).collect();
    let solver = DirichletSolver::new(net, free, config)?;
    let laplacian = net.laplacian();
    let columns: Vec<Vec<f64>> = keep
        .par_iter()
        .map(|&b| {
            let mut values = vec![0.0; n];
            values[b] = 1.0;
            let f = solver.extend(&values)?;
            let lf = laplacian.apply(&f);
            Ok(keep.iter().map(|&a| lf[a]).collect())
        })
        .collect::<Result<_>>()?;
    let k = keep.len();
    let mut m = DMatrix::from_fn(k, k, |a, b| columns[b][a]);
    // symmetrize away solver round-off
    for a in 0..k {
        for b in a + 1..k {
            let s = 0.5 * (m[(a, b)] + m[(b, a)]);
            m[(a, b)] = s;
            m[(b, a)] = s;
        }
    }
    Ok(m)
}

/// Splits `Ľ` into `ĉ` and `κ`, clamping round-off of the provable sign
/// pattern and rejecting violations beyond it.
pub fn decompose(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let nb = m.nrows();
    let mut jumps = DMatrix::zeros(nb, nb);
    for x in 0..nb {
        for y in 0..nb {
            if x == y {
                continue;
            }
            let scale = (m[(x, x)].abs() * m[(y, y)].abs()).sqrt();
            let c = -m[(x, y)];
            if c.abs() <= CLAMP_TOLERANCE * scale {
                continue;
            }
            if c < 0.0 {
                return Err(Error::NegativeOffDiagonal { x, y, value: -c });
            }
            jumps[(x, y)] = c;
        }
    }
    let mut kappa = Vec::with_capacity(nb);
    for x in 0..nb {
        let k = m.row(x).sum();
        let scale = m[(x, x)].abs();
        if k < 0.0 {
            if -k > ENERGY_IDENTITY_TOLERANCE * scale {
                return Err(Error::NegativeKilling { x, value: k });
            }
            kappa.push(0.0);
        } else {
            kappa.push(k);
        }
    }
    Ok((jumps, kappa))
}

/// The trace form of `net` on its boundary. Verifies `Ě(u) = Ē(Hu)` on
/// ten seeded random boundary functions before returning.
pub fn schur_trace(net: &ResistanceNetwork, config: &SolverConfig) -> Result<TraceForm> {
    if net.interior().is_empty() {
        return Err(Error::EmptyInterior);
    }
    if net.boundary().is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let m = schur_complement_onto(net, net.boundary(), config)?;
    let (jumps, kappa) = decompose(&m)?;
    let ids = net.boundary().iter().map(|&v| net.id(v).to_string()).collect();
    let tf = TraceForm::new(
        ids,
        jumps,
        kappa,
        Provenance {
            ghost: net.has_ghost(),
            tolerance: config.tolerance,
        },
    )?;

    let solver = DirichletSolver::interior(net, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(IDENTITY_SEED);
    for _ in 0..IDENTITY_SAMPLES {
        let u: Vec<f64> = (0..tf.len()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let hu = solver.extend(&net.lift_boundary(&u)?)?;
        let lhs = tf.energy(&u)?;
        let rhs = net.energy(&hu)?;
        let dev = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
        if !(dev <= ENERGY_IDENTITY_TOLERANCE) {
            return Err(Error::TraceMismatch(dev));
        }
    }
    Ok(tf)
}

/// `ĉ_{ij} = c_i c_j / Σc`, `κ = 0`, on leaves `x1…xn`.
pub fn star_closed_form(c: &[f64]) -> Result<TraceForm> {
    if c.len() < 2 {
        return Err(Error::BadDimensions(format!("star needs at least 2 leaves, got {}", c.len())));
    }
    if let Some(k) = c.iter().position(|&ci| !(ci > 0.0) || !ci.is_finite()) {
        return Err(Error::NonpositiveConductance {
            u: "o".into(),
            v: format!("x{}", k + 1),
            c: c[k],
        });
    }
    let n = c.len();
    let total: f64 = c.iter().sum();
    let jumps = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { c[i] * c[j] / total });
    TraceForm::new(
        (1..=n).map(|i| format!("x{i}")).collect(),
        jumps,
        vec![0.0; n],
        Provenance {
            ghost: false,
            tolerance: 0.0,
        },
    )
}

/// Maximum entrywise relative deviation between the one-step trace and the
/// trace taken in two stages through `mid ⊇ ∂`.
pub fn tower_check(net: &ResistanceNetwork, mid: &[usize], config: &SolverConfig) -> Result<f64> {
    let mut in_mid = vec![false; net.vertex_count()];
    for &v in mid {
        in_mid[v] = true;
    }
    if net.boundary().iter().any(|&b| !in_mid[b]) {
        return Err(Error::BadSet("intermediate set does not contain the boundary".into()));
    }
    // order: boundary first, then the intermediate interior vertices
    let mut staged: Vec<usize> = net.boundary().to_vec();
    staged.extend(mid.iter().copied().filter(|&v| !net.is_boundary(v)));
    let one = schur_complement_onto(net, net.boundary(), config)?;
    let stage1 = schur_complement_onto(net, &staged, config)?;
    let nb = net.boundary().len();
    let keep: Vec<usize> = (0..nb).collect();
    let elim: Vec<usize> = (nb..staged.len()).collect();
    let two = dense_schur_complement(&stage1, &keep, &elim)?;
    Ok(max_relative_deviation(&one, &two))
}

/// Entrywise relative deviation with a floor of `1e-12·(diagonal scale)`.
pub fn max_relative_deviation(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            let scale = (a[(x, x)].abs() * a[(y, y)].abs()).sqrt();
            let denom = a[(x, y)].abs().max(b[(x, y)].abs()).max(1e-12 * scale);
            if denom > 0.0 {
                worst = worst.max((a[(x, y)] - b[(x, y)]).abs() / denom);
            }
        }
    }
    worst
}

/// Intermediate staging set: the boundary plus every interior vertex
/// adjacent to it.
pub fn boundary_layer(net: &ResistanceNetwork) -> Vec<usize> {
    let mut mid = vec![false; net.vertex_count()];
    for &b in net.boundary() {
        mid[b] = true;
        for &(w, _) in net.neighbors(b) {
            mid[w] = true;
        }
    }
    (0..net.vertex_count()).filter(|&v| mid[v]).collect()
}

/// Time-changed generator `D_ω⁻¹ Ľ`.
pub fn generator_matrix(tf: &TraceForm, omega: &[f64]) -> Result<DMatrix<f64>> {
    check_measure(omega, tf.len())?;
    let mut m = tf.matrix();
    for x in 0..tf.len() {
        let w = omega[x];
        m.row_mut(x).iter_mut().for_each(|v| *v /= w);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_grid_slit, gen_half_strip, gen_path, gen_sg_slit, gen_star, FarMode};

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn star_traces() {
        let tf = schur_trace(&gen_star(&[1.0, 1.0]).unwrap().net, &cfg()).unwrap();
        assert!(close(tf.jump(0, 1), 0.5, 1e-14));
        assert!(tf.kappa().iter().all(|&k| k == 0.0));

        let tf = schur_trace(&gen_star(&[1.0, 2.0, 3.0]).unwrap().net, &cfg()).unwrap();
        assert!(close(tf.jump(0, 1), 1.0 / 3.0, 1e-14));
        assert!(close(tf.jump(0, 2), 0.5, 1e-14));
        assert!(close(tf.jump(1, 2), 1.0, 1e-14));
        let closed = star_closed_form(&[1.0, 2.0, 3.0]).unwrap();
        assert!(max_relative_deviation(&tf.matrix(), &closed.matrix()) < 1e-13);
    }

    #[test]
    fn star_closed_form_row_sums() {
        let c = [0.5, 2.0, 7.0, 1.25];
        let tf = star_closed_form(&c).unwrap();
        let total: f64 = c.iter().sum();
        for i in 0..c.len() {
            let row: f64 = (0..c.len()).map(|j| tf.jump(i, j)).sum();
            assert!(close(row, c[i] * (1.0 - c[i] / total), 1e-14));
        }
        assert!(star_closed_form(&[1.0]).is_err());
    }

    #[test]
    fn path_traces_are_series_conductances() {
        let tf = schur_trace(&gen_path(2, None).unwrap().net, &cfg()).unwrap();
        assert!(close(tf.jump(0, 1), 0.5, 1e-14));
        let tf = schur_trace(&gen_path(5, None).unwrap().net, &cfg()).unwrap();
        assert!(close(tf.jump(0, 1), 0.2, 1e-14));
        let tf = schur_trace(&gen_path(2, Some(&[2.0, 2.0])).unwrap().net, &cfg()).unwrap();
        assert!(close(tf.jump(0, 1), 1.0, 1e-14));
        assert!(close(tf.effective_resistance(0, 1).unwrap(), 1.0, 1e-14));
    }

    #[test]
    fn trace_energy_examples() {
        let tf = schur_trace(&gen_path(2, None).unwrap().net, &cfg()).unwrap();
        assert!(close(tf.energy(&[0.0, 1.0]).unwrap(), 0.5, 1e-14));
        assert!(tf.energy(&[1.0, 1.0]).unwrap().abs() < 1e-15);
        assert!(tf.energy(&[1.0]).is_err());

        let d = gen_half_strip(8, 8, FarMode::Absorbing).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap();
        let ones = vec![1.0; tf.len()];
        assert!(close(tf.energy(&ones).unwrap(), tf.total_killing(), 1e-12));
        assert!(tf.total_killing() > 0.0);
    }

    #[test]
    fn conservativeness_and_killing() {
        let d = gen_half_strip(8, 8, FarMode::Reflecting).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap();
        let m = tf.matrix();
        let scale = (0..tf.len()).map(|x| m[(x, x)]).fold(0.0, f64::max);
        assert!(tf.kappa().iter().all(|&k| k <= 1e-10 * scale));
        assert!(!tf.provenance().ghost);

        let d = gen_half_strip(8, 8, FarMode::Absorbing).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap();
        assert!(tf.kappa().iter().any(|&k| k > 0.0));
        assert!(tf.provenance().ghost);
    }

    #[test]
    fn tower_property() {
        let d = gen_path(6, None).unwrap();
        let mid = vec![0, 3, 6];
        assert!(tower_check(&d.net, &mid, &cfg()).unwrap() <= 1e-10);
        let d = gen_star(&[1.0, 2.0, 3.0]).unwrap();
        let leaves = d.net.boundary().to_vec();
        assert!(tower_check(&d.net, &leaves, &cfg()).unwrap() <= 1e-10);
        let d = gen_sg_slit(3).unwrap();
        assert!(tower_check(&d.net, &boundary_layer(&d.net), &cfg()).unwrap() <= 1e-9);
        assert!(tower_check(&d.net, &[d.pole], &cfg()).is_err());
    }

    #[test]
    fn variational_identity() {
        let d = gen_sg_slit(3).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let u: Vec<f64> = (0..tf.len()).map(|_| rng.random::<f64>()).collect();
            let hu = crate::potential::harmonic_extension(&d.net, &u, &cfg()).unwrap();
            assert!(close(tf.energy(&u).unwrap(), d.net.energy(&hu).unwrap(), 1e-10));
        }
    }

    #[test]
    fn gasket_trace_mirror_symmetry() {
        let d = gen_sg_slit(3).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap();
        let m = d.mirror.as_ref().unwrap();
        let b = d.net.boundary();
        for x in 0..tf.len() {
            let mx = d.net.position(m[b[x]]);
            for y in 0..tf.len() {
                let my = d.net.position(m[b[y]]);
                assert!(close(tf.jump(x, y), tf.jump(mx, my), 1e-11));
            }
        }
        assert!((0..tf.len()).all(|x| (0..tf.len()).all(|y| x == y || tf.jump(x, y) > 0.0)));
    }

    #[test]
    fn generator_matrix_examples() {
        let tf = schur_trace(&gen_star(&[1.0, 1.0]).unwrap().net, &cfg()).unwrap();
        let a = generator_matrix(&tf, &[0.5, 0.5]).unwrap();
        assert!(close(a[(0, 1)], -1.0, 1e-14) && close(a[(0, 0)], 1.0, 1e-14));
        assert!(matches!(generator_matrix(&tf, &[0.5, 0.0]), Err(Error::ZeroMass(1))));

        let d = gen_half_strip(8, 8, FarMode::Absorbing).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap();
        let w: Vec<f64> = (0..tf.len()).map(|k| 1.0 + k as f64).collect();
        let a = generator_matrix(&tf, &w).unwrap();
        for x in 0..tf.len() {
            assert!(close(a.row(x).sum(), tf.kappa()[x] / w[x], 1e-10));
            for y in 0..tf.len() {
                assert!(close(w[x] * a[(x, y)], w[y] * a[(y, x)], 1e-12));
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let d = gen_grid_slit(12, 4).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap().with_measure(d.sigma_uniform.masses()).unwrap();
        let text = serde_json::to_string(&tf.to_json()).unwrap();
        let back: TraceFormJson = serde_json::from_str(&text).unwrap();
        assert_eq!(TraceForm::from_json(&back).unwrap(), tf);
        assert!(serde_json::from_str::<TraceFormJson>(r#"{"boundary":[],"jumps":[],"kappa":{},"measure":{},"extra":1}"#).is_err());
    }
}
