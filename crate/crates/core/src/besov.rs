//! Scale functions `Ψ`, the state-dependent scale `Θ(x, r) = Ψ(r)σ(B)/m₀(B)`,
//! Besov seminorms and the doubling / lower-scaling / comparability /
//! restriction diagnostics.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BallIndex, BoundaryGeometry};
use crate::network::ResistanceNetwork;
use crate::report::{grouped_exponent_fit, Record, Report};
use crate::trace::TraceForm;

/// Strictly increasing bijection `Ψ` of `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ScaleFunction {
    /// `Ψ(r) = r^exponent`.
    Power { exponent: f64 },
    /// Piecewise power interpolation of `(r, Ψ(r))` samples; extended by
    /// the end-segment powers outside the table.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

impl ScaleFunction {
    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(Error::InvalidParameter(format!("scale exponent {exponent} must be positive")));
        }
        Ok(ScaleFunction::Power { exponent })
    }

    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() < 2 || radii.len() != values.len() {
            return Err(Error::InvalidParameter("table needs ≥ 2 matching (r, Ψ) samples".into()));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]) && v[0] > 0.0;
        if !increasing(&radii) || !increasing(&values) {
            return Err(Error::InvalidParameter("Ψ table must be positive and strictly increasing".into()));
        }
        Ok(ScaleFunction::Tabulated { radii, values })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            ScaleFunction::Power { exponent } => r.powf(*exponent),
            ScaleFunction::Tabulated { radii, values } => {
                let k = radii.partition_point(|&x| x <= r).clamp(1, radii.len() - 1);
                let (r0, r1, v0, v1) = (radii[k - 1], radii[k], values[k - 1], values[k]);
                let slope = (v1 / v0).ln() / (r1 / r0).ln();
                v0 * (r / r0).powf(slope)
            }
        }
    }

    /// `(C_Ψ, β₁, β₂)` with `C_Ψ⁻¹(R/r)^β₁ ≤ Ψ(R)/Ψ(r) ≤ C_Ψ(R/r)^β₂`.
    pub fn doubling_constants(&self) -> (f64, f64, f64) {
        match self {
            ScaleFunction::Power { exponent } => (1.0, *exponent, *exponent),
            ScaleFunction::Tabulated { radii, values } => {
                let slopes: Vec<f64> = (1..radii.len())
                    .map(|k| (values[k] / values[k - 1]).ln() / (radii[k] / radii[k - 1]).ln())
                    .collect();
                let lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (1.0, lo, hi)
            }
        }
    }
}

/// Radii at or below this many edge lengths are resolution artifacts (a
/// ball then sees only the first layer of interior vertices) and are
/// excluded from scale fits.
pub const RESOLUTION_CELLS: f64 = 2.0;

/// Grid radii in `(RESOLUTION_CELLS · edge length, diam/2]`.
pub fn admissible_radii(geom: &BoundaryGeometry) -> Vec<f64> {
    geom.grid().radii(RESOLUTION_CELLS * geom.edge_length(), 0.5 * geom.diam())
}

/// `Θ_{Ψ,σ}` over a domain's boundary geometry.
#[derive(Debug, Clone)]
pub struct ThetaField<'a> {
    psi: ScaleFunction,
    sigma: Vec<f64>,
    sigma_index: BallIndex,
    m0_index: BallIndex,
    geom: &'a BoundaryGeometry,
}

impl<'a> ThetaField<'a> {
    /// `sigma` is indexed by boundary position, `m0` by vertex.
    pub fn new(psi: ScaleFunction, sigma: &[f64], m0: &[f64], geom: &'a BoundaryGeometry) -> Result<Self> {
        let nb = geom.boundary_len();
        if sigma.len() != nb {
            return Err(Error::DimensionMismatch {
                expected: nb,
                got: sigma.len(),
            });
        }
        if let Some(k) = sigma.iter().position(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::ZeroMass(k));
        }
        Ok(Self {
            sigma_index: geom.boundary_ball_index(sigma),
            m0_index: geom.vertex_ball_index(m0),
            sigma: sigma.to_vec(),
            psi,
            geom,
        })
    }

    pub fn from_network(
        psi: ScaleFunction,
        sigma: &[f64],
        net: &ResistanceNetwork,
        geom: &'a BoundaryGeometry,
    ) -> Result<Self> {
        Self::new(psi, sigma, net.m0(), geom)
    }

    pub fn psi(&self) -> &ScaleFunction {
        &self.psi
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn geom(&self) -> &'a BoundaryGeometry {
        self.geom
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// `σ(B(x, r))` over boundary positions.
    pub fn sigma_ball(&self, x: usize, r: f64) -> f64 {
        self.sigma_index.mass(x, r)
    }

    /// `m₀(B(x, r))` over interior vertices.
    pub fn m0_ball(&self, x: usize, r: f64) -> f64 {
        self.m0_index.mass(x, r)
    }

    pub fn theta(&self, x: usize, r: f64) -> Result<f64> {
        let m = self.m0_ball(x, r);
        if !(m > 0.0) {
            return Err(Error::EmptyBall { x, r });
        }
        Ok(self.psi.eval(r) * self.sigma_ball(x, r) / m)
    }

    /// Admissible radius grid: `(RESOLUTION_CELLS · edge length, diam/2]`.
    pub fn radii(&self) -> Vec<f64> {
        admissible_radii(self.geom)
    }

    /// `Θ⁻¹(x, t)` from the monotone upper envelope of `Θ(x, ·)` on the
    /// admissible grid: the smallest grid radius whose envelope reaches
    /// `t` (the largest radius if none does).
    pub fn theta_inverse(&self, x: usize, t: f64) -> Result<f64> {
        let radii = self.radii();
        let mut envelope = 0.0f64;
        for &r in &radii {
            envelope = envelope.max(self.theta(x, r)?);
            if envelope >= t {
                return Ok(r);
            }
        }
        radii.last().copied().ok_or(Error::InsufficientScales { needed: 1, found: 0 })
    }
}

/// Precomputed weights `σ_xσ_y / (σ(B(x,d))·Θ(x,d))`, `d = ρ(x,y)`, of the
/// Besov double sum over ordered pairs `x ≠ y`.
#[derive(Debug, Clone)]
pub struct BesovKernel {
    weights: DMatrix<f64>,
}

impl BesovKernel {
    pub fn new(field: &ThetaField<'_>) -> Result<Self> {
        let nb = field.len();
        let geom = field.geom();
        let mut weights = DMatrix::zeros(nb, nb);
        for x in 0..nb {
            for y in 0..nb {
                if x == y {
                    continue;
                }
                let d = geom.rho(x, y);
                let denom = field.sigma_ball(x, d) * field.theta(x, d)?;
                weights[(x, y)] = field.sigma()[x] * field.sigma()[y] / denom;
            }
        }
        Ok(Self { weights })
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.weights[(x, y)]
    }

    /// `⟦u⟧²`.
    pub fn seminorm_sq(&self, u: &[f64]) -> Result<f64> {
        let nb = self.weights.nrows();
        if u.len() != nb {
            return Err(Error::DimensionMismatch {
                expected: nb,
                got: u.len(),
            });
        }
        let mut s = 0.0;
        for x in 0..nb {
            for y in 0..nb {
                if x != y {
                    s += (u[x] - u[y]).powi(2) * self.weights[(x, y)];
                }
            }
        }
        Ok(s)
    }
}

/// `⟦u⟧²_{Λ_{Ψ,σ}}` with closed balls at radius `ρ(x, y)`.
pub fn besov_seminorm(u: &[f64], field: &ThetaField<'_>) -> Result<f64> {
    BesovKernel::new(field)?.seminorm_sq(u)
}

/// `‖u‖²_{L²(σ)}`.
pub fn l2_sq(u: &[f64], sigma: &[f64]) -> f64 {
    u.iter().zip(sigma).map(|(a, s)| a * a * s).sum()
}

/// Volume doubling: `max σ(B(x,2r))/σ(B(x,r))` over boundary points and
/// grid radii; `stats` carries the per-scale maxima.
pub fn vd_report(sigma: &[f64], geom: &BoundaryGeometry) -> Result<Report> {
    if let Some(k) = sigma.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::ZeroMass(k));
    }
    let index = geom.boundary_ball_index(sigma);
    let radii = geom.radii(0.5 * geom.diam());
    let mut records = Vec::new();
    let mut per_scale = Vec::new();
    for &r in &radii {
        let mut worst: f64 = 0.0;
        for x in 0..geom.boundary_len() {
            let rec = Record::new(geom.label(x), r, index.mass(x, 2.0 * r), index.mass(x, r));
            worst = worst.max(rec.ratio);
            records.push(rec);
        }
        per_scale.push((r, worst));
    }
    let mut rep = Report::from_records("vd", records);
    for (r, w) in per_scale {
        rep = rep.with_stat(format!("max@{r:.6e}"), w);
    }
    let c = rep.max;
    Ok(rep.with_stat("C_VD", c))
}

/// Lower scaling: fixed-effects log-log slope `β` of `Θ(x, ·)` and the
/// largest `C` with `Θ(x,R)/Θ(x,r) ≥ C (R/r)^β` over admissible pairs.
pub fn ls_report(field: &ThetaField<'_>) -> Result<Report> {
    let radii = field.radii();
    if radii.len() < 3 {
        return Err(Error::InsufficientScales {
            needed: 3,
            found: radii.len(),
        });
    }
    let mut table = Vec::with_capacity(field.len());
    for x in 0..field.len() {
        let row: Vec<(f64, f64)> = radii.iter().map(|&r| Ok((r, field.theta(x, r)?))).collect::<Result<_>>()?;
        table.push(row);
    }
    let fit = grouped_exponent_fit(&table)?;
    let mut records = Vec::new();
    for (x, row) in table.iter().enumerate() {
        for i in 0..row.len() {
            for j in i + 1..row.len() {
                let (r, tr) = row[i];
                let (big_r, t_big) = row[j];
                records.push(Record::new(
                    field.geom().label(x),
                    big_r / r,
                    t_big / tr,
                    (big_r / r).powf(fit.exponent),
                ));
            }
        }
    }
    let rep = Report::from_records("ls", records).with_fit(fit);
    let c = rep.min;
    Ok(rep.with_stat("beta", fit.exponent).with_stat("C", c))
}

/// `Ě(u)/⟦u⟧²` (conservative) or `Ě(u)/(⟦u⟧² + ‖u‖²_{L²(σ)})` (transient)
/// over sample functions.
pub fn comparability_report(tf: &TraceForm, samples: &[Vec<f64>], field: &ThetaField<'_>) -> Result<Report> {
    let kernel = BesovKernel::new(field)?;
    comparability_report_with(tf, samples, &kernel, field.sigma())
}

/// [`comparability_report`] against a prebuilt kernel.
pub fn comparability_report_with(
    tf: &TraceForm,
    samples: &[Vec<f64>],
    kernel: &BesovKernel,
    sigma: &[f64],
) -> Result<Report> {
    let transient = tf.provenance().ghost;
    let mut records = Vec::with_capacity(samples.len());
    for (k, u) in samples.iter().enumerate() {
        let e = tf.energy(u)?;
        let mut b = kernel.seminorm_sq(u)?;
        if transient {
            b += l2_sq(u, sigma);
        }
        if !(b > 0.0) {
            return Err(Error::DegenerateSample(format!("sample {k} has zero Besov norm")));
        }
        records.push(Record::new(format!("sample{k}"), 1.0, e, b));
    }
    Ok(Report::from_records("comparability", records))
}

/// `max ‖f|∂‖²_{L²(σ)} / (Ē(f) + ‖f‖²_{L²(m₀)})` over vertex functions.
pub fn l2_restriction_report(net: &ResistanceNetwork, sigma: &[f64], samples: &[Vec<f64>]) -> Result<Report> {
    if sigma.len() != net.boundary().len() {
        return Err(Error::DimensionMismatch {
            expected: net.boundary().len(),
            got: sigma.len(),
        });
    }
    let mut records = Vec::with_capacity(samples.len());
    for (k, f) in samples.iter().enumerate() {
        let num = l2_sq(&net.restrict_to_boundary(f), sigma);
        let den = net.energy(f)? + f.iter().zip(net.m0()).map(|(v, m)| v * v * m).sum::<f64>();
        if !(den > 0.0) {
            return Err(Error::DegenerateSample(format!("sample {k} is identically zero")));
        }
        records.push(Record::new(format!("sample{k}"), 1.0, num, den));
    }
    Ok(Report::from_records("l2-restriction", records))
}

/// Seeded boundary test functions: a third i.i.d. Gaussian fields, a third
/// indicators of boundary balls (word cells on the gasket), a third random
/// Gaussian combinations of a few ball indicators. Constants are skipped.
pub fn boundary_samples(geom: &BoundaryGeometry, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let nb = geom.boundary_len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radii = geom.radii(0.5 * geom.diam());
    let ball = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        loop {
            let x = rng.random_range(0..nb);
            let r = if radii.is_empty() {
                0.0
            } else {
                radii[rng.random_range(0..radii.len())]
            };
            let members = geom.boundary_ball(x, r);
            if members.len() < nb {
                let mut u = vec![0.0; nb];
                for b in members {
                    u[b] = 1.0;
                }
                return u;
            }
        }
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = match out.len() % 3 {
            0 => (0..nb).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
            1 => ball(&mut rng),
            _ => {
                let mut u = vec![0.0; nb];
                for _ in 0..4 {
                    let a: f64 = rng.sample(StandardNormal);
                    for (ui, bi) in u.iter_mut().zip(ball(&mut rng)) {
                        *ui += a * bi;
                    }
                }
                u
            }
        };
        if u.iter().any(|&v| (v - u[0]).abs() > 0.0) {
            out.push(u);
        }
    }
    out
}
