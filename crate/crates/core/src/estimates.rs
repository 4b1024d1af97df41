//! Two-sided estimate diagnostics: harmonic-measure and capacity doubling,
//! capacity density, Green function vs harmonic measure, jump kernel,
//! killing measure, exit times and the trace heat kernel.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::besov::{ThetaField, RESOLUTION_CELLS};
use crate::error::{Error, Result};
use crate::geometry::{within, BoundaryGeometry};
use crate::linalg::SolverConfig;
use crate::network::ResistanceNetwork;
use crate::potential::{capacity, green_solver, harmonic_measure_with, DirichletSolver};
use crate::report::{grouped_exponent_fit, Record, Report};
use crate::trace::TraceForm;

pub use crate::report::{exponent_fit, Fit};

/// Tolerance for "κ vanishes" on ghost-free sources, relative to `max Ľ_xx`.
pub const KILLING_TOLERANCE: f64 = 1e-10;

/// Harmonic measure from `x0`, indexed by boundary position.
pub fn harmonic_measure_from(net: &ResistanceNetwork, x0: usize, config: &SolverConfig) -> Result<Vec<f64>> {
    let solver = DirichletSolver::interior(net, config)?;
    harmonic_measure_with(&solver, x0)
}

fn ball_mass(geom: &BoundaryGeometry, mass: &[f64], x: usize, r: f64) -> f64 {
    (0..geom.boundary_len())
        .filter(|&b| within(geom.rho(x, b), r))
        .map(|b| mass[b])
        .sum()
}

fn boundary_vertices(net: &ResistanceNetwork, positions: &[usize]) -> Vec<usize> {
    positions.iter().map(|&a| net.boundary()[a]).collect()
}

/// `ω_{x0}(B(x,2r)) / ω_{x0}(B(x,r))` over boundary `x`, grid radii with
/// `r ≤ diam/8` and `r < d(x, x0)/4`, for every pole `x0`.
pub fn hm_doubling_report(
    net: &ResistanceNetwork,
    geom: &BoundaryGeometry,
    poles: &[usize],
    config: &SolverConfig,
) -> Result<Report> {
    let solver = DirichletSolver::interior(net, config)?;
    let radii = geom.radii(geom.diam() / 8.0);
    let mut records = Vec::new();
    for &x0 in poles {
        let omega = harmonic_measure_with(&solver, x0)?;
        for x in 0..geom.boundary_len() {
            let reach = geom.to_vertex(x, x0);
            for &r in radii.iter().filter(|&&r| r < reach / 4.0) {
                records.push(Record::new(
                    format!("{}@{}", geom.label(x), net.id(x0)),
                    r,
                    ball_mass(geom, &omega, x, 2.0 * r),
                    ball_mass(geom, &omega, x, r),
                ));
            }
        }
    }
    if records.is_empty() {
        return Err(Error::NoAdmissibleScales("harmonic-measure doubling".into()));
    }
    let rep = Report::from_records("hm-doubling", records);
    let c = rep.max;
    Ok(rep.with_stat("C", c))
}

/// `Cap(B(x,2r)∩∂, B(x,4r)) / Cap(B(x,r)∩∂, B(x,4r))` for `r ≤ diam/8`.
pub fn cap_doubling_report(net: &ResistanceNetwork, geom: &BoundaryGeometry, config: &SolverConfig) -> Result<Report> {
    let radii = geom.radii(geom.diam() / 8.0);
    let grid: Vec<(usize, f64)> = (0..geom.boundary_len())
        .flat_map(|x| radii.iter().map(move |&r| (x, r)))
        .collect();
    if grid.is_empty() {
        return Err(Error::NoAdmissibleScales("capacity doubling".into()));
    }
    let records: Vec<Record> = grid
        .par_iter()
        .map(|&(x, r)| {
            let o2 = geom.vertex_ball(net, x, 4.0 * r);
            let big = capacity(net, &boundary_vertices(net, &geom.boundary_ball(x, 2.0 * r)), &o2, config)?;
            let small = capacity(net, &boundary_vertices(net, &geom.boundary_ball(x, r)), &o2, config)?;
            Ok(Record::new(geom.label(x), r, big, small))
        })
        .collect::<Result<_>>()?;
    let rep = Report::from_records("cap-doubling", records);
    let c = rep.max;
    Ok(rep.with_stat("C", c))
}

/// `Cap(B(x,r)∩∂, B(x,2r)) · Ψ(r) / m₀(B(x,r))` for `r < diam/3`; the
/// reported constant is the minimum.
pub fn cap_density_report(
    net: &ResistanceNetwork,
    geom: &BoundaryGeometry,
    field: &ThetaField<'_>,
    config: &SolverConfig,
) -> Result<Report> {
    let radii: Vec<f64> = geom.radii(geom.diam() / 3.0).into_iter().filter(|&r| r < geom.diam() / 3.0).collect();
    let grid: Vec<(usize, f64)> = (0..geom.boundary_len())
        .flat_map(|x| radii.iter().map(move |&r| (x, r)))
        .collect();
    if grid.is_empty() {
        return Err(Error::NoAdmissibleScales("capacity density".into()));
    }
    let records: Vec<Record> = grid
        .par_iter()
        .map(|&(x, r)| {
            let o2 = geom.vertex_ball(net, x, 2.0 * r);
            let cap = capacity(net, &boundary_vertices(net, &geom.boundary_ball(x, r)), &o2, config)?;
            let m = field.m0_ball(x, r);
            if !(m > 0.0) {
                return Err(Error::EmptyBall { x, r });
            }
            Ok(Record::new(geom.label(x), r, cap * field.psi().eval(r), m))
        })
        .collect::<Result<_>>()?;
    let rep = Report::from_records("cap-density", records);
    let c = rep.min;
    Ok(rep.with_stat("C", c))
}

/// Minimal witness depth relative to the radius: `d_D(y) ≥ r / WITNESS_DEPTH`.
pub const WITNESS_DEPTH: f64 = 8.0;

/// Witness for `(x, r)`: the interior vertex of `B(x,r)` whose depth is
/// closest to `r/2` (nearest to `x` on ties), if it is at least `r/8` deep.
pub fn green_witness(net: &ResistanceNetwork, geom: &BoundaryGeometry, x: usize, r: f64) -> Option<usize> {
    let key = |v: usize| ((geom.d_boundary(v) - 0.5 * r).abs(), geom.to_vertex(x, v), v);
    net.interior()
        .iter()
        .copied()
        .filter(|&v| within(geom.to_vertex(x, v), r) && geom.d_boundary(v) >= r / WITNESS_DEPTH)
        .min_by(|&a, &b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.cmp(&kb.2))
        })
}

/// `ω_{x0}(B(x,r))·Ψ(r) / (g_D(x0,y)·m₀(B(x,r)))` with `x0` the given pole,
/// `d(x, x0) > 4r`, and `y` the [`green_witness`]; scales without a witness
/// are skipped and counted.
pub fn green_hm_report(
    net: &ResistanceNetwork,
    geom: &BoundaryGeometry,
    field: &ThetaField<'_>,
    x0: usize,
    config: &SolverConfig,
) -> Result<Report> {
    let solver = green_solver(net, net.interior(), config)?;
    let g = solver.green_column(x0)?;
    let omega = harmonic_measure_with(&solver, x0)?;
    let radii = geom.radii(geom.diam() / 2.0);
    let mut records = Vec::new();
    let mut skipped = 0usize;
    for x in 0..geom.boundary_len() {
        for &r in radii.iter().filter(|&&r| geom.to_vertex(x, x0) > 4.0 * r) {
            let Some(y) = green_witness(net, geom, x, r) else {
                skipped += 1;
                continue;
            };
            let m = field.m0_ball(x, r);
            records.push(Record::new(
                format!("{}~{}", geom.label(x), net.id(y)),
                r,
                ball_mass(geom, &omega, x, r) * field.psi().eval(r),
                g[y] * m,
            ));
        }
    }
    if records.is_empty() {
        return Err(Error::NoAdmissibleScales("green / harmonic measure".into()));
    }
    Ok(Report::from_records("green-hm", records).with_stat("skipped", skipped as f64))
}

/// `R(x,y) = (ĉ_{xy}/2)·ω(B(x,d))·Θ(x,d) / (ω_x ω_y)`, `d = ρ(x,y)`, over all
/// ordered pairs, plus the log-log fit of `ĉ` against `ρ` on `(2h, diam/2]`.
pub fn jump_kernel_report(tf: &TraceForm, omega: &[f64], field: &ThetaField<'_>) -> Result<Report> {
    let nb = tf.len();
    if omega.len() != nb {
        return Err(Error::DimensionMismatch {
            expected: nb,
            got: omega.len(),
        });
    }
    if let Some(k) = omega.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::ZeroMass(k));
    }
    let geom = field.geom();
    let mut records = Vec::with_capacity(nb * nb);
    for x in 0..nb {
        for y in 0..nb {
            if x == y {
                continue;
            }
            let d = geom.rho(x, y);
            let j = tf.jump_kernel(x, y);
            let scale = field.sigma_ball(x, d) * field.theta(x, d)? / (omega[x] * omega[y]);
            records.push(Record::new(format!("{}|{}", geom.label(x), geom.label(y)), d, j * scale, 1.0));
        }
    }
    let mut rep = Report::from_records("jump-kernel", records);
    if let Ok(fit) = jump_exponent_fit(tf, geom, 0.5 * geom.diam()) {
        rep = rep.with_fit(fit).with_stat("exponent", fit.exponent);
    }
    Ok(rep)
}

/// Log-log fit of `ĉ_{xy}` against `ρ(x,y)` over pairs with
/// `2h < ρ ≤ hi` (`h` the edge length; closer pairs are below resolution).
pub fn jump_exponent_fit(tf: &TraceForm, geom: &BoundaryGeometry, hi: f64) -> Result<Fit> {
    let lo = RESOLUTION_CELLS * geom.edge_length();
    let mut pairs = Vec::new();
    for x in 0..tf.len() {
        for y in x + 1..tf.len() {
            let rho = geom.rho(x, y);
            if tf.jump(x, y) > 0.0 && rho > lo * (1.0 + 1e-9) && within(rho, hi) {
                pairs.push((rho, tf.jump(x, y)));
            }
        }
    }
    exponent_fit(&pairs)
}

/// Killing diagnostics: on ghost-free sources `max κ ≤ 1e-10·max Ľ_xx`;
/// with a ghost, records of `κ_x ω(∂) / (ω_x Σκ)`.
pub fn killing_report(tf: &TraceForm, omega: &[f64]) -> Result<Report> {
    let nb = tf.len();
    if let Some(k) = omega.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::ZeroMass(k));
    }
    let m = tf.matrix();
    let scale = (0..nb).map(|x| m[(x, x)]).fold(0.0, f64::max);
    let max_kappa = tf.kappa().iter().copied().fold(0.0, f64::max);
    let total = tf.total_killing();
    let ones = vec![1.0; nb];
    let identity = (tf.energy(&ones)? - total).abs() / total.abs().max(f64::MIN_POSITIVE);
    if !tf.provenance().ghost {
        let records = vec![Record::new("max-kappa", 1.0, max_kappa, scale)];
        return Ok(Report::from_records("killing", records)
            .with_stat("max_kappa", max_kappa)
            .with_stat("scale", scale)
            .check("max_kappa/scale", KILLING_TOLERANCE, max_kappa <= KILLING_TOLERANCE * scale));
    }
    let w_total: f64 = omega.iter().sum();
    let records = (0..nb)
        .map(|x| Record::new(tf.boundary()[x].clone(), 1.0, tf.kappa()[x] * w_total, omega[x] * total))
        .collect();
    Ok(Report::from_records("killing", records)
        .with_stat("cap0", total)
        .with_stat("identity_deviation", identity))
}

/// Mean exit time `Ě_x[τ_B]` of the trace chain (speed measure `ω`) from
/// the boundary ball `B`: solves `Ľ|_B u = ω|_B`.
pub fn exit_time(tf: &TraceForm, omega: &[f64], x: usize, ball: &[usize]) -> Result<f64> {
    let pos = ball.iter().position(|&b| b == x).ok_or_else(|| Error::BadSet("center not in ball".into()))?;
    let m = tf.matrix().select_rows(ball).select_columns(ball);
    let rhs = DVector::from_iterator(ball.len(), ball.iter().map(|&b| omega[b]));
    let chol = m.cholesky().ok_or(Error::SingularBallSystem(x))?;
    Ok(chol.solve(&rhs)[pos])
}

/// `Ě_x[τ_{B(x,r)}] / Θ(x,r)` over boundary `x` and grid radii whose balls
/// have at least two points and a nonempty complement.
pub fn exit_time_report(tf: &TraceForm, omega: &[f64], field: &ThetaField<'_>) -> Result<Report> {
    let geom = field.geom();
    let nb = tf.len();
    let radii = geom.radii(geom.diam() / 2.0);
    let grid: Vec<(usize, f64)> = (0..nb).flat_map(|x| radii.iter().map(move |&r| (x, r))).collect();
    let records: Vec<Option<Record>> = grid
        .par_iter()
        .map(|&(x, r)| {
            let ball = geom.boundary_ball(x, r);
            if ball.len() < 2 || ball.len() == nb {
                return Ok(None);
            }
            let e = exit_time(tf, omega, x, &ball)?;
            Ok(Some(Record::new(geom.label(x), r, e, field.theta(x, r)?)))
        })
        .collect::<Result<_>>()?;
    let records: Vec<Record> = records.into_iter().flatten().collect();
    if records.is_empty() {
        return Err(Error::NoAdmissibleScales("exit time".into()));
    }
    Ok(Report::from_records("exit-time", records))
}

/// Heat kernel of the trace chain with speed measure `ω`, from the
/// generalized eigenproblem `Ľφ = λ D_ω φ`.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    eigenvalues: Vec<f64>,
    /// Columns are the `ω`-orthonormal eigenvectors.
    phi: DMatrix<f64>,
    omega: Vec<f64>,
}

impl HeatKernel {
    pub fn new(tf: &TraceForm, omega: &[f64]) -> Result<Self> {
        let nb = tf.len();
        if omega.len() != nb {
            return Err(Error::DimensionMismatch {
                expected: nb,
                got: omega.len(),
            });
        }
        if let Some(k) = omega.iter().position(|&w| !(w > 0.0)) {
            return Err(Error::ZeroMass(k));
        }
        let inv_sqrt: Vec<f64> = omega.iter().map(|w| 1.0 / w.sqrt()).collect();
        let l = tf.matrix();
        let mut s = DMatrix::from_fn(nb, nb, |x, y| inv_sqrt[x] * l[(x, y)] * inv_sqrt[y]);
        s = (&s + s.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(s, 1e-15, 10_000).ok_or(Error::EigenFailure)?;
        let mut order: Vec<usize> = (0..nb).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let phi = DMatrix::from_fn(nb, nb, |x, k| inv_sqrt[x] * eig.eigenvectors[(x, order[k])]);
        Ok(Self {
            eigenvalues,
            phi,
            omega: omega.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn p(&self, t: f64, x: usize, y: usize) -> f64 {
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &l)| (-l * t).exp() * self.phi[(x, k)] * self.phi[(y, k)])
            .sum()
    }

    pub fn matrix(&self, t: f64) -> DMatrix<f64> {
        let decay = DVector::from_iterator(self.len(), self.eigenvalues.iter().map(|&l| (-l * t).exp()));
        let scaled = DMatrix::from_fn(self.len(), self.len(), |x, k| self.phi[(x, k)] * decay[k]);
        &scaled * self.phi.transpose()
    }

    /// `Σ_y p(t,x,y) ω_y` for every `x`.
    pub fn mass(&self, t: f64) -> Vec<f64> {
        let p = self.matrix(t);
        (0..self.len())
            .map(|x| (0..self.len()).map(|y| p[(x, y)] * self.omega[y]).sum())
            .collect()
    }
}

/// Resolvable time window `[max_x Θ(x, 2h), min_x Θ(x, diam/4)]`, `h` the
/// edge length.
pub fn time_window(field: &ThetaField<'_>) -> Result<(f64, f64)> {
    let geom = field.geom();
    let mut lo: f64 = 0.0;
    let mut hi = f64::INFINITY;
    for x in 0..field.len() {
        lo = lo.max(field.theta(x, 2.0 * geom.edge_length())?);
        hi = hi.min(field.theta(x, geom.diam() / 4.0)?);
    }
    if !(lo < hi) {
        return Err(Error::WindowEmpty { lo, hi });
    }
    Ok((lo, hi))
}

/// Geometric grid of `count` times across the window.
pub fn time_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
        .collect()
}

/// `p̌(t,x,y)` against `1/ω(B(x,Θ⁻¹(x,t))) ∧ t/(ω(B(x,d))Θ(x,d))` over the
/// time window, with the fixed-effects on-diagonal slope, kernel symmetry
/// and mass monotonicity defects; for transient traces, the bottom
/// eigenvalue relative to `α = Σκ/ω(∂)`.
pub fn hk_report(tf: &TraceForm, omega: &[f64], field: &ThetaField<'_>, t_count: usize) -> Result<Report> {
    let hk = HeatKernel::new(tf, omega)?;
    let (lo, hi) = time_window(field)?;
    let times = time_grid(lo, hi, t_count);
    let geom = field.geom();
    let nb = hk.len();
    let mut records = Vec::new();
    let mut diagonal: Vec<Vec<(f64, f64)>> = vec![Vec::new(); nb];
    let mut symmetry: f64 = 0.0;
    let mut monotone: f64 = 0.0;
    let mut prev_mass: Option<Vec<f64>> = None;
    for &t in &times {
        let p = hk.matrix(t);
        let mass: Vec<f64> = (0..nb).map(|x| (0..nb).map(|y| p[(x, y)] * omega[y]).sum()).collect();
        if let Some(prev) = &prev_mass {
            for (a, b) in prev.iter().zip(&mass) {
                monotone = monotone.max(b - a);
            }
        }
        prev_mass = Some(mass);
        for x in 0..nb {
            diagonal[x].push((t, p[(x, x)]));
            let near = 1.0 / ball_mass(geom, omega, x, field.theta_inverse(x, t)?);
            for y in x..nb {
                symmetry = symmetry.max((p[(x, y)] - p[(y, x)]).abs() / p[(x, x)].abs().max(p[(y, y)].abs()));
                let estimate = if x == y {
                    near
                } else {
                    let d = geom.rho(x, y);
                    near.min(t / (field.sigma_ball(x, d) * field.theta(x, d)?))
                };
                records.push(Record::new(format!("{}|{}", geom.label(x), geom.label(y)), t, p[(x, y)], estimate));
            }
        }
    }
    let fit = grouped_exponent_fit(&diagonal)?;
    let mut rep = Report::from_records("heat-kernel", records)
        .with_fit(fit)
        .with_stat("diagonal_slope", fit.exponent)
        .with_stat("t_lo", lo)
        .with_stat("t_hi", hi)
        .with_stat("symmetry_defect", symmetry)
        .with_stat("mass_increase", monotone.max(0.0));
    if tf.provenance().ghost {
        let alpha = tf.total_killing() / omega.iter().sum::<f64>();
        rep = rep
            .with_stat("bottom_eigenvalue", hk.eigenvalues()[0])
            .with_stat("alpha", alpha)
            .with_stat("rate_over_alpha", hk.eigenvalues()[0] / alpha);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::besov::ScaleFunction;
    use crate::generators::{gen_half_strip, gen_path, gen_sg_slit, gen_star, FarMode};
    use crate::trace::{schur_trace, star_closed_form};

    const LOG5_LOG2: f64 = 2.321928094887362;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn star_harmonic_doubling_is_bounded() {
        let d = gen_star(&[1.0, 2.0, 3.0]).unwrap();
        let w = harmonic_measure_from(&d.net, d.pole, &cfg()).unwrap();
        let min = w.iter().copied().fold(f64::INFINITY, f64::min);
        // all balls of radius ≥ 2 contain every leaf
        for x in 0..3 {
            for r in [1.0, 2.0] {
                let ratio = ball_mass(&d.geom, &w, x, 2.0 * r) / ball_mass(&d.geom, &w, x, r);
                assert!(ratio <= 1.0 / min + 1e-12);
            }
        }
    }

    #[test]
    fn gasket_doubling_reports() {
        let d = gen_sg_slit(4).unwrap();
        let hm = hm_doubling_report(&d.net, &d.geom, &[d.pole], &cfg()).unwrap();
        assert!(hm.min >= 1.0 && hm.max.is_finite());
        let cap = cap_doubling_report(&d.net, &d.geom, &cfg()).unwrap();
        assert!(cap.min >= 1.0 - 1e-12 && cap.max.is_finite());
    }

    #[test]
    fn gasket_reports_are_mirror_symmetric() {
        let d = gen_sg_slit(3).unwrap();
        let m = d.mirror.as_ref().unwrap();
        let pos = |a: usize| d.net.position(m[d.net.boundary()[a]]);
        let cap = cap_doubling_report(&d.net, &d.geom, &cfg()).unwrap();
        let lookup = |rep: &Report, label: &str, r: f64| {
            rep.records.iter().find(|rec| rec.location == label && rec.scale == r).map(|rec| rec.ratio)
        };
        for rec in &cap.records {
            let x = d.geom.labels().iter().position(|l| *l == rec.location).unwrap();
            let mirrored = lookup(&cap, d.geom.label(pos(x)), rec.scale).unwrap();
            assert!((mirrored - rec.ratio).abs() < 1e-10 * rec.ratio);
        }
    }

    #[test]
    fn cap_density_on_half_strip() {
        let d = gen_half_strip(16, 16, FarMode::Reflecting).unwrap();
        let field =
            ThetaField::from_network(ScaleFunction::power(2.0).unwrap(), d.sigma_uniform.masses(), &d.net, &d.geom)
                .unwrap();
        let rep = cap_density_report(&d.net, &d.geom, &field, &cfg()).unwrap();
        assert!(rep.min > 0.0);
    }

    #[test]
    fn green_hm_on_gasket() {
        let d = gen_sg_slit(5).unwrap();
        let w = harmonic_measure_from(&d.net, d.pole, &cfg()).unwrap();
        let field = ThetaField::from_network(ScaleFunction::power(LOG5_LOG2).unwrap(), &w, &d.net, &d.geom).unwrap();
        let rep = green_hm_report(&d.net, &d.geom, &field, d.pole, &cfg()).unwrap();
        assert!(rep.min > 0.0 && rep.ratio.is_finite());
    }

    #[test]
    fn star_jump_kernel_ratio_is_one() {
        let tf = star_closed_form(&[1.0, 2.0, 3.0]).unwrap();
        let d = gen_star(&[1.0, 2.0, 3.0]).unwrap();
        let w = harmonic_measure_from(&d.net, d.pole, &cfg()).unwrap();
        let field = ThetaField::from_network(ScaleFunction::power(2.0).unwrap(), &w, &d.net, &d.geom).unwrap();
        let rep = jump_kernel_report(&tf, &w, &field).unwrap();
        assert!((rep.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn killing_examples() {
        let d = gen_half_strip(8, 8, FarMode::Reflecting).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap();
        let rep = killing_report(&tf, d.sigma_uniform.masses()).unwrap();
        assert_eq!(rep.pass, Some(true));

        let d = gen_half_strip(8, 8, FarMode::Absorbing).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap();
        let w = harmonic_measure_from(&d.net, d.pole, &cfg()).unwrap();
        let rep = killing_report(&tf, &w).unwrap();
        assert!(rep.stat("identity_deviation").unwrap() <= 1e-12);
        assert!(rep.min > 0.0 && rep.ratio.is_finite());
    }

    #[test]
    fn two_point_exit_time() {
        let d = gen_path(2, None).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap();
        assert!((exit_time(&tf, &[0.5, 0.5], 0, &[0]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exit_times_grow_with_radius() {
        let d = gen_sg_slit(4).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap();
        let w = harmonic_measure_from(&d.net, d.pole, &cfg()).unwrap();
        for x in 0..tf.len() {
            let mut prev = 0.0;
            for r in d.geom.radii(d.geom.diam()) {
                let ball = d.geom.boundary_ball(x, r);
                if ball.len() == tf.len() {
                    break;
                }
                let e = exit_time(&tf, &w, x, &ball).unwrap();
                assert!(e >= prev);
                prev = e;
            }
        }
        let field = ThetaField::from_network(ScaleFunction::power(LOG5_LOG2).unwrap(), &w, &d.net, &d.geom).unwrap();
        let rep = exit_time_report(&tf, &w, &field).unwrap();
        assert!(rep.min > 0.0);
    }

    #[test]
    fn heat_kernel_limits() {
        let d = gen_sg_slit(3).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap();
        let w = harmonic_measure_from(&d.net, d.pole, &cfg()).unwrap();
        let hk = HeatKernel::new(&tf, &w).unwrap();
        for x in 0..hk.len() {
            assert!((hk.p(1e-9, x, x) * w[x] - 1.0).abs() < 1e-5);
        }
        let total: f64 = w.iter().sum();
        let p = hk.matrix(1e4);
        for x in 0..hk.len() {
            for y in 0..hk.len() {
                assert!((p[(x, y)] - 1.0 / total).abs() < 1e-8);
                assert!((p[(x, y)] - p[(y, x)]).abs() < 1e-12 * p[(x, x)]);
            }
        }
        for m in hk.mass(0.3) {
            assert!((m - 1.0).abs() < 1e-12);
        }
        // first-order expansion off the diagonal: p(t,x,y) ≈ t ĉ_xy/(ω_x ω_y)
        let t = 1e-8;
        let (x, y) = (0, 1);
        let expected = t * tf.jump(x, y) / (w[x] * w[y]);
        assert!((hk.p(t, x, y) - expected).abs() < 1e-4 * expected);
    }

    #[test]
    fn transient_heat_kernel_loses_mass() {
        let d = gen_half_strip(8, 8, FarMode::Absorbing).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap();
        let w = harmonic_measure_from(&d.net, d.pole, &cfg()).unwrap();
        let hk = HeatKernel::new(&tf, &w).unwrap();
        let m1 = hk.mass(1.0);
        let m2 = hk.mass(2.0);
        for (a, b) in m1.iter().zip(&m2) {
            assert!(*a < 1.0 && b <= a);
        }
    }

    #[test]
    fn gasket_heat_kernel_report() {
        let d = gen_sg_slit(5).unwrap();
        let tf = schur_trace(&d.net, &cfg()).unwrap();
        let w = harmonic_measure_from(&d.net, d.pole, &cfg()).unwrap();
        let field = ThetaField::from_network(ScaleFunction::power(LOG5_LOG2).unwrap(), &w, &d.net, &d.geom).unwrap();
        let rep = hk_report(&tf, &w, &field, 8).unwrap();
        assert!(rep.stat("symmetry_defect").unwrap() <= 1e-12);
        assert!(rep.stat("mass_increase").unwrap() <= 1e-12);
        assert!(rep.min > 0.0);
    }
}
