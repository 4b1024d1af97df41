//! Whitney covers of the interior, tent partitions of unity, the
//! patch-average extension operator `𝔈` and the empirical extension and
//! restriction bounds.

use serde::{Deserialize, Serialize};

use crate::besov::{BesovKernel, ScaleFunction};
use crate::error::{Error, Result};
use crate::geometry::{within, BoundaryGeometry};
use crate::network::ResistanceNetwork;
use crate::report::{Record, Report};

/// Truncation floor in edge lengths: no centers with `d_D` below it.
pub const FLOOR_CELLS: f64 = 4.0;

/// An `ε`-Whitney cover built by greedy packing.
#[derive(Debug, Clone)]
pub struct WhitneyCover {
    epsilon: f64,
    floor: f64,
    centers: Vec<usize>,
    radii: Vec<f64>,
    depth: Vec<f64>,
    patches: Vec<Vec<usize>>,
    /// Graph distances from each center to every vertex.
    center_dist: Vec<Vec<f64>>,
}

impl WhitneyCover {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    /// `d_D(x_i)`.
    pub fn depth(&self, i: usize) -> f64 {
        self.depth[i]
    }

    /// Boundary positions of `F_i = B(x_i, 2 d_D(x_i)) ∩ ∂`.
    pub fn patch(&self, i: usize) -> &[usize] {
        &self.patches[i]
    }

    pub fn distance(&self, i: usize, v: usize) -> f64 {
        self.center_dist[i][v]
    }

    pub fn to_json(&self, net: &ResistanceNetwork) -> CoverJson {
        CoverJson {
            epsilon: self.epsilon,
            centers: (0..self.len())
                .map(|i| CenterJson {
                    id: net.id(self.centers[i]).to_string(),
                    r: self.radii[i],
                    patch: self.patches[i].iter().map(|&a| net.id(net.boundary()[a]).to_string()).collect(),
                })
                .collect(),
            floor: self.floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterJson {
    pub id: String,
    pub r: f64,
    pub patch: Vec<String>,
}

/// Serialized cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverJson {
    pub epsilon: f64,
    pub centers: Vec<CenterJson>,
    pub floor: f64,
}

/// Greedy maximal packing in descending `d_D` order: `x` becomes a center
/// iff `B(x, r(x))` is disjoint from every admitted ball, where
/// `r(x) = ε/(1+ε)·d_D(x)`; vertices with `d_D` below the floor are never
/// centers.
pub fn build_cover(net: &ResistanceNetwork, geom: &BoundaryGeometry, epsilon: f64) -> Result<WhitneyCover> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!("ε = {epsilon} outside (0, 1/2)")));
    }
    let floor = FLOOR_CELLS * geom.edge_length();
    let factor = epsilon / (1.0 + epsilon);
    let mut candidates: Vec<usize> = net
        .interior()
        .iter()
        .copied()
        .filter(|&v| geom.d_boundary(v) >= floor * (1.0 - 1e-12))
        .collect();
    candidates.sort_by(|&a, &b| geom.d_boundary(b).total_cmp(&geom.d_boundary(a)).then(a.cmp(&b)));

    let mut centers: Vec<usize> = Vec::new();
    let mut radii: Vec<f64> = Vec::new();
    let mut center_dist: Vec<Vec<f64>> = Vec::new();
    for &x in &candidates {
        let r = factor * geom.d_boundary(x);
        // disjoint closed balls on a geodesic graph: distance > r_i + r
        let free = centers
            .iter()
            .enumerate()
            .all(|(i, _)| !within(center_dist[i][x], radii[i] + r));
        if free {
            centers.push(x);
            radii.push(r);
            center_dist.push(geom.distances_from(net, x));
        }
    }
    if centers.is_empty() {
        return Err(Error::ResolutionTooCoarse);
    }
    let depth: Vec<f64> = centers.iter().map(|&x| geom.d_boundary(x)).collect();
    let patches: Vec<Vec<usize>> = centers
        .iter()
        .zip(&depth)
        .map(|(&x, &d)| (0..geom.boundary_len()).filter(|&a| within(geom.to_vertex(a, x), 2.0 * d)).collect())
        .collect();
    if let Some(i) = patches.iter().position(Vec::is_empty) {
        return Err(Error::EmptyPatch(i));
    }
    let cover = WhitneyCover {
        epsilon,
        floor,
        centers,
        radii,
        depth,
        patches,
        center_dist,
    };
    // dilation property on the region above the floor
    for &v in &candidates {
        let covered = (0..cover.len()).any(|i| within(cover.center_dist[i][v], 2.0 * (1.0 + epsilon) * cover.radii[i]));
        if !covered {
            return Err(Error::UncoveredVertex(v));
        }
    }
    Ok(cover)
}

/// Overlap counts at dilation `λ` (metric criterion
/// `ρ(x_i, x_j) ≤ λ(r_i + r_j)`) and the neighbor radius-ratio sandwich
/// `r_j/r_i ≤ (1+ε+ελ)/(1+ε−ελ)`.
pub fn cover_stats(cover: &WhitneyCover, lambda: f64) -> Result<Report> {
    let eps = cover.epsilon;
    if !(lambda > 0.0 && lambda < (1.0 + eps) / eps) {
        return Err(Error::InvalidParameter(format!("λ = {lambda} outside (0, (1+ε)/ε)")));
    }
    let bound = (1.0 + eps + eps * lambda) / (1.0 + eps - eps * lambda);
    let mut records = Vec::with_capacity(cover.len());
    let mut worst_ratio: f64 = 1.0;
    for i in 0..cover.len() {
        let mut count = 0usize;
        for j in 0..cover.len() {
            if within(cover.center_dist[i][cover.centers[j]], lambda * (cover.radii[i] + cover.radii[j])) {
                count += 1;
                worst_ratio = worst_ratio.max(cover.radii[j] / cover.radii[i]);
            }
        }
        records.push(Record::new(
            format!("center{i}"),
            cover.radii[i],
            count as f64,
            1.0,
        ));
    }
    let rep = Report::from_records("whitney-cover", records);
    let overlap = rep.max;
    Ok(rep
        .with_stat("max_overlap", overlap)
        .with_stat("max_radius_ratio", worst_ratio)
        .with_stat("centers", cover.len() as f64)
        .check("radius_sandwich", bound, worst_ratio <= bound * (1.0 + 1e-12)))
}

/// Normalized tent partition of unity subordinate to a cover.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    /// `ψ_i` as dense vertex functions.
    psi: Vec<Vec<f64>>,
    covered: Vec<bool>,
    hat_energy: Vec<f64>,
    budget: Vec<f64>,
}

impl PartitionOfUnity {
    pub fn psi(&self, i: usize) -> &[f64] {
        &self.psi[i]
    }

    pub fn is_covered(&self, v: usize) -> bool {
        self.covered[v]
    }

    /// `Ē(ψ̂_i)`.
    pub fn hat_energy(&self, i: usize) -> f64 {
        self.hat_energy[i]
    }

    /// `Ē(ψ̂_i)·Ψ(r_i)/m₀(B(x_i, r_i))`.
    pub fn budget_ratio(&self, i: usize) -> f64 {
        self.budget[i]
    }

    pub fn budget_ratios(&self) -> &[f64] {
        &self.budget
    }
}

/// `ψ̂_i(x) = clamp(2 − ρ(x, x_i)/(2(1+ε)r_i), 0, 1)` on interior vertices,
/// normalized to `ψ_i = ψ̂_i / Σ_j ψ̂_j` where the sum is positive.
pub fn partition_of_unity(
    net: &ResistanceNetwork,
    geom: &BoundaryGeometry,
    cover: &WhitneyCover,
    psi_scale: &ScaleFunction,
) -> Result<PartitionOfUnity> {
    let n = net.vertex_count();
    let eps = cover.epsilon;
    let mut hats = Vec::with_capacity(cover.len());
    let mut hat_energy = Vec::with_capacity(cover.len());
    let mut budget = Vec::with_capacity(cover.len());
    for i in 0..cover.len() {
        let scale = 2.0 * (1.0 + eps) * cover.radii[i];
        let hat: Vec<f64> = (0..n)
            .map(|v| {
                if net.is_boundary(v) {
                    0.0
                } else {
                    (2.0 - cover.center_dist[i][v] / scale).clamp(0.0, 1.0)
                }
            })
            .collect();
        let e = net.energy(&hat)?;
        let m: f64 = (0..n)
            .filter(|&v| within(cover.center_dist[i][v], cover.radii[i]))
            .map(|v| net.m0()[v])
            .sum();
        hat_energy.push(e);
        budget.push(e * psi_scale.eval(cover.radii[i]) / m);
        hats.push(hat);
    }
    let mut total = vec![0.0; n];
    for hat in &hats {
        for (t, h) in total.iter_mut().zip(hat) {
            *t += h;
        }
    }
    let covered: Vec<bool> = total.iter().map(|&t| t > 0.0).collect();
    for &v in net.interior() {
        if geom.d_boundary(v) >= cover.floor * (1.0 - 1e-12) && !covered[v] {
            return Err(Error::UncoveredVertex(v));
        }
    }
    let psi = hats
        .into_iter()
        .map(|hat| hat.iter().zip(&total).map(|(h, t)| if *t > 0.0 { h / t } else { 0.0 }).collect())
        .collect();
    Ok(PartitionOfUnity {
        psi,
        covered,
        hat_energy,
        budget,
    })
}

/// Patch averages `[u]_i = σ(F_i)⁻¹ Σ_{F_i} u σ`.
pub fn patch_averages(u: &[f64], cover: &WhitneyCover, sigma: &[f64]) -> Result<Vec<f64>> {
    (0..cover.len())
        .map(|i| {
            let mass: f64 = cover.patches[i].iter().map(|&a| sigma[a]).sum();
            if !(mass > 0.0) {
                return Err(Error::EmptyPatch(i));
            }
            Ok(cover.patches[i].iter().map(|&a| sigma[a] * u[a]).sum::<f64>() / mass)
        })
        .collect()
}

/// `𝔈u = Σ_i ψ_i [u]_i` on the covered interior, `u` on the boundary, and
/// the nearest center's patch average on the uncovered layer.
pub fn extend(
    net: &ResistanceNetwork,
    u: &[f64],
    cover: &WhitneyCover,
    pou: &PartitionOfUnity,
    sigma: &[f64],
) -> Result<Vec<f64>> {
    let nb = net.boundary().len();
    if u.len() != nb || sigma.len() != nb {
        return Err(Error::DimensionMismatch {
            expected: nb,
            got: u.len().min(sigma.len()),
        });
    }
    let avg = patch_averages(u, cover, sigma)?;
    let mut f = net.lift_boundary(u)?;
    for &v in net.interior() {
        f[v] = if pou.covered[v] {
            (0..cover.len()).map(|i| pou.psi[i][v] * avg[i]).sum()
        } else {
            let nearest = (0..cover.len())
                .min_by(|&a, &b| cover.center_dist[a][v].total_cmp(&cover.center_dist[b][v]).then(a.cmp(&b)))
                .expect("cover is nonempty");
            avg[nearest]
        };
    }
    Ok(f)
}

/// `max Ē(𝔈u) / ⟦u⟧²` over non-constant samples.
pub fn extension_report(
    net: &ResistanceNetwork,
    cover: &WhitneyCover,
    pou: &PartitionOfUnity,
    sigma: &[f64],
    kernel: &BesovKernel,
    samples: &[Vec<f64>],
) -> Result<Report> {
    let mut records = Vec::with_capacity(samples.len());
    for (k, u) in samples.iter().enumerate() {
        let b = kernel.seminorm_sq(u)?;
        if !(b > 0.0) {
            return Err(Error::DegenerateSample(format!("sample {k} is constant")));
        }
        let e = net.energy(&extend(net, u, cover, pou, sigma)?)?;
        records.push(Record::new(format!("sample{k}"), 1.0, e, b));
    }
    Ok(Report::from_records("extension", records))
}

/// `max ⟦f|∂⟧² / Ē(f)` over vertex functions with nonzero energy.
pub fn restriction_report(net: &ResistanceNetwork, kernel: &BesovKernel, samples: &[Vec<f64>]) -> Result<Report> {
    let mut records = Vec::with_capacity(samples.len());
    for (k, f) in samples.iter().enumerate() {
        let e = net.energy(f)?;
        if !(e > 0.0) {
            return Err(Error::DegenerateSample(format!("sample {k} has zero energy")));
        }
        let b = kernel.seminorm_sq(&net.restrict_to_boundary(f))?;
        records.push(Record::new(format!("sample{k}"), 1.0, b, e));
    }
    Ok(Report::from_records("restriction", records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::besov::ThetaField;
    use crate::generators::{gen_half_strip, gen_sg_slit, FarMode};
    use crate::linalg::SolverConfig;
    use crate::potential::harmonic_extension;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LOG5_LOG2: f64 = 2.321928094887362;

    fn psi() -> ScaleFunction {
        ScaleFunction::power(LOG5_LOG2).unwrap()
    }

    #[test]
    fn cover_invariants_on_gasket() {
        let d = gen_sg_slit(5).unwrap();
        let eps = 0.125;
        let cover = build_cover(&d.net, &d.geom, eps).unwrap();
        for i in 0..cover.len() {
            assert!((cover.radius(i) - cover.depth(i) / 9.0).abs() < 1e-15);
            assert!(!cover.patch(i).is_empty());
            for j in 0..i {
                assert!(cover.distance(i, cover.centers()[j]) > cover.radius(i) + cover.radius(j));
            }
        }
        let stats = cover_stats(&cover, 1.0).unwrap();
        assert_eq!(stats.stat("max_overlap"), Some(1.0));
        let stats = cover_stats(&cover, 2.0).unwrap();
        assert_eq!(stats.pass, Some(true));
        assert!(cover_stats(&cover, 10.0).is_err());
    }

    #[test]
    fn strip_cover_radii_grow_with_height() {
        let d = gen_half_strip(32, 32, FarMode::Reflecting).unwrap();
        let cover = build_cover(&d.net, &d.geom, 0.125).unwrap();
        for i in 0..cover.len() {
            let y = d.net.coord(cover.centers()[i]).unwrap()[1];
            assert!((cover.radius(i) - y / 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_and_resolution_errors() {
        let d = gen_sg_slit(1).unwrap();
        assert!(matches!(build_cover(&d.net, &d.geom, 0.125), Err(Error::ResolutionTooCoarse)));
        assert!(build_cover(&d.net, &d.geom, 0.6).is_err());
    }

    #[test]
    fn partition_of_unity_sums_to_one() {
        let d = gen_sg_slit(5).unwrap();
        let cover = build_cover(&d.net, &d.geom, 0.125).unwrap();
        let pou = partition_of_unity(&d.net, &d.geom, &cover, &psi()).unwrap();
        for &v in d.net.interior() {
            let s: f64 = (0..cover.len()).map(|i| pou.psi(i)[v]).sum();
            if pou.is_covered(v) {
                assert!((s - 1.0).abs() < 1e-12);
            }
            for i in 0..cover.len() {
                let p = pou.psi(i)[v];
                assert!((0.0..=1.0).contains(&p));
                if p > 0.0 {
                    assert!(cover.distance(i, v) <= cover.depth(i) / 2.0 + 1e-12);
                }
            }
        }
        assert!(pou.budget_ratios().iter().all(|b| b.is_finite() && *b > 0.0));
    }

    #[test]
    fn extension_properties() {
        let d = gen_sg_slit(5).unwrap();
        let sigma = d.sigma_uniform.masses();
        let cover = build_cover(&d.net, &d.geom, 0.125).unwrap();
        let pou = partition_of_unity(&d.net, &d.geom, &cover, &psi()).unwrap();
        let nb = d.boundary_len();
        let c = extend(&d.net, &vec![2.0; nb], &cover, &pou, sigma).unwrap();
        assert!(c.iter().all(|&v| (v - 2.0).abs() < 1e-12));

        // indicator of the left half of the boundary
        let left: Vec<f64> = d.geom.labels().iter().map(|l| if l.starts_with('1') { 1.0 } else { 0.0 }).collect();
        let f = extend(&d.net, &left, &cover, &pou, sigma).unwrap();
        assert!(f.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        // deep in the left bottom cell: the bottom-left corner cell's apex
        let n = 1i64 << 5;
        let deep = d.net.index_of(&format!("v{}_{}", n / 8, n / 4)).unwrap();
        assert!((f[deep] - 1.0).abs() < 1e-12, "𝔈u = {}", f[deep]);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u: Vec<f64> = (0..nb).map(|_| rng.random::<f64>()).collect();
        let v: Vec<f64> = (0..nb).map(|_| rng.random::<f64>()).collect();
        let mix: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 3.0 * a - b).collect();
        let eu = extend(&d.net, &u, &cover, &pou, sigma).unwrap();
        let ev = extend(&d.net, &v, &cover, &pou, sigma).unwrap();
        let em = extend(&d.net, &mix, &cover, &pou, sigma).unwrap();
        for k in 0..eu.len() {
            assert!((em[k] - (3.0 * eu[k] - ev[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn restriction_of_harmonic_extensions() {
        let d = gen_sg_slit(4).unwrap();
        let field = ThetaField::from_network(psi(), d.sigma_uniform.masses(), &d.net, &d.geom).unwrap();
        let kernel = BesovKernel::new(&field).unwrap();
        let nb = d.boundary_len();
        let u: Vec<f64> = (0..nb).map(|k| (k as f64 * 0.7).cos()).collect();
        let hu = harmonic_extension(&d.net, &u, &SolverConfig::default()).unwrap();
        let rep = restriction_report(&d.net, &kernel, std::slice::from_ref(&hu)).unwrap();
        let tf = crate::trace::schur_trace(&d.net, &SolverConfig::default()).unwrap();
        let expected = kernel.seminorm_sq(&u).unwrap() / tf.energy(&u).unwrap();
        assert!((rep.max - expected).abs() < 1e-9 * expected);

        let mut bump = vec![0.0; d.net.vertex_count()];
        bump[d.pole] = 1.0;
        let rep = restriction_report(&d.net, &kernel, &[bump]).unwrap();
        assert_eq!(rep.records[0].lhs, 0.0);
    }
}
