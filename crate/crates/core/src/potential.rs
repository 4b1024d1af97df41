//! Exact discrete potential theory on a resistance network: harmonic
//! extension, harmonic measure, condenser potentials, capacities, Green
//! functions, the swept extension `H^K h` and the functional `c(h, K)`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::{SolverConfig, SparseSymmetric, SpdSolver};
use crate::network::ResistanceNetwork;

/// Dirichlet problem for the network Laplacian: unknowns on the `free`
/// vertices, prescribed values everywhere else (the ghost is always 0).
#[derive(Debug, Clone)]
pub struct DirichletSolver<'a> {
    net: &'a ResistanceNetwork,
    free: Vec<usize>,
    local: Vec<usize>,
    solver: SpdSolver,
}

impl<'a> DirichletSolver<'a> {
    pub fn new(net: &'a ResistanceNetwork, free: Vec<usize>, config: &SolverConfig) -> Result<Self> {
        let n = net.vertex_count();
        let mut local = vec![usize::MAX; n];
        for (k, &v) in free.iter().enumerate() {
            if v >= n {
                return Err(Error::BadSet(format!("vertex index {v} out of range")));
            }
            if local[v] != usize::MAX {
                return Err(Error::BadSet(format!("vertex {} listed twice", net.id(v))));
            }
            local[v] = k;
        }
        check_grounded(net, &free, &local)?;
        let l = net.laplacian();
        let solver = SpdSolver::new(l.principal_submatrix(&free), config)?;
        Ok(Self {
            net,
            free,
            local,
            solver,
        })
    }

    /// Solver whose unknowns are all interior vertices.
    pub fn interior(net: &'a ResistanceNetwork, config: &SolverConfig) -> Result<Self> {
        Self::new(net, net.interior().to_vec(), config)
    }

    pub fn network(&self) -> &'a ResistanceNetwork {
        self.net
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn is_free(&self, v: usize) -> bool {
        self.local[v] != usize::MAX
    }

    pub fn matrix(&self) -> &SparseSymmetric {
        self.solver.matrix()
    }

    /// Solves `L_FF x = b` for `b` indexed like `free()`.
    pub fn solve_free(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solver.solve(b)
    }

    /// Returns `f` with `f = values` off the free set and `L f = 0` on it.
    pub fn extend(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.net.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: self.net.vertex_count(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let rhs: Vec<f64> = self
            .free
            .iter()
            .map(|&v| {
                self.net
                    .neighbors(v)
                    .iter()
                    .filter(|&&(w, _)| !self.is_free(w))
                    .map(|&(w, c)| c * values[w])
                    .sum()
            })
            .collect();
        let x = self.solve_free(&rhs)?;
        let mut f = values.to_vec();
        for (k, &v) in self.free.iter().enumerate() {
            f[v] = x[k];
        }
        Ok(f)
    }

    /// Full-length solution of `L_FF g = e_y` (zero off the free set).
    pub fn green_column(&self, y: usize) -> Result<Vec<f64>> {
        if !self.is_free(y) {
            return Err(Error::BadSet(format!("{} is not an unknown", self.net.id(y))));
        }
        let mut b = vec![0.0; self.free.len()];
        b[self.local[y]] = 1.0;
        let x = self.solve_free(&b)?;
        let mut g = vec![0.0; self.net.vertex_count()];
        for (k, &v) in self.free.iter().enumerate() {
            g[v] = x[k];
        }
        Ok(g)
    }
}

/// Every component of the free subgraph must touch a fixed vertex or the
/// ghost, otherwise `L_FF` is singular.
fn check_grounded(net: &ResistanceNetwork, free: &[usize], local: &[usize]) -> Result<()> {
    let mut seen = vec![false; net.vertex_count()];
    for &s in free {
        if seen[s] {
            continue;
        }
        let mut grounded = false;
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(v) = queue.pop_front() {
            if net.ghost_conductance()[v] > 0.0 {
                grounded = true;
            }
            for &(w, _) in net.neighbors(v) {
                if local[w] == usize::MAX {
                    grounded = true;
                } else if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if !grounded {
            return Err(Error::SingularRestriction(format!(
                "component containing {} touches no fixed vertex",
                net.id(s)
            )));
        }
    }
    Ok(())
}

fn interior_set(net: &ResistanceNetwork, k: &[usize], what: &str) -> Result<Vec<bool>> {
    let mut mask = vec![false; net.vertex_count()];
    for &v in k {
        if v >= net.vertex_count() {
            return Err(Error::BadSet(format!("{what}: vertex index {v} out of range")));
        }
        if net.is_boundary(v) {
            return Err(Error::BadSet(format!("{what} contains boundary vertex {}", net.id(v))));
        }
        mask[v] = true;
    }
    Ok(mask)
}

/// Harmonic extension `Hu` of boundary data (indexed by boundary position).
pub fn harmonic_extension(net: &ResistanceNetwork, u: &[f64], config: &SolverConfig) -> Result<Vec<f64>> {
    let values = net.lift_boundary(u)?;
    DirichletSolver::interior(net, config)?.extend(&values)
}

/// Harmonic measure `ω_{x0}` on boundary positions: the hitting
/// distribution of the boundary for the walk started at `x0`.
pub fn harmonic_measure(net: &ResistanceNetwork, x0: usize, config: &SolverConfig) -> Result<Vec<f64>> {
    let solver = DirichletSolver::interior(net, config)?;
    harmonic_measure_with(&solver, x0)
}

/// Same as [`harmonic_measure`] against a prebuilt interior solver.
pub fn harmonic_measure_with(solver: &DirichletSolver<'_>, x0: usize) -> Result<Vec<f64>> {
    let net = solver.network();
    if x0 >= net.vertex_count() || net.is_boundary(x0) {
        return Err(Error::NotInterior(
            net.ids().get(x0).cloned().unwrap_or_else(|| x0.to_string()),
        ));
    }
    // ω_{x0}(z) = Σ_i (L_II⁻¹)_{x0,i} c_{iz}, by symmetry of L_II⁻¹
    let g = solver.green_column(x0)?;
    Ok(net
        .boundary()
        .iter()
        .map(|&z| {
            net.neighbors(z)
                .iter()
                .filter(|&&(w, _)| !net.is_boundary(w))
                .map(|&(w, c)| c * g[w])
                .sum()
        })
        .collect())
}

/// Condenser potential `e_K`: 1 on `K`, 0 on the boundary, harmonic elsewhere.
pub fn equilibrium_potential(net: &ResistanceNetwork, k: &[usize], config: &SolverConfig) -> Result<Vec<f64>> {
    if k.is_empty() {
        return Err(Error::BadSet("condenser set is empty".into()));
    }
    let mask = interior_set(net, k, "condenser set")?;
    let free: Vec<usize> = net.interior().iter().copied().filter(|&v| !mask[v]).collect();
    let values: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    DirichletSolver::new(net, free, config)?.extend(&values)
}

/// Relative capacity `Cap(O1, O2)`: minimal energy of `f` with `f = 1` on
/// `O1` and `f = 0` off `O2`.
pub fn capacity(net: &ResistanceNetwork, o1: &[usize], o2: &[usize], config: &SolverConfig) -> Result<f64> {
    let f = capacitary_potential(net, o1, o2, config)?;
    net.energy(&f)
}

/// The minimizer realizing [`capacity`].
pub fn capacitary_potential(
    net: &ResistanceNetwork,
    o1: &[usize],
    o2: &[usize],
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    let n = net.vertex_count();
    let mut in1 = vec![false; n];
    let mut in2 = vec![false; n];
    for &v in o2 {
        if v >= n {
            return Err(Error::BadSet(format!("vertex index {v} out of range")));
        }
        in2[v] = true;
    }
    for &v in o1 {
        if v >= n || !in2[v] {
            return Err(Error::BadSet("O1 is not contained in O2".into()));
        }
        in1[v] = true;
    }
    let outside = in2.iter().filter(|&&b| !b).count();
    if outside == 0 && !net.has_ghost() {
        return Err(Error::BadSet("complement of O2 is empty".into()));
    }
    let free: Vec<usize> = (0..n).filter(|&v| in2[v] && !in1[v]).collect();
    let values: Vec<f64> = in1.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    DirichletSolver::new(net, free, config)?.extend(&values)
}

/// Green function `g_U(x, y)` of the network killed outside `U`.
pub fn green_function(
    net: &ResistanceNetwork,
    u: &[usize],
    x: usize,
    y: usize,
    config: &SolverConfig,
) -> Result<f64> {
    let solver = green_solver(net, u, config)?;
    if !solver.is_free(x) {
        return Err(Error::BadSet(format!("{} is not in U", net.id(x))));
    }
    Ok(solver.green_column(y)?[x])
}

/// Solver with unknowns `U` (which must avoid the boundary); its
/// `green_column(y)` is `g_U(·, y)`.
pub fn green_solver<'a>(
    net: &'a ResistanceNetwork,
    u: &[usize],
    config: &SolverConfig,
) -> Result<DirichletSolver<'a>> {
    interior_set(net, u, "U")?;
    DirichletSolver::new(net, u.to_vec(), config)
}

/// `H^K h`: boundary data `h`, zero on `K`, harmonic elsewhere.
pub fn sweep(net: &ResistanceNetwork, h: &[f64], k: &[usize], config: &SolverConfig) -> Result<Vec<f64>> {
    let mask = interior_set(net, k, "sweep set")?;
    let mut values = net.lift_boundary(h)?;
    for (v, &m) in mask.iter().enumerate() {
        if m {
            values[v] = 0.0;
        }
    }
    let free: Vec<usize> = net.interior().iter().copied().filter(|&v| !mask[v]).collect();
    DirichletSolver::new(net, free, config)?.extend(&values)
}

/// `c(h, K) = −E(H^K h, e_K) / E(e_K, e_K)`.
pub fn c_functional(net: &ResistanceNetwork, h: &[f64], k: &[usize], config: &SolverConfig) -> Result<f64> {
    let e = equilibrium_potential(net, k, config)?;
    let cap = net.energy(&e)?;
    if !(cap > 0.0) {
        return Err(Error::ZeroCapacity);
    }
    let swept = sweep(net, h, k, config)?;
    Ok(-net.energy_form(&swept, &e)? / cap)
}

/// `ω_K(z) = c(δ_z, K)` for every boundary position `z`, computed from the
/// boundary flux of `e_K`: `E(H^K h, e_K) = Σ_z h_z (L e_K)_z`.
pub fn equilibrium_boundary_measure(
    net: &ResistanceNetwork,
    k: &[usize],
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    let e = equilibrium_potential(net, k, config)?;
    let cap = net.energy(&e)?;
    if !(cap > 0.0) {
        return Err(Error::ZeroCapacity);
    }
    Ok(net
        .boundary()
        .iter()
        .map(|&z| {
            let flux: f64 = net.neighbors(z).iter().map(|&(w, c)| c * (e[z] - e[w])).sum::<f64>()
                + net.ghost_conductance()[z] * e[z];
            -flux / cap
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_half_strip, gen_path, gen_sg_slit, gen_star, FarMode};
    use crate::network::NetworkSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn star_harmonic_extension_and_measure() {
        let d = gen_star(&[1.0, 2.0, 3.0]).unwrap();
        let f = harmonic_extension(&d.net, &[1.0, 0.0, 0.0], &cfg()).unwrap();
        assert!(close(f[d.pole], 1.0 / 6.0, 1e-14));
        let w = harmonic_measure(&d.net, d.pole, &cfg()).unwrap();
        for (a, b) in w.iter().zip([1.0 / 6.0, 1.0 / 3.0, 0.5]) {
            assert!(close(*a, b, 1e-14));
        }
        assert!(matches!(
            harmonic_measure(&d.net, d.net.boundary()[0], &cfg()),
            Err(Error::NotInterior(_))
        ));
    }

    #[test]
    fn path_extension_is_linear() {
        let d = gen_path(3, None).unwrap();
        let f = harmonic_extension(&d.net, &[0.0, 1.0], &cfg()).unwrap();
        for (i, v) in f.iter().enumerate() {
            assert!(close(*v, i as f64 / 3.0, 1e-14));
        }
        let w = harmonic_measure(&gen_path(2, None).unwrap().net, 1, &cfg()).unwrap();
        assert_eq!(w, vec![0.5, 0.5]);
    }

    #[test]
    fn constants_extend_to_constants() {
        let d = gen_sg_slit(3).unwrap();
        let u = vec![2.5; d.boundary_len()];
        let f = harmonic_extension(&d.net, &u, &cfg()).unwrap();
        assert!(f.iter().all(|&v| close(v, 2.5, 1e-12)));
    }

    #[test]
    fn gasket_harmonic_measure_is_mirror_symmetric() {
        let d = gen_sg_slit(2).unwrap();
        let w = harmonic_measure(&d.net, d.pole, &cfg()).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let m = d.mirror.as_ref().unwrap();
        for (k, &z) in d.net.boundary().iter().enumerate() {
            let k2 = d.net.position(m[z]);
            assert!(close(w[k], w[k2], 1e-12));
            assert!(w[k] > 0.0);
        }
        // dense oracle: rows of −L_II⁻¹ L_IB
        let l = d.net.laplacian().to_dense();
        let ii = d.net.interior();
        let bb = d.net.boundary();
        let lii = l.select_rows(ii).select_columns(ii);
        let lib = l.select_rows(ii).select_columns(bb);
        let h = -lii.lu().solve(&lib).unwrap();
        let row = d.net.position(d.pole);
        for k in 0..bb.len() {
            assert!(close(h[(row, k)], w[k], 1e-12));
        }
    }

    #[test]
    fn equilibrium_potential_examples() {
        // path 0-1-2-3 with ∂ = {3}
        let mut s = NetworkSpec::default();
        for i in 0..4 {
            s.vertex(i.to_string(), if i == 3 { 0.0 } else { 1.0 }, i == 3);
        }
        for i in 0..3 {
            s.edge(i.to_string(), (i + 1).to_string(), 1.0);
        }
        let net = s.build().unwrap();
        let e = equilibrium_potential(&net, &[0], &cfg()).unwrap();
        for (a, b) in e.iter().zip([1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0]) {
            assert!(close(*a, b, 1e-14));
        }
        let all = equilibrium_potential(&net, &[0, 1, 2], &cfg()).unwrap();
        assert_eq!(&all[..3], &[1.0, 1.0, 1.0]);
        assert!(equilibrium_potential(&net, &[3], &cfg()).is_err());
        assert!(equilibrium_potential(&net, &[], &cfg()).is_err());
    }

    #[test]
    fn gasket_equilibrium_obeys_maximum_principle() {
        let d = gen_sg_slit(3).unwrap();
        let k: Vec<usize> = ["v0_8", "v0_7", "v1_7"].iter().map(|id| d.net.index_of(id).unwrap()).collect();
        let e = equilibrium_potential(&d.net, &k, &cfg()).unwrap();
        for v in 0..d.net.vertex_count() {
            if k.contains(&v) {
                assert_eq!(e[v], 1.0);
            } else if d.net.is_boundary(v) {
                assert_eq!(e[v], 0.0);
            } else {
                assert!(e[v] > 0.0 && e[v] < 1.0);
            }
        }
    }

    #[test]
    fn capacity_examples() {
        for n in 2..8 {
            let d = gen_path(n, None).unwrap();
            let o2: Vec<usize> = (0..n).collect();
            let c = capacity(&d.net, &[0], &o2, &cfg()).unwrap();
            assert!(close(c, 1.0 / n as f64, 1e-13));
        }
        let d = gen_star(&[1.0, 1.0]).unwrap();
        assert!(close(capacity(&d.net, &[d.pole], &[d.pole], &cfg()).unwrap(), 2.0, 1e-15));
        let all: Vec<usize> = (0..3).collect();
        assert!(matches!(capacity(&d.net, &[0], &all, &cfg()), Err(Error::BadSet(_))));
        assert!(matches!(capacity(&d.net, &[1], &[0], &cfg()), Err(Error::BadSet(_))));
    }

    #[test]
    fn capacity_monotonicity() {
        let d = gen_half_strip(8, 4, FarMode::Reflecting).unwrap();
        let ball = |r: f64| d.geom.vertex_ball(&d.net, 4, r);
        let o2 = ball(4.0);
        let small = capacity(&d.net, &d.geom.boundary_ball(4, 1.0).iter().map(|&k| d.net.boundary()[k]).collect::<Vec<_>>(), &o2, &cfg()).unwrap();
        let big = capacity(&d.net, &d.geom.boundary_ball(4, 2.0).iter().map(|&k| d.net.boundary()[k]).collect::<Vec<_>>(), &o2, &cfg()).unwrap();
        assert!(big >= small);
        let o1: Vec<usize> = vec![d.net.boundary()[4]];
        let tight = capacity(&d.net, &o1, &ball(2.0), &cfg()).unwrap();
        let loose = capacity(&d.net, &o1, &ball(3.0), &cfg()).unwrap();
        assert!(tight >= loose);
    }

    #[test]
    fn green_function_against_dense_inverse() {
        let d = gen_path(3, None).unwrap();
        let g11 = green_function(&d.net, &[1, 2], 1, 1, &cfg()).unwrap();
        let g12 = green_function(&d.net, &[1, 2], 1, 2, &cfg()).unwrap();
        // [[2,-1],[-1,2]]⁻¹ = [[2,1],[1,2]]/3
        assert!(close(g11, 2.0 / 3.0, 1e-14));
        assert!(close(g12, 1.0 / 3.0, 1e-14));
        assert!(matches!(
            green_function(&d.net, &[0, 1], 1, 1, &cfg()),
            Err(Error::BadSet(_))
        ));
    }

    #[test]
    fn green_function_is_symmetric_and_represents_equilibrium() {
        let d = gen_sg_slit(3).unwrap();
        let u = d.net.interior().to_vec();
        let solver = green_solver(&d.net, &u, &cfg()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = u[rng.random_range(0..u.len())];
            let y = u[rng.random_range(0..u.len())];
            let gxy = solver.green_column(y).unwrap()[x];
            let gyx = solver.green_column(x).unwrap()[y];
            assert!((gxy - gyx).abs() <= 1e-12 * gxy.abs().max(1e-300));
            assert!(gxy > 0.0);
        }
        // e_K(x) = Σ_{z∈K} g_D(x, z)·(L e_K)(z)
        let k = vec![d.pole];
        let e = equilibrium_potential(&d.net, &k, &cfg()).unwrap();
        let charge = d.net.laplacian().apply(&e)[d.pole];
        let g = solver.green_column(d.pole).unwrap();
        for &x in &u {
            assert!(close(e[x], g[x] * charge, 1e-11));
        }
    }

    #[test]
    fn singular_restriction_detected() {
        let mut s = NetworkSpec::default();
        s.vertex("a", 1.0, false).vertex("b", 1.0, false).edge("a", "b", 1.0);
        let net = s.build().unwrap();
        assert!(matches!(
            green_function(&net, &[0, 1], 0, 1, &cfg()),
            Err(Error::SingularRestriction(_))
        ));
    }

    #[test]
    fn sweep_examples() {
        let d = gen_sg_slit(3).unwrap();
        let nb = d.boundary_len();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h: Vec<f64> = (0..nb).map(|_| rng.random::<f64>()).collect();
        let hh = harmonic_extension(&d.net, &h, &cfg()).unwrap();
        let empty = sweep(&d.net, &h, &[], &cfg()).unwrap();
        for (a, b) in hh.iter().zip(&empty) {
            assert!(close(*a, *b, 1e-13));
        }
        let k = vec![d.pole, d.net.index_of("v2_4").unwrap()];
        let ones = sweep(&d.net, &vec![1.0; nb], &k, &cfg()).unwrap();
        let e = equilibrium_potential(&d.net, &k, &cfg()).unwrap();
        for v in 0..d.net.vertex_count() {
            assert!(close(ones[v], 1.0 - e[v], 1e-12));
        }
        let swept = sweep(&d.net, &h, &k, &cfg()).unwrap();
        for v in 0..d.net.vertex_count() {
            assert!(swept[v] >= -1e-14 && swept[v] <= hh[v] + 1e-12);
        }
    }

    #[test]
    fn c_functional_examples() {
        let d = gen_sg_slit(3).unwrap();
        let nb = d.boundary_len();
        let k = vec![d.pole, d.net.index_of("v1_5").unwrap()];
        assert!(close(c_functional(&d.net, &vec![1.0; nb], &k, &cfg()).unwrap(), 1.0, 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h1: Vec<f64> = (0..nb).map(|_| rng.random::<f64>()).collect();
        let h2: Vec<f64> = (0..nb).map(|_| rng.random::<f64>()).collect();
        let c1 = c_functional(&d.net, &h1, &k, &cfg()).unwrap();
        let c2 = c_functional(&d.net, &h2, &k, &cfg()).unwrap();
        let mix: Vec<f64> = h1.iter().zip(&h2).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let cm = c_functional(&d.net, &mix, &k, &cfg()).unwrap();
        assert!(close(cm, 2.0 * c1 - 0.5 * c2, 1e-12));

        // inf_K Hh ≤ c(h, K) ≤ sup_K Hh for h ≥ 0
        let hh = harmonic_extension(&d.net, &h1, &cfg()).unwrap();
        let lo = k.iter().map(|&v| hh[v]).fold(f64::INFINITY, f64::min);
        let hi = k.iter().map(|&v| hh[v]).fold(f64::NEG_INFINITY, f64::max);
        assert!(c1 >= lo - 1e-12 && c1 <= hi + 1e-12);
    }

    #[test]
    fn equilibrium_boundary_measure_matches_delta_functional() {
        let d = gen_star(&[1.0, 1.0]).unwrap();
        let w = equilibrium_boundary_measure(&d.net, &[d.pole], &cfg()).unwrap();
        assert!(close(w[0], 0.5, 1e-14) && close(w[1], 0.5, 1e-14));

        let d = gen_sg_slit(2).unwrap();
        let nb = d.boundary_len();
        let k = vec![d.net.index_of("v1_2").unwrap()];
        let w = equilibrium_boundary_measure(&d.net, &k, &cfg()).unwrap();
        assert!(close(w.iter().sum::<f64>(), 1.0, 1e-12));
        for z in 0..nb {
            let mut delta = vec![0.0; nb];
            delta[z] = 1.0;
            let c = c_functional(&d.net, &delta, &k, &cfg()).unwrap();
            assert!(close(w[z], c, 1e-12));
            assert!(w[z] >= 0.0);
        }
    }

    #[test]
    fn energy_minimality_against_random_competitors() {
        let d = gen_sg_slit(3).unwrap();
        let nb = d.boundary_len();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let u: Vec<f64> = (0..nb).map(|_| rng.random::<f64>() - 0.5).collect();
        let f = harmonic_extension(&d.net, &u, &cfg()).unwrap();
        let ef = d.net.energy(&f).unwrap();
        for _ in 0..20 {
            let mut g = f.clone();
            for &v in d.net.interior() {
                g[v] += 0.1 * (rng.random::<f64>() - 0.5);
            }
            assert!(d.net.energy(&g).unwrap() > ef);
        }
        // maximum principle
        let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(f.iter().all(|&x| x >= lo - 1e-14 && x <= hi + 1e-14));
    }

    #[test]
    fn absorbing_harmonic_measure_loses_mass() {
        let d = gen_half_strip(8, 4, FarMode::Absorbing).unwrap();
        let w = harmonic_measure(&d.net, d.net.index_of("4_2").unwrap(), &cfg()).unwrap();
        let total: f64 = w.iter().sum();
        assert!(total < 1.0 && total > 0.0);
        assert!(w.iter().all(|&x| x >= 0.0));
    }
}
