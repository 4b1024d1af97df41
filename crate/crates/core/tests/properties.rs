//! Structural invariants of trace forms on randomly generated networks.

use std::collections::BTreeSet;

use kron_trace::estimates::HeatKernel;
use kron_trace::generators::gen_star;
use kron_trace::linalg::SolverConfig;
use kron_trace::network::{NetworkSpec, ResistanceNetwork};
use kron_trace::potential::{harmonic_extension, harmonic_measure};
use kron_trace::trace::{
    boundary_layer, max_relative_deviation, schur_trace, star_closed_form, tower_check, TraceForm,
};
use proptest::prelude::*;

/// A connected network: a path through every vertex (boundary vertices
/// first, then interior) plus extra chords and optional ghost edges.
#[derive(Debug, Clone)]
struct RandomNetwork {
    nb: usize,
    ni: usize,
    path: Vec<f64>,
    chords: Vec<(usize, usize, f64)>,
    ghost: Vec<(usize, f64)>,
}

impl RandomNetwork {
    fn id(&self, v: usize) -> String {
        if v < self.nb {
            format!("b{v}")
        } else {
            format!("i{}", v - self.nb)
        }
    }

    fn build(&self) -> ResistanceNetwork {
        let n = self.nb + self.ni;
        let mut spec = NetworkSpec::default();
        for v in 0..n {
            spec.vertex(self.id(v), if v < self.nb { 0.0 } else { 1.0 }, v < self.nb);
        }
        let mut seen = BTreeSet::new();
        for (v, &c) in self.path.iter().enumerate().take(n - 1) {
            seen.insert((v, v + 1));
            spec.edge(self.id(v), self.id(v + 1), c);
        }
        for &(a, b, c) in &self.chords {
            let (a, b) = (a % n, b % n);
            let key = (a.min(b), a.max(b));
            if a != b && seen.insert(key) {
                spec.edge(self.id(key.0), self.id(key.1), c);
            }
        }
        let mut grounded = BTreeSet::new();
        for &(v, c) in &self.ghost {
            let v = v % n;
            if grounded.insert(v) {
                spec.ghost_edge(self.id(v), c);
            }
        }
        spec.build().expect("generated network is valid")
    }
}

fn network(max_ghost: usize) -> impl Strategy<Value = RandomNetwork> {
    (2usize..6, 1usize..9).prop_flat_map(move |(nb, ni)| {
        let n = nb + ni;
        (
            prop::collection::vec(0.1f64..10.0, n - 1),
            prop::collection::vec((0..n, 0..n, 0.1f64..10.0), 0..2 * n),
            prop::collection::vec((0..n, 0.1f64..10.0), 0..=max_ghost),
        )
            .prop_map(move |(path, chords, ghost)| RandomNetwork {
                nb,
                ni,
                path,
                chords,
                ghost,
            })
    })
}

fn boundary_function(nb: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, nb)
}

fn solver() -> SolverConfig {
    SolverConfig::default()
}

fn trace(net: &ResistanceNetwork) -> TraceForm {
    schur_trace(net, &solver()).expect("trace of a connected network")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn star_trace_matches_closed_form(c in prop::collection::vec(0.01f64..100.0, 2..12)) {
        let d = gen_star(&c).unwrap();
        let numeric = trace(&d.net).matrix();
        let exact = star_closed_form(&c).unwrap().matrix();
        prop_assert!(max_relative_deviation(&numeric, &exact) < 1e-10);
    }

    #[test]
    fn trace_energy_is_the_harmonic_energy(rn in network(3), seed in any::<u64>()) {
        let net = rn.build();
        let tf = trace(&net);
        let u: Vec<f64> = (0..rn.nb).map(|k| ((seed >> (k % 60)) & 0xff) as f64 / 37.0 - 3.0).collect();
        let hu = harmonic_extension(&net, &u, &solver()).unwrap();
        let e_trace = tf.energy(&u).unwrap();
        let e_net = net.energy(&hu).unwrap();
        prop_assert!((e_trace - e_net).abs() <= 1e-9 * e_net.abs().max(1e-12));
    }

    #[test]
    fn harmonic_extension_minimises_energy(
        rn in network(2),
        u in boundary_function(5),
        bump in prop::collection::vec(-1.0f64..1.0, 8),
    ) {
        let net = rn.build();
        let u = &u[..rn.nb];
        let hu = harmonic_extension(&net, u, &solver()).unwrap();
        let mut f = hu.clone();
        for (k, &v) in net.interior().iter().enumerate() {
            f[v] += bump[k % bump.len()];
        }
        let e_min = net.energy(&hu).unwrap();
        prop_assert!(net.energy(&f).unwrap() >= e_min * (1.0 - 1e-12) - 1e-12);
    }

    #[test]
    fn staged_elimination_equals_direct(rn in network(2), mask in prop::collection::vec(any::<bool>(), 8)) {
        let net = rn.build();
        let mut mid: Vec<usize> = net.boundary().to_vec();
        mid.extend(net.interior().iter().enumerate().filter(|(k, _)| mask[k % mask.len()]).map(|(_, &v)| v));
        prop_assert!(tower_check(&net, &mid, &solver()).unwrap() < 1e-9);
        prop_assert!(tower_check(&net, &boundary_layer(&net), &solver()).unwrap() < 1e-9);
    }

    #[test]
    fn jumps_are_symmetric_and_killing_nonnegative(rn in network(3)) {
        let net = rn.build();
        let tf = trace(&net);
        let scale = tf.matrix().diagonal().amax();
        for x in 0..tf.len() {
            prop_assert!(tf.kappa()[x] >= -1e-10 * scale);
            for y in 0..tf.len() {
                prop_assert!(tf.jump(x, y) >= 0.0);
                prop_assert_eq!(tf.jump(x, y), tf.jump(y, x));
            }
        }
        if !net.has_ghost() {
            prop_assert!(tf.kappa().iter().all(|k| k.abs() <= 1e-10 * scale));
        }
    }

    #[test]
    fn total_killing_is_the_energy_of_one(rn in network(3)) {
        let net = rn.build();
        let tf = trace(&net);
        let ones = vec![1.0; tf.len()];
        let e1 = tf.energy(&ones).unwrap();
        prop_assert!((tf.total_killing() - e1).abs() <= 1e-12 * tf.matrix().diagonal().sum());
    }

    #[test]
    fn harmonic_measure_is_a_probability(rn in network(0), pick in any::<usize>()) {
        let net = rn.build();
        let x0 = net.interior()[pick % net.interior().len()];
        let omega = harmonic_measure(&net, x0, &solver()).unwrap();
        prop_assert!(omega.iter().all(|&w| w >= 0.0));
        prop_assert!((omega.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heat_kernel_is_symmetric_and_loses_mass(rn in network(3), t in 0.01f64..10.0) {
        let net = rn.build();
        let tf = trace(&net);
        let omega = vec![1.0 / tf.len() as f64; tf.len()];
        let hk = HeatKernel::new(&tf, &omega).unwrap();
        let p = hk.matrix(t);
        let scale = p.amax();
        prop_assert!((&p - p.transpose()).amax() <= 1e-12 * scale);
        let (early, late) = (hk.mass(t), hk.mass(2.0 * t));
        for x in 0..tf.len() {
            prop_assert!(late[x] <= early[x] + 1e-12);
            prop_assert!(early[x] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn trace_json_round_trips_exactly(rn in network(3)) {
        let tf = trace(&rn.build());
        let text = serde_json::to_string(&tf.to_json()).unwrap();
        let back = TraceForm::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back.jumps(), tf.jumps());
        prop_assert_eq!(back.kappa(), tf.kappa());
    }
}
