use std::collections::BTreeSet;

use nalgebra::DMatrix;
use pim_core::bounds::{t_min, theorem1_sample_size, BoundInputs};
use pim_core::entropy::{empirical_joint, entropy, l1_distance};
use pim_core::experiments::edge_set_metrics;
use pim_core::graph::{InfluenceMatrix, NORMALIZATION_TOL};
use pim_core::recgreedy::{recover_neighborhood, TraceEvent};
use pim_core::simulator::replay_effective_index;
use pim_core::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense(m: &InfluenceMatrix) -> DMatrix<f64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m.get(i, j))
}

/// Largest eigenvalue modulus from a dense Schur decomposition.
fn eig_radius(m: &InfluenceMatrix) -> f64 {
    dense(m)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn params_strategy() -> impl Strategy<Value = NodeParams> {
    (0.05f64..0.95, 0.0f64..1.0, 0.05f64..2.0, 0.05f64..0.95).prop_map(|(alpha, bias, mu_slope, zbar)| NodeParams {
        alpha,
        bias,
        mu_slope,
        zbar,
    })
}

/// Random count trajectory with `M` in `1..=m_bar + 1`.
fn random_traj(nodes: usize, len: usize, m_bar: u32, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = Vec::with_capacity(len * nodes);
    let mut m = Vec::with_capacity(len * nodes);
    for _ in 0..len * nodes {
        let mm = rng.gen_range(1..=m_bar + 1);
        m.push(mm);
        n.push(rng.gen_range(0..=mm));
    }
    Trajectory::from_counts(nodes, n, m).unwrap()
}

/// Trajectory with real dependence: node `v` copies node `v - 1` with noise.
fn chained_traj(nodes: usize, len: usize, noise: f64, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = vec![0u32; len * nodes];
    for t in 0..len {
        for v in 0..nodes {
            let fresh = rng.gen_range(0..2);
            n[t * nodes + v] = if t > 0 && v > 0 && !rng.gen_bool(noise) {
                n[(t - 1) * nodes + v - 1]
            } else {
                fresh
            };
        }
    }
    Trajectory::from_counts(nodes, n, vec![1; len * nodes]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validated_graphs_are_normalised(n in 2usize..12, k in 1usize..4, seed in any::<u64>(), p in params_strategy()) {
        let k = k.min(n - 1);
        for g in [InfluenceGraph::ring(n, p).unwrap(), InfluenceGraph::line(n, p).unwrap(),
                  InfluenceGraph::random(n, k, p, seed).unwrap()] {
            prop_assert!(g.validate().is_empty());
            for v in 0..n {
                let total: f64 = g.in_neighbors(v).iter().map(|(_, w)| w).sum::<f64>() + g.self_weight(v);
                prop_assert!((total - 1.0).abs() <= NORMALIZATION_TOL);
            }
        }
    }

    #[test]
    fn generators_are_deterministic(n in 2usize..12, k in 1usize..4, seed in any::<u64>(), p in params_strategy()) {
        let k = k.min(n - 1);
        let a = InfluenceGraph::random(n, k, p, seed).unwrap().to_json();
        let b = InfluenceGraph::random(n, k, p, seed).unwrap().to_json();
        prop_assert_eq!(a, b);
        prop_assert_eq!(InfluenceGraph::ring(n, p).unwrap().to_json(), InfluenceGraph::ring(n, p).unwrap().to_json());
    }

    #[test]
    fn spectral_radius_matches_dense_eigensolver(n in 2usize..10, k in 1usize..4, seed in any::<u64>(), p in params_strategy()) {
        let g = InfluenceGraph::random(n, k.min(n - 1), p, seed).unwrap();
        let m = g.influence_matrix().unwrap();
        let rho = m.spectral_radius().unwrap();
        prop_assert!((rho - eig_radius(&m)).abs() < 1e-8, "power {} vs dense {}", rho, eig_radius(&m));
    }

    #[test]
    fn spectral_radius_is_permutation_invariant(n in 2usize..10, k in 1usize..4, seed in any::<u64>(), p in params_strategy()) {
        let g = InfluenceGraph::random(n, k.min(n - 1), p, seed).unwrap();
        let m = g.influence_matrix().unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let mut pm = InfluenceMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                pm.set(perm[i], perm[j], m.get(i, j));
            }
        }
        let (a, b) = (m.spectral_radius().unwrap(), pm.spectral_radius().unwrap());
        prop_assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn spectral_radius_scales(n in 2usize..10, seed in any::<u64>(), c in 0.0f64..5.0) {
        let g = InfluenceGraph::random(n, 1.max(n / 3), NodeParams::default(), seed).unwrap();
        let m = g.influence_matrix().unwrap();
        let (a, b) = (m.spectral_radius().unwrap(), m.scaled(c).spectral_radius().unwrap());
        prop_assert!((b - c * a).abs() < 1e-8, "{} vs {}", b, c * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulation_is_deterministic_and_bounded(n in 2usize..6, d in 1usize..6, m_bar in 0u32..3, seed in any::<u64>(),
                                             p in 0.5f64..=1.0, pr in params_strategy()) {
        let g = InfluenceGraph::ring(n, pr).unwrap();
        let params = PimParams { reset: ResetSpec::Probability(p), ..PimParams::with_schedule(d, m_bar, 300, seed) };
        let a = simulate(&g, &params).unwrap();
        let b = simulate(&g, &params).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.check_invariants(m_bar).is_ok());
        let h = a.hidden().unwrap();
        prop_assert!(h.latent.iter().all(|x| (0.0..=1.0).contains(x)));
        prop_assert_eq!(replay_effective_index(&h.coins, d), h.effective.clone());

        let dir = tempfile::tempdir().unwrap();
        let (pa, pb) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
        a.write_observations(&pa).unwrap();
        b.write_observations(&pb).unwrap();
        prop_assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn conditional_entropy_is_bounded_and_monotone(nodes in 2usize..6, len in 5usize..300, m_bar in 0u32..3,
                                                  seed in any::<u64>(), v_raw in any::<usize>()) {
        let traj = random_traj(nodes, len, m_bar, seed);
        let pairs = build_pairs(&traj, PairMode::Naive).unwrap();
        let est = Estimator::new(&traj, &pairs).unwrap();
        let v = v_raw % nodes;
        let others: Vec<usize> = (0..nodes).filter(|&u| u != v).collect();
        // H(v+ | v, Q) for Q growing one node at a time
        let mut q = Vec::new();
        let mut prev = est.cond_entropy(v, &q).unwrap();
        let next_support = empirical_joint(&traj, &pairs, v, &[]).unwrap().marginal(&[0]).support_size();
        prop_assert!(prev >= 0.0 && prev <= (next_support as f64).log2() + 1e-12);
        for &u in &others {
            q.push(u);
            let h = est.cond_entropy(v, &q).unwrap();
            prop_assert!(h >= 0.0);
            prop_assert!(h <= prev, "adding {} raised H from {} to {}", u, prev, h);
            prev = h;
        }
    }

    #[test]
    fn tables_do_not_depend_on_pair_order(nodes in 2usize..5, len in 5usize..200, seed in any::<u64>()) {
        let traj = random_traj(nodes, len, 2, seed);
        let pairs = build_pairs(&traj, PairMode::Naive).unwrap();
        let mut shuffled = pairs.clone();
        shuffled.pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let q: Vec<usize> = (1..nodes).collect();
        let (a, b) = (empirical_joint(&traj, &pairs, 0, &q).unwrap(), empirical_joint(&traj, &shuffled, 0, &q).unwrap());
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        prop_assert_eq!(ca, cb);
        prop_assert_eq!(entropy(&a).unwrap().to_bits(), entropy(&b).unwrap().to_bits());
        let (ea, eb) = (Estimator::new(&traj, &pairs).unwrap(), Estimator::new(&traj, &shuffled).unwrap());
        prop_assert_eq!(ea.cond_entropy(0, &q).unwrap().to_bits(), eb.cond_entropy(0, &q).unwrap().to_bits());
    }

    #[test]
    fn entropy_continuity_bound(k in 2usize..40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keys: Vec<Symbol> = (0..k as u32).map(|i| Symbol::new(i, k as u32)).collect();
        let table = |rng: &mut ChaCha8Rng| {
            JointCounts::from_entries(1, keys.iter().map(|&s| (vec![s], rng.gen_range(0..50u64))).filter(|e| e.1 > 0))
        };
        let (a, b) = (table(&mut rng), table(&mut rng));
        prop_assume!(a.total() > 0 && b.total() > 0);
        let delta = l1_distance(&a, &b).unwrap();
        let xi = (k + 1) as f64;
        prop_assume!(delta > 0.0 && delta <= xi / std::f64::consts::E);
        let gap = (entropy(&a).unwrap() - entropy(&b).unwrap()).abs();
        prop_assert!(gap <= delta * (xi / delta).log2() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn greedy_trace_discipline(nodes in 2usize..6, len in 50usize..600, noise in 0.0f64..0.6,
                               kappa in 0.01f64..1.0, seed in any::<u64>()) {
        let traj = chained_traj(nodes, len, noise, seed);
        let pairs = build_pairs(&traj, PairMode::Naive).unwrap();
        let max_set = nodes - 1;
        for v in 0..nodes {
            let a = recover_neighborhood(&traj, &pairs, v, kappa, max_set).unwrap();
            let b = recover_neighborhood(&traj, &pairs, v, kappa, max_set).unwrap();
            prop_assert_eq!(&a, &b);

            let mut last_accepted: Option<(usize, usize)> = None;
            let mut promoted_in: BTreeSet<usize> = BTreeSet::new();
            let mut accepted_in = std::collections::BTreeMap::<usize, usize>::new();
            let mut outers = BTreeSet::new();
            for e in &a.trace {
                match *e {
                    TraceEvent::Evaluated { outer, candidate, score, accepted } => {
                        outers.insert(outer);
                        prop_assert!(score >= 0.0, "negative score {}", score);
                        prop_assert_eq!(accepted, score > kappa / 2.0);
                        if accepted {
                            last_accepted = Some((outer, candidate));
                            *accepted_in.entry(outer).or_default() += 1;
                        }
                    }
                    TraceEvent::Promoted { outer, node } => {
                        prop_assert!(promoted_in.insert(outer), "two promotions in pass {}", outer);
                        prop_assert_eq!(last_accepted, Some((outer, node)));
                    }
                    TraceEvent::SizeCap { .. } => {}
                }
            }
            prop_assert!(outers.len() <= nodes);
            prop_assert!(accepted_in.values().all(|&c| c <= max_set));
            prop_assert_eq!(promoted_in.len(), a.neighborhood.len());
            prop_assert!(!a.neighborhood.contains(&v));
        }
    }

    #[test]
    fn edge_metric_invariants(n in 2usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> BTreeSet<(usize, usize)> {
            (0..n).flat_map(|u| (0..n).map(move |v| (u, v))).filter(|_| rng.gen_bool(0.3)).collect()
        };
        let (truth, est) = (draw(), draw());
        let m = edge_set_metrics(&truth, &est);
        prop_assert!((0.0..=1.0).contains(&m.precision) && (0.0..=1.0).contains(&m.recall));
        let strip = |s: &BTreeSet<(usize, usize)>| s.iter().filter(|(u, v)| u != v).copied().collect::<BTreeSet<_>>();
        prop_assert_eq!(m.hamming, strip(&truth).symmetric_difference(&strip(&est)).count());
        prop_assert_eq!(m.exact, m.hamming == 0);
    }
}

fn bound_strategy() -> impl Strategy<Value = BoundInputs> {
    (
        0u32..3,
        2u64..30,
        0.01f64..0.5,
        0.5f64..3.0,
        1e-5f64..1e-3,
        1u64..8,
        0.0f64..0.3,
        0.1f64..0.9,
    )
        .prop_map(|(m_bar, v_size, gamma, eps, delta, d, mu, rho)| BoundInputs {
            m_bar,
            v_size,
            gamma,
            epsilon: eps,
            epsilon_prime: eps,
            delta,
            delta_prime: delta,
            c: 1.0,
            c1: delta / 4.0,
            alpha_exp: 0.5,
            beta1: 0.75,
            d,
            mu_bar: mu,
            lipschitz: mu,
            rho,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn t_min_never_exceeds_t(t in 2u64..100_000, d in 1u64..50) {
        prop_assume!(t > d);
        prop_assert!(t_min(t, d) <= t);
        prop_assert_eq!(t_min(t, 1), t / 2);
    }

    #[test]
    fn sample_size_monotone(b in bound_strategy()) {
        let Ok(base) = theorem1_sample_size(&b) else { return Ok(()) };
        prop_assume!(base.mixing_satisfied);
        let t = base.t_required.unwrap();
        prop_assert!(base.side_conditions.iter().all(|c| c.holds));
        prop_assert!(t >= base.t_raw.unwrap());

        let larger_gamma = BoundInputs { gamma: b.gamma * 1.5, ..b.clone() };
        if let Ok(r) = theorem1_sample_size(&larger_gamma) {
            prop_assert!(r.t_required.unwrap() <= t);
        }
        for bigger in [
            BoundInputs { v_size: b.v_size + 1, ..b.clone() },
            BoundInputs { d: b.d + 1, ..b.clone() },
            BoundInputs { m_bar: b.m_bar + 1, ..b.clone() },
        ] {
            if let Ok(r) = theorem1_sample_size(&bigger) {
                prop_assert!(r.t_required.unwrap() >= t, "{:?}: {} < {}", bigger, r.t_required.unwrap(), t);
            }
        }
    }
}
