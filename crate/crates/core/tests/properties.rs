use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use perclab::exact::{rat, Rational};
use perclab::graphs::{
    ball, modular_ratio, FamilyKind, GraphFamily, OrbitWeights, VertexRef, Window,
};
use perclab::percolation::{self, clusters, sample_config_trial, EdgeCoupling};
use perclab::thresholds::{ph_closed_form, ph_limit_scan};
use perclab::tmtp::{self, Conductance};
use perclab::walks::{self, EdgeWeight, KernelKind};

fn family(kind: FamilyKind) -> GraphFamily {
    GraphFamily::new(kind).unwrap()
}

fn families() -> &'static [GraphFamily] {
    static F: OnceLock<Vec<GraphFamily>> = OnceLock::new();
    F.get_or_init(|| {
        vec![
            family(FamilyKind::FixedEndTree { b: 2 }),
            family(FamilyKind::FixedEndTree { b: 3 }),
            family(FamilyKind::OrientedTree { n1: 1, n2: 2 }),
            family(FamilyKind::OrientedTree { n1: 2, n2: 3 }),
            family(FamilyKind::OrientedTree { n1: 2, n2: 2 }),
            family(FamilyKind::Grandparent { b: 2 }),
            family(FamilyKind::DiestelLeader { k: 2, n: 3 }),
            family(FamilyKind::SubdividedFixedEndTree { b: 2 }),
            family(FamilyKind::EuclideanLattice { dim: 1 }),
            family(FamilyKind::EuclideanLattice { dim: 2 }),
            family(FamilyKind::CheckerboardLattice { dim: 2 }),
            family(FamilyKind::ProductWithZ {
                base: Box::new(FamilyKind::FixedEndTree { b: 2 }),
                dim: 1,
            }),
        ]
    })
}

fn nonunimodular() -> impl Iterator<Item = &'static GraphFamily> {
    families().iter().filter(|g| !g.is_unimodular())
}

/// Balls are reused across proptest cases.
fn cached_ball(fi: usize, r: u32) -> Arc<Window> {
    type Cache = std::sync::Mutex<HashMap<(usize, u32), Arc<Window>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut map = cache.lock().unwrap();
    map.entry((fi, r))
        .or_insert_with(|| {
            let g = &families()[fi];
            Arc::new(ball(g, &g.origin(), r).unwrap())
        })
        .clone()
}

/// Ball size by plain BFS over `neighbors`.
fn naive_ball_size(g: &GraphFamily, r: u32) -> usize {
    let mut seen: HashSet<VertexRef> = HashSet::from([g.origin()]);
    let mut frontier = vec![g.origin()];
    for _ in 0..r {
        let mut next = Vec::new();
        for v in &frontier {
            for w in g.neighbors(v).unwrap() {
                if seen.insert(w.clone()) {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    seen.len()
}

#[test]
fn ball_matches_naive_bfs() {
    for g in families() {
        for r in 0..=4 {
            let w = ball(g, &g.origin(), r).unwrap();
            assert_eq!(w.len(), naive_ball_size(g, r), "{} R = {r}", g.kind);
        }
    }
}

#[test]
fn levels_are_unbounded_only_without_unimodularity() {
    for (fi, g) in families().iter().enumerate() {
        let max_level = |r| {
            cached_ball(fi, r)
                .vertices
                .iter()
                .map(|v| v.level.abs())
                .max()
                .unwrap()
        };
        if g.modular_base == rat(1, 1) {
            if matches!(
                g.kind,
                FamilyKind::EuclideanLattice { .. } | FamilyKind::CheckerboardLattice { .. }
            ) {
                assert_eq!(max_level(6), 0, "{}", g.kind);
            }
            continue;
        }
        for r in [2u32, 4, 6] {
            assert!(2 * max_level(r) >= r as i64, "{} R = {r}", g.kind);
        }
    }
}

#[test]
fn every_level_is_infinite() {
    for g in nonunimodular() {
        // Subdivision doubles distances, so its radii are doubled too.
        let scale = match g.kind {
            FamilyKind::SubdividedFixedEndTree { .. } => 2,
            _ => 1,
        };
        let counts: Vec<usize> = [2u32, 4, 6, 8]
            .iter()
            .map(|&r| r * scale)
            .map(|r| {
                let w = ball(g, &g.origin(), r).unwrap();
                w.vertices.iter().filter(|v| v.level == 0).count()
            })
            .collect();
        assert!(
            counts.windows(2).all(|c| c[1] > c[0]),
            "{}: {counts:?}",
            g.kind
        );
    }
}

#[test]
fn mu_is_a_probability_vector_solving_the_system() {
    for g in families() {
        let mu = tmtp::solve_mu(g).unwrap();
        let sum = mu.weights.a.iter().fold(rat(0, 1), |acc, x| acc + x);
        assert_eq!(sum, rat(1, 1), "{}", g.kind);
        assert_eq!(mu.max_residual(), rat(0, 1), "{}", g.kind);
        assert!(mu.routes_agree(), "{}", g.kind);
    }
}

#[test]
fn tmtp_suite_exact_on_every_family() {
    for g in families() {
        let mu = tmtp::solve_mu(g).unwrap().weights;
        for f in tmtp::transport_suite(g) {
            let r = tmtp::verify_tmtp(g, &mu, &f).unwrap();
            assert!(r.equal && r.lhs == r.rhs, "{} {}", g.kind, r.transport);
        }
    }
}

#[test]
fn sqrt_biased_is_delayed_srw_on_unimodular_families() {
    for (fi, g) in families().iter().enumerate() {
        if !g.is_unimodular() {
            continue;
        }
        let win = cached_ball(fi, 2);
        for t in 0..20 {
            let cfg = sample_config_trial(win.clone(), 0.5, 5, t).unwrap();
            for v in win.interior() {
                let a = walks::kernel(KernelKind::SqrtBiased, &cfg, v).unwrap();
                let b = walks::kernel(KernelKind::DelayedSrw, &cfg, v).unwrap();
                assert_eq!(a, b, "{} vertex {v}", g.kind);
            }
        }
    }
}

#[test]
fn tree_connectivity_is_p_to_the_distance() {
    let trees = [
        family(FamilyKind::FixedEndTree { b: 2 }),
        family(FamilyKind::OrientedTree { n1: 1, n2: 2 }),
        family(FamilyKind::OrientedTree { n1: 2, n2: 3 }),
    ];
    for (i, g) in trees.iter().enumerate() {
        for &p in &[0.3, 0.6, 0.9] {
            for d in [1u32, 3, 5] {
                let o = g.origin();
                let y = perclab::graphs::geodesic_targets(g, &o, d)
                    .unwrap()
                    .pop()
                    .unwrap();
                let seed = perclab::rng::derive(i as u64, (p * 10.0) as u64 * 10 + d as u64);
                let est =
                    percolation::connectivity_estimate(g, p, &o, &y, 20_000, seed, 0).unwrap();
                let exact = p.powi(d as i32);
                assert!(
                    (est.p_hat - exact).abs() <= 3.0 * est.se.max(1e-12),
                    "{} p = {p} d = {d}: {} vs {exact}",
                    g.kind,
                    est.p_hat
                );
            }
        }
    }
}

#[test]
fn scans_are_monotone_and_above_the_closed_form() {
    for (n1, n2) in [(1, 2), (1, 3), (2, 3), (2, 5)] {
        let rep = ph_limit_scan(n1, n2, 16, 1e-11).unwrap();
        assert!(rep.monotone, "({n1},{n2})");
        for r in &rep.rows {
            assert!(
                r.inv_lambda >= rep.closed_form - 1e-9,
                "({n1},{n2}) n = {}",
                r.n
            );
        }
    }
}

#[test]
fn light_and_heavy_conductance_limits() {
    // Ray-decoration clusters carry vanishing conductance.
    let g = family(FamilyKind::FixedEndTree { b: 2 });
    let c: Vec<f64> = percolation::ray_cluster_conductance(&g, 11, &[4, 16, 64, 128])
        .unwrap()
        .iter()
        .map(|r| r.c_eff)
        .collect();
    assert!(c[3] < c[0] / 8.0, "{c:?}");
    // The full tree keeps a positive limit.
    let win = Arc::new(ball(&g, &g.origin(), 10).unwrap());
    let cfg = percolation::Config::constant(win, true);
    let full: Vec<f64> = (6..=10)
        .map(|r| {
            walks::effective_conductance(&cfg, 0, r, EdgeWeight::Unit)
                .unwrap()
                .c_eff
        })
        .collect();
    assert!(full.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{full:?}");
    assert!(full[4] > 1.0 && full[3] - full[4] < 1e-2, "{full:?}");
}

/// Components of the open subgraph by BFS.
fn bfs_components(cfg: &percolation::Config) -> Vec<usize> {
    let win = &cfg.window;
    let mut label = vec![usize::MAX; win.len()];
    for s in 0..win.len() {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for &(y, e) in win.adjacent(x) {
                if cfg.is_open(e) && label[y] == usize::MAX {
                    label[y] = s;
                    queue.push_back(y);
                }
            }
        }
    }
    label
}

fn family_index() -> impl Strategy<Value = usize> {
    0..families().len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjacency_is_symmetric(fi in family_index(), pick in any::<prop::sample::Index>()) {
        let g = &families()[fi];
        let r = if g.orbit_degrees.iter().max().unwrap() > &4 { 6 } else { 8 };
        let win = cached_ball(fi, r);
        let v = &win.vertices[pick.index(win.len())];
        for w in g.neighbors(v).unwrap() {
            let back = g.neighbors(&w).unwrap();
            let there = g.neighbors(v).unwrap().iter().filter(|x| **x == w).count();
            let here = back.iter().filter(|x| *x == v).count();
            prop_assert_eq!(there, here, "{} {:?} {:?}", g.kind, v, w);
        }
    }

    #[test]
    fn cocycle_identity(
        fi in family_index(),
        picks in prop::array::uniform3(any::<prop::sample::Index>()),
        tilt in 1i64..6,
    ) {
        let g = &families()[fi];
        let win = cached_ball(fi, 4);
        let weights = if g.orbit_count == 1 {
            OrbitWeights::uniform(g)
        } else {
            let total = rat(tilt + g.orbit_count as i64 - 1, 1);
            let mut a = vec![rat(1, 1) / &total; g.orbit_count];
            a[0] = rat(tilt, 1) / &total;
            OrbitWeights::new(g, a).unwrap()
        };
        let [x, y, z] = picks.map(|i| &win.vertices[i.index(win.len())]);
        let d = |u, v| modular_ratio(g, &weights, u, v).unwrap();
        prop_assert_eq!(d(x, y) * d(y, z), d(x, z));
    }

    #[test]
    fn harmonic_only_for_mu(fi in family_index(), num in 1i64..20, den in 1i64..20) {
        let g = &families()[fi];
        prop_assume!(g.orbit_count > 1);
        let mu = tmtp::solve_mu(g).unwrap().weights;
        let total = rat(num + den, 1);
        let a = vec![rat(num, 1) / &total, rat(den, 1) / &total];
        let w = OrbitWeights::new(g, a.clone()).unwrap();
        let win = cached_ball(fi, 3);
        let r = tmtp::harmonicity_residual(g, &w, &g.origin(), &win, &Conductance::Unit).unwrap();
        prop_assert_eq!(r.is_exactly_zero(), a == mu.a);
    }

    #[test]
    fn level_offset_conductances_are_harmonic_on_transitive_families(
        fi in family_index(),
        c1 in 1i64..30,
        c2 in 1i64..30,
        den in 1i64..7,
    ) {
        let g = &families()[fi];
        prop_assume!(g.is_transitive());
        let values: BTreeMap<u64, Rational> =
            BTreeMap::from([(0, rat(den, 3)), (1, rat(c1, den)), (2, rat(c2, den))]);
        let mu = tmtp::solve_mu(g).unwrap().weights;
        let win = cached_ball(fi, 3);
        let r = tmtp::harmonicity_residual(
            g, &mu, &g.origin(), &win, &Conductance::ByLevelOffset { values },
        ).unwrap();
        prop_assert!(r.is_exactly_zero(), "{}: {}", g.kind, r.max_residual);
    }

    #[test]
    fn union_find_matches_bfs(fi in family_index(), p in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut r = 4;
        let win = loop {
            let w = cached_ball(fi, r);
            if w.len() <= 200 || r == 1 { break w; }
            r -= 1;
        };
        let cfg = percolation::sample_config(win.clone(), p, seed).unwrap();
        let dec = clusters(&cfg);
        let label = bfs_components(&cfg);
        for u in 0..win.len() {
            for v in 0..win.len() {
                prop_assert_eq!(dec.connected(u, v), label[u] == label[v]);
            }
        }
        let distinct: HashSet<usize> = label.iter().copied().collect();
        prop_assert_eq!(dec.clusters.len(), distinct.len());
        prop_assert_eq!(dec.clusters.iter().map(|c| c.size).sum::<usize>(), win.len());
    }

    #[test]
    fn coupling_is_monotone(fi in family_index(), p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0, seed in any::<u64>()) {
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let coupling = EdgeCoupling::new(cached_ball(fi, 3), seed, 0);
        let a = coupling.config(lo).unwrap();
        let b = coupling.config(hi).unwrap();
        for e in 0..a.open.len() {
            prop_assert!(!a.is_open(e) || b.is_open(e));
        }
        let ca: HashSet<usize> = a.cluster_of(0).into_iter().collect();
        let cb: HashSet<usize> = b.cluster_of(0).into_iter().collect();
        prop_assert!(ca.is_subset(&cb));
    }

    #[test]
    fn sampling_ignores_pool_size(fi in family_index(), p in 0.0f64..=1.0, seed in any::<u64>(), workers in 1usize..5) {
        let win = cached_ball(fi, 3);
        let direct = percolation::sample_config(win.clone(), p, seed).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        let pooled = pool.install(|| percolation::sample_config(win.clone(), p, seed).unwrap());
        prop_assert_eq!(direct.open, pooled.open);
    }

    #[test]
    fn ph_is_symmetric(n1 in 1u32..60, n2 in 1u32..60) {
        let a = ph_closed_form(n1, n2).unwrap();
        let b = ph_closed_form(n2, n1).unwrap();
        prop_assert_eq!(a.value, b.value);
        prop_assert!(a.value > 0.0 && a.value <= 0.5);
    }

    #[test]
    fn kernels_are_self_reversed(fi in family_index(), p in 0.0f64..=1.0, trial in any::<u64>()) {
        let cfg = sample_config_trial(cached_ball(fi, 2), p, 21, trial).unwrap();
        let rep = walks::stationarity_check(&cfg).unwrap();
        prop_assert!(rep.max_detailed_balance_deviation.is_zero());
        for v in cfg.window.interior() {
            prop_assert_eq!(walks::reversed_kernel(&cfg, v).unwrap(), walks::biased_kernel(&cfg, v).unwrap());
        }
    }

    #[test]
    fn conductance_nonincreasing_in_radius(fi in family_index(), p in 0.3f64..=1.0, trial in any::<u64>()) {
        let cfg = sample_config_trial(cached_ball(fi, 4), p, 22, trial).unwrap();
        let c: Vec<f64> = (1..=4)
            .map(|r| walks::effective_conductance(&cfg, 0, r, EdgeWeight::Unit).unwrap().c_eff)
            .collect();
        prop_assert!(c.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{:?}", c);
    }
}
