mod common;

use proptest::prelude::*;
use wdm_ep::clock::Clock;
use wdm_ep::ep_router::{fitness_value, select, EpConfig, EpRouter, RouteOutcome};
use wdm_ep::traffic::generate_requests;
use wdm_ep::wavelength::{validate_constraints, ActiveLightpath};
use wdm_ep::*;

/// Connected graph: a random spanning tree plus extra chords, with costs.
fn arb_topology() -> impl Strategy<Value = Topology> {
    (2usize..=9).prop_flat_map(|n| {
        let parents = (1..n).map(|i| 0..i).collect::<Vec<_>>();
        let chords = prop::collection::vec((0..n, 0..n), 0..n * 2);
        let costs = prop::collection::vec(1u32..=9, n * 3);
        (Just(n), parents, chords, costs).prop_map(|(n, parents, chords, costs)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &p)| (p, i + 1)).collect();
            for (u, v) in chords {
                let (a, b) = (u.min(v), u.max(v));
                if a != b && !edges.iter().any(|&(x, y)| (x.min(y), x.max(y)) == (a, b)) {
                    edges.push((a, b));
                }
            }
            let links: Vec<_> = edges
                .iter()
                .zip(costs.iter().cycle())
                .map(|(&(u, v), &c)| (u, v, c as f64 / 2.0))
                .collect();
            Topology::new(n, &links).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjacency_is_symmetric(t in arb_topology()) {
        for u in t.nodes() {
            for &(v, link) in t.neighbors(u) {
                prop_assert_eq!(t.link_between(u, v), Some(link));
                prop_assert_eq!(t.link_between(v, u), Some(link));
                prop_assert!(t.neighbors(v).iter().any(|&(w, _)| w == u));
            }
        }
        let degree_sum: usize = t.nodes().map(|n| t.degree(n)).sum();
        prop_assert_eq!(degree_sum, 2 * t.link_count());
    }

    #[test]
    fn text_round_trip(t in arb_topology()) {
        let back = load_topology(&t.to_text()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn reversed_path_costs_the_same(t in arb_topology(), seed in any::<u64>()) {
        let n = t.node_count();
        let s = NodeId((seed % n as u64) as usize);
        let d = NodeId(((seed / 7 + 1) % n as u64) as usize);
        prop_assume!(s != d);
        for path in common::simple_paths(&t, s, d).into_iter().take(20) {
            let mut rev = path.clone();
            rev.reverse();
            prop_assert_eq!(t.path_cost(&path).unwrap(), t.path_cost(&rev).unwrap());
        }
    }

    #[test]
    fn free_set_of_a_path_is_the_intersection(
        occupancy in prop::collection::vec(prop::collection::vec(any::<bool>(), 5), 6),
        a in prop::collection::btree_set(0usize..6, 1..6),
        b in prop::collection::btree_set(0usize..6, 1..6),
    ) {
        let mut db = WavelengthDatabase::new(6, 5);
        let mut id = 0;
        for (link, row) in occupancy.iter().enumerate() {
            for (w, &busy) in row.iter().enumerate() {
                if busy {
                    db.reserve(ActiveLightpath {
                        request_id: id,
                        source: NodeId(0),
                        destination: NodeId(1),
                        link_ids: vec![LinkId(link)],
                        wavelength: w,
                        teardown_time: 1.0,
                    }).unwrap();
                    id += 1;
                }
            }
        }
        let links = |s: &std::collections::BTreeSet<usize>| s.iter().map(|&l| LinkId(l)).collect::<Vec<_>>();
        let union: std::collections::BTreeSet<usize> = a.union(&b).copied().collect();
        let fa = db.free_wavelengths_on_path(&links(&a));
        let fb = db.free_wavelengths_on_path(&links(&b));
        let both: Vec<usize> = fa.iter().copied().filter(|w| fb.contains(w)).collect();
        prop_assert_eq!(db.free_wavelengths_on_path(&links(&union)), both);
    }

    #[test]
    fn fitness_is_gated_and_selection_is_elitist(
        cost in 0.5f64..50.0, hops in 1usize..13, t in 1e-6f64..1.0,
        fits in prop::collection::vec(0.0f64..10.0, 1..16),
    ) {
        prop_assert_eq!(fitness_value(0, cost, hops, t), 0.0);
        let f = fitness_value(1, cost, hops, t);
        prop_assert!((f - (1.0 / cost + 1.0 / hops as f64 + 1.0 / t)).abs() <= 1e-9 * f);

        let topology = common::line(2);
        let pool: Vec<Chromosome> = fits.iter().map(|&fit| {
            let mut c = Chromosome::from_genes(&topology, vec![NodeId(0), NodeId(1)], 1.0, 1e-6, 4).unwrap();
            c.fitness = fit;
            c
        }).collect();
        let best = select(&pool);
        prop_assert!(pool.iter().all(|c| c.fitness <= pool[best].fitness));
        prop_assert!(pool[best].fitness >= pool[0].fitness);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Routing a random request stream with random teardowns keeps the
    /// database consistent and every acceptance sound.
    #[test]
    fn routing_keeps_database_consistent(
        t in arb_topology(),
        w in 1usize..4,
        kind in prop::sample::select(StrategyKind::ALL.to_vec()),
        seed in any::<u64>(),
        departures in prop::collection::vec(any::<bool>(), 60),
    ) {
        let cfg = EpConfig { generations: 3, offspring: 4, seed, ..EpConfig::default() };
        let mut router = EpRouter::new(cfg).unwrap();
        let mut db = WavelengthDatabase::for_topology(&t, w);
        let mut strategy = AssignmentStrategy::new(kind, seed);
        let traffic = TrafficConfig::new(1.0, HoldingModel::exponential(5.0).unwrap(), 60, seed).unwrap();
        let mut live = Vec::new();
        for (r, depart) in generate_requests(&traffic, &t).zip(departures) {
            let before = db.clone();
            let d = router.route_request(&t, &r, &mut db, &mut strategy, &Clock::default()).unwrap();
            prop_assert_eq!(d.fitness_evaluations, cfg.evaluations_per_request());
            match &d.outcome {
                RouteOutcome::Accepted { chromosome, wavelength } => {
                    prop_assert!(chromosome.is_valid(&t));
                    prop_assert_eq!(chromosome.source(), r.source);
                    prop_assert_eq!(chromosome.destination(), r.destination);
                    prop_assert!(common::wavelength_free(&before, &chromosome.links, *wavelength));
                    live.push(r.id);
                }
                RouteOutcome::Blocked { .. } => {
                    prop_assert_eq!(&db, &before);
                }
            }
            if depart && !live.is_empty() {
                let id = live.remove((seed as usize ^ r.id as usize) % live.len());
                db.release(id).unwrap();
            }
            prop_assert!(validate_constraints(&db, &t).is_empty());
        }
        for id in live {
            db.release(id).unwrap();
        }
        prop_assert!(db.is_all_free());
    }
}

#[test]
fn request_streams_are_well_formed() {
    let t = Topology::nsf14();
    let cfg = TrafficConfig::new(6.0, HoldingModel::pareto(1.2, 1.0).unwrap(), 20_000, 3).unwrap();
    let mut last = 0.0;
    for (i, r) in generate_requests(&cfg, &t).enumerate() {
        assert_eq!(r.id, i as u64);
        assert_ne!(r.source, r.destination);
        assert!(r.source.0 < 14 && r.destination.0 < 14);
        assert!(r.arrival_time >= last);
        assert!(r.holding_time >= 1.0);
        last = r.arrival_time;
    }
}
