mod common;

use common::{connected_without, random_connected_graph, Gen};
use opfdp::cli::fixtures::case9;
use opfdp::linalg::rank;
use opfdp::network::{
    bridge_flags, build_incidence, find_bridges, split_mixed_buses, Branch, Bus, BusKind, GeneratorSpec,
    PowerNetwork, RawBus, RawNetwork, DEFAULT_SURROGATE_SUSCEPTANCE,
};
use proptest::prelude::*;

fn network_from(n: usize, edges: &[(usize, usize)], g: &mut Gen) -> PowerNetwork {
    let buses = (0..n)
        .map(|i| Bus {
            label: i as u32 + 1,
            kind: if i == 0 { BusKind::Generator } else { BusKind::Load },
        })
        .collect();
    let branches = edges
        .iter()
        .map(|&(a, b)| Branch {
            from: a,
            to: b,
            susceptance: g.uniform(0.5, 20.0),
            flow_min: -100.0,
            flow_max: 100.0,
        })
        .collect();
    PowerNetwork::new(buses, branches, 100.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bridges_match_edge_removal(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let n = g.int(2, 50);
        let extra = g.int(0, 70);
        let edges = random_connected_graph(&mut g, n, extra);
        let flags = bridge_flags(n, &edges).unwrap();
        for e in 0..edges.len() {
            prop_assert_eq!(flags[e], !connected_without(n, &edges, Some(e)));
        }
    }

    #[test]
    fn bridges_do_not_depend_on_edge_order(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let n = g.int(2, 30);
        let extra = g.int(0, 30);
        let edges = random_connected_graph(&mut g, n, extra);
        let mut perm: Vec<usize> = (0..edges.len()).collect();
        g.shuffle(&mut perm);
        let shuffled: Vec<(usize, usize)> = perm.iter().map(|&i| edges[i]).collect();
        let a = bridge_flags(n, &edges).unwrap();
        let b = bridge_flags(n, &shuffled).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            prop_assert_eq!(b[k], a[i]);
        }
    }

    #[test]
    fn incidence_columns_sum_to_zero_and_laplacian_rank(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let n = g.int(2, 25);
        let extra = g.int(0, 20);
        let edges = random_connected_graph(&mut g, n, extra);
        let net = network_from(n, &edges, &mut g);
        let c = build_incidence(&net);
        for e in 0..c.cols() {
            let col = c.column(e);
            prop_assert_eq!(col.iter().map(|&v| v as i32).sum::<i32>(), 0);
            prop_assert_eq!(col.iter().filter(|&&v| v != 0).count(), 2);
        }
        prop_assert_eq!(rank(&net.laplacian(), 1e-9), n - 1);
    }

    #[test]
    fn splitting_preserves_capacity_and_load(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let n = 10;
        let edges = random_connected_graph(&mut g, n, 4);
        let mut buses: Vec<RawBus> = (0..n)
            .map(|i| RawBus { label: i as u32 + 1, generator: None, load: g.uniform(1.0, 30.0) })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        g.shuffle(&mut order);
        // Three mixed buses and two pure generator buses.
        for (k, &i) in order.iter().take(5).enumerate() {
            buses[i].generator = Some(GeneratorSpec { cost: g.uniform(1.0, 9.0), min: 0.0, max: g.uniform(50.0, 90.0) });
            if k >= 3 {
                buses[i].load = 0.0;
            }
        }
        let raw = RawNetwork {
            buses: buses.clone(),
            branches: edges.iter().map(|&(a, b)| Branch { from: a, to: b, susceptance: 5.0, flow_min: -80.0, flow_max: 80.0 }).collect(),
            base_mva: 100.0,
        };
        let out = split_mixed_buses(&raw, DEFAULT_SURROGATE_SUSCEPTANCE).unwrap();
        prop_assert_eq!(out.split_count, 3);
        prop_assert_eq!(out.network.n_buses(), n + 3);
        prop_assert_eq!(out.network.n_branches(), raw.branches.len() + 3);
        let mut before: Vec<f64> = buses.iter().filter(|b| b.load > 0.0).map(|b| b.load).collect();
        let mut after = out.loads.clone();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        prop_assert_eq!(before, after);
        let mut cap_before: Vec<f64> = buses.iter().filter_map(|b| b.generator.map(|g| g.max)).collect();
        let mut cap_after: Vec<f64> = out.generators.iter().map(|g| g.max).collect();
        cap_before.sort_by(f64::total_cmp);
        cap_after.sort_by(f64::total_cmp);
        prop_assert_eq!(cap_before, cap_after);
    }
}

#[test]
fn case9_incidence_and_bridges() {
    let case = case9().load().unwrap();
    let net = case.instance.network();
    let c = build_incidence(net);
    assert_eq!((c.rows(), c.cols()), (9, 9));
    for e in 0..9 {
        let mut sum = 0i32;
        for bus in 0..9 {
            sum += c.get(bus, e) as i32;
        }
        assert_eq!(sum, 0);
    }
    let ends: Vec<(u32, u32)> = find_bridges(net)
        .unwrap()
        .into_iter()
        .map(|e| {
            let b = &net.branches()[e];
            let (x, y) = (net.buses()[b.from].label, net.buses()[b.to].label);
            (x.min(y), x.max(y))
        })
        .collect();
    assert_eq!(ends, vec![(1, 4), (3, 6), (2, 8)]);
}
