mod common;

use common::{random_loads, random_tree_instance, Gen};
use opfdp::cli::fixtures::{case9, radial, ring};
use opfdp::opf::{opf_derivative, solve_opf, stationarity_residual, uniqueness_diagnostic, DEFAULT_DUAL_TOL};
use opfdp::Error;
use proptest::prelude::*;

fn check_invariants(inst: &opfdp::opf::OpfInstance, load: &[f64], sol: &opfdp::opf::OpfSolution) {
    let net = inst.network();
    let ng = net.n_generators();
    let inj = net.laplacian().mul_vec(&sol.angles);
    for k in 0..net.n_buses() {
        let target = if k < ng { sol.gen[k] } else { -load[k - ng] };
        assert!((inj[k] - target).abs() <= 1e-7, "balance at bus {k}: {} vs {target}", inj[k]);
    }
    for i in 0..ng {
        assert!(sol.gen[i] >= inst.gen_min()[i] - 1e-7 && sol.gen[i] <= inst.gen_max()[i] + 1e-7);
    }
    for (e, br) in net.branches().iter().enumerate() {
        assert!(sol.flows[e] >= br.flow_min - 1e-7 && sol.flows[e] <= br.flow_max + 1e-7);
    }
    assert!((sol.gen.iter().sum::<f64>() - load.iter().sum::<f64>()).abs() <= 1e-6);
    assert_eq!(sol.angles[0], 0.0);
    assert!(sol.kkt.max() <= 1e-8);
    assert!(stationarity_residual(inst, sol) <= 1e-8);
}

#[test]
fn fixtures_satisfy_solution_invariants() {
    for case in [radial(), case9(), ring(10).unwrap(), ring(40).unwrap()] {
        let c = case.load().unwrap();
        let sol = solve_opf(&c.instance, &c.load).unwrap();
        check_invariants(&c.instance, &c.load, &sol);
    }
}

#[test]
fn radial_bottleneck_is_the_only_binding_limit() {
    let c = radial().load().unwrap();
    let sol = solve_opf(&c.instance, &c.load).unwrap();
    let net = c.instance.network();
    let bound: Vec<(u32, u32)> = sol
        .binding_branches
        .iter()
        .map(|&e| (net.buses()[net.branches()[e].from].label, net.buses()[net.branches()[e].to].label))
        .collect();
    assert_eq!(bound, vec![(3, 6)]);
    assert!(sol.binding_gens.is_empty());
}

#[test]
fn radial_derivative_columns_pick_the_subtree_generator() {
    let c = radial().load().unwrap();
    let jac = opf_derivative(&c.instance, &c.load, None).unwrap();
    // Loads on buses 3, 4, 5 sit left of the bottleneck, 6, 7, 8 right of it.
    for (u, bus) in [3u32, 4, 5, 6, 7, 8].iter().enumerate() {
        let expected = if *bus <= 5 { [1.0, 0.0] } else { [0.0, 1.0] };
        assert_eq!(c.load_index(*bus).unwrap(), u);
        for i in 0..2 {
            assert!((jac[(i, u)] - expected[i]).abs() < 1e-6, "bus {bus}, gen {i}: {}", jac[(i, u)]);
        }
    }
}

#[test]
fn case9_regime() {
    let c = case9().load().unwrap();
    let sol = solve_opf(&c.instance, &c.load).unwrap();
    assert!(sol.binding_gens.contains(&0), "generator 1 should sit at its limit");
    assert!((sol.gen[0] - 100.0).abs() < 1e-7);
    let u = uniqueness_diagnostic(&sol, DEFAULT_DUAL_TOL);
    assert!(u.satisfied && u.count >= 2, "{u:?}");

    let jac = opf_derivative(&c.instance, &c.load, None).unwrap();
    let bus5 = c.load_index(5).unwrap();
    let bus9 = c.load_index(9).unwrap();
    assert!(jac[(1, bus5)] < 0.0, "generator 2 must fall with bus 5 load");
    assert!(jac[(1, bus9)] < -1.9);
    for u in 0..c.load.len() {
        assert!((jac.column(u).iter().sum::<f64>() - 1.0).abs() < 1e-5);
    }
}

#[test]
fn nonsmooth_point_is_reported() {
    // Generator 1 supplies the left loads plus 50 MW through the bottleneck.
    // With 250 MW on the left it reaches its 300 MW cap exactly, so the
    // binding set differs on either side of this point.
    let c = radial().load().unwrap();
    let mut load = c.load.clone();
    load[0] = 250.0 - load[1] - load[2];
    match opf_derivative(&c.instance, &load, None) {
        Err(Error::NonsmoothPoint { .. }) => {}
        other => panic!("expected a nonsmooth point, got {other:?}"),
    }
    load[0] -= 10.0;
    assert!(opf_derivative(&c.instance, &load, None).is_ok());
}

#[test]
fn cost_scaling_leaves_dispatch_unchanged() {
    for case in [radial(), case9(), ring(12).unwrap()] {
        let c = case.load().unwrap();
        let base = solve_opf(&c.instance, &c.load).unwrap();
        for factor in [0.01, 3.0, 250.0] {
            let scaled = solve_opf(&c.instance.scaled_cost(factor), &c.load).unwrap();
            for (a, b) in base.gen.iter().zip(&scaled.gen) {
                assert!((a - b).abs() <= 1e-8);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn trees_have_nonnegative_column_stochastic_derivatives(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let n = g.int(3, 20);
        let inst = random_tree_instance(&mut g, n);
        for _ in 0..20 {
            let load = random_loads(&mut g, inst.network().n_loads());
            match opf_derivative(&inst, &load, None) {
                Ok(jac) => {
                    for u in 0..load.len() {
                        let col = jac.column(u);
                        prop_assert!(col.iter().all(|v| *v >= -1e-8));
                        prop_assert!((col.iter().sum::<f64>() - 1.0).abs() <= 1e-5);
                    }
                }
                Err(Error::OpfInfeasible | Error::NonsmoothPoint { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }

    #[test]
    fn random_tree_solutions_satisfy_invariants(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let n = g.int(3, 20);
        let inst = random_tree_instance(&mut g, n);
        let load = random_loads(&mut g, inst.network().n_loads());
        if let Ok(sol) = solve_opf(&inst, &load) {
            check_invariants(&inst, &load, &sol);
        }
    }
}
