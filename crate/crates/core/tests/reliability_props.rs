mod common;

use common::*;
use gridconf_core::grid::{Bus, Network};
use gridconf_core::reliability::{
    assign_failure_rates, average_curtailed_power, unavailability, AcpEvaluator, ReliabilityParams,
};
use gridconf_core::topology::build_rooted_tree;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn with_demand_scaled(net: &Network, c: f64) -> Network {
    let buses: Vec<Bus> = net
        .buses()
        .iter()
        .map(|b| Bus {
            demand_kw: b.demand_kw * c,
            ..b.clone()
        })
        .collect();
    Network::new(net.name(), buses, net.branches().to_vec(), net.root()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn breadth_first_matches_naive_path_sum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for name in ["33", "69"] {
            let net = network(name);
            let m = model(&net);
            let cfg = random_feasible(&net, &mut rng);
            let u = unavailability(&net, &m, &build_rooted_tree(&net, &cfg).unwrap());
            let naive = naive_unavailability(&net, &m, &cfg);
            for (k, (&a, &b)) in u.as_slice().iter().zip(&naive).enumerate() {
                prop_assert!(rel_close(a, b, 1e-12), "bus {}: {} vs {}", k + 1, a, b);
            }
            let acp = average_curtailed_power(&net, &m, &cfg).unwrap();
            let by_hand: f64 = net.buses().iter().map(|b| b.demand_kw * naive[b.id.index()]).sum::<f64>() / 1000.0;
            prop_assert!(rel_close(acp, by_hand, 1e-12));
            prop_assert!(rel_close(AcpEvaluator::new(&net, &m).evaluate(&cfg.closed_mask(&net)), acp, 1e-12));
        }
    }

    #[test]
    fn unavailability_grows_away_from_the_root(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for name in ["33", "69"] {
            let net = network(name);
            let m = model(&net);
            let cfg = random_feasible(&net, &mut rng);
            let tree = build_rooted_tree(&net, &cfg).unwrap();
            let u = unavailability(&net, &m, &tree);
            prop_assert_eq!(u.get(net.root()), 0.0);
            for b in net.buses() {
                if let Some((p, _)) = tree.parent(b.id) {
                    prop_assert!(u.get(b.id) >= u.get(p));
                }
            }
            prop_assert!(average_curtailed_power(&net, &m, &cfg).unwrap() > 0.0);
        }
    }

    #[test]
    fn linear_in_demand_and_failure_rate(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for name in ["33", "69"] {
            let net = network(name);
            let m = model(&net);
            let cfg = random_feasible(&net, &mut rng);
            let base = average_curtailed_power(&net, &m, &cfg).unwrap();
            let scaled_net = with_demand_scaled(&net, c);
            let by_demand = average_curtailed_power(&scaled_net, &model(&scaled_net), &cfg).unwrap();
            prop_assert!(rel_close(by_demand, c * base, 1e-12));
            let by_lambda = average_curtailed_power(&net, &m.scaled(c), &cfg).unwrap();
            prop_assert!(rel_close(by_lambda, c * base, 1e-12));
            let p = ReliabilityParams { lambda_min: 0.1 * c, lambda_max: 0.4 * c, repair_hours: 6.0 };
            let by_params = average_curtailed_power(&net, &assign_failure_rates(&net, &p).unwrap(), &cfg).unwrap();
            prop_assert!(rel_close(by_params, c * base, 1e-12));
        }
    }

    #[test]
    fn failure_rates_respect_bounds_and_order(net in arb_network(), lo in 0.0f64..1.0, span in 0.0f64..1.0) {
        let p = ReliabilityParams { lambda_min: lo, lambda_max: lo + span, repair_hours: 6.0 };
        let m = assign_failure_rates::<f64>(&net, &p).unwrap();
        let lines: Vec<_> = net.branches().iter().filter(|b| !b.is_tie).collect();
        for a in &lines {
            let la = m.lambda(a.id);
            prop_assert!(la >= lo - 1e-12 && la <= lo + span + 1e-12);
            for b in &lines {
                if a.impedance() < b.impedance() {
                    prop_assert!(la <= m.lambda(b.id) + 1e-12);
                }
            }
        }
        for t in net.branches().iter().filter(|b| b.is_tie) {
            prop_assert_eq!(m.lambda(t.id), 0.0);
        }
    }
}
