#![allow(dead_code)]

use gridconf_core::grid::{bundled_network, Branch, Bus};
use gridconf_core::reliability::{assign_failure_rates, ReliabilityModel, ReliabilityParams};
use gridconf_core::topology::is_radial;
use gridconf_core::{BranchId, BusId, Configuration, Network};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::Rng;

pub fn network(name: &str) -> Network {
    bundled_network(name)
}

pub fn model(net: &Network) -> ReliabilityModel<f64> {
    assign_failure_rates(net, &ReliabilityParams::default()).unwrap()
}

/// Uniform random set of `T` open branches (not necessarily feasible).
pub fn random_open_set<R: Rng>(net: &Network, rng: &mut R) -> Configuration {
    let picks = sample(rng, net.branch_count(), net.tie_count());
    Configuration::new(net, picks.into_iter().map(BranchId::from_index)).unwrap()
}

/// Rejection-samples a radial configuration.
pub fn random_feasible<R: Rng>(net: &Network, rng: &mut R) -> Configuration {
    loop {
        let cfg = random_open_set(net, rng);
        if is_radial(net, &cfg) {
            return cfg;
        }
    }
}

/// Branch ids on the unique closed path from the root to `target`, found by
/// depth-first search with an explicit stack.
pub fn naive_path(net: &Network, cfg: &Configuration, target: BusId) -> Vec<BranchId> {
    fn dfs(
        net: &Network,
        cfg: &Configuration,
        at: BusId,
        from: Option<BranchId>,
        target: BusId,
        path: &mut Vec<BranchId>,
    ) -> bool {
        if at == target {
            return true;
        }
        for b in net.branches() {
            if cfg.is_open(b.id) || Some(b.id) == from || (b.from != at && b.to != at) {
                continue;
            }
            path.push(b.id);
            if dfs(net, cfg, b.other(at), Some(b.id), target, path) {
                return true;
            }
            path.pop();
        }
        false
    }
    let mut path = Vec::new();
    assert!(
        dfs(net, cfg, net.root(), None, target, &mut path),
        "bus {target} unreachable"
    );
    path
}

/// `Σ λ·r` along the root path of every bus, computed independently of any tree structure.
pub fn naive_unavailability(
    net: &Network,
    model: &ReliabilityModel<f64>,
    cfg: &Configuration,
) -> Vec<f64> {
    net.buses()
        .iter()
        .map(|b| {
            naive_path(net, cfg, b.id)
                .into_iter()
                .map(|e| model.lambda(e) * model.repair_hours(e))
                .sum()
        })
        .collect()
}

/// Small random network: a random spanning tree rooted at bus 1 plus `extra`
/// tie branches between pairs not already joined.
pub fn arb_network() -> impl Strategy<Value = Network> {
    (3usize..9, 1usize..4, any::<u64>()).prop_map(|(n, extra, seed)| {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let buses: Vec<Bus> = (1..=n)
            .map(|i| Bus {
                id: BusId(i as u32),
                demand_kw: if i == 1 {
                    0.0
                } else {
                    rng.gen_range(0.0..500.0)
                },
            })
            .collect();
        let mut pairs: Vec<(u32, u32)> = (2..=n as u32).map(|i| (rng.gen_range(1..i), i)).collect();
        let tree_edges = pairs.len();
        let mut guard = 0;
        while pairs.len() < tree_edges + extra && guard < 1000 {
            guard += 1;
            let a = rng.gen_range(1..=n as u32);
            let b = rng.gen_range(1..=n as u32);
            let (a, b) = (a.min(b), a.max(b));
            if a != b && !pairs.contains(&(a, b)) {
                pairs.push((a, b));
            }
        }
        if pairs.len() == tree_edges {
            // Complete graph on three buses or fewer free pairs: allow a parallel branch.
            pairs.push(pairs[0]);
        }
        let branches: Vec<Branch> = pairs
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| Branch {
                id: BranchId(i as u32 + 1),
                from: BusId(a),
                to: BusId(b),
                resistance_ohm: rng.gen_range(0.05..2.0),
                reactance_ohm: rng.gen_range(0.05..2.0),
                is_tie: i >= tree_edges,
            })
            .collect();
        Network::new("random", buses, branches, BusId(1)).unwrap()
    })
}
