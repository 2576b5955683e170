use std::path::Path;

use anyhow::Result;
use gridconf_core::env::Violation;
use gridconf_core::reliability::{assign_failure_rates, average_curtailed_power};
use gridconf_core::topology::{all_nodes_traversed, is_radial};
use gridconf_core::{BranchId, Configuration};
use serde::{Deserialize, Serialize};

use crate::config::{ReliabilityArgs, RunConfig};

/// Output of `evaluate --json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub network: String,
    pub open_set: Vec<BranchId>,
    pub feasible: bool,
    pub all_nodes_traversed: bool,
    pub radial: bool,
    /// First failed check, traversal before radiality.
    pub violated: Violation,
    /// MWh/yr; `null` when infeasible.
    pub acp: Option<f64>,
}

pub fn run(
    dataset: &str,
    open: &[u32],
    json: bool,
    config: Option<&Path>,
    overrides: &ReliabilityArgs,
) -> Result<()> {
    let mut params = RunConfig::load(config)?.reliability;
    overrides.apply(&mut params);
    let net = crate::load_dataset(dataset)?;
    let model = assign_failure_rates::<f64>(&net, &params)?;
    let cfg = Configuration::from_ids(&net, open.iter().copied())?;

    let traversed = all_nodes_traversed(&net, &cfg);
    let radial = is_radial(&net, &cfg);
    let violated = if !traversed {
        Violation::Traversal
    } else if !radial {
        Violation::Radiality
    } else {
        Violation::None
    };
    let feasible = violated == Violation::None;
    let acp = if feasible {
        Some(average_curtailed_power(&net, &model, &cfg)?)
    } else {
        None
    };
    let verdict = Verdict {
        network: net.name().to_string(),
        open_set: cfg.open_edges().to_vec(),
        feasible,
        all_nodes_traversed: traversed,
        radial,
        violated,
        acp,
    };

    if json {
        println!("{}", serde_json::to_string_pretty(&verdict)?);
        return Ok(());
    }
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    println!("network              {}", verdict.network);
    println!("open set             {cfg}");
    println!("all nodes traversed  {}", yes_no(traversed));
    println!("radial               {}", yes_no(radial));
    println!("feasible             {}", yes_no(feasible));
    match acp {
        Some(a) => println!("ACP                  {a:.4} MWh/yr"),
        None => println!("ACP                  n/a"),
    }
    Ok(())
}
