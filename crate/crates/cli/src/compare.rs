use std::path::Path;

use anyhow::{anyhow, Context, Result};
use gridconf_core::oracle::optimality_gap;
use gridconf_core::{BranchId, EnumerationReportF64};
use serde::{Deserialize, Serialize};

use crate::train::{BestReport, BEST_FILE};

/// Output of `compare --json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct Comparison {
    pub network: String,
    pub dqn_open_set: Vec<BranchId>,
    pub dqn_acp: f64,
    pub oracle_open_set: Vec<BranchId>,
    pub oracle_acp: f64,
    /// `(dqn_acp - oracle_acp) / oracle_acp`
    pub gap: f64,
    pub same_open_set: bool,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn run(run_dir: &Path, oracle: &Path, json: bool) -> Result<()> {
    let best: BestReport = read_json(&run_dir.join(BEST_FILE))?;
    let report: EnumerationReportF64 = read_json(oracle)?;
    if best.network != report.network {
        return Err(anyhow!(
            "run is on {} but the oracle report is for {}",
            best.network,
            report.network
        ));
    }
    let seen = best
        .best
        .ok_or_else(|| anyhow!("run {} has no feasible episode", run_dir.display()))?;
    let cmp = Comparison {
        network: best.network,
        gap: optimality_gap(seen.acp, report.best.acp),
        same_open_set: seen.open_set == report.best.open_set,
        dqn_open_set: seen.open_set,
        dqn_acp: seen.acp,
        oracle_open_set: report.best.open_set,
        oracle_acp: report.best.acp,
    };

    if json {
        println!("{}", serde_json::to_string_pretty(&cmp)?);
        return Ok(());
    }
    println!("network   {}", cmp.network);
    println!(
        "dqn       {}  ACP {:.4} MWh/yr",
        crate::braced(&cmp.dqn_open_set),
        cmp.dqn_acp
    );
    println!(
        "oracle    {}  ACP {:.4} MWh/yr",
        crate::braced(&cmp.oracle_open_set),
        cmp.oracle_acp
    );
    println!("gap       {:.3}%", 100.0 * cmp.gap);
    println!("same set  {}", if cmp.same_open_set { "yes" } else { "no" });
    Ok(())
}
