use std::path::Path;

use anyhow::{Context, Result};
use gridconf_core::oracle::enumerate_optimal;
use gridconf_core::reliability::assign_failure_rates;

use crate::config::{ReliabilityArgs, RunConfig};

pub fn run(
    dataset: &str,
    top_k: usize,
    workers: Option<usize>,
    out: &Path,
    config: Option<&Path>,
    overrides: &ReliabilityArgs,
) -> Result<()> {
    let mut params = RunConfig::load(config)?.reliability;
    overrides.apply(&mut params);
    let net = crate::load_dataset(dataset)?;
    let model = assign_failure_rates::<f64>(&net, &params)?;
    let workers = workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);

    let report = enumerate_optimal(&net, &model, net.tie_count(), top_k, workers)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;

    println!("network    {}", report.network);
    println!("subsets    {}", report.total);
    println!("feasible   {}", report.feasible);
    println!("workers    {workers}");
    println!("elapsed    {:.3} s", report.wall_time.as_secs_f64());
    println!();
    println!("{:>4}  {:>12}  open set", "rank", "ACP MWh/yr");
    for (i, r) in report.top.iter().enumerate() {
        println!(
            "{:>4}  {:>12.6}  {}",
            i + 1,
            r.acp,
            crate::braced(&r.open_set)
        );
    }
    Ok(())
}
