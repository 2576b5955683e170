use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{SecondsFormat, Utc};
use gridconf_core::dqn::{
    best_configuration, greedy_rollout, running_mean, running_mean_sparse, train_with,
};
use gridconf_core::env::{Environment, Violation};
use gridconf_core::reliability::assign_failure_rates;
use gridconf_core::{BranchId, EpisodeRecordF64, Error};
use serde::{Deserialize, Serialize};

use crate::config::{ReliabilityArgs, RunConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const EPISODES_FILE: &str = "episodes.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const BEST_FILE: &str = "best.json";

pub struct TrainArgs {
    pub dataset: String,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub episodes: Option<usize>,
    pub window: usize,
    pub reliability: ReliabilityArgs,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Artifacts {
    pub episodes: String,
    pub curves: String,
    pub best: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub dataset: String,
    pub network: String,
    pub config: RunConfig,
    pub seed: u64,
    pub curve_window: usize,
    pub started_at: String,
    pub finished_at: String,
    pub artifacts: Artifacts,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Evaluated {
    pub open_set: Vec<BranchId>,
    pub feasible: bool,
    pub violated: Violation,
    pub acp: Option<f64>,
    pub reward: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BestSeen {
    pub episode: usize,
    pub open_set: Vec<BranchId>,
    pub acp: f64,
}

/// Contents of `best.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct BestReport {
    pub network: String,
    pub seed: u64,
    pub episodes: usize,
    /// Lowest-ACP feasible configuration seen during training; `null` if none was.
    pub best: Option<BestSeen>,
    /// The normally-open configuration.
    pub reference: Evaluated,
    /// Configuration built by the trained network with ε = 0.
    pub greedy: Evaluated,
}

fn join_ids(ids: &[BranchId]) -> String {
    ids.iter()
        .map(|b| b.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn run(args: TrainArgs) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.train.seed = seed;
    }
    if let Some(n) = args.episodes {
        cfg.train.episodes = n;
    }
    args.reliability.apply(&mut cfg.reliability);
    if args.window == 0 {
        bail!("--window must be >= 1");
    }
    cfg.train.validate()?;

    let net = crate::load_dataset(&args.dataset)?;
    let model = assign_failure_rates::<f64>(&net, &cfg.reliability)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let started_at = now();

    let episodes_path = args.out.join(EPISODES_FILE);
    let file = File::create(&episodes_path)
        .with_context(|| format!("creating {}", episodes_path.display()))?;
    let mut log = csv::Writer::from_writer(file);
    log.write_record([
        "episode", "reward", "mse_loss", "acp", "epsilon", "open_set",
    ])?;
    let mut log_error: Option<csv::Error> = None;
    let trained = train_with(&net, &model, &cfg.train, |r: &EpisodeRecordF64| {
        if log_error.is_some() {
            return;
        }
        let row = [
            r.episode.to_string(),
            r.reward.to_string(),
            r.mse_loss.to_string(),
            r.acp.map(|a| a.to_string()).unwrap_or_default(),
            r.epsilon.to_string(),
            join_ids(&r.open_set),
        ];
        if let Err(e) = log.write_record(&row) {
            log_error = Some(e);
        }
    });
    // Keep whatever was logged, even if training stopped early.
    log.flush()?;
    if let Some(e) = log_error {
        return Err(e).context("writing episodes.csv");
    }
    let outcome = trained?;
    let records = &outcome.records;

    let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();
    let losses: Vec<f64> = records.iter().map(|r| r.mse_loss).collect();
    let acps: Vec<Option<f64>> = records.iter().map(|r| r.acp).collect();
    let reward_mean = running_mean(&rewards, args.window);
    let loss_mean = running_mean(&losses, args.window);
    let acp_mean = running_mean_sparse(&acps, args.window);
    let curves_path = args.out.join(CURVES_FILE);
    let mut curves = csv::Writer::from_path(&curves_path)?;
    curves.write_record([
        "episode",
        "reward_mean",
        "acp_mean",
        "mse_loss_mean",
        "epsilon",
    ])?;
    for (i, r) in records.iter().enumerate() {
        curves.write_record([
            r.episode.to_string(),
            reward_mean[i].to_string(),
            acp_mean[i].map(|a| a.to_string()).unwrap_or_default(),
            loss_mean[i].to_string(),
            r.epsilon.to_string(),
        ])?;
    }
    curves.flush()?;

    let best = match best_configuration(records) {
        Ok(b) => Some(BestSeen {
            episode: b.episode,
            open_set: b.open_set,
            acp: b.acp,
        }),
        Err(Error::NoFeasibleEpisode) => None,
        Err(e) => return Err(e.into()),
    };
    let mut env = Environment::new(&net, &model, cfg.train.penalty, cfg.train.reward_scale)?;
    let (greedy_set, greedy) = greedy_rollout(&outcome.q, &mut env)?;
    let reference = outcome.reference;
    let report = BestReport {
        network: net.name().to_string(),
        seed: cfg.train.seed,
        episodes: records.len(),
        best,
        reference: Evaluated {
            open_set: gridconf_core::grid::base_configuration(&net)
                .open_edges()
                .to_vec(),
            feasible: reference.feasible,
            violated: reference.violated,
            acp: reference.acp,
            reward: reference.reward,
        },
        greedy: Evaluated {
            open_set: greedy_set,
            feasible: greedy.feasible,
            violated: greedy.violated,
            acp: greedy.acp,
            reward: greedy.reward,
        },
    };
    write_json(&args.out.join(BEST_FILE), &report)?;

    let manifest = RunManifest {
        command: "train".into(),
        dataset: args.dataset.clone(),
        network: net.name().to_string(),
        seed: cfg.train.seed,
        config: cfg,
        curve_window: args.window,
        started_at,
        finished_at: now(),
        artifacts: Artifacts {
            episodes: EPISODES_FILE.into(),
            curves: CURVES_FILE.into(),
            best: BEST_FILE.into(),
        },
    };
    write_json(&args.out.join(MANIFEST_FILE), &manifest)?;

    println!("network      {}", report.network);
    println!("episodes     {}", report.episodes);
    if let Some(b) = &report.best {
        println!(
            "best         {}  ACP {:.4} MWh/yr  (episode {})",
            crate::braced(&b.open_set),
            b.acp,
            b.episode
        );
    } else {
        println!("best         none (no feasible episode)");
    }
    match report.greedy.acp {
        Some(a) => println!(
            "greedy       {}  ACP {a:.4} MWh/yr",
            crate::braced(&report.greedy.open_set)
        ),
        None => println!(
            "greedy       {}  infeasible",
            crate::braced(&report.greedy.open_set)
        ),
    }
    if let Some(a) = report.reference.acp {
        println!("reference    ACP {a:.4} MWh/yr");
    }
    println!("written to   {}", args.out.display());
    Ok(())
}
