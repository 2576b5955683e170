//! Exhaustive search over every set of `T` open branches.
//!
//! The `C(|E|, T)` combinations are visited in lexicographic order, split into
//! fixed-size rank ranges. Each range is scanned independently (in parallel when
//! more than one worker is requested) and the per-range results are merged in
//! range order, so the report does not depend on the worker count.
//!
//! Feasibility in the hot loop uses union-find: with `|E| - T = N - 1` closed
//! branches, "no cycle" is equivalent to "spanning tree", which is what the
//! incidence-rank test decides on the slow path ([`recheck`]).

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ConstraintError, Error};
use crate::grid::{BranchId, Configuration, Network};
use crate::reliability::{average_curtailed_power, AcpEvaluator, ReliabilityModel};
use crate::scalar::Scalar;
use crate::topology::{self, UnionFind};

/// Combinations per work unit.
const CHUNK: u64 = 1 << 15;

pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedConfiguration<S> {
    pub open_set: Vec<BranchId>,
    pub acp: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationReport<S> {
    pub network: String,
    pub open_count: usize,
    pub total: u64,
    pub feasible: u64,
    pub best: RankedConfiguration<S>,
    /// Best configurations, ascending by curtailed power then by open set.
    pub top: Vec<RankedConfiguration<S>>,
    /// Not serialised, so that reports from different runs compare byte-for-byte.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// `n choose k`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// The `rank`-th (0-based) `k`-subset of `0..n` in lexicographic order.
pub fn unrank_combination(n: usize, k: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let remaining = (k - slot - 1) as u64;
        loop {
            let with_next = binomial((n - next - 1) as u64, remaining);
            if rank < with_next {
                break;
            }
            rank -= with_next;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Advances `c` to the next `k`-subset of `0..n`; false after the last one.
pub fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
        return false;
    };
    c[i] += 1;
    for j in i + 1..k {
        c[j] = c[j - 1] + 1;
    }
    true
}

/// Runs `scan` over every rank range and returns the per-range results in order.
fn scan_ranges<R, F>(total: u64, workers: usize, scan: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64, u64) -> R + Sync + Send,
{
    let chunks = total.div_ceil(CHUNK);
    let range = |c: u64| (c * CHUNK, ((c + 1) * CHUNK).min(total));
    if workers <= 1 {
        return (0..chunks)
            .map(|c| {
                let (lo, hi) = range(c);
                scan(lo, hi)
            })
            .collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool builds");
    pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let (lo, hi) = range(c);
                scan(lo, hi)
            })
            .collect()
    })
}

fn cmp_ranked<S: Scalar>(a: &(S, Vec<usize>), b: &(S, Vec<usize>)) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.1.cmp(&b.1))
}

/// Bounded best-`k` list kept sorted.
struct TopK<S> {
    k: usize,
    items: Vec<(S, Vec<usize>)>,
}

impl<S: Scalar> TopK<S> {
    fn new(k: usize) -> Self {
        TopK {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn would_accept(&self, acp: S) -> bool {
        self.items.len() < self.k || self.items.last().is_some_and(|w| acp <= w.0)
    }

    fn offer(&mut self, item: (S, Vec<usize>)) {
        let pos = self
            .items
            .binary_search_by(|probe| cmp_ranked(probe, &item))
            .unwrap_or_else(|p| p);
        if pos < self.k {
            self.items.insert(pos, item);
            self.items.truncate(self.k);
        }
    }
}

/// Exhaustive minimum of curtailed power over every feasible set of `open_count`
/// open branches.
pub fn enumerate_optimal<S: Scalar>(
    net: &Network,
    model: &ReliabilityModel<S>,
    open_count: usize,
    top_k: usize,
    workers: usize,
) -> Result<EnumerationReport<S>, Error> {
    let e = net.branch_count();
    if open_count != net.tie_count() {
        return Err(Error::Parameter(format!(
            "open count {open_count} must equal the tie count {}",
            net.tie_count()
        )));
    }
    let start = Instant::now();
    let total = binomial(e as u64, open_count as u64);
    let keep = top_k.max(1);

    let chunks = scan_ranges(total, workers, |lo, hi| {
        let mut uf = UnionFind::new(net.bus_count());
        let mut eval = AcpEvaluator::new(net, model);
        let mut closed = vec![true; e];
        let mut top = TopK::new(keep);
        let mut feasible = 0u64;
        let mut combo = unrank_combination(e, open_count, lo);
        for rank in lo..hi {
            for &i in &combo {
                closed[i] = false;
            }
            if topology::is_spanning_tree(net, &closed, &mut uf) {
                feasible += 1;
                let acp = eval.evaluate(&closed);
                if top.would_accept(acp) {
                    top.offer((acp, combo.clone()));
                }
            }
            for &i in &combo {
                closed[i] = true;
            }
            if rank + 1 < hi {
                next_combination(&mut combo, e);
            }
        }
        (feasible, top.items)
    });

    let mut feasible = 0;
    let mut top = TopK::new(keep);
    for (n, items) in chunks {
        feasible += n;
        for item in items {
            top.offer(item);
        }
    }
    let ranked: Vec<RankedConfiguration<S>> = top
        .items
        .into_iter()
        .map(|(acp, combo)| RankedConfiguration {
            open_set: combo.into_iter().map(BranchId::from_index).collect(),
            acp,
        })
        .collect();
    let best = ranked
        .first()
        .cloned()
        .ok_or_else(|| Error::Parameter("no feasible configuration exists".into()))?;

    Ok(EnumerationReport {
        network: net.name().to_string(),
        open_count,
        total,
        feasible,
        best,
        top: ranked.into_iter().take(top_k).collect(),
        wall_time: start.elapsed(),
    })
}

/// Number of `open_count`-subsets whose complement is a spanning tree.
pub fn feasible_count(net: &Network, open_count: usize, workers: usize) -> u64 {
    let e = net.branch_count();
    let total = binomial(e as u64, open_count as u64);
    scan_ranges(total, workers, |lo, hi| {
        let mut uf = UnionFind::new(net.bus_count());
        let mut closed = vec![true; e];
        let mut combo = unrank_combination(e, open_count, lo);
        let mut n = 0u64;
        for rank in lo..hi {
            for &i in &combo {
                closed[i] = false;
            }
            n += topology::is_spanning_tree(net, &closed, &mut uf) as u64;
            for &i in &combo {
                closed[i] = true;
            }
            if rank + 1 < hi {
                next_combination(&mut combo, e);
            }
        }
        n
    })
    .into_iter()
    .sum()
}

/// Spanning-tree count by the Matrix-Tree theorem: the determinant of the
/// Laplacian with the root row and column removed, computed exactly with
/// fraction-free (Bareiss) elimination.
pub fn matrix_tree_count(net: &Network) -> BigInt {
    let n = net.bus_count();
    let root = net.root().index();
    let idx = |b: usize| if b < root { b } else { b - 1 };
    let m = n - 1;
    if m == 0 {
        return BigInt::one();
    }
    let mut a = vec![vec![BigInt::zero(); m]; m];
    for br in net.branches() {
        let (u, v) = (br.from.index(), br.to.index());
        if u != root {
            a[idx(u)][idx(u)] += 1;
        }
        if v != root {
            a[idx(v)][idx(v)] += 1;
        }
        if u != root && v != root {
            a[idx(u)][idx(v)] -= 1;
            a[idx(v)][idx(u)] -= 1;
        }
    }

    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..m {
        if a[k][k].is_zero() {
            let Some(p) = (k + 1..m).find(|&r| !a[r][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..m {
            for j in k + 1..m {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    (sign * &a[m - 1][m - 1]).abs()
}

/// Slow-path re-evaluation of every configuration in `top`: constraint checks via
/// the incidence rank and curtailed power via an explicit rooted tree.
pub fn recheck<S: Scalar>(
    net: &Network,
    model: &ReliabilityModel<S>,
    top: &[RankedConfiguration<S>],
) -> Result<Vec<S>, Error> {
    top.iter()
        .map(|r| {
            let cfg = Configuration::new(net, r.open_set.iter().copied())?;
            if !topology::is_radial(net, &cfg) {
                return Err(ConstraintError::Radiality.into());
            }
            Ok(average_curtailed_power(net, model, &cfg)?)
        })
        .collect()
}

/// Relative gap `(candidate - optimum) / optimum`.
pub fn optimality_gap(candidate: f64, optimum: f64) -> f64 {
    (candidate - optimum) / optimum
}
