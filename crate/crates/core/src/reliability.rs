//! Branch failure rates, node unavailability and average curtailed power.
//!
//! Units: failure rates in failures/year, repair times in hours, demand in kW.
//! Unavailability is therefore in hours/year and curtailed power is computed in
//! kWh/yr and reported in MWh/yr.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{ConstraintError, Error};
use crate::grid::{BranchId, BusId, Configuration, Network};
use crate::scalar::Scalar;
use crate::topology::{build_rooted_tree, RootedTree};

/// Inputs to [`assign_failure_rates`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReliabilityParams {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub repair_hours: f64,
}

impl Default for ReliabilityParams {
    fn default() -> Self {
        ReliabilityParams {
            lambda_min: 0.1,
            lambda_max: 0.4,
            repair_hours: 6.0,
        }
    }
}

/// Per-branch failure rate and repair time.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityModel<S> {
    lambda: Vec<S>,
    repair_hours: Vec<S>,
    lambda_min: S,
    lambda_max: S,
    repair_hours_default: S,
}

impl<S: Scalar> ReliabilityModel<S> {
    /// Builds a model from explicit per-branch values (indexed by branch position).
    pub fn from_parts(lambda: Vec<S>, repair_hours: Vec<S>) -> Result<Self, Error> {
        if lambda.len() != repair_hours.len() {
            return Err(Error::Parameter(
                "lambda and repair vectors differ in length".into(),
            ));
        }
        for (i, (&l, &r)) in lambda.iter().zip(&repair_hours).enumerate() {
            if !(l.is_finite() && l >= S::zero()) {
                return Err(Error::Parameter(format!(
                    "branch {}: bad failure rate {l}",
                    i + 1
                )));
            }
            if l > S::zero() && !(r.is_finite() && r > S::zero()) {
                return Err(Error::Parameter(format!(
                    "branch {}: bad repair time {r}",
                    i + 1
                )));
            }
        }
        let lambda_min = lambda.iter().copied().fold(S::infinity(), S::min);
        let lambda_max = lambda.iter().copied().fold(S::zero(), S::max);
        let repair_hours_default = repair_hours.first().copied().unwrap_or_default();
        Ok(ReliabilityModel {
            lambda,
            repair_hours,
            lambda_min,
            lambda_max,
            repair_hours_default,
        })
    }

    pub fn lambda(&self, id: BranchId) -> S {
        self.lambda[id.index()]
    }

    pub fn repair_hours(&self, id: BranchId) -> S {
        self.repair_hours[id.index()]
    }

    /// Expected outage hours per year contributed by one branch, `λ·r`.
    #[inline]
    pub fn outage_hours(&self, id: BranchId) -> S {
        self.lambda[id.index()] * self.repair_hours[id.index()]
    }

    pub fn lambda_bounds(&self) -> (S, S) {
        (self.lambda_min, self.lambda_max)
    }

    pub fn repair_hours_default(&self) -> S {
        self.repair_hours_default
    }

    /// Same model with every failure rate multiplied by `factor`.
    pub fn scaled(&self, factor: S) -> Self {
        ReliabilityModel {
            lambda: self.lambda.iter().map(|&l| l * factor).collect(),
            lambda_min: self.lambda_min * factor,
            lambda_max: self.lambda_max * factor,
            ..self.clone()
        }
    }
}

/// Failure rates proportional to impedance magnitude.
///
/// Non-tie branches are mapped linearly from `[z_min, z_max]` onto
/// `[lambda_min, lambda_max]`; tie branches never fail. If every non-tie branch
/// has the same impedance they all get `lambda_min`.
pub fn assign_failure_rates<S: Scalar>(
    net: &Network,
    params: &ReliabilityParams,
) -> Result<ReliabilityModel<S>, Error> {
    let ReliabilityParams {
        lambda_min,
        lambda_max,
        repair_hours,
    } = *params;
    if !(lambda_min.is_finite()
        && lambda_max.is_finite()
        && 0.0 <= lambda_min
        && lambda_min <= lambda_max)
    {
        return Err(Error::Parameter(format!(
            "need 0 <= lambda_min <= lambda_max, got {lambda_min} and {lambda_max}"
        )));
    }
    if !(repair_hours.is_finite() && repair_hours > 0.0) {
        return Err(Error::Parameter(format!(
            "repair hours must be > 0, got {repair_hours}"
        )));
    }

    let (z_min, z_max) = net
        .branches()
        .iter()
        .filter(|b| !b.is_tie)
        .map(|b| b.impedance())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
            (lo.min(z), hi.max(z))
        });

    let (lmin, lmax) = (S::of(lambda_min), S::of(lambda_max));
    let (zmin, span) = (S::of(z_min), S::of(z_max - z_min));
    let lambda = net
        .branches()
        .iter()
        .map(|b| {
            if b.is_tie {
                S::zero()
            } else if span > S::zero() {
                lmin + (lmax - lmin) * (S::of(b.impedance()) - zmin) / span
            } else {
                lmin
            }
        })
        .collect();

    Ok(ReliabilityModel {
        lambda,
        repair_hours: vec![S::of(repair_hours); net.branch_count()],
        lambda_min: lmin,
        lambda_max: lmax,
        repair_hours_default: S::of(repair_hours),
    })
}

/// Annual unavailability (hours/year) of every bus under one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct UnavailabilityVector<S> {
    u: Vec<S>,
}

impl<S: Scalar> UnavailabilityVector<S> {
    pub fn get(&self, bus: BusId) -> S {
        self.u[bus.index()]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.u
    }
}

/// One breadth-first pass: `u(child) = u(parent) + λ·r` of the connecting branch.
pub fn unavailability<S: Scalar>(
    net: &Network,
    model: &ReliabilityModel<S>,
    tree: &RootedTree,
) -> UnavailabilityVector<S> {
    let mut u = vec![S::zero(); net.bus_count()];
    for &bus in tree.bfs_order() {
        if let Some((parent, branch)) = tree.parent(bus) {
            u[bus.index()] = u[parent.index()] + model.outage_hours(branch);
        }
    }
    UnavailabilityVector { u }
}

/// Sum of `demand · U` over demand buses, in MWh/yr.
pub fn curtailed_power<S: Scalar>(net: &Network, u: &UnavailabilityVector<S>) -> S {
    let kwh = net
        .buses()
        .iter()
        .filter(|b| b.demand_kw > 0.0)
        .fold(S::zero(), |acc, b| acc + S::of(b.demand_kw) * u.get(b.id));
    kwh / S::of(1000.0)
}

/// Average curtailed power (MWh/yr) of a feasible configuration.
pub fn average_curtailed_power<S: Scalar>(
    net: &Network,
    model: &ReliabilityModel<S>,
    cfg: &Configuration,
) -> Result<S, ConstraintError> {
    let tree = build_rooted_tree(net, cfg)?;
    Ok(curtailed_power(net, &unavailability(net, model, &tree)))
}

/// Allocation-free curtailed-power evaluation for hot loops.
///
/// Works directly on a closed-branch mask that is already known to be a spanning
/// tree; it gives the same value as [`average_curtailed_power`].
#[derive(Debug, Clone)]
pub struct AcpEvaluator<'a, S> {
    net: &'a Network,
    outage: Vec<S>,
    demand: Vec<S>,
    u: Vec<S>,
    seen: Vec<bool>,
    queue: VecDeque<usize>,
}

impl<'a, S: Scalar> AcpEvaluator<'a, S> {
    pub fn new(net: &'a Network, model: &ReliabilityModel<S>) -> Self {
        AcpEvaluator {
            net,
            outage: net
                .branches()
                .iter()
                .map(|b| model.outage_hours(b.id))
                .collect(),
            demand: net.buses().iter().map(|b| S::of(b.demand_kw)).collect(),
            u: vec![S::zero(); net.bus_count()],
            seen: vec![false; net.bus_count()],
            queue: VecDeque::with_capacity(net.bus_count()),
        }
    }

    /// Curtailed power in MWh/yr. The caller guarantees `closed` is a spanning tree.
    pub fn evaluate(&mut self, closed: &[bool]) -> S {
        let root = self.net.root().index();
        self.seen.fill(false);
        self.seen[root] = true;
        self.u[root] = S::zero();
        self.queue.clear();
        self.queue.push_back(root);
        let mut kwh = S::zero();
        while let Some(k) = self.queue.pop_front() {
            // Demand is zero at buses outside the demand set, so they add nothing.
            kwh += self.demand[k] * self.u[k];
            for &(m, e) in self.net.neighbours(k) {
                if closed[e] && !self.seen[m] {
                    self.seen[m] = true;
                    self.u[m] = self.u[k] + self.outage[e];
                    self.queue.push_back(m);
                }
            }
        }
        kwh / S::of(1000.0)
    }
}
