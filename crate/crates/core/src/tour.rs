//! Solution representations shared by the policy and the classical solvers.

use crate::error::{Error, Result};
use crate::instances::{CvrpInstance, Instance, VrpInstance};

/// A routing solution: a node permutation for TSP, or depot-delimited
/// routes of customer indices for CVRP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tour {
    Tsp { order: Vec<usize> },
    /// Each route lists customer indices (0-based into the customer set);
    /// the depot is implicit at the start and end of every route.
    Cvrp { routes: Vec<Vec<usize>> },
}

impl Tour {
    pub fn tsp(order: Vec<usize>) -> Self {
        Tour::Tsp { order }
    }

    pub fn cvrp(routes: Vec<Vec<usize>>) -> Self {
        Tour::Cvrp { routes }
    }

    /// Checks feasibility against an instance: TSP orders must be a
    /// permutation of `0..n`; CVRP routes must cover every customer exactly
    /// once with per-route demand within capacity.
    pub fn validate(&self, inst: &VrpInstance) -> Result<()> {
        match (self, inst) {
            (Tour::Tsp { order }, VrpInstance::Tsp(instance)) => {
                validate_permutation(order, instance.len())
            }
            (Tour::Cvrp { routes }, VrpInstance::Cvrp(cvrp)) => validate_routes(routes, cvrp),
            _ => Err(Error::Contract(
                "tour variant does not match instance variant".into(),
            )),
        }
    }
}

fn validate_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::Contract(format!(
            "tour visits {} of {} nodes",
            order.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || seen[v] {
            return Err(Error::Contract(format!("node {v} repeated or out of range")));
        }
        seen[v] = true;
    }
    Ok(())
}

fn validate_routes(routes: &[Vec<usize>], cvrp: &CvrpInstance) -> Result<()> {
    let n = cvrp.customers.len();
    let mut seen = vec![false; n];
    for route in routes {
        if route.is_empty() {
            return Err(Error::Contract("empty route".into()));
        }
        let mut load: u64 = 0;
        for &c in route {
            if c >= n || seen[c] {
                return Err(Error::Contract(format!(
                    "customer {c} repeated or out of range"
                )));
            }
            seen[c] = true;
            load += u64::from(cvrp.demands[c]);
        }
        if load > u64::from(cvrp.capacity) {
            return Err(Error::Contract(format!(
                "route demand {load} exceeds capacity {}",
                cvrp.capacity
            )));
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Contract(format!("customer {missing} not served")));
    }
    Ok(())
}

/// One policy evaluation batch: a tour, its log-probability, and its length
/// per rollout.
#[derive(Debug, Clone)]
pub struct RolloutBatch {
    pub tours: Vec<Tour>,
    pub logprobs: Vec<f64>,
    pub lengths: Vec<f64>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.tours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tours.is_empty()
    }
}

impl Instance {
    /// Euclidean length of `order` as a closed tour over this instance.
    /// Assumes `order` is a valid permutation; use [`Tour::validate`] first
    /// when the tour comes from outside.
    pub fn cycle_length(&self, order: &[usize]) -> f64 {
        let n = order.len();
        if n < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..n {
            let a = self.coords()[order[i]];
            let b = self.coords()[order[(i + 1) % n]];
            total += a.dist(b);
        }
        total
    }
}
