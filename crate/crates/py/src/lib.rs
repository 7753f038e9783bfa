//! Python bindings: instance generation, classical solvers, the routing
//! policy, and a compact training entry point.

use droroute_core::bench;
use droroute_core::instances::{
    self, build_group_dataset, CvrpInstance, DistributionKind, GroupSpec, Instance, Point,
    VrpInstance,
};
use droroute_core::policy::{
    logprob_of_tour, rollout, ModelInput, PolicyConfig, PolicyParams, RolloutMode,
};
use droroute_core::solvers;
use droroute_core::tour::Tour;
use droroute_core::trainer::{GroupSampling, TrainConfig, TrainMode, Trainer};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::path::PathBuf;

fn err(e: droroute_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn points_from(py_points: &[(f64, f64)]) -> Vec<Point> {
    py_points.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

fn points_to(points: &[Point]) -> Vec<(f64, f64)> {
    points.iter().map(|p| (p.x, p.y)).collect()
}

fn instance_from(py_points: &[(f64, f64)]) -> PyResult<Instance> {
    Instance::new(points_from(py_points)).map_err(err)
}

fn kind_from(name: &str, n: usize) -> PyResult<DistributionKind> {
    DistributionKind::with_defaults(name, n).map_err(err)
}

/// Generate one instance of a named distribution; returns unit-square
/// coordinates.
#[pyfunction]
fn generate(kind: &str, n: usize, seed: u64) -> PyResult<Vec<(f64, f64)>> {
    let inst = instances::generate(&kind_from(kind, n)?, n, seed).map_err(err)?;
    Ok(points_to(inst.coords()))
}

/// Aspect-preserving min-max normalization into the unit square.
#[pyfunction]
fn normalize(points: Vec<(f64, f64)>) -> PyResult<Vec<(f64, f64)>> {
    let out = instances::normalize(&points_from(&points)).map_err(err)?;
    Ok(points_to(&out))
}

/// The 8 dihedral images of an instance, identity first.
#[pyfunction]
fn augment_x8(points: Vec<(f64, f64)>) -> PyResult<Vec<Vec<(f64, f64)>>> {
    let inst = instance_from(&points)?;
    Ok(instances::augment_x8(&inst)
        .iter()
        .map(|im| points_to(im.coords()))
        .collect())
}

/// Exact TSP tour via Held-Karp (n <= 13); returns (order, length).
#[pyfunction]
fn held_karp(points: Vec<(f64, f64)>) -> PyResult<(Vec<usize>, f64)> {
    let inst = instance_from(&points)?;
    let tour = solvers::held_karp(&inst).map_err(err)?;
    let len = solvers::tour_length(&VrpInstance::Tsp(inst), &tour).map_err(err)?;
    let Tour::Tsp { order } = tour else { unreachable!() };
    Ok((order, len))
}

/// Nearest-neighbor construction plus 2-opt; returns (order, length).
#[pyfunction]
#[pyo3(signature = (points, start = 0))]
fn nn_two_opt(points: Vec<(f64, f64)>, start: usize) -> PyResult<(Vec<usize>, f64)> {
    let inst = instance_from(&points)?;
    let tour = solvers::nearest_neighbor(&inst, start).map_err(err)?;
    let tour = solvers::two_opt(&inst, &tour).map_err(err)?;
    let len = solvers::tour_length(&VrpInstance::Tsp(inst), &tour).map_err(err)?;
    let Tour::Tsp { order } = tour else { unreachable!() };
    Ok((order, len))
}

/// Euclidean length of a closed tour over the given points.
#[pyfunction]
fn tour_length(points: Vec<(f64, f64)>, order: Vec<usize>) -> PyResult<f64> {
    let inst = instance_from(&points)?;
    solvers::tour_length(&VrpInstance::Tsp(inst), &Tour::tsp(order)).map_err(err)
}

/// Savings-style CVRP reference; returns (routes, length).
#[pyfunction]
fn cvrp_reference(
    depot: (f64, f64),
    customers: Vec<(f64, f64)>,
    demands: Vec<u32>,
    capacity: u32,
) -> PyResult<(Vec<Vec<usize>>, f64)> {
    let cvrp = CvrpInstance::new(
        instance_from(&customers)?,
        Point::new(depot.0, depot.1),
        demands,
        capacity,
    )
    .map_err(err)?;
    let tour = solvers::cvrp_reference(&cvrp).map_err(err)?;
    let len = solvers::tour_length(&VrpInstance::Cvrp(cvrp), &tour).map_err(err)?;
    let Tour::Cvrp { routes } = tour else { unreachable!() };
    Ok((routes, len))
}

/// One exponentiated-gradient step on the group simplex.
#[pyfunction]
fn eg_update(q: Vec<f64>, group: usize, loss: f64, eta_q: f64) -> PyResult<Vec<f64>> {
    let mut w = droroute_core::trainer::GroupWeights::from_vec(q).map_err(err)?;
    droroute_core::trainer::eg_update(&mut w, group, loss, eta_q).map_err(err)?;
    Ok(w.as_slice().to_vec())
}

/// TSPLIB EUC_2D distance (nearest integer).
#[pyfunction]
fn tsplib_distance(p: (f64, f64), q: (f64, f64)) -> u64 {
    bench::tsplib_distance(Point::new(p.0, p.1), Point::new(q.0, q.1))
}

/// Parse a TSPLIB/CVRPLIB file; returns (name, type, coords, capacity).
#[pyfunction]
fn parse_tsplib(
    path: PathBuf,
) -> PyResult<(String, String, Vec<(f64, f64)>, Option<u32>)> {
    let text = std::fs::read_to_string(&path)
        .map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))?;
    let b = bench::parse_tsplib(&text).map_err(err)?;
    Ok((b.name, b.problem_type, points_to(&b.coords), b.capacity))
}

/// The neural routing policy.
#[pyclass]
struct Policy {
    params: PolicyParams,
}

#[pymethods]
impl Policy {
    /// Fresh policy with the given architecture; `input_dim` 2 = TSP,
    /// 3 = CVRP.
    #[new]
    #[pyo3(signature = (seed = 0, input_dim = 2, channels = 32, kernel_size = 5,
                        neighbors = 4, layers = 2, heads = 4, ff_dim = 64,
                        logit_clip = 10.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        seed: u64,
        input_dim: usize,
        channels: usize,
        kernel_size: usize,
        neighbors: usize,
        layers: usize,
        heads: usize,
        ff_dim: usize,
        logit_clip: f64,
    ) -> PyResult<Self> {
        let cfg = PolicyConfig {
            input_dim,
            channels,
            kernel_size,
            neighbors,
            layers,
            heads,
            ff_dim,
            logit_clip,
        };
        Ok(Policy {
            params: PolicyParams::init(cfg, seed).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Policy {
            params: PolicyParams::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.params.save(&path).map_err(err)
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.params.flat_len()
    }

    /// Best greedy tour over multi-starts; returns (order, length).
    #[pyo3(signature = (points, starts = 4))]
    fn greedy(&self, points: Vec<(f64, f64)>, starts: usize) -> PyResult<(Vec<usize>, f64)> {
        let inst = VrpInstance::Tsp(instance_from(&points)?);
        let input = ModelInput::from_vrp(&inst);
        let batch = rollout(&self.params, &input, RolloutMode::Greedy, starts, 0).map_err(err)?;
        let mut best = 0;
        for (i, len) in batch.lengths.iter().enumerate() {
            if *len < batch.lengths[best] {
                best = i;
            }
        }
        let Tour::Tsp { order } = batch.tours[best].clone() else {
            unreachable!()
        };
        Ok((order, batch.lengths[best]))
    }

    /// Sampled rollouts; returns (orders, logprobs, lengths).
    #[pyo3(signature = (points, starts = 1, seed = 0))]
    fn sample(
        &self,
        points: Vec<(f64, f64)>,
        starts: usize,
        seed: u64,
    ) -> PyResult<(Vec<Vec<usize>>, Vec<f64>, Vec<f64>)> {
        let inst = VrpInstance::Tsp(instance_from(&points)?);
        let input = ModelInput::from_vrp(&inst);
        let batch = rollout(&self.params, &input, RolloutMode::Sample, starts, seed).map_err(err)?;
        let orders = batch
            .tours
            .iter()
            .map(|t| match t {
                Tour::Tsp { order } => order.clone(),
                Tour::Cvrp { .. } => unreachable!(),
            })
            .collect();
        Ok((orders, batch.logprobs, batch.lengths))
    }

    /// Log-probability the policy assigns to a given tour.
    fn logprob(&self, points: Vec<(f64, f64)>, order: Vec<usize>) -> PyResult<f64> {
        let inst = VrpInstance::Tsp(instance_from(&points)?);
        let input = ModelInput::from_vrp(&inst);
        logprob_of_tour(&self.params, &input, &Tour::tsp(order)).map_err(err)
    }

    /// Best greedy CVRP routes; returns (routes, length).
    #[pyo3(signature = (depot, customers, demands, capacity, starts = 4))]
    fn greedy_cvrp(
        &self,
        depot: (f64, f64),
        customers: Vec<(f64, f64)>,
        demands: Vec<u32>,
        capacity: u32,
        starts: usize,
    ) -> PyResult<(Vec<Vec<usize>>, f64)> {
        let cvrp = CvrpInstance::new(
            instance_from(&customers)?,
            Point::new(depot.0, depot.1),
            demands,
            capacity,
        )
        .map_err(err)?;
        let inst = VrpInstance::Cvrp(cvrp);
        let input = ModelInput::from_vrp(&inst);
        let batch = rollout(&self.params, &input, RolloutMode::Greedy, starts, 0).map_err(err)?;
        let mut best = 0;
        for (i, len) in batch.lengths.iter().enumerate() {
            if *len < batch.lengths[best] {
                best = i;
            }
        }
        let Tour::Cvrp { routes } = batch.tours[best].clone() else {
            unreachable!()
        };
        Ok((routes, batch.lengths[best]))
    }
}

/// Train a policy on generated instance groups. `groups` is a list of
/// (kind, count, n, seed); returns (policy, final group weights).
#[pyfunction]
#[pyo3(signature = (groups, mode = "dro", steps = 50, batch_size = 4, starts = 4,
                    eta_theta = 0.01, eta_q = 0.01, momentum = 0.9,
                    weight_decay = 1e-4, seed = 0, normalize_group_loss = false,
                    channels = 16, kernel_size = 4, neighbors = 3, layers = 1,
                    heads = 2, ff_dim = 32))]
#[allow(clippy::too_many_arguments)]
fn train(
    groups: Vec<(String, usize, usize, u64)>,
    mode: &str,
    steps: usize,
    batch_size: usize,
    starts: usize,
    eta_theta: f64,
    eta_q: f64,
    momentum: f64,
    weight_decay: f64,
    seed: u64,
    normalize_group_loss: bool,
    channels: usize,
    kernel_size: usize,
    neighbors: usize,
    layers: usize,
    heads: usize,
    ff_dim: usize,
) -> PyResult<(Policy, Vec<f64>)> {
    let spec: Vec<GroupSpec> = groups
        .iter()
        .map(|(kind, count, n, gseed)| {
            Ok(GroupSpec {
                kind: kind_from(kind, *n)?,
                count: *count,
                n: *n,
                seed: *gseed,
                capacity: None,
            })
        })
        .collect::<PyResult<_>>()?;
    let dataset = build_group_dataset(&spec).map_err(err)?;
    let cfg = TrainConfig {
        eta_theta,
        momentum,
        eta_q,
        outer_steps: steps,
        inner_steps: 1,
        batch_size,
        weight_decay,
        mode: TrainMode::parse(mode).map_err(err)?,
        seed,
        starts,
        normalize_group_loss,
        group_sampling: GroupSampling::Uniform,
        checkpoint_interval: 0,
        model: PolicyConfig {
            input_dim: 2,
            channels,
            kernel_size,
            neighbors,
            layers,
            heads,
            ff_dim,
            logit_clip: 10.0,
        },
    };
    let mut trainer = Trainer::new(cfg, &dataset).map_err(err)?;
    trainer.run(|_| Ok(())).map_err(err)?;
    let q = trainer.state().q.as_slice().to_vec();
    Ok((
        Policy {
            params: trainer.params().clone(),
        },
        q,
    ))
}

#[pymodule]
fn droroute_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(augment_x8, m)?)?;
    m.add_function(wrap_pyfunction!(held_karp, m)?)?;
    m.add_function(wrap_pyfunction!(nn_two_opt, m)?)?;
    m.add_function(wrap_pyfunction!(tour_length, m)?)?;
    m.add_function(wrap_pyfunction!(cvrp_reference, m)?)?;
    m.add_function(wrap_pyfunction!(eg_update, m)?)?;
    m.add_function(wrap_pyfunction!(tsplib_distance, m)?)?;
    m.add_function(wrap_pyfunction!(parse_tsplib, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_class::<Policy>()?;
    Ok(())
}
