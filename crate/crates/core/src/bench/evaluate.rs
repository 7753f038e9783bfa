//! Evaluation harness: best-of greedy rollouts over multi-starts and the
//! x8 augmentation, gaps against classical references, and group metrics.

use super::BenchmarkInstance;
use crate::error::{Error, Result};
use crate::instances::{augment_x8, CvrpInstance, Instance, VrpInstance};
use crate::policy::{rollout, ModelInput, PolicyParams, RolloutMode};
use crate::solvers;
use crate::tour::Tour;
use rayon::prelude::*;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Greedy starts per rollout; 0 means `min(n, 8)`.
    pub starts: usize,
    /// Evaluate all 8 dihedral images and keep the best tour.
    pub augment: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            starts: 0,
            augment: true,
        }
    }
}

fn resolve_starts(cfg: &EvalConfig, inst: &VrpInstance) -> usize {
    if cfg.starts > 0 {
        cfg.starts
    } else {
        inst.len().min(8)
    }
}

/// The 8 dihedral images of a VRP instance (identity first). For CVRP the
/// depot is mapped with the same isometry as the customers.
pub fn augment_vrp_x8(inst: &VrpInstance) -> Vec<VrpInstance> {
    match inst {
        VrpInstance::Tsp(tsp) => augment_x8(tsp).into_iter().map(VrpInstance::Tsp).collect(),
        VrpInstance::Cvrp(cvrp) => {
            // Append the depot as an extra point so it shares the isometry.
            let mut pts = cvrp.customers.coords().to_vec();
            pts.push(cvrp.depot);
            let joint = Instance::new(pts).expect(">= 2 points");
            augment_x8(&joint)
                .into_iter()
                .map(|image| {
                    let mut coords = image.coords().to_vec();
                    let depot = coords.pop().expect("depot appended");
                    VrpInstance::Cvrp(
                        CvrpInstance::new(
                            Instance::new(coords).expect("customers"),
                            depot,
                            cvrp.demands.clone(),
                            cvrp.capacity,
                        )
                        .expect("isometries preserve the unit square"),
                    )
                })
                .collect()
        }
    }
}

/// Best greedy tour over `starts x images`: tours are decoded on each image
/// but their lengths are always measured on the original instance (the
/// images are isometries, so this is exact rather than a rescaling).
pub fn best_greedy_tour(
    params: &PolicyParams,
    inst: &VrpInstance,
    cfg: &EvalConfig,
) -> Result<(Tour, f64)> {
    let starts = resolve_starts(cfg, inst);
    let images = if cfg.augment {
        augment_vrp_x8(inst)
    } else {
        vec![inst.clone()]
    };
    let mut best: Option<(Tour, f64)> = None;
    for image in &images {
        let input = ModelInput::from_vrp(image);
        let batch = rollout(params, &input, RolloutMode::Greedy, starts, 0)?;
        for tour in batch.tours {
            let len = solvers::tour_length(inst, &tour)?;
            if best.as_ref().is_none_or(|(_, b)| len < *b) {
                best = Some((tour, len));
            }
        }
    }
    Ok(best.expect("at least one rollout"))
}

/// Classical reference for gap computation: exact Held-Karp for small TSP,
/// otherwise 2-opt over nearest-neighbor; savings construction for CVRP.
pub fn reference_tour(inst: &VrpInstance) -> Result<(Tour, f64, bool)> {
    match inst {
        VrpInstance::Tsp(tsp) => {
            if tsp.len() <= solvers::HELD_KARP_MAX_N {
                let tour = solvers::held_karp(tsp)?;
                let len = solvers::tour_length(inst, &tour)?;
                Ok((tour, len, true))
            } else {
                let tour = solvers::two_opt(tsp, &solvers::nearest_neighbor(tsp, 0)?)?;
                let len = solvers::tour_length(inst, &tour)?;
                Ok((tour, len, false))
            }
        }
        VrpInstance::Cvrp(cvrp) => {
            let tour = solvers::cvrp_reference(cvrp)?;
            let len = solvers::tour_length(inst, &tour)?;
            Ok((tour, len, false))
        }
    }
}

/// One evaluated instance.
#[derive(Debug, Clone)]
pub struct InstanceRow {
    pub group: usize,
    pub model_length: f64,
    pub reference_length: f64,
    pub gap: f64,
    pub reference_exact: bool,
}

#[derive(Debug, Clone)]
pub struct GroupMetrics {
    pub group_id: usize,
    pub kind: String,
    pub count: usize,
    pub mean_obj: f64,
    pub mean_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Exact,
    Heuristic,
    Mixed,
}

impl ReferenceKind {
    pub fn label(self) -> &'static str {
        match self {
            ReferenceKind::Exact => "exact",
            ReferenceKind::Heuristic => "heuristic",
            ReferenceKind::Mixed => "mixed",
        }
    }
}

/// Aggregated evaluation metrics. The starred fields cover the atypical
/// (non-uniform) groups; the worst-group gap is the maximum per-group mean
/// gap.
#[derive(Debug, Clone)]
pub struct Metrics {
    pub per_group: Vec<GroupMetrics>,
    pub overall_obj: f64,
    pub overall_gap: f64,
    pub worst_group_gap: f64,
    pub obj_star: Option<f64>,
    pub gap_star: Option<f64>,
    pub reference: ReferenceKind,
    pub time_s: f64,
}

impl Metrics {
    /// Builds metrics from per-instance rows, enforcing the aggregation
    /// invariants (overall = count-weighted mean of group means, worst =
    /// max of group means).
    pub fn from_rows(
        rows: &[InstanceRow],
        kinds: &[String],
        atypical: &[bool],
        time_s: f64,
    ) -> Result<Metrics> {
        if rows.is_empty() {
            return Err(Error::Contract("no evaluation rows".into()));
        }
        let m = kinds.len();
        let mut count = vec![0usize; m];
        let mut sum_obj = vec![0.0; m];
        let mut sum_gap = vec![0.0; m];
        let mut all_exact = true;
        let mut any_exact = false;
        for row in rows {
            count[row.group] += 1;
            sum_obj[row.group] += row.model_length;
            sum_gap[row.group] += row.gap;
            all_exact &= row.reference_exact;
            any_exact |= row.reference_exact;
        }
        let per_group: Vec<GroupMetrics> = (0..m)
            .filter(|&g| count[g] > 0)
            .map(|g| GroupMetrics {
                group_id: g,
                kind: kinds[g].clone(),
                count: count[g],
                mean_obj: sum_obj[g] / count[g] as f64,
                mean_gap: sum_gap[g] / count[g] as f64,
            })
            .collect();
        let total: usize = per_group.iter().map(|g| g.count).sum();
        let overall_obj = per_group
            .iter()
            .map(|g| g.mean_obj * g.count as f64)
            .sum::<f64>()
            / total as f64;
        let overall_gap = per_group
            .iter()
            .map(|g| g.mean_gap * g.count as f64)
            .sum::<f64>()
            / total as f64;
        let worst_group_gap = per_group
            .iter()
            .map(|g| g.mean_gap)
            .fold(f64::NEG_INFINITY, f64::max);
        let star: Vec<&GroupMetrics> = per_group
            .iter()
            .filter(|g| atypical.get(g.group_id).copied().unwrap_or(false))
            .collect();
        let (obj_star, gap_star) = if star.is_empty() {
            (None, None)
        } else {
            let n: usize = star.iter().map(|g| g.count).sum();
            (
                Some(star.iter().map(|g| g.mean_obj * g.count as f64).sum::<f64>() / n as f64),
                Some(star.iter().map(|g| g.mean_gap * g.count as f64).sum::<f64>() / n as f64),
            )
        };
        let reference = if all_exact {
            ReferenceKind::Exact
        } else if any_exact {
            ReferenceKind::Mixed
        } else {
            ReferenceKind::Heuristic
        };
        Ok(Metrics {
            per_group,
            overall_obj,
            overall_gap,
            worst_group_gap,
            obj_star,
            gap_star,
            reference,
            time_s,
        })
    }
}

/// Evaluates every instance of a grouped dataset: best greedy length over
/// starts x augmentations, gap against the classical reference. Group
/// labels feed aggregation only; the model never sees them.
pub fn evaluate_rows(
    params: &PolicyParams,
    dataset: &crate::instances::GroupedDataset,
    cfg: &EvalConfig,
) -> Result<Vec<InstanceRow>> {
    let jobs: Vec<(usize, &VrpInstance)> = dataset
        .groups()
        .iter()
        .flat_map(|g| g.instances.iter().map(move |inst| (g.id, inst)))
        .collect();
    jobs.par_iter()
        .map(|&(group, inst)| {
            let (_, model_length) = best_greedy_tour(params, inst, cfg)?;
            let (_, reference_length, reference_exact) = reference_tour(inst)?;
            let report =
                solvers::GapReport::new(model_length, reference_length, reference_exact)?;
            Ok(InstanceRow {
                group,
                model_length,
                reference_length,
                gap: report.gap,
                reference_exact,
            })
        })
        .collect()
}

pub fn evaluate(
    params: &PolicyParams,
    dataset: &crate::instances::GroupedDataset,
    cfg: &EvalConfig,
) -> Result<Metrics> {
    let start = Instant::now();
    let rows = evaluate_rows(params, dataset, cfg)?;
    let kinds: Vec<String> = dataset
        .groups()
        .iter()
        .map(|g| g.kind.name().to_string())
        .collect();
    let atypical: Vec<bool> = dataset
        .groups()
        .iter()
        .map(|g| g.kind.name() != "uniform")
        .collect();
    Metrics::from_rows(&rows, &kinds, &atypical, start.elapsed().as_secs_f64())
}

/// One benchmark-instance result; the objective is the integer tour length
/// in original units.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub name: String,
    pub n: usize,
    pub model_obj: u64,
    pub reference_obj: u64,
    pub gap: f64,
    /// "best-known" when the sidecar provides the value, else "heuristic".
    pub reference_label: &'static str,
    pub time_s: f64,
}

/// Evaluates TSPLIB/CVRPLIB instances. Gaps use the best-known sidecar
/// value when available, otherwise the solvers-module reference computed on
/// the same instance (flagged as heuristic).
pub fn evaluate_benchmark(
    params: &PolicyParams,
    benches: &[BenchmarkInstance],
    cfg: &EvalConfig,
) -> Result<Vec<BenchRow>> {
    benches
        .iter()
        .map(|bench| {
            let start = Instant::now();
            let (inst, scale) = super::tsplib::to_model_input(bench)?;
            let (tour, _) = best_greedy_tour(params, &inst, cfg)?;
            let model_obj = scale.integer_tour_length(&tour);
            let (reference_obj, reference_label) = match bench.best_known {
                Some(v) => (v as u64, "best-known"),
                None => {
                    let (ref_tour, _, _) = reference_tour(&inst)?;
                    (scale.integer_tour_length(&ref_tour), "heuristic")
                }
            };
            if reference_obj == 0 {
                return Err(Error::Contract(format!(
                    "zero reference objective for {}",
                    bench.name
                )));
            }
            Ok(BenchRow {
                name: bench.name.clone(),
                n: bench.coords.len(),
                model_obj,
                reference_obj,
                gap: model_obj as f64 / reference_obj as f64 - 1.0,
                reference_label,
                time_s: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}
