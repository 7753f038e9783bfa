//! Benchmark ingestion (TSPLIB/CVRPLIB), the evaluation harness, and report
//! emission.

mod evaluate;
mod report;
mod tsplib;

pub use evaluate::{
    augment_vrp_x8, best_greedy_tour, evaluate, evaluate_benchmark, evaluate_rows,
    reference_tour, BenchRow, EvalConfig, GroupMetrics, InstanceRow, Metrics, ReferenceKind,
};
pub use report::{emit_report, ReportFormat};
pub use tsplib::{
    load_best_known, parse_tsplib, serialize_tsplib, to_model_input, tsplib_distance, ScaleRecord,
};

use crate::instances::Point;

/// A parsed benchmark file: raw coordinates in original units plus the CVRP
/// attributes when present. Only EUC_2D edge weights are accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkInstance {
    pub name: String,
    pub problem_type: String,
    pub coords: Vec<Point>,
    pub demands: Option<Vec<u32>>,
    pub capacity: Option<u32>,
    pub depot_index: Option<usize>,
    pub edge_weight_type: String,
    /// Declared best-known objective, filled from the optional sidecar.
    pub best_known: Option<f64>,
}
