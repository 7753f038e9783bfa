//! TSPLIB / CVRPLIB ingestion (EUC_2D only) and the integer distance
//! convention benchmark objectives are computed with.

use super::BenchmarkInstance;
use crate::error::{Error, Result};
use crate::instances::{normalize, CvrpInstance, Instance, Point, VrpInstance};
use crate::tour::Tour;
use std::collections::HashMap;
use std::path::Path;

/// EUC_2D distance: Euclidean distance rounded to the nearest integer
/// (half up).
pub fn tsplib_distance(p: Point, q: Point) -> u64 {
    (p.dist(q) + 0.5).floor() as u64
}

pub fn parse_tsplib(text: &str) -> Result<BenchmarkInstance> {
    let mut name = String::new();
    let mut problem_type = String::new();
    let mut dimension: Option<usize> = None;
    let mut edge_weight_type = String::new();
    let mut capacity: Option<u32> = None;
    let mut coords: Vec<(usize, Point)> = Vec::new();
    let mut demands: Vec<(usize, u32)> = Vec::new();
    let mut depots: Vec<usize> = Vec::new();

    #[derive(PartialEq)]
    enum Section {
        Header,
        Coords,
        Demands,
        Depots,
    }
    let mut section = Section::Header;

    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        match line {
            "NODE_COORD_SECTION" => {
                section = Section::Coords;
                continue;
            }
            "DEMAND_SECTION" => {
                section = Section::Demands;
                continue;
            }
            "DEPOT_SECTION" => {
                section = Section::Depots;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Header => {
                let (key, value) = line
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("bad header line: '{line}'")))?;
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "NAME" => name = value.to_string(),
                    "TYPE" => problem_type = value.to_string(),
                    "COMMENT" => {}
                    "DIMENSION" => {
                        dimension = Some(value.parse().map_err(|_| {
                            Error::Parse(format!("bad DIMENSION '{value}'"))
                        })?)
                    }
                    "EDGE_WEIGHT_TYPE" => edge_weight_type = value.to_string(),
                    "CAPACITY" => {
                        capacity = Some(value.parse().map_err(|_| {
                            Error::Parse(format!("bad CAPACITY '{value}'"))
                        })?)
                    }
                    // Unknown headers are tolerated (DISPLAY_DATA_TYPE etc.).
                    _ => {}
                }
            }
            Section::Coords => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 3 {
                    return Err(Error::Parse(format!("bad coord line: '{line}'")));
                }
                let id: usize = fields[0]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad node id '{}'", fields[0])))?;
                let x: f64 = fields[1]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad x '{}'", fields[1])))?;
                let y: f64 = fields[2]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad y '{}'", fields[2])))?;
                coords.push((id, Point::new(x, y)));
            }
            Section::Demands => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 2 {
                    return Err(Error::Parse(format!("bad demand line: '{line}'")));
                }
                let id: usize = fields[0]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad node id '{}'", fields[0])))?;
                let d: u32 = fields[1]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad demand '{}'", fields[1])))?;
                demands.push((id, d));
            }
            Section::Depots => {
                let id: i64 = line
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad depot id '{line}'")))?;
                if id == -1 {
                    section = Section::Header;
                } else {
                    depots.push(id as usize);
                }
            }
        }
    }

    if edge_weight_type != "EUC_2D" {
        return Err(Error::UnsupportedFormat(format!(
            "EDGE_WEIGHT_TYPE '{edge_weight_type}' (only EUC_2D is supported)"
        )));
    }
    let dim = dimension.ok_or_else(|| Error::Parse("missing DIMENSION".into()))?;
    if coords.len() != dim {
        return Err(Error::Parse(format!(
            "DIMENSION {dim} but {} coordinates",
            coords.len()
        )));
    }
    // Node ids are 1-based and must be contiguous in file order.
    for (i, (id, _)) in coords.iter().enumerate() {
        if *id != i + 1 {
            return Err(Error::Parse(format!("node id {id} at position {i}")));
        }
    }
    let coords: Vec<Point> = coords.into_iter().map(|(_, p)| p).collect();

    let is_cvrp = problem_type == "CVRP";
    let demands = if demands.is_empty() {
        None
    } else {
        if demands.len() != dim {
            return Err(Error::Parse(format!(
                "DEMAND_SECTION has {} entries for {dim} nodes",
                demands.len()
            )));
        }
        for (i, (id, _)) in demands.iter().enumerate() {
            if *id != i + 1 {
                return Err(Error::Parse(format!("demand id {id} at position {i}")));
            }
        }
        Some(demands.into_iter().map(|(_, d)| d).collect::<Vec<u32>>())
    };
    if is_cvrp && (demands.is_none() || capacity.is_none()) {
        return Err(Error::Parse(
            "CVRP file needs CAPACITY and DEMAND_SECTION".into(),
        ));
    }
    if depots.len() > 1 {
        return Err(Error::UnsupportedFormat("multiple depots".into()));
    }
    let depot_index = depots.first().map(|&id| id - 1);

    Ok(BenchmarkInstance {
        name,
        problem_type,
        coords,
        demands,
        capacity,
        depot_index,
        edge_weight_type,
        best_known: None,
    })
}

/// Writes the instance back in TSPLIB form; `parse_tsplib` of the output
/// reproduces the instance exactly.
pub fn serialize_tsplib(bench: &BenchmarkInstance) -> String {
    let mut out = String::new();
    out.push_str(&format!("NAME : {}\n", bench.name));
    out.push_str(&format!("TYPE : {}\n", bench.problem_type));
    out.push_str(&format!("DIMENSION : {}\n", bench.coords.len()));
    out.push_str(&format!("EDGE_WEIGHT_TYPE : {}\n", bench.edge_weight_type));
    if let Some(cap) = bench.capacity {
        out.push_str(&format!("CAPACITY : {cap}\n"));
    }
    out.push_str("NODE_COORD_SECTION\n");
    for (i, p) in bench.coords.iter().enumerate() {
        out.push_str(&format!("{} {} {}\n", i + 1, p.x, p.y));
    }
    if let Some(demands) = &bench.demands {
        out.push_str("DEMAND_SECTION\n");
        for (i, d) in demands.iter().enumerate() {
            out.push_str(&format!("{} {}\n", i + 1, d));
        }
    }
    if let Some(depot) = bench.depot_index {
        out.push_str(&format!("DEPOT_SECTION\n{}\n-1\n", depot + 1));
    }
    out.push_str("EOF\n");
    out
}

/// Original-units geometry kept alongside the normalized model input, so
/// benchmark objectives are always recomputed with `tsplib_distance` on the
/// raw coordinates along the predicted order.
#[derive(Debug, Clone)]
pub struct ScaleRecord {
    pub raw: Vec<Point>,
    /// Model node index -> raw coordinate index (depot is model node 0 for
    /// CVRP).
    pub model_to_raw: Vec<usize>,
}

impl ScaleRecord {
    /// Integer objective of a tour in original units.
    pub fn integer_tour_length(&self, tour: &Tour) -> u64 {
        match tour {
            Tour::Tsp { order } => {
                let n = order.len();
                (0..n)
                    .map(|i| {
                        let a = self.raw[self.model_to_raw[order[i]]];
                        let b = self.raw[self.model_to_raw[order[(i + 1) % n]]];
                        tsplib_distance(a, b)
                    })
                    .sum()
            }
            Tour::Cvrp { routes } => {
                let depot = self.raw[self.model_to_raw[0]];
                let mut total = 0;
                for route in routes {
                    let mut prev = depot;
                    for &c in route {
                        let p = self.raw[self.model_to_raw[c + 1]];
                        total += tsplib_distance(prev, p);
                        prev = p;
                    }
                    total += tsplib_distance(prev, depot);
                }
                total
            }
        }
    }
}

/// Converts a benchmark instance into normalized model input plus the scale
/// record. All nodes (depot included) are normalized jointly with the
/// aspect-preserving rule; node order is untouched.
pub fn to_model_input(bench: &BenchmarkInstance) -> Result<(VrpInstance, ScaleRecord)> {
    let normalized = normalize(&bench.coords)?;
    match (&bench.demands, bench.capacity) {
        (Some(demands), Some(capacity)) => {
            let depot_raw = bench.depot_index.unwrap_or(0);
            let mut model_to_raw = vec![depot_raw];
            let mut customer_points = Vec::with_capacity(bench.coords.len() - 1);
            let mut customer_demands = Vec::with_capacity(bench.coords.len() - 1);
            for i in 0..bench.coords.len() {
                if i == depot_raw {
                    continue;
                }
                model_to_raw.push(i);
                customer_points.push(normalized[i]);
                customer_demands.push(demands[i]);
            }
            let cvrp = CvrpInstance::new(
                Instance::new(customer_points)?,
                normalized[depot_raw],
                customer_demands,
                capacity,
            )?;
            Ok((
                VrpInstance::Cvrp(cvrp),
                ScaleRecord {
                    raw: bench.coords.clone(),
                    model_to_raw,
                },
            ))
        }
        _ => Ok((
            VrpInstance::Tsp(Instance::new(normalized)?),
            ScaleRecord {
                raw: bench.coords.clone(),
                model_to_raw: (0..bench.coords.len()).collect(),
            },
        )),
    }
}

/// Loads the optional `name value` sidecar of best-known objectives.
pub fn load_best_known(path: &Path) -> Result<HashMap<String, f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(name), Some(value)) = (fields.next(), fields.next()) else {
            return Err(Error::Parse(format!("bad best-known line: '{line}'")));
        };
        let value: f64 = value
            .parse()
            .map_err(|_| Error::Parse(format!("bad best-known value '{value}'")))?;
        out.insert(name.to_string(), value);
    }
    Ok(out)
}
