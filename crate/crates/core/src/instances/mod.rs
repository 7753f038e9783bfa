//! VRP instances, spatial distribution kinds, and grouped datasets.

mod generate;
mod io;

pub use generate::{
    attach_vrp, attach_vrp_with_rng, augment_x8, build_group_dataset, generate, generate_raw,
    generate_with_rng, normalize, GroupSpec,
};
pub use io::{
    group_file_name, load_dataset_dir, read_records, write_group_file, write_records,
};

use crate::error::{Error, Result};

/// A point in the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// A TSP instance: `n >= 2` nodes with coordinates in `[0,1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    coords: Vec<Point>,
}

impl Instance {
    /// Validates the instance invariants: at least two nodes, all
    /// coordinates finite and inside the unit square.
    pub fn new(coords: Vec<Point>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Parameter(format!(
                "instance needs >= 2 nodes, got {}",
                coords.len()
            )));
        }
        for (i, p) in coords.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::Degenerate(format!("node {i} has non-finite coords")));
            }
            if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
                return Err(Error::Parameter(format!(
                    "node {i} ({}, {}) outside the unit square",
                    p.x, p.y
                )));
            }
        }
        Ok(Instance { coords })
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// A CVRP instance: customers plus a depot, integer demands, and a vehicle
/// capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct CvrpInstance {
    pub customers: Instance,
    pub depot: Point,
    pub demands: Vec<u32>,
    pub capacity: u32,
}

impl CvrpInstance {
    pub fn new(
        customers: Instance,
        depot: Point,
        demands: Vec<u32>,
        capacity: u32,
    ) -> Result<Self> {
        if demands.len() != customers.len() {
            return Err(Error::Parameter(format!(
                "{} demands for {} customers",
                demands.len(),
                customers.len()
            )));
        }
        if let Some(&d) = demands.iter().find(|&&d| d == 0 || d > capacity) {
            return Err(Error::Parameter(format!(
                "demand {d} outside 1..={capacity}"
            )));
        }
        if !(0.0..=1.0).contains(&depot.x) || !(0.0..=1.0).contains(&depot.y) {
            return Err(Error::Parameter("depot outside the unit square".into()));
        }
        Ok(CvrpInstance {
            customers,
            depot,
            demands,
            capacity,
        })
    }

    /// Demands divided by capacity, exact in f64.
    pub fn normalized_demands(&self) -> Vec<f64> {
        self.demands
            .iter()
            .map(|&d| f64::from(d) / f64::from(self.capacity))
            .collect()
    }
}

/// Either problem variant, as stored in datasets.
#[derive(Debug, Clone, PartialEq)]
pub enum VrpInstance {
    Tsp(Instance),
    Cvrp(CvrpInstance),
}

impl VrpInstance {
    /// Customer count (CVRP) or node count (TSP).
    pub fn len(&self) -> usize {
        match self {
            VrpInstance::Tsp(i) => i.len(),
            VrpInstance::Cvrp(c) => c.customers.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_tsp(&self) -> Option<&Instance> {
        match self {
            VrpInstance::Tsp(i) => Some(i),
            VrpInstance::Cvrp(_) => None,
        }
    }

    pub fn as_cvrp(&self) -> Option<&CvrpInstance> {
        match self {
            VrpInstance::Cvrp(c) => Some(c),
            VrpInstance::Tsp(_) => None,
        }
    }
}

/// One of the six spatial node distributions.
///
/// `Explosion` and `Implosion` re-draw their center and radius per instance
/// when the fields are `None`; fixing them pins the mutation for every
/// instance generated with that kind.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    Uniform,
    Explosion {
        center: Option<Point>,
        radius: Option<f64>,
    },
    Implosion {
        center: Option<Point>,
        radius: Option<f64>,
    },
    Expansion {
        width: f64,
    },
    Cluster {
        centers: usize,
        spread: f64,
    },
    Grid {
        jitter: f64,
    },
}

impl DistributionKind {
    pub const NAMES: [&'static str; 6] = [
        "uniform",
        "explosion",
        "implosion",
        "expansion",
        "cluster",
        "grid",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DistributionKind::Uniform => "uniform",
            DistributionKind::Explosion { .. } => "explosion",
            DistributionKind::Implosion { .. } => "implosion",
            DistributionKind::Expansion { .. } => "expansion",
            DistributionKind::Cluster { .. } => "cluster",
            DistributionKind::Grid { .. } => "grid",
        }
    }

    /// Kind with default parameters for a given instance size: cluster count
    /// follows 2 at n=50 and 4 at n=100, i.e. `max(2, round(n/25))`.
    pub fn with_defaults(name: &str, n: usize) -> Result<Self> {
        match name {
            "uniform" => Ok(DistributionKind::Uniform),
            "explosion" => Ok(DistributionKind::Explosion {
                center: None,
                radius: None,
            }),
            "implosion" => Ok(DistributionKind::Implosion {
                center: None,
                radius: None,
            }),
            "expansion" => Ok(DistributionKind::Expansion { width: 0.1 }),
            "cluster" => Ok(DistributionKind::Cluster {
                centers: default_cluster_count(n),
                spread: 0.05,
            }),
            "grid" => Ok(DistributionKind::Grid { jitter: 0.01 }),
            other => Err(Error::Parameter(format!(
                "unknown distribution kind '{other}' (expected one of {:?})",
                Self::NAMES
            ))),
        }
    }

    /// Parameter validation against an instance size.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            DistributionKind::Uniform => Ok(()),
            DistributionKind::Explosion { radius, .. }
            | DistributionKind::Implosion { radius, .. } => {
                if let Some(r) = radius {
                    if !(*r > 0.0) {
                        return Err(Error::Parameter(format!("radius {r} must be > 0")));
                    }
                }
                Ok(())
            }
            DistributionKind::Expansion { width } => {
                if !(*width > 0.0) {
                    return Err(Error::Parameter(format!("tube width {width} must be > 0")));
                }
                Ok(())
            }
            DistributionKind::Cluster { centers, spread } => {
                if *centers < 1 {
                    return Err(Error::Parameter("cluster count must be >= 1".into()));
                }
                if *centers > n {
                    return Err(Error::Parameter(format!(
                        "cluster count {centers} exceeds node count {n}"
                    )));
                }
                if !(*spread >= 0.0) {
                    return Err(Error::Parameter(format!("spread {spread} must be >= 0")));
                }
                Ok(())
            }
            DistributionKind::Grid { jitter } => {
                if !(*jitter >= 0.0) {
                    return Err(Error::Parameter(format!("jitter {jitter} must be >= 0")));
                }
                Ok(())
            }
        }
    }
}

/// Cluster count rule: 2 clusters at n=50, 4 at n=100.
pub fn default_cluster_count(n: usize) -> usize {
    ((n as f64 / 25.0).round() as usize).max(2)
}

/// A labeled group of instances drawn from one distribution.
#[derive(Debug, Clone)]
pub struct Group {
    pub id: usize,
    pub kind: DistributionKind,
    pub instances: Vec<VrpInstance>,
}

/// Instances partitioned into `m` distribution groups with contiguous ids.
#[derive(Debug, Clone)]
pub struct GroupedDataset {
    groups: Vec<Group>,
}

impl GroupedDataset {
    pub fn new(groups: Vec<Group>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::Dataset("dataset has no groups".into()));
        }
        for (i, g) in groups.iter().enumerate() {
            if g.id != i {
                return Err(Error::Dataset(format!(
                    "group id {} at position {i}; ids must be 0..m contiguous",
                    g.id
                )));
            }
            if g.instances.is_empty() {
                return Err(Error::Dataset(format!("group {i} is empty")));
            }
        }
        Ok(GroupedDataset { groups })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.instances.len()).collect()
    }

    pub fn total_instances(&self) -> usize {
        self.groups.iter().map(|g| g.instances.len()).sum()
    }
}
