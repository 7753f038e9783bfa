//! Instance generation: the six spatial distributions, unit-square
//! normalization, CVRP attributes, dataset assembly, and x8 augmentation.
//!
//! All generators start from (or are defined relative to) uniform points and
//! are deterministic functions of `(kind, n, seed)`. Raw point clouds are
//! normalized into `[0,1]^2` before they become an [`Instance`].

use super::{CvrpInstance, DistributionKind, Group, GroupedDataset, Instance, Point, VrpInstance};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use rand::Rng as _;
use rand_distr::{Distribution, Exp, Normal};

/// Per-group recipe for [`build_group_dataset`].
#[derive(Debug, Clone)]
pub struct GroupSpec {
    pub kind: DistributionKind,
    pub count: usize,
    pub n: usize,
    pub seed: u64,
    /// `Some(capacity)` builds CVRP instances, `None` builds TSP.
    pub capacity: Option<u32>,
}

/// Generates one instance: raw points from the kind's procedure, then
/// normalization into the unit square.
pub fn generate(kind: &DistributionKind, n: usize, seed: u64) -> Result<Instance> {
    generate_with_rng(kind, n, &mut rng::seeded(seed))
}

pub fn generate_with_rng(kind: &DistributionKind, n: usize, rng: &mut Rng) -> Result<Instance> {
    let raw = generate_raw(kind, n, rng)?;
    Instance::new(normalize(&raw)?)
}

/// The pre-normalization point cloud of a kind's mutation procedure.
pub fn generate_raw(kind: &DistributionKind, n: usize, rng: &mut Rng) -> Result<Vec<Point>> {
    if n < 2 {
        return Err(Error::Parameter(format!("need n >= 2 nodes, got {n}")));
    }
    kind.validate(n)?;
    let points = match kind {
        DistributionKind::Uniform => uniform_points(n, rng),
        DistributionKind::Explosion { center, radius } => {
            let mut pts = uniform_points(n, rng);
            let (c, r) = center_radius(*center, *radius, rng);
            let exp = Exp::new(10.0).expect("rate > 0"); // mean 0.1
            for p in &mut pts {
                let d = p.dist(c);
                if d < r {
                    let u = ray_from(c, *p, d, rng);
                    let e = exp.sample(rng);
                    *p = Point::new(c.x + (r + e) * u.x, c.y + (r + e) * u.y);
                }
            }
            pts
        }
        DistributionKind::Implosion { center, radius } => {
            let mut pts = uniform_points(n, rng);
            let (c, r) = center_radius(*center, *radius, rng);
            for p in &mut pts {
                if p.dist(c) < r {
                    *p = Point::new(c.x + 0.1 * (p.x - c.x), c.y + 0.1 * (p.y - c.y));
                }
            }
            pts
        }
        DistributionKind::Expansion { width } => {
            let mut pts = uniform_points(n, rng);
            // Axis-aligned segment through the square: a vertical or
            // horizontal line at a uniform offset.
            let vertical = rng.random::<bool>();
            let pos: f64 = rng.random();
            let exp = Exp::new(10.0).expect("rate > 0"); // mean 0.1
            for p in &mut pts {
                let d = if vertical { p.x - pos } else { p.y - pos };
                if d.abs() < *width {
                    let e = exp.sample(rng);
                    let side = if d >= 0.0 { 1.0 } else { -1.0 };
                    let shifted = pos + side * (width + e);
                    if vertical {
                        p.x = shifted;
                    } else {
                        p.y = shifted;
                    }
                }
            }
            pts
        }
        DistributionKind::Cluster { centers, spread } => {
            let cs: Vec<Point> = (0..*centers)
                .map(|_| {
                    Point::new(
                        rng.random_range(0.2..=0.8),
                        rng.random_range(0.2..=0.8),
                    )
                })
                .collect();
            let normal = Normal::new(0.0, *spread).expect("spread >= 0");
            let mut pts = Vec::with_capacity(n);
            for i in 0..n {
                let c = cs[i % cs.len()];
                // Resample offsets that would leave the unit square.
                let p = loop {
                    let candidate = if *spread == 0.0 {
                        c
                    } else {
                        Point::new(c.x + normal.sample(rng), c.y + normal.sample(rng))
                    };
                    if (0.0..=1.0).contains(&candidate.x) && (0.0..=1.0).contains(&candidate.y) {
                        break candidate;
                    }
                };
                pts.push(p);
            }
            pts
        }
        DistributionKind::Grid { jitter } => {
            let g = (n as f64).sqrt().ceil() as usize;
            let chosen = sample_without_replacement(g * g, n, rng);
            let mut pts = Vec::with_capacity(n);
            for cell in chosen {
                let (row, col) = (cell / g, cell % g);
                let mut x = (col as f64 + 0.5) / g as f64;
                let mut y = (row as f64 + 0.5) / g as f64;
                if *jitter > 0.0 {
                    x += rng.random_range(-*jitter..=*jitter);
                    y += rng.random_range(-*jitter..=*jitter);
                }
                pts.push(Point::new(x, y));
            }
            pts
        }
    };
    Ok(points)
}

fn uniform_points(n: usize, rng: &mut Rng) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new(rng.random(), rng.random()))
        .collect()
}

fn center_radius(center: Option<Point>, radius: Option<f64>, rng: &mut Rng) -> (Point, f64) {
    let c = center.unwrap_or_else(|| Point::new(rng.random(), rng.random()));
    let r = radius.unwrap_or_else(|| rng.random_range(0.2..=0.4));
    (c, r)
}

/// Unit ray from `c` through `p`; a point sitting exactly on the center gets
/// a uniformly random direction.
fn ray_from(c: Point, p: Point, dist: f64, rng: &mut Rng) -> Point {
    if dist > 1e-12 {
        Point::new((p.x - c.x) / dist, (p.y - c.y) / dist)
    } else {
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        Point::new(angle.cos(), angle.sin())
    }
}

/// `k` distinct indices from `0..total`, ascending. Partial Fisher-Yates
/// over an index array, then sorted so cell assignment does not depend on
/// draw order.
fn sample_without_replacement(total: usize, k: usize, rng: &mut Rng) -> Vec<usize> {
    debug_assert!(k <= total);
    let mut idx: Vec<usize> = (0..total).collect();
    for i in 0..k {
        let j = rng.random_range(i..total);
        idx.swap(i, j);
    }
    let mut chosen = idx[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Aspect-preserving min-max normalization into `[0,1]^2`.
///
/// Both axes are scaled by the same factor (1 / longer range) and the
/// shorter axis is centered, so distance ratios and hence optimal tours are
/// preserved. Clouds already inside the unit square whose longer range is at
/// least 0.95 are returned untouched, which keeps directly-sampled uniform
/// instances as drawn and makes normalization idempotent.
pub fn normalize(points: &[Point]) -> Result<Vec<Point>> {
    if points.len() < 2 {
        return Err(Error::Parameter("normalize needs >= 2 points".into()));
    }
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::Degenerate("non-finite coordinate".into()));
        }
        min_x = min_x.min(p.x);
        max_x = max_x.max(p.x);
        min_y = min_y.min(p.y);
        max_y = max_y.max(p.y);
    }
    let (range_x, range_y) = (max_x - min_x, max_y - min_y);
    let longer = range_x.max(range_y);
    if longer < 1e-15 {
        return Err(Error::Degenerate("all points identical".into()));
    }
    let inside = min_x >= 0.0 && max_x <= 1.0 && min_y >= 0.0 && max_y <= 1.0;
    if inside && longer >= 0.95 {
        return Ok(points.to_vec());
    }
    let scale = 1.0 / longer;
    let off_x = (1.0 - range_x * scale) / 2.0;
    let off_y = (1.0 - range_y * scale) / 2.0;
    Ok(points
        .iter()
        .map(|p| Point::new((p.x - min_x) * scale + off_x, (p.y - min_y) * scale + off_y))
        .collect())
}

/// Attaches CVRP attributes: a depot uniform in the unit square (drawn
/// first), then i.i.d. demands uniform on `{1..9}`.
pub fn attach_vrp(inst: Instance, capacity: u32, seed: u64) -> Result<CvrpInstance> {
    attach_vrp_with_rng(inst, capacity, &mut rng::seeded(seed))
}

pub fn attach_vrp_with_rng(inst: Instance, capacity: u32, rng: &mut Rng) -> Result<CvrpInstance> {
    if capacity < 9 {
        return Err(Error::Parameter(format!(
            "capacity {capacity} < 9: a single customer could exceed it"
        )));
    }
    let depot = Point::new(rng.random(), rng.random());
    let demands = (0..inst.len()).map(|_| rng.random_range(1..=9)).collect();
    CvrpInstance::new(inst, depot, demands, capacity)
}

/// The 8 dihedral images of the unit square, identity first:
/// (x,y), (1-x,y), (x,1-y), (1-x,1-y), (y,x), (1-y,x), (y,1-x), (1-y,1-x).
pub fn augment_x8(inst: &Instance) -> [Instance; 8] {
    let maps: [fn(Point) -> Point; 8] = [
        |p| p,
        |p| Point::new(1.0 - p.x, p.y),
        |p| Point::new(p.x, 1.0 - p.y),
        |p| Point::new(1.0 - p.x, 1.0 - p.y),
        |p| Point::new(p.y, p.x),
        |p| Point::new(1.0 - p.y, p.x),
        |p| Point::new(p.y, 1.0 - p.x),
        |p| Point::new(1.0 - p.y, 1.0 - p.x),
    ];
    maps.map(|f| {
        Instance::new(inst.coords().iter().map(|&p| f(p)).collect())
            .expect("isometry preserves the unit square")
    })
}

/// Builds an m-group dataset from per-group recipes. Instance `i` of a group
/// draws from ChaCha stream `i` of the group seed, so groups are
/// reproducible and order-independent.
pub fn build_group_dataset(spec: &[GroupSpec]) -> Result<GroupedDataset> {
    if spec.is_empty() {
        return Err(Error::Parameter("empty dataset spec".into()));
    }
    let mut groups = Vec::with_capacity(spec.len());
    for (id, gs) in spec.iter().enumerate() {
        if gs.count < 1 {
            return Err(Error::Parameter(format!("group {id} has count 0")));
        }
        let mut instances = Vec::with_capacity(gs.count);
        for i in 0..gs.count {
            let mut r = rng::stream(gs.seed, i as u64);
            let inst = generate_with_rng(&gs.kind, gs.n, &mut r)?;
            instances.push(match gs.capacity {
                Some(cap) => VrpInstance::Cvrp(attach_vrp_with_rng(inst, cap, &mut r)?),
                None => VrpInstance::Tsp(inst),
            });
        }
        groups.push(Group {
            id,
            kind: gs.kind.clone(),
            instances,
        });
    }
    GroupedDataset::new(groups)
}
