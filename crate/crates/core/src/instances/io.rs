//! Line-oriented dataset files.
//!
//! One instance per record: a header `TSP n` or `CVRP n D`, then `n` lines
//! of `x y demand` (CVRP: `n+1` lines, depot first with no demand field).
//! Floats are written with 17 significant digits so records round-trip
//! bit-exactly. Group files are named `<kind>_<n>_<seed>.txt` and hold one
//! record per instance.

use super::{CvrpInstance, DistributionKind, Group, GroupedDataset, Instance, Point, VrpInstance};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

/// 17 significant digits: enough to reconstruct any f64 exactly.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn group_file_name(kind: &DistributionKind, n: usize, seed: u64) -> String {
    format!("{}_{}_{}.txt", kind.name(), n, seed)
}

pub fn write_records<W: Write>(w: &mut W, instances: &[VrpInstance]) -> Result<()> {
    let mut buf = String::new();
    for inst in instances {
        buf.clear();
        match inst {
            VrpInstance::Tsp(tsp) => {
                writeln!(buf, "TSP {}", tsp.len()).unwrap();
                for p in tsp.coords() {
                    writeln!(buf, "{} {}", fmt_f64(p.x), fmt_f64(p.y)).unwrap();
                }
            }
            VrpInstance::Cvrp(cvrp) => {
                writeln!(buf, "CVRP {} {}", cvrp.customers.len(), cvrp.capacity).unwrap();
                writeln!(buf, "{} {}", fmt_f64(cvrp.depot.x), fmt_f64(cvrp.depot.y)).unwrap();
                for (p, d) in cvrp.customers.coords().iter().zip(&cvrp.demands) {
                    writeln!(buf, "{} {} {}", fmt_f64(p.x), fmt_f64(p.y), d).unwrap();
                }
            }
        }
        w.write_all(buf.as_bytes())?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<VrpInstance>> {
    let mut lines = r.lines();
    let mut out = Vec::new();
    while let Some(line) = lines.next() {
        let line = line?;
        let header = line.trim();
        if header.is_empty() {
            continue;
        }
        let fields: Vec<&str> = header.split_whitespace().collect();
        match fields.as_slice() {
            ["TSP", n] => {
                let n: usize = parse_field(n, "node count")?;
                let mut coords = Vec::with_capacity(n);
                for _ in 0..n {
                    let l = next_line(&mut lines)?;
                    let (p, d) = parse_point_line(&l)?;
                    if d.is_some() {
                        return Err(Error::Parse("unexpected demand on a TSP line".into()));
                    }
                    coords.push(p);
                }
                out.push(VrpInstance::Tsp(Instance::new(coords)?));
            }
            ["CVRP", n, cap] => {
                let n: usize = parse_field(n, "customer count")?;
                let capacity: u32 = parse_field(cap, "capacity")?;
                let depot_line = next_line(&mut lines)?;
                let (depot, d) = parse_point_line(&depot_line)?;
                if d.is_some() {
                    return Err(Error::Parse("depot line must not carry a demand".into()));
                }
                let mut coords = Vec::with_capacity(n);
                let mut demands = Vec::with_capacity(n);
                for _ in 0..n {
                    let l = next_line(&mut lines)?;
                    let (p, d) = parse_point_line(&l)?;
                    let d =
                        d.ok_or_else(|| Error::Parse("customer line missing demand".into()))?;
                    coords.push(p);
                    demands.push(d);
                }
                out.push(VrpInstance::Cvrp(CvrpInstance::new(
                    Instance::new(coords)?,
                    depot,
                    demands,
                    capacity,
                )?));
            }
            _ => {
                return Err(Error::Parse(format!("bad record header: '{header}'")));
            }
        }
    }
    Ok(out)
}

fn next_line(lines: &mut impl Iterator<Item = std::io::Result<String>>) -> Result<String> {
    match lines.next() {
        Some(l) => Ok(l?),
        None => Err(Error::Parse("unexpected end of file".into())),
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad {what}: '{s}'")))
}

fn parse_point_line(line: &str) -> Result<(Point, Option<u32>)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    match fields.as_slice() {
        [x, y] => Ok((
            Point::new(parse_field(x, "x")?, parse_field(y, "y")?),
            None,
        )),
        [x, y, d] => Ok((
            Point::new(parse_field(x, "x")?, parse_field(y, "y")?),
            Some(parse_field(d, "demand")?),
        )),
        _ => Err(Error::Parse(format!("bad coordinate line: '{line}'"))),
    }
}

/// Writes one group file per group under `dir`, named by kind, size, seed.
pub fn write_group_file(dir: &Path, kind: &DistributionKind, n: usize, seed: u64, instances: &[VrpInstance]) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(group_file_name(kind, n, seed));
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    write_records(&mut f, instances)?;
    f.flush()?;
    Ok(path)
}

/// Loads every `<kind>_<n>_<seed>.txt` under `dir` into a grouped dataset.
/// Files are ordered lexicographically; each file becomes one group.
pub fn load_dataset_dir(dir: &Path) -> Result<GroupedDataset> {
    let mut paths: Vec<std::path::PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Dataset(format!(
            "no .txt group files under {}",
            dir.display()
        )));
    }
    let mut groups = Vec::new();
    for (id, path) in paths.iter().enumerate() {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Parse(format!("bad file name {}", path.display())))?;
        let kind_name = stem.split('_').next().unwrap_or(stem);
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        let instances = read_records(reader)?;
        if instances.is_empty() {
            return Err(Error::Dataset(format!("{} holds no records", path.display())));
        }
        let n = instances[0].len();
        let kind = DistributionKind::with_defaults(kind_name, n).map_err(|_| {
            Error::Dataset(format!(
                "{}: file name must start with a distribution kind",
                path.display()
            ))
        })?;
        groups.push(Group {
            id,
            kind,
            instances,
        });
    }
    GroupedDataset::new(groups)
}
