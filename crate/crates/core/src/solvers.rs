//! Classical reference solvers: exact Held-Karp for tiny TSP, constructive
//! and local-search heuristics, and tour-length evaluation. These provide
//! the optimality (or heuristic) references that model gaps are computed
//! against.

use crate::error::{Error, Result};
use crate::instances::{CvrpInstance, Instance, Point, VrpInstance};
use crate::tour::Tour;

/// Largest instance the exact Held-Karp solver accepts. At n=13 the DP
/// tables hold 2^12 x 12 doubles, still desk-friendly.
pub const HELD_KARP_MAX_N: usize = 13;

/// Per-instance gap entry: model objective vs. a reference objective.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub model_length: f64,
    pub reference_length: f64,
    /// `model / reference - 1`.
    pub gap: f64,
    /// True when the reference is provably optimal (Held-Karp).
    pub reference_exact: bool,
}

impl GapReport {
    pub fn new(model_length: f64, reference_length: f64, reference_exact: bool) -> Result<Self> {
        if !(reference_length > 0.0) {
            return Err(Error::Contract(format!(
                "reference length {reference_length} must be positive"
            )));
        }
        let gap = model_length / reference_length - 1.0;
        if reference_exact && gap < -1e-9 {
            return Err(Error::Contract(format!(
                "model beat an exact reference by {gap}: reference is not optimal"
            )));
        }
        Ok(GapReport {
            model_length,
            reference_length,
            gap,
            reference_exact,
        })
    }
}

/// Euclidean length of a feasible tour, including the closing edge (TSP) or
/// the depot legs of every route (CVRP). Infeasible tours are a contract
/// error.
pub fn tour_length(inst: &VrpInstance, tour: &Tour) -> Result<f64> {
    tour.validate(inst)?;
    Ok(match (inst, tour) {
        (VrpInstance::Tsp(tsp), Tour::Tsp { order }) => tsp.cycle_length(order),
        (VrpInstance::Cvrp(cvrp), Tour::Cvrp { routes }) => cvrp_routes_length(cvrp, routes),
        _ => unreachable!("validate() checked variants"),
    })
}

fn cvrp_routes_length(cvrp: &CvrpInstance, routes: &[Vec<usize>]) -> f64 {
    let pts = cvrp.customers.coords();
    let mut total = 0.0;
    for route in routes {
        let mut prev = cvrp.depot;
        for &c in route {
            total += prev.dist(pts[c]);
            prev = pts[c];
        }
        total += prev.dist(cvrp.depot);
    }
    total
}

fn distance_matrix(pts: &[Point]) -> Vec<f64> {
    let n = pts.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = pts[i].dist(pts[j]);
        }
    }
    d
}

/// Exact TSP via bitmask dynamic programming, `2 <= n <= 13`.
///
/// Ties are broken toward the lexicographically smallest optimal tour:
/// the tour starts at node 0 and is reconstructed front-to-back, always
/// taking the smallest next node that still admits an optimal completion,
/// which also fixes the orientation (second node below last node).
pub fn held_karp(inst: &Instance) -> Result<Tour> {
    let n = inst.len();
    if n > HELD_KARP_MAX_N {
        return Err(Error::TooLarge {
            n,
            limit: HELD_KARP_MAX_N,
        });
    }
    if n == 2 {
        return Ok(Tour::tsp(vec![0, 1]));
    }
    let d = distance_matrix(inst.coords());
    let m = n - 1; // nodes 1..n, bit v-1 set when node v is still to visit
    let full: usize = (1 << m) - 1;

    // rem[s][e]: cheapest path from node e+1 visiting exactly the set s,
    // then closing at node 0. rem[0][e] = d(e+1, 0).
    let mut rem = vec![f64::INFINITY; (full + 1) * m];
    for e in 0..m {
        rem[e] = d[(e + 1) * n];
    }
    for s in 1..=full {
        for e in 0..m {
            if s & (1 << e) != 0 {
                continue; // e+1 must not be inside its own remaining set
            }
            let mut best = f64::INFINITY;
            let mut sub = s;
            while sub != 0 {
                let v = sub.trailing_zeros() as usize;
                sub &= sub - 1;
                let cand = d[(e + 1) * n + (v + 1)] + rem[(s & !(1 << v)) * m + v];
                if cand < best {
                    best = cand;
                }
            }
            rem[s * m + e] = best;
        }
    }

    // Optimal value seen from the start: visit everything, return to 0.
    let mut best0 = f64::INFINITY;
    for v in 0..m {
        let cand = d[v + 1] + rem[(full & !(1 << v)) * m + v];
        if cand < best0 {
            best0 = cand;
        }
    }

    // Front-to-back reconstruction: smallest next node among those whose
    // completion cost matches the optimum of the current state.
    let mut order = Vec::with_capacity(n);
    order.push(0);
    let mut set = full;
    let mut cur = 0usize; // actual node index
    let mut target = best0;
    while set != 0 {
        let mut chosen = None;
        for v in 0..m {
            if set & (1 << v) == 0 {
                continue;
            }
            let step = d[cur * n + (v + 1)];
            let after = rem[(set & !(1 << v)) * m + v];
            if step + after <= target {
                chosen = Some(v);
                target = after;
                break; // v ascending: first match is the smallest
            }
        }
        let v = chosen.expect("an optimal continuation always exists");
        order.push(v + 1);
        set &= !(1 << v);
        cur = v + 1;
    }
    // Canonical orientation: a cycle and its reversal have equal length, but
    // float sums can differ in the last bits, so the DP may only see one of
    // the two traversals. Flip so the second node is below the last.
    if order[1] > order[n - 1] {
        order[1..].reverse();
    }
    Ok(Tour::tsp(order))
}

/// Greedy nearest-neighbor construction from `start`; distance ties prefer
/// the lower node index.
pub fn nearest_neighbor(inst: &Instance, start: usize) -> Result<Tour> {
    let n = inst.len();
    if start >= n {
        return Err(Error::Parameter(format!("start {start} >= n {n}")));
    }
    let pts = inst.coords();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    visited[start] = true;
    order.push(start);
    let mut cur = start;
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for j in 0..n {
            if !visited[j] {
                let dj = pts[cur].dist(pts[j]);
                if dj < best_d {
                    best_d = dj;
                    best = j;
                }
            }
        }
        visited[best] = true;
        order.push(best);
        cur = best;
    }
    Ok(Tour::tsp(order))
}

/// First-improvement 2-opt to local optimality, fixed scan order. Each
/// improving 2-exchange is applied immediately and the scan restarts; the
/// result never has greater length than the input.
pub fn two_opt(inst: &Instance, tour: &Tour) -> Result<Tour> {
    let Tour::Tsp { order } = tour else {
        return Err(Error::Contract("two_opt expects a TSP tour".into()));
    };
    tour.validate(&VrpInstance::Tsp(inst.clone()))?;
    let d = distance_matrix(inst.coords());
    let mut order = order.clone();
    two_opt_cycle(&mut order, &d, inst.len());
    Ok(Tour::tsp(order))
}

/// In-place 2-opt over a cycle given a dense distance matrix.
fn two_opt_cycle(order: &mut [usize], d: &[f64], n: usize) {
    if order.len() < 4 {
        return;
    }
    let len = order.len();
    // Improvements below this threshold are floating noise; accepting them
    // could cycle forever.
    const EPS: f64 = 1e-12;
    'outer: loop {
        for i in 0..len - 1 {
            for j in i + 1..len {
                let a = order[i];
                let b = order[(i + 1) % len];
                let c = order[j];
                let e = order[(j + 1) % len];
                if a == c || b == e {
                    continue;
                }
                let delta = d[a * n + c] + d[b * n + e] - d[a * n + b] - d[c * n + e];
                if delta < -EPS {
                    order[i + 1..=j].reverse();
                    continue 'outer;
                }
            }
        }
        break;
    }
}

/// Feasible CVRP reference: Clarke-Wright-style savings merges followed by
/// intra-route 2-opt. Deterministic; ties in savings prefer the smaller
/// customer pair.
pub fn cvrp_reference(cvrp: &CvrpInstance) -> Result<Tour> {
    let n = cvrp.customers.len();
    let pts = cvrp.customers.coords();
    let depot = cvrp.depot;

    // Savings s(i,j) = d(0,i) + d(0,j) - d(i,j), sorted descending.
    let mut savings: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let s = depot.dist(pts[i]) + depot.dist(pts[j]) - pts[i].dist(pts[j]);
            savings.push((s, i, j));
        }
    }
    savings.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    // Every customer starts in its own route; merge at endpoints while
    // capacity allows.
    let mut route_of: Vec<usize> = (0..n).collect();
    let mut routes: Vec<Vec<usize>> = (0..n).map(|c| vec![c]).collect();
    let mut loads: Vec<u64> = cvrp.demands.iter().map(|&d| u64::from(d)).collect();
    for (_, i, j) in savings {
        let (ri, rj) = (route_of[i], route_of[j]);
        if ri == rj {
            continue;
        }
        if loads[ri] + loads[rj] > u64::from(cvrp.capacity) {
            continue;
        }
        let i_first = routes[ri][0] == i;
        let i_last = *routes[ri].last().unwrap() == i;
        let j_first = routes[rj][0] == j;
        let j_last = *routes[rj].last().unwrap() == j;
        // Merge only endpoint-to-endpoint so both routes stay simple paths.
        let merged: Vec<usize> = if i_last && j_first {
            routes[ri].iter().chain(routes[rj].iter()).copied().collect()
        } else if j_last && i_first {
            routes[rj].iter().chain(routes[ri].iter()).copied().collect()
        } else if i_last && j_last {
            routes[ri]
                .iter()
                .chain(routes[rj].iter().rev())
                .copied()
                .collect()
        } else if i_first && j_first {
            routes[ri]
                .iter()
                .rev()
                .chain(routes[rj].iter())
                .copied()
                .collect()
        } else {
            continue;
        };
        let load = loads[ri] + loads[rj];
        routes[ri].clear();
        routes[rj].clear();
        let new_id = route_of[merged[0]];
        for &c in &merged {
            route_of[c] = new_id;
        }
        loads[new_id] = load;
        routes[new_id] = merged;
        let other = if new_id == ri { rj } else { ri };
        loads[other] = 0;
    }
    let mut routes: Vec<Vec<usize>> = routes.into_iter().filter(|r| !r.is_empty()).collect();

    // Intra-route 2-opt on the cycle depot -> route -> depot.
    for route in &mut routes {
        if route.len() < 3 {
            continue;
        }
        let cycle_pts: Vec<Point> = std::iter::once(depot)
            .chain(route.iter().map(|&c| pts[c]))
            .collect();
        let d = distance_matrix(&cycle_pts);
        let mut cycle: Vec<usize> = (0..cycle_pts.len()).collect();
        two_opt_cycle(&mut cycle, &d, cycle_pts.len());
        let depot_pos = cycle.iter().position(|&v| v == 0).unwrap();
        let reordered: Vec<usize> = (1..cycle.len())
            .map(|k| route[cycle[(depot_pos + k) % cycle.len()] - 1])
            .collect();
        *route = reordered;
    }

    let tour = Tour::cvrp(routes);
    tour.validate(&VrpInstance::Cvrp(cvrp.clone()))?;
    Ok(tour)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{attach_vrp, generate, DistributionKind};
    use crate::rng;
    use rand::Rng as _;

    fn square_corners() -> Instance {
        Instance::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap()
    }

    /// Independent oracle: best tour by enumerating all permutations with
    /// node 0 fixed.
    fn brute_force_length(inst: &Instance) -> f64 {
        fn permute(rest: &mut Vec<usize>, prefix: &mut Vec<usize>, inst: &Instance, best: &mut f64) {
            if rest.is_empty() {
                *best = best.min(inst.cycle_length(prefix));
                return;
            }
            for k in 0..rest.len() {
                let v = rest.remove(k);
                prefix.push(v);
                permute(rest, prefix, inst, best);
                prefix.pop();
                rest.insert(k, v);
            }
        }
        let mut best = f64::INFINITY;
        let mut rest: Vec<usize> = (1..inst.len()).collect();
        permute(&mut rest, &mut vec![0], inst, &mut best);
        best
    }

    #[test]
    fn tour_length_square_is_four() {
        let inst = VrpInstance::Tsp(square_corners());
        let t = Tour::tsp(vec![0, 1, 2, 3]);
        assert!((tour_length(&inst, &t).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tour_length_two_nodes_out_and_back() {
        let inst = Instance::new(vec![Point::new(0.1, 0.1), Point::new(0.4, 0.5)]).unwrap();
        let d = inst.coords()[0].dist(inst.coords()[1]);
        let len = tour_length(&VrpInstance::Tsp(inst), &Tour::tsp(vec![0, 1])).unwrap();
        assert!((len - 2.0 * d).abs() < 1e-12);
    }

    #[test]
    fn tour_length_single_customer_route() {
        let customers = Instance::new(vec![Point::new(0.5, 0.9), Point::new(0.1, 0.1)]).unwrap();
        let cvrp = CvrpInstance::new(customers, Point::new(0.5, 0.5), vec![4, 4], 40).unwrap();
        let d0 = cvrp.depot.dist(cvrp.customers.coords()[0]);
        let d1 = cvrp.depot.dist(cvrp.customers.coords()[1]);
        let len = tour_length(
            &VrpInstance::Cvrp(cvrp.clone()),
            &Tour::cvrp(vec![vec![0], vec![1]]),
        )
        .unwrap();
        assert!((len - 2.0 * (d0 + d1)).abs() < 1e-12);
    }

    #[test]
    fn infeasible_tour_is_a_contract_error() {
        let inst = VrpInstance::Tsp(square_corners());
        assert!(matches!(
            tour_length(&inst, &Tour::tsp(vec![0, 1, 2, 2])),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn held_karp_square_corners() {
        let t = held_karp(&square_corners()).unwrap();
        let len = tour_length(&VrpInstance::Tsp(square_corners()), &t).unwrap();
        assert!((len - 4.0).abs() < 1e-12);
        // Lexicographically smallest optimum: 0,1,2,3.
        assert_eq!(t, Tour::tsp(vec![0, 1, 2, 3]));
    }

    #[test]
    fn held_karp_matches_brute_force_n8() {
        for seed in 0..20 {
            let inst = generate(&DistributionKind::Uniform, 8, seed).unwrap();
            let hk = held_karp(&inst).unwrap();
            let hk_len = tour_length(&VrpInstance::Tsp(inst.clone()), &hk).unwrap();
            let bf = brute_force_length(&inst);
            assert!(
                (hk_len - bf).abs() < 1e-9,
                "seed {seed}: hk {hk_len} vs brute force {bf}"
            );
        }
    }

    #[test]
    fn held_karp_collinear_points() {
        let inst = Instance::new(vec![
            Point::new(0.0, 0.5),
            Point::new(0.4, 0.5),
            Point::new(1.0, 0.5),
            Point::new(0.7, 0.5),
            Point::new(0.2, 0.5),
        ])
        .unwrap();
        let t = held_karp(&inst).unwrap();
        let len = tour_length(&VrpInstance::Tsp(inst), &t).unwrap();
        assert!((len - 2.0).abs() < 1e-12, "line span out-and-back");
    }

    #[test]
    fn held_karp_rejects_large_instances() {
        let inst = generate(&DistributionKind::Uniform, 14, 0).unwrap();
        assert!(matches!(held_karp(&inst), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn held_karp_orientation_tiebreak() {
        for seed in 0..20 {
            let inst = generate(&DistributionKind::Uniform, 9, seed).unwrap();
            let Tour::Tsp { order } = held_karp(&inst).unwrap() else {
                unreachable!()
            };
            assert_eq!(order[0], 0);
            assert!(order[1] < order[order.len() - 1], "canonical orientation");
        }
    }

    #[test]
    fn two_opt_removes_a_crossing() {
        // 0-2-1-3 crosses on the square; 2-opt must undo it.
        let inst = square_corners();
        let crossed = Tour::tsp(vec![0, 2, 1, 3]);
        let before = tour_length(&VrpInstance::Tsp(inst.clone()), &crossed).unwrap();
        let improved = two_opt(&inst, &crossed).unwrap();
        let after = tour_length(&VrpInstance::Tsp(inst), &improved).unwrap();
        assert!(after < before - 1e-9);
        assert!((after - 4.0).abs() < 1e-12);
    }

    #[test]
    fn two_opt_idempotent_at_local_optimum() {
        let inst = generate(&DistributionKind::Uniform, 15, 2).unwrap();
        let t0 = nearest_neighbor(&inst, 0).unwrap();
        let t1 = two_opt(&inst, &t0).unwrap();
        let t2 = two_opt(&inst, &t1).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn two_opt_never_increases_length() {
        let mut r = rng::seeded(10);
        for seed in 0..30 {
            let inst = generate(&DistributionKind::Uniform, 12, seed).unwrap();
            let mut order: Vec<usize> = (0..12).collect();
            // random starting permutation
            for i in (1..12).rev() {
                let j = r.random_range(0..=i);
                order.swap(i, j);
            }
            let start = Tour::tsp(order);
            let before = tour_length(&VrpInstance::Tsp(inst.clone()), &start).unwrap();
            let out = two_opt(&inst, &start).unwrap();
            let after = tour_length(&VrpInstance::Tsp(inst), &out).unwrap();
            assert!(after <= before + 1e-12);
        }
    }

    #[test]
    fn heuristic_dominated_by_exact() {
        for seed in 0..30 {
            let inst = generate(&DistributionKind::Uniform, 10, seed).unwrap();
            let heur = two_opt(&inst, &nearest_neighbor(&inst, 0).unwrap()).unwrap();
            let heur_len = tour_length(&VrpInstance::Tsp(inst.clone()), &heur).unwrap();
            let opt = tour_length(
                &VrpInstance::Tsp(inst.clone()),
                &held_karp(&inst).unwrap(),
            )
            .unwrap();
            assert!(heur_len >= opt - 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn nearest_neighbor_tie_prefers_lower_index() {
        // Nodes 1 and 2 are equidistant from 0; node 1 must come first.
        let inst = Instance::new(vec![
            Point::new(0.5, 0.5),
            Point::new(0.5, 0.7),
            Point::new(0.5, 0.3),
        ])
        .unwrap();
        let Tour::Tsp { order } = nearest_neighbor(&inst, 0).unwrap() else {
            unreachable!()
        };
        assert_eq!(order, vec![0, 1, 2]);
    }

    #[test]
    fn cvrp_saturated_demands_one_customer_per_route() {
        let inst = generate(&DistributionKind::Uniform, 6, 3).unwrap();
        let depot = Point::new(0.5, 0.5);
        let cvrp = CvrpInstance::new(inst, depot, vec![40; 6], 40).unwrap();
        let Tour::Cvrp { routes } = cvrp_reference(&cvrp).unwrap() else {
            unreachable!()
        };
        assert_eq!(routes.len(), 6);
        assert!(routes.iter().all(|r| r.len() == 1));
        let expect: f64 = cvrp
            .customers
            .coords()
            .iter()
            .map(|p| 2.0 * depot.dist(*p))
            .sum();
        let len = tour_length(&VrpInstance::Cvrp(cvrp), &Tour::cvrp(routes)).unwrap();
        assert!((len - expect).abs() < 1e-9);
    }

    /// Exhaustive CVRP oracle for tiny n: all set partitions respecting
    /// capacity, each block routed optimally by Held-Karp over depot+block.
    fn cvrp_exhaustive_optimum(cvrp: &CvrpInstance) -> f64 {
        fn partitions(
            rest: &[usize],
            current: &mut Vec<Vec<usize>>,
            cvrp: &CvrpInstance,
            best: &mut f64,
        ) {
            if rest.is_empty() {
                let mut total = 0.0;
                for block in current.iter() {
                    let mut pts = vec![cvrp.depot];
                    pts.extend(block.iter().map(|&c| cvrp.customers.coords()[c]));
                    let sub = Instance::new(pts).unwrap();
                    let t = held_karp(&sub).unwrap();
                    let Tour::Tsp { order } = t else { unreachable!() };
                    total += sub.cycle_length(&order);
                }
                *best = best.min(total);
                return;
            }
            let (first, tail) = (rest[0], &rest[1..]);
            for b in 0..current.len() {
                let load: u64 = current[b].iter().map(|&c| u64::from(cvrp.demands[c])).sum();
                if load + u64::from(cvrp.demands[first]) <= u64::from(cvrp.capacity) {
                    current[b].push(first);
                    partitions(tail, current, cvrp, best);
                    current[b].pop();
                }
            }
            current.push(vec![first]);
            partitions(tail, current, cvrp, best);
            current.pop();
        }
        let all: Vec<usize> = (0..cvrp.customers.len()).collect();
        let mut best = f64::INFINITY;
        // Single-customer blocks need depot+1 = 2 points; Held-Karp handles
        // n=2 directly.
        partitions(&all, &mut Vec::new(), cvrp, &mut best);
        best
    }

    #[test]
    fn cvrp_reference_near_exhaustive_optimum() {
        for seed in 0..50 {
            let inst = generate(&DistributionKind::Uniform, 6, seed).unwrap();
            let cvrp = attach_vrp(inst, 12, seed + 1000).unwrap();
            let reference = cvrp_reference(&cvrp).unwrap();
            let ref_len = tour_length(&VrpInstance::Cvrp(cvrp.clone()), &reference).unwrap();
            let opt = cvrp_exhaustive_optimum(&cvrp);
            assert!(
                ref_len <= opt * 1.15 + 1e-9,
                "seed {seed}: reference {ref_len} vs optimum {opt}"
            );
            assert!(ref_len >= opt - 1e-9);
        }
    }

    #[test]
    fn cvrp_reference_invariant_under_customer_permutation() {
        for seed in 0..10 {
            let inst = generate(&DistributionKind::Uniform, 10, seed).unwrap();
            let cvrp = attach_vrp(inst, 20, seed + 50).unwrap();
            let base = cvrp_reference(&cvrp).unwrap();
            let base_len = tour_length(&VrpInstance::Cvrp(cvrp.clone()), &base).unwrap();

            // Rotate customer labels and solve again.
            let n = cvrp.customers.len();
            let perm: Vec<usize> = (0..n).map(|i| (i + 3) % n).collect();
            let coords: Vec<Point> = perm.iter().map(|&i| cvrp.customers.coords()[i]).collect();
            let demands: Vec<u32> = perm.iter().map(|&i| cvrp.demands[i]).collect();
            let shuffled = CvrpInstance::new(
                Instance::new(coords).unwrap(),
                cvrp.depot,
                demands,
                cvrp.capacity,
            )
            .unwrap();
            let other = cvrp_reference(&shuffled).unwrap();
            let other_len =
                tour_length(&VrpInstance::Cvrp(shuffled), &other).unwrap();
            assert!(
                (base_len - other_len).abs() < 1e-9,
                "seed {seed}: {base_len} vs {other_len}"
            );
        }
    }

    #[test]
    fn tour_length_invariant_under_reversal_and_rotation() {
        let inst = generate(&DistributionKind::Uniform, 9, 17).unwrap();
        let base: Vec<usize> = vec![3, 1, 4, 0, 5, 8, 2, 7, 6];
        let vinst = VrpInstance::Tsp(inst);
        let l0 = tour_length(&vinst, &Tour::tsp(base.clone())).unwrap();
        let mut reversed = base.clone();
        reversed.reverse();
        let l1 = tour_length(&vinst, &Tour::tsp(reversed)).unwrap();
        let rotated: Vec<usize> = base.iter().cycle().skip(4).take(9).copied().collect();
        let l2 = tour_length(&vinst, &Tour::tsp(rotated)).unwrap();
        assert!((l0 - l1).abs() < 1e-12);
        assert!((l0 - l2).abs() < 1e-12);
    }
}
