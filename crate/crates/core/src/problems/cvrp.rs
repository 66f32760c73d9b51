//! Capacitated vehicle routing: random instances, the reload cost model and
//! exhaustive enumeration of the solution space.
//!
//! A solution partitions the `l` locations into unordered routes, each an
//! ordered visit sequence starting and ending at the depot (index 0). The
//! number of such solutions is the Lah number sum
//! `sum_k C(l-1, k-1) l! / k!`.
//!
//! Demands may exceed the vehicle capacity, so every partition is made
//! feasible by reloading: before a location whose demand exceeds the load
//! still on board (and the vehicle is not already full) the vehicle detours
//! through the depot; a location demanding more than a full vehicle is served
//! with extra depot round trips.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{binomial, factorial};
use crate::dist::FiniteDistribution;
use crate::error::{invalid, Result};
use crate::kv::KvDoc;

/// Largest location count accepted by [`cvrp_cardinality`].
pub const MAX_CARDINALITY_LOCATIONS: usize = 20;

/// Solution-space size for `l` locations.
pub fn cvrp_cardinality(l: usize) -> Result<u128> {
    if l == 0 {
        return Err(invalid("location count must be at least 1"));
    }
    if l > MAX_CARDINALITY_LOCATIONS {
        return Err(invalid(format!(
            "location count {l} exceeds {MAX_CARDINALITY_LOCATIONS}"
        )));
    }
    let l = l as u64;
    let lf = factorial(l);
    Ok((1..=l)
        .map(|k| binomial(l - 1, k - 1) * (lf / factorial(k)))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvrpInstance {
    demands: Vec<u32>,
    /// `(l+1) x (l+1)`, index 0 is the depot.
    cost: Vec<Vec<u32>>,
    capacity: u32,
}

impl CvrpInstance {
    pub fn new(demands: Vec<u32>, cost: Vec<Vec<u32>>, capacity: u32) -> Result<Self> {
        let l = demands.len();
        if l == 0 {
            return Err(invalid("instance needs at least one location"));
        }
        if capacity == 0 {
            return Err(invalid("capacity must be positive"));
        }
        if cost.len() != l + 1 || cost.iter().any(|row| row.len() != l + 1) {
            return Err(invalid(format!("cost matrix must be {0}x{0}", l + 1)));
        }
        for i in 0..=l {
            if cost[i][i] != 0 {
                return Err(invalid(format!("cost[{i}][{i}] must be 0")));
            }
            for j in 0..i {
                if cost[i][j] != cost[j][i] {
                    return Err(invalid(format!("cost matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            demands,
            cost,
            capacity,
        })
    }

    /// Random instance: demands in `[5, 30]`, depot costs in `[10, 20]`,
    /// inter-location costs in `[1, 15]`, all integers.
    pub fn random(l: usize, capacity: u32, seed: u64) -> Result<Self> {
        if l == 0 {
            return Err(invalid("instance needs at least one location"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let demands = (0..l).map(|_| rng.random_range(5..=30)).collect();
        let mut cost = vec![vec![0u32; l + 1]; l + 1];
        for j in 1..=l {
            let c = rng.random_range(10..=20);
            cost[0][j] = c;
            cost[j][0] = c;
        }
        for i in 1..=l {
            for j in (i + 1)..=l {
                let c = rng.random_range(1..=15);
                cost[i][j] = c;
                cost[j][i] = c;
            }
        }
        Self::new(demands, cost, capacity)
    }

    pub fn locations(&self) -> usize {
        self.demands.len()
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn demands(&self) -> &[u32] {
        &self.demands
    }

    pub fn cost_matrix(&self) -> &[Vec<u32>] {
        &self.cost
    }

    /// Cost of one route visiting `stops` (1-based location indices) in order.
    pub fn route_cost(&self, stops: &[usize]) -> u64 {
        let mut walk = RouteWalk::start(self.capacity);
        for &loc in stops {
            walk = walk.visit(self, loc);
        }
        walk.finish(self)
    }

    pub fn solution_cost(&self, solution: &CvrpSolution) -> u64 {
        solution.routes.iter().map(|r| self.route_cost(r)).sum()
    }

    pub fn to_kv(&self) -> KvDoc {
        let mut doc = KvDoc::new();
        doc.set("locations", self.locations());
        doc.set("capacity", self.capacity);
        doc.set("demands", join(&self.demands));
        for (i, row) in self.cost.iter().enumerate() {
            doc.set(format!("cost.{i}"), join(row));
        }
        doc
    }

    pub fn from_kv(doc: &KvDoc) -> Result<Self> {
        let l: usize = doc.parse_value("locations")?;
        let capacity = doc.parse_value("capacity")?;
        let demands: Vec<u32> = doc.parse_list("demands")?;
        if demands.len() != l {
            return Err(invalid(format!("expected {l} demands, got {}", demands.len())));
        }
        let cost = (0..=l)
            .map(|i| doc.parse_list(&format!("cost.{i}")))
            .collect::<Result<Vec<Vec<u32>>>>()?;
        Self::new(demands, cost, capacity)
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

/// Vehicle state part-way along a route.
#[derive(Debug, Clone, Copy)]
struct RouteWalk {
    at: usize,
    load: u32,
    cost: u64,
}

impl RouteWalk {
    fn start(capacity: u32) -> Self {
        Self {
            at: 0,
            load: capacity,
            cost: 0,
        }
    }

    fn visit(self, inst: &CvrpInstance, loc: usize) -> Self {
        let cap = inst.capacity;
        let demand = inst.demands[loc - 1];
        let c = &inst.cost;
        let Self {
            mut at,
            mut load,
            mut cost,
        } = self;
        if demand > load && load < cap {
            cost += u64::from(c[at][0]);
            at = 0;
            load = cap;
        }
        cost += u64::from(c[at][loc]);
        if demand <= load {
            load -= demand;
        } else {
            let short = demand - load;
            let trips = short.div_ceil(cap);
            cost += u64::from(trips) * u64::from(c[loc][0] + c[0][loc]);
            load = trips * cap - short;
        }
        Self { at: loc, load, cost }
    }

    fn finish(self, inst: &CvrpInstance) -> u64 {
        self.cost + u64::from(inst.cost[self.at][0])
    }
}

/// Unordered set of routes; canonical form orders routes by their smallest
/// location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvrpSolution {
    pub routes: Vec<Vec<usize>>,
}

impl CvrpSolution {
    pub fn canonical(mut self) -> Self {
        self.routes
            .sort_by_key(|r| r.iter().copied().min().unwrap_or(usize::MAX));
        self
    }

    /// Whether every location `1..=l` appears exactly once in non-empty routes.
    pub fn is_valid(&self, l: usize) -> bool {
        let mut seen = vec![false; l + 1];
        for route in &self.routes {
            if route.is_empty() {
                return false;
            }
            for &loc in route {
                if loc == 0 || loc > l || seen[loc] {
                    return false;
                }
                seen[loc] = true;
            }
        }
        seen[1..].iter().all(|&s| s)
    }
}

/// Set partitions of `0..l` as restricted growth strings, in lexicographic
/// order, each returned as block bitmasks ordered by smallest member.
fn set_partitions(l: usize) -> Vec<Vec<u32>> {
    fn rec(i: usize, l: usize, blocks: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == l {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b] |= 1 << i;
            rec(i + 1, l, blocks, out);
            blocks[b] &= !(1 << i);
        }
        blocks.push(1 << i);
        rec(i + 1, l, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    rec(0, l, &mut Vec::new(), &mut out);
    out
}

fn mask_members(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect()
}

/// Visits every ordering of `stops` in lexicographic order.
fn for_each_ordering(stops: &[usize], mut f: impl FnMut(&[usize])) {
    fn rec(rest: &mut Vec<usize>, prefix: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if rest.is_empty() {
            f(prefix);
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            rec(rest, prefix, f);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut rest = stops.to_vec();
    rest.sort_unstable();
    rec(&mut rest, &mut Vec::new(), &mut f);
}

/// Histogram of route costs over all orderings of one block of locations.
fn block_histogram(inst: &CvrpInstance, mask: u32) -> BTreeMap<u64, u64> {
    fn rec(
        inst: &CvrpInstance,
        walk: RouteWalk,
        rest: &mut Vec<usize>,
        hist: &mut BTreeMap<u64, u64>,
    ) {
        if rest.is_empty() {
            *hist.entry(walk.finish(inst)).or_insert(0) += 1;
            return;
        }
        for i in 0..rest.len() {
            let x = rest.swap_remove(i);
            rec(inst, walk.visit(inst, x), rest, hist);
            rest.push(x);
            let last = rest.len() - 1;
            rest.swap(i, last);
        }
    }
    let mut hist = BTreeMap::new();
    let mut rest = mask_members(mask);
    rec(inst, RouteWalk::start(inst.capacity), &mut rest, &mut hist);
    hist
}

fn convolve(a: &BTreeMap<u64, u64>, b: &BTreeMap<u64, u64>) -> BTreeMap<u64, u64> {
    let mut out = BTreeMap::new();
    for (&x, &nx) in a {
        for (&y, &ny) in b {
            *out.entry(x + y).or_insert(0) += nx * ny;
        }
    }
    out
}

fn merge_into(mut a: BTreeMap<u64, u64>, b: BTreeMap<u64, u64>) -> BTreeMap<u64, u64> {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

/// Default ceiling on the solution count [`cvrp_enumerate`] will process.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 100_000_000;

/// Cost distribution over the full solution space.
///
/// Costs are additive over routes, so each block's ordering histogram is
/// computed once and partitions combine block histograms by convolution.
/// Partitions are processed in parallel and merged by exact integer addition.
pub fn cvrp_enumerate(inst: &CvrpInstance, budget: u128) -> Result<FiniteDistribution> {
    let l = inst.locations();
    let total = cvrp_cardinality(l)?;
    if total > budget {
        return Err(invalid(format!(
            "{total} solutions exceed the enumeration budget of {budget}"
        )));
    }
    let partitions = set_partitions(l);
    let masks: Vec<u32> = (1u32..(1 << l)).collect();
    let block_hists: HashMap<u32, BTreeMap<u64, u64>> = masks
        .par_iter()
        .map(|&m| (m, block_histogram(inst, m)))
        .collect();
    let hist = partitions
        .par_iter()
        .map(|blocks| {
            blocks[1..].iter().fold(block_hists[&blocks[0]].clone(), |acc, b| {
                convolve(&acc, &block_hists[b])
            })
        })
        .reduce(BTreeMap::new, merge_into);
    debug_assert_eq!(hist.values().map(|&n| n as u128).sum::<u128>(), total);
    FiniteDistribution::from_runs(hist.into_iter().map(|(c, n)| (c as f64, n)).collect())
}

/// Every solution in canonical order, paired with its cost; the position in
/// this sequence is the solution's identifier. Intended for small `l`.
pub fn cvrp_solutions(inst: &CvrpInstance) -> Vec<(CvrpSolution, u64)> {
    let mut out = Vec::new();
    for blocks in set_partitions(inst.locations()) {
        let orderings: Vec<Vec<Vec<usize>>> = blocks
            .iter()
            .map(|&m| {
                let mut v = Vec::new();
                for_each_ordering(&mask_members(m), |o| v.push(o.to_vec()));
                v
            })
            .collect();
        let mut idx = vec![0usize; blocks.len()];
        'odometer: loop {
            let routes: Vec<Vec<usize>> = idx
                .iter()
                .enumerate()
                .map(|(b, &i)| orderings[b][i].clone())
                .collect();
            let sol = CvrpSolution { routes };
            let cost = inst.solution_cost(&sol);
            out.push((sol, cost));
            // last block turns fastest
            let mut b = blocks.len();
            loop {
                if b == 0 {
                    break 'odometer;
                }
                b -= 1;
                idx[b] += 1;
                if idx[b] < orderings[b].len() {
                    break;
                }
                idx[b] = 0;
            }
        }
    }
    out
}
