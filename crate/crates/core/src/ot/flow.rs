//! Successive-shortest-path solver for the bipartite transportation problem.
//!
//! Sources `n` hold supplies `a_n`, targets `m` demand `b_m`, and moving one
//! unit from `n` to `m` costs `c[m][n]`. Every demand is met exactly while
//! supplies act as capacities, so `sum a >= sum b` is required. The solver is
//! generic over the scalar so the same code runs in `f64` and in exact
//! rational arithmetic.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::tolerance;

pub trait FlowScalar:
    Clone + PartialOrd + Debug + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    /// Whether `self` counts as zero relative to the problem scale.
    fn negligible(&self, scale: &Self) -> bool;
    /// Rounding noise below zero is mapped to zero.
    fn clamp_nonneg(self) -> Self;
}

impl FlowScalar for f64 {
    fn negligible(&self, scale: &Self) -> bool {
        self.abs() <= tolerance::FLOW_ZERO * scale.max(1.0)
    }

    fn clamp_nonneg(self) -> Self {
        self.max(0.0)
    }
}

impl FlowScalar for BigRational {
    fn negligible(&self, _scale: &Self) -> bool {
        self.is_zero()
    }

    fn clamp_nonneg(self) -> Self {
        if self.is_negative() {
            panic!("negative reduced cost {self} in exact arithmetic");
        }
        self
    }
}

#[derive(Debug, Clone)]
pub struct FlowSolution<T> {
    /// `flow[m][n]`: mass moved from source `n` to target `m`.
    pub flow: Vec<Vec<T>>,
    pub value: T,
    /// Source potentials `u` and target potentials `v` with `v_m - u_n <= c[m][n]`,
    /// tight wherever flow is positive.
    pub u: Vec<T>,
    pub v: Vec<T>,
}

fn min_opt<T: FlowScalar>(a: Option<T>, b: T) -> T {
    match a {
        Some(a) if a < b => a,
        _ => b,
    }
}

/// Minimum-cost transportation; see the module docs for conventions.
pub fn solve<T: FlowScalar>(supply: &[T], demand: &[T], cost: &[Vec<T>]) -> Result<FlowSolution<T>> {
    let (ns, nt) = (supply.len(), demand.len());
    if cost.len() != nt || cost.iter().any(|r| r.len() != ns) {
        return Err(Error::DimensionMismatch {
            expected: nt,
            got: cost.len(),
        });
    }
    let scale = supply.iter().chain(demand).fold(T::zero(), |a, b| a + b.clone());
    let mut rem_supply: Vec<T> = supply.to_vec();
    let mut rem_demand: Vec<T> = demand.to_vec();
    let mut flow = vec![vec![T::zero(); ns]; nt];

    // node ids: 0 = super source, 1..=ns sources, ns+1..=ns+nt targets, ns+nt+1 sink
    let v_count = ns + nt + 2;
    let sink = v_count - 1;
    let src = |n: usize| 1 + n;
    let tgt = |m: usize| 1 + ns + m;
    let mut pot = vec![T::zero(); v_count];
    // start with potentials that make every forward arc nonnegative
    for m in 0..nt {
        let lo = cost[m].iter().cloned().fold(None, |a: Option<T>, c| Some(min_opt(a, c)));
        pot[tgt(m)] = lo.unwrap_or_else(T::zero);
    }
    let lowest_target = (0..nt).map(|m| pot[tgt(m)].clone()).fold(None, |a: Option<T>, c| Some(min_opt(a, c)));
    pot[sink] = lowest_target.unwrap_or_else(T::zero);

    let remaining = |rd: &[T]| rd.iter().any(|d| !d.negligible(&scale));
    let max_iter = 16 * (ns + nt + 1) * (ns + nt + 1) + 64;
    let mut iter = 0;
    while remaining(&rem_demand) {
        iter += 1;
        if iter > max_iter {
            return Err(Error::Solver("augmentation limit reached".into()));
        }
        // dense Dijkstra on reduced costs
        let mut dist: Vec<Option<T>> = vec![None; v_count];
        let mut prev = vec![usize::MAX; v_count];
        let mut done = vec![false; v_count];
        dist[0] = Some(T::zero());
        loop {
            let mut best: Option<usize> = None;
            for v in 0..v_count {
                if done[v] {
                    continue;
                }
                if let Some(d) = &dist[v] {
                    if best.is_none_or(|b| d < dist[b].as_ref().unwrap()) {
                        best = Some(v);
                    }
                }
            }
            let Some(u) = best else { break };
            done[u] = true;
            if u == sink {
                break;
            }
            let du = dist[u].clone().unwrap();
            let relax = |v: usize, c: T, dist: &mut Vec<Option<T>>, prev: &mut Vec<usize>| {
                let reduced = (c + pot[u].clone() - pot[v].clone()).clamp_nonneg();
                let cand = du.clone() + reduced;
                if dist[v].as_ref().is_none_or(|d| cand < *d) {
                    dist[v] = Some(cand);
                    prev[v] = u;
                }
            };
            if u == 0 {
                for n in 0..ns {
                    if !done[src(n)] && !rem_supply[n].negligible(&scale) {
                        relax(src(n), T::zero(), &mut dist, &mut prev);
                    }
                }
            } else if u <= ns {
                let n = u - 1;
                for m in 0..nt {
                    if !done[tgt(m)] {
                        relax(tgt(m), cost[m][n].clone(), &mut dist, &mut prev);
                    }
                }
            } else {
                let m = u - 1 - ns;
                for n in 0..ns {
                    if !done[src(n)] && !flow[m][n].negligible(&scale) {
                        relax(src(n), -cost[m][n].clone(), &mut dist, &mut prev);
                    }
                }
                if !rem_demand[m].negligible(&scale) {
                    relax(sink, T::zero(), &mut dist, &mut prev);
                }
            }
        }
        let Some(d_sink) = dist[sink].clone() else {
            return Err(Error::Solver("supplies cannot cover the demands".into()));
        };
        for v in 0..v_count {
            let d = match &dist[v] {
                Some(d) if *d < d_sink => d.clone(),
                _ => d_sink.clone(),
            };
            pot[v] = pot[v].clone() + d;
        }
        // walk back the path and find the bottleneck
        let mut path = vec![sink];
        let mut v = sink;
        while v != 0 {
            v = prev[v];
            path.push(v);
        }
        path.reverse();
        let first = path[1] - 1;
        let last = path[path.len() - 2] - 1 - ns;
        let mut amount = if rem_supply[first] < rem_demand[last] {
            rem_supply[first].clone()
        } else {
            rem_demand[last].clone()
        };
        for w in path[1..path.len() - 1].windows(2) {
            if w[0] > ns {
                let (m, n) = (w[0] - 1 - ns, w[1] - 1);
                if flow[m][n] < amount {
                    amount = flow[m][n].clone();
                }
            }
        }
        rem_supply[first] = rem_supply[first].clone() - amount.clone();
        rem_demand[last] = rem_demand[last].clone() - amount.clone();
        for w in path[1..path.len() - 1].windows(2) {
            if w[0] <= ns {
                let (n, m) = (w[0] - 1, w[1] - 1 - ns);
                flow[m][n] = flow[m][n].clone() + amount.clone();
            } else {
                let (m, n) = (w[0] - 1 - ns, w[1] - 1);
                let f = flow[m][n].clone() - amount.clone();
                flow[m][n] = if f.negligible(&scale) { T::zero() } else { f };
            }
        }
        for r in [&mut rem_supply[first], &mut rem_demand[last]] {
            if r.negligible(&scale) {
                *r = T::zero();
            }
        }
    }
    let mut value = T::zero();
    for m in 0..nt {
        for n in 0..ns {
            if !flow[m][n].is_zero() {
                value = value + flow[m][n].clone() * cost[m][n].clone();
            }
        }
    }
    let cost_scale = cost
        .iter()
        .flatten()
        .fold(T::zero(), |a, c| if c.clone() > a { c.clone() } else if -c.clone() > a { -c.clone() } else { a });
    let (u, v) = potentials(&flow, cost, &cost_scale)?;
    Ok(FlowSolution { flow, value, u, v })
}

/// Bellman-Ford from a virtual root on the final residual graph.
fn potentials<T: FlowScalar>(flow: &[Vec<T>], cost: &[Vec<T>], scale: &T) -> Result<(Vec<T>, Vec<T>)> {
    let nt = cost.len();
    let ns = cost.first().map_or(0, Vec::len);
    let mut u = vec![T::zero(); ns];
    let mut v = vec![T::zero(); nt];
    for _ in 0..=(ns + nt) {
        let mut changed = false;
        for m in 0..nt {
            for n in 0..ns {
                // forward arc n -> m
                let cand = u[n].clone() + cost[m][n].clone();
                if cand < v[m] && !(v[m].clone() - cand.clone()).negligible(scale) {
                    v[m] = cand;
                    changed = true;
                }
                // backward arc m -> n where flow is positive
                if !flow[m][n].is_zero() {
                    let cand = v[m].clone() - cost[m][n].clone();
                    if cand < u[n] && !(u[n].clone() - cand.clone()).negligible(scale) {
                        u[n] = cand;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return Ok((u, v));
        }
    }
    Err(Error::Solver("negative cycle in the residual graph".into()))
}
