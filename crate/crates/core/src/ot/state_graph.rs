//! Shortest-path transport costs between Fock occupation states.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::{wasserstein, CostMatrix, Distribution, Transport};
use crate::error::{invalid, Error, Result};
use crate::fock::FockBasis;
use crate::lattice::Lattice;

pub const DEFAULT_NODE_CAP: usize = 5000;

/// All-pairs state costs. `cost(m, n)` is the cheapest way to turn state `n`
/// into state `m` by hops (cost `|i - j|^alpha_eps`) and zero-cost losses of
/// `n_loss` particles from one site.
///
/// Pairs where `m` holds more particles than `n`, and pairs with no connecting
/// path, cost `omega + 1` with `omega` the largest finite shortest-path cost.
#[derive(Debug, Clone, Serialize)]
pub struct StateCostGraph {
    states: Vec<Vec<u32>>,
    n_loss: u32,
    alpha_eps: f64,
    omega: f64,
    costs: Vec<f64>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Builds the state cost graph with the default node cap.
pub fn fock_state_cost(lattice: &Lattice, basis: &FockBasis, n_loss: u32, alpha_eps: f64) -> Result<StateCostGraph> {
    StateCostGraph::with_cap(lattice, basis, n_loss, alpha_eps, DEFAULT_NODE_CAP)
}

impl StateCostGraph {
    /// `n_loss = 0` disables loss edges.
    pub fn with_cap(
        lattice: &Lattice,
        basis: &FockBasis,
        n_loss: u32,
        alpha_eps: f64,
        cap: usize,
    ) -> Result<Self> {
        if lattice.len() != basis.sites() {
            return Err(Error::DimensionMismatch {
                expected: lattice.len(),
                got: basis.sites(),
            });
        }
        if !(alpha_eps > 0.0 && alpha_eps.is_finite()) {
            return Err(invalid(format!("alpha_eps = {alpha_eps} must be positive")));
        }
        let len = basis.len();
        if len > cap {
            return Err(Error::NodeCapExceeded { nodes: len, cap });
        }
        let sites = basis.sites();
        let mut hop_cost = vec![0.0; sites * sites];
        for i in 0..sites {
            for j in 0..sites {
                hop_cost[i * sites + j] = lattice.distance(i, j)?.powf(alpha_eps);
            }
        }

        let mut edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); len];
        let mut scratch = Vec::with_capacity(sites);
        for (from, out) in edges.iter_mut().enumerate() {
            let state = basis.state(from);
            for i in (0..sites).filter(|&i| state[i] > 0) {
                for j in (0..sites).filter(|&j| j != i) {
                    scratch.clear();
                    scratch.extend_from_slice(state);
                    scratch[i] -= 1;
                    scratch[j] += 1;
                    if let Some(to) = basis.index_of(&scratch) {
                        out.push((to, hop_cost[i * sites + j]));
                    }
                }
                if n_loss > 0 && state[i] >= n_loss {
                    scratch.clear();
                    scratch.extend_from_slice(state);
                    scratch[i] -= n_loss;
                    if let Some(to) = basis.index_of(&scratch) {
                        out.push((to, 0.0));
                    }
                }
            }
        }

        // dist[src][dst] from each source, stored as costs[dst * len + src]
        let mut costs = vec![f64::INFINITY; len * len];
        let mut dist = vec![f64::INFINITY; len];
        let mut heap = BinaryHeap::new();
        for src in 0..len {
            dist.fill(f64::INFINITY);
            dist[src] = 0.0;
            heap.push(Entry(0.0, src));
            while let Some(Entry(d, node)) = heap.pop() {
                if d > dist[node] {
                    continue;
                }
                for &(next, w) in &edges[node] {
                    let nd = d + w;
                    if nd < dist[next] {
                        dist[next] = nd;
                        heap.push(Entry(nd, next));
                    }
                }
            }
            for (dst, &d) in dist.iter().enumerate() {
                costs[dst * len + src] = d;
            }
        }

        let omega = costs.iter().copied().filter(|c| c.is_finite()).fold(0.0, f64::max);
        for m in 0..len {
            for n in 0..len {
                if basis.total(m) > basis.total(n) || !costs[m * len + n].is_finite() {
                    costs[m * len + n] = omega + 1.0;
                }
            }
        }

        Ok(Self {
            states: basis.states().iter().map(|s| s.to_vec()).collect(),
            n_loss,
            alpha_eps,
            omega,
            costs,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn n_loss(&self) -> u32 {
        self.n_loss
    }

    pub fn alpha_eps(&self) -> f64 {
        self.alpha_eps
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Cost of moving from state index `n` to state index `m`.
    pub fn cost(&self, m: usize, n: usize) -> f64 {
        self.costs[m * self.len() + n]
    }

    /// Same as [`cost`](Self::cost), addressed by occupations.
    pub fn cost_between(&self, to: &[u32], from: &[u32]) -> Option<f64> {
        let m = self.states.iter().position(|s| s == to)?;
        let n = self.states.iter().position(|s| s == from)?;
        Some(self.cost(m, n))
    }

    pub fn cost_matrix(&self) -> Result<CostMatrix> {
        CostMatrix::from_fn(self.len(), |m, n| self.cost(m, n))
    }
}

/// Transport between two distributions over the graph's states, `p` to `q`.
pub fn wasserstein_states(p: &Distribution, q: &Distribution, g: &StateCostGraph) -> Result<Transport> {
    wasserstein(p, q, &g.cost_matrix()?)
}
