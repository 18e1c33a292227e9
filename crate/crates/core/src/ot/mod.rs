//! Discrete optimal transport: balanced and generalized Wasserstein distances,
//! Kantorovich-Rubinstein potentials and Fock-state shortest-path costs.

pub mod flow;
mod state_graph;

pub use state_graph::{fock_state_cost, wasserstein_states, StateCostGraph, DEFAULT_NODE_CAP};

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::Lattice;
use crate::tolerance;

/// Nonnegative vector; entries above `-1e-12` are clipped to zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let mut values = values;
        for (index, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(invalid(format!("entry {index} is not finite")));
            }
            if *v < 0.0 {
                if *v < -tolerance::NEGATIVE_CLIP {
                    return Err(Error::NegativeEntry { index, value: *v });
                }
                *v = 0.0;
            }
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|v| v * s).collect())
    }
}

/// Square cost matrix; `get(m, n)` is the cost of moving one unit from `n` to `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostMatrix {
    size: usize,
    entries: Vec<f64>,
    symmetric: bool,
    zero_diagonal: bool,
}

impl CostMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(invalid("cost matrix must be square"));
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some((k, v)) = entries.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(invalid(format!(
                "cost entry ({}, {}) = {v} must be finite and nonnegative",
                k / size.max(1),
                k % size.max(1)
            )));
        }
        let get = |m: usize, n: usize| entries[m * size + n];
        let symmetric = (0..size).all(|m| (0..m).all(|n| get(m, n) == get(n, m)));
        let zero_diagonal = (0..size).all(|m| get(m, m) == 0.0);
        Ok(Self {
            size,
            entries,
            symmetric,
            zero_diagonal,
        })
    }

    pub fn from_fn(size: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new((0..size).map(|m| (0..size).map(|n| f(m, n)).collect()).collect())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.entries[m * self.size + n]
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn has_zero_diagonal(&self) -> bool {
        self.zero_diagonal
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.size.max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Worst violation of `c(m, n) + c(n, p) >= c(m, p)`, as `(m, n, p, excess)`.
    pub fn triangle_violation(&self, tol: f64) -> Option<(usize, usize, usize, f64)> {
        let mut worst: Option<(usize, usize, usize, f64)> = None;
        for m in 0..self.size {
            for n in 0..self.size {
                for p in 0..self.size {
                    let excess = self.get(m, p) - self.get(m, n) - self.get(n, p);
                    if excess > tol && worst.is_none_or(|w| excess > w.3) {
                        worst = Some((m, n, p, excess));
                    }
                }
            }
        }
        worst
    }
}

/// `c_ij = |i - j|^alpha_eps` on lattice sites.
pub fn power_cost(lattice: &Lattice, alpha_eps: f64) -> Result<CostMatrix> {
    if !(alpha_eps > 0.0 && alpha_eps <= 1.0) {
        return Err(invalid(format!(
            "alpha_eps = {alpha_eps} must lie in (0, 1] for the cost to satisfy the triangle inequality"
        )));
    }
    let n = lattice.len();
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = lattice.distance(i, j)?.powf(alpha_eps);
        }
    }
    CostMatrix::new(rows)
}

/// Transport plan `plan[m][n]` from `source` to `target`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coupling {
    pub plan: Vec<Vec<f64>>,
    pub source: Vec<f64>,
    pub target: Vec<f64>,
}

impl Coupling {
    /// Mass leaving each source.
    pub fn source_marginal(&self) -> Vec<f64> {
        let ns = self.source.len();
        (0..ns).map(|n| self.plan.iter().map(|r| r[n]).sum()).collect()
    }

    /// Mass arriving at each target.
    pub fn target_marginal(&self) -> Vec<f64> {
        self.plan.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn cost(&self, c: &CostMatrix) -> f64 {
        let mut total = 0.0;
        for (m, row) in self.plan.iter().enumerate() {
            for (n, p) in row.iter().enumerate() {
                total += p * c.get(m, n);
            }
        }
        total
    }

    /// Largest marginal error against the recorded source and target.
    pub fn marginal_error(&self) -> f64 {
        let s = self.source_marginal().iter().zip(&self.source).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let t = self.target_marginal().iter().zip(&self.target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        s.max(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transport {
    pub value: f64,
    pub coupling: Coupling,
    /// Source and target potentials with `v_m - u_n <= c(m, n)`.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralizedTransport {
    pub value: f64,
    pub coupling: Coupling,
    /// Kept source mass, `0 <= x' <= x`.
    pub x_kept: Vec<f64>,
    /// Delivered target mass, `y' >= y`.
    pub y_kept: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSolution {
    pub value: f64,
    pub potential: Vec<f64>,
}

fn check_sizes(x: &Distribution, y: &Distribution, c: &CostMatrix) -> Result<()> {
    for len in [x.len(), y.len()] {
        if len != c.size() {
            return Err(Error::DimensionMismatch {
                expected: c.size(),
                got: len,
            });
        }
    }
    Ok(())
}

fn run(x: &[f64], y: &[f64], c: &CostMatrix) -> Result<Transport> {
    let sol = flow::solve(x, y, &c.rows())?;
    Ok(Transport {
        value: sol.value,
        coupling: Coupling {
            plan: sol.flow,
            source: x.to_vec(),
            target: y.to_vec(),
        },
        u: sol.u,
        v: sol.v,
    })
}

/// Target rescaled onto the source mass when they agree within `1e-9`.
fn balanced_target(x: &Distribution, y: &Distribution) -> Result<Vec<f64>> {
    let (mx, my) = (x.mass(), y.mass());
    if (mx - my).abs() > tolerance::MASS {
        return Err(Error::MassMismatch {
            source_mass: mx,
            target_mass: my,
        });
    }
    if my == 0.0 {
        return Ok(y.values().to_vec());
    }
    Ok(y.values().iter().map(|v| v * mx / my).collect())
}

/// Optimal transport between equal-mass distributions, `x` to `y`.
pub fn wasserstein(x: &Distribution, y: &Distribution, c: &CostMatrix) -> Result<Transport> {
    check_sizes(x, y, c)?;
    let target = balanced_target(x, y)?;
    if x.mass() == 0.0 {
        let n = c.size();
        return Ok(Transport {
            value: 0.0,
            coupling: Coupling {
                plan: vec![vec![0.0; n]; n],
                source: x.values().to_vec(),
                target,
            },
            u: vec![0.0; n],
            v: vec![0.0; n],
        });
    }
    run(x.values(), &target, c)
}

/// Single potential `w` with `w_m - w_n <= c(m, n)` maximizing `sum_m w_m (y_m - x_m)`.
///
/// Built from the flow potentials by a c-transform; requires the directed triangle
/// inequality, which is checked through dual feasibility.
pub fn kr_dual_directed(x: &Distribution, y: &Distribution, c: &CostMatrix) -> Result<DualSolution> {
    let t = wasserstein(x, y, c)?;
    let n = c.size();
    let w: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|j| t.u[j] + c.get(k, j)).fold(f64::INFINITY, f64::min))
        .collect();
    let slack = tolerance::AUDIT.min(1e-9) * (1.0 + t.value.abs());
    for m in 0..n {
        for j in 0..n {
            if w[m] - w[j] > c.get(m, j) + slack {
                return Err(Error::InfeasibleDual(format!(
                    "w[{m}] - w[{j}] = {} exceeds c = {}; the cost violates the triangle inequality",
                    w[m] - w[j],
                    c.get(m, j)
                )));
            }
        }
    }
    let target = balanced_target(x, y)?;
    let value = (0..n).map(|k| w[k] * (target[k] - x.values()[k])).sum();
    Ok(DualSolution { value, potential: w })
}

/// Kantorovich-Rubinstein dual for a symmetric cost: `|w_m - w_n| <= c_mn`.
pub fn kr_dual(x: &Distribution, y: &Distribution, c: &CostMatrix) -> Result<DualSolution> {
    if !c.is_symmetric() {
        return Err(invalid("kr_dual needs a symmetric cost; use kr_dual_directed"));
    }
    kr_dual_directed(x, y, c)
}

/// `min W(x', y')` over `0 <= x' <= x`, `y' >= y`, `|x'| = |y'|`.
///
/// Solved by meeting the demands `y` exactly from supplies capped by `x`;
/// with `c >= 0` delivering more than `y` never lowers the cost.
pub fn generalized_wasserstein(x: &Distribution, y: &Distribution, c: &CostMatrix) -> Result<GeneralizedTransport> {
    check_sizes(x, y, c)?;
    if !c.has_zero_diagonal() {
        return Err(invalid("generalized Wasserstein needs a zero-diagonal cost"));
    }
    let (mx, my) = (x.mass(), y.mass());
    if mx < my - tolerance::MASS {
        return Err(Error::MassMismatch {
            source_mass: mx,
            target_mass: my,
        });
    }
    let n = c.size();
    if my == 0.0 {
        return Ok(GeneralizedTransport {
            value: 0.0,
            coupling: Coupling {
                plan: vec![vec![0.0; n]; n],
                source: x.values().to_vec(),
                target: y.values().to_vec(),
            },
            x_kept: vec![0.0; n],
            y_kept: y.values().to_vec(),
        });
    }
    let target: Vec<f64> = if my > mx {
        y.values().iter().map(|v| v * mx / my).collect()
    } else {
        y.values().to_vec()
    };
    let t = run(x.values(), &target, c)?;
    let x_kept = t.coupling.source_marginal();
    Ok(GeneralizedTransport {
        value: t.value,
        y_kept: target,
        x_kept,
        coupling: t.coupling,
    })
}

fn check_exact(x: &[BigRational], y: &[BigRational], c: &[Vec<BigRational>]) -> Result<()> {
    let n = c.len();
    if x.len() != n || y.len() != n || c.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if let Some((index, _)) = x.iter().chain(y).enumerate().find(|(_, v)| v.is_negative()) {
        return Err(Error::NegativeEntry {
            index: index % n.max(1),
            value: f64::NAN,
        });
    }
    Ok(())
}

/// Exact-arithmetic `wasserstein`; masses must agree exactly.
pub fn wasserstein_exact(
    x: &[BigRational],
    y: &[BigRational],
    c: &[Vec<BigRational>],
) -> Result<(BigRational, Vec<Vec<BigRational>>)> {
    check_exact(x, y, c)?;
    let sum = |v: &[BigRational]| v.iter().fold(BigRational::zero(), |a, b| a + b);
    if sum(x) != sum(y) {
        return Err(invalid("exact masses differ"));
    }
    let sol = flow::solve(x, y, c)?;
    Ok((sol.value, sol.flow))
}

/// Exact-arithmetic `generalized_wasserstein` value.
pub fn generalized_wasserstein_exact(
    x: &[BigRational],
    y: &[BigRational],
    c: &[Vec<BigRational>],
) -> Result<BigRational> {
    check_exact(x, y, c)?;
    let sum = |v: &[BigRational]| v.iter().fold(BigRational::zero(), |a, b| a + b);
    if sum(x) < sum(y) {
        return Err(invalid("source mass below target mass"));
    }
    Ok(flow::solve(x, y, c)?.value)
}
