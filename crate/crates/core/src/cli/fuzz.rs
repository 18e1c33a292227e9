//! Random transport instances checked against exact rational arithmetic.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ot::{
    generalized_wasserstein, generalized_wasserstein_exact, kr_dual, wasserstein, wasserstein_exact, CostMatrix,
    Distribution,
};

use super::{EXIT_FAILED, EXIT_OK};

const TOL: f64 = 1e-9;

struct Instance {
    x: Vec<i64>,
    y: Vec<i64>,
    costs: Vec<Vec<i64>>,
    denom: i64,
}

/// Integer masses over a common denominator and a shortest-path metric.
fn instance(rng: &mut ChaCha8Rng, balanced: bool) -> Instance {
    let n = rng.random_range(1..=5);
    let denom = rng.random_range(1..=12);
    let x: Vec<i64> = (0..n).map(|_| rng.random_range(0..=denom)).collect();
    let mut y: Vec<i64> = (0..n).map(|_| rng.random_range(0..=denom)).collect();
    if balanced {
        let (sx, sy): (i64, i64) = (x.iter().sum(), y.iter().sum());
        // Move the surplus onto one random entry so the masses match.
        if sy != sx {
            let k = rng.random_range(0..n);
            y = vec![0; n];
            y[k] = sx;
        }
    } else {
        let sx: i64 = x.iter().sum();
        while y.iter().sum::<i64>() > sx {
            let k = rng.random_range(0..n);
            if y[k] > 0 {
                y[k] -= 1;
            }
        }
    }
    let mut costs = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let c = rng.random_range(1..=20);
            costs[i][j] = c;
            costs[j][i] = c;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                costs[i][j] = costs[i][j].min(costs[i][k] + costs[k][j]);
            }
        }
    }
    Instance { x, y, costs, denom }
}

fn rat(v: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(v), BigInt::from(d))
}

fn float(v: &[i64], d: i64) -> Result<Distribution> {
    Distribution::new(v.iter().map(|&a| a as f64 / d as f64).collect())
}

#[derive(Default)]
struct Tally {
    cases: usize,
    failures: Vec<String>,
}

impl Tally {
    fn check(&mut self, case: usize, what: &str, got: f64, want: f64) {
        if !((got - want).abs() <= TOL * want.abs().max(1.0)) {
            self.failures.push(format!("case {case}: {what} = {got}, expected {want}"));
        }
    }
}

/// Runs `cases` balanced and `cases` unbalanced instances from `seed`.
pub fn run(seed: u64, cases: usize, out: &mut dyn Write) -> Result<i32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    for case in 0..cases {
        let inst = instance(&mut rng, true);
        let c = CostMatrix::new(inst.costs.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect())?;
        let cr: Vec<Vec<BigRational>> = inst.costs.iter().map(|r| r.iter().map(|&v| rat(v, 1)).collect()).collect();
        let xr: Vec<BigRational> = inst.x.iter().map(|&v| rat(v, inst.denom)).collect();
        let yr: Vec<BigRational> = inst.y.iter().map(|&v| rat(v, inst.denom)).collect();
        let (exact, _) = wasserstein_exact(&xr, &yr, &cr)?;
        let exact = exact.to_f64().unwrap_or(f64::NAN);
        let (x, y) = (float(&inst.x, inst.denom)?, float(&inst.y, inst.denom)?);
        t.check(case, "float W", wasserstein(&x, &y, &c)?.value, exact);
        t.check(case, "dual", kr_dual(&x, &y, &c)?.value, exact);
        t.cases += 1;

        let inst = instance(&mut rng, false);
        let c = CostMatrix::new(inst.costs.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect())?;
        let cr: Vec<Vec<BigRational>> = inst.costs.iter().map(|r| r.iter().map(|&v| rat(v, 1)).collect()).collect();
        let xr: Vec<BigRational> = inst.x.iter().map(|&v| rat(v, inst.denom)).collect();
        let yr: Vec<BigRational> = inst.y.iter().map(|&v| rat(v, inst.denom)).collect();
        let exact = generalized_wasserstein_exact(&xr, &yr, &cr)?.to_f64().unwrap_or(f64::NAN);
        let (x, y) = (float(&inst.x, inst.denom)?, float(&inst.y, inst.denom)?);
        t.check(case, "generalized W", generalized_wasserstein(&x, &y, &c)?.value, exact);
        t.cases += 1;
    }
    writeln!(out, "{} instances from seed {seed}, {} mismatches", t.cases, t.failures.len())?;
    for f in &t.failures {
        writeln!(out, "  {f}")?;
    }
    Ok(if t.failures.is_empty() { EXIT_OK } else { EXIT_FAILED })
}
