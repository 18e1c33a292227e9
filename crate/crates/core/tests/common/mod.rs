#![allow(dead_code, clippy::needless_range_loop, clippy::too_many_arguments)]

//! Oracles shared by the integration tests. Nothing here calls into the
//! transport solver under test.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer masses `units` split over `n` bins at random.
pub fn random_units(rng: &mut impl Rng, n: usize, units: u32) -> Vec<u32> {
    let mut v = vec![0; n];
    for _ in 0..units {
        v[rng.random_range(0..n)] += 1;
    }
    v
}

/// Symmetric integer cost with zero diagonal, closed under shortest paths so
/// that the triangle inequality holds.
pub fn random_metric(rng: &mut impl Rng, n: usize, max: i64) -> Vec<Vec<i64>> {
    let mut c = vec![vec![0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let v = rng.random_range(1..=max);
            c[i][j] = v;
            c[j][i] = v;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                c[i][j] = c[i][j].min(c[i][k] + c[k][j]);
            }
        }
    }
    c
}

/// Exhaustive oracle for the balanced problem with integer masses: walks
/// every nonnegative integer table with the given marginals. The polytope
/// has integral vertices, so the integer minimum is the LP minimum.
/// `cost[m][n]` is charged per unit moved from source `n` to target `m`.
pub fn enumerate_transport(source: &[u32], target: &[u32], cost: &[Vec<i64>]) -> i64 {
    fn go(
        m: usize,
        n: usize,
        cols: &mut [u32],
        row_left: u32,
        target: &[u32],
        cost: &[Vec<i64>],
        acc: i64,
        best: &mut i64,
    ) {
        if acc >= *best {
            return;
        }
        let ns = cols.len();
        if m == target.len() {
            *best = acc;
            return;
        }
        if n == ns - 1 {
            // last cell of the row takes whatever remains
            if cols[n] < row_left {
                return;
            }
            cols[n] -= row_left;
            let next = target.get(m + 1).copied().unwrap_or(0);
            go(m + 1, 0, cols, next, target, cost, acc + row_left as i64 * cost[m][n], best);
            cols[n] += row_left;
            return;
        }
        for k in 0..=row_left.min(cols[n]) {
            cols[n] -= k;
            go(m, n + 1, cols, row_left - k, target, cost, acc + k as i64 * cost[m][n], best);
            cols[n] += k;
        }
    }
    let mut cols = source.to_vec();
    let mut best = i64::MAX;
    go(0, 0, &mut cols, target[0], target, cost, 0, &mut best);
    best
}

#[derive(Clone, Copy, PartialEq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

/// Exact two-phase simplex with Bland's rule: minimize `c.x` subject to
/// `rows[k].x rel[k] b[k]`, `x >= 0`. Returns `None` when infeasible.
pub fn simplex_min(c: &[BigRational], rows: &[(Vec<BigRational>, Rel, BigRational)]) -> Option<BigRational> {
    let nv = c.len();
    let nr = rows.len();
    let slack_count = rows.iter().filter(|r| r.1 != Rel::Eq).count();
    let width = nv + slack_count + nr; // vars, slacks, artificials
    let zero = BigRational::zero();
    let mut t: Vec<Vec<BigRational>> = Vec::with_capacity(nr);
    let mut rhs = Vec::with_capacity(nr);
    let mut basis = Vec::with_capacity(nr);
    let mut slack = nv;
    for (k, (a, rel, b)) in rows.iter().enumerate() {
        let mut row = vec![zero.clone(); width];
        row[..nv].clone_from_slice(a);
        match rel {
            Rel::Le => {
                row[slack] = BigRational::one();
                slack += 1;
            }
            Rel::Ge => {
                row[slack] = -BigRational::one();
                slack += 1;
            }
            Rel::Eq => {}
        }
        let mut b = b.clone();
        if b.is_negative() {
            row.iter_mut().for_each(|v| *v = -v.clone());
            b = -b;
        }
        row[nv + slack_count + k] = BigRational::one();
        t.push(row);
        rhs.push(b);
        basis.push(nv + slack_count + k);
    }

    let pivot = |t: &mut Vec<Vec<BigRational>>, rhs: &mut Vec<BigRational>, r: usize, col: usize| {
        let p = t[r][col].clone();
        t[r].iter_mut().for_each(|v| *v = &*v / &p);
        rhs[r] = &rhs[r] / &p;
        for i in 0..t.len() {
            if i != r && !t[i][col].is_zero() {
                let f = t[i][col].clone();
                for j in 0..t[i].len() {
                    let d = &f * &t[r][j];
                    t[i][j] = &t[i][j] - d;
                }
                rhs[i] = &rhs[i] - &f * &rhs[r];
            }
        }
    };

    let run = |t: &mut Vec<Vec<BigRational>>,
               rhs: &mut Vec<BigRational>,
               basis: &mut Vec<usize>,
               cost: &[BigRational],
               allowed: usize| {
        loop {
            // reduced costs c_j - c_B B^-1 A_j
            let mut entering = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j].clone();
                for (i, &bi) in basis.iter().enumerate() {
                    rc -= &cost[bi] * &t[i][j];
                }
                if rc.is_negative() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return true };
            let mut leave: Option<(usize, BigRational)> = None;
            for i in 0..t.len() {
                if t[i][col].is_positive() {
                    let ratio = &rhs[i] / &t[i][col];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            pivot(t, rhs, r, col);
            basis[r] = col;
        }
    };

    let mut phase1 = vec![zero.clone(); width];
    phase1[nv + slack_count..].iter_mut().for_each(|v| *v = BigRational::one());
    run(&mut t, &mut rhs, &mut basis, &phase1, width);
    let infeasibility = basis
        .iter()
        .zip(&rhs)
        .filter(|(b, _)| **b >= nv + slack_count)
        .fold(zero.clone(), |a, (_, v)| a + v);
    if !infeasibility.is_zero() {
        return None;
    }
    // drive zero-valued artificials out of the basis where possible
    for r in 0..nr {
        if basis[r] >= nv + slack_count {
            if let Some(col) = (0..nv + slack_count).find(|&j| !t[r][j].is_zero() && !basis.contains(&j)) {
                pivot(&mut t, &mut rhs, r, col);
                basis[r] = col;
            }
        }
    }
    let mut phase2 = vec![zero.clone(); width];
    phase2[..nv].clone_from_slice(c);
    // artificials stay in the tableau but can never re-enter
    if !run(&mut t, &mut rhs, &mut basis, &phase2, nv + slack_count) {
        return None;
    }
    Some(
        basis
            .iter()
            .zip(&rhs)
            .filter(|(b, _)| **b < nv)
            .fold(zero, |a, (b, v)| a + &c[*b] * v),
    )
}

/// Direct LP for the generalized distance: plan `pi[m][n] >= 0` with column
/// sums at most `x_n` and row sums at least `y_m`; the common mass is free.
pub fn generalized_lp(x: &[BigRational], y: &[BigRational], cost: &[Vec<BigRational>]) -> Option<BigRational> {
    let n = x.len();
    let zero = BigRational::zero();
    let var = |m: usize, s: usize| m * n + s;
    let c: Vec<BigRational> = (0..n * n).map(|k| cost[k / n][k % n].clone()).collect();
    let mut rows = Vec::new();
    for s in 0..n {
        let mut a = vec![zero.clone(); n * n];
        (0..n).for_each(|m| a[var(m, s)] = BigRational::one());
        rows.push((a, Rel::Le, x[s].clone()));
    }
    for m in 0..n {
        let mut a = vec![zero.clone(); n * n];
        (0..n).for_each(|s| a[var(m, s)] = BigRational::one());
        rows.push((a, Rel::Ge, y[m].clone()));
    }
    simplex_min(&c, &rows)
}

/// Balanced transport as an LP, for cross-checking the simplex itself.
pub fn balanced_lp(x: &[BigRational], y: &[BigRational], cost: &[Vec<BigRational>]) -> Option<BigRational> {
    let n = x.len();
    let zero = BigRational::zero();
    let c: Vec<BigRational> = (0..n * n).map(|k| cost[k / n][k % n].clone()).collect();
    let mut rows = Vec::new();
    for s in 0..n {
        let mut a = vec![zero.clone(); n * n];
        (0..n).for_each(|m| a[m * n + s] = BigRational::one());
        rows.push((a, Rel::Eq, x[s].clone()));
    }
    for m in 0..n {
        let mut a = vec![zero.clone(); n * n];
        (0..n).for_each(|s| a[m * n + s] = BigRational::one());
        rows.push((a, Rel::Eq, y[m].clone()));
    }
    simplex_min(&c, &rows)
}
