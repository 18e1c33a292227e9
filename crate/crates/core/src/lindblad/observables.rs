use ndarray::Array2;
use num_complex::Complex64;

use super::model::Trajectory;
use super::state::{BlockState, DensityMatrix};
use crate::error::{invalid, Error, Result};
use crate::fock::FockBasis;

pub(crate) trait StateAccess {
    fn dim(&self) -> usize;
    fn entry(&self, r: usize, c: usize) -> Complex64;
}

impl StateAccess for DensityMatrix {
    fn dim(&self) -> usize {
        DensityMatrix::dim(self)
    }
    fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.get(r, c)
    }
}

impl StateAccess for BlockState {
    fn dim(&self) -> usize {
        BlockState::dim(self)
    }
    fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.get(r, c)
    }
}

fn check(basis: &FockBasis, rho: &impl StateAccess, n: f64) -> Result<()> {
    if rho.dim() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: rho.dim(),
        });
    }
    if !(n > 0.0) {
        return Err(invalid(format!("particle number N = {n} must be positive")));
    }
    Ok(())
}

/// Nonzero entries `(k, l, A_kl)` of `b_i^dagger b_j` on the basis.
pub(crate) fn hop_terms(basis: &FockBasis, i: usize, j: usize) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    let mut target = vec![0u32; basis.sites()];
    for (l, s) in basis.states().iter().enumerate() {
        if s[j] == 0 {
            continue;
        }
        target.copy_from_slice(s);
        target[j] -= 1;
        target[i] += 1;
        if let Some(k) = basis.index_of(&target) {
            out.push((k, l, (s[j] as f64 * (s[i] + 1) as f64).sqrt()));
        }
    }
    out
}

/// `Im tr(A rho)` for `A` given by its nonzero entries.
pub(crate) fn im_trace(terms: &[(usize, usize, f64)], rho: &impl StateAccess) -> f64 {
    terms.iter().map(|&(k, l, a)| a * rho.entry(l, k).im).sum()
}

pub(crate) fn site_expectations(basis: &FockBasis, rho: &impl StateAccess, weight: impl Fn(u32) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; basis.sites()];
    for (k, s) in basis.states().iter().enumerate() {
        let p = rho.entry(k, k).re;
        if p == 0.0 {
            continue;
        }
        for (o, &n) in out.iter_mut().zip(s) {
            if n > 0 {
                *o += weight(n) * p;
            }
        }
    }
    out
}

pub(crate) fn falling(n: u32, k: u32) -> f64 {
    if n < k {
        0.0
    } else {
        (0..k).map(|j| (n - j) as f64).product()
    }
}

/// `x_i = tr(n_i rho) / N`.
pub fn occupation_fractions(rho: &DensityMatrix, basis: &FockBasis, n: f64) -> Result<Vec<f64>> {
    check(basis, rho, n)?;
    Ok(site_expectations(basis, rho, |k| k as f64).into_iter().map(|v| v / n).collect())
}

/// `phi_ij = 2 J_ij Im tr(b_i^dagger b_j rho) / N`, so that `dx_i/dt = sum_j phi_ij` without dissipation.
pub fn currents(rho: &DensityMatrix, hopping: &Array2<f64>, basis: &FockBasis, n: f64) -> Result<Array2<f64>> {
    check(basis, rho, n)?;
    let m = basis.sites();
    if hopping.dim() != (m, m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: hopping.nrows(),
        });
    }
    let mut phi = Array2::zeros((m, m));
    for i in 0..m {
        for j in i + 1..m {
            if hopping[[i, j]] == 0.0 {
                continue;
            }
            let v = 2.0 * hopping[[i, j]] * im_trace(&hop_terms(basis, i, j), rho) / n;
            phi[[i, j]] = v;
            phi[[j, i]] = -v;
        }
    }
    Ok(phi)
}

/// `d_i = gamma n <(b_i^dagger)^n b_i^n> / N`, the rate at which site `i` loses particles.
pub fn loss_rate_multi_body(rho: &DensityMatrix, basis: &FockBasis, n_loss: u32, gamma: f64, n: f64) -> Result<Vec<f64>> {
    check(basis, rho, n)?;
    if n_loss < 2 {
        return Err(invalid(format!("multi-body loss needs n >= 2, got {n_loss}")));
    }
    let scale = gamma * n_loss as f64 / n;
    Ok(site_expectations(basis, rho, |k| falling(k, n_loss))
        .into_iter()
        .map(|v| v * scale)
        .collect())
}

/// Diagonal of `rho` in basis order.
pub fn fock_probabilities(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.dim()).map(|k| rho.get(k, k).re).collect()
}

/// `phi_ij(t) e^{rate (t - tau)}` for every sample with `t <= tau`.
pub fn weighted_currents(traj: &Trajectory, rate: f64, tau: f64) -> Result<Vec<Array2<f64>>> {
    let last = traj.sample_index(tau)?;
    Ok((0..=last)
        .map(|k| traj.current_matrix(k) * (rate * (traj.times()[k] - tau)).exp())
        .collect())
}

/// Normalized truncation of `sum_n (-g2/g1)^n |n>` on levels `0..=n_max`.
pub fn dark_state_gain_loss(gamma1: f64, gamma2: f64, n_max: u32) -> Result<Vec<f64>> {
    if !(gamma2 >= 0.0 && gamma2 < gamma1) {
        return Err(invalid(format!(
            "dark state needs 0 <= gamma2 < gamma1, got gamma1 = {gamma1}, gamma2 = {gamma2}"
        )));
    }
    let r = -gamma2 / gamma1;
    let mut psi: Vec<f64> = (0..=n_max).map(|n| r.powi(n as i32)).collect();
    let norm = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|v| *v /= norm);
    Ok(psi)
}

/// `|| L psi ||` for `L = sqrt(g1/g) b + sqrt(g2/g) b^dagger`, `g = g1 + g2`, on the truncated single-site space.
pub fn dark_state_residual(gamma1: f64, gamma2: f64, n_max: u32) -> Result<f64> {
    let psi = dark_state_gain_loss(gamma1, gamma2, n_max)?;
    let g = gamma1 + gamma2;
    let (a, c) = ((gamma1 / g).sqrt(), (gamma2 / g).sqrt());
    let top = n_max as usize;
    let mut out = vec![0.0; top + 1];
    for n in 0..=top {
        // b|n> = sqrt(n)|n-1>, b^dagger|n> = sqrt(n+1)|n+1> below the cutoff
        if n > 0 {
            out[n - 1] += a * (n as f64).sqrt() * psi[n];
        }
        if n < top {
            out[n + 1] += c * ((n + 1) as f64).sqrt() * psi[n];
        }
    }
    Ok(out.iter().map(|v| v * v).sum::<f64>().sqrt())
}
