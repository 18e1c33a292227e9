//! Closed-form transport bounds for closed, lossy and gain-loss dynamics.

mod zeta;

pub use zeta::riemann_zeta;

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `alpha_eps = min(1, alpha - D - eps)`, valid for `0 < eps < alpha - D`.
pub fn alpha_eps(alpha: f64, dimension: usize, epsilon: f64) -> Result<f64> {
    let gap = alpha - dimension as f64;
    if !(epsilon > 0.0 && epsilon < gap) {
        return Err(invalid(format!(
            "epsilon = {epsilon} outside (0, alpha - D) = (0, {gap})"
        )));
    }
    Ok((gap - epsilon).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    #[serde(rename = "J")]
    pub j: f64,
    pub phi: f64,
    pub alpha: f64,
    #[serde(rename = "D")]
    pub dimension: usize,
    pub epsilon: f64,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub gamma1: f64,
    #[serde(default)]
    pub gamma2: f64,
    #[serde(rename = "N", default = "one_usize")]
    pub n_bosons: usize,
    #[serde(default = "one_usize")]
    pub lattice_size: usize,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl BoundParams {
    /// Parameters with `mu = 1`, no dissipation and a single boson on a single site.
    pub fn new(j: f64, phi: f64, alpha: f64, dimension: usize, epsilon: f64) -> Self {
        Self {
            j,
            phi,
            alpha,
            dimension,
            epsilon,
            mu: 1.0,
            gamma: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            n_bosons: 1,
            lattice_size: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.j,
            self.phi,
            self.alpha,
            self.epsilon,
            self.mu,
            self.gamma,
            self.gamma1,
            self.gamma2,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(invalid("bound parameters must be finite"));
        }
        if self.j <= 0.0 {
            return Err(invalid(format!("J = {} must be positive", self.j)));
        }
        if self.phi <= 0.0 {
            return Err(invalid(format!("phi = {} must be positive", self.phi)));
        }
        if self.dimension == 0 {
            return Err(invalid("D must be at least 1"));
        }
        if self.alpha <= self.dimension as f64 {
            return Err(invalid(format!(
                "alpha = {} must exceed D = {}",
                self.alpha, self.dimension
            )));
        }
        alpha_eps(self.alpha, self.dimension, self.epsilon)?;
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(invalid(format!("mu = {} outside (0, 1]", self.mu)));
        }
        if self.gamma < 0.0 || self.gamma1 < 0.0 || self.gamma2 < 0.0 {
            return Err(invalid("rates must be nonnegative"));
        }
        if self.gamma2 > self.gamma1 {
            return Err(invalid(format!(
                "gamma2 = {} exceeds gamma1 = {}",
                self.gamma2, self.gamma1
            )));
        }
        if self.n_bosons == 0 || self.lattice_size == 0 {
            return Err(invalid("N and lattice_size must be positive"));
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }

    pub fn alpha_eps(&self) -> Result<f64> {
        alpha_eps(self.alpha, self.dimension, self.epsilon)
    }

    /// `zeta(alpha - alpha_eps - D + 1)`; the argument is at least `1 + eps`.
    pub fn zeta_value(&self) -> Result<f64> {
        let a = self.alpha_eps()?;
        riemann_zeta(self.alpha - a - self.dimension as f64 + 1.0)
    }

    /// `J phi zeta(alpha - alpha_eps - D + 1)`.
    pub fn cost_rate(&self) -> Result<f64> {
        Ok(self.j * self.phi * self.zeta_value()?)
    }

    pub fn density(&self) -> f64 {
        self.n_bosons as f64 / self.lattice_size as f64
    }

    pub fn delta_gamma(&self) -> f64 {
        self.gamma1 - self.gamma2
    }

    fn require_gain_loss(&self) -> Result<f64> {
        let dg = self.delta_gamma();
        if dg <= 0.0 {
            return Err(invalid(format!(
                "gain-loss bounds need gamma1 > gamma2, got gamma1 = {}, gamma2 = {}",
                self.gamma1, self.gamma2
            )));
        }
        Ok(dg)
    }
}

/// `kappa_1 = mu / (J phi zeta(alpha - alpha_eps - D + 1))`.
pub fn kappa1(p: &BoundParams) -> Result<f64> {
    p.validate()?;
    Ok(p.mu / p.cost_rate()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    ClosedTau,
    OneBodyTau,
    MultiBodyTau,
    GainLossTau,
    MuMaxOneBody,
    MuMaxGainLoss,
    TransportLimitOneBody,
    TransportLimitGainLoss,
    ProbabilityBound,
}

impl BoundKind {
    pub const ALL: [BoundKind; 9] = [
        BoundKind::ClosedTau,
        BoundKind::OneBodyTau,
        BoundKind::MultiBodyTau,
        BoundKind::GainLossTau,
        BoundKind::MuMaxOneBody,
        BoundKind::MuMaxGainLoss,
        BoundKind::TransportLimitOneBody,
        BoundKind::TransportLimitGainLoss,
        BoundKind::ProbabilityBound,
    ];

    /// Minimal-time kinds are lower bounds: larger values are tighter.
    pub fn is_lower_bound(self) -> bool {
        matches!(
            self,
            BoundKind::ClosedTau
                | BoundKind::OneBodyTau
                | BoundKind::MultiBodyTau
                | BoundKind::GainLossTau
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    /// `+inf` (serialized as null) for an infeasible time bound.
    pub value: f64,
    pub feasible: bool,
    pub epsilon: f64,
    /// Right-hand side the bound was solved for, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required: Option<f64>,
    /// The cap that an infeasible report violates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
    /// Unclipped value for capped quantities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<f64>,
}

impl BoundReport {
    fn feasible(kind: BoundKind, value: f64, epsilon: f64) -> Self {
        Self {
            kind,
            value,
            feasible: true,
            epsilon,
            required: None,
            cap: None,
            raw: None,
        }
    }

    fn infeasible(kind: BoundKind, required: f64, cap: f64, epsilon: f64) -> Self {
        Self {
            kind,
            value: f64::INFINITY,
            feasible: false,
            epsilon,
            required: Some(required),
            cap: Some(cap),
            raw: None,
        }
    }
}

fn check_distance(d: f64) -> Result<()> {
    if d.is_finite() && d >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("distance d_XY = {d} must be nonnegative")))
    }
}

/// `kappa_1 d^alpha_eps`, the right-hand side shared by every time bound.
fn time_rhs(p: &BoundParams, d: f64) -> Result<f64> {
    check_distance(d)?;
    Ok(kappa1(p)? * d.powf(p.alpha_eps()?))
}

/// `tau >= kappa_1 d^alpha_eps`.
pub fn min_time_closed(p: &BoundParams, d: f64) -> Result<BoundReport> {
    let rhs = time_rhs(p, d)?;
    let mut r = BoundReport::feasible(BoundKind::ClosedTau, rhs, p.epsilon);
    r.required = Some(rhs);
    Ok(r)
}

/// Smallest root of `f(tau) = rhs` for `f` increasing on `[lo, hi]` with `f(lo) <= rhs <= f(hi)`.
fn bisect(f: impl Fn(f64) -> f64, rhs: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < rhs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Smallest `tau` with `tau e^{-gamma tau} >= kappa_1 d^alpha_eps`.
pub fn min_time_one_body(p: &BoundParams, d: f64) -> Result<BoundReport> {
    let rhs = time_rhs(p, d)?;
    if p.gamma == 0.0 {
        let mut r = min_time_closed(p, d)?;
        r.kind = BoundKind::OneBodyTau;
        return Ok(r);
    }
    let g = p.gamma;
    let cap = 1.0 / (E * g);
    let mut r = if rhs > cap * (1.0 + 4.0 * f64::EPSILON) {
        BoundReport::infeasible(BoundKind::OneBodyTau, rhs, cap, p.epsilon)
    } else if rhs >= cap {
        BoundReport::feasible(BoundKind::OneBodyTau, 1.0 / g, p.epsilon)
    } else {
        let tau = bisect(|t| t * (-g * t).exp(), rhs, 0.0, 1.0 / g);
        BoundReport::feasible(BoundKind::OneBodyTau, tau, p.epsilon)
    };
    r.required = Some(rhs);
    r.cap = Some(cap);
    Ok(r)
}

/// Multi-body loss gives back the closed-system bound.
pub fn min_time_multi_body(p: &BoundParams, d: f64) -> Result<BoundReport> {
    let mut r = min_time_closed(p, d)?;
    r.kind = BoundKind::MultiBodyTau;
    Ok(r)
}

fn capped(kind: BoundKind, raw: f64, epsilon: f64) -> BoundReport {
    let mut r = BoundReport::feasible(kind, raw.min(1.0), epsilon);
    r.raw = Some(raw);
    r.cap = Some(1.0);
    r
}

/// `min(J phi zeta / (e gamma d^alpha_eps), 1)`.
pub fn mu_max_one_body(p: &BoundParams, d: f64) -> Result<BoundReport> {
    p.validate()?;
    check_distance(d)?;
    if p.gamma <= 0.0 {
        return Err(invalid("mu_max for one-body loss needs gamma > 0"));
    }
    let raw = p.cost_rate()? / (E * p.gamma * d.powf(p.alpha_eps()?));
    Ok(capped(BoundKind::MuMaxOneBody, raw, p.epsilon))
}

/// `d_l = (N J phi zeta / (e gamma))^(1/alpha_eps)`.
pub fn transport_limit_one_body(p: &BoundParams) -> Result<BoundReport> {
    p.validate()?;
    if p.gamma <= 0.0 {
        return Err(invalid("transport limit for one-body loss needs gamma > 0"));
    }
    let base = p.n_bosons as f64 * p.cost_rate()? / (E * p.gamma);
    Ok(BoundReport::feasible(
        BoundKind::TransportLimitOneBody,
        base.powf(1.0 / p.alpha_eps()?),
        p.epsilon,
    ))
}

/// `A(tau) = tau e^{-dg tau} + (gamma2/dg) n^-1 ((1 - e^{-dg tau})/dg - tau e^{-dg tau})`.
pub fn gain_loss_lhs(tau: f64, p: &BoundParams) -> Result<f64> {
    let dg = p.require_gain_loss()?;
    if !(tau >= 0.0) {
        return Err(invalid(format!("tau = {tau} must be nonnegative")));
    }
    Ok(a_function(tau, p.gamma2, dg, p.density()))
}

fn a_function(tau: f64, gamma2: f64, dg: f64, density: f64) -> f64 {
    let decay = (-dg * tau).exp();
    let head = tau * decay;
    head + gamma2 / (dg * density) * (-(-dg * tau).exp_m1() / dg - head)
}

/// `A(tau)` for an explicit density `n = N / |Lambda|`, which need not be an integer ratio.
pub fn gain_loss_a(tau: f64, gamma2: f64, delta_gamma: f64, density: f64) -> f64 {
    a_function(tau, gamma2, delta_gamma, density)
}

/// `sup_tau A(tau)` for an explicit density; equals `B(tau_c)`.
pub fn gain_loss_sup(gamma2: f64, delta_gamma: f64, density: f64) -> f64 {
    let k = gamma2 / (delta_gamma * density);
    if k < 1.0 {
        a_function(1.0 / (delta_gamma * (1.0 - k)), gamma2, delta_gamma, density)
    } else {
        k / delta_gamma
    }
}

/// `gamma2 / (dg n)`; `A` attains its supremum at a finite time iff this is below one.
fn gain_ratio(p: &BoundParams, dg: f64) -> f64 {
    p.gamma2 / (dg * p.density())
}

/// `sup_tau A(tau)` and whether it is attained.
fn a_supremum(p: &BoundParams, dg: f64) -> (f64, bool) {
    let k = gain_ratio(p, dg);
    if k < 1.0 {
        let tc = 1.0 / (dg * (1.0 - k));
        (a_function(tc, p.gamma2, dg, p.density()), true)
    } else {
        (k / dg, false)
    }
}

/// Smallest `tau` with `A(tau) >= kappa_1 d^alpha_eps`.
pub fn min_time_gain_loss(p: &BoundParams, d: f64) -> Result<BoundReport> {
    let dg = p.require_gain_loss()?;
    let rhs = time_rhs(p, d)?;
    let (sup, attained) = a_supremum(p, dg);
    let a = |t: f64| a_function(t, p.gamma2, dg, p.density());
    let mut r = if rhs <= 0.0 {
        BoundReport::feasible(BoundKind::GainLossTau, 0.0, p.epsilon)
    } else if rhs > sup * (1.0 + 4.0 * f64::EPSILON) || (!attained && rhs >= sup) {
        BoundReport::infeasible(BoundKind::GainLossTau, rhs, sup, p.epsilon)
    } else {
        let k = gain_ratio(p, dg);
        let tau = if attained {
            let tc = 1.0 / (dg * (1.0 - k));
            if rhs >= sup {
                tc
            } else {
                bisect(a, rhs, 0.0, tc)
            }
        } else {
            // A increases monotonically towards its limit
            let mut hi = 1.0 / dg;
            while a(hi) < rhs {
                hi *= 2.0;
            }
            bisect(a, rhs, 0.0, hi)
        };
        BoundReport::feasible(BoundKind::GainLossTau, tau, p.epsilon)
    };
    r.required = Some(rhs);
    r.cap = Some(sup);
    Ok(r)
}

/// Crossover time `(dg - gamma2/n)^-1`; `None` on the branch `n <= gamma2/dg` where `B` is constant.
pub fn tau_c(p: &BoundParams) -> Result<Option<f64>> {
    let dg = p.require_gain_loss()?;
    if p.density() > p.gamma2 / dg {
        Ok(Some(1.0 / (dg - p.gamma2 / p.density())))
    } else {
        Ok(None)
    }
}

/// Piecewise `B(t)`.
pub fn b_function(t: f64, p: &BoundParams) -> Result<f64> {
    let dg = p.require_gain_loss()?;
    let tail = p.gamma2 / (p.density() * dg * dg);
    if p.density() > p.gamma2 / dg {
        if !(t > 0.0) {
            return Err(invalid(format!("B(t) needs t > 0, got {t}")));
        }
        Ok((-dg * t).exp() / (dg * dg * t) + tail)
    } else {
        Ok(tail)
    }
}

/// `B(tau_c)`, or the constant branch value.
pub fn b_at_tau_c(p: &BoundParams) -> Result<f64> {
    match tau_c(p)? {
        Some(tc) => b_function(tc, p),
        None => b_function(1.0, p),
    }
}

/// `min(J phi zeta B(tau_c) / d^alpha_eps, 1)`.
pub fn mu_max_gain_loss(p: &BoundParams, d: f64) -> Result<BoundReport> {
    p.validate()?;
    check_distance(d)?;
    let raw = p.cost_rate()? * b_at_tau_c(p)? / d.powf(p.alpha_eps()?);
    Ok(capped(BoundKind::MuMaxGainLoss, raw, p.epsilon))
}

/// `d_l = (N J phi zeta B(tau_c))^(1/alpha_eps)`.
pub fn transport_limit_gain_loss(p: &BoundParams) -> Result<BoundReport> {
    p.validate()?;
    let base = p.n_bosons as f64 * p.cost_rate()? * b_at_tau_c(p)?;
    Ok(BoundReport::feasible(
        BoundKind::TransportLimitGainLoss,
        base.powf(1.0 / p.alpha_eps()?),
        p.epsilon,
    ))
}

/// `N J phi zeta tau / (dN0 d^alpha_eps)`, reported clipped to `[0, 1]` with the raw value kept.
pub fn probability_bound(p: &BoundParams, d: f64, tau: f64, delta_n0: usize) -> Result<BoundReport> {
    p.validate()?;
    check_distance(d)?;
    if !(tau >= 0.0) {
        return Err(invalid(format!("tau = {tau} must be nonnegative")));
    }
    if delta_n0 == 0 {
        return Err(invalid("delta_N0 must be at least 1"));
    }
    let raw = p.n_bosons as f64 * p.cost_rate()? * tau
        / (delta_n0 as f64 * d.powf(p.alpha_eps()?));
    Ok(capped(BoundKind::ProbabilityBound, raw, p.epsilon))
}

/// Extra inputs some bound kinds need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub d_xy: f64,
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "one_usize")]
    pub delta_n0: usize,
}

pub fn evaluate(kind: BoundKind, p: &BoundParams, inputs: &BoundInputs) -> Result<BoundReport> {
    let d = inputs.d_xy;
    match kind {
        BoundKind::ClosedTau => min_time_closed(p, d),
        BoundKind::OneBodyTau => min_time_one_body(p, d),
        BoundKind::MultiBodyTau => min_time_multi_body(p, d),
        BoundKind::GainLossTau => min_time_gain_loss(p, d),
        BoundKind::MuMaxOneBody => mu_max_one_body(p, d),
        BoundKind::MuMaxGainLoss => mu_max_gain_loss(p, d),
        BoundKind::TransportLimitOneBody => transport_limit_one_body(p),
        BoundKind::TransportLimitGainLoss => transport_limit_gain_loss(p),
        BoundKind::ProbabilityBound => probability_bound(p, d, inputs.tau, inputs.delta_n0),
    }
}

/// `n` interior points of `(0, alpha - D)`, evenly spaced.
pub fn epsilon_grid(alpha: f64, dimension: usize, n: usize) -> Vec<f64> {
    let gap = alpha - dimension as f64;
    (1..=n).map(|k| gap * k as f64 / (n + 1) as f64).collect()
}

fn tighter(kind: BoundKind, a: &BoundReport, b: &BoundReport) -> bool {
    if kind.is_lower_bound() {
        a.value > b.value
    } else {
        a.value < b.value
    }
}

/// Tightest bound over an epsilon grid: the largest minimal time, or the smallest cap.
/// Ties keep the earliest grid point.
pub fn epsilon_optimize(
    kind: BoundKind,
    p: &BoundParams,
    inputs: &BoundInputs,
    grid: &[f64],
) -> Result<BoundReport> {
    let mut best: Option<BoundReport> = None;
    for &eps in grid {
        let r = evaluate(kind, &p.with_epsilon(eps), inputs)?;
        if best.as_ref().is_none_or(|b| tighter(kind, &r, b)) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| invalid("empty epsilon grid"))
}
