//! Audits of the transport inequality chains on simulated trajectories.
//!
//! Each audit evaluates the links of a chain `mu d^alpha_eps <= W <= integral <= cap`
//! at the empirical transport time and at the scenario checkpoints. A record
//! passes when `lhs <= rhs + tolerance`; tolerances combine a fixed floor with a
//! Richardson estimate of the trapezoid error on the stored grid.

mod scenario;

pub(crate) use scenario::read_text;
pub use scenario::{
    parse_json, AuditKind, BasisSpec, LatticeSpec, OutputFormat, OutputSpec, RegionsSpec, RunSpec, Scenario,
    Simulation,
};

use serde::Serialize;

use crate::bounds::{self, BoundInputs, BoundKind, BoundParams, BoundReport};
use crate::error::{invalid, Error, Result};
use crate::lattice::Region;
use crate::lindblad::{DissipatorSpec, Trajectory};
use crate::ot::{generalized_wasserstein, wasserstein, CostMatrix, Distribution};
use crate::tolerance;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRecord {
    pub name: String,
    pub time: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl AuditRecord {
    pub fn new(name: &str, time: f64, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            time,
            lhs,
            rhs,
            margin: rhs - lhs,
            tolerance,
            pass: lhs <= rhs + tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub kind: AuditKind,
    pub scenario: String,
    pub mu: f64,
    pub d_xy: f64,
    pub alpha_eps: f64,
    /// First grid time where the transport criterion holds.
    pub tau_emp: Option<f64>,
    /// Largest transported fraction seen on the grid.
    pub max_fraction: f64,
    pub records: Vec<AuditRecord>,
    pub bounds: Vec<BoundReport>,
    pub max_leakage: f64,
    pub notes: Vec<String>,
    /// Places where the formulas admit more than one reading; `--strict` fails on these.
    pub ambiguities: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn record(&self, name: &str, time: f64) -> Option<&AuditRecord> {
        self.records
            .iter()
            .find(|r| r.name == name && (r.time - time).abs() <= tolerance::GRID * time.abs().max(1.0))
    }

    /// Largest `|lhs|`/`|rhs|` difference over the records of `self`, matched by
    /// name and time in `other`; an error when `other` lacks one of them.
    pub fn max_difference(&self, other: &AuditReport) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for r in &self.records {
            let o = other
                .record(&r.name, r.time)
                .ok_or_else(|| invalid(format!("record {} at t = {} missing", r.name, r.time)))?;
            worst = worst.max((r.lhs - o.lhs).abs()).max((r.rhs - o.rhs).abs());
        }
        Ok(worst)
    }

    /// Rows `kind, name, time, lhs, rhs, margin, tolerance, pass`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["audit", "name", "time", "lhs", "rhs", "margin", "tolerance", "pass"])?;
        for r in &self.records {
            out.write_record([
                self.kind.name().to_string(),
                r.name.clone(),
                r.time.to_string(),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.margin.to_string(),
                r.tolerance.to_string(),
                r.pass.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn complement(r: &Region, sites: usize) -> Region {
    Region::new((0..sites).filter(|&i| !r.contains(i)))
}

fn one_body_rate(d: &DissipatorSpec) -> Result<f64> {
    match *d {
        DissipatorSpec::None => Ok(0.0),
        DissipatorSpec::OneBodyLoss { gamma } => Ok(gamma),
        _ => Err(invalid("this audit needs one-body loss or no dissipation")),
    }
}

/// `x_Y(tau) - x_{X^c}(0)`.
pub fn transported_fraction_closed(traj: &Trajectory, x: &Region, y: &Region, tau: f64) -> Result<f64> {
    let k = traj.sample_index(tau)?;
    let xc = complement(x, traj.sites());
    Ok(y.sum(traj.occupations(k)) - xc.sum(traj.occupations(0)))
}

/// `x_Y(tau) - e^{-gamma tau} x_{X^c}(0)` for one-body loss at rate `gamma`.
pub fn transported_fraction_result1(traj: &Trajectory, x: &Region, y: &Region, tau: f64) -> Result<f64> {
    let gamma = one_body_rate(traj.dissipator())?;
    let k = traj.sample_index(tau)?;
    let xc = complement(x, traj.sites());
    Ok(y.sum(traj.occupations(k)) - (-gamma * tau).exp() * xc.sum(traj.occupations(0)))
}

/// Hopping-free reference `y_i(tau) = x_i(0) e^{-dg tau} + gamma2 (1 - e^{-dg tau}) / (N dg)`.
pub fn gain_loss_baseline(traj: &Trajectory, p: &BoundParams, tau: f64) -> Result<Vec<f64>> {
    let dg = p.delta_gamma();
    if !(dg > 0.0) {
        return Err(invalid("the gain-loss baseline needs gamma1 > gamma2"));
    }
    let decay = (-dg * tau).exp();
    let feed = p.gamma2 * -(-dg * tau).exp_m1() / (traj.normalization() * dg);
    Ok(traj.occupations(0).iter().map(|x0| x0 * decay + feed).collect())
}

/// `x_Y(tau) - y_{X^c}(tau)` with `y` the hopping-free baseline.
pub fn transported_fraction_result3(
    traj: &Trajectory,
    x: &Region,
    y: &Region,
    tau: f64,
    p: &BoundParams,
) -> Result<f64> {
    let k = traj.sample_index(tau)?;
    let base = gain_loss_baseline(traj, p, tau)?;
    let xc = complement(x, traj.sites());
    Ok(y.sum(traj.occupations(k)) - xc.sum(&base))
}

/// Trapezoid integral of `f[0..=k]` and a Richardson error estimate `|T_h - T_2h| / 3`.
fn trapezoid(f: &[f64], dt: f64, k: usize) -> (f64, f64) {
    if k == 0 {
        return (0.0, 0.0);
    }
    let fine = dt * (0.5 * (f[0] + f[k]) + f[1..k].iter().sum::<f64>());
    let even = k - k % 2;
    let mut coarse = 0.0;
    if even > 0 {
        let inner: f64 = (2..even).step_by(2).map(|j| f[j]).sum();
        coarse = 2.0 * dt * (0.5 * (f[0] + f[even]) + inner);
    }
    if k % 2 == 1 {
        coarse += 0.5 * dt * (f[k - 1] + f[k]);
    }
    (fine, (fine - coarse).abs() / 3.0)
}

/// Optimal transport that tolerates a mass mismatch up to the leakage limit by
/// rescaling the target; returns the value and the mismatch absorbed.
fn balanced(source: &[f64], target: &[f64], c: &CostMatrix) -> Result<(f64, f64)> {
    let x = Distribution::new(source.to_vec())?;
    let mut y = Distribution::new(target.to_vec())?;
    let gap = (x.mass() - y.mass()).abs();
    if gap > tolerance::MASS {
        if gap > tolerance::LEAKAGE || y.mass() == 0.0 {
            return Err(Error::MassMismatch {
                source_mass: x.mass(),
                target_mass: y.mass(),
            });
        }
        y = y.scaled(x.mass() / y.mass());
    }
    Ok((wasserstein(&x, &y, c)?.value, gap))
}

fn max_cost(c: &CostMatrix) -> f64 {
    (0..c.size())
        .flat_map(|m| (0..c.size()).map(move |n| (m, n)))
        .map(|(m, n)| c.get(m, n))
        .fold(0.0, f64::max)
}

struct Context<'a> {
    scenario: &'a Scenario,
    traj: &'a Trajectory,
    x: Region,
    y: Region,
    xc: Region,
    d_xy: f64,
    alpha_eps: f64,
    d_pow: f64,
    cost: CostMatrix,
    /// `J phi zeta(alpha - alpha_eps - D + 1)`.
    cost_rate: f64,
    params: BoundParams,
}

impl<'a> Context<'a> {
    fn new(scenario: &'a Scenario, sim: &'a Simulation) -> Result<Self> {
        let lattice = scenario.lattice()?;
        let traj = &sim.trajectory;
        let alpha_eps = scenario.alpha_eps()?;
        let d_xy = scenario.d_xy()?;
        let n_bosons = (traj.normalization() - 1e-9).ceil().max(1.0) as usize;
        let params = scenario.bound_params(n_bosons)?;
        Ok(Self {
            scenario,
            traj,
            x: scenario.regions.x.clone(),
            y: scenario.regions.y.clone(),
            xc: scenario.regions.x.complement(&lattice),
            d_xy,
            alpha_eps,
            d_pow: d_xy.powf(alpha_eps),
            cost: crate::ot::power_cost(&lattice, alpha_eps)?,
            cost_rate: params.cost_rate()?,
            params,
        })
    }

    fn report(&self, kind: AuditKind) -> AuditReport {
        AuditReport {
            kind,
            scenario: self.scenario.name.clone(),
            mu: self.scenario.run.mu,
            d_xy: self.d_xy,
            alpha_eps: self.alpha_eps,
            tau_emp: None,
            max_fraction: f64::NEG_INFINITY,
            records: Vec::new(),
            bounds: Vec::new(),
            max_leakage: self.traj.max_leakage(),
            notes: Vec::new(),
            ambiguities: Vec::new(),
        }
    }

    /// Sets `tau_emp` and `max_fraction` from `fraction(t)` and returns the evaluation times.
    fn scan(&self, report: &mut AuditReport, fraction: impl Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
        for &t in self.traj.times() {
            let f = fraction(t)?;
            report.max_fraction = report.max_fraction.max(f);
            if report.tau_emp.is_none() && f >= self.scenario.run.mu {
                report.tau_emp = Some(t);
            }
        }
        if report.tau_emp.is_none() {
            report.notes.push(format!(
                "transport criterion mu = {} not reached; largest fraction {:.6e}",
                self.scenario.run.mu, report.max_fraction
            ));
        }
        let mut times = self.scenario.run.checkpoints.clone();
        times.extend(report.tau_emp);
        Ok(self.normalize_times(times))
    }

    fn normalize_times(&self, mut times: Vec<f64>) -> Vec<f64> {
        if times.is_empty() {
            times.push(self.traj.final_time());
        }
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= tolerance::GRID * a.abs().max(1.0));
        times
    }

    /// `1/2 sum_{i != j} c_ij |phi_ij(t)| e^{rate (t - tau)}` on samples `0..=k`.
    fn cost_integral(&self, rate: f64, tau: f64, k: usize) -> (f64, f64) {
        let m = self.traj.sites();
        let f: Vec<f64> = (0..=k)
            .map(|s| {
                let mut total = 0.0;
                for i in 0..m {
                    for j in i + 1..m {
                        total += self.cost.get(i, j) * self.traj.current(s, i, j).abs();
                    }
                }
                total * (rate * (self.traj.times()[s] - tau)).exp()
            })
            .collect();
        trapezoid(&f, self.traj.dt(), k)
    }

    /// The four shared links at time `tau`.
    #[allow(clippy::too_many_arguments)]
    fn chain(
        &self,
        report: &mut AuditReport,
        tau: f64,
        mu_emp: f64,
        transport: f64,
        mismatch: f64,
        rate: f64,
        cap_factor: f64,
    ) {
        let k = self.traj.sample_index(tau).expect("evaluation times lie on the grid");
        let (integral, quad) = self.cost_integral(rate, tau, k);
        let slack = mismatch * max_cost(&self.cost);
        let r = &mut report.records;
        r.push(AuditRecord::new("lower", tau, mu_emp * self.d_pow, transport, tolerance::AUDIT + slack));
        r.push(AuditRecord::new("kr_upper", tau, transport, integral, tolerance::AUDIT + quad + slack));
        r.push(AuditRecord::new(
            "cost_cap",
            tau,
            integral,
            cap_factor * self.cost_rate,
            tolerance::AUDIT + quad,
        ));
        r.push(AuditRecord::new(
            "headline",
            tau,
            mu_emp * self.d_pow / self.cost_rate,
            cap_factor,
            tolerance::AUDIT,
        ));
    }

    fn number_law(&self, report: &mut AuditReport, law: impl Fn(f64) -> f64) {
        let worst = (0..self.traj.len())
            .map(|k| (self.traj.total(k) - law(self.traj.times()[k])).abs())
            .fold(0.0, f64::max);
        report.records.push(AuditRecord::new(
            "number_law",
            self.traj.final_time(),
            worst,
            0.0,
            tolerance::AUDIT,
        ));
    }

    fn bounds(&self, report: &mut AuditReport, kinds: &[BoundKind]) -> Result<()> {
        let inputs = BoundInputs {
            d_xy: self.d_xy,
            tau: self.traj.final_time(),
            delta_n0: self.scenario.run.delta_n0,
        };
        for &kind in kinds {
            report.bounds.push(bounds::evaluate(kind, &self.params, &inputs)?);
        }
        Ok(())
    }
}

fn require_loss_free(s: &Scenario) -> Result<()> {
    if !s.dissipator.channels(&s.basis()?)?.is_empty() {
        return Err(invalid("the closed-system audit needs dynamics without active jump channels"));
    }
    Ok(())
}

/// Closed-system chain: `mu d^alpha_eps <= W(x_0, x_tau) <= integral <= tau J phi zeta`.
pub fn audit_closed_with(s: &Scenario, sim: &Simulation) -> Result<AuditReport> {
    require_loss_free(s)?;
    let ctx = Context::new(s, sim)?;
    let traj = ctx.traj;
    let mut report = ctx.report(AuditKind::Closed);
    let times = ctx.scan(&mut report, |t| transported_fraction_closed(traj, &ctx.x, &ctx.y, t))?;
    for &tau in &times {
        let k = traj.sample_index(tau)?;
        let mu_emp = transported_fraction_closed(traj, &ctx.x, &ctx.y, tau)?;
        let (w, gap) = balanced(traj.occupations(0), traj.occupations(k), &ctx.cost)?;
        ctx.chain(&mut report, tau, mu_emp, w, gap, 0.0, tau);
    }
    let total0 = traj.total(0);
    ctx.number_law(&mut report, |_| total0);
    ctx.bounds(&mut report, &[BoundKind::ClosedTau])?;
    Ok(report)
}

/// One-body loss chain on `W(e^{-gamma tau} x_0, x_tau)`.
pub fn audit_result1_with(s: &Scenario, sim: &Simulation) -> Result<AuditReport> {
    let gamma = one_body_rate(&s.dissipator)?;
    let ctx = Context::new(s, sim)?;
    let traj = ctx.traj;
    let mut report = ctx.report(AuditKind::Result1);
    let times = ctx.scan(&mut report, |t| transported_fraction_result1(traj, &ctx.x, &ctx.y, t))?;
    for &tau in &times {
        let k = traj.sample_index(tau)?;
        let mu_emp = transported_fraction_result1(traj, &ctx.x, &ctx.y, tau)?;
        let decay = (-gamma * tau).exp();
        let source: Vec<f64> = traj.occupations(0).iter().map(|v| v * decay).collect();
        let (w, gap) = balanced(&source, traj.occupations(k), &ctx.cost)?;
        ctx.chain(&mut report, tau, mu_emp, w, gap, gamma, tau * decay);
    }
    let total0 = traj.total(0);
    ctx.number_law(&mut report, |t| total0 * (-gamma * t).exp());
    if gamma > 0.0 {
        let cap = ctx.cost_rate / (std::f64::consts::E * gamma * ctx.d_pow);
        report.records.push(AuditRecord::new(
            "mu_cap",
            traj.final_time(),
            report.max_fraction,
            cap,
            tolerance::AUDIT,
        ));
        ctx.bounds(
            &mut report,
            &[BoundKind::OneBodyTau, BoundKind::MuMaxOneBody, BoundKind::TransportLimitOneBody],
        )?;
    } else {
        ctx.bounds(&mut report, &[BoundKind::OneBodyTau])?;
    }
    Ok(report)
}

/// Multi-body loss chain on the generalized distance, with the loss-rate sign and
/// the witness `x~_i = x_i(tau) + int d_i = x_i(0) + int sum_j phi_ij`.
pub fn audit_result2_with(s: &Scenario, sim: &Simulation) -> Result<AuditReport> {
    if !matches!(s.dissipator, DissipatorSpec::NBodyLoss { .. }) {
        return Err(invalid("the result2 audit needs n-body loss"));
    }
    let ctx = Context::new(s, sim)?;
    let traj = ctx.traj;
    let mut report = ctx.report(AuditKind::Result2);
    let times = ctx.scan(&mut report, |t| transported_fraction_closed(traj, &ctx.x, &ctx.y, t))?;
    let m = traj.sites();
    let rates: Vec<&[f64]> = (0..traj.len())
        .map(|k| traj.loss_rates(k).ok_or_else(|| invalid("loss rates were not recorded")))
        .collect::<Result<_>>()?;
    for &tau in &times {
        let k = traj.sample_index(tau)?;
        let mu_emp = transported_fraction_closed(traj, &ctx.x, &ctx.y, tau)?;
        let x0 = Distribution::new(traj.occupations(0).to_vec())?;
        let xt = Distribution::new(traj.occupations(k).to_vec())?;
        let w = generalized_wasserstein(&x0, &xt, &ctx.cost)?.value;
        ctx.chain(&mut report, tau, mu_emp, w, 0.0, 0.0, tau);

        let mut worst: f64 = 0.0;
        let mut quad_worst: f64 = 0.0;
        for i in 0..m {
            let loss: Vec<f64> = rates[..=k].iter().map(|r| r[i]).collect();
            let inflow: Vec<f64> = (0..=k)
                .map(|s| (0..m).filter(|&j| j != i).map(|j| traj.current(s, i, j)).sum())
                .collect();
            let (lost, e1) = trapezoid(&loss, traj.dt(), k);
            let (moved, e2) = trapezoid(&inflow, traj.dt(), k);
            let via_loss = traj.occupations(k)[i] + lost;
            let via_flow = traj.occupations(0)[i] + moved;
            worst = worst.max((via_loss - via_flow).abs());
            quad_worst = quad_worst.max(e1 + e2);
        }
        report.records.push(AuditRecord::new("witness", tau, worst, 0.0, 1e-4));
        if quad_worst > 1e-4 {
            report.notes.push(format!("witness quadrature estimate {quad_worst:.3e} at t = {tau}"));
        }
    }
    let rise = (1..traj.len())
        .map(|k| traj.total(k) - traj.total(k - 1))
        .fold(0.0, f64::max);
    report.records.push(AuditRecord::new(
        "number_monotone",
        traj.final_time(),
        rise,
        0.0,
        tolerance::AUDIT,
    ));
    let min_rate = rates.iter().flat_map(|r| r.iter()).copied().fold(f64::INFINITY, f64::min);
    report.records.push(AuditRecord::new(
        "loss_nonneg",
        traj.final_time(),
        -min_rate,
        0.0,
        tolerance::NEGATIVE_CLIP,
    ));
    ctx.bounds(&mut report, &[BoundKind::MultiBodyTau])?;
    Ok(report)
}

/// Gain-loss chain on `W(y_tau, x_tau)` with the hopping-free baseline `y`.
pub fn audit_result3_with(s: &Scenario, sim: &Simulation) -> Result<AuditReport> {
    let DissipatorSpec::GainLoss { gamma1, gamma2, .. } = s.dissipator else {
        return Err(invalid("the result3 audit needs gain and loss"));
    };
    let dg = gamma1 - gamma2;
    if !(dg > 0.0) {
        return Err(invalid("the result3 audit needs gamma1 > gamma2"));
    }
    let ctx = Context::new(s, sim)?;
    let traj = ctx.traj;
    let p = &ctx.params;
    let density = traj.normalization() / traj.sites() as f64;
    let mut report = ctx.report(AuditKind::Result3);
    let times = ctx.scan(&mut report, |t| transported_fraction_result3(traj, &ctx.x, &ctx.y, t, p))?;
    for &tau in &times {
        let k = traj.sample_index(tau)?;
        let mu_emp = transported_fraction_result3(traj, &ctx.x, &ctx.y, tau, p)?;
        let base = gain_loss_baseline(traj, p, tau)?;
        let (w, gap) = balanced(&base, traj.occupations(k), &ctx.cost)?;
        let a = bounds::gain_loss_a(tau, gamma2, dg, density);
        ctx.chain(&mut report, tau, mu_emp, w, gap, dg, a);
    }
    let total0 = traj.total(0);
    ctx.number_law(&mut report, |t| {
        let decay = (-dg * t).exp();
        total0 * decay + gamma2 / (dg * density) * (1.0 - decay)
    });
    let cap = ctx.cost_rate * bounds::gain_loss_sup(gamma2, dg, density) / ctx.d_pow;
    report.records.push(AuditRecord::new(
        "mu_cap",
        traj.final_time(),
        report.max_fraction,
        cap,
        tolerance::AUDIT,
    ));
    if cap > 1.0 {
        report.notes.push(format!("mu cap {cap:.4} exceeds 1 and does not constrain transport"));
    }
    if let Some(note) = crosscheck_b_function(&ctx.params)?.note {
        report.ambiguities.push(note);
    }
    ctx.bounds(
        &mut report,
        &[BoundKind::GainLossTau, BoundKind::MuMaxGainLoss, BoundKind::TransportLimitGainLoss],
    )?;
    Ok(report)
}

/// Probability audit: `dN0 d^alpha_eps <P> <= W(p_0, p_tau) <= integral <= N tau J phi zeta`
/// over Fock-state distributions, plus the closed-form bound on `<P>`.
pub fn audit_result4_with(s: &Scenario, sim: &Simulation) -> Result<AuditReport> {
    if matches!(s.dissipator, DissipatorSpec::GainLoss { .. }) {
        return Err(invalid("the result4 audit needs loss-only dynamics"));
    }
    let (Some(graph), Some(flow)) = (&sim.state_graph, &sim.state_flow) else {
        return Err(invalid("the simulation did not record state-space flows"));
    };
    let ctx = Context::new(s, sim)?;
    let traj = ctx.traj;
    let (n0, dn0) = (s.run.n0, s.run.delta_n0);
    let p0 = traj
        .fock_probabilities(0)
        .ok_or_else(|| invalid("Fock probabilities were not recorded"))?;
    let outside: f64 = (0..graph.len())
        .filter(|&k| ctx.xc.indices().iter().map(|&i| graph.state(k)[i] as usize).sum::<usize>() > n0)
        .map(|k| p0[k])
        .sum();
    if outside > tolerance::NEGATIVE_CLIP {
        return Err(invalid(format!(
            "initial state puts probability {outside:.3e} on more than N0 = {n0} bosons outside X"
        )));
    }
    let in_target: Vec<bool> = (0..graph.len())
        .map(|k| ctx.y.indices().iter().map(|&i| graph.state(k)[i] as usize).sum::<usize>() >= n0 + dn0)
        .collect();
    let probability = |k: usize| -> f64 {
        let pk = traj.fock_probabilities(k).expect("recorded");
        pk.iter().zip(&in_target).filter(|(_, &t)| t).map(|(p, _)| p).sum()
    };

    let mut report = ctx.report(AuditKind::Result4);
    report.max_fraction = (0..traj.len()).map(probability).fold(0.0, f64::max);
    let costs = graph.cost_matrix()?;
    let n = ctx.params.n_bosons as f64;
    let times = ctx.normalize_times({
        let mut t = s.run.checkpoints.clone();
        t.push(traj.final_time());
        t
    });
    for &tau in &times {
        let k = traj.sample_index(tau)?;
        let prob = probability(k);
        let pt = traj.fock_probabilities(k).expect("recorded");
        let (w, gap) = balanced(p0, pt, &costs)?;
        let slack = gap * max_cost(&costs);
        let (integral, quad) = trapezoid(flow, traj.dt(), k);
        let bound = n * ctx.cost_rate * tau / (dn0 as f64 * ctx.d_pow);
        let r = &mut report.records;
        r.push(AuditRecord::new("lower", tau, dn0 as f64 * ctx.d_pow * prob, w, tolerance::AUDIT + slack));
        r.push(AuditRecord::new("flow_upper", tau, w, integral, tolerance::AUDIT + quad + slack));
        r.push(AuditRecord::new("state_cap", tau, integral, n * tau * ctx.cost_rate, tolerance::AUDIT + quad));
        r.push(AuditRecord::new("headline", tau, prob, bound, tolerance::AUDIT));
    }
    ctx.bounds(&mut report, &[BoundKind::ProbabilityBound])?;
    Ok(report)
}

/// Runs one audit on an existing simulation.
pub fn audit_with(kind: AuditKind, s: &Scenario, sim: &Simulation) -> Result<AuditReport> {
    match kind {
        AuditKind::Closed => audit_closed_with(s, sim),
        AuditKind::Result1 => audit_result1_with(s, sim),
        AuditKind::Result2 => audit_result2_with(s, sim),
        AuditKind::Result3 => audit_result3_with(s, sim),
        AuditKind::Result4 => audit_result4_with(s, sim),
    }
}

fn audit_single(kind: AuditKind, s: &Scenario) -> Result<AuditReport> {
    let mut s = s.clone();
    if !s.run.audits.contains(&kind) {
        s.run.audits.push(kind);
    }
    let sim = s.simulate()?;
    audit_with(kind, &s, &sim)
}

pub fn audit_closed(s: &Scenario) -> Result<AuditReport> {
    audit_single(AuditKind::Closed, s)
}

pub fn audit_result1(s: &Scenario) -> Result<AuditReport> {
    audit_single(AuditKind::Result1, s)
}

pub fn audit_result2(s: &Scenario) -> Result<AuditReport> {
    audit_single(AuditKind::Result2, s)
}

pub fn audit_result3(s: &Scenario) -> Result<AuditReport> {
    audit_single(AuditKind::Result3, s)
}

/// Probability audit with explicit `N0` and `delta_N0`.
pub fn audit_result4(s: &Scenario, n0: usize, delta_n0: usize) -> Result<AuditReport> {
    let mut s = s.clone();
    s.run.n0 = n0;
    s.run.delta_n0 = delta_n0;
    audit_single(AuditKind::Result4, &s)
}

/// Simulates once and runs every audit listed in the scenario.
pub fn run_audits(s: &Scenario) -> Result<(Simulation, Vec<AuditReport>)> {
    let sim = s.simulate()?;
    let reports = s
        .run
        .audits
        .iter()
        .map(|&k| audit_with(k, s, &sim))
        .collect::<Result<Vec<_>>>()?;
    Ok((sim, reports))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessPoint {
    pub site: usize,
    pub distance: f64,
    pub tau_emp: Option<f64>,
    /// `kappa_1 d^alpha_eps`.
    pub bound: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessReport {
    pub scenario: String,
    pub points: Vec<TightnessPoint>,
    /// Whether the reached ratios are monotone in distance (either direction).
    pub monotone: bool,
}

/// `tau_emp / (kappa_1 d^alpha_eps)` with every site outside `X` taken in turn as `Y`.
pub fn tightness_report_mott(s: &Scenario) -> Result<TightnessReport> {
    if !s.basis.hard_core {
        return Err(invalid("the tightness report needs hard-core bosons"));
    }
    let mut s = s.clone();
    s.run.audits.clear();
    let sim = s.simulate()?;
    let traj = &sim.trajectory;
    let lattice = s.lattice()?;
    let alpha_eps = s.alpha_eps()?;
    let p = s.bound_params(traj.normalization().round().max(1.0) as usize)?;
    let kappa = bounds::kappa1(&p)?;
    let mut points = Vec::new();
    for site in (0..lattice.len()).filter(|&i| !s.regions.x.contains(i)) {
        let y = Region::new([site]);
        let distance = lattice.region_distance(&s.regions.x, &y)?;
        let mut tau_emp = None;
        for &t in traj.times() {
            if transported_fraction_closed(traj, &s.regions.x, &y, t)? >= s.run.mu {
                tau_emp = Some(t);
                break;
            }
        }
        let bound = kappa * distance.powf(alpha_eps);
        points.push(TightnessPoint {
            site,
            distance,
            tau_emp,
            bound,
            ratio: tau_emp.map(|t| t / bound),
        });
    }
    points.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.site.cmp(&b.site)));
    let ratios: Vec<f64> = points.iter().filter_map(|p| p.ratio).collect();
    let monotone = ratios.windows(2).all(|w| w[1] >= w[0]) || ratios.windows(2).all(|w| w[1] <= w[0]);
    Ok(TightnessReport {
        scenario: s.name.clone(),
        points,
        monotone,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BCrosscheck {
    pub grid_max: f64,
    pub tau_at_max: f64,
    pub b_tau_c: f64,
    pub tau_c: Option<f64>,
    pub relative_mismatch: f64,
    pub agrees: bool,
    pub note: Option<String>,
}

/// Maximizes `A(tau)` on a log grid and compares with `B(tau_c)`.
pub fn crosscheck_b_function(p: &BoundParams) -> Result<BCrosscheck> {
    let dg = p.delta_gamma();
    if !(dg > 0.0) {
        return Err(invalid("the B crosscheck needs gamma1 > gamma2"));
    }
    let b = bounds::b_at_tau_c(p)?;
    let tc = bounds::tau_c(p)?;
    let (lo, hi) = ((1e-4 / dg).ln(), (1e4 / dg).ln());
    let steps = 4000;
    let (mut best, mut at) = (f64::NEG_INFINITY, 0.0);
    for k in 0..=steps {
        let t = (lo + (hi - lo) * k as f64 / steps as f64).exp();
        let a = bounds::gain_loss_lhs(t, p)?;
        if a > best {
            best = a;
            at = t;
        }
    }
    let mismatch = (best - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    let agrees = mismatch <= tolerance::B_CROSSCHECK;
    Ok(BCrosscheck {
        grid_max: best,
        tau_at_max: at,
        b_tau_c: b,
        tau_c: tc,
        relative_mismatch: mismatch,
        agrees,
        note: (!agrees).then(|| format!("grid maximum of A differs from B(tau_c) by {:.2}%", 100.0 * mismatch)),
    })
}
