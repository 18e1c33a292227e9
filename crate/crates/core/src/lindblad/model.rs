use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use serde::Serialize;

use super::generator::{BlockLayout, Generator};
use super::observables::{falling, hop_terms, im_trace, site_expectations};
use super::state::{BlockState, DensityMatrix};
use super::{Channel, DissipatorSpec};
use crate::error::{invalid, Error, Result};
use crate::fock::{build_hamiltonian, FockBasis, InteractionSpec, OperatorMatrix};
use crate::tolerance;

/// RK4 is stable for `dt * rate_bound` below about 2.8; keep a margin.
const STABILITY_LIMIT: f64 = 2.5;

/// A Hamiltonian plus dissipator on a fixed basis.
/// Bond `(i, j)` with the `(row, col, amplitude)` entries of `b_i^dagger b_j`.
type Hop = (usize, usize, Vec<(usize, usize, f64)>);

#[derive(Debug, Clone)]
pub struct Model {
    basis: FockBasis,
    hopping: Array2<f64>,
    hamiltonian: OperatorMatrix,
    dissipator: DissipatorSpec,
    channels: Vec<Channel>,
    hops: Vec<Hop>,
    edge: Vec<bool>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvolveOptions {
    /// Steps between positivity checks; `None` picks about 16 checks per run.
    pub check_every: Option<usize>,
    pub record_fock: bool,
    /// Recorded automatically for multi-body loss.
    pub record_loss_rates: bool,
    /// Use the single-block layout even when a sector layout is possible.
    pub force_dense: bool,
}

impl Model {
    pub fn new(
        basis: FockBasis,
        hopping: Array2<f64>,
        interaction: &InteractionSpec,
        dissipator: DissipatorSpec,
    ) -> Result<Self> {
        let hamiltonian = build_hamiltonian(&basis, &hopping, interaction)?;
        let channels = dissipator.channels(&basis)?;
        let m = basis.sites();
        let mut hops = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                if hopping[[i, j]] != 0.0 {
                    hops.push((i, j, hop_terms(&basis, i, j)));
                }
            }
        }
        let edge = edge_states(&basis, &hopping, &dissipator);
        Ok(Self {
            basis,
            hopping,
            hamiltonian,
            dissipator,
            channels,
            hops,
            edge,
        })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn hopping(&self) -> &Array2<f64> {
        &self.hopping
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn dissipator(&self) -> &DissipatorSpec {
        &self.dissipator
    }

    /// States from which the generator reaches outside the truncated space.
    pub fn edge_states(&self) -> &[bool] {
        &self.edge
    }

    fn generator(&self, rho0: &DensityMatrix, force_dense: bool) -> Result<(Generator, BlockState)> {
        if !force_dense {
            let layout = Arc::new(BlockLayout::by_total(&self.basis));
            if let Some(state) = BlockState::from_dense(rho0, layout.clone()) {
                if let Some(g) = Generator::compile(layout, self.hamiltonian.sparse(), &self.channels)? {
                    return Ok((g, state));
                }
            }
        }
        let layout = Arc::new(BlockLayout::single(self.basis.len()));
        let g = Generator::compile(layout.clone(), self.hamiltonian.sparse(), &self.channels)?
            .expect("a single block admits every operator");
        let state = BlockState::from_dense(rho0, layout).expect("single block");
        Ok((g, state))
    }

    /// Largest stable step for this model.
    pub fn max_stable_dt(&self) -> Result<f64> {
        let layout = Arc::new(BlockLayout::single(self.basis.len()));
        let g = Generator::compile(layout, self.hamiltonian.sparse(), &self.channels)?
            .expect("a single block admits every operator");
        Ok(STABILITY_LIMIT / g.rate_bound().max(f64::MIN_POSITIVE))
    }

    pub fn evolve(&self, rho0: &DensityMatrix, t_final: f64, dt: f64, opts: &EvolveOptions) -> Result<Trajectory> {
        self.evolve_observed(rho0, t_final, dt, opts, |_, _, _| Ok(()))
    }

    /// Fixed-step RK4 from `0` to `t_final`; `observer(k, t_k, rho)` sees every sample.
    pub fn evolve_observed(
        &self,
        rho0: &DensityMatrix,
        t_final: f64,
        dt: f64,
        opts: &EvolveOptions,
        mut observer: impl FnMut(usize, f64, &BlockState) -> Result<()>,
    ) -> Result<Trajectory> {
        if rho0.dim() != self.basis.len() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.len(),
                got: rho0.dim(),
            });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt = {dt} must be positive")));
        }
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(invalid(format!("T = {t_final} must be nonnegative")));
        }
        let steps_f = (t_final / dt).round();
        if (steps_f * dt - t_final).abs() > tolerance::GRID * t_final.max(1.0) {
            return Err(invalid(format!("T = {t_final} is not a multiple of dt = {dt}")));
        }
        let steps = steps_f as usize;
        let n = self.normalization(rho0);
        if !(n > 0.0) {
            return Err(Error::InvalidState("initial state holds no particles".into()));
        }
        let (generator, mut rho) = self.generator(rho0, opts.force_dense)?;
        let bound = generator.rate_bound();
        if dt * bound > STABILITY_LIMIT {
            return Err(Error::StepTooLarge {
                dt,
                suggested: STABILITY_LIMIT / bound,
            });
        }
        let check_every = opts.check_every.unwrap_or((steps / 16).max(1)).max(1);
        let record_loss = opts.record_loss_rates || matches!(self.dissipator, DissipatorSpec::NBodyLoss { .. });
        let mut traj = Trajectory::new(self, n, dt, record_loss, opts.record_fock);
        traj.push(self, &rho, 0.0);
        observer(0, 0.0, &rho)?;

        let layout = generator.layout().clone();
        let mut k1 = BlockState::zeros(layout.clone());
        let mut k2 = BlockState::zeros(layout.clone());
        let mut k3 = BlockState::zeros(layout.clone());
        let mut k4 = BlockState::zeros(layout);
        for step in 1..=steps {
            generator.apply(&rho, &mut k1);
            let mut tmp = rho.clone();
            tmp.axpy(0.5 * dt, &k1);
            generator.apply(&tmp, &mut k2);
            tmp.clone_from(&rho);
            tmp.axpy(0.5 * dt, &k2);
            generator.apply(&tmp, &mut k3);
            tmp.clone_from(&rho);
            tmp.axpy(dt, &k3);
            generator.apply(&tmp, &mut k4);
            rho.axpy(dt / 6.0, &k1);
            rho.axpy(dt / 3.0, &k2);
            rho.axpy(dt / 3.0, &k3);
            rho.axpy(dt / 6.0, &k4);
            rho.hermitize();

            let t = step as f64 * dt;
            let tr = rho.trace();
            if !rho.is_finite() || (tr - 1.0).abs() > tolerance::TRACE_DRIFT {
                return Err(Error::StepTooLarge { dt, suggested: dt / 4.0 });
            }
            if step % check_every == 0 || step == steps {
                let lo = rho.min_eigenvalue();
                if lo < tolerance::POSITIVITY_FLOOR {
                    return Err(Error::InvalidState(format!(
                        "minimum eigenvalue {lo:.3e} at t = {t}"
                    )));
                }
            }
            traj.push(self, &rho, t);
            observer(step, t, &rho)?;
        }
        Ok(traj)
    }

    /// `tr(N rho)`, the particle count fractions are normalized by.
    pub fn normalization(&self, rho: &DensityMatrix) -> f64 {
        (0..self.basis.len())
            .map(|k| self.basis.total(k) as f64 * rho.get(k, k).re)
            .sum()
    }

    fn leakage(&self, rho: &BlockState) -> f64 {
        self.edge
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .map(|(k, _)| rho.population(k))
            .sum()
    }
}

/// A state is an edge state when some hop or gain term maps it outside the basis.
/// Hard-core bases treat double occupancy as excluded rather than truncated.
fn edge_states(basis: &FockBasis, hopping: &Array2<f64>, dissipator: &DissipatorSpec) -> Vec<bool> {
    let m = basis.sites();
    let shifts = dissipator.active_shifts();
    let mut target = vec![0u32; m];
    (0..basis.len())
        .map(|k| {
            let s = basis.state(k);
            let hop_out = (0..m).any(|i| {
                basis.hop_escapes(k, i) && (0..m).any(|j| j != i && s[j] > 0 && hopping[[i, j]] != 0.0)
            });
            let channel_out = (0..m).any(|i| {
                shifts.iter().any(|&d| {
                    let after = s[i] as i64 + d as i64;
                    if after < 0 {
                        return false;
                    }
                    if d > 0 {
                        return basis.creation_escapes(k, i);
                    }
                    target.copy_from_slice(s);
                    target[i] = after as u32;
                    basis.index_of(&target).is_none()
                })
            });
            hop_out || channel_out
        })
        .collect()
}

/// Observables sampled on the time grid `t_k = k dt`.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    sites: usize,
    dt: f64,
    normalization: f64,
    dissipator: DissipatorSpec,
    hopping: Vec<f64>,
    times: Vec<f64>,
    occupations: Vec<Vec<f64>>,
    /// Row-major `m x m` current matrices.
    currents: Vec<Vec<f64>>,
    total: Vec<f64>,
    leakage: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    loss_rates: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fock_probabilities: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fock_states: Option<Vec<Vec<u32>>>,
}

impl Trajectory {
    fn new(model: &Model, normalization: f64, dt: f64, loss: bool, fock: bool) -> Self {
        Self {
            sites: model.basis.sites(),
            dt,
            normalization,
            dissipator: model.dissipator.clone(),
            hopping: model.hopping.iter().copied().collect(),
            times: Vec::new(),
            occupations: Vec::new(),
            currents: Vec::new(),
            total: Vec::new(),
            leakage: Vec::new(),
            loss_rates: loss.then(Vec::new),
            fock_probabilities: fock.then(Vec::new),
            fock_states: fock.then(|| model.basis.states().to_vec()),
        }
    }

    fn push(&mut self, model: &Model, rho: &BlockState, t: f64) {
        let n = self.normalization;
        let m = self.sites;
        let x: Vec<f64> = site_expectations(&model.basis, rho, |k| k as f64)
            .into_iter()
            .map(|v| v / n)
            .collect();
        let mut phi = vec![0.0; m * m];
        for (i, j, terms) in &model.hops {
            let v = 2.0 * model.hopping[[*i, *j]] * im_trace(terms, rho) / n;
            phi[i * m + j] = v;
            phi[j * m + i] = -v;
        }
        self.total.push(x.iter().sum());
        self.occupations.push(x);
        self.currents.push(phi);
        self.leakage.push(model.leakage(rho));
        self.times.push(t);
        if let Some(lr) = &mut self.loss_rates {
            let (order, gamma) = match model.dissipator {
                DissipatorSpec::NBodyLoss { n, gamma } => (n, gamma),
                DissipatorSpec::OneBodyLoss { gamma } => (1, gamma),
                _ => (1, 0.0),
            };
            let scale = gamma * order as f64 / n;
            lr.push(
                site_expectations(&model.basis, rho, |k| falling(k, order))
                    .into_iter()
                    .map(|v| v * scale)
                    .collect(),
            );
        }
        if let Some(fp) = &mut self.fock_probabilities {
            fp.push((0..model.basis.len()).map(|k| rho.population(k)).collect());
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Particle count the fractions are normalized by.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn dissipator(&self) -> &DissipatorSpec {
        &self.dissipator
    }

    pub fn hopping(&self, i: usize, j: usize) -> f64 {
        self.hopping[i * self.sites + j]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn occupations(&self, k: usize) -> &[f64] {
        &self.occupations[k]
    }

    pub fn current(&self, k: usize, i: usize, j: usize) -> f64 {
        self.currents[k][i * self.sites + j]
    }

    pub fn current_matrix(&self, k: usize) -> Array2<f64> {
        Array2::from_shape_vec((self.sites, self.sites), self.currents[k].clone()).expect("m x m")
    }

    pub fn total(&self, k: usize) -> f64 {
        self.total[k]
    }

    pub fn leakage(&self, k: usize) -> f64 {
        self.leakage[k]
    }

    pub fn max_leakage(&self) -> f64 {
        self.leakage.iter().copied().fold(0.0, f64::max)
    }

    pub fn loss_rates(&self, k: usize) -> Option<&[f64]> {
        self.loss_rates.as_ref().map(|v| v[k].as_slice())
    }

    pub fn fock_probabilities(&self, k: usize) -> Option<&[f64]> {
        self.fock_probabilities.as_ref().map(|v| v[k].as_slice())
    }

    /// Index `k` with `t = k dt`; times off the grid are refused rather than interpolated.
    pub fn sample_index(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        if !(k >= 0.0) || (k * self.dt - t).abs() > tolerance::GRID * t.abs().max(1.0) || k as usize >= self.len() {
            return Err(Error::OffGrid(t));
        }
        Ok(k as usize)
    }

    /// Columns `t, x_0.., total, leakage`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.sites).map(|i| format!("x_{i}")));
        header.push("total".into());
        header.push("leakage".into());
        out.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![format!("{}", self.times[k])];
            row.extend(self.occupations[k].iter().map(|v| format!("{v:e}")));
            row.push(format!("{:e}", self.total[k]));
            row.push(format!("{:e}", self.leakage[k]));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }
}
