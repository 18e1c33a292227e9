use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::BoundParams;
use crate::error::{invalid, Error, Result};
use crate::fock::{build_basis, FockBasis, InteractionSpec, Sector};
use crate::lattice::{HoppingSpec, Lattice, Region};
use crate::lindblad::{DensityMatrix, DissipatorSpec, EvolveOptions, InitialState, Model, Trajectory};
use crate::ot::{fock_state_cost, StateCostGraph};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    Closed,
    Result1,
    Result2,
    Result3,
    Result4,
}

impl AuditKind {
    pub const ALL: [AuditKind; 5] = [
        AuditKind::Closed,
        AuditKind::Result1,
        AuditKind::Result2,
        AuditKind::Result3,
        AuditKind::Result4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AuditKind::Closed => "closed",
            AuditKind::Result1 => "result1",
            AuditKind::Result2 => "result2",
            AuditKind::Result3 => "result3",
            AuditKind::Result4 => "result4",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<usize>,
    pub extents: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsSpec {
    #[serde(rename = "X")]
    pub x: Region,
    #[serde(rename = "Y")]
    pub y: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    /// Per-site cap; ignored (and may be omitted) for hard-core bosons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
    #[serde(default)]
    pub hard_core: bool,
    #[serde(default = "sector_all")]
    pub sector: Sector,
}

fn sector_all() -> Sector {
    Sector::All
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(rename = "T")]
    pub t: f64,
    pub dt: f64,
    #[serde(default = "one")]
    pub mu: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub audits: Vec<AuditKind>,
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    /// Shell constant; computed from the lattice when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(rename = "N0", default)]
    pub n0: usize,
    #[serde(rename = "delta_N0", default = "one_usize")]
    pub delta_n0: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            formats: default_formats(),
        }
    }
}

/// Everything needed to simulate and audit one transport experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub lattice: LatticeSpec,
    pub regions: RegionsSpec,
    pub hopping: HoppingSpec,
    #[serde(default)]
    pub interaction: InteractionSpec,
    #[serde(default)]
    pub dissipator: DissipatorSpec,
    pub basis: BasisSpec,
    pub initial_state: InitialState,
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Reads a file, naming it in the error.
pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Parses JSON, reporting the offending key path on failure.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = parse_json(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let mut s = Self::from_json(&text)?;
        if s.name.is_empty() {
            s.name = path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(s)
    }

    pub fn lattice(&self) -> Result<Lattice> {
        if let Some(d) = self.lattice.dims {
            if d != self.lattice.extents.len() {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: self.lattice.extents.len(),
                });
            }
        }
        Lattice::new(&self.lattice.extents)
    }

    pub fn basis(&self) -> Result<FockBasis> {
        let m = self.lattice()?.len();
        let b = &self.basis;
        if b.hard_core {
            if b.n_max.is_some_and(|n| n != 1) {
                return Err(invalid("hard-core bosons need n_max = 1"));
            }
            FockBasis::hard_core(m, b.sector)
        } else {
            let n_max = b.n_max.ok_or_else(|| invalid("basis.n_max is required unless hard_core is set"))?;
            build_basis(m, n_max, b.sector)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lattice = self.lattice()?;
        let (x, y) = (&self.regions.x, &self.regions.y);
        for r in [x, y] {
            if r.is_empty() {
                return Err(Error::EmptyRegion);
            }
            r.check(&lattice)?;
        }
        if let Some(&i) = x.indices().iter().find(|&&i| y.contains(i)) {
            return Err(Error::OverlappingRegions(i));
        }
        self.hopping.validate(&lattice)?;
        self.interaction.validate(lattice.len())?;
        self.dissipator.validate()?;
        let run = &self.run;
        if !(run.mu > 0.0 && run.mu <= 1.0) {
            return Err(invalid(format!("mu = {} must lie in (0, 1]", run.mu)));
        }
        if !(run.dt > 0.0 && run.dt.is_finite()) {
            return Err(invalid(format!("dt = {} must be positive", run.dt)));
        }
        if !(run.t > 0.0 && run.t.is_finite()) {
            return Err(invalid(format!("T = {} must be positive", run.t)));
        }
        on_grid(run.t, run.dt)?;
        for &c in &run.checkpoints {
            if !(0.0..=run.t * (1.0 + tolerance::GRID)).contains(&c) {
                return Err(invalid(format!("checkpoint {c} lies outside [0, T]")));
            }
            on_grid(c, run.dt)?;
        }
        if let Some(phi) = run.phi {
            if !(phi > 0.0 && phi.is_finite()) {
                return Err(invalid(format!("phi = {phi} must be positive")));
            }
        }
        crate::bounds::alpha_eps(self.hopping.alpha, lattice.dimension(), run.epsilon)?;
        if run.delta_n0 == 0 {
            return Err(invalid("delta_N0 must be at least 1"));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<Model> {
        let lattice = self.lattice()?;
        Model::new(
            self.basis()?,
            self.hopping.matrix(&lattice)?,
            &self.interaction,
            self.dissipator.clone(),
        )
    }

    pub fn d_xy(&self) -> Result<f64> {
        self.lattice()?.region_distance(&self.regions.x, &self.regions.y)
    }

    pub fn phi(&self) -> Result<f64> {
        match self.run.phi {
            Some(phi) => Ok(phi),
            None => self.lattice()?.shell_constant_full(),
        }
    }

    pub fn alpha_eps(&self) -> Result<f64> {
        crate::bounds::alpha_eps(self.hopping.alpha, self.lattice.extents.len(), self.run.epsilon)
    }

    /// Bound parameters for this scenario with the given boson number.
    pub fn bound_params(&self, n_bosons: usize) -> Result<BoundParams> {
        let lattice = self.lattice()?;
        let mut p = BoundParams::new(
            self.hopping.j,
            self.phi()?,
            self.hopping.alpha,
            lattice.dimension(),
            self.run.epsilon,
        );
        p.mu = self.run.mu;
        p.n_bosons = n_bosons.max(1);
        p.lattice_size = lattice.len();
        match self.dissipator {
            DissipatorSpec::OneBodyLoss { gamma } | DissipatorSpec::NBodyLoss { gamma, .. } => p.gamma = gamma,
            DissipatorSpec::GainLoss { gamma1, gamma2, .. } => {
                p.gamma1 = gamma1;
                p.gamma2 = gamma2;
            }
            DissipatorSpec::None => {}
        }
        Ok(p)
    }

    /// Runs the dynamics and records what the requested audits need.
    pub fn simulate(&self) -> Result<Simulation> {
        self.validate()?;
        let model = self.model()?;
        let rho0 = self.initial_state.build(model.basis())?;
        let wants = |k: AuditKind| self.run.audits.contains(&k);
        let opts = EvolveOptions {
            record_fock: wants(AuditKind::Result4),
            record_loss_rates: matches!(self.dissipator, DissipatorSpec::NBodyLoss { .. }),
            ..EvolveOptions::default()
        };
        if wants(AuditKind::Result4) {
            let graph = fock_state_cost(&self.lattice()?, model.basis(), loss_order(&self.dissipator), self.alpha_eps()?)?;
            let flows = state_flow_terms(&model, &graph);
            let mut integrand = Vec::new();
            let trajectory = model.evolve_observed(&rho0, self.run.t, self.run.dt, &opts, |_, _, rho| {
                integrand.push(
                    flows
                        .iter()
                        .map(|&(a, b, h, c)| c * (2.0 * h * rho.get(b, a).im).abs())
                        .sum::<f64>(),
                );
                Ok(())
            })?;
            let sim = Simulation {
                trajectory,
                rho0,
                state_graph: Some(graph),
                state_flow: Some(integrand),
            };
            return sim.checked();
        }
        let trajectory = model.evolve(&rho0, self.run.t, self.run.dt, &opts)?;
        Simulation {
            trajectory,
            rho0,
            state_graph: None,
            state_flow: None,
        }
        .checked()
    }
}

fn on_grid(t: f64, dt: f64) -> Result<()> {
    let k = (t / dt).round();
    if (k * dt - t).abs() > tolerance::GRID * t.abs().max(1.0) {
        return Err(Error::OffGrid(t));
    }
    Ok(())
}

/// Particles removed by one loss event; `0` without loss.
fn loss_order(d: &DissipatorSpec) -> u32 {
    match *d {
        DissipatorSpec::OneBodyLoss { .. } => 1,
        DissipatorSpec::NBodyLoss { n, .. } => n,
        _ => 0,
    }
}

/// `(N, K, H_NK, c)` over hop pairs `N < K`, with `c` the mean of the two directed costs.
fn state_flow_terms(model: &Model, graph: &StateCostGraph) -> Vec<(usize, usize, f64, f64)> {
    model
        .hamiltonian()
        .sparse()
        .triplets()
        .filter(|&(a, b, _)| a < b)
        .map(|(a, b, h)| (a, b, h, 0.5 * (graph.cost(a, b) + graph.cost(b, a))))
        .collect()
}

/// A finished run: the trajectory plus the state-space data for probability audits.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub trajectory: Trajectory,
    pub rho0: DensityMatrix,
    pub state_graph: Option<StateCostGraph>,
    /// `1/2 sum_{N != K} c_NK |F_NK(t)|` per sample, with `F_NK = 2 H_NK Im rho_KN`.
    pub state_flow: Option<Vec<f64>>,
}

impl Simulation {
    fn checked(self) -> Result<Self> {
        let leakage = self.trajectory.max_leakage();
        if leakage > tolerance::LEAKAGE {
            return Err(Error::UntrustedTruncation {
                leakage,
                limit: tolerance::LEAKAGE,
            });
        }
        Ok(self)
    }
}
