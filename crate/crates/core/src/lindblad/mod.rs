//! Lindblad dynamics on truncated Fock spaces and the observables read off trajectories.

mod generator;
mod model;
mod observables;
mod state;

pub use generator::{lindblad_rhs, BlockLayout};
pub use model::{EvolveOptions, Model, Trajectory};
pub use observables::{
    currents, dark_state_gain_loss, dark_state_residual, fock_probabilities, loss_rate_multi_body,
    occupation_fractions, weighted_currents,
};
pub use state::{BlockState, DensityMatrix, InitialState};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fock::{annihilation, annihilation_power, creation, FockBasis};
use crate::sparse::SparseMatrix;

/// How gain and loss enter the master equation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainLossForm {
    /// Separate channels `b` at rate `gamma1` and `b^dagger` at rate `gamma2`.
    #[default]
    TwoChannel,
    /// One channel `sqrt(gamma1) b + sqrt(gamma2) b^dagger` per site.
    SingleOperator,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DissipatorSpec {
    #[default]
    None,
    OneBodyLoss {
        gamma: f64,
    },
    NBodyLoss {
        n: u32,
        gamma: f64,
    },
    GainLoss {
        gamma1: f64,
        gamma2: f64,
        #[serde(default)]
        form: GainLossForm,
    },
}

/// One jump operator `L` with its rate; `shifts` lists the particle-number changes it can cause.
#[derive(Debug, Clone)]
pub struct Channel {
    pub site: usize,
    pub rate: f64,
    pub op: SparseMatrix,
    pub shifts: Vec<i32>,
}

impl DissipatorSpec {
    pub fn validate(&self) -> Result<()> {
        let rates: Vec<f64> = match *self {
            DissipatorSpec::None => vec![],
            DissipatorSpec::OneBodyLoss { gamma } => vec![gamma],
            DissipatorSpec::NBodyLoss { n, gamma } => {
                if n < 2 {
                    return Err(invalid(format!("n-body loss needs n >= 2, got {n}")));
                }
                vec![gamma]
            }
            DissipatorSpec::GainLoss { gamma1, gamma2, .. } => {
                if gamma2 > gamma1 {
                    return Err(invalid(format!(
                        "gain rate {gamma2} exceeds loss rate {gamma1}"
                    )));
                }
                vec![gamma1, gamma2]
            }
        };
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(invalid("dissipation rates must be finite and nonnegative"));
        }
        Ok(())
    }

    /// Rate with which the total particle number relaxes: `gamma` for one-body loss, `gamma1 - gamma2` for gain-loss.
    pub fn relaxation_rate(&self) -> f64 {
        match *self {
            DissipatorSpec::OneBodyLoss { gamma } => gamma,
            DissipatorSpec::GainLoss { gamma1, gamma2, .. } => gamma1 - gamma2,
            _ => 0.0,
        }
    }

    /// Jump operators on every site; zero-rate channels are dropped.
    pub fn channels(&self, basis: &FockBasis) -> Result<Vec<Channel>> {
        self.validate()?;
        let mut out = Vec::new();
        for site in 0..basis.sites() {
            match *self {
                DissipatorSpec::None => {}
                DissipatorSpec::OneBodyLoss { gamma } => out.push(Channel {
                    site,
                    rate: gamma,
                    op: annihilation(basis, site)?.into_sparse(),
                    shifts: vec![-1],
                }),
                DissipatorSpec::NBodyLoss { n, gamma } => out.push(Channel {
                    site,
                    rate: gamma,
                    op: annihilation_power(basis, site, n)?.into_sparse(),
                    shifts: vec![-(n as i32)],
                }),
                DissipatorSpec::GainLoss {
                    gamma1,
                    gamma2,
                    form: GainLossForm::TwoChannel,
                } => {
                    out.push(Channel {
                        site,
                        rate: gamma1,
                        op: annihilation(basis, site)?.into_sparse(),
                        shifts: vec![-1],
                    });
                    out.push(Channel {
                        site,
                        rate: gamma2,
                        op: creation(basis, site)?.into_sparse(),
                        shifts: vec![1],
                    });
                }
                DissipatorSpec::GainLoss {
                    gamma1,
                    gamma2,
                    form: GainLossForm::SingleOperator,
                } => {
                    let b = annihilation(basis, site)?.into_sparse();
                    let op = b.scale(gamma1.sqrt()).add(&b.transpose().scale(gamma2.sqrt()))?;
                    out.push(Channel {
                        site,
                        rate: 1.0,
                        op,
                        shifts: vec![-1, 1],
                    });
                }
            }
        }
        out.retain(|c| c.rate > 0.0 && c.op.nnz() > 0);
        Ok(out)
    }
}

impl DissipatorSpec {
    /// Particle-number changes of all active channels on one site.
    pub(crate) fn active_shifts(&self) -> Vec<i32> {
        match *self {
            DissipatorSpec::None => vec![],
            DissipatorSpec::OneBodyLoss { gamma } => [(gamma, -1)].iter().filter(|c| c.0 > 0.0).map(|c| c.1).collect(),
            DissipatorSpec::NBodyLoss { n, gamma } => {
                if gamma > 0.0 {
                    vec![-(n as i32)]
                } else {
                    vec![]
                }
            }
            DissipatorSpec::GainLoss { gamma1, gamma2, .. } => [(gamma1, -1), (gamma2, 1)]
                .iter()
                .filter(|c| c.0 > 0.0)
                .map(|c| c.1)
                .collect(),
        }
    }
}
