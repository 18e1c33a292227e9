use std::sync::Arc;

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::generator::BlockLayout;
use crate::error::{invalid, Error, Result};
use crate::fock::FockBasis;
use crate::tolerance;

/// Hermitian, unit-trace state over a `FockBasis`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: Array2<Complex64>,
}

fn min_hermitian_eigenvalue(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let dm = DMatrix::from_fn(n, n, |r, c| m[[r, c]]);
    dm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

fn hermitian_deviation(m: &Array2<Complex64>) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            worst = worst.max((m[[r, c]] - m[[c, r]].conj()).norm());
        }
    }
    worst
}

impl DensityMatrix {
    /// Checks Hermiticity and unit trace; positivity is checked separately.
    pub fn new(data: Array2<Complex64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.nrows(),
                got: data.ncols(),
            });
        }
        if data.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let dev = hermitian_deviation(&data);
        if dev > tolerance::STATE_HERMITIAN {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:.3e})")));
        }
        let tr = data.diag().iter().map(|z| z.re).sum::<f64>();
        if (tr - 1.0).abs() > tolerance::STATE_TRACE {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        Ok(Self { data })
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let n = psi.len();
        let data = Array2::from_shape_fn((n, n), |(r, c)| psi[r] * psi[c].conj() / norm2);
        Self::new(data)
    }

    pub fn fock(basis: &FockBasis, occupations: &[u32]) -> Result<Self> {
        if occupations.len() != basis.sites() {
            return Err(Error::DimensionMismatch {
                expected: basis.sites(),
                got: occupations.len(),
            });
        }
        let k = basis
            .index_of(occupations)
            .ok_or_else(|| Error::InvalidState(format!("{occupations:?} is not in the basis")))?;
        Self::diagonal_at(basis.len(), &[(k, 1.0)])
    }

    /// Classical mixture of basis states.
    pub fn mixture(dim: usize, probabilities: &[f64]) -> Result<Self> {
        if probabilities.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: probabilities.len(),
            });
        }
        if probabilities.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidState("negative probability".into()));
        }
        let entries: Vec<(usize, f64)> = probabilities.iter().copied().enumerate().collect();
        Self::diagonal_at(dim, &entries)
    }

    fn diagonal_at(dim: usize, entries: &[(usize, f64)]) -> Result<Self> {
        let mut data = Array2::zeros((dim, dim));
        for &(k, p) in entries {
            data[[k, k]] = Complex64::new(p, 0.0);
        }
        Self::new(data)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[[r, c]]
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().iter().map(|z| z.re).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.data)
    }

    /// Full invariant check including the eigenvalue floor.
    pub fn validate(&self) -> Result<()> {
        let lo = self.min_eigenvalue();
        if lo < tolerance::POSITIVITY_FLOOR {
            return Err(Error::InvalidState(format!("minimum eigenvalue {lo:.3e}")));
        }
        Ok(())
    }
}

/// Density matrix stored as dense blocks of a `BlockLayout`; entries between blocks are zero.
#[derive(Debug, Clone)]
pub struct BlockState {
    layout: Arc<BlockLayout>,
    blocks: Vec<Array2<Complex64>>,
}

impl BlockState {
    pub(crate) fn zeros(layout: Arc<BlockLayout>) -> Self {
        let blocks = layout
            .blocks()
            .iter()
            .map(|b| Array2::zeros((b.len(), b.len())))
            .collect();
        Self { layout, blocks }
    }

    /// `None` when `rho` has coherences between blocks.
    pub(crate) fn from_dense(rho: &DensityMatrix, layout: Arc<BlockLayout>) -> Option<Self> {
        let m = rho.matrix();
        let scale = m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if layout.block_of(r) != layout.block_of(c) && m[[r, c]].norm() > 1e-15 * scale {
                    return None;
                }
            }
        }
        let blocks = layout
            .blocks()
            .iter()
            .map(|idx| Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| m[[idx[a], idx[b]]]))
            .collect();
        Some(Self { layout, blocks })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn blocks(&self) -> &[Array2<Complex64>] {
        &self.blocks
    }

    pub(crate) fn blocks_mut(&mut self) -> &mut [Array2<Complex64>] {
        &mut self.blocks
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Entry at global basis indices.
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let b = self.layout.block_of(r);
        if b != self.layout.block_of(c) {
            return Complex64::new(0.0, 0.0);
        }
        self.blocks[b][[self.layout.local(r), self.layout.local(c)]]
    }

    pub fn population(&self, k: usize) -> f64 {
        self.get(k, k).re
    }

    pub fn trace(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.diag().iter().map(|z| z.re).sum::<f64>())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|z| z.is_finite()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(min_hermitian_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn hermitize(&mut self) {
        for b in &mut self.blocks {
            let n = b.nrows();
            for r in 0..n {
                b[[r, r]].im = 0.0;
                for c in r + 1..n {
                    let avg = 0.5 * (b[[r, c]] + b[[c, r]].conj());
                    b[[r, c]] = avg;
                    b[[c, r]] = avg.conj();
                }
            }
        }
    }

    /// `self += s * other`.
    pub(crate) fn axpy(&mut self, s: f64, other: &BlockState) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.scaled_add(Complex64::new(s, 0.0), b);
        }
    }

    pub fn to_dense(&self) -> Result<DensityMatrix> {
        let n = self.dim();
        let mut data = Array2::zeros((n, n));
        for (blk, idx) in self.blocks.iter().zip(self.layout.blocks()) {
            for (a, &r) in idx.iter().enumerate() {
                for (b, &c) in idx.iter().enumerate() {
                    data[[r, c]] = blk[[a, b]];
                }
            }
        }
        DensityMatrix::new(data)
    }
}

/// Initial-state library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Product Fock state.
    Fock { occupations: Vec<u32> },
    /// Product of truncated coherent states with real amplitudes, projected onto the basis.
    Coherent { amplitudes: Vec<f64> },
    /// Uniform mixture of all basis states with the given particle number.
    SectorUniform { total: usize },
}

impl InitialState {
    pub fn build(&self, basis: &FockBasis) -> Result<DensityMatrix> {
        match self {
            InitialState::Fock { occupations } => DensityMatrix::fock(basis, occupations),
            InitialState::Coherent { amplitudes } => {
                if amplitudes.len() != basis.sites() {
                    return Err(Error::DimensionMismatch {
                        expected: basis.sites(),
                        got: amplitudes.len(),
                    });
                }
                if amplitudes.iter().any(|a| !a.is_finite()) {
                    return Err(invalid("coherent amplitudes must be finite"));
                }
                // alpha^n / sqrt(n!) per site; the global e^{-|alpha|^2/2} drops out on normalization
                let psi: Vec<Complex64> = basis
                    .states()
                    .iter()
                    .map(|s| {
                        let amp: f64 = s
                            .iter()
                            .zip(amplitudes)
                            .map(|(&n, &a)| {
                                (1..=n).fold(1.0, |acc, k| acc * a / (k as f64).sqrt())
                            })
                            .product();
                        Complex64::new(amp, 0.0)
                    })
                    .collect();
                DensityMatrix::pure(&psi)
            }
            InitialState::SectorUniform { total } => {
                let members: Vec<usize> = (0..basis.len()).filter(|&k| basis.total(k) == *total).collect();
                if members.is_empty() {
                    return Err(Error::InvalidState(format!("no basis states with {total} particles")));
                }
                let mut p = vec![0.0; basis.len()];
                let w = 1.0 / members.len() as f64;
                for k in members {
                    p[k] = w;
                }
                DensityMatrix::mixture(basis.len(), &p)
            }
        }
    }
}
