use std::collections::HashMap;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use super::state::{BlockState, DensityMatrix};
use super::{Channel, DissipatorSpec};
use crate::error::{Error, Result};
use crate::fock::{FockBasis, OperatorMatrix};
use crate::sparse::SparseMatrix;

/// Partition of basis indices into blocks that the dynamics never couples.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    local: Vec<usize>,
}

impl BlockLayout {
    pub fn from_blocks(dim: usize, blocks: Vec<Vec<usize>>) -> Self {
        let mut block_of = vec![usize::MAX; dim];
        let mut local = vec![0; dim];
        for (b, idx) in blocks.iter().enumerate() {
            for (k, &i) in idx.iter().enumerate() {
                block_of[i] = b;
                local[i] = k;
            }
        }
        assert!(block_of.iter().all(|&b| b != usize::MAX), "blocks must cover the basis");
        Self {
            blocks,
            block_of,
            local,
        }
    }

    pub fn single(dim: usize) -> Self {
        Self::from_blocks(dim, vec![(0..dim).collect()])
    }

    /// One block per total particle number.
    pub fn by_total(basis: &FockBasis) -> Self {
        let mut blocks = vec![Vec::new(); basis.max_total() + 1];
        for k in 0..basis.len() {
            blocks[basis.total(k)].push(k);
        }
        blocks.retain(|b| !b.is_empty());
        Self::from_blocks(basis.len(), blocks)
    }

    pub fn dim(&self) -> usize {
        self.block_of.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    pub fn local(&self, i: usize) -> usize {
        self.local[i]
    }
}

#[derive(Debug, Clone)]
struct Jump {
    src: usize,
    dst: usize,
    rate: f64,
    /// Nonzero entries `(row, col, value)` in local block indices.
    entries: Vec<(usize, usize, f64)>,
}

/// Liouvillian compiled onto a block layout.
#[derive(Debug, Clone)]
pub(crate) struct Generator {
    layout: Arc<BlockLayout>,
    h: Vec<SparseMatrix>,
    /// `sum_c rate_c L_c^dagger L_c` per block.
    g: Vec<SparseMatrix>,
    jumps: Vec<Jump>,
    rate_bound: f64,
}

/// Splits `m` into per-block pieces; `None` if it couples different blocks.
fn split_diagonal(m: &SparseMatrix, layout: &BlockLayout) -> Option<Vec<SparseMatrix>> {
    let mut trip: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); layout.blocks().len()];
    for (r, c, v) in m.triplets() {
        let b = layout.block_of(r);
        if b != layout.block_of(c) {
            return None;
        }
        trip[b].push((layout.local(r), layout.local(c), v));
    }
    Some(
        trip.into_iter()
            .zip(layout.blocks())
            .map(|(t, idx)| SparseMatrix::from_triplets(idx.len(), idx.len(), t))
            .collect(),
    )
}

impl Generator {
    /// `None` when the operators are incompatible with the layout.
    pub(crate) fn compile(
        layout: Arc<BlockLayout>,
        hamiltonian: &SparseMatrix,
        channels: &[Channel],
    ) -> Result<Option<Self>> {
        let dim = layout.dim();
        if hamiltonian.rows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: hamiltonian.rows(),
            });
        }
        let Some(h) = split_diagonal(hamiltonian, &layout) else {
            return Ok(None);
        };
        let mut gamma = SparseMatrix::zeros(dim, dim);
        let mut jumps = Vec::new();
        for ch in channels {
            gamma = gamma.add(&ch.op.transpose().matmul(&ch.op)?.scale(ch.rate))?;
            let mut target: HashMap<usize, usize> = HashMap::new();
            let mut trip: HashMap<usize, Vec<(usize, usize, f64)>> = HashMap::new();
            for (r, c, v) in ch.op.triplets() {
                let (src, dst) = (layout.block_of(c), layout.block_of(r));
                if *target.entry(src).or_insert(dst) != dst {
                    return Ok(None);
                }
                trip.entry(src)
                    .or_default()
                    .push((layout.local(r), layout.local(c), v));
            }
            let mut srcs: Vec<usize> = trip.keys().copied().collect();
            srcs.sort_unstable();
            for src in srcs {
                let dst = target[&src];
                let mut entries = trip.remove(&src).unwrap();
                entries.sort_unstable_by_key(|e| (e.0, e.1));
                jumps.push(Jump {
                    src,
                    dst,
                    rate: ch.rate,
                    entries,
                });
            }
        }
        let Some(g) = split_diagonal(&gamma, &layout) else {
            return Ok(None);
        };
        let h_norm = h.iter().map(SparseMatrix::max_row_sum).fold(0.0, f64::max);
        let g_norm = g.iter().map(SparseMatrix::max_row_sum).fold(0.0, f64::max);
        Ok(Some(Self {
            layout,
            h,
            g,
            jumps,
            rate_bound: 2.0 * h_norm + 2.0 * g_norm,
        }))
    }

    pub(crate) fn layout(&self) -> &Arc<BlockLayout> {
        &self.layout
    }

    /// Upper estimate of the Liouvillian spectral radius.
    pub(crate) fn rate_bound(&self) -> f64 {
        self.rate_bound
    }

    /// `-i[H, rho] + sum_c rate_c (L rho L^dagger - {L^dagger L, rho}/2)`.
    pub(crate) fn apply(&self, rho: &BlockState, out: &mut BlockState) {
        for (b, (blk, dst)) in rho.blocks().iter().zip(out.blocks_mut()).enumerate() {
            // X = -i H rho - G rho / 2, then out = X + X^dagger
            dst.fill(Complex64::new(0.0, 0.0));
            accumulate(&self.h[b], blk, dst, Complex64::new(0.0, -1.0));
            accumulate(&self.g[b], blk, dst, Complex64::new(-0.5, 0.0));
            let n = dst.nrows();
            for r in 0..n {
                dst[[r, r]] = Complex64::new(2.0 * dst[[r, r]].re, 0.0);
                for c in r + 1..n {
                    let (a, b) = (dst[[r, c]], dst[[c, r]]);
                    dst[[r, c]] = a + b.conj();
                    dst[[c, r]] = b + a.conj();
                }
            }
        }
        for j in &self.jumps {
            // rate * L rho L^T, summed over pairs of nonzeros of L
            let src_block = &rho.blocks()[j.src];
            let ns = src_block.ncols();
            let src = src_block.as_slice().expect("standard layout");
            let dst_block = &mut out.blocks_mut()[j.dst];
            let nd = dst_block.ncols();
            let dst = dst_block.as_slice_mut().expect("standard layout");
            for &(r, k, v1) in &j.entries {
                let w = j.rate * v1;
                let row = &src[k * ns..(k + 1) * ns];
                let out_row = &mut dst[r * nd..(r + 1) * nd];
                for &(s, l, v2) in &j.entries {
                    out_row[s] += row[l] * (w * v2);
                }
            }
        }
    }
}

/// `dst += s * m * rho`.
fn accumulate(m: &SparseMatrix, rho: &Array2<Complex64>, dst: &mut Array2<Complex64>, s: Complex64) {
    let n = rho.ncols();
    let src = rho.as_slice().expect("standard layout");
    let out = dst.as_slice_mut().expect("standard layout");
    for r in 0..m.rows() {
        let dst_row = &mut out[r * n..(r + 1) * n];
        for (k, v) in m.row(r) {
            let sv = s * v;
            for (d, a) in dst_row.iter_mut().zip(&src[k * n..(k + 1) * n]) {
                *d += a * sv;
            }
        }
    }
}

/// Right-hand side of the master equation for a dense state.
pub fn lindblad_rhs(
    basis: &FockBasis,
    rho: &DensityMatrix,
    hamiltonian: &OperatorMatrix,
    dissipator: &DissipatorSpec,
) -> Result<Array2<Complex64>> {
    if rho.dim() != basis.len() || hamiltonian.dim() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: if rho.dim() != basis.len() {
                rho.dim()
            } else {
                hamiltonian.dim()
            },
        });
    }
    let channels = dissipator.channels(basis)?;
    let layout = Arc::new(BlockLayout::single(basis.len()));
    let generator = Generator::compile(layout.clone(), hamiltonian.sparse(), &channels)?
        .expect("a single block admits every operator");
    let state = BlockState::from_dense(rho, layout.clone()).expect("single block");
    let mut out = BlockState::zeros(layout);
    generator.apply(&state, &mut out);
    Ok(out.blocks()[0].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_basis, build_hamiltonian, InteractionSpec, Sector};
    use ndarray::array;

    #[test]
    fn single_jump_algebra() {
        let b = build_basis(1, 1, Sector::All).unwrap();
        let h = build_hamiltonian(&b, &Array2::zeros((1, 1)), &InteractionSpec::None).unwrap();
        let rho = DensityMatrix::fock(&b, &[1]).unwrap();
        let d = lindblad_rhs(&b, &rho, &h, &DissipatorSpec::OneBodyLoss { gamma: 0.3 }).unwrap();
        assert!((d[[0, 0]].re - 0.3).abs() < 1e-15);
        assert!((d[[1, 1]].re + 0.3).abs() < 1e-15);
        assert_eq!(d[[0, 1]], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn two_body_loss_dark_on_single_particle() {
        let b = build_basis(1, 3, Sector::All).unwrap();
        let h = build_hamiltonian(&b, &Array2::zeros((1, 1)), &InteractionSpec::None).unwrap();
        let rho = DensityMatrix::fock(&b, &[1]).unwrap();
        let d = lindblad_rhs(&b, &rho, &h, &DissipatorSpec::NBodyLoss { n: 2, gamma: 1.0 }).unwrap();
        assert!(d.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn layouts() {
        let b = build_basis(2, 2, Sector::All).unwrap();
        let l = BlockLayout::by_total(&b);
        assert_eq!(l.blocks().len(), 5);
        assert_eq!(l.blocks()[2].len(), 3);
        let h = build_hamiltonian(&b, &array![[0.0, 1.0], [1.0, 0.0]], &InteractionSpec::None).unwrap();
        let gl = DissipatorSpec::GainLoss {
            gamma1: 1.0,
            gamma2: 0.5,
            form: super::super::GainLossForm::TwoChannel,
        };
        let arc = Arc::new(l);
        let ok = Generator::compile(arc.clone(), h.sparse(), &gl.channels(&b).unwrap()).unwrap();
        assert!(ok.is_some());
        let single = DissipatorSpec::GainLoss {
            gamma1: 1.0,
            gamma2: 0.5,
            form: super::super::GainLossForm::SingleOperator,
        };
        let no = Generator::compile(arc, h.sparse(), &single.channels(&b).unwrap()).unwrap();
        assert!(no.is_none());
    }
}
