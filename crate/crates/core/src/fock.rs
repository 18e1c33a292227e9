//! Truncated occupation-number bases, ladder operators and the lattice Hamiltonian.

use std::collections::HashMap;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sparse::SparseMatrix;
use crate::tolerance;

pub const DEFAULT_DIM_CAP: usize = 20_000;
pub const DIM_CAP_ENV: &str = "BOSE_TRANSIT_DIM_CAP";

/// Basis dimension cap, overridable through `BOSE_TRANSIT_DIM_CAP`.
pub fn dimension_cap() -> usize {
    std::env::var(DIM_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DIM_CAP)
}

/// Restriction on the total particle number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    All,
    Exactly(usize),
    AtMost(usize),
}

impl Sector {
    fn admits(self, total: usize) -> bool {
        match self {
            Sector::All => true,
            Sector::Exactly(n) => total == n,
            Sector::AtMost(n) => total <= n,
        }
    }

    fn ceiling(self) -> Option<usize> {
        match self {
            Sector::All => None,
            Sector::Exactly(n) | Sector::AtMost(n) => Some(n),
        }
    }
}

pub type Occupation = Vec<u32>;

#[derive(Debug, Clone)]
pub struct FockBasis {
    sites: usize,
    n_max: u32,
    sector: Sector,
    hard_core: bool,
    states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

/// Number of vectors in `0..=n_max` per site, `m` sites, with total in `[lo, hi]`.
fn count_states(m: usize, n_max: usize, hi: usize) -> Vec<u128> {
    // ways[t] = number of vectors with total t over the sites seen so far
    let mut ways = vec![0u128; hi + 1];
    ways[0] = 1;
    for _ in 0..m {
        let mut next = vec![0u128; hi + 1];
        for (t, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for k in 0..=n_max.min(hi - t) {
                next[t + k] = next[t + k].saturating_add(w);
            }
        }
        ways = next;
    }
    ways
}

/// `m` sites with cutoff `n_max`, optionally restricted to a particle-number sector.
pub fn build_basis(m: usize, n_max: u32, sector: Sector) -> Result<FockBasis> {
    FockBasis::with_cap(m, n_max, sector, false, dimension_cap())
}

impl FockBasis {
    /// Hard-core bosons: at most one particle per site.
    pub fn hard_core(m: usize, sector: Sector) -> Result<Self> {
        Self::with_cap(m, 1, sector, true, dimension_cap())
    }

    pub fn with_cap(m: usize, n_max: u32, sector: Sector, hard_core: bool, cap: usize) -> Result<Self> {
        if m == 0 {
            return Err(invalid("basis needs at least one site"));
        }
        if n_max == 0 {
            return Err(invalid("n_max must be at least 1"));
        }
        if hard_core && n_max != 1 {
            return Err(invalid("hard-core bases have n_max = 1"));
        }
        let nm = n_max as usize;
        let full_total = m.saturating_mul(nm);
        let hi = sector.ceiling().unwrap_or(full_total).min(full_total);
        let ways = count_states(m, nm, hi);
        let count: u128 = match sector {
            Sector::Exactly(n) => {
                if n > full_total {
                    0
                } else {
                    ways[n]
                }
            }
            _ => ways.iter().fold(0u128, |a, &w| a.saturating_add(w)),
        };
        if count > cap as u128 {
            return Err(Error::DimensionCap { cap });
        }
        if count == 0 {
            return Err(invalid(format!("sector {sector:?} is empty for {m} sites, n_max = {n_max}")));
        }
        let mut states = Vec::with_capacity(count as usize);
        let mut current = vec![0u32; m];
        enumerate(&mut current, 0, 0, nm, sector, hi, &mut states);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self {
            sites: m,
            n_max,
            sector,
            hard_core,
            states,
            index,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn is_hard_core(&self) -> bool {
        self.hard_core
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn total(&self, i: usize) -> usize {
        self.states[i].iter().map(|&n| n as usize).sum()
    }

    /// Largest particle number present in the basis.
    pub fn max_total(&self) -> usize {
        (0..self.len()).map(|i| self.total(i)).max().unwrap_or(0)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site < self.sites {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: site,
                len: self.sites,
            })
        }
    }

    /// Whether adding a particle at `site` to state `i` leaves the truncated space.
    /// Hard-core bases exclude double occupancy physically, so the per-site cap is not a truncation there.
    pub fn creation_escapes(&self, i: usize, site: usize) -> bool {
        let s = &self.states[i];
        let site_full = !self.hard_core && s[site] >= self.n_max;
        let total_full = self.sector.ceiling().is_some_and(|c| self.total(i) + 1 > c);
        site_full || total_full
    }

    /// Whether a hop onto `site` from state `i` leaves the truncated space.
    pub fn hop_escapes(&self, i: usize, site: usize) -> bool {
        !self.hard_core && self.states[i][site] >= self.n_max
    }
}

fn enumerate(
    current: &mut Vec<u32>,
    pos: usize,
    total: usize,
    n_max: usize,
    sector: Sector,
    hi: usize,
    out: &mut Vec<Occupation>,
) {
    if pos == current.len() {
        if sector.admits(total) {
            out.push(current.clone());
        }
        return;
    }
    let remaining = (current.len() - pos - 1) * n_max;
    for k in 0..=n_max.min(hi - total) {
        if let Sector::Exactly(n) = sector {
            if total + k + remaining < n {
                continue;
            }
        }
        current[pos] = k as u32;
        enumerate(current, pos + 1, total + k, n_max, sector, hi, out);
    }
    current[pos] = 0;
}

/// Real operator on a `FockBasis`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    matrix: SparseMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(matrix: SparseMatrix) -> Self {
        Self {
            matrix,
            hermitian: false,
        }
    }

    /// Marks the operator Hermitian after checking `max |A - A^dagger| < 1e-12`.
    pub fn hermitian(matrix: SparseMatrix) -> Result<Self> {
        if !matrix.is_symmetric(tolerance::OPERATOR_HERMITIAN) {
            return Err(invalid("operator is not Hermitian"));
        }
        Ok(Self {
            matrix,
            hermitian: true,
        })
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn sparse(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn into_sparse(self) -> SparseMatrix {
        self.matrix
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.matrix.get(r, c)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
            hermitian: self.hermitian,
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        Ok(Self::new(self.matrix.matmul(&other.matrix)?))
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        self.matrix.to_dense().mapv(|v| Complex64::new(v, 0.0))
    }
}

/// `b_site^power` restricted to the basis.
pub fn annihilation_power(basis: &FockBasis, site: usize, power: u32) -> Result<OperatorMatrix> {
    basis.check_site(site)?;
    let mut trip = Vec::new();
    let mut target = vec![0u32; basis.sites()];
    for (i, s) in basis.states().iter().enumerate() {
        let n = s[site];
        if n < power {
            continue;
        }
        target.copy_from_slice(s);
        target[site] = n - power;
        if let Some(t) = basis.index_of(&target) {
            let amp: f64 = (0..power).map(|k| (n - k) as f64).product::<f64>().sqrt();
            trip.push((t, i, amp));
        }
    }
    Ok(OperatorMatrix::new(SparseMatrix::from_triplets(basis.len(), basis.len(), trip)))
}

pub fn annihilation(basis: &FockBasis, site: usize) -> Result<OperatorMatrix> {
    annihilation_power(basis, site, 1)
}

/// Conjugate transpose of the truncated annihilation operator.
pub fn creation(basis: &FockBasis, site: usize) -> Result<OperatorMatrix> {
    Ok(annihilation(basis, site)?.adjoint())
}

pub fn number(basis: &FockBasis, site: usize) -> Result<OperatorMatrix> {
    basis.check_site(site)?;
    let diag: Vec<f64> = basis.states().iter().map(|s| s[site] as f64).collect();
    OperatorMatrix::hermitian(SparseMatrix::diagonal(&diag))
}

pub fn total_number(basis: &FockBasis) -> OperatorMatrix {
    let diag: Vec<f64> = (0..basis.len()).map(|i| basis.total(i) as f64).collect();
    OperatorMatrix {
        matrix: SparseMatrix::diagonal(&diag),
        hermitian: true,
    }
}

/// Number-diagonal interaction energy.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionSpec {
    #[default]
    None,
    /// `U sum_i n_i (n_i - 1)`.
    OnSite {
        #[serde(rename = "U")]
        u: f64,
    },
    /// Energy per occupation vector; unlisted states get zero.
    Custom { values: Vec<CustomEnergy> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomEnergy {
    pub occupations: Vec<u32>,
    pub energy: f64,
}

impl InteractionSpec {
    pub fn energy(&self, occupation: &[u32]) -> f64 {
        match self {
            InteractionSpec::None => 0.0,
            InteractionSpec::OnSite { u } => {
                u * occupation
                    .iter()
                    .map(|&n| n as f64 * (n as f64 - 1.0))
                    .sum::<f64>()
            }
            InteractionSpec::Custom { values } => values
                .iter()
                .filter(|e| e.occupations == occupation)
                .map(|e| e.energy)
                .sum(),
        }
    }

    pub fn validate(&self, sites: usize) -> Result<()> {
        match self {
            InteractionSpec::None => Ok(()),
            InteractionSpec::OnSite { u } if u.is_finite() => Ok(()),
            InteractionSpec::OnSite { u } => Err(invalid(format!("U = {u} must be finite"))),
            InteractionSpec::Custom { values } => {
                for e in values {
                    if e.occupations.len() != sites {
                        return Err(Error::DimensionMismatch {
                            expected: sites,
                            got: e.occupations.len(),
                        });
                    }
                    if !e.energy.is_finite() {
                        return Err(invalid("custom interaction energies must be finite"));
                    }
                }
                Ok(())
            }
        }
    }
}

/// `H = sum_{i != j} J_ij b_i^dagger b_j + h(n_1, ..., n_m)`.
pub fn build_hamiltonian(
    basis: &FockBasis,
    hopping: &Array2<f64>,
    interaction: &InteractionSpec,
) -> Result<OperatorMatrix> {
    let m = basis.sites();
    if hopping.dim() != (m, m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: hopping.nrows(),
        });
    }
    for i in 0..m {
        for j in 0..i {
            if (hopping[[i, j]] - hopping[[j, i]]).abs() > tolerance::OPERATOR_HERMITIAN {
                return Err(Error::NonSymmetricHopping(i, j));
            }
        }
    }
    interaction.validate(m)?;
    let mut trip = Vec::new();
    let mut target = vec![0u32; m];
    for (k, s) in basis.states().iter().enumerate() {
        let e = interaction.energy(s);
        if e != 0.0 {
            trip.push((k, k, e));
        }
        for j in 0..m {
            if s[j] == 0 {
                continue;
            }
            for i in 0..m {
                let jij = hopping[[i, j]];
                if i == j || jij == 0.0 || s[i] >= basis.n_max() {
                    continue;
                }
                target.copy_from_slice(s);
                target[j] -= 1;
                target[i] += 1;
                if let Some(t) = basis.index_of(&target) {
                    let amp = jij * (s[j] as f64).sqrt() * ((s[i] + 1) as f64).sqrt();
                    trip.push((t, k, amp));
                }
            }
        }
    }
    OperatorMatrix::hermitian(SparseMatrix::from_triplets(basis.len(), basis.len(), trip))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn dense(op: &OperatorMatrix) -> Array2<f64> {
        op.sparse().to_dense()
    }

    #[test]
    fn enumeration_order() {
        let b = build_basis(2, 1, Sector::All).unwrap();
        assert_eq!(b.states(), &[vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let s = build_basis(2, 2, Sector::Exactly(2)).unwrap();
        assert_eq!(s.states(), &[vec![0, 2], vec![1, 1], vec![2, 0]]);
        let a = build_basis(3, 2, Sector::AtMost(1)).unwrap();
        assert_eq!(a.len(), 4);
        for (i, st) in a.states().iter().enumerate() {
            assert_eq!(a.index_of(st), Some(i));
        }
    }

    #[test]
    fn dimension_cap_enforced() {
        let err = FockBasis::with_cap(10, 3, Sector::All, false, DEFAULT_DIM_CAP).unwrap_err();
        assert!(matches!(err, Error::DimensionCap { cap: DEFAULT_DIM_CAP }));
        assert!(err.to_string().contains("dimension cap exceeded"));
        // the same lattice fits once restricted to a small sector
        let ok = FockBasis::with_cap(10, 3, Sector::Exactly(2), false, DEFAULT_DIM_CAP).unwrap();
        assert_eq!(ok.len(), 55);
    }

    #[test]
    fn sector_sizes_match_stars_and_bars() {
        // states of m sites with total n and no per-site cap: C(n + m - 1, m - 1)
        let b = build_basis(4, 6, Sector::Exactly(6)).unwrap();
        assert_eq!(b.len(), 84);
        let c = build_basis(4, 8, Sector::AtMost(8)).unwrap();
        assert_eq!(c.len(), 495);
        assert!(build_basis(2, 1, Sector::Exactly(3)).is_err());
    }

    #[test]
    fn ladder_action() {
        let b = build_basis(1, 2, Sector::All).unwrap();
        let a = dense(&annihilation(&b, 0).unwrap());
        let s2 = 2f64.sqrt();
        assert_eq!(a, array![[0.0, 1.0, 0.0], [0.0, 0.0, s2], [0.0, 0.0, 0.0]]);
        let ad = dense(&creation(&b, 0).unwrap());
        let n = dense(&number(&b, 0).unwrap());
        let comm = a.dot(&ad) - ad.dot(&a);
        assert!((comm[[0, 0]] - 1.0).abs() < 1e-14);
        assert!((comm[[1, 1]] - 1.0).abs() < 1e-14);
        assert!((comm[[2, 2]] + 2.0).abs() < 1e-14);
        assert!((ad.dot(&a) - n).iter().all(|v| v.abs() < 1e-14));
        assert!(annihilation(&b, 1).is_err());
    }

    #[test]
    fn power_matches_repeated_product() {
        let b = build_basis(2, 4, Sector::All).unwrap();
        let a = annihilation(&b, 1).unwrap();
        let a3 = a.matmul(&a).unwrap().matmul(&a).unwrap();
        let direct = annihilation_power(&b, 1, 3).unwrap();
        assert!(a3.sparse().max_abs_diff(direct.sparse()) < 1e-12);
    }

    #[test]
    fn hamiltonian_examples() {
        let b = build_basis(2, 1, Sector::Exactly(1)).unwrap();
        let j = array![[0.0, 1.0], [1.0, 0.0]];
        let h = build_hamiltonian(&b, &j, &InteractionSpec::None).unwrap();
        assert_eq!(dense(&h), array![[0.0, 1.0], [1.0, 0.0]]);
        assert!(h.is_hermitian());

        let b2 = build_basis(2, 2, Sector::Exactly(2)).unwrap();
        let h = build_hamiltonian(&b2, &Array2::zeros((2, 2)), &InteractionSpec::OnSite { u: 0.7 }).unwrap();
        let k = b2.index_of(&[2, 0]).unwrap();
        assert!((h.get(k, k) - 1.4).abs() < 1e-15);

        let hc = FockBasis::hard_core(3, Sector::Exactly(2)).unwrap();
        assert!(hc.states().iter().all(|s| s.iter().all(|&n| n <= 1)));
        let jm = array![[0.0, 1.0, 0.125], [1.0, 0.0, 1.0], [0.125, 1.0, 0.0]];
        let h = build_hamiltonian(&hc, &jm, &InteractionSpec::None).unwrap();
        assert_eq!(h.dim(), 3);

        let bad = array![[0.0, 1.0], [0.5, 0.0]];
        assert!(matches!(
            build_hamiltonian(&b, &bad, &InteractionSpec::None),
            Err(Error::NonSymmetricHopping(1, 0))
        ));
    }

    #[test]
    fn custom_interaction() {
        let b = build_basis(2, 1, Sector::All).unwrap();
        let spec = InteractionSpec::Custom {
            values: vec![CustomEnergy {
                occupations: vec![1, 1],
                energy: -3.0,
            }],
        };
        let h = build_hamiltonian(&b, &Array2::zeros((2, 2)), &spec).unwrap();
        assert_eq!(h.get(3, 3), -3.0);
        assert_eq!(h.get(0, 0), 0.0);
        let wrong = InteractionSpec::Custom {
            values: vec![CustomEnergy {
                occupations: vec![1],
                energy: 1.0,
            }],
        };
        assert!(wrong.validate(2).is_err());
    }

    #[test]
    fn escape_flags() {
        let b = build_basis(2, 2, Sector::AtMost(2)).unwrap();
        let k = b.index_of(&[1, 1]).unwrap();
        assert!(b.creation_escapes(k, 0));
        assert!(!b.hop_escapes(k, 0));
        let k = b.index_of(&[2, 0]).unwrap();
        assert!(b.hop_escapes(k, 0));
        let hc = FockBasis::hard_core(2, Sector::All).unwrap();
        let k = hc.index_of(&[1, 0]).unwrap();
        assert!(!hc.hop_escapes(k, 0));
        assert!(!hc.creation_escapes(k, 0));
    }
}
