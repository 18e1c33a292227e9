//! Lattice geometry with open boundaries, regions and power-law hopping.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A hypercubic `D`-dimensional lattice with open boundaries.
///
/// Sites are ordered lexicographically with the first axis most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    extents: Vec<usize>,
    sites: Vec<Vec<i64>>,
}

impl Lattice {
    pub fn new(extents: &[usize]) -> Result<Self> {
        if extents.is_empty() {
            return Err(invalid("lattice needs at least one axis"));
        }
        if extents.contains(&0) {
            return Err(invalid("lattice extents must be positive"));
        }
        let mut sites = vec![Vec::with_capacity(extents.len())];
        for &extent in extents {
            sites = sites
                .into_iter()
                .flat_map(|prefix| {
                    (0..extent as i64).map(move |c| {
                        let mut s = prefix.clone();
                        s.push(c);
                        s
                    })
                })
                .collect();
        }
        Ok(Self {
            extents: extents.to_vec(),
            sites,
        })
    }

    /// One-dimensional chain of `len` sites.
    pub fn chain(len: usize) -> Result<Self> {
        Self::new(&[len])
    }

    pub fn dimension(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn site(&self, i: usize) -> Result<&[i64]> {
        self.sites
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            })
    }

    pub fn sites(&self) -> &[Vec<i64>] {
        &self.sites
    }

    /// Squared Euclidean distance; exact in integer arithmetic.
    pub fn distance_sq(&self, i: usize, j: usize) -> Result<i64> {
        let a = self.site(i)?;
        let b = self.site(j)?;
        Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
    }

    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        Ok((self.distance_sq(i, j)? as f64).sqrt())
    }

    pub fn max_distance(&self) -> f64 {
        let diag: i64 = self.extents.iter().map(|&e| (e as i64 - 1).pow(2)).sum();
        (diag as f64).sqrt()
    }

    /// Minimum distance between two disjoint, nonempty regions.
    pub fn region_distance(&self, x: &Region, y: &Region) -> Result<f64> {
        x.check(self)?;
        y.check(self)?;
        if x.is_empty() || y.is_empty() {
            return Err(Error::EmptyRegion);
        }
        if let Some(&s) = x.indices().iter().find(|s| y.contains(**s)) {
            return Err(Error::OverlappingRegions(s));
        }
        let mut best = i64::MAX;
        for &i in x.indices() {
            for &j in y.indices() {
                best = best.min(self.distance_sq(i, j)?);
            }
        }
        Ok((best as f64).sqrt())
    }

    /// All sites within Euclidean distance `r` of site `i`.
    pub fn ball(&self, i: usize, r: f64) -> Result<Region> {
        self.site(i)?;
        let mut members = Vec::new();
        for j in 0..self.len() {
            if (self.distance_sq(i, j)? as f64).sqrt() <= r + 1e-12 {
                members.push(j);
            }
        }
        Ok(Region::from_sorted(members))
    }

    /// Smallest `phi` with `|i[r] \ i[r-1]| <= phi * r^(D-1)` for every site and
    /// every integer radius `1..=r_max`.
    pub fn shell_constant(&self, r_max: usize) -> Result<f64> {
        if self.len() < 2 {
            return Err(Error::DegenerateLattice(
                "a single site has no shells".into(),
            ));
        }
        if r_max == 0 {
            return Err(invalid("r_max must be at least 1"));
        }
        let d = self.dimension() as i32;
        let mut phi: f64 = 0.0;
        for i in 0..self.len() {
            let mut counts = vec![0usize; r_max + 1];
            for j in 0..self.len() {
                let d2 = self.distance_sq(i, j)?;
                if d2 == 0 {
                    continue;
                }
                // smallest integer r with d2 <= r^2
                let mut r = (d2 as f64).sqrt().ceil() as i64;
                while (r - 1) * (r - 1) >= d2 {
                    r -= 1;
                }
                while r * r < d2 {
                    r += 1;
                }
                if (r as usize) <= r_max {
                    counts[r as usize] += 1;
                }
            }
            for (r, &c) in counts.iter().enumerate().skip(1) {
                phi = phi.max(c as f64 / (r as f64).powi(d - 1));
            }
        }
        Ok(phi)
    }

    /// `shell_constant` over every radius that occurs on this lattice.
    pub fn shell_constant_full(&self) -> Result<f64> {
        self.shell_constant(self.max_distance().ceil().max(1.0) as usize)
    }
}

/// A set of site indices, kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Region(Vec<usize>);

impl Region {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    fn from_sorted(v: Vec<usize>) -> Self {
        Self(v)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Sites of the lattice not in this region.
    pub fn complement(&self, lattice: &Lattice) -> Region {
        Region((0..lattice.len()).filter(|&i| !self.contains(i)).collect())
    }

    pub fn check(&self, lattice: &Lattice) -> Result<()> {
        match self.0.last() {
            Some(&i) if i >= lattice.len() => Err(Error::IndexOutOfRange {
                index: i,
                len: lattice.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Sum of `values` over the region.
    pub fn sum(&self, values: &[f64]) -> f64 {
        self.0.iter().map(|&i| values[i]).sum()
    }
}

/// Hopping amplitudes bounded by `J / |i-j|^alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoppingSpec {
    #[serde(rename = "J")]
    pub j: f64,
    pub alpha: f64,
    /// Explicit `J_ij`; when absent the cap is saturated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl HoppingSpec {
    pub fn power_law(j: f64, alpha: f64) -> Self {
        Self {
            j,
            alpha,
            matrix: None,
        }
    }

    pub fn with_matrix(j: f64, alpha: f64, matrix: Vec<Vec<f64>>) -> Self {
        Self {
            j,
            alpha,
            matrix: Some(matrix),
        }
    }

    pub fn cap(&self, distance: f64) -> f64 {
        self.j / distance.powf(self.alpha)
    }

    pub fn validate(&self, lattice: &Lattice) -> Result<()> {
        if !(self.j > 0.0) || !self.j.is_finite() {
            return Err(invalid(format!("J must be positive, got {}", self.j)));
        }
        let d = lattice.dimension() as f64;
        if !(self.alpha > d) {
            return Err(invalid(format!(
                "alpha must exceed the dimension {d}, got {}",
                self.alpha
            )));
        }
        let Some(m) = &self.matrix else {
            return Ok(());
        };
        let n = lattice.len();
        if m.len() != n || m.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.len(),
            });
        }
        for i in 0..n {
            if m[i][i] != 0.0 {
                return Err(invalid(format!("J[{i}][{i}] must be zero")));
            }
            for j in 0..n {
                if i == j {
                    continue;
                }
                if m[i][j] != m[j][i] {
                    return Err(Error::NonSymmetricHopping(i, j));
                }
                let cap = self.cap(lattice.distance(i, j)?);
                if m[i][j].abs() > cap * (1.0 + 1e-12) {
                    return Err(Error::HoppingCapViolation {
                        i,
                        j,
                        value: m[i][j],
                        cap,
                    });
                }
            }
        }
        Ok(())
    }

    /// The `J_ij` matrix on `lattice` after validation.
    pub fn matrix(&self, lattice: &Lattice) -> Result<Array2<f64>> {
        self.validate(lattice)?;
        let n = lattice.len();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                out[[i, j]] = match &self.matrix {
                    Some(m) => m[i][j],
                    None => self.cap(lattice.distance(i, j)?),
                };
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances() {
        let chain = Lattice::chain(10).unwrap();
        assert_eq!(chain.distance(0, 3).unwrap(), 3.0);
        assert_eq!(chain.distance(4, 4).unwrap(), 0.0);
        let sq = Lattice::new(&[5, 5]).unwrap();
        // (0,0) is index 0, (3,4) is index 3*5+4
        assert_eq!(sq.distance(0, 19).unwrap(), 5.0);
        assert!(matches!(
            chain.distance(0, 10),
            Err(Error::IndexOutOfRange { index: 10, .. })
        ));
    }

    #[test]
    fn region_distances() {
        let chain = Lattice::chain(10).unwrap();
        let x = Region::new([0, 1]);
        let y = Region::new([8, 9]);
        assert_eq!(chain.region_distance(&x, &y).unwrap(), 7.0);
        assert_eq!(chain.region_distance(&y, &x).unwrap(), 7.0);
        assert_eq!(
            chain
                .region_distance(&Region::new([0]), &Region::new([5]))
                .unwrap(),
            5.0
        );
        let sq = Lattice::new(&[5, 5]).unwrap();
        let d = sq
            .region_distance(&Region::new([0]), &Region::new([19, 6]))
            .unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            chain.region_distance(&Region::new([0, 1]), &Region::new([1, 2])),
            Err(Error::OverlappingRegions(1))
        ));
        assert!(matches!(
            chain.region_distance(&Region::new([]), &Region::new([1])),
            Err(Error::EmptyRegion)
        ));
    }

    #[test]
    fn balls() {
        let chain = Lattice::chain(10).unwrap();
        assert_eq!(chain.ball(5, 0.0).unwrap().indices(), &[5]);
        assert_eq!(chain.ball(5, 1.5).unwrap().indices(), &[4, 5, 6]);
        let sq = Lattice::new(&[5, 5]).unwrap();
        let centre = 2 * 5 + 2;
        let b = sq.ball(centre, 1.0).unwrap();
        assert_eq!(b.indices(), &[7, 11, 12, 13, 17]);
        assert_eq!(sq.ball(0, 1.0).unwrap().indices(), &[0, 1, 5]);
    }

    #[test]
    fn shell_constant_chain() {
        let chain = Lattice::chain(50).unwrap();
        assert_eq!(chain.shell_constant(10).unwrap(), 2.0);
        assert!(matches!(
            Lattice::chain(1).unwrap().shell_constant(3),
            Err(Error::DegenerateLattice(_))
        ));
    }

    #[test]
    fn hopping_validation() {
        let chain = Lattice::chain(3).unwrap();
        let ok = HoppingSpec::with_matrix(
            1.0,
            3.0,
            vec![
                vec![0.0, 0.5, 0.1],
                vec![0.5, 0.0, -1.0],
                vec![0.1, -1.0, 0.0],
            ],
        );
        ok.validate(&chain).unwrap();
        let too_big = HoppingSpec::with_matrix(
            1.0,
            3.0,
            vec![
                vec![0.0, 0.5, 0.2],
                vec![0.5, 0.0, 0.0],
                vec![0.2, 0.0, 0.0],
            ],
        );
        assert!(matches!(
            too_big.validate(&chain),
            Err(Error::HoppingCapViolation { i: 0, j: 2, .. })
        ));
        let asym = HoppingSpec::with_matrix(
            1.0,
            3.0,
            vec![
                vec![0.0, 0.5, 0.0],
                vec![0.4, 0.0, 0.0],
                vec![0.0, 0.0, 0.0],
            ],
        );
        assert!(matches!(
            asym.validate(&chain),
            Err(Error::NonSymmetricHopping(0, 1))
        ));
        assert!(HoppingSpec::power_law(1.0, 1.0).validate(&chain).is_err());
        let m = HoppingSpec::power_law(2.0, 3.0).matrix(&chain).unwrap();
        assert_eq!(m[[0, 2]], 0.25);
        assert_eq!(m[[1, 1]], 0.0);
    }
}
