//! Points of the probability simplex, integer count vectors, and the ordered
//! lattice `G(K, t) = { k ∈ Z^K_{>=0} : Σ k = t }`.
//!
//! The lattice is ordered colexicographically on the free coordinates
//! `(k_1, …, k_{K−1})`: `k_{K−1}` is the most significant digit, `k_1` the
//! least, and `k_K = t − Σ_{j<K} k_j` is implied. Every table indexed by the
//! lattice and every CSV dump uses this order.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};

/// Tolerance on `Σ p_j = 1` when a [`ProbVector`] is constructed.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Default cap on the number of lattice points materialized at once.
pub const DEFAULT_GRID_CAP: usize = 1 << 27;

/// A point of the `(K−1)`-simplex, stored exactly as given.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    coords: Vec<f64>,
}

impl ProbVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "probability vectors need K >= 2 coordinates, got {}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::Domain(format!(
                "probability coordinate {bad} is negative or not finite"
            )));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Domain(format!("coordinates sum to {sum}, not 1")));
        }
        Ok(ProbVector { coords })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("uniform vector with K = 0".into()));
        }
        ProbVector::new(vec![1.0 / k as f64; k])
    }

    /// The one-hot vector `e_j` (0-based `j`).
    pub fn vertex(k: usize, j: usize) -> Result<Self> {
        if j >= k {
            return Err(Error::InvalidInput(format!(
                "vertex {j} out of range for K = {k}"
            )));
        }
        let mut coords = vec![0.0; k];
        coords[j] = 1.0;
        ProbVector::new(coords)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coords
    }

    /// The category index if this vector is one-hot.
    pub fn one_hot_index(&self) -> Option<usize> {
        let mut hit = None;
        for (j, &c) in self.coords.iter().enumerate() {
            if c == 1.0 && hit.is_none() {
                hit = Some(j);
            } else if c != 0.0 {
                return None;
            }
        }
        hit
    }
}

impl AsRef<[f64]> for ProbVector {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

impl fmt::Display for ProbVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_joined(f, &self.coords)
    }
}

impl FromStr for ProbVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProbVector::new(parse_list(s)?)
    }
}

/// A vector of nonnegative integer counts together with its total.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountVector {
    counts: Vec<u32>,
    total: usize,
}

impl CountVector {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidInput("count vector with K = 0".into()));
        }
        let total = counts.iter().map(|&c| c as usize).sum();
        Ok(CountVector { counts, total })
    }

    pub fn zeros(k: usize) -> Self {
        CountVector {
            counts: vec![0; k],
            total: 0,
        }
    }

    /// Counts of categories in a sequence of one-hot observations.
    pub fn from_one_hot(obs: &[ProbVector]) -> Result<Self> {
        let k = obs
            .first()
            .map(ProbVector::dim)
            .ok_or_else(|| Error::InvalidInput("empty observation sequence".into()))?;
        let mut counts = CountVector::zeros(k);
        for y in obs {
            check_dim(k, y.dim())?;
            let j = y
                .one_hot_index()
                .ok_or_else(|| Error::InvalidInput(format!("observation {y} is not one-hot")))?;
            counts.increment(j);
        }
        Ok(counts)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn total(&self) -> usize {
        self.total
    }

    #[inline]
    pub fn as_slice(&self) -> &[u32] {
        &self.counts
    }

    #[inline]
    pub fn get(&self, j: usize) -> u32 {
        self.counts[j]
    }

    pub fn increment(&mut self, j: usize) {
        self.counts[j] += 1;
        self.total += 1;
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// `k / t`; undefined for the zero vector.
    pub fn empirical_mean(&self) -> Result<ProbVector> {
        if self.total == 0 {
            return Err(Error::InvalidInput("empirical mean of zero counts".into()));
        }
        let t = self.total as f64;
        ProbVector::new(self.counts.iter().map(|&c| c as f64 / t).collect())
    }
}

impl fmt::Display for CountVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_joined(f, &self.counts)
    }
}

impl FromStr for CountVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let counts = s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<u32>()
                    .map_err(|e| Error::InvalidInput(format!("bad count {part:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        CountVector::new(counts)
    }
}

fn write_joined<T: fmt::Display>(f: &mut fmt::Formatter<'_>, xs: &[T]) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

pub(crate) fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("bad number {part:?}: {e}")))
        })
        .collect()
}

/// `C(n, r)` in 128-bit arithmetic, saturating on overflow.
pub fn binomial(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `|G(K, t)| = C(t + K − 1, K − 1)`.
pub fn grid_size(k: usize, t: usize) -> u128 {
    if k == 0 {
        return 0;
    }
    binomial((t + k - 1) as u64, (k - 1) as u64)
}

/// Ranking and unranking on `G(K, t)` in colexicographic order.
#[derive(Debug, Clone)]
pub struct GridIndex {
    k: usize,
    t: usize,
    total: usize,
    // binom[i * stride + n] = C(n, i) for i < K, n <= t + K
    binom: Vec<u64>,
    stride: usize,
}

impl GridIndex {
    pub fn new(k: usize, t: usize) -> Result<Self> {
        Self::with_cap(k, t, DEFAULT_GRID_CAP)
    }

    pub fn with_cap(k: usize, t: usize, cap: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("grid with K = 0".into()));
        }
        let requested = grid_size(k, t);
        if requested > cap as u128 {
            return Err(Error::GridCap {
                k,
                t,
                requested,
                cap,
            });
        }
        let stride = t + k + 1;
        let mut binom = vec![0u64; k * stride];
        binom[..stride].fill(1);
        for i in 1..k {
            for n in i..stride {
                // Pascal's rule; entries stay below the cap-bounded grid size.
                binom[i * stride + n] =
                    binom[i * stride + n - 1].saturating_add(binom[(i - 1) * stride + n - 1]);
            }
        }
        Ok(GridIndex {
            k,
            t,
            total: requested as usize,
            binom,
            stride,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn sum(&self) -> usize {
        self.t
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    #[inline]
    fn c(&self, n: usize, i: usize) -> u64 {
        self.binom[i * self.stride + n]
    }

    /// Rank of `k` (all `K` coordinates) among `G(K, t)`.
    pub fn rank(&self, k: &[u32]) -> Result<usize> {
        check_dim(self.k, k.len())?;
        let sum: usize = k.iter().map(|&c| c as usize).sum();
        if sum != self.t {
            return Err(Error::InvalidInput(format!(
                "count vector sums to {sum}, expected {}",
                self.t
            )));
        }
        Ok(self.rank_free(&k[..self.k - 1], self.t))
    }

    /// Rank given only the free coordinates `(k_1, …, k_{K−1})` and an
    /// explicit total `t <= self.sum()`. The result indexes `G(K, t)`, which
    /// lets one index serve every smaller lattice.
    #[inline]
    pub(crate) fn rank_free(&self, free: &[u32], t: usize) -> usize {
        let mut rank = 0u64;
        let mut budget = t;
        for i in (1..self.k).rev() {
            let ki = free[i - 1] as usize;
            // vectors whose i-th coordinate is below k_i, given the higher ones
            rank += self.c(budget + i, i) - self.c(budget - ki + i, i);
            budget -= ki;
        }
        rank as usize
    }

    /// Inverse of [`GridIndex::rank`].
    pub fn unrank(&self, index: usize) -> Result<CountVector> {
        if index >= self.total {
            return Err(Error::InvalidInput(format!(
                "index {index} out of range for a grid of {} entries",
                self.total
            )));
        }
        let mut free = vec![0u32; self.k - 1];
        let mut rest = index as u64;
        let mut budget = self.t;
        for i in (1..self.k).rev() {
            let base = self.c(budget + i, i);
            let mut v = 0usize;
            while v < budget && base - self.c(budget - (v + 1) + i, i) <= rest {
                v += 1;
            }
            rest -= base - self.c(budget - v + i, i);
            free[i - 1] = v as u32;
            budget -= v;
        }
        free.push(budget as u32);
        CountVector::new(free)
    }

    /// Visit every lattice point in rank order without allocating per point.
    pub fn for_each(&self, mut f: impl FnMut(usize, &[u32])) {
        let k = self.k;
        let mut point = vec![0u32; k];
        point[k - 1] = self.t as u32;
        let mut free_sum = 0usize;
        for rank in 0..self.total {
            f(rank, &point);
            // odometer on the free coordinates, least significant first
            for c in point.iter_mut().take(k - 1) {
                if free_sum < self.t {
                    *c += 1;
                    free_sum += 1;
                    break;
                }
                free_sum -= *c as usize;
                *c = 0;
            }
            point[k - 1] = (self.t - free_sum) as u32;
        }
    }

    /// One column of counts per coordinate, in rank order.
    pub fn columns(&self) -> Vec<Vec<u32>> {
        let mut cols = vec![Vec::with_capacity(self.total); self.k];
        self.for_each(|_, p| {
            for (col, &c) in cols.iter_mut().zip(p) {
                col.push(c);
            }
        });
        cols
    }
}

/// All of `G(K, t)` in rank order.
pub fn enumerate_grid(k: usize, t: usize) -> Result<Vec<CountVector>> {
    let index = GridIndex::new(k, t)?;
    let mut out = Vec::with_capacity(index.len());
    index.for_each(|_, p| {
        out.push(CountVector {
            counts: p.to_vec(),
            total: t,
        });
    });
    Ok(out)
}

/// Coordinatewise average of a nonempty sequence of simplex points.
pub fn empirical_mean(obs: &[ProbVector]) -> Result<ProbVector> {
    let first = obs
        .first()
        .ok_or_else(|| Error::InvalidInput("empirical mean of an empty sequence".into()))?;
    let k = first.dim();
    let mut acc = vec![0.0; k];
    for y in obs {
        check_dim(k, y.dim())?;
        for (a, &v) in acc.iter_mut().zip(y.as_slice()) {
            *a += v;
        }
    }
    let n = obs.len() as f64;
    ProbVector::new(acc.into_iter().map(|a| a / n).collect())
}

/// The simplex lattice `{ k / G : k ∈ G(K, G) }` as probability vectors.
pub fn simplex_lattice(k: usize, resolution: usize) -> Result<Vec<ProbVector>> {
    if resolution == 0 {
        return Err(Error::InvalidInput(
            "lattice resolution must be positive".into(),
        ));
    }
    let index = GridIndex::new(k, resolution)?;
    let g = resolution as f64;
    let mut out = Vec::with_capacity(index.len());
    index.for_each(|_, p| {
        out.push(ProbVector {
            coords: p.iter().map(|&c| c as f64 / g).collect(),
        });
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn zero_sum_grid_is_the_zero_vector() {
        let g = enumerate_grid(2, 0).unwrap();
        assert_eq!(g, vec![CountVector::new(vec![0, 0]).unwrap()]);
        assert_eq!(enumerate_grid(4, 0).unwrap().len(), 1);
    }

    #[test]
    fn unit_sum_grid_is_the_vertex_set() {
        let g = enumerate_grid(3, 1).unwrap();
        let set: HashSet<Vec<u32>> = g.iter().map(|c| c.as_slice().to_vec()).collect();
        let expected: HashSet<Vec<u32>> = [vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]
            .into_iter()
            .collect();
        assert_eq!(set, expected);
    }

    #[test]
    fn two_sum_grid_in_three_dims() {
        let g = enumerate_grid(3, 2).unwrap();
        let set: HashSet<Vec<u32>> = g.iter().map(|c| c.as_slice().to_vec()).collect();
        let expected: HashSet<Vec<u32>> = [
            vec![2, 0, 0],
            vec![0, 2, 0],
            vec![0, 0, 2],
            vec![1, 1, 0],
            vec![1, 0, 1],
            vec![0, 1, 1],
        ]
        .into_iter()
        .collect();
        assert_eq!(g.len(), 6);
        assert_eq!(set, expected);
    }

    #[test]
    fn grid_sizes_exhaustive() {
        for k in 1..=5 {
            for t in 0..=12 {
                let g = enumerate_grid(k, t).unwrap();
                assert_eq!(g.len() as u128, grid_size(k, t));
                let distinct: HashSet<_> = g.iter().collect();
                assert_eq!(distinct.len(), g.len());
                assert!(g.iter().all(|c| c.total() == t
                    && c.as_slice().iter().map(|&x| x as usize).sum::<usize>() == t));
            }
        }
    }

    #[test]
    fn rank_unrank_roundtrip() {
        let idx = GridIndex::new(3, 4).unwrap();
        assert_eq!(idx.len(), 15);
        let listed = enumerate_grid(3, 4).unwrap();
        for (i, c) in listed.iter().enumerate() {
            assert_eq!(idx.unrank(i).unwrap(), *c);
            assert_eq!(idx.rank(c.as_slice()).unwrap(), i);
        }
        assert!(idx.unrank(15).is_err());
        assert_eq!(
            GridIndex::new(3, 1).unwrap().unrank(0).unwrap(),
            enumerate_grid(3, 1).unwrap()[0]
        );
    }

    #[test]
    fn rank_unrank_exhaustive_small() {
        for k in 1..=5 {
            for t in 0..=9 {
                let idx = GridIndex::new(k, t).unwrap();
                for i in 0..idx.len() {
                    let c = idx.unrank(i).unwrap();
                    assert_eq!(idx.rank(c.as_slice()).unwrap(), i);
                }
            }
        }
    }

    #[test]
    fn two_dim_rank_is_monotone_in_first_coordinate() {
        let idx = GridIndex::new(2, 9).unwrap();
        let ranks: Vec<usize> = (0..=9u32).map(|j| idx.rank(&[j, 9 - j]).unwrap()).collect();
        assert!(ranks.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rank_free_indexes_smaller_lattices() {
        let big = GridIndex::new(4, 10).unwrap();
        for t in 0..=10 {
            let small = GridIndex::new(4, t).unwrap();
            small.for_each(|r, p| assert_eq!(big.rank_free(&p[..3], t), r));
        }
    }

    #[test]
    fn grid_cap_is_enforced() {
        let err = GridIndex::with_cap(5, 100, 1000).unwrap_err();
        match err {
            Error::GridCap { cap, requested, .. } => {
                assert_eq!(cap, 1000);
                assert_eq!(requested, 4_598_126);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empirical_means() {
        let e1 = ProbVector::vertex(2, 0).unwrap();
        let e2 = ProbVector::vertex(2, 1).unwrap();
        assert_eq!(empirical_mean(std::slice::from_ref(&e1)).unwrap(), e1);
        assert_eq!(empirical_mean(&[e1, e2]).unwrap().as_slice(), &[0.5, 0.5]);
        let a = ProbVector::new(vec![0.75, 0.25]).unwrap();
        let b = ProbVector::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(empirical_mean(&[a, b]).unwrap().as_slice(), &[0.5, 0.5]);
        assert!(empirical_mean(&[]).is_err());
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![1.0]).is_err());
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![1.1, -0.1]).is_err());
        assert!(ProbVector::new(vec![0.5, 0.5 + 5e-10]).is_ok());
        let p: ProbVector = "0.2, 0.3,0.5".parse().unwrap();
        assert_eq!(p.to_string(), "0.2,0.3,0.5");
        let c: CountVector = "3,0,12".parse().unwrap();
        assert_eq!(c.total(), 15);
        assert_eq!(c.to_string(), "3,0,12");
    }

    #[test]
    fn one_hot_counts_land_in_the_grid() {
        let obs: Vec<ProbVector> = [0, 2, 2, 1, 0, 2]
            .iter()
            .map(|&j| ProbVector::vertex(3, j).unwrap())
            .collect();
        let c = CountVector::from_one_hot(&obs).unwrap();
        assert_eq!(c.as_slice(), &[2, 1, 3]);
        assert!(enumerate_grid(3, 6).unwrap().contains(&c));
    }

    #[test]
    fn lattice_points_are_on_the_simplex() {
        let pts = simplex_lattice(3, 4).unwrap();
        assert_eq!(pts.len(), 15);
        assert!(pts
            .iter()
            .all(|p| (p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }
}
