//! Pairwise FK relations over a finite sample, stored as bit matrices.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::CrossDistances;
use crate::systems::{OrbitSegment, SystemSpec};

/// Symmetric relation "`j` lies in the FK ball around `i`" on a sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallGraph {
    size: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BallGraph {
    pub fn empty(size: usize) -> Self {
        let words = size.div_ceil(64).max(1);
        let mut g = Self {
            size,
            words,
            bits: vec![0; words * size],
        };
        for i in 0..size {
            g.set(i, i);
        }
        g
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn words(&self) -> usize {
        self.words
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub(crate) fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words + i / 64] |= 1 << (i % 64);
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).filter(move |&j| self.contains(i, j))
    }

    /// Row `i` as a `u64` mask; only valid for samples of at most 64 points.
    pub(crate) fn mask(&self, i: usize) -> u64 {
        debug_assert!(self.size <= 64);
        self.bits[i * self.words]
    }
}

/// A full bitset helper over `size` elements.
pub(crate) fn full_set(size: usize, words: usize) -> Vec<u64> {
    let mut v = vec![u64::MAX; words];
    let rem = size % 64;
    if rem != 0 {
        v[words - 1] = (1u64 << rem) - 1;
    }
    if size == 0 {
        v.iter_mut().for_each(|w| *w = 0);
    }
    v
}

pub(crate) fn count_and(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

pub(crate) fn any(a: &[u64]) -> bool {
    a.iter().any(|&w| w != 0)
}

fn common_length(orbits: &[OrbitSegment]) -> Result<usize> {
    let first = orbits.first().ok_or(Error::EmptySample)?.len();
    if let Some(o) = orbits.iter().find(|o| o.len() != first) {
        return Err(Error::LengthMismatch(first, o.len()));
    }
    Ok(first)
}

/// One ball graph per requested orbit length, all from a single DP per pair.
///
/// `lengths` must not exceed the common length of `orbits`. With `closed`
/// the relation is `d_FK_n <= radius`, otherwise `d_FK_n < radius`.
pub fn ball_graphs(
    sys: &SystemSpec,
    orbits: &[OrbitSegment],
    lengths: &[usize],
    radius: f64,
    closed: bool,
) -> Result<Vec<BallGraph>> {
    let n_max = common_length(orbits)?;
    if let Some(&bad) = lengths.iter().find(|&&n| n == 0 || n > n_max) {
        return Err(Error::LengthMismatch(bad, n_max));
    }
    let m = orbits.len();
    let rows: Vec<Vec<(usize, Vec<bool>)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..m)
                .map(|j| {
                    let cross = CrossDistances::new(sys, &orbits[i], &orbits[j])
                        .expect("orbits share a length");
                    let inside = cross.within_prefixes(radius, closed);
                    (j, lengths.iter().map(|&n| inside[n - 1]).collect())
                })
                .filter(|(_, hits): &(usize, Vec<bool>)| hits.iter().any(|&h| h))
                .collect()
        })
        .collect();
    let mut graphs = vec![BallGraph::empty(m); lengths.len()];
    for (i, row) in rows.into_iter().enumerate() {
        for (j, hits) in row {
            for (g, hit) in graphs.iter_mut().zip(hits) {
                if hit {
                    g.set(i, j);
                }
            }
        }
    }
    Ok(graphs)
}

/// Symmetric matrix of exact `d_FK_n` values, row-major.
pub fn fk_matrix(sys: &SystemSpec, orbits: &[OrbitSegment]) -> Result<Vec<f64>> {
    common_length(orbits)?;
    let m = orbits.len();
    let upper: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..m)
                .map(|j| {
                    CrossDistances::new(sys, &orbits[i], &orbits[j])
                        .expect("orbits share a length")
                        .fk_exact()
                })
                .collect()
        })
        .collect();
    let mut d = vec![0.0; m * m];
    for (i, row) in upper.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            d[i * m + j] = v;
            d[j * m + i] = v;
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::fk_value;
    use crate::rng::SeedStreams;

    #[test]
    fn graphs_match_pairwise_distances() {
        let s = SystemSpec::build("full-shift-2", &[]).unwrap();
        let mut rng = SeedStreams::new(8).stream("g");
        let pts: Vec<_> = (0..70).map(|_| s.sample(&mut rng)).collect();
        let orbits = s.orbits(&pts, 8).unwrap();
        let gs = ball_graphs(&s, &orbits, &[3, 8], 0.3, false).unwrap();
        let d = fk_matrix(&s, &orbits).unwrap();
        for i in 0..70 {
            for j in 0..70 {
                assert_eq!(gs[1].contains(i, j), d[i * 70 + j] < 0.3);
                let short = fk_value(
                    &s,
                    &orbits[i].prefix(3).unwrap(),
                    &orbits[j].prefix(3).unwrap(),
                )
                .unwrap();
                assert_eq!(gs[0].contains(i, j), short < 0.3);
            }
        }
    }

    #[test]
    fn full_set_masks_tail() {
        assert_eq!(full_set(3, 1), vec![0b111]);
        assert_eq!(full_set(64, 1), vec![u64::MAX]);
        assert_eq!(full_set(65, 2), vec![u64::MAX, 1]);
    }
}
