//! Disjoint closed FK-ball families: greedy packings, the packing value
//! `P_FK` (exact on small instances, greedy plus local search otherwise), the
//! sum-in-interval construction, the decomposition infimum on toy samples and
//! the FK-Packing growth-rate / metric mean dimension estimators.
//!
//! Two closed balls `B̄_FK_n(x, ε)` and `B̄_FK_m(y, ε)` count as disjoint when
//! the centers are more than `2ε + band` apart in `d_FK_n` and in `d_FK_m`.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::covering::{greedy_independent, seeded_sample};
use crate::error::{ensure_positive, Error, Result};
use crate::growth::{check_epsilons, check_range, growth_rate, CriticalExponentEstimate, MdimEstimate};
use crate::metrics::CrossDistances;
use crate::pairwise::{ball_graphs, BallGraph};
use crate::systems::{OrbitSegment, StatePoint, SystemSpec};

/// Largest `(center, length)` vertex count solved exactly by [`packing_value`].
pub const EXACT_PACKING_LIMIT: usize = 40;
/// Largest sample accepted by [`decomposition_infimum_small`].
pub const DECOMPOSITION_LIMIT: usize = 12;

/// A certified-disjoint family of closed FK balls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingEstimate {
    /// Shortest length in the family.
    pub n: usize,
    pub epsilon: f64,
    pub count: usize,
    pub center_indices: Vec<usize>,
    pub centers: Vec<StatePoint>,
    /// Length of each ball, aligned with `centers`.
    pub lengths: Vec<usize>,
    /// `Σ e^{-n_i s}` when an exponent was supplied.
    pub sum_value: Option<f64>,
}

fn separation_radius(epsilon: f64, band: f64) -> f64 {
    2.0 * epsilon + band
}

fn family(
    sample: &[StatePoint],
    epsilon: f64,
    members: &[(usize, usize)],
    s: Option<f64>,
) -> PackingEstimate {
    PackingEstimate {
        n: members.iter().map(|m| m.1).min().unwrap_or(0),
        epsilon,
        count: members.len(),
        center_indices: members.iter().map(|m| m.0).collect(),
        centers: members.iter().map(|m| sample[m.0].clone()).collect(),
        lengths: members.iter().map(|m| m.1).collect(),
        sum_value: s.map(|s| members.iter().map(|m| (-(m.1 as f64) * s).exp()).sum()),
    }
}

/// Greedy maximal `2ε`-separated subset of a common-length sample, in
/// sample order.
pub fn greedy_fk_packing(
    sys: &SystemSpec,
    sample: &[OrbitSegment],
    epsilon: f64,
) -> Result<PackingEstimate> {
    ensure_positive(epsilon, "epsilon")?;
    let n = sample.first().ok_or(Error::EmptySample)?.len();
    let band = sample.iter().map(|o| o.band()).fold(0.0, f64::max);
    let conflicts = ball_graphs(sys, sample, &[n], separation_radius(epsilon, band), true)?.remove(0);
    let chosen = greedy_independent(&conflicts);
    let maximal = (0..conflicts.size()).all(|j| chosen.iter().any(|&c| conflicts.contains(c, j)));
    if !maximal {
        return Err(Error::Verification("greedy packing is not maximal".into()));
    }
    let origins: Vec<StatePoint> = sample.iter().map(|o| o.origin().clone()).collect();
    let members: Vec<(usize, usize)> = chosen.into_iter().map(|i| (i, n)).collect();
    Ok(family(&origins, epsilon, &members, None))
}

/// Conflict structure on `(center, length)` vertices.
struct PackingGraph {
    /// `(sample index, n)` per vertex.
    vertices: Vec<(usize, usize)>,
    /// `conflict[u]` lists the vertices that may not join `u`.
    conflict: Vec<Vec<bool>>,
}

impl PackingGraph {
    fn build(
        sys: &SystemSpec,
        sample: &[StatePoint],
        epsilon: f64,
        lengths: RangeInclusive<usize>,
    ) -> Result<Self> {
        let n_max = *lengths.end();
        let orbits = sys.orbits(sample, n_max)?;
        let band = orbits.iter().map(|o| o.band()).fold(0.0, f64::max);
        let r = separation_radius(epsilon, band);
        let m = sample.len();
        // close[i][j][n-1]: d_FK_n(x_i, x_j) <= 2ε + band
        let mut close = vec![vec![vec![true; n_max]; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                let c = CrossDistances::new(sys, &orbits[i], &orbits[j])?.within_prefixes(r, true);
                close[j][i] = c.clone();
                close[i][j] = c;
            }
        }
        let vertices: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| lengths.clone().map(move |n| (i, n)))
            .collect();
        let conflict = vertices
            .iter()
            .map(|&(i, n)| {
                vertices
                    .iter()
                    .map(|&(j, k)| i == j || close[i][j][n - 1] || close[i][j][k - 1])
                    .collect()
            })
            .collect();
        Ok(Self { vertices, conflict })
    }

    fn compatible(&self, family: &[usize], v: usize) -> bool {
        family.iter().all(|&u| !self.conflict[u][v])
    }
}

/// Maximum-weight independent set by branch and bound on `u64` masks.
fn exact_max_weight(conflict: &[u64], weights: &[f64], candidates: u64) -> (f64, u64) {
    fn go(conflict: &[u64], w: &[f64], cand: u64, cur: f64, chosen: u64, best: &mut (f64, u64)) {
        if cand == 0 {
            if cur > best.0 {
                *best = (cur, chosen);
            }
            return;
        }
        let mut bound = cur;
        let mut rest = cand;
        while rest != 0 {
            bound += w[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        if bound <= best.0 {
            return;
        }
        // branch on the heaviest candidate
        let mut v = cand.trailing_zeros() as usize;
        let mut rest = cand;
        while rest != 0 {
            let u = rest.trailing_zeros() as usize;
            if w[u] > w[v] {
                v = u;
            }
            rest &= rest - 1;
        }
        go(conflict, w, cand & !conflict[v] & !(1 << v), cur + w[v], chosen | 1 << v, best);
        go(conflict, w, cand & !(1 << v), cur, chosen, best);
    }
    let mut best = (0.0, 0);
    go(conflict, weights, candidates, 0.0, 0, &mut best);
    best
}

fn masks(graph: &PackingGraph) -> Vec<u64> {
    graph
        .conflict
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(0u64, |acc, (j, &c)| if c { acc | 1 << j } else { acc })
        })
        .collect()
}

fn weights(graph: &PackingGraph, s: f64) -> Vec<f64> {
    graph.vertices.iter().map(|&(_, n)| (-(n as f64) * s).exp()).collect()
}

fn value_of(w: &[f64], members: &[usize]) -> f64 {
    members.iter().map(|&v| w[v]).sum()
}

/// Greedy packings at each single length, then hill climbing: add any
/// compatible vertex, or swap a member for a heavier compatible vertex.
fn heuristic_packing(graph: &PackingGraph, w: &[f64]) -> Vec<usize> {
    let lengths: Vec<usize> = {
        let mut l: Vec<usize> = graph.vertices.iter().map(|v| v.1).collect();
        l.sort_unstable();
        l.dedup();
        l
    };
    let mut best: Vec<usize> = Vec::new();
    for n in lengths {
        let mut fam: Vec<usize> = Vec::new();
        for v in (0..graph.vertices.len()).filter(|&v| graph.vertices[v].1 == n) {
            if graph.compatible(&fam, v) {
                fam.push(v);
            }
        }
        if value_of(w, &fam) > value_of(w, &best) {
            best = fam;
        }
    }
    loop {
        let mut improved = false;
        for v in 0..graph.vertices.len() {
            if !best.contains(&v) && graph.compatible(&best, v) {
                best.push(v);
                improved = true;
            }
        }
        for k in 0..best.len() {
            let old = best[k];
            let rest: Vec<usize> = best.iter().copied().filter(|&u| u != old).collect();
            if let Some(v) = (0..graph.vertices.len())
                .find(|&v| w[v] > w[old] && !best.contains(&v) && graph.compatible(&rest, v))
            {
                best[k] = v;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    best.sort_unstable();
    best
}

fn check_lengths(sys: &SystemSpec, n_min: usize, n_max: usize) -> Result<()> {
    check_range(&(n_min..=n_max), sys.max_orbit_len())
}

/// Best family found for `P_FK(T, d, Z, s, N, ε)` with lengths in
/// `[N, n_max]` and centers in the sample.
pub fn packing_family(
    sys: &SystemSpec,
    sample: &[StatePoint],
    epsilon: f64,
    s: f64,
    n_min: usize,
    n_max: usize,
) -> Result<PackingEstimate> {
    ensure_positive(epsilon, "epsilon")?;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    check_lengths(sys, n_min, n_max)?;
    let graph = PackingGraph::build(sys, sample, epsilon, n_min..=n_max)?;
    let w = weights(&graph, s);
    let members = if graph.vertices.len() <= EXACT_PACKING_LIMIT {
        let all = if graph.vertices.len() == 64 {
            u64::MAX
        } else {
            (1u64 << graph.vertices.len()) - 1
        };
        let (_, chosen) = exact_max_weight(&masks(&graph), &w, all);
        (0..graph.vertices.len()).filter(|&v| chosen >> v & 1 == 1).collect()
    } else {
        heuristic_packing(&graph, &w)
    };
    let pairs: Vec<(usize, usize)> = members.iter().map(|&v| graph.vertices[v]).collect();
    Ok(family(sample, epsilon, &pairs, Some(s)))
}

/// `P_FK(T, d, Z, s, N, ε)` restricted to the sample: exact when there are at
/// most [`EXACT_PACKING_LIMIT`] `(center, length)` pairs, otherwise the best
/// of greedy single-length packings improved by local search (a lower bound).
pub fn packing_value(
    sys: &SystemSpec,
    sample: &[StatePoint],
    epsilon: f64,
    s: f64,
    n_min: usize,
    n_max: usize,
) -> Result<f64> {
    Ok(packing_family(sys, sample, epsilon, s, n_min, n_max)?
        .sum_value
        .unwrap_or(0.0))
}

/// Smallest `N1 >= max(N, 1)` with `e^{-s N1} < gap`.
pub fn interval_start_length(s: f64, n_min: usize, gap: f64) -> Result<usize> {
    if s == 0.0 {
        return if gap > 1.0 {
            Ok(n_min.max(1))
        } else {
            Err(Error::Infeasible(
                "with s = 0 every ball weighs 1, so b - a must exceed 1".into(),
            ))
        };
    }
    let mut k = ((-gap.ln()) / s).floor().max(0.0) as usize;
    while (-(k as f64) * s).exp() >= gap {
        k += 1;
    }
    Ok(k.max(n_min).max(1))
}

/// The constructive recipe: pick `N1 >= N` with `e^{-s N1} < b - a`, build a
/// family at lengths `[N1, N1 + 2]` whose sum exceeds `b`, then drop members
/// one at a time until the sum enters `(a, b)`.
pub fn packing_sum_in_interval(
    sys: &SystemSpec,
    sample: &[StatePoint],
    epsilon: f64,
    s: f64,
    n_min: usize,
    a: f64,
    b: f64,
) -> Result<PackingEstimate> {
    if !(0.0 <= a && a < b && b.is_finite()) {
        return Err(Error::InvalidRange(format!("need 0 <= a < b, got a = {a}, b = {b}")));
    }
    if s < 0.0 {
        return Err(Error::param("s", "must be non-negative"));
    }
    let n1 = interval_start_length(s, n_min, b - a)?;
    let budget = sys.max_orbit_len();
    if n1 > budget {
        return Err(Error::Truncation {
            requested: n1,
            max: budget,
        });
    }
    let top = (n1 + 2).min(budget);
    let mut fam = packing_family(sys, sample, epsilon, s, n1, top)?;
    let mut sum = fam.sum_value.unwrap_or(0.0);
    if sum <= b {
        return Err(Error::Infeasible(format!(
            "best family sum {sum} does not exceed b = {b}"
        )));
    }
    while sum >= b {
        fam.center_indices.pop();
        fam.centers.pop();
        let n = fam.lengths.pop().expect("sum exceeds b, so the family is nonempty");
        sum -= (-(n as f64) * s).exp();
    }
    // recompute rather than trust the running difference
    sum = fam.lengths.iter().map(|&n| (-(n as f64) * s).exp()).sum();
    if !(a < sum && sum < b) {
        return Err(Error::Verification(format!("discarding ended at {sum}, outside ({a}, {b})")));
    }
    fam.count = fam.centers.len();
    fam.n = fam.lengths.iter().copied().min().unwrap_or(n1);
    fam.sum_value = Some(sum);
    Ok(fam)
}

/// Checks the pairwise separation certificate of a mixed-length family.
pub fn verify_packing(
    sys: &SystemSpec,
    family: &PackingEstimate,
) -> Result<bool> {
    let n_max = family.lengths.iter().copied().max().unwrap_or(1);
    let orbits = sys.orbits(&family.centers, n_max)?;
    let band = orbits.iter().map(|o| o.band()).fold(0.0, f64::max);
    let r = separation_radius(family.epsilon, band);
    for i in 0..orbits.len() {
        for j in i + 1..orbits.len() {
            let close = CrossDistances::new(sys, &orbits[i], &orbits[j])?.within_prefixes(r, true);
            if close[family.lengths[i] - 1] || close[family.lengths[j] - 1] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `𝒫_FK(T, d, Z, s, ε)` on a toy sample: the minimum over set partitions
/// `{Z_i}` of `Σ_i P_FK(Z_i)`, each term solved exactly.
pub fn decomposition_infimum_small(
    sys: &SystemSpec,
    sample: &[StatePoint],
    epsilon: f64,
    s: f64,
    n_min: usize,
    n_max: usize,
) -> Result<f64> {
    ensure_positive(epsilon, "epsilon")?;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.len() > DECOMPOSITION_LIMIT {
        return Err(Error::TooLarge {
            what: "decomposition sample",
            size: sample.len(),
            limit: DECOMPOSITION_LIMIT,
        });
    }
    check_lengths(sys, n_min, n_max)?;
    let graph = PackingGraph::build(sys, sample, epsilon, n_min..=n_max)?;
    if graph.vertices.len() > 64 {
        return Err(Error::TooLarge {
            what: "decomposition (center, length) pairs",
            size: graph.vertices.len(),
            limit: 64,
        });
    }
    let conflict = masks(&graph);
    let w = weights(&graph, s);
    let m = sample.len();
    let full = (1usize << m) - 1;
    let vertices_of = |subset: usize| -> u64 {
        graph
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, &(i, _))| subset >> i & 1 == 1)
            .fold(0u64, |acc, (v, _)| acc | 1 << v)
    };
    let packing: Vec<f64> = (0..=full)
        .map(|subset| exact_max_weight(&conflict, &w, vertices_of(subset)).0)
        .collect();
    let mut best = vec![f64::INFINITY; full + 1];
    best[0] = 0.0;
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        // blocks containing the lowest element: low | sub for sub ⊆ rest
        let mut sub = rest;
        loop {
            let block = low | sub;
            let v = packing[block] + best[mask ^ block];
            if v < best[mask] {
                best[mask] = v;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    Ok(best[full])
}

/// Greedy FK packing counts for every `n` in the range.
pub fn packing_counts(
    sys: &SystemSpec,
    sample: &[StatePoint],
    epsilon: f64,
    n_range: RangeInclusive<usize>,
) -> Result<Vec<(usize, usize)>> {
    ensure_positive(epsilon, "epsilon")?;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    check_range(&n_range, sys.max_orbit_len())?;
    let orbits = sys.orbits(sample, *n_range.end())?;
    let band = orbits.iter().map(|o| o.band()).fold(0.0, f64::max);
    let lengths: Vec<usize> = n_range.collect();
    let graphs: Vec<BallGraph> =
        ball_graphs(sys, &orbits, &lengths, separation_radius(epsilon, band), true)?;
    Ok(lengths
        .into_iter()
        .zip(&graphs)
        .map(|(n, g)| (n, greedy_independent(g).len()))
        .collect())
}

pub fn packing_growth_rate_for(
    sys: &SystemSpec,
    sample: &[StatePoint],
    epsilon: f64,
    n_range: RangeInclusive<usize>,
) -> Result<CriticalExponentEstimate> {
    let counts = packing_counts(sys, sample, epsilon, n_range)?;
    Ok(growth_rate(epsilon, counts, sample.len()))
}

/// Growth rate of greedy packing counts over a seeded sample.
pub fn packing_growth_rate(
    sys: &SystemSpec,
    sample_size: usize,
    epsilon: f64,
    n_range: RangeInclusive<usize>,
    seed: u64,
) -> Result<CriticalExponentEstimate> {
    let sample = seeded_sample(sys, sample_size, seed, "packing/sample")?;
    packing_growth_rate_for(sys, &sample, epsilon, n_range)
}

/// FK-Packing metric mean dimension proxy over an `ε` grid.
pub fn mdim_packing_estimate(
    sys: &SystemSpec,
    epsilons: &[f64],
    sample_size: usize,
    n_range: RangeInclusive<usize>,
    seed: u64,
) -> Result<MdimEstimate> {
    check_epsilons(epsilons)?;
    let sample = seeded_sample(sys, sample_size, seed, "packing/sample")?;
    let estimates = epsilons
        .iter()
        .map(|&eps| packing_growth_rate_for(sys, &sample, eps, n_range.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(MdimEstimate::from_estimates(estimates))
}
