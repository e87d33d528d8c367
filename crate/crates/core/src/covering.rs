//! FK covers of finite samples: greedy and exact set covers, separated sets,
//! the 5r-covering selection, the small-scale Carathéodory value `M_FK` and
//! the FK-Bowen growth-rate / metric mean dimension estimators.
//!
//! Ball centers are restricted to sample points throughout.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{ensure_positive, Error, Result};
use crate::growth::{check_epsilons, check_range, growth_rate, CriticalExponentEstimate, MdimEstimate};
use crate::metrics::CrossDistances;
use crate::pairwise::{any, ball_graphs, count_and, fk_matrix, full_set, BallGraph};
use crate::rng::SeedStreams;
use crate::systems::{OrbitSegment, StatePoint, SystemSpec};

/// Largest sample the exact cover search accepts.
pub const EXACT_COVER_LIMIT: usize = 20;
/// Size limits of the mixed-length Carathéodory oracle.
pub const SMALL_SAMPLE_LIMIT: usize = 15;
pub const SMALL_LENGTH_LIMIT: usize = 10;
/// Smallest sample the seeded growth-rate estimators accept.
pub const MIN_GROWTH_SAMPLE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverMethod {
    Greedy,
    Exact,
}

/// A cover of a sample by open FK balls `B_FK_n(center, ε)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverEstimate {
    pub n: usize,
    pub epsilon: f64,
    pub count: usize,
    pub method: CoverMethod,
    pub center_indices: Vec<usize>,
    pub centers: Vec<StatePoint>,
}

fn common_n(sample: &[OrbitSegment]) -> Result<usize> {
    let n = sample.first().ok_or(Error::EmptySample)?.len();
    if let Some(o) = sample.iter().find(|o| o.len() != n) {
        return Err(Error::LengthMismatch(n, o.len()));
    }
    Ok(n)
}

fn single_graph(sys: &SystemSpec, sample: &[OrbitSegment], radius: f64, closed: bool) -> Result<BallGraph> {
    let n = common_n(sample)?;
    Ok(ball_graphs(sys, sample, &[n], radius, closed)?.remove(0))
}

/// Classical greedy set cover on a ball graph: pick the ball covering the most
/// uncovered points, lowest index on ties.
pub(crate) fn greedy_cover(g: &BallGraph) -> Vec<usize> {
    let mut uncovered = full_set(g.size(), g.words());
    let mut centers = Vec::new();
    while any(&uncovered) {
        let (best, _) = (0..g.size())
            .map(|i| (i, count_and(g.row(i), &uncovered)))
            .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        for (u, r) in uncovered.iter_mut().zip(g.row(best)) {
            *u &= !r;
        }
        centers.push(best);
    }
    centers
}

fn cover_is_valid(g: &BallGraph, centers: &[usize]) -> bool {
    (0..g.size()).all(|j| centers.iter().any(|&c| g.contains(c, j)))
}

fn estimate(
    sample: &[OrbitSegment],
    epsilon: f64,
    method: CoverMethod,
    centers: Vec<usize>,
) -> CoverEstimate {
    CoverEstimate {
        n: sample[0].len(),
        epsilon,
        count: centers.len(),
        method,
        centers: centers.iter().map(|&i| sample[i].origin().clone()).collect(),
        center_indices: centers,
    }
}

/// Greedy cover of the sample by open FK balls centred at sample points.
pub fn greedy_fk_cover(
    sys: &SystemSpec,
    sample: &[OrbitSegment],
    epsilon: f64,
) -> Result<CoverEstimate> {
    ensure_positive(epsilon, "epsilon")?;
    let g = single_graph(sys, sample, epsilon, false)?;
    let centers = greedy_cover(&g);
    if !cover_is_valid(&g, &centers) {
        return Err(Error::Verification("greedy cover misses a sample point".into()));
    }
    Ok(estimate(sample, epsilon, CoverMethod::Greedy, centers))
}

/// Minimum cover by branch and bound; sample size at most `limit` (and 64).
pub fn exact_min_cover(
    sys: &SystemSpec,
    sample: &[OrbitSegment],
    epsilon: f64,
    limit: usize,
) -> Result<CoverEstimate> {
    ensure_positive(epsilon, "epsilon")?;
    let limit = limit.min(64);
    if sample.len() > limit {
        return Err(Error::TooLarge {
            what: "exact cover",
            size: sample.len(),
            limit,
        });
    }
    let g = single_graph(sys, sample, epsilon, false)?;
    let masks: Vec<u64> = (0..g.size()).map(|i| g.mask(i)).collect();
    let best = min_cover_masks(&masks, full_set(g.size(), 1)[0])
        .expect("every sample point lies in its own ball");
    Ok(estimate(sample, epsilon, CoverMethod::Exact, best))
}

/// Smallest family of `sets` whose union contains `target` (sets indexed by position).
pub(crate) fn min_cover_masks(sets: &[u64], target: u64) -> Option<Vec<usize>> {
    struct Search<'a> {
        sets: &'a [u64],
        largest: u32,
        best: Vec<usize>,
    }
    impl Search<'_> {
        fn go(&mut self, uncovered: u64, chosen: &mut Vec<usize>) {
            if uncovered == 0 {
                if chosen.len() < self.best.len() {
                    self.best = chosen.clone();
                }
                return;
            }
            let bound = chosen.len() + uncovered.count_ones().div_ceil(self.largest) as usize;
            if bound >= self.best.len() {
                return;
            }
            let e = uncovered.trailing_zeros();
            let mut options: Vec<usize> = (0..self.sets.len())
                .filter(|&i| self.sets[i] >> e & 1 == 1)
                .collect();
            options.sort_by_key(|&i| std::cmp::Reverse((self.sets[i] & uncovered).count_ones()));
            for i in options {
                chosen.push(i);
                self.go(uncovered & !self.sets[i], chosen);
                chosen.pop();
            }
        }
    }
    let mut s = Search {
        sets,
        largest: sets.iter().map(|m| (m & target).count_ones()).max().unwrap_or(1).max(1),
        // sentinel longer than any cover
        best: vec![usize::MAX; sets.len() + 1],
    };
    s.go(target, &mut Vec::new());
    (s.best.len() <= sets.len()).then_some(s.best)
}

/// An `ε`-separated subset: pairwise `d_FK_n >= ε`, maximal in the sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatedSet {
    pub n: usize,
    pub epsilon: f64,
    pub indices: Vec<usize>,
    pub points: Vec<StatePoint>,
}

impl SeparatedSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Greedy maximal separated set in sample order.
pub fn max_separated_set(
    sys: &SystemSpec,
    sample: &[OrbitSegment],
    epsilon: f64,
) -> Result<SeparatedSet> {
    ensure_positive(epsilon, "epsilon")?;
    let g = single_graph(sys, sample, epsilon, false)?;
    let indices = greedy_independent(&g);
    // maximality: every excluded point is within ε of a chosen one
    if !cover_is_valid(&g, &indices) {
        return Err(Error::Verification("separated set is not maximal".into()));
    }
    Ok(SeparatedSet {
        n: sample[0].len(),
        epsilon,
        points: indices.iter().map(|&i| sample[i].origin().clone()).collect(),
        indices,
    })
}

/// First-fit maximal independent set of a conflict graph.
pub(crate) fn greedy_independent(g: &BallGraph) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..g.size() {
        if chosen.iter().all(|&c| !g.contains(c, i)) {
            chosen.push(i);
        }
    }
    chosen
}

/// Vitali-style selection: scan balls by decreasing radius and keep a ball
/// when its center is farther than `r_i + r_j + band` from every kept center.
/// Returns the kept indices in selection order.
pub fn five_r_cover(sys: &SystemSpec, balls: &[(OrbitSegment, f64)]) -> Result<Vec<usize>> {
    let (chosen, _) = five_r_select(sys, balls)?;
    Ok(chosen)
}

fn five_r_select(sys: &SystemSpec, balls: &[(OrbitSegment, f64)]) -> Result<(Vec<usize>, Vec<f64>)> {
    if balls.is_empty() {
        return Err(Error::EmptySample);
    }
    for (_, r) in balls {
        ensure_positive(*r, "radius")?;
    }
    let centers: Vec<OrbitSegment> = balls.iter().map(|(c, _)| c.clone()).collect();
    let m = centers.len();
    let d = fk_matrix(sys, &centers)?;
    let band = centers.iter().map(|c| c.band()).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| balls[b].1.total_cmp(&balls[a].1).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::new();
    for i in order {
        if chosen
            .iter()
            .all(|&j| d[i * m + j] > balls[i].1 + balls[j].1 + band)
        {
            chosen.push(i);
        }
    }
    Ok((chosen, d))
}

/// Outcome of checking a 5r selection against its input family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiveRReport {
    pub chosen: Vec<usize>,
    pub disjoint: bool,
    pub covered: bool,
}

/// Runs [`five_r_cover`] and re-checks disjointness and 5r-coverage of every
/// input center on exact FK distances.
pub fn five_r_check(sys: &SystemSpec, balls: &[(OrbitSegment, f64)]) -> Result<FiveRReport> {
    let (chosen, d) = five_r_select(sys, balls)?;
    let m = balls.len();
    let band = balls.iter().map(|(c, _)| c.band()).fold(0.0, f64::max);
    let disjoint = chosen.iter().enumerate().all(|(k, &i)| {
        chosen[k + 1..]
            .iter()
            .all(|&j| d[i * m + j] > balls[i].1 + balls[j].1 + band)
    });
    let covered = (0..m).all(|i| {
        chosen
            .iter()
            .any(|&j| balls[j].1 >= balls[i].1 && d[i * m + j] <= 5.0 * balls[j].1)
    });
    Ok(FiveRReport {
        chosen,
        disjoint,
        covered,
    })
}

/// For each candidate center and length `n ∈ [n_min, n_max]`, the set of
/// targets inside `B_FK_n(center, ε)` as a bit mask.
pub(crate) struct SmallBalls {
    /// `(candidate index, n, mask)`
    pub balls: Vec<(usize, usize, u64)>,
    pub targets: usize,
}

pub(crate) fn small_balls(
    sys: &SystemSpec,
    targets: &[StatePoint],
    candidates: &[StatePoint],
    epsilon: f64,
    n_min: usize,
    n_max: usize,
) -> Result<SmallBalls> {
    if targets.is_empty() || candidates.is_empty() {
        return Err(Error::EmptySample);
    }
    if targets.len() > SMALL_SAMPLE_LIMIT {
        return Err(Error::TooLarge {
            what: "small-instance target set",
            size: targets.len(),
            limit: SMALL_SAMPLE_LIMIT,
        });
    }
    if n_min == 0 || n_min > n_max {
        return Err(Error::InvalidRange(format!("need 1 <= N <= n_max, got {n_min}..={n_max}")));
    }
    if n_max > SMALL_LENGTH_LIMIT {
        return Err(Error::TooLarge {
            what: "small-instance orbit length",
            size: n_max,
            limit: SMALL_LENGTH_LIMIT,
        });
    }
    let t_orbits = sys.orbits(targets, n_max)?;
    let c_orbits = sys.orbits(candidates, n_max)?;
    let mut balls = Vec::new();
    for (ci, c) in c_orbits.iter().enumerate() {
        let mut masks = vec![0u64; n_max - n_min + 1];
        for (ti, t) in t_orbits.iter().enumerate() {
            let inside = CrossDistances::new(sys, c, t)?.within_prefixes(epsilon, false);
            for n in n_min..=n_max {
                if inside[n - 1] {
                    masks[n - n_min] |= 1 << ti;
                }
            }
        }
        for (k, mask) in masks.into_iter().enumerate() {
            if mask != 0 {
                balls.push((ci, n_min + k, mask));
            }
        }
    }
    Ok(SmallBalls {
        balls,
        targets: targets.len(),
    })
}

/// Minimum of `Σ e^{-n_i s}` over covers of all targets by the given balls,
/// by dynamic programming over subsets of still-uncovered targets.
pub(crate) fn min_weight_cover(balls: &SmallBalls, s: f64) -> Option<f64> {
    let m = balls.targets;
    let full = (1u32 << m) - 1;
    let mut by_element: Vec<Vec<(u32, f64)>> = vec![Vec::new(); m];
    for &(_, n, mask) in &balls.balls {
        let w = (-(n as f64) * s).exp();
        for (e, list) in by_element.iter_mut().enumerate() {
            if mask >> e & 1 == 1 {
                list.push((mask as u32, w));
            }
        }
    }
    let mut best = vec![f64::INFINITY; (full + 1) as usize];
    best[0] = 0.0;
    for u in 1..=full {
        let e = u.trailing_zeros() as usize;
        let mut v = f64::INFINITY;
        for &(mask, w) in &by_element[e] {
            let rest = best[(u & !mask) as usize];
            if w + rest < v {
                v = w + rest;
            }
        }
        best[u as usize] = v;
    }
    let v = best[full as usize];
    v.is_finite().then_some(v)
}

/// `M_FK(T, d, Z, s, N, ε)` on a finite sample: the exact minimum of
/// `Σ e^{-n_i s}` over covers by balls `B_FK_{n_i}(x_i, ε)` with centers in
/// the sample and `n_i ∈ [N, n_max]`.
pub fn caratheodory_value_small(
    sys: &SystemSpec,
    sample: &[StatePoint],
    epsilon: f64,
    s: f64,
    n_min: usize,
    n_max: usize,
) -> Result<f64> {
    caratheodory_value_with_centers(sys, sample, sample, epsilon, s, n_min, n_max)
}

/// [`caratheodory_value_small`] with an explicit candidate center set.
pub fn caratheodory_value_with_centers(
    sys: &SystemSpec,
    targets: &[StatePoint],
    candidates: &[StatePoint],
    epsilon: f64,
    s: f64,
    n_min: usize,
    n_max: usize,
) -> Result<f64> {
    ensure_positive(epsilon, "epsilon")?;
    if s < 0.0 {
        return Err(Error::param("s", "must be non-negative"));
    }
    let balls = small_balls(sys, targets, candidates, epsilon, n_min, n_max)?;
    min_weight_cover(&balls, s).ok_or_else(|| {
        Error::Infeasible("some target lies in no candidate ball".to_string())
    })
}

/// Greedy FK cover counts for every `n` in the range, from one DP per pair.
pub fn cover_counts(
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
    let lengths: Vec<usize> = n_range.clone().collect();
    let graphs = ball_graphs(sys, &orbits, &lengths, epsilon, false)?;
    Ok(lengths
        .into_iter()
        .zip(graphs.iter())
        .map(|(n, g)| (n, greedy_cover(g).len()))
        .collect())
}

/// Growth rate of greedy FK cover counts over a given sample.
pub fn span_growth_rate_for(
    sys: &SystemSpec,
    sample: &[StatePoint],
    epsilon: f64,
    n_range: RangeInclusive<usize>,
) -> Result<CriticalExponentEstimate> {
    let counts = cover_counts(sys, sample, epsilon, n_range)?;
    Ok(growth_rate(epsilon, counts, sample.len()))
}

pub(crate) fn seeded_sample(
    sys: &SystemSpec,
    sample_size: usize,
    seed: u64,
    stream: &str,
) -> Result<Vec<StatePoint>> {
    if sample_size < MIN_GROWTH_SAMPLE {
        return Err(Error::param(
            "samples",
            format!("need at least {MIN_GROWTH_SAMPLE} sample points, got {sample_size}"),
        ));
    }
    let mut rng = SeedStreams::new(seed).stream(stream);
    Ok((0..sample_size).map(|_| sys.sample(&mut rng)).collect())
}

/// Approximates the critical value `M_FK(T, d, Z, ε)` by the growth rate of
/// greedy cover counts of a seeded sample.
pub fn span_growth_rate(
    sys: &SystemSpec,
    sample_size: usize,
    epsilon: f64,
    n_range: RangeInclusive<usize>,
    seed: u64,
) -> Result<CriticalExponentEstimate> {
    let sample = seeded_sample(sys, sample_size, seed, "covering/sample")?;
    span_growth_rate_for(sys, &sample, epsilon, n_range)
}

/// FK-Bowen metric mean dimension proxy over an `ε` grid (one shared sample).
pub fn mdim_bowen_estimate(
    sys: &SystemSpec,
    epsilons: &[f64],
    sample_size: usize,
    n_range: RangeInclusive<usize>,
    seed: u64,
) -> Result<MdimEstimate> {
    check_epsilons(epsilons)?;
    let sample = seeded_sample(sys, sample_size, seed, "covering/sample")?;
    let estimates = epsilons
        .iter()
        .map(|&eps| span_growth_rate_for(sys, &sample, eps, n_range.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(MdimEstimate::from_estimates(estimates))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cylinders() -> (SystemSpec, Vec<StatePoint>) {
        let s = SystemSpec::build("full-shift-2", &[]).unwrap();
        let pts = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
            .iter()
            .map(|p| s.periodic_point(p).unwrap())
            .collect();
        (s, pts)
    }

    #[test]
    fn copies_of_one_orbit_need_one_ball() {
        let (s, pts) = cylinders();
        let sample = s.orbits(&vec![pts[1].clone(); 5], 4).unwrap();
        assert_eq!(greedy_fk_cover(&s, &sample, 0.01).unwrap().count, 1);
        assert_eq!(exact_min_cover(&s, &sample, 0.01, 20).unwrap().count, 1);
        assert_eq!(max_separated_set(&s, &sample, 0.01).unwrap().len(), 1);
    }

    #[test]
    fn cylinder_instance() {
        let (s, pts) = cylinders();
        let sample = s.orbits(&pts, 2).unwrap();
        assert_eq!(greedy_fk_cover(&s, &sample, 0.05).unwrap().count, 4);
        assert_eq!(exact_min_cover(&s, &sample, 0.05, 20).unwrap().count, 4);
        assert_eq!(max_separated_set(&s, &sample, 0.05).unwrap().len(), 4);
        assert_eq!(greedy_fk_cover(&s, &sample, 1.01).unwrap().count, 1);
        let v = caratheodory_value_small(&s, &pts, 0.05, 1.0, 2, 2).unwrap();
        assert!((v - 4.0 * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn exact_cover_limit() {
        let (s, pts) = cylinders();
        let sample = s.orbits(&pts, 2).unwrap();
        assert!(matches!(
            exact_min_cover(&s, &sample, 0.05, 3),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn empty_inputs() {
        let s = SystemSpec::build("full-shift-2", &[]).unwrap();
        assert_eq!(greedy_fk_cover(&s, &[], 0.1), Err(Error::EmptySample));
        assert_eq!(max_separated_set(&s, &[], 0.1), Err(Error::EmptySample));
        assert_eq!(five_r_cover(&s, &[]), Err(Error::EmptySample));
    }

    #[test]
    fn singleton_caratheodory() {
        let (s, pts) = cylinders();
        for (sv, n) in [(0.0, 3), (0.7, 2), (1.3, 4)] {
            // the longest admissible length carries the smallest weight
            let v = caratheodory_value_small(&s, &pts[..1], 0.1, sv, n, 6).unwrap();
            assert!((v - (-6.0 * sv).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn min_cover_masks_small() {
        // {0,1}, {1,2}, {2,3}, {0,3}: two sets suffice
        let sets = [0b0011, 0b0110, 0b1100, 0b1001];
        assert_eq!(min_cover_masks(&sets, 0b1111).unwrap().len(), 2);
        assert_eq!(min_cover_masks(&[0b1, 0b10], 0b11).unwrap().len(), 2);
        assert_eq!(min_cover_masks(&[0b1], 0b11), None);
    }

    #[test]
    fn identical_sample_has_zero_growth() {
        let (s, pts) = cylinders();
        let e = span_growth_rate_for(&s, &vec![pts[2].clone(); 120], 0.1, 4..=10).unwrap();
        assert_eq!(e.s_value, 0.0);
        assert!(e.per_n_counts.iter().all(|&(_, c)| c == 1));
    }

    #[test]
    fn growth_rate_rejects_bad_inputs() {
        let s = SystemSpec::build("full-shift-2", &[]).unwrap();
        assert!(span_growth_rate(&s, 50, 0.1, 4..=8, 1).is_err());
        assert!(matches!(
            span_growth_rate(&s, 100, 0.1, 4..=60, 1),
            Err(Error::Truncation { .. })
        ));
        assert!(mdim_bowen_estimate(&s, &[1.0], 100, 4..=6, 1).is_err());
    }
}
