//! Weighted FK covers on small instances: the discretized `W_FK` as a
//! fractional covering LP, the sandwich between `M_FK` at two scales, and the
//! Frostman-type measure read off the LP dual.
//!
//! Centers range over a finite candidate set and lengths over `[N, n_max]`.

use serde::Serialize;

use crate::covering::{caratheodory_value_with_centers, min_weight_cover, small_balls};
use crate::error::{ensure_positive, Error, Result};
use crate::local_entropy::{EmpiricalMeasure, MeasureSource};
use crate::lp::{certify, solve_packing_lp};
use crate::metrics::CrossDistances;
use crate::systems::{StatePoint, SystemSpec};

/// Tolerance for LP certificates and measure constraints.
pub const LP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedItem {
    pub center: StatePoint,
    pub n: usize,
    pub weight: f64,
}

/// An optimal fractional cover `Σ c_i χ_{B_i} >= χ_Z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedCover {
    /// Balls with positive weight.
    pub items: Vec<WeightedItem>,
    pub target: Vec<StatePoint>,
    pub epsilon: f64,
    pub s: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// `Σ c_i e^{-n_i s}`.
    pub value: f64,
    /// Optimal packing-side weights on the targets (the LP dual).
    pub target_weights: Vec<f64>,
}

/// Discretized `W_FK(T, χ_Z, d, X, s, N, ε)`: the exact LP optimum, certified by
/// matching primal and dual objectives within [`LP_TOLERANCE`].
pub fn weighted_cover_value_small(
    sys: &SystemSpec,
    target: &[StatePoint],
    candidates: &[StatePoint],
    epsilon: f64,
    s: f64,
    n_min: usize,
    n_max: usize,
) -> Result<WeightedCover> {
    ensure_positive(epsilon, "epsilon")?;
    if s < 0.0 {
        return Err(Error::param("s", "must be non-negative"));
    }
    let balls = small_balls(sys, target, candidates, epsilon, n_min, n_max)?;
    let reach = balls.balls.iter().fold(0u64, |acc, b| acc | b.2);
    let lonely: Vec<usize> = (0..target.len()).filter(|&z| reach >> z & 1 == 0).collect();
    if !lonely.is_empty() {
        return Err(Error::Infeasible(format!(
            "target points {lonely:?} lie in no candidate ball"
        )));
    }
    let a: Vec<Vec<f64>> = balls
        .balls
        .iter()
        .map(|&(_, _, mask)| (0..target.len()).map(|z| (mask >> z & 1) as f64).collect())
        .collect();
    let b: Vec<f64> = balls
        .balls
        .iter()
        .map(|&(_, n, _)| (-(n as f64) * s).exp())
        .collect();
    let c = vec![1.0; target.len()];
    let sol = solve_packing_lp(&a, &b, &c)?;
    if !certify(&a, &b, &c, &sol, LP_TOLERANCE) {
        return Err(Error::Verification("weighted cover LP certificate failed".into()));
    }
    let items: Vec<WeightedItem> = balls
        .balls
        .iter()
        .zip(&sol.dual)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&(ci, n, _), &w)| WeightedItem {
            center: candidates[ci].clone(),
            n,
            weight: w,
        })
        .collect();
    Ok(WeightedCover {
        items,
        target: target.to_vec(),
        epsilon,
        s,
        n_min,
        n_max,
        value: sol.objective,
        target_weights: sol.primal.iter().map(|&y| y.max(0.0)).collect(),
    })
}

/// `sup_{n >= N} n² e^{-nδ}`.
pub fn n_squared_bound(delta: f64, n_min: usize) -> f64 {
    let f = |n: f64| n * n * (-n * delta).exp();
    let peak = 2.0 / delta;
    let n0 = n_min as f64;
    if n0 >= peak {
        f(n0)
    } else {
        f(peak.floor().max(n0)).max(f(peak.ceil()))
    }
}

/// The length hypothesis: `N > 2` and `n² e^{-nδ} < 1` for every `n >= N`.
pub fn length_hypothesis_holds(delta: f64, n_min: usize) -> bool {
    delta > 0.0 && n_min > 2 && n_squared_bound(delta, n_min) < 1.0
}

/// Smallest `N` satisfying [`length_hypothesis_holds`].
pub fn smallest_admissible_length(delta: f64) -> Option<usize> {
    if !(delta > 0.0) {
        return None;
    }
    (3..100_000).find(|&n| length_hypothesis_holds(delta, n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub epsilon: f64,
    pub s: f64,
    pub delta: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// `M_FK(s + δ, N, 6ε)`.
    pub lower: f64,
    /// `W_FK(s, N, ε)`.
    pub weighted: f64,
    /// `M_FK(s, N, ε)`.
    pub upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub tolerance: f64,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.lower_holds && self.upper_holds
    }
}

/// Evaluates `M(6ε, s+δ) <= W(ε, s) <= M(ε, s)` on one instance, all three
/// over the same candidate centers and length window.
#[allow(clippy::too_many_arguments)]
pub fn sandwich_check(
    sys: &SystemSpec,
    target: &[StatePoint],
    candidates: &[StatePoint],
    epsilon: f64,
    s: f64,
    delta: f64,
    n_min: usize,
    n_max: usize,
) -> Result<SandwichReport> {
    ensure_positive(delta, "delta")?;
    if !length_hypothesis_holds(delta, n_min) {
        return Err(Error::Hypothesis(format!(
            "need N > 2 and n²e^(-nδ) < 1 for all n >= N; N = {n_min}, δ = {delta}, sup = {:.4}",
            n_squared_bound(delta, n_min)
        )));
    }
    let weighted =
        weighted_cover_value_small(sys, target, candidates, epsilon, s, n_min, n_max)?.value;
    let upper = caratheodory_value_with_centers(sys, target, candidates, epsilon, s, n_min, n_max)?;
    let wide = small_balls(sys, target, candidates, 6.0 * epsilon, n_min, n_max)?;
    let lower = min_weight_cover(&wide, s + delta)
        .ok_or_else(|| Error::Infeasible("some target lies in no candidate ball".into()))?;
    Ok(SandwichReport {
        epsilon,
        s,
        delta,
        n_min,
        n_max,
        lower,
        weighted,
        upper,
        lower_holds: lower <= weighted + LP_TOLERANCE,
        upper_holds: weighted <= upper + LP_TOLERANCE,
        tolerance: LP_TOLERANCE,
    })
}

/// A probability measure on `K` whose FK-ball masses obey `e^{-sn}/c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrostmanMeasure {
    pub measure: EmpiricalMeasure,
    /// `c = W_FK(K, s, N, ε)`.
    pub c: f64,
    /// `max_{x, n} (μ(B_FK_n(x, ε)) - e^{-sn}/c)`; non-positive up to tolerance.
    pub max_excess: f64,
    pub constraints_checked: usize,
}

/// Searches for `μ` on `K` with `μ(B_FK_n(x, ε)) <= e^{-sn}/c` for every
/// `x ∈ K`, `n ∈ [N, n_max]`. The candidate is the normalised LP dual; every
/// constraint is re-checked on fresh distance computations.
pub fn frostman_measure_small(
    sys: &SystemSpec,
    k: &[StatePoint],
    epsilon: f64,
    s: f64,
    n_min: usize,
    n_max: usize,
) -> Result<FrostmanMeasure> {
    let cover = weighted_cover_value_small(sys, k, k, epsilon, s, n_min, n_max)?;
    let c = cover.value;
    if !(c > 0.0) {
        return Err(Error::NonPositive("W_FK"));
    }
    let p: Vec<f64> = cover.target_weights.iter().map(|y| y / c).collect();
    let total: f64 = p.iter().sum();
    let atoms: Vec<(StatePoint, f64)> = k
        .iter()
        .zip(&p)
        .filter(|(_, &w)| w > 0.0)
        .map(|(x, &w)| (x.clone(), w / total))
        .collect();
    let measure = EmpiricalMeasure::new(atoms, MeasureSource::Explicit)?;
    let (max_excess, checked) = frostman_excess(sys, &measure, k, epsilon, s, c, n_min, n_max)?;
    if max_excess > LP_TOLERANCE {
        return Err(Error::Infeasible(format!(
            "discretized mass constraints conflict (excess {max_excess:e})"
        )));
    }
    Ok(FrostmanMeasure {
        measure,
        c,
        max_excess,
        constraints_checked: checked,
    })
}

/// Largest violation of `μ(B_FK_n(x, ε)) <= e^{-sn}/c` over centers and lengths.
#[allow(clippy::too_many_arguments)]
pub fn frostman_excess(
    sys: &SystemSpec,
    mu: &EmpiricalMeasure,
    centers: &[StatePoint],
    epsilon: f64,
    s: f64,
    c: f64,
    n_min: usize,
    n_max: usize,
) -> Result<(f64, usize)> {
    let atoms = mu.atom_orbits(sys, n_max)?;
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for x in centers {
        let xo = sys.orbit(x, n_max)?;
        let mut mass = vec![0.0; n_max];
        for (o, (_, w)) in atoms.iter().zip(mu.atoms()) {
            for (m, hit) in mass
                .iter_mut()
                .zip(CrossDistances::new(sys, &xo, o)?.within_prefixes(epsilon, false))
            {
                if hit {
                    *m += w;
                }
            }
        }
        for n in n_min..=n_max {
            worst = worst.max(mass[n - 1] - (-(n as f64) * s).exp() / c);
            checked += 1;
        }
    }
    Ok((worst, checked))
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
    fn single_target() {
        let (s, pts) = cylinders();
        let w = weighted_cover_value_small(&s, &pts[..1], &pts[..1], 0.1, 0.7, 3, 3).unwrap();
        assert!((w.value - (-2.1f64).exp()).abs() < 1e-12);
        assert_eq!(w.items.len(), 1);
        assert!((w.items[0].weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lonely_targets_are_named() {
        let (s, pts) = cylinders();
        let err = weighted_cover_value_small(&s, &pts, &pts[..2], 0.05, 1.0, 2, 2).unwrap_err();
        assert_eq!(
            err,
            Error::Infeasible("target points [2, 3] lie in no candidate ball".into())
        );
    }

    #[test]
    fn hypothesis_bound() {
        assert!(length_hypothesis_holds(1.0, 3));
        assert!(!length_hypothesis_holds(1.0, 2));
        assert!(!length_hypothesis_holds(0.5, 8));
        assert!(length_hypothesis_holds(0.5, 9));
        assert_eq!(smallest_admissible_length(0.5), Some(9));
        let (s, pts) = cylinders();
        assert!(matches!(
            sandwich_check(&s, &pts, &pts, 0.1, 0.5, 0.5, 4, 6),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn separated_uniform_frostman() {
        let (s, pts) = cylinders();
        let f = frostman_measure_small(&s, &pts, 0.05, 1.0, 2, 2).unwrap();
        // each ball holds exactly one point, so c = 4 e^{-2} and μ is uniform
        assert!((f.c - 4.0 * (-2.0f64).exp()).abs() < 1e-12);
        assert!(f.measure.atoms().iter().all(|(_, w)| (w - 0.25).abs() < 1e-12));
        assert!(f.max_excess <= LP_TOLERANCE);
    }

    #[test]
    fn dirac_frostman() {
        let (s, pts) = cylinders();
        let f = frostman_measure_small(&s, &pts[2..3], 0.2, 0.4, 5, 5).unwrap();
        assert!((f.c - (-2.0f64).exp()).abs() < 1e-12);
        assert!(f.max_excess.abs() < 1e-12);
    }
}
