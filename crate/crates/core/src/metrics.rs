//! Orbit-segment distances: Bowen `d_n`, mean `d̄_n`, the thresholded matching
//! dynamic program behind `f̄_{n,δ}`, and the Feldman-Katok distance `d_FK_n`.
//!
//! `f̄_{n,δ}` is a non-increasing, left-continuous step function of `δ` whose
//! jumps sit at the iterate distances `d(T^i x, T^j y)`. Consequently
//! `d_FK_n(x,y) = inf{δ : f̄_{n,δ} < δ}` is the smallest candidate `c` among
//! those jumps and the levels `k/n` with `f̄_{n,c+} <= c`, where `f̄_{n,c+}`
//! counts pairs with distance `<= c`. The same argument gives one-DP ball
//! tests:
//!
//! * `d_FK_n(x,y) < ε`  iff `f̄_{n,ε} < ε` (pairs with `d < ε`),
//! * `d_FK_n(x,y) <= ε` iff `f̄_{n,ε+} <= ε` (pairs with `d <= ε`).

use serde::Serialize;

use crate::error::{ensure_positive, Error, Result};
use crate::systems::{horner, real_gap, symbol_gap, OrbitSegment, SystemKind, SystemSpec};

/// Which comparison admits a pair `(i, j)` into a match at threshold `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threshold {
    /// `d(T^i x, T^j y) < δ`
    Strict,
    /// `d(T^i x, T^j y) <= δ`
    Inclusive,
}

impl Threshold {
    #[inline]
    fn admits(self, d: f64, delta: f64) -> bool {
        match self {
            Threshold::Strict => d < delta,
            Threshold::Inclusive => d <= delta,
        }
    }
}

fn check_lengths(a: &OrbitSegment, b: &OrbitSegment) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::NonPositive("n"));
    }
    Ok(a.len())
}

/// `d_n(x,y) = max_i d(T^i x, T^i y)`.
pub fn bowen_distance(sys: &SystemSpec, a: &OrbitSegment, b: &OrbitSegment) -> Result<f64> {
    check_lengths(a, b)?;
    Ok(a.points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| sys.base_distance(p, q))
        .fold(0.0, f64::max))
}

/// `d̄_n(x,y) = (1/n) sum_i d(T^i x, T^i y)`.
pub fn average_distance(sys: &SystemSpec, a: &OrbitSegment, b: &OrbitSegment) -> Result<f64> {
    let n = check_lengths(a, b)?;
    let sum: f64 = a
        .points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| sys.base_distance(p, q))
        .sum();
    Ok(sum / n as f64)
}

/// Shift tables via `d(T^i x, T^j y) = (gap(x_i, y_j) + d(T^{i+1} x, T^{j+1} y)) / 2`,
/// filled from the last row and column (evaluated directly) inwards.
fn shift_table<F: Fn(f64, f64) -> f64>(
    a: &OrbitSegment,
    b: &OrbitSegment,
    gap: F,
) -> Vec<f64> {
    let n = a.len();
    let (x, y) = (a.origin().coords(), b.origin().coords());
    debug_assert!(n <= x.len() && n <= y.len());
    let mut d = vec![0.0; n * n];
    // T^i x carries the coordinates x[i..]
    for j in 0..n {
        d[(n - 1) * n + j] = horner(&x[n - 1..], &y[j..], &gap);
    }
    for i in 0..n - 1 {
        d[i * n + n - 1] = horner(&x[i..], &y[n - 1..], &gap);
    }
    for i in (0..n - 1).rev() {
        let (head, tail) = d.split_at_mut((i + 1) * n);
        let row = &mut head[i * n..];
        let below = &tail[..n];
        for j in 0..n - 1 {
            row[j] = 0.5 * (gap(x[i], y[j]) + below[j + 1]);
        }
    }
    d
}

/// The `n x n` table `d(T^i x, T^j y)` for one pair of orbits.
#[derive(Debug, Clone)]
pub struct CrossDistances {
    n: usize,
    d: Vec<f64>,
    band: f64,
    identical: bool,
}

impl CrossDistances {
    pub fn new(sys: &SystemSpec, a: &OrbitSegment, b: &OrbitSegment) -> Result<Self> {
        let n = check_lengths(a, b)?;
        let d = match sys.kind() {
            SystemKind::FullShift { .. } => shift_table(a, b, symbol_gap),
            SystemKind::UnitCubeShift => shift_table(a, b, real_gap),
            _ => {
                let mut d = vec![0.0; n * n];
                for (i, p) in a.points().iter().enumerate() {
                    for (j, q) in b.points().iter().enumerate() {
                        d[i * n + j] = sys.base_distance(p, q);
                    }
                }
                d
            }
        };
        Ok(Self {
            n,
            d,
            band: a.band().max(b.band()),
            identical: a.origin() == b.origin(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// Truncation band inherited from the two orbits.
    pub fn band(&self) -> f64 {
        self.band
    }

    /// Both orbits start from the same encoding.
    pub fn identical(&self) -> bool {
        self.identical
    }

    /// Largest order-preserving match whose pairs pass `threshold` at `delta`.
    pub fn max_match(&self, delta: f64, threshold: Threshold) -> usize {
        *self
            .prefix_max_matches(delta, threshold)
            .last()
            .expect("orbits are nonempty")
    }

    /// Max match sizes of every prefix: entry `k - 1` belongs to the orbits
    /// truncated to their first `k` points. One DP pass serves all lengths
    /// because the LCS cell `(k, k)` only sees the top-left `k x k` block.
    pub fn prefix_max_matches(&self, delta: f64, threshold: Threshold) -> Vec<usize> {
        if self.n <= 64 {
            self.prefix_matches_bits(delta, threshold)
        } else {
            self.prefix_matches_scalar(delta, threshold)
        }
    }

    /// Bit-parallel LCS: after row `i`, the zero bits of `v` below `j` count
    /// the LCS of the first `i` rows against the first `j` columns.
    fn prefix_matches_bits(&self, delta: f64, threshold: Threshold) -> Vec<usize> {
        let n = self.n;
        let mut out = Vec::with_capacity(n);
        let mut v = u64::MAX;
        for i in 0..n {
            let row = &self.d[i * n..(i + 1) * n];
            let mut m = 0u64;
            for (j, &d) in row.iter().enumerate() {
                m |= (threshold.admits(d, delta) as u64) << j;
            }
            let u = v & m;
            v = v.wrapping_add(u) | (v & !m);
            let k = i + 1;
            let low = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
            out.push(k - (v & low).count_ones() as usize);
        }
        out
    }

    fn prefix_matches_scalar(&self, delta: f64, threshold: Threshold) -> Vec<usize> {
        let n = self.n;
        let mut out = Vec::with_capacity(n);
        let mut prev = vec![0u32; n + 1];
        let mut cur = vec![0u32; n + 1];
        for i in 1..=n {
            let row = &self.d[(i - 1) * n..i * n];
            for j in 1..=n {
                let diag = prev[j - 1] + threshold.admits(row[j - 1], delta) as u32;
                cur[j] = diag.max(prev[j]).max(cur[j - 1]);
            }
            out.push(cur[i] as usize);
            std::mem::swap(&mut prev, &mut cur);
        }
        out
    }

    /// An optimal match, recovered by backtracking the full DP table.
    pub fn optimal_match(&self, delta: f64, threshold: Threshold) -> Vec<(usize, usize)> {
        let n = self.n;
        let w = n + 1;
        let mut t = vec![0u32; w * w];
        for i in 1..=n {
            for j in 1..=n {
                let hit = threshold.admits(self.get(i - 1, j - 1), delta) as u32;
                t[i * w + j] = (t[(i - 1) * w + j - 1] + hit)
                    .max(t[(i - 1) * w + j])
                    .max(t[i * w + j - 1]);
            }
        }
        let mut pairs = Vec::with_capacity(t[n * w + n] as usize);
        let (mut i, mut j) = (n, n);
        while i > 0 && j > 0 {
            let here = t[i * w + j];
            if here == t[(i - 1) * w + j] {
                i -= 1;
            } else if here == t[i * w + j - 1] {
                j -= 1;
            } else {
                pairs.push((i - 1, j - 1));
                i -= 1;
                j -= 1;
            }
        }
        pairs.reverse();
        pairs
    }

    fn unmatched_fraction(&self, matched: usize) -> f64 {
        (self.n - matched) as f64 / self.n as f64
    }

    /// `f̄_{n,δ}` with the given admission rule.
    pub fn f_bar(&self, delta: f64, threshold: Threshold) -> f64 {
        self.unmatched_fraction(self.max_match(delta, threshold))
    }

    /// Sorted, deduplicated breakpoints `{d(T^i x, T^j y)} ∪ {k/n : 0 <= k <= n}`.
    pub fn candidates(&self) -> Vec<f64> {
        let n = self.n;
        let mut c: Vec<f64> = self.d.clone();
        c.extend((0..=n).map(|k| k as f64 / n as f64));
        c.sort_by(f64::total_cmp);
        c.dedup();
        c
    }

    /// `f̄_{n,c+} <= c`, i.e. `d_FK_n <= c`.
    fn closed_predicate(&self, c: f64) -> bool {
        self.f_bar(c, Threshold::Inclusive) <= c
    }

    /// Exact `d_FK_n` by binary search over the breakpoints.
    pub fn fk_exact(&self) -> f64 {
        if self.identical {
            return 0.0;
        }
        let c = self.candidates();
        let idx = c.partition_point(|&v| !self.closed_predicate(v));
        // the largest candidate is >= 1 >= f̄, so the predicate holds there
        c[idx.min(c.len() - 1)]
    }

    /// `d_FK_n` to within `tol` by bisection on `[0, 1]`; returns an upper bound.
    pub fn fk_bisect(&self, tol: f64) -> f64 {
        if self.identical || self.closed_predicate(0.0) {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.closed_predicate(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// `d_FK_n < r` (open) or `d_FK_n <= r` (closed), one DP each.
    pub fn within(&self, r: f64, closed: bool) -> bool {
        if self.identical {
            return if closed { r >= 0.0 } else { r > 0.0 };
        }
        if closed {
            self.f_bar(r, Threshold::Inclusive) <= r
        } else {
            self.f_bar(r, Threshold::Strict) < r
        }
    }

    /// [`Self::within`] for every prefix length `1..=n`.
    pub fn within_prefixes(&self, r: f64, closed: bool) -> Vec<bool> {
        if self.identical {
            return vec![if closed { r >= 0.0 } else { r > 0.0 }; self.n];
        }
        let threshold = if closed {
            Threshold::Inclusive
        } else {
            Threshold::Strict
        };
        self.prefix_max_matches(r, threshold)
            .into_iter()
            .enumerate()
            .map(|(k, m)| {
                let len = k + 1;
                let f = (len - m) as f64 / len as f64;
                if closed {
                    f <= r
                } else {
                    f < r
                }
            })
            .collect()
    }
}

/// Largest `|π|` over `(n, δ)`-matches of the two orbits.
pub fn max_match_size(
    sys: &SystemSpec,
    a: &OrbitSegment,
    b: &OrbitSegment,
    delta: f64,
) -> Result<usize> {
    ensure_positive(delta, "delta")?;
    Ok(CrossDistances::new(sys, a, b)?.max_match(delta, Threshold::Strict))
}

/// `f̄_{n,δ}(x,y) = 1 - max|π| / n`.
pub fn f_bar(sys: &SystemSpec, a: &OrbitSegment, b: &OrbitSegment, delta: f64) -> Result<f64> {
    ensure_positive(delta, "delta")?;
    Ok(CrossDistances::new(sys, a, b)?.f_bar(delta, Threshold::Strict))
}

/// An order-preserving partial bijection between time indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchCertificate {
    pub pairs: Vec<(usize, usize)>,
    pub delta: f64,
    pub n: usize,
}

impl MatchCertificate {
    pub fn size(&self) -> usize {
        self.pairs.len()
    }

    /// Checks the certificate from scratch against the orbits: strict
    /// monotonicity, index bounds, `d(T^i x, T^j y) < delta + band` for every
    /// pair, and `1 - |π|/n < delta` (so it witnesses `d_FK_n <= delta`).
    pub fn verify(
        &self,
        sys: &SystemSpec,
        a: &OrbitSegment,
        b: &OrbitSegment,
        band: f64,
    ) -> Result<()> {
        let n = check_lengths(a, b)?;
        if n != self.n {
            return Err(Error::Verification(format!(
                "certificate is for n = {}, orbits have n = {n}",
                self.n
            )));
        }
        for w in self.pairs.windows(2) {
            if !(w[0].0 < w[1].0 && w[0].1 < w[1].1) {
                return Err(Error::Verification(format!(
                    "pairs {:?} and {:?} are not order preserving",
                    w[0], w[1]
                )));
            }
        }
        for &(i, j) in &self.pairs {
            if i >= n || j >= n {
                return Err(Error::Verification(format!("pair ({i},{j}) out of range")));
            }
            let d = sys.base_distance(&a.points()[i], &b.points()[j]);
            if !(d < self.delta + band) {
                return Err(Error::Verification(format!(
                    "pair ({i},{j}) has distance {d} >= {} + band",
                    self.delta
                )));
            }
        }
        let unmatched = (n - self.pairs.len()) as f64 / n as f64;
        if !(unmatched < self.delta) {
            return Err(Error::Verification(format!(
                "f̄ = {unmatched} is not below delta = {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// How `d_FK_n` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FkMode {
    ExactBreakpoint,
    Bisection,
}

/// Value of `d_FK_n(x,y)` together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FkDistance {
    pub value: f64,
    pub n: usize,
    pub mode: FkMode,
    pub certificate: Option<MatchCertificate>,
    pub tolerance: f64,
}

/// `d_FK_n(x,y) = inf{δ > 0 : f̄_{n,δ}(x,y) < δ}`.
///
/// Exact mode returns an element of the breakpoint set; bisection mode returns
/// an upper bound within `tol`. Both attach a match certificate valid at
/// `value + tol` (exact mode uses the truncation band, at least a few ulps).
pub fn fk_distance(
    sys: &SystemSpec,
    a: &OrbitSegment,
    b: &OrbitSegment,
    mode: FkMode,
    tol: f64,
) -> Result<FkDistance> {
    let n = check_lengths(a, b)?;
    if mode == FkMode::Bisection {
        ensure_positive(tol, "tol")?;
    }
    let band = a.band().max(b.band());
    // the witness sits strictly above the infimum, so it needs a representable gap
    let slack = if tol > 0.0 { tol } else { band.max(4.0 * f64::EPSILON) };
    if a.origin() == b.origin() {
        return Ok(FkDistance {
            value: 0.0,
            n,
            mode,
            certificate: Some(MatchCertificate {
                pairs: (0..n).map(|i| (i, i)).collect(),
                delta: slack,
                n,
            }),
            tolerance: 0.0,
        });
    }
    let cross = CrossDistances::new(sys, a, b)?;
    let (value, tolerance) = match mode {
        FkMode::ExactBreakpoint => (cross.fk_exact(), band),
        FkMode::Bisection => (cross.fk_bisect(tol), tol + band),
    };
    let certificate = MatchCertificate {
        pairs: cross.optimal_match(value, Threshold::Inclusive),
        delta: value + slack,
        n,
    };
    Ok(FkDistance {
        value,
        n,
        mode,
        certificate: Some(certificate),
        tolerance,
    })
}

/// Exact `d_FK_n` without a certificate.
pub fn fk_value(sys: &SystemSpec, a: &OrbitSegment, b: &OrbitSegment) -> Result<f64> {
    Ok(CrossDistances::new(sys, a, b)?.fk_exact())
}

/// How a membership test within the tolerance band is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPolicy {
    /// Use the plain comparison on the computed distances.
    #[default]
    Exact,
    /// Count boundary cases as members.
    Include,
    /// Count boundary cases as non-members.
    Exclude,
}

/// Outcome of an FK ball test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BallMembership {
    /// Plain comparison on computed distances.
    pub inside: bool,
    /// `|d_FK_n - ε|` is within the truncation band.
    pub boundary: bool,
}

impl BallMembership {
    pub fn resolve(self, policy: BoundaryPolicy) -> bool {
        match (self.boundary, policy) {
            (false, _) | (true, BoundaryPolicy::Exact) => self.inside,
            (true, BoundaryPolicy::Include) => true,
            (true, BoundaryPolicy::Exclude) => false,
        }
    }
}

/// Tests `y ∈ B_FK_n(center, ε)` (open) or the closed ball, flagging cases
/// that fall within the truncation band of the radius.
pub fn fk_ball_membership(
    sys: &SystemSpec,
    center: &OrbitSegment,
    y: &OrbitSegment,
    epsilon: f64,
    closed: bool,
) -> Result<BallMembership> {
    ensure_positive(epsilon, "epsilon")?;
    let cross = CrossDistances::new(sys, center, y)?;
    if cross.identical() {
        return Ok(BallMembership {
            inside: true,
            boundary: false,
        });
    }
    let band = cross.band();
    let inside = cross.within(epsilon, closed);
    let surely_in = epsilon - band > 0.0 && cross.within(epsilon - band, false);
    let surely_out = !cross.within(epsilon + band, true);
    Ok(BallMembership {
        inside,
        boundary: !surely_in && !surely_out,
    })
}

pub fn fk_ball_contains(
    sys: &SystemSpec,
    center: &OrbitSegment,
    y: &OrbitSegment,
    epsilon: f64,
    closed: bool,
    policy: BoundaryPolicy,
) -> Result<bool> {
    Ok(fk_ball_membership(sys, center, y, epsilon, closed)?.resolve(policy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStreams;
    use crate::systems::StatePoint;

    fn alternating() -> (SystemSpec, OrbitSegment, OrbitSegment) {
        let s = SystemSpec::build("full-shift-2", &[]).unwrap();
        let x = s.periodic_point(&[0.0, 1.0]).unwrap();
        let y = s.periodic_point(&[1.0, 0.0]).unwrap();
        let a = s.orbit(&x, 2).unwrap();
        let b = s.orbit(&y, 2).unwrap();
        (s, a, b)
    }

    #[test]
    fn bowen_and_average_examples() {
        let (s, a, b) = alternating();
        let full = 1.0 - 2f64.powi(-64);
        assert_eq!(bowen_distance(&s, &a, &b).unwrap(), full);
        assert_eq!(average_distance(&s, &a, &b).unwrap(), full);
        assert_eq!(bowen_distance(&s, &a, &a).unwrap(), 0.0);
        assert_eq!(average_distance(&s, &a, &a).unwrap(), 0.0);

        let r = SystemSpec::build("rotation-alpha", &[("alpha", 0.25)]).unwrap();
        let a = r.orbit(&r.point(vec![0.0]).unwrap(), 3).unwrap();
        let b = r.orbit(&r.point(vec![0.1]).unwrap(), 3).unwrap();
        assert!((bowen_distance(&r, &a, &b).unwrap() - 0.1).abs() < 1e-15);
        assert!((average_distance(&r, &a, &b).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn match_and_f_bar_examples() {
        let (s, a, b) = alternating();
        assert_eq!(max_match_size(&s, &a, &a, 0.01).unwrap(), 2);
        assert_eq!(max_match_size(&s, &a, &b, 0.1).unwrap(), 1);
        assert_eq!(max_match_size(&s, &a, &b, 1.5).unwrap(), 2);
        assert_eq!(f_bar(&s, &a, &a, 0.01).unwrap(), 0.0);
        assert_eq!(f_bar(&s, &a, &b, 0.1).unwrap(), 0.5);
        assert_eq!(f_bar(&s, &a, &b, 1.5).unwrap(), 0.0);
        assert_eq!(f_bar(&s, &a, &b, 0.0), Err(Error::NonPositive("delta")));
    }

    #[test]
    fn fk_worked_example() {
        let (s, a, b) = alternating();
        let exact = fk_distance(&s, &a, &b, FkMode::ExactBreakpoint, 1e-6).unwrap();
        assert_eq!(exact.value, 0.5);
        exact
            .certificate
            .as_ref()
            .unwrap()
            .verify(&s, &a, &b, a.band())
            .unwrap();
        let bis = fk_distance(&s, &a, &b, FkMode::Bisection, 1e-6).unwrap();
        assert!((bis.value - 0.5).abs() <= 1e-6);
        bis.certificate.unwrap().verify(&s, &a, &b, a.band()).unwrap();
        assert_eq!(fk_distance(&s, &a, &a, FkMode::ExactBreakpoint, 1e-6).unwrap().value, 0.0);
        assert!(fk_distance(&s, &a, &b, FkMode::Bisection, 0.0).is_err());
    }

    #[test]
    fn ball_examples() {
        let (s, a, b) = alternating();
        for closed in [false, true] {
            assert!(fk_ball_contains(&s, &a, &a, 1e-3, closed, BoundaryPolicy::Exclude).unwrap());
        }
        assert!(!fk_ball_contains(&s, &a, &b, 0.4, false, BoundaryPolicy::Exact).unwrap());
        let m = fk_ball_membership(&s, &a, &b, 0.5, true).unwrap();
        assert!(m.inside && m.boundary);
        assert!(m.resolve(BoundaryPolicy::Exact));
        assert!(m.resolve(BoundaryPolicy::Include));
        assert!(!m.resolve(BoundaryPolicy::Exclude));
        // open ball at the same radius excludes the point
        assert!(!fk_ball_membership(&s, &a, &b, 0.5, false).unwrap().inside);
        assert!(fk_ball_membership(&s, &a, &b, 0.0, false).is_err());
    }

    #[test]
    fn length_mismatch() {
        let (s, a, _) = alternating();
        let c = s.orbit(a.origin(), 3).unwrap();
        assert_eq!(bowen_distance(&s, &a, &c), Err(Error::LengthMismatch(2, 3)));
        assert!(fk_distance(&s, &a, &c, FkMode::ExactBreakpoint, 1e-6).is_err());
    }

    #[test]
    fn shift_recurrence_matches_direct_distances() {
        let mut rng = SeedStreams::new(1).stream("rec");
        for name in ["full-shift-3", "unit-cube-shift"] {
            let s = SystemSpec::build(name, &[]).unwrap();
            for _ in 0..20 {
                let a = s.orbit(&s.sample(&mut rng), 12).unwrap();
                let b = s.orbit(&s.sample(&mut rng), 12).unwrap();
                let c = CrossDistances::new(&s, &a, &b).unwrap();
                for i in 0..12 {
                    for j in 0..12 {
                        assert_eq!(c.get(i, j), s.base_distance(&a.points()[i], &b.points()[j]));
                    }
                }
            }
        }
    }

    #[test]
    fn prefix_matches_agree_with_truncated_dp() {
        let mut rng = SeedStreams::new(2).stream("prefix");
        let s = SystemSpec::build("full-shift-2", &[]).unwrap();
        for _ in 0..30 {
            let a = s.orbit(&s.sample(&mut rng), 10).unwrap();
            let b = s.orbit(&s.sample(&mut rng), 10).unwrap();
            let full = CrossDistances::new(&s, &a, &b).unwrap();
            for r in [0.05, 0.2, 0.4] {
                let pre = full.prefix_max_matches(r, Threshold::Strict);
                let inside = full.within_prefixes(r, false);
                for k in 1..=10 {
                    let c = CrossDistances::new(&s, &a.prefix(k).unwrap(), &b.prefix(k).unwrap())
                        .unwrap();
                    assert_eq!(pre[k - 1], c.max_match(r, Threshold::Strict));
                    assert_eq!(inside[k - 1], c.fk_exact() < r);
                }
            }
        }
    }

    #[test]
    fn bit_parallel_dp_matches_scalar_dp() {
        let mut rng = SeedStreams::new(12).stream("bits");
        let s = SystemSpec::build("full-shift-2", &[("L", 90.0)]).unwrap();
        let u = SystemSpec::build("unit-cube-shift", &[("L", 90.0)]).unwrap();
        for n in [1, 2, 7, 33, 63, 64] {
            for sys in [&s, &u] {
                for _ in 0..5 {
                    let a = sys.orbit(&sys.sample(&mut rng), n).unwrap();
                    let b = sys.orbit(&sys.sample(&mut rng), n).unwrap();
                    let c = CrossDistances::new(sys, &a, &b).unwrap();
                    for r in [0.1, 0.3, 0.5, 0.9] {
                        for t in [Threshold::Strict, Threshold::Inclusive] {
                            assert_eq!(c.prefix_matches_bits(r, t), c.prefix_matches_scalar(r, t));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn optimal_match_is_a_valid_maximum() {
        let mut rng = SeedStreams::new(3).stream("opt");
        let s = SystemSpec::build("unit-cube-shift", &[]).unwrap();
        for _ in 0..30 {
            let a = s.orbit(&s.sample(&mut rng), 9).unwrap();
            let b = s.orbit(&s.sample(&mut rng), 9).unwrap();
            let c = CrossDistances::new(&s, &a, &b).unwrap();
            let pairs = c.optimal_match(0.3, Threshold::Strict);
            assert_eq!(pairs.len(), c.max_match(0.3, Threshold::Strict));
            for w in pairs.windows(2) {
                assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
            }
            assert!(pairs.iter().all(|&(i, j)| c.get(i, j) < 0.3));
        }
    }

    #[test]
    fn identical_encodings_short_circuit() {
        let s = SystemSpec::build("doubling-map", &[]).unwrap();
        let p = StatePoint::from_coords(vec![0.125]);
        let a = s.orbit(&p, 4).unwrap();
        let c = CrossDistances::new(&s, &a, &a).unwrap();
        assert!(c.identical());
        assert_eq!(c.fk_exact(), 0.0);
        assert!(c.within(1e-300, false));
    }
}
