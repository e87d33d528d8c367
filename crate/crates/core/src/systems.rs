//! Dynamical systems: state points, the map, the base metric and seeded samplers.
//!
//! Four systems are built in:
//!
//! | name              | state                          | metric                               |
//! |-------------------|--------------------------------|--------------------------------------|
//! | `full-shift-k`    | `L` symbols in `{0,..,k-1}`    | `sum 2^-(i+1) [x_i != y_i]`          |
//! | `unit-cube-shift` | `L` reals in `[0,1]`           | `sum 2^-(i+1) |x_i - y_i|`           |
//! | `rotation-alpha`  | one real in `[0,1)`            | arc distance                         |
//! | `doubling-map`    | one real in `[0,1)`            | arc distance                         |
//!
//! Shift points are stored as fixed-length truncations and every application of
//! the shift drops one coordinate, so iterating consumes truncation budget. The
//! doubling map consumes one bit of the `L`-bit budget per step in the same way.
//! A rotation loses at most one ulp per step, which the budget `2^(53-L)` bounds.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_SHIFT_TRUNCATION: u32 = 64;
const DEFAULT_DOUBLING_BITS: u32 = 52;
const DEFAULT_ROTATION_BITS: u32 = 40;
const DEFAULT_HORIZON: u32 = 20;

/// A point of the state space, stored as a finite coordinate vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatePoint {
    coords: Vec<f64>,
}

impl StatePoint {
    /// Wraps raw coordinates without validation; use [`SystemSpec::point`] to validate.
    pub fn from_coords(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

impl fmt::Display for StatePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coords.len() == 1 {
            return write!(f, "{}", self.coords[0]);
        }
        let shown = self.coords.len().min(12);
        for c in &self.coords[..shown] {
            write!(f, "{}", c)?;
            if shown < self.coords.len() || c.fract() != 0.0 {
                write!(f, " ")?;
            }
        }
        if shown < self.coords.len() {
            write!(f, "...")?;
        }
        Ok(())
    }
}

/// Which built-in map a [`SystemSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SystemKind {
    FullShift { symbols: u32 },
    UnitCubeShift,
    Rotation { alpha: f64 },
    Doubling,
}

impl SystemKind {
    pub fn is_shift(&self) -> bool {
        matches!(self, SystemKind::FullShift { .. } | SystemKind::UnitCubeShift)
    }
}

/// Distribution the sampler draws from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplerKind {
    /// Uniform symbols / Lebesgue measure.
    Uniform,
    /// IID symbols of the 2-shift with `P(1) = p`.
    Bernoulli { p: f64 },
}

/// An immutable description of `(X, T, d)` plus its truncation accounting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSpec {
    name: String,
    kind: SystemKind,
    truncation: u32,
    horizon: u32,
    sampler: SamplerKind,
}

/// Builds a built-in system from its name and a key-value parameter map.
///
/// Recognised keys: `k` (alphabet size), `L` (truncation length / precision
/// bits), `H` (precision horizon: minimum bits kept after iterating), `alpha`
/// (rotation angle) and `p` (Bernoulli bias of the 2-shift sampler).
pub fn make_system(name: &str, params: &BTreeMap<String, f64>) -> Result<SystemSpec> {
    for key in params.keys() {
        if !matches!(key.as_str(), "k" | "L" | "H" | "alpha" | "p") {
            return Err(Error::param(key, "unknown parameter"));
        }
    }
    let int_param = |key: &str| -> Result<Option<u32>> {
        match params.get(key) {
            None => Ok(None),
            Some(&v) if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 => Ok(Some(v as u32)),
            Some(&v) => Err(Error::param(key, format!("expected a non-negative integer, got {v}"))),
        }
    };

    let kind = if let Some(rest) = name.strip_prefix("full-shift") {
        let from_name = match rest.strip_prefix('-') {
            Some(k) => Some(
                k.parse::<u32>()
                    .map_err(|_| Error::UnknownSystem(name.to_string()))?,
            ),
            None if rest.is_empty() => None,
            None => return Err(Error::UnknownSystem(name.to_string())),
        };
        let symbols = match (from_name, int_param("k")?) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::param("k", format!("name says {a} symbols, k = {b}")))
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => 2,
        };
        if symbols < 2 {
            return Err(Error::param("k", "need at least 2 symbols"));
        }
        SystemKind::FullShift { symbols }
    } else {
        match name {
            "unit-cube-shift" => SystemKind::UnitCubeShift,
            "rotation-alpha" | "rotation" => {
                let alpha = params.get("alpha").copied().unwrap_or((5f64.sqrt() - 1.0) / 2.0);
                if !(0.0..1.0).contains(&alpha) {
                    return Err(Error::param("alpha", format!("{alpha} is outside [0,1)")));
                }
                SystemKind::Rotation { alpha }
            }
            "doubling-map" | "doubling" => SystemKind::Doubling,
            _ => return Err(Error::UnknownSystem(name.to_string())),
        }
    };
    if params.contains_key("k") && !matches!(kind, SystemKind::FullShift { .. }) {
        return Err(Error::param("k", "only full shifts take an alphabet size"));
    }
    if params.contains_key("alpha") && !matches!(kind, SystemKind::Rotation { .. }) {
        return Err(Error::param("alpha", "only rotations take an angle"));
    }

    let default_l = match kind {
        SystemKind::FullShift { .. } | SystemKind::UnitCubeShift => DEFAULT_SHIFT_TRUNCATION,
        SystemKind::Doubling => DEFAULT_DOUBLING_BITS,
        SystemKind::Rotation { .. } => DEFAULT_ROTATION_BITS,
    };
    let truncation = int_param("L")?.unwrap_or(default_l);
    if truncation < 1 {
        return Err(Error::param("L", "truncation length must be at least 1"));
    }
    match kind {
        SystemKind::Doubling if truncation > 52 => {
            return Err(Error::param("L", "the doubling map carries at most 52 bits"))
        }
        SystemKind::Rotation { .. } if truncation > 52 => {
            return Err(Error::param("L", "rotations carry at most 52 bits"))
        }
        _ => {}
    }
    let horizon = int_param("H")?.unwrap_or(DEFAULT_HORIZON.min(truncation));
    if horizon > truncation {
        return Err(Error::param("H", "horizon cannot exceed the truncation length"));
    }

    let sampler = match params.get("p") {
        None => SamplerKind::Uniform,
        Some(&p) => {
            if !matches!(kind, SystemKind::FullShift { symbols: 2 }) {
                return Err(Error::param("p", "Bernoulli bias only applies to full-shift-2"));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param("p", format!("{p} is not a probability")));
            }
            SamplerKind::Bernoulli { p }
        }
    };

    let name = match kind {
        SystemKind::FullShift { symbols } => format!("full-shift-{symbols}"),
        SystemKind::UnitCubeShift => "unit-cube-shift".to_string(),
        SystemKind::Rotation { .. } => "rotation-alpha".to_string(),
        SystemKind::Doubling => "doubling-map".to_string(),
    };
    Ok(SystemSpec {
        name,
        kind,
        truncation,
        horizon,
        sampler,
    })
}

impl SystemSpec {
    /// Shorthand for [`make_system`] with `(key, value)` pairs.
    pub fn build(name: &str, params: &[(&str, f64)]) -> Result<Self> {
        let map = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_system(name, &map)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn sampler(&self) -> SamplerKind {
        self.sampler
    }

    /// Absolute error of `base_distance` on freshly sampled points: `2^-L`.
    pub fn distance_error_bound(&self) -> f64 {
        (-(self.truncation as f64)).exp2()
    }

    /// Longest orbit whose iterates keep at least `H` bits of precision.
    pub fn max_orbit_len(&self) -> usize {
        match self.kind {
            SystemKind::FullShift { .. } | SystemKind::UnitCubeShift | SystemKind::Doubling => {
                (self.truncation - self.horizon) as usize + 1
            }
            SystemKind::Rotation { .. } => 1usize << (53 - self.truncation).min(30),
        }
    }

    /// Error band on any base distance between iterates of orbits of length `n`.
    pub fn band(&self, n: usize) -> f64 {
        match self.kind {
            SystemKind::Rotation { .. } => self.distance_error_bound(),
            _ => {
                let bits = self.truncation as i64 - n as i64 + 1;
                (-(bits.max(0) as f64)).exp2()
            }
        }
    }

    /// Validates coordinates against the state domain.
    pub fn point(&self, coords: Vec<f64>) -> Result<StatePoint> {
        let p = StatePoint::from_coords(coords);
        self.check_point(&p)?;
        Ok(p)
    }

    /// A point from a repeating pattern: shifts repeat the pattern up to `L`
    /// coordinates, circle maps take the first entry as the real coordinate.
    pub fn periodic_point(&self, pattern: &[f64]) -> Result<StatePoint> {
        if pattern.is_empty() {
            return Err(Error::InvalidPoint("empty pattern".into()));
        }
        if self.kind.is_shift() {
            let coords = pattern
                .iter()
                .copied()
                .cycle()
                .take(self.truncation as usize)
                .collect();
            self.point(coords)
        } else {
            self.point(vec![pattern[0]])
        }
    }

    pub fn check_point(&self, p: &StatePoint) -> Result<()> {
        let c = p.coords();
        match self.kind {
            SystemKind::FullShift { symbols } => {
                if c.is_empty() {
                    return Err(Error::InvalidPoint("shift point has no coordinates".into()));
                }
                if let Some(bad) = c
                    .iter()
                    .find(|&&v| v.fract() != 0.0 || v < 0.0 || v >= symbols as f64)
                {
                    return Err(Error::InvalidPoint(format!(
                        "{bad} is not a symbol of the {symbols}-shift"
                    )));
                }
            }
            SystemKind::UnitCubeShift => {
                if c.is_empty() {
                    return Err(Error::InvalidPoint("shift point has no coordinates".into()));
                }
                if let Some(bad) = c.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::InvalidPoint(format!("{bad} is outside [0,1]")));
                }
            }
            SystemKind::Rotation { .. } | SystemKind::Doubling => {
                if c.len() != 1 {
                    return Err(Error::InvalidPoint(format!(
                        "circle points have one coordinate, got {}",
                        c.len()
                    )));
                }
                if !(0.0..1.0).contains(&c[0]) {
                    return Err(Error::InvalidPoint(format!("{} is outside [0,1)", c[0])));
                }
            }
        }
        Ok(())
    }

    /// The map `T`.
    pub fn apply_map(&self, p: &StatePoint) -> StatePoint {
        let c = p.coords();
        match self.kind {
            SystemKind::FullShift { .. } | SystemKind::UnitCubeShift => {
                StatePoint::from_coords(c.get(1..).unwrap_or(&[]).to_vec())
            }
            SystemKind::Rotation { alpha } => {
                let mut y = c[0] + alpha;
                if y >= 1.0 {
                    y -= 1.0;
                }
                StatePoint::from_coords(vec![y])
            }
            SystemKind::Doubling => {
                let mut y = 2.0 * c[0];
                if y >= 1.0 {
                    y -= 1.0;
                }
                StatePoint::from_coords(vec![y])
            }
        }
    }

    /// The metric `d`. Shift distances are evaluated in Horner form from the
    /// last shared coordinate, which makes them bit-identical to the
    /// recurrence used by the FK kernel.
    pub fn base_distance(&self, a: &StatePoint, b: &StatePoint) -> f64 {
        let (x, y) = (a.coords(), b.coords());
        match self.kind {
            SystemKind::FullShift { .. } => horner(x, y, symbol_gap),
            SystemKind::UnitCubeShift => horner(x, y, real_gap),
            SystemKind::Rotation { .. } | SystemKind::Doubling => arc_distance(x[0], y[0]),
        }
    }

    /// Draws a point from the system's default sampler.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StatePoint {
        self.sample_with(self.sampler, rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, sampler: SamplerKind, rng: &mut R) -> StatePoint {
        let len = self.truncation as usize;
        match (self.kind, sampler) {
            (SystemKind::FullShift { .. }, SamplerKind::Bernoulli { p }) => StatePoint::from_coords(
                (0..len).map(|_| if rng.gen::<f64>() < p { 1.0 } else { 0.0 }).collect(),
            ),
            (SystemKind::FullShift { symbols }, _) => StatePoint::from_coords(
                (0..len).map(|_| rng.gen_range(0..symbols) as f64).collect(),
            ),
            (SystemKind::UnitCubeShift, _) => {
                StatePoint::from_coords((0..len).map(|_| rng.gen::<f64>()).collect())
            }
            (SystemKind::Rotation { .. }, _) => StatePoint::from_coords(vec![rng.gen::<f64>()]),
            (SystemKind::Doubling, _) => {
                let bits: u64 = rng.gen::<u64>() >> (64 - len);
                StatePoint::from_coords(vec![bits as f64 / (len as f64).exp2()])
            }
        }
    }

    /// `m` consecutive points of one orbit started from a seeded random point.
    ///
    /// Shift and doubling orbits are generated from a symbol string of length
    /// `m + L - 1`, so every returned point still carries the full `L`-symbol
    /// truncation.
    pub fn orbit_atoms<R: Rng + ?Sized>(
        &self,
        sampler: SamplerKind,
        m: usize,
        rng: &mut R,
    ) -> Vec<StatePoint> {
        let len = self.truncation as usize;
        match self.kind {
            SystemKind::FullShift { .. } | SystemKind::UnitCubeShift => {
                let long = (0..m + len - 1)
                    .map(|_| self.sample_with(sampler, rng).coords()[0])
                    .collect::<Vec<_>>();
                (0..m)
                    .map(|i| StatePoint::from_coords(long[i..i + len].to_vec()))
                    .collect()
            }
            SystemKind::Doubling => {
                let bits: Vec<u64> = (0..m + len - 1).map(|_| rng.gen_range(0..2u64)).collect();
                (0..m)
                    .map(|i| {
                        let k = bits[i..i + len].iter().fold(0u64, |acc, &b| (acc << 1) | b);
                        StatePoint::from_coords(vec![k as f64 / (len as f64).exp2()])
                    })
                    .collect()
            }
            SystemKind::Rotation { .. } => {
                let x0 = self.sample(rng);
                self.iterate(&x0, m)
            }
        }
    }

    /// Plain iteration `x, Tx, ..., T^(m-1) x` without budget checks.
    pub(crate) fn iterate(&self, x: &StatePoint, m: usize) -> Vec<StatePoint> {
        let mut out = Vec::with_capacity(m);
        let mut cur = x.clone();
        for i in 0..m {
            if i + 1 < m {
                let next = self.apply_map(&cur);
                out.push(cur);
                cur = next;
            } else {
                out.push(cur.clone());
            }
        }
        out
    }

    /// Longest orbit that can be materialised from `x` within the horizon.
    pub fn orbit_budget(&self, x: &StatePoint) -> usize {
        if self.kind.is_shift() {
            (x.len() + 1).saturating_sub(self.horizon as usize)
        } else {
            self.max_orbit_len()
        }
    }

    /// Materialises `(x, Tx, ..., T^(n-1) x)`.
    pub fn orbit(&self, x: &StatePoint, n: usize) -> Result<OrbitSegment> {
        if n == 0 {
            return Err(Error::NonPositive("n"));
        }
        self.check_point(x)?;
        let max = self.orbit_budget(x);
        if n > max {
            return Err(Error::Truncation { requested: n, max });
        }
        let band = if self.kind.is_shift() {
            let bits = x.len() as i64 - n as i64 + 1;
            (-(bits as f64)).exp2()
        } else {
            self.band(n)
        };
        Ok(OrbitSegment {
            points: self.iterate(x, n),
            band,
        })
    }

    /// Builds orbits of a common length for a whole sample.
    pub fn orbits(&self, sample: &[StatePoint], n: usize) -> Result<Vec<OrbitSegment>> {
        sample.iter().map(|x| self.orbit(x, n)).collect()
    }

    /// A point within base distance `radius` of `x` that stays within
    /// `radius` of `x` along the first `n` iterates (Bowen-close).
    pub fn perturb<R: Rng + ?Sized>(
        &self,
        x: &StatePoint,
        radius: f64,
        n: usize,
        rng: &mut R,
    ) -> StatePoint {
        match self.kind {
            SystemKind::FullShift { .. } | SystemKind::UnitCubeShift => {
                // Coordinates at index >= keep only move d(T^i x, T^i y) by
                // at most 2^-(keep - i), i < n.
                let mut keep = n;
                while keep < x.len() && (-((keep + 1 - n) as f64)).exp2() >= radius {
                    keep += 1;
                }
                let fresh = self.sample(rng);
                let mut c = x.coords().to_vec();
                for (i, v) in c.iter_mut().enumerate().skip(keep) {
                    *v = fresh.coords()[i % fresh.len()];
                }
                StatePoint::from_coords(c)
            }
            SystemKind::Rotation { .. } => {
                let eta = rng.gen_range(-0.5..0.5) * radius;
                StatePoint::from_coords(vec![(x.coords()[0] + eta).rem_euclid(1.0)])
            }
            SystemKind::Doubling => {
                let scale = (n as f64 - 1.0).exp2();
                let eta = rng.gen_range(-0.5..0.5) * radius / scale;
                let y = (x.coords()[0] + eta).rem_euclid(1.0);
                // keep the encoding on the L-bit grid
                let grid = (self.truncation as f64).exp2();
                StatePoint::from_coords(vec![((y * grid).floor() / grid).min(1.0 - 1.0 / grid)])
            }
        }
    }
}

/// A cached finite orbit `points[i] = T^i x`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSegment {
    points: Vec<StatePoint>,
    band: f64,
}

impl OrbitSegment {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn origin(&self) -> &StatePoint {
        &self.points[0]
    }

    pub fn points(&self) -> &[StatePoint] {
        &self.points
    }

    /// Truncation error band on base distances between iterates of this orbit.
    pub fn band(&self) -> f64 {
        self.band
    }

    /// The first `n` iterates.
    pub fn prefix(&self, n: usize) -> Result<OrbitSegment> {
        if n == 0 {
            return Err(Error::NonPositive("n"));
        }
        if n > self.len() {
            return Err(Error::LengthMismatch(n, self.len()));
        }
        Ok(OrbitSegment {
            points: self.points[..n].to_vec(),
            band: self.band,
        })
    }
}

pub(crate) fn symbol_gap(a: f64, b: f64) -> f64 {
    // branch-free: symbols compare unpredictably
    ((a != b) as u8) as f64
}

pub(crate) fn real_gap(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

pub(crate) fn horner<F: Fn(f64, f64) -> f64>(x: &[f64], y: &[f64], gap: F) -> f64 {
    let m = x.len().min(y.len());
    (0..m).rev().fold(0.0, |acc, k| 0.5 * (gap(x[k], y[k]) + acc))
}

fn arc_distance(x: f64, y: f64) -> f64 {
    let t = (x - y).abs();
    t.min(1.0 - t)
}
