//! Empirical measures, FK-ball masses and Brin–Katok-style local entropy in
//! the FK metric, plus Monte-Carlo integrals over the measure.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure_positive, Error, Result};
use crate::metrics::{bowen_distance, CrossDistances};
use crate::rng::SeedStreams;
use crate::systems::{OrbitSegment, SamplerKind, StatePoint, SystemKind, SystemSpec};

/// Shortest admissible `n` window.
pub const MIN_WINDOW_LEN: usize = 4;

/// How a measure was produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSource {
    /// Consecutive points of one orbit.
    Orbit { start: Option<StatePoint> },
    /// IID draws from a sampler.
    Sampler { sampler: SamplerKind },
    Explicit,
}

/// A finitely supported probability measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    atoms: Vec<(StatePoint, f64)>,
    source: MeasureSource,
}

impl EmpiricalMeasure {
    /// Weights must be positive and sum to 1 within `1e-12`.
    pub fn new(atoms: Vec<(StatePoint, f64)>, source: MeasureSource) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptySample);
        }
        if atoms.iter().any(|(_, w)| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::param("weight", "atom weights must be positive"));
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param("weight", format!("weights sum to {total}, not 1")));
        }
        Ok(Self { atoms, source })
    }

    /// Uniform weights on the given points.
    pub fn uniform(points: Vec<StatePoint>, source: MeasureSource) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        Self::new(points.into_iter().map(|p| (p, w)).collect(), source)
    }

    /// The Dirac mass at `x`.
    pub fn dirac(x: StatePoint) -> Self {
        Self {
            atoms: vec![(x, 1.0)],
            source: MeasureSource::Explicit,
        }
    }

    pub fn atoms(&self) -> &[(StatePoint, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn source(&self) -> &MeasureSource {
        &self.source
    }

    /// Orbits of every atom, at a common length.
    pub fn atom_orbits(&self, sys: &SystemSpec, n: usize) -> Result<Vec<OrbitSegment>> {
        self.atoms.iter().map(|(p, _)| sys.orbit(p, n)).collect()
    }
}

/// `m` iid draws from the system's default sampler, weights `1/m`.
pub fn empirical_from_sampler(sys: &SystemSpec, m: usize, seed: u64) -> Result<EmpiricalMeasure> {
    empirical_with_sampler(sys, sys.sampler(), m, seed)
}

pub fn empirical_with_sampler(
    sys: &SystemSpec,
    sampler: SamplerKind,
    m: usize,
    seed: u64,
) -> Result<EmpiricalMeasure> {
    if m < 1 {
        return Err(Error::param("m", "need at least one atom"));
    }
    let mut rng = SeedStreams::new(seed).stream("measure/iid");
    let pts = (0..m).map(|_| sys.sample_with(sampler, &mut rng)).collect();
    EmpiricalMeasure::uniform(pts, MeasureSource::Sampler { sampler })
}

/// A textual measure descriptor: `uniform`, `bernoulli:p`, `orbit` (seeded
/// start) or `orbit:x0` (explicit start, circle maps only).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "String")]
pub enum MeasureDescriptor {
    Uniform,
    Bernoulli(f64),
    Orbit(Option<f64>),
}

impl FromStr for MeasureDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::param("measure", format!("`{s}`: {why}"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("expected a number"));
        match s.trim().split_once(':') {
            None if s.trim() == "uniform" => Ok(Self::Uniform),
            None if s.trim() == "orbit" => Ok(Self::Orbit(None)),
            Some(("bernoulli", p)) => {
                let p = num(p)?;
                if (0.0..=1.0).contains(&p) {
                    Ok(Self::Bernoulli(p))
                } else {
                    Err(bad("p must lie in [0,1]"))
                }
            }
            Some(("orbit", x)) => Ok(Self::Orbit(Some(num(x)?))),
            _ => Err(bad("expected uniform, bernoulli:p, orbit or orbit:x0")),
        }
    }
}

impl fmt::Display for MeasureDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform => write!(f, "uniform"),
            Self::Bernoulli(p) => write!(f, "bernoulli:{p}"),
            Self::Orbit(None) => write!(f, "orbit"),
            Self::Orbit(Some(x)) => write!(f, "orbit:{x}"),
        }
    }
}

impl From<MeasureDescriptor> for String {
    fn from(d: MeasureDescriptor) -> String {
        d.to_string()
    }
}

impl MeasureDescriptor {
    /// Materialises `m` atoms of the described measure.
    pub fn build(&self, sys: &SystemSpec, m: usize, seed: u64) -> Result<EmpiricalMeasure> {
        if m < 1 {
            return Err(Error::param("m", "need at least one atom"));
        }
        match *self {
            Self::Uniform => empirical_with_sampler(sys, SamplerKind::Uniform, m, seed),
            Self::Bernoulli(p) => {
                if !matches!(sys.kind(), SystemKind::FullShift { symbols: 2 }) {
                    return Err(Error::param("measure", "bernoulli:p needs full-shift-2"));
                }
                empirical_with_sampler(sys, SamplerKind::Bernoulli { p }, m, seed)
            }
            Self::Orbit(None) => {
                let mut rng = SeedStreams::new(seed).stream("measure/orbit");
                let pts = sys.orbit_atoms(sys.sampler(), m, &mut rng);
                EmpiricalMeasure::uniform(pts, MeasureSource::Orbit { start: None })
            }
            Self::Orbit(Some(x0)) => {
                if sys.kind().is_shift() {
                    return Err(Error::param("measure", "orbit:x0 needs a circle map"));
                }
                let x = sys.point(vec![x0])?;
                let pts = sys.iterate(&x, m);
                EmpiricalMeasure::uniform(pts, MeasureSource::Orbit { start: Some(x) })
            }
        }
    }
}

/// `μ(B_FK_n(x, ε))` over the open ball.
pub fn ball_mass(
    sys: &SystemSpec,
    mu: &EmpiricalMeasure,
    x: &OrbitSegment,
    epsilon: f64,
    n: usize,
) -> Result<f64> {
    ensure_positive(epsilon, "epsilon")?;
    let x = x.prefix(n)?;
    let orbits = mu.atom_orbits(sys, n)?;
    let mut mass = 0.0;
    for (o, (_, w)) in orbits.iter().zip(mu.atoms()) {
        if CrossDistances::new(sys, &x, o)?.within(epsilon, false) {
            mass += w;
        }
    }
    Ok(mass)
}

/// `μ(B_n(x, r))` in the Bowen metric, open ball.
pub fn bowen_ball_mass(
    sys: &SystemSpec,
    mu: &EmpiricalMeasure,
    x: &OrbitSegment,
    radius: f64,
    n: usize,
) -> Result<f64> {
    ensure_positive(radius, "radius")?;
    let x = x.prefix(n)?;
    let orbits = mu.atom_orbits(sys, n)?;
    let mut mass = 0.0;
    for (o, (_, w)) in orbits.iter().zip(mu.atoms()) {
        if bowen_distance(sys, &x, o)? < radius {
            mass += w;
        }
    }
    Ok(mass)
}

/// One `n` of a local entropy estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalEntropyRow {
    pub n: usize,
    pub ball_mass: f64,
    /// `-log(mass) / n`, with the floored mass when `floored`.
    pub rate: f64,
    pub floored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalEntropyEstimate {
    pub point: StatePoint,
    pub epsilon: f64,
    pub n_window: (usize, usize),
    pub per_n: Vec<LocalEntropyRow>,
    /// Minimum rate over the upper half of the window.
    pub lower: f64,
    /// Maximum rate over the upper half of the window.
    pub upper: f64,
    /// Some mass in the window was zero and replaced by `1/(2·atoms)`.
    pub floored: bool,
}

fn check_window(sys: &SystemSpec, window: (usize, usize)) -> Result<()> {
    let (lo, hi) = window;
    if lo == 0 || hi < lo {
        return Err(Error::InvalidRange(format!("window {lo}..={hi}")));
    }
    if hi - lo + 1 < MIN_WINDOW_LEN {
        return Err(Error::InvalidRange(format!(
            "window {lo}..={hi} has fewer than {MIN_WINDOW_LEN} lengths"
        )));
    }
    if hi > sys.max_orbit_len() {
        return Err(Error::Truncation {
            requested: hi,
            max: sys.max_orbit_len(),
        });
    }
    Ok(())
}

/// Masses for every `n` in the window from one DP per atom.
fn window_estimate(
    sys: &SystemSpec,
    mu: &EmpiricalMeasure,
    atom_orbits: &[OrbitSegment],
    x: &OrbitSegment,
    epsilon: f64,
    window: (usize, usize),
) -> Result<LocalEntropyEstimate> {
    let (lo, hi) = window;
    let mut masses = vec![0.0; hi];
    for (o, (_, w)) in atom_orbits.iter().zip(mu.atoms()) {
        let inside = CrossDistances::new(sys, x, o)?.within_prefixes(epsilon, false);
        for (m, hit) in masses.iter_mut().zip(inside) {
            if hit {
                *m += w;
            }
        }
    }
    let floor = 1.0 / (2.0 * mu.len() as f64);
    let per_n: Vec<LocalEntropyRow> = (lo..=hi)
        .map(|n| {
            let mass = masses[n - 1];
            let floored = mass <= 0.0;
            let used = if floored { floor } else { mass.min(1.0) };
            LocalEntropyRow {
                n,
                ball_mass: mass,
                rate: -used.ln() / n as f64,
                floored,
            }
        })
        .collect();
    let top = &per_n[per_n.len() - per_n.len() / 2..];
    let lower = top.iter().map(|r| r.rate).fold(f64::INFINITY, f64::min);
    let upper = top.iter().map(|r| r.rate).fold(f64::NEG_INFINITY, f64::max);
    Ok(LocalEntropyEstimate {
        point: x.origin().clone(),
        epsilon,
        n_window: window,
        floored: per_n.iter().any(|r| r.floored),
        per_n,
        lower,
        upper,
    })
}

/// Local upper/lower FK entropy of `μ` at `x` over an `n` window.
pub fn local_entropy(
    sys: &SystemSpec,
    mu: &EmpiricalMeasure,
    x: &StatePoint,
    epsilon: f64,
    window: (usize, usize),
) -> Result<LocalEntropyEstimate> {
    ensure_positive(epsilon, "epsilon")?;
    check_window(sys, window)?;
    let atoms = mu.atom_orbits(sys, window.1)?;
    let x = sys.orbit(x, window.1)?;
    window_estimate(sys, mu, &atoms, &x, epsilon, window)
}

/// Monte-Carlo `∫ h dμ` for the lower and upper local entropies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratedEntropy {
    pub epsilon: f64,
    pub n_window: (usize, usize),
    pub eval_points: usize,
    pub lower: f64,
    pub upper: f64,
    pub lower_stderr: f64,
    pub upper_stderr: f64,
    /// Evaluation points whose estimate used a floored mass.
    pub floored_points: usize,
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Averages [`local_entropy`] over `eval_points` atoms drawn by weight.
pub fn integrated_local_entropy(
    sys: &SystemSpec,
    mu: &EmpiricalMeasure,
    epsilon: f64,
    window: (usize, usize),
    eval_points: usize,
    seed: u64,
) -> Result<IntegratedEntropy> {
    Ok(integrated_with_points(sys, mu, epsilon, window, eval_points, seed)?.0)
}

/// [`integrated_local_entropy`] together with the per-point estimates.
pub fn integrated_with_points(
    sys: &SystemSpec,
    mu: &EmpiricalMeasure,
    epsilon: f64,
    window: (usize, usize),
    eval_points: usize,
    seed: u64,
) -> Result<(IntegratedEntropy, Vec<LocalEntropyEstimate>)> {
    ensure_positive(epsilon, "epsilon")?;
    check_window(sys, window)?;
    if eval_points == 0 || eval_points > mu.len() {
        return Err(Error::param(
            "eval_points",
            format!("need 1..={} evaluation points, got {eval_points}", mu.len()),
        ));
    }
    let atoms = mu.atom_orbits(sys, window.1)?;
    let mut rng = SeedStreams::new(seed).stream("entropy/eval");
    let cumulative: Vec<f64> = mu
        .atoms()
        .iter()
        .scan(0.0, |acc, (_, w)| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let picks: Vec<usize> = (0..eval_points)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * cumulative[cumulative.len() - 1];
            cumulative.partition_point(|&c| c <= u).min(mu.len() - 1)
        })
        .collect();
    let estimates = picks
        .par_iter()
        .map(|&i| window_estimate(sys, mu, &atoms, &atoms[i], epsilon, window))
        .collect::<Result<Vec<_>>>()?;
    let lows: Vec<f64> = estimates.iter().map(|e| e.lower).collect();
    let highs: Vec<f64> = estimates.iter().map(|e| e.upper).collect();
    let (lower, lower_stderr) = mean_and_stderr(&lows);
    let (upper, upper_stderr) = mean_and_stderr(&highs);
    let summary = IntegratedEntropy {
        epsilon,
        n_window: window,
        eval_points,
        lower,
        upper,
        lower_stderr,
        upper_stderr,
        floored_points: estimates.iter().filter(|e| e.floored).count(),
    };
    Ok((summary, estimates))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shift() -> SystemSpec {
        SystemSpec::build("full-shift-2", &[]).unwrap()
    }

    #[test]
    fn dirac_has_zero_entropy() {
        let s = shift();
        let x = s.periodic_point(&[0.0, 1.0, 1.0]).unwrap();
        let mu = EmpiricalMeasure::dirac(x.clone());
        let e = local_entropy(&s, &mu, &x, 0.1, (4, 10)).unwrap();
        assert!(e.per_n.iter().all(|r| r.rate == 0.0 && r.ball_mass == 1.0));
        assert_eq!((e.lower, e.upper), (0.0, 0.0));
        let i = integrated_local_entropy(&s, &mu, 0.1, (4, 10), 1, 3).unwrap();
        assert_eq!((i.lower, i.upper), (0.0, 0.0));
    }

    #[test]
    fn cylinder_ball_mass() {
        let s = shift();
        let pts: Vec<_> = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
            .iter()
            .map(|p| s.periodic_point(p).unwrap())
            .collect();
        let mu = EmpiricalMeasure::uniform(pts.clone(), MeasureSource::Explicit).unwrap();
        let x = s.orbit(&pts[1], 2).unwrap();
        assert_eq!(ball_mass(&s, &mu, &x, 0.05, 2).unwrap(), 0.25);
        assert_eq!(ball_mass(&s, &mu, &x, 1.5, 2).unwrap(), 1.0);
    }

    #[test]
    fn window_rules() {
        let s = shift();
        let mu = empirical_from_sampler(&s, 10, 1).unwrap();
        let x = mu.atoms()[0].0.clone();
        assert!(matches!(
            local_entropy(&s, &mu, &x, 0.1, (4, 6)),
            Err(Error::InvalidRange(_))
        ));
        assert!(matches!(
            local_entropy(&s, &mu, &x, 0.1, (4, 60)),
            Err(Error::Truncation { .. })
        ));
        let e = local_entropy(&s, &mu, &x, 0.1, (4, 12)).unwrap();
        let top: Vec<usize> = e.per_n[5..].iter().map(|r| r.n).collect();
        assert_eq!(top, vec![9, 10, 11, 12]);
        assert!(e.lower <= e.upper);
    }

    #[test]
    fn floored_masses_are_flagged() {
        let s = shift();
        let a = s.periodic_point(&[0.0]).unwrap();
        let b = s.periodic_point(&[1.0]).unwrap();
        let mu = EmpiricalMeasure::dirac(b);
        let e = local_entropy(&s, &mu, &a, 0.1, (4, 8)).unwrap();
        assert!(e.floored && e.per_n.iter().all(|r| r.floored));
        assert!((e.per_n[0].rate - 2f64.ln() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn descriptors_round_trip() {
        for d in ["uniform", "bernoulli:0.5", "orbit", "orbit:0.25"] {
            assert_eq!(d.parse::<MeasureDescriptor>().unwrap().to_string(), d);
        }
        assert!("bernoulli:2".parse::<MeasureDescriptor>().is_err());
        assert!("gauss".parse::<MeasureDescriptor>().is_err());
    }

    #[test]
    fn explicit_weights_validated() {
        let s = shift();
        let x = s.periodic_point(&[0.0]).unwrap();
        assert!(EmpiricalMeasure::new(vec![(x.clone(), 0.5)], MeasureSource::Explicit).is_err());
        assert!(EmpiricalMeasure::new(vec![], MeasureSource::Explicit).is_err());
        assert!(EmpiricalMeasure::new(vec![(x, 1.0)], MeasureSource::Explicit).is_ok());
    }

    #[test]
    fn measures_build() {
        let rot = SystemSpec::build("rotation", &[("alpha", 0.25)]).unwrap();
        let mu = "orbit:0".parse::<MeasureDescriptor>().unwrap().build(&rot, 4, 0).unwrap();
        let xs: Vec<f64> = mu.atoms().iter().map(|(p, _)| p.coords()[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75]);
        assert!(MeasureDescriptor::Bernoulli(0.5).build(&rot, 4, 0).is_err());
        let s = shift();
        let a = MeasureDescriptor::Orbit(None).build(&s, 50, 9).unwrap();
        assert_eq!(a, MeasureDescriptor::Orbit(None).build(&s, 50, 9).unwrap());
    }
}
