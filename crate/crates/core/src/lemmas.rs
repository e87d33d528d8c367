//! Seeded verification suites for the inequalities the estimators rely on.
//! Each suite draws random instances per system and reports pass / fail /
//! skip per trial with the numbers that decided it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use crate::covering::five_r_check;
use crate::error::{Error, Result};
use crate::metrics::{average_distance, bowen_distance, fk_value};
use crate::packing::{interval_start_length, packing_sum_in_interval, packing_value, verify_packing};
use crate::rng::SeedStreams;
use crate::systems::{StatePoint, SystemSpec};
use crate::weighted::{frostman_measure_small, sandwich_check, LP_TOLERANCE};

/// Slack for inequalities between computed distances.
pub const DISTANCE_TOLERANCE: f64 = 1e-9;

/// Which inequality family a suite exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LemmaCheck {
    /// `d̄_n <= d_n`, `d_FK_n <= d_n` and `d_FK_n <= sqrt(d̄_n)`.
    Chain,
    /// Disjointness and 5r-coverage of the Vitali selection.
    FiveR,
    /// `M(6ε, s+δ) <= W(ε, s) <= M(ε, s)`.
    Sandwich,
    /// Ball-mass bounds of the measure read off the LP dual.
    Frostman,
    /// Disjoint families with weight sum inside a prescribed interval.
    SumInInterval,
    /// Packing values under enlargement of the sample and the radius.
    Closure,
}

impl LemmaCheck {
    pub const ALL: [LemmaCheck; 6] = [
        LemmaCheck::Chain,
        LemmaCheck::FiveR,
        LemmaCheck::Sandwich,
        LemmaCheck::Frostman,
        LemmaCheck::SumInInterval,
        LemmaCheck::Closure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaCheck::Chain => "chain",
            LemmaCheck::FiveR => "five-r",
            LemmaCheck::Sandwich => "sandwich",
            LemmaCheck::Frostman => "frostman",
            LemmaCheck::SumInInterval => "sum-in-interval",
            LemmaCheck::Closure => "closure",
        }
    }
}

impl fmt::Display for LemmaCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LemmaCheck {
    type Err = Error;

    /// Role names, plus the numeric labels the command line accepts.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "chain" | "2.3" => LemmaCheck::Chain,
            "five-r" | "3.1" => LemmaCheck::FiveR,
            "sandwich" | "3.2" => LemmaCheck::Sandwich,
            "frostman" | "3.3" => LemmaCheck::Frostman,
            "sum-in-interval" | "4.1" => LemmaCheck::SumInInterval,
            "closure" | "4.2" => LemmaCheck::Closure,
            other => {
                return Err(Error::param(
                    "which",
                    format!(
                        "unknown check '{other}' (expected chain, five-r, sandwich, frostman, sum-in-interval or closure)"
                    ),
                ))
            }
        })
    }
}

impl Serialize for LemmaCheck {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialStatus {
    Pass,
    Fail,
    /// The instance did not meet the check's precondition.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub system: String,
    pub status: TrialStatus,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub check: LemmaCheck,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub trials: Vec<TrialOutcome>,
}

impl LemmaReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// The four built-in systems with default parameters.
pub fn default_systems() -> Vec<SystemSpec> {
    ["full-shift-2", "unit-cube-shift", "rotation-alpha", "doubling-map"]
        .iter()
        .map(|name| SystemSpec::build(name, &[]).expect("built-in system"))
        .collect()
}

/// Runs `trials` seeded instances of `check` on each system.
pub fn run_check(
    check: LemmaCheck,
    systems: &[SystemSpec],
    trials: usize,
    seed: u64,
) -> Result<LemmaReport> {
    if systems.is_empty() {
        return Err(Error::EmptySample);
    }
    let streams = SeedStreams::new(seed);
    let mut outcomes = Vec::with_capacity(trials * systems.len());
    for sys in systems {
        for t in 0..trials {
            let mut rng = streams.indexed(&format!("lemmas/{check}/{}", sys.name()), t as u64);
            let (status, detail) = match check {
                LemmaCheck::Chain => chain_trial(sys, &mut rng)?,
                LemmaCheck::FiveR => five_r_trial(sys, &mut rng)?,
                LemmaCheck::Sandwich => sandwich_trial(sys, &mut rng)?,
                LemmaCheck::Frostman => frostman_trial(sys, &mut rng)?,
                LemmaCheck::SumInInterval => sum_in_interval_trial(sys, &mut rng)?,
                LemmaCheck::Closure => closure_trial(sys, &mut rng)?,
            };
            outcomes.push(TrialOutcome {
                trial: t,
                system: sys.name().to_string(),
                status,
                detail,
            });
        }
    }
    let count = |s: TrialStatus| outcomes.iter().filter(|o| o.status == s).count();
    Ok(LemmaReport {
        check,
        seed,
        passed: count(TrialStatus::Pass),
        failed: count(TrialStatus::Fail),
        skipped: count(TrialStatus::Skip),
        trials: outcomes,
    })
}

type Trial = Result<(TrialStatus, Value)>;

fn verdict(ok: bool) -> TrialStatus {
    if ok {
        TrialStatus::Pass
    } else {
        TrialStatus::Fail
    }
}

fn draw_points<R: Rng>(sys: &SystemSpec, m: usize, rng: &mut R) -> Vec<StatePoint> {
    (0..m).map(|_| sys.sample(rng)).collect()
}

/// Lengths at which every chain pair is checked.
pub const CHAIN_LENGTHS: [usize; 4] = [2, 4, 8, 16];

fn chain_trial<R: Rng>(sys: &SystemSpec, rng: &mut R) -> Trial {
    let n_max = CHAIN_LENGTHS[CHAIN_LENGTHS.len() - 1];
    let x = sys.sample(rng);
    // half the pairs are near each other so small distances get exercised
    let y = if rng.gen_bool(0.5) {
        let r = rng.gen_range(0.01..0.5);
        let n = CHAIN_LENGTHS[rng.gen_range(0..CHAIN_LENGTHS.len())];
        sys.perturb(&x, r, n, rng)
    } else {
        sys.sample(rng)
    };
    let (xo, yo) = (sys.orbit(&x, n_max)?, sys.orbit(&y, n_max)?);
    let mut ok = true;
    let mut rows = Vec::with_capacity(CHAIN_LENGTHS.len());
    for n in CHAIN_LENGTHS {
        let (a, b) = (xo.prefix(n)?, yo.prefix(n)?);
        let bowen = bowen_distance(sys, &a, &b)?;
        let mean = average_distance(sys, &a, &b)?;
        let fk = fk_value(sys, &a, &b)?;
        let tol = DISTANCE_TOLERANCE + a.band().max(b.band());
        let mean_le_bowen = mean <= bowen + tol;
        let fk_le_bowen = fk <= bowen + tol;
        let fk_le_sqrt_mean = fk <= mean.sqrt() + tol;
        ok &= mean_le_bowen && fk_le_bowen && fk_le_sqrt_mean;
        rows.push(json!({
            "n": n, "bowen": bowen, "mean": mean, "fk": fk, "tolerance": tol,
            "mean_le_bowen": mean_le_bowen, "fk_le_bowen": fk_le_bowen,
            "fk_le_sqrt_mean": fk_le_sqrt_mean,
        }));
    }
    Ok((verdict(ok), Value::Array(rows)))
}

fn five_r_trial<R: Rng>(sys: &SystemSpec, rng: &mut R) -> Trial {
    let m = rng.gen_range(3..=12);
    let n = rng.gen_range(2..=8);
    let balls = draw_points(sys, m, rng)
        .iter()
        .map(|x| Ok((sys.orbit(x, n)?, rng.gen_range(0.02..0.35))))
        .collect::<Result<Vec<_>>>()?;
    let report = five_r_check(sys, &balls)?;
    let radii: Vec<f64> = balls.iter().map(|b| b.1).collect();
    Ok((
        verdict(report.disjoint && report.covered),
        json!({
            "n": n, "radii": radii, "chosen": report.chosen,
            "disjoint": report.disjoint, "covered": report.covered,
        }),
    ))
}

/// Tiny-instance parameters shared by the weighted checks: `δ = 1` makes
/// `N = 3` admissible.
const SMALL_DELTA: f64 = 1.0;
const SMALL_N_MIN: usize = 3;
const SMALL_N_MAX: usize = 6;

fn sandwich_trial<R: Rng>(sys: &SystemSpec, rng: &mut R) -> Trial {
    let m = rng.gen_range(3..=10);
    let eps = rng.gen_range(0.03..0.3);
    let s = rng.gen_range(0.0..1.5);
    let pts = draw_points(sys, m, rng);
    let r = sandwich_check(sys, &pts, &pts, eps, s, SMALL_DELTA, SMALL_N_MIN, SMALL_N_MAX)?;
    Ok((verdict(r.holds()), serde_json::to_value(&r).map_err(json_err)?))
}

fn frostman_trial<R: Rng>(sys: &SystemSpec, rng: &mut R) -> Trial {
    let m = rng.gen_range(3..=8);
    let eps = rng.gen_range(0.03..0.3);
    let s = rng.gen_range(0.0..1.5);
    let pts = draw_points(sys, m, rng);
    match frostman_measure_small(sys, &pts, eps, s, SMALL_N_MIN, SMALL_N_MAX) {
        Ok(f) => Ok((
            verdict(f.max_excess <= LP_TOLERANCE),
            json!({
                "points": m, "epsilon": eps, "s": s, "c": f.c,
                "max_excess": f.max_excess, "constraints": f.constraints_checked,
            }),
        )),
        Err(e @ (Error::Infeasible(_) | Error::Verification(_))) => Ok((
            TrialStatus::Fail,
            json!({ "points": m, "epsilon": eps, "s": s, "error": e.to_string() }),
        )),
        Err(e) => Err(e),
    }
}

fn sum_in_interval_trial<R: Rng>(sys: &SystemSpec, rng: &mut R) -> Trial {
    let m = rng.gen_range(4..=10);
    let eps = rng.gen_range(0.03..0.3);
    let s = rng.gen_range(0.2..1.5);
    let gap = rng.gen_range(0.05..0.6);
    let n_min = 2;
    let pts = draw_points(sys, m, rng);
    let n1 = interval_start_length(s, n_min, gap)?;
    if n1 + 2 > sys.max_orbit_len() {
        return Ok((TrialStatus::Skip, json!({ "reason": "orbit budget", "n1": n1 })));
    }
    let best = packing_value(sys, &pts, eps, s, n1, n1 + 2)?;
    let (a, b) = if best > gap {
        let b = gap + rng.gen_range(0.05..0.95) * (best - gap);
        (b - gap, b)
    } else {
        (0.1, 0.1 + gap)
    };
    if interval_start_length(s, n_min, b - a)? != n1 {
        return Ok((TrialStatus::Skip, json!({ "reason": "rounding moved the start length" })));
    }
    let base = json!({ "epsilon": eps, "s": s, "a": a, "b": b, "n1": n1, "best_sum": best });
    match packing_sum_in_interval(sys, &pts, eps, s, n_min, a, b) {
        Ok(fam) => {
            let sum = fam.sum_value.unwrap_or(0.0);
            let ok = best > b
                && a < sum
                && sum < b
                && fam.lengths.iter().all(|&n| n >= n_min)
                && verify_packing(sys, &fam)?;
            let mut d = base;
            d["sum"] = json!(sum);
            d["count"] = json!(fam.count);
            Ok((verdict(ok), d))
        }
        Err(Error::Infeasible(msg)) => {
            let mut d = base;
            d["infeasible"] = json!(msg);
            Ok((verdict(best <= b), d))
        }
        Err(e) => Err(e),
    }
}

fn closure_trial<R: Rng>(sys: &SystemSpec, rng: &mut R) -> Trial {
    let m = rng.gen_range(3..=6);
    let eps1 = rng.gen_range(0.05..0.25);
    let eps2 = eps1 + rng.gen_range(0.02..0.15);
    let s = rng.gen_range(0.0..1.0);
    let (n_min, n_max) = (2, 4);
    let half = (eps2 - eps1) / 2.0;
    let z = draw_points(sys, m, rng);
    let mut enlarged = z.clone();
    for x in &z {
        let xo = sys.orbit(x, n_max)?;
        let mut found = None;
        for _ in 0..20 {
            let y = sys.perturb(x, 0.9 * half, n_max, rng);
            let yo = sys.orbit(&y, n_max)?;
            let mut close = true;
            for n in n_min..=n_max {
                if fk_value(sys, &xo.prefix(n)?, &yo.prefix(n)?)? >= half {
                    close = false;
                    break;
                }
            }
            if close {
                found = Some(y);
                break;
            }
        }
        match found {
            Some(y) => enlarged.push(y),
            None => return Ok((TrialStatus::Skip, json!({ "reason": "no jitter within range" }))),
        }
    }
    let small = packing_value(sys, &z, eps1, s, n_min, n_max)?;
    let large = packing_value(sys, &enlarged, eps2, s, n_min, n_max)?;
    Ok((
        verdict(large <= small + 1e-12),
        json!({
            "points": m, "epsilon1": eps1, "epsilon2": eps2, "s": s,
            "enlarged_value": large, "value": small,
        }),
    ))
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names_and_labels() {
        assert_eq!("sandwich".parse::<LemmaCheck>().unwrap(), LemmaCheck::Sandwich);
        assert_eq!("4.2".parse::<LemmaCheck>().unwrap(), LemmaCheck::Closure);
        assert!("9.9".parse::<LemmaCheck>().is_err());
        for c in LemmaCheck::ALL {
            assert_eq!(c.name().parse::<LemmaCheck>().unwrap(), c);
        }
    }

    #[test]
    fn every_suite_passes_a_few_trials() {
        let systems = default_systems();
        for c in LemmaCheck::ALL {
            let r = run_check(c, &systems, 3, 11).unwrap();
            assert!(r.all_passed(), "{c}: {:?}", r.trials.iter().find(|t| t.status == TrialStatus::Fail));
            assert_eq!(r.passed + r.skipped, 12);
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let systems = default_systems();
        let a = run_check(LemmaCheck::Closure, &systems, 2, 5).unwrap();
        let b = run_check(LemmaCheck::Closure, &systems, 2, 5).unwrap();
        assert_eq!(a, b);
    }
}
