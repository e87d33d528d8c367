//! Experiment runner: dispatches a resolved [`ExperimentConfig`] to the
//! estimators and renders JSON, CSV and plot-data artifacts. Outputs carry no
//! timestamps, so a re-run with the same config is byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, Mode, Theorem};
use crate::covering::{cover_counts, mdim_bowen_estimate, seeded_sample};
use crate::error::{Error, Result};
use crate::growth::MdimEstimate;
use crate::lemmas::{run_check, LemmaReport, TrialStatus, DISTANCE_TOLERANCE};
use crate::local_entropy::{integrated_local_entropy, integrated_with_points, IntegratedEntropy, LocalEntropyEstimate};
use crate::metrics::{average_distance, bowen_distance, fk_distance, FkDistance, FkMode};
use crate::packing::{mdim_packing_estimate, packing_counts};
use crate::systems::SystemSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// Process exit status for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Truncation { .. } | Error::TooLarge { .. } | Error::Io(_) => EXIT_RESOURCE,
        Error::Verification(_) | Error::Infeasible(_) => EXIT_VERIFICATION,
        Error::UnknownSystem(_)
        | Error::InvalidParam { .. }
        | Error::InvalidPoint(_)
        | Error::LengthMismatch(..)
        | Error::NonPositive(_)
        | Error::EmptySample
        | Error::InvalidRange(_)
        | Error::Hypothesis(_)
        | Error::Config { .. } => EXIT_CONFIG,
    }
}

/// Rendered outputs of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub mode: Mode,
    /// Every internal check of the run passed.
    pub verified: bool,
    /// Short human-readable summary.
    pub summary: String,
    pub json: String,
    pub csv: Option<String>,
    pub plot: Option<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.verified {
            EXIT_OK
        } else {
            EXIT_VERIFICATION
        }
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    mode: Mode,
    seed: u64,
    verified: bool,
    config: &'a ExperimentConfig,
    result: T,
}

fn render<T: Serialize>(cfg: &ExperimentConfig, verified: bool, result: T) -> Result<String> {
    let report = Report {
        mode: cfg.mode,
        seed: cfg.seed,
        verified,
        config: cfg,
        result,
    };
    let mut s = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn log_inverse(eps: f64) -> f64 {
    (1.0 / eps).ln()
}

/// Runs the configured mode and renders its artifacts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let sys = cfg.system_spec()?;
    match cfg.mode {
        Mode::Dist => run_dist(cfg, &sys),
        Mode::Cover | Mode::Pack => run_counts(cfg, &sys),
        Mode::MdimB | Mode::MdimP => run_mdim(cfg, &sys),
        Mode::LocalEntropy => run_local_entropy(cfg, &sys),
        Mode::VpCheck => {
            let report = run_vp_check(cfg)?;
            vp_outcome(cfg, report)
        }
        Mode::VerifyLemmas => run_lemmas(cfg),
    }
}

/// Writes `<mode>.json`, and `<mode>.csv` / `<mode>.plot.txt` when present.
pub fn write_artifacts(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = outcome.mode.name();
    let mut written = Vec::new();
    let files = [
        ("json", Some(&outcome.json)),
        ("csv", outcome.csv.as_ref()),
        ("plot.txt", outcome.plot.as_ref()),
    ];
    for (ext, body) in files {
        if let Some(body) = body {
            let path = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&path, body)?;
            written.push(path);
        }
    }
    Ok(written)
}

// ---------------------------------------------------------------------------
// dist

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainCheck {
    pub mean_le_bowen: bool,
    pub fk_le_bowen: bool,
    pub fk_le_sqrt_mean: bool,
    pub tolerance: f64,
}

impl ChainCheck {
    pub fn holds(&self) -> bool {
        self.mean_le_bowen && self.fk_le_bowen && self.fk_le_sqrt_mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistRow {
    pub n: usize,
    pub bowen: f64,
    pub mean: f64,
    pub fk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct DistResult {
    fk: FkDistance,
    bowen: f64,
    mean: f64,
    chain: ChainCheck,
    certificate_verified: bool,
    prefixes: Vec<DistRow>,
}

fn run_dist(cfg: &ExperimentConfig, sys: &SystemSpec) -> Result<RunOutcome> {
    let d = cfg
        .dist
        .as_ref()
        .ok_or_else(|| Error::config("dist", "missing [dist] section"))?;
    let x = sys.periodic_point(&d.x)?;
    let y = sys.periodic_point(&d.y)?;
    let (a, b) = (sys.orbit(&x, d.n)?, sys.orbit(&y, d.n)?);
    let fk = fk_distance(sys, &a, &b, FkMode::ExactBreakpoint, 0.0)?;
    let band = a.band().max(b.band());
    let certificate_verified = match &fk.certificate {
        Some(c) => c.verify(sys, &a, &b, band).is_ok(),
        None => false,
    };
    let mut prefixes = Vec::with_capacity(d.n);
    let mut chain_all = true;
    for n in 1..=d.n {
        let (pa, pb) = (a.prefix(n)?, b.prefix(n)?);
        let row = DistRow {
            n,
            bowen: bowen_distance(sys, &pa, &pb)?,
            mean: average_distance(sys, &pa, &pb)?,
            fk: fk_distance(sys, &pa, &pb, FkMode::ExactBreakpoint, 0.0)?.value,
        };
        chain_all &= chain(&row, band).holds();
        prefixes.push(row);
    }
    let last = prefixes.last().expect("n >= 1").clone();
    let check = chain(&last, band);
    let verified = chain_all && certificate_verified;
    let summary = format!(
        "n = {}: d_n = {}, mean d_n = {}, d_FK_n = {}\nchain (mean <= d_n, d_FK <= d_n, d_FK <= sqrt(mean)): {}\ncertificate: {}\n",
        d.n,
        last.bowen,
        last.mean,
        last.fk,
        if chain_all { "holds" } else { "VIOLATED" },
        if certificate_verified { "verified" } else { "REJECTED" },
    );
    let mut csv = String::from("n,bowen,mean,fk\n");
    for r in &prefixes {
        writeln!(csv, "{},{},{},{}", r.n, r.bowen, r.mean, r.fk).unwrap();
    }
    let result = DistResult {
        bowen: last.bowen,
        mean: last.mean,
        fk,
        chain: check,
        certificate_verified,
        prefixes,
    };
    Ok(RunOutcome {
        mode: cfg.mode,
        verified,
        summary,
        json: render(cfg, verified, &result)?,
        csv: Some(csv),
        plot: None,
    })
}

fn chain(r: &DistRow, band: f64) -> ChainCheck {
    let tolerance = DISTANCE_TOLERANCE + band;
    ChainCheck {
        mean_le_bowen: r.mean <= r.bowen + tolerance,
        fk_le_bowen: r.fk <= r.bowen + tolerance,
        fk_le_sqrt_mean: r.fk <= r.mean.sqrt() + tolerance,
        tolerance,
    }
}

// ---------------------------------------------------------------------------
// cover / pack

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CountRow {
    epsilon: f64,
    n: usize,
    count: usize,
}

fn run_counts(cfg: &ExperimentConfig, sys: &SystemSpec) -> Result<RunOutcome> {
    let (stream, what) = match cfg.mode {
        Mode::Cover => ("covering/sample", "cover"),
        _ => ("packing/sample", "packing"),
    };
    let sample = seeded_sample(sys, cfg.sampling.samples, cfg.seed, stream)?;
    let mut rows = Vec::new();
    for &eps in &cfg.sampling.epsilons {
        let counts = match cfg.mode {
            Mode::Cover => cover_counts(sys, &sample, eps, cfg.n_range())?,
            _ => packing_counts(sys, &sample, eps, cfg.n_range())?,
        };
        rows.extend(counts.into_iter().map(|(n, count)| CountRow { epsilon: eps, n, count }));
    }
    let verified = rows.iter().all(|r| r.count >= 1 && r.count <= sample.len());
    let mut csv = String::from("epsilon,n,count\n");
    let mut summary = String::new();
    for r in &rows {
        writeln!(csv, "{},{},{}", r.epsilon, r.n, r.count).unwrap();
    }
    for &eps in &cfg.sampling.epsilons {
        let counts: Vec<String> = rows
            .iter()
            .filter(|r| r.epsilon == eps)
            .map(|r| r.count.to_string())
            .collect();
        writeln!(summary, "{what} counts at ε = {eps}: {}", counts.join(" ")).unwrap();
    }
    Ok(RunOutcome {
        mode: cfg.mode,
        verified,
        summary,
        json: render(cfg, verified, &rows)?,
        csv: Some(csv),
        plot: None,
    })
}

// ---------------------------------------------------------------------------
// mdim-b / mdim-p

fn mdim_csv(est: &MdimEstimate) -> String {
    let mut csv = String::from("epsilon,n,count,s_value,ratio,r2\n");
    for row in &est.rows {
        for &(n, count) in &row.estimate.per_n_counts {
            writeln!(
                csv,
                "{},{},{},{},{},{}",
                row.epsilon, n, count, row.s_value, row.ratio, row.estimate.regression_r2
            )
            .unwrap();
        }
    }
    csv
}

fn mdim_plot(label: &str, est: &MdimEstimate) -> String {
    let mut p = format!("# {label}\n# epsilon ratio\n");
    for row in &est.rows {
        writeln!(p, "{} {}", row.epsilon, row.ratio).unwrap();
    }
    p
}

fn run_mdim(cfg: &ExperimentConfig, sys: &SystemSpec) -> Result<RunOutcome> {
    let (est, label) = match cfg.mode {
        Mode::MdimB => (
            mdim_bowen_estimate(sys, &cfg.sampling.epsilons, cfg.sampling.samples, cfg.n_range(), cfg.seed)?,
            "cover growth",
        ),
        _ => (
            mdim_packing_estimate(sys, &cfg.sampling.epsilons, cfg.sampling.samples, cfg.n_range(), cfg.seed)?,
            "packing growth",
        ),
    };
    let verified = est.rows.iter().all(|r| r.s_value.is_finite() && r.s_value >= 0.0);
    let mut summary = String::new();
    for r in &est.rows {
        writeln!(
            summary,
            "ε = {}: s = {:.4}, ratio = {:.4} (window from n = {})",
            r.epsilon, r.s_value, r.ratio, r.estimate.window_start
        )
        .unwrap();
    }
    writeln!(summary, "smallest-ε proxy: {:.4}", est.proxy).unwrap();
    Ok(RunOutcome {
        mode: cfg.mode,
        verified,
        summary,
        json: render(cfg, verified, &est)?,
        csv: Some(mdim_csv(&est)),
        plot: Some(mdim_plot(label, &est)),
    })
}

// ---------------------------------------------------------------------------
// local-entropy

#[derive(Debug, Clone, PartialEq, Serialize)]
struct EntropyBlock {
    measure: String,
    integrated: IntegratedEntropy,
    lower_ratio: f64,
    upper_ratio: f64,
    points: Vec<LocalEntropyEstimate>,
}

fn run_local_entropy(cfg: &ExperimentConfig, sys: &SystemSpec) -> Result<RunOutcome> {
    let window = (cfg.sampling.n_min, cfg.sampling.n_max);
    let mut blocks = Vec::new();
    for desc in &cfg.measures.list {
        let mu = desc.build(sys, cfg.measures.atoms, cfg.seed)?;
        for &eps in &cfg.sampling.epsilons {
            let (integrated, points) =
                integrated_with_points(sys, &mu, eps, window, cfg.measures.eval_points, cfg.seed)?;
            blocks.push(EntropyBlock {
                measure: desc.to_string(),
                lower_ratio: integrated.lower / log_inverse(eps),
                upper_ratio: integrated.upper / log_inverse(eps),
                integrated,
                points,
            });
        }
    }
    let verified = blocks.iter().all(|b| {
        b.integrated.lower <= b.integrated.upper && b.points.iter().all(|p| p.lower <= p.upper)
    });
    let mut csv = String::from("measure,epsilon,lower,upper,lower_stderr,upper_stderr,floored_points\n");
    let mut plot = String::new();
    let mut summary = String::new();
    for b in &blocks {
        let i = &b.integrated;
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            b.measure, i.epsilon, i.lower, i.upper, i.lower_stderr, i.upper_stderr, i.floored_points
        )
        .unwrap();
        writeln!(
            summary,
            "{} at ε = {}: lower {:.4} ± {:.4}, upper {:.4} ± {:.4} ({} floored)",
            b.measure, i.epsilon, i.lower, i.lower_stderr, i.upper, i.upper_stderr, i.floored_points
        )
        .unwrap();
    }
    for desc in &cfg.measures.list {
        let name = desc.to_string();
        writeln!(plot, "# {name}\n# epsilon upper_ratio").unwrap();
        for b in blocks.iter().filter(|b| b.measure == name) {
            writeln!(plot, "{} {}", b.integrated.epsilon, b.upper_ratio).unwrap();
        }
        plot.push('\n');
    }
    Ok(RunOutcome {
        mode: cfg.mode,
        verified,
        summary,
        json: render(cfg, verified, &blocks)?,
        csv: Some(csv),
        plot: Some(plot),
    })
}

// ---------------------------------------------------------------------------
// vp-check

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSide {
    pub measure: String,
    pub lower: f64,
    pub upper: f64,
    pub lower_stderr: f64,
    pub upper_stderr: f64,
    /// `lower / log(1/ε)`.
    pub lower_ratio: f64,
    /// `upper / log(1/ε)`.
    pub upper_ratio: f64,
    pub floored_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VpRow {
    pub epsilon: f64,
    /// [`Theorem::Bowen`] or [`Theorem::Packing`].
    pub theorem: Theorem,
    pub s_value: f64,
    /// Growth-rate ratio `s / log(1/ε)` of the cover or packing counts.
    pub cover_side: f64,
    pub measure_side: Vec<MeasureSide>,
    /// Largest measure ratio on the side this theorem compares against.
    pub best_measure_ratio: f64,
    /// `cover_side - best_measure_ratio`.
    pub gap: f64,
    /// `cover_side >= best_measure_ratio - slack`.
    pub direction_holds: bool,
}

/// Cover-side growth ratios against measure-side entropy ratios. Only the
/// direction `cover >= measure - slack` is asserted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VpReport {
    pub system: String,
    pub slack: f64,
    pub n_window: (usize, usize),
    pub rows: Vec<VpRow>,
    /// Rows at this `ε` stand in for the `ε → 0` limit.
    pub proxy_epsilon: f64,
    pub all_hold: bool,
}

/// Computes both sides of the variational comparison for every configured `ε`.
pub fn run_vp_check(cfg: &ExperimentConfig) -> Result<VpReport> {
    if cfg.measures.list.is_empty() {
        return Err(Error::param("measures", "vp-check needs at least one measure"));
    }
    let sys = cfg.system_spec()?;
    let eps = &cfg.sampling.epsilons;
    let window = (cfg.sampling.n_min, cfg.sampling.n_max);

    // entropy per (measure, ε), shared by both comparisons
    let mut sides: Vec<Vec<MeasureSide>> = vec![Vec::new(); eps.len()];
    for desc in &cfg.measures.list {
        let mu = desc.build(&sys, cfg.measures.atoms, cfg.seed)?;
        for (k, &e) in eps.iter().enumerate() {
            let h = integrated_local_entropy(&sys, &mu, e, window, cfg.measures.eval_points, cfg.seed)?;
            sides[k].push(MeasureSide {
                measure: desc.to_string(),
                lower: h.lower,
                upper: h.upper,
                lower_stderr: h.lower_stderr,
                upper_stderr: h.upper_stderr,
                lower_ratio: h.lower / log_inverse(e),
                upper_ratio: h.upper / log_inverse(e),
                floored_points: h.floored_points,
            });
        }
    }

    let mut rows = Vec::new();
    for theorem in [Theorem::Bowen, Theorem::Packing] {
        if !cfg.vp.theorem.includes(theorem) {
            continue;
        }
        let est = match theorem {
            Theorem::Bowen => mdim_bowen_estimate(&sys, eps, cfg.sampling.samples, cfg.n_range(), cfg.seed)?,
            _ => mdim_packing_estimate(&sys, eps, cfg.sampling.samples, cfg.n_range(), cfg.seed)?,
        };
        for (k, row) in est.rows.iter().enumerate() {
            let best = sides[k]
                .iter()
                .map(|m| match theorem {
                    Theorem::Bowen => m.lower_ratio,
                    _ => m.upper_ratio,
                })
                .fold(f64::NEG_INFINITY, f64::max);
            rows.push(VpRow {
                epsilon: row.epsilon,
                theorem,
                s_value: row.s_value,
                cover_side: row.ratio,
                measure_side: sides[k].clone(),
                best_measure_ratio: best,
                gap: row.ratio - best,
                direction_holds: row.ratio >= best - cfg.vp.slack,
            });
        }
    }
    Ok(VpReport {
        system: sys.name().to_string(),
        slack: cfg.vp.slack,
        n_window: window,
        all_hold: rows.iter().all(|r| r.direction_holds),
        proxy_epsilon: eps.iter().copied().fold(f64::INFINITY, f64::min),
        rows,
    })
}

fn theorem_label(t: Theorem) -> &'static str {
    match t {
        Theorem::Bowen => "bowen",
        Theorem::Packing => "packing",
        Theorem::Both => "both",
    }
}

fn vp_outcome(cfg: &ExperimentConfig, report: VpReport) -> Result<RunOutcome> {
    let mut csv = String::from(
        "epsilon,theorem,s_value,cover_side,measure,lower_ratio,upper_ratio,best_measure_ratio,gap,direction_holds\n",
    );
    let mut summary = String::new();
    let mut plot = String::new();
    for r in &report.rows {
        for m in &r.measure_side {
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{}",
                r.epsilon,
                theorem_label(r.theorem),
                r.s_value,
                r.cover_side,
                m.measure,
                m.lower_ratio,
                m.upper_ratio,
                r.best_measure_ratio,
                r.gap,
                r.direction_holds
            )
            .unwrap();
        }
        writeln!(
            summary,
            "{} ε = {}: cover side {:.4}, measure side {:.4}, gap {:+.4} -> {}",
            theorem_label(r.theorem),
            r.epsilon,
            r.cover_side,
            r.best_measure_ratio,
            r.gap,
            if r.direction_holds { "ok" } else { "VIOLATED" }
        )
        .unwrap();
    }
    for t in [Theorem::Bowen, Theorem::Packing] {
        let rows: Vec<&VpRow> = report.rows.iter().filter(|r| r.theorem == t).collect();
        if rows.is_empty() {
            continue;
        }
        writeln!(plot, "# {} cover side\n# epsilon ratio", theorem_label(t)).unwrap();
        for r in &rows {
            writeln!(plot, "{} {}", r.epsilon, r.cover_side).unwrap();
        }
        writeln!(plot, "\n# {} measure side\n# epsilon ratio", theorem_label(t)).unwrap();
        for r in &rows {
            writeln!(plot, "{} {}", r.epsilon, r.best_measure_ratio).unwrap();
        }
        plot.push('\n');
    }
    let verified = report.all_hold;
    Ok(RunOutcome {
        mode: cfg.mode,
        verified,
        summary,
        json: render(cfg, verified, &report)?,
        csv: Some(csv),
        plot: Some(plot),
    })
}

// ---------------------------------------------------------------------------
// verify-lemmas

fn run_lemmas(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let systems = cfg
        .lemmas
        .systems
        .iter()
        .map(|s| s.build())
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<LemmaReport> = cfg
        .lemmas
        .which
        .iter()
        .map(|&c| run_check(c, &systems, cfg.lemmas.trials, cfg.seed))
        .collect::<Result<_>>()?;
    let verified = reports.iter().all(|r| r.all_passed());
    let mut csv = String::from("check,system,trial,status\n");
    let mut summary = String::new();
    for r in &reports {
        for t in &r.trials {
            let status = match t.status {
                TrialStatus::Pass => "pass",
                TrialStatus::Fail => "fail",
                TrialStatus::Skip => "skip",
            };
            writeln!(csv, "{},{},{},{}", r.check, t.system, t.trial, status).unwrap();
        }
        writeln!(
            summary,
            "{:<16} pass {:>5}  fail {:>3}  skip {:>3}",
            r.check.name(),
            r.passed,
            r.failed,
            r.skipped
        )
        .unwrap();
    }
    Ok(RunOutcome {
        mode: cfg.mode,
        verified,
        summary,
        json: render(cfg, verified, &reports)?,
        csv: Some(csv),
        plot: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text, &Overrides::default()).unwrap()
    }

    #[test]
    fn dist_reproduces_the_alternating_pair() {
        let cfg = config("mode = \"dist\"\nseed = 1\n[dist]\nx = [0, 1]\ny = [1, 0]\nn = 2\n");
        let out = run_experiment(&cfg).unwrap();
        assert!(out.verified);
        let v: serde_json::Value = serde_json::from_str(&out.json).unwrap();
        assert_eq!(v["result"]["fk"]["value"], 0.5);
        assert!(out.csv.unwrap().starts_with("n,bowen,mean,fk\n"));
    }

    #[test]
    fn mdim_rows_follow_the_csv_header() {
        let cfg = config(
            "mode = \"mdim-b\"\nseed = 2\n[sampling]\nepsilons = [0.3]\nn_min = 2\nn_max = 6\nsamples = 100\n",
        );
        let out = run_experiment(&cfg).unwrap();
        let csv = out.csv.unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("epsilon,n,count,s_value,ratio,r2"));
        assert_eq!(lines.count(), 5);
        assert!(out.plot.unwrap().contains("0.3 "));
    }

    #[test]
    fn reruns_are_identical() {
        let cfg = config(
            "mode = \"local-entropy\"\nseed = 9\n[sampling]\nepsilons = [0.2]\nn_min = 2\nn_max = 5\n[measures]\natoms = 60\neval_points = 10\n",
        );
        assert_eq!(run_experiment(&cfg).unwrap(), run_experiment(&cfg).unwrap());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::config("x", "y")), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Verification("v".into())), EXIT_VERIFICATION);
        assert_eq!(exit_code(&Error::Truncation { requested: 9, max: 3 }), EXIT_RESOURCE);
    }
}
