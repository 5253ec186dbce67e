//! The resolved form of every command: a serializable spec that executes to
//! a set of artifacts. Manifests embed a `RunSpec`, so replaying one runs
//! exactly what the original invocation resolved to — same seed, same
//! radian-valued angles, same grid — and therefore produces byte-identical
//! files.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use ampcode::{
    delta_s, error_scaling_study, fisher_diagonal, laser_scenario, run_experiment,
    sample_bob_standalone, sample_double, setting_pair_table, amplitude_encode, bob_marginal,
    cramer_rao_report, find_violations, pair_table, render_heatmap_svg, scan_delta_s,
    DetectionModel, DoubleConfig64, Encoding64, ProbabilityVector64, ScanGrid64, Set,
    SingleConfig64,
};

use crate::output::{Artifacts, CliError, Csv, CsvCell, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunSpec {
    Encode {
        probs: Vec<f64>,
    },
    Fisher {
        encoding: Encoding64,
        omegas: Vec<f64>,
        n: u64,
    },
    SimulateSingle {
        config: SingleConfig64,
    },
    ErrorScaling {
        probs: Vec<f64>,
        n_list: Vec<u64>,
        trials: u64,
        seed: u64,
    },
    Laser {
        alpha: f64,
        n: u64,
        seed: u64,
        model: DetectionModel,
    },
    SimulateDouble {
        config: DoubleConfig64,
        n: u64,
        seed: u64,
    },
    NoSignaling {
        config: DoubleConfig64,
        set: Set,
        grid_points: usize,
        n: u64,
        seed: u64,
    },
    ScanBell {
        grid: ScanGrid64,
        svg: bool,
    },
    Verify {
        seed: u64,
        only: Option<String>,
        json: bool,
    },
}

impl RunSpec {
    pub fn name(&self) -> &'static str {
        match self {
            RunSpec::Encode { .. } => "encode",
            RunSpec::Fisher { .. } => "fisher",
            RunSpec::SimulateSingle { .. } => "simulate-single",
            RunSpec::ErrorScaling { .. } => "error-scaling",
            RunSpec::Laser { .. } => "laser",
            RunSpec::SimulateDouble { .. } => "simulate-double",
            RunSpec::NoSignaling { .. } => "no-signaling",
            RunSpec::ScanBell { .. } => "scan-bell",
            RunSpec::Verify { .. } => "verify",
        }
    }

    /// The seed driving any randomness, for the manifest record. `None`
    /// for fully deterministic commands.
    pub fn seed(&self) -> Option<u64> {
        match self {
            RunSpec::Encode { .. } | RunSpec::Fisher { .. } => None,
            RunSpec::SimulateSingle { config } => Some(config.seed),
            RunSpec::ErrorScaling { seed, .. }
            | RunSpec::Laser { seed, .. }
            | RunSpec::SimulateDouble { seed, .. }
            | RunSpec::NoSignaling { seed, .. }
            | RunSpec::Verify { seed, .. } => Some(*seed),
            RunSpec::ScanBell { grid, .. } => Some(grid.seed),
        }
    }

    pub fn execute(&self) -> Result<Artifacts> {
        match self {
            RunSpec::Encode { probs } => run_encode(probs),
            RunSpec::Fisher { encoding, omegas, n } => run_fisher(encoding, omegas, *n),
            RunSpec::SimulateSingle { config } => run_single(config),
            RunSpec::ErrorScaling { probs, n_list, trials, seed } => {
                run_scaling(probs, n_list, *trials, *seed)
            }
            RunSpec::Laser { alpha, n, seed, model } => run_laser(*alpha, *n, *seed, *model),
            RunSpec::SimulateDouble { config, n, seed } => run_double(config, *n, *seed),
            RunSpec::NoSignaling { config, set, grid_points, n, seed } => {
                run_no_signaling(config, *set, *grid_points, *n, *seed)
            }
            RunSpec::ScanBell { grid, svg } => run_scan(grid, *svg),
            RunSpec::Verify { seed, only, json } => run_verify(*seed, only.as_deref(), *json),
        }
    }
}

pub fn encoding_label(enc: &Encoding64) -> String {
    match enc {
        Encoding64::Amplitude => "amplitude".into(),
        Encoding64::Identity => "identity".into(),
        Encoding64::Power(k) => format!("power:{k}"),
        Encoding64::Custom(_) => "custom".into(),
    }
}

fn set_label(set: Set) -> &'static str {
    match set {
        Set::A => "A",
        Set::B => "B",
    }
}

fn json_file<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Invalid(format!("serializing output: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

// ------------------------------------------------------------- commands --

fn run_encode(probs: &[f64]) -> Result<Artifacts> {
    let p = ProbabilityVector64::new(probs.to_vec())?;
    let state = amplitude_encode(&p);
    let summary = crate::output::join_display(state.as_slice());

    #[derive(Serialize)]
    struct EncodeOut<'a> {
        probs: &'a [f64],
        state: &'a [f64],
    }
    let file = json_file(&EncodeOut { probs: p.as_slice(), state: state.as_slice() })?;
    Ok(Artifacts { summary, files: vec![("encode.json".into(), file)], failed: false })
}

fn run_fisher(enc: &Encoding64, omegas: &[f64], n: u64) -> Result<Artifacts> {
    let fisher = fisher_diagonal(enc, omegas)?;
    let report = cramer_rao_report(enc, omegas, n)?;

    let mut summary = crate::output::join_display(&fisher.values);
    for row in &report.rows {
        let _ = write!(
            summary,
            "\nω = {}: bound = {}, achieved = {}, saturated = {}",
            row.omega, row.variance_bound, row.achieved_variance, row.saturated
        );
    }

    let mut csv = Csv::new(&[
        "omega",
        "fisher_information",
        "variance_bound",
        "achieved_variance",
        "saturated",
    ]);
    for (j, row) in fisher.values.iter().zip(&report.rows) {
        csv.row(&[
            CsvCell::Num(row.omega),
            CsvCell::Num(*j),
            CsvCell::Num(row.variance_bound),
            CsvCell::Num(row.achieved_variance),
            CsvCell::Int(row.saturated as i64),
        ]);
    }
    Ok(Artifacts { summary, files: vec![("fisher.csv".into(), csv.finish())], failed: false })
}

fn run_single(cfg: &SingleConfig64) -> Result<Artifacts> {
    let trials = run_experiment(cfg)?;
    let m = cfg.p.len();

    // Per-component mean and sample variance of ω̂ across trials.
    let tf = trials.len() as f64;
    let mut mean = vec![0.0; m];
    for t in &trials {
        for (acc, &w) in mean.iter_mut().zip(&t.omega_hat) {
            *acc += w / tf;
        }
    }
    let mut var = vec![0.0; m];
    if trials.len() >= 2 {
        for t in &trials {
            for ((acc, &w), &mu) in var.iter_mut().zip(&t.omega_hat).zip(&mean) {
                *acc += (w - mu) * (w - mu) / (tf - 1.0);
            }
        }
    }
    let predicted = 1.0 / (4.0 * cfg.n as f64);

    let mut summary = format!(
        "m = {m}, n = {}, trials = {}, seed = {}, encoding = {}",
        cfg.n,
        cfg.trials,
        cfg.seed,
        encoding_label(&cfg.encoding)
    );
    for i in 0..m {
        let _ = write!(
            summary,
            "\ncomponent {i}: mean ω̂ = {}, Var(ω̂) = {}, 1/(4n) = {predicted}, ratio = {}",
            mean[i],
            var[i],
            var[i] / predicted
        );
    }

    let mut header: Vec<String> = vec!["trial".into()];
    for i in 0..m {
        header.push(format!("count_{i}"));
    }
    for i in 0..m {
        header.push(format!("p_hat_{i}"));
    }
    for i in 0..m {
        header.push(format!("omega_hat_{i}"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header_refs);
    for (idx, t) in trials.iter().enumerate() {
        let mut row = Vec::with_capacity(1 + 3 * m);
        row.push(CsvCell::Int(idx as i64));
        for &c in t.counts.counts() {
            row.push(CsvCell::Int(c as i64));
        }
        for &p in t.p_hat.as_slice() {
            row.push(CsvCell::Num(p));
        }
        for &w in &t.omega_hat {
            row.push(CsvCell::Num(w));
        }
        csv.row(&row);
    }
    Ok(Artifacts { summary, files: vec![("trials.csv".into(), csv.finish())], failed: false })
}

fn run_scaling(probs: &[f64], n_list: &[u64], trials: u64, seed: u64) -> Result<Artifacts> {
    let p = ProbabilityVector64::new(probs.to_vec())?;
    let report = error_scaling_study(&p, n_list, trials, seed)?;

    let mut summary = format!("m = {}, trials = {trials}, seed = {seed}", report.m);
    for row in &report.rows {
        let ratios: Vec<f64> =
            row.var_omega_hat.iter().map(|&v| v / row.predicted_var).collect();
        let _ = write!(
            summary,
            "\nn = {}: Var(ω̂)/(1/(4n)) = {}; aggregate = {} (predicted {}); sigma_textbook = {}; excluded = {}",
            row.n,
            crate::output::join_display(&ratios),
            row.aggregate_sq_error,
            row.predicted_aggregate,
            row.sigma_textbook,
            row.excluded_trials
        );
    }

    let mut csv = Csv::new(&[
        "m",
        "n",
        "component",
        "var_omega_hat",
        "predicted_var",
        "ratio",
        "aggregate_sq_error",
        "predicted_aggregate",
        "sigma_textbook",
        "included_trials",
        "excluded_trials",
    ]);
    for row in &report.rows {
        for (i, &v) in row.var_omega_hat.iter().enumerate() {
            csv.row(&[
                CsvCell::Int(report.m as i64),
                CsvCell::Int(row.n as i64),
                CsvCell::Int(i as i64),
                CsvCell::Num(v),
                CsvCell::Num(row.predicted_var),
                CsvCell::Num(v / row.predicted_var),
                CsvCell::Num(row.aggregate_sq_error),
                CsvCell::Num(row.predicted_aggregate),
                CsvCell::Num(row.sigma_textbook),
                CsvCell::Int(row.included_trials as i64),
                CsvCell::Int(row.excluded_trials as i64),
            ]);
        }
    }
    Ok(Artifacts { summary, files: vec![("scaling.csv".into(), csv.finish())], failed: false })
}

fn run_laser(alpha: f64, n: u64, seed: u64, model: DetectionModel) -> Result<Artifacts> {
    let x_bar = laser_scenario(alpha, n, seed, model)?;
    let expected = match model {
        DetectionModel::CosSquared => alpha.cos() * alpha.cos(),
        DetectionModel::TextbookSin => alpha.sin(),
    };
    let model_name = match model {
        DetectionModel::CosSquared => "cos_squared",
        DetectionModel::TextbookSin => "textbook_sin",
    };
    let summary = format!(
        "x̄ = {x_bar} (expected {expected}), α = {alpha}, n = {n}, model = {model_name}, seed = {seed}"
    );

    #[derive(Serialize)]
    struct LaserOut {
        alpha: f64,
        n: u64,
        seed: u64,
        model: DetectionModel,
        expected: f64,
        x_bar: f64,
    }
    let file = json_file(&LaserOut { alpha, n, seed, model, expected, x_bar })?;
    Ok(Artifacts { summary, files: vec![("laser.json".into(), file)], failed: false })
}

const PAIRS: [(Set, Set, &str); 4] = [
    (Set::A, Set::A, "aa"),
    (Set::A, Set::B, "ab"),
    (Set::B, Set::A, "ba"),
    (Set::B, Set::B, "bb"),
];

// The 0..2 loops below index outcome tables, but `bo`/`co` are also the
// outcome values written to the CSV, so plain indices are the honest form.
#[allow(clippy::needless_range_loop)]
fn run_double(cfg: &DoubleConfig64, n: u64, seed: u64) -> Result<Artifacts> {
    let counts = sample_double(cfg, n, seed)?;
    let sampled = counts.to_setting_pair_table::<f64>()?;
    let analytic = setting_pair_table(cfg)?;

    let mode = match cfg.mode {
        ampcode::CorrelationMode::Contextual => "contextual",
        ampcode::CorrelationMode::Local => "local",
    };
    let mut summary = format!("mode = {mode}, n = {n}, seed = {seed}");
    for (b, c, label) in PAIRS {
        let t = counts.table(b, c);
        let _ = write!(
            summary,
            "\npair {label}: events = {}, counts = [[{}, {}], [{}, {}]]",
            counts.pair_total(b, c),
            t[0][0],
            t[0][1],
            t[1][0],
            t[1][1]
        );
    }
    let _ = write!(
        summary,
        "\nΔS sampled = {}, ΔS analytic = {}",
        delta_s(&sampled),
        delta_s(&analytic)
    );

    let mut csv = Csv::new(&[
        "pair",
        "bob_outcome",
        "charley_outcome",
        "count",
        "frequency",
        "probability",
    ]);
    for (b, c, label) in PAIRS {
        let t = counts.table(b, c);
        let total = counts.pair_total(b, c) as f64;
        let probs = pair_table(cfg, b, c)?;
        for bo in 0..2 {
            for co in 0..2 {
                csv.row(&[
                    CsvCell::Text(label.into()),
                    CsvCell::Int(bo as i64),
                    CsvCell::Int(co as i64),
                    CsvCell::Int(t[bo][co] as i64),
                    CsvCell::Num(t[bo][co] as f64 / total),
                    CsvCell::Num(probs.get(&[bo, co])),
                ]);
            }
        }
    }
    Ok(Artifacts { summary, files: vec![("double.csv".into(), csv.finish())], failed: false })
}

fn run_no_signaling(
    cfg: &DoubleConfig64,
    set: Set,
    grid_points: usize,
    n: u64,
    seed: u64,
) -> Result<Artifacts> {
    if grid_points < 2 {
        return Err(CliError::Invalid("grid-points must be ≥ 2".into()));
    }
    let grid: Vec<f64> = (0..grid_points)
        .map(|i| std::f64::consts::PI * i as f64 / (grid_points - 1) as f64)
        .collect();
    let report = bob_marginal(cfg, set, &grid)?;
    let sampled = sample_bob_standalone(cfg, set, n, seed)?;

    let summary = format!(
        "set = {}, expected marginal = {}\nmax |deviation| across {grid_points} θ_c values = {}\nsampled x̄ = {sampled} (n = {n}, seed = {seed})",
        set_label(set),
        report.expected,
        report.max_deviation
    );

    let mut csv = Csv::new(&["theta_c", "marginal", "deviation"]);
    for &(tc, q) in &report.points {
        csv.row(&[CsvCell::Num(tc), CsvCell::Num(q), CsvCell::Num(q - report.expected)]);
    }
    Ok(Artifacts {
        summary,
        files: vec![("no_signaling.csv".into(), csv.finish())],
        failed: false,
    })
}

fn run_scan(grid: &ScanGrid64, svg: bool) -> Result<Artifacts> {
    let result = scan_delta_s(grid)?;
    let violations = find_violations(&result)?;

    let at: Vec<String> = result
        .axes
        .iter()
        .zip(&violations.argmax)
        .map(|(axis, &v)| format!("{} = {v}", axis.param.name()))
        .collect();
    let summary = format!(
        "violations: {} of {} points (tolerance {})\nmax ΔS = {} at {}",
        violations.violating_points,
        violations.total_points,
        ampcode::scan::VIOLATION_TOL,
        violations.max_delta_s,
        at.join(", ")
    );

    let mut header: Vec<String> =
        result.axes.iter().map(|a| a.param.name().to_string()).collect();
    header.push("delta_s".into());
    if grid.mc_n.is_some() {
        header.push("mc_delta_s".into());
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header_refs);
    for point in &result.points {
        let mut row: Vec<CsvCell> = point.values.iter().map(|&v| CsvCell::Num(v)).collect();
        row.push(CsvCell::Num(point.delta_s));
        if grid.mc_n.is_some() {
            row.push(match point.mc_delta_s {
                Some(v) => CsvCell::Num(v),
                None => CsvCell::Text(String::new()),
            });
        }
        csv.row(&row);
    }

    let mut files = vec![("scan.csv".into(), csv.finish())];
    if svg {
        let rendered = render_heatmap_svg(&result)?;
        files.push(("scan.svg".into(), rendered.into_bytes()));
    }
    Ok(Artifacts { summary, files, failed: false })
}

fn run_verify(seed: u64, only: Option<&str>, json: bool) -> Result<Artifacts> {
    let report = match only {
        Some(needle) => ampcode::verify::run_matching(seed, needle),
        None => ampcode::verify::run_all(seed),
    };
    if report.outcomes.is_empty() {
        return Err(CliError::Invalid(format!(
            "no properties match `{}`",
            only.unwrap_or("")
        )));
    }
    let summary = if json {
        serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Invalid(format!("serializing report: {e}")))?
    } else {
        // render_text ends with its own newline; the caller adds one more.
        report.render_text().trim_end().to_string()
    };
    let file = json_file(&report)?;
    Ok(Artifacts {
        summary,
        files: vec![("verify.json".into(), file)],
        failed: !report.all_passed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_through_json() {
        let spec = RunSpec::ScanBell { grid: ScanGrid64::default_local(9), svg: true };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"command\":\"scan-bell\""));
        let back: RunSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.name(), "scan-bell");
        assert_eq!(back.seed(), Some(9));
    }

    #[test]
    fn encode_summary_matches_known_state() {
        let art = RunSpec::Encode { probs: vec![0.25, 0.75] }.execute().unwrap();
        assert!(art.summary.starts_with("0.5, 0.866025"), "{}", art.summary);
        let art = RunSpec::Encode { probs: vec![1.0, 0.0] }.execute().unwrap();
        assert_eq!(art.summary, "1, 0");
    }

    #[test]
    fn fisher_summary_leads_with_the_diagonal() {
        let art = RunSpec::Fisher {
            encoding: Encoding64::Amplitude,
            omegas: vec![0.2, 0.7],
            n: 100,
        }
        .execute()
        .unwrap();
        assert!(art.summary.starts_with("4, 4"), "{}", art.summary);
        let art = RunSpec::Fisher {
            encoding: Encoding64::Identity,
            omegas: vec![0.9],
            n: 100,
        }
        .execute()
        .unwrap();
        assert!(art.summary.starts_with("11.1111"), "{}", art.summary);
    }

    #[test]
    fn scan_csv_has_one_row_per_point() {
        let mut grid = ScanGrid64::default_local(0);
        for axis in &mut grid.axes {
            axis.steps = 5;
        }
        let art = RunSpec::ScanBell { grid, svg: false }.execute().unwrap();
        assert!(art.summary.starts_with("violations: 0"), "{}", art.summary);
        let (name, bytes) = &art.files[0];
        assert_eq!(name, "scan.csv");
        let text = std::str::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().count(), 1 + 25);
        assert!(text.starts_with("theta_b_a,theta_c_a,delta_s\n"));
    }

    #[test]
    fn verify_subset_reports_and_passes() {
        let art = RunSpec::Verify { seed: 1, only: Some("space".into()), json: false }
            .execute()
            .unwrap();
        assert!(!art.failed);
        assert!(art.summary.contains("ok   space::"), "{}", art.summary);
        let err = RunSpec::Verify { seed: 1, only: Some("zzz".into()), json: false }
            .execute()
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
