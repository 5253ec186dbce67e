//! Monte Carlo machinery for the single-transfer experiment: Alice encodes
//! a codeword distribution as a state vector, Bob draws n categorical
//! samples from its squared components and re-estimates the parameters.
//!
//! The headline law being measured: with amplitude encoding every component
//! estimate ω̂_i has variance ≈ 1/(4n) regardless of where ω sits, and the
//! total squared error of the state estimate is ≈ (m−1)/(4n).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::Encoding;
use crate::error::{Error, Result};
use crate::estimation::{estimate, sigma_theory, OutcomeCounts};
use crate::rng;
use crate::scalar::Scalar;
use crate::space::{amplitude_encode, measure_probabilities, ProbabilityVector, StateVector};

/// Events processed per RNG stream when a sampler runs block-parallel.
/// Any fixed value gives bit-identical results at any thread count; this
/// one keeps per-task work in the tens of microseconds.
const BLOCK: u64 = 1 << 16;

/// One repeated-measurement experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct SingleConfig<F> {
    /// Codeword distribution Alice transfers.
    pub p: ProbabilityVector<F>,
    /// Parameter map used when pulling estimates back to ω̂ = μ⁻¹(p̂).
    /// The physical carrier is always the amplitude-encoded state; this
    /// only changes which parametrization the trial results report.
    pub encoding: Encoding<F>,
    /// Samples per trial.
    pub n: u64,
    /// Independent trials.
    pub trials: u64,
    pub seed: u64,
}

/// What one trial produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult<F> {
    pub counts: OutcomeCounts,
    pub p_hat: ProbabilityVector<F>,
    /// Componentwise √p̂ — the re-encoded state estimate.
    pub y_hat: StateVector<F>,
    /// μ⁻¹(p̂_i); equals arccos √p̂_i for the amplitude encoding.
    pub omega_hat: Vec<F>,
}

/// Draw n categorical samples from the squared components of a state.
pub fn sample_outcomes<F: Scalar, R: rand::Rng + ?Sized>(
    y: &StateVector<F>,
    n: u64,
    rng: &mut R,
) -> OutcomeCounts {
    let p = measure_probabilities(y);
    let mut cdf: Vec<F> = Vec::with_capacity(p.len());
    let mut acc = F::zero();
    for &v in p.iter() {
        acc += v;
        cdf.push(acc);
    }
    let mut counts = vec![0u64; p.len()];
    let last = counts.len() - 1;
    for _ in 0..n {
        let u = F::sample_unit(rng);
        // Linear CDF walk; m is small. The final bucket absorbs the
        // roundoff sliver above cdf[last].
        let mut k = last;
        for (i, &c) in cdf.iter().enumerate() {
            if u < c {
                k = i;
                break;
            }
        }
        counts[k] += 1;
    }
    OutcomeCounts::new(counts).expect("m ≥ 1")
}

fn one_trial<F: Scalar>(cfg: &SingleConfig<F>, y: &StateVector<F>, trial: u64) -> Result<TrialResult<F>> {
    let mut stream = rng::stream(cfg.seed, trial);
    let counts = sample_outcomes(y, cfg.n, &mut stream);
    let p_hat: ProbabilityVector<F> = estimate(&counts)?;
    let y_hat = amplitude_encode(&p_hat);
    let omega_hat = p_hat
        .iter()
        .map(|&ph| cfg.encoding.invert(ph))
        .collect::<Result<Vec<F>>>()?;
    Ok(TrialResult { counts, p_hat, y_hat, omega_hat })
}

/// Run the configured trials. Trial t always consumes RNG stream
/// `(seed, t)`, so results are bit-identical for any worker count.
pub fn run_experiment<F: Scalar>(cfg: &SingleConfig<F>) -> Result<Vec<TrialResult<F>>> {
    if cfg.n == 0 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be ≥ 1"));
    }
    let y = amplitude_encode(&cfg.p);
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| one_trial(cfg, &y, t))
        .collect()
}

/// Error-scaling figures at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow<F> {
    pub n: u64,
    /// Sample variance of ω̂_i across included trials, per component.
    pub var_omega_hat: Vec<F>,
    /// The flat prediction 1/(4n).
    pub predicted_var: F,
    /// Mean over included trials of Σ_i (ŷ_i − y_i)².
    pub aggregate_sq_error: F,
    /// (m−1)/(4n).
    pub predicted_aggregate: F,
    /// √((m−1)/n) — the convention-dependent aggregate figure, reported
    /// alongside rather than instead of the factor-4 law.
    pub sigma_textbook: F,
    /// Trials dropped because some p̂_i hit 0 or 1 (boundary of the
    /// parametrization, where ω̂ is degenerate).
    pub excluded_trials: u64,
    pub included_trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport<F> {
    pub m: usize,
    pub trials: u64,
    pub rows: Vec<ScalingRow<F>>,
}

/// Measure how estimator error scales with n, at amplitude encoding.
///
/// `p` must be interior (no component at 0 or 1) so the true parameters sit
/// away from the boundary.
pub fn error_scaling_study<F: Scalar>(
    p: &ProbabilityVector<F>,
    n_list: &[u64],
    trials: u64,
    seed: u64,
) -> Result<ScalingReport<F>> {
    let m = p.len();
    if m < 2 {
        return Err(Error::invalid("error scaling needs m ≥ 2"));
    }
    if p.iter().any(|&v| v <= F::zero() || v >= F::one()) {
        return Err(Error::invalid("error scaling needs an interior p (no 0/1 components)"));
    }
    if trials < 2 {
        return Err(Error::invalid("need ≥ 2 trials for a variance"));
    }
    if n_list.is_empty() {
        return Err(Error::Empty { what: "n list" });
    }
    let enc = Encoding::<F>::Amplitude;
    let y_true = amplitude_encode(p);

    let mut rows = Vec::with_capacity(n_list.len());
    for (ni, &n) in n_list.iter().enumerate() {
        if n == 0 {
            return Err(Error::invalid("n must be ≥ 1"));
        }
        let cfg = SingleConfig {
            p: p.clone(),
            encoding: enc.clone(),
            n,
            trials,
            seed: rng::derive_seed(seed, ni as u64),
        };
        let results = run_experiment(&cfg)?;

        let included: Vec<&TrialResult<F>> = results
            .iter()
            .filter(|r| r.counts.counts().iter().all(|&c| c != 0 && c != n))
            .collect();
        let excluded = trials - included.len() as u64;
        if included.len() < 2 {
            return Err(Error::invalid(format!(
                "only {} of {} trials stayed interior at n = {n}; increase n",
                included.len(),
                trials
            )));
        }
        let t_inc = F::of(included.len() as f64);

        let mut var = Vec::with_capacity(m);
        for i in 0..m {
            let mean: F = included.iter().map(|r| r.omega_hat[i]).sum::<F>() / t_inc;
            let ss: F = included
                .iter()
                .map(|r| {
                    let d = r.omega_hat[i] - mean;
                    d * d
                })
                .sum();
            var.push(ss / (t_inc - F::one()));
        }

        let agg: F = included
            .iter()
            .map(|r| {
                (0..m)
                    .map(|i| {
                        let d = r.y_hat[i] - y_true[i];
                        d * d
                    })
                    .sum::<F>()
            })
            .sum::<F>()
            / t_inc;

        let nf = F::of(n as f64);
        rows.push(ScalingRow {
            n,
            var_omega_hat: var,
            predicted_var: (F::of(4.0) * nf).recip(),
            aggregate_sq_error: agg,
            predicted_aggregate: F::of((m - 1) as f64) / (F::of(4.0) * nf),
            sigma_textbook: sigma_theory(m, n)?,
            excluded_trials: excluded,
            included_trials: included.len() as u64,
        });
    }
    Ok(ScalingReport { m, trials, rows })
}

/// How a single photodetector responds in the laser intensity scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionModel {
    /// Detection probability cos²α — the squared-amplitude rule used
    /// everywhere else in this crate.
    #[default]
    CosSquared,
    /// Detection probability sin α — the literal textbook-example figure;
    /// kept behind this flag for reproduction, not because it follows from
    /// the encoding rule.
    TextbookSin,
}

/// Mean photodetector click rate x̄ after n photons at polarizer angle α.
pub fn laser_scenario<F: Scalar>(alpha: F, n: u64, seed: u64, model: DetectionModel) -> Result<F> {
    if n == 0 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    if !alpha.is_finite() || alpha < F::zero() || alpha > F::FRAC_PI_2() {
        return Err(Error::OutsideDomain {
            value: alpha.as_f64(),
            lo: 0.0,
            hi: std::f64::consts::FRAC_PI_2,
        });
    }
    let q = match model {
        DetectionModel::CosSquared => {
            let c = alpha.cos();
            c * c
        }
        DetectionModel::TextbookSin => alpha.sin(),
    };
    let blocks = n.div_ceil(BLOCK);
    let clicks: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng::stream(seed, b);
            let in_block = BLOCK.min(n - b * BLOCK);
            let mut k = 0u64;
            for _ in 0..in_block {
                if F::sample_unit(&mut stream) < q {
                    k += 1;
                }
            }
            k
        })
        .sum();
    Ok(F::of(clicks as f64) / F::of(n as f64))
}

/// Exact estimator moments for the two-codeword experiment by binomial
/// enumeration — no sampling anywhere.
///
/// Runs the *production* per-outcome path (counts → p̂ → ω̂, ŷ) on every
/// possible outcome k ∈ 0..=n and weights by the exact binomial pmf, so a
/// Monte Carlo run of [`run_experiment`] must reproduce these numbers up to
/// sampling error. Intended for small n (the pmf recurrence is exact
/// enough well past n = 12, but the point of this oracle is small n).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactMoments<F> {
    pub n: u64,
    /// True parameter ω = arccos √p₁.
    pub omega: F,
    pub mean_omega_hat: F,
    /// E[(ω̂ − ω)²].
    pub mse_omega_hat: F,
    /// Variance about E[ω̂].
    pub var_omega_hat: F,
    /// E[Σ_i (ŷ_i − y_i)²].
    pub mse_y_total: F,
    /// Standard deviation of the per-trial squared error (ω̂ − ω)²; divides
    /// by √trials to get the Monte Carlo error bar.
    pub sd_sq_error: F,
}

pub fn exact_binomial_moments<F: Scalar>(
    p: &ProbabilityVector<F>,
    n: u64,
) -> Result<ExactMoments<F>> {
    if p.len() != 2 {
        return Err(Error::NotTwoDimensional { op: "binomial enumeration", m: p.len() });
    }
    if n == 0 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    let enc = Encoding::<F>::Amplitude;
    let p1 = p[0];
    let omega = enc.invert(p1)?;
    let y_true = amplitude_encode(p);

    // pmf(k) by the multiplicative recurrence from (1−p)^n.
    let mut pmf = (F::one() - p1).powi(n as i32);
    let ratio = p1 / (F::one() - p1);

    let (mut e_w, mut e_w2, mut e_sq, mut e_sq2, mut e_y) =
        (F::zero(), F::zero(), F::zero(), F::zero(), F::zero());
    for k in 0..=n {
        // Production path, exactly as a sampled trial would run it.
        let counts = OutcomeCounts::new(vec![k, n - k])?;
        let p_hat: ProbabilityVector<F> = estimate(&counts)?;
        let w_hat = enc.invert(p_hat[0])?;
        let y_hat = amplitude_encode(&p_hat);

        let d = w_hat - omega;
        let sq = d * d;
        let y_err: F = (0..2)
            .map(|i| {
                let e = y_hat[i] - y_true[i];
                e * e
            })
            .sum();

        e_w += pmf * w_hat;
        e_w2 += pmf * w_hat * w_hat;
        e_sq += pmf * sq;
        e_sq2 += pmf * sq * sq;
        e_y += pmf * y_err;

        if k < n {
            pmf = pmf * ratio * F::of((n - k) as f64) / F::of((k + 1) as f64);
        }
    }
    let var = e_w2 - e_w * e_w;
    let sd_sq = (e_sq2 - e_sq * e_sq).max(F::zero()).sqrt();
    Ok(ExactMoments {
        n,
        omega,
        mean_omega_hat: e_w,
        mse_omega_hat: e_sq,
        var_omega_hat: var,
        mse_y_total: e_y,
        sd_sq_error: sd_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(p: &[f64]) -> ProbabilityVector<f64> {
        ProbabilityVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn sampling_concentrates_on_p() {
        let y = amplitude_encode(&pv(&[0.5, 0.5]));
        let mut stream = rng::stream(99, 0);
        let counts = sample_outcomes(&y, 1_000_000, &mut stream);
        let frac = counts.counts()[0] as f64 / 1e6;
        assert!((0.498..=0.502).contains(&frac), "p̂₁ = {frac}");
    }

    #[test]
    fn degenerate_p_is_deterministic() {
        let y = amplitude_encode(&pv(&[1.0, 0.0]));
        let mut stream = rng::stream(1, 0);
        let counts = sample_outcomes(&y, 1000, &mut stream);
        assert_eq!(counts.counts(), &[1000, 0]);
    }

    #[test]
    fn trials_are_reproducible_and_consistent() {
        let cfg = SingleConfig {
            p: pv(&[0.3, 0.7]),
            encoding: Encoding::Amplitude,
            n: 500,
            trials: 64,
            seed: 7,
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert_eq!(r.counts.n(), 500);
            for i in 0..2 {
                // y_hat² = p_hat, ω̂ = arccos √p̂
                assert!((r.y_hat[i] * r.y_hat[i] - r.p_hat[i]).abs() < 1e-12);
                assert!((r.omega_hat[i] - r.p_hat[i].sqrt().acos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn thread_pools_do_not_change_results() {
        let cfg = SingleConfig {
            p: pv(&[0.2, 0.5, 0.3]),
            encoding: Encoding::Amplitude,
            n: 200,
            trials: 32,
            seed: 11,
        };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap());
        assert_eq!(one, four);
    }

    #[test]
    fn identity_parametrization_reports_p_hat_itself() {
        let cfg = SingleConfig {
            p: pv(&[0.3, 0.7]),
            encoding: Encoding::Identity,
            n: 100,
            trials: 8,
            seed: 3,
        };
        for r in run_experiment(&cfg).unwrap() {
            for i in 0..2 {
                assert!((r.omega_hat[i] - r.p_hat[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn scaling_study_validates_input() {
        assert!(error_scaling_study(&pv(&[1.0, 0.0]), &[100], 10, 1).is_err());
        assert!(error_scaling_study(&pv(&[0.5, 0.5]), &[], 10, 1).is_err());
        assert!(error_scaling_study(&pv(&[0.5, 0.5]), &[100], 1, 1).is_err());
    }

    #[test]
    fn scaling_study_tracks_one_over_4n() {
        let report = error_scaling_study(&pv(&[0.4, 0.6]), &[2000], 2000, 17).unwrap();
        let row = &report.rows[0];
        let pred = 1.0 / (4.0 * 2000.0);
        assert_eq!(row.predicted_var, pred);
        for (i, v) in row.var_omega_hat.iter().enumerate() {
            let ratio = v / pred;
            assert!((0.9..=1.1).contains(&ratio), "component {i}: ratio {ratio}");
        }
        let agg_ratio = row.aggregate_sq_error / row.predicted_aggregate;
        assert!((0.9..=1.1).contains(&agg_ratio), "aggregate ratio {agg_ratio}");
        assert!((row.sigma_textbook - (1.0f64 / 2000.0).sqrt()).abs() < 1e-15);
        assert_eq!(row.excluded_trials, 0);
    }

    #[test]
    fn laser_hand_values() {
        assert_eq!(
            laser_scenario::<f64>(0.0, 1000, 5, DetectionModel::CosSquared).unwrap(),
            1.0
        );
        assert_eq!(
            laser_scenario::<f64>(std::f64::consts::FRAC_PI_2, 1000, 5, DetectionModel::CosSquared)
                .unwrap(),
            0.0
        );
        let x = laser_scenario::<f64>(std::f64::consts::FRAC_PI_3, 1_000_000, 5, DetectionModel::CosSquared)
            .unwrap();
        // 4σ band around cos²(π/3) = 1/4.
        assert!((x - 0.25).abs() < 4.0 * (0.25 * 0.75 / 1e6f64).sqrt(), "x̄ = {x}");
        let s = laser_scenario::<f64>(std::f64::consts::FRAC_PI_6, 1_000_000, 5, DetectionModel::TextbookSin)
            .unwrap();
        assert!((s - 0.5).abs() < 4.0 * (0.25 / 1e6f64).sqrt(), "x̄ = {s}");
        assert!(laser_scenario::<f64>(2.0, 10, 5, DetectionModel::CosSquared).is_err());
    }

    #[test]
    fn enumeration_matches_closed_forms_where_known() {
        // n = 1, p = 1/2: outcomes are ω̂ ∈ {0, π/2} each with prob 1/2.
        let m1 = exact_binomial_moments(&pv(&[0.5, 0.5]), 1).unwrap();
        let pi4 = std::f64::consts::FRAC_PI_4;
        assert!((m1.mean_omega_hat - pi4).abs() < 1e-15);
        assert!((m1.mse_omega_hat - pi4 * pi4).abs() < 1e-15);
        // E[Σ(ŷ−y)²]: each outcome is a basis vector at distance²
        // (1−1/√2)² + 1/2 from the diagonal state.
        let expect = (1.0 - 0.5f64.sqrt()).powi(2) + 0.5;
        assert!((m1.mse_y_total - expect).abs() < 1e-15);
    }

    #[test]
    fn enumeration_pmf_sums_to_one_implicitly() {
        // mean ω̂ of a symmetric p at even n stays at π/4 by symmetry.
        let m = exact_binomial_moments(&pv(&[0.5, 0.5]), 8).unwrap();
        assert!((m.mean_omega_hat - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        assert!(exact_binomial_moments(&pv(&[0.2, 0.3, 0.5]), 4).is_err());
    }
}
