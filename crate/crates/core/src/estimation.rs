//! Estimation layer: Fisher information, the multinomial covariance, the
//! Cramér–Rao report, and the relative-frequency estimator.
//!
//! For an encoding μ and independent parameters ω_i, the per-parameter
//! Fisher information from n categorical samples is diagonal with entries
//! J_ii = n · dμ(ω_i)² / (μ_i (1 − μ_i)). The amplitude family pins
//! dμ² = 4μ(1−μ), so its per-sample diagonal is the constant 4 and the
//! Cramér–Rao bound 1/(4n) is flat in ω — the defining feature the rest of
//! the toolkit keeps re-measuring.

use serde::{Deserialize, Serialize};

use crate::encoding::Encoding;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::ProbabilityVector;

/// Tallies of a repeated m-outcome measurement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    counts: Vec<u64>,
}

impl OutcomeCounts {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Empty { what: "outcome counts" });
        }
        Ok(OutcomeCounts { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    /// Total number of samples.
    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Per-parameter (per-sample) Fisher information values J̃_ii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherDiagonal<F> {
    pub values: Vec<F>,
}

/// Dense m×m covariance, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix<F> {
    m: usize,
    data: Vec<F>,
}

impl<F: Scalar> CovarianceMatrix<F> {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn row_sums(&self) -> Vec<F> {
        (0..self.m).map(|i| self.row(i).iter().copied().sum()).collect()
    }
}

/// Per-sample Fisher diagonal J̃_ii = dμ(ω_i)² / (μ_i(1−μ_i)).
///
/// Endpoint policy: where μ ∈ {0, 1} the quotient is 0/0 for the amplitude
/// family — whose limit is the constant 4 — and genuinely divergent for the
/// others, which return [`Error::EndpointSingularity`].
pub fn fisher_diagonal<F: Scalar>(enc: &Encoding<F>, omegas: &[F]) -> Result<FisherDiagonal<F>> {
    if omegas.is_empty() {
        return Err(Error::Empty { what: "ω values" });
    }
    let mut values = Vec::with_capacity(omegas.len());
    for &w in omegas {
        let vf = enc.mu_complement_product(w)?;
        if vf == F::zero() {
            match enc {
                Encoding::Amplitude => values.push(F::of(4.0)),
                _ => return Err(Error::EndpointSingularity { omega: w.as_f64() }),
            }
            continue;
        }
        let d = enc.dmu(w)?;
        values.push(d * d / vf);
    }
    Ok(FisherDiagonal { values })
}

/// Covariance of multinomial counts at distribution p and sample size n:
/// diagonal n·p_i(1−p_i), off-diagonal −n·p_i·p_j. Rows sum to zero because
/// the counts are constrained to total n.
pub fn multinomial_covariance<F: Scalar>(p: &ProbabilityVector<F>, n: u64) -> CovarianceMatrix<F> {
    let m = p.len();
    let nf = F::of(n as f64);
    let mut data = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            if i == j {
                data.push(nf * p[i] * (F::one() - p[i]));
            } else {
                // Group p_i·p_j first: multiplication commutes bit-exactly,
                // so (i,j) and (j,i) land on the same float and the matrix
                // is symmetric to the last ulp. nf·p_i·p_j is not.
                data.push(-(nf * (p[i] * p[j])));
            }
        }
    }
    CovarianceMatrix { m, data }
}

/// One codeword's worth of Cramér–Rao bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CramerRaoRow<F> {
    pub omega: F,
    /// 1 / (n · J̃_ii).
    pub variance_bound: F,
    /// Delta-method variance of the plug-in estimator,
    /// μ(1−μ) / (n · dμ²).
    pub achieved_variance: F,
    /// Bound and achieved agree to 1e−9 relative.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CramerRaoReport<F> {
    pub n: u64,
    pub rows: Vec<CramerRaoRow<F>>,
}

/// Compare the Cramér–Rao bound with the variance the relative-frequency
/// estimator actually achieves, per codeword.
///
/// The plug-in estimator saturates the bound pointwise for every encoding;
/// what distinguishes the amplitude family is that its bound is *constant*
/// (1/(4n)) instead of varying with ω.
pub fn cramer_rao_report<F: Scalar>(
    enc: &Encoding<F>,
    omegas: &[F],
    n: u64,
) -> Result<CramerRaoReport<F>> {
    if n == 0 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    let fisher = fisher_diagonal(enc, omegas)?;
    let nf = F::of(n as f64);
    let mut rows = Vec::with_capacity(omegas.len());
    for (&w, &j) in omegas.iter().zip(&fisher.values) {
        let bound = (nf * j).recip();
        // Two routes to what should be the same number: through J̃ and
        // through the delta method directly.
        let vf = enc.mu_complement_product(w)?;
        let d = enc.dmu(w)?;
        let achieved = if vf == F::zero() {
            // Amplitude endpoint (other families errored in fisher_diagonal).
            bound
        } else {
            vf / (nf * d * d)
        };
        let scale = bound.abs().max(achieved.abs());
        let saturated = (bound - achieved).abs() <= F::of(1e-9) * scale;
        rows.push(CramerRaoRow { omega: w, variance_bound: bound, achieved_variance: achieved, saturated });
    }
    Ok(CramerRaoReport { n, rows })
}

/// Relative frequencies p̂_i = counts_i / n.
pub fn estimate<F: Scalar>(counts: &OutcomeCounts) -> Result<ProbabilityVector<F>> {
    let n = counts.n();
    if n == 0 {
        return Err(Error::invalid("cannot estimate from zero samples"));
    }
    let nf = F::of(n as f64);
    let p: Vec<F> = counts.counts().iter().map(|&c| F::of(c as f64) / nf).collect();
    ProbabilityVector::new(p)
}

/// The aggregate error figure σ = √((m−1)/n) for an m-codeword transfer at
/// sample size n (convention-dependent; reported alongside the factor-4
/// per-component law rather than instead of it).
pub fn sigma_theory<F: Scalar>(m: usize, n: u64) -> Result<F> {
    if m < 2 {
        return Err(Error::invalid("σ theory needs m ≥ 2"));
    }
    if n == 0 {
        return Err(Error::invalid("σ theory needs n ≥ 1"));
    }
    Ok((F::of((m - 1) as f64) / F::of(n as f64)).sqrt())
}
