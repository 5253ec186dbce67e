//! Parameter-to-probability encoding families μ(ω) and their calculus.
//!
//! The amplitude family μ(ω) = cos²ω is the one that matters: it is the
//! unique (up to phase) solution of dμ² = 4μ(1−μ), which is exactly the
//! condition for the per-parameter Fisher information to be constant and
//! the estimator variance to sit on the Cramér–Rao bound uniformly in ω.
//! The other families exist to show what failure looks like.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A tabulated encoding: nodes (ω_j, μ_j, dμ_j) with linear interpolation
/// between them. ω must be strictly increasing and μ within [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable<F>")]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct TabulatedEncoding<F> {
    omega: Vec<F>,
    mu: Vec<F>,
    dmu: Vec<F>,
}

#[derive(Deserialize)]
struct RawTable<F> {
    omega: Vec<F>,
    mu: Vec<F>,
    dmu: Vec<F>,
}

impl<F: Scalar> TryFrom<RawTable<F>> for TabulatedEncoding<F> {
    type Error = Error;
    fn try_from(r: RawTable<F>) -> Result<Self> {
        TabulatedEncoding::new(r.omega, r.mu, r.dmu)
    }
}

impl<F: Scalar> TabulatedEncoding<F> {
    pub fn new(omega: Vec<F>, mu: Vec<F>, dmu: Vec<F>) -> Result<Self> {
        if omega.len() < 2 || mu.len() != omega.len() || dmu.len() != omega.len() {
            return Err(Error::BadTable);
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::BadTable);
        }
        if mu.iter().any(|&v| !(v >= F::zero() && v <= F::one()) || !v.is_finite()) {
            return Err(Error::BadTable);
        }
        if omega.iter().chain(&dmu).any(|v| !v.is_finite()) {
            return Err(Error::BadTable);
        }
        Ok(TabulatedEncoding { omega, mu, dmu })
    }

    /// Sample a smooth encoding onto `nodes` equally spaced points.
    pub fn from_functions(
        lo: F,
        hi: F,
        nodes: usize,
        mu: impl Fn(F) -> F,
        dmu: impl Fn(F) -> F,
    ) -> Result<Self> {
        if nodes < 2 || !(hi > lo) {
            return Err(Error::BadTable);
        }
        let step = (hi - lo) / F::of((nodes - 1) as f64);
        let omega: Vec<F> = (0..nodes).map(|j| lo + step * F::of(j as f64)).collect();
        let mu_v = omega.iter().map(|&w| mu(w)).collect();
        let dmu_v = omega.iter().map(|&w| dmu(w)).collect();
        Self::new(omega, mu_v, dmu_v)
    }

    fn segment(&self, w: F) -> (usize, F) {
        // Index of the segment containing w plus the interpolation weight.
        let n = self.omega.len();
        let mut hi = 1;
        while hi < n - 1 && self.omega[hi] < w {
            hi += 1;
        }
        let lo = hi - 1;
        let t = (w - self.omega[lo]) / (self.omega[hi] - self.omega[lo]);
        (lo, t)
    }

    fn interp(&self, values: &[F], w: F) -> F {
        let (lo, t) = self.segment(w);
        values[lo] + t * (values[lo + 1] - values[lo])
    }

    fn invert_mu(&self, target: F) -> Result<F> {
        let increasing = self.mu.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.mu.windows(2).all(|w| w[1] < w[0]);
        if !increasing && !decreasing {
            return Err(Error::NotInvertible { why: "tabulated μ is not strictly monotone" });
        }
        let inside = |a: F, b: F| (target >= a.min(b)) && (target <= a.max(b));
        for j in 0..self.mu.len() - 1 {
            if inside(self.mu[j], self.mu[j + 1]) {
                let t = (target - self.mu[j]) / (self.mu[j + 1] - self.mu[j]);
                return Ok(self.omega[j] + t * (self.omega[j + 1] - self.omega[j]));
            }
        }
        Err(Error::NotInvertible { why: "target μ outside the tabulated range" })
    }
}

/// The built-in encoding families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub enum Encoding<F> {
    /// μ(ω) = cos²ω on [0, π/2]. Minimum-variance; the only family whose
    /// ODE residual vanishes identically.
    Amplitude,
    /// μ(ω) = ω on [0, 1].
    Identity,
    /// μ(ω) = ω^k on [0, 1], integer k ≥ 1.
    Power(u32),
    /// Tabulated nodes with linear interpolation.
    Custom(TabulatedEncoding<F>),
}

impl<F: Scalar> Encoding<F> {
    /// Closed parameter domain [lo, hi].
    pub fn domain(&self) -> (F, F) {
        match self {
            Encoding::Amplitude => (F::zero(), F::FRAC_PI_2()),
            Encoding::Identity | Encoding::Power(_) => (F::zero(), F::one()),
            Encoding::Custom(t) => (t.omega[0], *t.omega.last().unwrap()),
        }
    }

    fn check_domain(&self, omega: F) -> Result<()> {
        let (lo, hi) = self.domain();
        // A whisker of slack so that e.g. π/2 computed two different ways
        // still counts as inside.
        let slack = F::norm_tol() * (F::one() + hi.abs() + lo.abs());
        if !omega.is_finite() || omega < lo - slack || omega > hi + slack {
            return Err(Error::OutsideDomain {
                value: omega.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        Ok(())
    }

    fn check_power(k: u32) -> Result<()> {
        if k == 0 {
            return Err(Error::invalid("power encoding requires k ≥ 1"));
        }
        Ok(())
    }

    /// μ(ω).
    pub fn mu(&self, omega: F) -> Result<F> {
        self.check_domain(omega)?;
        Ok(match self {
            Encoding::Amplitude => {
                let c = omega.cos();
                c * c
            }
            Encoding::Identity => omega,
            Encoding::Power(k) => {
                Self::check_power(*k)?;
                omega.powi(*k as i32)
            }
            Encoding::Custom(t) => t.interp(&t.mu, omega),
        })
    }

    /// dμ/dω.
    pub fn dmu(&self, omega: F) -> Result<F> {
        self.check_domain(omega)?;
        Ok(match self {
            Encoding::Amplitude => {
                // −2 cos ω sin ω = −sin 2ω
                -(F::of(2.0)) * omega.cos() * omega.sin()
            }
            Encoding::Identity => F::one(),
            Encoding::Power(k) => {
                Self::check_power(*k)?;
                F::of(*k as f64) * omega.powi(*k as i32 - 1)
            }
            Encoding::Custom(t) => t.interp(&t.dmu, omega),
        })
    }

    /// μ(1−μ) in a cancellation-free form per family. Near ω = 0 the naive
    /// `1 − cos²ω` loses half the mantissa; the product form keeps the
    /// Fisher diagonal flat to ~1 ulp, which the uniformity checks rely on.
    pub fn mu_complement_product(&self, omega: F) -> Result<F> {
        self.check_domain(omega)?;
        Ok(match self {
            Encoding::Amplitude => {
                let cs = omega.cos() * omega.sin();
                cs * cs
            }
            Encoding::Identity => omega * (F::one() - omega),
            Encoding::Power(k) => {
                Self::check_power(*k)?;
                let m = omega.powi(*k as i32);
                m * (F::one() - m)
            }
            Encoding::Custom(t) => {
                let m = t.interp(&t.mu, omega);
                m * (F::one() - m)
            }
        })
    }

    /// ω such that μ(ω) equals the given probability.
    pub fn invert(&self, mu: F) -> Result<F> {
        if !(mu >= F::zero() && mu <= F::one()) {
            return Err(Error::ProbabilityOutOfRange { index: 0, value: mu.as_f64() });
        }
        match self {
            Encoding::Amplitude => Ok(mu.sqrt().acos()),
            Encoding::Identity => Ok(mu),
            Encoding::Power(k) => {
                Self::check_power(*k)?;
                Ok(mu.powf(F::one() / F::of(*k as f64)))
            }
            Encoding::Custom(t) => t.invert_mu(mu),
        }
    }

    /// Largest mixed abs/rel mismatch between `dmu` and a central finite
    /// difference of `mu` over an interior grid. A cheap self-consistency
    /// check: ≲ 1e−6 for the analytic families; for tabulated encodings the
    /// mismatch is resolution-limited (piecewise-linear μ has a constant
    /// finite difference per segment), so expect O(node spacing) instead.
    pub fn check_derivative(&self, steps: usize) -> Result<F> {
        let (lo, hi) = self.domain();
        let span = hi - lo;
        let h = span * F::of(1e-6);
        let mut worst = F::zero();
        for j in 1..steps {
            let w = lo + span * F::of(j as f64) / F::of(steps as f64);
            if w - h <= lo || w + h >= hi {
                continue;
            }
            let fd = (self.mu(w + h)? - self.mu(w - h)?) / (F::of(2.0) * h);
            let d = self.dmu(w)?;
            let err = (fd - d).abs() / d.abs().max(F::one());
            worst = worst.max(err);
        }
        Ok(worst)
    }
}

/// Residual of the minimum-variance condition, `dμ(ω)² − 4 μ(ω)(1 − μ(ω))`.
///
/// Identically zero (to roundoff) for the amplitude family; bounded away
/// from zero somewhere on the domain for every other built-in family.
pub fn encoding_ode_residual<F: Scalar>(enc: &Encoding<F>, omega: F) -> Result<F> {
    let d = enc.dmu(omega)?;
    let m = enc.mu(omega)?;
    Ok(d * d - F::of(4.0) * m * (F::one() - m))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..=n).map(move |j| lo + (hi - lo) * j as f64 / n as f64)
    }

    #[test]
    fn amplitude_residual_vanishes_on_a_dense_grid() {
        let enc = Encoding::<f64>::Amplitude;
        for w in grid(0.0, std::f64::consts::FRAC_PI_2, 1000) {
            let r = encoding_ode_residual(&enc, w).unwrap();
            assert!(r.abs() < TOL, "residual {r} at ω = {w}");
        }
    }

    #[test]
    fn identity_residual_matches_hand_value() {
        let enc = Encoding::<f64>::Identity;
        let r = encoding_ode_residual(&enc, 0.3).unwrap();
        assert!((r - 0.16).abs() < TOL); // 1 − 4·0.3·0.7
    }

    #[test]
    fn non_amplitude_families_miss_the_ode() {
        for enc in [Encoding::<f64>::Identity, Encoding::Power(2), Encoding::Power(3)] {
            let worst = grid(0.0, 1.0, 200)
                .map(|w| encoding_ode_residual(&enc, w).unwrap().abs())
                .fold(0.0, f64::max);
            assert!(worst > 1e-3, "{enc:?} residual never exceeds 1e-3");
        }
    }

    #[test]
    fn derivatives_agree_with_finite_differences() {
        for enc in [
            Encoding::<f64>::Amplitude,
            Encoding::Identity,
            Encoding::Power(2),
            Encoding::Power(5),
        ] {
            let worst = enc.check_derivative(97).unwrap();
            assert!(worst < 1e-6, "{enc:?} worst FD mismatch {worst}");
        }
    }

    #[test]
    fn inversion_round_trips() {
        for enc in [Encoding::<f64>::Amplitude, Encoding::Identity, Encoding::Power(3)] {
            let (lo, hi) = enc.domain();
            for w in grid(lo, hi, 53) {
                let back = enc.invert(enc.mu(w).unwrap()).unwrap();
                assert!((back - w).abs() < 1e-9, "{enc:?} at ω = {w}: {back}");
            }
        }
    }

    #[test]
    fn domain_is_enforced() {
        let enc = Encoding::<f64>::Amplitude;
        assert!(matches!(enc.mu(-0.2), Err(Error::OutsideDomain { .. })));
        assert!(matches!(enc.mu(2.0), Err(Error::OutsideDomain { .. })));
        assert!(enc.mu(std::f64::consts::FRAC_PI_2).is_ok());
        assert!(matches!(
            Encoding::<f64>::Power(0).mu(0.5),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn tabulated_encoding_interpolates_and_inverts() {
        let t = TabulatedEncoding::from_functions(0.0, 1.0, 401, |w: f64| w * w, |w| 2.0 * w)
            .unwrap();
        let enc = Encoding::Custom(t);
        assert!((enc.mu(0.5).unwrap() - 0.25).abs() < 1e-5);
        assert!((enc.dmu(0.5).unwrap() - 1.0).abs() < 1e-5);
        assert!((enc.invert(0.25).unwrap() - 0.5).abs() < 1e-4);
        // Piecewise-linear μ: the FD mismatch is bounded by the node
        // spacing (2.5e-3 here), not by the analytic-family 1e-6.
        assert!(enc.check_derivative(83).unwrap() < 3e-3);
    }

    #[test]
    fn bad_tables_are_rejected() {
        assert!(TabulatedEncoding::new(vec![0.0], vec![0.0], vec![0.0]).is_err());
        assert!(TabulatedEncoding::new(
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0]
        )
        .is_err());
        assert!(TabulatedEncoding::new(
            vec![0.0, 1.0],
            vec![0.0, 1.5],
            vec![1.0, 1.0]
        )
        .is_err());
        let non_monotone =
            TabulatedEncoding::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.5], vec![1.0, 1.0, 1.0])
                .unwrap();
        assert!(matches!(
            Encoding::Custom(non_monotone).invert(0.7),
            Err(Error::NotInvertible { .. })
        ));
    }

    #[test]
    fn encoding_serde_round_trip() {
        let enc = Encoding::<f64>::Power(3);
        let json = serde_json::to_string(&enc).unwrap();
        let back: Encoding<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, enc);
        let amp: Encoding<f64> = serde_json::from_str("\"amplitude\"").unwrap();
        assert_eq!(amp, Encoding::Amplitude);
    }
}
