//! Quantum-space data model: codeword sets, probability vectors on the
//! simplex, state vectors on the unit sphere, and the primitives connecting
//! them.
//!
//! A codeword distribution `p` is carried by the state vector with
//! components `y_i = √p_i` (a point on S^{m−1}); measurement inverts the map
//! via `p_i = y_i²`. Rotations are the m = 2 change of measurement basis
//! used by the two-codeword transfer machinery.

use serde::de::{Deserializer, Error as DeError};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An ordered set of distinct codeword labels. Purely bookkeeping: the
/// numeric machinery only cares about `m = len()`, the labels show up in
/// reports and CSV headers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodewordSet {
    labels: Vec<String>,
}

impl CodewordSet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty { what: "codeword set" });
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::invalid(format!("duplicate codeword label {a:?}")));
            }
        }
        Ok(CodewordSet { labels })
    }

    /// `w1, w2, …, wm`.
    pub fn numbered(m: usize) -> Result<Self> {
        Self::new((1..=m).map(|i| format!("w{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// A point on the probability simplex: `p_i ∈ [0, 1]`, `Σ p_i = 1`.
///
/// Construction validates; the sum tolerance is [`Scalar::norm_tol`] for
/// values produced arithmetically and [`Scalar::file_tol`] for values read
/// back from files (see [`ProbabilityVector::with_tolerance`]).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityVector<F>(Vec<F>);

impl<F: Scalar> ProbabilityVector<F> {
    pub fn new(p: Vec<F>) -> Result<Self> {
        Self::with_tolerance(p, F::norm_tol())
    }

    pub fn with_tolerance(p: Vec<F>, tol: F) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Empty { what: "probability vector" });
        }
        for (index, &v) in p.iter().enumerate() {
            if !(v >= F::zero() && v <= F::one()) {
                return Err(Error::ProbabilityOutOfRange { index, value: v.as_f64() });
            }
        }
        let sum: F = p.iter().copied().sum();
        if (sum - F::one()).abs() > tol {
            return Err(Error::NotNormalized { sum: sum.as_f64(), tol: tol.as_f64() });
        }
        Ok(ProbabilityVector(p))
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Empty { what: "probability vector" });
        }
        let w = F::one() / F::of(m as f64);
        // Build the tail so the components sum to exactly one.
        let mut p = vec![w; m - 1];
        let tail = F::one() - w * F::of((m - 1) as f64);
        p.push(tail);
        Ok(ProbabilityVector(p))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, F> {
        self.0.iter()
    }
}

impl<F: Scalar> std::ops::Index<usize> for ProbabilityVector<F> {
    type Output = F;
    fn index(&self, i: usize) -> &F {
        &self.0[i]
    }
}

impl<'de, F> Deserialize<'de> for ProbabilityVector<F>
where
    F: Scalar + Deserialize<'de>,
{
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<F>::deserialize(d)?;
        ProbabilityVector::with_tolerance(raw, F::file_tol()).map_err(DeError::custom)
    }
}

/// A unit vector in R^m. Components may be negative (rotations produce
/// signed components); the canonical image of a probability vector has
/// `y_i ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StateVector<F>(Vec<F>);

impl<F: Scalar> StateVector<F> {
    pub fn new(y: Vec<F>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Empty { what: "state vector" });
        }
        let norm_sq: F = y.iter().map(|&v| v * v).sum();
        if (norm_sq - F::one()).abs() > F::norm_tol() {
            return Err(Error::NotUnitNorm { norm_sq: norm_sq.as_f64() });
        }
        Ok(StateVector(y))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.0
    }

    /// True when every component is ≥ 0, i.e. the vector is the canonical
    /// encoding of some probability vector.
    pub fn is_canonical(&self) -> bool {
        self.0.iter().all(|&v| v >= F::zero())
    }

    /// Component angles `ω_i = arccos(y_i)`; lies in `[0, π/2]` exactly when
    /// the vector is canonical.
    pub fn angles(&self) -> Vec<F> {
        self.0.iter().map(|&v| v.acos()).collect()
    }
}

impl<F: Scalar> std::ops::Index<usize> for StateVector<F> {
    type Output = F;
    fn index(&self, i: usize) -> &F {
        &self.0[i]
    }
}

impl<'de, F> Deserialize<'de> for StateVector<F>
where
    F: Scalar + Deserialize<'de>,
{
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<F>::deserialize(d)?;
        if raw.is_empty() {
            return Err(DeError::custom(Error::Empty { what: "state vector" }));
        }
        let norm_sq: F = raw.iter().map(|&v| v * v).sum();
        if (norm_sq - F::one()).abs() > F::file_tol() {
            return Err(DeError::custom(Error::NotUnitNorm { norm_sq: norm_sq.as_f64() }));
        }
        Ok(StateVector(raw))
    }
}

/// Componentwise square root: the minimum-variance embedding of the simplex
/// into the unit sphere.
pub fn amplitude_encode<F: Scalar>(p: &ProbabilityVector<F>) -> StateVector<F> {
    // Σ y_i² = Σ p_i = 1 within the simplex tolerance, so this cannot fail.
    StateVector(p.iter().map(|&v| v.sqrt()).collect())
}

/// Componentwise square: recovers the probability vector a state carries.
pub fn measure_probabilities<F: Scalar>(y: &StateVector<F>) -> ProbabilityVector<F> {
    ProbabilityVector(y.as_slice().iter().map(|&v| v * v).collect())
}

/// The two-dimensional state at angle θ: `(cos θ, sin θ)`.
pub fn angle_state<F: Scalar>(theta: F) -> StateVector<F> {
    StateVector(vec![theta.cos(), theta.sin()])
}

/// Rotate an m = 2 state by θ (change of measurement basis):
/// `angle_state(γ)` maps to `angle_state(γ − θ)`.
pub fn rotate<F: Scalar>(y: &StateVector<F>, theta: F) -> Result<StateVector<F>> {
    if y.len() != 2 {
        return Err(Error::NotTwoDimensional { op: "rotate", m: y.len() });
    }
    let (c, s) = (theta.cos(), theta.sin());
    let r = vec![c * y[0] + s * y[1], -s * y[0] + c * y[1]];
    StateVector::new(r)
}

/// Coherent superposition `a·u + b·v` of two m = 2 states.
///
/// Valid only when the result is again a unit vector (as it is for an
/// orthonormal pair `{u, v}` and unit coefficient vector `(a, b)`);
/// otherwise the unit-norm check fails loudly.
pub fn superpose<F: Scalar>(
    a: F,
    u: &StateVector<F>,
    b: F,
    v: &StateVector<F>,
) -> Result<StateVector<F>> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: v.len() });
    }
    let sum: Vec<F> = u
        .as_slice()
        .iter()
        .zip(v.as_slice())
        .map(|(&x, &w)| a * x + b * w)
        .collect();
    StateVector::new(sum)
}
