//! Shannon entropies over joint outcome tables, and the entropic Bell
//! inequality that double-transfer correlations get tested against.
//!
//! All entropies are in bits (log base 2) with the usual 0·log 0 = 0
//! convention. The inequality, for four variables indexed
//! (0, 1, 2, 3) = (α₁, α₂, β₁, β₂) — party one's α outcome, party two's α
//! outcome, party one's β outcome, party two's β outcome — reads
//!
//! S(α₁|α₂) ≤ S(α₁|β₂) + S(β₂|β₁) + S(β₁|α₂)
//!
//! and holds for every genuine joint distribution (it chains
//! "conditioning cannot increase entropy" twice). A positive
//! ΔS = lhs − rhs therefore certifies that no complete four-variable table
//! exists behind a set of pairwise tables.

use rand::Rng;
use serde::de::{Deserializer, Error as DeError};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::ProbabilityVector;

/// Entropy in bits of an unvalidated nonnegative slice (assumed to sum to
/// one; the public entry points validate).
fn entropy_bits<F: Scalar>(p: &[F]) -> F {
    let mut s = F::zero();
    for &v in p {
        if v > F::zero() {
            s -= v * v.log2();
        }
    }
    s
}

/// Shannon entropy S(p) in bits.
pub fn shannon_entropy<F: Scalar>(p: &ProbabilityVector<F>) -> F {
    entropy_bits(p.as_slice())
}

/// A joint distribution over k categorical variables, row-major.
///
/// `dims` gives the outcome count per variable; `probs.len()` is their
/// product. Cells are addressed by a full index vector, last variable
/// fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointTable<F> {
    dims: Vec<usize>,
    probs: Vec<F>,
}

impl<F: Scalar> JointTable<F> {
    pub fn new(dims: Vec<usize>, probs: Vec<F>) -> Result<Self> {
        Self::with_tolerance(dims, probs, F::norm_tol())
    }

    pub fn with_tolerance(dims: Vec<usize>, probs: Vec<F>, tol: F) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Empty { what: "joint table dims" });
        }
        let cells: usize = dims.iter().product();
        if probs.len() != cells {
            return Err(Error::DimensionMismatch { expected: cells, got: probs.len() });
        }
        for (index, &v) in probs.iter().enumerate() {
            if !(v >= F::zero() && v <= F::one()) {
                return Err(Error::ProbabilityOutOfRange { index, value: v.as_f64() });
            }
        }
        let sum: F = probs.iter().copied().sum();
        if (sum - F::one()).abs() > tol {
            return Err(Error::NotNormalized { sum: sum.as_f64(), tol: tol.as_f64() });
        }
        Ok(JointTable { dims, probs })
    }

    /// Plug-in table from raw tallies.
    pub fn from_counts(dims: Vec<usize>, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Empty { what: "counts (no events)" });
        }
        let tf = F::of(total as f64);
        let probs = counts.iter().map(|&c| F::of(c as f64) / tf).collect();
        Self::new(dims, probs)
    }

    /// Convenience 2×2 constructor, cells in row-major order
    /// [(0,0), (0,1), (1,0), (1,1)].
    pub fn two_by_two(cells: [F; 4]) -> Result<Self> {
        Self::new(vec![2, 2], cells.to_vec())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn vars(&self) -> usize {
        self.dims.len()
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for i in (0..self.dims.len() - 1).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    pub fn get(&self, idx: &[usize]) -> F {
        let strides = self.strides();
        assert_eq!(idx.len(), self.dims.len(), "full index required");
        let flat: usize = idx.iter().zip(&strides).map(|(&i, &s)| i * s).sum();
        self.probs[flat]
    }

    /// Marginal distribution over `keep` (in the order given). The kept
    /// variables must be distinct and in range.
    pub fn marginalize(&self, keep: &[usize]) -> Result<JointTable<F>> {
        for (i, &v) in keep.iter().enumerate() {
            if v >= self.dims.len() {
                return Err(Error::invalid(format!("variable {v} out of range")));
            }
            if keep[..i].contains(&v) {
                return Err(Error::invalid(format!("variable {v} listed twice")));
            }
        }
        if keep.is_empty() {
            return Err(Error::Empty { what: "marginal variable list" });
        }
        let out_dims: Vec<usize> = keep.iter().map(|&v| self.dims[v]).collect();
        let out_cells: usize = out_dims.iter().product();
        let mut out = vec![F::zero(); out_cells];

        let strides = self.strides();
        let mut out_strides = vec![1usize; keep.len()];
        for i in (0..keep.len() - 1).rev() {
            out_strides[i] = out_strides[i + 1] * out_dims[i + 1];
        }

        let mut idx = vec![0usize; self.dims.len()];
        for (flat, &v) in self.probs.iter().enumerate() {
            // Decode flat → idx.
            let mut rem = flat;
            for (k, &s) in strides.iter().enumerate() {
                idx[k] = rem / s;
                rem %= s;
            }
            let out_flat: usize = keep
                .iter()
                .zip(&out_strides)
                .map(|(&kv, &s)| idx[kv] * s)
                .sum();
            out[out_flat] += v;
        }
        // Sums are preserved, so this re-validates cheaply.
        JointTable::new(out_dims, out)
    }
}

impl<'de, F> Deserialize<'de> for JointTable<F>
where
    F: Scalar + Deserialize<'de>,
{
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw<F> {
            dims: Vec<usize>,
            probs: Vec<F>,
        }
        let raw = Raw::<F>::deserialize(d)?;
        JointTable::with_tolerance(raw.dims, raw.probs, F::file_tol()).map_err(DeError::custom)
    }
}

/// Joint entropy S(X₁, …, X_k) in bits.
pub fn joint_entropy<F: Scalar>(t: &JointTable<F>) -> F {
    entropy_bits(&t.probs)
}

/// Conditional entropy S(target | given) in bits.
///
/// Computed by direct summation −Σ P(t, g) log₂ (P(t, g)/P(g)), which is a
/// sum of nonnegative terms — so the result is ≥ 0 exactly, not just up to
/// cancellation — and cells with P(g) = 0 contribute nothing.
pub fn conditional_entropy<F: Scalar>(t: &JointTable<F>, target: usize, given: &[usize]) -> Result<F> {
    if given.contains(&target) {
        return Err(Error::invalid("target variable cannot also be conditioned on"));
    }
    let mut keep = vec![target];
    keep.extend_from_slice(given);
    let joint = t.marginalize(&keep)?;
    let cond = joint.marginalize(&(1..keep.len()).collect::<Vec<_>>());
    // `given` may be empty: S(target | ∅) is plain entropy.
    let cond = match cond {
        Ok(c) => c,
        Err(Error::Empty { .. }) => return Ok(entropy_bits(&joint.probs)),
        Err(e) => return Err(e),
    };

    let t_dim = joint.dims[0];
    let mut s = F::zero();
    for (flat, &pj) in joint.probs.iter().enumerate() {
        if pj > F::zero() {
            let g_flat = flat % (joint.probs.len() / t_dim);
            let pg = cond.probs[g_flat];
            s += pj * (pg / pj).log2();
        }
    }
    Ok(s)
}

/// Result of checking the entropic Bell inequality on a 4-variable table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellCheck<F> {
    pub lhs: F,
    pub rhs: F,
    pub holds: bool,
}

/// Evaluate S(0|1) ≤ S(0|3) + S(3|2) + S(2|1) on a complete 4-variable
/// table, with variables ordered (α₁, α₂, β₁, β₂). `holds` allows 1e−9 of
/// roundoff slack.
pub fn bell_inequality_holds<F: Scalar>(t: &JointTable<F>) -> Result<BellCheck<F>> {
    if t.vars() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: t.vars() });
    }
    let lhs = conditional_entropy(t, 0, &[1])?;
    let rhs = conditional_entropy(t, 0, &[3])?
        + conditional_entropy(t, 3, &[2])?
        + conditional_entropy(t, 2, &[1])?;
    let holds = lhs <= rhs + F::of(1e-9);
    Ok(BellCheck { lhs, rhs, holds })
}

/// The four pairwise (party-one outcome × party-two outcome) tables a
/// double-transfer experiment produces, keyed by the measured set pair.
/// `aa` means party one (Bob) measured set A and party two (Charley)
/// measured set A, and so on; each table is 2×2 with Bob's outcome as
/// variable 0.
///
/// Every table is individually normalized. Whether the *shared-setting
/// marginals* agree across tables is a property of the physics that made
/// them: local-model tables agree (see the property tests); contextual
/// collapse tables in general do not, which is precisely the
/// situation-dependence ΔS is built to expose. Use
/// [`SettingPairTable::max_marginal_inconsistency`] to measure it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "F: Scalar + Deserialize<'de>"))]
pub struct SettingPairTable<F> {
    pub aa: JointTable<F>,
    pub ab: JointTable<F>,
    pub ba: JointTable<F>,
    pub bb: JointTable<F>,
}

impl<F: Scalar> SettingPairTable<F> {
    pub fn new(
        aa: JointTable<F>,
        ab: JointTable<F>,
        ba: JointTable<F>,
        bb: JointTable<F>,
    ) -> Result<Self> {
        for t in [&aa, &ab, &ba, &bb] {
            if t.dims() != [2, 2] {
                return Err(Error::invalid("setting-pair tables must be 2×2"));
            }
        }
        Ok(SettingPairTable { aa, ab, ba, bb })
    }

    fn marginal(t: &JointTable<F>, var: usize) -> [F; 2] {
        let m = t.marginalize(&[var]).expect("2×2 table");
        [m.probs[0], m.probs[1]]
    }

    /// Largest mismatch between the marginals of the same party-setting
    /// across the two tables it appears in (Bob-A in `aa` vs `ab`, Bob-B in
    /// `ba` vs `bb`, Charley-A in `aa` vs `ba`, Charley-B in `ab` vs `bb`).
    pub fn max_marginal_inconsistency(&self) -> F {
        let pairs = [
            (Self::marginal(&self.aa, 0), Self::marginal(&self.ab, 0)),
            (Self::marginal(&self.ba, 0), Self::marginal(&self.bb, 0)),
            (Self::marginal(&self.aa, 1), Self::marginal(&self.ba, 1)),
            (Self::marginal(&self.ab, 1), Self::marginal(&self.bb, 1)),
        ];
        let mut worst = F::zero();
        for (x, y) in pairs {
            worst = worst.max((x[0] - y[0]).abs()).max((x[1] - y[1]).abs());
        }
        worst
    }
}

/// ΔS = S(α₁|α₂) − S(α₁|β₂) − S(β₂|β₁) − S(β₁|α₂), evaluated from the four
/// pairwise tables (Bob's outcome is variable 0 in each). Positive values
/// violate the entropic Bell inequality.
pub fn delta_s<F: Scalar>(t: &SettingPairTable<F>) -> F {
    let s_b_given_c = |tab: &JointTable<F>| conditional_entropy(tab, 0, &[1]).expect("2×2");
    let s_c_given_b = |tab: &JointTable<F>| conditional_entropy(tab, 1, &[0]).expect("2×2");
    s_b_given_c(&t.aa) - s_b_given_c(&t.ab) - s_c_given_b(&t.bb) - s_b_given_c(&t.ba)
}

/// Uniform draw from the k-simplex (normalized exponentials).
pub fn random_simplex<F: Scalar, R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<F> {
    assert!(k >= 1, "simplex dimension must be ≥ 1");
    let mut v: Vec<F> = (0..k)
        .map(|_| {
            // Exp(1) via inverse CDF; 1−u ∈ (0, 1] so the log is finite.
            let u = F::sample_unit(rng);
            -(F::one() - u).ln()
        })
        .collect();
    let sum: F = v.iter().copied().sum();
    for x in &mut v {
        *x /= sum;
    }
    // Pin the sum to exactly one to be independent of accumulated roundoff.
    let resum: F = v.iter().copied().sum();
    let last = v.len() - 1;
    v[last] += F::one() - resum;
    if v[last] < F::zero() {
        v[last] = F::zero();
    }
    v
}

/// Random joint table with the given shape, uniform on the cell simplex.
pub fn random_table<F: Scalar, R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> JointTable<F> {
    let cells: usize = dims.iter().product();
    let probs = random_simplex(cells, rng);
    JointTable::new(dims.to_vec(), probs).expect("random simplex is a distribution")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    const TOL: f64 = 1e-12;

    #[test]
    fn binary_entropy_hand_value() {
        let p = ProbabilityVector::<f64>::new(vec![0.25, 0.75]).unwrap();
        assert!((shannon_entropy(&p) - 0.811_278_124_459_132_8).abs() < TOL);
        let uniform = ProbabilityVector::<f64>::new(vec![0.5, 0.5]).unwrap();
        assert!((shannon_entropy(&uniform) - 1.0).abs() < TOL);
    }

    #[test]
    fn zero_cells_contribute_nothing() {
        let p = ProbabilityVector::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(shannon_entropy(&p), 0.0);
        let t = JointTable::<f64>::two_by_two([0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((joint_entropy(&t) - 1.0).abs() < TOL);
    }

    #[test]
    fn uniform_entropy_is_log_m() {
        for m in 1..=8 {
            let p = ProbabilityVector::<f64>::uniform(m).unwrap();
            assert!((shannon_entropy(&p) - (m as f64).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_entropy_by_direct_summation() {
        // Rows are X, columns are Y.
        let t = JointTable::<f64>::two_by_two([0.4, 0.1, 0.2, 0.3]).unwrap();
        // Oracle: S(X,Y) − S(X) with S(X,Y) = 1.8464393…, S(X) = 1.
        let s_y_given_x = conditional_entropy(&t, 1, &[0]).unwrap();
        assert!((s_y_given_x - 0.846_439_344_671_015_4).abs() < 1e-12);
        // Chain rule against the subtraction route.
        let sx = conditional_entropy(&t, 0, &[]).unwrap();
        assert!((joint_entropy(&t) - sx - s_y_given_x).abs() < 1e-10);
        // Conditioning with P(x) = 0 rows is fine.
        let t0 = JointTable::two_by_two([0.6, 0.4, 0.0, 0.0]).unwrap();
        assert!(conditional_entropy(&t0, 1, &[0]).unwrap() >= 0.0);
    }

    #[test]
    fn independent_table_conditional_equals_marginal_entropy() {
        let t = JointTable::<f64>::two_by_two([0.25, 0.25, 0.25, 0.25]).unwrap();
        assert!((conditional_entropy(&t, 0, &[1]).unwrap() - 1.0).abs() < TOL);
    }

    #[test]
    fn chain_rule_and_monotonicity_on_random_tables() {
        let mut rng = rng::stream(21, 0);
        for _ in 0..500 {
            let t: JointTable<f64> = random_table(&[2, 3], &mut rng);
            let s_xy = joint_entropy(&t);
            let s_x = conditional_entropy(&t, 0, &[]).unwrap();
            let s_y_x = conditional_entropy(&t, 1, &[0]).unwrap();
            assert!((s_xy - s_x - s_y_x).abs() < 1e-10);
            let s_y = conditional_entropy(&t, 1, &[]).unwrap();
            assert!(s_y_x <= s_y + 1e-12, "conditioning increased entropy");
            assert!(s_y_x >= 0.0);
        }
    }

    #[test]
    fn bell_inequality_on_known_tables() {
        // Four independent uniform bits: S(0|1) = 1, each rhs term = 1.
        let probs = vec![1.0 / 16.0; 16];
        let t = JointTable::<f64>::new(vec![2, 2, 2, 2], probs).unwrap();
        let chk = bell_inequality_holds(&t).unwrap();
        assert!((chk.lhs - 1.0).abs() < TOL);
        assert!((chk.rhs - 3.0).abs() < TOL);
        assert!(chk.holds);
    }

    #[test]
    fn bell_inequality_holds_for_random_tables() {
        let mut rng = rng::stream(22, 0);
        for _ in 0..2000 {
            let t: JointTable<f64> = random_table(&[2, 2, 2, 2], &mut rng);
            assert!(bell_inequality_holds(&t).unwrap().holds);
        }
    }

    #[test]
    fn delta_s_for_independent_uniform_tables_is_minus_two() {
        let u = || JointTable::<f64>::two_by_two([0.25, 0.25, 0.25, 0.25]).unwrap();
        let t = SettingPairTable::new(u(), u(), u(), u()).unwrap();
        assert!((delta_s(&t) + 2.0).abs() < TOL);
        assert!(t.max_marginal_inconsistency() < TOL);
    }

    #[test]
    fn marginalization_orders_variables_as_asked() {
        let t = JointTable::<f64>::new(vec![2, 3], vec![0.1, 0.2, 0.05, 0.15, 0.3, 0.2]).unwrap();
        let my = t.marginalize(&[1]).unwrap();
        assert!((my.probs()[0] - 0.25).abs() < TOL);
        let swapped = t.marginalize(&[1, 0]).unwrap();
        assert_eq!(swapped.dims(), &[3, 2]);
        assert!((swapped.get(&[2, 1]) - t.get(&[1, 2])).abs() < TOL);
        assert!(t.marginalize(&[0, 0]).is_err());
        assert!(t.marginalize(&[5]).is_err());
    }

    #[test]
    fn table_validation() {
        assert!(JointTable::new(vec![2, 2], vec![0.5, 0.5]).is_err());
        assert!(JointTable::new(vec![2], vec![0.7, 0.7]).is_err());
        assert!(JointTable::new(vec![2], vec![-0.1, 1.1]).is_err());
        let from_counts = JointTable::<f64>::from_counts(vec![2, 2], &[1, 1, 1, 1]).unwrap();
        assert_eq!(from_counts.probs(), &[0.25, 0.25, 0.25, 0.25]);
        assert!(JointTable::<f64>::from_counts(vec![2], &[0, 0]).is_err());
    }

    #[test]
    fn joint_table_serde_round_trip() {
        let t = JointTable::<f64>::two_by_two([0.4, 0.1, 0.2, 0.3]).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        let back: JointTable<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        // Re-read applies the file tolerance, not the strict one.
        let almost = r#"{"dims":[2],"probs":[0.4999999999, 0.5]}"#;
        assert!(serde_json::from_str::<JointTable<f64>>(almost).is_ok());
        let off = r#"{"dims":[2],"probs":[0.4, 0.5]}"#;
        assert!(serde_json::from_str::<JointTable<f64>>(off).is_err());
    }

    #[test]
    fn random_simplex_is_normalized() {
        let mut rng = rng::stream(23, 0);
        for k in 1..=10 {
            let p: Vec<f64> = random_simplex(k, &mut rng);
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-15);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn entropy_permutation_invariance() {
        let mut rng = rng::stream(24, 0);
        let t: JointTable<f64> = random_table(&[2, 2], &mut rng);
        // Swap the two outcomes of variable 1.
        let swapped = JointTable::two_by_two([
            t.get(&[0, 1]),
            t.get(&[0, 0]),
            t.get(&[1, 1]),
            t.get(&[1, 0]),
        ])
        .unwrap();
        assert!((joint_entropy(&t) - joint_entropy(&swapped)).abs() < TOL);
        let a = conditional_entropy(&t, 0, &[1]).unwrap();
        let b = conditional_entropy(&swapped, 0, &[1]).unwrap();
        assert!((a - b).abs() < TOL);
    }
}
