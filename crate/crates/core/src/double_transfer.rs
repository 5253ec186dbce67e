//! Double transfer: one source, two codeword sets (α at angle θ_α, β at
//! θ_β), two receivers (Bob and Charley) with per-set detector angles.
//!
//! Two correlation models are implemented.
//!
//! * `Local` — every party measures its own local copy of the source; all
//!   four outcome variables are independent with Malus marginals
//!   cos²(θ_source − θ_detector). A complete 4-variable table exists, so
//!   the entropic Bell inequality always holds.
//! * `Contextual` — when both parties pick the same set, Charley measures
//!   first and his outcome collapses the source for Bob (outcome α₁ pins
//!   the source at θ_c, outcome α₂ at θ_c + π/2). The resulting pairwise
//!   tables are situation-dependent: they do not marginalize consistently,
//!   no complete table exists, and ΔS can go positive.
//!
//! Bob's *standalone* statistics in the contextual model are nevertheless
//! local: his state is the coherent superposition of the two collapse
//! branches, and squaring after superposition collapses the θ_c dependence
//! — cos(θ_c−θ_b)cos(θ_α−θ_c) − sin(θ_c−θ_b)sin(θ_α−θ_c) = cos(θ_α−θ_b) —
//! so nothing Charley chooses is visible to Bob alone. [`bob_marginal`] and
//! [`sample_bob_standalone`] exercise that route; the pairwise tables
//! deliberately do not, which is the whole point of the model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{JointTable, SettingPairTable};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;
use crate::space::{angle_state, rotate, superpose, StateVector};

const BLOCK: u64 = 1 << 16;

/// Which codeword set a party measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Set {
    A,
    B,
}

impl Set {
    pub const BOTH: [Set; 2] = [Set::A, Set::B];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    Contextual,
    Local,
}

/// Full parameterization of a double-transfer experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleConfig<F> {
    /// Source angle of the α set.
    pub theta_alpha: F,
    /// Source angle of the β set.
    pub theta_beta: F,
    /// Bob's detector angle when he measures set A / set B.
    pub theta_b_a: F,
    pub theta_b_b: F,
    /// Charley's detector angles, likewise per set.
    pub theta_c_a: F,
    pub theta_c_b: F,
    pub mode: CorrelationMode,
    /// Probability that a party picks set A on a given event (both parties
    /// choose independently with this probability).
    pub set_choice_prob: F,
}

impl<F: Scalar> Default for DoubleConfig<F> {
    fn default() -> Self {
        DoubleConfig {
            theta_alpha: F::zero(),
            theta_beta: F::zero(),
            theta_b_a: F::zero(),
            theta_b_b: F::zero(),
            theta_c_a: F::zero(),
            theta_c_b: F::zero(),
            mode: CorrelationMode::Contextual,
            set_choice_prob: F::of(0.5),
        }
    }
}

impl<F: Scalar> DoubleConfig<F> {
    pub fn validate(&self) -> Result<()> {
        let angles = [
            self.theta_alpha,
            self.theta_beta,
            self.theta_b_a,
            self.theta_b_b,
            self.theta_c_a,
            self.theta_c_b,
        ];
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("all angles must be finite"));
        }
        if !(self.set_choice_prob >= F::zero() && self.set_choice_prob <= F::one()) {
            return Err(Error::ProbabilityOutOfRange {
                index: 0,
                value: self.set_choice_prob.as_f64(),
            });
        }
        Ok(())
    }

    fn source(&self, set: Set) -> F {
        match set {
            Set::A => self.theta_alpha,
            Set::B => self.theta_beta,
        }
    }

    fn bob(&self, set: Set) -> F {
        match set {
            Set::A => self.theta_b_a,
            Set::B => self.theta_b_b,
        }
    }

    fn charley(&self, set: Set) -> F {
        match set {
            Set::A => self.theta_c_a,
            Set::B => self.theta_c_b,
        }
    }
}

/// Malus marginal: probability of the first outcome when the state at
/// `source` is measured by a detector rotated to `detector`.
fn first_outcome_prob<F: Scalar>(source: F, detector: F) -> F {
    let seen = rotate(&angle_state(source), detector).expect("m = 2");
    // The rotated component is ≤ 1 in exact arithmetic but the fused
    // cos·y₀ + sin·y₁ can land an ulp above it, which would push the
    // complement 1 − p² negative. Clamp at the mathematical bound.
    (seen[0] * seen[0]).min(F::one())
}

/// Same-set collapse table, `first` measuring before `second`.
/// Cell order in the result: [first=1&…] — callers re-order for Bob-major.
fn collapse_pair<F: Scalar>(source: F, theta_first: F, theta_second: F) -> [[F; 2]; 2] {
    // First party's outcome distribution on the pristine source.
    let p_first_1 = first_outcome_prob(source, theta_first);
    // Collapse: outcome 1 pins the source at θ_first, outcome 2 at
    // θ_first + π/2; then the second party measures.
    let p_second_1_given = [
        first_outcome_prob(theta_first, theta_second),
        first_outcome_prob(theta_first + F::FRAC_PI_2(), theta_second),
    ];
    let p_first = [p_first_1, F::one() - p_first_1];
    let mut cells = [[F::zero(); 2]; 2];
    for (f, &pf) in p_first.iter().enumerate() {
        let ps1 = p_second_1_given[f];
        cells[f][0] = pf * ps1;
        cells[f][1] = pf * (F::one() - ps1);
    }
    cells // [first][second]
}

fn product_table<F: Scalar>(p_bob_1: F, p_charley_1: F) -> Result<JointTable<F>> {
    let pb = [p_bob_1, F::one() - p_bob_1];
    let pc = [p_charley_1, F::one() - p_charley_1];
    JointTable::two_by_two([pb[0] * pc[0], pb[0] * pc[1], pb[1] * pc[0], pb[1] * pc[1]])
}

/// Pairwise outcome table in the contextual model. Variable 0 is Bob's
/// outcome, variable 1 is Charley's.
///
/// Same-set pairs use the Charley-first collapse construction; cross-set
/// pairs involve two untouched carriers and factorize.
pub fn contextual_joint<F: Scalar>(
    cfg: &DoubleConfig<F>,
    bob_set: Set,
    charley_set: Set,
) -> Result<JointTable<F>> {
    cfg.validate()?;
    if bob_set == charley_set {
        let s = bob_set;
        let cells = collapse_pair(cfg.source(s), cfg.charley(s), cfg.bob(s));
        // collapse_pair is [charley][bob]; transpose to Bob-major.
        JointTable::two_by_two([cells[0][0], cells[1][0], cells[0][1], cells[1][1]])
    } else {
        let pb = first_outcome_prob(cfg.source(bob_set), cfg.bob(bob_set));
        let pc = first_outcome_prob(cfg.source(charley_set), cfg.charley(charley_set));
        product_table(pb, pc)
    }
}

/// Pairwise outcome table in the local model: always a product of the two
/// parties' Malus marginals on their own carriers.
pub fn local_joint<F: Scalar>(
    cfg: &DoubleConfig<F>,
    bob_set: Set,
    charley_set: Set,
) -> Result<JointTable<F>> {
    cfg.validate()?;
    let pb = first_outcome_prob(cfg.source(bob_set), cfg.bob(bob_set));
    let pc = first_outcome_prob(cfg.source(charley_set), cfg.charley(charley_set));
    product_table(pb, pc)
}

/// Mode-appropriate pairwise table.
pub fn pair_table<F: Scalar>(
    cfg: &DoubleConfig<F>,
    bob_set: Set,
    charley_set: Set,
) -> Result<JointTable<F>> {
    match cfg.mode {
        CorrelationMode::Contextual => contextual_joint(cfg, bob_set, charley_set),
        CorrelationMode::Local => local_joint(cfg, bob_set, charley_set),
    }
}

/// All four pairwise tables, keyed (Bob set, Charley set).
pub fn setting_pair_table<F: Scalar>(cfg: &DoubleConfig<F>) -> Result<SettingPairTable<F>> {
    SettingPairTable::new(
        pair_table(cfg, Set::A, Set::A)?,
        pair_table(cfg, Set::A, Set::B)?,
        pair_table(cfg, Set::B, Set::A)?,
        pair_table(cfg, Set::B, Set::B)?,
    )
}

/// The complete 4-variable table the local model admits, variables ordered
/// (Bob-A, Charley-A, Bob-B, Charley-B) — the order
/// [`crate::entropy::bell_inequality_holds`] expects.
pub fn local_complete_table<F: Scalar>(cfg: &DoubleConfig<F>) -> Result<JointTable<F>> {
    cfg.validate()?;
    let q = [
        first_outcome_prob(cfg.theta_alpha, cfg.theta_b_a),
        first_outcome_prob(cfg.theta_alpha, cfg.theta_c_a),
        first_outcome_prob(cfg.theta_beta, cfg.theta_b_b),
        first_outcome_prob(cfg.theta_beta, cfg.theta_c_b),
    ];
    let mut probs = Vec::with_capacity(16);
    for cell in 0..16u32 {
        let mut p = F::one();
        for (v, &qv) in q.iter().enumerate() {
            // Outcome 0 (the "first" codeword) has probability qv.
            let bit = (cell >> (3 - v)) & 1;
            p *= if bit == 0 { qv } else { F::one() - qv };
        }
        probs.push(p);
    }
    JointTable::new(vec![2, 2, 2, 2], probs)
}

/// Size of the order-of-measurement artifact in the same-set collapse
/// construction: max |cell difference| between the Charley-first table
/// (the convention used everywhere here) and the Bob-first variant.
///
/// Zero when the two detector angles coincide; in general nonzero —
/// sequential collapse on one carrier is order-dependent, which is why the
/// convention has to be pinned at all.
pub fn order_dependence<F: Scalar>(cfg: &DoubleConfig<F>, set: Set) -> Result<F> {
    cfg.validate()?;
    let cf = collapse_pair(cfg.source(set), cfg.charley(set), cfg.bob(set)); // [c][b]
    let bf = collapse_pair(cfg.source(set), cfg.bob(set), cfg.charley(set)); // [b][c]
    let mut worst = F::zero();
    for b in 0..2 {
        for c in 0..2 {
            worst = worst.max((cf[c][b] - bf[b][c]).abs());
        }
    }
    Ok(worst)
}

/// Bob's post-collapse state with the θ_c dependence kept symbolic: the
/// coherent superposition of the two collapse branches, each already
/// rotated into Bob's detector frame, weighted by Charley's outcome
/// amplitudes.
pub fn bob_superposed_state<F: Scalar>(
    cfg: &DoubleConfig<F>,
    bob_set: Set,
    theta_c: F,
) -> Result<StateVector<F>> {
    cfg.validate()?;
    let src = cfg.source(bob_set);
    let tb = cfg.bob(bob_set);
    let branch_amp = rotate(&angle_state(src), theta_c)?;
    let phi1 = rotate(&angle_state(theta_c), tb)?;
    let phi2 = rotate(&angle_state(theta_c + F::FRAC_PI_2()), tb)?;
    superpose(branch_amp[0], &phi1, branch_amp[1], &phi2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BobMarginalReport<F> {
    /// The local prediction cos²(θ_source − θ_bob).
    pub expected: F,
    /// (θ_c, marginal through the superposition route) per grid point.
    pub points: Vec<(F, F)>,
    pub max_deviation: F,
}

/// Sweep θ_c and compute Bob's standalone first-outcome probability through
/// the branch-superposition machinery. The deviation from the local
/// prediction is roundoff-sized at every grid point: Charley's setting
/// cannot signal to Bob.
pub fn bob_marginal<F: Scalar>(
    cfg: &DoubleConfig<F>,
    bob_set: Set,
    theta_c_grid: &[F],
) -> Result<BobMarginalReport<F>> {
    if theta_c_grid.is_empty() {
        return Err(Error::Empty { what: "θ_c grid" });
    }
    let expected = first_outcome_prob(cfg.source(bob_set), cfg.bob(bob_set));
    let mut points = Vec::with_capacity(theta_c_grid.len());
    let mut max_dev = F::zero();
    for &tc in theta_c_grid {
        if !tc.is_finite() {
            return Err(Error::invalid("θ_c grid values must be finite"));
        }
        let s = bob_superposed_state(cfg, bob_set, tc)?;
        let q = s[0] * s[0];
        max_dev = max_dev.max((q - expected).abs());
        points.push((tc, q));
    }
    Ok(BobMarginalReport { expected, points, max_deviation: max_dev })
}

/// Event tallies from a sampled double-transfer run, split by setting pair.
/// Each table is [bob outcome][charley outcome].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JointCounts {
    pub aa: [[u64; 2]; 2],
    pub ab: [[u64; 2]; 2],
    pub ba: [[u64; 2]; 2],
    pub bb: [[u64; 2]; 2],
}

impl JointCounts {
    pub fn table(&self, bob_set: Set, charley_set: Set) -> &[[u64; 2]; 2] {
        match (bob_set, charley_set) {
            (Set::A, Set::A) => &self.aa,
            (Set::A, Set::B) => &self.ab,
            (Set::B, Set::A) => &self.ba,
            (Set::B, Set::B) => &self.bb,
        }
    }

    pub fn pair_total(&self, bob_set: Set, charley_set: Set) -> u64 {
        self.table(bob_set, charley_set).iter().flatten().sum()
    }

    pub fn n_total(&self) -> u64 {
        Set::BOTH
            .iter()
            .flat_map(|&b| Set::BOTH.iter().map(move |&c| self.pair_total(b, c)))
            .sum()
    }

    fn merge(mut self, other: JointCounts) -> JointCounts {
        for (mine, theirs) in [
            (&mut self.aa, &other.aa),
            (&mut self.ab, &other.ab),
            (&mut self.ba, &other.ba),
            (&mut self.bb, &other.bb),
        ] {
            for b in 0..2 {
                for c in 0..2 {
                    mine[b][c] += theirs[b][c];
                }
            }
        }
        self
    }

    /// Plug-in pairwise tables. Errors if any setting pair saw no events.
    pub fn to_setting_pair_table<F: Scalar>(&self) -> Result<SettingPairTable<F>> {
        let build = |t: &[[u64; 2]; 2], name: &str| -> Result<JointTable<F>> {
            let flat = [t[0][0], t[0][1], t[1][0], t[1][1]];
            if flat.iter().sum::<u64>() == 0 {
                return Err(Error::invalid(format!(
                    "setting pair {name} saw no events; increase n"
                )));
            }
            JointTable::from_counts(vec![2, 2], &flat)
        };
        SettingPairTable::new(
            build(&self.aa, "AA")?,
            build(&self.ab, "AB")?,
            build(&self.ba, "BA")?,
            build(&self.bb, "BB")?,
        )
    }
}

/// Sample n double-transfer events: both parties choose a set
/// independently, then the outcome pair is drawn from the mode-appropriate
/// pairwise table. Bit-deterministic in (cfg, n, seed) at any thread count.
pub fn sample_double<F: Scalar>(cfg: &DoubleConfig<F>, n: u64, seed: u64) -> Result<JointCounts> {
    if n == 0 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    cfg.validate()?;
    // Cell CDFs per setting pair, cells ordered [b0c0, b0c1, b1c0, b1c1].
    let mut cdfs = Vec::with_capacity(4);
    for &b in &Set::BOTH {
        for &c in &Set::BOTH {
            let t = pair_table(cfg, b, c)?;
            let p = t.probs();
            let mut acc = F::zero();
            let cdf: Vec<F> = p
                .iter()
                .map(|&v| {
                    acc += v;
                    acc
                })
                .collect();
            cdfs.push(cdf);
        }
    }
    let p_a = cfg.set_choice_prob;

    let blocks = n.div_ceil(BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut stream = rng::stream(seed, blk);
            let in_block = BLOCK.min(n - blk * BLOCK);
            let mut local = JointCounts::default();
            for _ in 0..in_block {
                let bob_a = F::sample_unit(&mut stream) < p_a;
                let charley_a = F::sample_unit(&mut stream) < p_a;
                let which = (!bob_a as usize) * 2 + (!charley_a as usize);
                let u = F::sample_unit(&mut stream);
                let cdf = &cdfs[which];
                let mut cell = 3;
                for (i, &cv) in cdf.iter().enumerate() {
                    if u < cv {
                        cell = i;
                        break;
                    }
                }
                let t = match which {
                    0 => &mut local.aa,
                    1 => &mut local.ab,
                    2 => &mut local.ba,
                    _ => &mut local.bb,
                };
                t[cell / 2][cell % 2] += 1;
            }
            local
        })
        .reduce(JointCounts::default, JointCounts::merge);
    Ok(counts)
}

/// Sample Bob's standalone outcomes through the superposition route: per
/// event his first-outcome probability is the squared first component of
/// [`bob_superposed_state`] at the configured same-set Charley angle.
/// Returns the empirical first-outcome frequency.
pub fn sample_bob_standalone<F: Scalar>(
    cfg: &DoubleConfig<F>,
    bob_set: Set,
    n: u64,
    seed: u64,
) -> Result<F> {
    if n == 0 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    let s = bob_superposed_state(cfg, bob_set, cfg.charley(bob_set))?;
    let q = s[0] * s[0];
    let blocks = n.div_ceil(BLOCK);
    let hits: u64 = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut stream = rng::stream(seed, blk);
            let in_block = BLOCK.min(n - blk * BLOCK);
            let mut k = 0u64;
            for _ in 0..in_block {
                if F::sample_unit(&mut stream) < q {
                    k += 1;
                }
            }
            k
        })
        .sum();
    Ok(F::of(hits as f64) / F::of(n as f64))
}

/// FUNC check: does the measure treat a sum of codewords the way a
/// probability function must treat a union?
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuncCheck<F> {
    /// |α₁ + α₂|² · |ψ|².
    pub lhs: F,
    /// (|α₁|² + |α₂|²) · |ψ|².
    pub rhs: F,
    /// lhs − rhs = 2⟨α₁, α₂⟩·|ψ|²; zero exactly when the codewords are
    /// orthogonal, i.e. squared amplitudes are additive only then.
    pub difference: F,
}

pub fn func_violation<F: Scalar>(
    alpha1: &StateVector<F>,
    alpha2: &StateVector<F>,
    psi: &StateVector<F>,
) -> Result<FuncCheck<F>> {
    if alpha1.len() != alpha2.len() {
        return Err(Error::DimensionMismatch { expected: alpha1.len(), got: alpha2.len() });
    }
    let norm_sq = |v: &StateVector<F>| v.as_slice().iter().map(|&x| x * x).sum::<F>();
    let psi_sq = norm_sq(psi);
    let sum_sq: F = alpha1
        .as_slice()
        .iter()
        .zip(alpha2.as_slice())
        .map(|(&a, &b)| {
            let s = a + b;
            s * s
        })
        .sum();
    let lhs = sum_sq * psi_sq;
    let rhs = (norm_sq(alpha1) + norm_sq(alpha2)) * psi_sq;
    Ok(FuncCheck { lhs, rhs, difference: lhs - rhs })
}
