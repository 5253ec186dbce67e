//! Simulation and verification toolkit for codeword transfer over
//! probability amplitudes.
//!
//! A sender encodes an m-outcome distribution as the componentwise square
//! root — a unit vector whose squared components are the probabilities —
//! and a receiver recovers the distribution by repeated sampling. This
//! crate provides:
//!
//! * the state-space plumbing ([`space`]) and the encoding families that
//!   compete with the square-root rule ([`encoding`]), including the ODE
//!   characterization that singles it out as the minimum-variance choice;
//! * estimator statistics: Fisher information, Cramér–Rao bookkeeping,
//!   multinomial covariance, and error-scaling studies
//!   ([`estimation`], [`single_transfer`]);
//! * two-receiver experiments with a contextual collapse model and a local
//!   control, entropic Bell diagnostics, and ΔS parameter scans
//!   ([`entropy`], [`double_transfer`], [`scan`]);
//! * a runnable invariant registry ([`verify`]) so a deployed build can
//!   re-check everything above on demand.
//!
//! Everything numeric is generic over [`Scalar`] (`f64` or `f32`); the
//! `*64`/`*32` aliases at the crate root pick a width without spelling out
//! type parameters. All sampling is deterministic in (config, seed) at any
//! thread count.
//!
//! ```
//! use ampcode::{amplitude_encode, measure_probabilities, ProbabilityVector64};
//!
//! let p = ProbabilityVector64::new(vec![0.25, 0.75])?;
//! let y = amplitude_encode(&p);
//! assert!((y.as_slice()[0] - 0.5).abs() < 1e-15);
//! let back = measure_probabilities(&y);
//! assert!((back.as_slice()[1] - 0.75).abs() < 1e-15);
//! # Ok::<(), ampcode::Error>(())
//! ```

// Validation deliberately writes `!(x >= lo)` so NaN fails the check; the
// partial_cmp spelling clippy prefers would wave NaN through. The 2×2
// outcome tables are indexed by outcome pairs on purpose — iterators over
// `[[F; 2]; 2]` hide which marginal is which.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod double_transfer;
pub mod encoding;
pub mod entropy;
pub mod error;
pub mod estimation;
pub mod rng;
pub mod scalar;
pub mod scan;
pub mod single_transfer;
pub mod space;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use encoding::{encoding_ode_residual, Encoding, TabulatedEncoding};
pub use space::{
    amplitude_encode, angle_state, measure_probabilities, rotate, superpose, CodewordSet,
    ProbabilityVector, StateVector,
};
pub use estimation::{
    cramer_rao_report, estimate, fisher_diagonal, multinomial_covariance, sigma_theory,
    CovarianceMatrix, CramerRaoReport, FisherDiagonal, OutcomeCounts,
};
pub use entropy::{
    bell_inequality_holds, conditional_entropy, delta_s, joint_entropy, shannon_entropy,
    BellCheck, JointTable, SettingPairTable,
};
pub use single_transfer::{
    error_scaling_study, exact_binomial_moments, laser_scenario, run_experiment, DetectionModel,
    ExactMoments, ScalingReport, SingleConfig, TrialResult,
};
pub use double_transfer::{
    bob_marginal, contextual_joint, func_violation, local_complete_table, local_joint,
    order_dependence, pair_table, sample_bob_standalone, sample_double, setting_pair_table,
    BobMarginalReport, CorrelationMode, DoubleConfig, FuncCheck, JointCounts, Set,
};
pub use scan::{
    find_violations, render_heatmap_svg, scan_delta_s, Axis, ScanGrid, ScanParam, ScanResult,
    ViolationSummary,
};

// Concrete-width aliases. The generic names above default to nothing; these
// spare call sites the turbofish when they just want a width.
pub type ProbabilityVector64 = space::ProbabilityVector<f64>;
pub type ProbabilityVector32 = space::ProbabilityVector<f32>;
pub type StateVector64 = space::StateVector<f64>;
pub type StateVector32 = space::StateVector<f32>;
pub type Encoding64 = encoding::Encoding<f64>;
pub type Encoding32 = encoding::Encoding<f32>;
pub type TabulatedEncoding64 = encoding::TabulatedEncoding<f64>;
pub type TabulatedEncoding32 = encoding::TabulatedEncoding<f32>;
pub type JointTable64 = entropy::JointTable<f64>;
pub type JointTable32 = entropy::JointTable<f32>;
pub type SettingPairTable64 = entropy::SettingPairTable<f64>;
pub type SettingPairTable32 = entropy::SettingPairTable<f32>;
pub type SingleConfig64 = single_transfer::SingleConfig<f64>;
pub type SingleConfig32 = single_transfer::SingleConfig<f32>;
pub type DoubleConfig64 = double_transfer::DoubleConfig<f64>;
pub type DoubleConfig32 = double_transfer::DoubleConfig<f32>;
pub type ScanGrid64 = scan::ScanGrid<f64>;
pub type ScanGrid32 = scan::ScanGrid<f32>;

#[cfg(test)]
mod alias_tests {
    use super::*;

    #[test]
    fn f32_width_works_end_to_end() {
        let p = ProbabilityVector32::new(vec![0.25, 0.75]).unwrap();
        let y = amplitude_encode(&p);
        assert!((y.as_slice()[0] - 0.5).abs() < 1e-6);
        let enc = Encoding32::Amplitude;
        let j = fisher_diagonal(&enc, &[0.3f32, 1.1]).unwrap();
        for v in &j.values {
            assert_eq!(*v, 4.0f32);
        }
        let cfg = DoubleConfig32 {
            theta_c_a: std::f32::consts::FRAC_PI_4,
            ..Default::default()
        };
        let spt = setting_pair_table(&cfg).unwrap();
        assert!((delta_s(&spt) - 1.0).abs() < 1e-4);
    }
}
