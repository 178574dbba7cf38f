//! Goodness-of-fit tests for Markovian time-series models.
//!
//! The test compares the empirical one-step transition behaviour of a series
//! with the transition law implied by a null model (AR, ARCH or i.i.d.)
//! through the supremum of a marked empirical deviation process, and
//! calibrates the statistic with a model-based bootstrap.
//!
//! ```
//! use markov_gof::{simulate, BootstrapConfig, Family, Hypothesis, InnovationDistribution, ModelSpec};
//!
//! let truth = ModelSpec::arch(vec![0.1, 0.4], InnovationDistribution::StdNormal).unwrap();
//! let series = simulate(&truth, 100, 7, 500).unwrap();
//! let null = Hypothesis::parametric(Family::Arch, 1, InnovationDistribution::StdNormal).unwrap();
//! let report = markov_gof::run_test(&series, &null, &BootstrapConfig::new(39, 0.05, 1)).unwrap();
//! assert_eq!(report.reject, report.s_n > report.critical_value);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod data;
pub mod error;
pub mod estimators;
pub mod gof;
pub mod models;
pub mod montecarlo;
pub mod par;
pub mod report;
pub mod rng;
pub mod stats;

pub use bootstrap::{
    bootstrap_statistics, critical_value, generate_pseudo_series, p_value, run_test,
    BootstrapConfig, Hypothesis, ParamScheme, TestReport,
};
pub use data::{ingest_csv, ColumnSelector};
pub use error::{Error, Result};
pub use estimators::{fit_model, ArMethod, FittedModel};
pub use gof::{
    build_grid, sup_statistic, u_value, DeviationProcess, DeviationStat, EvalGrid, GridY, Side,
    TestVariant,
};
pub use models::{simulate, Family, InnovationDistribution, ModelSpec, Series};
pub use montecarlo::{
    rejection_rate, reproduce_table, McReport, McScenario, Scale, Table, TableOptions,
};
