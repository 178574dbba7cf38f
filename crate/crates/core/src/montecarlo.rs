//! Monte Carlo size/power studies and finite-sample normality checks.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::bootstrap::{
    bootstrap_statistics, check_alpha, critical_value, BootstrapConfig, Hypothesis,
};
use crate::error::{Error, Result};
use crate::gof::{DeviationProcess, GridY};
use crate::models::{simulate_values, Family, InnovationDistribution, ModelSpec, Series};
use crate::par;
use crate::report::num;
use crate::rng::derive_seed;
use crate::stats::{anderson_darling_normal, mean, variance, AD_NORMAL_CRITICAL_1PCT};

/// One simulation design: a data-generating process tested against a null.
#[derive(Debug, Clone, PartialEq)]
pub struct McScenario {
    pub label: String,
    pub dgp: ModelSpec,
    pub hypothesis: Hypothesis,
    pub n: usize,
    pub alpha_levels: Vec<f64>,
    pub replications: usize,
    /// `master_seed` and `alpha` of this config are ignored; each
    /// replication derives its own seed and every level in `alpha_levels`
    /// is evaluated on the same bootstrap distribution.
    pub bootstrap: BootstrapConfig,
    pub master_seed: u64,
}

impl McScenario {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.alpha_levels.is_empty() {
            return Err(Error::Config("at least one alpha level is required".into()));
        }
        self.dgp.validate()?;
        self.hypothesis.validate()?;
        for &a in &self.alpha_levels {
            check_alpha(a, self.bootstrap.b)?;
        }
        Ok(())
    }
}

/// Rejection frequency at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub scenario: String,
    pub dgp: String,
    pub null: String,
    pub n: usize,
    #[serde(serialize_with = "num")]
    pub alpha: f64,
    #[serde(serialize_with = "num")]
    pub rejection_rate: f64,
    pub rejections: usize,
    /// Replications that completed (failed ones are excluded).
    pub replications: usize,
    pub failed_replications: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
    #[serde(serialize_with = "num")]
    pub mean_s_n: f64,
    #[serde(serialize_with = "num")]
    pub min_s_n: f64,
    #[serde(serialize_with = "num")]
    pub max_s_n: f64,
    pub degenerate_count: usize,
}

/// Results of one scenario, one row per level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub software_version: &'static str,
    pub scenario: String,
    pub burn_in: usize,
    pub rows: Vec<McRow>,
    /// Not serialised: reports must be reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: Duration,
}

struct Replication {
    s_n: f64,
    rejects: Vec<bool>,
    degenerate: usize,
}

/// Seeds for replication `r`: data, then bootstrap.
pub fn replication_seeds(master_seed: u64, r: usize) -> (u64, u64) {
    let base = derive_seed(master_seed, r as u64);
    (derive_seed(base, 0), derive_seed(base, 1))
}

/// Simulates a series of `n` observations from `dgp`, with `p` initial lags
/// for a null of order `p`.
pub fn simulate_for_null(
    dgp: &ModelSpec,
    n: usize,
    p: usize,
    seed: u64,
    burn_in: usize,
) -> Result<Series> {
    Series::new(simulate_values(dgp, n + p, seed, burn_in)?, p)
}

fn one_replication(scenario: &McScenario, r: usize) -> Result<Replication> {
    let (data_seed, boot_seed) = replication_seeds(scenario.master_seed, r);
    let h = &scenario.hypothesis;
    let series = simulate_for_null(
        &scenario.dgp,
        scenario.n,
        h.order,
        data_seed,
        scenario.bootstrap.burn_in,
    )?;
    let (stat, fitted) = h.statistic(&series)?;
    let cfg = BootstrapConfig {
        master_seed: boot_seed,
        ..scenario.bootstrap.clone()
    };
    let boot = bootstrap_statistics(&series, h, fitted.as_ref(), &cfg)?;
    let rejects = scenario
        .alpha_levels
        .iter()
        .map(|&a| critical_value(&boot.stats, a).map(|c| stat.s_n > c))
        .collect::<Result<Vec<_>>>()?;
    Ok(Replication {
        s_n: stat.s_n,
        rejects,
        degenerate: boot.degenerate_count,
    })
}

/// Estimates rejection rates by simulating, testing and bootstrapping
/// `replications` independent series. Replications whose data fit or
/// bootstrap fails are excluded if they are fewer than 1% of the total;
/// otherwise the run errors.
pub fn rejection_rate(scenario: &McScenario) -> Result<McReport> {
    scenario.validate()?;
    let start = Instant::now();
    let outcomes = par::map_range(0..scenario.replications, |r| one_replication(scenario, r));
    let total = outcomes.len();
    let mut ok = Vec::with_capacity(total);
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(rep) => ok.push(rep),
            Err(e) => failures.push(e),
        }
    }
    if !failures.is_empty() && failures.len() * 100 >= total {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total,
            first: failures[0].to_string(),
        });
    }
    let done = ok.len();
    let s: Vec<f64> = ok.iter().map(|r| r.s_n).collect();
    let degenerate: usize = ok.iter().map(|r| r.degenerate).sum();
    let rows = scenario
        .alpha_levels
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let rejections = ok.iter().filter(|r| r.rejects[i]).count();
            McRow {
                scenario: scenario.label.clone(),
                dgp: scenario.dgp.label(),
                null: scenario.hypothesis.label(),
                n: scenario.n,
                alpha,
                rejection_rate: rejections as f64 / done as f64,
                rejections,
                replications: done,
                failed_replications: failures.len(),
                b: scenario.bootstrap.b,
                seed: scenario.master_seed,
                mean_s_n: mean(&s),
                min_s_n: s.iter().copied().fold(f64::INFINITY, f64::min),
                max_s_n: s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                degenerate_count: degenerate,
            }
        })
        .collect();
    Ok(McReport {
        software_version: env!("CARGO_PKG_VERSION"),
        scenario: scenario.label.clone(),
        burn_in: scenario.bootstrap.burn_in,
        rows,
        wall_time: start.elapsed(),
    })
}

/// Which simulation table to reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    /// ARCH(1) Gaussian null with estimated parameters.
    Arch,
    /// Fully specified i.i.d. nulls against AR(1) dependence.
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// 200 replications.
    Full,
    /// 100 replications.
    Reduced,
}

impl Scale {
    pub fn replications(self) -> usize {
        match self {
            Scale::Full => 200,
            Scale::Reduced => 100,
        }
    }
}

/// Shared settings for table presets.
#[derive(Debug, Clone, PartialEq)]
pub struct TableOptions {
    pub scale: Scale,
    pub b: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Overrides the scale's replication count.
    pub replications: Option<usize>,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            scale: Scale::Full,
            b: 500,
            burn_in: crate::models::DEFAULT_BURN_IN,
            seed: 20_240_601,
            replications: None,
        }
    }
}

pub const TABLE_ALPHAS: [f64; 2] = [0.05, 0.10];

/// Named data-generating processes of the ARCH table.
pub fn arch_table_dgps() -> Vec<(&'static str, ModelSpec)> {
    let n = InnovationDistribution::StdNormal;
    vec![
        (
            "arch1-normal",
            ModelSpec::arch(vec![0.1, 0.4], n.clone()).expect("preset"),
        ),
        (
            "arch1-t5",
            ModelSpec::arch(
                vec![0.1, 0.4],
                InnovationDistribution::ScaledStudentT { nu: 5.0 },
            )
            .expect("preset"),
        ),
        (
            "arch2",
            ModelSpec::arch(vec![0.1, 0.4, 0.4], n).expect("preset"),
        ),
        ("garch11", ModelSpec::garch11_preset()),
        ("sv", ModelSpec::stoch_vol_preset()),
    ]
}

/// Named data-generating processes of the i.i.d. table.
pub fn iid_table_dgps() -> Vec<(&'static str, ModelSpec)> {
    let n = InnovationDistribution::StdNormal;
    let ar = |theta: f64| ModelSpec::ar(vec![theta], n.clone()).expect("preset");
    vec![
        ("iid-normal", ModelSpec::iid(1, n.clone()).expect("preset")),
        (
            "iid-uniform",
            ModelSpec::iid(1, InnovationDistribution::UniformSym).expect("preset"),
        ),
        ("ar1-0.2", ar(0.2)),
        ("ar1-0.4", ar(0.4)),
        ("ar1-0.6", ar(0.6)),
    ]
}

/// The i.i.d. null of the second table: innovation law estimated by the EDF,
/// conditioning on one lag.
pub fn iid_table_hypothesis() -> Hypothesis {
    Hypothesis::semiparametric(Family::Iid, 1).expect("preset")
}

/// The ARCH(1) Gaussian null with least-squares parameters.
pub fn arch_table_hypothesis() -> Hypothesis {
    Hypothesis::parametric(Family::Arch, 1, InnovationDistribution::StdNormal).expect("preset")
}

/// Scenario grid of a table, in row-major order (sample size, then design).
pub fn table_scenarios(table: Table, opts: &TableOptions) -> Vec<McScenario> {
    let reps = opts.replications.unwrap_or(opts.scale.replications());
    let boot = BootstrapConfig {
        burn_in: opts.burn_in,
        ..BootstrapConfig::new(opts.b, TABLE_ALPHAS[0], 0)
    };
    let mut out = Vec::new();
    let mut push = |label: String, dgp: ModelSpec, hypothesis: Hypothesis, n: usize| {
        let idx = out.len() as u64;
        out.push(McScenario {
            label,
            dgp,
            hypothesis,
            n,
            alpha_levels: TABLE_ALPHAS.to_vec(),
            replications: reps,
            bootstrap: boot.clone(),
            master_seed: derive_seed(opts.seed, idx),
        });
    };
    match table {
        Table::Arch => {
            for n in [100, 200, 400] {
                for (name, dgp) in arch_table_dgps() {
                    push(
                        format!("table1/n={n}/{name}"),
                        dgp,
                        arch_table_hypothesis(),
                        n,
                    );
                }
            }
        }
        Table::Iid => {
            for n in [25, 50, 100] {
                for (name, dgp) in iid_table_dgps() {
                    push(
                        format!("table2/n={n}/{name}"),
                        dgp,
                        iid_table_hypothesis(),
                        n,
                    );
                }
            }
        }
    }
    out
}

/// Runs every scenario of a table.
pub fn reproduce_table(table: Table, opts: &TableOptions) -> Result<Vec<McReport>> {
    table_scenarios(table, opts)
        .iter()
        .map(rejection_rate)
        .collect()
}

/// Sample moments and normality check of `U(x, y)` at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointDiagnostic {
    #[serde(serialize_with = "crate::report::num_vec")]
    pub x: Vec<f64>,
    pub y: GridY,
    #[serde(serialize_with = "num")]
    pub mean: f64,
    #[serde(serialize_with = "num")]
    pub variance: f64,
    /// Modified Anderson-Darling statistic; `None` for a degenerate sample.
    pub anderson_darling: Option<f64>,
    pub normal_at_1pct: bool,
}

/// Simulates `replications` series of length `n` from `truth`, evaluates
/// `U` at each point under `hypothesis`, and summarises each point.
pub fn normality_diagnostic(
    truth: &ModelSpec,
    hypothesis: &Hypothesis,
    n: usize,
    points: &[(Vec<f64>, GridY)],
    replications: usize,
    seed: u64,
) -> Result<Vec<PointDiagnostic>> {
    if replications < 2 {
        return Err(Error::Config("need at least two replications".into()));
    }
    hypothesis.validate()?;
    let values = par::map_range(0..replications, |r| -> Result<Vec<f64>> {
        let series = simulate_for_null(
            truth,
            n,
            hypothesis.order,
            derive_seed(seed, r as u64),
            crate::models::DEFAULT_BURN_IN,
        )?;
        let fitted = hypothesis.fit(&series)?;
        let process = DeviationProcess::new(&series, &hypothesis.variant, fitted.as_ref())?;
        points.iter().map(|(x, y)| process.u_value(x, *y)).collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let sample: Vec<f64> = values.iter().map(|v| v[i]).collect();
            let ad = anderson_darling_normal(&sample);
            PointDiagnostic {
                x: x.clone(),
                y: *y,
                mean: mean(&sample),
                variance: variance(&sample),
                anderson_darling: ad,
                normal_at_1pct: ad.is_some_and(|a| a <= AD_NORMAL_CRITICAL_1PCT),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scenario(reps: usize) -> McScenario {
        McScenario {
            label: "unit".into(),
            dgp: ModelSpec::arch(vec![0.1, 0.4], InnovationDistribution::StdNormal).unwrap(),
            hypothesis: arch_table_hypothesis(),
            n: 50,
            alpha_levels: vec![0.05, 0.10],
            replications: reps,
            bootstrap: BootstrapConfig::new(19, 0.05, 0),
            master_seed: 5,
        }
    }

    #[test]
    fn single_replication_rate_is_bernoulli() {
        let r = rejection_rate(&small_scenario(1)).unwrap();
        for row in &r.rows {
            assert!(row.rejection_rate == 0.0 || row.rejection_rate == 1.0);
            assert_eq!(row.replications, 1);
        }
    }

    #[test]
    fn schedule_independent() {
        let sc = small_scenario(6);
        let a = par::with_workers(Some(1), || rejection_rate(&sc).unwrap());
        let b = par::with_workers(Some(4), || rejection_rate(&sc).unwrap());
        assert_eq!(a.rows, b.rows);
        let rr = a.rows[0].rejection_rate * a.rows[0].replications as f64;
        assert_eq!(rr, rr.round());
    }

    #[test]
    fn table_grids() {
        let opts = TableOptions {
            scale: Scale::Reduced,
            ..Default::default()
        };
        let t1 = table_scenarios(Table::Arch, &opts);
        assert_eq!(t1.len(), 15);
        assert!(t1
            .iter()
            .all(|s| s.replications == 100 && s.bootstrap.b == 500));
        let t2 = table_scenarios(Table::Iid, &TableOptions::default());
        assert_eq!(t2.len(), 15);
        assert_eq!(t2[0].replications, 200);
        assert_eq!(t2[0].n, 25);
        let seeds: std::collections::HashSet<u64> = t2.iter().map(|s| s.master_seed).collect();
        assert_eq!(seeds.len(), 15);
    }

    #[test]
    fn degenerate_point_is_zero() {
        let truth = ModelSpec::iid(1, InnovationDistribution::StdNormal).unwrap();
        let h = Hypothesis::fully_specified(truth.clone()).unwrap();
        let d = normality_diagnostic(
            &truth,
            &h,
            50,
            &[(vec![f64::INFINITY], GridY::POS_INF)],
            20,
            3,
        )
        .unwrap();
        assert_eq!(d[0].mean, 0.0);
        assert_eq!(d[0].variance, 0.0);
        assert!(d[0].anderson_darling.is_none());
    }
}
