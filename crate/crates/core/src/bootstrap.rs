//! Model-based bootstrap of the supremum statistic.
//!
//! Pseudo-series are regenerated from the fitted null recursion with
//! innovations drawn from the centred (ARCH: standardised) residual pool, or
//! from the specified innovation law for the parametric variant. Each
//! pseudo-series goes through the full pipeline again: refit, raw residual
//! EDF, supremum over its own grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{fit_model, ArMethod, FittedModel};
use crate::gof::{DeviationProcess, DeviationStat, GridY, TestVariant};
use crate::models::{simulate, Family, InnovationDistribution, ModelSpec, Series, DEFAULT_BURN_IN};
use crate::par;
use crate::report::{num, num_vec, num_vec_opt};
use crate::rng::derive_seed;

/// Attempts per resample before a refit failure aborts the run.
pub const MAX_REFIT_ATTEMPTS: usize = 10;

/// How pseudo-innovations are drawn for the parametric-innovations variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamScheme {
    /// Draw from the specified innovation law.
    #[default]
    Parametric,
    /// Resample the centred residual pool as in the semiparametric case.
    ResampleResiduals,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapConfig {
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(serialize_with = "num")]
    pub alpha: f64,
    pub burn_in: usize,
    pub master_seed: u64,
    pub param_scheme: ParamScheme,
}

impl BootstrapConfig {
    pub fn new(b: usize, alpha: f64, master_seed: u64) -> Self {
        Self {
            b,
            alpha,
            burn_in: DEFAULT_BURN_IN,
            master_seed,
            param_scheme: ParamScheme::Parametric,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::Config(
                "number of bootstrap resamples must be positive".into(),
            ));
        }
        check_alpha(self.alpha, self.b)
    }
}

/// `ceil((1 - alpha)(B + 1))`, the rank of the critical order statistic.
fn critical_rank(alpha: f64, b: usize) -> usize {
    ((1.0 - alpha) * (b as f64 + 1.0) - 1e-9).ceil().max(1.0) as usize
}

pub(crate) fn check_alpha(alpha: f64, b: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let k = critical_rank(alpha, b);
    if k > b {
        return Err(Error::Config(format!(
            "alpha = {alpha} is too small for B = {b}: critical rank {k} exceeds B"
        )));
    }
    Ok(())
}

/// The null hypothesis: family, lag order, variant and estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub family: Family,
    pub order: usize,
    pub variant: TestVariant,
    pub ar_method: ArMethod,
}

impl Hypothesis {
    pub fn semiparametric(family: Family, order: usize) -> Result<Self> {
        Self::new(family, order, TestVariant::SemiParametric)
    }

    pub fn parametric(
        family: Family,
        order: usize,
        innovation: InnovationDistribution,
    ) -> Result<Self> {
        Self::new(
            family,
            order,
            TestVariant::ParametricInnovations(innovation),
        )
    }

    pub fn fully_specified(spec: ModelSpec) -> Result<Self> {
        Self::new(spec.family, spec.p, TestVariant::FullySpecified(spec))
    }

    pub fn new(family: Family, order: usize, variant: TestVariant) -> Result<Self> {
        let h = Self {
            family,
            order,
            variant,
            ar_method: ArMethod::LeastSquares,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn with_ar_method(mut self, method: ArMethod) -> Self {
        self.ar_method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.family.has_residual_link() {
            return Err(Error::Config(format!(
                "{} cannot be used as a null model",
                self.family.name()
            )));
        }
        if self.order == 0 {
            return Err(Error::Config("null model order must be at least 1".into()));
        }
        match &self.variant {
            TestVariant::FullySpecified(spec) => {
                spec.validate()?;
                if spec.family != self.family || spec.p != self.order {
                    return Err(Error::Config(
                        "fully specified model disagrees with family/order".into(),
                    ));
                }
            }
            TestVariant::ParametricInnovations(d) => {
                d.validate()?;
                if matches!(d, InnovationDistribution::EmpiricalPool(_)) {
                    return Err(Error::Config(
                        "parametric variant needs a specified innovation law".into(),
                    ));
                }
            }
            TestVariant::SemiParametric => {}
        }
        Ok(())
    }

    /// Fits the null model; `None` for a fully specified null.
    pub fn fit(&self, series: &Series) -> Result<Option<FittedModel>> {
        match self.variant {
            TestVariant::FullySpecified(_) => Ok(None),
            _ => fit_model(series, self.family, self.order, self.ar_method).map(Some),
        }
    }

    /// Fits the null and computes the supremum statistic.
    pub fn statistic(&self, series: &Series) -> Result<(DeviationStat, Option<FittedModel>)> {
        let fitted = self.fit(series)?;
        let stat = DeviationProcess::new(series, &self.variant, fitted.as_ref())?.sup_statistic();
        Ok((stat, fitted))
    }

    pub fn label(&self) -> String {
        let model = match &self.variant {
            TestVariant::FullySpecified(spec) => spec.label(),
            TestVariant::ParametricInnovations(d) => {
                format!("{}({})/{}", self.family.name(), self.order, d.label())
            }
            TestVariant::SemiParametric => format!("{}({})/edf", self.family.name(), self.order),
        };
        format!("{}:{model}", self.variant.name())
    }
}

/// Recursion the pseudo-series are generated from.
pub fn bootstrap_generator(
    variant: &TestVariant,
    fitted: Option<&FittedModel>,
    scheme: ParamScheme,
) -> Result<ModelSpec> {
    let need_fit = || fitted.ok_or_else(|| Error::Config("bootstrap needs a fitted model".into()));
    match variant {
        TestVariant::SemiParametric => Ok(need_fit()?.spec.clone()),
        TestVariant::ParametricInnovations(d) => match scheme {
            ParamScheme::Parametric => need_fit()?.spec.with_innovation(d.clone()),
            ParamScheme::ResampleResiduals => Ok(need_fit()?.spec.clone()),
        },
        TestVariant::FullySpecified(spec) => Ok(spec.clone()),
    }
}

/// One bootstrap pseudo-series of `n` observations (plus `p` initial lags).
pub fn generate_pseudo_series(
    variant: &TestVariant,
    fitted: Option<&FittedModel>,
    scheme: ParamScheme,
    n: usize,
    seed: u64,
    burn_in: usize,
) -> Result<Series> {
    if let Some(f) = fitted {
        if f.pool.is_empty() {
            return Err(Error::Empty("innovation pool"));
        }
    }
    let generator = bootstrap_generator(variant, fitted, scheme)?;
    simulate(&generator, n, seed, burn_in)
}

/// Bootstrap replicates of the statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapStats {
    /// `S*_1 .. S*_B` in resample order.
    pub stats: Vec<f64>,
    /// Number of resamples that were regenerated after a failed refit.
    pub degenerate_count: usize,
}

fn is_refit_failure(e: &Error) -> bool {
    matches!(e, Error::Estimation(_) | Error::DegeneratePool(_))
}

/// Computes `B` bootstrap statistics. Resample `b` uses seed
/// `derive_seed(master_seed, b)` (retries derive further from that), so the
/// output does not depend on scheduling.
pub fn bootstrap_statistics(
    series: &Series,
    hypothesis: &Hypothesis,
    fitted: Option<&FittedModel>,
    config: &BootstrapConfig,
) -> Result<BootstrapStats> {
    config.validate()?;
    hypothesis.validate()?;
    if let Some(f) = fitted {
        if f.pool.is_empty() {
            return Err(Error::Empty("innovation pool"));
        }
    }
    let generator = bootstrap_generator(&hypothesis.variant, fitted, config.param_scheme)?;
    let n = series.n();
    let outcomes = par::map_range(0..config.b, |b| {
        let base = derive_seed(config.master_seed, b as u64);
        let mut last = String::new();
        for attempt in 0..MAX_REFIT_ATTEMPTS {
            let seed = if attempt == 0 {
                base
            } else {
                derive_seed(base, attempt as u64)
            };
            let pseudo = simulate(&generator, n, seed, config.burn_in)?;
            match hypothesis.statistic(&pseudo) {
                Ok((stat, _)) => return Ok((stat.s_n, attempt)),
                Err(e) if is_refit_failure(&e) => last = e.to_string(),
                Err(e) => return Err(e),
            }
        }
        Err(Error::RefitExhausted {
            resample: b,
            attempts: MAX_REFIT_ATTEMPTS,
            last,
        })
    });
    let mut stats = Vec::with_capacity(config.b);
    let mut degenerate_count = 0;
    for o in outcomes {
        let (s, retries) = o?;
        stats.push(s);
        degenerate_count += retries;
    }
    Ok(BootstrapStats {
        stats,
        degenerate_count,
    })
}

/// The `ceil((1 - alpha)(B + 1))`-th order statistic (clipped to `B`).
pub fn critical_value(stats: &[f64], alpha: f64) -> Result<f64> {
    if stats.is_empty() {
        return Err(Error::Empty("bootstrap statistics"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let mut sorted = stats.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = critical_rank(alpha, stats.len()).min(stats.len());
    Ok(sorted[k - 1])
}

/// `(1 + #{S*_b >= s_n}) / (B + 1)`.
pub fn p_value(stats: &[f64], s_n: f64) -> Result<f64> {
    if stats.is_empty() {
        return Err(Error::Empty("bootstrap statistics"));
    }
    let exceed = stats.iter().filter(|&&s| s >= s_n).count();
    Ok((1 + exceed) as f64 / (stats.len() + 1) as f64)
}

/// Everything needed to reproduce and interpret one test run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub software_version: &'static str,
    pub hypothesis: String,
    pub family: Family,
    pub order: usize,
    pub variant: &'static str,
    pub ar_method: ArMethod,
    pub n: usize,
    #[serde(serialize_with = "num_vec_opt")]
    pub theta_hat: Option<Vec<f64>>,
    pub projection_applied: bool,
    #[serde(serialize_with = "num")]
    pub s_n: f64,
    #[serde(serialize_with = "num_vec")]
    pub arg_x: Vec<f64>,
    pub arg_y: GridY,
    pub grid_dims: Vec<usize>,
    pub bootstrap: BootstrapConfig,
    #[serde(serialize_with = "num")]
    pub critical_value: f64,
    #[serde(serialize_with = "num")]
    pub p_value: f64,
    pub reject: bool,
    /// `s_n` equals the critical value exactly.
    pub tie: bool,
    pub degenerate_count: usize,
    #[serde(serialize_with = "num")]
    pub bootstrap_mean: f64,
    #[serde(serialize_with = "num")]
    pub bootstrap_min: f64,
    #[serde(serialize_with = "num")]
    pub bootstrap_max: f64,
    #[serde(serialize_with = "num_vec")]
    pub bootstrap_stats: Vec<f64>,
}

/// Fits the null, computes the statistic, bootstraps it and decides.
pub fn run_test(
    series: &Series,
    hypothesis: &Hypothesis,
    config: &BootstrapConfig,
) -> Result<TestReport> {
    config.validate()?;
    hypothesis.validate()?;
    let (stat, fitted) = hypothesis.statistic(series)?;
    let boot = bootstrap_statistics(series, hypothesis, fitted.as_ref(), config)?;
    let critical = critical_value(&boot.stats, config.alpha)?;
    let p = p_value(&boot.stats, stat.s_n)?;
    let b = boot.stats.len() as f64;
    Ok(TestReport {
        software_version: env!("CARGO_PKG_VERSION"),
        hypothesis: hypothesis.label(),
        family: hypothesis.family,
        order: hypothesis.order,
        variant: hypothesis.variant.name(),
        ar_method: hypothesis.ar_method,
        n: series.n(),
        theta_hat: fitted.as_ref().map(|f| f.spec.theta.clone()),
        projection_applied: fitted.as_ref().is_some_and(|f| f.projection_applied),
        s_n: stat.s_n,
        arg_x: stat.arg_x,
        arg_y: stat.arg_y,
        grid_dims: stat.grid_dims,
        bootstrap: config.clone(),
        critical_value: critical,
        p_value: p,
        reject: stat.s_n > critical,
        tie: stat.s_n == critical,
        degenerate_count: boot.degenerate_count,
        bootstrap_mean: boot.stats.iter().sum::<f64>() / b,
        bootstrap_min: boot.stats.iter().copied().fold(f64::INFINITY, f64::min),
        bootstrap_max: boot.stats.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        bootstrap_stats: boot.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::compute_residuals;
    use crate::models::simulate;
    use approx::assert_abs_diff_eq;

    fn normal() -> InnovationDistribution {
        InnovationDistribution::StdNormal
    }

    #[test]
    fn critical_value_examples() {
        let stats: Vec<f64> = (1..=500).map(f64::from).collect();
        assert_eq!(critical_value(&stats, 0.05).unwrap(), 476.0);
        assert_eq!(critical_value(&[7.0], 0.4).unwrap(), 7.0);
        for alpha in [0.01, 0.05, 0.1, 0.5, 0.9] {
            assert_eq!(critical_value(&[2.5; 9], alpha).unwrap(), 2.5);
        }
        assert!(critical_value(&[], 0.05).is_err());
        // exact products must not be pushed up a rank by rounding
        let stats: Vec<f64> = (1..=19).map(f64::from).collect();
        assert_eq!(critical_value(&stats, 0.05).unwrap(), 19.0);
        let stats: Vec<f64> = (1..=99).map(f64::from).collect();
        assert_eq!(critical_value(&stats, 0.1).unwrap(), 90.0);
    }

    #[test]
    fn p_value_examples() {
        let stats: Vec<f64> = (1..=500).map(f64::from).collect();
        assert_abs_diff_eq!(p_value(&stats, 500.5).unwrap(), 1.0 / 501.0);
        assert_eq!(p_value(&stats, 0.0).unwrap(), 1.0);
        let stats: Vec<f64> = (1..=499).map(f64::from).collect();
        assert_abs_diff_eq!(p_value(&stats, 250.0).unwrap(), 0.502);
    }

    #[test]
    fn alpha_too_small_for_b() {
        let mut cfg = BootstrapConfig::new(10, 0.05, 1);
        assert!(cfg.validate().is_err());
        cfg.b = 19;
        assert!(cfg.validate().is_ok());
        cfg.alpha = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_pool_gives_zero_series() {
        let s = simulate(&ModelSpec::ar(vec![0.5], normal()).unwrap(), 50, 1, 100).unwrap();
        let mut fit = fit_model(&s, Family::Ar, 1, ArMethod::LeastSquares).unwrap();
        fit.pool = vec![0.0];
        fit.spec.innovation = InnovationDistribution::EmpiricalPool(vec![0.0]);
        let pseudo = generate_pseudo_series(
            &TestVariant::SemiParametric,
            Some(&fit),
            ParamScheme::Parametric,
            50,
            3,
            100,
        )
        .unwrap();
        assert!(pseudo.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constant_volatility_scales_pool_draws() {
        let s = simulate(
            &ModelSpec::arch(vec![0.1, 0.4], normal()).unwrap(),
            60,
            1,
            100,
        )
        .unwrap();
        let mut fit = fit_model(&s, Family::Arch, 1, ArMethod::LeastSquares).unwrap();
        let c = 1.7;
        fit.spec.theta = vec![c * c, 0.0];
        let pool = fit.pool.clone();
        let pseudo = generate_pseudo_series(
            &TestVariant::SemiParametric,
            Some(&fit),
            ParamScheme::Parametric,
            60,
            5,
            20,
        )
        .unwrap();
        for x in pseudo.values() {
            let e = x / c;
            assert!(
                pool.iter().any(|p| (p - e).abs() < 1e-12),
                "{x} is not c times a pool entry"
            );
        }
    }

    #[test]
    fn pseudo_series_determinism() {
        let s = simulate(&ModelSpec::ar(vec![0.3], normal()).unwrap(), 80, 1, 100).unwrap();
        let fit = fit_model(&s, Family::Ar, 1, ArMethod::LeastSquares).unwrap();
        let v = TestVariant::SemiParametric;
        let a =
            generate_pseudo_series(&v, Some(&fit), ParamScheme::Parametric, 80, 9, 500).unwrap();
        let b =
            generate_pseudo_series(&v, Some(&fit), ParamScheme::Parametric, 80, 9, 500).unwrap();
        let c =
            generate_pseudo_series(&v, Some(&fit), ParamScheme::Parametric, 80, 10, 500).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.n(), 80);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let s = simulate(&ModelSpec::ar(vec![0.3], normal()).unwrap(), 40, 1, 100).unwrap();
        let h = Hypothesis::semiparametric(Family::Ar, 1).unwrap();
        let (_, fit) = h.statistic(&s).unwrap();
        let cfg = BootstrapConfig::new(3, 0.4, 77);
        let a = bootstrap_statistics(&s, &h, fit.as_ref(), &cfg).unwrap();
        let b = par::with_workers(Some(1), || {
            bootstrap_statistics(&s, &h, fit.as_ref(), &cfg).unwrap()
        });
        assert_eq!(a, b);
        assert_eq!(a.stats.len(), 3);
        assert!(a.stats.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn degenerate_pool_exhausts_retries() {
        let s = simulate(&ModelSpec::ar(vec![0.5], normal()).unwrap(), 50, 1, 100).unwrap();
        let h = Hypothesis::semiparametric(Family::Ar, 1).unwrap();
        let mut fit = fit_model(&s, Family::Ar, 1, ArMethod::LeastSquares).unwrap();
        fit.pool = vec![0.0];
        fit.spec.innovation = InnovationDistribution::EmpiricalPool(vec![0.0]);
        let cfg = BootstrapConfig::new(19, 0.05, 1);
        let err = bootstrap_statistics(&s, &h, Some(&fit), &cfg).unwrap_err();
        assert!(
            matches!(
                err,
                Error::RefitExhausted {
                    resample: 0,
                    attempts: MAX_REFIT_ATTEMPTS,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn pool_draws_are_centred_but_statistic_uses_raw_residuals() {
        // Data whose LS residuals have a clearly nonzero mean.
        let base = simulate(&ModelSpec::ar(vec![0.2], normal()).unwrap(), 200, 4, 100).unwrap();
        let shifted = Series::new(base.values().iter().map(|x| x + 1.0).collect(), 1).unwrap();
        let fit = fit_model(&shifted, Family::Ar, 1, ArMethod::LeastSquares).unwrap();
        let raw_mean = fit.raw_residuals.iter().sum::<f64>() / 200.0;
        assert!(raw_mean.abs() > 0.1);
        // generator draws from the centred pool
        let gen = bootstrap_generator(
            &TestVariant::SemiParametric,
            Some(&fit),
            ParamScheme::Parametric,
        )
        .unwrap();
        match &gen.innovation {
            InnovationDistribution::EmpiricalPool(p) => {
                assert!(p.iter().sum::<f64>().abs() < 1e-10);
                assert_eq!(p, &fit.pool);
            }
            other => panic!("unexpected generator innovations {other:?}"),
        }
        // statistic uses the raw residual EDF of the (pseudo) data
        let pseudo = simulate(&gen, 200, 8, 100).unwrap();
        let h = Hypothesis::semiparametric(Family::Ar, 1).unwrap();
        let (_, refit) = h.statistic(&pseudo).unwrap();
        let refit = refit.unwrap();
        let process =
            DeviationProcess::new(&pseudo, &TestVariant::SemiParametric, Some(&refit)).unwrap();
        let mut raw = compute_residuals(&pseudo, &refit.spec).unwrap();
        raw.sort_by(f64::total_cmp);
        assert_eq!(
            process.distribution(),
            &InnovationDistribution::EmpiricalPool(raw)
        );
        assert_ne!(
            process.distribution(),
            &InnovationDistribution::EmpiricalPool(refit.pool.clone())
        );
    }

    #[test]
    fn run_test_report_is_coherent() {
        let spec = ModelSpec::arch(vec![0.1, 0.4], normal()).unwrap();
        let s = simulate(&spec, 100, 3, 500).unwrap();
        let h = Hypothesis::parametric(Family::Arch, 1, normal()).unwrap();
        let cfg = BootstrapConfig::new(39, 0.05, 11);
        let r = run_test(&s, &h, &cfg).unwrap();
        assert_eq!(r.bootstrap_stats.len(), 39);
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);
        assert_eq!(r.reject, r.s_n > r.critical_value);
        if r.reject {
            assert!(r.p_value <= cfg.alpha);
        }
        let again = run_test(&s, &h, &cfg).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn hypothesis_validation() {
        assert!(Hypothesis::semiparametric(Family::Garch11, 1).is_err());
        assert!(Hypothesis::semiparametric(Family::Ar, 0).is_err());
        let pool = InnovationDistribution::empirical(vec![0.0, 1.0]).unwrap();
        assert!(Hypothesis::parametric(Family::Ar, 1, pool).is_err());
        let spec = ModelSpec::iid(1, normal()).unwrap();
        assert!(Hypothesis::new(Family::Ar, 1, TestVariant::FullySpecified(spec)).is_err());
    }
}
