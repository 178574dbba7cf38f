//! Model families, innovation laws and simulation.
//!
//! Every family that can serve as a null model is a conditional
//! location-scale recursion `X_t = m(lags) + s(lags) * eps_t`, so the
//! generator and its inverse in the innovation argument (the residual link)
//! share one helper, [`location_scale`].

use std::f64::consts::SQRT_2;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Default burn-in used by all simulators.
pub const DEFAULT_BURN_IN: usize = 500;

/// Standard normal distribution function.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Law of the i.i.d. innovations.
#[derive(Debug, Clone, PartialEq)]
pub enum InnovationDistribution {
    StdNormal,
    /// `eta * sqrt((nu - 2) / nu)` with `eta ~ t_nu`, so the variance is one.
    ScaledStudentT {
        nu: f64,
    },
    /// Uniform on `(-sqrt 3, sqrt 3)`.
    UniformSym,
    /// Discrete uniform law on a sorted sample. Construct via [`InnovationDistribution::empirical`].
    EmpiricalPool(Vec<f64>),
}

impl InnovationDistribution {
    /// Empirical law of `values`; sorts a copy.
    pub fn empirical(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("empirical pool"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Constraint(
                "empirical pool entries must be finite".into(),
            ));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self::EmpiricalPool(values))
    }

    pub fn student_t(nu: f64) -> Result<Self> {
        let d = Self::ScaledStudentT { nu };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ScaledStudentT { nu } if !(*nu > 2.0 && nu.is_finite()) => {
                Err(Error::Constraint(format!(
                    "Student-t degrees of freedom must satisfy nu > 2, got {nu}"
                )))
            }
            Self::EmpiricalPool(pool) => {
                if pool.is_empty() {
                    return Err(Error::Empty("empirical pool"));
                }
                if pool.windows(2).any(|w| !(w[0] <= w[1])) {
                    return Err(Error::Constraint(
                        "empirical pool must be sorted ascending".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `true` when the distribution function has no jumps.
    pub fn is_continuous(&self) -> bool {
        !matches!(self, Self::EmpiricalPool(_))
    }

    /// `F(w) = P(eps <= w)`.
    pub fn cdf(&self, w: f64) -> f64 {
        match self {
            Self::StdNormal => std_normal_cdf(w),
            Self::ScaledStudentT { nu } => student_cdf(*nu, w),
            Self::UniformSym => uniform_cdf(w),
            Self::EmpiricalPool(pool) => edf_count_le(pool, w) as f64 / pool.len() as f64,
        }
    }

    /// `F(w-) = P(eps < w)`.
    pub fn cdf_left(&self, w: f64) -> f64 {
        match self {
            Self::EmpiricalPool(pool) => edf_count_lt(pool, w) as f64 / pool.len() as f64,
            _ => self.cdf(w),
        }
    }

    /// A prepared sampler; cheaper than calling [`Self::sample`] in a loop.
    pub fn sampler(&self) -> Result<InnovationSampler<'_>> {
        self.validate()?;
        Ok(match self {
            Self::StdNormal => InnovationSampler::Normal,
            Self::ScaledStudentT { nu } => InnovationSampler::Student {
                dist: StudentT::new(*nu).map_err(|e| Error::Constraint(e.to_string()))?,
                scale: ((nu - 2.0) / nu).sqrt(),
            },
            Self::UniformSym => InnovationSampler::Uniform,
            Self::EmpiricalPool(pool) => InnovationSampler::Pool(pool),
        })
    }

    /// One draw. Panics on an invalid distribution (see [`Self::validate`]).
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        self.sampler()
            .expect("valid innovation distribution")
            .draw(rng)
    }

    /// Short human-readable name, also used in reports.
    pub fn label(&self) -> String {
        match self {
            Self::StdNormal => "normal".into(),
            Self::ScaledStudentT { nu } => format!("t:{nu}"),
            Self::UniformSym => "uniform".into(),
            Self::EmpiricalPool(pool) => format!("empirical[{}]", pool.len()),
        }
    }
}

impl Serialize for InnovationDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

fn student_cdf(nu: f64, w: f64) -> f64 {
    if w == f64::INFINITY {
        return 1.0;
    }
    if w == f64::NEG_INFINITY {
        return 0.0;
    }
    let scale = ((nu - 2.0) / nu).sqrt();
    StudentsT::new(0.0, 1.0, nu)
        .map(|d| d.cdf(w / scale))
        .unwrap_or(f64::NAN)
}

fn uniform_cdf(w: f64) -> f64 {
    if w <= -SQRT_3 {
        0.0
    } else if w >= SQRT_3 {
        1.0
    } else {
        (w + SQRT_3) / (2.0 * SQRT_3)
    }
}

#[inline]
pub(crate) fn edf_count_le(sorted: &[f64], w: f64) -> usize {
    sorted.partition_point(|&v| v <= w)
}

#[inline]
pub(crate) fn edf_count_lt(sorted: &[f64], w: f64) -> usize {
    sorted.partition_point(|&v| v < w)
}

/// Prepared innovation sampler.
pub enum InnovationSampler<'a> {
    Normal,
    Student { dist: StudentT<f64>, scale: f64 },
    Uniform,
    Pool(&'a [f64]),
}

impl InnovationSampler<'_> {
    #[inline]
    pub fn draw(&self, rng: &mut Rng) -> f64 {
        match self {
            Self::Normal => rng.sample(StandardNormal),
            Self::Student { dist, scale } => dist.sample(rng) * scale,
            Self::Uniform => rng.random_range(-SQRT_3..SQRT_3),
            Self::Pool(pool) => pool[rng.random_range(0..pool.len())],
        }
    }
}

/// Model families. GARCH(1,1) and the stochastic volatility model are
/// simulation-only: they are not Markov in `X` alone and have no residual link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ar,
    Arch,
    Iid,
    Garch11,
    StochVol,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Ar => "AR",
            Family::Arch => "ARCH",
            Family::Iid => "IID",
            Family::Garch11 => "GARCH(1,1)",
            Family::StochVol => "SV",
        }
    }

    /// Whether the family can be used as a null model.
    pub fn has_residual_link(self) -> bool {
        matches!(self, Family::Ar | Family::Arch | Family::Iid)
    }

    /// Length of the parameter vector for lag order `p`.
    pub fn theta_len(self, p: usize) -> usize {
        match self {
            Family::Ar => p,
            Family::Arch => p + 1,
            Family::Iid => 0,
            Family::Garch11 | Family::StochVol => 3,
        }
    }
}

/// A model family with its parameter vector and innovation law.
///
/// Parameter layouts:
/// * AR(p): `(a_1, .., a_p)`
/// * ARCH(p): `(c_0, c_1, .., c_p)`, conditional variance `c_0 + sum c_i X_{t-i}^2`
/// * IID: empty; `p` is only the conditioning order used by the test
/// * GARCH(1,1): `(omega, alpha, beta)`
/// * SV: `(mu, phi, sigma)` for `h_t = mu + phi h_{t-1} + sigma w_t`, `X_t = exp(h_t / 2) eps_t`
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub family: Family,
    pub p: usize,
    pub theta: Vec<f64>,
    pub innovation: InnovationDistribution,
}

impl ModelSpec {
    pub fn ar(theta: Vec<f64>, innovation: InnovationDistribution) -> Result<Self> {
        Self::new(Family::Ar, theta.len(), theta, innovation)
    }

    pub fn arch(theta: Vec<f64>, innovation: InnovationDistribution) -> Result<Self> {
        if theta.len() < 2 {
            return Err(Error::Constraint(
                "ARCH parameter vector needs an intercept and at least one slope".into(),
            ));
        }
        Self::new(Family::Arch, theta.len() - 1, theta, innovation)
    }

    pub fn iid(p: usize, innovation: InnovationDistribution) -> Result<Self> {
        Self::new(Family::Iid, p, Vec::new(), innovation)
    }

    pub fn garch11(
        omega: f64,
        alpha: f64,
        beta: f64,
        innovation: InnovationDistribution,
    ) -> Result<Self> {
        Self::new(Family::Garch11, 1, vec![omega, alpha, beta], innovation)
    }

    pub fn stoch_vol(
        mu: f64,
        phi: f64,
        sigma: f64,
        innovation: InnovationDistribution,
    ) -> Result<Self> {
        Self::new(Family::StochVol, 1, vec![mu, phi, sigma], innovation)
    }

    /// GARCH(1,1) with `sigma_t^2 = 0.08 + 0.7 X_{t-1}^2 + 0.2 sigma_{t-1}^2`.
    pub fn garch11_preset() -> Self {
        Self::garch11(0.08, 0.7, 0.2, InnovationDistribution::StdNormal).expect("valid preset")
    }

    /// SV model with `h_t = -0.9 + 0.6 h_{t-1} + w_t`.
    pub fn stoch_vol_preset() -> Self {
        Self::stoch_vol(-0.9, 0.6, 1.0, InnovationDistribution::StdNormal).expect("valid preset")
    }

    pub fn new(
        family: Family,
        p: usize,
        theta: Vec<f64>,
        innovation: InnovationDistribution,
    ) -> Result<Self> {
        let spec = Self {
            family,
            p,
            theta,
            innovation,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the family's parameter-space constraints.
    pub fn validate(&self) -> Result<()> {
        self.innovation.validate()?;
        check_theta(self.family, self.p, &self.theta)
    }

    /// Same family and order with a different parameter vector.
    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.family, self.p, theta, self.innovation.clone())
    }

    pub fn with_innovation(&self, innovation: InnovationDistribution) -> Result<Self> {
        Self::new(self.family, self.p, self.theta.clone(), innovation)
    }

    /// Next value of the recursion given the lag vector `(X_{t-1}, .., X_{t-p})`.
    pub fn apply_g(&self, lag: &[f64], eps: f64) -> Result<f64> {
        self.check_lag(lag)?;
        let (loc, scale) = location_scale(self.family, &self.theta, lag)?;
        Ok(loc + scale * eps)
    }

    /// Residual link: the `w` with `P(X_t <= y | lags) = F(w)` under `theta`.
    pub fn link_w(&self, lag: &[f64], y: f64, theta: &[f64]) -> Result<f64> {
        self.check_lag(lag)?;
        if theta.len() != self.family.theta_len(self.p) {
            return Err(Error::DimensionMismatch {
                expected: self.family.theta_len(self.p),
                got: theta.len(),
            });
        }
        let (loc, scale) = location_scale(self.family, theta, lag)?;
        Ok((y - loc) / scale)
    }

    /// Short label such as `ARCH(1)[0.1,0.4]/normal`.
    pub fn label(&self) -> String {
        let theta = self
            .theta
            .iter()
            .map(|t| format!("{t}"))
            .collect::<Vec<_>>()
            .join(",");
        match self.family {
            Family::Iid => format!("IID(p={})/{}", self.p, self.innovation.label()),
            Family::Garch11 | Family::StochVol => {
                format!(
                    "{}[{theta}]/{}",
                    self.family.name(),
                    self.innovation.label()
                )
            }
            _ => format!(
                "{}({})[{theta}]/{}",
                self.family.name(),
                self.p,
                self.innovation.label()
            ),
        }
    }

    fn check_lag(&self, lag: &[f64]) -> Result<()> {
        if lag.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: lag.len(),
            });
        }
        Ok(())
    }
}

/// Conditional location and scale of `X_t` given its lags.
///
/// The generator is `loc + scale * eps` and the residual link is
/// `(y - loc) / scale`; computing both from this one function keeps
/// residuals and link evaluations bit-identical.
#[inline]
pub fn location_scale(family: Family, theta: &[f64], lag: &[f64]) -> Result<(f64, f64)> {
    match family {
        Family::Ar => Ok((theta.iter().zip(lag).map(|(a, x)| a * x).sum(), 1.0)),
        Family::Arch => {
            let var = theta[0]
                + theta[1..]
                    .iter()
                    .zip(lag)
                    .map(|(c, x)| c * x * x)
                    .sum::<f64>();
            Ok((0.0, var.sqrt()))
        }
        Family::Iid => Ok((0.0, 1.0)),
        Family::Garch11 | Family::StochVol => Err(Error::UnsupportedFamily(family.name())),
    }
}

fn check_theta(family: Family, p: usize, theta: &[f64]) -> Result<()> {
    let expected = family.theta_len(p);
    if theta.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: theta.len(),
        });
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::Constraint("parameters must be finite".into()));
    }
    match family {
        Family::Ar => {
            if p == 0 {
                return Err(Error::Constraint("AR order must satisfy p >= 1".into()));
            }
            if !ar_is_stationary(theta, 1.0) {
                return Err(Error::Constraint(format!(
                    "AR polynomial 1 - a_1 z - .. - a_p z^p must have all roots outside the unit circle (a = {theta:?})"
                )));
            }
        }
        Family::Arch => {
            if p == 0 {
                return Err(Error::Constraint("ARCH order must satisfy p >= 1".into()));
            }
            if !(theta[0] > 0.0) {
                return Err(Error::Constraint(format!(
                    "ARCH intercept must satisfy c_0 > 0, got {}",
                    theta[0]
                )));
            }
            if let Some((i, c)) = theta.iter().enumerate().skip(1).find(|(_, c)| **c < 0.0) {
                return Err(Error::Constraint(format!(
                    "ARCH slope must satisfy c_{i} >= 0, got {c}"
                )));
            }
            let s: f64 = theta[1..].iter().sum();
            if !(s < 1.0) {
                return Err(Error::Constraint(format!(
                    "ARCH slopes must satisfy c_1 + .. + c_p < 1, got {s}"
                )));
            }
        }
        Family::Iid => {
            if p == 0 {
                return Err(Error::Constraint(
                    "IID conditioning order must satisfy p >= 1".into(),
                ));
            }
        }
        Family::Garch11 => {
            let (omega, alpha, beta) = (theta[0], theta[1], theta[2]);
            if !(omega > 0.0) {
                return Err(Error::Constraint(format!(
                    "GARCH intercept must satisfy omega > 0, got {omega}"
                )));
            }
            if alpha < 0.0 || beta < 0.0 {
                return Err(Error::Constraint(
                    "GARCH coefficients must satisfy alpha >= 0 and beta >= 0".into(),
                ));
            }
            if !(alpha + beta < 1.0) {
                return Err(Error::Constraint(format!(
                    "GARCH coefficients must satisfy alpha + beta < 1, got {}",
                    alpha + beta
                )));
            }
        }
        Family::StochVol => {
            if !(theta[1].abs() < 1.0) {
                return Err(Error::Constraint(format!(
                    "SV persistence must satisfy |phi| < 1, got {}",
                    theta[1]
                )));
            }
            if theta[2] < 0.0 {
                return Err(Error::Constraint(format!(
                    "SV volatility must satisfy sigma >= 0, got {}",
                    theta[2]
                )));
            }
        }
    }
    Ok(())
}

/// Whether all roots of `1 - a_1 z - .. - a_p z^p` lie strictly outside the
/// circle of the given radius. Uses the step-down (inverse Levinson)
/// recursion: the polynomial is stable iff every reflection coefficient has
/// modulus below one.
pub fn ar_is_stationary(theta: &[f64], radius: f64) -> bool {
    let mut a: Vec<f64> = theta
        .iter()
        .enumerate()
        .map(|(i, &t)| t * radius.powi(i as i32 + 1))
        .collect();
    for k in (1..=a.len()).rev() {
        let kappa = a[k - 1];
        if !(kappa.abs() < 1.0) {
            return false;
        }
        let denom = 1.0 - kappa * kappa;
        a = (0..k - 1)
            .map(|j| (a[j] + kappa * a[k - 2 - j]) / denom)
            .collect();
    }
    true
}

/// An observed or simulated sample `X_{1-p}, .., X_n`; the first `p` values
/// are initial lags.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
    p: usize,
}

impl Series {
    pub fn new(values: Vec<f64>, p: usize) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("entry {i} is not finite")));
        }
        if values.len() < 2 * p + 1 {
            return Err(Error::InvalidSeries(format!(
                "need at least {} values for lag order {p}, got {}",
                2 * p + 1,
                values.len()
            )));
        }
        Ok(Self { values, p })
    }

    /// Effective sample length.
    pub fn n(&self) -> usize {
        self.values.len() - self.p
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `X_t` for `t` in `1..=n`.
    #[inline]
    pub fn response(&self, t: usize) -> f64 {
        self.values[t + self.p - 1]
    }

    /// `X_{t-k}` for `t` in `1..=n`, `k` in `1..=p`.
    #[inline]
    pub fn lag(&self, t: usize, k: usize) -> f64 {
        self.values[t + self.p - 1 - k]
    }

    /// Writes `(X_{t-1}, .., X_{t-p})` into `buf`.
    #[inline]
    pub fn lag_into(&self, t: usize, buf: &mut [f64]) {
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = self.lag(t, k + 1);
        }
    }

    pub fn lag_vec(&self, t: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.p];
        self.lag_into(t, &mut v);
        v
    }

    /// The same data viewed with a different lag order (the last `n + p`
    /// values are unchanged, the split between initial lags and sample moves).
    pub fn with_order(&self, p: usize) -> Result<Self> {
        Self::new(self.values.clone(), p)
    }

    /// `c * X`, used by scale-invariance checks.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| c * v).collect(), self.p)
    }
}

/// Simulates `n + spec.p` values after discarding `burn_in` steps.
pub fn simulate(spec: &ModelSpec, n: usize, seed: u64, burn_in: usize) -> Result<Series> {
    let values = simulate_values(spec, n + spec.p, seed, burn_in)?;
    Series::new(values, spec.p)
}

/// Runs the recursion for `burn_in + len` steps and keeps the last `len`.
///
/// Lags start at zero. GARCH starts its conditional variance at the
/// stationary level and SV its log-volatility at the stationary mean. One
/// innovation is drawn per step, in order (SV draws the volatility shock
/// first).
pub fn simulate_values(
    spec: &ModelSpec,
    len: usize,
    seed: u64,
    burn_in: usize,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let sampler = spec.innovation.sampler()?;
    let mut rng = rng_from_seed(seed);
    let steps = burn_in + len;
    let p = spec.p;
    let theta = &spec.theta;
    let mut out = Vec::with_capacity(len);

    match spec.family {
        Family::Ar | Family::Arch | Family::Iid => {
            // lags[0] = X_{t-1}
            let mut lags = vec![0.0; p];
            for step in 0..steps {
                let eps = sampler.draw(&mut rng);
                let (loc, scale) = location_scale(spec.family, theta, &lags)?;
                let x = loc + scale * eps;
                if p > 0 {
                    lags.rotate_right(1);
                    lags[0] = x;
                }
                if step >= burn_in {
                    out.push(x);
                }
            }
        }
        Family::Garch11 => {
            let (omega, alpha, beta) = (theta[0], theta[1], theta[2]);
            let mut sigma2 = omega / (1.0 - alpha - beta);
            let mut x_prev = 0.0;
            for step in 0..steps {
                let eps = sampler.draw(&mut rng);
                sigma2 = omega + alpha * x_prev * x_prev + beta * sigma2;
                let x = sigma2.sqrt() * eps;
                x_prev = x;
                if step >= burn_in {
                    out.push(x);
                }
            }
        }
        Family::StochVol => {
            let (mu, phi, sigma) = (theta[0], theta[1], theta[2]);
            let mut h = mu / (1.0 - phi);
            for step in 0..steps {
                let shock: f64 = rng.sample(StandardNormal);
                let eps = sampler.draw(&mut rng);
                h = mu + phi * h + sigma * shock;
                let x = (0.5 * h).exp() * eps;
                if step >= burn_in {
                    out.push(x);
                }
            }
        }
    }
    Ok(out)
}

/// Result of mapping a discretely sampled Vasicek path onto an AR(1) model.
#[derive(Debug, Clone, PartialEq)]
pub struct VasicekAr1 {
    /// `Y_t = X_t - mean level`.
    pub centered: Series,
    /// `exp(-kappa * delta)`.
    pub ar_parameter: f64,
    /// Standard deviation of the Gaussian AR(1) innovations.
    pub innov_sd: f64,
}

/// Maps a Vasicek path `dX = kappa (mu - X) dt + sigma dW` observed at
/// spacing `delta` to the equivalent Gaussian AR(1) recursion.
pub fn vasicek_to_ar1(
    kappa: f64,
    mu: f64,
    sigma: f64,
    delta: f64,
    series: &Series,
) -> Result<VasicekAr1> {
    if !(kappa > 0.0) {
        return Err(Error::Constraint(format!(
            "mean-reversion speed must be > 0, got {kappa}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::Constraint(format!(
            "volatility must be > 0, got {sigma}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::Constraint(format!(
            "sampling interval must be > 0, got {delta}"
        )));
    }
    let ar_parameter = (-kappa * delta).exp();
    let innov_sd = (sigma * sigma * (1.0 - (-2.0 * kappa * delta).exp()) / (2.0 * kappa)).sqrt();
    let centered = Series::new(series.values().iter().map(|x| x - mu).collect(), series.p())?;
    Ok(VasicekAr1 {
        centered,
        ar_parameter,
        innov_sd,
    })
}
