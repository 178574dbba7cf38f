//! Parameter estimation, residual extraction and innovation pools.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{
    ar_is_stationary, edf_count_le, location_scale, Family, InnovationDistribution, ModelSpec,
    Series,
};

/// Condition number above which a regression is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;
/// AR estimates must keep all polynomial roots outside this radius.
pub const AR_ROOT_MARGIN: f64 = 1.0 + 1e-6;
const AR_SHRINK_FACTOR: f64 = 0.99;
const AR_SHRINK_MAX_ITER: usize = 200;
/// Cap on the sum of projected ARCH slopes.
pub const ARCH_SLOPE_CAP: f64 = 1.0 - 1e-3;
/// Floor on the projected ARCH intercept.
pub const ARCH_INTERCEPT_FLOOR: f64 = 1e-8;

/// Estimator for AR coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArMethod {
    #[default]
    LeastSquares,
    YuleWalker,
}

/// A parameter estimate plus whether it had to be pulled back into the
/// parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub theta: Vec<f64>,
    pub adjusted: bool,
}

fn check_order(series: &Series, p: usize) -> Result<()> {
    if series.p() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: series.p(),
        });
    }
    Ok(())
}

/// Solves `min |X b - y|` by Householder QR, rejecting ill-conditioned designs.
fn least_squares(design: DMatrix<f64>, target: DVector<f64>) -> Result<Vec<f64>> {
    let k = design.ncols();
    if design.nrows() < k {
        return Err(Error::Estimation(
            "fewer observations than parameters".into(),
        ));
    }
    let qr = design.qr();
    let r = qr.r();
    let sv = r.clone().singular_values();
    let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), &s| {
        (hi.max(s), lo.min(s))
    });
    if !(smin > 0.0) || !(smax / smin <= MAX_CONDITION) {
        return Err(Error::Estimation(format!(
            "singular normal equations (condition estimate {:.3e})",
            smax / smin
        )));
    }
    let qty = qr.q().transpose() * target;
    let sol = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Estimation("singular triangular factor".into()))?;
    Ok(sol.iter().copied().collect())
}

/// AR(p) coefficients without intercept.
///
/// Estimates whose polynomial has a root within `AR_ROOT_MARGIN` of the unit
/// circle are shrunk towards zero; `adjusted` reports when that happened.
pub fn fit_ar(series: &Series, p: usize, method: ArMethod) -> Result<Estimate> {
    check_order(series, p)?;
    let n = series.n();
    if n <= p {
        return Err(Error::Estimation(format!(
            "need n > p, got n = {n}, p = {p}"
        )));
    }
    let theta = match method {
        ArMethod::LeastSquares if p == 1 => {
            let (sxy, sxx) = (1..=n).fold((0.0, 0.0), |(sxy, sxx), t| {
                let x = series.lag(t, 1);
                (sxy + x * series.response(t), sxx + x * x)
            });
            if !(sxx > 0.0) {
                return Err(Error::Estimation(
                    "singular normal equations (zero regressor)".into(),
                ));
            }
            vec![sxy / sxx]
        }
        ArMethod::LeastSquares => {
            let design = DMatrix::from_fn(n, p, |i, k| series.lag(i + 1, k + 1));
            let target = DVector::from_fn(n, |i, _| series.response(i + 1));
            least_squares(design, target)?
        }
        ArMethod::YuleWalker => yule_walker(series.values(), p)?,
    };
    shrink_to_stationary(theta)
}

/// Solves the sample Yule-Walker equations (uncentred autocovariances, as
/// the model has no intercept) by Levinson-Durbin.
fn yule_walker(x: &[f64], p: usize) -> Result<Vec<f64>> {
    let len = x.len();
    let acov: Vec<f64> = (0..=p)
        .map(|h| {
            x[..len - h]
                .iter()
                .zip(&x[h..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / len as f64
        })
        .collect();
    if !(acov[0] > 0.0) {
        return Err(Error::Estimation("zero sample variance".into()));
    }
    let mut phi: Vec<f64> = Vec::with_capacity(p);
    let mut err = acov[0];
    for k in 1..=p {
        let num = acov[k]
            - phi
                .iter()
                .enumerate()
                .map(|(j, a)| a * acov[k - 1 - j])
                .sum::<f64>();
        let kappa = num / err;
        if !kappa.is_finite() {
            return Err(Error::Estimation("Levinson recursion broke down".into()));
        }
        let prev = phi.clone();
        for j in 0..k - 1 {
            phi[j] = prev[j] - kappa * prev[k - 2 - j];
        }
        phi.push(kappa);
        err *= 1.0 - kappa * kappa;
        if !(err > 0.0) {
            return Err(Error::Estimation("singular autocovariance matrix".into()));
        }
    }
    Ok(phi)
}

/// Multiplies `theta` by 0.99 until the AR polynomial clears the root margin.
pub fn shrink_to_stationary(mut theta: Vec<f64>) -> Result<Estimate> {
    let mut adjusted = false;
    for _ in 0..=AR_SHRINK_MAX_ITER {
        if ar_is_stationary(&theta, AR_ROOT_MARGIN) {
            return Ok(Estimate { theta, adjusted });
        }
        theta.iter_mut().for_each(|t| *t *= AR_SHRINK_FACTOR);
        adjusted = true;
    }
    Err(Error::Estimation(format!(
        "AR estimate could not be shrunk to stationarity in {AR_SHRINK_MAX_ITER} steps"
    )))
}

/// ARCH(p) by least squares of `X_t^2` on `(1, X_{t-1}^2, .., X_{t-p}^2)`,
/// then projected onto the stationary parameter set.
pub fn fit_arch(series: &Series, p: usize) -> Result<Estimate> {
    check_order(series, p)?;
    let n = series.n();
    if n < p + 1 {
        return Err(Error::Estimation(format!(
            "need n >= p + 1, got n = {n}, p = {p}"
        )));
    }
    let design = DMatrix::from_fn(n, p + 1, |i, k| {
        if k == 0 {
            1.0
        } else {
            let x = series.lag(i + 1, k);
            x * x
        }
    });
    let target = DVector::from_fn(n, |i, _| {
        let x = series.response(i + 1);
        x * x
    });
    let raw = least_squares(design, target)?;
    Ok(project_arch(raw))
}

/// Clips negative slopes, caps the slope sum and floors the intercept.
/// Idempotent: a vector already inside the set is returned unchanged.
pub fn project_arch(mut theta: Vec<f64>) -> Estimate {
    let mut adjusted = false;
    for c in theta[1..].iter_mut() {
        if *c < 0.0 {
            *c = 0.0;
            adjusted = true;
        }
    }
    let slope_sum = |t: &[f64]| t[1..].iter().sum::<f64>();
    let s = slope_sum(&theta);
    if s > ARCH_SLOPE_CAP {
        let factor = ARCH_SLOPE_CAP / s;
        theta[1..].iter_mut().for_each(|c| *c *= factor);
        // rounding can leave the sum a few ulps above the cap
        while slope_sum(&theta) > ARCH_SLOPE_CAP {
            theta[1..].iter_mut().for_each(|c| *c *= 1.0 - f64::EPSILON);
        }
        adjusted = true;
    }
    if !(theta[0] >= ARCH_INTERCEPT_FLOOR) {
        theta[0] = ARCH_INTERCEPT_FLOOR;
        adjusted = true;
    }
    Estimate { theta, adjusted }
}

/// `eps_t = w(lags_t, X_t, theta)` for `t = 1..n`.
pub fn compute_residuals(series: &Series, spec: &ModelSpec) -> Result<Vec<f64>> {
    if !spec.family.has_residual_link() {
        return Err(Error::UnsupportedFamily(spec.family.name()));
    }
    check_order(series, spec.p)?;
    let mut lag = vec![0.0; spec.p];
    (1..=series.n())
        .map(|t| {
            series.lag_into(t, &mut lag);
            let (loc, scale) = location_scale(spec.family, &spec.theta, &lag)?;
            Ok((series.response(t) - loc) / scale)
        })
        .collect()
}

/// Bootstrap innovation pool: centred residuals, additionally scaled to unit
/// mean square for ARCH. Keeps the input order.
pub fn build_innovation_pool(raw_residuals: &[f64], family: Family) -> Result<Vec<f64>> {
    if raw_residuals.is_empty() {
        return Err(Error::Empty("residuals"));
    }
    let n = raw_residuals.len() as f64;
    let mean = raw_residuals.iter().sum::<f64>() / n;
    let centred: Vec<f64> = raw_residuals.iter().map(|e| e - mean).collect();
    match family {
        Family::Ar | Family::Iid => Ok(centred),
        Family::Arch => {
            let first = raw_residuals[0];
            let ms = centred.iter().map(|e| e * e).sum::<f64>() / n;
            if raw_residuals.iter().all(|&e| e == first) || !(ms > 0.0) {
                return Err(Error::DegeneratePool("residuals have zero variance".into()));
            }
            let rms = ms.sqrt();
            Ok(centred.into_iter().map(|e| e / rms).collect())
        }
        Family::Garch11 | Family::StochVol => Err(Error::UnsupportedFamily(family.name())),
    }
}

/// Empirical distribution function of a sorted sample at `w`.
pub fn edf_eval(sorted_pool: &[f64], w: f64) -> Result<f64> {
    if sorted_pool.is_empty() {
        return Err(Error::Empty("pool"));
    }
    Ok(edf_count_le(sorted_pool, w) as f64 / sorted_pool.len() as f64)
}

/// A null model fitted to a series.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    /// Family and order of the null with `theta` replaced by the estimate.
    /// Its innovation law is the bootstrap pool.
    pub spec: ModelSpec,
    /// Residuals in time order.
    pub raw_residuals: Vec<f64>,
    /// Sorted residuals; their EDF is the semiparametric innovation estimate.
    pub sorted_residuals: Vec<f64>,
    /// Sorted centred (and for ARCH standardised) residuals.
    pub pool: Vec<f64>,
    /// Whether the estimate was pulled back into the parameter space.
    pub projection_applied: bool,
}

impl FittedModel {
    /// EDF of the raw residuals.
    pub fn residual_edf(&self) -> InnovationDistribution {
        InnovationDistribution::EmpiricalPool(self.sorted_residuals.clone())
    }

    pub fn theta(&self) -> &[f64] {
        &self.spec.theta
    }
}

/// Estimates the null model and derives residuals and the innovation pool.
pub fn fit_model(
    series: &Series,
    family: Family,
    p: usize,
    method: ArMethod,
) -> Result<FittedModel> {
    let estimate = match family {
        Family::Ar => fit_ar(series, p, method)?,
        Family::Arch => fit_arch(series, p)?,
        Family::Iid => {
            check_order(series, p)?;
            Estimate {
                theta: Vec::new(),
                adjusted: false,
            }
        }
        Family::Garch11 | Family::StochVol => return Err(Error::UnsupportedFamily(family.name())),
    };
    let spec = ModelSpec {
        family,
        p,
        theta: estimate.theta,
        innovation: InnovationDistribution::StdNormal,
    };
    spec.validate()?;
    let raw_residuals = compute_residuals(series, &spec)?;
    let pool = build_innovation_pool(&raw_residuals, family)?;
    let mut sorted_residuals = raw_residuals.clone();
    sorted_residuals.sort_by(f64::total_cmp);
    let pool_dist = InnovationDistribution::empirical(pool)?;
    let pool = match &pool_dist {
        InnovationDistribution::EmpiricalPool(v) => v.clone(),
        _ => unreachable!(),
    };
    Ok(FittedModel {
        spec: ModelSpec {
            innovation: pool_dist,
            ..spec
        },
        raw_residuals,
        sorted_residuals,
        pool,
        projection_applied: estimate.adjusted,
    })
}
