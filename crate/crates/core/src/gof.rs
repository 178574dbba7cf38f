//! The deviation process and its supremum over the evaluation grid.
//!
//! For a lag vector `x` and level `y` the process is
//!
//! ```text
//! U(x, y) = n^{-1/2} sum_t 1{lags_t <= x} [ 1{X_t <= y} - F((y - loc_t) / scale_t) ]
//! ```
//!
//! where `F` is the residual EDF, a specified innovation law, or the fully
//! specified transition law depending on the [`TestVariant`]. `U` is
//! piecewise constant in `x` and, between sample values, nonincreasing in
//! `y`, so its supremum is attained on a finite grid: sample lag values in
//! each coordinate and every sample value `X_t` together with its left limit.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::FittedModel;
use crate::models::{location_scale, Family, InnovationDistribution, ModelSpec, Series};

/// Which parts of the null transition law are estimated.
#[derive(Debug, Clone, PartialEq)]
pub enum TestVariant {
    /// Parameters estimated, innovation law estimated by the residual EDF.
    SemiParametric,
    /// Parameters estimated, innovation law given.
    ParametricInnovations(InnovationDistribution),
    /// Transition law fully given by the model (parameters and innovations).
    FullySpecified(ModelSpec),
}

impl TestVariant {
    pub fn name(&self) -> &'static str {
        match self {
            TestVariant::SemiParametric => "semi",
            TestVariant::ParametricInnovations(_) => "param",
            TestVariant::FullySpecified(_) => "full",
        }
    }
}

/// Whether a grid level is the value itself or its left limit `y - 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    LeftLimit,
    AtPoint,
}

/// A level on the `y` axis of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridY {
    pub value: f64,
    pub side: Side,
}

impl GridY {
    pub const NEG_INF: GridY = GridY {
        value: f64::NEG_INFINITY,
        side: Side::AtPoint,
    };
    pub const POS_INF: GridY = GridY {
        value: f64::INFINITY,
        side: Side::AtPoint,
    };

    pub fn at(value: f64) -> Self {
        Self {
            value,
            side: Side::AtPoint,
        }
    }

    pub fn left_of(value: f64) -> Self {
        Self {
            value,
            side: Side::LeftLimit,
        }
    }

    #[inline]
    fn indicator(self, x: f64) -> bool {
        match self.side {
            Side::AtPoint => x <= self.value,
            Side::LeftLimit => x < self.value,
        }
    }
}

/// Candidate points at which the supremum can be attained.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalGrid {
    /// Per lag coordinate: `-inf` followed by the distinct lag values, ascending.
    pub x_candidates: Vec<Vec<f64>>,
    /// `-inf`, then `(v-, v)` for each distinct sample value `v`, then `+inf`.
    pub y_candidates: Vec<GridY>,
}

impl EvalGrid {
    /// Grid sizes: one per lag coordinate, then the `y` axis.
    pub fn dims(&self) -> Vec<usize> {
        self.x_candidates
            .iter()
            .map(Vec::len)
            .chain(std::iter::once(self.y_candidates.len()))
            .collect()
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn sorted_distinct(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Builds the evaluation grid for a series.
pub fn build_grid(series: &Series) -> EvalGrid {
    let n = series.n();
    let x_candidates = (1..=series.p())
        .map(|k| {
            let mut xs = vec![f64::NEG_INFINITY];
            xs.extend(sorted_distinct((1..=n).map(|t| series.lag(t, k)).collect()));
            xs
        })
        .collect();
    let values = sorted_distinct((1..=n).map(|t| series.response(t)).collect());
    let mut y_candidates = Vec::with_capacity(2 * values.len() + 2);
    y_candidates.push(GridY::NEG_INF);
    for v in values {
        y_candidates.push(GridY::left_of(v));
        y_candidates.push(GridY::at(v));
    }
    y_candidates.push(GridY::POS_INF);
    EvalGrid {
        x_candidates,
        y_candidates,
    }
}

/// The supremum statistic and where it is attained.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationStat {
    pub s_n: f64,
    pub arg_x: Vec<f64>,
    pub arg_y: GridY,
    /// Grid indices of the maximiser (lag coordinates, then `y`).
    pub arg_index: Vec<usize>,
    pub grid_dims: Vec<usize>,
}

/// The deviation process of one series under one null specification.
///
/// Holds the conditional location and scale of every observation so that
/// the model term at `(t, y)` is `F((y - loc_t) / scale_t)`.
#[derive(Debug, Clone)]
pub struct DeviationProcess<'a> {
    series: &'a Series,
    family: Family,
    loc: Vec<f64>,
    scale: Vec<f64>,
    dist: InnovationDistribution,
}

impl<'a> DeviationProcess<'a> {
    /// `fitted` is required unless the variant is fully specified.
    pub fn new(
        series: &'a Series,
        variant: &TestVariant,
        fitted: Option<&FittedModel>,
    ) -> Result<Self> {
        let (spec, dist) = match variant {
            TestVariant::SemiParametric => {
                let f = fitted.ok_or_else(|| {
                    Error::Config("semiparametric variant needs a fitted model".into())
                })?;
                (&f.spec, f.residual_edf())
            }
            TestVariant::ParametricInnovations(d) => {
                let f = fitted.ok_or_else(|| {
                    Error::Config("parametric variant needs a fitted model".into())
                })?;
                d.validate()?;
                (&f.spec, d.clone())
            }
            TestVariant::FullySpecified(spec) => {
                spec.validate()?;
                (spec, spec.innovation.clone())
            }
        };
        Self::from_parts(series, spec.family, spec.p, &spec.theta, dist)
    }

    /// Process for an explicit `(family, theta)` and innovation law.
    pub fn from_parts(
        series: &'a Series,
        family: Family,
        p: usize,
        theta: &[f64],
        dist: InnovationDistribution,
    ) -> Result<Self> {
        if !family.has_residual_link() {
            return Err(Error::UnsupportedFamily(family.name()));
        }
        if series.p() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: series.p(),
            });
        }
        let n = series.n();
        let mut loc = Vec::with_capacity(n);
        let mut scale = Vec::with_capacity(n);
        let mut lag = vec![0.0; p];
        for t in 1..=n {
            series.lag_into(t, &mut lag);
            let (l, s) = location_scale(family, theta, &lag)?;
            loc.push(l);
            scale.push(s);
        }
        Ok(Self {
            series,
            family,
            loc,
            scale,
            dist,
        })
    }

    pub fn series(&self) -> &Series {
        self.series
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn distribution(&self) -> &InnovationDistribution {
        &self.dist
    }

    /// Model term for observation `t` (1-based) at level `y`.
    #[inline]
    pub fn model_term(&self, t: usize, y: GridY) -> f64 {
        let w = (y.value - self.loc[t - 1]) / self.scale[t - 1];
        match y.side {
            Side::AtPoint => self.dist.cdf(w),
            Side::LeftLimit => self.dist.cdf_left(w),
        }
    }

    /// Direct `O(n)` evaluation of `U(x, y)`.
    pub fn u_value(&self, x: &[f64], y: GridY) -> Result<f64> {
        let p = self.series.p();
        if x.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: x.len(),
            });
        }
        let n = self.series.n();
        let mut sum = 0.0;
        for t in 1..=n {
            if (1..=p).all(|k| self.series.lag(t, k) <= x[k - 1]) {
                let ind = if y.indicator(self.series.response(t)) {
                    1.0
                } else {
                    0.0
                };
                sum += ind - self.model_term(t, y);
            }
        }
        Ok(sum / (n as f64).sqrt())
    }

    /// Exact maximum of `|U|` over [`build_grid`].
    ///
    /// The last lag coordinate is swept in increasing order while an
    /// accumulator over the `y` grid collects the contributions of newly
    /// admitted observations; earlier coordinates (only for `p >= 2`) are
    /// enumerated. Cost is `O(n^2)` model evaluations for `p = 1` and
    /// `O(n^{p+1})` additions for larger `p`. Ties in `|U|` resolve to the
    /// lexicographically smallest grid index.
    pub fn sup_statistic(&self) -> DeviationStat {
        let grid = build_grid(self.series);
        let sweep = Sweep::new(self, &grid);
        let p = self.series.p();
        let mut best = Best {
            value: 0.0,
            index: vec![0; p + 1],
        };
        if p == 1 {
            let all: Vec<usize> = (1..=self.series.n()).collect();
            sweep.run(&all, &[], &mut best, RowSource::OnTheFly);
        } else {
            let rows = sweep.model_rows();
            self.enumerate_leading(&grid, &sweep, &rows, &mut best);
        }
        let n = self.series.n() as f64;
        let arg_x = best
            .index
            .iter()
            .take(p)
            .enumerate()
            .map(|(k, &i)| grid.x_candidates[k][i])
            .collect();
        DeviationStat {
            s_n: best.value / n.sqrt(),
            arg_x,
            arg_y: grid.y_candidates[best.index[p]],
            arg_index: best.index,
            grid_dims: grid.dims(),
        }
    }

    fn enumerate_leading(&self, grid: &EvalGrid, sweep: &Sweep<'_>, rows: &[f64], best: &mut Best) {
        let p = self.series.p();
        let lead = p - 1;
        // index 0 (-inf) in any leading coordinate admits nothing: U = 0 there
        let mut idx = vec![1usize; lead];
        loop {
            let admitted: Vec<usize> = (1..=self.series.n())
                .filter(|&t| {
                    (0..lead).all(|k| self.series.lag(t, k + 1) <= grid.x_candidates[k][idx[k]])
                })
                .collect();
            if !admitted.is_empty() {
                sweep.run(&admitted, &idx, best, RowSource::Precomputed(rows));
            }
            // odometer increment, last leading coordinate fastest
            let mut k = lead;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < grid.x_candidates[k].len() {
                    break;
                }
                idx[k] = 1;
            }
        }
    }
}

struct Best {
    /// max |sum| (not yet divided by sqrt n)
    value: f64,
    index: Vec<usize>,
}

enum RowSource<'r> {
    OnTheFly,
    Precomputed(&'r [f64]),
}

/// Shared state for sweeping the last lag coordinate.
struct Sweep<'p> {
    process: &'p DeviationProcess<'p>,
    /// distinct sample values (ascending)
    values: Vec<f64>,
    /// per observation: first y-grid index where 1{X_t <= y} is 1
    suffix_start: Vec<usize>,
    /// per observation: the index of its last-coordinate lag in the x grid
    last_x_index: Vec<usize>,
    /// x candidates of the last coordinate
    last_x: Vec<f64>,
    m: usize,
}

impl<'p> Sweep<'p> {
    fn new(process: &'p DeviationProcess<'p>, grid: &EvalGrid) -> Self {
        let series = process.series;
        let n = series.n();
        let p = series.p();
        let values: Vec<f64> = grid
            .y_candidates
            .iter()
            .filter(|g| g.side == Side::AtPoint && g.value.is_finite())
            .map(|g| g.value)
            .collect();
        let suffix_start = (1..=n)
            .map(|t| {
                let pos = values.partition_point(|&v| v < series.response(t));
                2 + 2 * pos
            })
            .collect();
        let last_x = grid.x_candidates[p - 1].clone();
        let last_x_index = (1..=n)
            .map(|t| last_x.partition_point(|&v| v < series.lag(t, p)))
            .collect();
        Sweep {
            process,
            values,
            suffix_start,
            last_x_index,
            last_x,
            m: grid.y_candidates.len(),
        }
    }

    /// Adds the model terms of observation `t` at every y-grid level into `acc`.
    fn accumulate_model_row(&self, t: usize, acc: &mut [f64]) {
        let pr = self.process;
        let (loc, scale) = (pr.loc[t - 1], pr.scale[t - 1]);
        let m = self.m;
        acc[0] += pr.model_term(t, GridY::NEG_INF);
        acc[m - 1] += pr.model_term(t, GridY::POS_INF);
        match &pr.dist {
            InnovationDistribution::EmpiricalPool(pool) => {
                // w increases with y: both counts move monotonically
                let len = pool.len() as f64;
                let (mut le, mut lt) = (0usize, 0usize);
                for (i, &v) in self.values.iter().enumerate() {
                    let w = (v - loc) / scale;
                    while lt < pool.len() && pool[lt] < w {
                        lt += 1;
                    }
                    if le < lt {
                        le = lt;
                    }
                    while le < pool.len() && pool[le] <= w {
                        le += 1;
                    }
                    acc[1 + 2 * i] += lt as f64 / len;
                    acc[2 + 2 * i] += le as f64 / len;
                }
            }
            dist => {
                for (i, &v) in self.values.iter().enumerate() {
                    let f = dist.cdf((v - loc) / scale);
                    acc[1 + 2 * i] += f;
                    acc[2 + 2 * i] += f;
                }
            }
        }
    }

    fn model_rows(&self) -> Vec<f64> {
        let n = self.process.series.n();
        let mut rows = vec![0.0; n * self.m];
        for t in 1..=n {
            self.accumulate_model_row(t, &mut rows[(t - 1) * self.m..t * self.m]);
        }
        rows
    }

    /// Sweeps the last coordinate over the observations in `admitted`.
    fn run(&self, admitted: &[usize], leading: &[usize], best: &mut Best, rows: RowSource<'_>) {
        let m = self.m;
        let mut order: Vec<usize> = admitted.to_vec();
        order.sort_by_key(|&t| self.last_x_index[t - 1]);
        let mut ind_diff = vec![0i64; m + 1];
        let mut acc = vec![0.0f64; m];
        let mut cursor = 0;
        while cursor < order.len() {
            let xi = self.last_x_index[order[cursor] - 1];
            while cursor < order.len() && self.last_x_index[order[cursor] - 1] == xi {
                let t = order[cursor];
                ind_diff[self.suffix_start[t - 1]] += 1;
                match rows {
                    RowSource::OnTheFly => self.accumulate_model_row(t, &mut acc),
                    RowSource::Precomputed(r) => {
                        for (a, v) in acc.iter_mut().zip(&r[(t - 1) * m..t * m]) {
                            *a += v;
                        }
                    }
                }
                cursor += 1;
            }
            let mut count = 0i64;
            let mut row_best = best.value;
            let mut row_arg = None;
            for (j, a) in acc.iter().enumerate() {
                count += ind_diff[j];
                let u = (count as f64 - a).abs();
                if u > row_best {
                    row_best = u;
                    row_arg = Some(j);
                }
            }
            if let Some(j) = row_arg {
                best.value = row_best;
                best.index.clear();
                best.index.extend_from_slice(leading);
                best.index.push(xi);
                best.index.push(j);
            }
        }
        debug_assert!(self.last_x.len() > 1 || admitted.is_empty());
    }
}

/// `U(x, y)` for a series under a null specification.
pub fn u_value(
    series: &Series,
    variant: &TestVariant,
    fitted: Option<&FittedModel>,
    x: &[f64],
    y: GridY,
) -> Result<f64> {
    DeviationProcess::new(series, variant, fitted)?.u_value(x, y)
}

/// Supremum statistic for a series under a null specification.
pub fn sup_statistic(
    series: &Series,
    variant: &TestVariant,
    fitted: Option<&FittedModel>,
) -> Result<DeviationStat> {
    Ok(DeviationProcess::new(series, variant, fitted)?.sup_statistic())
}
