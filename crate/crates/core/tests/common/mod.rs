//! Independent reference implementation of the deviation process.
//!
//! Everything here is written from the defining formula with no use of the
//! library's grid, sweep or cdf code, so agreement is meaningful.

#![allow(dead_code)]

use markov_gof::rng::rng_from_seed;
use markov_gof::{Family, InnovationDistribution, ModelSpec, Series, TestVariant};
use rand::Rng as _;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// `Phi(w)` through the complementary error function, accurate to a few ulps
/// in both tails (statrs' normal cdf is only good to about 1e-10, too coarse
/// for the tolerances checked here).
pub fn normal_cdf(w: f64) -> f64 {
    0.5 * libm::erfc(-w / std::f64::consts::SQRT_2)
}

/// Innovation law as the oracle sees it.
#[derive(Debug, Clone)]
pub enum Law {
    Normal,
    T(f64),
    Uniform,
    /// Empirical law of a sorted sample.
    Edf(Vec<f64>),
}

impl Law {
    pub fn from_dist(d: &InnovationDistribution) -> Self {
        match d {
            InnovationDistribution::StdNormal => Law::Normal,
            InnovationDistribution::ScaledStudentT { nu } => Law::T(*nu),
            InnovationDistribution::UniformSym => Law::Uniform,
            InnovationDistribution::EmpiricalPool(v) => Law::Edf(v.clone()),
        }
    }

    /// `F(w)`, or `F(w-)` when `left` is set.
    pub fn cdf(&self, w: f64, left: bool) -> f64 {
        match self {
            Law::Normal => {
                if w.is_infinite() {
                    return if w > 0.0 { 1.0 } else { 0.0 };
                }
                normal_cdf(w)
            }
            Law::T(nu) => {
                if w.is_infinite() {
                    return if w > 0.0 { 1.0 } else { 0.0 };
                }
                StudentsT::new(0.0, ((nu - 2.0) / nu).sqrt(), *nu)
                    .unwrap()
                    .cdf(w)
            }
            Law::Uniform => {
                let r = 3f64.sqrt();
                ((w + r) / (2.0 * r)).clamp(0.0, 1.0)
            }
            // sorted sample
            Law::Edf(e) => {
                let k = e.partition_point(|&v| if left { v < w } else { v <= w });
                k as f64 / e.len() as f64
            }
        }
    }
}

/// Series with `p` initial values followed by the `n` observations.
#[derive(Debug, Clone)]
pub struct Case {
    pub data: Vec<f64>,
    pub p: usize,
    pub family: Family,
    pub theta: Vec<f64>,
    pub law: Law,
}

impl Case {
    pub fn n(&self) -> usize {
        self.data.len() - self.p
    }

    /// Lags of observation `t` (1-based), most recent first.
    pub fn lags(&self, t: usize) -> Vec<f64> {
        (1..=self.p)
            .map(|k| self.data[self.p + t - 1 - k])
            .collect()
    }

    pub fn x(&self, t: usize) -> f64 {
        self.data[self.p + t - 1]
    }

    fn link(&self, lags: &[f64], y: f64) -> f64 {
        match self.family {
            Family::Ar => {
                let m: f64 = self.theta.iter().zip(lags).map(|(a, l)| a * l).sum();
                y - m
            }
            Family::Arch => {
                let v = self.theta[0]
                    + self.theta[1..]
                        .iter()
                        .zip(lags)
                        .map(|(a, l)| a * l * l)
                        .sum::<f64>();
                y / v.sqrt()
            }
            Family::Iid => y,
            _ => unreachable!("not a null family"),
        }
    }

    /// Raw residuals under `theta`.
    pub fn residuals(&self) -> Vec<f64> {
        (1..=self.n())
            .map(|t| self.link(&self.lags(t), self.x(t)))
            .collect()
    }

    /// `U(x, y)` straight from the definition. `left` selects `y-`.
    pub fn u(&self, x: &[f64], y: f64, left: bool) -> f64 {
        let n = self.n();
        let mut sum = 0.0;
        for t in 1..=n {
            let lags = self.lags(t);
            if lags.iter().zip(x).all(|(l, b)| l <= b) {
                let ind = if left { self.x(t) < y } else { self.x(t) <= y };
                let f = self.cdf_at(&lags, y, left);
                sum += ind as u8 as f64 - f;
            }
        }
        sum / (n as f64).sqrt()
    }

    fn cdf_at(&self, lags: &[f64], y: f64, left: bool) -> f64 {
        if y == f64::INFINITY {
            return 1.0;
        }
        if y == f64::NEG_INFINITY {
            return 0.0;
        }
        self.law.cdf(self.link(lags, y), left)
    }

    /// Candidate values per lag coordinate: `-inf` and every lag value.
    pub fn x_axes(&self) -> Vec<Vec<f64>> {
        (0..self.p)
            .map(|k| {
                let mut v: Vec<f64> = (1..=self.n()).map(|t| self.lags(t)[k]).collect();
                v.push(f64::NEG_INFINITY);
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect()
    }

    fn x_points(&self) -> Vec<Vec<f64>> {
        let mut points = vec![vec![]];
        for axis in self.x_axes() {
            points = points
                .into_iter()
                .flat_map(|pre| {
                    axis.iter().map(move |&v| {
                        let mut q = pre.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    /// Sorted distinct observations.
    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = (1..=self.n()).map(|t| self.x(t)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Brute-force maximum of `|U|` over every lag point and every level
    /// `-inf`, `+inf`, `v` and `v-`.
    pub fn brute_force_sup(&self) -> f64 {
        let mut levels = vec![(f64::NEG_INFINITY, false), (f64::INFINITY, false)];
        for v in self.values() {
            levels.push((v, false));
            levels.push((v, true));
        }
        let mut best = 0.0f64;
        for x in self.x_points() {
            for &(y, left) in &levels {
                best = best.max(self.u(&x, y, left).abs());
            }
        }
        best
    }

    /// Maximum of `|U|` over every lag point and a `y` mesh with `per_gap`
    /// points strictly inside each gap between sorted values, plus
    /// `per_gap` points beyond each end.
    pub fn dense_mesh_sup(&self, per_gap: usize) -> f64 {
        let values = self.values();
        let span = (values[values.len() - 1] - values[0]).max(1.0);
        let mut ys = Vec::new();
        for k in 1..=per_gap {
            let f = k as f64 / (per_gap + 1) as f64;
            ys.push(values[0] - span * f);
            ys.push(values[values.len() - 1] + span * f);
            for w in values.windows(2) {
                ys.push(w[0] + (w[1] - w[0]) * f);
            }
        }
        let axes = self.x_axes();
        let dims: Vec<usize> = axes.iter().map(Vec::len).collect();
        let cells: usize = dims.iter().product();
        // cell of each observation: index of its lag in each axis
        let cell: Vec<usize> = (1..=self.n())
            .map(|t| {
                let lags = self.lags(t);
                let mut idx = 0;
                for (k, axis) in axes.iter().enumerate() {
                    let pos = axis.iter().position(|&v| v == lags[k]).unwrap();
                    idx = idx * dims[k] + pos;
                }
                idx
            })
            .collect();
        let scale = (self.n() as f64).sqrt();
        let mut grid = vec![0.0; cells];
        let mut best = 0.0f64;
        for &y in &ys {
            grid.iter_mut().for_each(|g| *g = 0.0);
            for t in 1..=self.n() {
                let lags = self.lags(t);
                let c = (self.x(t) <= y) as u8 as f64 - self.cdf_at(&lags, y, false);
                grid[cell[t - 1]] += c;
            }
            cumulate(&mut grid, &dims);
            best = grid.iter().fold(best, |b, g| b.max((g / scale).abs()));
        }
        best
    }
}

/// In-place inclusive prefix sums along every axis of a row-major array.
fn cumulate(a: &mut [f64], dims: &[usize]) {
    let mut stride = 1;
    for &d in dims.iter().rev() {
        let block = stride * d;
        for start in (0..a.len()).step_by(block) {
            for off in 0..stride {
                for i in 1..d {
                    let j = start + off + i * stride;
                    a[j] += a[j - stride];
                }
            }
        }
        stride = block;
    }
}

/// A random test instance: the library inputs and the matching oracle case.
pub struct Instance {
    pub series: Series,
    pub variant: TestVariant,
    pub fitted: Option<markov_gof::FittedModel>,
    pub case: Case,
}

fn random_law(rng: &mut markov_gof::rng::Rng) -> InnovationDistribution {
    match rng.random_range(0..3) {
        0 => InnovationDistribution::StdNormal,
        1 => InnovationDistribution::ScaledStudentT {
            nu: rng.random_range(2.5..10.0),
        },
        _ => InnovationDistribution::UniformSym,
    }
}

fn random_theta(family: Family, p: usize, rng: &mut markov_gof::rng::Rng) -> Vec<f64> {
    match family {
        Family::Ar => (0..p)
            .map(|_| rng.random_range(-0.9..0.9) / p as f64)
            .collect(),
        Family::Arch => {
            let mut t = vec![rng.random_range(0.05..1.0)];
            t.extend((0..p).map(|_| rng.random_range(0.0..0.9) / p as f64));
            t
        }
        _ => Vec::new(),
    }
}

/// Draws instance `index` of a reproducible stream. `None` when the
/// estimator rejects the sample (tiny or degenerate data).
pub fn random_instance(seed: u64, index: u64, max_n: usize) -> Option<Instance> {
    let mut rng = rng_from_seed(markov_gof::rng::derive_seed(seed, index));
    let family = if rng.random_bool(0.5) {
        Family::Ar
    } else {
        Family::Arch
    };
    let p = if rng.random_bool(0.2) { 2 } else { 1 };
    let n = rng.random_range(3..=if p == 2 { max_n.min(20) } else { max_n });
    let truth = ModelSpec::new(
        family,
        p,
        random_theta(family, p, &mut rng),
        random_law(&mut rng),
    )
    .unwrap();
    let mut values = markov_gof::models::simulate_values(&truth, n + p, rng.random(), 50).unwrap();
    if rng.random_bool(0.2) {
        // coarse rounding produces tied lags and tied observations
        values
            .iter_mut()
            .for_each(|v| *v = (*v * 4.0).round() / 4.0);
    }
    let series = Series::new(values.clone(), p).ok()?;
    let (variant, fitted, theta, law) = match rng.random_range(0..3) {
        0 => {
            let fitted =
                markov_gof::fit_model(&series, family, p, markov_gof::ArMethod::LeastSquares)
                    .ok()?;
            let theta = fitted.spec.theta.clone();
            (TestVariant::SemiParametric, Some(fitted), theta, None)
        }
        1 => {
            let fitted =
                markov_gof::fit_model(&series, family, p, markov_gof::ArMethod::LeastSquares)
                    .ok()?;
            let theta = fitted.spec.theta.clone();
            let d = random_law(&mut rng);
            (
                TestVariant::ParametricInnovations(d.clone()),
                Some(fitted),
                theta,
                Some(Law::from_dist(&d)),
            )
        }
        _ => {
            let spec = ModelSpec::new(
                family,
                p,
                random_theta(family, p, &mut rng),
                random_law(&mut rng),
            )
            .unwrap();
            let law = Law::from_dist(&spec.innovation);
            let theta = spec.theta.clone();
            (TestVariant::FullySpecified(spec), None, theta, Some(law))
        }
    };
    let mut case = Case {
        data: values,
        p,
        family,
        theta,
        law: Law::Normal,
    };
    case.law = match law {
        Some(l) => l,
        None => {
            let mut e = case.residuals();
            e.sort_by(f64::total_cmp);
            Law::Edf(e)
        }
    };
    Some(Instance {
        series,
        variant,
        fitted,
        case,
    })
}
