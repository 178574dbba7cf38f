//! Turns parsed arguments into validated library inputs, collecting every
//! problem instead of stopping at the first.

use std::path::PathBuf;

use markov_gof::estimators::ArMethod;
use markov_gof::montecarlo::{arch_table_dgps, iid_table_dgps};
use markov_gof::{
    BootstrapConfig, ColumnSelector, Family, Hypothesis, InnovationDistribution, McScenario,
    ModelSpec, ParamScheme, Scale, Table, TableOptions, TestVariant,
};

use crate::args::{
    ArMethodArg, BootArgs, DgpModelArg, McArgs, ModelArg, NullArgs, ScaleArg, SchemeArg,
    SimulateArgs, TableArgs, TestArgs, VariantArg,
};

/// Accumulated validation errors.
#[derive(Debug, Default)]
pub struct Problems(pub Vec<String>);

impl Problems {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    fn check<T>(&mut self, r: markov_gof::Result<T>) -> Option<T> {
        r.map_err(|e| self.push(e.to_string())).ok()
    }

    fn finish<T>(self, value: Option<T>) -> Result<T, Problems> {
        match value {
            Some(v) if self.0.is_empty() => Ok(v),
            _ => Err(self),
        }
    }
}

pub struct TestRun {
    pub input: PathBuf,
    pub column: ColumnSelector,
    pub center: Option<f64>,
    pub hypothesis: Hypothesis,
    pub config: BootstrapConfig,
    pub output: Option<PathBuf>,
}

pub struct SimulateRun {
    pub spec: ModelSpec,
    pub n: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub output: Option<PathBuf>,
}

pub struct McRun {
    pub scenarios: Vec<McScenario>,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

pub struct TableRun {
    pub table: Table,
    pub options: TableOptions,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

/// Parses `normal`, `t:NU` or `uniform`.
pub fn parse_innovation(s: &str) -> Result<InnovationDistribution, String> {
    let s = s.trim();
    match s {
        "normal" => Ok(InnovationDistribution::StdNormal),
        "uniform" => Ok(InnovationDistribution::UniformSym),
        _ => {
            let nu = s.strip_prefix("t:").ok_or_else(|| {
                format!("unknown innovation law '{s}' (expected normal, t:NU or uniform)")
            })?;
            let nu: f64 = nu
                .parse()
                .map_err(|_| format!("invalid degrees of freedom in '{s}'"))?;
            InnovationDistribution::student_t(nu).map_err(|e| e.to_string())
        }
    }
}

fn family(m: ModelArg) -> Family {
    match m {
        ModelArg::Ar => Family::Ar,
        ModelArg::Arch => Family::Arch,
        ModelArg::Iid => Family::Iid,
    }
}

fn null_hypothesis(a: &NullArgs, problems: &mut Problems) -> Option<Hypothesis> {
    let Some(model) = a.model else {
        problems.push("--model is required");
        return None;
    };
    if a.order == 0 {
        problems.push("--order must be at least 1");
        return None;
    }
    let fam = family(model);
    let innov = match &a.innov {
        Some(s) => match parse_innovation(s) {
            Ok(d) => Some(d),
            Err(e) => {
                problems.push(e);
                return None;
            }
        },
        None => None,
    };
    if a.theta.is_some() && a.variant != VariantArg::Full {
        problems.push("--theta is only used with --variant full");
    }
    let variant = match a.variant {
        VariantArg::Semi => {
            if innov.is_some() {
                problems.push("--variant semi estimates the innovation law; drop --innov or use --variant param");
            }
            TestVariant::SemiParametric
        }
        VariantArg::Param => match innov {
            Some(d) => TestVariant::ParametricInnovations(d),
            None => {
                problems.push("--variant param requires --innov");
                return None;
            }
        },
        VariantArg::Full => {
            let Some(d) = innov else {
                problems.push("--variant full requires --innov");
                return None;
            };
            let theta = match (&a.theta, fam) {
                (Some(t), _) => t.clone(),
                (None, Family::Iid) => Vec::new(),
                (None, _) => {
                    problems.push("--variant full requires --theta for AR and ARCH nulls");
                    return None;
                }
            };
            let expected = fam.theta_len(a.order);
            if theta.len() != expected {
                problems.push(format!(
                    "--theta has {} values but {}({}) needs {expected}",
                    theta.len(),
                    fam.name(),
                    a.order
                ));
                return None;
            }
            TestVariant::FullySpecified(problems.check(ModelSpec::new(fam, a.order, theta, d))?)
        }
    };
    let method = match a.ar_method {
        ArMethodArg::Ls => ArMethod::LeastSquares,
        ArMethodArg::Yw => ArMethod::YuleWalker,
    };
    problems
        .check(Hypothesis::new(fam, a.order, variant))
        .map(|h| h.with_ar_method(method))
}

fn bootstrap_config(a: &BootArgs, alpha: f64, problems: &mut Problems) -> Option<BootstrapConfig> {
    let config = BootstrapConfig {
        burn_in: a.burn_in,
        param_scheme: match a.param_scheme {
            SchemeArg::Parametric => ParamScheme::Parametric,
            SchemeArg::Resample => ParamScheme::ResampleResiduals,
        },
        ..BootstrapConfig::new(a.b, alpha, a.seed)
    };
    problems.check(config.validate()).map(|_| config)
}

pub fn test_run(a: &TestArgs) -> Result<TestRun, Problems> {
    let mut p = Problems::default();
    if a.input.is_none() {
        p.push("--input is required");
    }
    if let Some(c) = a.center {
        if !c.is_finite() {
            p.push("--center must be finite");
        }
    }
    let hypothesis = null_hypothesis(&a.null, &mut p);
    let config = bootstrap_config(&a.boot, a.alpha, &mut p);
    let run = match (a.input.clone(), hypothesis, config) {
        (Some(input), Some(hypothesis), Some(config)) => Some(TestRun {
            input,
            column: ColumnSelector::parse(&a.column),
            center: a.center,
            hypothesis,
            config,
            output: a.output.clone(),
        }),
        _ => None,
    };
    p.finish(run)
}

fn dgp_spec(
    model: DgpModelArg,
    order: usize,
    theta: Option<Vec<f64>>,
    innov: InnovationDistribution,
) -> markov_gof::Result<ModelSpec> {
    let need = |t: Option<Vec<f64>>| {
        t.ok_or_else(|| {
            markov_gof::Error::Config(format!("{model:?} needs parameters").to_lowercase())
        })
    };
    match model {
        DgpModelArg::Ar => ModelSpec::ar(need(theta)?, innov),
        DgpModelArg::Arch => ModelSpec::arch(need(theta)?, innov),
        DgpModelArg::Iid => ModelSpec::iid(order, innov),
        DgpModelArg::Garch11 | DgpModelArg::Sv => {
            let t = need(theta)?;
            if t.len() != 3 {
                return Err(markov_gof::Error::Config(format!(
                    "{model:?} takes 3 parameters, got {}",
                    t.len()
                )));
            }
            match model {
                DgpModelArg::Garch11 => ModelSpec::garch11(t[0], t[1], t[2], innov),
                _ => ModelSpec::stoch_vol(t[0], t[1], t[2], innov),
            }
        }
    }
}

pub fn simulate_run(a: &SimulateArgs) -> Result<SimulateRun, Problems> {
    let mut p = Problems::default();
    if a.n == 0 {
        p.push("--n must be positive");
    }
    let spec = match parse_innovation(&a.innov) {
        Ok(d) => p.check(dgp_spec(a.model, a.order, a.theta.clone(), d)),
        Err(e) => {
            p.push(e);
            None
        }
    };
    let run = spec.map(|spec| SimulateRun {
        spec,
        n: a.n,
        seed: a.seed,
        burn_in: a.burn_in,
        output: a.output.clone(),
    });
    p.finish(run)
}

/// Resolves a preset name or `FAMILY:THETA[:INNOV]`.
pub fn parse_dgp(s: &str) -> Result<ModelSpec, String> {
    if let Some((_, spec)) = arch_table_dgps().into_iter().find(|(name, _)| *name == s) {
        return Ok(spec);
    }
    if let Some((_, spec)) = iid_table_dgps().into_iter().find(|(name, _)| *name == s) {
        return Ok(spec);
    }
    let mut parts = s.splitn(3, ':');
    let fam = parts.next().unwrap_or_default();
    let model = DgpModelArg::from_str_ci(fam)
        .ok_or_else(|| format!("unknown data-generating process '{s}'"))?;
    let theta = match parts.next().map(str::trim) {
        None | Some("") => None,
        Some(t) => Some(
            t.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| format!("invalid parameter '{v}' in '{s}'"))
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    let innov = parse_innovation(parts.next().unwrap_or("normal"))?;
    dgp_spec(model, 1, theta, innov).map_err(|e| e.to_string())
}

impl DgpModelArg {
    fn from_str_ci(s: &str) -> Option<Self> {
        use clap::ValueEnum;
        Self::from_str(s, true).ok()
    }
}

pub fn mc_run(a: &McArgs) -> Result<McRun, Problems> {
    let mut p = Problems::default();
    let dgp = match &a.dgp {
        None => {
            p.push("--dgp is required");
            None
        }
        Some(s) => parse_dgp(s).map_err(|e| p.push(e)).ok(),
    };
    if a.n.is_empty() {
        p.push("--n is required");
    }
    if a.n.iter().any(|&n| n < 2) {
        p.push("every sample size in --n must be at least 2");
    }
    if a.reps == 0 {
        p.push("--reps must be positive");
    }
    let hypothesis = null_hypothesis(&a.null, &mut p);
    let mut config = None;
    for &alpha in &a.alpha {
        config = bootstrap_config(&a.boot, alpha, &mut p);
    }
    let run = match (dgp, hypothesis, config) {
        (Some(dgp), Some(hypothesis), Some(bootstrap)) => {
            let scenarios =
                a.n.iter()
                    .enumerate()
                    .map(|(i, &n)| McScenario {
                        label: format!("mc/n={n}/{}", a.dgp.as_deref().unwrap_or_default()),
                        dgp: dgp.clone(),
                        hypothesis: hypothesis.clone(),
                        n,
                        alpha_levels: a.alpha.clone(),
                        replications: a.reps,
                        bootstrap: bootstrap.clone(),
                        master_seed: markov_gof::rng::derive_seed(a.boot.seed, i as u64),
                    })
                    .collect();
            Some(McRun {
                scenarios,
                output: a.output.clone(),
                csv: a.csv.clone(),
            })
        }
        _ => None,
    };
    p.finish(run)
}

pub fn table_run(a: &TableArgs) -> Result<TableRun, Problems> {
    let mut p = Problems::default();
    let table = match a.table {
        1 => Some(Table::Arch),
        2 => Some(Table::Iid),
        t => {
            p.push(format!("--table must be 1 or 2, got {t}"));
            None
        }
    };
    if a.reps == Some(0) {
        p.push("--reps must be positive");
    }
    for alpha in markov_gof::montecarlo::TABLE_ALPHAS {
        p.check(BootstrapConfig::new(a.b, alpha, a.seed).validate());
    }
    let options = TableOptions {
        scale: match a.scale {
            ScaleArg::Full => Scale::Full,
            ScaleArg::Reduced => Scale::Reduced,
        },
        b: a.b,
        burn_in: a.burn_in,
        seed: a.seed,
        replications: a.reps,
    };
    let run = table.map(|table| TableRun {
        table,
        options,
        output: a.output.clone(),
        csv: a.csv.clone(),
    });
    p.finish(run)
}
