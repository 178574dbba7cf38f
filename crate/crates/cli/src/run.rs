use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use markov_gof::montecarlo::{rejection_rate, table_scenarios};
use markov_gof::report::{emit_mc_csv, emit_report};
use markov_gof::{ingest_csv, run_test, simulate, Error, McReport, Result, Series, TestReport};

use crate::config::{McRun, SimulateRun, TableRun, TestRun};

/// Outcome of a completed run.
pub enum Outcome {
    Done,
    Rejected,
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.6}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn summary(r: &TestReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "null hypothesis   {}", r.hypothesis);
    let _ = writeln!(s, "observations      {}", r.n);
    if let Some(theta) = &r.theta_hat {
        let note = if r.projection_applied {
            " (projected)"
        } else {
            ""
        };
        let _ = writeln!(s, "estimate          {}{note}", fmt_vec(theta));
    }
    let _ = writeln!(s, "S_n               {:.6}", r.s_n);
    let _ = writeln!(
        s,
        "critical value    {:.6}  (alpha = {}, B = {})",
        r.critical_value, r.bootstrap.alpha, r.bootstrap.b
    );
    let _ = writeln!(s, "p-value           {:.4}", r.p_value);
    if r.degenerate_count > 0 {
        let _ = writeln!(s, "refit retries     {}", r.degenerate_count);
    }
    let decision = if r.reject { "reject" } else { "do not reject" };
    let _ = writeln!(s, "decision          {decision}");
    s
}

pub fn test(run: TestRun) -> Result<Outcome> {
    let p = run.hypothesis.order;
    let mut series = ingest_csv(&run.input, &run.column, p)?;
    if let Some(c) = run.center {
        series = Series::new(series.into_values().into_iter().map(|x| x - c).collect(), p)?;
    }
    let report = run_test(&series, &run.hypothesis, &run.config)?;
    print!("{}", summary(&report));
    if let Some(path) = &run.output {
        emit_report(&report, path)?;
    }
    Ok(if report.reject {
        Outcome::Rejected
    } else {
        Outcome::Done
    })
}

pub fn simulate_cmd(run: SimulateRun) -> Result<Outcome> {
    let series = simulate(&run.spec, run.n, run.seed, run.burn_in)?;
    let mut csv = String::from("x\n");
    for v in series.values() {
        let _ = writeln!(csv, "{v}");
    }
    match &run.output {
        Some(path) => {
            fs::write(path, csv).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?
        }
        None => print!("{csv}"),
    }
    Ok(Outcome::Done)
}

fn mc_table(reports: &[McReport]) -> String {
    let mut s = format!(
        "{:<28} {:>5} {:>6} {:>9} {:>6}\n",
        "scenario", "n", "alpha", "rejection", "reps"
    );
    for row in reports.iter().flat_map(|r| &r.rows) {
        let _ = writeln!(
            s,
            "{:<28} {:>5} {:>6} {:>9.3} {:>6}",
            row.scenario, row.n, row.alpha, row.rejection_rate, row.replications
        );
    }
    s
}

fn write_mc(reports: &[McReport], output: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    print!("{}", mc_table(reports));
    if let Some(path) = output {
        emit_report(&reports, path)?;
    }
    if let Some(path) = csv {
        emit_mc_csv(reports, path)?;
    }
    Ok(())
}

pub fn mc(run: McRun) -> Result<Outcome> {
    let reports = run
        .scenarios
        .iter()
        .map(rejection_rate)
        .collect::<Result<Vec<_>>>()?;
    write_mc(&reports, run.output.as_deref(), run.csv.as_deref())?;
    Ok(Outcome::Done)
}

pub fn reproduce_table(run: TableRun) -> Result<Outcome> {
    let mut reports = Vec::new();
    for scenario in table_scenarios(run.table, &run.options) {
        let report = rejection_rate(&scenario)?;
        eprintln!(
            "{} done in {:.1}s",
            report.scenario,
            report.wall_time.as_secs_f64()
        );
        reports.push(report);
    }
    write_mc(&reports, run.output.as_deref(), run.csv.as_deref())?;
    Ok(Outcome::Done)
}
