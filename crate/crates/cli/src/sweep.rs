//! Parallel parameter sweep over `lambda0 x N x gamma`.

use fredstab::canonical::format_float;
use fredstab::diagnostics::DiagnosticsReport;
use fredstab::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{
    check_gates, run_scenarios, run_synthesis, write_scenarios, write_synthesis, Artifacts, CliError, CliResult,
};
use crate::config::RunConfig;

/// One grid point; `error` is set when the pipeline failed there.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub lambda0: f64,
    pub n: Option<usize>,
    pub gamma: Option<f64>,
    pub exit_code: i32,
    pub error: Option<String>,
    pub report: Option<DiagnosticsReport>,
}

fn run_point(
    base: &RunConfig,
    art: &Artifacts,
    index: usize,
    lambda0: f64,
    n: Option<usize>,
    gamma: Option<f64>,
) -> SweepRow {
    let mut cfg = base.clone();
    cfg.lambda0 = lambda0;
    cfg.n = n;
    cfg.gamma = gamma;
    cfg.sweep = None;
    let sub = Artifacts::new(art.path(&format!("sweep/p{index:03}")));
    let result = (|| -> CliResult<DiagnosticsReport> {
        let mut s = run_synthesis(&cfg)?;
        write_synthesis(&sub, &s)?;
        check_gates(&s)?;
        if !cfg.scenarios.is_empty() {
            let runs = run_scenarios(&s.system, &s.law, &cfg)?;
            write_scenarios(&sub, &runs)?;
            s.report.decay = Some(runs.into_iter().map(|r| r.summary).collect());
            s.report.absent.retain(|a| a != "decay");
            sub.write("report.json", &(s.report.to_canonical_json()? + "\n"))?;
        }
        Ok(s.report)
    })();
    let (exit_code, error, report) = match result {
        Ok(r) => (0, None, Some(r)),
        Err(e) => (e.exit_code(), Some(format!("{}: {}", e.kind(), e.message())), None),
    };
    SweepRow { index, lambda0, n, gamma, exit_code, error, report }
}

pub fn run_sweep(cfg: &RunConfig, art: &Artifacts, jobs: Option<usize>) -> CliResult<Vec<SweepRow>> {
    let grid = cfg.grid()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::InvalidInput("--jobs must be at least 1".into()).into());
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| CliError::Core(Error::InvalidInput(format!("thread pool: {e}"))))?;
    let rows: Vec<SweepRow> =
        pool.install(|| grid.par_iter().enumerate().map(|(i, &(l, n, g))| run_point(cfg, art, i, l, n, g)).collect());
    art.write("sweep.csv", &sweep_csv(cfg, &rows)?)?;
    Ok(rows)
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// One row per grid point with the report scalars, the branch-1 condition
/// numbers at full truncation and the fitted decay rate per scenario.
pub fn sweep_csv(cfg: &RunConfig, rows: &[SweepRow]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let mut header: Vec<String> = [
        "index",
        "lambda0",
        "N",
        "gamma",
        "exit_code",
        "error",
        "lambda",
        "growth_bound",
        "tb_residual",
        "opeq_residual",
        "spectrum_match_error",
        "sup_x",
        "trend_ratio",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(cfg.r_list.iter().map(|r| format!("kappa_r{r}")));
    header.extend(cfg.scenarios.iter().map(|s| format!("mu_hat_{}", s.name)));
    let csv_err = |e: csv::Error| CliError::Core(Error::InvalidInput(format!("csv: {e}")));
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let rep = row.report.as_ref();
        let b1 = rep.and_then(|r| r.branches.first());
        let n_used = b1.map(|b| b.n).or(row.n);
        let mut rec =
            vec![
                row.index.to_string(),
                format_float(row.lambda0),
                n_used.map(|n| n.to_string()).unwrap_or_default(),
                opt_float(row.gamma),
                row.exit_code.to_string(),
                row.error.clone().unwrap_or_default(),
                opt_float(rep.map(|r| r.lambda)),
                opt_float(rep.map(|r| r.growth_bound)),
                opt_float(rep.map(|r| r.tb_residual)),
                opt_float(rep.map(|r| r.opeq_residual)),
                opt_float(rep.map(|r| r.spectrum_match_error)),
                opt_float(rep.map(|r| {
                    r.branches.iter().filter_map(|b| b.gain_trend.as_ref().map(|g| g.sup_x)).fold(0.0, f64::max)
                })),
                opt_float(b1.and_then(|b| b.gain_trend.as_ref().map(|g| g.ratio))),
            ];
        for &r in &cfg.r_list {
            let k = b1.and_then(|b| b.conditioning.iter().find(|c| c.r == r && c.n == b.n).map(|c| c.kappa));
            rec.push(opt_float(k));
        }
        for s in &cfg.scenarios {
            let mu = rep
                .and_then(|r| r.decay.as_ref())
                .and_then(|d| d.iter().find(|x| x.name == s.name))
                .and_then(|x| x.fit.map(|f| f.mu_hat));
            rec.push(opt_float(mu));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Core(Error::InvalidInput(format!("csv: {e}"))))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
