//! The pipeline stages behind each subcommand and the artifact layout.

use std::path::{Path, PathBuf};

use fredstab::canonical::{canonical_hash, to_canonical_string};
use fredstab::diagnostics::{
    compactness_proxy, decay_plot, make_report, DiagnosticsReport, ReportInputs, ScenarioSummary,
};
use fredstab::simulate::{
    burgers_basin, burgers_scaled, fit_decay, simulate_burgers, simulate_closed_loop, state_norm, uniform_times,
    BurgersInitial, Fourier, Integrator, SimulationTrace,
};
use fredstab::spectral::{
    admissible_interval, verify_branch, IntervalConvention, SpectralSystem, SystemDoc, VerifyOptions,
};
use fredstab::synthesis::{
    normalization_residual, select_shift, solve_gains_direct, synthesize, FeedbackLaw, IterativeOptions, LawDoc, Method,
};
use fredstab::transform::{
    assemble_system_transform, build_system_transform, conditioning, transform_matrix, BranchTransform, TransformDoc,
};
use fredstab::{Cx, Error, ErrorClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{read_text, InitialSpec, MethodChoice, RunConfig, Scenario};

type C = Cx<f64>;

/// Residual gate for `||Tb - b||` and the operator equality.
pub const RESIDUAL_GATE: f64 = 1e-8;
/// Largest tolerated gap between stored and recomputed quantities.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Assumption(String),
    Gate(String),
    Mismatch(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Input => 1,
                ErrorClass::Assumption => 2,
                ErrorClass::Solver => 3,
                ErrorClass::Integrator => 4,
            },
            CliError::Assumption(_) => 2,
            CliError::Gate(_) => 3,
            CliError::Mismatch(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Assumption(_) => "assumption_verdict",
            CliError::Gate(_) => "residual_gate",
            CliError::Mismatch(_) => "verify_mismatch",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Assumption(m) | CliError::Gate(m) | CliError::Mismatch(m) => m.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let doc = serde_json::json!({
            "error": { "kind": self.kind(), "message": self.message(), "exit_code": self.exit_code() }
        });
        doc.to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

// ----- artifact directory ---------------------------------------------------

pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    pub fn write(&self, rel: &str, text: &str) -> CliResult<()> {
        let p = self.path(rel);
        let io = |source| Error::Io { path: p.display().to_string(), source };
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        std::fs::write(&p, text).map_err(io)?;
        Ok(())
    }

    pub fn write_json<S: Serialize>(&self, rel: &str, value: &S) -> CliResult<()> {
        let mut text = to_canonical_string(value)?;
        text.push('\n');
        self.write(rel, &text)
    }

    pub fn read_json<D: serde::de::DeserializeOwned>(&self, rel: &str) -> CliResult<D> {
        let p = self.path(rel);
        let text = read_text(&p)?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", p.display())).into())
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.path(rel).exists()
    }

    fn write_report(&self, report: &DiagnosticsReport) -> CliResult<()> {
        self.write("report.json", &(report.to_canonical_json()? + "\n"))?;
        for (name, text) in report.csv_tables()? {
            self.write(&format!("tables/{name}"), &text)?;
        }
        for (name, text) in report.svg_plots() {
            self.write(&format!("plots/{name}"), &text)?;
        }
        Ok(())
    }
}

// ----- synthesize -----------------------------------------------------------

pub struct Synthesis {
    pub system: SpectralSystem<f64>,
    pub law: FeedbackLaw<f64>,
    pub transforms: Vec<BranchTransform<f64>>,
    pub report: DiagnosticsReport,
    /// Largest relative gap between direct and iterative `x` (method `both`).
    pub method_gap: Option<f64>,
}

fn relative_gap(a: &[C], b: &[C]) -> f64 {
    let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// `r` values inside the admissible interval of every branch.
fn admissible_r(system: &SpectralSystem<f64>, cfg: &RunConfig) -> Vec<f64> {
    cfg.r_list
        .iter()
        .copied()
        .filter(|&r| {
            system.branches.iter().all(|b| {
                let (lo, hi) = admissible_interval(b.alpha, b.gamma, b.beta, cfg.interval_convention);
                r > lo && r < hi
            })
        })
        .collect()
}

pub fn config_hash(cfg: &RunConfig) -> CliResult<String> {
    Ok(canonical_hash(cfg)?)
}

/// Shift selection, gain synthesis and transform certification. Residual
/// gates are checked by the caller so artifacts can be written first.
pub fn run_synthesis(cfg: &RunConfig) -> CliResult<Synthesis> {
    let system = cfg.build_system()?;
    for b in &system.branches {
        let v = verify_branch(b, &VerifyOptions::default())?;
        if !v.all_ok() {
            let failed: Vec<&str> = [(v.growth.ok, "growth"), (v.gap.ok, "gap"), (v.control.ok, "control")]
                .iter()
                .filter(|(ok, _)| !ok)
                .map(|(_, n)| *n)
                .collect();
            return Err(CliError::Assumption(format!("branch {}: {} condition(s) fail", b.index, failed.join(", "))));
        }
    }
    let lambda = select_shift(&system, cfg.lambda0, cfg.delta, None)?.lambda;
    let opts = IterativeOptions { acceleration: cfg.acceleration, ..Default::default() };
    let (law, method_gap) = match cfg.method {
        MethodChoice::Direct => (synthesize(&system, lambda, Method::Direct, &opts)?, None),
        MethodChoice::Iterative => (synthesize(&system, lambda, Method::Iterative, &opts)?, None),
        MethodChoice::Both => {
            let d = synthesize(&system, lambda, Method::Direct, &opts)?;
            let it = synthesize(&system, lambda, Method::Iterative, &opts)?;
            let gap = d
                .branches
                .iter()
                .zip(&it.branches)
                .map(|(a, b)| relative_gap(&a.products_x, &b.products_x))
                .fold(0.0, f64::max);
            if gap > VERIFY_TOL {
                return Err(CliError::Gate(format!("direct and iterative gains differ by {gap:e}")));
            }
            (d, Some(gap))
        }
    };
    let transforms = build_system_transform(&system, &law, &admissible_r(&system, cfg), cfg.interval_convention)?;
    assemble_system_transform(&transforms)?;
    let inputs = ReportInputs {
        config_hash: Some(config_hash(cfg)?),
        system: Some(&system),
        law: Some(&law),
        r_list: cfg.r_list.clone(),
        convention: cfg.interval_convention,
        conditioning: true,
        decay: None,
    };
    let report = make_report(&inputs)?;
    Ok(Synthesis { system, law, transforms, report, method_gap })
}

pub fn check_gates(s: &Synthesis) -> CliResult<()> {
    for t in &s.transforms {
        if !(t.tb_residual <= RESIDUAL_GATE) || !(t.opeq_residual <= RESIDUAL_GATE) {
            return Err(CliError::Gate(format!(
                "branch {}: tb residual {:e}, operator residual {:e} exceed {RESIDUAL_GATE:e}",
                t.index, t.tb_residual, t.opeq_residual
            )));
        }
    }
    Ok(())
}

pub fn write_synthesis(art: &Artifacts, s: &Synthesis) -> CliResult<()> {
    art.write_json("system.json", &s.system.to_doc())?;
    art.write_json("law.json", &s.law.to_doc())?;
    art.write_json("transform.json", &TransformDoc::from_transforms(s.law.lambda, &s.transforms))?;
    art.write_report(&s.report)
}

#[derive(Serialize)]
pub struct SynthesisSummary {
    pub command: &'static str,
    pub out: String,
    pub lambda: f64,
    pub tb_residual: f64,
    pub opeq_residual: f64,
    pub spectrum_match_error: f64,
    pub method_gap: Option<f64>,
}

pub fn cmd_synthesize(cfg: &RunConfig, art: &Artifacts) -> CliResult<SynthesisSummary> {
    let s = run_synthesis(cfg)?;
    write_synthesis(art, &s)?;
    check_gates(&s)?;
    Ok(SynthesisSummary {
        command: "synthesize",
        out: art.dir.display().to_string(),
        lambda: s.law.lambda,
        tb_residual: s.report.tb_residual,
        opeq_residual: s.report.opeq_residual,
        spectrum_match_error: s.report.spectrum_match_error,
        method_gap: s.method_gap,
    })
}

// ----- verify ---------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub stored: Option<f64>,
    pub recomputed: f64,
    pub deviation: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchProxies {
    pub i: usize,
    pub cross_sum_max_ratio: Option<f64>,
    pub compactness_eps: Option<f64>,
    pub compactness_proxy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub command: &'static str,
    pub ok: bool,
    pub checks: Vec<VerifyCheck>,
    pub proxies: Vec<BranchProxies>,
}

pub struct Loaded {
    pub system: SpectralSystem<f64>,
    pub law_doc: LawDoc,
    pub law: FeedbackLaw<f64>,
    pub transform_doc: TransformDoc,
}

pub fn load_artifacts(art: &Artifacts) -> CliResult<Loaded> {
    let sys_doc: SystemDoc = art.read_json("system.json")?;
    let system = SpectralSystem::from_doc(&sys_doc)?;
    let law_doc: LawDoc = art.read_json("law.json")?;
    let law = FeedbackLaw::from_doc(&law_doc, &system)?;
    let transform_doc: TransformDoc = art.read_json("transform.json")?;
    if transform_doc.branches.len() != system.m() {
        return Err(Error::Schema("transform.json does not match system.json".into()).into());
    }
    Ok(Loaded { system, law_doc, law, transform_doc })
}

fn check(name: String, stored: Option<f64>, recomputed: f64, deviation: f64) -> VerifyCheck {
    VerifyCheck { name, stored, recomputed, deviation, ok: deviation <= VERIFY_TOL }
}

/// Recomputes every certified quantity from `system.json` and the stored gains.
pub fn run_verify(l: &Loaded, convention: IntervalConvention) -> CliResult<VerifyOutcome> {
    let lambda = l.law.lambda;
    let mut checks = Vec::new();
    let x_gap = l.law_doc.stored_x_mismatch(&l.system)?;
    checks.push(check("stored_x_consistency".into(), None, x_gap, x_gap));
    if (l.transform_doc.lambda - lambda).abs() > VERIFY_TOL * lambda.abs().max(1.0) {
        checks.push(check(
            "transform_lambda".into(),
            Some(l.transform_doc.lambda),
            lambda,
            (l.transform_doc.lambda - lambda).abs(),
        ));
    }
    let mut proxies = Vec::new();
    for ((br, bl), td) in l.system.branches.iter().zip(&l.law.branches).zip(&l.transform_doc.branches) {
        let i = br.index;
        let fresh = solve_gains_direct(br, lambda)?;
        checks.push(check(format!("branch{i}_gains"), None, 0.0, relative_gap(&fresh.gains, &bl.gains)));
        let tb_norm = normalization_residual(br, lambda, &bl.products_x);
        checks.push(check(format!("branch{i}_normalization"), Some(bl.tb_residual), tb_norm, tb_norm));

        let t = transform_matrix(br, bl, lambda)?;
        let stored = td.matrix.to_matrix::<f64>()?;
        let m_gap = if stored.rows() == t.rows() && stored.cols() == t.cols() {
            relative_gap(t.as_slice(), stored.as_slice())
        } else {
            f64::INFINITY
        };
        checks.push(check(format!("branch{i}_transform_matrix"), None, 0.0, m_gap));

        let bt = fredstab::build_transform(br, bl, lambda)?;
        checks.push(check(
            format!("branch{i}_tb_residual"),
            Some(td.tb_residual),
            bt.tb_residual,
            bt.tb_residual.max((bt.tb_residual - td.tb_residual).abs()),
        ));
        checks.push(check(
            format!("branch{i}_opeq_residual"),
            Some(td.opeq_residual),
            bt.opeq_residual,
            bt.opeq_residual.max((bt.opeq_residual - td.opeq_residual).abs()),
        ));
        let cl = fredstab::closed_loop_matrix(br, bl)?;
        let target: Vec<C> = br.eigenvalues.iter().map(|z| z - lambda).collect();
        let sm = fredstab::spectrum_match_error(&cl.spectrum, &target);
        checks.push(check(format!("branch{i}_spectrum_match"), None, sm, sm));
        for &[r, kappa] in &td.conditioning {
            let k = conditioning(br, &bt.t, r, convention)?;
            checks.push(check(format!("branch{i}_kappa_r{r}"), Some(kappa), k, (k - kappa).abs() / k.max(1.0)));
        }

        let eps_top = ((br.alpha - 1.0) / 2.0).min(br.alpha - 0.5);
        let eps = (eps_top > 0.0).then_some(eps_top / 2.0);
        proxies.push(BranchProxies {
            i,
            cross_sum_max_ratio: fredstab::synthesis::cross_sum_probe(br, lambda, 0.0).ok().and_then(|p| p.max_ratio),
            compactness_eps: eps,
            compactness_proxy: eps.and_then(|e| compactness_proxy(br, lambda, 0.0, e).ok()),
        });
    }
    let ok = checks.iter().all(|c| c.ok);
    Ok(VerifyOutcome { command: "verify", ok, checks, proxies })
}

fn regenerate_report(cfg: Option<&RunConfig>, art: &Artifacts, l: &Loaded) -> CliResult<DiagnosticsReport> {
    let decay: Option<Vec<ScenarioSummary>> =
        if art.exists("decay.json") { Some(art.read_json("decay.json")?) } else { None };
    let previous: Option<DiagnosticsReport> = if art.exists("report.json") {
        DiagnosticsReport::from_json(&read_text(&art.path("report.json"))?).ok()
    } else {
        None
    };
    let r_list = match cfg {
        Some(c) => c.r_list.clone(),
        None => {
            let mut rs: Vec<f64> =
                l.transform_doc.branches.iter().flat_map(|b| b.conditioning.iter().map(|c| c[0])).collect();
            rs.dedup();
            if rs.is_empty() {
                vec![0.0]
            } else {
                rs
            }
        }
    };
    let hash = match cfg {
        Some(c) => Some(config_hash(c)?),
        None => previous.map(|p| p.config_hash),
    };
    let inputs = ReportInputs {
        config_hash: hash,
        system: Some(&l.system),
        law: Some(&l.law),
        r_list,
        convention: cfg.map(|c| c.interval_convention).unwrap_or_default(),
        conditioning: true,
        decay,
    };
    Ok(make_report(&inputs)?)
}

pub fn cmd_verify(cfg: Option<&RunConfig>, art: &Artifacts) -> CliResult<VerifyOutcome> {
    let l = load_artifacts(art)?;
    let outcome = run_verify(&l, cfg.map(|c| c.interval_convention).unwrap_or_default())?;
    art.write_json("verify.json", &outcome)?;
    if !outcome.ok {
        let bad: Vec<&str> = outcome.checks.iter().filter(|c| !c.ok).map(|c| c.name.as_str()).collect();
        return Err(CliError::Mismatch(format!("recomputation disagrees with stored artifacts: {}", bad.join(", "))));
    }
    let report = regenerate_report(cfg, art, &l)?;
    art.write_report(&report)?;
    Ok(outcome)
}

// ----- report ---------------------------------------------------------------

pub fn cmd_report(cfg: Option<&RunConfig>, art: &Artifacts) -> CliResult<DiagnosticsReport> {
    let l = load_artifacts(art)?;
    let report = regenerate_report(cfg, art, &l)?;
    art.write_report(&report)?;
    Ok(report)
}

// ----- simulate -------------------------------------------------------------

fn modal_initial(system: &SpectralSystem<f64>, spec: &InitialSpec) -> CliResult<Vec<Vec<C>>> {
    let dims: Vec<usize> = system.branches.iter().map(|b| b.len()).collect();
    match spec {
        InitialSpec::Random { seed, decay } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok(dims
                .iter()
                .map(|&n| (1..=n).map(|k| C::new(rng.gen_range(-1.0..=1.0) / (k as f64).powf(*decay), 0.0)).collect())
                .collect())
        }
        InitialSpec::Mode { branch, n } => {
            if *branch == 0 || *branch > dims.len() || *n == 0 || *n > dims[branch - 1] {
                return Err(Error::InvalidInput(format!("mode ({branch}, {n}) is outside the truncated system")).into());
            }
            let mut v: Vec<Vec<C>> = dims.iter().map(|&d| vec![C::new(0.0, 0.0); d]).collect();
            v[branch - 1][n - 1] = C::new(1.0, 0.0);
            Ok(v)
        }
        InitialSpec::Modal(m) => {
            if m.len() != dims.len() || m.iter().zip(&dims).any(|(v, &d)| v.len() != d) {
                return Err(Error::Dimension(format!("modal u0 must have branch lengths {dims:?}")).into());
            }
            Ok(m.iter().map(|v| v.iter().map(|&[re, im]| C::new(re, im)).collect()).collect())
        }
        InitialSpec::Physical(_) => Err(Error::InvalidInput("physical u0 needs a nonlinear scenario".into()).into()),
    }
}

fn burgers_shape(system: &SpectralSystem<f64>, spec: &InitialSpec) -> CliResult<Vec<Vec<C>>> {
    match spec {
        InitialSpec::Physical(samples) => {
            let n = system.branches[0].len();
            let (sine, cosine) = Fourier::from_samples(n, samples)?.to_modal(n);
            Ok(vec![sine, cosine])
        }
        other => modal_initial(system, other),
    }
}

pub struct ScenarioRun {
    pub summary: ScenarioSummary,
    pub trace: SimulationTrace<f64>,
}

fn run_scenario(system: &SpectralSystem<f64>, law: &FeedbackLaw<f64>, s: &Scenario) -> CliResult<ScenarioRun> {
    let times = uniform_times(s.t_end, s.samples);
    let window = s.window.map(|[a, b]| (a, b));
    let r_list = [s.r];
    let mut summary = ScenarioSummary {
        name: s.name.clone(),
        integrator: String::new(),
        r: s.r,
        fit: None,
        error: None,
        realness_defect: None,
        cross_check_deviation: None,
        basin: None,
    };
    let trace = if s.nonlinear {
        if s.integrator.is_some_and(|i| i != Integrator::ImexEuler) {
            return Err(Error::InvalidInput(format!("scenario {}: nonlinear runs use imex_euler", s.name)).into());
        }
        let shape = burgers_shape(system, &s.u0)?;
        let n = shape[0].len();
        let u0 = match (s.norm, &s.u0) {
            (Some(norm), _) => burgers_scaled(n, &shape, norm)?,
            (None, InitialSpec::Physical(samples)) => BurgersInitial::Physical(samples.clone()),
            (None, _) => BurgersInitial::Modal(shape.clone()),
        };
        let trace = simulate_burgers(system, Some(law), &u0, &times, s.dt, &r_list)?;
        summary.realness_defect = trace.realness_defect;
        if let Some(b) = &s.basin {
            summary.basin =
                Some(burgers_basin(system, law, &shape, b.lo, b.hi, b.bisections, s.t_end, s.dt, s.samples)?);
        }
        trace
    } else {
        let mut u0 = modal_initial(system, &s.u0)?;
        if let Some(norm) = s.norm {
            let cur = state_norm(&u0, 0.0);
            if !(cur > 0.0) {
                return Err(Error::InvalidInput(format!("scenario {}: cannot rescale a zero u0", s.name)).into());
            }
            u0.iter_mut().flatten().for_each(|z| *z *= norm / cur);
        }
        let integ = s.integrator.unwrap_or(Integrator::SemigroupExact);
        let trace = simulate_closed_loop(system, law, &u0, &times, integ, s.dt, &r_list)?;
        if s.cross_check {
            let other = if integ == Integrator::Rk4 { Integrator::SemigroupExact } else { Integrator::Rk4 };
            let alt = simulate_closed_loop(system, law, &u0, &times, other, s.dt, &r_list)?;
            summary.cross_check_deviation = Some(trace.max_relative_deviation(&alt)?);
        }
        trace
    };
    summary.integrator = trace.integrator.as_str().to_string();
    match fit_decay(&trace, s.r, window) {
        Ok(f) => summary.fit = Some(f),
        Err(e) => summary.error = Some(e.to_string()),
    }
    Ok(ScenarioRun { summary, trace })
}

pub fn run_scenarios(
    system: &SpectralSystem<f64>,
    law: &FeedbackLaw<f64>,
    cfg: &RunConfig,
) -> CliResult<Vec<ScenarioRun>> {
    cfg.scenarios.iter().map(|s| run_scenario(system, law, s)).collect()
}

pub fn write_scenarios(art: &Artifacts, runs: &[ScenarioRun]) -> CliResult<()> {
    let mut curves = Vec::new();
    for run in runs {
        let name = &run.summary.name;
        art.write(&format!("traces/{name}.csv"), &run.trace.to_wide_csv()?)?;
        art.write(&format!("traces/{name}_states.csv"), &run.trace.to_long_csv()?)?;
        let norms = run.trace.norm_series(run.summary.r);
        curves.push((name.clone(), run.trace.times.clone(), norms));
    }
    if !curves.is_empty() {
        art.write("plots/decay.svg", &decay_plot(&curves))?;
    }
    let summaries: Vec<&ScenarioSummary> = runs.iter().map(|r| &r.summary).collect();
    art.write_json("decay.json", &summaries)
}

#[derive(Serialize)]
pub struct SimulateSummary {
    pub command: &'static str,
    pub out: String,
    pub scenarios: Vec<ScenarioSummary>,
}

pub fn cmd_simulate(cfg: &RunConfig, art: &Artifacts) -> CliResult<SimulateSummary> {
    if cfg.scenarios.is_empty() {
        return Err(Error::InvalidInput("config has no scenarios".into()).into());
    }
    let l = load_artifacts(art)?;
    let outcome = run_verify(&l, cfg.interval_convention)?;
    if !outcome.ok {
        return Err(CliError::Mismatch("artifacts fail verification; rerun synthesize".into()));
    }
    let runs = run_scenarios(&l.system, &l.law, cfg)?;
    write_scenarios(art, &runs)?;
    let report = regenerate_report(Some(cfg), art, &l)?;
    art.write_report(&report)?;
    Ok(SimulateSummary {
        command: "simulate",
        out: art.dir.display().to_string(),
        scenarios: runs.into_iter().map(|r| r.summary).collect(),
    })
}

/// Output directory: `--out`, then `OUTPUT_DIR`, then the config, then `out`.
pub fn resolve_out(flag: Option<&Path>, cfg: Option<&RunConfig>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os("OUTPUT_DIR").filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    cfg.and_then(|c| c.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
}
