//! Reports: assumption verdicts, transform certificates, gain and
//! conditioning profiles, compactness proxies and decay summaries, rendered
//! as canonical JSON, CSV tables and standalone SVG plots.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::canonical::{csv_err, csv_finish, csv_writer, format_float, to_canonical_string};
use crate::error::{Error, Result};
use crate::linalg::power_norm;
use crate::scalar::{powi_idx, Cx, Real};
use crate::simulate::{BasinReport, DecayFit};
use crate::spectral::{
    classify_controllability, verify_branch, AssumptionVerdict, Classification, IntervalConvention, SpectralBranch,
    SpectralSystem, VerifyOptions,
};
use crate::synthesis::{build_s, cross_sum_probe, BranchLaw, FeedbackLaw};
use crate::transform::{
    closed_loop_matrix, conditioning_profile, operator_equality_residual, spectrum_match_error, target_spectrum,
    tb_residual, transform_matrix,
};

pub const REPORT_SCHEMA: &str = "fredstab-report/1";

/// Power-iteration steps for operator-norm proxies.
pub const POWER_STEPS: usize = 50;

/// `||W_{r+eps} S_c W_r^{-1}||_2`, estimated by power iteration; stays bounded
/// in `N` when `S_c` maps `H^r` compactly into itself. Requires
/// `0 < eps < min((alpha - 1)/2, alpha + r - 1/2)`.
pub fn compactness_proxy<T: Real>(branch: &SpectralBranch<T>, lambda: T, r: T, eps: T) -> Result<T> {
    let half = T::lit(0.5);
    let cap = ((branch.alpha - T::one()) * half).min(branch.alpha + r - half);
    if !(eps > T::zero() && eps < cap) {
        return Err(Error::OutOfRange { what: "eps", value: eps.to_f64_lossy(), low: 0.0, high: cap.to_f64_lossy() });
    }
    let s = build_s(branch, lambda)?;
    let n = branch.len();
    let left: Vec<T> = (1..=n).map(|k| powi_idx(k, r + eps)).collect();
    let right: Vec<T> = (1..=n).map(|k| powi_idx(k, -r)).collect();
    Ok(power_norm(&s.s_c.scale_rows_cols(&left, &right), POWER_STEPS))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainTrend {
    pub sup_x: f64,
    pub sup_k: f64,
    /// `median |x_n - lambda|` over `n > 3N/4` divided by the same over `n <= N/4`.
    pub ratio: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Boundedness evidence for `x_n = lambda + k_n`; needs `N >= 16`.
pub fn gain_trend<T: Real>(law: &BranchLaw<T>, lambda: T) -> Result<GainTrend> {
    let n = law.len();
    if n < 16 {
        return Err(Error::InvalidInput(format!("gain trend needs N >= 16 (got {n})")));
    }
    let k: Vec<f64> = law.products_x.iter().map(|x| (*x - crate::scalar::cre(lambda)).norm().to_f64_lossy()).collect();
    let first: Vec<f64> = k[..n / 4].to_vec();
    let last: Vec<f64> = k[(3 * n) / 4..].to_vec();
    let lo = median(first);
    let ratio = if lo > 0.0 { median(last) / lo } else { f64::INFINITY };
    Ok(GainTrend { sup_x: law.sup_x().to_f64_lossy(), sup_k: k.iter().copied().fold(0.0, f64::max), ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictDoc {
    pub all_ok: bool,
    pub growth_ok: bool,
    pub alpha_hat: Option<f64>,
    pub growth_ratio: f64,
    pub gap_ok: bool,
    pub gap_c_hat: f64,
    pub control_ok: bool,
    pub beta_hat: Option<f64>,
    pub gamma_hat: Option<f64>,
}

impl VerdictDoc {
    pub fn from_verdict<T: Real>(v: &AssumptionVerdict<T>) -> Self {
        Self {
            all_ok: v.all_ok(),
            growth_ok: v.growth.ok,
            alpha_hat: v.growth.alpha_hat.map(|a| a.to_f64_lossy()),
            growth_ratio: v.growth.ratio.to_f64_lossy(),
            gap_ok: v.gap.ok,
            gap_c_hat: v.gap.c_hat.to_f64_lossy(),
            control_ok: v.control.ok,
            beta_hat: v.control.beta_hat.map(|a| a.to_f64_lossy()),
            gamma_hat: v.control.gamma_hat.map(|a| a.to_f64_lossy()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditioningEntry {
    pub n: usize,
    pub r: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchReport {
    pub i: usize,
    pub n: usize,
    pub verdict: Option<VerdictDoc>,
    pub tb_residual: f64,
    pub opeq_residual: f64,
    pub spectrum_match_error: f64,
    pub rank_one_defect: f64,
    pub gain_trend: Option<GainTrend>,
    pub abs_x: Vec<f64>,
    pub open_loop_spectrum: Vec<[f64; 2]>,
    pub closed_loop_spectrum: Vec<[f64; 2]>,
    pub cross_sum_max_ratio: Option<f64>,
    pub classification: Option<Classification>,
    pub conditioning: Vec<ConditioningEntry>,
    /// `r` values outside the branch's admissible interval.
    pub rejected_r: Vec<f64>,
}

/// One simulated scenario in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSummary {
    pub name: String,
    pub integrator: String,
    pub r: f64,
    pub fit: Option<DecayFit>,
    pub error: Option<String>,
    pub realness_defect: Option<f64>,
    pub cross_check_deviation: Option<f64>,
    pub basin: Option<BasinReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsReport {
    pub schema: String,
    pub config_hash: String,
    pub label: String,
    pub lambda: f64,
    pub method: String,
    /// Open-loop growth bound `max Re lambda_n`.
    pub growth_bound: f64,
    pub tb_residual: f64,
    pub opeq_residual: f64,
    pub spectrum_match_error: f64,
    pub branches: Vec<BranchReport>,
    pub decay: Option<Vec<ScenarioSummary>>,
    /// Optional sections that were not produced.
    pub absent: Vec<String>,
}

/// Inputs for [`make_report`]; `system` and `law` are mandatory.
pub struct ReportInputs<'a, T: Real> {
    pub config_hash: Option<String>,
    pub system: Option<&'a SpectralSystem<T>>,
    pub law: Option<&'a FeedbackLaw<T>>,
    pub r_list: Vec<T>,
    pub convention: IntervalConvention,
    pub conditioning: bool,
    pub decay: Option<Vec<ScenarioSummary>>,
}

impl<'a, T: Real> Default for ReportInputs<'a, T> {
    fn default() -> Self {
        Self {
            config_hash: None,
            system: None,
            law: None,
            r_list: vec![T::zero()],
            convention: IntervalConvention::Symmetric,
            conditioning: true,
            decay: None,
        }
    }
}

fn pairs<T: Real>(v: &[Cx<T>]) -> Vec<[f64; 2]> {
    crate::spectral::to_pairs(v)
}

fn branch_report<T: Real>(
    branch: &SpectralBranch<T>,
    law: &BranchLaw<T>,
    lambda: T,
    inputs: &ReportInputs<'_, T>,
) -> Result<BranchReport> {
    let t = transform_matrix(branch, law, lambda)?;
    let cl = closed_loop_matrix(branch, law)?;
    let verdict = verify_branch(branch, &VerifyOptions::default()).ok().map(|v| VerdictDoc::from_verdict(&v));
    let (lo, hi) = crate::spectral::admissible_interval(branch.alpha, branch.gamma, branch.beta, inputs.convention);
    let (ok_r, rejected): (Vec<T>, Vec<T>) = inputs.r_list.iter().partition(|&&r| r > lo && r < hi);
    let conditioning = if inputs.conditioning && !ok_r.is_empty() {
        conditioning_profile(branch, lambda, &ok_r, inputs.convention)?
            .into_iter()
            .map(|c| ConditioningEntry { n: c.n, r: c.r.to_f64_lossy(), kappa: c.kappa.to_f64_lossy() })
            .collect()
    } else {
        Vec::new()
    };
    let class_r = ok_r.first().copied().unwrap_or(T::zero());
    Ok(BranchReport {
        i: branch.index,
        n: branch.len(),
        verdict,
        tb_residual: tb_residual(&t, &branch.control_coeffs).to_f64_lossy(),
        opeq_residual: operator_equality_residual(&t, &cl.a_cl, branch, lambda).to_f64_lossy(),
        spectrum_match_error: spectrum_match_error(&cl.spectrum, &target_spectrum(branch, lambda)).to_f64_lossy(),
        rank_one_defect: cl.rank_one_defect.to_f64_lossy(),
        gain_trend: gain_trend(law, lambda).ok(),
        abs_x: law.products_x.iter().map(|x| x.norm().to_f64_lossy()).collect(),
        open_loop_spectrum: pairs(&branch.eigenvalues),
        closed_loop_spectrum: pairs(&cl.spectrum),
        cross_sum_max_ratio: cross_sum_probe(branch, lambda, T::zero())
            .ok()
            .and_then(|p| p.max_ratio)
            .map(|v| v.to_f64_lossy()),
        classification: classify_controllability(branch, class_r, inputs.convention).ok(),
        conditioning,
        rejected_r: rejected.iter().map(|r| r.to_f64_lossy()).collect(),
    })
}

/// Assembles the report. Fails with the names of missing mandatory inputs.
pub fn make_report<T: Real>(inputs: &ReportInputs<'_, T>) -> Result<DiagnosticsReport> {
    let mut missing = Vec::new();
    if inputs.system.is_none() {
        missing.push("system");
    }
    if inputs.law.is_none() {
        missing.push("law");
    }
    if !missing.is_empty() {
        return Err(Error::MissingSections(missing.join(", ")));
    }
    let (system, law) = (inputs.system.unwrap(), inputs.law.unwrap());
    if law.branches.len() != system.m() {
        return Err(Error::Dimension(format!("law has {} branches, system {}", law.branches.len(), system.m())));
    }
    let branches = system
        .branches
        .iter()
        .zip(&law.branches)
        .map(|(b, l)| branch_report(b, l, law.lambda, inputs))
        .collect::<Result<Vec<_>>>()?;
    let max = |f: fn(&BranchReport) -> f64| branches.iter().map(f).fold(0.0, f64::max);
    let mut absent = Vec::new();
    if inputs.decay.is_none() {
        absent.push("decay".to_string());
    }
    if !inputs.conditioning {
        absent.push("conditioning".to_string());
    }
    Ok(DiagnosticsReport {
        schema: REPORT_SCHEMA.to_string(),
        config_hash: inputs.config_hash.clone().unwrap_or_default(),
        label: system.label.clone(),
        lambda: law.lambda.to_f64_lossy(),
        method: format!("{:?}", law.method).to_lowercase(),
        growth_bound: system.growth_bound().to_f64_lossy(),
        tb_residual: max(|b| b.tb_residual),
        opeq_residual: max(|b| b.opeq_residual),
        spectrum_match_error: max(|b| b.spectrum_match_error),
        branches,
        decay: inputs.decay.clone(),
        absent,
    })
}

impl DiagnosticsReport {
    pub fn to_canonical_json(&self) -> Result<String> {
        to_canonical_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        if r.schema != REPORT_SCHEMA {
            return Err(Error::Schema(format!("unsupported report schema {:?}", r.schema)));
        }
        Ok(r)
    }

    /// CSV tables as `(file name, content)` pairs.
    pub fn csv_tables(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        let f = |v: f64| format_float(v);
        let of = |v: Option<f64>| v.map(format_float).unwrap_or_default();

        let mut w = csv_writer();
        w.write_record([
            "branch",
            "n",
            "tb_residual",
            "opeq_residual",
            "spectrum_match_error",
            "sup_x",
            "trend_ratio",
            "cross_sum_max_ratio",
            "regime",
        ])
        .map_err(csv_err)?;
        for b in &self.branches {
            w.write_record([
                b.i.to_string(),
                b.n.to_string(),
                f(b.tb_residual),
                f(b.opeq_residual),
                f(b.spectrum_match_error),
                of(b.gain_trend.map(|g| g.sup_x)),
                of(b.gain_trend.map(|g| g.ratio)),
                of(b.cross_sum_max_ratio),
                b.classification.as_ref().map(|c| format!("{:?}", c.regime)).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        out.push(("summary.csv".to_string(), csv_finish(w)?));

        let mut w = csv_writer();
        w.write_record(["branch", "n", "abs_x"]).map_err(csv_err)?;
        for b in &self.branches {
            for (k, x) in b.abs_x.iter().enumerate() {
                w.write_record([b.i.to_string(), (k + 1).to_string(), f(*x)]).map_err(csv_err)?;
            }
        }
        out.push(("gains.csv".to_string(), csv_finish(w)?));

        let mut w = csv_writer();
        w.write_record(["branch", "n", "r", "kappa"]).map_err(csv_err)?;
        for b in &self.branches {
            for c in &b.conditioning {
                w.write_record([b.i.to_string(), c.n.to_string(), f(c.r), f(c.kappa)]).map_err(csv_err)?;
            }
        }
        out.push(("conditioning.csv".to_string(), csv_finish(w)?));

        if let Some(decay) = &self.decay {
            let mut w = csv_writer();
            w.write_record(["scenario", "integrator", "r", "mu_hat", "c_hat", "r2", "t_start", "t_end", "error"])
                .map_err(csv_err)?;
            for s in decay {
                let fit = s.fit;
                w.write_record([
                    s.name.clone(),
                    s.integrator.clone(),
                    f(s.r),
                    of(fit.map(|x| x.mu_hat)),
                    of(fit.map(|x| x.c_hat)),
                    of(fit.map(|x| x.r2)),
                    of(fit.map(|x| x.window[0])),
                    of(fit.map(|x| x.window[1])),
                    s.error.clone().unwrap_or_default(),
                ])
                .map_err(csv_err)?;
            }
            out.push(("decay.csv".to_string(), csv_finish(w)?));
        }
        Ok(out)
    }

    /// SVG plots as `(file name, content)` pairs (the decay plot needs traces,
    /// see [`decay_plot`]).
    pub fn svg_plots(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let gains: Vec<Series> = self
            .branches
            .iter()
            .map(|b| Series {
                label: format!("branch {}", b.i),
                points: b.abs_x.iter().enumerate().map(|(k, x)| (k as f64 + 1.0, *x)).collect(),
            })
            .collect();
        out.push(("gain_profile.svg".to_string(), svg_plot("Gain profile |x_n|", "n", "|x_n|", &gains, false, false)));

        let mut spec = Vec::new();
        for b in &self.branches {
            spec.push(Series {
                label: format!("open loop {}", b.i),
                points: b.open_loop_spectrum.iter().map(|p| (p[0], p[1])).collect(),
            });
            spec.push(Series {
                label: format!("closed loop {}", b.i),
                points: b.closed_loop_spectrum.iter().map(|p| (p[0], p[1])).collect(),
            });
        }
        out.push(("spectrum_shift.svg".to_string(), svg_plot("Spectrum shift", "Re", "Im", &spec, false, true)));

        let mut cond = Vec::new();
        for b in &self.branches {
            let mut rs: Vec<f64> = b.conditioning.iter().map(|c| c.r).collect();
            rs.dedup();
            rs.sort_by(|a, c| a.partial_cmp(c).unwrap_or(std::cmp::Ordering::Equal));
            rs.dedup();
            for r in rs {
                cond.push(Series {
                    label: format!("branch {} r={r}", b.i),
                    points: b.conditioning.iter().filter(|c| c.r == r).map(|c| (c.n as f64, c.kappa)).collect(),
                });
            }
        }
        if !cond.is_empty() {
            out.push((
                "conditioning.svg".to_string(),
                svg_plot("Conditioning vs N", "N", "kappa_r", &cond, true, false),
            ));
        }
        out
    }
}

/// Named point set for [`svg_plot`].
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Standalone SVG 1.1 line or scatter plot; the data is repeated in a
/// comment block. `log_y` plots `log10(y)` and drops nonpositive values.
pub fn svg_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_y: bool, scatter: bool) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || *y > 0.0))
                .map(|(x, y)| (*x, ty(*y)))
                .collect()
        })
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 <= 0.0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, "<!-- data");
    for (ser, p) in series.iter().zip(&pts) {
        let _ = writeln!(s, "series: {}", ser.label.replace("--", "- -"));
        for (x, y) in p {
            let _ = writeln!(s, "{},{}", format_float(*x), format_float(if log_y { 10f64.powf(*y) } else { *y }));
        }
    }
    let _ = writeln!(s, "-->");
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        w - 2.0 * m,
        h - 2.0 * m
    );
    let _ = writeln!(s, r#"<text x="{}" y="30" font-size="16" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 15.0,
        escape(xlabel)
    );
    let ylab = if log_y { format!("log10 {ylabel}") } else { ylabel.to_string() };
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(&ylab)
    );
    for (k, (x, y)) in [(x0, y0), (x1, y1)].iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">{x:.3e}</text>"#,
            sx(*x),
            h - m + 14.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{y:.3e}</text>"#,
            m - 4.0,
            sy(*y) + if k == 0 { 0.0 } else { 8.0 }
        );
    }
    for (k, (ser, p)) in series.iter().zip(&pts).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if scatter {
            for (x, y) in p {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(*x), sy(*y));
            }
        } else if !p.is_empty() {
            let path: Vec<String> = p.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        }
        let ly = m + 14.0 * (k as f64 + 1.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" font-size="11" fill="{color}">{}</text>"#,
            w - m - 150.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Semilog decay plot from `(name, times, norms)` triples.
pub fn decay_plot(traces: &[(String, Vec<f64>, Vec<f64>)]) -> String {
    let series: Vec<Series> = traces
        .iter()
        .map(|(name, t, v)| Series { label: name.clone(), points: t.iter().copied().zip(v.iter().copied()).collect() })
        .collect();
    svg_plot("Decay", "t", "||u(t)||", &series, true, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::heat_torus_unit;
    use crate::scalar::cre;
    use crate::synthesis::{synthesize, Method};

    #[test]
    fn compactness_interval_is_open() {
        let sys = heat_torus_unit::<f64>(16).unwrap();
        let b = &sys.branches[0];
        assert!(compactness_proxy(b, 2.5, 0.0, 0.5).is_err());
        assert!(compactness_proxy(b, 2.5, 0.0, 0.0).is_err());
        assert!(compactness_proxy(b, 2.5, 0.0, 0.4).unwrap() > 0.0);
        let single = SpectralBranch::new(1, vec![cre(-1.0)], vec![cre(1.0)], 2.0, 0.0, 0.0).unwrap();
        assert_eq!(compactness_proxy(&single, 2.5, 0.0, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn report_round_trip_and_missing_sections() {
        let sys = heat_torus_unit::<f64>(16).unwrap();
        let law = synthesize(&sys, 2.5, Method::Direct, &Default::default()).unwrap();
        let inputs =
            ReportInputs { system: Some(&sys), law: Some(&law), config_hash: Some("abc".into()), ..Default::default() };
        let rep = make_report(&inputs).unwrap();
        assert_eq!(rep.absent, vec!["decay".to_string()]);
        let text = rep.to_canonical_json().unwrap();
        let back = DiagnosticsReport::from_json(&text).unwrap();
        assert_eq!(back, rep);
        assert_eq!(back.to_canonical_json().unwrap(), text);
        let err = make_report::<f64>(&ReportInputs::default()).unwrap_err();
        assert_eq!(err.to_string(), "missing report section(s): system, law");
        assert!(matches!(DiagnosticsReport::from_json("{\"schema\": 3"), Err(Error::Schema(_))));
        let tables = rep.csv_tables().unwrap();
        assert!(tables[0].1.starts_with("branch,n,tb_residual"));
        assert!(rep.svg_plots().iter().all(|(_, s)| s.contains("</svg>")));
    }

    #[test]
    fn gain_trend_needs_sixteen_modes() {
        let sys = heat_torus_unit::<f64>(8).unwrap();
        let law = synthesize(&sys, 2.5, Method::Direct, &Default::default()).unwrap();
        assert!(gain_trend(&law.branches[0], 2.5).is_err());
    }
}
