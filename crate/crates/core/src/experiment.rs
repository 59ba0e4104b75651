//! Monte Carlo evaluation of the schedulers over random networks.
//!
//! One network is drawn per experiment. For every `(m, N_f)` cell a retired
//! set is drawn, then each of `K` iterations draws fresh flows and runs every
//! enabled method on that same instance. Per-iteration seeds depend only on
//! `(master_seed, m, N_f, k)`, so results do not depend on thread count or
//! scheduling order.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::TimingsMs;
use crate::model::{build_instance, ReplacementInstance};
use crate::netgen::{generate_network, sample_flows, sample_retired, NetworkParams, UavNetwork};
use crate::sched::{
    exact_schedule_dp_capped, heuristic_schedule, random_schedule, Method, SolverResult, DEFAULT_EXACT_CAP,
};

/// Normal quantile for a two-sided 95% interval.
pub const Z_95: f64 = 1.96;

pub const CSV_HEADER: &str = "m,n_f,method,k,mean_energy_j,se_j,ci_lo_j,ci_hi_j,mean_runtime_s";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    /// Full result including per-iteration samples.
    pub json: Option<PathBuf>,
    pub energy_svg: Option<PathBuf>,
    pub runtime_svg: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkParams,
    pub timings: TimingsMs,
    pub n_flows_list: Vec<usize>,
    pub m_list: Vec<usize>,
    /// Monte Carlo iterations `K` per cell.
    pub iterations: usize,
    pub methods: Vec<Method>,
    /// Largest instance the exact method attempts.
    pub exact_cap: usize,
    pub master_seed: u64,
    /// Draw a new retired set in every iteration instead of once per cell.
    pub resample_retired_per_iteration: bool,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    /// Store scheduler wall times. Disable for byte-reproducible output.
    pub record_runtime: bool,
    pub output: OutputPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            network: NetworkParams::default(),
            timings: TimingsMs::default(),
            n_flows_list: vec![70, 100],
            m_list: (5..=10).collect(),
            iterations: 200,
            methods: vec![Method::Heuristic, Method::Random, Method::ExactDp],
            exact_cap: DEFAULT_EXACT_CAP,
            master_seed: 1,
            resample_retired_per_iteration: false,
            threads: None,
            record_runtime: true,
            output: OutputPaths::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        self.network.validate()?;
        self.timings.to_timings::<f64>()?;
        if self.iterations < 2 {
            return bad(format!("iterations must be at least 2, got {}", self.iterations));
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if let Some(m) = self.methods.iter().find(|m| **m == Method::BruteForce) {
            return bad(format!("method `{m}` is not available in experiments"));
        }
        if self.n_flows_list.is_empty() || self.m_list.is_empty() {
            return bad("n_flows_list and m_list must not be empty".into());
        }
        if let Some(&m) = self.m_list.iter().find(|&&m| m + 2 > self.network.num_uavs) {
            return bad(format!("m = {m} leaves fewer than two live UAVs out of {}", self.network.num_uavs));
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        Ok(())
    }
}

/// Sample mean, standard error and 95% confidence interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// `mean ± 1.96·SE` with `SE = sqrt(Σ(E_k − Ē)² / (K−1)) / sqrt(K)`.
pub fn summarize(samples: &[f64]) -> Result<Summary> {
    let k = samples.len();
    if k < 2 {
        return Err(Error::TooFewSamples(k));
    }
    let kf = k as f64;
    let mean = samples.iter().sum::<f64>() / kf;
    let var = samples.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (kf - 1.0);
    let se = var.sqrt() / kf.sqrt();
    Ok(Summary { mean, se, ci_lo: mean - Z_95 * se, ci_hi: mean + Z_95 * se })
}

/// All iterations of one method in one `(m, N_f)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub m: usize,
    pub n_f: usize,
    pub method: Method,
    /// Energy per iteration, J. Empty when the method was skipped.
    pub samples: Vec<f64>,
    /// Scheduler wall time per iteration, s.
    pub runtimes: Vec<f64>,
    /// Flows needing handover per iteration.
    pub instance_sizes: Vec<usize>,
    /// Fingerprint of the instance each iteration scheduled.
    pub instance_hashes: Vec<u64>,
    /// `None` when the method was skipped.
    pub summary: Option<Summary>,
    pub mean_runtime: f64,
    /// Set when some instance exceeded the exact cap.
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McmcResult {
    /// Config as run, without thread count and output paths.
    pub config: ExperimentConfig,
    /// Cells sorted by `(n_f, m, method name)`.
    pub cells: Vec<CellResult>,
    /// False while a run is still in progress.
    pub complete: bool,
}

impl McmcResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn rows(&self) -> Vec<SummaryRow> {
        let mut rows: Vec<SummaryRow> = self
            .cells
            .iter()
            .filter_map(|c| {
                c.summary.map(|s| SummaryRow {
                    m: c.m,
                    n_f: c.n_f,
                    method: c.method.as_str().to_string(),
                    k: c.samples.len(),
                    mean_energy_j: s.mean,
                    se_j: s.se,
                    ci_lo_j: s.ci_lo,
                    ci_hi_j: s.ci_hi,
                    mean_runtime_s: c.mean_runtime,
                })
            })
            .collect();
        sort_rows(&mut rows);
        rows
    }
}

/// One line of the results CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub m: usize,
    pub n_f: usize,
    pub method: String,
    pub k: usize,
    pub mean_energy_j: f64,
    pub se_j: f64,
    pub ci_lo_j: f64,
    pub ci_hi_j: f64,
    pub mean_runtime_s: f64,
}

fn sort_rows(rows: &mut [SummaryRow]) {
    rows.sort_by(|a, b| (a.n_f, a.m, &a.method).cmp(&(b.n_f, b.m, &b.method)));
}

const TAG_NETWORK: u64 = 1;
const TAG_RETIRED: u64 = 2;
const TAG_FLOWS: u64 = 3;
const TAG_RANDOM: u64 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one random stream, a pure function of its coordinates.
pub fn derive_seed(master: u64, tag: u64, m: usize, n_f: usize, k: usize) -> u64 {
    [tag, m as u64, n_f as u64, k as u64]
        .into_iter()
        .fold(splitmix64(master), |acc, part| splitmix64(acc ^ splitmix64(part)))
}

/// FNV-1a over the instance's times, powers and memberships.
pub fn instance_fingerprint(instance: &ReplacementInstance<f64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: u64| {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(instance.n() as u64);
    eat(instance.m() as u64);
    for f in instance.flows() {
        eat(f.handover_time.to_bits());
        for &j in &f.retired_set {
            eat(j as u64);
        }
        eat(u64::MAX);
    }
    for u in instance.uavs() {
        eat(u.hover_power.to_bits());
    }
    h
}

struct Trial {
    n: usize,
    hash: u64,
    /// Per enabled method, `None` when skipped.
    outcomes: Vec<Option<(f64, f64)>>,
}

fn run_trial(
    cfg: &ExperimentConfig,
    net: &UavNetwork,
    cell_retired: Option<&[usize]>,
    m: usize,
    n_f: usize,
    k: usize,
) -> Result<Trial> {
    let timings = cfg.timings.to_timings::<f64>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, TAG_FLOWS, m, n_f, k));
    let fresh;
    let retired = match cell_retired {
        Some(r) => r,
        None => {
            let mut rr = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, TAG_RETIRED, m, n_f, k + 1));
            fresh = sample_retired(net, m, &mut rr)?;
            &fresh
        }
    };
    let flows = sample_flows(net, retired, n_f, &mut rng)?;
    let uavs: Vec<(usize, f64)> = retired.iter().map(|&u| (u, net.hover_powers()[u])).collect();
    let instance = match build_instance(&flows, &uavs, timings) {
        Ok((inst, _)) => inst,
        Err(Error::EmptyInstance) => ReplacementInstance::new(Vec::new(), Vec::new(), timings)?,
        Err(e) => return Err(e),
    };
    let mut outcomes = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let result: Option<SolverResult<f64>> = match method {
            Method::Heuristic => Some(heuristic_schedule(&instance)?),
            Method::Random => Some(random_schedule(&instance, derive_seed(cfg.master_seed, TAG_RANDOM, m, n_f, k))?),
            Method::ExactDp if instance.n() > cfg.exact_cap => None,
            Method::ExactDp => Some(exact_schedule_dp_capped(&instance, cfg.exact_cap)?),
            Method::BruteForce => unreachable!("rejected by validation"),
        };
        outcomes.push(result.map(|r| (r.energy, if cfg.record_runtime { r.wall_time } else { 0.0 })));
    }
    Ok(Trial { n: instance.n(), hash: instance_fingerprint(&instance), outcomes })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<McmcResult> {
    run_experiment_with(config, |_| {})
}

/// Runs the experiment, calling `on_progress` with the partial result after
/// each `(m, N_f)` cell finishes.
pub fn run_experiment_with<F>(config: &ExperimentConfig, mut on_progress: F) -> Result<McmcResult>
where
    F: FnMut(&McmcResult),
{
    config.validate()?;
    let net = generate_network(&config.network, derive_seed(config.master_seed, TAG_NETWORK, 0, 0, 0))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("cannot start worker threads: {e}")))?;

    let mut n_flows = config.n_flows_list.clone();
    n_flows.sort_unstable();
    n_flows.dedup();
    let mut ms = config.m_list.clone();
    ms.sort_unstable();
    ms.dedup();

    let echo = ExperimentConfig { threads: None, output: OutputPaths::default(), ..config.clone() };
    let mut result = McmcResult { config: echo, cells: Vec::new(), complete: false };
    for &n_f in &n_flows {
        for &m in &ms {
            let cell_retired = if config.resample_retired_per_iteration {
                None
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.master_seed, TAG_RETIRED, m, n_f, 0));
                Some(sample_retired(&net, m, &mut rng)?)
            };
            let trials: Vec<Trial> = pool.install(|| {
                (0..config.iterations)
                    .into_par_iter()
                    .map(|k| run_trial(config, &net, cell_retired.as_deref(), m, n_f, k))
                    .collect::<Result<_>>()
            })?;
            let mut cells: Vec<CellResult> = config
                .methods
                .iter()
                .enumerate()
                .map(|(slot, &method)| collect_cell(m, n_f, method, slot, &trials))
                .collect::<Result<_>>()?;
            cells.sort_by_key(|c| c.method.as_str());
            cells.dedup_by_key(|c| c.method);
            result.cells.extend(cells);
            on_progress(&result);
        }
    }
    result.complete = true;
    Ok(result)
}

fn collect_cell(m: usize, n_f: usize, method: Method, slot: usize, trials: &[Trial]) -> Result<CellResult> {
    let instance_sizes: Vec<usize> = trials.iter().map(|t| t.n).collect();
    let instance_hashes: Vec<u64> = trials.iter().map(|t| t.hash).collect();
    let skipped = trials.iter().any(|t| t.outcomes[slot].is_none());
    let (samples, runtimes): (Vec<f64>, Vec<f64>) = if skipped {
        (Vec::new(), Vec::new())
    } else {
        trials.iter().map(|t| t.outcomes[slot].expect("not skipped")).unzip()
    };
    let summary = if skipped { None } else { Some(summarize(&samples)?) };
    let mean_runtime = if runtimes.is_empty() { 0.0 } else { runtimes.iter().sum::<f64>() / runtimes.len() as f64 };
    Ok(CellResult {
        m,
        n_f,
        method,
        samples,
        runtimes,
        instance_sizes,
        instance_hashes,
        summary,
        mean_runtime,
        skipped,
    })
}

/// Formats with nine significant digits in plain decimal notation.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { "0.00000000".to_string() } else { v.to_string() };
    }
    // Let the exponent form do the rounding, then pick the matching precision.
    let sci = format!("{:.8e}", v);
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (8 - exp).max(0) as usize;
    format!("{:.*}", decimals, v)
}

pub fn write_csv<W: Write>(result: &McmcResult, out: W) -> Result<()> {
    write_rows(&result.rows(), out)
}

pub fn write_rows<W: Write>(rows: &[SummaryRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.m,
            r.n_f,
            r.method,
            r.k,
            format_sig9(r.mean_energy_j),
            format_sig9(r.se_j),
            format_sig9(r.ci_lo_j),
            format_sig9(r.ci_hi_j),
            format_sig9(r.mean_runtime_s)
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn csv_to_string(result: &McmcResult) -> String {
    let mut buf = Vec::new();
    write_csv(result, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("CSV is ASCII")
}

/// Parses a results CSV written by [`write_csv`].
pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<SummaryRow>> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, header)) => {
            if header?.trim_end() != CSV_HEADER {
                return Err(Error::Csv { line: 1, reason: format!("expected header `{CSV_HEADER}`") });
            }
        }
        None => return Err(Error::Csv { line: 1, reason: "file is empty".into() }),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Csv { line: lineno, reason: format!("expected 9 fields, found {}", fields.len()) });
        }
        let int = |i: usize| {
            fields[i].parse::<usize>().map_err(|e| Error::Csv { line: lineno, reason: format!("field {}: {e}", i + 1) })
        };
        let num = |i: usize| {
            fields[i].parse::<f64>().map_err(|e| Error::Csv { line: lineno, reason: format!("field {}: {e}", i + 1) })
        };
        rows.push(SummaryRow {
            m: int(0)?,
            n_f: int(1)?,
            method: fields[2].to_string(),
            k: int(3)?,
            mean_energy_j: num(4)?,
            se_j: num(5)?,
            ci_lo_j: num(6)?,
            ci_hi_j: num(7)?,
            mean_runtime_s: num(8)?,
        });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Energy,
    Runtime,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(Metric::Energy),
            "runtime" => Ok(Metric::Runtime),
            other => Err(Error::ConfigInvalid(format!("unknown metric `{other}`"))),
        }
    }
}

const SVG_W: f64 = 720.0;
const SVG_H: f64 = 440.0;
const PLOT_LEFT: f64 = 80.0;
const PLOT_RIGHT: f64 = 540.0;
const PLOT_TOP: f64 = 40.0;
const PLOT_BOTTOM: f64 = 380.0;

fn method_color(method: &str) -> &'static str {
    match method {
        "heuristic" => "#1f77b4",
        "random" => "#d62728",
        "exact_dp" => "#2ca02c",
        _ => "#7f7f7f",
    }
}

fn px(v: f64) -> String {
    format!("{v:.3}")
}

/// Renders mean energy (with confidence bars) or mean runtime against `m`.
///
/// Energy uses a linear axis from zero. Runtime uses a log axis when every
/// value is positive, since the methods differ by orders of magnitude.
pub fn emit_svg<W: Write>(rows: &[SummaryRow], metric: Metric, mut out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::ConfigInvalid("no result rows to plot".into()));
    }
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);

    let value = |r: &SummaryRow| match metric {
        Metric::Energy => r.mean_energy_j,
        Metric::Runtime => r.mean_runtime_s,
    };
    let log_y = metric == Metric::Runtime && rows.iter().all(|r| r.mean_runtime_s > 0.0);
    let (y_lo, y_hi) = if log_y {
        let lo = rows.iter().map(|r| r.mean_runtime_s.log10()).fold(f64::INFINITY, f64::min).floor();
        let hi = rows.iter().map(|r| r.mean_runtime_s.log10()).fold(f64::NEG_INFINITY, f64::max).ceil();
        (lo, if hi > lo { hi } else { lo + 1.0 })
    } else {
        let top = rows
            .iter()
            .map(|r| if metric == Metric::Energy { r.ci_hi_j.max(value(r)) } else { value(r) })
            .fold(0.0, f64::max);
        (0.0, if top > 0.0 { top * 1.1 } else { 1.0 })
    };
    let m_min = rows.iter().map(|r| r.m).min().unwrap() as f64;
    let m_max = rows.iter().map(|r| r.m).max().unwrap() as f64;
    let (x_lo, x_hi) = if m_max > m_min { (m_min - 0.5, m_max + 0.5) } else { (m_min - 1.0, m_max + 1.0) };
    let sx = |m: f64| PLOT_LEFT + (m - x_lo) / (x_hi - x_lo) * (PLOT_RIGHT - PLOT_LEFT);
    let sy = |v: f64| {
        let v = if log_y { v.log10() } else { v };
        PLOT_BOTTOM - (v - y_lo) / (y_hi - y_lo) * (PLOT_BOTTOM - PLOT_TOP)
    };

    let (title, y_label) = match metric {
        Metric::Energy => ("Hovering energy consumption versus m", "mean hovering energy (J)"),
        Metric::Runtime => ("Execution time versus m", "mean execution time (s)"),
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = SVG_W,
        h = SVG_H
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{SVG_W}" height="{SVG_H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{title}</text>"#,
        px((PLOT_LEFT + PLOT_RIGHT) / 2.0)
    );
    let _ = writeln!(
        s,
        r#"<rect class="frame" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        px(PLOT_LEFT),
        px(PLOT_TOP),
        px(PLOT_RIGHT - PLOT_LEFT),
        px(PLOT_BOTTOM - PLOT_TOP)
    );

    let mut ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    ms.dedup();
    ms.sort_unstable();
    ms.dedup();
    for &m in &ms {
        let x = sx(m as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/>"#,
            px(x),
            px(PLOT_BOTTOM),
            px(PLOT_BOTTOM + 5.0)
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{m}</text>"#, px(x), px(PLOT_BOTTOM + 19.0));
    }
    let ticks: Vec<(f64, String)> = if log_y {
        (y_lo as i32..=y_hi as i32).map(|e| (10f64.powi(e), format!("1e{e}"))).collect()
    } else {
        (0..=5)
            .map(|t| {
                let v = y_lo + (y_hi - y_lo) * t as f64 / 5.0;
                (v, format!("{}", (v * 1000.0).round() / 1000.0))
            })
            .collect()
    };
    for (v, label) in ticks {
        let y = sy(v);
        let _ = writeln!(
            s,
            r##"<line x1="{x1}" y1="{y}" x2="{x2}" y2="{y}" stroke="#dddddd"/>"##,
            x1 = px(PLOT_LEFT),
            y = px(y),
            x2 = px(PLOT_RIGHT)
        );
        let _ =
            writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{label}</text>"#, px(PLOT_LEFT - 6.0), px(y + 4.0));
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">m (retired UAVs)</text>"#,
        px((PLOT_LEFT + PLOT_RIGHT) / 2.0),
        px(PLOT_BOTTOM + 40.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{y_label}</text>"#,
        px((PLOT_TOP + PLOT_BOTTOM) / 2.0)
    );

    let mut n_fs: Vec<usize> = rows.iter().map(|r| r.n_f).collect();
    n_fs.sort_unstable();
    n_fs.dedup();
    let mut series: Vec<(usize, String)> = rows.iter().map(|r| (r.n_f, r.method.clone())).collect();
    series.sort();
    series.dedup();
    for (idx, (n_f, method)) in series.iter().enumerate() {
        let color = method_color(method);
        let dash =
            if n_fs.iter().position(|v| v == n_f).unwrap_or(0) % 2 == 1 { r#" stroke-dasharray="6 3""# } else { "" };
        let points: Vec<&SummaryRow> = rows.iter().filter(|r| r.n_f == *n_f && &r.method == method).collect();
        let path: Vec<String> = points.iter().map(|r| format!("{},{}", px(sx(r.m as f64)), px(sy(value(r))))).collect();
        let _ = writeln!(s, r#"<g class="series" data-method="{method}" data-n-f="{n_f}">"#);
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            path.join(" ")
        );
        for r in &points {
            let x = sx(r.m as f64);
            if metric == Metric::Energy {
                let _ = writeln!(
                    s,
                    r#"<line class="errbar" data-se="{se}" x1="{x}" y1="{y1}" x2="{x}" y2="{y2}" stroke="{color}"/>"#,
                    se = r.se_j,
                    x = px(x),
                    y1 = px(sy(r.ci_hi_j)),
                    y2 = px(sy(r.ci_lo_j))
                );
            }
            let _ = writeln!(
                s,
                r#"<circle class="marker" cx="{}" cy="{}" r="3" fill="{color}"/>"#,
                px(x),
                px(sy(value(r)))
            );
        }
        let _ = writeln!(s, "</g>");
        let ly = PLOT_TOP + 10.0 + 18.0 * idx as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{x1}" y1="{y}" x2="{x2}" y2="{y}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            x1 = px(PLOT_RIGHT + 15.0),
            y = px(ly),
            x2 = px(PLOT_RIGHT + 40.0)
        );
        let _ =
            writeln!(s, r#"<text x="{}" y="{}">{method} (N_f = {n_f})</text>"#, px(PLOT_RIGHT + 46.0), px(ly + 4.0));
    }
    let _ = writeln!(s, "</svg>");
    out.write_all(s.as_bytes())?;
    out.flush()?;
    Ok(())
}
