//! Command-line front end for the handover scheduler.
//!
//! Exit codes: 0 success, 2 invalid input, 3 I/O failure, 4 instance too
//! large for the requested solver.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use uav_handover::experiment::{self, read_csv, write_csv, ExperimentConfig, Metric};
use uav_handover::io::{InstanceFile, NetworkFile};
use uav_handover::netgen::{generate_network, sample_scenario, NetworkParams};
use uav_handover::ordering::{build_ilp, export_lp};
use uav_handover::sched::{
    brute_force_schedule, exact_schedule_dp_capped, heuristic_schedule, random_schedule, DEFAULT_EXACT_CAP,
};
use uav_handover::{Error, Instance};

#[derive(Parser)]
#[command(name = "uav-handover", version, about = "Energy-aware flow handover scheduling for retiring UAVs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Place UAVs at random and write the network as JSON.
    GenNetwork {
        /// Network parameters as JSON; defaults when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Retire UAVs and route flows on a network, then write the handover instance.
    GenInstance {
        #[arg(long)]
        network: PathBuf,
        /// Flows to route, before filtering out those that avoid retired UAVs.
        #[arg(long)]
        n_flows: usize,
        /// Number of retired UAVs.
        #[arg(long)]
        retired: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the network with its retired set and routes.
        #[arg(long)]
        scenario_out: Option<PathBuf>,
    },
    /// Compute a handover order for an instance.
    Schedule {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Required by `random`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
        exact_cap: usize,
        /// Write zero as the wall time so output is reproducible.
        #[arg(long)]
        no_timing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the ordering ILP in LP format.
    ExportIlp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Monte Carlo comparison of scheduling methods.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Override the CSV path from the config.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        energy_svg: Option<PathBuf>,
        #[arg(long)]
        runtime_svg: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        /// Record zero runtimes so output is reproducible.
        #[arg(long)]
        no_timing: bool,
    },
    /// Chart a results CSV as SVG.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Heuristic,
    Random,
    Exact,
    Bruteforce,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Energy,
    Runtime,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 2, error: error.into() }
    }

    fn io(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 3, error: error.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => 3,
            Error::InstanceTooLarge { .. } => 4,
            _ => 2,
        };
        Failure { code, error: e.into() }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::io(anyhow!("cannot read {}: {e}", path.display())))
}

fn parse_with<T>(path: &Path, parse: impl FnOnce(&str) -> uav_handover::Result<T>) -> CliResult<T> {
    let text = read_text(path)?;
    parse(&text).map_err(|e| {
        let f = Failure::from(e);
        Failure { code: f.code, error: f.error.context(format!("invalid {}", path.display())) }
    })
}

/// Writes `bytes` to `out`, or to standard output when no path is given.
fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult {
    match out {
        Some(path) => write_file(path, bytes),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(Failure::io)
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    fs::write(path, bytes).map_err(|e| Failure::io(anyhow!("cannot write {}: {e}", path.display())))
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".partial");
    PathBuf::from(name)
}

#[derive(Serialize)]
struct ScheduleOutput {
    schedule: Vec<usize>,
    energy_j: f64,
    method: &'static str,
    wall_time_s: f64,
}

fn gen_network(params: Option<&Path>, seed: u64, out: Option<&Path>) -> CliResult {
    let params = match params {
        Some(path) => parse_with(path, |t| Ok(serde_json::from_str::<NetworkParams>(t)?))?,
        None => NetworkParams::default(),
    };
    let net = generate_network(&params, seed)?;
    emit(out, NetworkFile::from_network(&params, &net, None).to_json().as_bytes())?;
    eprintln!("network: {} UAVs, {} links", net.len(), net.link_count());
    Ok(())
}

fn gen_instance(
    network: &Path,
    n_flows: usize,
    retired: usize,
    seed: u64,
    out: Option<&Path>,
    scenario_out: Option<&Path>,
) -> CliResult {
    let file = parse_with(network, NetworkFile::from_json)?;
    let net = file.to_network()?;
    let scenario = sample_scenario(&net, n_flows, retired, seed)?;
    let mut with_routes = NetworkFile::from_network(&file.params, &net, Some(&scenario));
    with_routes.timings = file.timings;
    let (instance, id_map) = with_routes.to_instance::<f64>()?;
    emit(out, InstanceFile::from_instance(&instance, Some(id_map)).to_json().as_bytes())?;
    if let Some(path) = scenario_out {
        write_file(path, with_routes.to_json().as_bytes())?;
    }
    eprintln!("instance: {} flows need handover across {} retired UAVs", instance.n(), instance.m());
    Ok(())
}

fn schedule(
    instance: &Path,
    method: MethodArg,
    seed: Option<u64>,
    exact_cap: usize,
    no_timing: bool,
    out: Option<&Path>,
) -> CliResult {
    let inst: Instance = parse_with(instance, |t| InstanceFile::from_json(t)?.to_instance())?;
    let result = match method {
        MethodArg::Heuristic => heuristic_schedule(&inst)?,
        MethodArg::Random => {
            let seed = seed.ok_or_else(|| Failure::input(anyhow!("--method random requires --seed")))?;
            random_schedule(&inst, seed)?
        }
        MethodArg::Exact => exact_schedule_dp_capped(&inst, exact_cap)?,
        MethodArg::Bruteforce => brute_force_schedule(&inst)?,
    };
    let report = ScheduleOutput {
        schedule: result.schedule.order().to_vec(),
        energy_j: result.energy,
        method: result.method.as_str(),
        wall_time_s: if no_timing { 0.0 } else { result.wall_time },
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(Failure::input)?;
    text.push('\n');
    emit(out, text.as_bytes())?;
    eprintln!("{}: {} J", report.method, report.energy_j);
    Ok(())
}

fn export_ilp(instance: &Path, out: Option<&Path>) -> CliResult {
    let inst: Instance = parse_with(instance, |t| InstanceFile::from_json(t)?.to_instance())?;
    let model = build_ilp(&inst)?;
    let mut buf = Vec::new();
    export_lp(&model, &mut buf)?;
    emit(out, &buf)?;
    eprintln!(
        "ilp: {} binaries, {} fixed, {} pair and {} transitivity constraints",
        model.variable_count(),
        model.fixed.len(),
        model.pair_equality_count(),
        model.triple_count()
    );
    Ok(())
}

struct ExperimentOutputs {
    csv: Option<PathBuf>,
    json: Option<PathBuf>,
    energy_svg: Option<PathBuf>,
    runtime_svg: Option<PathBuf>,
}

fn run_experiment(config: &Path, outputs: ExperimentOutputs, threads: Option<usize>, no_timing: bool) -> CliResult {
    let mut cfg = parse_with(config, ExperimentConfig::from_json)?;
    let o = &mut cfg.output;
    o.csv = outputs.csv.or(o.csv.take());
    o.json = outputs.json.or(o.json.take());
    o.energy_svg = outputs.energy_svg.or(o.energy_svg.take());
    o.runtime_svg = outputs.runtime_svg.or(o.runtime_svg.take());
    if threads.is_some() {
        cfg.threads = threads;
    }
    if no_timing {
        cfg.record_runtime = false;
    }
    cfg.validate()?;

    let csv_path = cfg.output.csv.clone();
    let json_path = cfg.output.json.clone();
    let mut flush_error = None;
    let result = experiment::run_experiment_with(&cfg, |partial| {
        if flush_error.is_some() {
            return;
        }
        let flush = || -> CliResult {
            if let Some(path) = &csv_path {
                write_file(&partial_path(path), experiment::csv_to_string(partial).as_bytes())?;
            }
            if let Some(path) = &json_path {
                write_file(&partial_path(path), partial.to_json().as_bytes())?;
            }
            Ok(())
        };
        if let Err(e) = flush() {
            flush_error = Some(e);
        }
        eprintln!("finished {} of {} cells", partial.cells.len() / cfg.methods.len().max(1), cell_count(&cfg));
    })?;
    if let Some(e) = flush_error {
        return Err(e);
    }

    match &csv_path {
        Some(path) => {
            let mut buf = Vec::new();
            write_csv(&result, &mut buf)?;
            write_file(path, &buf)?;
            let _ = fs::remove_file(partial_path(path));
        }
        None if json_path.is_none() => emit(None, experiment::csv_to_string(&result).as_bytes())?,
        None => {}
    }
    if let Some(path) = &json_path {
        write_file(path, result.to_json().as_bytes())?;
        let _ = fs::remove_file(partial_path(path));
    }
    let rows = result.rows();
    for (path, metric) in [(&cfg.output.energy_svg, Metric::Energy), (&cfg.output.runtime_svg, Metric::Runtime)] {
        if let Some(path) = path {
            let mut buf = Vec::new();
            experiment::emit_svg(&rows, metric, &mut buf)?;
            write_file(path, &buf)?;
        }
    }
    let skipped = result.cells.iter().filter(|c| c.skipped).count();
    if skipped > 0 {
        eprintln!("{skipped} cells skipped the exact method (instances above exact_cap = {})", cfg.exact_cap);
    }
    Ok(())
}

fn cell_count(cfg: &ExperimentConfig) -> usize {
    let distinct = |v: &[usize]| {
        let mut v = v.to_vec();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    distinct(&cfg.n_flows_list) * distinct(&cfg.m_list)
}

fn plot(csv: &Path, metric: MetricArg, out: Option<&Path>) -> CliResult {
    let text = read_text(csv)?;
    let rows = read_csv(text.as_bytes())
        .map_err(|e| Failure::input(anyhow::Error::from(e).context(format!("invalid {}", csv.display()))))?;
    if rows.is_empty() {
        return Err(Failure::input(anyhow!("{} has no result rows", csv.display())));
    }
    let metric = match metric {
        MetricArg::Energy => Metric::Energy,
        MetricArg::Runtime => Metric::Runtime,
    };
    let mut buf = Vec::new();
    experiment::emit_svg(&rows, metric, &mut buf)?;
    emit(out, &buf)
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::GenNetwork { params, seed, out } => gen_network(params.as_deref(), seed, out.as_deref()),
        Command::GenInstance { network, n_flows, retired, seed, out, scenario_out } => {
            gen_instance(&network, n_flows, retired, seed, out.as_deref(), scenario_out.as_deref())
        }
        Command::Schedule { instance, method, seed, exact_cap, no_timing, out } => {
            schedule(&instance, method, seed, exact_cap, no_timing, out.as_deref())
        }
        Command::ExportIlp { instance, out } => export_ilp(&instance, out.as_deref()),
        Command::Experiment { config, csv, json, energy_svg, runtime_svg, threads, no_timing } => {
            run_experiment(&config, ExperimentOutputs { csv, json, energy_svg, runtime_svg }, threads, no_timing)
        }
        Command::Plot { csv, metric, out } => plot(&csv, metric, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
