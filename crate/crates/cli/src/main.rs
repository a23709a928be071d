use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adiabat_core::engine::success_probability;
use adiabat_core::experiment::{fit_t2, log_grid, write_csv, Experiment, ExperimentConfig, Mode, SweepOptions};
use adiabat_core::hamiltonians::{build_driver, build_problem, gap_scan_refined, GapKind};
use adiabat_core::maxcut::{brute_force_max, greedy_search, payoff_table, CutAssignment, GreedyRule, WeightedGraph};
use adiabat_core::pulse::verify_schedule;
use adiabat_core::Error;
use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Largest tolerated pulse/engine slice mismatch before `compile` fails.
const VERIFY_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "adiabat", version, about = "Discrete-time adiabatic MAXCUT simulator and NMR schedule compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Brute-force optimum and greedy hill-climb report for an instance.
    Solve {
        /// Graph file or experiment config.
        instance: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Spectral gap along the interpolation, as `s,gap` CSV.
    Gap {
        /// Graph file or experiment config.
        instance: PathBuf,
        #[arg(long, default_value_t = 1001)]
        grid: usize,
        /// Local 10x refinement passes around the minimum.
        #[arg(long, default_value_t = 3)]
        refine: usize,
        #[arg(long, value_enum, default_value_t = GapArg::Top)]
        which: GapArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Single evolution; reports the final populations as JSON.
    Run {
        config: PathBuf,
        /// Number of slices minus one (defaults to the reference M).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, value_enum, default_value_t = ModeArg::Trotter)]
        mode: ModeArg,
        /// Include the target population after every slice.
        #[arg(long)]
        trace: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Export the NMR pulse schedule and check it against the engine.
    Compile {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Defaults to the reference M.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Error and success probability over the configured M values, as CSV.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Compare unscaled deviation matrices.
        #[arg(long)]
        raw_distance: bool,
    },
    /// Fit one T2 so that the noisy error minimum falls at a target M.
    FitT2 {
        config: PathBuf,
        #[arg(long, default_value_t = 60)]
        target_m: usize,
        #[arg(long, default_value_t = 0.05)]
        t2_min: f64,
        #[arg(long, default_value_t = 5.0)]
        t2_max: f64,
        #[arg(long, default_value_t = 41)]
        t2_points: usize,
        #[arg(long)]
        raw_distance: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print a built-in experiment config.
    Preset {
        #[arg(value_enum)]
        name: PresetName,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GapArg {
    Top,
    Bottom,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ideal,
    Trotter,
    Noisy,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Ideal => Mode::Ideal,
            ModeArg::Trotter => Mode::Trotter,
            ModeArg::Noisy => Mode::Noisy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetName {
    Paper,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err)
            if err
                .chain()
                .filter_map(|e| e.downcast_ref::<io::Error>())
                .any(|e| e.kind() == io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            let numerical = err
                .chain()
                .filter_map(|e| e.downcast_ref::<Error>())
                .any(|e| !e.is_config_error());
            ExitCode::from(if numerical { EXIT_NUMERICAL } else { EXIT_CONFIG })
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Solve { instance, output } => solve(&instance, output),
        Command::Gap {
            instance,
            grid,
            refine,
            which,
            output,
        } => gap(&instance, grid, refine, which, output),
        Command::Run {
            config,
            m,
            mode,
            trace,
            output,
        } => run(&config, m, mode.into(), trace, output),
        Command::Compile { config, output, m } => compile(&config, &output, m),
        Command::Sweep {
            config,
            output,
            raw_distance,
        } => {
            let exp = ExperimentConfig::load(&config)?;
            let rows = exp.sweep(SweepOptions {
                normalize: !raw_distance,
            })?;
            write_csv(&rows, sink(output)?)?;
            Ok(())
        }
        Command::FitT2 {
            config,
            target_m,
            t2_min,
            t2_max,
            t2_points,
            raw_distance,
            output,
        } => {
            if !(t2_min > 0.0 && t2_max >= t2_min) {
                return Err(Error::Config(format!("bad T2 range [{t2_min}, {t2_max}]")).into());
            }
            let exp = ExperimentConfig::load(&config)?;
            let m_grid: Vec<usize> = exp.m_list.iter().copied().filter(|&m| m < exp.reference_m).collect();
            if m_grid.is_empty() {
                return Err(Error::Config("no swept M below the reference".into()).into());
            }
            let fit = fit_t2(&exp, &m_grid, &log_grid(t2_min, t2_max, t2_points), target_m, !raw_distance)?;
            emit_json(&fit, output)
        }
        Command::Preset { name, output } => {
            let cfg = match name {
                PresetName::Paper => ExperimentConfig::paper(),
            };
            let mut out = sink(output)?;
            writeln!(out, "{}", cfg.to_json()?)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn sink(path: Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(&p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(value: &T, output: Option<PathBuf>) -> anyhow::Result<()> {
    let mut out = sink(output)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Accepts a bare graph file or an experiment config.
fn load_graph(path: &Path) -> anyhow::Result<WeightedGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(g) = WeightedGraph::from_json(&text) {
        return Ok(g);
    }
    match ExperimentConfig::from_json(&text) {
        Ok(cfg) => Ok(cfg.resolve(path.parent())?.graph),
        Err(_) => bail!(Error::Config(format!(
            "{} is neither a graph file nor an experiment config",
            path.display()
        ))),
    }
}

#[derive(Serialize)]
struct WalkReport {
    start: String,
    endpoint: String,
    path: Vec<String>,
}

#[derive(Serialize)]
struct SolveReport {
    payoffs: Vec<f64>,
    argmax: Vec<String>,
    max_payoff: f64,
    greedy_strict: Vec<WalkReport>,
    greedy_accept_equal: Vec<WalkReport>,
}

fn solve(instance: &Path, output: Option<PathBuf>) -> anyhow::Result<()> {
    let g = load_graph(instance)?;
    let (argmax, max_payoff) = brute_force_max(&g)?;
    let walks = |rule| -> anyhow::Result<Vec<WalkReport>> {
        (0..1usize << g.n())
            .map(|bits| {
                let start = CutAssignment::new(g.n(), bits)?;
                let walk = greedy_search(&g, start, rule)?;
                Ok(WalkReport {
                    start: start.to_string(),
                    endpoint: walk.endpoint.to_string(),
                    path: walk.path.iter().map(|c| c.to_string()).collect(),
                })
            })
            .collect()
    };
    let report = SolveReport {
        payoffs: payoff_table(&g)?.values,
        argmax: argmax.iter().map(|c| c.to_string()).collect(),
        max_payoff,
        greedy_strict: walks(GreedyRule::Strict)?,
        greedy_accept_equal: walks(GreedyRule::AcceptEqual)?,
    };
    emit_json(&report, output)
}

fn gap(instance: &Path, grid: usize, refine: usize, which: GapArg, output: Option<PathBuf>) -> anyhow::Result<()> {
    let g = load_graph(instance)?;
    let h_b = build_driver(g.n())?.operator;
    let h_p = build_problem(&g, true)?.operator();
    let kind = match which {
        GapArg::Top => GapKind::TopTwo,
        GapArg::Bottom => GapKind::BottomTwo,
    };
    let scan = gap_scan_refined(&h_b, &h_p, grid, kind, refine)?;
    let mut out = sink(output)?;
    writeln!(out, "s,gap")?;
    for (s, gap) in scan.grid.iter().zip(&scan.gaps) {
        writeln!(out, "{s},{gap}")?;
    }
    out.flush()?;
    eprintln!("g_min = {} at s = {}", scan.g_min, scan.s_at_min);
    Ok(())
}

#[derive(Serialize)]
struct RunReport {
    #[serde(rename = "M")]
    m: usize,
    mode: Mode,
    /// Final computational-basis populations, index 0 = `|0…0>`.
    diagonal: Vec<f64>,
    targets: Vec<String>,
    p_target: f64,
    most_likely: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_target_trace: Option<Vec<f64>>,
}

fn run(config: &Path, m: Option<usize>, mode: Mode, trace: bool, output: Option<PathBuf>) -> anyhow::Result<()> {
    let exp = ExperimentConfig::load(config)?;
    let m = m.unwrap_or(exp.reference_m);
    if mode == Mode::Noisy && !exp.noise.is_enabled() {
        return Err(Error::Config("noisy mode needs a noise block".into()).into());
    }
    let result = exp.run(m, mode)?;
    let diagonal = result.final_state.populations();
    let most = (0..diagonal.len())
        .max_by(|&a, &b| diagonal[a].total_cmp(&diagonal[b]))
        .expect("non-empty");
    let p_target_trace = if trace { Some(target_trace(&exp, m, mode)?) } else { None };
    let report = RunReport {
        m,
        mode,
        p_target: exp.p_target(&result.final_state),
        targets: exp.targets.iter().map(|t| t.to_string()).collect(),
        most_likely: CutAssignment::new(exp.n(), most)?.to_string(),
        diagonal,
        p_target_trace,
    };
    emit_json(&report, output)
}

/// Optimal-set population after each slice.
fn target_trace(exp: &Experiment, m: usize, mode: Mode) -> anyhow::Result<Vec<f64>> {
    use adiabat_core::engine::{run as engine_run, EvolutionMode};
    let sched = exp.schedule(m)?;
    let snapshots = match mode {
        Mode::Ideal | Mode::Trotter => {
            let em = if mode == Mode::Ideal { EvolutionMode::Ideal } else { EvolutionMode::Trotter };
            engine_run(&sched, &exp.h_b, &exp.h_p, em, Some(exp.targets[0]))?.snapshots
        }
        Mode::Noisy => {
            let compiled = exp.compile(m)?;
            adiabat_core::noise::noisy_run(&sched, &compiled, &exp.h_b, &exp.h_p, &exp.noise, Some(exp.targets[0]))?
                .snapshots
        }
    };
    let snapshots = snapshots.expect("recording was requested");
    exp.targets
        .iter()
        .try_fold(vec![0.0; snapshots.len()], |mut acc, &t| {
            for (a, s) in acc.iter_mut().zip(&snapshots) {
                *a += success_probability(s, t)?;
            }
            Ok::<_, Error>(acc)
        })
        .map_err(Into::into)
}

#[derive(Serialize)]
struct CompileReport {
    #[serde(rename = "M")]
    m: usize,
    slices: usize,
    total_wall_clock_s: f64,
    verify_max_distance: f64,
    schedule_file: PathBuf,
}

fn compile(config: &Path, output: &Path, m: Option<usize>) -> anyhow::Result<()> {
    let exp = ExperimentConfig::load(config)?;
    let m = m.unwrap_or(exp.reference_m);
    let ps = exp.compile(m)?;
    let distance = verify_schedule(&ps, &exp.schedule(m)?, &exp.h_b, &exp.h_p, &exp.nmr, &exp.mapping)?;
    std::fs::write(output, ps.to_json()? + "\n").with_context(|| format!("cannot write {}", output.display()))?;
    emit_json(
        &CompileReport {
            m,
            slices: ps.slices.len(),
            total_wall_clock_s: ps.total_wall_clock_s,
            verify_max_distance: distance,
            schedule_file: output.to_path_buf(),
        },
        None,
    )?;
    if distance > VERIFY_TOL {
        return Err(Error::Numerical(format!(
            "pulse schedule deviates from the engine by {distance:e} (tolerance {VERIFY_TOL:e})"
        ))
        .into());
    }
    Ok(())
}
