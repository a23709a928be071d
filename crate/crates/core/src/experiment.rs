//! Experiment configuration, M-sweeps against a long-run reference, and the
//! single-`T2` fit used to locate the optimal run length under dephasing.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{run, slice_unitaries, EvolutionMode, EvolutionResult, Schedule, State};
use crate::error::{Error, Result};
use crate::hamiltonians::{build_driver, build_problem, NmrFile, NmrSystem};
use crate::maxcut::{brute_force_max, CutAssignment, GraphFile, WeightedGraph};
use crate::noise::{propagate_noisy, RelaxationParams};
use crate::pulse::{compile, CompileOptions, PulseSchedule, SpinMapping};
use crate::quantum::{deviation, trace_distance, DensityMatrix, Operator};

/// Exact header of the sweep CSV.
pub const CSV_HEADER: &str = "M,wall_clock_s,trace_distance,p_target,mode";

/// Dephasing time baked into the built-in preset: [`fit_t2`] over its swept
/// `M` values (reference excluded) with a 41-point log grid on [0.05, 5] s
/// lands on 0.397 s.
pub const PRESET_T2_S: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ideal,
    Trotter,
    Noisy,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ideal => "ideal",
            Mode::Trotter => "trotter",
            Mode::Noisy => "noisy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBlock {
    #[serde(rename = "M_list")]
    pub m_list: Vec<usize>,
    pub dt: f64,
    pub g_scale: f64,
    pub h_scale: f64,
    #[serde(rename = "reference_M")]
    pub reference_m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NmrBlock {
    pub larmor_hz: Vec<f64>,
    pub couplings_hz: Vec<(usize, usize, f64)>,
    /// `mapping[q]` is the spin that carries qubit `q`.
    pub mapping: Vec<usize>,
    pub sign: i32,
}

/// A relaxation time: one value for every spin or one per spin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    Uniform(f64),
    PerSpin(Vec<f64>),
}

impl TimeSpec {
    fn expand(&self, n: usize) -> Vec<f64> {
        match self {
            TimeSpec::Uniform(t) => vec![*t; n],
            TimeSpec::PerSpin(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    #[serde(default)]
    pub t1_s: Option<TimeSpec>,
    #[serde(default)]
    pub t2_s: Option<TimeSpec>,
}

/// On-disk experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_file: Option<PathBuf>,
    pub schedule: ScheduleBlock,
    pub nmr: NmrBlock,
    #[serde(default)]
    pub noise: NoiseBlock,
    pub modes: Vec<Mode>,
}

impl ExperimentConfig {
    /// Three-spin instance with its molecule, sweep grid and fitted dephasing.
    /// Above `M = 150` the noiseless error is at the 1e-3 level and no longer
    /// strictly monotone, so the grid stops there apart from `M = 200`.
    pub fn paper() -> Self {
        let mut m_list: Vec<usize> = (10..=150).step_by(5).collect();
        m_list.extend([200, 400]);
        Self {
            graph: Some(WeightedGraph::paper_instance().to_file()),
            graph_file: None,
            schedule: ScheduleBlock {
                m_list,
                dt: 1.0,
                g_scale: 0.5887,
                h_scale: 0.5,
                reference_m: 400,
            },
            nmr: NmrBlock {
                larmor_hz: vec![0.0; 3],
                couplings_hz: NmrSystem::paper_molecule().to_file().couplings_hz,
                mapping: vec![0, 1, 2],
                sign: -1,
            },
            noise: NoiseBlock {
                t1_s: None,
                t2_s: Some(TimeSpec::Uniform(PRESET_T2_S)),
            },
            modes: vec![Mode::Ideal, Mode::Trotter, Mode::Noisy],
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse and resolve a config file; `graph_file` is relative to it.
    pub fn load(path: impl AsRef<Path>) -> Result<Experiment> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)?.resolve(path.parent())
    }

    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<Experiment> {
        let graph = match (&self.graph, &self.graph_file) {
            (Some(g), None) => WeightedGraph::from_file(g)?,
            (None, Some(p)) => {
                let full = match base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p.clone(),
                };
                WeightedGraph::load(&full)
                    .map_err(|e| Error::Config(format!("graph file {}: {e}", full.display())))?
            }
            _ => return Err(Error::Config("give exactly one of `graph` and `graph_file`".into())),
        };
        let n = graph.n();

        let s = &self.schedule;
        if s.m_list.is_empty() {
            return Err(Error::Config("`M_list` is empty".into()));
        }
        let m_list: Vec<usize> = s.m_list.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let largest = *m_list.last().expect("non-empty");
        if s.reference_m < largest {
            return Err(Error::Config(format!(
                "reference_M = {} is smaller than the largest swept M = {largest}",
                s.reference_m
            )));
        }
        let template = Schedule::new(s.reference_m, s.dt, s.g_scale, s.h_scale)?;

        let nmr = NmrSystem::from_file(&NmrFile {
            larmor_hz: self.nmr.larmor_hz.clone(),
            couplings_hz: self.nmr.couplings_hz.clone(),
        })?;
        let mapping = SpinMapping::new(self.nmr.mapping.clone())?;
        if mapping.len() != n || nmr.n() != n {
            return Err(Error::Config(format!(
                "graph has {n} nodes but the molecule has {} spins and the mapping {} entries",
                nmr.n(),
                mapping.len()
            )));
        }
        if self.nmr.sign != 1 && self.nmr.sign != -1 {
            return Err(Error::out_of_range("sign", self.nmr.sign, "+1 or -1"));
        }

        let noise = RelaxationParams::new(
            self.noise.t1_s.as_ref().map(|t| t.expand(n)),
            self.noise.t2_s.as_ref().map(|t| t.expand(n)),
        )?;
        if let Some(t) = noise.t1.as_ref().or(noise.t2.as_ref()).filter(|t| t.len() != n) {
            return Err(Error::Config(format!("relaxation times list {} spins, graph has {n}", t.len())));
        }

        let mut modes = Vec::new();
        for m in &self.modes {
            if !modes.contains(m) {
                modes.push(*m);
            }
        }
        if modes.is_empty() {
            return Err(Error::Config("`modes` is empty".into()));
        }
        if modes.contains(&Mode::Noisy) && !noise.is_enabled() {
            return Err(Error::Config("noisy mode needs `noise.t1_s` or `noise.t2_s`".into()));
        }

        let h_b = build_driver(n)?.operator;
        let h_p = build_problem(&graph, true)?.operator();
        let (targets, _) = brute_force_max(&graph)?;
        Ok(Experiment {
            graph,
            m_list,
            reference_m: s.reference_m,
            template,
            nmr,
            mapping,
            sign: self.nmr.sign,
            noise,
            modes,
            h_b,
            h_p,
            targets,
        })
    }
}

/// A validated, ready-to-run experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub graph: WeightedGraph,
    /// Sorted, deduplicated.
    pub m_list: Vec<usize>,
    pub reference_m: usize,
    template: Schedule,
    pub nmr: NmrSystem,
    pub mapping: SpinMapping,
    pub sign: i32,
    pub noise: RelaxationParams,
    pub modes: Vec<Mode>,
    pub h_b: Operator,
    pub h_p: Operator,
    /// Brute-force optimal assignments.
    pub targets: Vec<CutAssignment>,
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "M")]
    pub m: usize,
    pub wall_clock_s: f64,
    pub trace_distance: f64,
    pub p_target: f64,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    /// Scale deviation matrices to unit Frobenius norm before comparing.
    pub normalize: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { normalize: true }
    }
}

/// Trace distance between the deviation parts of two states.
pub fn compare_states(rho: &DensityMatrix, sigma: &DensityMatrix, normalize: bool) -> Result<f64> {
    let (mut a, mut b) = (deviation(rho), deviation(sigma));
    if normalize {
        for dev in [&mut a, &mut b] {
            let norm = dev.frobenius_norm();
            if norm < 1e-14 {
                return Err(Error::InvalidInput(
                    "state has no deviation part (proportional to identity); nothing to normalize".into(),
                ));
            }
            *dev = dev.scaled(1.0 / norm);
        }
    }
    trace_distance(&a, &b)
}

impl Experiment {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn schedule(&self, m: usize) -> Result<Schedule> {
        Schedule::new(m, self.template.dt, self.template.g_scale, self.template.h_scale)
    }

    pub fn compile(&self, m: usize) -> Result<PulseSchedule> {
        compile(
            &self.schedule(m)?,
            &self.graph,
            &self.nmr,
            &self.mapping,
            self.sign,
            &CompileOptions::default(),
        )
    }

    /// Total population on the optimal assignments.
    pub fn p_target(&self, state: &State) -> f64 {
        self.targets.iter().map(|t| state.population(t.bits())).sum()
    }

    /// One run at `M = m`. Noisy runs relax for each compiled slice's wall-clock time.
    pub fn run(&self, m: usize, mode: Mode) -> Result<EvolutionResult> {
        let sched = self.schedule(m)?;
        match mode {
            Mode::Ideal => run(&sched, &self.h_b, &self.h_p, EvolutionMode::Ideal, None),
            Mode::Trotter => run(&sched, &self.h_b, &self.h_p, EvolutionMode::Trotter, None),
            Mode::Noisy => self.noisy_run_with(m, &self.noise),
        }
    }

    fn noisy_run_with(&self, m: usize, noise: &RelaxationParams) -> Result<EvolutionResult> {
        let cache = SliceCache::build(self, m)?;
        cache.run(self.n(), noise)
    }

    fn reference(&self, mode: EvolutionMode) -> Result<DensityMatrix> {
        let sched = self.schedule(self.reference_m)?;
        Ok(run(&sched, &self.h_b, &self.h_p, mode, None)?.final_state.to_density())
    }

    /// Rows sorted by `M`, then by mode in configured order. Ideal rows are
    /// measured against the ideal reference; Trotter and noisy rows against
    /// the noiseless Trotter reference.
    pub fn sweep(&self, options: SweepOptions) -> Result<Vec<SweepRow>> {
        let trotter_ref = self.reference(EvolutionMode::Trotter)?;
        let ideal_ref = if self.modes.contains(&Mode::Ideal) {
            Some(self.reference(EvolutionMode::Ideal)?)
        } else {
            None
        };
        let mut rows = Vec::with_capacity(self.m_list.len() * self.modes.len());
        for &m in &self.m_list {
            let wall_clock_s = self.compile(m)?.total_wall_clock_s;
            for &mode in &self.modes {
                let state = self.run(m, mode)?.final_state;
                let reference = match mode {
                    Mode::Ideal => ideal_ref.as_ref().expect("built when ideal mode is present"),
                    _ => &trotter_ref,
                };
                rows.push(SweepRow {
                    m,
                    wall_clock_s,
                    trace_distance: compare_states(&state.to_density(), reference, options.normalize)?,
                    p_target: self.p_target(&state),
                    mode,
                });
            }
        }
        Ok(rows)
    }
}

/// Write sweep rows as CSV under [`CSV_HEADER`].
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(',')).map_err(to_io)?;
    for row in rows {
        w.serialize(row).map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Trotter slices and compiled wall-clock times for one `M`, reusable across
/// relaxation parameters.
struct SliceCache {
    unitaries: Vec<Operator>,
    wall_clocks: Vec<f64>,
    total_wall_clock_s: f64,
}

impl SliceCache {
    fn build(exp: &Experiment, m: usize) -> Result<Self> {
        let sched = exp.schedule(m)?;
        let compiled = exp.compile(m)?;
        Ok(Self {
            unitaries: slice_unitaries(&sched, &exp.h_b, &exp.h_p, EvolutionMode::Trotter)?,
            wall_clocks: compiled.slices.iter().map(|s| s.wall_clock_s).collect(),
            total_wall_clock_s: compiled.total_wall_clock_s,
        })
    }

    fn run(&self, n: usize, noise: &RelaxationParams) -> Result<EvolutionResult> {
        propagate_noisy(n, &self.unitaries, &self.wall_clocks, noise, None)
    }
}

/// Error of the noisy run at each `M` for one uniform `T2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoisyCurve {
    pub t2_s: f64,
    pub m: Vec<usize>,
    pub wall_clock_s: Vec<f64>,
    pub trace_distance: Vec<f64>,
}

impl NoisyCurve {
    /// Index of the smallest error (first on ties).
    pub fn argmin(&self) -> usize {
        self.trace_distance
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &d)| if d < best.1 { (i, d) } else { best })
            .0
    }

    pub fn optimal_m(&self) -> usize {
        self.m[self.argmin()]
    }
}

/// Result of [`fit_t2`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct T2Fit {
    pub t2_s: f64,
    pub optimal_m: usize,
    pub wall_clock_s: f64,
    pub target_m: usize,
    /// `(T2, optimal M)` for every candidate tried.
    pub scanned: Vec<(f64, usize)>,
}

/// Evaluates noisy error curves against the noiseless Trotter reference,
/// caching the per-`M` slices.
pub struct NoisyScanner<'a> {
    exp: &'a Experiment,
    caches: Vec<(usize, SliceCache)>,
    reference: DensityMatrix,
    normalize: bool,
}

impl<'a> NoisyScanner<'a> {
    pub fn new(exp: &'a Experiment, m_grid: &[usize], normalize: bool) -> Result<Self> {
        if m_grid.is_empty() {
            return Err(Error::InvalidInput("empty M grid".into()));
        }
        if let Some(&m) = m_grid.iter().find(|&&m| m > exp.reference_m) {
            return Err(Error::Config(format!(
                "M = {m} exceeds reference_M = {}",
                exp.reference_m
            )));
        }
        let caches = m_grid
            .iter()
            .map(|&m| Ok((m, SliceCache::build(exp, m)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            exp,
            caches,
            reference: exp.reference(EvolutionMode::Trotter)?,
            normalize,
        })
    }

    pub fn curve(&self, t2_s: f64) -> Result<NoisyCurve> {
        let n = self.exp.n();
        let noise = RelaxationParams::uniform_t2(n, t2_s)?;
        let mut curve = NoisyCurve {
            t2_s,
            m: Vec::with_capacity(self.caches.len()),
            wall_clock_s: Vec::with_capacity(self.caches.len()),
            trace_distance: Vec::with_capacity(self.caches.len()),
        };
        for (m, cache) in &self.caches {
            let state = cache.run(n, &noise)?.final_state.to_density();
            curve.m.push(*m);
            curve.wall_clock_s.push(cache.total_wall_clock_s);
            curve
                .trace_distance
                .push(compare_states(&state, &self.reference, self.normalize)?);
        }
        Ok(curve)
    }
}

/// `count` log-spaced values spanning `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// One-dimensional search for the single `T2` (no `T1`) whose noisy sweep has
/// its minimum error closest to `target_m`. Among equally close candidates the
/// geometric middle one is returned.
pub fn fit_t2(exp: &Experiment, m_grid: &[usize], t2_grid: &[f64], target_m: usize, normalize: bool) -> Result<T2Fit> {
    if t2_grid.is_empty() {
        return Err(Error::InvalidInput("empty T2 grid".into()));
    }
    let scanner = NoisyScanner::new(exp, m_grid, normalize)?;
    let curves = t2_grid.iter().map(|&t2| scanner.curve(t2)).collect::<Result<Vec<_>>>()?;
    let scanned: Vec<(f64, usize)> = curves.iter().map(|c| (c.t2_s, c.optimal_m())).collect();
    let best = scanned.iter().map(|(_, m)| m.abs_diff(target_m)).min().expect("non-empty");
    let tied: Vec<usize> = (0..curves.len())
        .filter(|&i| scanned[i].1.abs_diff(target_m) == best)
        .collect();
    let pick = &curves[tied[tied.len() / 2]];
    let i = pick.argmin();
    Ok(T2Fit {
        t2_s: pick.t2_s,
        optimal_m: pick.m[i],
        wall_clock_s: pick.wall_clock_s[i],
        target_m,
        scanned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::PureState;

    fn paper(modes: Vec<Mode>, m_list: Vec<usize>) -> Experiment {
        let mut cfg = ExperimentConfig::paper();
        cfg.modes = modes;
        cfg.schedule.m_list = m_list;
        cfg.resolve(None).unwrap()
    }

    #[test]
    fn preset_round_trips() {
        let cfg = ExperimentConfig::paper();
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(cfg, back);
        let exp = back.resolve(None).unwrap();
        assert_eq!(exp.targets, vec![CutAssignment::parse("101").unwrap()]);
    }

    #[test]
    fn config_errors() {
        let mut cfg = ExperimentConfig::paper();
        cfg.schedule.reference_m = 100;
        assert!(matches!(cfg.resolve(None), Err(Error::Config(_))));

        let mut cfg = ExperimentConfig::paper();
        cfg.noise = NoiseBlock::default();
        assert!(matches!(cfg.resolve(None), Err(Error::Config(_))));

        let mut cfg = ExperimentConfig::paper();
        cfg.graph_file = Some("g.json".into());
        assert!(matches!(cfg.resolve(None), Err(Error::Config(_))));

        assert!(ExperimentConfig::from_json("{\"schedule\": 1}").is_err());
        let mut cfg = ExperimentConfig::paper();
        cfg.nmr.sign = 0;
        assert!(cfg.resolve(None).is_err());
    }

    #[test]
    fn compare_identical_is_zero() {
        let rho = PureState::basis(3, 5).unwrap().to_density();
        assert_eq!(compare_states(&rho, &rho, true).unwrap(), 0.0);
        assert_eq!(compare_states(&rho, &rho, false).unwrap(), 0.0);
    }

    #[test]
    fn compare_rejects_identity_when_normalizing() {
        let mixed = DensityMatrix::maximally_mixed(2);
        let rho = PureState::basis(2, 1).unwrap().to_density();
        assert!(compare_states(&mixed, &rho, true).is_err());
        assert!(compare_states(&mixed, &rho, false).is_ok());
    }

    #[test]
    fn self_reference_row_is_zero() {
        let exp = paper(vec![Mode::Ideal, Mode::Trotter], vec![15, 400]);
        let rows = exp.sweep(SweepOptions::default()).unwrap();
        assert_eq!(rows.len(), 4);
        for row in rows.iter().filter(|r| r.m == 400) {
            assert_eq!(row.trace_distance, 0.0);
        }
        assert!(rows[0].wall_clock_s < rows[2].wall_clock_s);
    }

    #[test]
    fn csv_header_is_exact() {
        let rows = vec![SweepRow {
            m: 15,
            wall_clock_s: 0.0575,
            trace_distance: 0.5,
            p_target: 0.65,
            mode: Mode::Trotter,
        }];
        let mut out = Vec::new();
        write_csv(&rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("15,0.0575,0.5,0.65,trotter"));
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.05, 5.0, 5);
        assert!((g[0] - 0.05).abs() < 1e-15 && (g[4] - 5.0).abs() < 1e-12);
        assert!((g[2] - 0.5).abs() < 1e-12);
    }
}
