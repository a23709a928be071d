//! Independent per-spin relaxation and temporal-labeling state preparation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{prepare_initial, slice_unitaries, EvolutionMode, EvolutionResult, Schedule, State};
use crate::error::{Error, Result};
use crate::maxcut::CutAssignment;
use crate::pulse::PulseSchedule;
use crate::quantum::{DensityMatrix, Operator};

/// Per-spin relaxation times in seconds, indexed by qubit. `None` disables
/// that process.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RelaxationParams {
    #[serde(rename = "t1_s")]
    pub t1: Option<Vec<f64>>,
    #[serde(rename = "t2_s")]
    pub t2: Option<Vec<f64>>,
}

impl RelaxationParams {
    pub fn new(t1: Option<Vec<f64>>, t2: Option<Vec<f64>>) -> Result<Self> {
        let p = Self { t1, t2 };
        p.validate()?;
        Ok(p)
    }

    pub fn disabled() -> Self {
        Self::default()
    }

    /// Phase damping only, the same `T2` on every spin.
    pub fn uniform_t2(n: usize, t2: f64) -> Result<Self> {
        Self::new(None, Some(vec![t2; n]))
    }

    pub fn is_enabled(&self) -> bool {
        self.t1.is_some() || self.t2.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, times) in [("T1", &self.t1), ("T2", &self.t2)] {
            if let Some(times) = times {
                if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
                    return Err(Error::out_of_range(name, t, "> 0"));
                }
            }
        }
        if let (Some(t1), Some(t2)) = (&self.t1, &self.t2) {
            if t1.len() != t2.len() {
                return Err(Error::DimensionMismatch {
                    expected: t1.len(),
                    actual: t2.len(),
                });
            }
            if let Some(i) = (0..t1.len()).find(|&i| t2[i] > 2.0 * t1[i]) {
                return Err(Error::InvalidInput(format!(
                    "spin {i}: T2 = {} exceeds 2 T1 = {}",
                    t2[i],
                    2.0 * t1[i]
                )));
            }
        }
        Ok(())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        for times in [&self.t1, &self.t2].into_iter().flatten() {
            if times.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: times.len(),
                });
            }
        }
        Ok(())
    }
}

/// Single-qubit channel in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    pub ops: Vec<DMatrix<Complex64>>,
}

impl KrausChannel {
    pub fn identity() -> Self {
        Self {
            ops: vec![DMatrix::identity(2, 2)],
        }
    }

    /// Largest entry of `|Σ K^dag K - I|`.
    pub fn completeness_error(&self) -> f64 {
        let sum = self
            .ops
            .iter()
            .fold(DMatrix::<Complex64>::zeros(2, 2), |acc, k| acc + k.adjoint() * k);
        (sum - DMatrix::<Complex64>::identity(2, 2))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Choi matrix `Σ_k vec(K_k) vec(K_k)^dag` (column-stacked).
    pub fn choi(&self) -> DMatrix<Complex64> {
        self.ops.iter().fold(DMatrix::zeros(4, 4), |acc, k| {
            let v = DMatrix::from_iterator(4, 1, k.iter().copied());
            acc + &v * v.adjoint()
        })
    }

    /// Apply to qubit `qubit` of an `n`-qubit density matrix.
    pub fn apply_on(&self, rho: &DMatrix<Complex64>, n: usize, qubit: usize) -> DMatrix<Complex64> {
        let d = rho.nrows();
        let shift = n - 1 - qubit;
        let mask = 1usize << shift;
        DMatrix::from_fn(d, d, |a, b| {
            let (ai, bi) = ((a >> shift) & 1, (b >> shift) & 1);
            let (a0, b0) = (a & !mask, b & !mask);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in &self.ops {
                for x in 0..2 {
                    let kax = k[(ai, x)];
                    if kax.norm_sqr() == 0.0 {
                        continue;
                    }
                    for y in 0..2 {
                        acc += kax * rho[(a0 | (x << shift), b0 | (y << shift))] * k[(bi, y)].conj();
                    }
                }
            }
            acc
        })
    }
}

fn check_time(what: &'static str, constant: f64, tau: f64) -> Result<()> {
    if !(constant.is_finite() && constant > 0.0) {
        return Err(Error::out_of_range(what, constant, "> 0"));
    }
    if !(tau >= 0.0) {
        return Err(Error::out_of_range("tau", tau, ">= 0"));
    }
    Ok(())
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Dephasing that multiplies coherences by `exp(-tau / T2)`.
pub fn phase_damping(t2: f64, tau: f64) -> Result<KrausChannel> {
    check_time("T2", t2, tau)?;
    let lambda = (-tau / t2).exp();
    let k0 = DMatrix::identity(2, 2) * c(((1.0 + lambda) / 2.0).sqrt());
    let k1 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]) * c(((1.0 - lambda) / 2.0).sqrt());
    Ok(KrausChannel { ops: vec![k0, k1] })
}

/// Decay `|1> -> |0>` with probability `1 - exp(-tau / T1)`.
pub fn amplitude_damping(t1: f64, tau: f64) -> Result<KrausChannel> {
    check_time("T1", t1, tau)?;
    let gamma = 1.0 - (-tau / t1).exp();
    let k0 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - gamma).sqrt())]);
    let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0), c(gamma.sqrt()), c(0.0), c(0.0)]);
    Ok(KrausChannel { ops: vec![k0, k1] })
}

/// Per-spin channels for a relaxation interval. With both processes on, the
/// dephasing part uses the pure-dephasing time `1/Tφ = 1/T2 - 1/(2 T1)` so
/// coherences still decay as `exp(-tau / T2)` overall.
pub fn spin_channels(params: &RelaxationParams, n: usize, tau: f64) -> Result<Vec<Vec<KrausChannel>>> {
    params.validate()?;
    params.check_len(n)?;
    (0..n)
        .map(|q| {
            let mut chans = Vec::new();
            let t1 = params.t1.as_ref().map(|t| t[q]);
            if let Some(t1) = t1 {
                chans.push(amplitude_damping(t1, tau)?);
            }
            if let Some(t2) = params.t2.as_ref().map(|t| t[q]) {
                let rate = 1.0 / t2 - t1.map_or(0.0, |t1| 0.5 / t1);
                if rate > 0.0 {
                    chans.push(phase_damping(1.0 / rate, tau)?);
                }
            }
            Ok(chans)
        })
        .collect()
}

/// Relax every spin independently for `tau` seconds.
pub fn apply_relaxation(rho: &DensityMatrix, params: &RelaxationParams, tau: f64) -> Result<DensityMatrix> {
    if !(tau >= 0.0) {
        return Err(Error::out_of_range("tau", tau, ">= 0"));
    }
    let n = rho.n_qubits();
    let channels = spin_channels(params, n, tau)?;
    Ok(relax_with(rho, &channels))
}

fn relax_with(rho: &DensityMatrix, channels: &[Vec<KrausChannel>]) -> DensityMatrix {
    let n = rho.n_qubits();
    let mut mat = rho.matrix().clone();
    for (q, chans) in channels.iter().enumerate() {
        for ch in chans {
            mat = ch.apply_on(&mat, n, q);
        }
    }
    DensityMatrix::from_matrix_unchecked(mat)
}

/// Density-matrix propagation with a relaxation step after every slice.
/// `slice_unitaries` and `wall_clocks` must both have one entry per slice.
pub fn propagate_noisy(
    n: usize,
    unitaries: &[Operator],
    wall_clocks: &[f64],
    params: &RelaxationParams,
    record: Option<CutAssignment>,
) -> Result<EvolutionResult> {
    if unitaries.len() != wall_clocks.len() {
        return Err(Error::DimensionMismatch {
            expected: unitaries.len(),
            actual: wall_clocks.len(),
        });
    }
    if let Some(bad) = wall_clocks.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::InvalidInput(format!("slice wall clock {bad} is not a valid duration")));
    }
    params.validate()?;
    params.check_len(n)?;
    let mut rho = prepare_initial(n)?.to_density();
    let mut snapshots = record.map(|_| Vec::with_capacity(unitaries.len()));
    let mut trace = record.map(|_| Vec::with_capacity(unitaries.len()));
    for (u, &tau) in unitaries.iter().zip(wall_clocks) {
        rho = rho.apply_unchecked(u);
        if params.is_enabled() {
            rho = relax_with(&rho, &spin_channels(params, n, tau)?);
        }
        if let (Some(snaps), Some(tr), Some(target)) = (snapshots.as_mut(), trace.as_mut(), record) {
            tr.push(rho.population(target.bits()));
            snaps.push(State::Mixed(rho.clone()));
        }
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-9 {
        return Err(Error::Numerical(format!("trace drifted to {tr}")));
    }
    Ok(EvolutionResult {
        final_state: State::Mixed(rho),
        snapshots,
        success_trace: trace,
    })
}

/// Trotterized run with relaxation for each slice's compiled wall-clock time.
pub fn noisy_run(
    sched: &Schedule,
    compiled: &PulseSchedule,
    h_b: &Operator,
    h_p: &Operator,
    params: &RelaxationParams,
    record: Option<CutAssignment>,
) -> Result<EvolutionResult> {
    if compiled.slices.len() != sched.slices() {
        return Err(Error::DimensionMismatch {
            expected: sched.slices(),
            actual: compiled.slices.len(),
        });
    }
    let unitaries = slice_unitaries(sched, h_b, h_p, EvolutionMode::Trotter)?;
    let clocks: Vec<f64> = compiled.slices.iter().map(|s| s.wall_clock_s).collect();
    propagate_noisy(h_b.n_qubits(), &unitaries, &clocks, params, record)
}

/// High-temperature thermal state `I/d + Σ_i ε_i Z_i / d` (diagonal).
pub fn thermal_state(polarizations: &[f64]) -> Result<DensityMatrix> {
    let n = polarizations.len();
    if n == 0 {
        return Err(Error::InvalidInput("need at least one spin".into()));
    }
    let d = 1usize << n;
    let diag: Vec<f64> = (0..d)
        .map(|s| {
            let dev: f64 = polarizations
                .iter()
                .enumerate()
                .map(|(i, e)| if (s >> (n - 1 - i)) & 1 == 0 { *e } else { -*e })
                .sum();
            (1.0 + dev) / d as f64
        })
        .collect();
    DensityMatrix::from_diagonal(&diag)
}

/// Relabeled copies of a diagonal state: experiment `k` cyclically shifts the
/// populations of the non-`|0…0>` basis states by `k` places.
pub fn labeling_experiments(thermal: &DensityMatrix, experiments: usize) -> Result<Vec<DensityMatrix>> {
    check_diagonal(thermal)?;
    let pops = thermal.diagonal();
    let d = pops.len();
    let cycle = d - 1;
    (0..experiments)
        .map(|k| {
            let diag: Vec<f64> = (0..d)
                .map(|j| if j == 0 { pops[0] } else { pops[1 + (j - 1 + k) % cycle] })
                .collect();
            DensityMatrix::from_diagonal(&diag)
        })
        .collect()
}

fn check_diagonal(rho: &DensityMatrix) -> Result<()> {
    let d = rho.dim();
    let m = rho.matrix();
    for r in 0..d {
        for c in 0..d {
            if r != c && m[(r, c)].norm() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "temporal labeling needs diagonal inputs; entry ({r}, {c}) is {}",
                    m[(r, c)]
                )));
            }
        }
    }
    Ok(())
}

/// Average of the labeled experiments.
pub fn temporal_labeling(summands: &[DensityMatrix]) -> Result<DensityMatrix> {
    let first = summands
        .first()
        .ok_or_else(|| Error::InvalidInput("temporal labeling needs at least one experiment".into()))?;
    let d = first.dim();
    let mut acc = DMatrix::<Complex64>::zeros(d, d);
    for s in summands {
        if s.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: s.dim(),
            });
        }
        check_diagonal(s)?;
        acc += s.matrix();
    }
    DensityMatrix::new(acc / c(summands.len() as f64))
}

/// `(a, b)` when `rho = a |0…0><0…0| + b I` within `tol`.
pub fn effective_pure_parts(rho: &DensityMatrix, tol: f64) -> Option<(f64, f64)> {
    check_diagonal(rho).ok()?;
    let diag = rho.diagonal();
    let b = diag[1];
    if diag[1..].iter().any(|p| (p - b).abs() > tol) {
        return None;
    }
    Some((diag[0] - b, b))
}
