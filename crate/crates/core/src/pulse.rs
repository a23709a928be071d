//! Compiles Trotter slices into three-spin NMR pulse schedules.
//!
//! Each slice is `R_x(θ) · [refocusing block] · R_x(θ)`. The refocusing block
//! is four free-evolution delays `α, β, γ, δ` separated by 180° x pulses.
//! Relative to spin 1, spin 2 is inverted for `γ, δ` and spin 3 for `β, γ`,
//! so coupling `ij` accumulates the effective time
//!
//! ```text
//! τ12 = α + β - γ - δ
//! τ13 = α - β - γ + δ
//! τ23 = α - β + γ - δ
//! ```
//!
//! Node weights are realized by moving each spin's reference frame during `α`,
//! the one segment in which no spin is inverted. During that segment spin `i`
//! evolves under `Δω_i σ_z,i` (rad/s).
//!
//! A schedule built with sign `σ` realizes `exp(+iσ c H_p)` for the problem
//! part of each slice, so `σ = -1` reproduces the engine's `exp(-i c H_p)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::engine::{slice_unitary_trotter, Schedule};
use crate::error::{Error, Result};
use crate::hamiltonians::{build_driver, build_nmr, NmrSystem};
use crate::maxcut::WeightedGraph;
use crate::quantum::{distance_up_to_phase, hermitian_exp, pauli_on, Operator, Pauli};

/// Qubit pairs in constraint order: (1,2), (1,3), (2,3).
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Toggling-frame sign of each qubit during segments α, β, γ, δ.
pub const SPIN_SIGNS: [[f64; 4]; 3] = [
    [1.0, 1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0, 1.0],
];

/// Qubit → spin assignment; bijective.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpinMapping(Vec<usize>);

impl SpinMapping {
    pub fn new(qubit_to_spin: Vec<usize>) -> Result<Self> {
        let n = qubit_to_spin.len();
        let mut seen = vec![false; n];
        for &s in &qubit_to_spin {
            if s >= n || std::mem::replace(&mut seen[s], true) {
                return Err(Error::InvalidInput(format!(
                    "spin mapping {qubit_to_spin:?} is not a permutation"
                )));
            }
        }
        Ok(Self(qubit_to_spin))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn spin(&self, qubit: usize) -> usize {
        self.0[qubit]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Couplings (Hz) of the qubit pairs in [`PAIRS`] order.
    pub fn pair_couplings(&self, nmr: &NmrSystem) -> [f64; 3] {
        PAIRS.map(|(i, j)| nmr.coupling(self.spin(i), self.spin(j)))
    }

    /// The coupling network relabeled into qubit order, on resonance.
    pub fn qubit_system(&self, nmr: &NmrSystem) -> Result<NmrSystem> {
        let n = self.len();
        let mut couplings = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let jhz = nmr.coupling(self.spin(i), self.spin(j));
                if jhz != 0.0 {
                    couplings.push((i, j, jhz));
                }
            }
        }
        NmrSystem::new(vec![0.0; n], &couplings)
    }
}

/// Free-evolution segment lengths in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RefocusingDelays {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl RefocusingDelays {
    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self {
            alpha: a[0],
            beta: a[1],
            gamma: a[2],
            delta: a[3],
        }
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// Effective coupling times `(τ12, τ13, τ23)` these delays produce.
    pub fn effective_times(&self) -> [f64; 3] {
        let d = self.as_array();
        PAIRS.map(|(i, j)| (0..4).map(|k| SPIN_SIGNS[i][k] * SPIN_SIGNS[j][k] * d[k]).sum())
    }
}

/// How the one free parameter of the delay system is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayBaseline {
    /// `β = 0`, lifted uniformly if any other delay would be negative.
    #[default]
    BetaZero,
    /// Smallest total delay; the shortest segment is zero.
    MinTotal,
}

/// Solve for nonnegative `α, β, γ, δ` with the given effective coupling times
/// `(τ12, τ13, τ23)` in seconds.
///
/// Adding the same constant to all four delays leaves every effective time
/// unchanged, so a nonnegative solution always exists.
pub fn solve_delays(couplings_hz: [f64; 3], effective_s: [f64; 3], baseline: DelayBaseline) -> Result<RefocusingDelays> {
    if let Some(j) = couplings_hz.iter().find(|j| !j.is_finite() || **j == 0.0) {
        return Err(Error::InvalidInput(format!("refocusing needs nonzero finite couplings, got {j}")));
    }
    if let Some(t) = effective_s.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite effective time {t}")));
    }
    let [t12, t13, t23] = effective_s;
    // β = 0 particular solution.
    let mut d = [(t13 + t23) / 2.0, 0.0, (t23 - t12) / 2.0, (t13 - t12) / 2.0];
    let lowest = d.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = match baseline {
        DelayBaseline::BetaZero => (-lowest).max(0.0),
        DelayBaseline::MinTotal => -lowest,
    };
    for x in &mut d {
        *x = (*x + shift).max(0.0);
    }
    Ok(RefocusingDelays::from_array(d))
}

/// Durations of the idealized pulses; only added to wall-clock time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseTiming {
    /// Length of each 180° refocusing pulse.
    pub refocus_pulse_s: f64,
    /// Length of each driver rotation pulse.
    pub driver_pulse_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompileOptions {
    pub baseline: DelayBaseline,
    pub timing: PulseTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSchedule {
    pub m: usize,
    /// x-rotation angle of each of the two driver pulses, per qubit.
    pub theta_rad: f64,
    #[serde(rename = "delays_s")]
    pub delays: RefocusingDelays,
    /// Per-qubit frame offset during `α`.
    pub frame_shift_rad_s: Vec<f64>,
    pub wall_clock_s: f64,
    /// Requested `(τ12, τ13, τ23)`.
    #[serde(skip)]
    pub coupling_targets_s: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub sign: i32,
    pub slices: Vec<SliceSchedule>,
    pub total_wall_clock_s: f64,
}

impl PulseSchedule {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check_sign(sign: i32) -> Result<f64> {
    match sign {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        other => Err(Error::out_of_range("sign", other, "+1 or -1")),
    }
}

fn check_three_spins(graph: &WeightedGraph, nmr: &NmrSystem, mapping: &SpinMapping) -> Result<()> {
    if graph.n() != 3 {
        return Err(Error::InvalidInput(format!(
            "the refocusing template covers three spins, graph has {}",
            graph.n()
        )));
    }
    if nmr.n() != 3 || mapping.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: if nmr.n() != 3 { nmr.n() } else { mapping.len() },
        });
    }
    Ok(())
}

/// Pulse parameters of slice `m`.
pub fn compile_slice(
    sched: &Schedule,
    m: usize,
    graph: &WeightedGraph,
    nmr: &NmrSystem,
    mapping: &SpinMapping,
    sign: i32,
    options: &CompileOptions,
) -> Result<SliceSchedule> {
    let sigma = check_sign(sign)?;
    check_three_spins(graph, nmr, mapping)?;
    if m > sched.m_max {
        return Err(Error::out_of_range("slice index", m, format!("0..={}", sched.m_max)));
    }
    let f = sched.fraction(m);
    let theta = sched.g_scale * (1.0 - f) * sched.dt;
    // Problem phase accumulated in this slice.
    let c = f * sched.dt * sched.h_scale;

    let couplings = mapping.pair_couplings(nmr);
    let mut targets = [0.0; 3];
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        let w = graph.edge_weight(i, j);
        if w != 0.0 && couplings[k] == 0.0 {
            return Err(Error::InvalidInput(format!(
                "edge ({i}, {j}) has weight {w} but its spins are uncoupled"
            )));
        }
        if w != 0.0 {
            targets[k] = sigma * c * w / (PI * couplings[k]);
        }
    }
    let solve_j = couplings.map(|j| if j == 0.0 { 1.0 } else { j });
    let delays = solve_delays(solve_j, targets, options.baseline)?;

    let node_phase: Vec<f64> = graph.node_weights().iter().map(|w| sigma * c * w / 2.0).collect();
    let frame_shift_rad_s = if node_phase.iter().all(|&p| p == 0.0) {
        vec![0.0; 3]
    } else if delays.alpha > 0.0 {
        node_phase.iter().map(|p| p / delays.alpha).collect()
    } else {
        return Err(Error::InvalidInput(format!(
            "slice {m}: alpha is zero, no segment can host the node-weight frame shift"
        )));
    };

    let mut wall = delays.total();
    if wall > 0.0 {
        wall += 4.0 * options.timing.refocus_pulse_s;
    }
    if theta != 0.0 {
        wall += 2.0 * options.timing.driver_pulse_s;
    }
    Ok(SliceSchedule {
        m,
        theta_rad: theta,
        delays,
        frame_shift_rad_s,
        wall_clock_s: wall,
        coupling_targets_s: targets,
    })
}

/// All `M + 1` slices with wall-clock accounting.
pub fn compile(
    sched: &Schedule,
    graph: &WeightedGraph,
    nmr: &NmrSystem,
    mapping: &SpinMapping,
    sign: i32,
    options: &CompileOptions,
) -> Result<PulseSchedule> {
    let slices = (0..=sched.m_max)
        .map(|m| compile_slice(sched, m, graph, nmr, mapping, sign, options))
        .collect::<Result<Vec<_>>>()?;
    let total_wall_clock_s = slices.iter().map(|s| s.wall_clock_s).sum();
    Ok(PulseSchedule {
        sign,
        slices,
        total_wall_clock_s,
    })
}

/// Ideal propagator of the refocusing block for a three-spin system already
/// in qubit order.
pub fn delay_block_unitary(delays: &RefocusingDelays, frame_shift_rad_s: &[f64], qubit_system: &NmrSystem) -> Result<Operator> {
    let n = 3;
    if frame_shift_rad_s.len() != n || qubit_system.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: frame_shift_rad_s.len(),
        });
    }
    let free = build_nmr(qubit_system)?;
    // -ω Z / 2 = Δω Z  =>  ω = -2 Δω
    let shifted = build_nmr(&qubit_system.with_larmor(frame_shift_rad_s.iter().map(|w| -2.0 * w).collect())?)?;
    let flips: Vec<Operator> = (0..n)
        .map(|q| hermitian_exp(&pauli_on(n, Pauli::X, q)?, PI / 2.0))
        .collect::<Result<_>>()?;

    let segments = delays.as_array();
    let mut u = Operator::identity(n);
    for k in 0..4 {
        let h = if k == 0 { &shifted } else { &free };
        u = &hermitian_exp(h, segments[k])? * &u;
        for (q, signs) in SPIN_SIGNS.iter().enumerate() {
            let next = if k == 3 { 1.0 } else { signs[k + 1] };
            if signs[k] != next {
                u = &flips[q] * &u;
            }
        }
    }
    Ok(u)
}

/// Ideal propagator of one compiled slice: driver pulses, refocusing block,
/// driver pulses.
pub fn slice_pulse_unitary(slice: &SliceSchedule, nmr: &NmrSystem, mapping: &SpinMapping) -> Result<Operator> {
    let system = mapping.qubit_system(nmr)?;
    let block = delay_block_unitary(&slice.delays, &slice.frame_shift_rad_s, &system)?;
    let rotation = hermitian_exp(&build_driver(3)?.operator, slice.theta_rad / 2.0)?;
    Ok(&(&rotation * &block) * &rotation)
}

/// Largest (over slices) phase-insensitive spectral distance between the
/// simulated pulse propagator and the engine's Trotter slice. The engine is
/// evaluated with problem Hamiltonian `-σ H_p`, the term a sign-`σ` schedule
/// realizes.
pub fn verify_schedule(
    ps: &PulseSchedule,
    sched: &Schedule,
    h_b: &Operator,
    h_p: &Operator,
    nmr: &NmrSystem,
    mapping: &SpinMapping,
) -> Result<f64> {
    let sigma = check_sign(ps.sign)?;
    if ps.slices.len() != sched.slices() {
        return Err(Error::DimensionMismatch {
            expected: sched.slices(),
            actual: ps.slices.len(),
        });
    }
    let target_problem = h_p.scale(-sigma);
    let mut worst: f64 = 0.0;
    for slice in &ps.slices {
        let pulses = slice_pulse_unitary(slice, nmr, mapping)?;
        let engine = slice_unitary_trotter(sched, slice.m, h_b, &target_problem)?;
        worst = worst.max(distance_up_to_phase(&pulses, &engine)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::build_problem;

    #[test]
    fn zero_targets_give_zero_delays() {
        let d = solve_delays([50.0, 224.0, -311.0], [0.0; 3], DelayBaseline::MinTotal).unwrap();
        assert_eq!(d, RefocusingDelays::default());
    }

    #[test]
    fn delays_satisfy_constraints() {
        let targets = [-3.0e-3, 1.2e-3, 0.4e-3];
        for baseline in [DelayBaseline::BetaZero, DelayBaseline::MinTotal] {
            let d = solve_delays([1.0; 3], targets, baseline).unwrap();
            assert!(d.as_array().iter().all(|&x| x >= 0.0));
            for (got, want) in d.effective_times().iter().zip(targets) {
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn beta_zero_lifts_when_needed() {
        // α would be negative with β = 0.
        let d = solve_delays([1.0; 3], [1e-3, -2e-3, -1e-3], DelayBaseline::BetaZero).unwrap();
        assert!(d.beta > 0.0);
        assert_eq!(d.as_array().iter().copied().fold(f64::INFINITY, f64::min), 0.0);
    }

    #[test]
    fn rejects_zero_coupling() {
        assert!(solve_delays([0.0, 1.0, 1.0], [0.0; 3], DelayBaseline::BetaZero).is_err());
    }

    #[test]
    fn mapping_validation() {
        assert!(SpinMapping::new(vec![0, 0, 1]).is_err());
        assert!(SpinMapping::new(vec![0, 3, 1]).is_err());
        let m = SpinMapping::new(vec![2, 0, 1]).unwrap();
        let nmr = NmrSystem::paper_molecule();
        // qubit pair (0,1) -> spins (2,0) = J_HC
        assert_eq!(m.pair_couplings(&nmr), [224.0, -311.0, 50.0]);
    }

    #[test]
    fn equal_delays_refocus_to_identity() {
        let nmr = NmrSystem::paper_molecule();
        let d = RefocusingDelays {
            alpha: 1.3e-3,
            beta: 1.3e-3,
            gamma: 1.3e-3,
            delta: 1.3e-3,
        };
        let u = delay_block_unitary(&d, &[0.0; 3], &nmr).unwrap();
        assert!(distance_up_to_phase(&u, &Operator::identity(3)).unwrap() < 1e-10);
    }

    #[test]
    fn single_slice_schedule() {
        let g = WeightedGraph::paper_instance();
        let nmr = NmrSystem::paper_molecule();
        let ps = compile(&Schedule::paper(0), &g, &nmr, &SpinMapping::identity(3), -1, &CompileOptions::default()).unwrap();
        assert_eq!(ps.slices.len(), 1);
        assert_eq!(ps.slices[0].delays, RefocusingDelays::default());
        assert_eq!(ps.total_wall_clock_s, 0.0);
        assert!((ps.slices[0].theta_rad - 0.5887).abs() < 1e-15);
    }

    #[test]
    fn rejects_wrong_sizes_and_signs() {
        let g2 = WeightedGraph::new(2, vec![0.0; 2], &[(0, 1, 1.0)]).unwrap();
        let nmr = NmrSystem::paper_molecule();
        let id = SpinMapping::identity(3);
        let opts = CompileOptions::default();
        assert!(compile(&Schedule::paper(4), &g2, &nmr, &id, -1, &opts).is_err());
        let g = WeightedGraph::paper_instance();
        assert!(compile(&Schedule::paper(4), &g, &nmr, &id, 0, &opts).is_err());
        assert!(compile_slice(&Schedule::paper(4), 5, &g, &nmr, &id, -1, &opts).is_err());
    }

    #[test]
    fn alpha_zero_with_node_weights_is_an_error() {
        // A lone (1,2) edge needs only γ and δ, leaving α = 0.
        let nmr = NmrSystem::paper_molecule();
        let id = SpinMapping::identity(3);
        let opts = CompileOptions::default();
        let g = WeightedGraph::new(3, vec![1.0; 3], &[(0, 1, 2.0)]).unwrap();
        assert!(compile_slice(&Schedule::paper(10), 10, &g, &nmr, &id, -1, &opts).is_err());
        let bare = g.with_node_weights(vec![0.0; 3]).unwrap();
        let s = compile_slice(&Schedule::paper(10), 10, &bare, &nmr, &id, -1, &opts).unwrap();
        assert_eq!(s.delays.alpha, 0.0);
    }

    #[test]
    fn pulse_timing_adds_wall_clock() {
        let g = WeightedGraph::paper_instance();
        let nmr = NmrSystem::paper_molecule();
        let id = SpinMapping::identity(3);
        let base = compile_slice(&Schedule::paper(10), 5, &g, &nmr, &id, -1, &CompileOptions::default()).unwrap();
        let opts = CompileOptions {
            timing: PulseTiming {
                refocus_pulse_s: 1e-5,
                driver_pulse_s: 2e-5,
            },
            ..Default::default()
        };
        let timed = compile_slice(&Schedule::paper(10), 5, &g, &nmr, &id, -1, &opts).unwrap();
        assert!((timed.wall_clock_s - base.wall_clock_s - 8e-5).abs() < 1e-15);
    }

    #[test]
    fn sign_plus_realizes_negated_problem() {
        let g = WeightedGraph::paper_instance();
        let nmr = NmrSystem::paper_molecule();
        let id = SpinMapping::identity(3);
        let sched = Schedule::paper(6);
        let hb = build_driver(3).unwrap().operator;
        let hp = build_problem(&g, true).unwrap().operator();
        let ps = compile(&sched, &g, &nmr, &id, 1, &CompileOptions::default()).unwrap();
        assert!(verify_schedule(&ps, &sched, &hb, &hp, &nmr, &id).unwrap() < 1e-8);
    }
}
