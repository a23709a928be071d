//! Discrete-time adiabatic evolution.
//!
//! A run starts in the highest excited state of the driver, `|+>^n`, and
//! applies `M + 1` slices `m = 0..=M`. Slice `m` evolves for `dt` under
//! `(1 - m/M) g H_b + (m/M) h H_p`, either exactly ("ideal") or through the
//! symmetric split `B(dt/2) P(dt) B(dt/2)` ("trotter") that only ever applies
//! one of the two Hamiltonians at a time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxcut::CutAssignment;
use crate::quantum::{apply_unitary, hadamard_all, hermitian_exp, DensityMatrix, Evolve, Operator, PureState};

/// Discretization of an adiabatic run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Last slice index; the run has `m_max + 1` slices.
    pub m_max: usize,
    /// Algorithm time per slice (dimensionless).
    pub dt: f64,
    /// Driver strength `g`.
    pub g_scale: f64,
    /// Problem strength `h`.
    pub h_scale: f64,
}

impl Schedule {
    pub fn new(m_max: usize, dt: f64, g_scale: f64, h_scale: f64) -> Result<Self> {
        for (what, v) in [("dt", dt), ("g_scale", g_scale), ("h_scale", h_scale)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::out_of_range(what, v, "> 0"));
            }
        }
        Ok(Self {
            m_max,
            dt,
            g_scale,
            h_scale,
        })
    }

    /// `g = 0.5887`, `h = 0.5`, `dt = 1`.
    pub fn paper(m_max: usize) -> Self {
        Self::new(m_max, 1.0, 0.5887, 0.5).expect("static schedule is valid")
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(self.m_max, dt, self.g_scale, self.h_scale)
    }

    pub fn slices(&self) -> usize {
        self.m_max + 1
    }

    /// `m / M`, defined as 0 for the single-slice schedule `M = 0`.
    pub fn fraction(&self, m: usize) -> f64 {
        if self.m_max == 0 {
            0.0
        } else {
            m as f64 / self.m_max as f64
        }
    }

    /// `T = (M + 1) dt`.
    pub fn total_time(&self) -> f64 {
        self.slices() as f64 * self.dt
    }

    /// Physical duration of slice `m` when the fixed-strength Hamiltonians
    /// are stretched in time: `(1 - m/M) dt / g + (m/M) dt / h`.
    pub fn slice_duration(&self, m: usize) -> f64 {
        let f = self.fraction(m);
        (1.0 - f) * self.dt / self.g_scale + f * self.dt / self.h_scale
    }

    fn check_slice(&self, m: usize) -> Result<()> {
        if m > self.m_max {
            return Err(Error::out_of_range("slice index", m, format!("0..={}", self.m_max)));
        }
        Ok(())
    }

    /// Driver and problem coefficients of slice `m`.
    fn coefficients(&self, m: usize) -> (f64, f64) {
        let f = self.fraction(m);
        ((1.0 - f) * self.g_scale, f * self.h_scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolutionMode {
    Ideal,
    Trotter,
}

/// Either kind of simulated state.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl State {
    pub fn dim(&self) -> usize {
        match self {
            State::Pure(p) => p.dim(),
            State::Mixed(r) => r.dim(),
        }
    }

    pub fn population(&self, index: usize) -> f64 {
        match self {
            State::Pure(p) => p.probability(index),
            State::Mixed(r) => r.population(index),
        }
    }

    pub fn populations(&self) -> Vec<f64> {
        match self {
            State::Pure(p) => p.probabilities(),
            State::Mixed(r) => r.diagonal(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            State::Pure(p) => p.to_density(),
            State::Mixed(r) => r.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub final_state: State,
    /// State after each slice, when recording was requested.
    pub snapshots: Option<Vec<State>>,
    /// Target population after each slice, when recording was requested.
    pub success_trace: Option<Vec<f64>>,
}

/// `|+>^n`, the top eigenvector of `Σ σ_x`.
pub fn prepare_initial(n: usize) -> Result<PureState> {
    if n == 0 {
        return Err(Error::InvalidInput("register needs at least one qubit".into()));
    }
    apply_unitary(&PureState::basis(n, 0)?, &hadamard_all(n)?)
}

fn check_pair(h_b: &Operator, h_p: &Operator) -> Result<()> {
    if h_b.dim() != h_p.dim() {
        return Err(Error::DimensionMismatch {
            expected: h_b.dim(),
            actual: h_p.dim(),
        });
    }
    Ok(())
}

fn generator(a: f64, h_b: &Operator, b: f64, h_p: &Operator) -> Operator {
    &h_b.scale(a) + &h_p.scale(b)
}

/// `exp(-i [(1 - m/M) g H_b + (m/M) h H_p] dt)`.
pub fn slice_unitary_ideal(sched: &Schedule, m: usize, h_b: &Operator, h_p: &Operator) -> Result<Operator> {
    sched.check_slice(m)?;
    check_pair(h_b, h_p)?;
    let (a, b) = sched.coefficients(m);
    hermitian_exp(&generator(a, h_b, b, h_p), sched.dt)
}

/// `B · P · B` with `B = exp(-i g H_b (1 - m/M) dt / 2)` and
/// `P = exp(-i h H_p (m/M) dt)`.
///
/// At the endpoints one factor is the identity and the product collapses to
/// the single exponential, which is evaluated exactly as in
/// [`slice_unitary_ideal`].
pub fn slice_unitary_trotter(sched: &Schedule, m: usize, h_b: &Operator, h_p: &Operator) -> Result<Operator> {
    sched.check_slice(m)?;
    check_pair(h_b, h_p)?;
    let (a, b) = sched.coefficients(m);
    if a == 0.0 || b == 0.0 {
        return hermitian_exp(&generator(a, h_b, b, h_p), sched.dt);
    }
    let outer = hermitian_exp(&h_b.scale(a), sched.dt / 2.0)?;
    let middle = hermitian_exp(&h_p.scale(b), sched.dt)?;
    Ok(&(&outer * &middle) * &outer)
}

/// Spectral norm `||U_ideal(m) - U_trotter(m)||`.
pub fn trotter_slice_error(sched: &Schedule, m: usize, h_b: &Operator, h_p: &Operator) -> Result<f64> {
    let ideal = slice_unitary_ideal(sched, m, h_b, h_p)?;
    let split = slice_unitary_trotter(sched, m, h_b, h_p)?;
    Ok((&ideal - &split).spectral_norm())
}

/// Pauli-coefficient norm `sqrt(Σ_P |ε_P|^2)` of the leading third-order
/// term in the exponent of the symmetric split,
/// `dt^3 ([B,[B,A]]/12 - [A,[A,B]]/24)` with `A` the outer (driver)
/// generator and `B` the inner (problem) generator.
pub fn trotter_leading_error(sched: &Schedule, m: usize, h_b: &Operator, h_p: &Operator) -> Result<f64> {
    sched.check_slice(m)?;
    check_pair(h_b, h_p)?;
    let (a, b) = sched.coefficients(m);
    let outer = h_b.scale(a);
    let inner = h_p.scale(b);
    let bba = inner.commutator(&inner.commutator(&outer));
    let aab = outer.commutator(&outer.commutator(&inner));
    let lead = (&bba.scale(1.0 / 12.0) - &aab.scale(1.0 / 24.0)).scale(sched.dt.powi(3));
    // Parseval over the Pauli basis; the commutators are traceless.
    Ok(lead.frobenius_norm() / (lead.dim() as f64).sqrt())
}

fn slice_unitary(sched: &Schedule, m: usize, h_b: &Operator, h_p: &Operator, mode: EvolutionMode) -> Result<Operator> {
    match mode {
        EvolutionMode::Ideal => slice_unitary_ideal(sched, m, h_b, h_p),
        EvolutionMode::Trotter => slice_unitary_trotter(sched, m, h_b, h_p),
    }
}

/// All `M + 1` slice unitaries of a run, in application order.
pub fn slice_unitaries(sched: &Schedule, h_b: &Operator, h_p: &Operator, mode: EvolutionMode) -> Result<Vec<Operator>> {
    (0..=sched.m_max)
        .map(|m| slice_unitary(sched, m, h_b, h_p, mode))
        .collect()
}

/// Prepare `|+>^n` and apply slices `m = 0..=M` in order. With `record`,
/// snapshots and the population of the given cut are kept after each slice.
pub fn run(
    sched: &Schedule,
    h_b: &Operator,
    h_p: &Operator,
    mode: EvolutionMode,
    record: Option<CutAssignment>,
) -> Result<EvolutionResult> {
    check_pair(h_b, h_p)?;
    if let Some(target) = record {
        if 1usize << target.n() != h_b.dim() {
            return Err(Error::DimensionMismatch {
                expected: h_b.dim(),
                actual: 1 << target.n(),
            });
        }
    }
    let mut psi = prepare_initial(h_b.n_qubits())?;
    let mut snapshots = record.map(|_| Vec::with_capacity(sched.slices()));
    let mut trace = record.map(|_| Vec::with_capacity(sched.slices()));
    for m in 0..=sched.m_max {
        let u = slice_unitary(sched, m, h_b, h_p, mode)?;
        psi = psi.evolve_unchecked(&u);
        if let (Some(snaps), Some(tr), Some(target)) = (snapshots.as_mut(), trace.as_mut(), record) {
            tr.push(psi.probability(target.bits()));
            snaps.push(State::Pure(psi.clone()));
        }
    }
    if (psi.norm_sqr() - 1.0).abs() > 1e-8 {
        return Err(Error::Numerical(format!("norm drifted to {}", psi.norm_sqr())));
    }
    Ok(EvolutionResult {
        final_state: State::Pure(psi),
        snapshots,
        success_trace: trace,
    })
}

/// `|<s|ψ>|^2` or `<s|ρ|s>`.
pub fn success_probability(state: &State, target: CutAssignment) -> Result<f64> {
    if 1usize << target.n() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            actual: 1 << target.n(),
        });
    }
    Ok(state.population(target.bits()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_driver, build_problem};
    use crate::maxcut::WeightedGraph;
    use crate::quantum::hermitian_exp;

    fn paper_ops() -> (Operator, Operator) {
        let hb = build_driver(3).unwrap().operator;
        let hp = build_problem(&WeightedGraph::paper_instance(), true).unwrap().operator();
        (hb, hp)
    }

    #[test]
    fn initial_state_is_uniform_superposition() {
        let one = prepare_initial(1).unwrap();
        for a in one.amplitudes().iter() {
            assert!((a.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
        let three = prepare_initial(3).unwrap();
        for a in three.amplitudes().iter() {
            assert!((a.re - 1.0 / 8f64.sqrt()).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn initial_state_is_top_driver_eigenvector() {
        let (hb, _) = paper_ops();
        let (_, vectors) = hb.eigh().unwrap();
        let top = crate::quantum::PureState::new(vectors.column(7).iter().copied().collect()).unwrap();
        let overlap = top.inner(&prepare_initial(3).unwrap()).norm();
        assert!((overlap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn schedule_arithmetic() {
        let s = Schedule::paper(100);
        assert_eq!(s.slices(), 101);
        assert_eq!(s.total_time(), 101.0);
        assert!((s.slice_duration(0) - 1.0 / 0.5887).abs() < 1e-12);
        assert!((s.slice_duration(100) - 2.0).abs() < 1e-12);
        let single = Schedule::paper(0);
        assert_eq!(single.fraction(0), 0.0);
        assert!(Schedule::new(3, 0.0, 1.0, 1.0).is_err());
        assert!(Schedule::new(3, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn ideal_endpoints() {
        let (hb, hp) = paper_ops();
        let s = Schedule::new(10, 0.3, 1.0, 1.0).unwrap();
        let u0 = slice_unitary_ideal(&s, 0, &hb, &hp).unwrap();
        assert!(u0.max_abs_diff(&hermitian_exp(&hb, 0.3).unwrap()) < 1e-12);
        let um = slice_unitary_ideal(&s, 10, &hb, &hp).unwrap();
        assert!(um.is_diagonal());
        assert!(um.max_abs_diff(&hermitian_exp(&hp, 0.3).unwrap()) < 1e-12);
        let mid = slice_unitary_ideal(&s, 5, &hb, &hp).unwrap();
        let explicit = &hb.scale(0.5) + &hp.scale(0.5);
        assert!(mid.max_abs_diff(&hermitian_exp(&explicit, 0.3).unwrap()) < 1e-12);
        assert!(slice_unitary_ideal(&s, 11, &hb, &hp).is_err());
    }

    #[test]
    fn trotter_endpoints_match_ideal_exactly() {
        let (hb, hp) = paper_ops();
        let s = Schedule::paper(100);
        for m in [0, 100] {
            assert_eq!(slice_unitary_trotter(&s, m, &hb, &hp).unwrap(), slice_unitary_ideal(&s, m, &hb, &hp).unwrap());
            assert_eq!(trotter_slice_error(&s, m, &hb, &hp).unwrap(), 0.0);
        }
        assert!(slice_unitary_trotter(&s, 101, &hb, &hp).is_err());
    }

    #[test]
    fn slices_are_unitary() {
        let (hb, hp) = paper_ops();
        let s = Schedule::paper(20);
        for m in 0..=20 {
            assert!(slice_unitary_ideal(&s, m, &hb, &hp).unwrap().unitarity_error() < 1e-10);
            assert!(slice_unitary_trotter(&s, m, &hb, &hp).unwrap().unitarity_error() < 1e-10);
        }
    }

    #[test]
    fn zero_problem_keeps_uniform_populations() {
        let hb = build_driver(3).unwrap().operator;
        let hp = Operator::zeros(3);
        for mode in [EvolutionMode::Ideal, EvolutionMode::Trotter] {
            let r = run(&Schedule::paper(7), &hb, &hp, mode, None).unwrap();
            for p in r.final_state.populations() {
                assert!((p - 0.125).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn recording_keeps_one_snapshot_per_slice() {
        let (hb, hp) = paper_ops();
        let target = CutAssignment::parse("101").unwrap();
        let r = run(&Schedule::paper(9), &hb, &hp, EvolutionMode::Trotter, Some(target)).unwrap();
        assert_eq!(r.snapshots.as_ref().unwrap().len(), 10);
        let trace = r.success_trace.unwrap();
        assert_eq!(trace.len(), 10);
        assert_eq!(*trace.last().unwrap(), r.final_state.population(5));
        let wrong = CutAssignment::parse("10").unwrap();
        assert!(run(&Schedule::paper(3), &hb, &hp, EvolutionMode::Ideal, Some(wrong)).is_err());
        assert!(run(&Schedule::paper(3), &hb, &build_driver(2).unwrap().operator, EvolutionMode::Ideal, None).is_err());
    }

    #[test]
    fn success_probability_examples() {
        let target = CutAssignment::parse("101").unwrap();
        let basis = State::Pure(crate::quantum::PureState::basis(3, 5).unwrap());
        assert_eq!(success_probability(&basis, target).unwrap(), 1.0);
        let uniform = State::Pure(prepare_initial(3).unwrap());
        assert!((success_probability(&uniform, target).unwrap() - 0.125).abs() < 1e-12);
        let mixed = State::Mixed(uniform.to_density());
        assert!((success_probability(&mixed, target).unwrap() - 0.125).abs() < 1e-12);
    }
}
