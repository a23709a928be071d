//! Problem, driver, interpolated and NMR Hamiltonians, and spectral gap scans.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxcut::WeightedGraph;
use crate::quantum::{pauli_on, Operator, Pauli};

/// Largest register the dense builders accept.
pub const MAX_QUBITS: usize = 12;

/// Local refinement passes used by [`gap_scan`].
pub const GAP_REFINE_LEVELS: usize = 3;

fn qubit_guard(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::out_of_range("qubit count", n, format!("1..={MAX_QUBITS}")));
    }
    Ok(())
}

/// `±1` eigenvalue of `σ_z` on `qubit` for basis index `s` (qubit 0 = MSB).
fn z_value(n: usize, s: usize, qubit: usize) -> f64 {
    if (s >> (n - 1 - qubit)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Diagonal MAXCUT Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemHamiltonian {
    pub n: usize,
    pub diagonal: Vec<f64>,
    pub include_identity: bool,
}

impl ProblemHamiltonian {
    pub fn operator(&self) -> Operator {
        Operator::from_diagonal(&self.diagonal).expect("diagonal length is 2^n")
    }

    /// The constant removed when identity terms are dropped:
    /// `(Σ w_i + Σ w_ij) / 2`.
    pub fn identity_offset(g: &WeightedGraph) -> f64 {
        (g.node_weights().iter().sum::<f64>() + g.edges().map(|(_, _, w)| w).sum::<f64>()) / 2.0
    }
}

/// `H_p = Σ_i w_i (I - Z_i)/2 + Σ_{i<j} w_ij (I - Z_i Z_j)/2`, optionally
/// without the identity parts.
pub fn build_problem(g: &WeightedGraph, include_identity: bool) -> Result<ProblemHamiltonian> {
    let n = g.n();
    qubit_guard(n)?;
    let id = if include_identity { 1.0 } else { 0.0 };
    let diagonal = (0..1usize << n)
        .map(|s| {
            let nodes: f64 = g
                .node_weights()
                .iter()
                .enumerate()
                .map(|(i, w)| w * (id - z_value(n, s, i)) / 2.0)
                .sum();
            let couplings: f64 = g
                .edges()
                .map(|(i, j, w)| w * (id - z_value(n, s, i) * z_value(n, s, j)) / 2.0)
                .sum();
            nodes + couplings
        })
        .collect();
    Ok(ProblemHamiltonian {
        n,
        diagonal,
        include_identity,
    })
}

/// Transverse-field driver `H_b = Σ_i σ_x,i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverHamiltonian {
    pub n: usize,
    pub operator: Operator,
}

pub fn build_driver(n: usize) -> Result<DriverHamiltonian> {
    qubit_guard(n)?;
    let mut op = Operator::zeros(n);
    for i in 0..n {
        op = &op + &pauli_on(n, Pauli::X, i)?;
    }
    Ok(DriverHamiltonian { n, operator: op })
}

/// `(1 - s) H_b + s H_p` for `s` in `[0, 1]`.
pub fn interpolate(h_b: &Operator, h_p: &Operator, s: f64) -> Result<Operator> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::out_of_range("interpolation parameter", s, "[0, 1]"));
    }
    if h_b.dim() != h_p.dim() {
        return Err(Error::DimensionMismatch {
            expected: h_b.dim(),
            actual: h_p.dim(),
        });
    }
    Ok(&h_b.scale(1.0 - s) + &h_p.scale(s))
}

/// Which pair of adjacent eigenvalues a gap scan follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapKind {
    /// Highest two eigenvalues; the relevant pair when maximizing payoff.
    #[default]
    TopTwo,
    /// Lowest two eigenvalues, the ground-state formulation.
    BottomTwo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapScanResult {
    /// Every evaluated `s`, ascending (uniform grid plus refinement points).
    pub grid: Vec<f64>,
    pub gaps: Vec<f64>,
    pub g_min: f64,
    pub s_at_min: f64,
}

fn gap_at(h_b: &Operator, h_p: &Operator, s: f64, which: GapKind) -> Result<f64> {
    let values = interpolate(h_b, h_p, s)?.eigenvalues()?;
    let d = values.len();
    Ok(match which {
        GapKind::TopTwo => values[d - 1] - values[d - 2],
        GapKind::BottomTwo => values[1] - values[0],
    })
}

/// Gap along `H(s)` on a uniform grid with endpoints, followed by
/// [`GAP_REFINE_LEVELS`] passes of 10x local refinement around the minimum.
pub fn gap_scan(h_b: &Operator, h_p: &Operator, grid_points: usize, which: GapKind) -> Result<GapScanResult> {
    gap_scan_refined(h_b, h_p, grid_points, which, GAP_REFINE_LEVELS)
}

pub fn gap_scan_refined(
    h_b: &Operator,
    h_p: &Operator,
    grid_points: usize,
    which: GapKind,
    refine_levels: usize,
) -> Result<GapScanResult> {
    if grid_points < 2 {
        return Err(Error::out_of_range("grid points", grid_points, ">= 2"));
    }
    let step = 1.0 / (grid_points - 1) as f64;
    let mut samples: Vec<(f64, f64)> = (0..grid_points)
        .map(|k| {
            let s = if k == grid_points - 1 { 1.0 } else { k as f64 * step };
            gap_at(h_b, h_p, s, which).map(|g| (s, g))
        })
        .collect::<Result<_>>()?;

    let argmin = |samples: &[(f64, f64)]| {
        samples
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least two samples")
    };

    let mut spacing = step;
    for _ in 0..refine_levels {
        let (center, _) = argmin(&samples);
        spacing /= 10.0;
        for k in -10i32..=10 {
            let s = center + k as f64 * spacing;
            if k != 0 && (0.0..=1.0).contains(&s) {
                samples.push((s, gap_at(h_b, h_p, s, which)?));
            }
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    samples.dedup_by(|a, b| a.0 == b.0);
    let (s_at_min, g_min) = argmin(&samples);
    let (grid, gaps) = samples.into_iter().unzip();
    Ok(GapScanResult {
        grid,
        gaps,
        g_min,
        s_at_min,
    })
}

/// Weakly coupled spin-1/2 nuclei: Larmor (or rotating-frame offset)
/// frequencies in rad/s and scalar couplings in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct NmrSystem {
    larmor: Vec<f64>,
    couplings: Vec<Vec<f64>>,
}

/// `{"larmor_hz": [...], "couplings_hz": [[i, j, J], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmrFile {
    pub larmor_hz: Vec<f64>,
    pub couplings_hz: Vec<(usize, usize, f64)>,
}

impl NmrSystem {
    pub fn new(larmor_rad_s: Vec<f64>, couplings_hz: &[(usize, usize, f64)]) -> Result<Self> {
        let n = larmor_rad_s.len();
        qubit_guard(n)?;
        let mut couplings = vec![vec![0.0; n]; n];
        for &(i, j, jhz) in couplings_hz {
            if i >= n || j >= n {
                return Err(Error::out_of_range("spin index", i.max(j), format!("0..{n}")));
            }
            if i == j {
                return Err(Error::InvalidInput(format!("self-coupling on spin {i}")));
            }
            if !jhz.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite coupling ({i}, {j})")));
            }
            if couplings[i][j] != 0.0 {
                return Err(Error::InvalidInput(format!("duplicate coupling ({i}, {j})")));
            }
            couplings[i][j] = jhz;
            couplings[j][i] = jhz;
        }
        Ok(Self {
            larmor: larmor_rad_s,
            couplings,
        })
    }

    /// CHFBr2 with spins ordered (1H, 19F, 13C), on resonance in the rotating
    /// frame: J_HF = 50 Hz, J_HC = 224 Hz, J_FC = -311 Hz.
    pub fn paper_molecule() -> Self {
        Self::new(vec![0.0; 3], &[(0, 1, 50.0), (0, 2, 224.0), (1, 2, -311.0)])
            .expect("static system is valid")
    }

    pub fn n(&self) -> usize {
        self.larmor.len()
    }

    pub fn larmor(&self) -> &[f64] {
        &self.larmor
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i][j]
    }

    pub fn with_larmor(&self, larmor_rad_s: Vec<f64>) -> Result<Self> {
        if larmor_rad_s.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: larmor_rad_s.len(),
            });
        }
        Ok(Self {
            larmor: larmor_rad_s,
            couplings: self.couplings.clone(),
        })
    }

    pub fn from_file(file: &NmrFile) -> Result<Self> {
        let larmor = file.larmor_hz.iter().map(|f| 2.0 * PI * f).collect();
        Self::new(larmor, &file.couplings_hz)
    }

    pub fn to_file(&self) -> NmrFile {
        let n = self.n();
        let mut couplings_hz = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.couplings[i][j] != 0.0 {
                    couplings_hz.push((i, j, self.couplings[i][j]));
                }
            }
        }
        NmrFile {
            larmor_hz: self.larmor.iter().map(|w| w / (2.0 * PI)).collect(),
            couplings_hz,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: NmrFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_file(&file)
    }
}

/// `-Σ_i ω_i Z_i / 2 + Σ_{i<j} π J_ij Z_i Z_j / 2` in rad/s.
pub fn build_nmr(system: &NmrSystem) -> Result<Operator> {
    let n = system.n();
    qubit_guard(n)?;
    let diagonal: Vec<f64> = (0..1usize << n)
        .map(|s| {
            let zeeman: f64 = (0..n).map(|i| -system.larmor[i] * z_value(n, s, i) / 2.0).sum();
            let mut coupling = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    coupling += PI * system.couplings[i][j] * z_value(n, s, i) * z_value(n, s, j) / 2.0;
                }
            }
            zeeman + coupling
        })
        .collect();
    Operator::from_diagonal(&diagonal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxcut::payoff_table;

    #[test]
    fn paper_problem_diagonal_is_payoff_table() {
        let hp = build_problem(&WeightedGraph::paper_instance(), true).unwrap();
        assert_eq!(hp.diagonal, vec![0.0, 6.0, 7.0, 7.0, 5.0, 9.0, 8.0, 6.0]);
    }

    #[test]
    fn identity_free_problem_is_shifted() {
        let g = WeightedGraph::paper_instance();
        let with = build_problem(&g, true).unwrap();
        let without = build_problem(&g, false).unwrap();
        let offset = ProblemHamiltonian::identity_offset(&g);
        assert_eq!(offset, 6.0);
        for (a, b) in with.diagonal.iter().zip(&without.diagonal) {
            assert!((a - b - offset).abs() < 1e-12);
        }
    }

    #[test]
    fn single_edge_problem() {
        let g = WeightedGraph::new(2, vec![0.0; 2], &[(0, 1, 1.0)]).unwrap();
        assert_eq!(build_problem(&g, true).unwrap().diagonal, vec![0.0, 1.0, 1.0, 0.0]);
        let zero = WeightedGraph::new(2, vec![0.0; 2], &[]).unwrap();
        assert!(build_problem(&zero, true).unwrap().diagonal.iter().all(|&v| v == 0.0));
        assert_eq!(payoff_table(&g).unwrap().values, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn driver_spectrum() {
        let one = build_driver(1).unwrap();
        assert_eq!(one.operator.eigenvalues().unwrap().iter().map(|v| v.round()).collect::<Vec<_>>(), vec![-1.0, 1.0]);

        let three = build_driver(3).unwrap();
        let values = three.operator.eigenvalues().unwrap();
        assert!((values[7] - 3.0).abs() < 1e-12);
        assert!((values[6] - 1.0).abs() < 1e-12);
        let (_, vectors) = three.operator.eigh().unwrap();
        let top = vectors.column(7);
        let phase = top[0] / top[0].norm();
        for a in top.iter() {
            assert!((a / phase - num_complex::Complex64::new(1.0 / 8f64.sqrt(), 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn driver_multiplicities_are_binomial() {
        let values = build_driver(4).unwrap().operator.eigenvalues().unwrap();
        let count = |e: f64| values.iter().filter(|v| (*v - e).abs() < 1e-9).count();
        assert_eq!([count(-4.0), count(-2.0), count(0.0), count(2.0), count(4.0)], [1, 4, 6, 4, 1]);
    }

    #[test]
    fn interpolation_endpoints_and_range() {
        let hb = build_driver(3).unwrap().operator;
        let hp = build_problem(&WeightedGraph::paper_instance(), true).unwrap().operator();
        assert_eq!(interpolate(&hb, &hp, 0.0).unwrap(), hb);
        assert_eq!(interpolate(&hb, &hp, 1.0).unwrap(), hp);
        assert!(interpolate(&hb, &hp, 1.5).is_err());
        assert!(interpolate(&hb, &build_driver(2).unwrap().operator, 0.5).is_err());
    }

    #[test]
    fn gap_endpoints_for_paper_instance() {
        let hb = build_driver(3).unwrap().operator;
        let hp = build_problem(&WeightedGraph::paper_instance(), true).unwrap().operator();
        let scan = gap_scan(&hb, &hp, 11, GapKind::TopTwo).unwrap();
        assert!((scan.gaps[0] - 2.0).abs() < 1e-9);
        assert!((scan.gaps.last().unwrap() - 1.0).abs() < 1e-9);
        assert!(scan.grid.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(scan.g_min, scan.gaps.iter().copied().fold(f64::INFINITY, f64::min));
        assert!(gap_scan(&hb, &hp, 1, GapKind::TopTwo).is_err());
    }

    #[test]
    fn nmr_examples() {
        let single = NmrSystem::new(vec![2.0 * PI * 100.0], &[]).unwrap();
        let d = build_nmr(&single).unwrap().diagonal_real();
        assert!((d[0] + PI * 100.0).abs() < 1e-9);
        assert!((d[1] - PI * 100.0).abs() < 1e-9);

        let pair = NmrSystem::new(vec![0.0; 2], &[(0, 1, 2.0)]).unwrap();
        let d = build_nmr(&pair).unwrap().diagonal_real();
        for (got, want) in d.iter().zip([PI, -PI, -PI, PI]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn nmr_file_converts_hz() {
        let file: NmrFile = serde_json::from_str(r#"{"larmor_hz": [100.0, 0.0], "couplings_hz": [[0, 1, 5.0]]}"#).unwrap();
        let sys = NmrSystem::from_file(&file).unwrap();
        assert!((sys.larmor()[0] - 2.0 * PI * 100.0).abs() < 1e-9);
        assert_eq!(sys.coupling(1, 0), 5.0);
        let bad = NmrFile {
            larmor_hz: vec![0.0; 2],
            couplings_hz: vec![(0, 1, 1.0), (1, 0, 2.0)],
        };
        assert!(NmrSystem::from_file(&bad).is_err());
    }
}
