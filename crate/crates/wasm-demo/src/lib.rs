//! Browser bindings for three interactive views: the spectral gap of a
//! three-node instance, greedy hill-climb basins, and the error-versus-M
//! curve under dephasing. Results are flat `f64` arrays so the page needs no
//! glue beyond `wasm-bindgen`'s typed-array conversion.

use adiabat_core::experiment::{ExperimentConfig, Mode, NoisyScanner};
use adiabat_core::hamiltonians::{build_driver, build_problem, gap_scan_refined, GapKind};
use adiabat_core::maxcut::{greedy_search, payoff_table, CutAssignment, GreedyRule, WeightedGraph};
use adiabat_core::Result;
use wasm_bindgen::prelude::*;

fn js(err: adiabat_core::Error) -> JsError {
    JsError::new(&err.to_string())
}

fn three_node(nodes: &[f64], edges: &[f64]) -> Result<WeightedGraph> {
    if nodes.len() != 3 || edges.len() != 3 {
        return Err(adiabat_core::Error::InvalidInput(
            "expected three node weights and three edge weights (12, 13, 23)".into(),
        ));
    }
    WeightedGraph::new(3, nodes.to_vec(), &[(0, 1, edges[0]), (0, 2, edges[1]), (1, 2, edges[2])])
}

/// `[g_min, s_at_min, s_0, gap_0, s_1, gap_1, …]` for the top-two gap.
#[wasm_bindgen]
pub fn gap_curve(nodes: &[f64], edges: &[f64], points: usize) -> std::result::Result<Vec<f64>, JsError> {
    let g = three_node(nodes, edges).map_err(js)?;
    let h_b = build_driver(3).map_err(js)?.operator;
    let h_p = build_problem(&g, true).map_err(js)?.operator();
    let scan = gap_scan_refined(&h_b, &h_p, points, GapKind::TopTwo, 2).map_err(js)?;
    let mut out = vec![scan.g_min, scan.s_at_min];
    for (s, gap) in scan.grid.iter().zip(&scan.gaps) {
        out.extend([*s, *gap]);
    }
    Ok(out)
}

/// Eight payoffs followed by the eight greedy endpoints (as basis indices),
/// both indexed by start assignment.
#[wasm_bindgen]
pub fn greedy_basins(nodes: &[f64], edges: &[f64], accept_equal: bool) -> std::result::Result<Vec<f64>, JsError> {
    let g = three_node(nodes, edges).map_err(js)?;
    let rule = if accept_equal { GreedyRule::AcceptEqual } else { GreedyRule::Strict };
    let mut out = payoff_table(&g).map_err(js)?.values;
    for bits in 0..8 {
        let start = CutAssignment::new(3, bits).map_err(js)?;
        out.push(greedy_search(&g, start, rule).map_err(js)?.endpoint.bits() as f64);
    }
    Ok(out)
}

/// Noisy error against the noiseless long-run reference for the built-in
/// three-spin experiment: rows of `[M, wall_clock_s, trace_distance]` for
/// `M = 10, 15, …, m_max`.
#[wasm_bindgen]
pub fn error_curve(t2_s: f64, m_max: usize) -> std::result::Result<Vec<f64>, JsError> {
    let mut cfg = ExperimentConfig::paper();
    cfg.modes = vec![Mode::Trotter];
    let exp = cfg.resolve(None).map_err(js)?;
    let m_grid: Vec<usize> = (10..=m_max.clamp(10, 200)).step_by(5).collect();
    let curve = NoisyScanner::new(&exp, &m_grid, true)
        .and_then(|s| s.curve(t2_s))
        .map_err(js)?;
    Ok((0..curve.m.len())
        .flat_map(|i| [curve.m[i] as f64, curve.wall_clock_s[i], curve.trace_distance[i]])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const NODES: [f64; 3] = [2.0, 2.0, 2.0];
    const EDGES: [f64; 3] = [2.0, 1.0, 3.0];

    #[test]
    fn gap_curve_layout() {
        let r = gap_curve(&NODES, &EDGES, 101).unwrap();
        assert!((r[0] - 0.52363).abs() < 1e-4);
        assert_eq!((r.len() - 2) % 2, 0);
        assert_eq!(r[2], 0.0);
        assert!((r[3] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn greedy_basins_layout() {
        let r = greedy_basins(&NODES, &EDGES, true).unwrap();
        assert_eq!(&r[..8], &[0.0, 6.0, 7.0, 7.0, 5.0, 9.0, 8.0, 6.0]);
        assert_eq!(r[8..].iter().filter(|&&e| e == 6.0).count(), 4);
    }

    #[test]
    fn error_curve_has_interior_minimum() {
        let r = error_curve(0.4, 120).unwrap();
        assert_eq!(r.len(), 3 * 23);
        let (k, _) = r
            .chunks(3)
            .enumerate()
            .fold((0, f64::INFINITY), |b, (i, row)| if row[2] < b.1 { (i, row[2]) } else { b });
        assert!(k > 0 && k < 22);
    }
}
