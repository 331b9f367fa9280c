//! Figure-level numerical experiments: parameter sweeps and disorder
//! ensembles, packaged with enough provenance to re-run bit-identically.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::boundstates::{
    classify_numeric_bound_states, dephasing_bound_states, dissipative_bound_states,
    in_gap_defect_state, BoundState,
};
use crate::dynamics::{
    build_initial_state, eigendecompose, parity_index, DephasingPropagator, Eigensystem,
    InitialState,
};
use crate::error::{Error, Result};
use crate::lattice::{
    build_dissipative_hamiltonian, build_ssh_hamiltonian_with_bonds, BandEdges, ChainSpec, Model,
};
use crate::nonmarkov::compute_n_t_windowed;

/// Sweep axis: probe coupling or hopping ratio `t2/t1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    Gamma,
    Ratio,
}

/// Sampling/integration knobs shared by the trace-based experiments.
/// Times are in `1/t1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    /// Trace horizon.
    pub t_max: f64,
    /// Sampling step (pure reporting grid; propagation is exact).
    pub dt: f64,
    /// Upper end of the quantifier window.
    pub t_end: f64,
    /// Transient cut before the quantifier window.
    pub t_burn: f64,
}

impl RunParams {
    /// The windows used throughout: `dt = 0.02/t1`, `T = t_max = 150/t1`,
    /// and a `20/t1` burn-in for the dissipative quantifier only.
    pub fn defaults_for(model: Model) -> Self {
        RunParams {
            t_max: 150.0,
            dt: 0.02,
            t_end: 150.0,
            t_burn: match model {
                Model::Dephasing => 0.0,
                Model::Dissipative => 20.0,
            },
        }
    }
}

/// Everything needed to reproduce a result file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    /// Template configuration; the swept fields vary per point.
    pub spec: ChainSpec,
    /// Free-form run parameters (axis ranges, grids, seeds, windows).
    pub parameters: Map<String, Value>,
}

impl Provenance {
    pub fn new(spec: &ChainSpec) -> Self {
        Provenance {
            tool: format!("ssh-probe {}", env!("CARGO_PKG_VERSION")),
            spec: spec.clone(),
            parameters: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }
}

/// One record of a sweep; unused fields stay `None` for the given
/// experiment kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointRecord {
    pub axis_value: f64,
    pub gamma: f64,
    pub t2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    pub band_edges: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
    pub bound_states: Vec<BoundState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_t: Option<f64>,
    /// Parity index of the in-gap defect state, when one is found.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub in_gap_parity: Option<f64>,
}

/// Ensemble statistics over seeds at fixed `(delta, axis_value)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub delta: f64,
    pub axis_value: f64,
    pub n_t_mean: f64,
    pub n_t_std: f64,
    pub in_gap_parity_mean: Option<f64>,
}

/// Output container for all experiment kinds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: AxisKind,
    pub axis_values: Vec<f64>,
    pub points: Vec<PointRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub aggregates: Vec<AggregateRecord>,
    pub provenance: Provenance,
}

fn linspace(range: (f64, f64), n: usize) -> Result<Vec<f64>> {
    if n < 1 || (n == 1 && range.0 != range.1) {
        return Err(Error::invalid("need at least 2 sweep points".to_string()));
    }
    if !range.0.is_finite() || !range.1.is_finite() || range.1 < range.0 {
        return Err(Error::invalid(format!(
            "bad sweep range [{}, {}]",
            range.0, range.1
        )));
    }
    if n == 1 {
        return Ok(vec![range.0]);
    }
    let step = (range.1 - range.0) / (n - 1) as f64;
    Ok((0..n).map(|i| range.0 + i as f64 * step).collect())
}

#[cfg(feature = "parallel")]
fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

fn axis_spec(template: &ChainSpec, axis: AxisKind, value: f64) -> ChainSpec {
    let mut spec = template.clone();
    match axis {
        AxisKind::Gamma => spec.gamma = value,
        AxisKind::Ratio => spec.t2 = value * spec.t1,
    }
    spec
}

fn analytic_states(spec: &ChainSpec) -> Result<Vec<BoundState>> {
    match spec.model {
        Model::Dephasing => dephasing_bound_states(spec.t1, spec.t2, spec.gamma),
        Model::Dissipative => dissipative_bound_states(spec.t1, spec.t2, spec.gamma),
    }
}

fn build_and_diagonalize(spec: &ChainSpec) -> Result<(Eigensystem, BandEdges)> {
    let h = match spec.model {
        Model::Dephasing => crate::lattice::build_defect_hamiltonian(spec)?,
        Model::Dissipative => build_dissipative_hamiltonian(spec)?,
    };
    Ok((eigendecompose(&h)?, BandEdges::new(spec.t1, spec.t2)))
}

/// Energy spectrum (bands plus bound states) along `gamma` or `t2/t1`.
///
/// Each point carries the full eigenvalue list of the defect Hamiltonian,
/// the band-edge overlay, and the bound-state identification: closed-form
/// states for ordered chains, numeric detections for disordered ones.
pub fn spectrum_sweep(
    template: &ChainSpec,
    axis: AxisKind,
    range: (f64, f64),
    n_points: usize,
) -> Result<SweepResult> {
    template.validate()?;
    let axis_values = linspace(range, n_points)?;
    if axis == AxisKind::Gamma && range.0 < 0.0 || axis == AxisKind::Ratio && range.0 < 0.0 {
        return Err(Error::invalid("sweep range must be non-negative".to_string()));
    }
    let points: Vec<Result<PointRecord>> = map_indexed(axis_values.len(), |i| {
        let value = axis_values[i];
        let spec = axis_spec(template, axis, value);
        let (eig, edges) = build_and_diagonalize(&spec)?;
        let bound_states = if spec.disorder.is_none() && spec.gamma > 0.0 && spec.t2 > 0.0 {
            analytic_states(&spec)?
        } else {
            classify_numeric_bound_states(&eig, &edges, spec.n_cells, None).states
        };
        let in_gap_parity = in_gap_defect_state(&eig, &edges, spec.n_cells, 1.5, 15)
            .map(|s| s.parity_index);
        Ok(PointRecord {
            axis_value: value,
            gamma: spec.gamma,
            t2: spec.t2,
            delta: spec.disorder.map(|d| d.delta),
            seed: spec.disorder.map(|d| d.seed),
            initial: None,
            band_edges: edges.as_array(),
            eigenvalues: Some(eig.eigenvalues.clone()),
            bound_states,
            n_t: None,
            in_gap_parity,
        })
    });
    Ok(SweepResult {
        axis,
        axis_values: axis_values.clone(),
        points: points.into_iter().collect::<Result<Vec<_>>>()?,
        aggregates: Vec::new(),
        provenance: Provenance::new(template)
            .with("axis", json!(axis))
            .with("range", json!([range.0, range.1]))
            .with("n_points", json!(n_points)),
    })
}

/// `N_T(t2/t1)` curves for each coupling and each initial state.
///
/// For the dephasing model every listed initial state is propagated; the
/// dissipative model always starts from the excited probe and ignores the
/// initial-state list.
pub fn nonmarkov_sweep(
    template: &ChainSpec,
    ratio_range: (f64, f64),
    n_ratios: usize,
    gammas: &[f64],
    initials: &[InitialState],
    params: &RunParams,
) -> Result<SweepResult> {
    template.validate()?;
    let ratios = linspace(ratio_range, n_ratios)?;
    if gammas.is_empty() {
        return Err(Error::invalid("need at least one coupling".to_string()));
    }

    let mut tasks: Vec<(f64, f64, Option<&InitialState>)> = Vec::new();
    match template.model {
        Model::Dephasing => {
            let kinds: Vec<&InitialState> = if initials.is_empty() {
                vec![&InitialState::AntisymTwoCell]
            } else {
                initials.iter().collect()
            };
            for &ratio in &ratios {
                for &gamma in gammas {
                    for &kind in &kinds {
                        tasks.push((ratio, gamma, Some(kind)));
                    }
                }
            }
        }
        Model::Dissipative => {
            for &ratio in &ratios {
                for &gamma in gammas {
                    tasks.push((ratio, gamma, None));
                }
            }
        }
    }

    let points: Vec<Result<PointRecord>> = map_indexed(tasks.len(), |i| {
        let (ratio, gamma, kind) = &tasks[i];
        let mut spec = axis_spec(template, AxisKind::Ratio, *ratio);
        spec.gamma = *gamma;
        let record = nonmarkov_point(&spec, *kind, params)?;
        Ok(record)
    });

    Ok(SweepResult {
        axis: AxisKind::Ratio,
        axis_values: ratios,
        points: points.into_iter().collect::<Result<Vec<_>>>()?,
        aggregates: Vec::new(),
        provenance: Provenance::new(template)
            .with("ratio_range", json!([ratio_range.0, ratio_range.1]))
            .with("n_ratios", json!(n_ratios))
            .with("gammas", json!(gammas))
            .with(
                "initials",
                json!(initials.iter().map(|k| k.label()).collect::<Vec<_>>()),
            )
            .with("t_max", json!(params.t_max))
            .with("dt", json!(params.dt))
            .with("T", json!(params.t_end))
            .with("t_burn", json!(params.t_burn)),
    })
}

fn nonmarkov_point(
    spec: &ChainSpec,
    kind: Option<&InitialState>,
    params: &RunParams,
) -> Result<PointRecord> {
    let edges = BandEdges::new(spec.t1, spec.t2);
    let (n_t, initial_label) = match spec.model {
        Model::Dephasing => {
            let kind = kind.unwrap_or(&InitialState::AntisymTwoCell);
            let psi0 = build_initial_state(kind, spec.n_cells)?;
            let trace =
                crate::dynamics::coherence_dephasing(spec, &psi0, params.t_max, params.dt)?;
            let r = compute_n_t_windowed(&trace, params.t_burn, params.t_end)?;
            (r.n_t, Some(kind.label().to_string()))
        }
        Model::Dissipative => {
            let trace = crate::dynamics::coherence_dissipative(spec, params.t_max, params.dt)?;
            let r = compute_n_t_windowed(&trace, params.t_burn, params.t_end)?;
            (r.n_t, None)
        }
    };
    Ok(PointRecord {
        axis_value: spec.t2 / spec.t1,
        gamma: spec.gamma,
        t2: spec.t2,
        delta: spec.disorder.map(|d| d.delta),
        seed: spec.disorder.map(|d| d.seed),
        initial: initial_label,
        band_edges: edges.as_array(),
        eigenvalues: None,
        bound_states: Vec::new(),
        n_t: Some(n_t),
        in_gap_parity: None,
    })
}

/// Disordered dephasing ensemble: for every `(delta, seed, ratio)` a fresh
/// bond realization is drawn, and the record carries `N_T`, the in-gap
/// defect-state parity, the out-of-band detections, and (optionally) the
/// full spectrum. Ensemble means and spreads are aggregated per
/// `(delta, ratio)`.
#[allow(clippy::too_many_arguments)]
pub fn disorder_ensemble(
    template: &ChainSpec,
    deltas: &[f64],
    seeds: &[u64],
    ratio_range: (f64, f64),
    n_ratios: usize,
    initial: &InitialState,
    params: &RunParams,
    keep_spectra: bool,
) -> Result<SweepResult> {
    if template.model != Model::Dephasing {
        return Err(Error::invalid(
            "the disorder protocol is defined for the dephasing model".to_string(),
        ));
    }
    template.validate()?;
    if deltas.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("need at least one delta and one seed".to_string()));
    }
    let ratios = linspace(ratio_range, n_ratios)?;

    let mut tasks: Vec<(f64, u64, f64)> = Vec::new();
    for &delta in deltas {
        for &seed in seeds {
            for &ratio in &ratios {
                tasks.push((delta, seed, ratio));
            }
        }
    }

    let psi0 = build_initial_state(initial, template.n_cells)?;
    let points: Vec<Result<PointRecord>> = map_indexed(tasks.len(), |i| {
        let (delta, seed, ratio) = tasks[i];
        disorder_point(template, delta, seed, ratio, &psi0, initial, params, keep_spectra)
    });
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;

    // deterministic reduction ordered by (delta, ratio)
    let mut aggregates = Vec::new();
    for &delta in deltas {
        for &ratio in &ratios {
            let group: Vec<&PointRecord> = points
                .iter()
                .filter(|p| p.delta == Some(delta) && p.axis_value == ratio)
                .collect();
            let n = group.len() as f64;
            let vals: Vec<f64> = group.iter().filter_map(|p| p.n_t).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let parities: Vec<f64> = group.iter().filter_map(|p| p.in_gap_parity).collect();
            aggregates.push(AggregateRecord {
                delta,
                axis_value: ratio,
                n_t_mean: mean,
                n_t_std: var.sqrt(),
                in_gap_parity_mean: (!parities.is_empty())
                    .then(|| parities.iter().sum::<f64>() / parities.len() as f64),
            });
        }
    }

    Ok(SweepResult {
        axis: AxisKind::Ratio,
        axis_values: ratios,
        points,
        aggregates,
        provenance: Provenance::new(template)
            .with("deltas", json!(deltas))
            .with("seeds", json!(seeds))
            .with("ratio_range", json!([ratio_range.0, ratio_range.1]))
            .with("n_ratios", json!(n_ratios))
            .with("initial", json!(initial.label()))
            .with("t_max", json!(params.t_max))
            .with("dt", json!(params.dt))
            .with("T", json!(params.t_end))
            .with("t_burn", json!(params.t_burn))
            .with("keep_spectra", json!(keep_spectra)),
    })
}

#[allow(clippy::too_many_arguments)]
fn disorder_point(
    template: &ChainSpec,
    delta: f64,
    seed: u64,
    ratio: f64,
    psi0: &DVector<f64>,
    initial: &InitialState,
    params: &RunParams,
    keep_spectra: bool,
) -> Result<PointRecord> {
    let n = template.n_cells;
    let t1 = template.t1;
    let t2 = ratio * t1;
    let bonds = crate::lattice::sample_disorder(t1, delta, n, seed)?;
    let h = build_ssh_hamiltonian_with_bonds(n, &bonds, t2)?;
    let mut hbar = h.clone();
    hbar.matrix[(0, 0)] += template.gamma;
    hbar.matrix[(1, 1)] += template.gamma;

    let eig_h = eigendecompose(&h)?;
    let eig_hbar = eigendecompose(&hbar)?;
    let edges = BandEdges::new(t1, t2);

    let steps = (params.t_max / params.dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * params.dt).collect();
    let q = DephasingPropagator::new(&eig_h, &eig_hbar).trace(psi0, &times);
    let trace = crate::dynamics::CoherenceTrace {
        l: q.iter().map(|q| q.norm_sqr()).collect(),
        q,
        dt: params.dt,
        times,
        model: Model::Dephasing,
        spec: ChainSpec {
            t2,
            gamma: template.gamma,
            disorder: Some(crate::lattice::Disorder { delta, seed }),
            ..template.clone()
        },
        warnings: Vec::new(),
    };
    let n_t = compute_n_t_windowed(&trace, params.t_burn, params.t_end)?.n_t;

    let detection = classify_numeric_bound_states(&eig_hbar, &edges, n, None);
    let in_gap_parity =
        in_gap_defect_state(&eig_hbar, &edges, n, 1.5, 15).map(|s| s.parity_index);

    Ok(PointRecord {
        axis_value: ratio,
        gamma: template.gamma,
        t2,
        delta: Some(delta),
        seed: Some(seed),
        initial: Some(initial.label().to_string()),
        band_edges: edges.as_array(),
        eigenvalues: keep_spectra.then(|| eig_hbar.eigenvalues.clone()),
        bound_states: detection.states,
        n_t: Some(n_t),
        in_gap_parity,
    })
}

/// Parity index of an eigensystem column (chain part), used by sweep
/// consumers that need per-state parities beyond the packaged records.
pub fn eigenstate_parity(eig: &Eigensystem, index: usize, n_cells: usize) -> Result<f64> {
    let col: Vec<f64> = eig.eigenvectors.column(index).iter().copied().collect();
    parity_index(&col, n_cells)
}
