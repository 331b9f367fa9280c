//! Exact time evolution of the probe coherence by spectral decomposition.
//!
//! Both coupling schemes reduce to finite real-symmetric eigenproblems, so
//! traces carry no integrator error: the sampling step `dt` is purely a
//! reporting grid. For the dephasing scheme the coherence is the Loschmidt
//! amplitude
//!
//! ```text
//! q(t) = <psi0| e^{+i H t} e^{-i Hbar t} |psi0>
//! ```
//!
//! evaluated in the two eigenbases through the overlap matrix `M = V^T Vbar`;
//! for the dissipative scheme `q(t)` is the probe component of
//! `e^{-i Hcal t}` applied to the probe-excited basis vector.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    build_defect_hamiltonian, build_dissipative_hamiltonian, build_ssh_hamiltonian, ChainSpec,
    HamiltonianMatrix, Model,
};

/// Full spectral decomposition of a real symmetric Hamiltonian.
///
/// Eigenvalues are sorted ascending; eigenvector columns follow the same
/// order and are orthonormal.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Eigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Components of `state` in the eigenbasis, `V^T state`.
    pub fn project(&self, state: &DVector<f64>) -> DVector<f64> {
        self.eigenvectors.tr_mul(state)
    }

    /// Apply `e^{-i H t}` to a real state vector.
    pub fn evolve(&self, state: &DVector<f64>, t: f64) -> Vec<Complex64> {
        let coeffs = self.project(state);
        let n = self.dim();
        let mut re = DVector::zeros(n);
        let mut im = DVector::zeros(n);
        for j in 0..n {
            let phase = -self.eigenvalues[j] * t;
            re[j] = coeffs[j] * phase.cos();
            im[j] = coeffs[j] * phase.sin();
        }
        let out_re = &self.eigenvectors * re;
        let out_im = &self.eigenvectors * im;
        (0..n)
            .map(|i| Complex64::new(out_re[i], out_im[i]))
            .collect()
    }
}

/// Dense symmetric eigendecomposition with ascending eigenvalue order.
pub fn eigendecompose(h: &HamiltonianMatrix) -> Result<Eigensystem> {
    let scale = h.matrix.amax().max(1.0);
    if h.asymmetry() > 1e-10 * scale {
        return Err(Error::Numerical(
            "matrix is not symmetric to machine precision".to_string(),
        ));
    }
    let se = h.matrix.clone().symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok(Eigensystem {
        eigenvalues,
        eigenvectors,
    })
}

/// Catalog of chain initial states used in the probing protocols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialState {
    /// `(1/2)(a_0 - b_0 + a_1 - b_{-1})`: antisymmetric, two cells.
    AntisymTwoCell,
    /// `(1/sqrt 2)(a_0 + b_0)`: symmetric, one cell.
    SymOneCell,
    /// `(1/sqrt 3)(a_0 - b_0 + a_1)`: no mirror symmetry.
    AsymThreeSite,
    /// Arbitrary real amplitudes over the `2N` chain sites (normalized here).
    Custom(Vec<f64>),
}

impl InitialState {
    pub fn label(&self) -> &'static str {
        match self {
            InitialState::AntisymTwoCell => "antisym",
            InitialState::SymOneCell => "sym",
            InitialState::AsymThreeSite => "asym3",
            InitialState::Custom(_) => "custom",
        }
    }
}

/// Unit-norm single-excitation amplitude vector on the chain sites.
pub fn build_initial_state(kind: &InitialState, n_cells: usize) -> Result<DVector<f64>> {
    let dim = 2 * n_cells;
    match kind {
        InitialState::AntisymTwoCell => {
            if n_cells < 3 {
                return Err(Error::invalid(
                    "the two-cell antisymmetric state needs at least 3 cells".to_string(),
                ));
            }
            let mut v = DVector::zeros(dim);
            v[0] = 0.5; // a_0
            v[1] = -0.5; // b_0
            v[2] = 0.5; // a_1
            v[2 * (n_cells - 1) + 1] = -0.5; // b_{-1} = b_{N-1}
            Ok(v)
        }
        InitialState::SymOneCell => {
            let mut v = DVector::zeros(dim);
            let c = 1.0 / 2.0_f64.sqrt();
            v[0] = c;
            v[1] = c;
            Ok(v)
        }
        InitialState::AsymThreeSite => {
            if n_cells < 2 {
                return Err(Error::invalid("need at least 2 cells".to_string()));
            }
            let mut v = DVector::zeros(dim);
            let c = 1.0 / 3.0_f64.sqrt();
            v[0] = c;
            v[1] = -c;
            v[2] = c;
            Ok(v)
        }
        InitialState::Custom(amps) => {
            if amps.len() != dim {
                return Err(Error::InvalidState(format!(
                    "custom state has {} amplitudes, chain has {dim} sites",
                    amps.len()
                )));
            }
            let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm < 1e-12 {
                return Err(Error::InvalidState(
                    "custom state norm is below 1e-12".to_string(),
                ));
            }
            Ok(DVector::from_iterator(dim, amps.iter().map(|a| a / norm)))
        }
    }
}

/// Sampled probe coherence `q(t)` with its Loschmidt echo `L = |q|^2`.
#[derive(Debug, Clone)]
pub struct CoherenceTrace {
    pub times: Vec<f64>,
    pub q: Vec<Complex64>,
    pub l: Vec<f64>,
    pub dt: f64,
    pub model: Model,
    pub spec: ChainSpec,
    pub warnings: Vec<String>,
}

impl CoherenceTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `|q(t)|` samples.
    pub fn abs_q(&self) -> Vec<f64> {
        self.q.iter().map(|q| q.norm()).collect()
    }

    /// Grid index of a time that lies (up to rounding noise) on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if t < 0.0 {
            return None;
        }
        let idx = (t / self.dt).round() as usize;
        let tol = 1e-9 * t.abs().max(1.0);
        (idx < self.times.len() && (self.times[idx] - t).abs() < tol).then_some(idx)
    }
}

fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(Error::invalid(format!(
            "need positive t_max and dt, got t_max={t_max}, dt={dt}"
        )));
    }
    let steps = (t_max / dt).round() as usize;
    if steps < 1 {
        return Err(Error::invalid("t_max shorter than dt".to_string()));
    }
    Ok((0..=steps).map(|i| i as f64 * dt).collect())
}

fn revival_warning(spec: &ChainSpec, t_max: f64) -> Option<String> {
    let v = spec.t1.max(spec.t2);
    if v <= 0.0 {
        return None;
    }
    let revival = 2.0 * spec.n_cells as f64 / v;
    (t_max > revival).then(|| {
        format!(
            "t_max = {t_max} exceeds the finite-ring revival time 2N/max(t1,t2) = {revival:.3}; \
             late-time samples carry recurrences absent from the open-chain physics"
        )
    })
}

fn check_unit_norm(psi0: &DVector<f64>) -> Result<()> {
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidState(format!(
            "initial state must be unit norm, got |psi0| = {norm}"
        )));
    }
    Ok(())
}

/// Loschmidt-amplitude evaluator for one `(H_SSH, Hbar)` pair.
///
/// Holds the eigenbasis overlap `M = V^T Vbar`, so several initial states or
/// time grids can be sampled against the same pair without repeating the
/// matrix product.
pub struct DephasingPropagator<'a> {
    eig_h: &'a Eigensystem,
    eig_hbar: &'a Eigensystem,
    overlap: DMatrix<f64>,
}

impl<'a> DephasingPropagator<'a> {
    pub fn new(eig_h: &'a Eigensystem, eig_hbar: &'a Eigensystem) -> Self {
        DephasingPropagator {
            overlap: eig_h.eigenvectors.tr_mul(&eig_hbar.eigenvectors),
            eig_h,
            eig_hbar,
        }
    }

    /// Sample `q(t) = <psi0| e^{+iHt} e^{-iHbar t} |psi0>` on `times`.
    ///
    /// Exact up to the eigensolve: no time-stepping error enters. Time
    /// samples are batched so the inner contraction runs as gemm.
    pub fn trace(&self, psi0: &DVector<f64>, times: &[f64]) -> Vec<Complex64> {
        let n = self.eig_h.dim();
        let u = self.eig_h.project(psi0);
        let w = self.eig_hbar.project(psi0);

        const BATCH: usize = 64;
        let mut q = Vec::with_capacity(times.len());
        let mut p_re = DMatrix::<f64>::zeros(n, BATCH);
        let mut p_im = DMatrix::<f64>::zeros(n, BATCH);
        let mut z_re = DMatrix::<f64>::zeros(n, BATCH);
        let mut z_im = DMatrix::<f64>::zeros(n, BATCH);
        for chunk in times.chunks(BATCH) {
            let b = chunk.len();
            for (col, &t) in chunk.iter().enumerate() {
                for k in 0..n {
                    let phase = -self.eig_hbar.eigenvalues[k] * t;
                    let (s, c) = phase.sin_cos();
                    p_re[(k, col)] = w[k] * c;
                    p_im[(k, col)] = w[k] * s;
                }
            }
            let (pr, pi) = (p_re.columns(0, b), p_im.columns(0, b));
            z_re.columns_mut(0, b).gemm(1.0, &self.overlap, &pr, 0.0);
            z_im.columns_mut(0, b).gemm(1.0, &self.overlap, &pi, 0.0);
            for (col, &t) in chunk.iter().enumerate() {
                let mut re = 0.0;
                let mut im = 0.0;
                for j in 0..n {
                    let phase = self.eig_h.eigenvalues[j] * t;
                    let (s, c) = phase.sin_cos();
                    let a = u[j];
                    // u_j (c + i s) (z_re + i z_im)
                    re += a * (c * z_re[(j, col)] - s * z_im[(j, col)]);
                    im += a * (c * z_im[(j, col)] + s * z_re[(j, col)]);
                }
                q.push(Complex64::new(re, im));
            }
        }
        q
    }
}

/// One-shot form of [`DephasingPropagator::trace`].
pub fn dephasing_trace_from_eigensystems(
    eig_h: &Eigensystem,
    eig_hbar: &Eigensystem,
    psi0: &DVector<f64>,
    times: &[f64],
) -> Vec<Complex64> {
    DephasingPropagator::new(eig_h, eig_hbar).trace(psi0, times)
}

/// Probe coherence of the dephasing scheme: builds `H_SSH` and `Hbar` for
/// `spec`, diagonalizes, and samples `q(t)` on `[0, t_max]` with step `dt`.
pub fn coherence_dephasing(
    spec: &ChainSpec,
    psi0: &DVector<f64>,
    t_max: f64,
    dt: f64,
) -> Result<CoherenceTrace> {
    if spec.model != Model::Dephasing {
        return Err(Error::invalid("coherence_dephasing needs model = dephasing".to_string()));
    }
    if psi0.len() != 2 * spec.n_cells {
        return Err(Error::InvalidState(format!(
            "state has {} amplitudes, chain has {}",
            psi0.len(),
            2 * spec.n_cells
        )));
    }
    check_unit_norm(psi0)?;
    let times = time_grid(t_max, dt)?;
    let eig_h = eigendecompose(&build_ssh_hamiltonian(spec)?)?;
    let eig_hbar = eigendecompose(&build_defect_hamiltonian(spec)?)?;
    let q = dephasing_trace_from_eigensystems(&eig_h, &eig_hbar, psi0, &times);
    let l = q.iter().map(|q| q.norm_sqr()).collect();
    Ok(CoherenceTrace {
        l,
        q,
        dt,
        times,
        model: Model::Dephasing,
        spec: spec.clone(),
        warnings: revival_warning(spec, t_max).into_iter().collect(),
    })
}

/// Excited-state amplitude of the dissipative probe from a prebuilt
/// eigensystem of the single-excitation Hamiltonian.
pub fn dissipative_trace_from_eigensystem(eig: &Eigensystem, times: &[f64]) -> Vec<Complex64> {
    let n = eig.dim();
    let probe = n - 1;
    // q(t) = sum_j |<probe|v_j>|^2 e^{-i E_j t}
    let weights: Vec<f64> = (0..n)
        .map(|j| {
            let c = eig.eigenvectors[(probe, j)];
            c * c
        })
        .collect();
    times
        .iter()
        .map(|&t| {
            let mut re = 0.0;
            let mut im = 0.0;
            for j in 0..n {
                let (s, c) = (-eig.eigenvalues[j] * t).sin_cos();
                re += weights[j] * c;
                im += weights[j] * s;
            }
            Complex64::new(re, im)
        })
        .collect()
}

/// Probe coherence of the dissipative scheme with the chain in vacuum and the
/// probe initially excited; `|q(t)|^2` is the excited-state survival
/// probability.
pub fn coherence_dissipative(spec: &ChainSpec, t_max: f64, dt: f64) -> Result<CoherenceTrace> {
    if spec.model != Model::Dissipative {
        return Err(Error::invalid(
            "coherence_dissipative needs model = dissipative".to_string(),
        ));
    }
    let times = time_grid(t_max, dt)?;
    let eig = eigendecompose(&build_dissipative_hamiltonian(spec)?)?;
    let q = dissipative_trace_from_eigensystem(&eig, &times);
    let l = q.iter().map(|q| q.norm_sqr()).collect();
    Ok(CoherenceTrace {
        l,
        q,
        dt,
        times,
        model: Model::Dissipative,
        spec: spec.clone(),
        warnings: revival_warning(spec, t_max).into_iter().collect(),
    })
}

/// Mirror-parity index of a chain state about the defect cell,
///
/// ```text
/// P = (1/2) sum_n |a_n + b_{-n}|^2 / sum_n (|a_n|^2 + |b_n|^2),
/// ```
///
/// so `P = 1` for an exactly symmetric state (`a_n = b_{-n}`) and `P = 0`
/// for an exactly antisymmetric one. Accepts a bare chain vector (`2N`
/// amplitudes) or a dissipative-sector vector (`2N+1`; the probe component
/// is ignored).
pub fn parity_index(amplitudes: &[f64], n_cells: usize) -> Result<f64> {
    let dim = 2 * n_cells;
    if amplitudes.len() != dim && amplitudes.len() != dim + 1 {
        return Err(Error::InvalidState(format!(
            "expected {dim} or {} amplitudes, got {}",
            dim + 1,
            amplitudes.len()
        )));
    }
    let a = |n: usize| amplitudes[2 * n];
    let b = |n: usize| amplitudes[2 * n + 1];
    let mut num = 0.0;
    let mut den = 0.0;
    for n in 0..n_cells {
        let b_neg = b((n_cells - n) % n_cells);
        let s = a(n) + b_neg;
        num += s * s;
        den += a(n) * a(n) + b(n) * b(n);
    }
    if den < 1e-300 {
        return Err(Error::InvalidState("zero state has no parity".to_string()));
    }
    Ok(0.5 * num / den)
}

/// Initial probe preparation as a 2x2 density matrix over `{e, g}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeState {
    pub rho: [[Complex64; 2]; 2],
}

impl ProbeState {
    /// Pure superposition `C_e |e> + C_g |g>`.
    pub fn pure(c_e: Complex64, c_g: Complex64) -> Result<Self> {
        let norm = (c_e.norm_sqr() + c_g.norm_sqr()).sqrt();
        if norm < 1e-12 {
            return Err(Error::InvalidState("zero probe state".to_string()));
        }
        let (c_e, c_g) = (c_e / norm, c_g / norm);
        Ok(ProbeState {
            rho: [
                [
                    Complex64::new(c_e.norm_sqr(), 0.0),
                    c_e * c_g.conj(),
                ],
                [
                    c_g * c_e.conj(),
                    Complex64::new(c_g.norm_sqr(), 0.0),
                ],
            ],
        })
    }

    /// Balanced superposition `(|e> + |g>)/sqrt 2`.
    pub fn balanced() -> Self {
        Self::pure(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap()
    }

    /// Probe fully excited (the dissipative reference preparation).
    pub fn excited() -> Self {
        ProbeState {
            rho: [
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
            ],
        }
    }
}

/// Reduced 2x2 probe density matrix at one sampled time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeDensityMatrix {
    pub rho: [[Complex64; 2]; 2],
}

impl ProbeDensityMatrix {
    pub fn trace(&self) -> Complex64 {
        self.rho[0][0] + self.rho[1][1]
    }

    pub fn coherence(&self) -> Complex64 {
        self.rho[0][1]
    }
}

/// Probe state at time `t` (which must lie on the trace grid).
///
/// Dephasing: populations are frozen and the off-diagonal scales by `q(t)`.
/// Dissipative: the excited population scales by `|q|^2`, the coherence by
/// `q`, and the lost population lands in the ground state.
pub fn probe_density_matrix(
    trace: &CoherenceTrace,
    initial: &ProbeState,
    t: f64,
) -> Result<ProbeDensityMatrix> {
    let idx = trace
        .index_of(t)
        .ok_or_else(|| Error::invalid(format!("t = {t} is not on the trace grid")))?;
    let q = trace.q[idx];
    let r = &initial.rho;
    let rho = match trace.model {
        Model::Dephasing => [
            [r[0][0], r[0][1] * q],
            [r[1][0] * q.conj(), r[1][1]],
        ],
        Model::Dissipative => {
            let survival = q.norm_sqr();
            [
                [r[0][0] * survival, r[0][1] * q],
                [
                    r[1][0] * q.conj(),
                    r[0][0] * (1.0 - survival) + r[1][1],
                ],
            ]
        }
    };
    Ok(ProbeDensityMatrix { rho })
}
