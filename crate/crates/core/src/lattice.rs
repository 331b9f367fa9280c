//! Hamiltonians of the probe-chain system on the single-excitation basis.
//!
//! The SSH chain has `N` unit cells with two sites each (`a_n`, `b_n`),
//! intra-cell hopping `t1` (per bond when disordered) and inter-cell hopping
//! `t2`, with periodic boundary conditions:
//!
//! ```text
//! H_SSH = sum_n t1_n (a_n^+ b_n + h.c.) + t2 (a_n^+ b_{n-1} + h.c.)
//! ```
//!
//! The probe couples to cell 0. In the dephasing scheme the conditional chain
//! Hamiltonian picks up a cell defect, `Hbar = H_SSH + gamma (a_0^+ a_0 +
//! b_0^+ b_0)`; in the dissipative scheme the probe's excited level enters the
//! single-excitation sector as an extra basis state coupled to `a_0` and `b_0`
//! with strength `gamma`.
//!
//! Site ordering is `a_0, b_0, a_1, b_1, ...`; the dissipative model appends
//! the probe as the last basis state. Negative cell indices wrap as `N + n`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probe-chain coupling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Dispersive coupling; the probe dephases through the Loschmidt echo.
    Dephasing,
    /// Excitation exchange; the probe decays into the chain.
    Dissipative,
}

/// Boundary condition of the chain. Only periodic rings are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
}

/// Off-diagonal (hopping) disorder on the intra-cell bonds:
/// `t1_n = mean_t1 * (1 + x_n)` with `x_n` uniform on `(-delta, delta)`.
/// The inter-cell hopping stays homogeneous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disorder {
    pub delta: f64,
    pub seed: u64,
}

/// Geometry and couplings of one probe-chain configuration.
///
/// `t1` is the intra-cell hopping, or its mean `<t1>` when `disorder` is set.
/// All energies are in the same units; times elsewhere are in `1/t1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_cells: usize,
    pub t1: f64,
    pub t2: f64,
    pub gamma: f64,
    pub model: Model,
    pub boundary: Boundary,
    pub disorder: Option<Disorder>,
}

impl ChainSpec {
    pub fn new(n_cells: usize, t1: f64, t2: f64, gamma: f64, model: Model) -> Result<Self> {
        let spec = ChainSpec {
            n_cells,
            t1,
            t2,
            gamma,
            model,
            boundary: Boundary::Periodic,
            disorder: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_disorder(mut self, delta: f64, seed: u64) -> Result<Self> {
        self.disorder = Some(Disorder { delta, seed });
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 2 {
            return Err(Error::invalid(format!(
                "n_cells must be >= 2, got {}",
                self.n_cells
            )));
        }
        if !(self.t1 >= 0.0) || !(self.t2 >= 0.0) {
            return Err(Error::invalid(format!(
                "hoppings must be non-negative, got t1={}, t2={}",
                self.t1, self.t2
            )));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::invalid(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if let Some(d) = &self.disorder {
            if !(0.0..1.0).contains(&d.delta) {
                return Err(Error::invalid(format!(
                    "disorder amplitude must satisfy 0 <= delta < 1, got {}",
                    d.delta
                )));
            }
        }
        Ok(())
    }

    /// Per-bond intra-cell hoppings, sampling the disorder when present.
    pub fn bond_t1s(&self) -> Vec<f64> {
        match &self.disorder {
            None => vec![self.t1; self.n_cells],
            Some(d) => sample_disorder(self.t1, d.delta, self.n_cells, d.seed)
                .expect("validated disorder amplitude"),
        }
    }

    /// Matrix dimension of the single-excitation Hamiltonian.
    pub fn dim(&self) -> usize {
        match self.model {
            Model::Dephasing => 2 * self.n_cells,
            Model::Dissipative => 2 * self.n_cells + 1,
        }
    }
}

/// Label of one basis state of the single-excitation sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteLabel {
    /// `a` site of the given cell.
    A(usize),
    /// `b` site of the given cell.
    B(usize),
    /// Excited level of the probe (dissipative model only).
    Probe,
}

/// Real symmetric Hamiltonian with its site bookkeeping.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    pub matrix: DMatrix<f64>,
    pub basis: Vec<SiteLabel>,
    pub n_cells: usize,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Basis index of site `a_n` (cell index taken modulo `N`).
    pub fn a_index(n_cells: usize, n: isize) -> usize {
        2 * n.rem_euclid(n_cells as isize) as usize
    }

    /// Basis index of site `b_n` (cell index taken modulo `N`).
    pub fn b_index(n_cells: usize, n: isize) -> usize {
        2 * n.rem_euclid(n_cells as isize) as usize + 1
    }

    /// Largest deviation from symmetry, `max_ij |H_ij - H_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        worst
    }
}

fn chain_block(n_cells: usize, bond_t1s: &[f64], t2: f64, dim: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(dim, dim);
    for n in 0..n_cells {
        let a_n = 2 * n;
        let b_n = 2 * n + 1;
        // intra-cell bond t1_n
        h[(a_n, b_n)] = bond_t1s[n];
        h[(b_n, a_n)] = bond_t1s[n];
        // inter-cell bond t2 couples a_n to b_{n-1}, wrapping a_0 to b_{N-1}
        let b_prev = HamiltonianMatrix::b_index(n_cells, n as isize - 1);
        h[(a_n, b_prev)] = t2;
        h[(b_prev, a_n)] = t2;
    }
    h
}

fn chain_basis(n_cells: usize) -> Vec<SiteLabel> {
    (0..n_cells)
        .flat_map(|n| [SiteLabel::A(n), SiteLabel::B(n)])
        .collect()
}

/// Bare SSH chain Hamiltonian on the `2N`-site ring.
///
/// The ordered spectrum fills the two bands
/// `[-(t1+t2), -|t1-t2|] U [|t1-t2|, t1+t2]` up to `O(1/N)` finite-size
/// corrections; the band-center offset is taken as zero (rotating frame).
pub fn build_ssh_hamiltonian(spec: &ChainSpec) -> Result<HamiltonianMatrix> {
    spec.validate()?;
    let bonds = spec.bond_t1s();
    Ok(HamiltonianMatrix {
        matrix: chain_block(spec.n_cells, &bonds, spec.t2, 2 * spec.n_cells),
        basis: chain_basis(spec.n_cells),
        n_cells: spec.n_cells,
    })
}

/// SSH chain with an explicit per-bond intra-cell hopping sequence.
pub fn build_ssh_hamiltonian_with_bonds(
    n_cells: usize,
    bond_t1s: &[f64],
    t2: f64,
) -> Result<HamiltonianMatrix> {
    if n_cells < 2 {
        return Err(Error::invalid(format!(
            "n_cells must be >= 2, got {n_cells}"
        )));
    }
    if bond_t1s.len() != n_cells {
        return Err(Error::invalid(format!(
            "expected {} bonds, got {}",
            n_cells,
            bond_t1s.len()
        )));
    }
    if bond_t1s.iter().any(|t| *t < 0.0) || t2 < 0.0 {
        return Err(Error::invalid("hoppings must be non-negative".to_string()));
    }
    Ok(HamiltonianMatrix {
        matrix: chain_block(n_cells, bond_t1s, t2, 2 * n_cells),
        basis: chain_basis(n_cells),
        n_cells,
    })
}

/// Defect-renormalized chain Hamiltonian of the dephasing scheme,
/// `Hbar = H_SSH + gamma (a_0^+ a_0 + b_0^+ b_0)`.
pub fn build_defect_hamiltonian(spec: &ChainSpec) -> Result<HamiltonianMatrix> {
    if spec.model != Model::Dephasing {
        return Err(Error::invalid(
            "defect Hamiltonian is defined for the dephasing model".to_string(),
        ));
    }
    let mut h = build_ssh_hamiltonian(spec)?;
    h.matrix[(0, 0)] += spec.gamma;
    h.matrix[(1, 1)] += spec.gamma;
    Ok(h)
}

/// Single-excitation Hamiltonian of the dissipative scheme on the
/// `(2N+1)`-dimensional basis `(chain sites, probe)`. The probe row couples
/// with strength `gamma` to `a_0` and `b_0` only; the resonance condition
/// makes both on-site energies zero.
pub fn build_dissipative_hamiltonian(spec: &ChainSpec) -> Result<HamiltonianMatrix> {
    if spec.model != Model::Dissipative {
        return Err(Error::invalid(
            "dissipative Hamiltonian requires model = dissipative".to_string(),
        ));
    }
    spec.validate()?;
    let n = spec.n_cells;
    let dim = 2 * n + 1;
    let bonds = spec.bond_t1s();
    let mut h = chain_block(n, &bonds, spec.t2, dim);
    let probe = 2 * n;
    h[(probe, 0)] = spec.gamma;
    h[(0, probe)] = spec.gamma;
    h[(probe, 1)] = spec.gamma;
    h[(1, probe)] = spec.gamma;
    let mut basis = chain_basis(n);
    basis.push(SiteLabel::Probe);
    Ok(HamiltonianMatrix {
        matrix: h,
        basis,
        n_cells: n,
    })
}

/// Draw the per-bond intra-cell hoppings `t1_n = mean_t1 (1 + x_n)`,
/// `x_n` i.i.d. uniform on `(-delta, delta)`. Deterministic in `seed`.
pub fn sample_disorder(mean_t1: f64, delta: f64, n_cells: usize, seed: u64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&delta) {
        // delta >= 1 would allow sign-flipping bonds
        return Err(Error::invalid(format!(
            "disorder amplitude must satisfy 0 <= delta < 1, got {delta}"
        )));
    }
    if mean_t1 < 0.0 {
        return Err(Error::invalid("mean_t1 must be non-negative".to_string()));
    }
    if delta == 0.0 {
        return Ok(vec![mean_t1; n_cells]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_cells)
        .map(|_| mean_t1 * (1.0 + rng.gen_range(-delta..delta)))
        .collect())
}

/// Band edges of the ordered chain: the gap spans `(-inner, inner)` and the
/// bands end at `+-outer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandEdges {
    /// `|t1 - t2|`
    pub inner: f64,
    /// `t1 + t2`
    pub outer: f64,
}

impl BandEdges {
    pub fn new(t1: f64, t2: f64) -> Self {
        BandEdges {
            inner: (t1 - t2).abs(),
            outer: t1 + t2,
        }
    }

    /// The four band-edge energies `{-outer, -inner, inner, outer}`.
    pub fn as_array(&self) -> [f64; 4] {
        [-self.outer, -self.inner, self.inner, self.outer]
    }

    /// Energy lies outside both bands by more than `margin`.
    pub fn out_of_band(&self, e: f64, margin: f64) -> bool {
        e.abs() > self.outer + margin || e.abs() < self.inner - margin
    }

    /// Energy lies strictly inside the gap by more than `margin`.
    pub fn in_gap(&self, e: f64, margin: f64) -> bool {
        e.abs() < self.inner - margin
    }
}

/// Sampled dispersion `E_+-(k) = +-sqrt(t1^2 + t2^2 + 2 t1 t2 cos k)` of the
/// two SSH bands.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandStructure {
    pub k: Vec<f64>,
    pub e_plus: Vec<f64>,
    pub e_minus: Vec<f64>,
    pub band_edges: BandEdges,
}

impl BandStructure {
    /// Upper-band dispersion at a single momentum.
    pub fn dispersion_at(t1: f64, t2: f64, k: f64) -> f64 {
        (t1 * t1 + t2 * t2 + 2.0 * t1 * t2 * k.cos()).max(0.0).sqrt()
    }
}

/// Sample the two-band dispersion on `n_samples` momenta spanning `[-pi, pi]`.
pub fn band_dispersion(t1: f64, t2: f64, n_samples: usize) -> Result<BandStructure> {
    if t1 < 0.0 || t2 < 0.0 {
        return Err(Error::invalid("hoppings must be non-negative".to_string()));
    }
    if n_samples < 2 {
        return Err(Error::invalid("need at least 2 momentum samples".to_string()));
    }
    let k: Vec<f64> = (0..n_samples)
        .map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / (n_samples - 1) as f64)
        .collect();
    let e_plus: Vec<f64> = k
        .iter()
        .map(|&k| BandStructure::dispersion_at(t1, t2, k))
        .collect();
    let e_minus: Vec<f64> = e_plus.iter().map(|e| -e).collect();
    Ok(BandStructure {
        k,
        e_plus,
        e_minus,
        band_edges: BandEdges::new(t1, t2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(n: usize, t1: f64, t2: f64, gamma: f64, model: Model) -> ChainSpec {
        ChainSpec::new(n, t1, t2, gamma, model).unwrap()
    }

    #[test]
    fn ssh_matrix_structure() {
        let h = build_ssh_hamiltonian(&spec(4, 1.0, 0.7, 0.0, Model::Dephasing)).unwrap();
        assert_eq!(h.dim(), 8);
        assert_eq!(h.asymmetry(), 0.0);
        // intra bond a_1-b_1
        assert_eq!(h.matrix[(2, 3)], 1.0);
        // inter bond a_1-b_0
        assert_eq!(h.matrix[(2, 1)], 0.7);
        // wraparound bond a_0-b_3
        assert_eq!(h.matrix[(0, 7)], 0.7);
        // no diagonal
        for i in 0..8 {
            assert_eq!(h.matrix[(i, i)], 0.0);
        }
    }

    #[test]
    fn row_sums_bounded() {
        let s = spec(6, 1.3, 0.4, 0.9, Model::Dephasing);
        let h = build_defect_hamiltonian(&s).unwrap();
        let bound = 2.0 * (s.t1 + s.t2) + s.gamma + 1e-12;
        for i in 0..h.dim() {
            let sum: f64 = (0..h.dim()).map(|j| h.matrix[(i, j)].abs()).sum();
            assert!(sum <= bound, "row {i} sum {sum} exceeds {bound}");
        }
    }

    #[test]
    fn defect_adds_gamma_on_cell_zero() {
        let s = spec(5, 1.0, 1.5, 0.8, Model::Dephasing);
        let bare = build_ssh_hamiltonian(&s).unwrap();
        let defect = build_defect_hamiltonian(&s).unwrap();
        let diff = &defect.matrix - &bare.matrix;
        assert_eq!(diff[(0, 0)], 0.8);
        assert_eq!(diff[(1, 1)], 0.8);
        assert_eq!(diff.iter().map(|x| x.abs()).sum::<f64>(), 1.6);
    }

    #[test]
    fn defect_at_gamma_zero_is_bare_chain() {
        let s = spec(7, 1.0, 1.5, 0.0, Model::Dephasing);
        let bare = build_ssh_hamiltonian(&s).unwrap();
        let defect = build_defect_hamiltonian(&s).unwrap();
        assert_eq!(bare.matrix, defect.matrix);
    }

    #[test]
    fn dissipative_probe_row() {
        let s = spec(4, 1.0, 2.0, 0.6, Model::Dissipative);
        let h = build_dissipative_hamiltonian(&s).unwrap();
        assert_eq!(h.dim(), 9);
        assert_eq!(h.basis[8], SiteLabel::Probe);
        assert_eq!(h.asymmetry(), 0.0);
        let probe_row: Vec<f64> = (0..9).map(|j| h.matrix[(8, j)]).collect();
        assert_eq!(probe_row[0], 0.6);
        assert_eq!(probe_row[1], 0.6);
        assert_eq!(probe_row[2..].iter().map(|x| x.abs()).sum::<f64>(), 0.0);
    }

    #[test]
    fn dissipative_gamma_zero_block_diagonal() {
        let s = spec(4, 1.0, 2.0, 0.0, Model::Dissipative);
        let h = build_dissipative_hamiltonian(&s).unwrap();
        let probe = 8;
        for j in 0..9 {
            assert_eq!(h.matrix[(probe, j)], 0.0);
            assert_eq!(h.matrix[(j, probe)], 0.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ChainSpec::new(1, 1.0, 1.0, 0.0, Model::Dephasing).is_err());
        assert!(ChainSpec::new(4, -1.0, 1.0, 0.0, Model::Dephasing).is_err());
        assert!(ChainSpec::new(4, 1.0, -0.1, 0.0, Model::Dephasing).is_err());
        assert!(ChainSpec::new(4, 1.0, 1.0, -0.2, Model::Dephasing).is_err());
        assert!(spec(4, 1.0, 1.0, 0.0, Model::Dephasing)
            .with_disorder(1.0, 7)
            .is_err());
        assert!(build_defect_hamiltonian(&spec(4, 1.0, 1.0, 0.3, Model::Dissipative)).is_err());
    }

    #[test]
    fn disorder_is_deterministic_and_bounded() {
        let a = sample_disorder(1.0, 0.15, 301, 42).unwrap();
        let b = sample_disorder(1.0, 0.15, 301, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_disorder(1.0, 0.15, 301, 43).unwrap();
        assert_ne!(a, c);
        for t in &a {
            assert!((t / 1.0 - 1.0).abs() < 0.15, "bond {t} outside (0.85, 1.15)");
        }
    }

    #[test]
    fn disorder_zero_amplitude_is_constant() {
        let a = sample_disorder(1.3, 0.0, 17, 5).unwrap();
        assert!(a.iter().all(|&t| t == 1.3));
    }

    #[test]
    fn disorder_rejects_delta_one() {
        assert!(sample_disorder(1.0, 1.0, 10, 0).is_err());
    }

    #[test]
    fn disorder_ensemble_mean() {
        // grand mean over 100 seeds stays within 3 sigma, sigma = delta <t1>/sqrt(3 N)
        let (mean_t1, delta, n) = (1.0, 0.25, 301);
        let mut sum = 0.0;
        for seed in 0..100u64 {
            sum += sample_disorder(mean_t1, delta, n, seed)
                .unwrap()
                .iter()
                .sum::<f64>();
        }
        let grand_mean = sum / (100.0 * n as f64);
        let sigma = delta * mean_t1 / (3.0 * n as f64).sqrt();
        assert!(
            (grand_mean - mean_t1).abs() < 3.0 * sigma,
            "grand mean {grand_mean} deviates from {mean_t1} by more than {}",
            3.0 * sigma
        );
    }

    #[test]
    fn dispersion_closed_form() {
        // gap closes at k = pi when t1 = t2
        assert_abs_diff_eq!(
            BandStructure::dispersion_at(1.0, 1.0, std::f64::consts::PI),
            0.0,
            epsilon = 1e-12
        );
        // k = 0 gives the outer edge
        assert_abs_diff_eq!(BandStructure::dispersion_at(2.0, 1.0, 0.0), 3.0, epsilon = 1e-12);
        let bs = band_dispersion(1.0, 1.5, 101).unwrap();
        assert_abs_diff_eq!(bs.band_edges.inner, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(bs.band_edges.outer, 2.5, epsilon = 1e-12);
        for (e, k) in bs.e_plus.iter().zip(&bs.k) {
            assert_abs_diff_eq!(
                *e,
                BandStructure::dispersion_at(1.0, 1.5, *k),
                epsilon = 1e-12
            );
            assert!(*e >= bs.band_edges.inner - 1e-12 && *e <= bs.band_edges.outer + 1e-12);
        }
        assert!(bs.e_minus.iter().zip(&bs.e_plus).all(|(m, p)| *m == -*p));
    }
}
