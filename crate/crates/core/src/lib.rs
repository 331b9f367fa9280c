//! Simulation of a probe qubit coupled to a Su-Schrieffer-Heeger (SSH) chain.
//!
//! A two-level probe attached to one unit cell of a periodic SSH lattice picks
//! up the chain's topological phase through its decoherence dynamics: the
//! defect induced by the coupling binds localized states whose number and
//! mirror parity switch when the band gap closes at `t1 = t2`, and the
//! resulting coherence revivals turn a time-averaged non-Markovianity
//! quantifier into an order parameter for the transition.
//!
//! The crate covers two coupling schemes:
//!
//! - **dephasing** (dispersive) coupling, where the probe coherence follows
//!   the Loschmidt echo `q(t) = <psi0| e^{i H t} e^{-i Hbar t} |psi0>` of the
//!   chain under the defect-renormalized Hamiltonian `Hbar`;
//! - **dissipative** (excitation-exchange) coupling, where `q(t)` is the
//!   excited-state amplitude of the probe in the single-excitation sector.
//!
//! Modules follow the pipeline: [`lattice`] builds Hamiltonians,
//! [`boundstates`] solves for the defect-localized eigenstates (closed forms
//! for the dephasing model, a cubic for the dissipative one), [`dynamics`]
//! propagates exactly by spectral decomposition, [`nonmarkov`] reduces traces
//! to the quantifier and spectra, and [`experiments`] orchestrates the
//! figure-level sweeps with serializable, reproducible output.

pub mod boundstates;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod nonmarkov;
pub mod output;

pub use boundstates::{
    classify_numeric_bound_states, dephasing_bound_states, dephasing_bs_wavefunction,
    dissipative_bound_states, existence_thresholds, BoundState, ExistenceRegion, Origin, Parity,
};
pub use dynamics::{
    build_initial_state, coherence_dephasing, coherence_dissipative, eigendecompose,
    parity_index, probe_density_matrix, CoherenceTrace, DephasingPropagator, Eigensystem,
    InitialState, ProbeDensityMatrix, ProbeState,
};
pub use error::{Error, Result};
pub use lattice::{
    band_dispersion, build_defect_hamiltonian, build_dissipative_hamiltonian,
    build_ssh_hamiltonian, sample_disorder, BandStructure, ChainSpec, Disorder,
    HamiltonianMatrix, Model, SiteLabel,
};
pub use nonmarkov::{
    compute_n_t, compute_n_t_windowed, count_peaks, echo_spectrum, EchoSpectrum, NonMarkovResult,
    SignalKind, SpectralWindow,
};
