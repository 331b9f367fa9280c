//! Quick timing probe for the dense eigensolver and the trace loop.

use std::time::Instant;

use nalgebra::DVector;
use ssh_probe::dynamics::DephasingPropagator;
use ssh_probe::*;

fn main() {
    for n in [100usize, 200, 301] {
        let spec = ChainSpec::new(n, 1.0, 1.4, 0.8, Model::Dephasing).unwrap();
        let h = build_defect_hamiltonian(&spec).unwrap();
        let t0 = Instant::now();
        let eig = eigendecompose(&h).unwrap();
        let t_full = t0.elapsed();
        let t0 = Instant::now();
        let _vals = h.matrix.clone().symmetric_eigenvalues();
        let t_vals = t0.elapsed();
        println!(
            "N={n} (dim {}): full eigh {:.3}s, values-only {:.3}s",
            2 * n,
            t_full.as_secs_f64(),
            t_vals.as_secs_f64()
        );

        let bare = build_ssh_hamiltonian(&spec).unwrap();
        let eig_h = eigendecompose(&bare).unwrap();
        let psi0 = build_initial_state(&InitialState::AntisymTwoCell, n).unwrap();
        let times: Vec<f64> = (0..=7500).map(|i| i as f64 * 0.02).collect();
        let t0 = Instant::now();
        let prop = DephasingPropagator::new(&eig_h, &eig);
        let q = prop.trace(&DVector::from_column_slice(psi0.as_slice()), &times);
        println!(
            "  trace 7501 samples: {:.3}s  (q(0) = {:.3})",
            t0.elapsed().as_secs_f64(),
            q[0].re
        );
    }
}
