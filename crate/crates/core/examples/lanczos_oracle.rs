//! Randomized Lanczos and exact minimum-eigenvalue oracles side by side.
//!
//!     cargo run --example lanczos_oracle

use alnewton::meo::{exact_meo, lanczos_iteration_cap, lanczos_meo, MeoParams};
use alnewton::SymmetricOperator;
use nalgebra::{DMatrix, DVector};

fn main() -> alnewton::Result<()> {
    let n = 400;
    let eps = 0.05;
    // Spectrum in [0, 2] plus one eigenvalue at -0.06.
    let mut spectrum: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 / n as f64).collect();
    spectrum[n / 2] = -0.06;
    let h = SymmetricOperator::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(spectrum)));

    println!(
        "iteration cap for |H| = 2: {}",
        lanczos_iteration_cap(n, eps, 0.01, 2.0)
    );
    for seed in 0..3 {
        let out = lanczos_meo(&h, &MeoParams::new(eps, 0.01, seed))?;
        println!(
            "lanczos seed {seed}: {:?} after {} iterations, Ritz value {:.4}",
            out.kind, out.iterations, out.lambda_estimate
        );
    }

    let out = exact_meo(&h, eps)?;
    println!(
        "exact: {:?}, lambda_min = {:.4}",
        out.kind, out.lambda_estimate
    );

    let psd = SymmetricOperator::identity(50);
    let out = lanczos_meo(&psd, &MeoParams::new(eps, 0.01, 0))?;
    println!(
        "identity: {:?} after {} iterations",
        out.kind, out.iterations
    );
    Ok(())
}
