//! Capped CG on a positive definite and an indefinite matrix.
//!
//!     cargo run --example capped_cg_demo

use alnewton::capped_cg::{capped_cg, validate_sol, CgParams, DirectionKind};
use alnewton::SymmetricOperator;
use nalgebra::{DMatrix, DVector};

fn main() -> alnewton::Result<()> {
    let eps = 0.1;
    let g = DVector::from_vec(vec![1.0, -2.0, 0.5, 1.5]);

    let spd = DMatrix::from_row_slice(
        4,
        4,
        &[
            4.0, 1.0, 0.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.0, 0.5, 2.0, 0.2, 0.0, 0.0, 0.2, 1.0,
        ],
    );
    let h = SymmetricOperator::from_matrix(spd.clone());
    let out = capped_cg(&h, &g, &CgParams::new(eps, 0.5))?;
    println!(
        "positive definite: {:?} after {} iterations",
        out.kind, out.iterations
    );
    println!("  d = {:.6?}", out.d.as_slice());
    println!(
        "  certificates hold: {}",
        validate_sol(&h, &g, eps, 0.5, &out.d)?
    );
    println!("  Hessian-vector products: {}", h.matvec_count());

    let mut indefinite = spd;
    indefinite[(3, 3)] = -1.0;
    let h = SymmetricOperator::from_matrix(indefinite.clone());
    let out = capped_cg(&h, &g, &CgParams::new(eps, 0.5))?;
    assert_eq!(out.kind, DirectionKind::Nc);
    let d = &out.d;
    println!(
        "indefinite: {:?} after {} iterations",
        out.kind, out.iterations
    );
    println!(
        "  d'Hd / |d|^2 = {:.4} (below -eps = {})",
        d.dot(&(&indefinite * d)) / d.norm_squared(),
        -eps
    );
    Ok(())
}
