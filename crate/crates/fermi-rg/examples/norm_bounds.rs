//! Decay-norm bookkeeping: the saturating series, position and momentum
//! norms of kernels, and the splice and contraction bounds.
//!
//! Run with `cargo run --release --example norm_bounds`.

use fermi_rg::decay::{DecaySeries, SeriesShape};
use fermi_rg::kernel::{ArgSpace, BMatrix, Kernel};
use fermi_rg::lattice::{Lattice, LatticeSpec};
use fermi_rg::norms;
use fermi_rg::rng::{random_c64, rng_from};

fn main() -> fermi_rg::Result<()> {
    let shape = SeriesShape::new(1, 2, 2);

    // the saturating semiring: the geometric series dominates its seed
    let c0 = DecaySeries::all_ones(shape);
    let x = DecaySeries::constant(shape, 0.25);
    let e0 = DecaySeries::geometric(&c0, &x)?;
    println!("e0(X) with X = 0.25:\n  {e0}");
    println!("c0 <= e0(X): {}", c0.leq(&e0)?);

    let lat = Lattice::new(LatticeSpec { d: 1, l0: 2, lsp: 2, dt: 1.0, dx: 1.0, spin: false })?;
    let mut rng = rng_from(5, "example-norms", 0);
    let f = Kernel::from_fn(lat.clone(), 1, 2, ArgSpace::Position, |_| random_c64(&mut rng))?;
    let g = Kernel::from_fn(lat.clone(), 0, 2, ArgSpace::Position, |_| random_c64(&mut rng))?;

    let nf = norms::norm_tilde(&f, shape)?;
    println!("\nmomentum decay norm of a (1,2) kernel:\n  {nf}");

    // splice bound
    let rep = norms::product_inequality_check(&f, &g, 1, 1, shape, 1e-9)?;
    println!("\nsplice bound holds: {} (worst slack {:.2e})", rep.pass, rep.max_violation);
    for row in rep.rows().iter().take(3) {
        println!("  delta {}: {:.4e} <= {:.4e}", row.delta, row.lhs, row.rhs);
    }

    // contraction against an antisymmetric two-point kernel
    let mut c = BMatrix::zero(lat.clone());
    for i in 0..lat.n_b {
        for k in i + 1..lat.n_b {
            let z = random_c64(&mut rng);
            c.set(i, k, z);
            c.set(k, i, -z);
        }
    }
    let rep2 = norms::corollary_contraction_check(&f, &g, &c, shape, 1e-9)?;
    println!(
        "contraction corollary holds: {} (worst slack {:.2e})",
        rep2.pass, rep2.max_violation
    );
    Ok(())
}
