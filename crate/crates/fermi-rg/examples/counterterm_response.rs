//! Counterterm machinery: validation against the cutoff support and norm
//! budget, and the response of the map to a dispersion adjustment.
//!
//! Run with `cargo run --release --example counterterm_response`.

use fermi_rg::cmatrix::C64;
use fermi_rg::decay::SeriesShape;
use fermi_rg::lattice::{Lattice, LatticeSpec};
use fermi_rg::model::{build_interaction, build_j, InteractionSpec, PotentialKind};
use fermi_rg::rg;
use fermi_rg::scales::{counterterm_validate, Counterterm, ScaleFamily};

fn main() -> fermi_rg::Result<()> {
    let lat = Lattice::new(LatticeSpec { d: 1, l0: 2, lsp: 2, dt: 1.0, dx: 1.0, spin: false })?;
    let fam = ScaleFamily::default();
    let shape = SeriesShape::new(1, 2, 2);

    // a counterterm supported where the cutoff lives, inside the budget
    let mut ct = Counterterm::zero(&lat, 0.5);
    let u = fam.cutoff_profile(&lat);
    for sp in 0..lat.n_sites_sp {
        if (0..lat.spec.l0).any(|n0| u[lat.mode_of(n0, &[sp])] > 0.0) {
            ct.delta_e[sp] = 0.03;
        }
    }
    let rep = counterterm_validate(&ct, &fam, &lat, shape)?;
    println!(
        "counterterm valid: {} (norm constant {:.4e} < mu = {})",
        rep.valid, rep.norm_constant, ct.mu
    );

    // over-budget counterterms are rejected with a reason
    let mut big = ct.clone();
    big.mu = 1e-4;
    let rep_big = counterterm_validate(&big, &fam, &lat, shape)?;
    println!("tight budget: valid = {}, reason: {:?}", rep_big.valid, rep_big.reason);

    // derivative of the map along a counterterm direction, with the
    // convergence of the central differences
    let (table, fams) = rg::rg_table(&lat)?;
    let j = build_j(&lat);
    let spec = InteractionSpec { coupling: 1e-3, potential: PotentialKind::Gaussian { width: 1.0 } };
    let v = build_interaction(&spec, &lat, &table, fams.psi)?;
    let mut dir = Counterterm::zero(&lat, 0.5);
    for sp in 0..lat.n_sites_sp {
        if ct.delta_e[sp] != 0.0 {
            dir.delta_e[sp] = 0.01 * (sp as f64 + 1.0);
        }
    }
    let d = rg::rg_counterterm_derivative(&fam, &ct, &dir, &v, &fams, &j, &lat, 0.1, shape, None)?;
    println!(
        "\nresponse terms: {}, peak coefficient {:.4e}",
        d.derivative.num_terms(),
        d.derivative.max_coeff_norm()
    );
    let rc = d.coarse.sub(&d.derivative)?.max_coeff_norm();
    let rf = d.fine.sub(&d.derivative)?.max_coeff_norm();
    println!("central-difference residuals: h = 0.1 gives {rc:.3e}, h/2 gives {rf:.3e}");
    println!("step-halving ratio = {:.2} (4 means clean quadratic error)", rc / rf);

    // linearity in the direction
    let d2 = rg::rg_counterterm_derivative(
        &fam, &ct, &dir.scale(2.0), &v, &fams, &j, &lat, 0.1, shape, None,
    )?;
    let lin = d2.derivative.max_coeff_norm() / d.derivative.max_coeff_norm();
    println!("doubling the direction scales the response by {lin:.4}");
    let _ = C64::new(0.0, 0.0);
    Ok(())
}
