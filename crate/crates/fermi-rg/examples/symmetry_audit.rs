//! Symmetry audit: the five predicates on the interaction and the
//! covariance, and their preservation under the extended map.
//!
//! Run with `cargo run --release --example symmetry_audit`.

use fermi_rg::cmatrix::{CovarianceMatrix, C64};
use fermi_rg::fourier::covariance_from_profile;
use fermi_rg::lattice::{Lattice, LatticeSpec};
use fermi_rg::model::{build_interaction, build_j, InteractionSpec, PotentialKind};
use fermi_rg::rng::{random_c64, rng_from};
use fermi_rg::rg;
use fermi_rg::symmetry::{check_kernel, check_poly, SymmetryTag};

fn main() -> fermi_rg::Result<()> {
    let lat = Lattice::new(LatticeSpec { d: 1, l0: 2, lsp: 2, dt: 1.0, dx: 1.0, spin: true })?;
    let (table, fams) = rg::rg_table(&lat)?;
    let j = build_j(&lat);

    let spec = InteractionSpec { coupling: 0.4, potential: PotentialKind::Onsite };
    let v = build_interaction(&spec, &lat, &table, fams.psi)?;
    let all = [SymmetryTag::B, SymmetryTag::N, SymmetryTag::S, SymmetryTag::T, SymmetryTag::R];
    let rep = check_poly(&v, &lat, fams.phi, fams.psi, &all, 1e-10)?;
    println!("interaction symmetries:");
    for (tag, violation) in &rep.per_tag {
        println!("  {tag}: violation {violation:.2e}");
    }

    // reflection-real spin-independent covariance
    let mut rng = rng_from(11, "example-sym", 0);
    let raw: Vec<C64> = (0..lat.n_modes).map(|_| random_c64(&mut rng)).collect();
    let profile: Vec<C64> = (0..lat.n_modes)
        .map(|mode| {
            let refl = lat.reflect_mode_k0(mode);
            let base = raw[mode.min(refl)];
            if refl >= mode {
                base
            } else {
                base.conj()
            }
        })
        .collect();
    let prop = covariance_from_profile(&lat, &profile);
    let rep_c = check_kernel(&prop.position.as_kernel(), &all, 1e-10)?;
    println!("covariance kernel max violation: {:.2e}", rep_c.max_violation);

    // the extended map preserves every symmetry of its inputs
    let cov = CovarianceMatrix::new(prop.position.mat.clone())?;
    let out = rg::omega_tilde(&v, &fams, &cov, &j, Some(4))?.output;
    let rep_out = check_poly(&out, &lat, fams.phi, fams.psi, &all, 1e-10)?;
    println!("map output (kernels up to degree 4):");
    for (tag, violation) in &rep_out.per_tag {
        println!("  {tag}: violation {violation:.2e}");
    }
    Ok(())
}
