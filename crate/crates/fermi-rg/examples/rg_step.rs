//! One step of the renormalization group map on a quartic interaction:
//! the direct route, the source-shift decomposition, and the connected
//! Green's functions with amputation.
//!
//! Run with `cargo run --release --example rg_step`.

use fermi_rg::cmatrix::{CovarianceMatrix, C64};
use fermi_rg::fourier::covariance_from_profile;
use fermi_rg::lattice::{Lattice, LatticeSpec};
use fermi_rg::model::{build_interaction, build_j, InteractionSpec, PotentialKind};
use fermi_rg::rng::{random_c64, rng_from};
use fermi_rg::rg;

fn main() -> fermi_rg::Result<()> {
    let lat = Lattice::new(LatticeSpec { d: 1, l0: 2, lsp: 2, dt: 1.0, dx: 1.0, spin: false })?;
    let (table, fams) = rg::rg_table(&lat)?;
    let j = build_j(&lat);

    // a well-conditioned random propagator profile
    let mut rng = rng_from(3, "example-rg", 0);
    let profile: Vec<C64> = (0..lat.n_modes)
        .map(|_| random_c64(&mut rng) + C64::new(1.5, 0.0))
        .collect();
    let prop = covariance_from_profile(&lat, &profile);
    let cov = CovarianceMatrix::new(prop.position.mat.clone())?;

    let spec = InteractionSpec { coupling: 0.05, potential: PotentialKind::Gaussian { width: 1.0 } };
    let v = build_interaction(&spec, &lat, &table, fams.psi)?;
    println!("interaction terms: {}", v.num_terms());

    let result = rg::omega_tilde(&v, &fams, &cov, &j, None)?;
    println!(
        "extended map: {} output terms, log Z = {}",
        result.output.num_terms(),
        result.log_z
    );

    // the source-shift decomposition reproduces the direct route
    let jcj = j.compose(&prop.position).compose(&j);
    let quad = rg::half_quadratic(&table, fams.phi, &jcj)?;
    let plain = rg::omega(&v, &fams, &cov, None)?.output;
    let shifted = rg::field_shift(&plain, &fams, &prop.position.compose(&j))?;
    let defect = result.output.sub(&quad.add(&shifted)?)?.max_coeff_norm();
    println!("source-shift decomposition defect = {defect:.2e}");

    // connected Green's functions and the amputated two-point profile
    let greens = rg::green_functions(&v, &fams, &profile, &cov, &j, &lat, 2, None)?;
    let dressing: f64 = greens
        .g2_profile
        .iter()
        .zip(&profile)
        .map(|(g, c)| (g - c).norm())
        .fold(0.0, f64::max);
    println!("two-point dressing |G2 - C| up to {dressing:.3e}");
    let amp_peak = greens.g2_amp_profile.iter().map(|z| z.norm()).fold(0.0, f64::max);
    println!("amputated two-point peak = {amp_peak:.3e}");
    println!("extracted Green blocks: {:?}", greens.blocks.keys().collect::<Vec<_>>());
    Ok(())
}
