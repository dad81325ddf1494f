//! Smooth shells around the Fermi surface: the bump, the telescoping
//! partition of unity, and the first-scale covariance with its deep-infrared
//! hole.
//!
//! Run with `cargo run --release --example scale_partition`.

use fermi_rg::lattice::{Lattice, LatticeSpec};
use fermi_rg::scales::{bump_phi, first_scale_covariance, nu, Counterterm, ScaleFamily, ScaleKind};

fn main() -> fermi_rg::Result<()> {
    let fam = ScaleFamily::default();
    let m = fam.m_param;
    println!("scale parameter M = {m}, first-scale index j0 = {}", fam.j0);

    println!("\nbump: phi(0) = {}, phi(1) = {}, phi(1.5) = {:.6}, phi(2) = {}",
        bump_phi(0.0), bump_phi(1.0), bump_phi(1.5), bump_phi(2.0));

    // the shells telescope to the outer bump
    let x = 3.7e-4;
    let total: f64 = (0..12).map(|j| nu(m.powi(2 * j) * x, m)).sum();
    println!("sum of shells at x = {x}: {total:.15} vs phi(x/M) = {:.15}", bump_phi(x / m));

    // a frequency-resolved lattice showing the profile layers
    let lat = Lattice::new(LatticeSpec { d: 1, l0: 64, lsp: 32, dt: 4.0, dx: 1.0, spin: false })?;
    for j in 1..=3 {
        let shell = fam.scale_function(&lat, j as f64, ScaleKind::Shell)?;
        let on: usize = shell.iter().filter(|&&v| v > 0.0).count();
        let plateau: usize = shell.iter().filter(|&&v| (v - 1.0).abs() < 1e-12).count();
        println!("shell {j}: {on} active modes, {plateau} on the plateau");
    }

    let ct = Counterterm::zero(&lat, 0.5);
    let prop = first_scale_covariance(&fam, &ct, &lat)?;
    let zeros = prop.profile.iter().filter(|z| z.norm() == 0.0).count();
    let peak = prop.profile.iter().map(|z| z.norm()).fold(0.0, f64::max);
    println!(
        "\nfirst-scale covariance: {} modes, {} infrared zeros, peak |C| = {:.3}",
        prop.profile.len(),
        zeros,
        peak
    );
    println!(
        "position kernel antisymmetry defect = {:.2e}",
        prop.position.antisymmetry_defect()
    );
    Ok(())
}
