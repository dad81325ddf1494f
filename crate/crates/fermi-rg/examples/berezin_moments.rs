//! Grassmann algebra basics: products, exponentials, logarithms, Pfaffians,
//! Gaussian moments and Wick ordering.
//!
//! Run with `cargo run --release --example berezin_moments`.

use fermi_rg::cmatrix::{pfaffian, CMatrix, CovarianceMatrix};
use fermi_rg::grassmann::{
    gaussian_integral, wick_order, GeneratorTable, GrassmannPolynomial, WickDirection,
};
use fermi_rg::rng::{random_c64, rng_from};

fn main() -> fermi_rg::Result<()> {
    let dim = 6;
    let table = GeneratorTable::new(&[("psi", dim)])?;
    let fam = table.family("psi")?;
    let gen = |i: usize| GrassmannPolynomial::generator(table.clone(), fam, i);

    // anticommutation and nilpotency
    let p12 = gen(0).mul(&gen(1))?;
    let p21 = gen(1).mul(&gen(0))?;
    println!("psi0 psi1 + psi1 psi0 = {}", p12.add(&p21)?.max_coeff_norm());
    println!("psi0 psi0            = {}", gen(0).mul(&gen(0))?.max_coeff_norm());

    // exp of a sum of commuting quadratics expands into elementary products
    let quad = p12.add(&gen(2).mul(&gen(3))?)?;
    let e = quad.exp()?;
    println!("\nexp(psi0 psi1 + psi2 psi3):\n{}", e.dump());
    let round = e.log()?;
    println!("log back, max error = {:.2e}", round.sub(&quad)?.max_coeff_norm());

    // random antisymmetric covariance
    let mut rng = rng_from(7, "example-moments", 0);
    let mut m = CMatrix::zero(dim);
    for i in 0..dim {
        for j in i + 1..dim {
            let z = random_c64(&mut rng);
            m[(i, j)] = z;
            m[(j, i)] = -z;
        }
    }
    let cov = CovarianceMatrix::new(m)?;
    println!("\nPf(C) = {}", pfaffian(cov.matrix()));

    // moments are Pfaffians of submatrices
    let m4 = gen(0).mul(&gen(1))?.mul(&gen(2))?.mul(&gen(3))?;
    let moment = gaussian_integral(&m4, fam, &cov)?.coeff(0);
    let expect = cov.get(0, 1) * cov.get(2, 3) - cov.get(0, 2) * cov.get(1, 3)
        + cov.get(0, 3) * cov.get(1, 2);
    println!("<psi0 psi1 psi2 psi3> = {moment}  (pair expansion: {expect})");

    // ordered monomials integrate to zero
    let ordered = wick_order(&m4, fam, &cov, WickDirection::Forward)?;
    let zero = gaussian_integral(&ordered, fam, &cov)?.coeff(0);
    println!("<:psi0 psi1 psi2 psi3:> = {:.2e}", zero.norm());
    Ok(())
}
