//! Exact-identity suites: Gaussian change-of-covariance formulae, the
//! source-shift decomposition, the semigroup law, ordered pairing
//! selection rules, transform identities, the two-point transposition
//! identity, and symmetry preservation under the maps.

use std::sync::Arc;

use crate::cmatrix::{pfaffian, CMatrix, CovarianceMatrix, C64};
use crate::error::Result;
use crate::fourier::covariance_from_profile;
use crate::grassmann::{
    bilinear_form, gaussian_integral, GeneratorTable, GrassmannPolynomial,
};
use crate::kernel::{BMatrix, Profile};
use crate::lattice::{Lattice, LatticeSpec};
use crate::model::{build_interaction, build_j, InteractionSpec, PotentialKind};
use crate::rng::{random_c64, rng_from};
use crate::suites::report::{CheckRecord, SuiteReport};
use crate::suites::SuiteConfig;
use crate::symmetry::{check_poly, SymmetryTag};
use rand::Rng;

pub(super) fn random_skew(rng: &mut impl Rng, n: usize, scale: f64) -> CMatrix {
    let mut m = CMatrix::zero(n);
    for i in 0..n {
        for j in i + 1..n {
            let z = random_c64(rng).scale(scale);
            m[(i, j)] = z;
            m[(j, i)] = -z;
        }
    }
    m
}

pub(super) fn random_even_poly(
    table: &Arc<GeneratorTable>,
    rng: &mut impl Rng,
    terms: usize,
    max_degree: usize,
    scale: f64,
) -> GrassmannPolynomial {
    let total = table.total();
    let mut p = GrassmannPolynomial::zero(table.clone());
    while p.num_terms() < terms {
        let deg = 2 * rng.gen_range(1..=max_degree / 2);
        let mut mono = 0u64;
        while (mono.count_ones() as usize) < deg {
            mono |= 1u64 << rng.gen_range(0..total as u32);
        }
        if mono.count_ones() as usize == deg {
            p.add_term(mono, random_c64(rng).scale(scale));
        }
    }
    p
}

/// Random even polynomial over two families only.
pub(super) fn random_even_poly_two(
    table: &Arc<GeneratorTable>,
    fam_a: crate::grassmann::FamilyId,
    fam_b: crate::grassmann::FamilyId,
    rng: &mut impl Rng,
    terms: usize,
    scale: f64,
) -> GrassmannPolynomial {
    let mask = table.family_mask(fam_a) | table.family_mask(fam_b);
    let bits: Vec<u32> = (0..64).filter(|b| mask & (1u64 << b) != 0).collect();
    let mut p = GrassmannPolynomial::zero(table.clone());
    while p.num_terms() < terms {
        let deg = if rng.gen_bool(0.5) { 2 } else { 4 };
        let mut mono = 0u64;
        while (mono.count_ones() as usize) < deg {
            mono |= 1u64 << bits[rng.gen_range(0..bits.len())];
        }
        p.add_term(mono, random_c64(rng).scale(scale));
    }
    p
}

pub(super) fn random_profile(lat: &Arc<Lattice>, rng: &mut impl Rng) -> Profile {
    (0..lat.n_modes).map(|_| random_c64(rng)).collect()
}

fn subst_shift(
    table: &Arc<GeneratorTable>,
    fam_from: crate::grassmann::FamilyId,
    image: impl Fn(usize) -> GrassmannPolynomial,
) -> std::collections::HashMap<u32, GrassmannPolynomial> {
    let info = table.family_info(fam_from).clone();
    let mut map = std::collections::HashMap::new();
    for local in 0..info.count {
        map.insert((info.offset + local) as u32, image(local));
    }
    map
}

/// Gaussian translation and change-of-covariance identities on abstract
/// generator sets.
pub fn run_appendix_c(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("appendix-C");
    let tol = 1e-10;
    // two families of this size: at most 10 generators in play
    let dims = [4usize, 5];
    for inst in 0..20u64 {
        let dim = dims[inst as usize % dims.len()];
        let mut rng = rng_from(cfg.seed, "appendix-C", inst);
        let table = GeneratorTable::new(&[("psi", dim), ("phi", dim)])?;
        let fpsi = table.family("psi")?;
        let fphi = table.family("phi")?;
        let cov = CovarianceMatrix::new(random_skew(&mut rng, dim, 1.0))?;

        // translation formula: integral of f(psi) e^(psi phi) against the
        // measure equals e^(-1/2 phi C phi) times the shifted integral
        let f = random_even_poly(&table, &mut rng, 8, dim.min(6), 0.7);
        let f_psi = {
            // keep only psi-dependence for clarity
            let mut only = GrassmannPolynomial::zero(table.clone());
            let phi_mask = table.family_mask(fphi);
            for (&m, &c) in f.terms() {
                if m & phi_mask == 0 {
                    only.add_term(m, c);
                }
            }
            only
        };
        let pairing = bilinear_form(&table, fpsi, fphi, &CMatrix::identity(dim))?;
        let lhs = gaussian_integral(&f_psi.mul(&pairing.exp()?)?, fpsi, &cov)?;

        let shift = subst_shift(&table, fpsi, |i| {
            let mut acc = GrassmannPolynomial::generator(table.clone(), fpsi, i);
            for j in 0..dim {
                let c = cov.get(i, j);
                if c != C64::new(0.0, 0.0) {
                    acc = acc
                        .add(&GrassmannPolynomial::generator(table.clone(), fphi, j).scale(c))
                        .unwrap();
                }
            }
            acc
        });
        let quad = crate::rg::half_quadratic_matrix(&table, fphi, cov.matrix())?
            .scale(C64::new(-1.0, 0.0));
        let rhs = gaussian_integral(&f_psi.substitute(&shift)?, fpsi, &cov)?
            .mul(&quad.exp()?)?;
        let err = lhs.sub(&rhs)?.max_coeff_diff(&GrassmannPolynomial::zero(table.clone()));
        report.push(CheckRecord::error("gaussian-translation", inst, format!("dim-{dim}"), err, tol));

        // change of covariance, part (a): quadratic reweighting equals the
        // resolvent covariance on monomials
        let u = random_skew(&mut rng, dim, 0.6 / dim as f64);
        let cu = cov.matrix().matmul(&u);
        debug_assert!(cu.spectral_bound() < 1.0);
        let cprime_mat = CMatrix::identity(dim)
            .add(&cu.scale(C64::new(-1.0, 0.0)))
            .inverse()?
            .matmul(cov.matrix());
        let cprime = CovarianceMatrix::new(cprime_mat.clone())?;
        let half_u = crate::rg::half_quadratic_matrix(&table, fpsi, &u)?;
        let weight = half_u.exp()?;
        let z = gaussian_integral(&weight, fpsi, &cov)?.constant_term();
        let mut worst_a = 0.0f64;
        for _ in 0..6 {
            let mono = random_even_poly(&table, &mut rng, 1, dim.min(6), 1.0);
            let mut mono_psi = GrassmannPolynomial::zero(table.clone());
            let phi_mask = table.family_mask(fphi);
            for (&m, &c) in mono.terms() {
                if m & phi_mask == 0 {
                    mono_psi.add_term(m, c);
                }
            }
            let lhs_a = gaussian_integral(&mono_psi.mul(&weight)?, fpsi, &cov)?
                .scale(1.0 / z);
            let rhs_a = gaussian_integral(&mono_psi, fpsi, &cprime)?;
            worst_a = worst_a.max(lhs_a.sub(&rhs_a)?.max_coeff_norm());
        }
        report.push(CheckRecord::error("covariance-change-a", inst, format!("dim-{dim}"), worst_a, tol));

        // normalization constant as a Pfaffian ratio (even dimension only:
        // odd skew matrices have vanishing Pfaffian on both sides)
        if dim % 2 == 0 {
            let z_expect = pfaffian(cov.matrix()) / pfaffian(&cprime_mat);
            report.push(CheckRecord::error(
                "covariance-change-z",
                inst,
                format!("dim-{dim}"),
                (z - z_expect).norm(),
                tol * z.norm().max(1.0),
            ));
        }

        // part (b): full exponential identity with external shift
        let w = random_even_poly(&table, &mut rng, 6, dim.min(6), 0.4);
        let mut w_psi = GrassmannPolynomial::zero(table.clone());
        let phi_mask = table.family_mask(fphi);
        for (&m, &c) in w.terms() {
            if m & phi_mask == 0 {
                w_psi.add_term(m, c);
            }
        }
        // lhs: (1/Z) integral of e^(W(psi + phi))
        let plus_phi = subst_shift(&table, fpsi, |i| {
            GrassmannPolynomial::generator(table.clone(), fpsi, i)
                .add(&GrassmannPolynomial::generator(table.clone(), fphi, i))
                .unwrap()
        });
        let lhs_b = gaussian_integral(&w_psi.substitute(&plus_phi)?.exp()?, fpsi, &cov)?
            .scale(1.0 / z);
        // rhs: e^(1/2 phi U (1 + C'U) phi) integral of
        //      e^((W - 1/2 U)(psi + (1 + C'U) phi)) against the new measure
        let bmat = CMatrix::identity(dim).add(&cprime_mat.matmul(&u));
        let shifted_arg = subst_shift(&table, fpsi, |i| {
            let mut acc = GrassmannPolynomial::generator(table.clone(), fpsi, i);
            for j in 0..dim {
                let c = bmat[(i, j)];
                if c != C64::new(0.0, 0.0) {
                    acc = acc
                        .add(&GrassmannPolynomial::generator(table.clone(), fphi, j).scale(c))
                        .unwrap();
                }
            }
            acc
        });
        let integrand = w_psi
            .sub(&half_u)?
            .substitute(&shifted_arg)?
            .exp()?;
        let outer = crate::rg::half_quadratic_matrix(&table, fphi, &u.matmul(&bmat))?;
        let rhs_b = gaussian_integral(&integrand, fpsi, &cprime)?.mul(&outer.exp()?)?;
        let err_b = lhs_b.sub(&rhs_b)?.max_coeff_norm();
        report.push(CheckRecord::error("covariance-change-b", inst, format!("dim-{dim}"), err_b, tol));
    }
    report.metric("instances", 20);
    Ok(report)
}

fn abstract_rg_setup(
    seed: u64,
    label: &str,
    inst: u64,
    dim: usize,
) -> Result<(
    Arc<GeneratorTable>,
    crate::rg::RgFamilies,
    CovarianceMatrix,
    CMatrix,
    GrassmannPolynomial,
)> {
    let mut rng = rng_from(seed, label, inst);
    let table = GeneratorTable::new(&[("phi", dim), ("psi", dim), ("zeta", dim)])?;
    let fams = crate::rg::RgFamilies {
        phi: table.family("phi")?,
        psi: table.family("psi")?,
        zeta: table.family("zeta")?,
    };
    let cov = CovarianceMatrix::new(random_skew(&mut rng, dim, 0.8))?;
    let j = random_skew(&mut rng, dim, 0.8);
    let w = random_even_poly_two(&table, fams.phi, fams.psi, &mut rng, 8, 0.35);
    Ok((table, fams, cov, j, w))
}

/// Source-shift decomposition of the extended map.
pub fn run_source_shift_identity(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("lemma-VII.3");
    let tol = 1e-10;
    for inst in 0..10u64 {
        let (table, fams, cov, j, w) = abstract_rg_setup(cfg.seed, "vii3", inst, 4)?;
        let source = crate::rg::source_pairing_matrix(&table, &fams, &j)?;
        let lhs = crate::rg::omega_tilde_with_source(&w, &fams, &cov, &source, None)?.output;

        let jcj = j.matmul(cov.matrix()).matmul(&j);
        let quad = crate::rg::half_quadratic_matrix(&table, fams.phi, &jcj)?;
        let cj = cov.matrix().matmul(&j);
        let plain = crate::rg::omega(&w, &fams, &cov, None)?.output;
        let rhs = quad.add(&crate::rg::field_shift_map(&plain, &fams, &cj)?)?;
        let err = lhs.sub(&rhs)?.max_coeff_norm();
        report.push(CheckRecord::error("source-shift", inst, "quartic", err, tol));

        // zero input: the map returns exactly the quadratic source term
        if inst == 0 {
            let zero = GrassmannPolynomial::zero(table.clone());
            let base = crate::rg::omega_tilde_with_source(&zero, &fams, &cov, &source, None)?
                .output;
            let err0 = base.sub(&quad)?.max_coeff_norm();
            report.push(CheckRecord::error("source-shift", inst, "zero-input", err0, tol));
        }
    }
    report.metric("instances", 10);
    Ok(report)
}

/// Semigroup law of the extended map under covariance addition.
pub fn run_semigroup(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("semigroup");
    let tol = 1e-10;
    for inst in 0..10u64 {
        let (table, fams, c1, j, w) = abstract_rg_setup(cfg.seed, "semigroup", inst, 4)?;
        let mut rng = rng_from(cfg.seed, "semigroup-second", inst);
        let c2 = CovarianceMatrix::new(random_skew(&mut rng, 4, 0.8))?;
        let csum = CovarianceMatrix::new(c1.matrix().add(c2.matrix()))?;
        let source = crate::rg::source_pairing_matrix(&table, &fams, &j)?;
        let joint = crate::rg::omega_tilde_with_source(&w, &fams, &csum, &source, None)?.output;
        let inner = crate::rg::omega_tilde_with_source(&w, &fams, &c2, &source, None)?.output;
        let outer = crate::rg::omega_tilde_with_source(&inner, &fams, &c1, &source, None)?.output;
        let err = joint.sub(&outer)?.max_coeff_norm();
        report.push(CheckRecord::error("semigroup", inst, "composition", err, tol));
    }
    report.metric("instances", 10);
    Ok(report)
}

/// Ordered pairing integrals: selection rule and norm bound.
pub fn run_pairing_selection(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("lemma-VII.5");
    let lat = Lattice::new(LatticeSpec { l0: 2, lsp: 2, ..cfg.lattice.clone() })?;
    let (table, fams) = crate::rg::rg_table(&lat)?;
    super::check_budget(cfg, table.total())?;
    let j = build_j(&lat);
    let shape = cfg.norm.shape(lat.spec.d);
    let params = cfg.norm.params();

    let mut rng = rng_from(cfg.seed, "vii5-cov", 0);
    let profile: Profile = (0..lat.n_modes)
        .map(|_| random_c64(&mut rng) + C64::new(1.2, 0.0))
        .collect();
    let prop = covariance_from_profile(&lat, &profile);
    let cov = CovarianceMatrix::new(prop.position.mat.clone())?;

    // selection rule: exact zero unless the degrees match
    for inst in 0..4u64 {
        let mut rng = rng_from(cfg.seed, "vii5", inst);
        for p_prime in 0..=3usize {
            let mut f = GrassmannPolynomial::zero(table.clone());
            for _ in 0..2 {
                let mut mono = 0u64;
                let mut picked = 0;
                while picked < p_prime {
                    let bit = table.generator_bit(fams.zeta, rng.gen_range(0..lat.n_b));
                    if mono & bit == 0 {
                        mono |= bit;
                        picked += 1;
                    }
                }
                mono |= table.generator_bit(fams.phi, rng.gen_range(0..lat.n_b));
                f.add_term(mono, random_c64(&mut rng));
            }
            for p in 0..=3usize {
                if p == p_prime {
                    continue;
                }
                let out = crate::rg::wickdot_pairing_integral(&f, p, &fams, &cov, &j)?;
                report.push(CheckRecord::error(
                    "pairing-vanishing",
                    inst,
                    format!("p{p}-pp{p_prime}"),
                    out.max_coeff_norm(),
                    1e-14,
                ));
            }
        }
    }

    // norm bound: result norm against p! Gamma^p times the input norm
    let c_norm = crate::norms::norm_1inf(&prop.position.as_kernel(), shape)?;
    let c_1inf = c_norm.constant_coeff().finite().unwrap_or(f64::INFINITY);
    let mut c_inf = 0.0f64;
    for i in 0..lat.n_b {
        for k in 0..lat.n_b {
            c_inf = c_inf.max(prop.position.get(i, k).norm());
        }
    }
    for (inst, &(m, p)) in [(0usize, 1usize), (0, 2), (1, 1), (1, 2)].iter().enumerate() {
        let mut rng = rng_from(cfg.seed, "vii5-bound", inst as u64);
        let fk = crate::kernel::Kernel::from_fn(
            lat.clone(),
            m,
            p,
            crate::kernel::ArgSpace::Position,
            |_| random_c64(&mut rng),
        )?
        .ant_ext()
        .ant_int();
        let fpoly = crate::kernel::poly_from_kernel(&fk, &table, fams.phi, fams.zeta)?;
        let out = crate::rg::wickdot_pairing_integral(&fpoly, p, &fams, &cov, &j)?;
        let out_kernels = crate::kernel::kernels_from_poly(&out, &lat, fams.phi, fams.zeta)?;
        let lhs = match out_kernels.get(&(m + p, 0)) {
            Some(k) => crate::norms::norm_1inf(k, shape)?.scale(params.rho.get(m + p, 0)),
            None => crate::decay::DecaySeries::zero(shape),
        };
        // external-improving candidate along the contraction path
        let mut gamma: f64 = 0.0;
        for step in 0..p {
            let (mm, nn) = (m + step, p - step);
            let cand = if mm == 0 {
                params.rho.get(1, nn - 1) / params.rho.get(0, nn) * c_1inf
            } else {
                params.rho.get(mm + 1, nn - 1) / params.rho.get(mm, nn) * c_inf
            };
            gamma = gamma.max(cand);
        }
        let p_fact: f64 = (1..=p).map(|v| v as f64).product();
        let rhs = crate::norms::norm_1inf(&fk, shape)?
            .scale(params.rho.get(m, p) * p_fact * gamma.powi(p as i32));
        let rep = crate::norms::InequalityReport::build(lhs, rhs, 1e-9)?;
        for row in rep.rows() {
            report.push(CheckRecord::scalar(
                "pairing-bound",
                inst as u64,
                format!("m{m}-p{p}-delta{}", row.delta),
                row.lhs,
                row.rhs + 1e-9,
            ));
        }
    }
    Ok(report)
}

/// Transform identities between swap, covariance and multiplier kernels.
pub fn run_transform_identities(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("lemma-IX.5");
    let tol = 1e-10;
    let lat = Lattice::new(cfg.lattice.clone())?;
    let j = build_j(&lat);
    for inst in 0..3u64 {
        let mut rng = rng_from(cfg.seed, "ix5", inst);
        let cprof = random_profile(&lat, &mut rng);
        let prop = covariance_from_profile(&lat, &cprof);

        let cj = prop.position.compose(&j);
        let chat = crate::fourier::multiplier_hat(&lat, &cprof);
        report.push(CheckRecord::error("swap-multiplier", inst, "cj-equals-hat", cj.max_abs_diff(&chat), tol));

        let jcj = j.compose(&prop.position).compose(&j);
        let back = crate::fourier::two_point_profile(&jcj);
        let err: f64 = back
            .iter()
            .zip(&cprof)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        report.push(CheckRecord::error("swap-multiplier", inst, "profile-roundtrip", err, tol));

        let chi1 = random_profile(&lat, &mut rng);
        let chi2 = random_profile(&lat, &mut rng);
        let comp = crate::fourier::multiplier_hat(&lat, &chi1)
            .compose(&crate::fourier::multiplier_hat(&lat, &chi2));
        let prod: Profile = chi1.iter().zip(&chi2).map(|(a, b)| a * b).collect();
        report.push(CheckRecord::error(
            "multiplier-composition",
            inst,
            "product",
            comp.max_abs_diff(&crate::fourier::multiplier_hat(&lat, &prod)),
            tol,
        ));

        let chat1 = crate::fourier::multiplier_hat(&lat, &chi1);
        let prof_back = crate::fourier::two_point_profile(&j.compose(&chat1));
        let err3: f64 = prof_back
            .iter()
            .zip(&chi1)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        report.push(CheckRecord::error("swap-conjugation", inst, "extract", err3, tol));
        let jcj2 = j.compose(&chat1).compose(&j);
        report.push(CheckRecord::error(
            "swap-conjugation",
            inst,
            "transpose",
            jcj2.max_abs_diff(&chat1.transpose_neg()),
            tol,
        ));

        // transform roundtrips
        let k = prop.position.as_kernel();
        let mk = crate::fourier::total_ft(&k)?;
        report.push(CheckRecord::error("total-transform", inst, "off-shell", mk.max_offshell_abs(), tol));
        let back_k = crate::fourier::total_ft_inverse(&mk, 0, 2)?;
        report.push(CheckRecord::error("total-transform", inst, "roundtrip", back_k.max_abs_diff(&k), tol));

        let mut k11 = crate::kernel::Kernel::zero(lat.clone(), 1, 1, crate::kernel::ArgSpace::Position)?;
        k11.values_mut().copy_from_slice(k.values());
        let pf = crate::fourier::partial_ft(&k11)?;
        let back_p = crate::fourier::partial_ft_inverse(&pf)?;
        report.push(CheckRecord::error("partial-transform", inst, "roundtrip", back_p.max_abs_diff(&k11), tol));
    }
    report.metric("lattice", format!("{:?}", lat.spec));
    Ok(report)
}

/// Two-point transposition identity for symmetric kernels.
pub fn run_two_point_identity(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("lemma-B.6");
    let tol = 1e-10;
    let lat = Lattice::new(LatticeSpec { l0: 2, lsp: 2, spin: true, ..cfg.lattice.clone() })?;
    let j = build_j(&lat);
    let table = GeneratorTable::new(&[("phi", lat.n_b), ("psi", lat.n_b)])?;
    super::check_budget(cfg, table.total())?;
    let fphi = table.family("phi")?;
    let fpsi = table.family("psi")?;

    // zero kernel
    let zero = BMatrix::zero(lat.clone());
    let e0 = crate::symmetry::lemma_b6_check(&zero, &j, &table, fphi, fpsi, tol)?;
    report.push(CheckRecord::error("two-point-identity", 0, "zero", e0, 1e-14));

    // lattice-delta profile (constant in momentum space)
    let flat: Profile = vec![C64::new(0.8, 0.0); lat.n_modes];
    let bflat = crate::symmetry::bnst_two_point_from_profile(&lat, &flat);
    let ef = crate::symmetry::lemma_b6_check(&bflat, &j, &table, fphi, fpsi, tol)?;
    report.push(CheckRecord::error("two-point-identity", 0, "delta-profile", ef, tol));

    for inst in 0..3u64 {
        let mut rng = rng_from(cfg.seed, "b6", inst);
        let profile = random_profile(&lat, &mut rng);
        let b = crate::symmetry::bnst_two_point_from_profile(&lat, &profile);
        let err = crate::symmetry::lemma_b6_check(&b, &j, &table, fphi, fpsi, tol)?;
        report.push(CheckRecord::error("two-point-identity", inst, "random-profile", err, tol));
    }
    Ok(report)
}

/// Symmetries of the interaction, the covariance, and their preservation
/// under the maps.
pub fn run_symmetry_preservation(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("symmetry-preservation");
    let tol = 1e-10;
    let lat = Lattice::new(LatticeSpec { l0: 2, lsp: 2, spin: true, ..cfg.lattice.clone() })?;
    let (table, fams) = crate::rg::rg_table(&lat)?;
    super::check_budget(cfg, table.total())?;
    let j = build_j(&lat);
    let cap = Some(4usize);

    let spec = InteractionSpec { coupling: cfg.interaction.coupling, potential: PotentialKind::Onsite };
    let v = build_interaction(&spec, &lat, &table, fams.psi)?;
    let bnst = [SymmetryTag::B, SymmetryTag::N, SymmetryTag::S, SymmetryTag::T];
    let rep_v = check_poly(&v, &lat, fams.phi, fams.psi, &bnst, tol)?;
    for (tag, violation) in &rep_v.per_tag {
        report.push(CheckRecord::error("interaction-symmetry", 0, format!("V:{tag}"), *violation, tol));
    }
    // the on-site potential is real and even, so reflection reality holds too
    let rep_r = check_poly(&v, &lat, fams.phi, fams.psi, &[SymmetryTag::R], tol)?;
    report.push(CheckRecord::error("interaction-symmetry", 0, "V:R", rep_r.max_violation, tol));

    // reflection-real spin-independent covariance
    let mut rng = rng_from(cfg.seed, "sym-c", 0);
    let raw = random_profile(&lat, &mut rng);
    let profile: Profile = (0..lat.n_modes)
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
    let rep_c = crate::symmetry::check_kernel(&prop.position.as_kernel(), &bnst, tol)?;
    report.push(CheckRecord::error("covariance-symmetry", 0, "C:BNST", rep_c.max_violation, tol));
    let rep_cr = crate::symmetry::check_kernel(&prop.position.as_kernel(), &[SymmetryTag::R], tol)?;
    report.push(CheckRecord::error("covariance-symmetry", 0, "C:R", rep_cr.max_violation, tol));

    // preservation under both maps (kernel window up to degree 4)
    let cov = CovarianceMatrix::new(prop.position.mat.clone())?;
    let tilde = crate::rg::omega_tilde(&v, &fams, &cov, &j, cap)?.output;
    let rep_t = check_poly(&tilde, &lat, fams.phi, fams.psi, &bnst, tol)?;
    for (tag, violation) in &rep_t.per_tag {
        report.push(CheckRecord::error("map-preservation", 0, format!("extended:{tag}"), *violation, tol));
    }
    let rep_tr = check_poly(&tilde, &lat, fams.phi, fams.psi, &[SymmetryTag::R], tol)?;
    report.push(CheckRecord::error("map-preservation", 0, "extended:R", rep_tr.max_violation, tol));

    let plain = crate::rg::omega(&v, &fams, &cov, cap)?.output;
    let rep_p = check_poly(&plain, &lat, fams.phi, fams.psi, &bnst, tol)?;
    report.push(CheckRecord::error("map-preservation", 0, "plain:BNST", rep_p.max_violation, tol));

    report.metric("kernel-degree-window", 4);
    report.metric("generators", table.total());
    Ok(report)
}
