//! The renormalization group maps, Green's-function extraction, amputation,
//! field shifts, ordered pairing integrals, and counterterm response.
//!
//! The maps are computed by their defining integrals: substitute, form the
//! exponential, integrate the fluctuation family against the Gaussian
//! measure, normalize and take the logarithm. The source-shift identity and
//! the semigroup law are verified against this direct route, never used to
//! implement it.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::cmatrix::{CMatrix, CovarianceMatrix, C64};
use crate::error::{Error, Result};
use crate::grassmann::{
    bilinear_form, gaussian_integral, wick_order, DegreeCap, FamilyId, GeneratorTable,
    GrassmannPolynomial, WickDirection,
};
use crate::kernel::{BMatrix, Kernel, Profile};
use crate::lattice::Lattice;
use crate::scales::{Counterterm, ScaleFamily};

/// Families of an RG computation: external, field, and fluctuation.
#[derive(Clone, Copy, Debug)]
pub struct RgFamilies {
    pub phi: FamilyId,
    pub psi: FamilyId,
    pub zeta: FamilyId,
}

/// Standard three-family table over a lattice.
pub fn rg_table(lat: &Arc<Lattice>) -> Result<(Arc<GeneratorTable>, RgFamilies)> {
    let table = GeneratorTable::new(&[("phi", lat.n_b), ("psi", lat.n_b), ("zeta", lat.n_b)])?;
    let fams = RgFamilies {
        phi: table.family("phi")?,
        psi: table.family("psi")?,
        zeta: table.family("zeta")?,
    };
    Ok((table, fams))
}

#[derive(Clone, Debug)]
pub struct RgDiagnostics {
    pub generators: usize,
    pub output_terms: usize,
    pub degree_cap: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RGResult {
    pub output: GrassmannPolynomial,
    pub log_z: C64,
    pub diagnostics: RgDiagnostics,
}

fn non_fluctuation_cap(
    table: &Arc<GeneratorTable>,
    fams: &RgFamilies,
    cap: Option<usize>,
) -> Option<DegreeCap> {
    cap.map(|limit| DegreeCap {
        mask: table.family_mask(fams.phi) | table.family_mask(fams.psi),
        limit,
    })
}

/// Substitution `psi(xi) -> psi(xi) + zeta(xi)`.
fn shift_psi_by_zeta(
    w: &GrassmannPolynomial,
    fams: &RgFamilies,
) -> Result<GrassmannPolynomial> {
    let table = w.table().clone();
    let info = table.family_info(fams.psi).clone();
    let mut map = HashMap::new();
    for local in 0..info.count {
        let bit = (info.offset + local) as u32;
        let sum = GrassmannPolynomial::generator(table.clone(), fams.psi, local).add(
            &GrassmannPolynomial::generator(table.clone(), fams.zeta, local),
        )?;
        map.insert(bit, sum);
    }
    w.substitute(&map)
}

/// `1/2 phi B phi` for an antisymmetric two-point kernel `B`.
pub fn half_quadratic(
    table: &Arc<GeneratorTable>,
    fam: FamilyId,
    b: &BMatrix,
) -> Result<GrassmannPolynomial> {
    let w = b.lat.weight();
    let coeffs = CMatrix::from_fn(b.lat.n_b, |i, j| b.get(i, j) * 0.5 * w * w);
    bilinear_form(table, fam, fam, &coeffs)
}

/// The source pairing `phi J zeta` as a quadratic polynomial.
pub fn source_pairing(
    table: &Arc<GeneratorTable>,
    fams: &RgFamilies,
    j: &BMatrix,
) -> Result<GrassmannPolynomial> {
    let w = j.lat.weight();
    let coeffs = CMatrix::from_fn(j.lat.n_b, |a, b| j.get(a, b) * w * w);
    bilinear_form(table, fams.phi, fams.zeta, &coeffs)
}

/// Plain map: `log (1/Z) int e^(W(phi, psi + zeta)) dmu_C(zeta)` with
/// `Z = int e^(W(0, zeta)) dmu_C(zeta)`.
pub fn omega(
    w: &GrassmannPolynomial,
    fams: &RgFamilies,
    cov: &CovarianceMatrix,
    cap: Option<usize>,
) -> Result<RGResult> {
    omega_impl(w, fams, cov, None, cap)
}

/// Source-extended map: `log (1/Z) int e^(phi J zeta) e^(W(phi, psi+zeta))
/// dmu_C(zeta)`.
pub fn omega_tilde(
    w: &GrassmannPolynomial,
    fams: &RgFamilies,
    cov: &CovarianceMatrix,
    j: &BMatrix,
    cap: Option<usize>,
) -> Result<RGResult> {
    let table = w.table().clone();
    let source = source_pairing(&table, fams, j)?;
    omega_impl(w, fams, cov, Some(&source), cap)
}

/// Source-extended map with an explicit pairing polynomial, for settings
/// without a lattice (any quadratic `sum J_ij ext_i fluct_j` works).
pub fn omega_tilde_with_source(
    w: &GrassmannPolynomial,
    fams: &RgFamilies,
    cov: &CovarianceMatrix,
    source: &GrassmannPolynomial,
    cap: Option<usize>,
) -> Result<RGResult> {
    omega_impl(w, fams, cov, Some(source), cap)
}

fn omega_impl(
    w: &GrassmannPolynomial,
    fams: &RgFamilies,
    cov: &CovarianceMatrix,
    source: Option<&GrassmannPolynomial>,
    cap: Option<usize>,
) -> Result<RGResult> {
    let table = w.table().clone();
    let dcap = non_fluctuation_cap(&table, fams, cap);
    let shifted = shift_psi_by_zeta(w, fams)?;
    let mut integrand = shifted.exp_capped(dcap)?;
    if let Some(src) = source {
        integrand = integrand.mul_capped(&src.exp_capped(dcap)?, dcap)?;
    }
    let p = gaussian_integral(&integrand, fams.zeta, cov)?;
    let z = p.constant_term();
    if z.norm() < 1e-300 {
        return Err(Error::SingularLog(z.norm()));
    }
    let output = p.scale(1.0 / z).log_capped(dcap)?;
    Ok(RGResult {
        log_z: z.ln(),
        diagnostics: RgDiagnostics {
            generators: table.total(),
            output_terms: output.num_terms(),
            degree_cap: cap,
        },
        output,
    })
}

/// Substitute `psi(xi) -> psi(xi) + (S phi)(xi)` for a two-point kernel `S`
/// (the shift matrix, e.g. `C o J` or `C o J + s C' o J`).
pub fn field_shift(
    w: &GrassmannPolynomial,
    fams: &RgFamilies,
    shift: &BMatrix,
) -> Result<GrassmannPolynomial> {
    let lw = shift.lat.weight();
    let coeffs = CMatrix::from_fn(shift.lat.n_b, |i, j| shift.get(i, j) * lw);
    field_shift_map(w, fams, &coeffs)
}

/// As [`field_shift`] but with an explicit coefficient matrix: the image of
/// `psi_i` is `psi_i + sum_j coeffs[i][j] phi_j`.
pub fn field_shift_map(
    w: &GrassmannPolynomial,
    fams: &RgFamilies,
    coeffs: &CMatrix,
) -> Result<GrassmannPolynomial> {
    let table = w.table().clone();
    let info = table.family_info(fams.psi).clone();
    if coeffs.dim != info.count {
        return Err(Error::ShapeMismatch("field shift matrix vs family size".into()));
    }
    let mut map = HashMap::new();
    for local in 0..info.count {
        let bit = (info.offset + local) as u32;
        let mut acc = GrassmannPolynomial::generator(table.clone(), fams.psi, local);
        for target in 0..coeffs.dim {
            let coeff = coeffs[(local, target)];
            if coeff != C64::new(0.0, 0.0) {
                acc = acc.add(
                    &GrassmannPolynomial::generator(table.clone(), fams.phi, target)
                        .scale(coeff),
                )?;
            }
        }
        map.insert(bit, acc);
    }
    w.substitute(&map)
}

/// `1/2 ext B ext` from an explicit antisymmetric coefficient matrix.
pub fn half_quadratic_matrix(
    table: &Arc<GeneratorTable>,
    fam: FamilyId,
    b: &CMatrix,
) -> Result<GrassmannPolynomial> {
    bilinear_form(table, fam, fam, &b.scale(C64::new(0.5, 0.0)))
}

/// Pairing polynomial `sum_ij J_ij ext_i fluct_j` from an explicit matrix.
pub fn source_pairing_matrix(
    table: &Arc<GeneratorTable>,
    fams: &RgFamilies,
    j: &CMatrix,
) -> Result<GrassmannPolynomial> {
    bilinear_form(table, fams.phi, fams.zeta, j)
}

/// Replace the external argument by its transformed image:
/// `W^a(phi, psi) = W(hat-A phi, psi)`.
pub fn amputate(
    w: &GrassmannPolynomial,
    fams: &RgFamilies,
    a_hat: &BMatrix,
) -> Result<GrassmannPolynomial> {
    let table = w.table().clone();
    let info = table.family_info(fams.phi).clone();
    let lw = a_hat.lat.weight();
    let mut map = HashMap::new();
    for local in 0..info.count {
        let bit = (info.offset + local) as u32;
        let mut acc = GrassmannPolynomial::zero(table.clone());
        for target in 0..a_hat.lat.n_b {
            let coeff = a_hat.get(local, target) * lw;
            if coeff != C64::new(0.0, 0.0) {
                acc = acc.add(
                    &GrassmannPolynomial::generator(table.clone(), fams.phi, target)
                        .scale(coeff),
                )?;
            }
        }
        map.insert(bit, acc);
    }
    w.substitute(&map)
}

/// Ordered pairing integral:
/// `int :f:_zeta : (phi J zeta)^p :_zeta dmu_C(zeta)`, which vanishes unless
/// the fluctuation degree of `f` equals `p`.
pub fn wickdot_pairing_integral(
    f: &GrassmannPolynomial,
    p: usize,
    fams: &RgFamilies,
    cov: &CovarianceMatrix,
    j: &BMatrix,
) -> Result<GrassmannPolynomial> {
    let table = f.table().clone();
    let ordered_f = wick_order(f, fams.zeta, cov, WickDirection::Forward)?;
    let pairing = source_pairing(&table, fams, j)?;
    let mut power = GrassmannPolynomial::one(table.clone());
    for _ in 0..p {
        power = power.mul(&pairing)?;
    }
    let ordered_power = wick_order(&power, fams.zeta, cov, WickDirection::Forward)?;
    gaussian_integral(&ordered_f.mul(&ordered_power)?, fams.zeta, cov)
}

/// Connected Green's functions of an interaction through the source map,
/// plus the two-point normal forms and amputated profile.
#[derive(Clone, Debug)]
pub struct GreenFunctions {
    /// Antisymmetric coefficient kernels of the generating functional at
    /// each external degree (2, 4, ...), scaled to the pair-block form.
    pub blocks: BTreeMap<usize, Kernel>,
    pub g2: BMatrix,
    pub g2_profile: Profile,
    pub g2_amp_profile: Profile,
}

pub fn green_functions(
    v: &GrassmannPolynomial,
    fams: &RgFamilies,
    cov_profile: &Profile,
    cov: &CovarianceMatrix,
    j: &BMatrix,
    lat: &Arc<Lattice>,
    max_n: usize,
    cap: Option<usize>,
) -> Result<GreenFunctions> {
    if !v.is_even() {
        return Err(Error::Precondition("interaction must be even".into()));
    }
    let result = omega_tilde(v, fams, cov, j, cap)?;
    let gen = result.output.without_family(fams.psi);
    let kernels = crate::kernel::kernels_from_poly(&gen, lat, fams.phi, fams.psi)?;
    let mut blocks = BTreeMap::new();
    let mut g2 = BMatrix::zero(lat.clone());
    for (&(m, n), kernel) in &kernels {
        if n != 0 || m % 2 != 0 || m == 0 || m > 2 * max_n {
            continue;
        }
        let half = m / 2;
        // G_(2n) in block order carries (-1)^(n(n-1)/2) (2n)! relative to the
        // plain antisymmetric coefficient kernel
        let sign = if (half * (half - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let fact: f64 = (1..=m).map(|v| v as f64).product();
        let block = kernel.scale(C64::new(sign * fact, 0.0));
        if m == 2 {
            g2 = BMatrix::from_kernel(&block)?;
        }
        blocks.insert(m, block);
    }
    let g2_profile = crate::fourier::two_point_profile(&g2);
    let mut g2_amp_profile = vec![C64::new(0.0, 0.0); lat.n_modes];
    for mode in 0..lat.n_modes {
        let c = cov_profile[mode];
        let diff = g2_profile[mode] - c;
        if c.norm() < 1e-10 {
            if diff.norm() < 1e-8 {
                continue; // excluded region: no propagation, no vertex
            }
            return Err(Error::AmputationGuard(c.norm()));
        }
        g2_amp_profile[mode] = diff / (c * c);
    }
    Ok(GreenFunctions { blocks, g2, g2_profile, g2_amp_profile })
}

/// Divide every on-shell entry of a total transform by the product of the
/// propagator profile at each leg's momentum.
pub fn amputate_momentum_kernel(
    mk: &crate::fourier::MomentumKernel,
    profile: &Profile,
) -> Result<Vec<C64>> {
    let lat = mk.lat.clone();
    let mut out = vec![C64::new(0.0, 0.0); mk.len()];
    let mut tuple = vec![0usize; mk.args];
    for flat in 0..mk.len() {
        mk.decode(flat, &mut tuple);
        if !mk.conserves(&tuple) {
            continue;
        }
        let mut denom = C64::new(1.0, 0.0);
        let mut dead = false;
        for &idx in &tuple {
            let k = lat.momentum(idx);
            let c = profile[lat.mode_of(k.n0, &k.m)];
            if c.norm() < 1e-10 {
                dead = true;
                break;
            }
            denom *= c;
        }
        let val = mk.values()[flat];
        if dead {
            if val.norm() > 1e-8 {
                return Err(Error::AmputationGuard(0.0));
            }
            continue;
        }
        out[flat] = val / denom;
    }
    Ok(out)
}

/// Central difference with one Richardson step of the counterterm response
/// `s -> omega_tilde(C0(de + s de'))(V) - 1/2 phi J C0(de + s de') J phi`.
pub struct CountertermDerivative {
    pub derivative: GrassmannPolynomial,
    /// Coarse and fine central differences, for convergence diagnostics.
    pub coarse: GrassmannPolynomial,
    pub fine: GrassmannPolynomial,
}

pub fn rg_counterterm_derivative(
    fam: &ScaleFamily,
    ct: &Counterterm,
    ct_dir: &Counterterm,
    v: &GrassmannPolynomial,
    fams: &RgFamilies,
    j: &BMatrix,
    lat: &Arc<Lattice>,
    h: f64,
    shape: crate::decay::SeriesShape,
    cap: Option<usize>,
) -> Result<CountertermDerivative> {
    let table = v.table().clone();
    let eval = |s: f64| -> Result<GrassmannPolynomial> {
        let shifted = ct.add(&ct_dir.scale(s));
        let rep = crate::scales::counterterm_validate(&shifted, fam, lat, shape)?;
        if !rep.valid {
            return Err(Error::Precondition(format!(
                "shifted counterterm invalid: {}",
                rep.reason.unwrap_or_default()
            )));
        }
        let prop = crate::scales::first_scale_covariance(fam, &shifted, lat)?;
        let cov = CovarianceMatrix::new(prop.position.mat.clone())?;
        let result = omega_tilde(v, fams, &cov, j, cap)?;
        let jcj = j.compose(&prop.position).compose(j);
        let quad = half_quadratic(&table, fams.phi, &jcj)?;
        result.output.sub(&quad)
    };
    let diff = |step: f64| -> Result<GrassmannPolynomial> {
        let plus = eval(step)?;
        let minus = eval(-step)?;
        Ok(plus.sub(&minus)?.scale(C64::new(0.5 / step, 0.0)))
    };
    let coarse = diff(h)?;
    let fine = diff(h / 2.0)?;
    // Richardson: (4 fine - coarse) / 3
    let derivative = fine
        .scale(C64::new(4.0 / 3.0, 0.0))
        .sub(&coarse.scale(C64::new(1.0 / 3.0, 0.0)))?;
    Ok(CountertermDerivative { derivative, coarse, fine })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::covariance_from_profile;
    use crate::lattice::LatticeSpec;
    use crate::model::{build_interaction, build_j, InteractionSpec, PotentialKind};
    use crate::rng::{random_c64, rng_from};
    use rand::Rng;

    fn lat() -> Arc<Lattice> {
        crate::lattice::Lattice::new(LatticeSpec {
            d: 1,
            l0: 2,
            lsp: 2,
            dt: 1.0,
            dx: 1.0,
            spin: false,
        })
        .unwrap()
    }

    fn random_profile(l: &Arc<Lattice>, seed: u64) -> Profile {
        let mut rng = rng_from(seed, "rgprof", 0);
        (0..l.n_modes).map(|_| random_c64(&mut rng) + C64::new(1.5, 0.0)).collect()
    }

    fn random_even_w(
        table: &Arc<GeneratorTable>,
        fams: &RgFamilies,
        lat: &Arc<Lattice>,
        seed: u64,
        terms: usize,
        scale: f64,
    ) -> GrassmannPolynomial {
        let mut rng = rng_from(seed, "rgw", 1);
        let phi_mask = table.family_mask(fams.phi);
        let psi_mask = table.family_mask(fams.psi);
        let mut w = GrassmannPolynomial::zero(table.clone());
        let n_b = lat.n_b as u32;
        while w.num_terms() < terms {
            // random monomial over phi and psi of degree 2 or 4
            let deg = if rng.gen_bool(0.5) { 2 } else { 4 };
            let mut mono = 0u64;
            while mono.count_ones() < deg {
                let fam_mask = if rng.gen_bool(0.5) { phi_mask } else { psi_mask };
                let off = fam_mask.trailing_zeros();
                mono |= 1u64 << (off + rng.gen_range(0..n_b));
            }
            w.add_term(mono, random_c64(&mut rng).scale(scale));
        }
        w
    }

    #[test]
    fn omega_of_zero_is_zero_and_tilde_gives_quadratic() {
        let l = lat();
        let (table, fams) = rg_table(&l).unwrap();
        let prop = covariance_from_profile(&l, &random_profile(&l, 1));
        let cov = CovarianceMatrix::new(prop.position.mat.clone()).unwrap();
        let j = build_j(&l);

        let zero = GrassmannPolynomial::zero(table.clone());
        let plain = omega(&zero, &fams, &cov, None).unwrap();
        assert!(plain.output.max_coeff_norm() < 1e-14);

        let tilde = omega_tilde(&zero, &fams, &cov, &j, None).unwrap();
        let jcj = j.compose(&prop.position).compose(&j);
        let quad = half_quadratic(&table, fams.phi, &jcj).unwrap();
        assert!(
            tilde.output.sub(&quad).unwrap().max_coeff_norm() < 1e-12,
            "diff {:.3e}",
            tilde.output.sub(&quad).unwrap().max_coeff_norm()
        );
    }

    #[test]
    fn quadratic_input_has_closed_form() {
        // for W = 1/2 psi U psi the plain map returns
        // 1/2 psi U (1 + C' U) psi with C' = (1 - C U)^(-1) C
        let l = lat();
        let (table, fams) = rg_table(&l).unwrap();
        let prop = covariance_from_profile(&l, &random_profile(&l, 3));
        let cov = CovarianceMatrix::new(prop.position.mat.clone()).unwrap();

        let mut rng = rng_from(31, "quadu", 0);
        let mut u = BMatrix::zero(l.clone());
        for i in 0..l.n_b {
            for k in i + 1..l.n_b {
                let z = random_c64(&mut rng).scale(0.02);
                u.set(i, k, z);
                u.set(k, i, -z);
            }
        }
        // spectral condition
        let cu_op = prop.position.compose(&u).op_matrix();
        assert!(cu_op.spectral_bound() < 1.0, "scale the test operator down");

        let w = half_quadratic(&table, fams.psi, &u).unwrap();
        let got = omega(&w, &fams, &cov, None).unwrap().output;

        let id = CMatrix::identity(l.n_b);
        let cprime_op = id
            .add(&cu_op.scale(C64::new(-1.0, 0.0)))
            .inverse()
            .unwrap()
            .matmul(&prop.position.op_matrix());
        let cprime = BMatrix::from_op_matrix(l.clone(), cprime_op);
        let inner = BMatrix::identity(l.clone()).add(&cprime.compose(&u));
        let expect_mat = u.compose(&inner);
        let expect = half_quadratic(&table, fams.psi, &expect_mat).unwrap();
        let diff = got.sub(&expect).unwrap().max_coeff_norm();
        assert!(diff < 1e-10, "closed form mismatch {diff:.3e}");
    }

    #[test]
    fn first_order_response_shrinks_quadratically() {
        let l = lat();
        let (table, fams) = rg_table(&l).unwrap();
        let prop = covariance_from_profile(&l, &random_profile(&l, 4));
        let cov = CovarianceMatrix::new(prop.position.mat.clone()).unwrap();
        let w = random_even_w(&table, &fams, &l, 5, 6, 1.0);

        // first order: Omega(eps W) ~ eps (int W(phi, psi+zeta) dmu
        //                               - int W(0, zeta) dmu)
        let shifted = shift_psi_by_zeta(&w, &fams).unwrap();
        let int_w = gaussian_integral(&shifted, fams.zeta, &cov).unwrap();
        let z_part = int_w.without_family(fams.phi).without_family(fams.psi);
        let first = int_w.sub(&z_part).unwrap();

        let resid = |eps: f64| -> f64 {
            let got = omega(&w.scale(C64::new(eps, 0.0)), &fams, &cov, None)
                .unwrap()
                .output;
            got.sub(&first.scale(C64::new(eps, 0.0)))
                .unwrap()
                .max_coeff_norm()
        };
        let r1 = resid(1e-3);
        let r2 = resid(5e-4);
        let ratio = r1 / r2.max(1e-300);
        assert!(
            (2.5..=5.5).contains(&ratio),
            "expected quadratic shrinkage, ratio {ratio}"
        );
    }

    #[test]
    fn source_shift_identity_and_semigroup() {
        let l = lat();
        let (table, fams) = rg_table(&l).unwrap();
        let j = build_j(&l);
        for seed in 0..3u64 {
            let prop = covariance_from_profile(&l, &random_profile(&l, 40 + seed));
            let cov = CovarianceMatrix::new(prop.position.mat.clone()).unwrap();
            let w = random_even_w(&table, &fams, &l, 50 + seed, 8, 0.3);

            let lhs = omega_tilde(&w, &fams, &cov, &j, None).unwrap().output;
            let jcj = j.compose(&prop.position).compose(&j);
            let quad = half_quadratic(&table, fams.phi, &jcj).unwrap();
            let cj = prop.position.compose(&j);
            let shifted = field_shift(
                &omega(&w, &fams, &cov, None).unwrap().output,
                &fams,
                &cj,
            )
            .unwrap();
            let rhs = quad.add(&shifted).unwrap();
            let diff = lhs.sub(&rhs).unwrap().max_coeff_norm();
            assert!(diff < 1e-10, "seed {seed}: identity defect {diff:.3e}");
        }

        // semigroup: the sum covariance equals the composition
        let p1 = covariance_from_profile(&l, &random_profile(&l, 60));
        let p2 = covariance_from_profile(&l, &random_profile(&l, 61));
        let c1 = CovarianceMatrix::new(p1.position.mat.clone()).unwrap();
        let c2 = CovarianceMatrix::new(p2.position.mat.clone()).unwrap();
        let csum =
            CovarianceMatrix::new(p1.position.add(&p2.position).mat.clone()).unwrap();
        let w = random_even_w(&table, &fams, &l, 62, 6, 0.2);
        let joint = omega_tilde(&w, &fams, &csum, &j, None).unwrap().output;
        let inner = omega_tilde(&w, &fams, &c2, &j, None).unwrap().output;
        let outer = omega_tilde(&inner, &fams, &c1, &j, None).unwrap().output;
        let diff = joint.sub(&outer).unwrap().max_coeff_norm();
        assert!(diff < 1e-10, "semigroup defect {diff:.3e}");
    }

    #[test]
    fn outputs_stay_even() {
        let l = lat();
        let (table, fams) = rg_table(&l).unwrap();
        let prop = covariance_from_profile(&l, &random_profile(&l, 70));
        let cov = CovarianceMatrix::new(prop.position.mat.clone()).unwrap();
        let j = build_j(&l);
        let w = random_even_w(&table, &fams, &l, 71, 8, 0.4);
        assert!(w.is_even());
        let out = omega_tilde(&w, &fams, &cov, &j, None).unwrap().output;
        assert!(out.is_even());
    }

    #[test]
    fn pairing_integral_vanishes_off_diagonal() {
        let l = lat();
        let (table, fams) = rg_table(&l).unwrap();
        let prop = covariance_from_profile(&l, &random_profile(&l, 80));
        let cov = CovarianceMatrix::new(prop.position.mat.clone()).unwrap();
        let j = build_j(&l);
        let mut rng = rng_from(81, "pairf", 0);

        for p_prime in 0..=3usize {
            // f with fluctuation degree exactly p_prime (plus one external leg)
            let mut f = GrassmannPolynomial::zero(table.clone());
            let mut mono = 0u64;
            let mut picked = 0;
            while picked < p_prime {
                let bit = table.generator_bit(fams.zeta, rng.gen_range(0..l.n_b));
                if mono & bit == 0 {
                    mono |= bit;
                    picked += 1;
                }
            }
            mono |= table.generator_bit(fams.phi, rng.gen_range(0..l.n_b));
            f.add_term(mono, random_c64(&mut rng));
            for p in 0..=3usize {
                let result = wickdot_pairing_integral(&f, p, &fams, &cov, &j).unwrap();
                if p != p_prime {
                    assert!(
                        result.max_coeff_norm() < 1e-14,
                        "p={p} p'={p_prime}: {:.3e}",
                        result.max_coeff_norm()
                    );
                }
            }
        }

        // p = 1, f linear in the fluctuation field: explicit single pairing
        let zeta_pick = 2usize;
        let f = GrassmannPolynomial::generator(table.clone(), fams.zeta, zeta_pick);
        let got = wickdot_pairing_integral(&f, 1, &fams, &cov, &j).unwrap();
        // int :zeta_a: :(phi J zeta): dmu = sum_b (phi J)_b C(b, a) phi-term
        let w2 = l.weight() * l.weight();
        let mut expect = GrassmannPolynomial::zero(table.clone());
        for pidx in 0..l.n_b {
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..l.n_b {
                acc += j.get(pidx, b) * w2 * cov.get(b, zeta_pick);
            }
            if acc != C64::new(0.0, 0.0) {
                expect = expect
                    .add(
                        &GrassmannPolynomial::generator(table.clone(), fams.phi, pidx)
                            .scale(acc),
                    )
                    .unwrap();
            }
        }
        assert!(got.sub(&expect).unwrap().max_coeff_norm() < 1e-12);
    }

    #[test]
    fn green_functions_free_case() {
        let l = lat();
        let (table, fams) = rg_table(&l).unwrap();
        let profile = random_profile(&l, 90);
        let prop = covariance_from_profile(&l, &profile);
        let cov = CovarianceMatrix::new(prop.position.mat.clone()).unwrap();
        let j = build_j(&l);
        let v = GrassmannPolynomial::zero(table.clone());
        let g = green_functions(&v, &fams, &profile, &cov, &j, &l, 2, None).unwrap();
        // two-point normal form reproduces the propagator profile;
        // amputated part vanishes
        for mode in 0..l.n_modes {
            assert!((g.g2_profile[mode] - profile[mode]).norm() < 1e-10);
            assert!(g.g2_amp_profile[mode].norm() < 1e-10);
        }
    }

    #[test]
    fn green_four_point_first_order_is_bare_vertex() {
        let l = lat();
        let (table, fams) = rg_table(&l).unwrap();
        let profile = random_profile(&l, 91);
        let prop = covariance_from_profile(&l, &profile);
        let cov = CovarianceMatrix::new(prop.position.mat.clone()).unwrap();
        let j = build_j(&l);
        let spec = InteractionSpec {
            coupling: 1.0,
            potential: PotentialKind::Gaussian { width: 1.0 },
        };
        let v = build_interaction(&spec, &l, &table, fams.psi).unwrap();

        let g4_amp_at = |eps: f64| -> Vec<C64> {
            let g = green_functions(
                &v.scale(C64::new(eps, 0.0)),
                &fams,
                &profile,
                &cov,
                &j,
                &l,
                2,
                None,
            )
            .unwrap();
            let block = &g.blocks[&4];
            let mk = crate::fourier::total_ft(block).unwrap();
            amputate_momentum_kernel(&mk, &profile)
                .unwrap()
                .iter()
                .map(|z| z / eps)
                .collect()
        };

        let a1 = g4_amp_at(1e-3);
        let a2 = g4_amp_at(5e-4);
        // small-eps extrapolation: residual shrinks linearly in eps
        let r: f64 = a1
            .iter()
            .zip(&a2)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        let extrapolated: Vec<C64> =
            a2.iter().zip(&a1).map(|(f, c)| f * 2.0 - c).collect();

        // oracle: the bare antisymmetrized interaction kernel, amputated at
        // first order by construction
        let kernels = crate::kernel::kernels_from_poly(
            &v.clone(),
            &l,
            fams.phi,
            fams.psi,
        )
        .unwrap();
        let bare = kernels[&(0, 4)].clone();
        let scale_fact: f64 = -24.0; // block normalization at order 2
        let bare_block = bare.scale(C64::new(scale_fact, 0.0));
        let mk_bare = crate::fourier::total_ft(&bare_block).unwrap();

        let scale_ref = mk_bare
            .values()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let mut worst = 0.0f64;
        for (got, want) in extrapolated.iter().zip(mk_bare.values()) {
            worst = worst.max((got - want).norm());
        }
        // the raw difference r carries the genuine second-order response;
        // extrapolation cancels it, so the match must be far below r and
        // small relative to the vertex scale
        assert!(
            worst < 0.1 * r && worst < 1e-3 * scale_ref,
            "first-order vertex mismatch {worst:.3e} (residual {r:.3e}, scale {scale_ref:.3e})"
        );
    }

    #[test]
    fn amputation_composition_identity() {
        // C o J o hat-A = hat-E with E(k) = A(k) C(k)
        let l = lat();
        let fam = ScaleFamily::default();
        let profile = random_profile(&l, 95);
        let prop = covariance_from_profile(&l, &profile);
        let j = build_j(&l);
        let a_prof: Profile = (0..l.n_modes)
            .map(|mode| {
                let (n0, m) = l.mode_coords(mode);
                C64::new(-fam.dispersion_at(&l, &m), l.k0(n0))
            })
            .collect();
        let a_hat = crate::fourier::multiplier_hat(&l, &a_prof);
        let lhs = prop.position.compose(&j).compose(&a_hat);
        let e_prof: Profile = a_prof
            .iter()
            .zip(&profile)
            .map(|(a, c)| a * c)
            .collect();
        let rhs = crate::fourier::multiplier_hat(&l, &e_prof);
        assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn double_amputation_squares_the_multiplier() {
        let l = lat();
        let (table, fams) = rg_table(&l).unwrap();
        let mut rng = rng_from(97, "amp2", 0);
        let a_prof: Profile = (0..l.n_modes).map(|_| random_c64(&mut rng)).collect();
        let a_hat = crate::fourier::multiplier_hat(&l, &a_prof);
        let sq_prof: Profile = a_prof.iter().map(|z| z * z).collect();
        let a2_hat = crate::fourier::multiplier_hat(&l, &sq_prof);
        let w = random_even_w(&table, &fams, &l, 98, 6, 1.0);
        let once = amputate(&amputate(&w, &fams, &a_hat).unwrap(), &fams, &a_hat).unwrap();
        let twice = amputate(&w, &fams, &a2_hat).unwrap();
        assert!(once.sub(&twice).unwrap().max_coeff_norm() < 1e-10);

        // a field-independent polynomial is untouched
        let psi_only = w.without_family(fams.phi);
        let amp = amputate(&psi_only, &fams, &a_hat).unwrap();
        assert!(amp.sub(&psi_only).unwrap().max_coeff_norm() < 1e-14);
    }

    #[test]
    fn counterterm_derivative_richardson() {
        let l = lat();
        let (table, fams) = rg_table(&l).unwrap();
        let fam = ScaleFamily { m_param: 4.0, j0: 2, ..Default::default() };
        let j = build_j(&l);
        let shape = crate::decay::SeriesShape::new(1, 2, 2);
        let ct = Counterterm::zero(&l, 0.5);
        let spec = InteractionSpec {
            coupling: 2e-3,
            potential: PotentialKind::Gaussian { width: 1.0 },
        };
        let v = build_interaction(&spec, &l, &table, fams.psi).unwrap();

        // zero direction: derivative vanishes
        let zero_dir = Counterterm::zero(&l, 0.5);
        let d0 = rg_counterterm_derivative(
            &fam, &ct, &zero_dir, &v, &fams, &j, &l, 0.05, shape, None,
        )
        .unwrap();
        assert!(d0.derivative.max_coeff_norm() < 1e-12);

        // generic direction: the central difference converges at second
        // order, so residuals shrink by about 4 when the step halves
        let mut dir = Counterterm::zero(&l, 0.5);
        let u = fam.cutoff_profile(&l);
        for sp in 0..l.n_sites_sp {
            if (0..l.spec.l0).any(|n0| u[l.mode_of(n0, &[sp])] > 0.0) {
                dir.delta_e[sp] = 0.02 * (sp as f64 + 1.0);
            }
        }
        let d = rg_counterterm_derivative(
            &fam, &ct, &dir, &v, &fams, &j, &l, 0.1, shape, None,
        )
        .unwrap();
        let r_coarse = d.coarse.sub(&d.derivative).unwrap().max_coeff_norm();
        let r_fine = d.fine.sub(&d.derivative).unwrap().max_coeff_norm();
        let ratio = r_coarse / r_fine.max(1e-300);
        assert!(
            (3.0..=5.5).contains(&ratio),
            "step-halving ratio {ratio} (coarse {r_coarse:.3e}, fine {r_fine:.3e})"
        );
    }
}
