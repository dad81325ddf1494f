//! Componentwise inequality suites over the decay semiring.

use std::sync::Arc;

use crate::cmatrix::{CovarianceMatrix, C64};
use crate::decay::DecaySeries;
use crate::error::Result;
use crate::kernel::{ArgSpace, BMatrix, Kernel, Profile};
use crate::lattice::{Lattice, LatticeSpec};
use crate::model::build_j;
use crate::norms::{
    contraction_bound_check, corollary_contraction_check, external_improving_check,
    norm_tilde_profile, product_inequality_check, rho_validate, series_ratio, BigNContext,
    BigNVariant, InequalityReport, RhoProfile,
};
use crate::rng::{random_c64, rng_from};
use crate::suites::report::{CheckRecord, SuiteReport};
use crate::suites::SuiteConfig;

fn small_lattice(cfg: &SuiteConfig) -> Result<Arc<Lattice>> {
    Lattice::new(LatticeSpec { l0: 2, lsp: 2, spin: false, ..cfg.lattice.clone() })
}

fn random_kernel(lat: &Arc<Lattice>, m: usize, n: usize, seed: u64, label: &str) -> Result<Kernel> {
    let mut rng = rng_from(seed, label, 0);
    Kernel::from_fn(lat.clone(), m, n, ArgSpace::Position, |_| random_c64(&mut rng))
}

fn push_series_rows(
    report: &mut SuiteReport,
    rep: &InequalityReport,
    lemma: &str,
    seed: u64,
    label: &str,
    slack: f64,
    assert_rows: bool,
) {
    for row in rep.rows() {
        let rec = CheckRecord::scalar(
            lemma,
            seed,
            format!("{label}-delta{}", row.delta),
            row.lhs,
            row.rhs + slack,
        );
        if assert_rows {
            report.push(rec);
        } else {
            report.push_info(rec);
        }
    }
}

/// First-scale covariance used by several inequality suites.
fn first_scale(cfg: &SuiteConfig, lat: &Arc<Lattice>) -> Result<crate::fourier::Propagator> {
    let ct = crate::scales::Counterterm::zero(lat, cfg.norm.mu);
    crate::scales::first_scale_covariance(&cfg.scale, &ct, lat)
}

/// Field-shift contraction estimate for the aggregate norm.
pub fn run_field_shift_bound(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("prop-VII.6");
    let slack = 1e-9;
    let lat = small_lattice(cfg)?;
    let (table, fams) = crate::rg::rg_table(&lat)?;
    super::check_budget(cfg, table.total())?;
    let j = build_j(&lat);
    let prop = first_scale(cfg, &lat)?;
    let mut params = cfg.norm.params();
    let shape = cfg.norm.shape(lat.spec.d);

    // measured external-improving constant for the covariance
    let ext = external_improving_check(
        &prop.position,
        &j,
        &params.rho,
        &[(0, 1), (0, 2), (1, 1), (1, 2)],
        shape,
        2,
        cfg.seed,
        slack,
    )?;
    let gamma_b = ext.candidate.max(ext.observed);
    let b = params.b;
    let gamma = gamma_b / b;
    params.alpha = params.alpha.max(3.0 * gamma + 0.5);
    report.metric_f64("gamma-b", gamma_b);
    report.metric_f64("alpha", params.alpha);

    let x = DecaySeries::constant(shape, 0.0);
    let c_weight = DecaySeries::all_ones(shape);
    let cj = prop.position.compose(&j);
    for inst in 0..4u64 {
        let mut rng = rng_from(cfg.seed, "vii6-w", inst);
        let w = super::identity::random_even_poly_two(
            &table, fams.phi, fams.psi, &mut rng, 8, 0.5,
        );
        let shifted = crate::rg::field_shift(&w, &fams, &cj)?;
        let diff = shifted.sub(&w)?;
        let ctx = BigNContext {
            lat: &lat,
            fam_ext: fams.phi,
            fam_int: fams.psi,
            params: &params,
            x: &x,
            shape,
            c_weight: Some(c_weight.clone()),
        };
        let lhs = crate::norms::big_n(&diff, BigNVariant::N, &ctx)?;
        let mut wide = params.clone();
        wide.alpha *= 2.0;
        let ctx2 = BigNContext { params: &wide, ..ctx };
        let rhs = crate::norms::big_n(&w, BigNVariant::N, &ctx2)?
            .scale(gamma / params.alpha);
        let rep = InequalityReport::build(lhs, rhs, slack)?;
        push_series_rows(&mut report, &rep, "field-shift-bound", inst, "n", slack, true);
    }

    // proof identification: N at (c, b, alpha) = (1/(4b)) N0 at beta = alpha b
    // when c = (b/4) e0(X)
    let mut rng = rng_from(cfg.seed, "vii6-id", 0);
    let w = super::identity::random_even_poly_two(&table, fams.phi, fams.psi, &mut rng, 8, 0.5);
    let e0 = DecaySeries::geometric(&DecaySeries::all_ones(shape), &x)?;
    let mut idp = params.clone();
    idp.beta = idp.alpha * idp.b;
    let ctx_n = BigNContext {
        lat: &lat,
        fam_ext: fams.phi,
        fam_int: fams.psi,
        params: &idp,
        x: &x,
        shape,
        c_weight: Some(e0.scale(idp.b / 4.0)),
    };
    let n_val = crate::norms::big_n(&w, BigNVariant::N, &ctx_n)?;
    let n0_val = crate::norms::big_n(&w, BigNVariant::N0, &ctx_n)?
        .scale(1.0 / (4.0 * idp.b));
    let err = n_val.max_abs_diff(&n0_val)?;
    report.push(CheckRecord::error("norm-identification", 0, "quarter-b", err, 1e-10));
    Ok(report)
}

/// External-improving constants from norm ratios.
pub fn run_external_improving(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("lemma-VII.8");
    let slack = 1e-9;
    let lat = small_lattice(cfg)?;
    let j = build_j(&lat);
    let params = cfg.norm.params();
    let shape = cfg.norm.shape(lat.spec.d);

    // zero covariance: zero constant suffices
    let zero = BMatrix::zero(lat.clone());
    let rep0 = external_improving_check(
        &zero, &j, &params.rho, &[(0, 1), (1, 1)], shape, 1, cfg.seed, slack,
    )?;
    report.push(CheckRecord::scalar("external-improving", 0, "zero-covariance", rep0.observed, slack));

    let prop = first_scale(cfg, &lat)?;
    let rep = external_improving_check(
        &prop.position,
        &j,
        &params.rho,
        &[(0, 1), (0, 2), (1, 1), (1, 2), (2, 1)],
        shape,
        3,
        cfg.seed,
        slack,
    )?;
    report.metric_f64("observed", rep.observed);
    report.metric_f64("candidate", rep.candidate);
    report.push(CheckRecord::scalar(
        "external-improving",
        cfg.seed,
        "first-scale",
        rep.observed,
        rep.candidate + slack,
    ));

    // a random antisymmetric two-point kernel
    let mut rng = rng_from(cfg.seed, "vii8-rand", 0);
    let mut c = BMatrix::zero(lat.clone());
    for i in 0..lat.n_b {
        for k in i + 1..lat.n_b {
            let z = random_c64(&mut rng);
            c.set(i, k, z);
            c.set(k, i, -z);
        }
    }
    let rep2 = external_improving_check(
        &c, &j, &params.rho, &[(0, 1), (0, 2), (1, 1), (1, 2)], shape, 3, cfg.seed, slack,
    )?;
    report.push(CheckRecord::scalar(
        "external-improving",
        cfg.seed,
        "random-covariance",
        rep2.observed,
        rep2.candidate + slack,
    ));
    Ok(report)
}

/// Convolution bound for kernels with vanishing time marginal.
pub fn run_time_marginal_bound(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("lemma-IX.6");
    let slack = 1e-9;
    let lat = Lattice::new(cfg.lattice.clone())?;
    let shape = cfg.norm.shape(lat.spec.d);
    for inst in 0..10u64 {
        let mut rng = rng_from(cfg.seed, "ix6", inst);
        // translation-invariant u with vanishing time marginal: build from a
        // difference function with zero time mean per spatial slice and
        // spin/particle-hole block
        let mut diff =
            vec![vec![C64::new(0.0, 0.0); lat.n_sites]; (lat.n_spin * 2) * (lat.n_spin * 2)];
        for block in diff.iter_mut() {
            for v in block.iter_mut() {
                *v = random_c64(&mut rng);
            }
            // subtract the time mean per spatial position
            for sp in 0..lat.n_sites_sp {
                let mut mean = C64::new(0.0, 0.0);
                for t in 0..lat.spec.l0 {
                    mean += block[t * lat.n_sites_sp + sp];
                }
                mean /= lat.spec.l0 as f64;
                for t in 0..lat.spec.l0 {
                    block[t * lat.n_sites_sp + sp] -= mean;
                }
            }
        }
        let u = BMatrix::from_fn(lat.clone(), |i, k| {
            let fi = lat.coords(i);
            let fk = lat.coords(k);
            let bi = fi.sigma * 2 + fi.a;
            let bk = fk.sigma * 2 + fk.a;
            // antiperiodic difference in time, periodic in space
            let l0 = lat.spec.l0 as isize;
            let raw = fi.t as isize - fk.t as isize;
            let wraps = raw.div_euclid(l0);
            let dt = raw.rem_euclid(l0) as usize;
            let sign = if wraps.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let dx: Vec<usize> = fi
                .x
                .iter()
                .zip(&fk.x)
                .map(|(&a, &b)| {
                    ((a as isize - b as isize).rem_euclid(lat.spec.lsp as isize)) as usize
                })
                .collect();
            let site = crate::model::site_index(&lat, dt, &dx);
            diff[bi * (lat.n_spin * 2) + bk][site] * sign
        });
        let chi: Profile = (0..lat.n_modes).map(|_| random_c64(&mut rng)).collect();
        let rep = crate::fourier::k0_vanishing_bound_check(&u, &chi, shape, slack)?;
        for ((delta, lhs), (_, rhs)) in rep.lhs.iter().zip(rep.rhs.iter()) {
            if delta.time != 0 {
                continue; // bounded only at vanishing time order
            }
            report.push(CheckRecord::scalar(
                "time-marginal-bound",
                inst,
                format!("delta{delta}"),
                lhs.finite().unwrap_or(f64::INFINITY),
                rhs.finite().unwrap_or(f64::INFINITY) + slack,
            ));
        }
    }

    // the guard rejects kernels with a nonvanishing marginal
    let mut rng = rng_from(cfg.seed, "ix6-bad", 0);
    let bad = BMatrix::from_fn(lat.clone(), |_, _| random_c64(&mut rng) + C64::new(2.0, 0.0));
    let chi: Profile = vec![C64::new(1.0, 0.0); lat.n_modes];
    let rejected = crate::fourier::k0_vanishing_bound_check(&bad, &chi, shape, slack).is_err();
    report.push(CheckRecord::scalar(
        "time-marginal-bound",
        0,
        "precondition-guard",
        if rejected { 0.0 } else { 1.0 },
        0.5,
    ));
    Ok(report)
}

/// Splice bound suite (9 of the 25 seeded pairs).
pub fn run_splice_bound(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("lemma-X.6");
    let slack = 1e-9;
    let lat = small_lattice(cfg)?;
    let shape = cfg.norm.shape(lat.spec.d);
    let shapes: [(usize, usize, usize, usize); 6] = [
        (1, 2, 0, 2),
        (0, 2, 1, 1),
        (1, 1, 0, 2),
        (0, 1, 0, 2),
        (1, 2, 1, 1),
        (0, 2, 0, 2),
    ];
    let mut pair = 0u64;
    for &(m, n, mp, np) in &shapes {
        let f = random_kernel(&lat, m, n, crate::rng::child_seed(cfg.seed, "x6f", pair), "x6f")?;
        let g = random_kernel(&lat, mp, np, crate::rng::child_seed(cfg.seed, "x6g", pair), "x6g")?;
        let rep = product_inequality_check(&f, &g, n.min(2), 1, shape, slack)?;
        push_series_rows(&mut report, &rep, "splice-bound", pair, &format!("m{m}n{n}m{mp}n{np}"), slack, true);
        pair += 1;
    }
    // the paired-single branch carries the factor 4; the factor-1 variant is
    // recorded but not asserted
    for k in 0..3u64 {
        let f = random_kernel(&lat, 1, 1, crate::rng::child_seed(cfg.seed, "x6s", k), "x6s")?
            .ant_ext();
        let g = random_kernel(&lat, 1, 1, crate::rng::child_seed(cfg.seed, "x6t", k), "x6t")?
            .ant_ext();
        let rep = product_inequality_check(&f, &g, 1, 1, shape, slack)?;
        push_series_rows(&mut report, &rep, "splice-bound-factor4", pair, &format!("single-{k}"), slack, true);
        // factor-1 comparison, informational
        let lhs = crate::norms::norm_tilde(&f.splice(&g, 1, 1)?, shape)?;
        let rhs = crate::norms::norm_tilde(&f, shape)?.mul(&crate::norms::norm_tilde(&g, shape)?)?;
        let rep1 = InequalityReport::build(lhs, rhs, slack)?;
        report.push_info(CheckRecord::scalar(
            "splice-bound-factor1",
            pair,
            format!("single-{k}-pass={}", rep1.pass),
            rep1.max_violation.min(1e30),
            f64::INFINITY,
        ));
        pair += 1;
    }
    report.metric("pairs", pair);
    Ok(report)
}

/// Contraction corollary (8 of the 25 seeded pairs).
pub fn run_contraction_corollary(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("cor-X.9");
    let slack = 1e-9;
    let lat = small_lattice(cfg)?;
    let shape = cfg.norm.shape(lat.spec.d);
    let prop = first_scale(cfg, &lat)?;
    let mut rng = rng_from(cfg.seed, "x9-cov", 0);
    let mut random_c = BMatrix::zero(lat.clone());
    for i in 0..lat.n_b {
        for k in i + 1..lat.n_b {
            let z = random_c64(&mut rng);
            random_c.set(i, k, z);
            random_c.set(k, i, -z);
        }
    }
    let shapes: [(usize, usize, usize, usize); 4] =
        [(0, 1, 0, 1), (1, 1, 0, 2), (0, 2, 0, 2), (1, 1, 1, 1)];
    let mut pair = 0u64;
    for (which, cmat) in [&prop.position, &random_c].into_iter().enumerate() {
        for &(m, n, mp, np) in &shapes {
            let f = random_kernel(&lat, m, n, crate::rng::child_seed(cfg.seed, "x9f", pair), "x9f")?
                .ant_ext();
            let g = random_kernel(&lat, mp, np, crate::rng::child_seed(cfg.seed, "x9g", pair), "x9g")?
                .ant_ext();
            let rep = corollary_contraction_check(&f, &g, cmat, shape, slack)?;
            push_series_rows(
                &mut report,
                &rep,
                "contraction-corollary",
                pair,
                &format!("c{which}-m{m}n{n}m{mp}n{np}"),
                slack,
                true,
            );
            pair += 1;
        }
    }
    report.metric("pairs", pair);
    Ok(report)
}

/// Weighted contraction bound and the moment-growth estimate
/// (8 of the 25 seeded pairs).
pub fn run_contraction_bound(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("lemma-X.10");
    let slack = 1e-9;
    let lat = small_lattice(cfg)?;
    let shape = cfg.norm.shape(lat.spec.d);
    let params = cfg.norm.params();

    // the rho hypotheses are prerequisites
    let rv = rho_validate(&params, RhoProfile::FirstTheorem, 6);
    report.push(CheckRecord::scalar(
        "rho-hypotheses",
        cfg.seed,
        "first-profile",
        if rv.pass { 0.0 } else { 1.0 },
        0.5,
    ));

    let prop = first_scale(cfg, &lat)?;
    let cov = CovarianceMatrix::new(prop.position.mat.clone())?;
    let shapes: [(usize, usize, usize, usize); 4] =
        [(0, 1, 0, 1), (0, 2, 0, 1), (1, 1, 0, 2), (0, 2, 0, 2)];
    let mut pair = 0u64;
    for round in 0..2u64 {
        for &(m, n, mp, np) in &shapes {
            let f = random_kernel(
                &lat,
                m,
                n,
                crate::rng::child_seed(cfg.seed, "x10f", pair + 100 * round),
                "x10f",
            )?
            .ant_ext();
            let g = random_kernel(
                &lat,
                mp,
                np,
                crate::rng::child_seed(cfg.seed, "x10g", pair + 100 * round),
                "x10g",
            )?
            .ant_ext();
            let rep = contraction_bound_check(&f, &g, &prop.position, &params.rho, shape, slack)?;
            push_series_rows(
                &mut report,
                &rep,
                "contraction-bound",
                pair,
                &format!("r{round}-m{m}n{n}m{mp}n{np}"),
                slack,
                true,
            );
            pair += 1;
        }
    }
    report.metric("pairs", pair);

    // moment-growth estimate: exhaustive pairs, then sampled tuples; the
    // estimate never decreases when the search widens
    let mut rng1 = rng_from(cfg.seed, "x10-s", 0);
    let s2 = crate::grassmann::integral_bound_estimate(&cov, 2, 0, &mut rng1);
    let mut rng2 = rng_from(cfg.seed, "x10-s", 1);
    let s6 = crate::grassmann::integral_bound_estimate(&cov, 6, 48, &mut rng2);
    report.metric_f64("moment-estimate-m2", s2);
    report.metric_f64("moment-estimate-m6", s6);
    report.push(CheckRecord::scalar("moment-estimate", cfg.seed, "monotone", s2, s6 + 1e-12));
    Ok(report)
}

/// Momentum-side external improving: the provable one-leg block inequality,
/// with the statement-level constants reported.
pub fn run_momentum_improving(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("lemma-X.11");
    let slack = 1e-9;
    let lat = small_lattice(cfg)?;
    let shape = cfg.norm.shape(lat.spec.d);
    let params = cfg.norm.params();
    let j = build_j(&lat);
    let prop = first_scale(cfg, &lat)?;
    let jc = j.compose(&prop.position);
    let c_tilde = norm_tilde_profile(&lat, &prop.profile, shape)?;

    // block inequality: appending one transformed leg is bounded by the
    // profile norm of the covariance
    let mut inst = 0u64;
    for &(m, n) in &[(0usize, 1usize), (0, 2), (1, 1), (1, 2)] {
        let f = random_kernel(&lat, m, n, crate::rng::child_seed(cfg.seed, "x11", inst), "x11")?
            .ant_ext();
        let g = crate::norms::insert_jc_leg(&f, &jc, 1)?.ant_ext();
        let lhs = crate::norms::norm_tilde(&g, shape)?;
        let rhs = crate::norms::norm_tilde(&f, shape)?.mul(&c_tilde)?;
        let rep = InequalityReport::build(lhs, rhs, slack)?;
        push_series_rows(&mut report, &rep, "one-leg-block", inst, &format!("m{m}n{n}"), slack, true);
        inst += 1;
    }

    // statement-level constant, reported: the field-shift response in the
    // momentum aggregate norm against Gamma times the doubled-weight norm
    let x = DecaySeries::constant(shape, 0.0);
    let e0 = DecaySeries::geometric(&DecaySeries::all_ones(shape), &x)?;
    let mut gamma: f64 = 0.0;
    for &(m, n) in &[(0usize, 1usize), (0, 2), (1, 1), (1, 2)] {
        let ratio = params.rho.get(m + 1, n - 1) / params.rho.get(m, n);
        gamma = gamma.max(ratio * series_ratio(&c_tilde, &e0));
    }
    report.metric_f64("gamma-hypothesis", gamma);
    let (table, fams) = crate::rg::rg_table(&lat)?;
    super::check_budget(cfg, table.total())?;
    let mut rng = rng_from(cfg.seed, "x11-w", 0);
    let w = super::identity::random_even_poly_two(&table, fams.phi, fams.psi, &mut rng, 8, 0.5);
    let cj = prop.position.compose(&j);
    let diff = crate::rg::field_shift(&w, &fams, &cj)?.sub(&w)?;
    let ctx = BigNContext {
        lat: &lat,
        fam_ext: fams.phi,
        fam_int: fams.psi,
        params: &params,
        x: &x,
        shape,
        c_weight: None,
    };
    let lhs = crate::norms::big_n(&diff, BigNVariant::N0Tilde, &ctx)?;
    let mut wide = params.clone();
    wide.beta *= 2.0;
    let ctx2 = BigNContext { params: &wide, ..ctx };
    let rhs = crate::norms::big_n(&w, BigNVariant::N0Tilde, &ctx2)?.scale(gamma);
    let observed_const = series_ratio(&lhs, &rhs);
    report.metric_f64("statement-const", observed_const);
    report.push_info(CheckRecord::scalar(
        "statement-const",
        cfg.seed,
        "reported",
        observed_const.min(1e30),
        f64::INFINITY,
    ));
    Ok(report)
}
