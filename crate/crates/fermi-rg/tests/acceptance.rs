//! Acceptance gate: one test per criterion, each printing a pass/fail line.
//! Tolerances are pinned here and in the suite implementations; run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use std::time::Instant;

use fermi_rg::cmatrix::{CMatrix, CovarianceMatrix, C64};
use fermi_rg::grassmann::{gaussian_integral, GeneratorTable, GrassmannPolynomial};
use fermi_rg::rng::{random_c64, rng_from};
use fermi_rg::suites::{run_suite, SuiteConfig};

fn announce(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion:2} {name:<28} {} {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

fn default_cfg() -> SuiteConfig {
    SuiteConfig::from_json("{}").unwrap()
}

#[test]
fn criterion_01_gaussian_identity_suite() {
    let start = Instant::now();
    let rep = run_suite(&default_cfg(), "appendix-C").unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let worst = rep
        .records
        .iter()
        .map(|r| r.lhs)
        .fold(0.0f64, f64::max);
    let pass = rep.pass && worst <= 1e-10 && elapsed < 10.0;
    announce(
        1,
        "gaussian-identities",
        pass,
        &format!("max error {worst:.2e}, {elapsed:.2}s, {} records", rep.records.len()),
    );
}

#[test]
fn criterion_02_moment_oracle() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for dim in [6usize, 8] {
        for inst in 0..5u64 {
            let mut rng = rng_from(2026, "acceptance-wick", inst + dim as u64 * 100);
            let table = GeneratorTable::new(&[("psi", dim)]).unwrap();
            let fam = table.family("psi").unwrap();
            // random invertible antisymmetric covariance
            let cov = loop {
                let mut m = CMatrix::zero(dim);
                for i in 0..dim {
                    for j in i + 1..dim {
                        let z = random_c64(&mut rng);
                        m[(i, j)] = z;
                        m[(j, i)] = -z;
                    }
                }
                if m.inverse().is_ok() {
                    break CovarianceMatrix::new(m).unwrap();
                }
            };
            // independent oracle: ratio of top coefficients against the
            // explicit quadratic Berezin weight
            let cinv = cov.matrix().inverse().unwrap();
            let mut quad = GrassmannPolynomial::zero(table.clone());
            for i in 0..dim {
                for j in i + 1..dim {
                    let gi = GrassmannPolynomial::generator(table.clone(), fam, i);
                    let gj = GrassmannPolynomial::generator(table.clone(), fam, j);
                    quad = quad.add(&gi.mul(&gj).unwrap().scale(-cinv[(i, j)])).unwrap();
                }
            }
            let weight = quad.exp().unwrap();
            let top = table.family_mask(fam);
            let denom = weight.coeff(top);
            for mono in 0u64..(1 << dim) {
                if mono.count_ones() % 2 == 1 {
                    continue;
                }
                let mut f = GrassmannPolynomial::zero(table.clone());
                f.add_term(mono, C64::new(1.0, 0.0));
                let ours = gaussian_integral(&f, fam, &cov).unwrap().coeff(0);
                let oracle = f.mul(&weight).unwrap().coeff(top) / denom;
                worst = worst.max((ours - oracle).norm());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-10 && elapsed < 30.0;
    announce(2, "moment-oracle", pass, &format!("max error {worst:.2e}, {elapsed:.2}s"));
}

#[test]
fn criterion_03_source_shift_and_semigroup() {
    let start = Instant::now();
    let cfg = default_cfg();
    let rep1 = run_suite(&cfg, "lemma-VII.3").unwrap();
    let rep2 = run_suite(&cfg, "semigroup").unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let worst = rep1
        .records
        .iter()
        .chain(&rep2.records)
        .map(|r| r.lhs)
        .fold(0.0f64, f64::max);
    let pass = rep1.pass && rep2.pass && worst <= 1e-10 && elapsed < 60.0;
    announce(
        3,
        "source-shift+semigroup",
        pass,
        &format!("max error {worst:.2e}, {elapsed:.2}s"),
    );
}

#[test]
fn criterion_04_pairing_selection_and_bound() {
    let cfg = default_cfg();
    let rep = run_suite(&cfg, "lemma-VII.5").unwrap();
    let vanishing_worst = rep
        .records
        .iter()
        .filter(|r| r.lemma == "pairing-vanishing")
        .map(|r| r.lhs)
        .fold(0.0f64, f64::max);
    let bound_ok = rep
        .records
        .iter()
        .filter(|r| r.lemma == "pairing-bound")
        .all(|r| r.pass);
    let pass = rep.pass && vanishing_worst <= 1e-14 && bound_ok;
    announce(
        4,
        "pairing-integrals",
        pass,
        &format!("max off-diagonal {vanishing_worst:.2e}, bound rows pass: {bound_ok}"),
    );
}

#[test]
fn criterion_05_scale_partition() {
    let cfg = default_cfg();
    let rep = run_suite(&cfg, "partition-of-unity").unwrap();
    let partition = rep
        .records
        .iter()
        .find(|r| r.lemma == "shell-partition")
        .expect("partition record");
    let alias = rep
        .records
        .iter()
        .find(|r| r.lemma == "neighbourhood-alias")
        .expect("alias record");
    let pass = rep.pass && partition.lhs <= 1e-12 && alias.lhs == 0.0;
    announce(
        5,
        "scale-partition",
        pass,
        &format!("partition error {:.2e}, alias defect {:.1e}", partition.lhs, alias.lhs),
    );
}

#[test]
fn criterion_06_transforms_and_time_marginal() {
    let cfg = default_cfg();
    let rep1 = run_suite(&cfg, "lemma-IX.5").unwrap();
    let worst = rep1.records.iter().map(|r| r.lhs).fold(0.0f64, f64::max);
    let rep2 = run_suite(&cfg, "lemma-IX.6").unwrap();
    let pass = rep1.pass && worst <= 1e-10 && rep2.pass;
    announce(
        6,
        "transform-identities",
        pass,
        &format!("max identity error {worst:.2e}, marginal-bound rows {}", rep2.records.len()),
    );
}

#[test]
fn criterion_07_norm_inequalities() {
    let cfg = default_cfg();
    let rep_x6 = run_suite(&cfg, "lemma-X.6").unwrap();
    let rep_x9 = run_suite(&cfg, "cor-X.9").unwrap();
    let rep_x10 = run_suite(&cfg, "lemma-X.10").unwrap();
    let pairs: u64 = [&rep_x6, &rep_x9, &rep_x10]
        .iter()
        .map(|r| {
            r.metrics
                .get("pairs")
                .and_then(|v| v.as_u64())
                .unwrap_or(0)
        })
        .sum();
    // the coupling-constant weight scheme satisfies the hypotheses, and the
    // submultiplicativity at the pair level forces the quadratic weight >= 1
    let params = cfg.norm.params();
    let rho_rep =
        fermi_rg::norms::rho_validate(&params, fermi_rg::norms::RhoProfile::CouplingLambda, 6);
    let rho02 = params.rho.get(0, 2);
    let pass =
        rep_x6.pass && rep_x9.pass && rep_x10.pass && pairs >= 25 && rho_rep.pass && rho02 >= 1.0;
    announce(
        7,
        "norm-inequalities",
        pass,
        &format!("{pairs} kernel pairs, rho(0,2) = {rho02:.3}"),
    );
}

#[test]
fn criterion_08_symmetries() {
    let cfg = default_cfg();
    let rep = run_suite(&cfg, "symmetry-preservation").unwrap();
    let worst = rep.records.iter().map(|r| r.lhs).fold(0.0f64, f64::max);
    let rep_b6 = run_suite(&cfg, "lemma-B.6").unwrap();
    let worst_b6 = rep_b6.records.iter().map(|r| r.lhs).fold(0.0f64, f64::max);
    let pass = rep.pass && worst <= 1e-10 && rep_b6.pass && worst_b6 <= 1e-10;
    announce(
        8,
        "symmetry-preservation",
        pass,
        &format!("max violation {worst:.2e}, two-point identity {worst_b6:.2e}"),
    );
}

#[test]
fn criterion_09_response_scaling() {
    let cfg = default_cfg();
    let rep = run_suite(&cfg, "theorem-VIII.6-sweep").unwrap();
    let ratio = rep
        .metrics
        .get("response-ratio")
        .and_then(|v| v.as_str())
        .and_then(|s| s.parse::<f64>().ok())
        .unwrap_or(f64::NAN);
    let lin = rep
        .metrics
        .get("direction-linearity-ratio")
        .and_then(|v| v.as_str())
        .and_then(|s| s.parse::<f64>().ok())
        .unwrap_or(f64::NAN);
    let pass = rep.pass && (5.0..=20.0).contains(&ratio) && (1.6..=2.4).contains(&lin);
    announce(
        9,
        "response-scaling",
        pass,
        &format!("coupling ratio {ratio:.2} (linear = 10), direction ratio {lin:.3} (linear = 2)"),
    );
}

#[test]
fn criterion_10_deterministic_reports() {
    let bin = env!("CARGO_BIN_EXE_verify");
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("config.json");
    std::fs::write(
        &cfg_path,
        r#"{"suites": ["partition-of-unity", "lemma-VII.3", "appendix-C", "lemma-X.6"], "seed": 7}"#,
    )
    .unwrap();
    let run = |out: &str| {
        let status = std::process::Command::new(bin)
            .args([
                "--config",
                cfg_path.to_str().unwrap(),
                "--out",
                tmp.path().join(out).to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success(), "verify run failed");
        (
            std::fs::read(tmp.path().join(out).join("summary.json")).unwrap(),
            std::fs::read(tmp.path().join(out).join("checks.csv")).unwrap(),
            std::fs::read(tmp.path().join(out).join("records.json")).unwrap(),
        )
    };
    let a = run("a");
    let b = run("b");
    let pass = a == b;
    announce(
        10,
        "deterministic-reports",
        pass,
        &format!(
            "summary {} bytes, csv {} bytes, byte-identical: {pass}",
            a.0.len(),
            a.1.len()
        ),
    );
}
