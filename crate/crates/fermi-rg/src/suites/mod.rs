//! Verification suite registry, configuration and reporting.
//!
//! Every suite derives its randomness from the config seed through labeled
//! child seeds, so reruns with the same `(config, seed)` produce
//! byte-identical reports.

pub mod config;
mod experiment;
mod identity;
mod inequality;
pub mod report;

pub use config::SuiteConfig;
pub use report::{emit_report, CheckRecord, SuiteReport};

use crate::error::{Error, Result};

/// Registry order: identities, inequalities, experiments.
pub const SUITE_IDS: &[&str] = &[
    "appendix-C",
    "lemma-VII.3",
    "semigroup",
    "lemma-VII.5",
    "lemma-IX.5",
    "lemma-B.6",
    "symmetry-preservation",
    "prop-VII.6",
    "lemma-VII.8",
    "lemma-IX.6",
    "lemma-X.6",
    "cor-X.9",
    "lemma-X.10",
    "lemma-X.11",
    "theorem-VIII.6-sweep",
    "theorem-X.12-sweep",
    "remark-VIII.8-power-counting",
    "partition-of-unity",
];

/// One-line description per suite id, for `--list`.
pub fn describe(id: &str) -> &'static str {
    match id {
        "appendix-C" => "Gaussian translation and change-of-covariance identities on random instances",
        "lemma-VII.3" => "source-shift decomposition of the extended map against the direct route",
        "semigroup" => "composition law of the extended map under covariance addition",
        "lemma-VII.5" => "ordered pairing integrals: degree selection rule and norm bound",
        "lemma-IX.5" => "swap/covariance/multiplier transform identities and roundtrips",
        "lemma-B.6" => "two-point transposition identity for symmetric kernels",
        "symmetry-preservation" => "symmetries of interaction and covariance, preserved by the maps",
        "prop-VII.6" => "field-shift response bound in the aggregate position norm",
        "lemma-VII.8" => "external-improving constants from norm ratios",
        "lemma-IX.6" => "convolution bound for kernels with vanishing time marginal",
        "lemma-X.6" => "splice bound for momentum decay norms (factor 4 on paired singles)",
        "cor-X.9" => "contraction of antisymmetrized tensor pairs against the covariance norm",
        "lemma-X.10" => "weighted contraction bound and moment-growth estimate",
        "lemma-X.11" => "one-leg momentum improving block and statement constants",
        "theorem-VIII.6-sweep" => "coupling and counterterm response scaling in the position norm",
        "theorem-X.12-sweep" => "coupling response scaling in the amputated momentum norm",
        "remark-VIII.8-power-counting" => "infrared growth of shell-covariance norms across scales",
        "partition-of-unity" => "telescoping shell partition and scale-function grid identities",
        _ => "unknown suite",
    }
}

pub(crate) fn check_budget(cfg: &SuiteConfig, needed: usize) -> Result<()> {
    if needed > cfg.budgets.max_generators {
        return Err(Error::BudgetExceeded { needed, cap: cfg.budgets.max_generators });
    }
    Ok(())
}

/// Run one suite by id.
pub fn run_suite(cfg: &SuiteConfig, id: &str) -> Result<SuiteReport> {
    match id {
        "appendix-C" => identity::run_appendix_c(cfg),
        "lemma-VII.3" => identity::run_source_shift_identity(cfg),
        "semigroup" => identity::run_semigroup(cfg),
        "lemma-VII.5" => identity::run_pairing_selection(cfg),
        "lemma-IX.5" => identity::run_transform_identities(cfg),
        "lemma-B.6" => identity::run_two_point_identity(cfg),
        "symmetry-preservation" => identity::run_symmetry_preservation(cfg),
        "prop-VII.6" => inequality::run_field_shift_bound(cfg),
        "lemma-VII.8" => inequality::run_external_improving(cfg),
        "lemma-IX.6" => inequality::run_time_marginal_bound(cfg),
        "lemma-X.6" => inequality::run_splice_bound(cfg),
        "cor-X.9" => inequality::run_contraction_corollary(cfg),
        "lemma-X.10" => inequality::run_contraction_bound(cfg),
        "lemma-X.11" => inequality::run_momentum_improving(cfg),
        "theorem-VIII.6-sweep" => experiment::run_first_theorem_sweep(cfg),
        "theorem-X.12-sweep" => experiment::run_amputated_theorem_sweep(cfg),
        "remark-VIII.8-power-counting" => experiment::run_power_counting(cfg),
        "partition-of-unity" => experiment::run_partition_of_unity(cfg),
        other => Err(Error::Config(format!("unknown suite id `{other}`"))),
    }
}

/// Run the configured suites, in order, optionally on a thread pool.
pub fn run_all(cfg: &SuiteConfig, workers: usize) -> Vec<SuiteReport> {
    let ids = cfg.resolved_suites();
    let run_one = |id: &String| -> SuiteReport {
        let start = std::time::Instant::now();
        let rep = match run_suite(cfg, id) {
            Ok(r) => r,
            Err(e) => {
                let mut r = SuiteReport::new(id);
                r.fail(&e.to_string());
                r
            }
        };
        eprintln!(
            "suite {:32} {}  ({:.2}s)",
            id,
            if rep.pass { "pass" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        rep
    };
    if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        pool.install(|| {
            use rayon::prelude::*;
            ids.par_iter().map(run_one).collect()
        })
    } else {
        ids.iter().map(run_one).collect()
    }
}
