//! Configuration for the verification runner.

use serde::{Deserialize, Serialize};

use crate::decay::{NormParams, Rho, SeriesShape};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::model::InteractionSpec;
use crate::scales::ScaleFamily;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, rename_all = "kebab-case")]
pub struct NormConfig {
    pub r0: usize,
    pub r: usize,
    pub beta: f64,
    pub alpha: f64,
    pub b: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub lambda: f64,
    pub upsilon: f64,
    pub mu: f64,
    pub gamma_bound: f64,
    pub rho: RhoChoice,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum RhoChoice {
    Ones,
    LambdaScheme,
    LambdaExternal,
}

impl Default for NormConfig {
    fn default() -> Self {
        let p = NormParams::default();
        NormConfig {
            r0: 2,
            r: 2,
            beta: p.beta,
            alpha: p.alpha,
            b: p.b,
            gamma: p.gamma,
            gamma_prime: p.gamma_prime,
            epsilon: p.epsilon,
            epsilon_prime: p.epsilon_prime,
            lambda: p.lambda,
            upsilon: p.upsilon,
            mu: p.mu,
            gamma_bound: p.gamma_bound,
            rho: RhoChoice::LambdaScheme,
        }
    }
}

impl NormConfig {
    pub fn params(&self) -> NormParams {
        NormParams {
            beta: self.beta,
            alpha: self.alpha,
            b: self.b,
            gamma: self.gamma,
            gamma_prime: self.gamma_prime,
            epsilon: self.epsilon,
            epsilon_prime: self.epsilon_prime,
            lambda: self.lambda,
            upsilon: self.upsilon,
            mu: self.mu,
            gamma_bound: self.gamma_bound,
            rho: match self.rho {
                RhoChoice::Ones => Rho::Ones,
                RhoChoice::LambdaScheme => {
                    Rho::Lambda { lambda: self.lambda, upsilon: self.upsilon }
                }
                RhoChoice::LambdaExternal => Rho::LambdaExternal {
                    lambda: self.lambda,
                    upsilon: self.upsilon,
                    eps_prime: self.epsilon_prime,
                },
            },
        }
    }

    pub fn shape(&self, d: usize) -> SeriesShape {
        SeriesShape::new(d, self.r0, self.r)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, rename_all = "kebab-case")]
pub struct Budgets {
    pub max_generators: usize,
    pub max_seconds: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { max_generators: 64, max_seconds: 900 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, rename_all = "kebab-case")]
pub struct SuiteConfig {
    pub lattice: LatticeSpec,
    pub scale: ScaleFamily,
    pub interaction: InteractionSpec,
    pub norm: NormConfig,
    pub suites: Vec<String>,
    pub seed: u64,
    pub budgets: Budgets,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            lattice: LatticeSpec::default(),
            scale: ScaleFamily::default(),
            interaction: InteractionSpec::default(),
            norm: NormConfig::default(),
            suites: vec!["all".into()],
            seed: 1,
            budgets: Budgets::default(),
            out_dir: None,
        }
    }
}

impl SuiteConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SuiteConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(e) = self.lattice.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.scale.validate() {
            problems.push(e.to_string());
        }
        if self.norm.r0 == 0 || self.norm.r == 0 {
            problems.push("norm.r0 and norm.r must be positive".into());
        }
        if self.norm.beta <= 0.0 || self.norm.b <= 0.0 || self.norm.alpha <= 0.0 {
            problems.push("norm weights must be positive".into());
        }
        if !(0.0..1.0).contains(&self.norm.lambda) || self.norm.lambda == 0.0 {
            problems.push("norm.lambda must lie in (0, 1)".into());
        }
        if self.budgets.max_generators == 0 || self.budgets.max_seconds == 0 {
            problems.push("budgets must be positive".into());
        }
        for id in &self.suites {
            if id != "all" && !super::SUITE_IDS.contains(&id.as_str()) {
                problems.push(format!("unknown suite id `{id}`"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// Suites to run, with `all` expanded in registry order.
    pub fn resolved_suites(&self) -> Vec<String> {
        let mut out = Vec::new();
        for id in &self.suites {
            if id == "all" {
                for s in super::SUITE_IDS {
                    if !out.contains(&(*s).to_string()) {
                        out.push((*s).to_string());
                    }
                }
            } else if !out.contains(id) {
                out.push(id.clone());
            }
        }
        out
    }

    /// Stable hash of the semantic configuration (output paths excluded).
    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut semantic = self.clone();
        semantic.out_dir = None;
        let canonical = serde_json::to_string(&semantic).expect("serializable config");
        let mut h = Sha256::new();
        h.update(canonical.as_bytes());
        let digest = h.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
