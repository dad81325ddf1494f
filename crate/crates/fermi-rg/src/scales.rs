//! Smooth cutoff, scale functions, shells and neighbourhoods, the
//! first-scale covariance with a counterterm, and counterterm validation.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmatrix::C64;
use crate::decay::{Coeff, SeriesShape};
use crate::error::{Error, Result};
use crate::fourier::{covariance_from_profile, multiplier_hat, Propagator};
use crate::kernel::{Profile, ScalarProfile};
use crate::lattice::Lattice;

/// `exp(-1/t)` continued by zero: the standard smooth step ingredient.
fn smooth_h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth bump: identically one on `[-1, 1]`, supported in `(-2, 2)`,
/// realized as `H(2-|x|) / (H(2-|x|) + H(|x|-1))`.
pub fn bump_phi(x: f64) -> f64 {
    let ax = x.abs();
    let num = smooth_h(2.0 - ax);
    let den = num + smooth_h(ax - 1.0);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `nu(x) = phi(x/M) - phi(M x)` for `x > 0`, zero otherwise: supported in
/// `[1/M, 2M]`, identically one on `[2/M, M]`.
pub fn nu(x: f64, m_param: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        bump_phi(x / m_param) - bump_phi(m_param * x)
    }
}

/// Doubled-window envelope `phi(x/M^2) - phi(M^2 x)`.
pub fn nu_tilde(x: f64, m_param: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        bump_phi(x / (m_param * m_param)) - bump_phi(m_param * m_param * x)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", rename_all_fields = "kebab-case")]
pub enum Dispersion {
    /// `e(k) = |k|^2 / (2 mass) - mu_f`.
    Quadratic { mass: f64, mu_f: f64 },
    /// Explicit values per spatial mode.
    Tabulated { values: Vec<f64> },
}

impl Default for Dispersion {
    fn default() -> Self {
        Dispersion::Quadratic { mass: 1.0, mu_f: 0.3 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffKind {
    /// `U(k) = phi(M e(k)^2 / 2)`: equals one wherever the first
    /// neighbourhood can be nonzero.
    Auto,
    /// `U = 1` everywhere.
    One,
}

/// Scale bundle: parameter, first-scale index, dispersion and cutoff.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct ScaleFamily {
    pub m_param: f64,
    pub j0: usize,
    pub dispersion: Dispersion,
    pub cutoff: CutoffKind,
}

impl Default for ScaleFamily {
    fn default() -> Self {
        ScaleFamily {
            m_param: 4.0,
            j0: 2,
            dispersion: Dispersion::default(),
            cutoff: CutoffKind::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleKind {
    /// `nu^(j)(k) = nu(M^(2j) (k0^2 + e^2))`.
    Shell,
    /// `nu^(>=j)(k) = phi(M^(2j-1) (k0^2 + e^2))`, defined for real `j`.
    Geq,
    /// `nu~^(j)`: shell with the doubled window.
    Extended,
    /// `nu~^(>=j)(k) = phi(M^(2j-2) (...))`.
    ExtendedGeq,
    /// `nu-bar^(>=j)(k) = phi(M^(2j-3) (...))`.
    BarGeq,
}

impl ScaleFamily {
    pub fn validate(&self) -> Result<()> {
        if self.m_param <= 1.0 {
            return Err(Error::Config("scale parameter must exceed 1".into()));
        }
        if self.j0 < 1 {
            return Err(Error::Config("first-scale index must be >= 1".into()));
        }
        Ok(())
    }

    /// Dispersion over the spatial part of a momentum mode.
    pub fn dispersion_at(&self, lat: &Arc<Lattice>, m: &[usize]) -> f64 {
        match &self.dispersion {
            Dispersion::Quadratic { mass, mu_f } => {
                let k = lat.kvec(m);
                k.iter().map(|v| v * v).sum::<f64>() / (2.0 * mass) - mu_f
            }
            Dispersion::Tabulated { values } => {
                let mut idx = 0usize;
                for &c in m {
                    idx = idx * lat.spec.lsp + c;
                }
                values.get(idx).copied().unwrap_or(0.0)
            }
        }
    }

    pub fn cutoff_at(&self, lat: &Arc<Lattice>, m: &[usize]) -> f64 {
        match self.cutoff {
            CutoffKind::One => 1.0,
            CutoffKind::Auto => {
                let e = self.dispersion_at(lat, m);
                bump_phi(self.m_param * e * e / 2.0)
            }
        }
    }

    /// `k0^2 + e(k)^2` at a momentum mode.
    pub fn radius_sq(&self, lat: &Arc<Lattice>, mode: usize) -> f64 {
        let (n0, m) = lat.mode_coords(mode);
        let k0 = lat.k0(n0);
        let e = self.dispersion_at(lat, &m);
        k0 * k0 + e * e
    }

    /// Evaluate a scale function on the momentum grid. `j` is allowed to be
    /// real for the neighbourhood kinds and must be a positive integer for
    /// the shell kinds.
    pub fn scale_function(
        &self,
        lat: &Arc<Lattice>,
        j: f64,
        kind: ScaleKind,
    ) -> Result<ScalarProfile> {
        if j < 1.0 {
            return Err(Error::Domain(format!("scale index {j} < 1")));
        }
        if matches!(kind, ScaleKind::Shell | ScaleKind::Extended) && j.fract() != 0.0 {
            return Err(Error::Domain("shell index must be an integer".into()));
        }
        let m = self.m_param;
        Ok((0..lat.n_modes)
            .map(|mode| {
                let r2 = self.radius_sq(lat, mode);
                match kind {
                    ScaleKind::Shell => nu(m.powf(2.0 * j) * r2, m),
                    ScaleKind::Geq => bump_phi(m.powf(2.0 * j - 1.0) * r2),
                    ScaleKind::Extended => nu_tilde(m.powf(2.0 * j) * r2, m),
                    ScaleKind::ExtendedGeq => bump_phi(m.powf(2.0 * j - 2.0) * r2),
                    ScaleKind::BarGeq => bump_phi(m.powf(2.0 * j - 3.0) * r2),
                }
            })
            .collect())
    }

    pub fn cutoff_profile(&self, lat: &Arc<Lattice>) -> ScalarProfile {
        (0..lat.n_modes)
            .map(|mode| {
                let (_, m) = lat.mode_coords(mode);
                self.cutoff_at(lat, &m)
            })
            .collect()
    }

    pub fn dispersion_profile(&self, lat: &Arc<Lattice>) -> ScalarProfile {
        (0..lat.n_modes)
            .map(|mode| {
                let (_, m) = lat.mode_coords(mode);
                self.dispersion_at(lat, &m)
            })
            .collect()
    }
}

/// Counterterm: a real adjustment of the dispersion with its norm budget.
#[derive(Clone, Debug)]
pub struct Counterterm {
    /// Values per spatial mode (constant in the frequency direction).
    pub delta_e: Vec<f64>,
    pub mu: f64,
}

impl Counterterm {
    pub fn zero(lat: &Arc<Lattice>, mu: f64) -> Self {
        Counterterm { delta_e: vec![0.0; lat.n_sites_sp], mu }
    }

    fn spatial_mode_index(lat: &Arc<Lattice>, m: &[usize]) -> usize {
        let mut idx = 0usize;
        for &c in m {
            idx = idx * lat.spec.lsp + c;
        }
        idx
    }

    pub fn at(&self, lat: &Arc<Lattice>, m: &[usize]) -> f64 {
        self.delta_e[Self::spatial_mode_index(lat, m)]
    }

    /// Momentum profile of the counterterm (constant in `k0`).
    pub fn profile(&self, lat: &Arc<Lattice>) -> Profile {
        (0..lat.n_modes)
            .map(|mode| {
                let (_, m) = lat.mode_coords(mode);
                Complex64::new(self.at(lat, &m), 0.0)
            })
            .collect()
    }

    pub fn scale(&self, c: f64) -> Self {
        Counterterm {
            delta_e: self.delta_e.iter().map(|v| v * c).collect(),
            mu: self.mu,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Counterterm {
            delta_e: self
                .delta_e
                .iter()
                .zip(&other.delta_e)
                .map(|(a, b)| a + b)
                .collect(),
            mu: self.mu,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CountertermReport {
    pub valid: bool,
    pub reason: Option<String>,
    /// Constant coefficient of the decay norm of the transformed kernel.
    pub norm_constant: f64,
}

/// Validates support inside the cutoff and the strict norm budget at the
/// constant order (all other orders are unconstrained by the definition).
pub fn counterterm_validate(
    ct: &Counterterm,
    fam: &ScaleFamily,
    lat: &Arc<Lattice>,
    shape: SeriesShape,
) -> Result<CountertermReport> {
    for mode in 0..lat.n_sites_sp {
        let mut m = vec![0usize; lat.spec.d];
        let mut rest = mode;
        for c in (0..lat.spec.d).rev() {
            m[c] = rest % lat.spec.lsp;
            rest /= lat.spec.lsp;
        }
        if ct.delta_e[mode].abs() > 1e-14 && fam.cutoff_at(lat, &m) == 0.0 {
            return Ok(CountertermReport {
                valid: false,
                reason: Some(format!("supported at mode {mode} where the cutoff vanishes")),
                norm_constant: f64::NAN,
            });
        }
    }
    let hat = multiplier_hat(lat, &ct.profile(lat));
    let norm = crate::norms::norm_1inf(&hat.as_kernel(), shape)?;
    let c0 = match norm.constant_coeff() {
        Coeff::Finite(v) => v,
        Coeff::Infinite => f64::INFINITY,
    };
    if c0 >= ct.mu {
        return Ok(CountertermReport {
            valid: false,
            reason: Some(format!("norm constant {c0:.6e} >= mu = {}", ct.mu)),
            norm_constant: c0,
        });
    }
    Ok(CountertermReport { valid: true, reason: None, norm_constant: c0 })
}

/// First-scale momentum profile
/// `C0(k) = (U(k) - nu^(>j0)(k)) / (i k0 - e(k) + de(k))` and its position
/// covariance.
pub fn first_scale_covariance(
    fam: &ScaleFamily,
    ct: &Counterterm,
    lat: &Arc<Lattice>,
) -> Result<Propagator> {
    fam.validate()?;
    let above = fam.scale_function(lat, fam.j0 as f64 + 1.0, ScaleKind::Geq)?;
    let mut profile = vec![C64::new(0.0, 0.0); lat.n_modes];
    for (mode, p) in profile.iter_mut().enumerate() {
        let (n0, m) = lat.mode_coords(mode);
        let u = fam.cutoff_at(lat, &m);
        let numer = u - above[mode];
        let e = fam.dispersion_at(lat, &m);
        let denom = C64::new(-e + ct.at(lat, &m), lat.k0(n0));
        if denom.norm() < 1e-8 {
            if numer.abs() > 1e-12 {
                return Err(Error::SingularPropagator {
                    mode,
                    denom: denom.norm(),
                    numer: numer.abs(),
                });
            }
            *p = C64::new(0.0, 0.0);
        } else {
            *p = C64::new(numer, 0.0) / denom;
        }
    }
    let mut prop = covariance_from_profile(lat, &profile);
    prop.tag = "first-scale".into();
    Ok(prop)
}

/// Shell propagator `nu^(j)(k) / (i k0 - e(k))`, used by the power-counting
/// experiment.
pub fn shell_covariance(fam: &ScaleFamily, j: usize, lat: &Arc<Lattice>) -> Result<Propagator> {
    let shell = fam.scale_function(lat, j as f64, ScaleKind::Shell)?;
    let mut profile = vec![C64::new(0.0, 0.0); lat.n_modes];
    for (mode, p) in profile.iter_mut().enumerate() {
        let (n0, m) = lat.mode_coords(mode);
        let e = fam.dispersion_at(lat, &m);
        let denom = C64::new(-e, lat.k0(n0));
        *p = C64::new(shell[mode], 0.0) / denom;
    }
    let mut prop = covariance_from_profile(lat, &profile);
    prop.tag = format!("shell-{j}");
    Ok(prop)
}
