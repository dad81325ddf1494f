//! The particle/hole swap operator and the two-body interaction.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmatrix::C64;
use crate::error::Result;
use crate::grassmann::{FamilyId, GeneratorTable, GrassmannPolynomial};
use crate::kernel::BMatrix;
use crate::lattice::Lattice;

/// Kernel of the swap operator: `delta(x - x') delta_{sigma sigma'}` times
/// `+1` for `(a, a') = (1, 0)`, `-1` for `(0, 1)`, `0` otherwise.
pub fn build_j(lat: &Arc<Lattice>) -> BMatrix {
    let dv = lat.delta_value();
    BMatrix::from_fn(lat.clone(), |i, j| {
        let fi = lat.coords(i);
        let fj = lat.coords(j);
        if fi.t == fj.t && fi.x == fj.x && fi.sigma == fj.sigma {
            match (fi.a, fj.a) {
                (1, 0) => C64::new(dv, 0.0),
                (0, 1) => C64::new(-dv, 0.0),
                _ => C64::new(0.0, 0.0),
            }
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", rename_all_fields = "kebab-case")]
pub enum PotentialKind {
    /// `v(0) = 1`, zero elsewhere.
    Onsite,
    /// `v(dt, dx) = exp(-(dt^2 + |dx|^2) / (2 width^2))` on minimal images.
    Gaussian { width: f64 },
    /// Explicit values over the spacetime difference lattice, row-major
    /// `(t * lsp^d + site)`, as `[re, im]` pairs.
    Table { values: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct InteractionSpec {
    pub coupling: f64,
    pub potential: PotentialKind,
}

impl Default for InteractionSpec {
    fn default() -> Self {
        InteractionSpec { coupling: 0.01, potential: PotentialKind::Gaussian { width: 1.0 } }
    }
}

impl InteractionSpec {
    /// The two-body potential as a function of the spacetime difference,
    /// indexed like lattice sites.
    pub fn potential_values(&self, lat: &Arc<Lattice>) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); lat.n_sites];
        for idx in 0..lat.n_sites {
            let (t, x) = site_coords(lat, idx);
            v[idx] = match &self.potential {
                PotentialKind::Onsite => {
                    if t == 0 && x.iter().all(|&c| c == 0) {
                        C64::new(self.coupling, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                }
                PotentialKind::Gaussian { width } => {
                    let dt = lat.min_image_time(t, 0);
                    let mut r2 = dt * dt;
                    for c in 0..lat.spec.d {
                        let dxc = lat.min_image_space(x[c], 0);
                        r2 += dxc * dxc;
                    }
                    C64::new(self.coupling * (-r2 / (2.0 * width * width)).exp(), 0.0)
                }
                PotentialKind::Table { values } => {
                    let (re, im) = values.get(idx).copied().unwrap_or((0.0, 0.0));
                    Complex64::new(re, im) * self.coupling
                }
            };
        }
        v
    }

    pub fn is_real_even(&self, lat: &Arc<Lattice>) -> bool {
        let v = self.potential_values(lat);
        for idx in 0..lat.n_sites {
            let (t, x) = site_coords(lat, idx);
            let neg: Vec<usize> = x.iter().map(|&c| (lat.spec.lsp - c) % lat.spec.lsp).collect();
            let nidx = site_index(lat, t, &neg);
            if (v[nidx].conj() - v[idx]).norm() > 1e-14 {
                return false;
            }
        }
        true
    }
}

pub fn site_coords(lat: &Arc<Lattice>, idx: usize) -> (usize, Vec<usize>) {
    let mut site = idx;
    let mut x = vec![0; lat.spec.d];
    for c in (0..lat.spec.d).rev() {
        x[c] = site % lat.spec.lsp;
        site /= lat.spec.lsp;
    }
    (site, x)
}

pub fn site_index(lat: &Arc<Lattice>, t: usize, x: &[usize]) -> usize {
    let mut site = t;
    for &c in x {
        site = site * lat.spec.lsp + c;
    }
    site
}

/// Quartic interaction with the delta-pair kernel
/// `V0(x1,..,x4) = -1/2 delta(x1,x2) delta(x3,x4) v(x1-x3)` and field pattern
/// `psi(x1,1) psi(x2,0) psi(x3,1) psi(x4,0)`:
/// after collapsing the deltas,
/// `V = -1/2 sum w^2 v(x-y) psi(x,s,1) psi(x,s,0) psi(y,t,1) psi(y,t,0)`.
pub fn build_interaction(
    spec: &InteractionSpec,
    lat: &Arc<Lattice>,
    table: &Arc<GeneratorTable>,
    fam_psi: FamilyId,
) -> Result<GrassmannPolynomial> {
    let v = spec.potential_values(lat);
    let w = lat.weight();
    let mut out = GrassmannPolynomial::zero(table.clone());
    for s1 in 0..lat.n_sites {
        for sig1 in 0..lat.n_spin {
            let (t1, x1) = site_coords(lat, s1);
            let bar1 = table.generator_bit(
                fam_psi,
                lat.index(&crate::lattice::FieldIndex { t: t1, x: x1.clone(), sigma: sig1, a: 1 }),
            );
            let un1 = table.generator_bit(
                fam_psi,
                lat.index(&crate::lattice::FieldIndex { t: t1, x: x1.clone(), sigma: sig1, a: 0 }),
            );
            for s3 in 0..lat.n_sites {
                for sig3 in 0..lat.n_spin {
                    let (t3, x3) = site_coords(lat, s3);
                    // spacetime difference with periodic reduction
                    let dt = (t1 + lat.spec.l0 - t3) % lat.spec.l0;
                    let dxv: Vec<usize> = x1
                        .iter()
                        .zip(&x3)
                        .map(|(&a, &b)| (a + lat.spec.lsp - b) % lat.spec.lsp)
                        .collect();
                    let vv = v[site_index(lat, dt, &dxv)];
                    if vv == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let bar3 = table.generator_bit(
                        fam_psi,
                        lat.index(&crate::lattice::FieldIndex {
                            t: t3,
                            x: x3.clone(),
                            sigma: sig3,
                            a: 1,
                        }),
                    );
                    let un3 = table.generator_bit(
                        fam_psi,
                        lat.index(&crate::lattice::FieldIndex {
                            t: t3,
                            x: x3.clone(),
                            sigma: sig3,
                            a: 0,
                        }),
                    );
                    let mono = bar1 | un1 | bar3 | un3;
                    if mono.count_ones() != 4 {
                        continue; // coincident pairs vanish
                    }
                    // sign of sorting psi(bar1) psi(un1) psi(bar3) psi(un3)
                    let sign = ordered_product_sign(&[bar1, un1, bar3, un3]);
                    out.add_term(mono, C64::new(-0.5 * w * w * sign, 0.0) * vv);
                }
            }
        }
    }
    Ok(out)
}

/// Sign of rewriting the product of distinct generators (given as single-bit
/// masks, in product order) as the sorted monomial.
pub fn ordered_product_sign(bits: &[u64]) -> f64 {
    let mut inv = 0;
    for i in 0..bits.len() {
        for j in i + 1..bits.len() {
            if bits[i] > bits[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;

    fn lat() -> Arc<Lattice> {
        Lattice::new(LatticeSpec { d: 1, l0: 2, lsp: 2, dt: 1.0, dx: 1.0, spin: false }).unwrap()
    }

    #[test]
    fn j_is_antisymmetric_and_squares_to_minus_id() {
        let lat = lat();
        let j = build_j(&lat);
        assert!(j.antisymmetry_defect() < 1e-14);
        let jj = j.compose(&j);
        let minus_id = BMatrix::identity(lat.clone()).scale(C64::new(-1.0, 0.0));
        assert!(jj.max_abs_diff(&minus_id) < 1e-12);
    }

    #[test]
    fn delta_integrates_to_one() {
        let lat = lat();
        let j = build_j(&lat);
        // sum over xi' of w * |J(xi, xi')| = 1 for every xi
        for i in 0..lat.n_b {
            let total: f64 = (0..lat.n_b).map(|k| j.get(i, k).norm() * lat.weight()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn source_term_is_symmetric_between_fields() {
        // phi J psi = psi J phi on random coefficient vectors
        let lat = lat();
        let j = build_j(&lat);
        let mut rng = crate::rng::rng_from(3, "jsym", 0);
        let phi: Vec<C64> = (0..lat.n_b).map(|_| crate::rng::random_c64(&mut rng)).collect();
        let psi: Vec<C64> = (0..lat.n_b).map(|_| crate::rng::random_c64(&mut rng)).collect();
        // Grassmann check: build the bilinear in a 2-family table and compare
        let table = GeneratorTable::new(&[("phi", lat.n_b), ("psi", lat.n_b)]).unwrap();
        let fp = table.family("phi").unwrap();
        let fs = table.family("psi").unwrap();
        let w = lat.weight();
        let m_phi_j_psi = crate::cmatrix::CMatrix::from_fn(lat.n_b, |a, b| {
            j.get(a, b) * w * w * phi[a] * psi[b]
        });
        let m_psi_j_phi = crate::cmatrix::CMatrix::from_fn(lat.n_b, |a, b| {
            j.get(a, b) * w * w * psi[a] * phi[b]
        });
        let p1 = crate::grassmann::bilinear_form(&table, fp, fs, &m_phi_j_psi).unwrap();
        let p2 = crate::grassmann::bilinear_form(&table, fs, fp, &m_psi_j_phi).unwrap();
        assert!(p1.sub(&p2).unwrap().max_coeff_norm() < 1e-12);
    }

    #[test]
    fn interaction_is_even_quartic_and_vanishes_for_zero_v() {
        let lat = lat();
        let table = GeneratorTable::new(&[("psi", lat.n_b)]).unwrap();
        let fam = table.family("psi").unwrap();
        // onsite needs spin to be nonzero; spinless tests use a ranged potential
        let spec = InteractionSpec { coupling: 0.3, potential: PotentialKind::Gaussian { width: 1.0 } };
        let v = build_interaction(&spec, &lat, &table, fam).unwrap();
        assert!(!v.is_zero());
        assert!(v.is_even());
        for (&m, _) in v.terms() {
            assert_eq!(m.count_ones(), 4);
        }

        let zero = InteractionSpec { coupling: 0.0, potential: PotentialKind::Onsite };
        assert!(build_interaction(&zero, &lat, &table, fam).unwrap().is_zero());
    }
}
