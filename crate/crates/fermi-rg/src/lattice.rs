//! Discretized base space and its momentum dual.
//!
//! Conventions used everywhere in this crate:
//! - fields are antiperiodic in time (period `l0*dt`, each wrap flips the
//!   sign) and periodic in space (period `lsp*dx` per axis);
//! - `int dxi = sum_{sigma,a} sum_{sites} * dt*dx^d`, so the lattice delta
//!   carries `1/(dt*dx^d)`;
//! - momentum integrals are `(1/V) sum_modes` with `V = l0*dt*(lsp*dx)^d`;
//!   frequencies are fermionic Matsubara values `(2n+1-l0)*pi/(l0*dt)`, a
//!   set symmetric under `k0 -> -k0` that never contains zero;
//! - the pairing is `<k,x>_- = -k0*x0 + k.x`;
//! - position differences are reduced to minimal-image representatives.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPIN_UP: usize = 0;
pub const SPIN_DOWN: usize = 1;

/// Bare lattice parameters (mirrors the JSON config block).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct LatticeSpec {
    pub d: usize,
    pub l0: usize,
    pub lsp: usize,
    pub dt: f64,
    pub dx: f64,
    pub spin: bool,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        LatticeSpec { d: 1, l0: 4, lsp: 4, dt: 1.0, dx: 1.0, spin: false }
    }
}

impl LatticeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("lattice.d must be >= 1".into()));
        }
        if self.l0 < 2 || self.l0 % 2 != 0 {
            return Err(Error::Config("lattice.l0 must be even and >= 2".into()));
        }
        if self.lsp < 2 {
            return Err(Error::Config("lattice.lsp must be >= 2".into()));
        }
        if self.dt <= 0.0 || self.dx <= 0.0 {
            return Err(Error::Config("lattice spacings must be positive".into()));
        }
        Ok(())
    }
}

/// Point of the discretized base space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldIndex {
    pub t: usize,
    pub x: Vec<usize>,
    pub sigma: usize,
    pub a: usize,
}

/// Point of the discretized momentum space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentumIndex {
    pub n0: usize,
    pub m: Vec<usize>,
    pub sigma: usize,
    pub a: usize,
}

#[derive(Clone, Debug)]
pub struct Lattice {
    pub spec: LatticeSpec,
    pub n_spin: usize,
    pub n_sites_sp: usize,
    pub n_sites: usize,
    /// Number of points of the base space (and of its momentum dual).
    pub n_b: usize,
    /// Number of plain momentum modes (no spin, no particle/hole bit).
    pub n_modes: usize,
}

impl Lattice {
    pub fn new(spec: LatticeSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        let n_spin = if spec.spin { 2 } else { 1 };
        let n_sites_sp = spec.lsp.pow(spec.d as u32);
        let n_sites = spec.l0 * n_sites_sp;
        let n_b = n_sites * n_spin * 2;
        Ok(Arc::new(Lattice {
            spec,
            n_spin,
            n_sites_sp,
            n_sites,
            n_b,
            n_modes: n_sites,
        }))
    }

    /// Integration weight of one lattice point: `dt * dx^d`.
    pub fn weight(&self) -> f64 {
        self.spec.dt * self.spec.dx.powi(self.spec.d as i32)
    }

    /// Total spacetime volume `l0*dt * (lsp*dx)^d`.
    pub fn volume(&self) -> f64 {
        (self.spec.l0 as f64 * self.spec.dt)
            * (self.spec.lsp as f64 * self.spec.dx).powi(self.spec.d as i32)
    }

    pub fn delta_value(&self) -> f64 {
        1.0 / self.weight()
    }

    // ---- field index encoding ----

    pub fn index(&self, f: &FieldIndex) -> usize {
        debug_assert!(f.t < self.spec.l0 && f.sigma < self.n_spin && f.a < 2);
        let mut site = f.t;
        for &c in &f.x {
            debug_assert!(c < self.spec.lsp);
            site = site * self.spec.lsp + c;
        }
        (site * self.n_spin + f.sigma) * 2 + f.a
    }

    pub fn coords(&self, idx: usize) -> FieldIndex {
        let a = idx % 2;
        let rest = idx / 2;
        let sigma = rest % self.n_spin;
        let mut site = rest / self.n_spin;
        let mut x = vec![0; self.spec.d];
        for c in (0..self.spec.d).rev() {
            x[c] = site % self.spec.lsp;
            site /= self.spec.lsp;
        }
        FieldIndex { t: site, x, sigma, a }
    }

    pub fn momentum(&self, idx: usize) -> MomentumIndex {
        let f = self.coords(idx);
        MomentumIndex { n0: f.t, m: f.x, sigma: f.sigma, a: f.a }
    }

    pub fn momentum_index(&self, k: &MomentumIndex) -> usize {
        self.index(&FieldIndex { t: k.n0, x: k.m.clone(), sigma: k.sigma, a: k.a })
    }

    // ---- momentum mode encoding (no spin / particle-hole) ----

    pub fn mode_of(&self, n0: usize, m: &[usize]) -> usize {
        let mut site = n0;
        for &c in m {
            site = site * self.spec.lsp + c;
        }
        site
    }

    pub fn mode_coords(&self, mode: usize) -> (usize, Vec<usize>) {
        let mut site = mode;
        let mut m = vec![0; self.spec.d];
        for c in (0..self.spec.d).rev() {
            m[c] = site % self.spec.lsp;
            site /= self.spec.lsp;
        }
        (site, m)
    }

    /// Fermionic Matsubara frequency of time mode `n0`.
    pub fn k0(&self, n0: usize) -> f64 {
        let l0 = self.spec.l0 as f64;
        ((2 * n0 + 1) as f64 - l0) * std::f64::consts::PI / (l0 * self.spec.dt)
    }

    /// Spatial momentum component of mode index `m` on one axis.
    pub fn ksp(&self, m: usize) -> f64 {
        let l = self.spec.lsp as f64;
        ((m as f64) - l / 2.0) * 2.0 * std::f64::consts::PI / (l * self.spec.dx)
    }

    pub fn kvec(&self, m: &[usize]) -> Vec<f64> {
        m.iter().map(|&c| self.ksp(c)).collect()
    }

    /// `<k, x>_- = -k0 x0 + k . x` for a momentum mode and a spacetime point.
    pub fn pairing_minus(&self, mode: usize, t: usize, x: &[usize]) -> f64 {
        let (n0, m) = self.mode_coords(mode);
        let mut acc = -self.k0(n0) * (t as f64) * self.spec.dt;
        for (c, &mc) in m.iter().enumerate() {
            acc += self.ksp(mc) * (x[c] as f64) * self.spec.dx;
        }
        acc
    }

    /// Momentum mode of `-k` (exact on the grid).
    pub fn negate_mode(&self, mode: usize) -> usize {
        let (n0, m) = self.mode_coords(mode);
        let neg0 = self.spec.l0 - 1 - n0;
        let negm: Vec<usize> = m.iter().map(|&c| (self.spec.lsp - c) % self.spec.lsp).collect();
        self.mode_of(neg0, &negm)
    }

    /// Mode of `k0 -> -k0` with the spatial part fixed.
    pub fn reflect_mode_k0(&self, mode: usize) -> usize {
        let (n0, m) = self.mode_coords(mode);
        self.mode_of(self.spec.l0 - 1 - n0, &m)
    }

    // ---- translations, reflections, minimal images ----

    /// Shift a base-space point by `(t0, tx)` lattice steps. Returns the new
    /// index and the antiperiodic wrap sign picked up in the time direction.
    pub fn shift(&self, idx: usize, t0: isize, tx: &[isize]) -> (usize, f64) {
        let f = self.coords(idx);
        let l0 = self.spec.l0 as isize;
        let raw = f.t as isize + t0;
        let wraps = raw.div_euclid(l0);
        let nt = raw.rem_euclid(l0) as usize;
        let sign = if wraps.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let lsp = self.spec.lsp as isize;
        let nx: Vec<usize> = f
            .x
            .iter()
            .zip(tx)
            .map(|(&c, &s)| (c as isize + s).rem_euclid(lsp) as usize)
            .collect();
        (
            self.index(&FieldIndex { t: nt, x: nx, sigma: f.sigma, a: f.a }),
            sign,
        )
    }

    /// `xi -> -xi` (spacetime negation, spin and particle/hole untouched).
    pub fn negate(&self, idx: usize) -> (usize, f64) {
        let f = self.coords(idx);
        let (nt, sign) = self.negate_time(f.t);
        let nx: Vec<usize> = f
            .x
            .iter()
            .map(|&c| (self.spec.lsp - c) % self.spec.lsp)
            .collect();
        (
            self.index(&FieldIndex { t: nt, x: nx, sigma: f.sigma, a: f.a }),
            sign,
        )
    }

    /// `xi -> R0 xi` (time reflection only).
    pub fn reflect_time(&self, idx: usize) -> (usize, f64) {
        let f = self.coords(idx);
        let (nt, sign) = self.negate_time(f.t);
        (
            self.index(&FieldIndex { t: nt, x: f.x, sigma: f.sigma, a: f.a }),
            sign,
        )
    }

    fn negate_time(&self, t: usize) -> (usize, f64) {
        if t == 0 {
            (0, 1.0)
        } else {
            (self.spec.l0 - t, -1.0)
        }
    }

    /// Minimal-image physical time difference `t1 - t2` (in units of time).
    pub fn min_image_time(&self, t1: usize, t2: usize) -> f64 {
        let l0 = self.spec.l0 as isize;
        let mut raw = t1 as isize - t2 as isize;
        raw = raw.rem_euclid(l0);
        if raw > l0 / 2 {
            raw -= l0;
        }
        raw as f64 * self.spec.dt
    }

    /// Minimal-image physical spatial difference on one axis.
    pub fn min_image_space(&self, x1: usize, x2: usize) -> f64 {
        let l = self.spec.lsp as isize;
        let mut raw = x1 as isize - x2 as isize;
        raw = raw.rem_euclid(l);
        if raw > l / 2 {
            raw -= l;
        }
        raw as f64 * self.spec.dx
    }

    /// Minimal-image coordinate of a point relative to the origin,
    /// `(time, spatial...)`.
    pub fn min_image_point(&self, idx: usize) -> Vec<f64> {
        let f = self.coords(idx);
        let mut out = vec![self.min_image_time(f.t, 0)];
        for c in 0..self.spec.d {
            out.push(self.min_image_space(f.x[c], 0));
        }
        out
    }

    /// Minimal-image difference vector between two points.
    pub fn min_image_diff(&self, i: usize, j: usize) -> Vec<f64> {
        let fi = self.coords(i);
        let fj = self.coords(j);
        let mut out = vec![self.min_image_time(fi.t, fj.t)];
        for c in 0..self.spec.d {
            out.push(self.min_image_space(fi.x[c], fj.x[c]));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat() -> Arc<Lattice> {
        Lattice::new(LatticeSpec { d: 1, l0: 4, lsp: 4, dt: 0.5, dx: 1.5, spin: true }).unwrap()
    }

    #[test]
    fn index_roundtrip() {
        let l = lat();
        for idx in 0..l.n_b {
            assert_eq!(l.index(&l.coords(idx)), idx);
        }
        assert_eq!(l.n_b, 4 * 4 * 2 * 2);
    }

    #[test]
    fn matsubara_grid_symmetric_and_nonzero() {
        let l = lat();
        let mut freqs: Vec<f64> = (0..l.spec.l0).map(|n| l.k0(n)).collect();
        for f in &freqs {
            assert!(f.abs() > 1e-12);
        }
        let reflected: Vec<f64> = freqs.iter().map(|f| -f).collect();
        freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut r = reflected;
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in freqs.iter().zip(&r) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn negate_mode_is_exact() {
        let l = lat();
        for mode in 0..l.n_modes {
            let neg = l.negate_mode(mode);
            let (n0, m) = l.mode_coords(mode);
            let (nn0, nm) = l.mode_coords(neg);
            assert!((l.k0(n0) + l.k0(nn0)).abs() < 1e-12);
            for (a, b) in m.iter().zip(&nm) {
                let diff = l.ksp(*a) + l.ksp(*b);
                let period = 2.0 * std::f64::consts::PI / l.spec.dx;
                let rem = (diff / period - (diff / period).round()).abs();
                assert!(rem < 1e-12);
            }
        }
    }

    #[test]
    fn shift_wraps_antiperiodically() {
        let l = lat();
        let idx = l.index(&FieldIndex { t: 3, x: vec![2], sigma: 1, a: 0 });
        let (shifted, sign) = l.shift(idx, 1, &[0]);
        let f = l.coords(shifted);
        assert_eq!(f.t, 0);
        assert_eq!(sign, -1.0);
        let (s2, sign2) = l.shift(idx, 5, &[0]);
        assert_eq!(l.coords(s2).t, 0);
        assert_eq!(sign2, 1.0, "two full wraps cancel");
        let (s2b, sign2b) = l.shift(idx, -4, &[0]);
        assert_eq!(l.coords(s2b).t, 3);
        assert_eq!(sign2b, -1.0);
        let (s3, sign3) = l.shift(idx, 8, &[4]);
        assert_eq!(s3, idx);
        assert_eq!(sign3, 1.0);
    }

    #[test]
    fn minimal_image_window() {
        let l = lat();
        assert_eq!(l.min_image_time(3, 0), -0.5);
        assert_eq!(l.min_image_time(2, 0), 1.0);
        assert_eq!(l.min_image_time(1, 3), 1.0);
        assert_eq!(l.min_image_space(3, 0), -1.5);
    }
}
