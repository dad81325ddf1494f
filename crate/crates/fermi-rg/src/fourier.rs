//! Transforms between position and momentum representations.
//!
//! All continuum `(2pi)^(d+1)` factors are replaced by explicit lattice
//! volume factors, consistently enough that the operator identities relating
//! swap, covariance and multiplier kernels hold to rounding error rather
//! than approximately.

use std::sync::Arc;

use crate::cmatrix::C64;
use crate::decay::{Coeff, DecaySeries, SeriesShape};
use crate::error::{Error, Result};
use crate::kernel::{ArgSpace, BMatrix, Kernel, Profile};
use crate::lattice::Lattice;

/// Momentum profile together with its position-space covariance.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub lat: Arc<Lattice>,
    pub profile: Profile,
    pub position: BMatrix,
    pub tag: String,
}

/// `<xi_check, xi> = delta_{sigma sigma'} delta_{a a'} (-1)^a <k, x>_-`;
/// `None` encodes the Kronecker mismatch.
pub fn inner_product(lat: &Arc<Lattice>, kidx: usize, xidx: usize) -> Option<f64> {
    let k = lat.momentum(kidx);
    let x = lat.coords(xidx);
    if k.sigma != x.sigma || k.a != x.a {
        return None;
    }
    let mode = lat.mode_of(k.n0, &k.m);
    let sign = if x.a == 0 { 1.0 } else { -1.0 };
    Some(sign * lat.pairing_minus(mode, x.t, &x.x))
}

/// Characters `E_(+-)(xi_check, xi)`.
pub fn character(lat: &Arc<Lattice>, kidx: usize, xidx: usize, plus: bool) -> C64 {
    match inner_product(lat, kidx, xidx) {
        None => C64::new(0.0, 0.0),
        Some(p) => {
            let s = if plus { p } else { -p };
            C64::new(0.0, s).exp()
        }
    }
}

/// Position covariance of a momentum profile: the `(a,a') = (0,1)` block is
/// `delta_{sigma sigma'} (1/V) sum_k e^{i<k, x-x'>_-} C(k)`, diagonal blocks
/// vanish, the `(1,0)` block is fixed by antisymmetry.
pub fn covariance_from_profile(lat: &Arc<Lattice>, profile: &Profile) -> Propagator {
    let v = lat.volume();
    let mut block = vec![C64::new(0.0, 0.0); lat.n_sites * lat.n_sites];
    // c(z) as a function of the raw site difference
    let mut cz = vec![C64::new(0.0, 0.0); lat.n_sites];
    for (site, czv) in cz.iter_mut().enumerate() {
        let (t, x) = crate::model::site_coords(lat, site);
        let mut acc = C64::new(0.0, 0.0);
        for (mode, cv) in profile.iter().enumerate() {
            let p = lat.pairing_minus(mode, t, &x);
            acc += cv * C64::new(0.0, p).exp();
        }
        *czv = acc / v;
    }
    for s1 in 0..lat.n_sites {
        let (t1, x1) = crate::model::site_coords(lat, s1);
        for s2 in 0..lat.n_sites {
            let (t2, x2) = crate::model::site_coords(lat, s2);
            // raw difference, wrapped with the antiperiodic sign in time
            let l0 = lat.spec.l0 as isize;
            let raw = t1 as isize - t2 as isize;
            let wraps = raw.div_euclid(l0);
            let dt = raw.rem_euclid(l0) as usize;
            let sign = if wraps.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let dxv: Vec<usize> = x1
                .iter()
                .zip(&x2)
                .map(|(&a, &b)| {
                    ((a as isize - b as isize).rem_euclid(lat.spec.lsp as isize)) as usize
                })
                .collect();
            block[s1 * lat.n_sites + s2] =
                cz[crate::model::site_index(lat, dt, &dxv)] * sign;
        }
    }
    let position = BMatrix::from_fn(lat.clone(), |i, j| {
        let fi = lat.coords(i);
        let fj = lat.coords(j);
        if fi.sigma != fj.sigma {
            return C64::new(0.0, 0.0);
        }
        let s1 = crate::model::site_index(lat, fi.t, &fi.x);
        let s2 = crate::model::site_index(lat, fj.t, &fj.x);
        match (fi.a, fj.a) {
            (0, 1) => block[s1 * lat.n_sites + s2],
            (1, 0) => -block[s2 * lat.n_sites + s1],
            _ => C64::new(0.0, 0.0),
        }
    });
    Propagator { lat: lat.clone(), profile: profile.clone(), position, tag: String::new() }
}

/// Multiplier transform: convolution with `hat chi` is multiplication by
/// `chi(k)` in momentum space; diagonal in spin and particle/hole.
pub fn multiplier_hat(lat: &Arc<Lattice>, chi: &Profile) -> BMatrix {
    let v = lat.volume();
    // chi'(z) for raw site differences, once per a
    let mut cz = [
        vec![C64::new(0.0, 0.0); lat.n_sites],
        vec![C64::new(0.0, 0.0); lat.n_sites],
    ];
    for a in 0..2 {
        for site in 0..lat.n_sites {
            let (t, x) = crate::model::site_coords(lat, site);
            let sign = if a == 0 { 1.0 } else { -1.0 };
            let mut acc = C64::new(0.0, 0.0);
            for (mode, cv) in chi.iter().enumerate() {
                let p = sign * lat.pairing_minus(mode, t, &x);
                acc += cv * C64::new(0.0, p).exp();
            }
            cz[a][site] = acc / v;
        }
    }
    BMatrix::from_fn(lat.clone(), |i, j| {
        let fi = lat.coords(i);
        let fj = lat.coords(j);
        if fi.sigma != fj.sigma || fi.a != fj.a {
            return C64::new(0.0, 0.0);
        }
        let l0 = lat.spec.l0 as isize;
        let raw = fi.t as isize - fj.t as isize;
        let wraps = raw.div_euclid(l0);
        let dt = raw.rem_euclid(l0) as usize;
        let sign = if wraps.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let dxv: Vec<usize> = fi
            .x
            .iter()
            .zip(&fj.x)
            .map(|(&a, &b)| ((a as isize - b as isize).rem_euclid(lat.spec.lsp as isize)) as usize)
            .collect();
        cz[fi.a][crate::model::site_index(lat, dt, &dxv)] * sign
    })
}

/// Normal-form extraction of a two-point kernel:
/// `f_check(k) = int dy e^{i<k,y>_-} f((0,sigma,1),(y,sigma,0))`.
pub fn two_point_profile(b: &BMatrix) -> Profile {
    let lat = &b.lat;
    let w = lat.weight();
    let origin_bar = lat.index(&crate::lattice::FieldIndex {
        t: 0,
        x: vec![0; lat.spec.d],
        sigma: 0,
        a: 1,
    });
    (0..lat.n_modes)
        .map(|mode| {
            let mut acc = C64::new(0.0, 0.0);
            for site in 0..lat.n_sites {
                let (t, x) = crate::model::site_coords(lat, site);
                let y = lat.index(&crate::lattice::FieldIndex {
                    t,
                    x: x.clone(),
                    sigma: 0,
                    a: 0,
                });
                let p = lat.pairing_minus(mode, t, &x);
                acc += C64::new(0.0, p).exp() * b.get(origin_bar, y);
            }
            acc * w
        })
        .collect()
}

/// Inverse transform of a profile to a plain spacetime function,
/// `chi'(x) = (1/V) sum_k e^{i<k,x>_-} chi(k)` over sites.
pub fn profile_to_position(lat: &Arc<Lattice>, chi: &Profile) -> Vec<C64> {
    let v = lat.volume();
    (0..lat.n_sites)
        .map(|site| {
            let (t, x) = crate::model::site_coords(lat, site);
            let mut acc = C64::new(0.0, 0.0);
            for (mode, cv) in chi.iter().enumerate() {
                acc += cv * C64::new(0.0, lat.pairing_minus(mode, t, &x)).exp();
            }
            acc / v
        })
        .collect()
}

/// Total transform: all arguments to momentum space with the conservation
/// delta factored out. Off-shell entries vanish for translation-invariant
/// input; on-shell entries carry the transform values.
#[derive(Clone, Debug)]
pub struct MomentumKernel {
    pub lat: Arc<Lattice>,
    pub args: usize,
    values: Vec<C64>,
}

impl MomentumKernel {
    pub fn get(&self, tuple: &[usize]) -> C64 {
        self.values[self.encode(tuple)]
    }

    fn encode(&self, tuple: &[usize]) -> usize {
        let mut flat = 0usize;
        for &t in tuple {
            flat = flat * self.lat.n_b + t;
        }
        flat
    }

    pub fn decode(&self, mut flat: usize, tuple: &mut [usize]) {
        for i in (0..self.args).rev() {
            tuple[i] = flat % self.lat.n_b;
            flat /= self.lat.n_b;
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Momentum conservation `sum (-1)^a k = 0` on the dual torus, checked
    /// in exact integer arithmetic.
    pub fn conserves(&self, tuple: &[usize]) -> bool {
        conserves(&self.lat, tuple)
    }

    pub fn max_offshell_abs(&self) -> f64 {
        let mut tuple = vec![0usize; self.args];
        let mut worst = 0.0f64;
        for flat in 0..self.values.len() {
            self.decode(flat, &mut tuple);
            if !self.conserves(&tuple) {
                worst = worst.max(self.values[flat].norm());
            }
        }
        worst
    }
}

pub fn conserves(lat: &Arc<Lattice>, tuple: &[usize]) -> bool {
    // time: frequencies in units of pi/(l0 dt): (2 n0 + 1 - l0), reciprocal
    // lattice step 2 l0; space: in units of 2 pi/(lsp dx): (m - lsp/2), step lsp
    let l0 = lat.spec.l0 as i64;
    let lsp = lat.spec.lsp as i64;
    let mut t_sum: i64 = 0;
    let mut x_sum = vec![0i64; lat.spec.d];
    for &idx in tuple {
        let k = lat.momentum(idx);
        let s: i64 = if k.a == 0 { 1 } else { -1 };
        t_sum += s * (2 * k.n0 as i64 + 1 - l0);
        for c in 0..lat.spec.d {
            x_sum[c] += s * (k.m[c] as i64 - lsp / 2);
        }
    }
    t_sum.rem_euclid(2 * l0) == 0 && x_sum.iter().all(|&v| v.rem_euclid(lsp) == 0)
}

/// Apply the forward character transform along one argument axis:
/// `new(.., k at axis, ..) = sum_xi w E_+(k, xi) old(.., xi, ..)`.
fn axis_forward(lat: &Arc<Lattice>, values: &mut Vec<C64>, args: usize, axis: usize) {
    let n_b = lat.n_b;
    let w = lat.weight();
    let stride = n_b.pow((args - 1 - axis) as u32);
    let outer = values.len() / (stride * n_b);
    let mut tmp = vec![C64::new(0.0, 0.0); n_b];
    // precompute the character matrix
    let mut t = vec![C64::new(0.0, 0.0); n_b * n_b];
    for k in 0..n_b {
        for x in 0..n_b {
            t[k * n_b + x] = character(lat, k, x, true) * w;
        }
    }
    for o in 0..outer {
        for s in 0..stride {
            let base = o * stride * n_b + s;
            for (k, tk) in tmp.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for x in 0..n_b {
                    acc += t[k * n_b + x] * values[base + x * stride];
                }
                *tk = acc;
            }
            for (k, tk) in tmp.iter().enumerate() {
                values[base + k * stride] = *tk;
            }
        }
    }
}

fn axis_inverse(lat: &Arc<Lattice>, values: &mut Vec<C64>, args: usize, axis: usize) {
    let n_b = lat.n_b;
    let v = lat.volume();
    let stride = n_b.pow((args - 1 - axis) as u32);
    let outer = values.len() / (stride * n_b);
    let mut tmp = vec![C64::new(0.0, 0.0); n_b];
    let mut t = vec![C64::new(0.0, 0.0); n_b * n_b];
    for x in 0..n_b {
        for k in 0..n_b {
            t[x * n_b + k] = character(lat, k, x, false) / v;
        }
    }
    for o in 0..outer {
        for s in 0..stride {
            let base = o * stride * n_b + s;
            for (x, tx) in tmp.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n_b {
                    acc += t[x * n_b + k] * values[base + k * stride];
                }
                *tx = acc;
            }
            for (x, tx) in tmp.iter().enumerate() {
                values[base + x * stride] = *tx;
            }
        }
    }
}

/// Total Fourier transform of a translation-invariant position kernel.
pub fn total_ft(f: &Kernel) -> Result<MomentumKernel> {
    let defect = f.translation_defect();
    if defect > 1e-8 * f.max_abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "total_ft input is not translation invariant (defect {defect:.3e})"
        )));
    }
    total_ft_raw(f)
}

/// Total transform without the invariance guard (norm internals apply decay
/// multipliers, which preserve invariance exactly).
pub fn total_ft_raw(f: &Kernel) -> Result<MomentumKernel> {
    if f.space != ArgSpace::Position {
        return Err(Error::Precondition("total_ft expects a position kernel".into()));
    }
    let lat = f.lat.clone();
    let args = f.args();
    let mut values = f.values().to_vec();
    for axis in 0..args {
        axis_forward(&lat, &mut values, args, axis);
    }
    let v = lat.volume();
    for val in values.iter_mut() {
        *val /= v;
    }
    Ok(MomentumKernel { lat, args, values })
}

/// Inverse of [`total_ft`]: uses only the on-shell entries.
pub fn total_ft_inverse(mk: &MomentumKernel, m: usize, n: usize) -> Result<Kernel> {
    if m + n != mk.args {
        return Err(Error::ShapeMismatch("argument split".into()));
    }
    let lat = mk.lat.clone();
    let mut values = vec![C64::new(0.0, 0.0); mk.values.len()];
    let mut tuple = vec![0usize; mk.args];
    for flat in 0..values.len() {
        mk.decode(flat, &mut tuple);
        if mk.conserves(&tuple) {
            values[flat] = mk.values[flat];
        }
    }
    for axis in 0..mk.args {
        axis_inverse(&lat, &mut values, mk.args, axis);
    }
    let v = lat.volume();
    // one conservation-delta volume factor survives the inversion
    for val in values.iter_mut() {
        *val *= v;
    }
    let mut out = Kernel::zero(lat, m, n, ArgSpace::Position)?;
    out.values_mut().copy_from_slice(&values);
    Ok(out)
}

/// Partial transform: the `m` external arguments go to momentum space.
pub fn partial_ft(f: &Kernel) -> Result<Kernel> {
    if f.space != ArgSpace::Position {
        return Err(Error::Precondition("partial_ft expects a position kernel".into()));
    }
    let mut values = f.values().to_vec();
    for axis in 0..f.m {
        axis_forward(&f.lat, &mut values, f.args(), axis);
    }
    let mut out = Kernel::zero(f.lat.clone(), f.m, f.n, ArgSpace::PartialMomentum)?;
    out.values_mut().copy_from_slice(&values);
    Ok(out)
}

pub fn partial_ft_inverse(f: &Kernel) -> Result<Kernel> {
    if f.space != ArgSpace::PartialMomentum {
        return Err(Error::Precondition("partial_ft_inverse expects momentum externals".into()));
    }
    let mut values = f.values().to_vec();
    for axis in 0..f.m {
        axis_inverse(&f.lat, &mut values, f.args(), axis);
    }
    let mut out = Kernel::zero(f.lat.clone(), f.m, f.n, ArgSpace::Position)?;
    out.values_mut().copy_from_slice(&values);
    Ok(out)
}

/// Report of the time-mean-zero convolution bound. The second branch
/// (the bound on the once-differenced convolution) carries an unquantified
/// prefactor, so only its observed constant is reported.
#[derive(Clone, Debug)]
pub struct K0BoundReport {
    pub lhs: DecaySeries,
    pub rhs: DecaySeries,
    pub pass: bool,
    pub max_violation: f64,
    /// Observed prefactor of the second branch: the componentwise ratio of
    /// the differenced-convolution norm to its structural bound.
    pub second_branch_const: f64,
}

/// Checks the convolution bound for a two-point kernel whose time marginal
/// vanishes: the decay norm of `hat chi o u` against
/// `||d chi'/dx0||_L1 * ||(time-difference) u||_(1,inf)`, with infinity at
/// all nonzero time orders on the right. The time derivative of `chi'` is
/// the antiperiodic forward difference, which is the discrete form for
/// which the telescoping argument behind the bound is exact.
pub fn k0_vanishing_bound_check(
    u: &BMatrix,
    chi: &Profile,
    shape: SeriesShape,
    slack: f64,
) -> Result<K0BoundReport> {
    let lat = u.lat.clone();
    // precondition: sum over t of u((t,y,sg,a),(0,0,sg',a')) dt = 0
    let origin_like: Vec<usize> = (0..lat.n_b)
        .filter(|&i| {
            let f = lat.coords(i);
            f.t == 0 && f.x.iter().all(|&c| c == 0)
        })
        .collect();
    for &xi2 in &origin_like {
        for ysp in 0..lat.n_sites_sp {
            let mut xcoords = vec![0usize; lat.spec.d];
            let mut rest = ysp;
            for c in (0..lat.spec.d).rev() {
                xcoords[c] = rest % lat.spec.lsp;
                rest /= lat.spec.lsp;
            }
            for sigma in 0..lat.n_spin {
                for a in 0..2 {
                    let mut acc = C64::new(0.0, 0.0);
                    for t in 0..lat.spec.l0 {
                        let xi1 = lat.index(&crate::lattice::FieldIndex {
                            t,
                            x: xcoords.clone(),
                            sigma,
                            a,
                        });
                        acc += u.get(xi1, xi2);
                    }
                    if (acc * lat.spec.dt).norm() > 1e-10 {
                        return Err(Error::Precondition(format!(
                            "time marginal of u does not vanish: |sum| = {:.3e}",
                            (acc * lat.spec.dt).norm()
                        )));
                    }
                }
            }
        }
    }

    let chat = multiplier_hat(&lat, chi);
    let g = chat.compose(u);
    let lhs = crate::norms::norm_1inf(&g.as_kernel(), shape)?;

    // forward-difference time derivative of chi' with antiperiodic wrap
    let chi_pos = profile_to_position(&lat, chi);
    let mut dchi = vec![C64::new(0.0, 0.0); lat.n_sites];
    for site in 0..lat.n_sites {
        let (t, x) = crate::model::site_coords(&lat, site);
        let (tn, sign) = if t + 1 == lat.spec.l0 {
            (0usize, -1.0)
        } else {
            (t + 1, 1.0)
        };
        let next = crate::model::site_index(&lat, tn, &x);
        dchi[site] = (chi_pos[next] * sign - chi_pos[site]) / lat.spec.dt;
    }
    let l1 = crate::norms::l1_decay_norm(&lat, &dchi, shape);

    // multiply u by the minimal-image time difference of its arguments
    let du = BMatrix::from_fn(lat.clone(), |i, j| {
        let fi = lat.coords(i);
        let fj = lat.coords(j);
        u.get(i, j) * lat.min_image_time(fi.t, fj.t)
    });
    let du_norm = crate::norms::norm_1inf(&du.as_kernel(), shape)?;

    let mut rhs = l1.mul(&du_norm)?;
    for delta in rhs.indices().to_vec() {
        if delta.time != 0 {
            rhs.set(&delta, Coeff::Infinite);
        }
    }
    let pass = lhs.leq_slack(&rhs, slack)?;
    let max_violation = lhs.max_violation(&rhs)?;
    Ok(K0BoundReport { lhs, rhs, pass, max_violation })
}
