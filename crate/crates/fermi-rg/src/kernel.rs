//! Coefficient kernels on tuples of base-space points, and measure-weighted
//! two-point operators.
//!
//! A [`Kernel`] holds a dense complex array over `(m, n)` argument tuples:
//! `m` external arguments (position, or momentum after a partial transform)
//! and `n` internal position arguments. A [`BMatrix`] is a two-point kernel
//! with the discrete measure folded into its operator algebra, used for the
//! particle/hole swap operator, covariances and momentum multipliers.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::cmatrix::{CMatrix, C64};
use crate::error::{Error, Result};
use crate::grassmann::{FamilyId, GeneratorTable, GrassmannPolynomial};
use crate::lattice::Lattice;

/// Complex momentum profile over the plain momentum modes of a lattice.
pub type Profile = Vec<C64>;
/// Real momentum profile (cutoffs, scale functions, dispersions).
pub type ScalarProfile = Vec<f64>;

const MAX_KERNEL_ENTRIES: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArgSpace {
    Position,
    PartialMomentum,
}

#[derive(Clone, Debug)]
pub struct Kernel {
    pub lat: Arc<Lattice>,
    pub m: usize,
    pub n: usize,
    pub space: ArgSpace,
    values: Vec<C64>,
}

impl Kernel {
    pub fn zero(lat: Arc<Lattice>, m: usize, n: usize, space: ArgSpace) -> Result<Self> {
        let args = m + n;
        let size = lat.n_b.checked_pow(args as u32).unwrap_or(usize::MAX);
        if size > MAX_KERNEL_ENTRIES {
            return Err(Error::BudgetExceeded { needed: size, cap: MAX_KERNEL_ENTRIES });
        }
        Ok(Kernel { lat, m, n, space, values: vec![C64::new(0.0, 0.0); size] })
    }

    pub fn from_fn(
        lat: Arc<Lattice>,
        m: usize,
        n: usize,
        space: ArgSpace,
        mut f: impl FnMut(&[usize]) -> C64,
    ) -> Result<Self> {
        let mut k = Self::zero(lat, m, n, space)?;
        let args = m + n;
        let mut tuple = vec![0usize; args];
        for flat in 0..k.values.len() {
            k.decode(flat, &mut tuple);
            k.values[flat] = f(&tuple);
        }
        Ok(k)
    }

    pub fn args(&self) -> usize {
        self.m + self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn encode(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.args());
        let mut flat = 0usize;
        for &t in tuple {
            debug_assert!(t < self.lat.n_b);
            flat = flat * self.lat.n_b + t;
        }
        flat
    }

    pub fn decode(&self, mut flat: usize, tuple: &mut [usize]) {
        for i in (0..self.args()).rev() {
            tuple[i] = flat % self.lat.n_b;
            flat /= self.lat.n_b;
        }
    }

    pub fn get(&self, tuple: &[usize]) -> C64 {
        self.values[self.encode(tuple)]
    }

    pub fn set(&mut self, tuple: &[usize], v: C64) {
        let i = self.encode(tuple);
        self.values[i] = v;
    }

    pub fn add_at(&mut self, tuple: &[usize], v: C64) {
        let i = self.encode(tuple);
        self.values[i] += v;
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
        Ok(out)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.m != other.m || self.n != other.n || self.lat.n_b != other.lat.n_b {
            return Err(Error::ShapeMismatch(format!(
                "kernel ({},{}) vs ({},{})",
                self.m, self.n, other.m, other.n
            )));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Shift every position argument by `(t0, tx)` lattice steps, with the
    /// antiperiodic time-wrap sign per argument. External momentum arguments
    /// of a partial transform are untouched.
    pub fn translate(&self, t0: isize, tx: &[isize]) -> Self {
        let mut out = self.clone();
        let args = self.args();
        let first_pos = match self.space {
            ArgSpace::Position => 0,
            ArgSpace::PartialMomentum => self.m,
        };
        let mut tuple = vec![0usize; args];
        for flat in 0..self.values.len() {
            self.decode(flat, &mut tuple);
            let mut sign = 1.0;
            let mut shifted = tuple.clone();
            for (i, slot) in shifted.iter_mut().enumerate() {
                if i >= first_pos {
                    let (ns, s) = self.lat.shift(*slot, t0, tx);
                    *slot = ns;
                    sign *= s;
                }
            }
            out.values[self.encode(&shifted)] = self.values[flat] * sign;
        }
        out
    }

    /// Max deviation from translation invariance over the generating shifts.
    /// For partial transforms the momentum-dependent character phase is
    /// divided out first.
    pub fn translation_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut shifts: Vec<(isize, Vec<isize>)> = vec![(1, vec![0; self.lat.spec.d])];
        for c in 0..self.lat.spec.d {
            let mut tx = vec![0isize; self.lat.spec.d];
            tx[c] = 1;
            shifts.push((0, tx));
        }
        for (t0, tx) in shifts {
            let translated = self.translate(t0, &tx);
            match self.space {
                ArgSpace::Position => worst = worst.max(self.max_abs_diff(&translated)),
                ArgSpace::PartialMomentum => {
                    let mut tuple = vec![0usize; self.args()];
                    for flat in 0..self.values.len() {
                        self.decode(flat, &mut tuple);
                        let mut phase = 0.0;
                        for &e in &tuple[..self.m] {
                            let mom = self.lat.momentum(e);
                            let mode = self.lat.mode_of(mom.n0, &mom.m);
                            let sign = if mom.a == 0 { 1.0 } else { -1.0 };
                            // <eta, t>_- with the (-1)^a from the character
                            let tx_usize: Vec<usize> =
                                tx.iter().map(|&v| v.rem_euclid(self.lat.spec.lsp as isize) as usize).collect();
                            let p = self
                                .lat
                                .pairing_minus(mode, t0.rem_euclid(self.lat.spec.l0 as isize) as usize, &tx_usize);
                            phase += sign * p;
                        }
                        let expect = self.values[flat] * C64::new(0.0, phase).exp();
                        worst = worst.max((translated.values[flat] - expect).norm());
                    }
                }
            }
        }
        worst
    }

    /// Antisymmetrize over the external arguments (signed average).
    pub fn ant_ext(&self) -> Self {
        self.antisymmetrize(0, self.m)
    }

    /// Antisymmetrize over the internal arguments (signed average).
    pub fn ant_int(&self) -> Self {
        self.antisymmetrize(self.m, self.n)
    }

    fn antisymmetrize(&self, start: usize, count: usize) -> Self {
        if count <= 1 {
            return self.clone();
        }
        let perms = permutations_signed(count);
        let norm = 1.0 / perms.len() as f64;
        let mut out = Self::zero(self.lat.clone(), self.m, self.n, self.space).unwrap();
        let args = self.args();
        let mut tuple = vec![0usize; args];
        let mut permuted = vec![0usize; args];
        for flat in 0..self.values.len() {
            self.decode(flat, &mut tuple);
            let mut acc = C64::new(0.0, 0.0);
            for (perm, sign) in &perms {
                permuted.copy_from_slice(&tuple);
                for (k, &p) in perm.iter().enumerate() {
                    permuted[start + k] = tuple[start + p];
                }
                acc += self.values[self.encode(&permuted)] * *sign;
            }
            out.values[flat] = acc * norm;
        }
        out
    }

    /// Tensor product: externals concatenated, internals concatenated.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.lat.n_b != other.lat.n_b {
            return Err(Error::ShapeMismatch("tensor on different lattices".into()));
        }
        let mut out = Self::zero(
            self.lat.clone(),
            self.m + other.m,
            self.n + other.n,
            self.space,
        )?;
        let mut tuple = vec![0usize; out.args()];
        let mut ta = vec![0usize; self.args()];
        let mut tb = vec![0usize; other.args()];
        for flat in 0..out.values.len() {
            out.decode(flat, &mut tuple);
            ta[..self.m].copy_from_slice(&tuple[..self.m]);
            tb[..other.m].copy_from_slice(&tuple[self.m..self.m + other.m]);
            ta[self.m..].copy_from_slice(&tuple[self.m + other.m..self.m + other.m + self.n]);
            tb[other.m..].copy_from_slice(&tuple[self.m + other.m + self.n..]);
            out.values[flat] = self.get(&ta) * other.get(&tb);
        }
        Ok(out)
    }

    /// Splice over one internal argument of each factor:
    /// `g = int dzeta f(...,zeta at mu,...) f'(...,zeta at nu,...)`.
    /// Slots are 1-based. External arguments concatenate.
    pub fn splice(&self, other: &Self, mu: usize, nu: usize) -> Result<Self> {
        if mu == 0 || mu > self.n || nu == 0 || nu > other.n {
            return Err(Error::IndexRange(format!("splice slots ({mu},{nu})")));
        }
        let w = self.lat.weight();
        let mut out = Self::zero(
            self.lat.clone(),
            self.m + other.m,
            self.n + other.n - 2,
            self.space,
        )?;
        let mut tuple = vec![0usize; out.args()];
        let mut ta = vec![0usize; self.args()];
        let mut tb = vec![0usize; other.args()];
        for flat in 0..out.values.len() {
            out.decode(flat, &mut tuple);
            let (ext, int) = tuple.split_at(self.m + other.m);
            let (int_a, int_b) = int.split_at(self.n - 1);
            let mut acc = C64::new(0.0, 0.0);
            for zeta in 0..self.lat.n_b {
                ta[..self.m].copy_from_slice(&ext[..self.m]);
                let mut p = self.m;
                for (k, &v) in int_a.iter().enumerate() {
                    if k + 1 == mu {
                        ta[p] = zeta;
                        p += 1;
                    }
                    ta[p] = v;
                    p += 1;
                }
                if mu == self.n {
                    ta[self.m + self.n - 1] = zeta;
                }
                tb[..other.m].copy_from_slice(&ext[self.m..]);
                let mut q = other.m;
                for (k, &v) in int_b.iter().enumerate() {
                    if k + 1 == nu {
                        tb[q] = zeta;
                        q += 1;
                    }
                    tb[q] = v;
                    q += 1;
                }
                if nu == other.n {
                    tb[other.m + other.n - 1] = zeta;
                }
                acc += self.get(&ta) * other.get(&tb);
            }
            out.values[flat] = acc * w;
        }
        Ok(out)
    }

    /// Contraction of two internal slots `1 <= i < j <= n` against an
    /// antisymmetric two-point kernel, with the prefactor `(-1)^(j-i+1)`:
    /// `(Con f)(...) = (-1)^(j-i+1) int dxi_i dxi_j C(xi_i, xi_j) f(...)`.
    pub fn contract(&self, i: usize, j: usize, c: &BMatrix) -> Result<Self> {
        if i == 0 || j <= i || j > self.n {
            return Err(Error::IndexRange(format!("contract slots ({i},{j}) with n={}", self.n)));
        }
        let w = self.lat.weight();
        let pref = if (j - i + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let mut out = Self::zero(self.lat.clone(), self.m, self.n - 2, self.space)?;
        let mut tuple = vec![0usize; out.args()];
        let mut tf = vec![0usize; self.args()];
        for flat in 0..out.values.len() {
            out.decode(flat, &mut tuple);
            let mut acc = C64::new(0.0, 0.0);
            for xi in 0..self.lat.n_b {
                for xj in 0..self.lat.n_b {
                    let cv = c.get(xi, xj);
                    if cv == C64::new(0.0, 0.0) {
                        continue;
                    }
                    // rebuild the full internal tuple with xi at slot i, xj at slot j
                    tf[..self.m].copy_from_slice(&tuple[..self.m]);
                    let mut p = self.m;
                    let mut rem = tuple[self.m..].iter();
                    for slot in 1..=self.n {
                        tf[p] = if slot == i {
                            xi
                        } else if slot == j {
                            xj
                        } else {
                            *rem.next().unwrap()
                        };
                        p += 1;
                    }
                    acc += cv * self.get(&tf);
                }
            }
            out.values[flat] = acc * w * w * pref;
        }
        Ok(out)
    }
}

pub fn permutations_signed(count: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..count).collect();
    fn go(k: usize, perm: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, f64)>) {
        if k == perm.len() {
            let mut inv = 0;
            for i in 0..perm.len() {
                for j in i + 1..perm.len() {
                    if perm[i] > perm[j] {
                        inv += 1;
                    }
                }
            }
            out.push((perm.clone(), if inv % 2 == 0 { 1.0 } else { -1.0 }));
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            go(k + 1, perm, out);
            perm.swap(k, i);
        }
    }
    go(0, &mut perm, &mut out);
    out
}

/// Two-point kernel on the base space with measure-weighted operator algebra.
#[derive(Clone, Debug)]
pub struct BMatrix {
    pub lat: Arc<Lattice>,
    pub mat: CMatrix,
}

impl BMatrix {
    pub fn zero(lat: Arc<Lattice>) -> Self {
        let mat = CMatrix::zero(lat.n_b);
        BMatrix { lat, mat }
    }

    pub fn from_fn(lat: Arc<Lattice>, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mat = CMatrix::from_fn(lat.n_b, |i, j| f(i, j));
        BMatrix { lat, mat }
    }

    /// Lattice delta: the identity of the operator algebra.
    pub fn identity(lat: Arc<Lattice>) -> Self {
        let dv = lat.delta_value();
        Self::from_fn(lat.clone(), |i, j| {
            if i == j {
                C64::new(dv, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.mat[(i, j)] = v;
    }

    /// `(A o B)(xi, xi') = int dzeta A(xi, zeta) B(zeta, xi')`.
    pub fn compose(&self, other: &Self) -> Self {
        let w = self.lat.weight();
        BMatrix {
            lat: self.lat.clone(),
            mat: self.mat.matmul(&other.mat).scale(C64::new(w, 0.0)),
        }
    }

    /// `(B v)(xi) = int dxi' B(xi, xi') v(xi')`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let w = self.lat.weight();
        (0..self.lat.n_b)
            .map(|i| {
                let mut acc = C64::new(0.0, 0.0);
                for (j, x) in v.iter().enumerate() {
                    acc += self.mat[(i, j)] * x;
                }
                acc * w
            })
            .collect()
    }

    /// `int int u(xi) B(xi,xi') v(xi')`.
    pub fn bilinear(&self, u: &[C64], v: &[C64]) -> C64 {
        let w = self.lat.weight();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.lat.n_b {
            for j in 0..self.lat.n_b {
                acc += u[i] * self.mat[(i, j)] * v[j];
            }
        }
        acc * w * w
    }

    pub fn add(&self, other: &Self) -> Self {
        BMatrix { lat: self.lat.clone(), mat: self.mat.add(&other.mat) }
    }

    pub fn scale(&self, s: C64) -> Self {
        BMatrix { lat: self.lat.clone(), mat: self.mat.scale(s) }
    }

    pub fn transpose_neg(&self) -> Self {
        BMatrix {
            lat: self.lat.clone(),
            mat: self.mat.transpose().scale(C64::new(-1.0, 0.0)),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.lat.n_b {
            for j in 0..self.lat.n_b {
                worst = worst.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        worst
    }

    /// Operator-normalized matrix `w * B`, in which composition is plain
    /// matrix multiplication and the lattice delta is the identity.
    pub fn op_matrix(&self) -> CMatrix {
        self.mat.scale(C64::new(self.lat.weight(), 0.0))
    }

    pub fn from_op_matrix(lat: Arc<Lattice>, op: CMatrix) -> Self {
        let w = lat.weight();
        BMatrix { lat, mat: op.scale(C64::new(1.0 / w, 0.0)) }
    }

    pub fn antisymmetry_defect(&self) -> f64 {
        self.mat.antisymmetry_defect()
    }

    pub fn as_kernel(&self) -> Kernel {
        let mut k = Kernel::zero(self.lat.clone(), 0, 2, ArgSpace::Position).unwrap();
        for i in 0..self.lat.n_b {
            for j in 0..self.lat.n_b {
                k.set(&[i, j], self.mat[(i, j)]);
            }
        }
        k
    }

    pub fn from_kernel(k: &Kernel) -> Result<Self> {
        if k.m + k.n != 2 {
            return Err(Error::ShapeMismatch("two-point kernel required".into()));
        }
        let mut b = Self::zero(k.lat.clone());
        for i in 0..k.lat.n_b {
            for j in 0..k.lat.n_b {
                b.mat[(i, j)] = k.get(&[i, j]);
            }
        }
        Ok(b)
    }
}

/// Build the Grassmann polynomial `sum over increasing tuples
/// m! n! w^(m+n) W(I,J) ext_I int_J` representing
/// `int W(eta's; xi's) prod ext prod int`. The kernel must be in position
/// space; `fam_ext` generators must precede `fam_int` in the table.
pub fn poly_from_kernel(
    k: &Kernel,
    table: &Arc<GeneratorTable>,
    fam_ext: FamilyId,
    fam_int: FamilyId,
) -> Result<GrassmannPolynomial> {
    let n_b = k.lat.n_b;
    if table.family_info(fam_ext).count != n_b || table.family_info(fam_int).count != n_b {
        return Err(Error::Domain("family size must match base-space size".into()));
    }
    let w = k.lat.weight();
    let scale = factorial(k.m) * factorial(k.n) * w.powi((k.m + k.n) as i32);
    let mut out = GrassmannPolynomial::zero(table.clone());
    let mut tuple = vec![0usize; k.args()];
    for flat in 0..k.len() {
        let v = k.values()[flat];
        if v == C64::new(0.0, 0.0) {
            continue;
        }
        k.decode(flat, &mut tuple);
        if !strictly_increasing(&tuple[..k.m]) || !strictly_increasing(&tuple[k.m..]) {
            continue;
        }
        let mut mono = 0u64;
        for &e in &tuple[..k.m] {
            mono |= table.generator_bit(fam_ext, e);
        }
        for &i in &tuple[k.m..] {
            mono |= table.generator_bit(fam_int, i);
        }
        out.add_term(mono, v * scale);
    }
    Ok(out)
}

fn strictly_increasing(t: &[usize]) -> bool {
    t.windows(2).all(|p| p[0] < p[1])
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Extract the antisymmetric coefficient kernels of a Grassmann polynomial,
/// one per (external degree, internal degree) pair.
/// Requires `fam_ext` to precede `fam_int` in the table's global order.
pub fn kernels_from_poly(
    gp: &GrassmannPolynomial,
    lat: &Arc<Lattice>,
    fam_ext: FamilyId,
    fam_int: FamilyId,
) -> Result<BTreeMap<(usize, usize), Kernel>> {
    let table = gp.table();
    let ext_info = table.family_info(fam_ext).clone();
    let int_info = table.family_info(fam_int).clone();
    if ext_info.count != lat.n_b || int_info.count != lat.n_b {
        return Err(Error::Domain("family size must match base-space size".into()));
    }
    if ext_info.offset > int_info.offset {
        return Err(Error::Domain("external family must precede internal family".into()));
    }
    let ext_mask = table.family_mask(fam_ext);
    let int_mask = table.family_mask(fam_int);
    let w = lat.weight();
    let mut out: BTreeMap<(usize, usize), Kernel> = BTreeMap::new();

    for (&mono, &coeff) in gp.terms() {
        if mono & !(ext_mask | int_mask) != 0 {
            return Err(Error::Domain(
                "polynomial contains generators outside the two families".into(),
            ));
        }
        let epart = mono & ext_mask;
        let ipart = mono & int_mask;
        let m = epart.count_ones() as usize;
        let n = ipart.count_ones() as usize;
        let mut ext_idx = bits_to_locals(epart, ext_info.offset);
        let mut int_idx = bits_to_locals(ipart, int_info.offset);
        let base = coeff / (factorial(m) * factorial(n) * w.powi((m + n) as i32));
        let kernel = match out.entry((m, n)) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(Kernel::zero(lat.clone(), m, n, ArgSpace::Position)?)
            }
        };
        // fill the full antisymmetric orbit
        let eperms = permutations_signed(m.max(1));
        let iperms = permutations_signed(n.max(1));
        let ext0 = ext_idx.clone();
        let int0 = int_idx.clone();
        for (pe, se) in &eperms {
            for (pi, si) in &iperms {
                for (k, &p) in pe.iter().enumerate() {
                    if m > 0 {
                        ext_idx[k] = ext0[p];
                    }
                }
                for (k, &p) in pi.iter().enumerate() {
                    if n > 0 {
                        int_idx[k] = int0[p];
                    }
                }
                let tuple: Vec<usize> = ext_idx.iter().chain(int_idx.iter()).copied().collect();
                kernel.add_at(&tuple, base * se * si);
            }
        }
    }
    Ok(out)
}

fn bits_to_locals(mut mask: u64, offset: usize) -> Vec<usize> {
    let mut out = Vec::new();
    while mask != 0 {
        let bit = mask.trailing_zeros() as usize;
        mask &= mask - 1;
        out.push(bit - offset);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use crate::rng::{random_c64, rng_from};

    fn small_lat() -> Arc<Lattice> {
        Lattice::new(LatticeSpec { d: 1, l0: 2, lsp: 2, dt: 1.0, dx: 1.0, spin: false }).unwrap()
    }

    fn random_kernel(lat: &Arc<Lattice>, m: usize, n: usize, seed: u64) -> Kernel {
        let mut rng = rng_from(seed, "kernel", 0);
        Kernel::from_fn(lat.clone(), m, n, ArgSpace::Position, |_| random_c64(&mut rng)).unwrap()
    }

    #[test]
    fn ant_ext_idempotent_and_kills_symmetric() {
        let lat = small_lat();
        let f = random_kernel(&lat, 3, 0, 1);
        let a = f.ant_ext();
        assert!(a.max_abs_diff(&a.ant_ext()) < 1e-13);

        // explicit 6-permutation signed average oracle
        let mut oracle = Kernel::zero(lat.clone(), 3, 0, ArgSpace::Position).unwrap();
        let perms = permutations_signed(3);
        let mut tuple = [0usize; 3];
        for flat in 0..oracle.len() {
            oracle.decode(flat, &mut tuple);
            let mut acc = C64::new(0.0, 0.0);
            for (p, s) in &perms {
                let permuted = [tuple[p[0]], tuple[p[1]], tuple[p[2]]];
                acc += f.get(&permuted) * *s;
            }
            oracle.values_mut()[flat] = acc / 6.0;
        }
        assert!(a.max_abs_diff(&oracle) < 1e-13);

        // symmetric two-argument kernel antisymmetrizes to zero
        let sym = Kernel::from_fn(lat.clone(), 2, 0, ArgSpace::Position, |t| {
            C64::new((t[0] + t[1]) as f64, 0.0)
        })
        .unwrap();
        assert!(sym.ant_ext().max_abs() < 1e-13);

        // already antisymmetric kernels pass through
        let anti = random_kernel(&lat, 2, 0, 7).ant_ext();
        assert!(anti.ant_ext().max_abs_diff(&anti) < 1e-13);
    }

    #[test]
    fn contract_matches_nested_loop_oracle() {
        let lat = small_lat();
        let f = random_kernel(&lat, 0, 3, 3);
        let mut rng = rng_from(4, "cmat", 0);
        let mut c = BMatrix::zero(lat.clone());
        for i in 0..lat.n_b {
            for j in i + 1..lat.n_b {
                let z = random_c64(&mut rng);
                c.set(i, j, z);
                c.set(j, i, -z);
            }
        }
        let g = f.contract(1, 3, &c).unwrap();
        let w = lat.weight();
        // direct double sum, slot 1 and slot 3 integrated, prefactor (-1)^(3-1+1)
        for mid in 0..lat.n_b {
            let mut acc = C64::new(0.0, 0.0);
            for xi in 0..lat.n_b {
                for xj in 0..lat.n_b {
                    acc += c.get(xi, xj) * f.get(&[xi, mid, xj]);
                }
            }
            acc *= -w * w;
            assert!((g.get(&[mid]) - acc).norm() < 1e-12);
        }

        // symmetric f in the contracted pair against antisymmetric C gives zero
        let fsym = Kernel::from_fn(lat.clone(), 0, 2, ArgSpace::Position, |t| {
            C64::new((t[0] * t[1]) as f64, 0.2)
        })
        .unwrap();
        let z = fsym.contract(1, 2, &c).unwrap();
        assert!(z.max_abs() < 1e-11);
    }

    #[test]
    fn contract_adjacency_sign() {
        // bringing slots together with an explicit permutation reproduces
        // the (-1)^(j-i+1) prefactor
        let lat = small_lat();
        let f = random_kernel(&lat, 0, 3, 5);
        let mut rng = rng_from(6, "cmat2", 0);
        let mut c = BMatrix::zero(lat.clone());
        for i in 0..lat.n_b {
            for j in i + 1..lat.n_b {
                let z = random_c64(&mut rng);
                c.set(i, j, z);
                c.set(j, i, -z);
            }
        }
        let direct = f.contract(1, 3, &c).unwrap();
        // move slot 3 next to slot 1: (xi1, xi2, xi3) -> (xi1, xi3, xi2) is one
        // transposition of Grassmann arguments, so the kernel flips sign
        let swapped = Kernel::from_fn(lat.clone(), 0, 3, ArgSpace::Position, |t| {
            -f.get(&[t[0], t[2], t[1]])
        })
        .unwrap();
        let adjacent = swapped.contract(1, 2, &c).unwrap();
        assert!(direct.max_abs_diff(&adjacent) < 1e-12);
    }

    #[test]
    fn splice_matches_direct_sum() {
        let lat = small_lat();
        let f = random_kernel(&lat, 1, 2, 8);
        let g = random_kernel(&lat, 1, 1, 9);
        let s = f.splice(&g, 2, 1).unwrap();
        assert_eq!((s.m, s.n), (2, 1));
        let w = lat.weight();
        for e1 in 0..lat.n_b {
            for e2 in 0..lat.n_b {
                for x1 in 0..lat.n_b {
                    let mut acc = C64::new(0.0, 0.0);
                    for z in 0..lat.n_b {
                        acc += f.get(&[e1, x1, z]) * g.get(&[e2, z]);
                    }
                    acc *= w;
                    assert!((s.get(&[e1, e2, x1]) - acc).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn poly_kernel_roundtrip() {
        let lat = small_lat();
        let table = GeneratorTable::new(&[("phi", lat.n_b), ("psi", lat.n_b)]).unwrap();
        let fe = table.family("phi").unwrap();
        let fi = table.family("psi").unwrap();
        let f = random_kernel(&lat, 1, 2, 11).ant_int();
        let gp = poly_from_kernel(&f, &table, fe, fi).unwrap();
        let back = kernels_from_poly(&gp, &lat, fe, fi).unwrap();
        let k12 = &back[&(1, 2)];
        assert!(k12.max_abs_diff(&f) < 1e-11);
    }

    #[test]
    fn bmatrix_operator_algebra() {
        let lat = small_lat();
        let id = BMatrix::identity(lat.clone());
        let mut rng = rng_from(12, "bmat", 0);
        let b = BMatrix::from_fn(lat.clone(), |_, _| random_c64(&mut rng));
        let left = id.compose(&b);
        assert!(left.max_abs_diff(&b) < 1e-12);
        let right = b.compose(&id);
        assert!(right.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn translate_is_signed_shift() {
        let lat = small_lat();
        let f = random_kernel(&lat, 0, 2, 13);
        let t = f.translate(0, &[0]);
        assert!(t.max_abs_diff(&f) < 1e-15);
        // full-period time shift: each of the two arguments wraps once
        let full = f.translate(lat.spec.l0 as isize, &[0]);
        assert!(full.max_abs_diff(&f) < 1e-12);
    }
}
