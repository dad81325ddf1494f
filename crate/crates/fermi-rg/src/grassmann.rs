//! Exact finite-dimensional Grassmann algebra.
//!
//! Monomials are bitmasks over a global generator order; signs come from
//! transposition parity. Gaussian integration replaces generator subsets by
//! Pfaffians of covariance submatrices, so a singular covariance is allowed;
//! the Berezin route with an explicit `exp(-1/2 psi C^-1 psi)` weight exists
//! only as a test oracle.

use std::collections::{BTreeMap, HashMap};
use std::hash::{BuildHasher, Hasher};
use std::sync::Arc;

use crate::cmatrix::{CMatrix, CovarianceMatrix, C64};
use crate::error::{Error, Result};

pub const MAX_GENERATORS: usize = 64;

/// Deterministic hash state: float accumulation follows map iteration
/// order, so the polynomial maps must hash identically across runs.
#[derive(Clone, Copy, Debug, Default)]
pub struct DetState;

pub struct DetHasher(u64);

impl Hasher for DetHasher {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    fn write_u64(&mut self, x: u64) {
        let mut v = self.0 ^ x;
        v = v.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        v ^= v >> 32;
        self.0 = v;
    }
}

impl BuildHasher for DetState {
    type Hasher = DetHasher;
    fn build_hasher(&self) -> DetHasher {
        DetHasher(0xcbf2_9ce4_8422_2325)
    }
}

pub type TermMap = HashMap<u64, C64, DetState>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    pub name: String,
    pub count: usize,
    pub offset: usize,
}

/// Ordered set of named generator families with a fixed global order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorTable {
    families: Vec<Family>,
    total: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FamilyId(pub usize);

impl GeneratorTable {
    pub fn new(spec: &[(&str, usize)]) -> Result<Arc<Self>> {
        let mut families = Vec::new();
        let mut offset = 0;
        for (name, count) in spec {
            if families.iter().any(|f: &Family| f.name == *name) {
                return Err(Error::Domain(format!("duplicate family `{name}`")));
            }
            families.push(Family { name: (*name).into(), count: *count, offset });
            offset += count;
        }
        if offset > MAX_GENERATORS {
            return Err(Error::BudgetExceeded { needed: offset, cap: MAX_GENERATORS });
        }
        Ok(Arc::new(GeneratorTable { families, total: offset }))
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn family(&self, name: &str) -> Result<FamilyId> {
        self.families
            .iter()
            .position(|f| f.name == name)
            .map(FamilyId)
            .ok_or_else(|| Error::FamilyNotFound(name.into()))
    }

    pub fn family_info(&self, id: FamilyId) -> &Family {
        &self.families[id.0]
    }

    pub fn family_mask(&self, id: FamilyId) -> u64 {
        let f = &self.families[id.0];
        if f.count == 0 {
            return 0;
        }
        (((1u128 << f.count) - 1) << f.offset) as u64
    }

    pub fn generator_bit(&self, id: FamilyId, local: usize) -> u64 {
        let f = &self.families[id.0];
        assert!(local < f.count, "generator index out of family range");
        1u64 << (f.offset + local)
    }

    fn describe_bit(&self, bit: usize) -> String {
        for f in &self.families {
            if bit >= f.offset && bit < f.offset + f.count {
                return format!("{}[{}]", f.name, bit - f.offset);
            }
        }
        format!("?[{bit}]")
    }
}

/// Sign from merging the (disjoint, sorted) monomials `a` and `b` into one
/// sorted monomial: parity of the number of crossings.
fn merge_sign(a: u64, mut b: u64) -> f64 {
    let mut swaps = 0u32;
    while b != 0 {
        let i = b.trailing_zeros();
        swaps += (a >> (i + 1)).count_ones();
        b &= b - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Cap on a partial degree: only bits in `mask` count toward `limit`.
#[derive(Clone, Copy, Debug)]
pub struct DegreeCap {
    pub mask: u64,
    pub limit: usize,
}

impl DegreeCap {
    pub fn admits(&self, mono: u64) -> bool {
        (mono & self.mask).count_ones() as usize <= self.limit
    }
}

/// Sparse Grassmann polynomial over a shared generator table.
#[derive(Clone, Debug)]
pub struct GrassmannPolynomial {
    table: Arc<GeneratorTable>,
    terms: TermMap,
}

impl GrassmannPolynomial {
    pub fn zero(table: Arc<GeneratorTable>) -> Self {
        GrassmannPolynomial { table, terms: TermMap::default() }
    }

    pub fn scalar(table: Arc<GeneratorTable>, c: C64) -> Self {
        let mut p = Self::zero(table);
        if c != C64::new(0.0, 0.0) {
            p.terms.insert(0, c);
        }
        p
    }

    pub fn one(table: Arc<GeneratorTable>) -> Self {
        Self::scalar(table, C64::new(1.0, 0.0))
    }

    pub fn generator(table: Arc<GeneratorTable>, fam: FamilyId, local: usize) -> Self {
        let bit = table.generator_bit(fam, local);
        let mut p = Self::zero(table);
        p.terms.insert(bit, C64::new(1.0, 0.0));
        p
    }

    pub fn table(&self) -> &Arc<GeneratorTable> {
        &self.table
    }

    pub fn terms(&self) -> &TermMap {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, mono: u64) -> C64 {
        self.terms.get(&mono).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn constant_term(&self) -> C64 {
        self.coeff(0)
    }

    pub fn add_term(&mut self, mono: u64, c: C64) {
        let e = self.terms.entry(mono).or_insert(C64::new(0.0, 0.0));
        *e += c;
        if *e == C64::new(0.0, 0.0) {
            self.terms.remove(&mono);
        }
    }

    fn check_table(&self, other: &Self) -> Result<()> {
        if !Arc::ptr_eq(&self.table, &other.table) && self.table != other.table {
            return Err(Error::TableMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_table(other)?;
        let mut out = self.clone();
        for (&m, &c) in &other.terms {
            out.add_term(m, c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_table(other)?;
        let mut out = self.clone();
        for (&m, &c) in &other.terms {
            out.add_term(m, -c);
        }
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> Self {
        if s == C64::new(0.0, 0.0) {
            return Self::zero(self.table.clone());
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.terms
            .keys()
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    /// True if every monomial has even degree.
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|m| m.count_ones() % 2 == 0)
    }

    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for (&m, &c) in &self.terms {
            worst = worst.max((c - other.coeff(m)).norm());
        }
        for (&m, &c) in &other.terms {
            if !self.terms.contains_key(&m) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drop terms whose coefficient magnitude is below `eps` (exact zeros are
    /// always dropped by the arithmetic itself).
    pub fn cleaned(&self, eps: f64) -> Self {
        let mut out = Self::zero(self.table.clone());
        for (&m, &c) in &self.terms {
            if c.norm() > eps {
                out.terms.insert(m, c);
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_capped(other, None)
    }

    /// Product with an optional degree cap: output monomials whose masked
    /// degree exceeds the cap are discarded. Degrees add under the product,
    /// so a capped result agrees exactly with the capped exact product.
    pub fn mul_capped(&self, other: &Self, cap: Option<DegreeCap>) -> Result<Self> {
        self.check_table(other)?;
        let mut out = Self::zero(self.table.clone());
        if self.terms.is_empty() || other.terms.is_empty() {
            return Ok(out);
        }

        // block the right factor by (masked degree, total degree); ordered
        // maps keep the accumulation order reproducible
        let mut b_blocks: BTreeMap<(usize, usize), TermMap> = BTreeMap::new();
        let mut b_universe: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (&m, &c) in &other.terms {
            let md = cap.map_or(0, |cp| (m & cp.mask).count_ones() as usize);
            let td = m.count_ones() as usize;
            b_blocks.entry((md, td)).or_default().insert(m, c);
            *b_universe.entry((md, td)).or_default() |= m;
        }

        for (&ma, &ca) in &self.terms {
            let ma_masked = cap.map_or(0, |cp| (ma & cp.mask).count_ones() as usize);
            if let Some(cp) = cap {
                if ma_masked > cp.limit {
                    continue;
                }
            }
            for (&(md, td), block) in &b_blocks {
                if let Some(cp) = cap {
                    if ma_masked + md > cp.limit {
                        continue;
                    }
                }
                let universe = b_universe[&(md, td)];
                let free = universe & !ma;
                let free_bits = free.count_ones() as usize;
                // enumerate complement subsets when that is cheaper than the block
                let enum_cost = binomial(free_bits, td);
                if enum_cost < block.len() as u64 {
                    enumerate_subsets(free, td, &mut |mb| {
                        if let Some(&cb) = block.get(&mb) {
                            let sign = merge_sign(ma, mb);
                            out.add_term(ma | mb, ca * cb * sign);
                        }
                    });
                } else {
                    for (&mb, &cb) in block {
                        if ma & mb != 0 {
                            continue;
                        }
                        let sign = merge_sign(ma, mb);
                        out.add_term(ma | mb, ca * cb * sign);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Exponential: the constant part exponentiates numerically, the
    /// nilpotent part terminates at the generator count.
    pub fn exp(&self) -> Result<Self> {
        self.exp_capped(None)
    }

    pub fn exp_capped(&self, cap: Option<DegreeCap>) -> Result<Self> {
        let c = self.constant_term();
        let mut nil = self.clone();
        nil.terms.remove(&0);
        let mut acc = Self::one(self.table.clone());
        let mut power = Self::one(self.table.clone());
        for k in 1..=self.table.total() {
            power = power.mul_capped(&nil, cap)?;
            if power.is_zero() {
                break;
            }
            let fact: f64 = (1..=k).map(|v| v as f64).product();
            acc = acc.add(&power.scale(C64::new(1.0 / fact, 0.0)))?;
        }
        Ok(acc.scale(c.exp()))
    }

    /// Logarithm via the Mercator series on the nilpotent part; exact since
    /// the series terminates. Errors when the constant part vanishes.
    pub fn log(&self) -> Result<Self> {
        self.log_capped(None)
    }

    pub fn log_capped(&self, cap: Option<DegreeCap>) -> Result<Self> {
        let c = self.constant_term();
        if c.norm() < 1e-300 {
            return Err(Error::SingularLog(c.norm()));
        }
        let mut n = self.scale(1.0 / c);
        n.terms.remove(&0);
        let mut acc = Self::scalar(self.table.clone(), c.ln());
        let mut power = Self::one(self.table.clone());
        for k in 1..=self.table.total() {
            power = power.mul_capped(&n, cap)?;
            if power.is_zero() {
                break;
            }
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            acc = acc.add(&power.scale(C64::new(sign / k as f64, 0.0)))?;
        }
        Ok(acc)
    }

    /// Replace each generator in `map` by a polynomial (degree-1 substitutions
    /// keep the result well-defined); generators not in the map stay as they
    /// are. Keys are global bit positions.
    pub fn substitute(&self, map: &HashMap<u32, GrassmannPolynomial>) -> Result<Self> {
        let mut out = Self::zero(self.table.clone());
        for (&mono, &coeff) in &self.terms {
            let mut acc = Self::scalar(self.table.clone(), coeff);
            let mut rest = mono;
            while rest != 0 {
                let bit = rest.trailing_zeros();
                rest &= rest - 1;
                let factor = match map.get(&bit) {
                    Some(p) => p.clone(),
                    None => {
                        let mut g = Self::zero(self.table.clone());
                        g.terms.insert(1u64 << bit, C64::new(1.0, 0.0));
                        g
                    }
                };
                acc = acc.mul(&factor)?;
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }

    /// Set every generator of a family to zero (drop terms containing it).
    pub fn without_family(&self, fam: FamilyId) -> Self {
        let mask = self.table.family_mask(fam);
        let mut out = Self::zero(self.table.clone());
        for (&m, &c) in &self.terms {
            if m & mask == 0 {
                out.terms.insert(m, c);
            }
        }
        out
    }

    /// Degree in a given family of each term must be even for `true`.
    pub fn family_degree_range(&self, fam: FamilyId) -> (usize, usize) {
        let mask = self.table.family_mask(fam);
        let mut lo = usize::MAX;
        let mut hi = 0;
        for m in self.terms.keys() {
            let d = (m & mask).count_ones() as usize;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if lo == usize::MAX {
            lo = 0;
        }
        (lo, hi)
    }

    /// Keep only terms with the given degree in a family.
    pub fn family_degree_part(&self, fam: FamilyId, degree: usize) -> Self {
        let mask = self.table.family_mask(fam);
        let mut out = Self::zero(self.table.clone());
        for (&m, &c) in &self.terms {
            if (m & mask).count_ones() as usize == degree {
                out.terms.insert(m, c);
            }
        }
        out
    }

    /// Complex conjugate of all coefficients.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero(self.table.clone());
        for (&m, &c) in &self.terms {
            out.terms.insert(m, c.conj());
        }
        out
    }

    /// Debug dump: one line per term, `coefficient<TAB>generator-list`,
    /// sorted lexicographically by the generator list.
    pub fn dump(&self) -> String {
        let mut lines: Vec<(String, String)> = self
            .terms
            .iter()
            .map(|(&m, &c)| {
                let mut names = Vec::new();
                let mut rest = m;
                while rest != 0 {
                    let bit = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    names.push(self.table.describe_bit(bit));
                }
                let gens = if names.is_empty() { "1".to_string() } else { names.join(" ") };
                (gens, format!("{:+.12e}{:+.12e}i\t{}", c.re, c.im, names_or_one(&names)))
            })
            .collect();
        lines.sort();
        lines.into_iter().map(|(_, l)| l).collect::<Vec<_>>().join("\n")
    }
}

fn names_or_one(names: &[String]) -> String {
    if names.is_empty() {
        "1".to_string()
    } else {
        names.join(" ")
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u64) / (i as u64 + 1);
        if acc > 1 << 40 {
            return u64::MAX;
        }
    }
    acc
}

/// Call `f` on every subset of `mask` with exactly `k` bits.
fn enumerate_subsets(mask: u64, k: usize, f: &mut impl FnMut(u64)) {
    fn go(bits: &[u32], start: usize, k: usize, cur: u64, f: &mut impl FnMut(u64)) {
        if k == 0 {
            f(cur);
            return;
        }
        if bits.len() - start < k {
            return;
        }
        for i in start..=bits.len() - k {
            go(bits, i + 1, k - 1, cur | (1u64 << bits[i]), f);
        }
    }
    let mut bits = Vec::with_capacity(mask.count_ones() as usize);
    let mut rest = mask;
    while rest != 0 {
        bits.push(rest.trailing_zeros());
        rest &= rest - 1;
    }
    go(&bits, 0, k, 0, f);
}

/// Bilinear form `sum_{i,j} coeffs[i][j] a_i b_j` as a polynomial. The caller
/// folds any measure weights into `coeffs`. Families may coincide.
pub fn bilinear_form(
    table: &Arc<GeneratorTable>,
    fam_a: FamilyId,
    fam_b: FamilyId,
    coeffs: &CMatrix,
) -> Result<GrassmannPolynomial> {
    let na = table.family_info(fam_a).count;
    let nb = table.family_info(fam_b).count;
    if coeffs.dim != na || na != nb {
        return Err(Error::Domain(format!(
            "bilinear form dimension {} does not match families ({na}, {nb})",
            coeffs.dim
        )));
    }
    let mut out = GrassmannPolynomial::zero(table.clone());
    for i in 0..na {
        let ga = table.generator_bit(fam_a, i);
        for j in 0..nb {
            let gb = table.generator_bit(fam_b, j);
            let c = coeffs[(i, j)];
            if c == C64::new(0.0, 0.0) || ga == gb {
                continue;
            }
            let (mono, sign) = if ga < gb {
                (ga | gb, 1.0)
            } else {
                (ga | gb, -1.0)
            };
            out.add_term(mono, c * sign);
        }
    }
    Ok(out)
}

/// Integrate out one family against the Grassmann Gaussian measure with
/// covariance `cov`: each monomial's family part becomes the Pfaffian of the
/// matching covariance submatrix, spectators survive.
pub fn gaussian_integral(
    f: &GrassmannPolynomial,
    fam: FamilyId,
    cov: &CovarianceMatrix,
) -> Result<GrassmannPolynomial> {
    let table = f.table().clone();
    let info = table.family_info(fam).clone();
    if cov.dim() != info.count {
        return Err(Error::Domain(format!(
            "covariance dimension {} does not match family `{}` of size {}",
            cov.dim(),
            info.name,
            info.count
        )));
    }
    let fam_mask = table.family_mask(fam);
    let mut pf_cache: HashMap<u64, C64> = HashMap::new();
    let mut out = GrassmannPolynomial::zero(table.clone());

    for (&mono, &coeff) in f.terms() {
        let fpart = mono & fam_mask;
        let spect = mono & !fam_mask;
        if fpart.count_ones() % 2 == 1 {
            continue;
        }
        let pf = *pf_cache.entry(fpart).or_insert_with(|| {
            let mut idx = Vec::new();
            let mut rest = fpart;
            while rest != 0 {
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                idx.push(bit - info.offset);
            }
            crate::cmatrix::pfaffian(&cov.submatrix(&idx))
        });
        if pf == C64::new(0.0, 0.0) {
            continue;
        }
        // sign of factoring mono = sign * (spectators sorted)(family sorted):
        // each family bit hops over the spectators above it
        let mut swaps = 0u32;
        let mut rest = fpart;
        while rest != 0 {
            let bit = rest.trailing_zeros();
            rest &= rest - 1;
            swaps += (spect >> (bit + 1)).count_ones();
        }
        let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
        out.add_term(spect, coeff * pf * sign);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WickDirection {
    Forward,
    Inverse,
}

/// Wick ordering with respect to `cov` on one family: applies
/// `exp(-Delta_C)` (forward) or `exp(+Delta_C)` (inverse) where `Delta_C`
/// pairs family generators through the covariance.
pub fn wick_order(
    f: &GrassmannPolynomial,
    fam: FamilyId,
    cov: &CovarianceMatrix,
    dir: WickDirection,
) -> Result<GrassmannPolynomial> {
    let table = f.table().clone();
    let info = table.family_info(fam).clone();
    if cov.dim() != info.count {
        return Err(Error::Domain(format!(
            "covariance dimension {} does not match family `{}`",
            cov.dim(),
            info.name
        )));
    }
    let fam_mask = table.family_mask(fam);
    let sign: f64 = match dir {
        WickDirection::Forward => -1.0,
        WickDirection::Inverse => 1.0,
    };

    let contract_once = |p: &GrassmannPolynomial| -> GrassmannPolynomial {
        let mut out = GrassmannPolynomial::zero(table.clone());
        for (&mono, &coeff) in p.terms() {
            let fpart = mono & fam_mask;
            if fpart.count_ones() < 2 {
                continue;
            }
            let mut bits = Vec::new();
            let mut rest = fpart;
            while rest != 0 {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                bits.push(b);
            }
            for ai in 0..bits.len() {
                for bi in ai + 1..bits.len() {
                    let a = bits[ai];
                    let b = bits[bi];
                    let cval = cov.get(a - info.offset, b - info.offset);
                    if cval == C64::new(0.0, 0.0) {
                        continue;
                    }
                    // Delta = sum_{a<b} C(a,b) d_b d_a, derivative d_a first
                    let below_a = (mono & ((1u64 << a) - 1)).count_ones();
                    let m1 = mono & !(1u64 << a);
                    let below_b = (m1 & ((1u64 << b) - 1)).count_ones();
                    let m2 = m1 & !(1u64 << b);
                    let s = if (below_a + below_b) % 2 == 0 { 1.0 } else { -1.0 };
                    out.add_term(m2, coeff * cval * s);
                }
            }
        }
        out
    };

    let mut acc = f.clone();
    let mut power = f.clone();
    for k in 1..=table.total() / 2 + 1 {
        power = contract_once(&power);
        if power.is_zero() {
            break;
        }
        let fact: f64 = (1..=k).map(|v| v as f64).product();
        acc = acc.add(&power.scale(C64::new(sign.powi(k as i32) / fact, 0.0)))?;
    }
    Ok(acc)
}

/// Sampled lower estimate of the moment-growth quantity: the max over even
/// `m <= m_max` and index tuples of `|Pf(C restricted)|^(1/m)`. Exhaustive
/// over pairs at `m = 2`, seeded sampling above.
pub fn integral_bound_estimate(
    cov: &CovarianceMatrix,
    m_max: usize,
    samples: usize,
    rng: &mut impl rand::Rng,
) -> f64 {
    assert!(m_max >= 2 && m_max % 2 == 0, "m_max must be even and >= 2");
    let n = cov.dim();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            best = best.max(cov.get(i, j).norm().sqrt());
        }
    }
    let mut m = 4;
    while m <= m_max && m <= n {
        for _ in 0..samples {
            let mut idx: Vec<usize> = (0..n).collect();
            for k in 0..m {
                let pick = rng.gen_range(k..n);
                idx.swap(k, pick);
            }
            let mut tuple: Vec<usize> = idx[..m].to_vec();
            tuple.sort_unstable();
            let pf = crate::cmatrix::pfaffian(&cov.submatrix(&tuple));
            best = best.max(pf.norm().powf(1.0 / m as f64));
        }
        m += 2;
    }
    best
}
