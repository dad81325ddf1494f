//! Saturating formal power series in the decay variables `t^delta`.
//!
//! A [`DecaySeries`] tracks one extended nonnegative coefficient per
//! multi-index `delta = (delta0, dvec)` with `delta0 <= r0` and
//! `|dvec| <= r`; every index outside that window is implicitly infinite.
//! Infinity absorbs under addition and under multiplication by anything
//! nonzero, while `0 * inf = 0` by rule. All norm bookkeeping in this
//! crate lives in this semiring.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent of a decay variable: time order plus spatial orders.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    pub time: usize,
    pub spatial: Vec<usize>,
}

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex { time: 0, spatial: vec![0; d] }
    }

    /// Total spatial order `|dvec|`.
    pub fn spatial_order(&self) -> usize {
        self.spatial.iter().sum()
    }

    pub fn total_order(&self) -> usize {
        self.time + self.spatial_order()
    }

    /// `delta!` = product of factorials of all entries.
    pub fn factorial(&self) -> f64 {
        fn fact(n: usize) -> f64 {
            (1..=n).map(|k| k as f64).product()
        }
        fact(self.time) * self.spatial.iter().map(|&s| fact(s)).product::<f64>()
    }

    pub fn is_zero(&self) -> bool {
        self.time == 0 && self.spatial.iter().all(|&s| s == 0)
    }

    fn checked_add(&self, other: &Self) -> Self {
        let spatial = self
            .spatial
            .iter()
            .zip(&other.spatial)
            .map(|(a, b)| a + b)
            .collect();
        MultiIndex { time: self.time + other.time, spatial }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.time)?;
        for s in &self.spatial {
            write!(f, ",{s}")?;
        }
        write!(f, ")")
    }
}

/// Extended nonnegative coefficient. Infinity is a tagged value so that
/// `0 * inf = 0` is enforced by rule rather than by float semantics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Coeff {
    Finite(f64),
    Infinite,
}

impl Coeff {
    pub const ZERO: Coeff = Coeff::Finite(0.0);

    pub fn finite(self) -> Option<f64> {
        match self {
            Coeff::Finite(x) => Some(x),
            Coeff::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Coeff::Infinite)
    }

    pub fn add(self, other: Coeff) -> Coeff {
        match (self, other) {
            (Coeff::Finite(a), Coeff::Finite(b)) => Coeff::Finite(a + b),
            _ => Coeff::Infinite,
        }
    }

    pub fn mul(self, other: Coeff) -> Coeff {
        match (self, other) {
            (Coeff::Finite(a), Coeff::Finite(b)) => Coeff::Finite(a * b),
            (Coeff::Finite(a), Coeff::Infinite) | (Coeff::Infinite, Coeff::Finite(a)) => {
                if a == 0.0 {
                    Coeff::ZERO
                } else {
                    Coeff::Infinite
                }
            }
            (Coeff::Infinite, Coeff::Infinite) => Coeff::Infinite,
        }
    }

    /// `self <= other` with infinity as top element, within `slack` on
    /// finite comparisons.
    pub fn leq(self, other: Coeff, slack: f64) -> bool {
        match (self, other) {
            (_, Coeff::Infinite) => true,
            (Coeff::Infinite, Coeff::Finite(_)) => false,
            (Coeff::Finite(a), Coeff::Finite(b)) => a <= b + slack,
        }
    }
}

/// Truncation window shared by all series in one computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesShape {
    pub d: usize,
    pub r0: usize,
    pub r: usize,
}

impl SeriesShape {
    pub fn new(d: usize, r0: usize, r: usize) -> Self {
        SeriesShape { d, r0, r }
    }

    /// All tracked multi-indices in graded lexicographic order. The window
    /// is inclusive: `delta0 <= r0` and `|dvec| <= r`.
    pub fn indices(&self) -> Vec<MultiIndex> {
        let mut spatial = vec![vec![0usize; self.d]];
        // enumerate spatial multi-indices with |dvec| <= r
        fn extend(cur: Vec<usize>, pos: usize, budget: usize, out: &mut Vec<Vec<usize>>) {
            if pos == cur.len() {
                out.push(cur);
                return;
            }
            for v in 0..=budget {
                let mut next = cur.clone();
                next[pos] = v;
                extend(next, pos + 1, budget - v, out);
            }
        }
        if self.d > 0 {
            spatial.clear();
            extend(vec![0; self.d], 0, self.r, &mut spatial);
        }
        spatial.sort_by_key(|s| (s.iter().sum::<usize>(), s.clone()));
        let mut out = Vec::new();
        for t in 0..=self.r0 {
            for s in &spatial {
                out.push(MultiIndex { time: t, spatial: s.clone() });
            }
        }
        out.sort_by_key(|m| (m.total_order(), m.time, m.spatial.clone()));
        out
    }

    pub fn contains(&self, m: &MultiIndex) -> bool {
        m.spatial.len() == self.d && m.time <= self.r0 && m.spatial_order() <= self.r
    }
}

/// Element of the saturating semiring: a truncated map from multi-indices
/// to extended nonnegative coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    shape: SeriesShape,
    indices: Vec<MultiIndex>,
    coeffs: Vec<Coeff>,
}

impl DecaySeries {
    pub fn zero(shape: SeriesShape) -> Self {
        let indices = shape.indices();
        let coeffs = vec![Coeff::ZERO; indices.len()];
        DecaySeries { shape, indices, coeffs }
    }

    /// The series with coefficient 1 at every tracked index (and, as for
    /// every series here, infinity beyond the window).
    pub fn all_ones(shape: SeriesShape) -> Self {
        let mut s = Self::zero(shape);
        for c in &mut s.coeffs {
            *c = Coeff::Finite(1.0);
        }
        s
    }

    /// Constant series `x * t^0`.
    pub fn constant(shape: SeriesShape, x: f64) -> Self {
        let mut s = Self::zero(shape);
        s.coeffs[0] = Coeff::Finite(x);
        s
    }

    /// Monomial `c * t^delta`; errors if `delta` is outside the window.
    pub fn monomial(shape: SeriesShape, delta: &MultiIndex, c: Coeff) -> Result<Self> {
        if !shape.contains(delta) {
            return Err(Error::ShapeMismatch(format!(
                "index {delta} outside truncation (r0={}, r={})",
                shape.r0, shape.r
            )));
        }
        let mut s = Self::zero(shape);
        let pos = s.position(delta).expect("tracked index");
        s.coeffs[pos] = c;
        Ok(s)
    }

    pub fn shape(&self) -> SeriesShape {
        self.shape
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    fn position(&self, delta: &MultiIndex) -> Option<usize> {
        self.indices.iter().position(|m| m == delta)
    }

    pub fn coeff(&self, delta: &MultiIndex) -> Coeff {
        match self.position(delta) {
            Some(p) => self.coeffs[p],
            None => Coeff::Infinite,
        }
    }

    pub fn set(&mut self, delta: &MultiIndex, c: Coeff) {
        if let Some(p) = self.position(delta) {
            self.coeffs[p] = c;
        }
    }

    /// Constant coefficient (at `delta = 0`).
    pub fn constant_coeff(&self) -> Coeff {
        self.coeffs[0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, Coeff)> {
        self.indices.iter().zip(self.coeffs.iter().copied())
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    /// Componentwise sum with saturation.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(*b))
            .collect();
        Ok(DecaySeries { shape: self.shape, indices: self.indices.clone(), coeffs })
    }

    /// Truncated Cauchy product. Because the window is downward closed,
    /// every tracked output index only involves tracked input indices.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = Self::zero(self.shape);
        for (i, di) in self.indices.iter().enumerate() {
            for (j, dj) in other.indices.iter().enumerate() {
                let sum = di.checked_add(dj);
                if let Some(p) = out.position(&sum) {
                    let term = self.coeffs[i].mul(other.coeffs[j]);
                    out.coeffs[p] = out.coeffs[p].add(term);
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, x: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.mul(Coeff::Finite(x)))
            .collect();
        DecaySeries { shape: self.shape, indices: self.indices.clone(), coeffs }
    }

    /// Componentwise maximum (used by sup-style norms).
    pub fn max(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| match (a, b) {
                (Coeff::Finite(x), Coeff::Finite(y)) => Coeff::Finite(x.max(*y)),
                _ => Coeff::Infinite,
            })
            .collect();
        Ok(DecaySeries { shape: self.shape, indices: self.indices.clone(), coeffs })
    }

    /// Solve `E = c0 + X * E` degree by degree; requires `X_0 < 1`.
    /// With `c0` the all-ones series this is the geometric series
    /// `c0 / (1 - X)`.
    pub fn geometric(c0: &Self, x: &Self) -> Result<Self> {
        c0.check_shape(x)?;
        let x0 = match x.constant_coeff() {
            Coeff::Finite(v) => v,
            Coeff::Infinite => {
                return Err(Error::Domain("geometric: X_0 is infinite".into()));
            }
        };
        if x0 >= 1.0 {
            return Err(Error::Domain(format!("geometric: X_0 = {x0} >= 1")));
        }
        let mut e = Self::zero(c0.shape);
        // indices() is graded, so every delta' = delta - alpha with alpha != 0
        // appears earlier in the list.
        for (p, delta) in e.indices.clone().iter().enumerate() {
            let mut rhs = c0.coeffs[p];
            for (q, alpha) in x.indices.iter().enumerate() {
                if alpha.is_zero() {
                    continue;
                }
                // delta - alpha must be a valid multi-index
                if alpha.time > delta.time
                    || alpha
                        .spatial
                        .iter()
                        .zip(&delta.spatial)
                        .any(|(a, d)| a > d)
                {
                    continue;
                }
                let rem = MultiIndex {
                    time: delta.time - alpha.time,
                    spatial: delta
                        .spatial
                        .iter()
                        .zip(&alpha.spatial)
                        .map(|(d, a)| d - a)
                        .collect(),
                };
                let rp = e.position(&rem).expect("graded order");
                rhs = rhs.add(x.coeffs[q].mul(e.coeffs[rp]));
            }
            e.coeffs[p] = match rhs {
                Coeff::Finite(v) => Coeff::Finite(v / (1.0 - x0)),
                Coeff::Infinite => Coeff::Infinite,
            };
        }
        Ok(e)
    }

    /// Componentwise `<=` with infinity as top element and `slack`
    /// tolerance on finite comparisons.
    pub fn leq_slack(&self, other: &Self, slack: f64) -> Result<bool> {
        self.check_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .all(|(a, b)| a.leq(*b, slack)))
    }

    pub fn leq(&self, other: &Self) -> Result<bool> {
        self.leq_slack(other, 0.0)
    }

    /// Worst finite violation of `self <= other`; infinite violations are
    /// reported as `f64::INFINITY`.
    pub fn max_violation(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        let mut worst: f64 = 0.0;
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            match (a, b) {
                (_, Coeff::Infinite) => {}
                (Coeff::Infinite, Coeff::Finite(_)) => return Ok(f64::INFINITY),
                (Coeff::Finite(x), Coeff::Finite(y)) => worst = worst.max(x - y),
            }
        }
        Ok(worst)
    }

    /// Max absolute difference over finite coefficients; infinite where they
    /// disagree on finiteness.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        let mut worst: f64 = 0.0;
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            match (a, b) {
                (Coeff::Infinite, Coeff::Infinite) => {}
                (Coeff::Finite(x), Coeff::Finite(y)) => worst = worst.max((x - y).abs()),
                _ => return Ok(f64::INFINITY),
            }
        }
        Ok(worst)
    }

    /// Flat record list used in report output.
    pub fn records(&self) -> Vec<(usize, Vec<usize>, String)> {
        self.iter()
            .map(|(m, c)| {
                let v = match c {
                    Coeff::Finite(x) => format!("{x:.16e}"),
                    Coeff::Infinite => "inf".to_string(),
                };
                (m.time, m.spatial.clone(), v)
            })
            .collect()
    }
}

impl fmt::Display for DecaySeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, c) in self.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match c {
                Coeff::Finite(x) => write!(f, "{x:.6e} t^{m}")?,
                Coeff::Infinite => write!(f, "inf t^{m}")?,
            }
        }
        Ok(())
    }
}

/// Weight system `rho_{m;n}` for the aggregate norms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Rho {
    /// All weights 1.
    Ones,
    /// Coupling-constant scheme: `lambda^{-(1-upsilon)(m+n-2)/2}` for
    /// `m+n >= 4` and `lambda^{-(1-upsilon)}` for `m+n = 2`. Odd totals,
    /// which never occur for even Grassmann functions, take the value of
    /// the next even total so the monotonicity hypotheses hold throughout.
    Lambda { lambda: f64, upsilon: f64 },
    /// Lambda scheme damped by `eps_prime^m`, used with the amputated norms.
    LambdaExternal { lambda: f64, upsilon: f64, eps_prime: f64 },
    /// Explicit table, keyed by (m, n).
    Table(Vec<((usize, usize), f64)>),
}

impl Rho {
    pub fn get(&self, m: usize, n: usize) -> f64 {
        match self {
            Rho::Ones => 1.0,
            Rho::Lambda { lambda, upsilon } => lambda_scheme(*lambda, *upsilon, m + n),
            Rho::LambdaExternal { lambda, upsilon, eps_prime } => {
                eps_prime.powi(m as i32) * lambda_scheme(*lambda, *upsilon, m + n)
            }
            Rho::Table(t) => t
                .iter()
                .find(|((tm, tn), _)| *tm == m && *tn == n)
                .map(|(_, v)| *v)
                .unwrap_or(1.0),
        }
    }
}

fn lambda_scheme(lambda: f64, upsilon: f64, total: usize) -> f64 {
    if total < 2 {
        return 1.0;
    }
    // round odd totals up to the next even one
    let s = total + total % 2;
    let expo = if s == 2 {
        1.0 - upsilon
    } else {
        (1.0 - upsilon) * ((s - 2) as f64) / 2.0
    };
    lambda.powf(-expo)
}

/// Parameter bundle for the aggregate norms and the theorem-shaped sweeps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormParams {
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
    pub rho: Rho,
}

impl Default for NormParams {
    fn default() -> Self {
        NormParams {
            beta: 2.0,
            alpha: 2.0,
            b: 1.0,
            gamma: 0.25,
            gamma_prime: 0.25,
            epsilon: 1e-3,
            epsilon_prime: 0.25,
            lambda: 0.1,
            upsilon: 0.1,
            mu: 0.5,
            gamma_bound: 10.0,
            rho: Rho::Ones,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape() -> SeriesShape {
        SeriesShape::new(2, 2, 2)
    }

    fn mi(t: usize, s: &[usize]) -> MultiIndex {
        MultiIndex { time: t, spatial: s.to_vec() }
    }

    fn random_series(rng: &mut impl rand::Rng, with_inf: bool) -> DecaySeries {
        let mut s = DecaySeries::zero(shape());
        let idx = s.indices().to_vec();
        for m in &idx {
            let c = if with_inf && rng.gen_bool(0.1) {
                Coeff::Infinite
            } else {
                Coeff::Finite(rng.gen_range(0.0..2.0))
            };
            s.set(m, c);
        }
        s
    }

    #[test]
    fn index_window_is_inclusive() {
        let sh = shape();
        // d=2, r0=r=2: (r0+1) * #{|dvec|<=2} = 3 * 6 = 18 tracked indices
        assert_eq!(sh.indices().len(), 18);
        assert!(sh.contains(&mi(2, &[1, 1])));
        assert!(!sh.contains(&mi(3, &[0, 0])));
        assert!(!sh.contains(&mi(0, &[2, 1])));
    }

    #[test]
    fn add_all_ones_doubles_and_inf_absorbs() {
        let c0 = DecaySeries::all_ones(shape());
        let two = c0.add(&c0).unwrap();
        for (_, c) in two.iter() {
            assert_eq!(c, Coeff::Finite(2.0));
        }
        // untracked index reads back as infinity
        assert!(two.coeff(&mi(3, &[0, 0])).is_infinite());

        let mut with_inf = c0.clone();
        with_inf.set(&mi(1, &[0, 0]), Coeff::Infinite);
        let s = with_inf.add(&c0).unwrap();
        assert!(s.coeff(&mi(1, &[0, 0])).is_infinite());
        assert_eq!(s.coeff(&mi(0, &[0, 0])), Coeff::Finite(2.0));
    }

    #[test]
    fn add_zero_is_identity() {
        let mut rng = crate::rng::rng_from(11, "decay-add-zero", 0);
        let x = random_series(&mut rng, true);
        let z = DecaySeries::zero(shape());
        assert_eq!(x.add(&z).unwrap(), x);
    }

    #[test]
    fn mul_monomials_and_annihilation() {
        let sh = SeriesShape::new(1, 2, 2);
        let a = DecaySeries::monomial(sh, &mi(1, &[0]), Coeff::Finite(1.0)).unwrap();
        let b = DecaySeries::monomial(sh, &mi(0, &[1]), Coeff::Finite(1.0)).unwrap();
        let p = a.mul(&b).unwrap();
        assert_eq!(p.coeff(&mi(1, &[1])), Coeff::Finite(1.0));
        assert_eq!(p.coeff(&mi(0, &[0])), Coeff::Finite(0.0));

        let mut rng = crate::rng::rng_from(11, "decay-mul-zero", 0);
        let x = random_series(&mut rng, true);
        let z = DecaySeries::zero(sh_of(&x));
        let xz = x.mul(&z).unwrap();
        assert_eq!(xz, z, "zero series annihilates even infinite coefficients");

        let c0 = DecaySeries::all_ones(shape());
        let sq = c0.mul(&c0).unwrap();
        assert_eq!(sq.coeff(&mi(0, &[0, 0])), Coeff::Finite(1.0));
    }

    fn sh_of(s: &DecaySeries) -> SeriesShape {
        s.shape()
    }

    #[test]
    fn geometric_matches_truncated_sum_oracle() {
        // X = x * t^0 scalar: compare against sum_{k<=N} X^k * c0
        let c0 = DecaySeries::all_ones(shape());
        let x = DecaySeries::constant(shape(), 0.37);
        let e = DecaySeries::geometric(&c0, &x).unwrap();

        let mut oracle = DecaySeries::zero(shape());
        let mut power = DecaySeries::constant(shape(), 1.0);
        for _ in 0..200 {
            oracle = oracle.add(&power.mul(&c0).unwrap()).unwrap();
            power = power.mul(&x).unwrap();
        }
        assert!(e.max_abs_diff(&oracle).unwrap() < 1e-12);
        // every finite coefficient of c0 divided by (1 - x)
        for (m, c) in e.iter() {
            let expect = 1.0 / (1.0 - 0.37);
            assert!((c.finite().unwrap() - expect).abs() < 1e-12, "at {m}");
        }
    }

    #[test]
    fn geometric_with_nonscalar_x_matches_partial_sums() {
        let mut rng = crate::rng::rng_from(3, "decay-geom", 0);
        for _ in 0..5 {
            let mut x = random_series(&mut rng, false);
            x = x.scale(0.3);
            x.set(&mi(0, &[0, 0]), Coeff::Finite(0.4));
            let c0 = DecaySeries::all_ones(shape());
            let e = DecaySeries::geometric(&c0, &x).unwrap();
            let mut oracle = DecaySeries::zero(shape());
            let mut power = DecaySeries::constant(shape(), 1.0);
            for _ in 0..400 {
                oracle = oracle.add(&power.mul(&c0).unwrap()).unwrap();
                power = power.mul(&x).unwrap();
            }
            assert!(e.max_abs_diff(&oracle).unwrap() < 1e-10);
            // fixed point: E = c0 + X E within 1e-12
            let rhs = c0.add(&x.mul(&e).unwrap()).unwrap();
            assert!(e.max_abs_diff(&rhs).unwrap() < 1e-12);
            // c0 <= e0(X)
            assert!(c0.leq_slack(&e, 1e-12).unwrap());
        }
    }

    #[test]
    fn geometric_rejects_unit_constant() {
        let c0 = DecaySeries::all_ones(shape());
        let x = DecaySeries::constant(shape(), 1.0);
        assert!(DecaySeries::geometric(&c0, &x).is_err());
    }

    #[test]
    fn leq_reflexive_and_inf_top() {
        let mut rng = crate::rng::rng_from(5, "decay-leq", 0);
        let a = random_series(&mut rng, true);
        assert!(a.leq(&a).unwrap());
        let mut top = DecaySeries::zero(shape());
        for m in top.indices().to_vec() {
            top.set(&m, Coeff::Infinite);
        }
        let fin = random_series(&mut rng, false);
        assert!(fin.leq(&top).unwrap());
        assert!(!top.leq(&fin).unwrap());
    }

    #[test]
    fn saturation_survives_add_and_mul() {
        let mut a = DecaySeries::all_ones(shape());
        a.set(&mi(0, &[1, 0]), Coeff::Infinite);
        let b = DecaySeries::all_ones(shape());
        assert!(a.add(&b).unwrap().coeff(&mi(0, &[1, 0])).is_infinite());
        // t^0 coefficient of b is 1 (nonzero), so the product keeps inf
        assert!(a.mul(&b).unwrap().coeff(&mi(0, &[1, 0])).is_infinite());
    }

    #[test]
    fn lambda_scheme_values() {
        let rho = Rho::Lambda { lambda: 0.1, upsilon: 0.1 };
        let l: f64 = 0.1;
        assert!((rho.get(0, 2) - l.powf(-0.9)).abs() < 1e-12);
        assert!((rho.get(0, 4) - l.powf(-0.9)).abs() < 1e-12);
        assert!((rho.get(2, 4) - l.powf(-1.8)).abs() < 1e-12);
        assert!((rho.get(0, 8) - l.powf(-2.7)).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn semiring_laws(seed in 0u64..1000) {
            let mut rng = crate::rng::rng_from(seed, "decay-laws", 0);
            let a = random_series(&mut rng, true);
            let b = random_series(&mut rng, true);
            let c = random_series(&mut rng, true);

            let ab = a.add(&b).unwrap();
            let ba = b.add(&a).unwrap();
            prop_assert!(ab.max_abs_diff(&ba).unwrap() < 1e-12);

            let assoc_l = a.add(&b).unwrap().add(&c).unwrap();
            let assoc_r = a.add(&b.add(&c).unwrap()).unwrap();
            prop_assert!(assoc_l.max_abs_diff(&assoc_r).unwrap() < 1e-12);

            let mul_l = a.mul(&b).unwrap().mul(&c).unwrap();
            let mul_r = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert!(mul_l.max_abs_diff(&mul_r).unwrap() <
                1e-12 * (1.0 + finite_sup(&mul_l)));

            let comm_l = a.mul(&b).unwrap();
            let comm_r = b.mul(&a).unwrap();
            prop_assert!(comm_l.max_abs_diff(&comm_r).unwrap() < 1e-12);

            let dist_l = a.mul(&b.add(&c).unwrap()).unwrap();
            let dist_r = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
            prop_assert!(dist_l.max_abs_diff(&dist_r).unwrap() <
                1e-12 * (1.0 + finite_sup(&dist_l)));
        }

        #[test]
        fn monotonicity(seed in 0u64..1000) {
            let mut rng = crate::rng::rng_from(seed, "decay-mono", 0);
            let a = random_series(&mut rng, false);
            let b = random_series(&mut rng, false);
            let da = random_series(&mut rng, false);
            let db = random_series(&mut rng, false);
            let a2 = a.add(&da).unwrap();
            let b2 = b.add(&db).unwrap();
            prop_assert!(a.add(&b).unwrap().leq_slack(&a2.add(&b2).unwrap(), 1e-12).unwrap());
            prop_assert!(a.mul(&b).unwrap().leq_slack(&a2.mul(&b2).unwrap(), 1e-9).unwrap());
        }
    }

    fn finite_sup(s: &DecaySeries) -> f64 {
        s.iter()
            .filter_map(|(_, c)| c.finite())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}
