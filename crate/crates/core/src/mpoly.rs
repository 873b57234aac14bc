//! Sparse multivariate polynomials in Y1..Yn with coefficients in `F_p[X]`.
//!
//! Terms map exponent vectors to nonzero `Poly` coefficients. The term
//! order is graded lexicographic, which fixes a canonical printing order
//! and makes leading-term division deterministic.

use crate::error::{Error, Result};
use crate::field::SmallField;
use crate::poly::Poly;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// Exponent vector with graded-lex ordering (total degree first, then
/// lexicographic with Y1 most significant).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    fn sub(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    fn add(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| {
                // lex with Y1 most significant: larger Y1 exponent wins
                for (a, b) in self.0.iter().zip(&other.0) {
                    match a.cmp(b) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                Ordering::Equal
            })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MPoly {
    p: u64,
    nvars: usize,
    terms: BTreeMap<Monomial, Poly>,
}

impl MPoly {
    // ---- Constructors ----

    pub fn zero(p: u64, nvars: usize) -> Self {
        MPoly { p, nvars, terms: BTreeMap::new() }
    }

    pub fn from_poly(coeff: Poly, nvars: usize) -> Self {
        let p = coeff.p();
        let mut m = MPoly::zero(p, nvars);
        if !coeff.is_zero() {
            m.terms.insert(Monomial(vec![0; nvars]), coeff);
        }
        m
    }

    pub fn constant(p: u64, c: u64, nvars: usize) -> Self {
        MPoly::from_poly(Poly::constant(p, c), nvars)
    }

    pub fn one(p: u64, nvars: usize) -> Self {
        MPoly::constant(p, 1, nvars)
    }

    /// The variable Y_{var+1}.
    pub fn variable(p: u64, var: usize, nvars: usize) -> Self {
        assert!(var < nvars, "variable index out of range");
        let mut exps = vec![0u32; nvars];
        exps[var] = 1;
        let mut m = MPoly::zero(p, nvars);
        m.terms.insert(Monomial(exps), Poly::one(p));
        m
    }

    pub fn term(coeff: Poly, exps: Vec<u32>) -> Self {
        let p = coeff.p();
        let nvars = exps.len();
        let mut m = MPoly::zero(p, nvars);
        if !coeff.is_zero() {
            m.terms.insert(Monomial(exps), coeff);
        }
        m
    }

    // ---- Queries ----

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Poly)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Degree in variable `var`; 0 for the zero polynomial.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.total_degree()).max().unwrap_or(0)
    }

    /// Largest X-degree over all coefficients.
    pub fn x_degree(&self) -> usize {
        self.terms
            .values()
            .filter_map(|c| c.degree())
            .max()
            .unwrap_or(0)
    }

    pub fn mentions(&self, var: usize) -> bool {
        self.terms.keys().any(|m| m.0[var] > 0)
    }

    /// True when no variable occurs (an element of `F_p[X]`).
    pub fn is_coefficient(&self) -> bool {
        self.terms.keys().all(|m| m.total_degree() == 0)
    }

    /// The constant-in-Y coefficient, when `is_coefficient` holds.
    pub fn as_coefficient(&self) -> Option<Poly> {
        if self.is_zero() {
            return Some(Poly::zero(self.p));
        }
        if self.is_coefficient() {
            Some(self.terms.values().next().unwrap().clone())
        } else {
            None
        }
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &Poly)> {
        self.terms.iter().next_back()
    }

    // ---- Arithmetic ----

    fn insert_add(&mut self, m: Monomial, c: Poly) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&m) {
            None => {
                self.terms.insert(m, c);
            }
            Some(old) => {
                let s = old.add(&c);
                if !s.is_zero() {
                    self.terms.insert(m, s);
                }
            }
        }
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        assert_eq!(self.nvars, other.nvars, "MPoly::add: arity mismatch");
        let mut r = self.clone();
        for (m, c) in &other.terms {
            r.insert_add(m.clone(), c.clone());
        }
        r
    }

    pub fn neg(&self) -> MPoly {
        let mut r = self.clone();
        for c in r.terms.values_mut() {
            *c = c.neg();
        }
        r
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        assert_eq!(self.nvars, other.nvars, "MPoly::mul: arity mismatch");
        let mut r = MPoly::zero(self.p, self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                r.insert_add(ma.add(mb), ca.mul(cb));
            }
        }
        r
    }

    pub fn mul_coeff(&self, c: &Poly) -> MPoly {
        if c.is_zero() {
            return MPoly::zero(self.p, self.nvars);
        }
        let mut r = self.clone();
        r.terms = r
            .terms
            .into_iter()
            .map(|(m, a)| (m, a.mul(c)))
            .filter(|(_, a)| !a.is_zero())
            .collect();
        r
    }

    pub fn pow(&self, mut exp: u32) -> MPoly {
        let mut acc = MPoly::one(self.p, self.nvars);
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            exp >>= 1;
        }
        acc
    }

    // ---- Calculus and structure ----

    /// Formal partial derivative in Y_{var+1}. In characteristic p any
    /// monomial whose exponent is divisible by p contributes zero.
    pub fn partial(&self, var: usize) -> MPoly {
        let mut r = MPoly::zero(self.p, self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 || (e as u64).is_multiple_of(self.p) {
                continue;
            }
            let mut exps = m.0.clone();
            exps[var] -= 1;
            r.insert_add(Monomial(exps), c.mul_scalar(e as u64 % self.p));
        }
        r
    }

    /// Coefficients of the polynomial viewed as univariate in `var`;
    /// entry d is the coefficient of Y_var^d (an MPoly not mentioning var).
    pub fn coeffs_in(&self, var: usize) -> Vec<MPoly> {
        let deg = self.degree_in(var) as usize;
        let mut out = vec![MPoly::zero(self.p, self.nvars); deg + 1];
        for (m, c) in &self.terms {
            let d = m.0[var] as usize;
            let mut exps = m.0.clone();
            exps[var] = 0;
            out[d].insert_add(Monomial(exps), c.clone());
        }
        out
    }

    /// Replace Y_var by a polynomial.
    pub fn substitute(&self, var: usize, value: &MPoly) -> MPoly {
        assert_eq!(self.nvars, value.nvars, "MPoly::substitute: arity mismatch");
        let coeffs = self.coeffs_in(var);
        // Horner in Y_var
        let mut acc = MPoly::zero(self.p, self.nvars);
        for c in coeffs.into_iter().rev() {
            acc = acc.mul(value).add(&c);
        }
        acc
    }

    /// Remove a variable that no longer occurs, renumbering later variables.
    pub fn drop_var(&self, var: usize) -> Result<MPoly> {
        if self.mentions(var) {
            return Err(Error::Precondition(format!(
                "cannot drop Y{}: the variable still occurs",
                var + 1
            )));
        }
        let mut r = MPoly::zero(self.p, self.nvars - 1);
        for (m, c) in &self.terms {
            let mut exps = m.0.clone();
            exps.remove(var);
            r.terms.insert(Monomial(exps), c.clone());
        }
        Ok(r)
    }

    /// Extend the variable list to `nvars` (new variables do not occur).
    pub fn pad_vars(&self, nvars: usize) -> MPoly {
        assert!(nvars >= self.nvars);
        let mut r = MPoly::zero(self.p, nvars);
        for (m, c) in &self.terms {
            let mut exps = m.0.clone();
            exps.resize(nvars, 0);
            r.terms.insert(Monomial(exps), c.clone());
        }
        r
    }

    /// Content: monic gcd of all coefficients in `F_p[X]`.
    pub fn content(&self) -> Poly {
        let mut g = Poly::zero(self.p);
        for c in self.terms.values() {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Divide out the content; the zero polynomial stays zero.
    pub fn primitive_part(&self) -> MPoly {
        let g = self.content();
        if g.is_zero() || g.is_one() {
            return self.clone();
        }
        let mut r = self.clone();
        for c in r.terms.values_mut() {
            *c = c.div_exact(&g).expect("content divides");
        }
        r
    }

    /// Exact division; `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &MPoly) -> Option<MPoly> {
        assert_eq!(self.nvars, d.nvars, "MPoly::div_exact: arity mismatch");
        if self.is_zero() {
            return Some(MPoly::zero(self.p, self.nvars));
        }
        let (dm, dc) = d.leading_term()?;
        let (dm, dc) = (dm.clone(), dc.clone());
        let mut r = self.clone();
        let mut q = MPoly::zero(self.p, self.nvars);
        while let Some((rm, rc)) = r.leading_term() {
            if !dm.divides(rm) {
                return None;
            }
            let c = rc.div_exact(&dc)?;
            let m = rm.sub(&dm);
            let t = MPoly::term(c, m.0);
            q = q.add(&t);
            r = r.sub(&t.mul(d));
        }
        Some(q)
    }

    /// Pseudo-division with respect to Y_var: lc(d)^k · self = q·d + r
    /// with deg_var r < deg_var d. Panics if `d` does not mention the
    /// variable.
    pub fn pseudo_divrem(&self, d: &MPoly, var: usize) -> (MPoly, MPoly) {
        let dd = d.degree_in(var);
        assert!(dd > 0, "pseudo_divrem: divisor must mention the variable");
        let lc_d = d.coeffs_in(var)[dd as usize].clone();
        let mut q = MPoly::zero(self.p, self.nvars);
        let mut r = self.clone();
        while r.degree_in(var) >= dd && !r.is_zero() {
            let dr = r.degree_in(var);
            let lc_r = r.coeffs_in(var)[dr as usize].clone();
            let shift = MPoly::variable(self.p, var, self.nvars).pow(dr - dd);
            let t = lc_r.mul(&shift);
            q = q.mul(&lc_d).add(&t);
            r = r.mul(&lc_d).sub(&t.mul(d));
            debug_assert!(r.degree_in(var) < dr || r.is_zero());
        }
        (q, r)
    }

    // ---- Evaluation ----

    /// Evaluate over F_q, sending X to `x` and Y_i to `point[i]`.
    pub fn eval_fq(&self, field: &SmallField, x: u16, point: &[u16]) -> u16 {
        assert_eq!(point.len(), self.nvars, "eval_fq: arity mismatch");
        let mut acc = 0u16;
        for (m, c) in &self.terms {
            let mut t = field.eval_fp_poly(c.coeffs(), x);
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t = field.mul(t, field.pow(point[i], e as u64));
                }
            }
            acc = field.add(acc, t);
        }
        acc
    }

    // ---- Resultants ----

    /// Resultant with respect to Y_var, by fraction-free elimination of the
    /// Sylvester matrix. The result does not mention Y_var and vanishes at
    /// every common root of the inputs.
    pub fn resultant(&self, other: &MPoly, var: usize) -> Result<MPoly> {
        let d1 = self.degree_in(var) as usize;
        let d2 = other.degree_in(var) as usize;
        if d1 == 0 || d2 == 0 {
            return Err(Error::DegreeZeroInVariable { var });
        }
        let a = self.coeffs_in(var);
        let b = other.coeffs_in(var);
        let n = d1 + d2;
        let zero = MPoly::zero(self.p, self.nvars);
        let mut m = vec![vec![zero.clone(); n]; n];
        for row in 0..d2 {
            for (k, c) in a.iter().enumerate() {
                m[row][row + d1 - k] = c.clone();
            }
        }
        for row in 0..d1 {
            for (k, c) in b.iter().enumerate() {
                m[d2 + row][row + d2 - k] = c.clone();
            }
        }
        bareiss_determinant(m, self.p, self.nvars)
    }
}

/// Fraction-free Gaussian elimination; every division is exact.
fn bareiss_determinant(mut m: Vec<Vec<MPoly>>, p: u64, nvars: usize) -> Result<MPoly> {
    let n = m.len();
    if n == 0 {
        return Ok(MPoly::one(p, nvars));
    }
    let mut sign_negative = false;
    let mut prev = MPoly::one(p, nvars);
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let swap = (k + 1..n).find(|&r| !m[r][k].is_zero());
            match swap {
                Some(r) => {
                    m.swap(k, r);
                    sign_negative = !sign_negative;
                }
                None => return Ok(MPoly::zero(p, nvars)),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = m[i][j].mul(&m[k][k]).sub(&m[i][k].mul(&m[k][j]));
                m[i][j] = num
                    .div_exact(&prev)
                    .expect("Bareiss divisions are exact over an integral domain");
            }
            m[i][k] = MPoly::zero(p, nvars);
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    Ok(if sign_negative { det.neg() } else { det })
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        // descending graded-lex for a stable leading term
        for (m, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let vars: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        format!("Y{}", i + 1)
                    } else {
                        format!("Y{}^{}", i + 1, e)
                    }
                })
                .collect();
            let coeff_str = if c.is_one() && !vars.is_empty() {
                String::new()
            } else if c.degree().is_none_or(|d| d == 0) || is_single_term(c) {
                format!("{c}")
            } else {
                format!("({c})")
            };
            if vars.is_empty() {
                write!(f, "{coeff_str}")?;
            } else if coeff_str.is_empty() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", coeff_str, vars.join("*"))?;
            }
        }
        Ok(())
    }
}

fn is_single_term(c: &Poly) -> bool {
    c.coeffs().iter().filter(|&&x| x != 0).count() == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mpoly(rng: &mut ChaCha8Rng, p: u64, nvars: usize, terms: usize, max_e: u32) -> MPoly {
        let mut m = MPoly::zero(p, nvars);
        for _ in 0..terms {
            let exps: Vec<u32> = (0..nvars).map(|_| rng.random_range(0..=max_e)).collect();
            let deg = rng.random_range(0..3usize);
            let coeff = Poly::from_coeffs(p, (0..=deg).map(|_| rng.random_range(0..p)).collect());
            m = m.add(&MPoly::term(coeff, exps));
        }
        m
    }

    #[test]
    fn graded_lex_order() {
        assert!(Monomial(vec![2, 0]) > Monomial(vec![1, 0]));
        assert!(Monomial(vec![1, 1]) > Monomial(vec![0, 2]));
        assert!(Monomial(vec![0, 3]) > Monomial(vec![1, 1]));
    }

    #[test]
    fn ring_axioms_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for p in [2u64, 3] {
            for _ in 0..100 {
                let a = random_mpoly(&mut rng, p, 2, 3, 3);
                let b = random_mpoly(&mut rng, p, 2, 3, 3);
                let c = random_mpoly(&mut rng, p, 2, 3, 3);
                assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
                assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
                assert_eq!(a.mul(&b), b.mul(&a));
            }
        }
    }

    #[test]
    fn partial_kills_pth_powers() {
        for p in [2u64, 3, 5] {
            let y = MPoly::variable(p, 0, 1);
            assert!(y.pow(p as u32).partial(0).is_zero());
            assert_eq!(y.partial(0), MPoly::one(p, 1));
        }
    }

    #[test]
    fn partial_term_by_term() {
        // Y1^3·Y2 over F_3: ∂/∂Y1 = 0, ∂/∂Y2 = Y1^3
        let p = 3;
        let t = MPoly::term(Poly::one(p), vec![3, 1]);
        assert!(t.partial(0).is_zero());
        assert_eq!(t.partial(1), MPoly::term(Poly::one(p), vec![3, 0]));
    }

    #[test]
    fn partial_vanishes_on_p_divisible_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for p in [2u64, 3] {
            for _ in 0..50 {
                let raw = random_mpoly(&mut rng, p, 2, 4, 2);
                // force every exponent to a multiple of p
                let mut scaled = MPoly::zero(p, 2);
                for (m, c) in raw.terms() {
                    let exps: Vec<u32> = m.0.iter().map(|&e| e * p as u32).collect();
                    scaled = scaled.add(&MPoly::term(c.clone(), exps));
                }
                assert!(scaled.partial(0).is_zero());
                assert!(scaled.partial(1).is_zero());
            }
        }
    }

    #[test]
    fn exact_division_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..100 {
            let a = random_mpoly(&mut rng, 2, 2, 3, 2);
            let b = random_mpoly(&mut rng, 2, 2, 3, 2);
            if b.is_zero() {
                continue;
            }
            let prod = a.mul(&b);
            let q = prod.div_exact(&b).expect("constructed to divide");
            assert_eq!(q, a);
        }
    }

    #[test]
    fn resultant_linear_substitution() {
        // P = Y1 - a, Q = Y1^2 - b with a = X, b = X^3: resultant = a^2 - b
        let p = 2;
        let a = Poly::x(p);
        let b = Poly::monomial(p, 1, 3);
        let pp = MPoly::variable(p, 0, 1).sub(&MPoly::from_poly(a.clone(), 1));
        let qq = MPoly::variable(p, 0, 1)
            .pow(2)
            .sub(&MPoly::from_poly(b.clone(), 1));
        let r = pp.resultant(&qq, 0).unwrap();
        let expected = MPoly::from_poly(a.mul(&a).sub(&b), 1);
        assert_eq!(r, expected);
    }

    #[test]
    fn resultant_of_equal_inputs_is_zero() {
        let p = 2;
        let f = MPoly::variable(p, 0, 2)
            .pow(2)
            .add(&MPoly::variable(p, 1, 2))
            .add(&MPoly::from_poly(Poly::x(p), 2));
        assert!(f.resultant(&f, 0).unwrap().is_zero());
    }

    #[test]
    fn resultant_sylvester_two_by_two() {
        // P = Y1^2 + X, Q = Y1 + X over F_2: resultant = X^2 + X
        let p = 2;
        let pp = MPoly::variable(p, 0, 1)
            .pow(2)
            .add(&MPoly::from_poly(Poly::x(p), 1));
        let qq = MPoly::variable(p, 0, 1).add(&MPoly::from_poly(Poly::x(p), 1));
        let r = pp.resultant(&qq, 0).unwrap();
        assert_eq!(r, MPoly::from_poly(Poly::from_coeffs(p, vec![0, 1, 1]), 1));
    }

    #[test]
    fn resultant_degree_zero_rejected() {
        let p = 2;
        let c = MPoly::one(p, 1);
        let v = MPoly::variable(p, 0, 1);
        assert!(matches!(
            c.resultant(&v, 0),
            Err(Error::DegreeZeroInVariable { .. })
        ));
    }

    #[test]
    fn resultant_vanishes_with_planted_common_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..30 {
            let common = MPoly::variable(2, 0, 2)
                .add(&random_mpoly(&mut rng, 2, 2, 2, 1));
            let a = random_mpoly(&mut rng, 2, 2, 2, 1)
                .add(&MPoly::variable(2, 0, 2))
                .mul(&common);
            let b = random_mpoly(&mut rng, 2, 2, 2, 1)
                .add(&MPoly::one(2, 2))
                .mul(&common);
            if a.degree_in(0) == 0 || b.degree_in(0) == 0 {
                continue;
            }
            assert!(a.resultant(&b, 0).unwrap().is_zero());
        }
    }

    #[test]
    fn resultant_vanishes_at_common_fq_roots() {
        // oracle: over F_4 (X -> x), every common root of P and Q kills res
        let field = SmallField::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..40 {
            let a = random_mpoly(&mut rng, 2, 2, 3, 2);
            let b = random_mpoly(&mut rng, 2, 2, 3, 2);
            if a.degree_in(0) == 0 || b.degree_in(0) == 0 {
                continue;
            }
            let r = a.resultant(&b, 0).unwrap();
            for x in field.elements() {
                for z0 in field.elements() {
                    for z1 in field.elements() {
                        let pt = [z0, z1];
                        if a.eval_fq(&field, x, &pt) == 0 && b.eval_fq(&field, x, &pt) == 0 {
                            assert_eq!(r.eval_fq(&field, x, &pt), 0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn substitution_is_evaluation() {
        // substitute Y2 := Y1^2 into Y2 + Y1 gives Y1^2 + Y1
        let p = 2;
        let f = MPoly::variable(p, 1, 2).add(&MPoly::variable(p, 0, 2));
        let v = MPoly::variable(p, 0, 2).pow(2);
        let g = f.substitute(1, &v);
        assert_eq!(
            g,
            MPoly::variable(p, 0, 2).pow(2).add(&MPoly::variable(p, 0, 2))
        );
    }

    #[test]
    fn content_and_primitive_part() {
        let p = 2;
        let x = Poly::x(p);
        let f = MPoly::term(x.mul(&x), vec![1]).add(&MPoly::term(x.clone(), vec![0]));
        assert_eq!(f.content(), x);
        let prim = f.primitive_part();
        assert!(prim.content().is_one());
    }
}
