//! Dense univariate polynomials over F_p.
//!
//! Coefficients are stored in ascending degree order. The representation is
//! canonical: the vector is empty for the zero polynomial and the last
//! element is nonzero otherwise. The degree of the zero polynomial is `None`.

use crate::error::{Error, Result};
use crate::field::Fp;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    p: u64,
    coeffs: Vec<u64>,
}

impl Poly {
    // ---- Constructors ----

    pub fn zero(p: u64) -> Self {
        Poly { p, coeffs: Vec::new() }
    }

    pub fn one(p: u64) -> Self {
        Poly { p, coeffs: vec![1] }
    }

    pub fn constant(p: u64, c: u64) -> Self {
        Poly::from_coeffs(p, vec![c])
    }

    /// The indeterminate X.
    pub fn x(p: u64) -> Self {
        Poly { p, coeffs: vec![0, 1] }
    }

    /// The monomial c·X^k.
    pub fn monomial(p: u64, c: u64, k: usize) -> Self {
        if c.is_multiple_of(p) {
            return Poly::zero(p);
        }
        let mut coeffs = vec![0u64; k + 1];
        coeffs[k] = c % p;
        Poly { p, coeffs }
    }

    /// Construct from coefficients (ascending); values reduced mod p,
    /// trailing zeros stripped.
    pub fn from_coeffs(p: u64, coeffs: Vec<u64>) -> Self {
        let mut poly = Poly {
            p,
            coeffs: coeffs.into_iter().map(|c| c % p).collect(),
        };
        poly.normalize();
        poly
    }

    pub fn from_signed(p: u64, coeffs: &[i64]) -> Self {
        let fp = Fp::new(p).expect("prime modulus");
        Poly::from_coeffs(p, coeffs.iter().map(|&c| fp.reduce(c)).collect())
    }

    fn normalize(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    fn fp(&self) -> Fp {
        Fp::new(self.p).expect("modulus validated at construction")
    }

    // ---- Queries ----

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn leading_coeff(&self) -> Option<u64> {
        self.coeffs.last().copied()
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last() == Some(&1)
    }

    /// Order of vanishing at 0: the smallest i with a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|&c| c != 0)
    }

    // ---- Arithmetic ----

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.p, other.p, "Poly::add: mismatched moduli");
        let fp = self.fp();
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            coeffs.push(fp.add(self.coeff(i), other.coeff(i)));
        }
        let mut r = Poly { p: self.p, coeffs };
        r.normalize();
        r
    }

    pub fn neg(&self) -> Poly {
        let fp = self.fp();
        Poly {
            p: self.p,
            coeffs: self.coeffs.iter().map(|&c| fp.neg(c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.p, other.p, "Poly::mul: mismatched moduli");
        if self.is_zero() || other.is_zero() {
            return Poly::zero(self.p);
        }
        let fp = self.fp();
        let mut coeffs = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = fp.add(coeffs[i + j], fp.mul(a, b));
            }
        }
        Poly { p: self.p, coeffs }
    }

    pub fn mul_scalar(&self, c: u64) -> Poly {
        let fp = self.fp();
        let c = c % self.p;
        if c == 0 {
            return Poly::zero(self.p);
        }
        Poly {
            p: self.p,
            coeffs: self.coeffs.iter().map(|&a| fp.mul(a, c)).collect(),
        }
    }

    pub fn pow(&self, mut exp: u64) -> Poly {
        let mut acc = Poly::one(self.p);
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

    /// Multiply by X^k.
    pub fn shift_up(&self, k: usize) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![0u64; k];
        coeffs.extend_from_slice(&self.coeffs);
        Poly { p: self.p, coeffs }
    }

    /// Euclidean division: a = q·b + r with deg r < deg b.
    pub fn divrem(&self, b: &Poly) -> Result<(Poly, Poly)> {
        assert_eq!(self.p, b.p, "Poly::divrem: mismatched moduli");
        if b.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let fp = self.fp();
        let db = b.degree().unwrap();
        let lead_inv = fp.inv(b.leading_coeff().unwrap());
        let mut r = self.coeffs.clone();
        if r.len() <= db {
            return Ok((Poly::zero(self.p), self.clone()));
        }
        let mut q = vec![0u64; r.len() - db];
        while r.len() > db {
            let lead = *r.last().unwrap();
            let shift = r.len() - 1 - db;
            if lead != 0 {
                let c = fp.mul(lead, lead_inv);
                q[shift] = c;
                for i in 0..=db {
                    let t = fp.mul(c, b.coeffs[i]);
                    r[shift + i] = fp.sub(r[shift + i], t);
                }
            }
            r.pop();
        }
        Ok((Poly::from_coeffs(self.p, q), Poly::from_coeffs(self.p, r)))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(&b).expect("b nonzero");
            a = b;
            b = r;
        }
        a.make_monic()
    }

    /// Scale so the leading coefficient is 1; zero stays zero.
    pub fn make_monic(&self) -> Poly {
        match self.leading_coeff() {
            None | Some(1) => self.clone(),
            Some(lc) => self.mul_scalar(self.fp().inv(lc)),
        }
    }

    /// Exact division; `None` when the remainder is nonzero.
    pub fn div_exact(&self, b: &Poly) -> Option<Poly> {
        let (q, r) = self.divrem(b).ok()?;
        if r.is_zero() { Some(q) } else { None }
    }

    // ---- Evaluation and coefficient operators ----

    pub fn eval(&self, x: u64) -> u64 {
        let fp = self.fp();
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            acc = fp.add(fp.mul(acc, x), c);
        }
        acc
    }

    /// Formal derivative.
    pub fn derivative(&self) -> Poly {
        let fp = self.fp();
        let coeffs: Vec<u64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| fp.mul(fp.reduce_u(i as u64), c))
            .collect();
        Poly::from_coeffs(self.p, coeffs)
    }

    /// Section operator on coefficients: keeps indices ≡ i mod p, so the
    /// result has coefficient n equal to coefficient pn+i of the input.
    pub fn cartier(&self, digit: u64) -> Result<Poly> {
        if digit >= self.p {
            return Err(Error::DigitOutOfRange { digit, p: self.p });
        }
        let coeffs: Vec<u64> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(n, _)| *n as u64 % self.p == digit)
            .map(|(_, &c)| c)
            .collect();
        Ok(Poly::from_coeffs(self.p, coeffs))
    }

    /// The p-th power, computed by coefficient spreading (Frobenius).
    pub fn frobenius(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![0u64; (self.coeffs.len() - 1) * self.p as usize + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[i * self.p as usize] = c; // c^p = c in F_p
        }
        Poly { p: self.p, coeffs }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match (i, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => write!(f, "X")?,
                (1, c) => write!(f, "{c}*X")?,
                (i, 1) => write!(f, "X^{i}")?,
                (i, c) => write!(f, "{c}*X^{i}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_poly(rng: &mut ChaCha8Rng, p: u64, max_deg: usize) -> Poly {
        let deg = rng.random_range(0..=max_deg);
        let coeffs: Vec<u64> = (0..=deg).map(|_| rng.random_range(0..p)).collect();
        Poly::from_coeffs(p, coeffs)
    }

    #[test]
    fn zero_polynomial_degree_is_none() {
        let z = Poly::zero(2);
        assert!(z.is_zero());
        assert_eq!(z.degree(), None);
        assert_eq!(Poly::from_coeffs(3, vec![0, 0, 0]).degree(), None);
    }

    #[test]
    fn char_two_frobenius_square() {
        // (X+1)^2 = X^2+1 over F_2
        let a = Poly::from_coeffs(2, vec![1, 1]);
        assert_eq!(a.mul(&a), Poly::from_coeffs(2, vec![1, 0, 1]));
        assert_eq!(a.frobenius(), Poly::from_coeffs(2, vec![1, 0, 1]));
    }

    #[test]
    fn euclid_char2_exact() {
        // X^2+1 = (X+1)(X+1) over F_2: q = X+1, r = 0
        let a = Poly::from_coeffs(2, vec![1, 0, 1]);
        let b = Poly::from_coeffs(2, vec![1, 1]);
        let (q, r) = a.divrem(&b).unwrap();
        assert_eq!(q, b);
        assert!(r.is_zero());
    }

    #[test]
    fn euclid_unit_divisor() {
        let a = Poly::from_coeffs(5, vec![3, 1, 4]);
        let (q, r) = a.divrem(&Poly::one(5)).unwrap();
        assert_eq!(q, a);
        assert!(r.is_zero());
    }

    #[test]
    fn euclid_degree_bound() {
        // X^3+X+1 divided by X^2+1 over F_2: deg r ≤ 1 and a = q·b + r
        let a = Poly::from_coeffs(2, vec![1, 1, 0, 1]);
        let b = Poly::from_coeffs(2, vec![1, 0, 1]);
        let (q, r) = a.divrem(&b).unwrap();
        assert!(r.degree().map_or(true, |d| d <= 1));
        assert_eq!(q.mul(&b).add(&r), a);
    }

    #[test]
    fn euclid_by_zero_rejected() {
        let a = Poly::one(2);
        assert!(matches!(a.divrem(&Poly::zero(2)), Err(Error::DivisionByZero)));
    }

    #[test]
    fn euclid_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [2u64, 3, 5] {
            for _ in 0..1000 {
                let a = random_poly(&mut rng, p, 12);
                let mut b = random_poly(&mut rng, p, 6);
                if b.is_zero() {
                    b = Poly::one(p);
                }
                let (q, r) = a.divrem(&b).unwrap();
                assert_eq!(q.mul(&b).add(&r), a);
                match (r.degree(), b.degree()) {
                    (Some(dr), Some(db)) => assert!(dr < db),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn gcd_is_monic_and_divides() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let c = random_poly(&mut rng, 3, 3);
            let a = random_poly(&mut rng, 3, 4).mul(&c);
            let b = random_poly(&mut rng, 3, 4).mul(&c);
            let g = a.gcd(&b);
            if g.is_zero() {
                assert!(a.is_zero() && b.is_zero());
                continue;
            }
            assert!(g.is_monic());
            assert!(a.div_exact(&g).is_some());
            assert!(b.div_exact(&g).is_some());
            if !c.is_zero() && !a.is_zero() && !b.is_zero() {
                assert!(g.div_exact(&c.make_monic()).is_some());
            }
        }
    }

    #[test]
    fn ring_axioms_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for p in [2u64, 3, 5] {
            for _ in 0..300 {
                let a = random_poly(&mut rng, p, 6);
                let b = random_poly(&mut rng, p, 6);
                let c = random_poly(&mut rng, p, 6);
                assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
                assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
                assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
                assert_eq!(a.mul(&b), b.mul(&a));
            }
        }
    }

    #[test]
    fn cartier_on_coefficients() {
        // 1 + X + X^3 + X^4 over F_2: even part 1+X^2, odd part 1+X
        let f = Poly::from_coeffs(2, vec![1, 1, 0, 1, 1]);
        assert_eq!(f.cartier(0).unwrap(), Poly::from_coeffs(2, vec![1, 0, 1]));
        assert_eq!(f.cartier(1).unwrap(), Poly::from_coeffs(2, vec![1, 1]));
        assert!(f.cartier(2).is_err());
    }

    #[test]
    fn display_form() {
        let f = Poly::from_coeffs(2, vec![1, 1, 0, 1]);
        assert_eq!(f.to_string(), "1+X+X^3");
        assert_eq!(Poly::zero(3).to_string(), "0");
        assert_eq!(Poly::from_coeffs(5, vec![0, 3]).to_string(), "3*X");
    }
}
