//! Prime fields F_p and small finite fields `F_q = F_p[t]/(m)`.
//!
//! The prime modulus is runtime data. Elements of F_p are plain `u64`
//! residues in `[0, p)`; `Fp` is the context object carrying the modulus.
//! `SmallField` realizes F_q for q up to a configurable bound with dense
//! lookup tables, which is what the exhaustive enumeration oracles want.

use crate::error::{Error, Result};

/// Deterministic primality check; moduli are small so trial division is fine.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Arithmetic context for the prime field F_p.
///
/// Element values are `u64` residues in `[0, p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fp {
    p: u64,
}

/// Largest accepted modulus: products of two residues must fit in u64.
pub const MAX_PRIME: u64 = (1 << 31) - 1;

impl Fp {
    pub fn new(p: u64) -> Result<Self> {
        if p > MAX_PRIME {
            return Err(Error::Precondition(format!(
                "modulus {p} exceeds the supported bound {MAX_PRIME}"
            )));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Fp { p })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, a: i64) -> u64 {
        a.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn reduce_u(&self, a: u64) -> u64 {
        a % self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p { s - self.p } else { s }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b { a - b } else { a + self.p - b }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 { 0 } else { self.p - a }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.p
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by Fermat's little theorem. Panics on zero.
    pub fn inv(&self, a: u64) -> u64 {
        assert!(!a.is_multiple_of(self.p), "Fp::inv: division by zero");
        self.pow(a, self.p - 2)
    }

    #[inline]
    pub fn div(&self, a: u64, b: u64) -> u64 {
        self.mul(a, self.inv(b))
    }

    /// Binomial coefficient C(n, k) mod p via Lucas' theorem.
    pub fn binomial(&self, mut n: u64, mut k: u64) -> u64 {
        let mut acc = 1u64;
        while k > 0 || n > 0 {
            let (nd, kd) = (n % self.p, k % self.p);
            if kd > nd {
                return 0;
            }
            acc = self.mul(acc, self.small_binomial(nd, kd));
            n /= self.p;
            k /= self.p;
        }
        acc
    }

    fn small_binomial(&self, n: u64, k: u64) -> u64 {
        let mut acc = 1u64;
        for i in 0..k {
            acc = self.div(self.mul(acc, n - i), i + 1);
        }
        acc
    }
}

// ---- Small finite fields with lookup tables ----

/// Upper bound on q for table-backed fields; exhaustive pseudo-morphism
/// enumeration beyond this is hopeless anyway.
pub const SMALL_FIELD_BOUND: u64 = 512;

/// The finite field F_q, q = p^k, with dense add/mul tables.
///
/// An element is a `u16` index: the element sum c_i t^i maps to the index
/// sum c_i p^i, so the prime subfield occupies indices `0..p` and index
/// arithmetic never needs the modulus polynomial after construction.
#[derive(Clone, Debug)]
pub struct SmallField {
    p: u64,
    k: u32,
    q: u64,
    add: Vec<u16>,
    mul: Vec<u16>,
    modulus: Vec<u64>,
}

impl SmallField {
    /// Build F_q for a prime power q ≤ `SMALL_FIELD_BOUND`.
    pub fn new(q: u64) -> Result<Self> {
        if q > SMALL_FIELD_BOUND {
            return Err(Error::EnumerationBound {
                q,
                bound: SMALL_FIELD_BOUND,
            });
        }
        let (p, k) = factor_prime_power(q).ok_or(Error::NotPrimePower(q))?;
        let fp = Fp::new(p)?;
        let modulus = find_irreducible(&fp, k);
        let mut field = SmallField {
            p,
            k,
            q,
            add: vec![0; (q * q) as usize],
            mul: vec![0; (q * q) as usize],
            modulus,
        };
        field.fill_tables(&fp);
        Ok(field)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn elements(&self) -> impl Iterator<Item = u16> {
        0..self.q as u16
    }

    #[inline]
    pub fn add(&self, a: u16, b: u16) -> u16 {
        self.add[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        self.mul[a as usize * self.q as usize + b as usize]
    }

    pub fn neg(&self, a: u16) -> u16 {
        // p - c digitwise; table-free since negation is cheap to recompute
        let digits = self.digits(a);
        let fp = Fp { p: self.p };
        self.pack_digits(&digits.iter().map(|&c| fp.neg(c)).collect::<Vec<_>>())
    }

    pub fn sub(&self, a: u16, b: u16) -> u16 {
        self.add(a, self.neg(b))
    }

    pub fn pow(&self, base: u16, mut exp: u64) -> u16 {
        let mut acc = 1u16;
        let mut b = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self, a: u16) -> u16 {
        assert!(a != 0, "SmallField::inv: division by zero");
        self.pow(a, self.q - 2)
    }

    /// True if the element lies in the prime subfield F_p.
    pub fn in_prime_field(&self, a: u16) -> bool {
        (a as u64) < self.p
    }

    /// Evaluate a polynomial over F_p (coefficient slice, ascending) at a
    /// field element; the embedding `F_p[X]` → F_q sending X to `x`.
    pub fn eval_fp_poly(&self, coeffs: &[u64], x: u16) -> u16 {
        let mut acc = 0u16;
        for &c in coeffs.iter().rev() {
            acc = self.add(self.mul(acc, x), (c % self.p) as u16);
        }
        acc
    }

    /// Render an element as a polynomial in the generator `t`.
    pub fn name(&self, a: u16) -> String {
        if self.k == 1 || (a as u64) < self.p {
            return format!("{a}");
        }
        let digits = self.digits(a);
        let mut parts = Vec::new();
        for (i, &c) in digits.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let part = match (i, c) {
                (0, c) => format!("{c}"),
                (1, 1) => "t".to_string(),
                (1, c) => format!("{c}t"),
                (i, 1) => format!("t^{i}"),
                (i, c) => format!("{c}t^{i}"),
            };
            parts.push(part);
        }
        parts.join("+")
    }

    fn digits(&self, a: u16) -> Vec<u64> {
        let mut v = Vec::with_capacity(self.k as usize);
        let mut a = a as u64;
        for _ in 0..self.k {
            v.push(a % self.p);
            a /= self.p;
        }
        v
    }

    fn pack_digits(&self, digits: &[u64]) -> u16 {
        let mut acc = 0u64;
        for &d in digits.iter().rev() {
            acc = acc * self.p + d;
        }
        acc as u16
    }

    fn fill_tables(&mut self, fp: &Fp) {
        let q = self.q as usize;
        for a in 0..q as u16 {
            let da = self.digits(a);
            for b in 0..q as u16 {
                let db = self.digits(b);
                let sum: Vec<u64> = da.iter().zip(&db).map(|(&x, &y)| fp.add(x, y)).collect();
                self.add[a as usize * q + b as usize] = self.pack_digits(&sum);

                let prod = poly_mul_mod(fp, &da, &db, &self.modulus);
                self.mul[a as usize * q + b as usize] = self.pack_digits(&prod);
            }
        }
    }
}

fn factor_prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2u64;
    while p * p <= q {
        if q.is_multiple_of(p) {
            let mut n = q;
            let mut k = 0u32;
            while n.is_multiple_of(p) {
                n /= p;
                k += 1;
            }
            return if n == 1 { Some((p, k)) } else { None };
        }
        p += 1;
    }
    Some((q, 1))
}

/// Smallest monic irreducible of degree k over F_p, by exhaustive search.
fn find_irreducible(fp: &Fp, k: u32) -> Vec<u64> {
    if k == 1 {
        return vec![0, 1]; // t itself; unused since index arithmetic is digitwise
    }
    let p = fp.p();
    let count = p.pow(k);
    for code in 0..count {
        let mut coeffs: Vec<u64> = Vec::with_capacity(k as usize + 1);
        let mut c = code;
        for _ in 0..k {
            coeffs.push(c % p);
            c /= p;
        }
        coeffs.push(1); // monic
        if is_irreducible(fp, &coeffs) {
            return coeffs;
        }
    }
    unreachable!("an irreducible of every degree exists over F_p")
}

/// Trial division by all monic polynomials of degree ≤ deg/2.
fn is_irreducible(fp: &Fp, poly: &[u64]) -> bool {
    let deg = poly.len() - 1;
    if deg == 0 {
        return false;
    }
    let p = fp.p();
    for d in 1..=deg / 2 {
        let count = p.pow(d as u32);
        for code in 0..count {
            let mut div: Vec<u64> = Vec::with_capacity(d + 1);
            let mut c = code;
            for _ in 0..d {
                div.push(c % p);
                c /= p;
            }
            div.push(1);
            if poly_rem_is_zero(fp, poly, &div) {
                return false;
            }
        }
    }
    true
}

fn poly_rem_is_zero(fp: &Fp, a: &[u64], b: &[u64]) -> bool {
    let mut r: Vec<u64> = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = *r.last().unwrap();
        if lead != 0 {
            let shift = r.len() - 1 - db;
            for i in 0..=db {
                let t = fp.mul(lead, b[i]);
                r[shift + i] = fp.sub(r[shift + i], t);
            }
        }
        r.pop();
    }
    r.iter().all(|&c| c == 0)
}

fn poly_mul_mod(fp: &Fp, a: &[u64], b: &[u64], modulus: &[u64]) -> Vec<u64> {
    let k = a.len();
    let mut prod = vec![0u64; 2 * k];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = fp.add(prod[i + j], fp.mul(x, y));
        }
    }
    if modulus.len() > 1 {
        // reduce mod the monic modulus of degree k
        let dm = modulus.len() - 1;
        for i in (dm..prod.len()).rev() {
            let c = prod[i];
            if c == 0 {
                continue;
            }
            prod[i] = 0;
            for j in 0..dm {
                let t = fp.mul(c, modulus[j]);
                prod[i - dm + j] = fp.sub(prod[i - dm + j], t);
            }
        }
    }
    prod.truncate(k);
    prod
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality() {
        assert!(is_prime(2));
        assert!(is_prime(3));
        assert!(is_prime(5));
        assert!(!is_prime(1));
        assert!(!is_prime(9));
        assert!(!is_prime(25));
    }

    #[test]
    fn fp_arithmetic() {
        let f = Fp::new(7).unwrap();
        assert_eq!(f.add(3, 5), 1);
        assert_eq!(f.sub(3, 5), 5);
        assert_eq!(f.mul(3, 5), 1);
        assert_eq!(f.inv(3), 5);
        assert_eq!(f.pow(3, 6), 1);
        assert!(Fp::new(6).is_err());
    }

    #[test]
    fn lucas_binomial() {
        let f = Fp::new(2).unwrap();
        // C(4, 2) = 6 ≡ 0 mod 2; C(5, 1) = 5 ≡ 1
        assert_eq!(f.binomial(4, 2), 0);
        assert_eq!(f.binomial(5, 1), 1);
        let f3 = Fp::new(3).unwrap();
        assert_eq!(f3.binomial(6, 3), 20 % 3);
    }

    #[test]
    fn f4_structure() {
        let f = SmallField::new(4).unwrap();
        assert_eq!(f.p(), 2);
        assert_eq!(f.degree(), 2);
        // the generator t satisfies t^2 = t + 1 for the smallest irreducible
        let t = 2u16;
        assert_eq!(f.mul(t, t), f.add(t, 1));
        // every nonzero element has order dividing 3
        for a in 1..4u16 {
            assert_eq!(f.pow(a, 3), 1);
            assert_eq!(f.mul(a, f.inv(a)), 1);
        }
    }

    #[test]
    fn f9_and_f8_field_axioms() {
        for q in [8u64, 9, 25, 27] {
            let f = SmallField::new(q).unwrap();
            for a in f.elements() {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.add(a, f.neg(a)), 0);
                for b in f.elements() {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in f.elements() {
                        assert_eq!(
                            f.mul(a, f.add(b, c)),
                            f.add(f.mul(a, b), f.mul(a, c)),
                            "distributivity fails in F_{q}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn non_prime_power_rejected() {
        assert!(SmallField::new(6).is_err());
        assert!(SmallField::new(12).is_err());
        assert!(SmallField::new(1000).is_err());
    }

    #[test]
    fn prime_subfield_indices() {
        let f = SmallField::new(27).unwrap();
        for a in 0..3u16 {
            for b in 0..3u16 {
                assert!(f.in_prime_field(f.add(a, b)));
                assert!(f.in_prime_field(f.mul(a, b)));
            }
        }
        assert!(!f.in_prime_field(3));
    }
}
