//! Truncated Laurent series over F_p with honest precision bookkeeping.
//!
//! A series stores a window of known coefficients. Coefficients at or above
//! the truncation order are *unknown*, not zero; an `Exact` series (built
//! from a polynomial) has all coefficients known. Every operation computes
//! the best truncation order the inputs support and nothing more, so
//! "equal" downstream always means "equal on the common known window".
//!
//! Norm semantics: ‖F‖ = p^{-c} where c is the order of vanishing; the
//! norm of a series that is zero so far is only known to be ≤ p^{-N}.

use crate::error::{Error, Result};
use crate::field::Fp;
use crate::mpoly::MPoly;
use crate::poly::Poly;
use crate::ratfunc::RatFunc;
use rand::Rng;
use std::fmt;

/// Default truncation order for expansions when the caller does not choose.
pub const DEFAULT_PREC: i64 = 128;

/// Knowledge horizon of a series: all coefficients below `UpTo(n)` are
/// known; `Exact` means every coefficient is known.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prec {
    Exact,
    UpTo(i64),
}

impl Prec {
    pub fn min(self, other: Prec) -> Prec {
        match (self, other) {
            (Prec::Exact, b) => b,
            (a, Prec::Exact) => a,
            (Prec::UpTo(a), Prec::UpTo(b)) => Prec::UpTo(a.min(b)),
        }
    }

    /// Shift the horizon by k (no-op on `Exact`).
    pub fn shift(self, k: i64) -> Prec {
        match self {
            Prec::Exact => Prec::Exact,
            Prec::UpTo(n) => Prec::UpTo(n + k),
        }
    }

    pub fn order(self) -> Option<i64> {
        match self {
            Prec::Exact => None,
            Prec::UpTo(n) => Some(n),
        }
    }
}

/// The valuation norm ‖F‖ of a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    /// Exactly the zero series: ‖F‖ = 0.
    Zero,
    /// ‖F‖ = p^{-c} exactly.
    Exact(i64),
    /// All known coefficients vanish: ‖F‖ ≤ p^{-n}.
    AtMost(i64),
}

impl Norm {
    /// Compare magnitudes where possible (p^{-a} > p^{-b} iff a < b).
    pub fn le(self, other: Norm) -> Option<bool> {
        match (self, other) {
            (Norm::Zero, _) => Some(true),
            (Norm::Exact(_) | Norm::AtMost(_), Norm::Zero) => Some(false),
            (Norm::Exact(a), Norm::Exact(b)) => Some(a >= b),
            (Norm::AtMost(a), Norm::Exact(b)) => {
                if a >= b {
                    Some(true)
                } else {
                    None
                }
            }
            (Norm::Exact(a), Norm::AtMost(b)) => {
                if a < b {
                    Some(false)
                } else {
                    None
                }
            }
            (Norm::AtMost(_), Norm::AtMost(_)) => None,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Zero => write!(f, "0"),
            Norm::Exact(c) => write!(f, "p^(-{c})"),
            Norm::AtMost(n) => write!(f, "<=p^(-{n})"),
        }
    }
}

/// A truncated Laurent series over F_p.
///
/// `coeffs[0]` is the coefficient of X^offset and is nonzero when the
/// vector is nonempty; stored trailing zeros are stripped. Coefficients
/// between the stored window and the truncation order are known zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    p: u64,
    offset: i64,
    coeffs: Vec<u64>,
    prec: Prec,
}

impl Series {
    // ---- Constructors ----

    pub fn new(p: u64, offset: i64, coeffs: Vec<u64>, prec: Prec) -> Self {
        let mut s = Series {
            p,
            offset,
            coeffs: coeffs.into_iter().map(|c| c % p).collect(),
            prec,
        };
        s.normalize();
        s
    }

    /// The exactly-zero series.
    pub fn zero(p: u64) -> Self {
        Series { p, offset: 0, coeffs: Vec::new(), prec: Prec::Exact }
    }

    /// A series with no known nonzero coefficient below `n`.
    pub fn zero_so_far(p: u64, n: i64) -> Self {
        Series { p, offset: 0, coeffs: Vec::new(), prec: Prec::UpTo(n) }
    }

    pub fn one(p: u64) -> Self {
        Series::from_poly(&Poly::one(p))
    }

    /// Embed a polynomial as an exact series.
    pub fn from_poly(poly: &Poly) -> Self {
        Series::new(poly.p(), 0, poly.coeffs().to_vec(), Prec::Exact)
    }

    pub fn constant(p: u64, c: u64) -> Self {
        Series::from_poly(&Poly::constant(p, c))
    }

    /// Expand a rational function to relative precision `rel` past its
    /// valuation. Exact when the function is a polynomial.
    pub fn from_ratfunc(r: &RatFunc, rel: i64) -> Result<Self> {
        if let Some(poly) = r.as_poly() {
            return Ok(Series::from_poly(poly));
        }
        let num = Series::from_poly(r.num());
        let den = Series::from_poly(r.den());
        num.mul(&den.invert_to(rel)?)
    }

    fn normalize(&mut self) {
        let lead_zeros = self.coeffs.iter().take_while(|&&c| c == 0).count();
        if lead_zeros > 0 {
            self.coeffs.drain(..lead_zeros);
            self.offset += lead_zeros as i64;
        }
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
        if let Prec::UpTo(n) = self.prec {
            // clip stored coefficients at the truncation order
            if self.offset >= n {
                self.coeffs.clear();
            } else if self.offset + self.coeffs.len() as i64 > n {
                self.coeffs.truncate((n - self.offset) as usize);
                while self.coeffs.last() == Some(&0) {
                    self.coeffs.pop();
                }
            }
        }
        if self.coeffs.is_empty() {
            self.offset = 0;
        }
    }

    fn fp(&self) -> Fp {
        Fp::new(self.p).expect("validated modulus")
    }

    // ---- Queries ----

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn prec(&self) -> Prec {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec == Prec::Exact
    }

    /// True when no nonzero coefficient is known.
    pub fn is_zero_so_far(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// True only for the exactly-zero series.
    pub fn is_exactly_zero(&self) -> bool {
        self.coeffs.is_empty() && self.is_exact()
    }

    /// Lowest exponent with a nonzero coefficient, when one is known.
    pub fn valuation(&self) -> Option<i64> {
        if self.coeffs.is_empty() { None } else { Some(self.offset) }
    }

    /// Valuation lower bound: the valuation itself, or the truncation
    /// order for a series that is zero so far. `None` for exact zero.
    fn val_bound(&self) -> Option<i64> {
        match (self.valuation(), self.prec) {
            (Some(v), _) => Some(v),
            (None, Prec::UpTo(n)) => Some(n),
            (None, Prec::Exact) => None,
        }
    }

    /// Coefficient of X^k, or `None` if unknown.
    pub fn coeff(&self, k: i64) -> Option<u64> {
        if let Prec::UpTo(n) = self.prec {
            if k >= n {
                return None;
            }
        }
        if k < self.offset || k >= self.offset + self.coeffs.len() as i64 {
            Some(0)
        } else {
            Some(self.coeffs[(k - self.offset) as usize])
        }
    }

    /// ‖F‖ per the valuation norm.
    pub fn norm(&self) -> Norm {
        match (self.valuation(), self.prec) {
            (Some(v), _) => Norm::Exact(v),
            (None, Prec::Exact) => Norm::Zero,
            (None, Prec::UpTo(n)) => Norm::AtMost(n),
        }
    }

    /// The largest order m such that both series are known below m.
    pub fn common_prec(&self, other: &Series) -> Prec {
        self.prec.min(other.prec)
    }

    /// Equality on the common known window. Returns the window bound
    /// (`Prec::Exact` means the equality is exact).
    pub fn eq_mod(&self, other: &Series) -> (bool, Prec) {
        let common = self.common_prec(other);
        let eq = match common {
            Prec::Exact => self.offset == other.offset && self.coeffs == other.coeffs,
            Prec::UpTo(n) => {
                let lo = self
                    .valuation()
                    .unwrap_or(n)
                    .min(other.valuation().unwrap_or(n));
                (lo..n).all(|k| self.coeff(k) == other.coeff(k))
            }
        };
        (eq, common)
    }

    /// First exponent below the common horizon where the series differ.
    pub fn first_difference(&self, other: &Series) -> Option<i64> {
        let hi = match self.common_prec(other) {
            Prec::UpTo(n) => n,
            Prec::Exact => {
                
                (self.offset + self.coeffs.len() as i64)
                    .max(other.offset + other.coeffs.len() as i64)
            }
        };
        let lo = self
            .valuation()
            .unwrap_or(hi)
            .min(other.valuation().unwrap_or(hi));
        (lo..hi).find(|&k| self.coeff(k) != other.coeff(k))
    }

    // ---- Arithmetic ----

    fn check_p(&self, other: &Series) -> Result<()> {
        if self.p != other.p {
            return Err(Error::PrimeMismatch(self.p, other.p));
        }
        Ok(())
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        self.check_p(other)?;
        let prec = self.common_prec(other);
        let lo = match (self.valuation(), other.valuation()) {
            (None, None) => {
                return Ok(Series { p: self.p, offset: 0, coeffs: Vec::new(), prec });
            }
            (a, b) => a.unwrap_or(i64::MAX).min(b.unwrap_or(i64::MAX)),
        };
        let hi = match prec {
            Prec::Exact => (self.offset + self.coeffs.len() as i64)
                .max(other.offset + other.coeffs.len() as i64),
            Prec::UpTo(n) => n,
        };
        let fp = self.fp();
        let mut coeffs = Vec::with_capacity((hi - lo).max(0) as usize);
        for k in lo..hi {
            coeffs.push(fp.add(
                self.coeff(k).unwrap_or(0),
                other.coeff(k).unwrap_or(0),
            ));
        }
        Ok(Series::new(self.p, lo, coeffs, prec))
    }

    pub fn neg(&self) -> Series {
        let fp = self.fp();
        Series {
            p: self.p,
            offset: self.offset,
            coeffs: self.coeffs.iter().map(|&c| fp.neg(c)).collect(),
            prec: self.prec,
        }
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.add(&other.neg())
    }

    /// Product. The result is known up to min(Na + val b, Nb + val a):
    /// the unknown tail of one factor first pollutes the exponent where it
    /// meets the lowest term of the other.
    pub fn mul(&self, other: &Series) -> Result<Series> {
        self.check_p(other)?;
        if self.is_exactly_zero() || other.is_exactly_zero() {
            return Ok(Series::zero(self.p));
        }
        let prec = match (self.prec, other.prec, self.val_bound(), other.val_bound()) {
            (Prec::Exact, Prec::Exact, _, _) => Prec::Exact,
            (Prec::UpTo(na), Prec::Exact, _, Some(vb)) => Prec::UpTo(na + vb),
            (Prec::Exact, Prec::UpTo(nb), Some(va), _) => Prec::UpTo(nb + va),
            (Prec::UpTo(na), Prec::UpTo(nb), Some(va), Some(vb)) => {
                Prec::UpTo((na + vb).min(nb + va))
            }
            // one side exactly zero is handled above; val_bound None implies exact zero
            _ => unreachable!(),
        };
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Ok(Series { p: self.p, offset: 0, coeffs: Vec::new(), prec });
        }
        let lo = self.offset + other.offset;
        let hi = match prec {
            Prec::Exact => lo + self.coeffs.len() as i64 + other.coeffs.len() as i64 - 1,
            Prec::UpTo(n) => n,
        };
        let fp = self.fp();
        let mut coeffs = vec![0u64; (hi - lo).max(0) as usize];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                let k = self.offset + i as i64 + other.offset + j as i64;
                if k >= hi {
                    break;
                }
                let slot = (k - lo) as usize;
                coeffs[slot] = fp.add(coeffs[slot], fp.mul(a, b));
            }
        }
        Ok(Series::new(self.p, lo, coeffs, prec))
    }

    /// Multiply by X^k.
    pub fn shift(&self, k: i64) -> Series {
        Series {
            p: self.p,
            offset: self.offset + k,
            coeffs: self.coeffs.clone(),
            prec: self.prec.shift(k),
        }
    }

    pub fn mul_scalar(&self, c: u64) -> Series {
        let fp = self.fp();
        let c = c % self.p;
        if c == 0 {
            return Series { p: self.p, offset: 0, coeffs: Vec::new(), prec: self.prec };
        }
        Series {
            p: self.p,
            offset: self.offset,
            coeffs: self.coeffs.iter().map(|&a| fp.mul(a, c)).collect(),
            prec: self.prec,
        }
    }

    /// The p-th power. Frobenius is coefficient spreading, so precision
    /// multiplies instead of following the generic product rule.
    pub fn pow_p(&self) -> Series {
        let p = self.p;
        let prec = match self.prec {
            Prec::Exact => Prec::Exact,
            Prec::UpTo(n) => Prec::UpTo(n.saturating_mul(p as i64)),
        };
        if self.coeffs.is_empty() {
            return Series { p, offset: 0, coeffs: Vec::new(), prec };
        }
        let mut coeffs = vec![0u64; (self.coeffs.len() - 1) * p as usize + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[i * p as usize] = c; // c^p = c in F_p
        }
        Series { p, offset: self.offset * p as i64, coeffs, prec }
    }

    pub fn pow(&self, exp: u32) -> Result<Series> {
        let mut acc = Series::one(self.p);
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Inverse by coefficient recursion, to the relative precision the
    /// input supports (`rel` coefficients for exact non-polynomial input).
    pub fn invert_to(&self, rel: i64) -> Result<Series> {
        let v = self.valuation().ok_or(Error::ZeroInversion)?;
        let rel = match self.prec {
            Prec::Exact => rel,
            Prec::UpTo(n) => (n - v).min(rel),
        };
        if rel <= 0 {
            return Err(Error::PrecisionExhausted { left: rel, need: 1 });
        }
        let fp = self.fp();
        let lead_inv = fp.inv(self.coeffs[0]);
        let mut inv = vec![0u64; rel as usize];
        inv[0] = lead_inv;
        for n in 1..rel as usize {
            // c[n] = -lead_inv * sum_{k=1..n} a[k] c[n-k]
            let mut sum = 0u64;
            for k in 1..=n {
                let a = self.coeff(v + k as i64).unwrap_or(0);
                if a == 0 {
                    continue;
                }
                sum = fp.add(sum, fp.mul(a, inv[n - k]));
            }
            inv[n] = fp.neg(fp.mul(lead_inv, sum));
        }
        let exact_monomial = self.is_exact() && self.coeffs.len() == 1;
        let prec = if exact_monomial {
            Prec::Exact
        } else {
            Prec::UpTo(-v + rel)
        };
        Ok(Series::new(self.p, -v, inv, prec))
    }

    pub fn invert(&self) -> Result<Series> {
        self.invert_to(DEFAULT_PREC)
    }

    pub fn div(&self, other: &Series) -> Result<Series> {
        // enough relative precision in the inverse that the numerator's
        // own horizon is the binding constraint
        let rel = match (self.prec, self.val_bound()) {
            (Prec::Exact, _) | (_, None) => DEFAULT_PREC,
            (Prec::UpTo(n), Some(v)) => (n - v).max(1),
        };
        self.mul(&other.invert_to(rel)?)
    }

    // ---- Section operators ----

    /// Cartier operator Λ_i: coefficient n of the result is coefficient
    /// pn+i of the input. Defined on `F_p[[X]]` only.
    pub fn cartier(&self, digit: u64) -> Result<Series> {
        if digit >= self.p {
            return Err(Error::DigitOutOfRange { digit, p: self.p });
        }
        if self.offset < 0 && !self.coeffs.is_empty() {
            return Err(Error::NegativeOffset(self.offset));
        }
        let p = self.p as i64;
        let prec = match self.prec {
            Prec::Exact => Prec::Exact,
            // known for pn+i < N, i.e. n < ceil((N-i)/p)
            Prec::UpTo(n) => Prec::UpTo(((n - digit as i64) + p - 1).div_euclid(p).max(0)),
        };
        let mut out = Vec::new();
        let mut out_offset = 0i64;
        let mut started = false;
        let hi = self.offset + self.coeffs.len() as i64;
        let mut k = if self.coeffs.is_empty() { 0 } else { self.offset };
        // round k up to the first exponent ≡ digit (mod p)
        if !self.coeffs.is_empty() {
            let rem = (k - digit as i64).rem_euclid(p);
            if rem != 0 {
                k += p - rem;
            }
            while k < hi {
                let c = self.coeff(k).unwrap_or(0);
                let n = (k - digit as i64) / p;
                if !started {
                    if c != 0 {
                        started = true;
                        out_offset = n;
                        out.push(c);
                    }
                } else {
                    while (out_offset + out.len() as i64) < n {
                        out.push(0);
                    }
                    out.push(c);
                }
                k += p;
            }
        }
        Ok(Series::new(self.p, out_offset, out, prec))
    }

    /// Inverse of the section decomposition: Σ_i X^i · `parts[i]`^p.
    pub fn reassemble(parts: &[Series]) -> Result<Series> {
        let p = parts
            .first()
            .map(|s| s.p)
            .ok_or(Error::ArityMismatch { expected: 1, got: 0 })?;
        if parts.len() != p as usize {
            return Err(Error::ArityMismatch { expected: p as usize, got: parts.len() });
        }
        let mut acc = Series::zero(p);
        for (i, part) in parts.iter().enumerate() {
            if part.offset < 0 && !part.coeffs.is_empty() {
                return Err(Error::NegativeOffset(part.offset));
            }
            acc = acc.add(&part.pow_p().shift(i as i64))?;
        }
        Ok(acc)
    }

    /// Tail section at j: coefficient i of the result is coefficient i+j
    /// of the input, so F = (prefix below j) + X^j · tail.
    pub fn tail_section(&self, j: i64) -> Result<Series> {
        assert!(j >= 0, "tail_section: negative shift");
        if self.offset < 0 && !self.coeffs.is_empty() {
            return Err(Error::NegativeOffset(self.offset));
        }
        if let Prec::UpTo(n) = self.prec {
            if j >= n {
                return Err(Error::TailOutOfRange { j, trunc: n });
            }
        }
        let lo = self.offset.max(j);
        let hi = self.offset + self.coeffs.len() as i64;
        let coeffs: Vec<u64> = (lo..hi).map(|k| self.coeff(k).unwrap_or(0)).collect();
        Ok(Series::new(self.p, lo - j, coeffs, self.prec.shift(-j)))
    }

    /// The polynomial prefix Σ_{i<j} f_i X^i (input must sit in `F_p[[X]]`).
    pub fn prefix_poly(&self, j: i64) -> Poly {
        let coeffs: Vec<u64> = (0..j.max(0))
            .map(|k| self.coeff(k).unwrap_or(0))
            .collect();
        Poly::from_coeffs(self.p, coeffs)
    }

    /// Truncate the knowledge horizon down to `n` (no-op if already lower).
    pub fn restrict_prec(&self, n: i64) -> Series {
        match self.prec {
            Prec::UpTo(m) if m <= n => self.clone(),
            _ => {
                let mut s = self.clone();
                s.prec = Prec::UpTo(n);
                s.normalize();
                s
            }
        }
    }

    /// Uniform random series with valuation `val` and `len` known
    /// coefficients (leading coefficient forced nonzero).
    pub fn random<R: Rng>(rng: &mut R, p: u64, val: i64, len: usize) -> Series {
        assert!(len > 0);
        let mut coeffs: Vec<u64> = (0..len).map(|_| rng.random_range(0..p)).collect();
        coeffs[0] = rng.random_range(1..p);
        Series::new(p, val, coeffs, Prec::UpTo(val + len as i64))
    }
}

// ---- Hensel lifting ----

/// The unique series root of P(X, Y) in `F_p[[X]]` with the given residue at
/// X = 0, to truncation order `n`. Requires a simple residual root:
/// P(0, seed) = 0 and ∂P/∂Y(0, seed) ≠ 0.
pub fn hensel_expand(annihilator: &MPoly, seed: u64, n: i64) -> Result<Series> {
    assert_eq!(annihilator.nvars(), 1, "hensel_expand wants a univariate polynomial in Y1");
    assert!(n >= 1);
    let p = annihilator.p();
    let fp = Fp::new(p)?;
    let seed = seed % p;
    let coeffs: Vec<Poly> = annihilator
        .coeffs_in(0)
        .into_iter()
        .map(|c| c.as_coefficient().expect("coefficients are in F_p[X]"))
        .collect();
    let residual: Vec<u64> = coeffs.iter().map(|c| c.coeff(0)).collect();
    let res_poly = Poly::from_coeffs(p, residual);
    if res_poly.eval(seed) != 0 {
        return Err(Error::NotResidualRoot { seed });
    }
    if res_poly.derivative().eval(seed) == 0 {
        return Err(Error::RamifiedSeed { seed });
    }

    // Newton iteration on raw coefficient windows mod X^m, doubling m.
    let n = n as usize;
    let mut f = vec![0u64; n];
    f[0] = seed;
    let mut m = 1usize;
    while m < n {
        let m2 = (2 * m).min(n);
        let value = eval_window(&fp, &coeffs, &f, m2);
        let deriv = eval_window_deriv(&fp, &coeffs, &f, m2);
        let deriv_inv = invert_window(&fp, &deriv, m2);
        let delta = mul_window(&fp, &value, &deriv_inv, m2);
        for k in 0..m2 {
            f[k] = fp.sub(f[k], delta[k]);
        }
        m = m2;
    }
    debug_assert!(
        eval_window(&fp, &coeffs, &f, n).iter().all(|&c| c == 0),
        "lifted root must annihilate to the working order"
    );
    Ok(Series::new(p, 0, f, Prec::UpTo(n as i64)))
}

fn mul_window(fp: &Fp, a: &[u64], b: &[u64], n: usize) -> Vec<u64> {
    let mut out = vec![0u64; n];
    for (i, &x) in a.iter().enumerate().take(n) {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(n - i) {
            out[i + j] = fp.add(out[i + j], fp.mul(x, y));
        }
    }
    out
}

fn invert_window(fp: &Fp, a: &[u64], n: usize) -> Vec<u64> {
    assert!(!a.is_empty() && a[0] != 0, "invert_window: unit required");
    let mut x = vec![0u64; n];
    x[0] = fp.inv(a[0]);
    let mut m = 1usize;
    while m < n {
        let m2 = (2 * m).min(n);
        // x <- x + x·(1 - a·x), valid in any characteristic
        let ax = mul_window(fp, &a[..a.len().min(m2)], &x, m2);
        let mut one_minus = vec![0u64; m2];
        one_minus[0] = fp.sub(1, ax[0]);
        for k in 1..m2 {
            one_minus[k] = fp.neg(ax[k]);
        }
        let corr = mul_window(fp, &x, &one_minus, m2);
        for k in 0..m2 {
            x[k] = fp.add(x[k], corr[k]);
        }
        m = m2;
    }
    x
}

fn eval_window(fp: &Fp, coeffs: &[Poly], f: &[u64], n: usize) -> Vec<u64> {
    // Horner in Y over windows mod X^n
    let mut acc = vec![0u64; n];
    for c in coeffs.iter().rev() {
        acc = mul_window(fp, &acc, &f[..f.len().min(n)], n);
        for (k, &cc) in c.coeffs().iter().enumerate().take(n) {
            acc[k] = fp.add(acc[k], cc);
        }
    }
    acc
}

fn eval_window_deriv(fp: &Fp, coeffs: &[Poly], f: &[u64], n: usize) -> Vec<u64> {
    let mut acc = vec![0u64; n];
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = mul_window(fp, &acc, &f[..f.len().min(n)], n);
        let scale = fp.reduce_u(k as u64);
        if scale != 0 {
            for (i, &cc) in c.coeffs().iter().enumerate().take(n) {
                acc[i] = fp.add(acc[i], fp.mul(scale, cc));
            }
        }
    }
    acc
}

// ---- Evaluation of multivariate polynomials at series points ----

/// Evaluate P(Y1..Yn) at a tuple of series. Precision follows the series
/// product/sum rules term by term, so the result's horizon is the best the
/// inputs justify.
pub fn mpoly_eval(poly: &MPoly, point: &[Series]) -> Result<Series> {
    if point.len() != poly.nvars() {
        return Err(Error::ArityMismatch { expected: poly.nvars(), got: point.len() });
    }
    let p = poly.p();
    let mut acc = Series::zero(p);
    for (mono, coeff) in poly.terms() {
        let mut term = Series::from_poly(coeff);
        for (i, &e) in mono.0.iter().enumerate() {
            if e > 0 {
                term = term.mul(&point[i].pow(e)?)?;
            }
        }
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

// ---- Text format ----

impl fmt::Display for Series {
    /// `p=2 offset=0 coeffs=1,1,0,1 trunc=128`; `trunc=exact` for exact
    /// series. Parsed back by [`Series::parse`] bit-exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let trunc = match self.prec {
            Prec::Exact => "exact".to_string(),
            Prec::UpTo(n) => n.to_string(),
        };
        write!(f, "p={} offset={} coeffs={} trunc={}", self.p, self.offset, coeffs, trunc)
    }
}

impl Series {
    pub fn parse(input: &str) -> Result<Series> {
        let mut p = None;
        let mut offset = None;
        let mut coeffs: Option<Vec<u64>> = None;
        let mut prec = None;
        for field in input.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or(Error::Parse {
                what: "series",
                detail: format!("expected key=value, got `{field}`"),
            })?;
            match key {
                "p" => p = Some(value.parse::<u64>().map_err(bad_series)?),
                "offset" => offset = Some(value.parse::<i64>().map_err(bad_series)?),
                "coeffs" => {
                    let v = if value.is_empty() {
                        Vec::new()
                    } else {
                        value
                            .split(',')
                            .map(|c| c.parse::<u64>().map_err(bad_series))
                            .collect::<Result<Vec<_>>>()?
                    };
                    coeffs = Some(v);
                }
                "trunc" => {
                    prec = Some(if value == "exact" {
                        Prec::Exact
                    } else {
                        Prec::UpTo(value.parse::<i64>().map_err(bad_series)?)
                    });
                }
                other => {
                    return Err(Error::Parse {
                        what: "series",
                        detail: format!("unknown field `{other}`"),
                    });
                }
            }
        }
        match (p, offset, coeffs, prec) {
            (Some(p), Some(offset), Some(coeffs), Some(prec)) => {
                Ok(Series::new(p, offset, coeffs, prec))
            }
            _ => Err(Error::Parse {
                what: "series",
                detail: "missing one of p/offset/coeffs/trunc".to_string(),
            }),
        }
    }
}

fn bad_series<E: fmt::Display>(e: E) -> Error {
    Error::Parse { what: "series", detail: e.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_mpoly;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(p: u64, offset: i64, coeffs: &[u64], trunc: i64) -> Series {
        Series::new(p, offset, coeffs.to_vec(), Prec::UpTo(trunc))
    }

    // ---- arithmetic ----

    #[test]
    fn frobenius_square_char2() {
        let a = Series::from_poly(&Poly::from_coeffs(2, vec![1, 1]));
        let sq = a.mul(&a).unwrap();
        assert_eq!(sq, Series::from_poly(&Poly::from_coeffs(2, vec![1, 0, 1])));
        assert!(sq.is_exact());
    }

    #[test]
    fn doubling_vanishes_char2() {
        let a = s(2, 0, &[1, 1, 0, 1], 8);
        let sum = a.add(&a).unwrap();
        assert!(sum.is_zero_so_far());
        assert!(!sum.is_exactly_zero());
        assert_eq!(sum.prec(), Prec::UpTo(8));
    }

    #[test]
    fn geometric_series_inverse() {
        let inv = Series::from_poly(&Poly::from_coeffs(2, vec![1, 1]))
            .invert()
            .unwrap();
        for k in 0..DEFAULT_PREC {
            assert_eq!(inv.coeff(k), Some(1), "all-ones series expected");
        }
        assert_eq!(inv.prec(), Prec::UpTo(DEFAULT_PREC));
        // sanity: (1+X)·inv ≡ 1
        let prod = inv
            .mul(&Series::from_poly(&Poly::from_coeffs(2, vec![1, 1])))
            .unwrap();
        let (eq, _) = prod.eq_mod(&Series::one(2));
        assert!(eq);
    }

    #[test]
    fn monomial_inverse_is_exact() {
        let m = Series::from_poly(&Poly::monomial(3, 2, 5));
        let inv = m.invert().unwrap();
        assert!(inv.is_exact());
        assert_eq!(inv.valuation(), Some(-5));
        assert_eq!(m.mul(&inv).unwrap(), Series::one(3));
    }

    #[test]
    fn inverting_zero_rejected() {
        assert!(matches!(Series::zero(2).invert(), Err(Error::ZeroInversion)));
        assert!(matches!(
            Series::zero_so_far(2, 10).invert(),
            Err(Error::ZeroInversion)
        ));
    }

    #[test]
    fn product_precision_rule() {
        // a known to 10 with val 2, b known to 7 with val 3:
        // product known to min(10+3, 7+2) = 9
        let a = s(5, 2, &[1, 2, 3], 10);
        let b = s(5, 3, &[4, 1], 7);
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod.prec(), Prec::UpTo(9));
        assert_eq!(prod.valuation(), Some(5));
    }

    // ---- norm ----

    #[test]
    fn norm_is_lowest_exponent() {
        let f = Series::from_poly(&Poly::from_coeffs(2, vec![0, 0, 0, 1, 0, 1]));
        assert_eq!(f.norm(), Norm::Exact(3));
    }

    #[test]
    fn norm_of_one() {
        assert_eq!(Series::one(5).norm(), Norm::Exact(0));
    }

    #[test]
    fn norm_unknown_tail_marker() {
        assert_eq!(Series::zero_so_far(2, 10).norm(), Norm::AtMost(10));
        assert_eq!(Series::zero(2).norm(), Norm::Zero);
    }

    #[test]
    fn norm_laws_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..1000 {
            let p = [2u64, 3, 5][rng.random_range(0..3)];
            let (va, vb) = (rng.random_range(0..6), rng.random_range(0..6));
            let a = Series::random(&mut rng, p, va, 24);
            let b = Series::random(&mut rng, p, vb, 24);
            let (va, vb) = (a.valuation().unwrap(), b.valuation().unwrap());
            // multiplicativity
            assert_eq!(a.mul(&b).unwrap().norm(), Norm::Exact(va + vb));
            // ultrametric with equality when norms differ
            let sum_norm = a.add(&b).unwrap().norm();
            let max = va.min(vb); // larger norm = smaller valuation
            match sum_norm {
                Norm::Exact(vs) => {
                    assert!(vs >= max);
                    if va != vb {
                        assert_eq!(vs, max);
                    }
                }
                Norm::AtMost(n) => {
                    assert!(va == vb && n >= max);
                }
                Norm::Zero => panic!("sum of inexact series cannot be exactly zero"),
            }
        }
    }

    // ---- section operators ----

    #[test]
    fn cartier_index_selection() {
        // F = 1 + X + X^3 + X^4 over F_2
        let f = Series::from_poly(&Poly::from_coeffs(2, vec![1, 1, 0, 1, 1]));
        assert_eq!(
            f.cartier(0).unwrap(),
            Series::from_poly(&Poly::from_coeffs(2, vec![1, 0, 1]))
        );
        assert_eq!(
            f.cartier(1).unwrap(),
            Series::from_poly(&Poly::from_coeffs(2, vec![1, 1]))
        );
    }

    #[test]
    fn cartier_of_zero() {
        for i in 0..2 {
            assert!(Series::zero(2).cartier(i).unwrap().is_exactly_zero());
        }
    }

    #[test]
    fn cartier_arithmetic_progression_p3() {
        // F = X + X^4 + X^7: indices ≡ 1 mod 3
        let f = Series::from_poly(&Poly::from_coeffs(3, vec![0, 1, 0, 0, 1, 0, 0, 1]));
        assert_eq!(
            f.cartier(1).unwrap(),
            Series::from_poly(&Poly::from_coeffs(3, vec![1, 1, 1]))
        );
        assert!(f.cartier(0).unwrap().is_exactly_zero());
        assert!(f.cartier(2).unwrap().is_exactly_zero());
    }

    #[test]
    fn cartier_truncation_order() {
        for p in [2u64, 3, 5] {
            for n in 1..40i64 {
                for i in 0..p {
                    let f = Series::new(p, 0, vec![1; n as usize], Prec::UpTo(n));
                    let expected = ((n - i as i64 - 1).div_euclid(p as i64) + 1).max(0);
                    assert_eq!(
                        f.cartier(i).unwrap().prec(),
                        Prec::UpTo(expected),
                        "p={p} n={n} i={i}"
                    );
                }
            }
        }
    }

    #[test]
    fn cartier_needs_nonnegative_valuation() {
        let f = s(2, -1, &[1], 4);
        assert!(matches!(f.cartier(0), Err(Error::NegativeOffset(-1))));
    }

    #[test]
    fn reassemble_single_part_is_pth_power() {
        let f = s(3, 0, &[1, 2, 1], 12);
        let parts = vec![f.clone(), Series::zero(3), Series::zero(3)];
        let r = Series::reassemble(&parts).unwrap();
        let (eq, _) = r.eq_mod(&f.pow_p());
        assert!(eq);
    }

    #[test]
    fn reassemble_hand_example() {
        // parts (1+X^2, 1+X) over F_2: (1+X^2)^2 + X(1+X)^2 = 1+X+X^3+X^4
        let a = Series::from_poly(&Poly::from_coeffs(2, vec![1, 0, 1]));
        let b = Series::from_poly(&Poly::from_coeffs(2, vec![1, 1]));
        let r = Series::reassemble(&[a, b]).unwrap();
        assert_eq!(
            r,
            Series::from_poly(&Poly::from_coeffs(2, vec![1, 1, 0, 1, 1]))
        );
    }

    #[test]
    fn reassemble_wrong_arity_rejected() {
        let f = Series::one(3);
        assert!(matches!(
            Series::reassemble(&[f.clone(), f.clone()]),
            Err(Error::ArityMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn fundamental_identity_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for p in [2u64, 3, 5] {
            for _ in 0..100 {
                let val = rng.random_range(0..4);
                let f = Series::random(&mut rng, p, val, 64);
                let parts: Vec<Series> =
                    (0..p).map(|i| f.cartier(i).unwrap()).collect();
                let back = Series::reassemble(&parts).unwrap();
                let (eq, prec) = back.eq_mod(&f);
                assert!(eq, "reassembly must reproduce the series");
                assert!(matches!(prec, Prec::UpTo(n) if n >= 64));
                // and the sections of the reassembly are the parts
                for (i, part) in parts.iter().enumerate() {
                    let (eq, _) = back.cartier(i as u64).unwrap().eq_mod(part);
                    assert!(eq);
                }
            }
        }
    }

    #[test]
    fn cartier_is_additive_and_semilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for p in [2u64, 3] {
            for _ in 0..200 {
                let (va, vb) = (rng.random_range(0..3), rng.random_range(0..3));
                let a = Series::random(&mut rng, p, va, 48);
                let b = Series::random(&mut rng, p, vb, 48);
                for i in 0..p {
                    let lhs = a.add(&b).unwrap().cartier(i).unwrap();
                    let rhs = a.cartier(i).unwrap().add(&b.cartier(i).unwrap()).unwrap();
                    let (eq, _) = lhs.eq_mod(&rhs);
                    assert!(eq, "additivity");

                    let lhs = a.mul(&b.pow_p()).unwrap().cartier(i).unwrap();
                    let rhs = a.cartier(i).unwrap().mul(&b).unwrap();
                    let (eq, _) = lhs.eq_mod(&rhs);
                    assert!(eq, "semilinearity over p-th powers");
                }
            }
        }
    }

    // ---- tail sections ----

    #[test]
    fn tail_section_identity_and_shift() {
        let f = Series::from_poly(&Poly::from_coeffs(2, vec![1, 1, 0, 1]));
        assert_eq!(f.tail_section(0).unwrap(), f);
        assert_eq!(
            f.tail_section(1).unwrap(),
            Series::from_poly(&Poly::from_coeffs(2, vec![1, 0, 1]))
        );
    }

    #[test]
    fn tail_section_recomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        for _ in 0..200 {
            let p = [2u64, 3, 5][rng.random_range(0..3)];
            let val = rng.random_range(0..4);
            let f = Series::random(&mut rng, p, val, 32);
            let f0 = Series::constant(p, f.coeff(0).unwrap());
            let recomposed = f0
                .add(&f.tail_section(1).unwrap().shift(1))
                .unwrap();
            let (eq, _) = recomposed.eq_mod(&f);
            assert!(eq);
        }
    }

    #[test]
    fn tail_section_beyond_precision_rejected() {
        let f = s(2, 0, &[1, 1], 4);
        assert!(matches!(
            f.tail_section(4),
            Err(Error::TailOutOfRange { j: 4, trunc: 4 })
        ));
    }

    // ---- Hensel lifting ----

    #[test]
    fn hensel_lacunary_root() {
        // Y^2 + Y + X over F_2, seed 0: the characteristic series of powers of two
        let p = parse_mpoly(2, "Y1^2 + Y1 + X", 1).unwrap();
        let f = hensel_expand(&p, 0, 128).unwrap();
        for k in 0..128i64 {
            let expected = if k > 0 && (k as u64).is_power_of_two() { 1 } else { 0 };
            assert_eq!(f.coeff(k), Some(expected), "coefficient of X^{k}");
        }
        let value = mpoly_eval(&p, &[f]).unwrap();
        assert!(value.is_zero_so_far());
    }

    #[test]
    fn hensel_linear_matches_inverse() {
        // (1+X)Y + 1 over F_2, seed 1: the all-ones series
        let p = parse_mpoly(2, "(1+X)*Y1 + 1", 1).unwrap();
        let f = hensel_expand(&p, 1, 64).unwrap();
        let inv = Series::from_poly(&Poly::from_coeffs(2, vec![1, 1]))
            .invert_to(64)
            .unwrap();
        let (eq, _) = f.eq_mod(&inv);
        assert!(eq);
    }

    #[test]
    fn hensel_constant_root() {
        // Y + c over F_5, seed -c
        let p = parse_mpoly(5, "Y1 + 2", 1).unwrap();
        let f = hensel_expand(&p, 3, 16).unwrap();
        assert_eq!(f.coeff(0), Some(3));
        for k in 1..16 {
            assert_eq!(f.coeff(k), Some(0));
        }
    }

    #[test]
    fn hensel_rejects_bad_seeds() {
        let p = parse_mpoly(2, "Y1^2 + Y1 + X", 1).unwrap();
        assert!(matches!(
            hensel_expand(&p, 1, 16),
            Ok(_) // seed 1 is the other simple root
        ));
        let ramified = parse_mpoly(2, "Y1^2 + X", 1).unwrap();
        assert!(matches!(
            hensel_expand(&ramified, 0, 16),
            Err(Error::RamifiedSeed { seed: 0 })
        ));
        let nonroot = parse_mpoly(2, "Y1 + 1", 1).unwrap();
        assert!(matches!(
            hensel_expand(&nonroot, 0, 16),
            Err(Error::NotResidualRoot { seed: 0 })
        ));
    }

    #[test]
    fn hensel_outputs_annihilate_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut accepted = 0;
        while accepted < 50 {
            let p = [2u64, 3][rng.random_range(0..2)];
            let d = rng.random_range(1..3u32);
            let mut m = MPoly::zero(p, 1);
            for e in 0..=d {
                let deg = rng.random_range(0..3usize);
                let coeff =
                    Poly::from_coeffs(p, (0..=deg).map(|_| rng.random_range(0..p)).collect());
                m = m.add(&MPoly::term(coeff, vec![e]));
            }
            let seed = rng.random_range(0..p);
            match hensel_expand(&m, seed, 64) {
                Ok(f) => {
                    accepted += 1;
                    let value = mpoly_eval(&m, &[f]).unwrap();
                    assert!(
                        value.is_zero_so_far(),
                        "P = {m}, seed {seed}: value {value}"
                    );
                }
                Err(_) => continue,
            }
        }
    }

    // ---- convergence ----

    #[test]
    fn stabilizing_sequences_converge() {
        // partial sums of the all-ones series converge to it in the norm
        let limit = Series::from_poly(&Poly::from_coeffs(2, vec![1, 1]))
            .invert_to(64)
            .unwrap();
        for k in 1..32i64 {
            let partial = Series::from_poly(&limit.prefix_poly(k));
            let dist = partial.sub(&limit).unwrap().norm();
            // ‖partial - limit‖ = p^{-k}: distances shrink to zero
            assert_eq!(dist, Norm::Exact(k));
        }
        // coefficientwise stabilization pins every coefficient of the limit
        for k in 0..32i64 {
            let stable_from = Series::from_poly(&limit.prefix_poly(k + 1));
            assert_eq!(stable_from.coeff(k), limit.coeff(k));
        }
    }

    // ---- evaluation ----

    #[test]
    fn mpoly_eval_constant_and_projection() {
        let c = parse_mpoly(2, "1+X", 1).unwrap();
        let f = s(2, 0, &[1, 0, 1], 10);
        assert_eq!(
            mpoly_eval(&c, &[f.clone()]).unwrap(),
            Series::from_poly(&Poly::from_coeffs(2, vec![1, 1]))
        );
        let proj = parse_mpoly(2, "Y1", 1).unwrap();
        assert_eq!(mpoly_eval(&proj, &[f.clone()]).unwrap(), f);
    }

    #[test]
    fn mpoly_eval_arity_checked() {
        let m = parse_mpoly(2, "Y1+Y2", 2).unwrap();
        assert!(matches!(
            mpoly_eval(&m, &[Series::one(2)]),
            Err(Error::ArityMismatch { expected: 2, got: 1 })
        ));
    }

    // ---- text format ----

    #[test]
    fn text_format_roundtrip() {
        let cases = [
            s(2, 0, &[1, 1, 0, 1], 128),
            Series::from_poly(&Poly::from_coeffs(3, vec![0, 2, 1])),
            Series::zero(2),
            Series::zero_so_far(5, 17),
            s(3, -4, &[2, 0, 1], 9),
        ];
        for case in &cases {
            let printed = case.to_string();
            let reparsed = Series::parse(&printed).unwrap();
            assert_eq!(&reparsed, case, "round trip failed for `{printed}`");
        }
        assert_eq!(
            s(2, 0, &[1, 1, 0, 1], 128).to_string(),
            "p=2 offset=0 coeffs=1,1,0,1 trunc=128"
        );
    }
}
