//! Rational functions over F_p, reduced to lowest terms with monic denominator.

use crate::error::{Error, Result};
use crate::field::Fp;
use crate::poly::Poly;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatFunc {
    num: Poly,
    den: Poly, // nonzero, monic, coprime to num
}

impl RatFunc {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        assert_eq!(num.p(), den.p(), "RatFunc::new: mismatched moduli");
        let mut r = RatFunc { num, den };
        r.reduce();
        Ok(r)
    }

    pub fn from_poly(num: Poly) -> Self {
        let p = num.p();
        RatFunc { num, den: Poly::one(p) }
    }

    pub fn zero(p: u64) -> Self {
        RatFunc::from_poly(Poly::zero(p))
    }

    pub fn one(p: u64) -> Self {
        RatFunc::from_poly(Poly::one(p))
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den = Poly::one(self.num.p());
            return;
        }
        let g = self.num.gcd(&self.den);
        if !g.is_one() {
            self.num = self.num.div_exact(&g).expect("gcd divides");
            self.den = self.den.div_exact(&g).expect("gcd divides");
        }
        let lc = self.den.leading_coeff().unwrap();
        if lc != 1 {
            let fp = Fp::new(self.num.p()).unwrap();
            let inv = fp.inv(lc);
            self.num = self.num.mul_scalar(inv);
            self.den = self.den.mul_scalar(inv);
        }
    }

    pub fn p(&self) -> u64 {
        self.num.p()
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The polynomial part, when the denominator is 1.
    pub fn as_poly(&self) -> Option<&Poly> {
        if self.den.is_one() { Some(&self.num) } else { None }
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        RatFunc::new(num, den).expect("nonzero denominator")
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &RatFunc) -> RatFunc {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        let num = self.num.mul(&other.num);
        let den = self.den.mul(&other.den);
        RatFunc::new(num, den).expect("nonzero denominator")
    }

    pub fn inv(&self) -> Result<RatFunc> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        RatFunc::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, other: &RatFunc) -> Result<RatFunc> {
        Ok(self.mul(&other.inv()?))
    }

    /// Order of vanishing at 0 (negative for a pole at 0).
    pub fn valuation(&self) -> Option<i64> {
        let vn = self.num.valuation()? as i64;
        let vd = self.den.valuation().expect("denominator nonzero") as i64;
        Some(vn - vd)
    }

    /// Coefficient section operator, exact on rational functions.
    ///
    /// Writing r = N·D^{p-1} / D^p and using the semilinearity of the
    /// section maps gives the closed form  Λ_i(N/D) = Λ_i(N·D^{p-1}) / D.
    pub fn cartier(&self, digit: u64) -> Result<RatFunc> {
        let scaled = self.num.mul(&self.den.pow(self.p() - 1));
        RatFunc::new(scaled.cartier(digit)?, self.den.clone())
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}
