//! Exact computer algebra over F_p: univariate and multivariate polynomial
//! arithmetic, truncated Laurent series with section (Cartier) operators,
//! automata with output and their kernels, conversions between automata and
//! annihilating polynomials, pseudo-morphism constraint networks, and
//! reduction of equational systems in positive characteristic.
//!
//! All values are immutable after construction and every operation is a
//! pure function, so everything here is `Send + Sync` for free.

pub mod automata;
pub mod christol;
pub mod eqsys;
pub mod error;
pub mod field;
pub mod mpoly;
pub mod parse;
pub mod poly;
pub mod ratfunc;
pub mod series;
pub mod tyszka;

pub use error::{Error, Result};
pub use field::{Fp, SmallField};
pub use mpoly::{MPoly, Monomial};
pub use poly::Poly;
pub use ratfunc::RatFunc;
pub use series::{hensel_expand, mpoly_eval, Norm, Prec, Series};

#[cfg(test)]
mod send_sync {
    use super::*;

    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn values_are_shareable() {
        assert_send_sync::<Poly>();
        assert_send_sync::<RatFunc>();
        assert_send_sync::<MPoly>();
        assert_send_sync::<Series>();
        assert_send_sync::<SmallField>();
    }
}
