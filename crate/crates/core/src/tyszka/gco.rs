//! The section-operator instance of a generalized decomposition and a
//! bounded closure-membership test.
//!
//! Over `F_p((X))` restricted to `F_p[[X]]`, every x decomposes uniquely as
//! x = Σ_{r ∈ R} r·(λ(r))^p with R = {X^0, …, X^{p-1}}; the decomposition
//! map is a singleton and the constant field F_p(X) is stable under it.

use crate::error::{Error, Result};
use crate::field::{is_prime, Fp};
use crate::poly::Poly;
use crate::ratfunc::RatFunc;
use crate::series::{Prec, Series};

/// The (R, Λ) instance for `F_p[[X]]`: R is the set of monomials X^i for
/// i < p and Λ_x is the singleton of the section decomposition.
#[derive(Clone, Debug)]
pub struct GeneralizedCartier {
    p: u64,
}

impl GeneralizedCartier {
    pub fn instance(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(GeneralizedCartier { p })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// The index set R = {X^0, …, X^{p-1}} ⊂ K.
    pub fn r_set(&self) -> Vec<Poly> {
        (0..self.p as usize).map(|i| Poly::monomial(self.p, 1, i)).collect()
    }

    /// The unique λ ∈ Λ_x, as the vector (λ(X^0), …, λ(X^{p-1})).
    /// For x = 0 this is the zero map.
    pub fn decompose(&self, x: &Series) -> Result<Vec<Series>> {
        (0..self.p).map(|i| x.cartier(i)).collect()
    }

    /// Exact decomposition of a polynomial; K = `F_p[X]` is stable.
    pub fn decompose_poly(&self, x: &Poly) -> Result<Vec<Poly>> {
        (0..self.p).map(|i| x.cartier(i)).collect()
    }

    /// Exact decomposition of a rational function with no pole at 0;
    /// K = F_p(X) is stable.
    pub fn decompose_rat(&self, x: &RatFunc) -> Result<Vec<RatFunc>> {
        (0..self.p).map(|i| x.cartier(i)).collect()
    }

    /// Σ_r r·(λ(r))^p, the inverse of `decompose`.
    pub fn recompose(&self, parts: &[Series]) -> Result<Series> {
        Series::reassemble(parts)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KhatOptions {
    /// Maximum closure depth to explore.
    pub max_depth: usize,
    /// Degree bound for the annihilator search at each level.
    pub deg_bound: u32,
    /// X-multiplier bound for the annihilator search basis.
    pub x_bound: usize,
}

impl Default for KhatOptions {
    fn default() -> Self {
        KhatOptions { max_depth: 3, deg_bound: 2, x_bound: 2 }
    }
}

/// Bounded membership in the closure tower over the subfield generated by
/// `generators`: level n+1 holds the roots of polynomials with
/// coefficients among the section components of level n.
///
/// Returns the first depth at which the query is exhibited, either as a
/// closure element outright or as the root of a small polynomial with
/// coefficients in the span of the closure. Sound for "yes" at working
/// precision; silent (Ok(None)) otherwise.
pub fn khat_members(
    generators: &[Series],
    query: &Series,
    opts: &KhatOptions,
) -> Result<Option<usize>> {
    let p = query.p();
    let mut closure: Vec<Series> = Vec::new();
    for c in 0..p {
        closure.push(Series::constant(p, c));
    }
    for g in generators {
        if g.p() != p {
            return Err(Error::PrimeMismatch(g.p(), p));
        }
        push_unique(&mut closure, g.clone());
    }
    for depth in 0..=opts.max_depth {
        if depth > 0 {
            let current = closure.clone();
            for elem in &current {
                for i in 0..p {
                    if elem.valuation().is_some_and(|v| v < 0) {
                        continue;
                    }
                    push_unique(&mut closure, elem.cartier(i)?);
                }
            }
        }
        if closure.iter().any(|e| e.eq_mod(query).0) {
            return Ok(Some(depth));
        }
        if annihilator_over_span(p, &closure, query, opts)? {
            return Ok(Some(depth));
        }
    }
    Ok(None)
}

fn push_unique(closure: &mut Vec<Series>, candidate: Series) {
    if !closure.iter().any(|e| e.eq_mod(&candidate).0) {
        closure.push(candidate);
    }
}

/// Search for a nonzero relation Σ_{w,a,e} c·X^a·w·query^e = 0 with e ≥ 1
/// somewhere, coefficients in F_p, on the common known prefix.
fn annihilator_over_span(
    p: u64,
    closure: &[Series],
    query: &Series,
    opts: &KhatOptions,
) -> Result<bool> {
    if query.valuation().is_none() {
        return Ok(false); // nothing known to relate
    }
    let fp = Fp::new(p)?;
    let mut basis: Vec<(Series, bool)> = Vec::new(); // (series, mentions query)
    let mut qpow = Series::one(p);
    for e in 0..=opts.deg_bound {
        if e > 0 {
            qpow = qpow.mul(query)?;
        }
        // the closure already contains the prime-field constants, so it
        // covers the plain X^a·query^e columns through w = 1
        for w in closure.iter() {
            if w.valuation().is_none() {
                continue; // a vacuously zero multiplier certifies nothing
            }
            for a in 0..=opts.x_bound {
                let b = w.mul(&qpow)?.shift(a as i64);
                // a column that is a scalar multiple of an existing one
                // adds nothing to the F_p-span and would manufacture a
                // vacuous kernel vector
                let dependent = basis.iter().any(|(existing, _)| {
                    (1..p).any(|c| existing.mul_scalar(c).eq_mod(&b).0)
                });
                if dependent {
                    continue;
                }
                basis.push((b, e > 0));
            }
        }
    }
    let cols = basis.len();
    let avail = basis
        .iter()
        .map(|(s, _)| match s.prec() {
            Prec::Exact => i64::MAX,
            Prec::UpTo(n) => n,
        })
        .min()
        .unwrap_or(0);
    let rows = cols as i64 + 16;
    if avail < rows || cols > 512 {
        return Ok(false); // not enough precision to certify anything
    }
    let rows = rows as usize;
    let mut matrix = vec![vec![0u64; cols]; rows];
    for (col, (s, _)) in basis.iter().enumerate() {
        for (row, m) in matrix.iter_mut().enumerate() {
            m[col] = s.coeff(row as i64).unwrap_or(0);
        }
    }
    // row reduce and look for a kernel vector touching a query column
    let mut pivot_of_col = vec![usize::MAX; cols];
    let mut rank = 0usize;
    for col in 0..cols {
        let Some(pr) = (rank..rows).find(|&r| matrix[r][col] != 0) else { continue };
        matrix.swap(rank, pr);
        let inv = fp.inv(matrix[rank][col]);
        for c in col..cols {
            matrix[rank][c] = fp.mul(matrix[rank][c], inv);
        }
        for r in 0..rows {
            if r != rank && matrix[r][col] != 0 {
                let factor = matrix[r][col];
                for c in col..cols {
                    let t = fp.mul(factor, matrix[rank][c]);
                    matrix[r][c] = fp.sub(matrix[r][c], t);
                }
            }
        }
        pivot_of_col[col] = rank;
        rank += 1;
    }
    for free in 0..cols {
        if pivot_of_col[free] != usize::MAX {
            continue;
        }
        // kernel vector with this free column set to 1
        let mut touches_query = basis[free].1;
        if !touches_query {
            for col in 0..cols {
                let pr = pivot_of_col[col];
                if pr != usize::MAX && matrix[pr][free] != 0 && basis[col].1 {
                    touches_query = true;
                    break;
                }
            }
        }
        if touches_query {
            return Ok(true);
        }
    }
    Ok(false)
}
