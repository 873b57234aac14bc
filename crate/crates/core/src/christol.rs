//! Conversions between automata and annihilating polynomials.
//!
//! Automaton → polynomial: the kernel elements F_j satisfy the section
//! identities F_j = Σ_i X^i (F_{c(j,i)})^p, a polynomial system over
//! `F_p[X]` that iterated resultants collapse to a univariate annihilator of
//! the generated series. The elimination is exact; a followup pass then
//! searches for a smaller annihilator by linear algebra on the series
//! prefix, keeping it only when it divides the exact one and passes the
//! substitution check.
//!
//! Polynomial → automaton: expand a root, close it under the section
//! operators merging elements equal at truncation, and read the closure
//! table as a least-significant-first automaton. Results on this side are
//! certified at truncation only and say so.

use crate::automata::{automaton_from_kernel, kernel_from_automaton, Dfao, KernelTable};
use crate::error::{Error, Result};
use crate::field::Fp;
use crate::mpoly::MPoly;
use crate::poly::Poly;
use crate::series::{hensel_expand, mpoly_eval, Prec, Series};

/// Default X-degree guard for intermediate elimination results.
pub const DEGREE_GUARD: usize = 512;

/// Outcome of substituting a series into a univariate polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The identity holds on the whole known window.
    HoldsMod(Prec),
    /// First known exponent with a nonzero value.
    FailsAt(i64),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::HoldsMod(_))
    }

    /// True when the identity holds at least below `n`.
    pub fn holds_mod(&self, n: i64) -> bool {
        match self {
            Verdict::HoldsMod(Prec::Exact) => true,
            Verdict::HoldsMod(Prec::UpTo(m)) => *m >= n,
            Verdict::FailsAt(_) => false,
        }
    }
}

/// Substitute `f` into the univariate polynomial `annihilator` and report
/// how far the result vanishes.
pub fn verify_annihilation(annihilator: &MPoly, f: &Series) -> Result<Verdict> {
    if annihilator.nvars() != 1 {
        return Err(Error::ArityMismatch { expected: 1, got: annihilator.nvars() });
    }
    let value = mpoly_eval(annihilator, std::slice::from_ref(f))?;
    match value.valuation() {
        Some(k) => Ok(Verdict::FailsAt(k)),
        None => Ok(Verdict::HoldsMod(value.prec())),
    }
}

/// An algebraic series: a nonzero univariate annihilator over `F_p[X]`
/// together with a cached expansion that satisfies it at truncation.
#[derive(Clone, Debug)]
pub struct AlgebraicSeries {
    annihilator: MPoly,
    seed: u64,
    expansion: Series,
}

impl AlgebraicSeries {
    /// Lift the residual root `seed` to order `prec`.
    pub fn new(annihilator: MPoly, seed: u64, prec: i64) -> Result<Self> {
        if annihilator.is_zero() {
            return Err(Error::Precondition("annihilator must be nonzero".to_string()));
        }
        let expansion = hensel_expand(&annihilator, seed, prec)?;
        Ok(AlgebraicSeries { annihilator, seed: seed % expansion.p(), expansion })
    }

    /// Wrap an already-known expansion, revalidating the annihilation and
    /// the simple-root condition at X = 0.
    pub fn from_series(annihilator: MPoly, expansion: Series) -> Result<Self> {
        if annihilator.is_zero() {
            return Err(Error::Precondition("annihilator must be nonzero".to_string()));
        }
        let verdict = verify_annihilation(&annihilator, &expansion)?;
        if let Verdict::FailsAt(k) = verdict {
            return Err(Error::FailedVerification {
                context: format!("expansion violates the annihilator at exponent {k}"),
            });
        }
        let seed = expansion.coeff(0).ok_or(Error::PrecisionExhausted { left: 0, need: 1 })?;
        let residual = residual_poly(&annihilator);
        if residual.eval(seed) != 0 {
            return Err(Error::NotResidualRoot { seed });
        }
        if residual.derivative().eval(seed) == 0 {
            return Err(Error::RamifiedSeed { seed });
        }
        Ok(AlgebraicSeries { annihilator, seed, expansion })
    }

    pub fn annihilator(&self) -> &MPoly {
        &self.annihilator
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn expansion(&self) -> &Series {
        &self.expansion
    }

    pub fn p(&self) -> u64 {
        self.expansion.p()
    }

    /// All residues that are simple roots of the annihilator at X = 0,
    /// Hensel-expanded to the given order.
    pub fn liftable_roots(&self, prec: i64) -> Vec<Series> {
        liftable_roots_of(&self.annihilator, prec)
    }
}

pub(crate) fn residual_poly(annihilator: &MPoly) -> Poly {
    let p = annihilator.p();
    let coeffs: Vec<u64> = annihilator
        .coeffs_in(0)
        .into_iter()
        .map(|c| c.as_coefficient().map_or(0, |c| c.coeff(0)))
        .collect();
    Poly::from_coeffs(p, coeffs)
}

pub(crate) fn liftable_roots_of(annihilator: &MPoly, prec: i64) -> Vec<Series> {
    let p = annihilator.p();
    (0..p)
        .filter_map(|seed| hensel_expand(annihilator, seed, prec).ok())
        .collect()
}

// ---- Truncation-certified kernels of series ----

#[derive(Clone, Copy, Debug)]
pub struct KernelOptions {
    /// Abort when the closure exceeds this many elements.
    pub max_size: usize,
    /// Smallest acceptable comparison window when merging elements.
    pub min_window: i64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { max_size: 64, min_window: 8 }
    }
}

/// Kernel closure of a series under the section operators, with equality
/// decided on the common known window. `certified` is always false: the
/// table is trustworthy exactly up to the recorded precision.
#[derive(Clone, Debug)]
pub struct SeriesKernel {
    p: u64,
    elements: Vec<Series>,
    closure: Vec<Vec<usize>>,
    /// Weakest knowledge horizon among the elements.
    pub precision: i64,
    /// Always false: merges happened at truncation, not exactly.
    pub certified: bool,
}

impl SeriesKernel {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Series] {
        &self.elements
    }

    pub fn image(&self, element: usize, digit: u64) -> usize {
        self.closure[element][digit as usize]
    }

    pub fn to_table(&self) -> Result<KernelTable> {
        let outputs: Vec<u64> = self
            .elements
            .iter()
            .map(|e| e.coeff(0).expect("kernel elements have a known constant term"))
            .collect();
        let labels: Vec<String> = (0..self.size()).map(|i| format!("e{i}")).collect();
        KernelTable::new(self.p, labels, self.closure.clone(), outputs)
    }
}

/// Breadth-first closure of `f` under the section operators.
pub fn series_kernel(f: &Series, opts: &KernelOptions) -> Result<SeriesKernel> {
    let p = f.p();
    if f.valuation().is_some_and(|v| v < 0) {
        return Err(Error::NegativeOffset(f.valuation().unwrap()));
    }
    let mut elements: Vec<Series> = vec![f.clone()];
    let mut closure: Vec<Vec<usize>> = Vec::new();
    let mut i = 0;
    while i < elements.len() {
        let mut row = Vec::with_capacity(p as usize);
        for d in 0..p {
            let img = elements[i].cartier(d)?;
            if let Prec::UpTo(n) = img.prec() {
                if n < opts.min_window {
                    return Err(Error::PrecisionExhausted { left: n, need: opts.min_window });
                }
            }
            let mut found = None;
            for (j, e) in elements.iter().enumerate() {
                let (eq, common) = img.eq_mod(e);
                if !eq {
                    continue;
                }
                if let Prec::UpTo(n) = common {
                    if n < opts.min_window {
                        return Err(Error::PrecisionExhausted { left: n, need: opts.min_window });
                    }
                }
                found = Some(j);
                break;
            }
            let id = match found {
                Some(j) => j,
                None => {
                    if elements.len() >= opts.max_size {
                        return Err(Error::KernelBudget { bound: opts.max_size });
                    }
                    elements.push(img);
                    elements.len() - 1
                }
            };
            row.push(id);
        }
        closure.push(row);
        i += 1;
    }
    let precision = elements
        .iter()
        .filter_map(|e| e.prec().order())
        .min()
        .unwrap_or(i64::MAX);
    Ok(SeriesKernel { p, elements, closure, precision, certified: false })
}

// ---- Automaton → annihilating polynomial ----

/// The section identities of a kernel table as polynomials over `F_p[X]` in
/// one variable per kernel element: Z_j - Σ_i X^i · Z_{c(j,i)}^p.
pub fn kernel_equations(table: &KernelTable) -> Vec<MPoly> {
    let k = table.size();
    let p = table.p();
    (0..k)
        .map(|j| {
            let mut rhs = MPoly::zero(p, k);
            for i in 0..p {
                let image = table.image(j, i);
                let term = MPoly::variable(p, image, k)
                    .pow(p as u32)
                    .mul_coeff(&Poly::monomial(p, 1, i as usize));
                rhs = rhs.add(&term);
            }
            MPoly::variable(p, j, k).sub(&rhs)
        })
        .collect()
}

fn permutations(vars: &[usize], cap: usize) -> Vec<Vec<usize>> {
    fn heap(v: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>, cap: usize) {
        if out.len() >= cap {
            return;
        }
        if n <= 1 {
            out.push(v.clone());
            return;
        }
        for i in 0..n {
            heap(v, n - 1, out, cap);
            if out.len() >= cap {
                return;
            }
            if n.is_multiple_of(2) {
                v.swap(i, n - 1);
            } else {
                v.swap(0, n - 1);
            }
        }
    }
    let mut out = Vec::new();
    let mut current = vars.to_vec();
    heap(&mut current, vars.len(), &mut out, cap);
    if out.is_empty() {
        out.push(Vec::new());
    }
    out
}

/// Eliminate every variable except `keep` by iterated resultants. Every
/// resultant vanishes wherever both inputs do, so the final univariate
/// polynomial vanishes at the kept coordinate of any common root.
fn eliminate_to_univariate(
    polys: &[MPoly],
    keep: usize,
    order: &[usize],
    guard: usize,
) -> Result<MPoly> {
    let nvars = polys[0].nvars();
    let mut pool: Vec<MPoly> = polys.iter().filter(|q| !q.is_zero()).cloned().collect();
    for &var in order {
        let (mentioning, rest): (Vec<MPoly>, Vec<MPoly>) =
            pool.into_iter().partition(|q| q.mentions(var));
        pool = rest;
        if mentioning.is_empty() {
            continue;
        }
        // pivot: lowest degree in the variable, ties by position
        let pivot_idx = (0..mentioning.len())
            .min_by_key(|&i| mentioning[i].degree_in(var))
            .unwrap();
        let pivot = mentioning[pivot_idx].clone();
        for (i, q) in mentioning.iter().enumerate() {
            if i == pivot_idx {
                continue;
            }
            let r = q.resultant(&pivot, var)?;
            if r.is_zero() || r.is_coefficient() {
                // zero: the pairing lost all information; nonzero Y-free:
                // it cannot vanish at the base point. Try another order.
                return Err(Error::EliminationVanished);
            }
            let r = r.primitive_part();
            if r.x_degree() > guard {
                return Err(Error::DegreeGuard { deg: r.x_degree(), bound: guard });
            }
            pool.push(r);
        }
    }
    let mut best: Option<MPoly> = None;
    for q in pool {
        if q.is_zero() || !q.mentions(keep) {
            continue;
        }
        if (0..nvars).any(|v| v != keep && q.mentions(v)) {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => (q.degree_in(keep), q.x_degree()) < (b.degree_in(keep), b.x_degree()),
        };
        if better {
            best = Some(q);
        }
    }
    let mut out = best.ok_or(Error::EliminationVanished)?;
    for var in (0..nvars).rev() {
        if var != keep {
            out = out.drop_var(var)?;
        }
    }
    Ok(out.primitive_part())
}

fn unit_normalize(m: &MPoly) -> MPoly {
    match m.leading_term() {
        Some((_, c)) => {
            let lc = c.leading_coeff().unwrap();
            if lc == 1 {
                m.clone()
            } else {
                let fp = Fp::new(m.p()).unwrap();
                m.mul_coeff(&Poly::constant(m.p(), fp.inv(lc)))
            }
        }
        None => m.clone(),
    }
}

/// Search for the lowest-degree annihilator of `f` within the degree box
/// of `big` by linear algebra on the coefficient prefix. A candidate is
/// accepted only if it divides `big` exactly and annihilates `f` on the
/// whole known window; otherwise `big` itself is returned.
fn minimize_annihilator(big: &MPoly, f: &Series) -> MPoly {
    let p = big.p();
    let dy_max = big.degree_in(0) as usize;
    let dx_max = big.x_degree();
    let avail = match f.prec() {
        Prec::UpTo(n) => n,
        Prec::Exact => i64::MAX,
    };
    let big_prim = big.primitive_part();
    if dy_max <= 1 {
        return unit_normalize(&big_prim);
    }
    let mut powers: Vec<Series> = vec![Series::one(p), f.clone()];
    for dy in 1..=dy_max {
        while powers.len() <= dy {
            let next = powers.last().unwrap().mul(f).expect("same modulus");
            powers.push(next);
        }
        let unknowns = ((dy + 1) * (dx_max + 1)) as i64;
        if avail != i64::MAX && unknowns + 32 > avail {
            break;
        }
        if solve_annihilator(p, &powers[..=dy], dx_max, avail).is_none() {
            continue;
        }
        // smallest X-degree that still admits a solution
        let (mut lo, mut hi) = (0usize, dx_max);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if solve_annihilator(p, &powers[..=dy], mid, avail).is_some() {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let solution =
            solve_annihilator(p, &powers[..=dy], lo, avail).expect("solvable by the search above");
        let candidate = unit_normalize(&solution.primitive_part());
        if candidate.degree_in(0) == 0 {
            continue;
        }
        let verified = verify_annihilation(&candidate, f).map(|v| v.holds()).unwrap_or(false);
        if verified && big_prim.div_exact(&candidate).is_some() {
            return candidate;
        }
    }
    unit_normalize(&big_prim)
}

/// Find a nonzero Σ c_{j,i} X^i Y^j vanishing at f on a long prefix, by
/// Gaussian elimination over F_p. Returns the canonical kernel vector.
fn solve_annihilator(p: u64, powers: &[Series], dx: usize, avail: i64) -> Option<MPoly> {
    let fp = Fp::new(p).unwrap();
    let dy = powers.len() - 1;
    let cols = (dy + 1) * (dx + 1);
    let rows_wanted = cols as i64 + 32;
    if avail < rows_wanted {
        return None;
    }
    let rows = rows_wanted as usize;
    // column (j, i) holds the coefficient prefix of X^i · f^j
    let mut matrix = vec![vec![0u64; cols]; rows];
    for j in 0..=dy {
        for i in 0..=dx {
            let col = j * (dx + 1) + i;
            for (row, m) in matrix.iter_mut().enumerate() {
                let k = row as i64 - i as i64;
                let c = if k < 0 { 0 } else { powers[j].coeff(k).unwrap_or(0) };
                m[col] = c;
            }
        }
    }
    // reduced row echelon form
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
    // first free column gives the canonical kernel vector
    let free_col = (0..cols).find(|&c| pivot_of_col[c] == usize::MAX)?;
    let mut solution = vec![0u64; cols];
    solution[free_col] = 1;
    for col in 0..cols {
        let pr = pivot_of_col[col];
        if pr != usize::MAX {
            solution[col] = fp.neg(matrix[pr][free_col]);
        }
    }
    let mut out = MPoly::zero(p, 1);
    for j in 0..=dy {
        let coeffs: Vec<u64> = (0..=dx).map(|i| solution[j * (dx + 1) + i]).collect();
        let poly = Poly::from_coeffs(p, coeffs);
        if !poly.is_zero() {
            out = out.add(&MPoly::term(poly, vec![j as u32]));
        }
    }
    if out.is_zero() { None } else { Some(out) }
}

/// Derive a nonzero univariate annihilator of the sequence generated by
/// `m`, verified by substitution below `verify_prec` before returning.
pub fn automaton_to_polynomial(m: &Dfao, verify_prec: i64) -> Result<MPoly> {
    let table = kernel_from_automaton(m)?;
    let equations = kernel_equations(&table);
    let k = table.size();
    let others: Vec<usize> = (1..k).collect();

    // prefix long enough for both verification and minimization
    let prefix = m.series_prefix(verify_prec.max(256) + 384);

    let mut last_err = Error::EliminationVanished;
    for order in permutations(&others, 24) {
        let big = match eliminate_to_univariate(&equations, 0, &order, DEGREE_GUARD) {
            Ok(b) => b,
            Err(e @ (Error::EliminationVanished | Error::DegreeGuard { .. })) => {
                last_err = e;
                continue;
            }
            Err(e) => return Err(e),
        };
        let verdict = verify_annihilation(&big, &prefix)?;
        if !verdict.holds_mod(verify_prec) {
            last_err = Error::FailedVerification {
                context: format!("eliminated polynomial fails early: {verdict:?}"),
            };
            continue;
        }
        let best = minimize_annihilator(&big, &prefix);
        let verdict = verify_annihilation(&best, &prefix)?;
        if !verdict.holds_mod(verify_prec) {
            return Err(Error::FailedVerification {
                context: format!("minimized annihilator fails: {verdict:?}"),
            });
        }
        return Ok(best);
    }
    Err(last_err)
}

/// Eliminate every variable except `keep` from a polynomial system by
/// iterated resultants, trying elimination orders until one survives.
pub(crate) fn eliminate_components(system: &[MPoly], keep: usize) -> Result<MPoly> {
    let nvars = system.first().map(|q| q.nvars()).unwrap_or(0);
    let others: Vec<usize> = (0..nvars).filter(|&v| v != keep).collect();
    let mut last_err = Error::EliminationVanished;
    for order in permutations(&others, 24) {
        match eliminate_to_univariate(system, keep, &order, DEGREE_GUARD) {
            Ok(result) => return Ok(result),
            Err(e @ (Error::EliminationVanished | Error::DegreeGuard { .. })) => last_err = e,
            Err(e) => return Err(e),
        }
    }
    Err(last_err)
}

/// Build the automaton of an algebraic series through its truncated
/// kernel. The result inherits the kernel's truncation certificate.
pub fn polynomial_to_automaton(
    f: &AlgebraicSeries,
    opts: &KernelOptions,
) -> Result<(Dfao, SeriesKernel)> {
    let kernel = series_kernel(f.expansion(), opts)?;
    let table = kernel.to_table()?;
    let dfao = automaton_from_kernel(&table)?;
    Ok((dfao, kernel))
}
