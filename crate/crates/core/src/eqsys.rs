//! Good equational systems and their reduction.
//!
//! A system is a finite set of polynomials over `F_p[X]` in Y1..Yn together
//! with a base point (a tuple of series annihilating every polynomial at
//! truncation), a set of distinguished coordinates with their target sets,
//! and nonvanishing constraints accumulated by the transformations.
//!
//! The reduction driver alternates three exact moves until every variable
//! is distinguished and then extracts per-target univariate annihilators:
//!
//!  - simplification confines a chosen variable to one polynomial by the
//!    leading-coefficient combination R = b·P1 - a·Y^(d1-d2)·P2, peeling
//!    vanishing leading coefficients and recording nonvanishing ones;
//!  - elimination drops a variable confined to a single polynomial whose
//!    partial derivative is not identically zero, keeping the polynomial
//!    as a solved form (residual mentions elsewhere fold by resultants);
//!  - splitting rewrites a polynomial all of whose variable exponents are
//!    divisible by p through the section decomposition of its
//!    coefficients, dividing every degree by p; distinguished variables
//!    blocking a split are first replaced by Σ_r X^r·(fresh_r)^p.
//!
//! Every move preserves the base point as a common root and never grows
//! the root set inside the recorded nonvanishing locus. The trace records
//! up front that the analytic elimination device is realized exactly as
//! solved-form projection.

use crate::christol::{verify_annihilation, Verdict};
use crate::error::{Error, Result};
use crate::field::Fp;
use crate::mpoly::MPoly;
use crate::parse::parse_mpoly;
use crate::poly::Poly;
use crate::series::{mpoly_eval, Series};
use crate::tyszka::{GeneralizedCartier, Network, Target, Value};
use std::fmt;

/// Default step cap for the reduction driver.
pub const REDUCE_STEP_CAP: usize = 10_000;

/// Default X-degree guard for intermediate polynomials.
pub const REDUCE_DEGREE_GUARD: usize = 512;

pub type Trace = Vec<String>;

#[derive(Clone, Debug)]
pub struct GoodSystem {
    p: u64,
    nvars: usize,
    sigma: Vec<MPoly>,
    base: Vec<Series>,
    distinguished: Vec<(usize, Target)>,
    constraints: Vec<MPoly>,
    var_names: Vec<String>,
}

impl GoodSystem {
    pub fn new(
        p: u64,
        sigma: Vec<MPoly>,
        base: Vec<Series>,
        distinguished: Vec<(usize, Target)>,
        constraints: Vec<MPoly>,
        var_names: Vec<String>,
    ) -> Result<Self> {
        let nvars = base.len();
        let sigma: Vec<MPoly> = sigma.into_iter().filter(|q| !q.is_zero()).collect();
        if var_names.len() != nvars {
            return Err(Error::ArityMismatch { expected: nvars, got: var_names.len() });
        }
        let sys = GoodSystem { p, nvars, sigma, base, distinguished, constraints, var_names };
        sys.validate()?;
        Ok(sys)
    }

    /// Check the defining invariants: arities, index ranges, the base
    /// point annihilating sigma at truncation, and the base point lying in
    /// the nonvanishing locus of the constraints.
    pub fn validate(&self) -> Result<()> {
        for poly in self.sigma.iter().chain(&self.constraints) {
            if poly.nvars() != self.nvars {
                return Err(Error::ArityMismatch { expected: self.nvars, got: poly.nvars() });
            }
        }
        for (i, _) in &self.distinguished {
            if *i >= self.nvars {
                return Err(Error::Precondition(format!("distinguished index {i} out of range")));
            }
        }
        for poly in &self.sigma {
            let value = mpoly_eval(poly, &self.base)?;
            if value.valuation().is_some() {
                return Err(Error::FailedVerification {
                    context: format!("base point does not annihilate {poly}"),
                });
            }
        }
        for c in &self.constraints {
            let value = mpoly_eval(c, &self.base)?;
            if value.valuation().is_none() {
                return Err(Error::FailedVerification {
                    context: format!("constraint {c} vanishes at the base point"),
                });
            }
        }
        Ok(())
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn sigma(&self) -> &[MPoly] {
        &self.sigma
    }

    pub fn base(&self) -> &[Series] {
        &self.base
    }

    pub fn distinguished(&self) -> &[(usize, Target)] {
        &self.distinguished
    }

    pub fn constraints(&self) -> &[MPoly] {
        &self.constraints
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn is_distinguished(&self, var: usize) -> bool {
        self.distinguished.iter().any(|(i, _)| *i == var)
    }

    fn mentioning(&self, var: usize) -> Vec<usize> {
        (0..self.sigma.len()).filter(|&i| self.sigma[i].mentions(var)).collect()
    }

    // ---- Simplification over one variable ----

    /// Combine and peel until at most one polynomial mentions Y_j.
    /// Nonvanishing leading coefficients are recorded as domain
    /// constraints; new roots satisfying them were already roots before.
    pub fn simplify_over_variable(&self, var: usize, trace: &mut Trace) -> Result<GoodSystem> {
        if self.is_distinguished(var) {
            return Err(Error::Precondition(format!(
                "cannot simplify over distinguished {}",
                self.var_names[var]
            )));
        }
        self.simplify_unchecked(var, trace)
    }

    fn simplify_unchecked(&self, var: usize, trace: &mut Trace) -> Result<GoodSystem> {
        let mut work = self.clone();
        let mut steps = 0usize;
        loop {
            steps += 1;
            if steps > REDUCE_STEP_CAP {
                return Err(Error::IterationCap {
                    cap: REDUCE_STEP_CAP,
                    context: format!("simplification over {}", work.var_names[var]),
                });
            }
            let mut mentioning = work.mentioning(var);
            if mentioning.len() <= 1 {
                return Ok(work);
            }
            // two largest degrees, deterministically
            mentioning.sort_by_key(|&i| (std::cmp::Reverse(work.sigma[i].degree_in(var)), i));
            let (i1, i2) = (mentioning[0], mentioning[1]);
            let p1 = work.sigma[i1].clone();
            let p2 = work.sigma[i2].clone();
            let d1 = p1.degree_in(var) as usize;
            let d2 = p2.degree_in(var) as usize;
            let a = p1.coeffs_in(var)[d1].clone();
            let b = p2.coeffs_in(var)[d2].clone();
            if mpoly_eval(&a, &work.base)?.valuation().is_none() {
                work.peel(i1, var, trace)?;
                continue;
            }
            if mpoly_eval(&b, &work.base)?.valuation().is_none() {
                work.peel(i2, var, trace)?;
                continue;
            }
            // R = b·P1 - a·Y^(d1-d2)·P2 drops the top coefficient of P1
            let shift = MPoly::variable(work.p, var, work.nvars).pow((d1 - d2) as u32);
            let r = p1.mul(&b).sub(&p2.mul(&a).mul(&shift)).primitive_part();
            trace.push(format!(
                "combine over {}: deg {} with deg {} -> deg {}",
                work.var_names[var],
                d1,
                d2,
                r.degree_in(var)
            ));
            work.guard(&r)?;
            work.sigma[i1] = r;
            work.sigma.retain(|q| !q.is_zero());
            work.push_constraint(a, trace);
            work.push_constraint(b, trace);
        }
    }

    /// Peel a leading coefficient that vanishes at the base point: replace
    /// P by {P - lead·Y^d, lead}; both vanish at the base point.
    fn peel(&mut self, idx: usize, var: usize, trace: &mut Trace) -> Result<()> {
        let poly = self.sigma[idx].clone();
        let d = poly.degree_in(var) as usize;
        let lead = poly.coeffs_in(var)[d].clone();
        let shift = MPoly::variable(self.p, var, self.nvars).pow(d as u32);
        let rest = poly.sub(&lead.mul(&shift));
        trace.push(format!("peel vanishing leading coefficient in {}", self.var_names[var]));
        self.sigma[idx] = rest;
        if !lead.is_zero() {
            self.sigma.push(lead.primitive_part());
        }
        self.sigma.retain(|q| !q.is_zero());
        Ok(())
    }

    fn push_constraint(&mut self, c: MPoly, trace: &mut Trace) {
        if c.is_zero() {
            return;
        }
        if let Some(coeff) = c.as_coefficient() {
            if coeff.is_constant() {
                return; // nonzero scalars never vanish
            }
        }
        if !self.constraints.contains(&c) {
            trace.push(format!("shrink domain: require {c} nonzero"));
            self.constraints.push(c);
        }
    }

    fn guard(&self, poly: &MPoly) -> Result<()> {
        if poly.x_degree() > REDUCE_DEGREE_GUARD {
            return Err(Error::DegreeGuard { deg: poly.x_degree(), bound: REDUCE_DEGREE_GUARD });
        }
        Ok(())
    }

    // ---- Elimination ----

    /// Remove Y_j once it is confined to a single polynomial whose partial
    /// derivative in Y_j is not identically zero. The polynomial is
    /// recorded as a solved form; any residual mention elsewhere is folded
    /// by resultants first.
    pub fn eliminate_variable(&self, var: usize, trace: &mut Trace) -> Result<GoodSystem> {
        if self.is_distinguished(var) {
            return Err(Error::Precondition(format!(
                "cannot eliminate distinguished {}",
                self.var_names[var]
            )));
        }
        self.eliminate_unchecked(var, trace)
    }

    fn eliminate_unchecked(&self, var: usize, trace: &mut Trace) -> Result<GoodSystem> {
        let mut sys = self.clone();
        let mentioning = sys.mentioning(var);
        if let Some((&pivot_idx, rest)) = mentioning.split_first() {
            let pivot = sys.sigma[pivot_idx].clone();
            if pivot.partial(var).is_zero() {
                return Err(Error::Precondition(format!(
                    "{} occurs only with exponents divisible by p; split first",
                    self.var_names[var]
                )));
            }
            for &idx in rest {
                let folded = sys.sigma[idx].resultant(&pivot, var)?.primitive_part();
                trace.push(format!("fold residual mention of {} by resultant", self.var_names[var]));
                sys.guard(&folded)?;
                sys.sigma[idx] = folded;
            }
            trace.push(format!("eliminate {}: solved form {}", self.var_names[var], pivot));
            sys.sigma.remove(pivot_idx);
        } else {
            trace.push(format!("project vacuous {}", self.var_names[var]));
        }
        sys.sigma.retain(|q| !q.is_zero());
        sys.drop_variable(var)
    }

    fn drop_variable(&self, var: usize) -> Result<GoodSystem> {
        let mut sigma = Vec::with_capacity(self.sigma.len());
        for q in &self.sigma {
            sigma.push(q.drop_var(var)?);
        }
        let mut constraints = Vec::new();
        for c in &self.constraints {
            if c.mentions(var) {
                continue; // constraints on the dropped coordinate expire
            }
            constraints.push(c.drop_var(var)?);
        }
        let mut base = self.base.clone();
        base.remove(var);
        let mut names = self.var_names.clone();
        names.remove(var);
        let distinguished = self
            .distinguished
            .iter()
            .filter(|(i, _)| *i != var)
            .map(|(i, t)| (if *i > var { *i - 1 } else { *i }, t.clone()))
            .collect();
        GoodSystem::new(self.p, sigma, base, distinguished, constraints, names)
    }

    // ---- Splitting ----

    /// Replace the distinguished Y_i by Σ_r X^r·(fresh_r)^p, introducing p
    /// fresh distinguished variables whose base values are the section
    /// components of the old base value.
    fn substitute_distinguished(
        &self,
        var: usize,
        trace: &mut Trace,
    ) -> Result<(GoodSystem, Substitution)> {
        let p = self.p;
        let old_n = self.nvars;
        let base_val = &self.base[var];
        if base_val.valuation().is_some_and(|v| v < 0) {
            return Err(Error::StuckReduction {
                context: format!("cannot split {}: base value has a pole", self.var_names[var]),
            });
        }
        let new_n = old_n + p as usize;
        let mut replacement = MPoly::zero(p, new_n);
        for r in 0..p {
            let fresh = MPoly::variable(p, old_n + r as usize, new_n).pow(p as u32);
            replacement = replacement.add(&fresh.mul_coeff(&Poly::monomial(p, 1, r as usize)));
        }
        let mut sigma = Vec::with_capacity(self.sigma.len());
        for q in &self.sigma {
            sigma.push(q.pad_vars(new_n).substitute(var, &replacement));
        }
        let constraints: Vec<MPoly> = self.constraints.iter().map(|c| c.pad_vars(new_n)).collect();
        let mut base = self.base.clone();
        let mut names = self.var_names.clone();
        let mut fresh_names = Vec::new();
        let gco = GeneralizedCartier::instance(p)?;
        let parts = gco.decompose(base_val)?;
        for (r, part) in parts.into_iter().enumerate() {
            let name = format!("{}@{r}", self.var_names[var]);
            fresh_names.push(name.clone());
            names.push(name);
            base.push(part);
        }
        let target = self
            .distinguished
            .iter()
            .find(|(i, _)| *i == var)
            .map(|(_, t)| t.clone())
            .expect("only distinguished variables are substituted");
        let mut distinguished: Vec<(usize, Target)> =
            self.distinguished.iter().filter(|(i, _)| *i != var).cloned().collect();
        for r in 0..p as usize {
            distinguished.push((
                old_n + r,
                Target {
                    description: format!("section component {r} of [{}]", target.description),
                    annihilator: None,
                    explicit: Vec::new(),
                },
            ));
        }
        trace.push(format!(
            "substitute {n} = sum of X^r*({n}@r)^p over r < {p}",
            n = self.var_names[var]
        ));
        let sys =
            GoodSystem::new(p, sigma, base, distinguished, constraints, names)?.drop_variable(var)?;
        let substitution = Substitution {
            name: self.var_names[var].clone(),
            base_value: base_val.clone(),
            target,
            components: fresh_names,
        };
        Ok((sys, substitution))
    }

    /// Split every polynomial through the section decomposition; every
    /// variable of every polynomial must occur with p-divisible exponents.
    fn split_all(&self, trace: &mut Trace) -> Result<GoodSystem> {
        let gco = GeneralizedCartier::instance(self.p)?;
        let mut sigma = Vec::new();
        for q in &self.sigma {
            let parts = split_polynomial(q, &gco, &self.base)?;
            trace.push(format!("split {} into {} parts", q, parts.len()));
            sigma.extend(parts);
        }
        GoodSystem::new(
            self.p,
            sigma,
            self.base.clone(),
            self.distinguished.clone(),
            self.constraints.clone(),
            self.var_names.clone(),
        )
    }

    /// Run the two-phase reduction: eliminate every non-distinguished
    /// variable (splitting when stuck), then derive one verified
    /// univariate annihilator per distinguished coordinate.
    pub fn reduce(&self) -> Result<ReduceOutcome> {
        let mut trace: Trace = Vec::new();
        trace.push(
            "note: analytic elimination is realized exactly as solved-form projection; \
             root containment holds inside the recorded nonvanishing locus"
                .to_string(),
        );
        let mut substitutions: Vec<Substitution> = Vec::new();
        let sys = phase_eliminate(self.clone(), &mut trace, &mut substitutions, None)?;
        trace.push(format!("phase 1 done: {} variables remain, all distinguished", sys.nvars));

        let mut results: Vec<ReducedTarget> = Vec::new();
        for (var, target) in sys.distinguished.clone() {
            let name = sys.var_names[var].clone();
            let annihilator = extract_annihilator(&sys, &name, &mut trace)?;
            let base_value = sys.base[var].clone();
            let verdict = verify_annihilation(&annihilator, &base_value)?;
            if !verdict.holds() {
                return Err(Error::FailedVerification {
                    context: format!("annihilator for {name} fails substitution: {verdict:?}"),
                });
            }
            trace.push(format!("annihilator for {name}: {annihilator}"));
            results.push(ReducedTarget { var_name: name, target, annihilator, verdict, base_value });
        }

        // recombine substituted originals from their components
        for sub in substitutions.iter().rev() {
            let recombined = recombine(&results, sub, &mut trace)?;
            results.push(recombined);
        }
        Ok(ReduceOutcome { annihilators: results, trace })
    }
}

/// Split one polynomial, all of whose variables occur with p-divisible
/// exponents, into the section components of its coefficients. Every
/// common root of the parts is a root of the input, the base point stays
/// a common root, and degrees divide by p exactly.
pub fn split_polynomial(
    poly: &MPoly,
    gco: &GeneralizedCartier,
    base: &[Series],
) -> Result<Vec<MPoly>> {
    let p = poly.p();
    for var in 0..poly.nvars() {
        if poly.mentions(var) && !poly.partial(var).is_zero() {
            return Err(Error::Precondition(format!(
                "Y{} occurs with an exponent not divisible by p",
                var + 1
            )));
        }
    }
    let mut parts = vec![MPoly::zero(p, poly.nvars()); p as usize];
    for (mono, coeff) in poly.terms() {
        let reduced: Vec<u32> = mono.0.iter().map(|&e| e / p as u32).collect();
        let components = gco.decompose_poly(coeff)?;
        for (i, c) in components.into_iter().enumerate() {
            if !c.is_zero() {
                parts[i] = parts[i].add(&MPoly::term(c, reduced.clone()));
            }
        }
    }
    let parts: Vec<MPoly> = parts.into_iter().filter(|q| !q.is_zero()).collect();
    for part in &parts {
        for var in 0..poly.nvars() {
            debug_assert!(part.degree_in(var) <= poly.degree_in(var) / p as u32);
        }
        let value = mpoly_eval(part, base)?;
        if value.valuation().is_some() {
            return Err(Error::FailedVerification {
                context: format!("split part {part} misses the base point"),
            });
        }
    }
    Ok(parts)
}

// ---- Construction from witness networks ----

/// Encode a witness network as a good equational system: free elements
/// become variables, every triple becomes its ternary polynomial with
/// denominators cleared, and variables defined linearly with a unit
/// coefficient are merged away.
///
/// With no free elements the degenerate one-variable system pinning the
/// first target to itself is returned.
pub fn system_from_witness(net: &Network, targets: &[(usize, Target)]) -> Result<GoodSystem> {
    let p = net.ambient().p();
    let free: Vec<usize> = (0..net.len()).filter(|&i| !net.element(i).is_constant()).collect();
    if free.is_empty() {
        let Some((elem, target)) = targets.first() else {
            return Err(Error::Precondition(
                "no variables and no targets: nothing to encode".to_string(),
            ));
        };
        let value = constant_form(net, *elem)?;
        let poly = MPoly::variable(p, 0, 1)
            .mul_coeff(value.den())
            .sub(&MPoly::from_poly(value.num().clone(), 1));
        let base = vec![element_series(net, *elem).clone()];
        return GoodSystem::new(
            p,
            vec![poly],
            base,
            vec![(0, target.clone())],
            Vec::new(),
            vec![net.element(*elem).label.clone()],
        );
    }
    let nvars = free.len();
    let var_of = |elem: usize| free.iter().position(|&e| e == elem);
    // ψ maps an element to its variable or its constant form; denominators
    // of rational constants are cleared per triple
    let psi = |elem: usize| -> Result<Frac> {
        match var_of(elem) {
            Some(v) => {
                Ok(Frac { num: MPoly::variable(p, v, nvars), den: Poly::one(p) })
            }
            None => {
                let value = constant_form(net, elem)?;
                Ok(Frac {
                    num: MPoly::from_poly(value.num().clone(), nvars),
                    den: value.den().clone(),
                })
            }
        }
    };
    let mut sigma = Vec::new();
    for &(a, b, c) in net.add_triples() {
        let poly = psi(a)?.add(&psi(b)?).sub_frac(&psi(c)?).cleared();
        if !poly.is_zero() {
            sigma.push(poly.primitive_part());
        }
    }
    for &(a, b, c) in net.mul_triples() {
        let poly = psi(a)?.mul(&psi(b)?).sub_frac(&psi(c)?).cleared();
        if !poly.is_zero() {
            sigma.push(poly.primitive_part());
        }
    }
    sigma.sort_by_key(|q| format!("{q}"));
    sigma.dedup();
    let base: Vec<Series> = free.iter().map(|&e| element_series(net, e).clone()).collect();
    let names: Vec<String> = free.iter().map(|&e| net.element(e).label.clone()).collect();
    let mut distinguished = Vec::new();
    for (elem, target) in targets {
        let Some(v) = var_of(*elem) else {
            return Err(Error::Precondition(format!(
                "target element {} is a constant",
                net.element(*elem).label
            )));
        };
        distinguished.push((v, target.clone()));
    }
    let sys = GoodSystem::new(p, sigma, base, distinguished, Vec::new(), names)?;
    merge_solved_variables(sys)
}

fn element_series(net: &Network, elem: usize) -> &Series {
    match &net.element(elem).value {
        Value::Ser(s) => s,
        Value::Fq(_) => unreachable!("series networks only"),
    }
}

fn constant_form(net: &Network, elem: usize) -> Result<crate::ratfunc::RatFunc> {
    match &net.element(elem).constant {
        Some(k) => k.as_ratfunc().ok_or_else(|| {
            Error::Precondition(format!(
                "constant {} has no closed form over F_p(X)",
                net.element(elem).label
            ))
        }),
        None => Err(Error::Precondition("free element used as constant".to_string())),
    }
}

struct Frac {
    num: MPoly,
    den: Poly,
}

impl Frac {
    fn add(&self, other: &Frac) -> Frac {
        Frac {
            num: self.num.mul_coeff(&other.den).add(&other.num.mul_coeff(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    fn mul(&self, other: &Frac) -> Frac {
        Frac { num: self.num.mul(&other.num), den: self.den.mul(&other.den) }
    }

    fn sub_frac(&self, other: &Frac) -> Frac {
        self.add(&Frac { num: other.num.neg(), den: other.den.clone() })
    }

    fn cleared(&self) -> MPoly {
        self.num.clone()
    }
}

/// Substitute away non-distinguished variables that some polynomial
/// defines linearly with a unit coefficient; root sets transfer exactly
/// in both directions for such substitutions.
fn merge_solved_variables(mut sys: GoodSystem) -> Result<GoodSystem> {
    'outer: loop {
        for idx in 0..sys.sigma.len() {
            let poly = &sys.sigma[idx];
            for var in 0..sys.nvars {
                if sys.is_distinguished(var) || poly.degree_in(var) != 1 {
                    continue;
                }
                let coeffs = poly.coeffs_in(var);
                let Some(c) = coeffs[1].as_coefficient() else { continue };
                if c.degree() != Some(0) {
                    continue; // unit coefficients only
                }
                let fp = Fp::new(sys.p)?;
                let neg_inv = fp.neg(fp.inv(c.coeff(0)));
                // Y_var = -c^{-1} · rest
                let value = coeffs[0].mul_coeff(&Poly::constant(sys.p, neg_inv));
                let mut sigma = Vec::new();
                for (k, q) in sys.sigma.iter().enumerate() {
                    if k == idx {
                        continue;
                    }
                    let s = q.substitute(var, &value).primitive_part();
                    if !s.is_zero() {
                        sigma.push(s);
                    }
                }
                let constraints = sys
                    .constraints
                    .iter()
                    .map(|q| q.substitute(var, &value).primitive_part())
                    .filter(|q| !q.is_zero())
                    .collect();
                sys.sigma = sigma;
                sys.constraints = constraints;
                sys = sys.drop_variable(var)?;
                continue 'outer;
            }
        }
        return Ok(sys);
    }
}

// ---- The reduction driver ----

#[derive(Clone, Debug)]
struct Substitution {
    name: String,
    base_value: Series,
    target: Target,
    components: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ReducedTarget {
    pub var_name: String,
    pub target: Target,
    pub annihilator: MPoly,
    pub verdict: Verdict,
    pub base_value: Series,
}

#[derive(Clone, Debug)]
pub struct ReduceOutcome {
    pub annihilators: Vec<ReducedTarget>,
    pub trace: Trace,
}

impl ReduceOutcome {
    pub fn for_variable(&self, name: &str) -> Option<&ReducedTarget> {
        self.annihilators.iter().find(|r| r.var_name == name)
    }
}

impl fmt::Display for ReduceOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.annihilators {
            writeln!(f, "annihilator {}: {}", r.var_name, r.annihilator)?;
        }
        Ok(())
    }
}

/// Eliminate every variable that is not distinguished; with
/// `keep_only = Some(name)`, every variable except `name` is eliminable.
fn phase_eliminate(
    mut sys: GoodSystem,
    trace: &mut Trace,
    substitutions: &mut Vec<Substitution>,
    keep_only: Option<&str>,
) -> Result<GoodSystem> {
    let eliminable = |sys: &GoodSystem, var: usize| match keep_only {
        Some(name) => sys.var_names[var] != name,
        None => !sys.is_distinguished(var),
    };
    let mut steps = 0usize;
    loop {
        steps += 1;
        if steps > REDUCE_STEP_CAP {
            return Err(Error::IterationCap {
                cap: REDUCE_STEP_CAP,
                context: "reduction driver".to_string(),
            });
        }
        let mut candidates: Vec<usize> =
            (0..sys.nvars).filter(|&v| eliminable(&sys, v)).collect();
        if candidates.is_empty() {
            return Ok(sys);
        }
        // lowest total occurring degree first, ties by index
        candidates.sort_by_key(|&v| {
            (sys.sigma.iter().map(|q| q.degree_in(v) as usize).sum::<usize>(), v)
        });
        let mut progressed = false;
        for &var in &candidates {
            if sys.mentioning(var).is_empty() {
                sys = sys.eliminate_unchecked(var, trace)?;
                progressed = true;
                break;
            }
            // a variable whose every occurrence is already p-divisible is
            // splittable; simplification would only churn
            if sys.sigma.iter().all(|q| q.partial(var).is_zero()) {
                continue;
            }
            let mut t = Trace::new();
            let work = sys.simplify_unchecked(var, &mut t)?;
            let did_simplify = work.sigma != sys.sigma;
            let mentioning = work.mentioning(var);
            match mentioning.len() {
                0 => {
                    trace.extend(t);
                    sys = work.eliminate_unchecked(var, trace)?;
                    progressed = true;
                    break;
                }
                1 => {
                    let poly = &work.sigma[mentioning[0]];
                    let partial = poly.partial(var);
                    if partial.is_zero() {
                        // stuck on p-divisible exponents
                        if did_simplify {
                            trace.extend(t);
                            sys = work;
                            progressed = true;
                            break;
                        }
                        continue;
                    }
                    trace.extend(t);
                    if mpoly_eval(&partial, &work.base)?.valuation().is_none() {
                        // derivative vanishes at the base point but not
                        // formally: replace P by {P', remainder}
                        let (_, r) = poly.pseudo_divrem(&partial, var);
                        let mut next = work.clone();
                        trace.push(format!(
                            "derivative of {} vanishes at the base point: reduce degree",
                            work.var_names[var]
                        ));
                        next.sigma[mentioning[0]] = partial.primitive_part();
                        let r = r.primitive_part();
                        if !r.is_zero() {
                            next.sigma.push(r);
                        }
                        next.validate()?;
                        sys = next;
                    } else {
                        sys = work.eliminate_unchecked(var, trace)?;
                    }
                    progressed = true;
                    break;
                }
                _ => unreachable!("simplification confines the variable"),
            }
        }
        if progressed {
            continue;
        }
        // every eliminable variable is stuck: substitute distinguished
        // variables with non-p-divisible occurrences, then split everything
        let blocking: Vec<usize> = (0..sys.nvars)
            .filter(|&v| sys.sigma.iter().any(|q| q.mentions(v) && !q.partial(v).is_zero()))
            .collect();
        if blocking.iter().any(|&v| eliminable(&sys, v)) {
            return Err(Error::StuckReduction {
                context: "an eliminable variable blocks splitting".to_string(),
            });
        }
        if let Some(name) = keep_only {
            if blocking.iter().any(|&v| sys.var_names[v] == name) {
                return Err(Error::StuckReduction {
                    context: format!("the extraction target {name} blocks splitting"),
                });
            }
        }
        let mut work = sys;
        for &var in blocking.iter().rev() {
            let (next, substitution) = work.substitute_distinguished(var, trace)?;
            substitutions.push(substitution);
            work = next;
        }
        sys = work.split_all(trace)?;
    }
}

/// Reduce a phase-1 system down to the single named variable and pick the
/// smallest surviving polynomial as the annihilator.
fn extract_annihilator(sys: &GoodSystem, name: &str, trace: &mut Trace) -> Result<MPoly> {
    trace.push(format!("extract annihilator for {name}"));
    let mut local_subs = Vec::new();
    let reduced = phase_eliminate(sys.clone(), trace, &mut local_subs, Some(name))?;
    let idx = reduced
        .var_names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::StuckReduction {
            context: format!("{name} was consumed during extraction"),
        })?;
    let best = reduced
        .sigma
        .iter()
        .filter(|q| q.mentions(idx) && (0..reduced.nvars).all(|v| v == idx || !q.mentions(v)))
        .min_by_key(|q| (q.degree_in(idx), q.x_degree()))
        .ok_or(Error::NoAnnihilator { var: idx })?;
    let mut out = best.clone();
    for v in (0..reduced.nvars).rev() {
        if v != idx {
            out = out.drop_var(v)?;
        }
    }
    Ok(out.primitive_part())
}

/// Rebuild the annihilator of a substituted variable from the verified
/// annihilators of its section components: eliminate the components from
/// Y - Σ_r X^r·Z_r^p constrained by their annihilators.
fn recombine(results: &[ReducedTarget], sub: &Substitution, trace: &mut Trace) -> Result<ReducedTarget> {
    let p = sub.base_value.p();
    let mut annihilators = Vec::new();
    for name in &sub.components {
        let found = results.iter().find(|r| &r.var_name == name).ok_or_else(|| {
            Error::StuckReduction { context: format!("missing component annihilator for {name}") }
        })?;
        annihilators.push(found.annihilator.clone());
    }
    // variables: Y at index 0 and one Z_r per component
    let nvars = 1 + p as usize;
    let mut defining = MPoly::variable(p, 0, nvars);
    for r in 0..p as usize {
        let zr = MPoly::variable(p, 1 + r, nvars).pow(p as u32);
        defining = defining.sub(&zr.mul_coeff(&Poly::monomial(p, 1, r)));
    }
    let mut system = vec![defining];
    for (r, ann) in annihilators.iter().enumerate() {
        let mut embedded = MPoly::zero(p, nvars);
        for (mono, coeff) in ann.terms() {
            let mut exps = vec![0u32; nvars];
            exps[1 + r] = mono.0[0];
            embedded = embedded.add(&MPoly::term(coeff.clone(), exps));
        }
        system.push(embedded);
    }
    let ann = crate::christol::eliminate_components(&system, 0)?;
    let verdict = verify_annihilation(&ann, &sub.base_value)?;
    if !verdict.holds() {
        return Err(Error::FailedVerification {
            context: format!("recombined annihilator for {} fails", sub.name),
        });
    }
    trace.push(format!("recombined annihilator for {}: {ann}", sub.name));
    Ok(ReducedTarget {
        var_name: sub.name.clone(),
        target: sub.target.clone(),
        annihilator: ann,
        verdict,
        base_value: sub.base_value.clone(),
    })
}

// ---- Text format ----

impl fmt::Display for GoodSystem {
    /// Line format, parsed back by [`GoodSystem::parse`]:
    ///
    /// ```text
    /// p=2
    /// vars=Y1,Y2,Y3
    /// poly=Y1^2 + X*Y2^2 + 1+X+X^2
    /// base=p=2 offset=0 coeffs=1,1 trunc=64
    /// distinguished=3 desc=roots of ...
    /// target-series=3 p=2 offset=0 coeffs=1 trunc=64
    /// constraint=Y1 + 1
    /// ```
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p={}", self.p)?;
        writeln!(f, "vars={}", self.var_names.join(","))?;
        for q in &self.sigma {
            writeln!(f, "poly={q}")?;
        }
        for b in &self.base {
            writeln!(f, "base={b}")?;
        }
        for (i, t) in &self.distinguished {
            writeln!(f, "distinguished={} desc={}", i + 1, t.description)?;
            for s in &t.explicit {
                writeln!(f, "target-series={} {s}", i + 1)?;
            }
        }
        for c in &self.constraints {
            writeln!(f, "constraint={c}")?;
        }
        Ok(())
    }
}

impl GoodSystem {
    pub fn parse(input: &str) -> Result<GoodSystem> {
        let bad = |detail: String| Error::Parse { what: "system", detail };
        let mut p: Option<u64> = None;
        let mut names: Vec<String> = Vec::new();
        let mut polys: Vec<String> = Vec::new();
        let mut base: Vec<Series> = Vec::new();
        let mut distinguished: Vec<(usize, Target)> = Vec::new();
        let mut constraints: Vec<String> = Vec::new();
        for line in input.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| bad(format!("expected key=value: {line}")))?;
            match key {
                "p" => p = Some(value.parse().map_err(|_| bad("bad p".into()))?),
                "vars" => names = value.split(',').map(|s| s.trim().to_string()).collect(),
                "poly" => polys.push(value.to_string()),
                "base" => base.push(Series::parse(value)?),
                "distinguished" => {
                    let (idx, desc) = value
                        .split_once(" desc=")
                        .ok_or_else(|| bad("distinguished needs desc=".into()))?;
                    let idx: usize =
                        idx.trim().parse().map_err(|_| bad("bad distinguished index".into()))?;
                    if idx == 0 {
                        return Err(bad("variable indices are 1-based".into()));
                    }
                    distinguished.push((
                        idx - 1,
                        Target {
                            description: desc.to_string(),
                            annihilator: None,
                            explicit: Vec::new(),
                        },
                    ));
                }
                "target-series" => {
                    let (idx, series) = value
                        .split_once(' ')
                        .ok_or_else(|| bad("target-series needs an index".into()))?;
                    let idx: usize =
                        idx.trim().parse().map_err(|_| bad("bad target index".into()))?;
                    let series = Series::parse(series)?;
                    let slot = distinguished
                        .iter_mut()
                        .find(|(i, _)| *i + 1 == idx)
                        .ok_or_else(|| bad("target-series before distinguished".into()))?;
                    slot.1.explicit.push(series);
                }
                "constraint" => constraints.push(value.to_string()),
                other => return Err(bad(format!("unknown field `{other}`"))),
            }
        }
        let p = p.ok_or_else(|| bad("missing p".into()))?;
        let nvars = names.len();
        let sigma =
            polys.iter().map(|s| parse_mpoly(p, s, nvars)).collect::<Result<Vec<_>>>()?;
        let constraints =
            constraints.iter().map(|s| parse_mpoly(p, s, nvars)).collect::<Result<Vec<_>>>()?;
        GoodSystem::new(p, sigma, base, distinguished, constraints, names)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SmallField;
    use crate::series::Prec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn target(desc: &str) -> Target {
        Target { description: desc.to_string(), annihilator: None, explicit: Vec::new() }
    }

    fn series_poly(p: u64, coeffs: &[u64]) -> Series {
        Series::from_poly(&Poly::from_coeffs(p, coeffs.to_vec()))
    }

    /// The two-equation system of the splitting walkthrough:
    /// sigma = {H1 - Y1^2 - X·Y2^2, Y3 - Y2^2 - X·Y1^2} with H1 in F_2[X].
    fn pipeline_system() -> GoodSystem {
        let p = 2;
        // H1 = 1 + X + X^2, so F = Λ0 H1 = 1 + X and G = Λ1 H1 = 1
        let f = series_poly(p, &[1, 1]);
        let g = series_poly(p, &[1]);
        // H2 = G^2 + X F^2
        let h2 = g.pow_p().add(&f.pow_p().shift(1)).unwrap();
        let sigma = vec![
            parse_mpoly(p, "Y1^2 + X*Y2^2 + 1 + X + X^2", 3).unwrap(),
            parse_mpoly(p, "Y3 + Y2^2 + X*Y1^2", 3).unwrap(),
        ];
        GoodSystem::new(
            p,
            sigma,
            vec![f, g, h2],
            vec![(2, target("H2"))],
            Vec::new(),
            vec!["Y1".into(), "Y2".into(), "Y3".into()],
        )
        .unwrap()
    }

    #[test]
    fn validation_rejects_non_vanishing_base() {
        let p = 2;
        let sigma = vec![parse_mpoly(p, "Y1 + 1", 1).unwrap()];
        let base = vec![Series::zero(p)];
        assert!(GoodSystem::new(p, sigma, base, vec![], vec![], vec!["Y1".into()]).is_err());
    }

    #[test]
    fn split_matches_hand_computation() {
        // H1 - Y1^2 - X·Y2^2 with H1 = 1+X+X^2 splits into
        // {Y1 - (1+X), Y2 - 1}
        let p = 2;
        let poly = parse_mpoly(p, "Y1^2 + X*Y2^2 + 1 + X + X^2", 2).unwrap();
        let base = vec![series_poly(p, &[1, 1]), series_poly(p, &[1])];
        let gco = GeneralizedCartier::instance(p).unwrap();
        let parts = split_polynomial(&poly, &gco, &base).unwrap();
        assert_eq!(parts.len(), 2);
        let expected0 = parse_mpoly(p, "Y1 + 1 + X", 2).unwrap();
        let expected1 = parse_mpoly(p, "Y2 + 1", 2).unwrap();
        assert!(parts.contains(&expected0), "parts: {parts:?}");
        assert!(parts.contains(&expected1));
    }

    #[test]
    fn split_of_pure_power_is_variable() {
        for p in [2u64, 3] {
            let poly = MPoly::variable(p, 0, 1).pow(p as u32);
            let base = vec![Series::zero(p)];
            let gco = GeneralizedCartier::instance(p).unwrap();
            let parts = split_polynomial(&poly, &gco, &base).unwrap();
            assert_eq!(parts, vec![MPoly::variable(p, 0, 1)]);
        }
    }

    #[test]
    fn split_rejects_odd_exponents() {
        let p = 2;
        let poly = parse_mpoly(p, "Y1^3 + X", 1).unwrap();
        let gco = GeneralizedCartier::instance(p).unwrap();
        assert!(split_polynomial(&poly, &gco, &[Series::zero(p)]).is_err());
    }

    #[test]
    fn split_bound_and_containment_random() {
        // random P in F_2[X][Y1^2, Y2^2]: degree bound is exact and the
        // common roots of the parts are roots of P over F_4 for every
        // embedding X -> ξ
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let p = 2u64;
        let field = SmallField::new(4).unwrap();
        let gco = GeneralizedCartier::instance(p).unwrap();
        for round in 0..50 {
            let mut poly = MPoly::zero(p, 2);
            for _ in 0..rng.random_range(2..5usize) {
                let e1 = 2 * rng.random_range(0..=4u32);
                let e2 = 2 * rng.random_range(0..=4u32);
                let deg = rng.random_range(0..4usize);
                let coeff =
                    Poly::from_coeffs(p, (0..=deg).map(|_| rng.random_range(0..p)).collect());
                poly = poly.add(&MPoly::term(coeff, vec![e1, e2]));
            }
            if poly.is_zero() {
                continue;
            }
            // find a base point over constants by brute force, if any
            let parts = match split_polynomial(&poly, &gco, &find_constant_root(&poly)) {
                Ok(parts) => parts,
                Err(Error::FailedVerification { .. }) => continue, // no constant root
                Err(e) => panic!("unexpected: {e}"),
            };
            for part in &parts {
                assert!(part.degree_in(0) <= poly.degree_in(0) / 2, "round {round}");
                assert!(part.degree_in(1) <= poly.degree_in(1) / 2);
            }
            for x in field.elements() {
                for z0 in field.elements() {
                    for z1 in field.elements() {
                        let pt = [z0, z1];
                        if parts.iter().all(|q| q.eval_fq(&field, x, &pt) == 0) {
                            assert_eq!(
                                poly.eval_fq(&field, x, &pt),
                                0,
                                "containment fails at x={x} z={pt:?}"
                            );
                        }
                    }
                }
            }
        }
    }

    fn find_constant_root(poly: &MPoly) -> Vec<Series> {
        let p = poly.p();
        for c0 in 0..p {
            for c1 in 0..p {
                let base = vec![Series::constant(p, c0), Series::constant(p, c1)];
                if mpoly_eval(poly, &base).unwrap().valuation().is_none() {
                    return base;
                }
            }
        }
        // fall back to the zero point; the caller treats the validation
        // error as "no constant root"
        vec![Series::zero(p), Series::zero(p)]
    }

    #[test]
    fn simplify_strictly_decreases_variable_degree() {
        let p = 2;
        // two polynomials of degree 2 in Y2 over a planted base point
        let y1 = series_poly(p, &[0, 1]); // X
        let y2 = series_poly(p, &[1, 1]); // 1+X
        let make = |text: &str| parse_mpoly(p, text, 2).unwrap();
        // adjust constants so the base point annihilates both
        let p1_raw = make("Y2^2 + Y2*Y1");
        let c1 = mpoly_eval(&p1_raw, &[y1.clone(), y2.clone()]).unwrap();
        let p1 = p1_raw.add(&MPoly::from_poly(c1.prefix_poly(32), 2));
        let p2_raw = make("Y2^2 + Y1");
        let c2 = mpoly_eval(&p2_raw, &[y1.clone(), y2.clone()]).unwrap();
        let p2 = p2_raw.add(&MPoly::from_poly(c2.prefix_poly(32), 2));
        let sys = GoodSystem::new(
            p,
            vec![p1, p2],
            vec![y1, y2],
            vec![(0, target("x"))],
            vec![],
            vec!["Y1".into(), "Y2".into()],
        )
        .unwrap();
        let before: usize = sys.sigma().iter().map(|q| q.degree_in(1) as usize).sum();
        let mut trace = Trace::new();
        let out = sys.simplify_over_variable(1, &mut trace).unwrap();
        let after: usize = out.sigma().iter().map(|q| q.degree_in(1) as usize).sum();
        assert!(after < before);
        assert!(out.mentioning(1).len() <= 1);
        out.validate().unwrap();
    }

    #[test]
    fn simplify_noop_when_variable_confined() {
        let p = 2;
        let sys = GoodSystem::new(
            p,
            vec![parse_mpoly(p, "Y2 + Y1^2", 2).unwrap()],
            vec![series_poly(p, &[0, 1]), series_poly(p, &[0, 0, 1])],
            vec![(0, target("x"))],
            vec![],
            vec!["Y1".into(), "Y2".into()],
        )
        .unwrap();
        let mut trace = Trace::new();
        let out = sys.simplify_over_variable(1, &mut trace).unwrap();
        assert_eq!(out.sigma(), sys.sigma());
    }

    #[test]
    fn eliminate_linear_is_substitution() {
        // {Y2 - Y1^2, Y3 - Y2 + X}: eliminating Y2 folds to {Y3 - Y1^2 + X}
        let p = 2;
        let y1 = series_poly(p, &[0, 1]);
        let y2 = series_poly(p, &[0, 0, 1]);
        let y3 = y2.add(&series_poly(p, &[0, 1])).unwrap();
        let sys = GoodSystem::new(
            p,
            vec![
                parse_mpoly(p, "Y2 + Y1^2", 3).unwrap(),
                parse_mpoly(p, "Y3 + Y2 + X", 3).unwrap(),
            ],
            vec![y1, y2, y3],
            vec![(2, target("x"))],
            vec![],
            vec!["Y1".into(), "Y2".into(), "Y3".into()],
        )
        .unwrap();
        let mut trace = Trace::new();
        let simplified = sys.simplify_over_variable(1, &mut trace).unwrap();
        let out = simplified.eliminate_variable(1, &mut trace).unwrap();
        assert_eq!(out.nvars(), 2);
        assert_eq!(out.sigma().len(), 1);
        let expected = parse_mpoly(p, "Y2 + Y1^2 + X", 2).unwrap();
        assert_eq!(out.sigma()[0], expected);
        out.validate().unwrap();
    }

    #[test]
    fn eliminate_projection_degree_one() {
        let p = 2;
        let sys = GoodSystem::new(
            p,
            vec![parse_mpoly(p, "Y2 + X", 2).unwrap()],
            vec![series_poly(p, &[1]), series_poly(p, &[0, 1])],
            vec![(0, target("x"))],
            vec![],
            vec!["Y1".into(), "Y2".into()],
        )
        .unwrap();
        let mut trace = Trace::new();
        let out = sys.eliminate_variable(1, &mut trace).unwrap();
        assert_eq!(out.nvars(), 1);
        assert!(out.sigma().is_empty());
    }

    #[test]
    fn pipeline_reduces_to_linear_annihilator() {
        let sys = pipeline_system();
        let outcome = sys.reduce().unwrap();
        let result = outcome.for_variable("Y3").expect("annihilator for the target");
        assert_eq!(result.annihilator.degree_in(0), 1, "{}", result.annihilator);
        assert!(result.verdict.holds());
        // H2 = 1 + X + X^3
        let expected_root = series_poly(2, &[1, 1, 0, 1]);
        assert!(result.base_value.eq_mod(&expected_root).0);
    }

    #[test]
    fn base_point_survives_every_pipeline_step() {
        // spot check: validate() is re-run inside every transformation of
        // the driver; a full reduce on the pipeline must therefore pass
        let sys = pipeline_system();
        sys.validate().unwrap();
        let outcome = sys.reduce().unwrap();
        assert!(!outcome.trace.is_empty());
    }

    #[test]
    fn degenerate_all_constant_witness() {
        use crate::tyszka::{build_network, constant_element, Ambient};
        let p = 2;
        let x_poly = Poly::from_coeffs(p, vec![1, 1]);
        let net = build_network(
            Ambient::SeriesRing { p },
            vec![
                constant_element("0", Poly::zero(p), Prec::Exact),
                constant_element("c", x_poly.clone(), Prec::Exact),
            ],
        )
        .unwrap();
        let sys = system_from_witness(&net, &[(1, target("c"))]).unwrap();
        assert_eq!(sys.nvars(), 1);
        assert_eq!(sys.sigma().len(), 1);
        // Y1 - (1+X)
        assert_eq!(sys.sigma()[0], parse_mpoly(p, "Y1 + 1 + X", 1).unwrap());
    }

    #[test]
    fn witness_system_for_inverse_collapses_to_annihilator() {
        use crate::christol::AlgebraicSeries;
        use crate::tyszka::witness_from_polynomial;
        let annihilator = parse_mpoly(2, "(1+X)*Y1 + 1", 1).unwrap();
        let f = AlgebraicSeries::new(annihilator.clone(), 1, 96).unwrap();
        let (net, root_target) = witness_from_polynomial(&f).unwrap();
        let elem = net.find_series(f.expansion()).unwrap();
        let sys = system_from_witness(&net, &[(elem, root_target)]).unwrap();
        let outcome = sys.reduce().unwrap();
        let result = &outcome.annihilators[0];
        assert!(result.verdict.holds());
        // (1+X)Y - 1 up to unit factors
        assert_eq!(result.annihilator.degree_in(0), 1);
        let value = mpoly_eval(&result.annihilator, std::slice::from_ref(f.expansion())).unwrap();
        assert!(value.is_zero_so_far());
    }

    #[test]
    fn witness_system_for_lacunary_series() {
        use crate::christol::AlgebraicSeries;
        use crate::tyszka::witness_from_polynomial;
        let annihilator = parse_mpoly(2, "Y1^2 + Y1 + X", 1).unwrap();
        let f = AlgebraicSeries::new(annihilator.clone(), 0, 96).unwrap();
        let (net, root_target) = witness_from_polynomial(&f).unwrap();
        let elem = net.find_series(f.expansion()).unwrap();
        let sys = system_from_witness(&net, &[(elem, root_target)]).unwrap();
        // merging collapses the quadratic witness straight to the
        // annihilator
        assert_eq!(sys.nvars(), 1);
        let outcome = sys.reduce().unwrap();
        let result = &outcome.annihilators[0];
        assert!(result.verdict.holds());
        assert_eq!(result.annihilator.degree_in(0), 2);
    }

    #[test]
    fn counterexample_network_merges_to_three_variables() {
        use crate::tyszka::counterexample_311;
        let p = 2;
        // polynomial inputs keep every constant in K = F_p[X]; random
        // degree-12 choices avoid accidental relations among the elements
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let f_poly = Poly::from_coeffs(p, (0..=12).map(|_| rng.random_range(0..p)).collect());
        let g_poly = Poly::from_coeffs(p, (0..=12).map(|_| rng.random_range(0..p)).collect());
        let h1_poly = f_poly.frobenius().add(&g_poly.frobenius().shift_up(1));
        let f = Series::from_poly(&f_poly).restrict_prec(48);
        let g = Series::from_poly(&g_poly).restrict_prec(48);
        let report = counterexample_311(&f, &g).unwrap();
        // rebuild the same witness set but with H1 as an exact constant so
        // the system encoder accepts it
        let h1 = f.pow_p().add(&g.pow_p().shift(1)).unwrap();
        let h2 = g.pow_p().add(&f.pow_p().shift(1)).unwrap();
        let net = &report.network;
        let h2_elem = net.find_series(&h2).unwrap();
        // replace the opaque constant by its polynomial form
        let elements: Vec<crate::tyszka::Element> = net
            .elements()
            .iter()
            .map(|e| {
                let mut e = e.clone();
                if let Value::Ser(s) = &e.value {
                    if s.eq_mod(&h1).0 {
                        e.constant = Some(crate::tyszka::KForm::Poly(h1_poly.clone()));
                    }
                }
                e
            })
            .collect();
        let net = crate::tyszka::build_network(
            crate::tyszka::Ambient::SeriesRing { p },
            elements,
        )
        .unwrap();
        let sys = system_from_witness(&net, &[(h2_elem, target("H2"))]).unwrap();
        // after merging: variables F, G, H2 and the two displayed equations
        assert_eq!(sys.nvars(), 3);
        assert_eq!(sys.sigma().len(), 2);
        for q in sys.sigma() {
            assert_eq!(q.total_degree(), 2);
        }
    }

    #[test]
    fn root_soundness_of_simplify_under_fq_oracle() {
        // common roots (inside the nonvanishing locus) never grow
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let p = 2u64;
        let field = SmallField::new(4).unwrap();
        let mut tested = 0;
        while tested < 25 {
            // plant a constant root
            let point: Vec<u64> = (0..2).map(|_| rng.random_range(0..p)).collect();
            let base: Vec<Series> = point.iter().map(|&c| Series::constant(p, c)).collect();
            let mut sigma = Vec::new();
            for _ in 0..2 {
                let mut poly = MPoly::zero(p, 2);
                for _ in 0..rng.random_range(2..4usize) {
                    let exps: Vec<u32> = (0..2).map(|_| rng.random_range(0..3u32)).collect();
                    let deg = rng.random_range(0..2usize);
                    let coeff =
                        Poly::from_coeffs(p, (0..=deg).map(|_| rng.random_range(0..p)).collect());
                    poly = poly.add(&MPoly::term(coeff, exps));
                }
                let at_base = mpoly_eval(&poly, &base).unwrap();
                let shift = MPoly::from_poly(at_base.prefix_poly(16), 2);
                let poly = poly.add(&shift);
                if !poly.is_zero() {
                    sigma.push(poly);
                }
            }
            if sigma.len() < 2 || !sigma.iter().any(|q| q.mentions(1)) {
                continue;
            }
            let Ok(sys) = GoodSystem::new(
                p,
                sigma.clone(),
                base,
                vec![(0, target("x"))],
                vec![],
                vec!["Y1".into(), "Y2".into()],
            ) else {
                continue;
            };
            let mut trace = Trace::new();
            let Ok(out) = sys.simplify_over_variable(1, &mut trace) else { continue };
            tested += 1;
            for x in field.elements() {
                for z0 in field.elements() {
                    for z1 in field.elements() {
                        let pt = [z0, z1];
                        let new_root =
                            out.sigma().iter().all(|q| q.eval_fq(&field, x, &pt) == 0);
                        let in_locus = out
                            .constraints()
                            .iter()
                            .all(|c| c.eval_fq(&field, x, &pt) != 0);
                        if new_root && in_locus {
                            let old_root =
                                sys.sigma().iter().all(|q| q.eval_fq(&field, x, &pt) == 0);
                            assert!(old_root, "root set grew at x={x}, z={pt:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn text_format_roundtrip() {
        let sys = pipeline_system();
        let text = sys.to_string();
        let back = GoodSystem::parse(&text).unwrap();
        assert_eq!(back.to_string(), text);
        assert_eq!(back.nvars(), sys.nvars());
        assert_eq!(back.sigma(), sys.sigma());
    }
}
