//! Deduction engine over series-valued networks.
//!
//! The engine closes a monotone fixpoint over per-element states. What is
//! known about φ(e) is a series prefix whose own precision carries the
//! congruence: ambient membership alone is the empty prefix, and every
//! arithmetic rule refines precision exactly as far as the series algebra
//! allows. The rule set is deliberately closed-ended:
//!
//!  - constants and pins are fixed to themselves;
//!  - in any triple with two deduced members the third is deduced
//!    (division only by elements with a definite nonzero valuation) —
//!    power chains are this rule iterated through the product triples;
//!  - when the triples exhibit v = Σ_i X^i·u_i^p with φ(v) partially
//!    known, uniqueness of the section decomposition forces
//!    φ(u_i) = Λ_i(φ(v));
//!  - elements whose constraints collapse to one univariate polynomial
//!    over the constant field get root status, and a root set whose
//!    members are all liftable is matched against the known prefix —
//!    exactly one consistent root forces the element.
//!
//! The engine is sound and deliberately incomplete.

use super::{KForm, Network, Value};
use crate::error::{Error, Result};
use crate::mpoly::MPoly;
use crate::poly::Poly;
use crate::ratfunc::RatFunc;
use crate::series::{Prec, Series, DEFAULT_PREC};

/// Hard cap on fixpoint rounds.
pub const PROPAGATE_CAP: usize = 20_000;

const MAX_DECOMPOSITIONS: usize = 16;

/// Summary deduction status of one element.
#[derive(Clone, Debug)]
pub enum Deduction {
    Forced(Series),
    RootOf(Vec<RatFunc>),
    Open,
}

#[derive(Clone, Debug)]
struct State {
    knowledge: Series, // φ(e) agrees with this on its known window
    complete: bool,    // knowledge was derived as a full value
    constraints: Vec<Vec<RatFunc>>,
    sym: Option<(usize, Vec<RatFunc>)>, // φ(e) as a polynomial in φ(base)
}

#[derive(Clone, Debug)]
pub struct PropagationOutcome {
    states: Vec<State>,
    pub rounds: usize,
}

impl PropagationOutcome {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn summary(&self, i: usize) -> Deduction {
        let s = &self.states[i];
        if s.complete {
            Deduction::Forced(s.knowledge.clone())
        } else if let Some(c) = s.constraints.iter().min_by_key(|c| c.len()) {
            Deduction::RootOf(c.clone())
        } else {
            Deduction::Open
        }
    }

    pub fn forced_value(&self, i: usize) -> Option<&Series> {
        if self.states[i].complete {
            Some(&self.states[i].knowledge)
        } else {
            None
        }
    }

    /// What is known about φ(e) so far, forced or not.
    pub fn knowledge(&self, i: usize) -> &Series {
        &self.states[i].knowledge
    }

    pub fn forced_count(&self) -> usize {
        self.states.iter().filter(|s| s.complete).count()
    }

    pub fn summary_line(&self, i: usize) -> String {
        match self.summary(i) {
            Deduction::Forced(v) => format!("status=forced value={v}"),
            Deduction::RootOf(c) => {
                let body = c
                    .iter()
                    .map(|r| r.to_string().replace(' ', ""))
                    .collect::<Vec<_>>()
                    .join("|");
                format!("status=rootof coeffs={body}")
            }
            Deduction::Open => "status=open".to_string(),
        }
    }
}

/// Close the deduction rules over the network, starting from the
/// constants and the pinned values.
pub fn propagate_closure(net: &Network, pins: &[(usize, Series)]) -> Result<PropagationOutcome> {
    let mut engine = Engine::new(net)?;
    engine.seed(pins)?;
    engine.run()?;
    Ok(PropagationOutcome { states: engine.states, rounds: engine.rounds })
}

/// Check that every fully-forced value is consistent with every triple all
/// of whose members are forced.
pub fn audit_soundness(net: &Network, outcome: &PropagationOutcome) -> Result<()> {
    let complete = |i: usize| outcome.forced_value(i);
    for &(a, b, c) in net.add_triples() {
        if let (Some(x), Some(y), Some(z)) = (complete(a), complete(b), complete(c)) {
            let sum = x.add(y)?;
            if !sum.eq_mod(z).0 {
                return Err(Error::Contradiction {
                    context: format!("audit: {} + {} != {}", label(net, a), label(net, b), label(net, c)),
                });
            }
        }
    }
    for &(a, b, c) in net.mul_triples() {
        if let (Some(x), Some(y), Some(z)) = (complete(a), complete(b), complete(c)) {
            let prod = x.mul(y)?;
            if !prod.eq_mod(z).0 {
                return Err(Error::Contradiction {
                    context: format!("audit: {} * {} != {}", label(net, a), label(net, b), label(net, c)),
                });
            }
        }
    }
    Ok(())
}

fn label(net: &Network, i: usize) -> String {
    net.element(i).label.clone()
}

struct Engine<'a> {
    net: &'a Network,
    work_cap: i64,
    states: Vec<State>,
    decomps: Vec<Vec<Vec<(u64, usize)>>>,
    changed: bool,
    rounds: usize,
}

impl<'a> Engine<'a> {
    fn new(net: &'a Network) -> Result<Self> {
        let p = net.ambient().p();
        if !matches!(net.ambient(), super::Ambient::SeriesRing { .. }) {
            return Err(Error::AmbientMismatch {
                expected: "series ring",
                got: net.ambient().kind(),
            });
        }
        let work = net.working_precision().unwrap_or(DEFAULT_PREC);
        let states = net
            .elements()
            .iter()
            .enumerate()
            .map(|(i, e)| State {
                knowledge: Series::zero_so_far(p, 0),
                complete: false,
                constraints: Vec::new(),
                sym: if e.is_constant() { None } else { Some((i, vec![RatFunc::zero(p), RatFunc::one(p)])) },
            })
            .collect();
        let decomps = decompositions(net, p);
        Ok(Engine {
            net,
            work_cap: work * p as i64 + 16,
            states,
            decomps,
            changed: false,
            rounds: 0,
        })
    }

    fn value_of(&self, i: usize) -> &Series {
        match &self.net.element(i).value {
            Value::Ser(s) => s,
            Value::Fq(_) => unreachable!("checked series ambient"),
        }
    }

    fn seed(&mut self, pins: &[(usize, Series)]) -> Result<()> {
        for i in 0..self.net.len() {
            if self.net.element(i).is_constant() {
                let v = self.value_of(i).clone();
                self.absorb(i, v, true)?;
            }
        }
        for (i, v) in pins {
            self.absorb(*i, v.clone(), true)?;
        }
        Ok(())
    }

    /// Merge a deduction about φ(e) into the state; errors on conflict.
    fn absorb(&mut self, i: usize, cand: Series, complete: bool) -> Result<()> {
        let cand = cand.restrict_prec(self.work_cap);
        let state = &mut self.states[i];
        let (eq, _) = cand.eq_mod(&state.knowledge);
        if !eq {
            return Err(Error::Contradiction {
                context: format!(
                    "element {}: deduced {} conflicts with {}",
                    self.net.element(i).label,
                    cand,
                    state.knowledge
                ),
            });
        }
        let better = match (state.knowledge.prec(), cand.prec()) {
            (Prec::Exact, _) => false,
            (_, Prec::Exact) => true,
            (Prec::UpTo(old), Prec::UpTo(new)) => new > old,
        };
        if better {
            state.knowledge = cand;
            self.changed = true;
        }
        if complete && !state.complete {
            state.complete = true;
            self.changed = true;
        }
        Ok(())
    }

    fn run(&mut self) -> Result<()> {
        loop {
            self.changed = false;
            self.rounds += 1;
            if self.rounds > PROPAGATE_CAP {
                return Err(Error::IterationCap {
                    cap: PROPAGATE_CAP,
                    context: "propagation fixpoint".to_string(),
                });
            }
            self.triple_rules()?;
            self.section_rules()?;
            self.sym_rules()?;
            self.constraint_rules()?;
            if !self.changed {
                return Ok(());
            }
        }
    }

    // two deduced members of a triple determine the third
    fn triple_rules(&mut self) -> Result<()> {
        for t in 0..self.net.add_triples().len() {
            let (a, b, c) = self.net.add_triples()[t];
            let (ka, kb, kc) = (
                self.states[a].knowledge.clone(),
                self.states[b].knowledge.clone(),
                self.states[c].knowledge.clone(),
            );
            let (fa, fb, fc) =
                (self.states[a].complete, self.states[b].complete, self.states[c].complete);
            self.absorb(c, ka.add(&kb)?, fa && fb)?;
            self.absorb(a, kc.sub(&kb)?, fc && fb)?;
            self.absorb(b, kc.sub(&ka)?, fc && fa)?;
        }
        for t in 0..self.net.mul_triples().len() {
            let (a, b, c) = self.net.mul_triples()[t];
            let (ka, kb, kc) = (
                self.states[a].knowledge.clone(),
                self.states[b].knowledge.clone(),
                self.states[c].knowledge.clone(),
            );
            let (fa, fb, fc) =
                (self.states[a].complete, self.states[b].complete, self.states[c].complete);
            self.absorb(c, ka.mul(&kb)?, fa && fb)?;
            // division only by a factor with a definite nonzero valuation
            if ka.valuation().is_some() {
                let quot = kc.div(&ka)?;
                if quot.valuation().is_some_and(|v| v < 0) {
                    return Err(Error::Contradiction {
                        context: format!(
                            "element {}: quotient leaves the series ring",
                            self.net.element(b).label
                        ),
                    });
                }
                self.absorb(b, quot, fc && fa)?;
            }
            if kb.valuation().is_some() {
                let quot = kc.div(&kb)?;
                if quot.valuation().is_some_and(|v| v < 0) {
                    return Err(Error::Contradiction {
                        context: format!(
                            "element {}: quotient leaves the series ring",
                            self.net.element(a).label
                        ),
                    });
                }
                self.absorb(a, quot, fc && fb)?;
            }
        }
        Ok(())
    }

    // v = Σ X^i u_i^p exhibited by the triples: unique section
    // decomposition forces φ(u_i) = Λ_i(φ(v))
    fn section_rules(&mut self) -> Result<()> {
        for v in 0..self.net.len() {
            if self.decomps[v].is_empty() {
                continue;
            }
            let kv = self.states[v].knowledge.clone();
            let fv = self.states[v].complete;
            for d in self.decomps[v].clone() {
                for (digit, u) in d {
                    let cand = kv.cartier(digit)?;
                    self.absorb(u, cand, fv)?;
                }
            }
        }
        Ok(())
    }

    fn desc(&self, i: usize) -> Option<SymDesc> {
        if let Some(kform) = &self.net.element(i).constant {
            return kform.as_ratfunc().map(SymDesc::Const);
        }
        self.states[i]
            .sym
            .as_ref()
            .map(|(base, coeffs)| SymDesc::Poly(*base, coeffs.clone()))
    }

    // symbolic polynomials in a single unknown, combined through triples
    fn sym_rules(&mut self) -> Result<()> {
        for t in 0..self.net.add_triples().len() {
            let (a, b, c) = self.net.add_triples()[t];
            if let (Some(da), Some(db)) = (self.desc(a), self.desc(b)) {
                if let Some(sum) = da.add(&db) {
                    self.apply_sym(c, sum)?;
                }
            }
            if let (Some(dc), Some(db)) = (self.desc(c), self.desc(b)) {
                if let Some(diff) = dc.sub(&db) {
                    self.apply_sym(a, diff)?;
                }
            }
            if let (Some(dc), Some(da)) = (self.desc(c), self.desc(a)) {
                if let Some(diff) = dc.sub(&da) {
                    self.apply_sym(b, diff)?;
                }
            }
        }
        for t in 0..self.net.mul_triples().len() {
            let (a, b, c) = self.net.mul_triples()[t];
            if let (Some(da), Some(db)) = (self.desc(a), self.desc(b)) {
                if let Some(prod) = da.mul(&db) {
                    self.apply_sym(c, prod)?;
                }
            }
        }
        // a forced base evaluates every polynomial that mentions it
        for i in 0..self.net.len() {
            let Some((base, coeffs)) = self.states[i].sym.clone() else { continue };
            if base == i || !self.states[base].complete {
                continue;
            }
            let kb = self.states[base].knowledge.clone();
            let value = eval_ratfunc_poly(&coeffs, &kb, self.work_cap)?;
            self.absorb(i, value, true)?;
        }
        Ok(())
    }

    fn apply_sym(&mut self, target: usize, cand: SymDesc) -> Result<()> {
        match cand {
            SymDesc::Const(_) => Ok(()), // constants already fixed by R1
            SymDesc::Poly(base, coeffs) => {
                if let Some(kform) = &self.net.element(target).constant {
                    // constraint: candidate(t) = constant
                    let Some(k) = kform.as_ratfunc() else { return Ok(()) };
                    let mut diff = coeffs;
                    diff[0] = diff[0].sub(&k);
                    return self.add_constraint(base, diff);
                }
                match &self.states[target].sym {
                    None => {
                        self.states[target].sym = Some((base, coeffs));
                        self.changed = true;
                        Ok(())
                    }
                    Some((existing_base, existing)) => {
                        if *existing_base == base {
                            let diff = poly_sub(existing, &coeffs);
                            return self.add_constraint(base, diff);
                        }
                        // an expression in an earlier base supersedes the
                        // tautological identity expression
                        if base < *existing_base && *existing_base == target {
                            self.states[target].sym = Some((base, coeffs));
                            self.changed = true;
                        }
                        Ok(())
                    }
                }
            }
        }
    }

    fn add_constraint(&mut self, base: usize, mut coeffs: Vec<RatFunc>) -> Result<()> {
        while coeffs.last().is_some_and(RatFunc::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Ok(()); // tautology
        }
        if coeffs.len() == 1 {
            return Err(Error::Contradiction {
                context: format!(
                    "element {}: inconsistent constant constraint",
                    self.net.element(base).label
                ),
            });
        }
        if !self.states[base].constraints.contains(&coeffs) {
            self.states[base].constraints.push(coeffs);
            self.changed = true;
        }
        Ok(())
    }

    // linear constraints solve; higher-degree ones match liftable roots
    // against the known prefix
    fn constraint_rules(&mut self) -> Result<()> {
        for i in 0..self.net.len() {
            for c in self.states[i].constraints.clone() {
                if c.len() == 2 {
                    if self.states[i].complete {
                        continue;
                    }
                    // c1·t + c0 = 0
                    let root = c[0].neg().div(&c[1])?;
                    let value = Series::from_ratfunc(&root, self.work_cap)?;
                    if value.valuation().is_some_and(|v| v < 0) {
                        return Err(Error::Contradiction {
                            context: format!(
                                "element {}: linear solution leaves the series ring",
                                self.net.element(i).label
                            ),
                        });
                    }
                    self.absorb(i, value, true)?;
                } else {
                    self.match_roots(i, &c)?;
                }
            }
        }
        Ok(())
    }

    fn match_roots(&mut self, i: usize, constraint: &[RatFunc]) -> Result<()> {
        if self.states[i].complete {
            return Ok(());
        }
        let Some(annihilator) = clear_denominators(constraint) else { return Ok(()) };
        let residual = crate::christol::residual_poly(&annihilator);
        if residual.is_zero() || residual.is_constant() {
            return Ok(());
        }
        // soundness needs the full root set: every residual root must be
        // simple so each lifts uniquely
        if !residual.gcd(&residual.derivative()).is_one() {
            return Ok(());
        }
        let roots = crate::christol::liftable_roots_of(&annihilator, self.work_cap);
        let prefix = self.states[i].knowledge.clone();
        let consistent: Vec<&Series> = roots.iter().filter(|r| prefix.eq_mod(r).0).collect();
        match consistent.len() {
            0 => Err(Error::Contradiction {
                context: format!(
                    "element {}: no root of its constraint matches the known prefix",
                    self.net.element(i).label
                ),
            }),
            1 => {
                let root = consistent[0].clone();
                self.absorb(i, root, true)
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
enum SymDesc {
    Const(RatFunc),
    Poly(usize, Vec<RatFunc>),
}

impl SymDesc {
    fn add(&self, other: &SymDesc) -> Option<SymDesc> {
        match (self, other) {
            (SymDesc::Const(a), SymDesc::Const(b)) => Some(SymDesc::Const(a.add(b))),
            (SymDesc::Const(a), SymDesc::Poly(base, c)) | (SymDesc::Poly(base, c), SymDesc::Const(a)) => {
                let mut c = c.clone();
                c[0] = c[0].add(a);
                Some(SymDesc::Poly(*base, c))
            }
            (SymDesc::Poly(b1, c1), SymDesc::Poly(b2, c2)) => {
                if b1 != b2 {
                    return None;
                }
                Some(SymDesc::Poly(*b1, poly_add(c1, c2)))
            }
        }
    }

    fn sub(&self, other: &SymDesc) -> Option<SymDesc> {
        self.add(&other.neg())
    }

    fn neg(&self) -> SymDesc {
        match self {
            SymDesc::Const(a) => SymDesc::Const(a.neg()),
            SymDesc::Poly(b, c) => SymDesc::Poly(*b, c.iter().map(RatFunc::neg).collect()),
        }
    }

    fn mul(&self, other: &SymDesc) -> Option<SymDesc> {
        match (self, other) {
            (SymDesc::Const(a), SymDesc::Const(b)) => Some(SymDesc::Const(a.mul(b))),
            (SymDesc::Const(a), SymDesc::Poly(base, c)) | (SymDesc::Poly(base, c), SymDesc::Const(a)) => {
                Some(SymDesc::Poly(*base, c.iter().map(|x| x.mul(a)).collect()))
            }
            (SymDesc::Poly(b1, c1), SymDesc::Poly(b2, c2)) => {
                if b1 != b2 {
                    return None;
                }
                Some(SymDesc::Poly(*b1, poly_mul(c1, c2)))
            }
        }
    }
}

fn poly_add(a: &[RatFunc], b: &[RatFunc]) -> Vec<RatFunc> {
    let p = a.first().or(b.first()).map(RatFunc::p).expect("nonempty");
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(|| RatFunc::zero(p));
            let y = b.get(i).cloned().unwrap_or_else(|| RatFunc::zero(p));
            x.add(&y)
        })
        .collect()
}

fn poly_sub(a: &[RatFunc], b: &[RatFunc]) -> Vec<RatFunc> {
    let neg: Vec<RatFunc> = b.iter().map(RatFunc::neg).collect();
    poly_add(a, &neg)
}

fn poly_mul(a: &[RatFunc], b: &[RatFunc]) -> Vec<RatFunc> {
    let p = a.first().map(RatFunc::p).expect("nonempty");
    let mut out = vec![RatFunc::zero(p); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(&x.mul(y));
        }
    }
    out
}

fn eval_ratfunc_poly(coeffs: &[RatFunc], at: &Series, prec: i64) -> Result<Series> {
    let p = at.p();
    let mut acc = Series::zero(p);
    for c in coeffs.iter().rev() {
        let c_series = Series::from_ratfunc(c, prec)?;
        acc = acc.mul(at)?.add(&c_series)?;
    }
    Ok(acc)
}

/// Clear denominators of a constraint into a univariate polynomial over
/// `F_p[X]`.
fn clear_denominators(constraint: &[RatFunc]) -> Option<MPoly> {
    let p = constraint.first()?.p();
    let mut lcm = Poly::one(p);
    for c in constraint {
        let den = c.den();
        let g = lcm.gcd(den);
        lcm = lcm.mul(&den.div_exact(&g).expect("gcd divides"));
    }
    let mut out = MPoly::zero(p, 1);
    for (k, c) in constraint.iter().enumerate() {
        let scaled = c.num().mul(&lcm.div_exact(c.den()).expect("lcm divisible"));
        if !scaled.is_zero() {
            out = out.add(&MPoly::term(scaled, vec![k as u32]));
        }
    }
    if out.is_zero() { None } else { Some(out) }
}

/// All ways the triples exhibit an element as Σ_i X^i · u_i^p with
/// pairwise distinct digits i.
fn decompositions(net: &Network, p: u64) -> Vec<Vec<Vec<(u64, usize)>>> {
    let n = net.len();
    // m = u^p chains through the product triples
    let mut power_pairs: Vec<(usize, usize)> = Vec::new();
    for u in 0..n {
        let mut exps: Vec<std::collections::BTreeSet<u32>> = vec![Default::default(); n];
        exps[u].insert(1);
        loop {
            let mut changed = false;
            for &(a, b, c) in net.mul_triples() {
                let pairs: Vec<u32> = exps[a]
                    .iter()
                    .flat_map(|&ea| exps[b].iter().map(move |&eb| ea + eb))
                    .filter(|&e| e <= p as u32)
                    .collect();
                for e in pairs {
                    if exps[c].insert(e) {
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for m in 0..n {
            if exps[m].contains(&(p as u32)) {
                power_pairs.push((u, m));
            }
        }
    }
    let monomial_digit = |i: usize| -> Option<u64> {
        match &net.element(i).constant {
            Some(KForm::Poly(poly)) => {
                let v = poly.valuation()?;
                if (v as u64) < p && poly.coeffs().iter().filter(|&&c| c != 0).count() == 1
                    && poly.coeff(v) == 1
                {
                    Some(v as u64)
                } else {
                    None
                }
            }
            _ => None,
        }
    };
    // atoms: m = X^i · u^p
    let mut atoms: Vec<Vec<(u64, usize)>> = vec![Vec::new(); n];
    for &(u, m) in &power_pairs {
        atoms[m].push((0, u));
    }
    for &(a, b, c) in net.mul_triples() {
        for (coeff, body) in [(a, b), (b, a)] {
            if let Some(i) = monomial_digit(coeff) {
                if i >= 1 {
                    for &(u, m) in &power_pairs {
                        if m == body {
                            atoms[c].push((i, u));
                        }
                    }
                }
            }
        }
    }
    let is_zero_elem = |i: usize| {
        matches!(&net.element(i).constant, Some(KForm::Poly(poly)) if poly.is_zero())
    };
    let mut out: Vec<Vec<Vec<(u64, usize)>>> = vec![Vec::new(); n];
    for v in 0..n {
        let mut stack = vec![v];
        let mut found = Vec::new();
        collect_decomps(net, &atoms, &is_zero_elem, v, &mut stack, &mut found);
        found.retain(|d| !d.is_empty());
        found.sort();
        found.dedup();
        found.truncate(MAX_DECOMPOSITIONS);
        out[v] = found;
    }
    out
}

fn collect_decomps(
    net: &Network,
    atoms: &[Vec<(u64, usize)>],
    is_zero: &dyn Fn(usize) -> bool,
    v: usize,
    stack: &mut Vec<usize>,
    out: &mut Vec<Vec<(u64, usize)>>,
) {
    if out.len() > 4 * MAX_DECOMPOSITIONS {
        return;
    }
    for &atom in &atoms[v] {
        out.push(vec![atom]);
    }
    if is_zero(v) {
        out.push(Vec::new());
    }
    for &(x, y, c) in net.add_triples() {
        if c != v || stack.contains(&x) || stack.contains(&y) {
            continue;
        }
        let mut dx = Vec::new();
        stack.push(x);
        collect_decomps(net, atoms, is_zero, x, stack, &mut dx);
        stack.pop();
        if dx.is_empty() {
            continue;
        }
        let mut dy = Vec::new();
        stack.push(y);
        collect_decomps(net, atoms, is_zero, y, stack, &mut dy);
        stack.pop();
        for a in &dx {
            for b in &dy {
                let mut merged = a.clone();
                merged.extend_from_slice(b);
                let mut digits: Vec<u64> = merged.iter().map(|&(d, _)| d).collect();
                digits.sort_unstable();
                digits.dedup();
                if digits.len() == merged.len() {
                    merged.sort_unstable();
                    out.push(merged);
                }
            }
        }
    }
}
