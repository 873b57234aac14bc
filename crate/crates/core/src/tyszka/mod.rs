//! Pseudo-morphism constraint networks.
//!
//! A network is a finite set of ambient elements together with every
//! addition and multiplication triple that holds among them and a record
//! of which elements are constants of the structure. A pseudo-morphism is
//! a map on the element set fixing the constants and respecting the
//! triples; the submodules enumerate such maps over finite fields and
//! propagate their forced values over series.

mod enumerate;
mod gco;
mod propagate;
mod witness;

pub use enumerate::{characterizable_subfield, enumerate_branch, enumerate_pseudo_morphisms};
pub use gco::{khat_members, GeneralizedCartier, KhatOptions};
pub use propagate::{audit_soundness, propagate_closure, Deduction, PropagationOutcome};
pub use witness::{
    counterexample_311, witness_from_polynomial, witness_tc_series, CounterexampleReport,
    Target, WitnessSet,
};

use crate::error::{Error, Result};
use crate::field::SmallField;
use crate::poly::Poly;
use crate::ratfunc::RatFunc;
use crate::series::{Prec, Series};
use std::fmt;

/// A value in the ambient structure.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    /// Element of a small finite field (by table index).
    Fq(u16),
    /// Element of `F_p[[X]]` given at truncation.
    Ser(Series),
}

impl Value {
    pub fn as_series(&self) -> Option<&Series> {
        match self {
            Value::Ser(s) => Some(s),
            Value::Fq(_) => None,
        }
    }
}

/// Exact form of a constant, when one is known.
#[derive(Clone, Debug, PartialEq)]
pub enum KForm {
    Poly(Poly),
    Rat(RatFunc),
    /// A constant of the structure without a closed form over F_p(X)
    /// (an adjoined series generator).
    Opaque,
}

impl KForm {
    pub fn as_ratfunc(&self) -> Option<RatFunc> {
        match self {
            KForm::Poly(p) => Some(RatFunc::from_poly(p.clone())),
            KForm::Rat(r) => Some(r.clone()),
            KForm::Opaque => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Element {
    pub label: String,
    pub value: Value,
    /// `Some` marks a constant of the structure: pseudo-morphisms fix it.
    pub constant: Option<KForm>,
}

impl Element {
    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }
}

/// The ambient structure the elements live in.
#[derive(Clone, Debug)]
pub enum Ambient {
    Finite(SmallField),
    /// `F_p[[X]]`: values are series with nonnegative valuation.
    SeriesRing { p: u64 },
}

impl Ambient {
    pub fn kind(&self) -> &'static str {
        match self {
            Ambient::Finite(_) => "finite field",
            Ambient::SeriesRing { .. } => "series ring",
        }
    }

    pub fn p(&self) -> u64 {
        match self {
            Ambient::Finite(f) => f.p(),
            Ambient::SeriesRing { p } => *p,
        }
    }

    pub fn add(&self, a: &Value, b: &Value) -> Result<Value> {
        match (self, a, b) {
            (Ambient::Finite(f), Value::Fq(x), Value::Fq(y)) => Ok(Value::Fq(f.add(*x, *y))),
            (Ambient::SeriesRing { .. }, Value::Ser(x), Value::Ser(y)) => {
                Ok(Value::Ser(x.add(y)?))
            }
            _ => Err(self.mismatch()),
        }
    }

    pub fn mul(&self, a: &Value, b: &Value) -> Result<Value> {
        match (self, a, b) {
            (Ambient::Finite(f), Value::Fq(x), Value::Fq(y)) => Ok(Value::Fq(f.mul(*x, *y))),
            (Ambient::SeriesRing { .. }, Value::Ser(x), Value::Ser(y)) => {
                Ok(Value::Ser(x.mul(y)?))
            }
            _ => Err(self.mismatch()),
        }
    }

    /// Equality, at truncation for series values.
    pub fn eq(&self, a: &Value, b: &Value) -> Result<bool> {
        match (self, a, b) {
            (Ambient::Finite(_), Value::Fq(x), Value::Fq(y)) => Ok(x == y),
            (Ambient::SeriesRing { .. }, Value::Ser(x), Value::Ser(y)) => Ok(x.eq_mod(y).0),
            _ => Err(self.mismatch()),
        }
    }

    fn mismatch(&self) -> Error {
        Error::AmbientMismatch { expected: self.kind(), got: "other" }
    }
}

/// A finite witness set with its full relation tables.
#[derive(Clone, Debug)]
pub struct Network {
    ambient: Ambient,
    elements: Vec<Element>,
    add_triples: Vec<(usize, usize, usize)>, // a + b = c with a ≤ b
    mul_triples: Vec<(usize, usize, usize)>, // a · b = c with a ≤ b
}

/// Discover every addition and multiplication triple among the elements
/// and validate that the elements are pairwise distinguishable.
pub fn build_network(ambient: Ambient, mut elements: Vec<Element>) -> Result<Network> {
    // field constants 0 and 1 are always constants of the structure
    for e in elements.iter_mut() {
        if e.constant.is_some() {
            continue;
        }
        match (&ambient, &e.value) {
            (Ambient::Finite(_), Value::Fq(0)) => {
                e.constant = Some(KForm::Poly(Poly::zero(ambient.p())))
            }
            (Ambient::Finite(_), Value::Fq(1)) => {
                e.constant = Some(KForm::Poly(Poly::one(ambient.p())))
            }
            (Ambient::SeriesRing { p }, Value::Ser(s)) => {
                if s.is_exactly_zero() {
                    e.constant = Some(KForm::Poly(Poly::zero(*p)));
                } else if s == &Series::one(*p) {
                    e.constant = Some(KForm::Poly(Poly::one(*p)));
                }
            }
            _ => {}
        }
    }
    let n = elements.len();
    for i in 0..n {
        for j in i + 1..n {
            if ambient.eq(&elements[i].value, &elements[j].value)? {
                return Err(Error::AmbiguousElements(
                    elements[i].label.clone(),
                    elements[j].label.clone(),
                ));
            }
        }
    }
    let mut add_triples = Vec::new();
    let mut mul_triples = Vec::new();
    for a in 0..n {
        for b in a..n {
            let sum = ambient.add(&elements[a].value, &elements[b].value)?;
            if let Some(c) = find_value(&ambient, &elements, &sum)? {
                add_triples.push((a, b, c));
            }
            let prod = ambient.mul(&elements[a].value, &elements[b].value)?;
            if let Some(c) = find_value(&ambient, &elements, &prod)? {
                mul_triples.push((a, b, c));
            }
        }
    }
    Ok(Network { ambient, elements, add_triples, mul_triples })
}

fn find_value(ambient: &Ambient, elements: &[Element], v: &Value) -> Result<Option<usize>> {
    for (i, e) in elements.iter().enumerate() {
        if ambient.eq(&e.value, v)? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

impl Network {
    pub fn ambient(&self) -> &Ambient {
        &self.ambient
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &Element {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn add_triples(&self) -> &[(usize, usize, usize)] {
        &self.add_triples
    }

    pub fn mul_triples(&self) -> &[(usize, usize, usize)] {
        &self.mul_triples
    }

    pub fn find_label(&self, label: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.label == label)
    }

    pub fn find_series(&self, v: &Series) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| matches!(&e.value, Value::Ser(s) if s.eq_mod(v).0))
    }

    /// The weakest knowledge horizon among series values, if any are
    /// inexact.
    pub fn working_precision(&self) -> Option<i64> {
        self.elements
            .iter()
            .filter_map(|e| match &e.value {
                Value::Ser(s) => s.prec().order(),
                Value::Fq(_) => None,
            })
            .min()
    }

    /// True iff `phi` fixes every constant and respects every triple.
    pub fn is_pseudo_morphism(&self, phi: &[Value]) -> Result<bool> {
        if phi.len() != self.elements.len() {
            return Err(Error::ArityMismatch { expected: self.elements.len(), got: phi.len() });
        }
        for (e, v) in self.elements.iter().zip(phi) {
            if e.is_constant() && !self.ambient.eq(&e.value, v)? {
                return Ok(false);
            }
        }
        for &(a, b, c) in &self.add_triples {
            let sum = self.ambient.add(&phi[a], &phi[b])?;
            if !self.ambient.eq(&sum, &phi[c])? {
                return Ok(false);
            }
        }
        for &(a, b, c) in &self.mul_triples {
            let prod = self.ambient.mul(&phi[a], &phi[b])?;
            if !self.ambient.eq(&prod, &phi[c])? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The induced sub-network on a subset of elements (triples that stay
    /// entirely inside the subset survive).
    pub fn restrict(&self, subset: &[usize]) -> Network {
        let mut index = vec![usize::MAX; self.elements.len()];
        for (new, &old) in subset.iter().enumerate() {
            index[old] = new;
        }
        let keep = |t: &(usize, usize, usize)| {
            index[t.0] != usize::MAX && index[t.1] != usize::MAX && index[t.2] != usize::MAX
        };
        Network {
            ambient: self.ambient.clone(),
            elements: subset.iter().map(|&i| self.elements[i].clone()).collect(),
            add_triples: self
                .add_triples
                .iter()
                .filter(|t| keep(t))
                .map(|t| (index[t.0], index[t.1], index[t.2]))
                .collect(),
            mul_triples: self
                .mul_triples
                .iter()
                .filter(|t| keep(t))
                .map(|t| (index[t.0], index[t.1], index[t.2]))
                .collect(),
        }
    }

    /// Machine-readable witness-set report; one line per element, then the
    /// triples, then one deduction line per element when an outcome is
    /// given.
    pub fn report_structured(&self, outcome: Option<&PropagationOutcome>) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "network ambient={} elements={} add={} mul={}\n",
            self.ambient.kind().replace(' ', "-"),
            self.elements.len(),
            self.add_triples.len(),
            self.mul_triples.len()
        ));
        for (i, e) in self.elements.iter().enumerate() {
            let value = match &e.value {
                Value::Fq(x) => format!("fq:{x}"),
                Value::Ser(s) => format!("series:{s}"),
            };
            let konst = match &e.constant {
                None => "free".to_string(),
                Some(KForm::Poly(p)) => format!("const:{p}"),
                Some(KForm::Rat(r)) => format!("const:{r}"),
                Some(KForm::Opaque) => "const:opaque".to_string(),
            };
            out.push_str(&format!("element id={i} label={} {konst} value={value}\n", e.label));
        }
        for &(a, b, c) in &self.add_triples {
            out.push_str(&format!("add {a} {b} {c}\n"));
        }
        for &(a, b, c) in &self.mul_triples {
            out.push_str(&format!("mul {a} {b} {c}\n"));
        }
        if let Some(outcome) = outcome {
            for i in 0..self.elements.len() {
                out.push_str(&format!("deduction id={i} {}\n", outcome.summary_line(i)));
            }
        }
        out
    }

    /// Human-readable table of the witness set.
    pub fn report_human(&self, outcome: Option<&PropagationOutcome>) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} elements, {} addition triples, {} multiplication triples\n",
            self.elements.len(),
            self.add_triples.len(),
            self.mul_triples.len()
        ));
        for (i, e) in self.elements.iter().enumerate() {
            let konst = if e.is_constant() { "constant" } else { "free" };
            let status = outcome.map_or(String::new(), |o| format!("  [{}]", o.summary_line(i)));
            out.push_str(&format!("  #{i:<3} {:<20} {konst}{status}\n", e.label));
        }
        out
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.report_human(None))
    }
}

/// Convenience constructors for elements.
pub fn series_element(label: impl Into<String>, value: Series) -> Element {
    Element { label: label.into(), value: Value::Ser(value), constant: None }
}

pub fn constant_element(label: impl Into<String>, poly: Poly, prec: Prec) -> Element {
    let value = match prec {
        Prec::Exact => Series::from_poly(&poly),
        Prec::UpTo(n) => Series::from_poly(&poly).restrict_prec(n),
    };
    Element {
        label: label.into(),
        value: Value::Ser(value),
        constant: Some(KForm::Poly(poly)),
    }
}

pub fn fq_element(field: &SmallField, value: u16) -> Element {
    Element {
        label: field.name(value),
        value: Value::Fq(value),
        constant: None,
    }
}
