//! Witness-set constructions for algebraic series.
//!
//! The polynomial witness of an algebraic x collects the annihilator
//! coefficients, the powers of x, their products, and the partial sums of
//! the annihilation identity; propagation then pins φ(x) into the root set
//! of the annihilator. The stronger construction adds the coefficient
//! constants and tail sections of x up to the root-separation order, which
//! upgrades the root-set conclusion to φ(x) = x.

use super::propagate::{propagate_closure, PropagationOutcome};
use super::{build_network, Ambient, Element, KForm, Network, Value};
use crate::christol::AlgebraicSeries;
use crate::error::{Error, Result};
use crate::mpoly::MPoly;
use crate::poly::Poly;
use crate::series::Series;

/// The target set of a distinguished element: the roots of a polynomial,
/// symbolically, plus whichever roots are liftable at working precision.
#[derive(Clone, Debug)]
pub struct Target {
    pub description: String,
    pub annihilator: Option<MPoly>,
    pub explicit: Vec<Series>,
}

/// An element collection that merges values equal at working precision.
#[derive(Clone, Debug, Default)]
pub struct WitnessSet {
    items: Vec<Element>,
}

impl WitnessSet {
    pub fn new() -> Self {
        WitnessSet { items: Vec::new() }
    }

    /// Add an element, merging with an existing one when the values agree
    /// on the common known window. A constant form always survives a
    /// merge.
    pub fn push(&mut self, label: impl Into<String>, value: Series, constant: Option<KForm>) {
        for item in self.items.iter_mut() {
            let Value::Ser(existing) = &item.value else { continue };
            if existing.eq_mod(&value).0 {
                if item.constant.is_none() {
                    item.constant = constant;
                }
                // keep the more precise value representative
                if let Value::Ser(existing) = &item.value {
                    let better = match (existing.prec(), value.prec()) {
                        (crate::series::Prec::Exact, _) => false,
                        (_, crate::series::Prec::Exact) => true,
                        (crate::series::Prec::UpTo(a), crate::series::Prec::UpTo(b)) => b > a,
                    };
                    if better {
                        item.value = Value::Ser(value);
                    }
                }
                return;
            }
        }
        self.items.push(Element { label: label.into(), value: Value::Ser(value), constant });
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn into_network(self, p: u64) -> Result<Network> {
        build_network(Ambient::SeriesRing { p }, self.items)
    }
}

fn annihilator_coeffs(annihilator: &MPoly) -> Result<Vec<Poly>> {
    annihilator
        .coeffs_in(0)
        .into_iter()
        .map(|c| {
            c.as_coefficient().ok_or_else(|| {
                Error::Precondition("annihilator coefficients must lie in F_p[X]".to_string())
            })
        })
        .collect()
}

fn polynomial_witness_items(f: &AlgebraicSeries) -> Result<WitnessSet> {
    let p = f.p();
    let coeffs = annihilator_coeffs(f.annihilator())?;
    let d = coeffs.len() - 1;
    if d == 0 {
        return Err(Error::Precondition("annihilator must have positive degree".to_string()));
    }
    let x = f.expansion().clone();
    let mut w = WitnessSet::new();
    // the coefficient constants, with 0 for the closing identity
    w.push("0", Series::zero(p), Some(KForm::Poly(Poly::zero(p))));
    for (i, a) in coeffs.iter().enumerate() {
        w.push(format!("a{i}"), Series::from_poly(a), Some(KForm::Poly(a.clone())));
    }
    // powers of x
    let mut power = Series::one(p);
    let mut powers = vec![power.clone()];
    for i in 1..=d {
        power = power.mul(&x)?;
        powers.push(power.clone());
        let konst = if i == 0 { Some(KForm::Poly(Poly::one(p))) } else { None };
        w.push(format!("x^{i}"), power.clone(), konst);
    }
    w.push("x^0", Series::one(p), Some(KForm::Poly(Poly::one(p))));
    // products a_i x^i and the partial sums of the annihilation identity
    let mut psum = Series::zero(p);
    for (i, a) in coeffs.iter().enumerate() {
        let term = Series::from_poly(a).mul(&powers[i])?;
        let konst = if i == 0 { Some(KForm::Poly(a.clone())) } else { None };
        w.push(format!("a{i}*x^{i}"), term.clone(), konst);
        psum = psum.add(&term)?;
        w.push(format!("s{i}"), psum.clone(), None);
    }
    Ok(w)
}

fn root_target(f: &AlgebraicSeries) -> Target {
    let prec = f.expansion().prec().order().unwrap_or(crate::series::DEFAULT_PREC);
    Target {
        description: format!("roots of {}", f.annihilator()),
        annihilator: Some(f.annihilator().clone()),
        explicit: f.liftable_roots(prec),
    }
}

/// The witness network of an algebraic series: propagation over it sends
/// φ(x) into the root set of the annihilator.
pub fn witness_from_polynomial(f: &AlgebraicSeries) -> Result<(Network, Target)> {
    let net = polynomial_witness_items(f)?.into_network(f.p())?;
    Ok((net, root_target(f)))
}

/// The strengthened witness network: root separation below `n_sep` plus
/// the tail-section chain force φ(x) = x outright.
///
/// Fails when the annihilator's roots cannot all be enumerated and
/// separated at working precision.
pub fn witness_tc_series(f: &AlgebraicSeries, n_sep: i64) -> Result<(Network, Target)> {
    let p = f.p();
    let x = f.expansion();
    let prec = x.prec().order().unwrap_or(crate::series::DEFAULT_PREC);
    if n_sep < 0 || n_sep + 2 > prec {
        return Err(Error::PrecisionExhausted { left: prec, need: n_sep + 2 });
    }
    // every root must be liftable (separable residual) and any two roots
    // must differ before the separation order
    let residual = crate::christol::residual_poly(f.annihilator());
    if residual.is_zero() || !residual.gcd(&residual.derivative()).is_one() {
        return Err(Error::RootsNotSeparable);
    }
    let roots = f.liftable_roots(prec);
    for (i, r) in roots.iter().enumerate() {
        for s in roots.iter().skip(i + 1) {
            match r.first_difference(s) {
                Some(k) if k <= n_sep => {}
                _ => return Err(Error::RootsNotSeparable),
            }
        }
    }
    let mut w = polynomial_witness_items(f)?;
    // coefficient constants f_0..f_{n_sep}, the section variable, and the
    // tail sections with their shifts
    w.push("X", Series::from_poly(&Poly::x(p)), Some(KForm::Poly(Poly::x(p))));
    for i in 0..=n_sep {
        let c = x.coeff(i).ok_or(Error::PrecisionExhausted { left: prec, need: i + 1 })?;
        w.push(format!("f{i}"), Series::constant(p, c), Some(KForm::Poly(Poly::constant(p, c))));
    }
    for j in 0..=n_sep + 1 {
        let tail = x.tail_section(j)?;
        w.push(format!("G{j}"), tail.clone(), None);
        w.push(format!("X*G{j}"), tail.shift(1), None);
    }
    let net = w.into_network(p)?;
    Ok((net, root_target(f)))
}

/// Outcome of the two-generator section-uniqueness demonstration.
#[derive(Clone, Debug)]
pub struct CounterexampleReport {
    pub p: u64,
    /// φ(H2) was forced.
    pub forced: bool,
    /// Window on which the forced value equals H2.
    pub match_precision: Option<i64>,
    /// The two inputs were equal at truncation, making the run vacuous.
    pub degenerate: bool,
    pub network: Network,
    pub outcome: PropagationOutcome,
}

impl CounterexampleReport {
    pub fn human(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "section-uniqueness witness over F_{}[[X]] (inputs assumed transcendental; not certified)\n",
            self.p
        ));
        if self.degenerate {
            out.push_str("warning: F = G at working precision; the demonstration is vacuous\n");
        }
        match (self.forced, self.match_precision) {
            (true, Some(m)) => {
                out.push_str(&format!("phi(H2) forced, equal to H2 below X^{m}\n"))
            }
            (true, None) => out.push_str("phi(H2) forced\n"),
            (false, _) => out.push_str("phi(H2) NOT forced\n"),
        }
        out.push_str(&self.network.report_human(Some(&self.outcome)));
        out
    }
}

/// Build the witness set {X, H1, H2} ∪ {F^i, G^i} ∪ {XF^p, XG^p} with
/// H1 = F^p + X·G^p and H2 = G^p + X·F^p, fix φ(H1) = H1 as a constant of
/// the structure, propagate, and report whether φ(H2) = H2 is forced.
pub fn counterexample_311(f: &Series, g: &Series) -> Result<CounterexampleReport> {
    if f.p() != g.p() {
        return Err(Error::PrimeMismatch(f.p(), g.p()));
    }
    let p = f.p();
    for s in [f, g] {
        if s.valuation().is_some_and(|v| v < 0) {
            return Err(Error::NegativeOffset(s.valuation().unwrap()));
        }
    }
    let degenerate = f.eq_mod(g).0;
    let fp_pow = f.pow_p();
    let gp_pow = g.pow_p();
    let h1 = fp_pow.add(&gp_pow.shift(1))?;
    let h2 = gp_pow.add(&fp_pow.shift(1))?;

    let mut w = WitnessSet::new();
    w.push("X", Series::from_poly(&Poly::x(p)), Some(KForm::Poly(Poly::x(p))));
    w.push("H1", h1.clone(), Some(KForm::Opaque));
    w.push("H2", h2.clone(), None);
    let mut fi = f.clone();
    let mut gi = g.clone();
    for i in 1..=p {
        if i > 1 {
            fi = fi.mul(f)?;
            gi = gi.mul(g)?;
        }
        w.push(format!("F^{i}"), fi.clone(), None);
        w.push(format!("G^{i}"), gi.clone(), None);
    }
    w.push("X*F^p", fp_pow.shift(1), None);
    w.push("X*G^p", gp_pow.shift(1), None);

    let network = w.into_network(p)?;
    let h1_idx = network.find_series(&h1).expect("H1 is an element");
    let pins = vec![(h1_idx, h1.clone())];
    let outcome = propagate_closure(&network, &pins)?;

    let h2_idx = network.find_series(&h2).expect("H2 is an element");
    let (forced, match_precision) = match outcome.forced_value(h2_idx) {
        Some(v) => {
            let (eq, prec) = v.eq_mod(&h2);
            (eq, prec.order())
        }
        None => (false, None),
    };
    Ok(CounterexampleReport { p, forced, match_precision, degenerate, network, outcome })
}

#[cfg(test)]
mod tests {
    use super::super::propagate::{audit_soundness, Deduction};
    use super::*;
    use crate::christol::verify_annihilation;
    use crate::parse::parse_mpoly;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inverse_series_case() -> AlgebraicSeries {
        let p = parse_mpoly(2, "(1+X)*Y1 + 1", 1).unwrap();
        AlgebraicSeries::new(p, 1, 128).unwrap()
    }

    fn lacunary_case() -> AlgebraicSeries {
        let p = parse_mpoly(2, "Y1^2 + Y1 + X", 1).unwrap();
        AlgebraicSeries::new(p, 0, 128).unwrap()
    }

    #[test]
    fn inverse_witness_set_shape() {
        let (net, target) = witness_from_polynomial(&inverse_series_case()).unwrap();
        // {1, 1+X, x, 0} after merging
        assert_eq!(net.len(), 4);
        let labels: Vec<&str> = net.elements().iter().map(|e| e.label.as_str()).collect();
        assert!(labels.contains(&"0"));
        assert_eq!(target.explicit.len(), 1);
    }

    #[test]
    fn degree_one_witness_is_small() {
        // d = 1 keeps at most the eight family members before merging
        let p = parse_mpoly(2, "(1+X)*Y1 + X", 1).unwrap();
        let f = AlgebraicSeries::new(p, 0, 64).unwrap();
        let (net, _) = witness_from_polynomial(&f).unwrap();
        assert!(net.len() <= 8);
    }

    #[test]
    fn inverse_witness_forces_x() {
        let f = inverse_series_case();
        let (net, _) = witness_from_polynomial(&f).unwrap();
        let out = propagate_closure(&net, &[]).unwrap();
        let xi = net.find_series(f.expansion()).unwrap();
        let forced = out.forced_value(xi).expect("unique root must be forced");
        assert!(forced.eq_mod(f.expansion()).0);
        audit_soundness(&net, &out).unwrap();
    }

    #[test]
    fn lacunary_witness_pins_root_set() {
        let f = lacunary_case();
        let (net, target) = witness_from_polynomial(&f).unwrap();
        assert!(net.len() <= 12);
        assert_eq!(target.explicit.len(), 2, "both residual roots lift");
        let out = propagate_closure(&net, &[]).unwrap();
        let xi = net.find_series(f.expansion()).unwrap();
        match out.summary(xi) {
            Deduction::RootOf(c) => {
                // the constraint's roots satisfy the annihilator
                assert!(c.len() >= 3);
            }
            Deduction::Forced(v) => {
                // stronger than required, but must still be a root
                let verdict = verify_annihilation(f.annihilator(), &v).unwrap();
                assert!(verdict.holds());
            }
            Deduction::Open => panic!("x must at least acquire root status"),
        }
    }

    #[test]
    fn tc_witness_forces_inverse() {
        let f = inverse_series_case();
        let (net, _) = witness_tc_series(&f, 0).unwrap();
        let out = propagate_closure(&net, &[]).unwrap();
        let xi = net.find_series(f.expansion()).unwrap();
        let forced = out.forced_value(xi).expect("forced");
        assert!(forced.eq_mod(f.expansion()).0);
    }

    #[test]
    fn tc_witness_forces_lacunary() {
        let f = lacunary_case();
        // the two roots differ already in the constant coefficient
        let (net, _) = witness_tc_series(&f, 0).unwrap();
        let out = propagate_closure(&net, &[]).unwrap();
        let xi = net.find_series(f.expansion()).unwrap();
        let forced = out.forced_value(xi).expect("forced");
        assert!(forced.eq_mod(f.expansion()).0);
        audit_soundness(&net, &out).unwrap();
    }

    #[test]
    fn tc_witness_rejects_ramified_roots() {
        let p = parse_mpoly(2, "Y1^2 + X", 1).unwrap();
        // seed 0 is ramified so the expansion itself fails
        assert!(AlgebraicSeries::new(p, 0, 32).is_err());
    }

    #[test]
    fn counterexample_forces_h2_char2() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        let f = Series::random(&mut rng, 2, 0, 64);
        let g = Series::random(&mut rng, 2, 0, 64);
        let report = counterexample_311(&f, &g).unwrap();
        assert!(report.forced, "phi(H2) must be forced");
        assert!(!report.degenerate);
        assert!(report.match_precision.unwrap() >= 64);
    }

    #[test]
    fn counterexample_forces_h2_char3() {
        let mut rng = ChaCha8Rng::seed_from_u64(82);
        let f = Series::random(&mut rng, 3, 0, 64);
        let g = Series::random(&mut rng, 3, 0, 64);
        let report = counterexample_311(&f, &g).unwrap();
        assert!(report.forced);
        assert!(report.match_precision.unwrap() >= 64);
    }

    #[test]
    fn counterexample_degenerate_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let f = Series::random(&mut rng, 2, 0, 48);
        let report = counterexample_311(&f, &f.clone()).unwrap();
        assert!(report.degenerate);
        assert!(report.forced, "H1 = H2 still forces");
    }
}

