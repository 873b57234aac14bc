//! Exhaustive pseudo-morphism enumeration over small finite fields.
//!
//! Backtracking with forward checking: whenever a triple has two assigned
//! members the third is forced, so a branch on one unassigned element
//! usually floods the rest of the network. The search is partitionable by
//! the value of the first unassigned element; `enumerate_branch` exposes
//! one partition and the full enumeration is their union.

use super::{Ambient, Network, Value};
use crate::error::{Error, Result};
use crate::field::SmallField;

/// All total maps on the network elements passing `is_pseudo_morphism`.
pub fn enumerate_pseudo_morphisms(net: &Network) -> Result<Vec<Vec<u16>>> {
    let field = finite_field(net)?;
    let mut out = Vec::new();
    let base = initial_assignment(net, field)?;
    let Some(base) = base else { return Ok(out) };
    match first_unassigned(&base) {
        None => {
            if check_complete(net, field, &base) {
                out.push(base.into_iter().map(Option::unwrap).collect());
            }
        }
        Some(_) => {
            for v in 0..field.q() as u16 {
                out.extend(branch_from(net, field, base.clone(), v)?);
            }
        }
    }
    Ok(out)
}

/// The sub-enumeration where the first unassigned element takes `value`;
/// the full enumeration is the union of the branches over all values.
pub fn enumerate_branch(net: &Network, value: u16) -> Result<Vec<Vec<u16>>> {
    let field = finite_field(net)?;
    let Some(base) = initial_assignment(net, field)? else {
        return Ok(Vec::new());
    };
    match first_unassigned(&base) {
        None => {
            // nothing to branch on: the only candidate belongs to branch 0
            if value == 0 && check_complete(net, field, &base) {
                Ok(vec![base.into_iter().map(Option::unwrap).collect()])
            } else {
                Ok(Vec::new())
            }
        }
        Some(_) => branch_from(net, field, base, value),
    }
}

fn branch_from(
    net: &Network,
    field: &SmallField,
    mut assignment: Vec<Option<u16>>,
    value: u16,
) -> Result<Vec<Vec<u16>>> {
    let slot = first_unassigned(&assignment).expect("caller checked");
    assignment[slot] = Some(value);
    let mut out = Vec::new();
    if propagate(net, field, &mut assignment) {
        search(net, field, assignment, &mut out);
    }
    Ok(out)
}

fn search(net: &Network, field: &SmallField, assignment: Vec<Option<u16>>, out: &mut Vec<Vec<u16>>) {
    match first_unassigned(&assignment) {
        None => {
            if check_complete(net, field, &assignment) {
                out.push(assignment.into_iter().map(Option::unwrap).collect());
            }
        }
        Some(slot) => {
            for v in 0..field.q() as u16 {
                let mut next = assignment.clone();
                next[slot] = Some(v);
                if propagate(net, field, &mut next) {
                    search(net, field, next, out);
                }
            }
        }
    }
}

fn finite_field(net: &Network) -> Result<&SmallField> {
    match net.ambient() {
        Ambient::Finite(f) => Ok(f),
        other => Err(Error::AmbientMismatch { expected: "finite field", got: other.kind() }),
    }
}

fn element_value(net: &Network, i: usize) -> u16 {
    match net.element(i).value {
        Value::Fq(v) => v,
        _ => unreachable!("finite ambient"),
    }
}

fn initial_assignment(net: &Network, field: &SmallField) -> Result<Option<Vec<Option<u16>>>> {
    let mut assignment: Vec<Option<u16>> = vec![None; net.len()];
    for i in 0..net.len() {
        if net.element(i).is_constant() {
            assignment[i] = Some(element_value(net, i));
        }
    }
    Ok(if propagate(net, field, &mut assignment) { Some(assignment) } else { None })
}

fn first_unassigned(assignment: &[Option<u16>]) -> Option<usize> {
    assignment.iter().position(Option::is_none)
}

/// Forward checking: close the assignment under forced triple deductions.
/// Returns false when a contradiction is found.
fn propagate(net: &Network, field: &SmallField, assignment: &mut [Option<u16>]) -> bool {
    loop {
        let mut changed = false;
        for &(a, b, c) in net.add_triples() {
            match (assignment[a], assignment[b], assignment[c]) {
                (Some(x), Some(y), known) => {
                    let sum = field.add(x, y);
                    match known {
                        Some(z) if z != sum => return false,
                        Some(_) => {}
                        None => {
                            assignment[c] = Some(sum);
                            changed = true;
                        }
                    }
                }
                (Some(x), None, Some(z)) => {
                    assignment[b] = Some(field.sub(z, x));
                    changed = true;
                }
                (None, Some(y), Some(z)) => {
                    assignment[a] = Some(field.sub(z, y));
                    changed = true;
                }
                _ => {}
            }
        }
        for &(a, b, c) in net.mul_triples() {
            match (assignment[a], assignment[b], assignment[c]) {
                (Some(x), Some(y), known) => {
                    let prod = field.mul(x, y);
                    match known {
                        Some(z) if z != prod => return false,
                        Some(_) => {}
                        None => {
                            assignment[c] = Some(prod);
                            changed = true;
                        }
                    }
                }
                (Some(x), None, Some(z)) if x != 0 => {
                    assignment[b] = Some(field.mul(z, field.inv(x)));
                    changed = true;
                }
                (None, Some(y), Some(z)) if y != 0 => {
                    assignment[a] = Some(field.mul(z, field.inv(y)));
                    changed = true;
                }
                (Some(0), None, Some(z)) | (None, Some(0), Some(z))
                    if z != 0 => {
                        return false; // 0·anything cannot be nonzero
                    }
                _ => {}
            }
        }
        if !changed {
            return true;
        }
    }
}

fn check_complete(net: &Network, _field: &SmallField, assignment: &[Option<u16>]) -> bool {
    let phi: Vec<Value> = assignment.iter().map(|v| Value::Fq(v.unwrap())).collect();
    net.is_pseudo_morphism(&phi).unwrap_or(false)
}

/// The set of elements of F_q fixed by every pseudo-morphism on the
/// whole-field network. Restriction closure makes the full field the
/// strongest witness set, so this is the characterizable subset of F_q.
pub fn characterizable_subfield(q: u64) -> Result<Vec<u16>> {
    let field = SmallField::new(q)?;
    let elements: Vec<_> = field.elements().map(|v| super::fq_element(&field, v)).collect();
    let net = build_full_network(field, elements)?;
    let morphisms = enumerate_pseudo_morphisms(&net)?;
    let mut fixed = Vec::new();
    for x in 0..q as u16 {
        if morphisms.iter().all(|phi| phi[x as usize] == x) {
            fixed.push(x);
        }
    }
    Ok(fixed)
}

fn build_full_network(
    field: SmallField,
    elements: Vec<super::Element>,
) -> Result<Network> {
    super::build_network(Ambient::Finite(field), elements)
}
