//! Deterministic finite automata with output over the digit alphabet
//! {0..p-1}.
//!
//! `eval_word` and `nth_term` read digits most-significant-first. Kernel
//! computations want the least-significant-first view; the two are related
//! by `reverse`, which swaps the reading convention while preserving the
//! generated sequence. Both directions are exposed so the conversion is
//! always explicit.

use crate::error::{Error, Result};
use crate::series::{Prec, Series};
use std::collections::HashMap;
use std::fmt;

/// Budget for the reversal construction, whose state space is a set of
/// output assignments and can blow up on adversarial inputs.
pub const REVERSE_BOUND: usize = 4096;

/// Budget for kernel closure exploration.
pub const KERNEL_BOUND: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfao {
    p: u64,
    names: Vec<String>,
    delta: Vec<Vec<usize>>, // delta[state][digit]
    tau: Vec<u64>,
    q0: usize,
}

impl Dfao {
    pub fn new(
        p: u64,
        names: Vec<String>,
        delta: Vec<Vec<usize>>,
        tau: Vec<u64>,
        q0: usize,
    ) -> Result<Self> {
        let n = names.len();
        let check = |ok: bool, detail: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Precondition(format!("automaton: {detail}")))
            }
        };
        check(n > 0, "at least one state required")?;
        check(delta.len() == n && tau.len() == n, "delta/tau must cover every state")?;
        check(q0 < n, "initial state out of range")?;
        for row in &delta {
            check(row.len() == p as usize, "delta must be total over all digits")?;
            check(row.iter().all(|&s| s < n), "transition target out of range")?;
        }
        check(tau.iter().all(|&o| o < p), "outputs must be digits")?;
        Ok(Dfao { p, names, delta, tau, q0 })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn q0(&self) -> usize {
        self.q0
    }

    pub fn output(&self, state: usize) -> u64 {
        self.tau[state]
    }

    pub fn step(&self, state: usize, digit: u64) -> usize {
        self.delta[state][digit as usize]
    }

    // ---- Evaluation ----

    /// Run the automaton over a digit word, first digit read from the
    /// initial state. The empty word yields the initial state's output.
    pub fn eval_word(&self, word: &[u64]) -> Result<u64> {
        let mut state = self.q0;
        for &d in word {
            if d >= self.p {
                return Err(Error::DigitOutOfRange { digit: d, p: self.p });
            }
            state = self.delta[state][d as usize];
        }
        Ok(self.tau[state])
    }

    /// The n-th sequence term: evaluate on the canonical base-p expansion
    /// of n (most significant digit first, no leading zeros, 0 ↦ ε).
    pub fn nth_term(&self, n: u64) -> u64 {
        self.eval_word(&digits_msd(self.p, n)).expect("canonical digits are in range")
    }

    /// The n-th term when this automaton reads digits least-significant
    /// digit first.
    pub fn nth_term_lsd(&self, n: u64) -> u64 {
        let mut digits = digits_msd(self.p, n);
        digits.reverse();
        self.eval_word(&digits).expect("canonical digits are in range")
    }

    /// The series Σ u_n X^n of the generated sequence, known below `n`.
    pub fn series_prefix(&self, n: i64) -> Series {
        let coeffs: Vec<u64> = (0..n.max(0)).map(|k| self.nth_term(k as u64)).collect();
        Series::new(self.p, 0, coeffs, Prec::UpTo(n))
    }

    // ---- Minimization ----

    fn reachable(&self) -> Dfao {
        let mut order = vec![self.q0];
        let mut seen = vec![false; self.num_states()];
        seen[self.q0] = true;
        let mut i = 0;
        while i < order.len() {
            let s = order[i];
            for d in 0..self.p as usize {
                let t = self.delta[s][d];
                if !seen[t] {
                    seen[t] = true;
                    order.push(t);
                }
            }
            i += 1;
        }
        let mut index = vec![usize::MAX; self.num_states()];
        for (new, &old) in order.iter().enumerate() {
            index[old] = new;
        }
        Dfao {
            p: self.p,
            names: order.iter().map(|&s| self.names[s].clone()).collect(),
            delta: order
                .iter()
                .map(|&s| self.delta[s].iter().map(|&t| index[t]).collect())
                .collect(),
            tau: order.iter().map(|&s| self.tau[s]).collect(),
            q0: 0,
        }
    }

    /// Observational-equivalence minimization (Moore partition refinement),
    /// restricted to reachable states and renumbered by breadth-first
    /// discovery order from the initial state.
    pub fn minimize(&self) -> Dfao {
        let m = self.reachable();
        let n = m.num_states();
        // initial partition by output, refined until stable
        let mut class: Vec<usize> = {
            let mut ids = HashMap::new();
            m.tau
                .iter()
                .map(|&o| {
                    let fresh = ids.len();
                    *ids.entry(o).or_insert(fresh)
                })
                .collect()
        };
        loop {
            let mut next_id: HashMap<Vec<usize>, usize> = HashMap::new();
            let mut next = vec![0usize; n];
            for s in 0..n {
                let sig: Vec<usize> = std::iter::once(class[s])
                    .chain((0..m.p as usize).map(|d| class[m.delta[s][d]]))
                    .collect();
                let fresh = next_id.len();
                next[s] = *next_id.entry(sig).or_insert(fresh);
            }
            let old_count = class.iter().collect::<std::collections::BTreeSet<_>>().len();
            let refined = next_id.len() != old_count;
            class = next;
            if !refined {
                break;
            }
        }
        // canonical order: BFS over classes from the initial state's class
        let rep_of = |c: usize| (0..n).find(|&s| class[s] == c).unwrap();
        let mut order = vec![class[m.q0]];
        let mut seen: HashMap<usize, usize> = HashMap::new();
        seen.insert(class[m.q0], 0);
        let mut i = 0;
        while i < order.len() {
            let rep = rep_of(order[i]);
            for d in 0..m.p as usize {
                let c = class[m.delta[rep][d]];
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(c) {
                    e.insert(order.len());
                    order.push(c);
                }
            }
            i += 1;
        }
        let names: Vec<String> = order.iter().map(|&c| m.names[rep_of(c)].clone()).collect();
        let delta: Vec<Vec<usize>> = order
            .iter()
            .map(|&c| {
                let rep = rep_of(c);
                (0..m.p as usize).map(|d| seen[&class[m.delta[rep][d]]]).collect()
            })
            .collect();
        let tau: Vec<u64> = order.iter().map(|&c| m.tau[rep_of(c)]).collect();
        Dfao { p: m.p, names, delta, tau, q0: 0 }
    }

    /// Leading zeros fix the initial behavior iff reading 0 from the
    /// initial state is observationally the identity.
    pub fn is_leading_zero_invariant(&self) -> bool {
        let m = self.minimize();
        m.delta[m.q0][0] == m.q0
    }

    // ---- Digit-order reversal ----

    /// The same sequence read in the opposite digit order.
    ///
    /// States of the result are the maps q ↦ τ(δ*(q, w)) over read
    /// suffixes w; the transition on digit d precomposes with δ(·, d) and
    /// the output evaluates the map at the original initial state. The
    /// construction is symmetric, so it converts most-significant-first
    /// automata to least-significant-first ones and back.
    pub fn reverse(&self) -> Result<Dfao> {
        let n = self.num_states();
        let init: Vec<u64> = self.tau.clone();
        let mut states: Vec<Vec<u64>> = vec![init.clone()];
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        index.insert(init, 0);
        let mut delta: Vec<Vec<usize>> = Vec::new();
        let mut i = 0;
        while i < states.len() {
            let mut row = Vec::with_capacity(self.p as usize);
            for d in 0..self.p as usize {
                let f = &states[i];
                let next: Vec<u64> = (0..n).map(|q| f[self.delta[q][d]]).collect();
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        let id = states.len();
                        if id >= REVERSE_BOUND {
                            return Err(Error::ReverseBudget { bound: REVERSE_BOUND });
                        }
                        index.insert(next.clone(), id);
                        states.push(next);
                        id
                    }
                };
                row.push(id);
            }
            delta.push(row);
            i += 1;
        }
        let tau: Vec<u64> = states.iter().map(|f| f[self.q0]).collect();
        let names: Vec<String> = (0..states.len()).map(|k| format!("r{k}")).collect();
        Ok(Dfao { p: self.p, names, delta, tau, q0: 0 }.minimize())
    }
}

/// Canonical base-p digits of n, most significant first; 0 ↦ empty word.
pub fn digits_msd(p: u64, n: u64) -> Vec<u64> {
    if n == 0 {
        return Vec::new();
    }
    let mut digits = Vec::new();
    let mut n = n;
    while n > 0 {
        digits.push(n % p);
        n /= p;
    }
    digits.reverse();
    digits
}

// ---- Kernels ----

/// A finite kernel: sequence labels with the closure table of the section
/// maps and the value of each element at 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelTable {
    p: u64,
    labels: Vec<String>,
    closure: Vec<Vec<usize>>, // closure[element][digit]
    outputs: Vec<u64>,
    lz_invariant: bool,
}

impl KernelTable {
    pub fn new(
        p: u64,
        labels: Vec<String>,
        closure: Vec<Vec<usize>>,
        outputs: Vec<u64>,
    ) -> Result<Self> {
        let k = labels.len();
        if closure.len() != k || outputs.len() != k {
            return Err(Error::Precondition("kernel table: ragged data".to_string()));
        }
        for (e, row) in closure.iter().enumerate() {
            if row.len() != p as usize {
                return Err(Error::ClosureNotTotal {
                    label: labels[e].clone(),
                    digit: row.len() as u64,
                });
            }
            if let Some(&bad) = row.iter().find(|&&t| t >= k) {
                return Err(Error::Precondition(format!(
                    "kernel table: image {bad} out of range"
                )));
            }
        }
        if outputs.iter().any(|&o| o >= p) {
            return Err(Error::Precondition("kernel table: output out of range".to_string()));
        }
        // the value of g at 0 is the value of its digit-0 section at 0, so
        // no consistent kernel can move the output along digit 0
        for (e, row) in closure.iter().enumerate() {
            if outputs[row[0]] != outputs[e] {
                return Err(Error::Precondition(format!(
                    "kernel table: digit-0 image of {} changes the output",
                    labels[e]
                )));
            }
        }
        Ok(KernelTable { p, labels, closure, outputs, lz_invariant: true })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn image(&self, element: usize, digit: u64) -> usize {
        self.closure[element][digit as usize]
    }

    pub fn output(&self, element: usize) -> u64 {
        self.outputs[element]
    }

    pub fn lz_invariant(&self) -> bool {
        self.lz_invariant
    }

    /// Value of kernel element `element` at index n, by running the closure
    /// table over the digits of n least-significant-first.
    pub fn element_term(&self, element: usize, n: u64) -> u64 {
        let mut e = element;
        let mut n = n;
        while n > 0 {
            e = self.closure[e][(n % self.p) as usize];
            n /= self.p;
        }
        self.outputs[e]
    }

    /// The least-significant-digit-first automaton whose states are the
    /// kernel elements themselves.
    pub fn to_lsd_dfao(&self) -> Dfao {
        Dfao {
            p: self.p,
            names: self.labels.clone(),
            delta: self.closure.clone(),
            tau: self.outputs.clone(),
            q0: 0,
        }
    }
}

/// The kernel of the sequence generated by `m` (digits read
/// most-significant-first).
///
/// Each kernel element n ↦ u(p^k·n + r) is represented by the state map
/// q ↦ δ*(q, zero-padded k-digit expansion of r) of the minimized
/// automaton; elements are identified when their output profiles agree on
/// every state, which characterizes equality of the subsequences whenever
/// leading zeros fix the initial behavior (flagged otherwise).
pub fn kernel_from_automaton(m: &Dfao) -> Result<KernelTable> {
    let m = m.minimize();
    let lz = m.delta[m.q0][0] == m.q0;
    let n = m.num_states();
    let p = m.p;

    let identity: Vec<usize> = (0..n).collect();
    let profile = |sigma: &[usize]| -> Vec<u64> { sigma.iter().map(|&q| m.tau[q]).collect() };

    let mut sigmas: Vec<Vec<usize>> = vec![identity.clone()];
    let mut meta: Vec<(u32, u64)> = vec![(0, 0)]; // (k, r) of the subsequence
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    index.insert(profile(&identity), 0);
    let mut closure: Vec<Vec<usize>> = Vec::new();

    let mut i = 0;
    while i < sigmas.len() {
        let mut row = Vec::with_capacity(p as usize);
        for d in 0..p {
            // subsequence n ↦ g(pn + d) has map q ↦ σ(δ(q, d))
            let sigma = &sigmas[i];
            let next: Vec<usize> = (0..n).map(|q| sigma[m.delta[q][d as usize]]).collect();
            let key = profile(&next);
            let id = match index.get(&key) {
                Some(&id) => id,
                None => {
                    let id = sigmas.len();
                    if id >= KERNEL_BOUND {
                        return Err(Error::KernelBudget { bound: KERNEL_BOUND });
                    }
                    let (k, r) = meta[i];
                    index.insert(key, id);
                    sigmas.push(next);
                    meta.push((k + 1, d * p.pow(k) + r));
                    id
                }
            };
            row.push(id);
        }
        closure.push(row);
        i += 1;
    }

    let outputs: Vec<u64> = sigmas.iter().map(|sigma| m.tau[sigma[m.q0]]).collect();
    let labels: Vec<String> = meta
        .iter()
        .map(|&(k, r)| {
            if k == 0 {
                "u(n)".to_string()
            } else {
                format!("u({}n+{})", p.pow(k), r)
            }
        })
        .collect();
    Ok(KernelTable { p, labels, closure, outputs, lz_invariant: lz })
}

/// Build the automaton generating the sequence with the given kernel
/// structure: the closure table is the least-significant-first automaton,
/// which is then reversed into the user-facing most-significant-first one.
pub fn automaton_from_kernel(table: &KernelTable) -> Result<Dfao> {
    table.to_lsd_dfao().reverse()
}

// ---- Text format ----

impl fmt::Display for Dfao {
    /// Structured text format, parsed back bit-exactly by [`Dfao::parse`]:
    ///
    /// ```text
    /// p=2
    /// states=a,b
    /// q0=a
    /// delta a=a,b
    /// delta b=b,a
    /// tau a=0
    /// tau b=1
    /// ```
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p={}", self.p)?;
        writeln!(f, "states={}", self.names.join(","))?;
        writeln!(f, "q0={}", self.names[self.q0])?;
        for (s, row) in self.delta.iter().enumerate() {
            let targets: Vec<&str> = row.iter().map(|&t| self.names[t].as_str()).collect();
            writeln!(f, "delta {}={}", self.names[s], targets.join(","))?;
        }
        for (s, &o) in self.tau.iter().enumerate() {
            writeln!(f, "tau {}={}", self.names[s], o)?;
        }
        Ok(())
    }
}

impl Dfao {
    pub fn parse(input: &str) -> Result<Dfao> {
        let bad = |detail: String| Error::Parse { what: "automaton", detail };
        let mut p = None;
        let mut names: Vec<String> = Vec::new();
        let mut q0_name = None;
        let mut delta_lines: HashMap<String, Vec<String>> = HashMap::new();
        let mut tau_lines: HashMap<String, u64> = HashMap::new();
        for line in input.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{line}`")))?;
            match key.trim() {
                "p" => p = Some(value.parse::<u64>().map_err(|e| bad(e.to_string()))?),
                "states" => {
                    names = value.split(',').map(|s| s.trim().to_string()).collect();
                }
                "q0" => q0_name = Some(value.trim().to_string()),
                k if k.starts_with("delta ") => {
                    let state = k["delta ".len()..].trim().to_string();
                    let targets = value.split(',').map(|s| s.trim().to_string()).collect();
                    delta_lines.insert(state, targets);
                }
                k if k.starts_with("tau ") => {
                    let state = k["tau ".len()..].trim().to_string();
                    tau_lines.insert(state, value.parse().map_err(|_| bad("bad output".into()))?);
                }
                other => return Err(bad(format!("unknown field `{other}`"))),
            }
        }
        let p = p.ok_or_else(|| bad("missing p".into()))?;
        if names.is_empty() {
            return Err(bad("missing states".into()));
        }
        let index: HashMap<&str, usize> =
            names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        if index.len() != names.len() {
            return Err(bad("duplicate state names".into()));
        }
        let q0_name = q0_name.ok_or_else(|| bad("missing q0".into()))?;
        let q0 = *index
            .get(q0_name.as_str())
            .ok_or_else(|| bad(format!("unknown initial state `{q0_name}`")))?;
        let mut delta = Vec::with_capacity(names.len());
        let mut tau = Vec::with_capacity(names.len());
        for name in &names {
            let row = delta_lines
                .get(name)
                .ok_or_else(|| bad(format!("missing delta for `{name}`")))?;
            let mut targets = Vec::with_capacity(row.len());
            for t in row {
                targets.push(
                    *index
                        .get(t.as_str())
                        .ok_or_else(|| bad(format!("unknown state `{t}`")))?,
                );
            }
            delta.push(targets);
            tau.push(
                *tau_lines
                    .get(name)
                    .ok_or_else(|| bad(format!("missing tau for `{name}`")))?,
            );
        }
        Dfao::new(p, names, delta, tau, q0)
    }
}
