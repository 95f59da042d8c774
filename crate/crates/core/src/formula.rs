//! CNF formulas: DIMACS input/output, evaluation, restriction by partial
//! assignments, the occurrence metric and prefix decomposition.
//!
//! Variables are 1-based everywhere and are never renumbered, so a restricted
//! formula lives in the same index space as its parent and assignments can be
//! passed between the two unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lit {
    var: usize,
    negated: bool,
}

impl Lit {
    pub fn new(var: usize, negated: bool) -> Self {
        Lit { var, negated }
    }

    pub fn pos(var: usize) -> Self {
        Lit::new(var, false)
    }

    pub fn neg(var: usize) -> Self {
        Lit::new(var, true)
    }

    /// Builds a literal from a signed DIMACS integer. Zero has no literal.
    pub fn from_dimacs(value: i64) -> Option<Self> {
        if value == 0 {
            return None;
        }
        Some(Lit::new(value.unsigned_abs() as usize, value < 0))
    }

    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.var as i64)
        } else {
            self.var as i64
        }
    }

    pub fn var(self) -> usize {
        self.var
    }

    pub fn is_negated(self) -> bool {
        self.negated
    }

    /// The value the variable must take for this literal to be true.
    pub fn satisfying_value(self) -> bool {
        !self.negated
    }

    pub fn is_satisfied_by(self, value: bool) -> bool {
        value != self.negated
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬x{}", self.var)
        } else {
            write!(f, "x{}", self.var)
        }
    }
}

/// A disjunction of literals. Literal order is fixed at construction and is
/// significant: flip sequences and codeword modifications index into it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    lits: Vec<Lit>,
}

impl Clause {
    /// Creates a clause, dropping repeated literals but keeping the first
    /// occurrence's position.
    pub fn new(lits: impl IntoIterator<Item = Lit>) -> Self {
        let mut seen = BTreeSet::new();
        let lits = lits.into_iter().filter(|l| seen.insert(*l)).collect();
        Clause { lits }
    }

    /// Shorthand for tests and examples: `Clause::from_dimacs(&[1, -2, 4])`.
    pub fn from_dimacs(values: &[i64]) -> Self {
        Clause::new(values.iter().filter_map(|&v| Lit::from_dimacs(v)))
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn width(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.lits.iter().map(|l| l.var)
    }

    pub fn contains_var(&self, var: usize) -> bool {
        self.lits.iter().any(|l| l.var == var)
    }

    pub fn is_tautology(&self) -> bool {
        self.lits
            .iter()
            .any(|l| self.lits.contains(&Lit::new(l.var, !l.negated)))
    }

    pub(crate) fn satisfied_by(&self, bits: &[bool]) -> bool {
        self.lits.iter().any(|l| l.is_satisfied_by(bits[l.var - 1]))
    }

    fn shares_var(&self, other: &Clause) -> bool {
        self.vars().any(|v| other.contains_var(v))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.lits.iter().enumerate() {
            if i > 0 {
                write!(f, " ∨ ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// A total assignment; bit `i` holds the value of variable `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Assignment::new(vec![false; n])
    }

    pub fn ones(n: usize) -> Self {
        Assignment::new(vec![true; n])
    }

    /// Parses a string of `0`/`1` characters, variable 1 first.
    pub fn from_bit_str(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Assignment::new)
    }

    /// Bits of `index` over `n` variables, variable 1 being the most
    /// significant bit. Enumerating `0..2^n` gives lexicographic order.
    pub fn from_index(index: u64, n: usize) -> Self {
        Assignment::new((0..n).map(|i| (index >> (n - 1 - i)) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Value of a 1-based variable.
    pub fn get(&self, var: usize) -> bool {
        self.bits[var - 1]
    }

    pub fn set(&mut self, var: usize, value: bool) {
        self.bits[var - 1] = value;
    }

    pub fn flip(&mut self, var: usize) {
        self.bits[var - 1] = !self.bits[var - 1];
    }

    /// Overwrites the bound variables of `partial`.
    pub fn overlay(&mut self, partial: &PartialAssignment) {
        for (&var, &value) in partial.iter() {
            self.set(var, value);
        }
    }

    pub fn distance(&self, other: &Assignment) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Signed DIMACS literals, one per variable.
    pub fn to_dimacs_lits(&self) -> Vec<i64> {
        self.bits
            .iter()
            .enumerate()
            .map(|(i, &b)| if b { i as i64 + 1 } else { -(i as i64 + 1) })
            .collect()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialAssignment {
    bindings: BTreeMap<usize, bool>,
}

impl PartialAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, var: usize, value: bool) {
        self.bindings.insert(var, value);
    }

    pub fn with(mut self, var: usize, value: bool) -> Self {
        self.bind(var, value);
        self
    }

    pub fn get(&self, var: usize) -> Option<bool> {
        self.bindings.get(&var).copied()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &bool)> {
        self.bindings.iter()
    }

    /// Union of two bindings; `other` wins on overlap.
    pub fn merged(&self, other: &PartialAssignment) -> PartialAssignment {
        let mut out = self.clone();
        out.bindings
            .extend(other.bindings.iter().map(|(&v, &b)| (v, b)));
        out
    }
}

impl FromIterator<(usize, bool)> for PartialAssignment {
    fn from_iter<I: IntoIterator<Item = (usize, bool)>>(iter: I) -> Self {
        PartialAssignment {
            bindings: iter.into_iter().collect(),
        }
    }
}

/// Values of the decomposition variables, in `top_k_vars` order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Prefix {
    bits: Vec<bool>,
}

impl Prefix {
    pub fn new(bits: Vec<bool>) -> Self {
        Prefix { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bind(&self, vars: &[usize]) -> PartialAssignment {
        vars.iter().copied().zip(self.bits.iter().copied()).collect()
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits.is_empty() {
            return f.write_str("ε");
        }
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Result of restricting a formula: either the simplified formula or a
/// conflict, when some clause lost all of its literals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Restriction {
    Formula(Formula),
    Conflict,
}

impl Restriction {
    pub fn formula(&self) -> Option<&Formula> {
        match self {
            Restriction::Formula(f) => Some(f),
            Restriction::Conflict => None,
        }
    }

    pub fn into_formula(self) -> Option<Formula> {
        match self {
            Restriction::Formula(f) => Some(f),
            Restriction::Conflict => None,
        }
    }

    pub fn is_conflict(&self) -> bool {
        matches!(self, Restriction::Conflict)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Formula {
    num_vars: usize,
    clauses: Vec<Clause>,
    max_width: usize,
}

impl Formula {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        for clause in &clauses {
            if let Some(var) = clause.vars().find(|&v| v == 0 || v > num_vars) {
                return Err(Error::VarOutOfRange { var, num_vars });
            }
        }
        Ok(Self::from_parts(num_vars, clauses))
    }

    fn from_parts(num_vars: usize, clauses: Vec<Clause>) -> Self {
        let max_width = clauses.iter().map(Clause::width).max().unwrap_or(0);
        Formula {
            num_vars,
            clauses,
            max_width,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn max_width(&self) -> usize {
        self.max_width
    }

    /// Parses DIMACS CNF. Comment lines start with `c`; a `%` line (SATLIB
    /// style) ends the clause section. A clause-count mismatch with the
    /// header is logged, not rejected.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current: Vec<Lit> = Vec::new();
        let mut clause_start = 0;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('%') {
                break;
            }
            if line.starts_with('p') {
                if header.is_some() {
                    return Err(Error::parse(line_no, "duplicate problem line"));
                }
                header = Some(parse_header(line, line_no)?);
                continue;
            }
            let Some((num_vars, _)) = header else {
                return Err(Error::parse(line_no, "clause before the 'p cnf' header"));
            };
            for token in line.split_whitespace() {
                let value: i64 = token
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("bad literal '{token}'")))?;
                if value == 0 {
                    if current.is_empty() {
                        return Err(Error::parse(line_no, "empty clause"));
                    }
                    clauses.push(Clause::new(current.drain(..)));
                    continue;
                }
                if current.is_empty() {
                    clause_start = line_no;
                }
                let lit = Lit::from_dimacs(value).expect("nonzero");
                if lit.var > num_vars {
                    return Err(Error::parse(
                        line_no,
                        format!("variable {} exceeds declared count {num_vars}", lit.var),
                    ));
                }
                current.push(lit);
            }
        }

        let Some((num_vars, declared)) = header else {
            return Err(Error::parse(0, "missing 'p cnf' header"));
        };
        if !current.is_empty() {
            return Err(Error::parse(clause_start, "clause not terminated by 0"));
        }
        if declared != clauses.len() {
            log::warn!(
                "header declares {declared} clauses but {} were read",
                clauses.len()
            );
        }
        Ok(Self::from_parts(num_vars, clauses))
    }

    /// Canonical DIMACS text: header, then one clause per line.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause.lits() {
                out.push_str(&lit.to_dimacs().to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }

    fn check_len(&self, a: &Assignment) -> Result<()> {
        if a.len() != self.num_vars {
            return Err(Error::LengthMismatch {
                expected: self.num_vars,
                got: a.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, a: &Assignment) -> Result<bool> {
        self.check_len(a)?;
        Ok(self.satisfied_by(a))
    }

    pub fn unsat_count(&self, a: &Assignment) -> Result<usize> {
        self.check_len(a)?;
        Ok(self.count_unsat(a))
    }

    pub(crate) fn satisfied_by(&self, a: &Assignment) -> bool {
        self.clauses.iter().all(|c| c.satisfied_by(a.bits()))
    }

    pub(crate) fn count_unsat(&self, a: &Assignment) -> usize {
        self.clauses
            .iter()
            .filter(|c| !c.satisfied_by(a.bits()))
            .count()
    }

    /// Index of the first clause `a` leaves unsatisfied.
    pub fn first_unsatisfied(&self, a: &Assignment) -> Option<usize> {
        self.clauses.iter().position(|c| !c.satisfied_by(a.bits()))
    }

    /// Simplifies under `p`: clauses with a true literal disappear, false
    /// literals are deleted, and an emptied clause yields a conflict.
    pub fn restrict(&self, p: &PartialAssignment) -> Restriction {
        let mut clauses = Vec::with_capacity(self.clauses.len());
        for clause in &self.clauses {
            let mut satisfied = false;
            let mut kept = Vec::with_capacity(clause.width());
            for &lit in clause.lits() {
                match p.get(lit.var) {
                    Some(value) if lit.is_satisfied_by(value) => {
                        satisfied = true;
                        break;
                    }
                    Some(_) => {}
                    None => kept.push(lit),
                }
            }
            if satisfied {
                continue;
            }
            if kept.is_empty() {
                return Restriction::Conflict;
            }
            clauses.push(Clause { lits: kept });
        }
        Restriction::Formula(Self::from_parts(self.num_vars, clauses))
    }

    /// Number of clauses in which `var` occurs, in either polarity.
    pub fn m_metric(&self, var: usize) -> Result<usize> {
        if var == 0 || var > self.num_vars {
            return Err(Error::VarOutOfRange {
                var,
                num_vars: self.num_vars,
            });
        }
        Ok(self.occurrences()[var - 1])
    }

    fn occurrences(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_vars];
        for lit in self.clauses.iter().flat_map(|c| c.lits()) {
            counts[lit.var - 1] += 1;
        }
        counts
    }

    /// The `k` most frequent variables, most frequent first; equal counts go
    /// to the lower index.
    pub fn top_k_vars(&self, k: usize) -> Result<Vec<usize>> {
        if k > self.num_vars {
            return Err(Error::TooManyVars {
                k,
                num_vars: self.num_vars,
            });
        }
        let counts = self.occurrences();
        let mut vars: Vec<usize> = (1..=self.num_vars).collect();
        vars.sort_by(|&a, &b| counts[b - 1].cmp(&counts[a - 1]).then(a.cmp(&b)));
        vars.truncate(k);
        Ok(vars)
    }

    /// Splits the formula into `2^k` restrictions, one per assignment of the
    /// top-`k` variables. Prefixes are enumerated in lexicographic order
    /// with the first decomposition variable most significant.
    pub fn decompose(&self, k: usize) -> Result<Vec<(Prefix, Restriction)>> {
        let vars = self.top_k_vars(k)?;
        if k >= 64 {
            return Err(Error::invalid("decomposition width must be below 64"));
        }
        Ok((0..1u64 << k)
            .map(|i| {
                let prefix = Prefix::new(Assignment::from_index(i, k).bits);
                let restricted = self.restrict(&prefix.bind(&vars));
                (prefix, restricted)
            })
            .collect())
    }

    /// Greedy maximal set of pairwise variable-disjoint clauses unsatisfied
    /// by `a`, scanned in clause order. Returns clause indices.
    pub fn max_disjoint_unsat(&self, a: &Assignment) -> Result<Vec<usize>> {
        self.check_len(a)?;
        let mut chosen: Vec<usize> = Vec::new();
        for (i, clause) in self.clauses.iter().enumerate() {
            if clause.satisfied_by(a.bits()) {
                continue;
            }
            if chosen.iter().all(|&j| !self.clauses[j].shares_var(clause)) {
                chosen.push(i);
            }
        }
        Ok(chosen)
    }

    /// Variables occurring in the given clauses, ascending.
    pub fn vars_of(&self, clause_indices: &[usize]) -> Vec<usize> {
        clause_indices
            .iter()
            .flat_map(|&i| self.clauses[i].vars())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return f.write_str("⊤");
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∧ ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, usize)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    match fields.as_slice() {
        ["p", "cnf", n, m] => {
            let n = n
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad variable count '{n}'")))?;
            let m = m
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad clause count '{m}'")))?;
            Ok((n, m))
        }
        _ => Err(Error::parse(line_no, "expected 'p cnf <vars> <clauses>'")),
    }
}
