//! The deterministic walk behind the flip-sequence register.
//!
//! A sequence `s ∈ {1..K}^r` drives `r` steps from a center assignment. At
//! each step the first clause (in index order) left unsatisfied is picked
//! and its literal number `((s_i - 1) mod width) + 1` is flipped. Once the
//! current assignment satisfies the formula the remaining steps do nothing.
//! Sequences are ranked with `s_1` as the most significant base-K digit.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{Assignment, Formula};

/// Upper limit on `K^r` for exhaustive enumeration and simulation.
pub const MAX_SEQUENCES: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlipSequence {
    choices: Vec<u8>,
}

impl FlipSequence {
    pub fn new(choices: Vec<u8>, alphabet: u8) -> Result<Self> {
        if let Some(&bad) = choices.iter().find(|&&c| c == 0 || c > alphabet) {
            return Err(Error::invalid(format!(
                "flip choice {bad} outside 1..={alphabet}"
            )));
        }
        Ok(FlipSequence { choices })
    }

    /// The sequence of rank `index` among `{1..alphabet}^len`.
    pub fn from_index(mut index: u64, len: usize, alphabet: u8) -> Self {
        let base = alphabet as u64;
        let mut choices = vec![1u8; len];
        for slot in choices.iter_mut().rev() {
            *slot = 1 + (index % base) as u8;
            index /= base;
        }
        FlipSequence { choices }
    }

    pub fn index(&self, alphabet: u8) -> u64 {
        self.choices
            .iter()
            .fold(0, |acc, &c| acc * alphabet as u64 + (c - 1) as u64)
    }

    pub fn choices(&self) -> &[u8] {
        &self.choices
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlipOutcome {
    /// Variables on which `candidate` differs from the center.
    pub flipped: BTreeSet<usize>,
    pub candidate: Assignment,
    pub value: bool,
}

pub fn walk(f: &Formula, center: &Assignment, s: &FlipSequence) -> Result<FlipOutcome> {
    check_center(f, center)?;
    let mut current = center.clone();
    for &choice in s.choices() {
        if !step(f, &mut current, choice) {
            break;
        }
    }
    let flipped = (1..=f.num_vars())
        .filter(|&v| current.get(v) != center.get(v))
        .collect();
    let value = f.satisfied_by(&current);
    Ok(FlipOutcome {
        flipped,
        candidate: current,
        value,
    })
}

/// One walk step. Returns false when the assignment already satisfies `f`.
fn step(f: &Formula, current: &mut Assignment, choice: u8) -> bool {
    let Some(ci) = f.first_unsatisfied(current) else {
        return false;
    };
    let lits = f.clauses()[ci].lits();
    let lit = lits[(choice as usize - 1) % lits.len()];
    current.flip(lit.var());
    true
}

/// Number of sequences of length `radius` over `alphabet`, or an error past
/// [`MAX_SEQUENCES`].
pub fn sequence_count(alphabet: u8, radius: usize) -> Result<u64> {
    let size = (alphabet as u128).saturating_pow(radius as u32);
    if size > MAX_SEQUENCES as u128 {
        return Err(Error::ScaleExceeded {
            size,
            limit: MAX_SEQUENCES as u128,
        });
    }
    Ok(size as u64)
}

/// Marks, for every sequence rank, whether its walk ends on a model.
///
/// Walks sharing a prefix share their first steps, so this descends the
/// choice tree once instead of replaying each sequence; a satisfied node
/// marks its whole subtree.
pub fn marked_mask(f: &Formula, center: &Assignment, radius: usize, alphabet: u8) -> Result<Vec<bool>> {
    check_center(f, center)?;
    if alphabet == 0 {
        return Err(Error::invalid("alphabet must be positive"));
    }
    let total = sequence_count(alphabet, radius)? as usize;
    let mut mask = vec![false; total];
    let mut current = center.clone();
    descend(f, &mut current, radius, alphabet, 0, total, &mut mask);
    Ok(mask)
}

fn descend(
    f: &Formula,
    current: &mut Assignment,
    remaining: usize,
    alphabet: u8,
    start: usize,
    span: usize,
    mask: &mut [bool],
) {
    let Some(ci) = f.first_unsatisfied(current) else {
        mask[start..start + span].fill(true);
        return;
    };
    if remaining == 0 {
        return;
    }
    let child_span = span / alphabet as usize;
    let lits = f.clauses()[ci].lits();
    for choice in 0..alphabet as usize {
        let var = lits[choice % lits.len()].var();
        current.flip(var);
        descend(
            f,
            current,
            remaining - 1,
            alphabet,
            start + choice * child_span,
            child_span,
            mask,
        );
        current.flip(var);
    }
}

/// Fraction and count of sequences whose walk ends on a model.
pub fn marked_fraction(
    f: &Formula,
    center: &Assignment,
    radius: usize,
    alphabet: u8,
) -> Result<(f64, usize)> {
    let mask = marked_mask(f, center, radius, alphabet)?;
    let marked = mask.iter().filter(|&&m| m).count();
    Ok((marked as f64 / mask.len() as f64, marked))
}

fn check_center(f: &Formula, center: &Assignment) -> Result<()> {
    if center.len() != f.num_vars() {
        return Err(Error::LengthMismatch {
            expected: f.num_vars(),
            got: center.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Clause;

    fn formula(n: usize, clauses: &[&[i64]]) -> Formula {
        Formula::new(n, clauses.iter().map(|c| Clause::from_dimacs(c)).collect()).unwrap()
    }

    fn seq(choices: &[u8]) -> FlipSequence {
        FlipSequence::new(choices.to_vec(), 9).unwrap()
    }

    #[test]
    fn single_clause_second_literal() {
        let f = formula(3, &[&[1, 2, 3]]);
        let out = walk(&f, &Assignment::zeros(3), &seq(&[2])).unwrap();
        assert_eq!(out.flipped, BTreeSet::from([2]));
        assert_eq!(out.candidate.to_string(), "010");
        assert!(out.value);
    }

    #[test]
    fn satisfied_center_is_a_fixed_point() {
        let f = formula(3, &[&[1, 2, 3]]);
        let center = Assignment::ones(3);
        let out = walk(&f, &center, &seq(&[3, 1, 2])).unwrap();
        assert!(out.flipped.is_empty());
        assert_eq!(out.candidate, center);
        assert!(out.value);
    }

    #[test]
    fn reflip_cancels() {
        let f = formula(3, &[&[1, 2, 3], &[-2]]);
        let out = walk(&f, &Assignment::zeros(3), &seq(&[2, 1])).unwrap();
        assert!(out.flipped.is_empty());
        assert_eq!(out.candidate.to_string(), "000");
        assert!(!out.value);
    }

    #[test]
    fn choices_wrap_on_narrow_clauses() {
        let f = formula(2, &[&[1, 2]]);
        let a = walk(&f, &Assignment::zeros(2), &seq(&[3])).unwrap();
        let b = walk(&f, &Assignment::zeros(2), &seq(&[1])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn marked_fraction_examples() {
        let f = formula(3, &[&[1, 2, 3]]);
        assert_eq!(
            marked_fraction(&f, &Assignment::zeros(3), 1, 3).unwrap(),
            (1.0, 3)
        );
        assert_eq!(
            marked_fraction(&f, &Assignment::ones(3), 2, 3).unwrap(),
            (1.0, 9)
        );
        let unsat = formula(1, &[&[1], &[-1]]);
        for r in 0..4 {
            assert_eq!(marked_fraction(&unsat, &Assignment::zeros(1), r, 3).unwrap().1, 0);
        }
    }

    #[test]
    fn mask_agrees_with_individual_walks() {
        let f = formula(5, &[&[1, -2, 3], &[-1, 4, 5], &[2, -3, -5], &[-4, 1, 2]]);
        let center = Assignment::from_bit_str("01001").unwrap();
        for radius in 0..4 {
            let mask = marked_mask(&f, &center, radius, 3).unwrap();
            for (i, &m) in mask.iter().enumerate() {
                let s = FlipSequence::from_index(i as u64, radius, 3);
                assert_eq!(walk(&f, &center, &s).unwrap().value, m);
                assert_eq!(s.index(3), i as u64);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(FlipSequence::new(vec![0], 3).is_err());
        assert!(FlipSequence::new(vec![4], 3).is_err());
        let f = formula(2, &[&[1, 2]]);
        assert!(walk(&f, &Assignment::zeros(3), &seq(&[1])).is_err());
        assert!(matches!(
            marked_fraction(&f, &Assignment::zeros(2), 15, 3),
            Err(Error::ScaleExceeded { .. })
        ));
    }
}
