//! Exhaustive reference answers. Nothing in the solver path calls into this
//! module; it exists for tests, the acceptance suite and `--mode brute`.

use crate::error::{Error, Result};
use crate::formula::{Assignment, Formula};

pub const MAX_BRUTE_VARS: usize = 24;
pub const MAX_BALL_POINTS: u128 = 1 << 26;

/// Lexicographically first model (variable 1 most significant), if any.
pub fn brute_sat(f: &Formula) -> Result<Option<Assignment>> {
    let n = f.num_vars();
    if n > MAX_BRUTE_VARS {
        return Err(Error::ScaleExceeded {
            size: 1u128 << n.min(127),
            limit: 1u128 << MAX_BRUTE_VARS,
        });
    }
    Ok((0..1u64 << n)
        .map(|i| Assignment::from_index(i, n))
        .find(|a| f.satisfied_by(a)))
}

/// Every model of `f`, in lexicographic order.
pub fn all_models(f: &Formula) -> Result<Vec<Assignment>> {
    let n = f.num_vars();
    if n > MAX_BRUTE_VARS {
        return Err(Error::ScaleExceeded {
            size: 1u128 << n.min(127),
            limit: 1u128 << MAX_BRUTE_VARS,
        });
    }
    Ok((0..1u64 << n)
        .map(|i| Assignment::from_index(i, n))
        .filter(|a| f.satisfied_by(a))
        .collect())
}

/// Lexicographically first model within Hamming distance `radius` of
/// `center`.
pub fn ball_promise(f: &Formula, center: &Assignment, radius: usize) -> Result<Option<Assignment>> {
    let n = f.num_vars();
    if center.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: center.len(),
        });
    }
    let radius = radius.min(n);
    let points: u128 = (0..=radius).map(|d| binomial(n, d)).sum();
    if points > MAX_BALL_POINTS {
        return Err(Error::ScaleExceeded {
            size: points,
            limit: MAX_BALL_POINTS,
        });
    }
    let mut best: Option<Assignment> = None;
    let mut current = center.clone();
    visit_ball(f, &mut current, 1, radius, &mut best);
    Ok(best)
}

fn visit_ball(f: &Formula, current: &mut Assignment, from: usize, budget: usize, best: &mut Option<Assignment>) {
    if f.satisfied_by(current) && best.as_ref().is_none_or(|b| &*current < b) {
        *best = Some(current.clone());
    }
    if budget == 0 {
        return;
    }
    for v in from..=f.num_vars() {
        current.flip(v);
        visit_ball(f, current, v + 1, budget - 1, best);
        current.flip(v);
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Clause;

    fn example() -> Formula {
        Formula::parse_dimacs("p cnf 4 3\n1 2 4 0\n2 3 4 0\n-1 2 -4 0\n").unwrap()
    }

    #[test]
    fn brute_examples() {
        assert_eq!(
            brute_sat(&example()).unwrap(),
            Assignment::from_bit_str("0001")
        );
        let unsat = Formula::new(1, vec![Clause::from_dimacs(&[1]), Clause::from_dimacs(&[-1])]).unwrap();
        assert_eq!(brute_sat(&unsat).unwrap(), None);
        let empty = Formula::new(3, vec![]).unwrap();
        assert_eq!(brute_sat(&empty).unwrap(), Some(Assignment::zeros(3)));
    }

    #[test]
    fn ball_examples() {
        let f = example();
        let center = Assignment::from_bit_str("0100").unwrap();
        assert_eq!(ball_promise(&f, &center, 0).unwrap(), Some(center.clone()));
        let far = Assignment::from_bit_str("1010").unwrap();
        assert_eq!(ball_promise(&f, &far, 4).unwrap(), brute_sat(&f).unwrap());
        assert_eq!(
            ball_promise(&f, &Assignment::zeros(4), 1).unwrap(),
            Assignment::from_bit_str("0001")
        );
    }

    #[test]
    fn all_models_agrees_with_brute() {
        let f = example();
        let models = all_models(&f).unwrap();
        assert_eq!(models.first().cloned(), brute_sat(&f).unwrap());
        assert!(models.iter().all(|m| f.evaluate(m).unwrap()));
    }
}
