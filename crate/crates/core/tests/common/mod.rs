#![allow(dead_code)]

use fpsat::{Assignment, Clause, Formula, Lit};
use rand::seq::index::sample;
use rand::Rng;

/// `m` clauses of exactly `width` distinct variables with random signs.
pub fn random_ksat<R: Rng>(rng: &mut R, n: usize, m: usize, width: usize) -> Formula {
    let clauses = (0..m)
        .map(|_| {
            Clause::new(
                sample(rng, n, width)
                    .into_iter()
                    .map(|v| Lit::new(v + 1, rng.gen_bool(0.5))),
            )
        })
        .collect();
    Formula::new(n, clauses).unwrap()
}

/// Random `width`-SAT instance with every clause satisfied by a hidden
/// assignment, which is returned alongside.
pub fn planted_ksat<R: Rng>(rng: &mut R, n: usize, m: usize, width: usize) -> (Formula, Assignment) {
    let hidden = Assignment::new((0..n).map(|_| rng.gen_bool(0.5)).collect());
    let mut clauses = Vec::with_capacity(m);
    while clauses.len() < m {
        let c = Clause::new(
            sample(rng, n, width)
                .into_iter()
                .map(|v| Lit::new(v + 1, rng.gen_bool(0.5))),
        );
        if c.lits().iter().any(|l| l.is_satisfied_by(hidden.get(l.var()))) {
            clauses.push(c);
        }
    }
    (Formula::new(n, clauses).unwrap(), hidden)
}

pub fn formula(n: usize, clauses: &[&[i64]]) -> Formula {
    Formula::new(n, clauses.iter().map(|c| Clause::from_dimacs(c)).collect()).unwrap()
}

/// The four-variable running example: (x1∨x2∨x4)(x2∨x3∨x4)(¬x1∨x2∨¬x4).
pub fn example() -> Formula {
    formula(4, &[&[1, 2, 4], &[2, 3, 4], &[-1, 2, -4]])
}
