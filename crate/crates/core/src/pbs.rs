//! Promise-ball solvers.
//!
//! Three layers, each returning a model or `None` (FALSE):
//!
//! * [`quantum_kpbs`] runs the simulated fixed-point search over flip
//!   sequences from the center and checks the measured candidate.
//! * [`kqcpbs`] branches classically on the literals of the first
//!   unsatisfied clause until the radius reaches `r_max`, then hands the
//!   ball to [`quantum_kpbs`] at radius `r_max`.
//! * [`kpbs_hybrid`] builds a maximal disjoint set `G` of unsatisfied
//!   clauses. Small `G`: enumerate all assignments of its variables and call
//!   [`kqcpbs`]. Large `G`: move the center along every codeword of a K-ary
//!   covering code applied to `t` clauses of `G`, and recurse with radius
//!   `r − t/K`.
//!
//! Branches are tried in ascending order of unsatisfied-clause count with
//! ties kept in enumeration order.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codes::{CoveringCode, KaryCoveringCode};
use crate::error::{Error, Result};
use crate::fliptree;
use crate::formula::{Assignment, Formula, PartialAssignment, Restriction};
use crate::fpsearch::PreparedSearch;

#[derive(Clone, Debug, PartialEq)]
pub struct PbsInstance {
    pub formula: Formula,
    pub center: Assignment,
    pub radius: usize,
    pub r_max: usize,
    pub epsilon: f64,
}

/// The K-ary code used for center descent and the arithmetic around it.
#[derive(Clone, Debug, PartialEq)]
pub struct DescentParams {
    code: KaryCoveringCode,
}

impl DescentParams {
    /// `t = max(K, smallest multiple of K ≥ ⌊log2 log2 max(r, 4)⌋)`.
    pub fn word_length_for(alphabet: u8, radius: usize) -> usize {
        let k = alphabet as usize;
        let loglog = (radius.max(4) as f64).log2().log2().floor() as usize;
        k.max(loglog.div_ceil(k) * k)
    }

    /// Builds the code of radius `t/K` for the given clause width and ball
    /// radius.
    pub fn for_radius(alphabet: u8, radius: usize, seed: u64) -> Result<Self> {
        let t = Self::word_length_for(alphabet, radius);
        Self::from_code(KaryCoveringCode::build(alphabet, t, t / alphabet as usize, seed)?)
    }

    pub fn from_code(code: KaryCoveringCode) -> Result<Self> {
        let k = code.alphabet() as usize;
        let t = code.word_length();
        if k < 3 {
            return Err(Error::invalid("center descent needs clause width K ≥ 3"));
        }
        if t == 0 || !t.is_multiple_of(k) || code.radius() != t / k {
            return Err(Error::invalid(format!(
                "descent code must have length a positive multiple of K and radius t/K, got t={t}, radius={}",
                code.radius()
            )));
        }
        if !code.verify().is_covered() {
            return Err(Error::invalid("descent code does not cover its space"));
        }
        Ok(DescentParams { code })
    }

    pub fn code(&self) -> &KaryCoveringCode {
        &self.code
    }

    pub fn t(&self) -> usize {
        self.code.word_length()
    }

    /// Radius lost per descent step, `t/K`.
    pub fn step(&self) -> usize {
        self.t() / self.code.alphabet() as usize
    }

    /// Guaranteed distance gain per descent step, `t − 2t/K`.
    pub fn delta(&self) -> usize {
        self.t() - 2 * self.step()
    }
}

/// One simulated quantum invocation, as reported to the orchestrator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumCall {
    pub radius: usize,
    /// `L` of the schedule.
    #[serde(rename = "L")]
    pub l: usize,
    /// `L − 1` oracle uses per attempt.
    pub queries: usize,
    pub attempts: usize,
    /// `K^radius`, the leaves a classical enumeration of the ball visits.
    pub branches: u64,
    pub success: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PbsStats {
    /// Solver nodes visited (classical branches).
    pub branches: u64,
    pub quantum_calls: Vec<QuantumCall>,
}

impl PbsStats {
    pub fn total_queries(&self) -> u64 {
        self.quantum_calls
            .iter()
            .map(|c| (c.queries * c.attempts) as u64)
            .sum()
    }
}

/// Per-worker state threaded through the recursion.
pub struct SearchContext<'a> {
    alphabet: u8,
    retries: usize,
    rng: ChaCha8Rng,
    cancel: Option<&'a AtomicBool>,
    pub stats: PbsStats,
}

impl<'a> SearchContext<'a> {
    /// `alphabet` is the clause width K of the original formula; it fixes
    /// the flip register even after restrictions narrow the clauses.
    pub fn new(alphabet: u8, retries: usize, seed: u64) -> Self {
        SearchContext {
            alphabet: alphabet.max(1),
            retries: retries.max(1),
            rng: ChaCha8Rng::seed_from_u64(seed),
            cancel: None,
            stats: PbsStats::default(),
        }
    }

    pub fn with_cancel(mut self, cancel: &'a AtomicBool) -> Self {
        self.cancel = Some(cancel);
        self
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    fn cancelled(&self) -> bool {
        self.cancel.is_some_and(|c| c.load(Ordering::Relaxed))
    }
}

/// Fixed-point search in `B_radius(center)`, repeated up to the context's
/// retry count. Returns only verified models.
pub fn quantum_kpbs(inst: &PbsInstance, ctx: &mut SearchContext<'_>) -> Result<Option<Assignment>> {
    check_instance(inst)?;
    quantum_leaf(&inst.formula, &inst.center, inst.radius, inst.epsilon, ctx)
}

fn quantum_leaf(
    f: &Formula,
    center: &Assignment,
    radius: usize,
    epsilon: f64,
    ctx: &mut SearchContext<'_>,
) -> Result<Option<Assignment>> {
    let search = PreparedSearch::new(f, center, radius, ctx.alphabet, epsilon)?;
    let mut record = QuantumCall {
        radius,
        l: search.schedule().queries(),
        queries: search.schedule().oracle_calls(),
        attempts: 0,
        branches: fliptree::sequence_count(ctx.alphabet, radius)?,
        success: false,
    };
    let mut found = None;
    for _ in 0..ctx.retries {
        record.attempts += 1;
        let s = search.measure(&mut ctx.rng);
        let candidate = fliptree::walk(f, center, &s)?.candidate;
        if f.satisfied_by(&candidate) {
            found = Some(candidate);
            break;
        }
    }
    record.success = found.is_some();
    ctx.stats.quantum_calls.push(record);
    Ok(found)
}

/// Classical branching down to `r_max`, quantum search below.
pub fn kqcpbs(inst: &PbsInstance, ctx: &mut SearchContext<'_>) -> Result<Option<Assignment>> {
    check_instance(inst)?;
    let found = kqcpbs_rec(&inst.formula, &inst.center, inst.radius, inst.r_max, inst.epsilon, 0, inst.radius, ctx)?;
    Ok(found.filter(|m| inst.formula.satisfied_by(m)))
}

#[allow(clippy::too_many_arguments)]
fn kqcpbs_rec(
    f: &Formula,
    center: &Assignment,
    radius: usize,
    r_max: usize,
    epsilon: f64,
    depth: usize,
    depth_limit: usize,
    ctx: &mut SearchContext<'_>,
) -> Result<Option<Assignment>> {
    assert!(depth <= depth_limit, "recursion deeper than the starting radius");
    if ctx.cancelled() {
        return Ok(None);
    }
    ctx.stats.branches += 1;
    let Some(ci) = f.first_unsatisfied(center) else {
        return Ok(Some(center.clone()));
    };
    if radius == 0 {
        return Ok(None);
    }
    if radius <= r_max {
        return quantum_leaf(f, center, r_max, epsilon, ctx);
    }

    let mut branches: Vec<(usize, usize, bool, Formula)> = f.clauses()[ci]
        .lits()
        .iter()
        .filter_map(|lit| {
            let value = lit.satisfying_value();
            let binding = PartialAssignment::new().with(lit.var(), value);
            f.restrict(&binding)
                .into_formula()
                .map(|g| (g.count_unsat(center), lit.var(), value, g))
        })
        .collect();
    branches.sort_by_key(|b| b.0);

    for (_, var, value, g) in branches {
        if let Some(mut model) =
            kqcpbs_rec(&g, center, radius - 1, r_max, epsilon, depth + 1, depth_limit, ctx)?
        {
            model.set(var, value);
            return Ok(Some(model));
        }
    }
    Ok(None)
}

/// `x[H, w]`: flips, for each clause `H_j`, the variable of its literal
/// number `w_j` (wrapping on clauses narrower than `w_j`).
pub fn modify_assignment(f: &Formula, x: &Assignment, h: &[usize], w: &[u8]) -> Result<Assignment> {
    if h.len() != w.len() {
        return Err(Error::invalid(format!(
            "{} clauses but codeword of length {}",
            h.len(),
            w.len()
        )));
    }
    if x.len() != f.num_vars() {
        return Err(Error::LengthMismatch {
            expected: f.num_vars(),
            got: x.len(),
        });
    }
    for (i, &a) in h.iter().enumerate() {
        for &b in &h[i + 1..] {
            if f.clauses()[a].vars().any(|v| f.clauses()[b].contains_var(v)) {
                return Err(Error::NotDisjoint { first: a, second: b });
            }
        }
    }
    let mut out = x.clone();
    for (&ci, &wj) in h.iter().zip(w) {
        let lits = f.clauses()[ci].lits();
        if wj == 0 || lits.is_empty() {
            return Err(Error::invalid("codeword symbols start at 1"));
        }
        out.flip(lits[(wj as usize - 1) % lits.len()].var());
    }
    Ok(out)
}

/// All restrictions of `f` by assignments to the variables of the clauses
/// `g`, conflicts dropped, sorted ascending by the number of clauses the
/// center leaves unsatisfied. Assignments are enumerated lexicographically
/// over the variables in ascending order.
pub fn disjoint_set_branches(
    f: &Formula,
    center: &Assignment,
    g: &[usize],
) -> Result<Vec<(PartialAssignment, Formula)>> {
    let vars = f.vars_of(g);
    if vars.len() > 24 {
        return Err(Error::ScaleExceeded {
            size: 1u128 << vars.len(),
            limit: 1 << 24,
        });
    }
    let mut branches: Vec<(usize, PartialAssignment, Formula)> = (0..1u64 << vars.len())
        .filter_map(|i| {
            let phi: PartialAssignment = vars
                .iter()
                .enumerate()
                .map(|(j, &v)| (v, (i >> (vars.len() - 1 - j)) & 1 == 1))
                .collect();
            match f.restrict(&phi) {
                Restriction::Formula(r) => Some((r.count_unsat(center), phi, r)),
                Restriction::Conflict => None,
            }
        })
        .collect();
    branches.sort_by_key(|b| b.0);
    Ok(branches.into_iter().map(|(_, p, r)| (p, r)).collect())
}

/// Hybrid ball search: disjoint-set enumeration or K-ary center descent,
/// bottoming out in [`kqcpbs`].
pub fn kpbs_hybrid(
    inst: &PbsInstance,
    dp: &DescentParams,
    ctx: &mut SearchContext<'_>,
) -> Result<Option<Assignment>> {
    check_instance(inst)?;
    let found = hybrid_rec(inst, &inst.center, inst.radius, dp, 0, ctx)?;
    Ok(found.filter(|m| inst.formula.satisfied_by(m)))
}

fn hybrid_rec(
    inst: &PbsInstance,
    center: &Assignment,
    radius: usize,
    dp: &DescentParams,
    depth: usize,
    ctx: &mut SearchContext<'_>,
) -> Result<Option<Assignment>> {
    assert!(depth <= inst.radius, "recursion deeper than the starting radius");
    if ctx.cancelled() {
        return Ok(None);
    }
    ctx.stats.branches += 1;
    let f = &inst.formula;
    if f.satisfied_by(center) {
        return Ok(Some(center.clone()));
    }
    if radius == 0 {
        return Ok(None);
    }

    let g = f.max_disjoint_unsat(center)?;
    if g.len() <= dp.t() {
        for (phi, restricted) in disjoint_set_branches(f, center, &g)? {
            if ctx.cancelled() {
                return Ok(None);
            }
            let found = kqcpbs_rec(
                &restricted,
                center,
                radius,
                inst.r_max,
                inst.epsilon,
                depth,
                inst.radius,
                ctx,
            )?;
            if let Some(mut model) = found {
                model.overlay(&phi);
                return Ok(Some(model));
            }
        }
        return Ok(None);
    }

    let h = &g[..dp.t()];
    let mut moved: Vec<(usize, Assignment)> = dp
        .code()
        .codewords()
        .iter()
        .map(|w| {
            let x = modify_assignment(f, center, h, w)?;
            Ok((f.count_unsat(&x), x))
        })
        .collect::<Result<_>>()?;
    moved.sort_by_key(|m| m.0);
    let next_radius = radius.saturating_sub(dp.step());
    for (_, x) in moved {
        if let Some(model) = hybrid_rec(inst, &x, next_radius, dp, depth + 1, ctx)? {
            return Ok(Some(model));
        }
    }
    Ok(None)
}

fn check_instance(inst: &PbsInstance) -> Result<()> {
    if inst.center.len() != inst.formula.num_vars() {
        return Err(Error::LengthMismatch {
            expected: inst.formula.num_vars(),
            got: inst.center.len(),
        });
    }
    if !(inst.epsilon > 0.0 && inst.epsilon < 1.0) {
        return Err(Error::invalid(format!(
            "epsilon must lie in (0,1), got {}",
            inst.epsilon
        )));
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

    fn inst(f: Formula, center: Assignment, radius: usize, r_max: usize) -> PbsInstance {
        PbsInstance {
            formula: f,
            center,
            radius,
            r_max,
            epsilon: 0.1,
        }
    }

    #[test]
    fn modify_assignment_example() {
        let f = formula(
            9,
            &[&[-1, -2, -3], &[-4, -5, -6], &[-7, -8, -9]],
        );
        let x = modify_assignment(&f, &Assignment::ones(9), &[0, 1, 2], &[1, 2, 3]).unwrap();
        assert_eq!(x.to_string(), "011101110");
        let one = modify_assignment(&f, &Assignment::ones(9), &[1], &[3]).unwrap();
        assert_eq!(one.distance(&Assignment::ones(9)), 1);
    }

    #[test]
    fn modify_assignment_rejects_overlap() {
        let f = formula(4, &[&[1, 2], &[2, 3], &[4]]);
        assert!(matches!(
            modify_assignment(&f, &Assignment::zeros(4), &[0, 1], &[1, 1]),
            Err(Error::NotDisjoint { first: 0, second: 1 })
        ));
        assert!(modify_assignment(&f, &Assignment::zeros(4), &[0], &[1, 1]).is_err());
    }

    #[test]
    fn modify_assignment_wraps_narrow_clause() {
        let f = formula(3, &[&[1, 2]]);
        let x = modify_assignment(&f, &Assignment::zeros(3), &[0], &[3]).unwrap();
        assert_eq!(x.to_string(), "100");
    }

    #[test]
    fn descent_parameters() {
        assert_eq!(DescentParams::word_length_for(3, 2), 3);
        assert_eq!(DescentParams::word_length_for(3, 16), 3);
        assert_eq!(DescentParams::word_length_for(3, 1 << 16), 6);
        assert_eq!(DescentParams::word_length_for(4, 1 << 32), 8);
        let dp = DescentParams::for_radius(3, 5, 1).unwrap();
        assert_eq!((dp.t(), dp.step(), dp.delta()), (3, 1, 1));
        let dp = DescentParams::for_radius(4, 5, 1).unwrap();
        assert_eq!((dp.t(), dp.step(), dp.delta()), (4, 1, 2));
        assert!(DescentParams::for_radius(2, 5, 1).is_err());
    }

    #[test]
    fn trivial_outcomes() {
        let f = formula(3, &[&[1, 2, 3]]);
        let mut ctx = SearchContext::new(3, 1, 0);
        let sat = inst(f.clone(), Assignment::ones(3), 0, 0);
        assert_eq!(kqcpbs(&sat, &mut ctx).unwrap(), Some(Assignment::ones(3)));
        let zero = inst(f.clone(), Assignment::zeros(3), 0, 0);
        assert_eq!(kqcpbs(&zero, &mut ctx).unwrap(), None);
        assert!(ctx.stats.quantum_calls.is_empty());

        let unsat = formula(1, &[&[1], &[-1]]);
        let q = inst(unsat, Assignment::zeros(1), 2, 2);
        assert_eq!(quantum_kpbs(&q, &mut ctx).unwrap(), None);
        assert_eq!(ctx.stats.quantum_calls.len(), 1);
        assert!(!ctx.stats.quantum_calls[0].success);
    }

    #[test]
    fn quantum_solves_full_marking() {
        let f = formula(3, &[&[1, 2, 3]]);
        let mut ctx = SearchContext::new(3, 1, 11);
        let q = inst(f.clone(), Assignment::zeros(3), 1, 1);
        let model = quantum_kpbs(&q, &mut ctx).unwrap().unwrap();
        assert!(f.evaluate(&model).unwrap());
        assert_eq!(ctx.stats.quantum_calls[0].branches, 3);
    }

    #[test]
    fn classical_branching_lifts_bindings() {
        // Only model within distance 2 of 0000 is 0110.
        let f = formula(4, &[&[2, 3], &[-1], &[-4], &[2, -3], &[3, 4]]);
        let mut ctx = SearchContext::new(3, 1, 0);
        let out = kqcpbs(&inst(f.clone(), Assignment::zeros(4), 2, 0), &mut ctx).unwrap();
        assert_eq!(out, Some(Assignment::from_bit_str("0110").unwrap()));
        assert!(ctx.stats.quantum_calls.is_empty());
        let mut ctx = SearchContext::new(3, 1, 0);
        let out = kqcpbs(&inst(f, Assignment::zeros(4), 1, 0), &mut ctx).unwrap();
        assert_eq!(out, None);
    }

    #[test]
    fn disjoint_branches_skip_conflicts_and_sort() {
        let f = formula(3, &[&[1, 2], &[-1], &[-2, 3]]);
        let center = Assignment::zeros(3);
        let g = f.max_disjoint_unsat(&center).unwrap();
        assert_eq!(g, vec![0]);
        let branches = disjoint_set_branches(&f, &center, &g).unwrap();
        // φ over {x1, x2}: 00 conflicts on clause 1, 1x conflicts on ¬x1.
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].0, PartialAssignment::new().with(1, false).with(2, true));
    }

    #[test]
    fn hybrid_small_g_path_succeeds() {
        let f = formula(4, &[&[1, 2, 3], &[-1, 4]]);
        let dp = DescentParams::for_radius(3, 2, 0).unwrap();
        let mut ctx = SearchContext::new(3, 3, 0);
        let out = kpbs_hybrid(&inst(f.clone(), Assignment::zeros(4), 2, 1), &dp, &mut ctx)
            .unwrap()
            .unwrap();
        assert!(f.evaluate(&out).unwrap());
    }

    #[test]
    fn hybrid_descent_path_succeeds() {
        // Four disjoint unsatisfied clauses force the descent branch (t = 3).
        let f = formula(
            12,
            &[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9], &[10, 11, 12], &[-1, -5]],
        );
        let dp = DescentParams::for_radius(3, 4, 0).unwrap();
        let mut ctx = SearchContext::new(3, 3, 0);
        let out = kpbs_hybrid(&inst(f.clone(), Assignment::zeros(12), 4, 1), &dp, &mut ctx)
            .unwrap()
            .unwrap();
        assert!(f.evaluate(&out).unwrap());
        for call in &ctx.stats.quantum_calls {
            assert_eq!(call.radius, 1);
        }
    }

    #[test]
    fn cancellation_stops_search() {
        let f = formula(3, &[&[1, 2, 3]]);
        let flag = AtomicBool::new(true);
        let mut ctx = SearchContext::new(3, 1, 0).with_cancel(&flag);
        let out = kqcpbs(&inst(f, Assignment::zeros(3), 2, 0), &mut ctx).unwrap();
        assert_eq!(out, None);
        assert_eq!(ctx.stats.branches, 0);
    }
}
