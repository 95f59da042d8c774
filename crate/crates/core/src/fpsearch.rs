//! Exact simulation of fixed-point amplitude amplification over the
//! flip-sequence register.
//!
//! The register holds one amplitude per sequence `s ∈ {1..K}^r`. The `V(s)`
//! and `F(x_{V(s)})` registers are functions of `s` computed classically by
//! [`crate::fliptree`], so amplitudes over `s` plus the marked mask describe
//! the whole state.
//!
//! One iterate is `G(α, β) = −R_S(α) · O(β)`, where `O(β)` multiplies marked
//! amplitudes by `e^{iβ}` and `R_S(α) = I − (1 − e^{−iα})|S⟩⟨S|` acts on the
//! uniform state `|S⟩`. With the angle schedule below, `l = (L−1)/2`
//! iterates leave at least `1 − ε²` probability on the marked set for every
//! marked fraction `λ ≥ λ_min`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fliptree::{self, FlipSequence};
use crate::formula::{Assignment, Formula};

/// Chebyshev polynomial of the first kind at a real, possibly fractional,
/// order: `cos(n·acos x)` on `[-1, 1]` and `cosh(n·acosh x)` above 1.
pub fn chebyshev_t(order: f64, x: f64) -> Result<f64> {
    if x.abs() <= 1.0 {
        Ok((order * x.acos()).cos())
    } else if x > 1.0 {
        Ok((order * x.acosh()).cosh())
    } else {
        Err(Error::invalid(format!(
            "fractional-order Chebyshev value is complex for x = {x}"
        )))
    }
}

/// Query count and phase angles for one search.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchSchedule {
    epsilon: f64,
    lambda_min: f64,
    queries: usize,
    gamma_inv: f64,
    angles: Vec<(f64, f64)>,
}

impl SearchSchedule {
    /// `L` is the smallest odd integer at least `log2(2/ε)/√λ_min`;
    /// `α_j = −β_{l−j+1} = 2·acot(tan(2πj/L)·√(1−γ²))` with
    /// `1/γ = T_{1/L}(1/ε)` and `acot` valued in `(0, π)`.
    pub fn new(epsilon: f64, lambda_min: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0,1), got {epsilon}")));
        }
        if !(lambda_min > 0.0 && lambda_min <= 1.0) {
            return Err(Error::invalid(format!(
                "lambda_min must lie in (0,1], got {lambda_min}"
            )));
        }
        let bound = (2.0 / epsilon).log2() / lambda_min.sqrt();
        let mut queries = bound.ceil() as usize;
        if queries.is_multiple_of(2) {
            queries += 1;
        }
        let l = (queries - 1) / 2;
        let gamma_inv = chebyshev_t(1.0 / queries as f64, 1.0 / epsilon)?;
        let gamma = 1.0 / gamma_inv;
        let width = (1.0 - gamma * gamma).max(0.0).sqrt();
        let alpha: Vec<f64> = (1..=l)
            .map(|j| {
                let x = (2.0 * PI * j as f64 / queries as f64).tan() * width;
                2.0 * 1f64.atan2(x)
            })
            .collect();
        let angles = (1..=l).map(|j| (alpha[j - 1], -alpha[l - j])).collect();
        Ok(SearchSchedule {
            epsilon,
            lambda_min,
            queries,
            gamma_inv,
            angles,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// `L`, always odd.
    pub fn queries(&self) -> usize {
        self.queries
    }

    /// `l = (L − 1)/2`, the number of `G` iterates.
    pub fn iterations(&self) -> usize {
        self.angles.len()
    }

    /// `L − 1` uses of the state-preparation operator.
    pub fn oracle_calls(&self) -> usize {
        self.queries - 1
    }

    pub fn gamma_inv(&self) -> f64 {
        self.gamma_inv
    }

    /// `(α_j, β_j)` for `j = 1..=l`, applied in this order.
    pub fn angles(&self) -> &[(f64, f64)] {
        &self.angles
    }
}

/// Amplitudes over flip sequences plus which sequences reach a model.
#[derive(Clone, Debug)]
pub struct FlipState {
    amplitudes: Vec<Complex64>,
    marked: Vec<bool>,
}

impl FlipState {
    /// Uniform superposition over `marked.len()` basis states.
    pub fn uniform(marked: Vec<bool>) -> Self {
        let amp = Complex64::new(1.0 / (marked.len() as f64).sqrt(), 0.0);
        FlipState {
            amplitudes: vec![amp; marked.len()],
            marked,
        }
    }

    pub fn prepare(f: &Formula, center: &Assignment, radius: usize, alphabet: u8) -> Result<Self> {
        Ok(Self::uniform(fliptree::marked_mask(f, center, radius, alphabet)?))
    }

    pub fn from_parts(amplitudes: Vec<Complex64>, marked: Vec<bool>) -> Result<Self> {
        if amplitudes.len() != marked.len() || amplitudes.is_empty() {
            return Err(Error::invalid("amplitude and mask lengths differ"));
        }
        Ok(FlipState { amplitudes, marked })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn marked(&self) -> &[bool] {
        &self.marked
    }

    pub fn marked_count(&self) -> usize {
        self.marked.iter().filter(|&&m| m).count()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability that a measurement returns a marked sequence.
    pub fn success_probability(&self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.marked)
            .filter(|(_, &m)| m)
            .map(|(a, _)| a.norm_sqr())
            .sum()
    }

    /// Applies `G(α, β)` in place.
    pub fn apply_g(&mut self, alpha: f64, beta: f64) {
        let phase = Complex64::from_polar(1.0, beta);
        for (a, &m) in self.amplitudes.iter_mut().zip(&self.marked) {
            if m {
                *a *= phase;
            }
        }
        let scale = 1.0 / (self.amplitudes.len() as f64).sqrt();
        let overlap: Complex64 = self.amplitudes.iter().sum::<Complex64>() * scale;
        let shift = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -alpha)) * overlap * scale;
        for a in &mut self.amplitudes {
            *a = -(*a - shift);
        }
    }

    pub fn apply_schedule(&mut self, schedule: &SearchSchedule) {
        for &(alpha, beta) in schedule.angles() {
            self.apply_g(alpha, beta);
        }
    }

    /// Draws a basis index with probability `|amplitude|²`.
    pub fn measure<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.norm_sqr();
        let mut target = rng.gen::<f64>() * total;
        for (i, a) in self.amplitudes.iter().enumerate() {
            target -= a.norm_sqr();
            if target < 0.0 {
                return i;
            }
        }
        self.amplitudes.len() - 1
    }
}

/// A search whose operator sequence has already been applied; each
/// [`measure`](Self::measure) is one independent run of the algorithm.
#[derive(Clone, Debug)]
pub struct PreparedSearch {
    state: FlipState,
    schedule: SearchSchedule,
    radius: usize,
    alphabet: u8,
}

impl PreparedSearch {
    /// Prepares the register for `B_radius(center)` and runs the schedule
    /// with `λ_min = 1/K^radius`.
    pub fn new(
        f: &Formula,
        center: &Assignment,
        radius: usize,
        alphabet: u8,
        epsilon: f64,
    ) -> Result<Self> {
        let mut state = FlipState::prepare(f, center, radius, alphabet)?;
        let schedule = SearchSchedule::new(epsilon, 1.0 / state.amplitudes.len() as f64)?;
        state.apply_schedule(&schedule);
        Ok(PreparedSearch {
            state,
            schedule,
            radius,
            alphabet,
        })
    }

    pub fn state(&self) -> &FlipState {
        &self.state
    }

    pub fn schedule(&self) -> &SearchSchedule {
        &self.schedule
    }

    pub fn measure<R: Rng + ?Sized>(&self, rng: &mut R) -> FlipSequence {
        let index = self.state.measure(rng);
        FlipSequence::from_index(index as u64, self.radius, self.alphabet)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub sequence: FlipSequence,
    pub candidate: Assignment,
    pub success: bool,
    /// `L − 1`.
    pub queries: usize,
}

/// Runs one fixed-point search in `B_radius(center)` and verifies the
/// measured candidate classically.
pub fn run_search(
    f: &Formula,
    center: &Assignment,
    radius: usize,
    alphabet: u8,
    epsilon: f64,
    seed: u64,
) -> Result<SearchOutcome> {
    let search = PreparedSearch::new(f, center, radius, alphabet, epsilon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sequence = search.measure(&mut rng);
    let outcome = fliptree::walk(f, center, &sequence)?;
    let success = f.satisfied_by(&outcome.candidate);
    Ok(SearchOutcome {
        sequence,
        candidate: outcome.candidate,
        success,
        queries: search.schedule.oracle_calls(),
    })
}

/// Success probability for marked fraction `lambda`, computed in the
/// two-dimensional span of the marked and unmarked components of `|S⟩`.
pub fn success_probability_exact(lambda: f64, schedule: &SearchSchedule) -> f64 {
    success_trace(lambda, schedule)
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// Marked-set probability before the first iterate and after each one.
pub fn success_trace(lambda: f64, schedule: &SearchSchedule) -> Vec<f64> {
    let lambda = lambda.clamp(0.0, 1.0);
    let s = [
        Complex64::new(lambda.sqrt(), 0.0),
        Complex64::new((1.0 - lambda).sqrt(), 0.0),
    ];
    let mut v = s;
    let mut trace = vec![v[0].norm_sqr()];
    for &(alpha, beta) in schedule.angles() {
        v[0] *= Complex64::from_polar(1.0, beta);
        let overlap = s[0].conj() * v[0] + s[1].conj() * v[1];
        let k = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -alpha)) * overlap;
        v = [-(v[0] - k * s[0]), -(v[1] - k * s[1])];
        trace.push(v[0].norm_sqr());
    }
    trace
}

/// `step,probability` CSV of [`success_trace`].
pub fn trace_csv(lambda: f64, schedule: &SearchSchedule) -> String {
    let mut out = String::from("step,probability\n");
    for (i, p) in success_trace(lambda, schedule).iter().enumerate() {
        let _ = writeln!(out, "{i},{p:.12}");
    }
    out
}
