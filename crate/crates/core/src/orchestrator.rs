//! Top-level solver: prefix decomposition, binary covering-code sweep and
//! dispatch of ball searches to a pool of share-nothing workers.
//!
//! Workers receive a [`Job`] and answer with a [`JobResult`]. Both carry
//! only assignments, formulas and counters.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codes::{BinaryCoveringCode, CoveringCode, KaryCoveringCode, EXHAUSTIVE_VERIFY_LIMIT};
use crate::error::{Error, Result};
use crate::formula::{Assignment, Formula, Restriction};
use crate::pbs::{self, DescentParams, PbsInstance, PbsStats, SearchContext};

/// Qubit budget model: a ball of radius `γ(n−k)` fits when
/// `A·γ·log2(1/γ) + B·γ = c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub gamma: f64,
}

impl ResourceModel {
    /// Solves for `γ` by bisection on the increasing branch of
    /// `g(γ) = A·γ·log2(1/γ) + B·γ`, which peaks at
    /// `γ* = 2^{B/A − 1/ln 2}` (or is increasing on all of `(0, 1]`).
    pub fn solve(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::invalid("resource constants A and B must be positive"));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::invalid(format!("qubit fraction c must lie in (0,1), got {c}")));
        }
        let g = |x: f64| a * x * (1.0 / x).log2() + b * x;
        let peak = (b / a - std::f64::consts::LOG2_E).exp2().min(1.0);
        if g(peak) < c {
            return Err(Error::invalid(format!(
                "c = {c} exceeds the reachable maximum {:.6} for A = {a}, B = {b}",
                g(peak)
            )));
        }
        let (mut lo, mut hi) = (0.0f64, peak);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < c {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(ResourceModel { a, b, c, gamma: 0.5 * (lo + hi) })
    }

    /// `|A·γ·log2(1/γ) + B·γ − c|`.
    pub fn residual(&self) -> f64 {
        let g = self.gamma;
        (self.a * g * (1.0 / g).log2() + self.b * g - self.c).abs()
    }

    /// `⌊γ · free_vars⌋`.
    pub fn r_max(&self, free_vars: usize) -> usize {
        (self.gamma * free_vars as f64).floor() as usize
    }

    /// Leading terms of the qubit count for a radius-`r` search over
    /// `free_vars` variables: `A·r·log2(m/r) + B·r + log2(m)`.
    pub fn qubits(&self, r: usize, free_vars: usize) -> f64 {
        if r == 0 || free_vars == 0 {
            return (free_vars.max(1) as f64).log2();
        }
        let (r, m) = (r as f64, free_vars as f64);
        self.a * r * (m / r).log2() + self.b * r + m.log2()
    }
}

pub fn solve_resource(a: f64, b: f64, c: f64) -> Result<ResourceModel> {
    ResourceModel::solve(a, b, c)
}

/// Runtime exponent per free variable with `ε′ → 0`:
/// `1 + log2((K−1)/K) − γ·log2((K−1)/√K)`.
pub fn exponent(clause_width: u32, gamma: f64) -> Result<f64> {
    if clause_width < 3 {
        return Err(Error::invalid("exponent formula needs K ≥ 3"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0,1), got {gamma}")));
    }
    let k = clause_width as f64;
    Ok(1.0 + ((k - 1.0) / k).log2() - gamma * ((k - 1.0) / k.sqrt()).log2())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Classical branching above `r_max`, simulated quantum search below.
    #[default]
    Hybrid,
    /// Classical branching all the way down (`r_max = 0`), no quantum calls.
    Classical,
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    /// Number of decomposition variables.
    pub k: usize,
    /// Flip-register alphabet; defaults to `max(max clause width, 3)`.
    pub clause_width: Option<u8>,
    pub epsilon: f64,
    /// Binary cover radius fraction; defaults to `1/K`.
    pub rho: Option<f64>,
    /// Blocks for the binary cover construction.
    pub cover_blocks: usize,
    /// Parallel workers; defaults to `2^k`.
    pub workers: Option<usize>,
    /// Measurements per quantum call before reporting FALSE.
    pub retries: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Overrides the resource model's `⌊γ(n−k)⌋`.
    pub r_max: Option<usize>,
    pub cover_cache: Option<PathBuf>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            k: 0,
            clause_width: None,
            epsilon: 0.1,
            rho: None,
            cover_blocks: 1,
            workers: None,
            retries: 3,
            seed: 0,
            mode: Mode::Hybrid,
            r_max: None,
            cover_cache: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Sat,
    False,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Sat,
    False,
}

impl From<bool> for Outcome {
    fn from(found: bool) -> Self {
        if found {
            Outcome::Sat
        } else {
            Outcome::False
        }
    }
}

/// One line of the metrics stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StatsRecord {
    /// A simulated quantum search.
    Quantum {
        prefix: String,
        codeword: usize,
        radius: usize,
        #[serde(rename = "L")]
        l: usize,
        queries: usize,
        attempts: usize,
        branches: u64,
        outcome: Outcome,
    },
    /// A purely classical ball search (classical mode only).
    Classical {
        prefix: String,
        codeword: usize,
        radius: usize,
        branches: u64,
        outcome: Outcome,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub clause_width: u8,
    pub radius: usize,
    pub r_max: usize,
    /// `t − 2t/K` of the descent code, when one was built.
    pub delta: Option<usize>,
    pub cover_size: usize,
    pub prefixes_tried: usize,
    pub dispatches: usize,
    pub branches: u64,
    pub quantum_calls: usize,
    pub total_queries: u64,
    /// Upper bound on the probability that FALSE is wrong.
    pub false_bound: f64,
    #[serde(skip)]
    pub wall_time: Option<std::time::Duration>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    pub model: Option<Assignment>,
    pub stats: SolveStats,
    pub records: Vec<StatsRecord>,
}

/// Work sent to a worker: search the ball around `center` in `formula`.
#[derive(Clone, Debug)]
pub struct Job {
    pub slot: usize,
    pub codeword: usize,
    pub formula: Formula,
    pub center: Assignment,
    pub seed: u64,
}

/// A worker's answer.
#[derive(Clone, Debug)]
pub struct JobResult {
    pub slot: usize,
    pub codeword: usize,
    pub model: Option<Assignment>,
    pub stats: PbsStats,
}

struct Plan {
    alphabet: u8,
    radius: usize,
    r_max: usize,
    epsilon: f64,
    retries: usize,
    mode: Mode,
    descent: Option<DescentParams>,
}

impl Plan {
    fn run(&self, job: &Job, cancel: &AtomicBool) -> Result<JobResult> {
        let mut ctx = SearchContext::new(self.alphabet, self.retries, job.seed).with_cancel(cancel);
        let mut inst = PbsInstance {
            formula: job.formula.clone(),
            center: job.center.clone(),
            radius: self.radius,
            r_max: self.r_max,
            epsilon: self.epsilon,
        };
        let model = match (self.mode, &self.descent) {
            (Mode::Classical, _) => {
                inst.r_max = 0;
                pbs::kqcpbs(&inst, &mut ctx)?
            }
            (Mode::Hybrid, Some(dp)) if self.radius > self.r_max => {
                pbs::kpbs_hybrid(&inst, dp, &mut ctx)?
            }
            (Mode::Hybrid, _) => {
                inst.radius = self.radius.min(self.r_max);
                pbs::quantum_kpbs(&inst, &mut ctx)?
            }
        };
        Ok(JobResult {
            slot: job.slot,
            codeword: job.codeword,
            model,
            stats: ctx.stats,
        })
    }
}

/// Solves `f`. SAT answers are verified against `f` itself; FALSE carries
/// the bound in `stats.false_bound`.
pub fn solve(f: &Formula, cfg: &SolveConfig, rm: &ResourceModel) -> Result<SolveResult> {
    #[cfg(not(target_arch = "wasm32"))]
    let started = std::time::Instant::now();

    let n = f.num_vars();
    if cfg.k > n {
        return Err(Error::TooManyVars { k: cfg.k, num_vars: n });
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0,1), got {}", cfg.epsilon)));
    }
    let alphabet = cfg.clause_width.unwrap_or_else(|| f.max_width().clamp(3, u8::MAX as usize) as u8);
    if (alphabet as usize) < f.max_width() {
        return Err(Error::invalid(format!(
            "clause width {alphabet} is below the formula's widest clause ({})",
            f.max_width()
        )));
    }
    let rho = cfg.rho.unwrap_or(1.0 / alphabet as f64);
    let workers = cfg.workers.unwrap_or(1usize << cfg.k.min(16)).max(1);
    let free = n - cfg.k;

    let cover = binary_cover(free, rho, cfg.cover_blocks, cfg.cover_cache.as_deref())?;
    let radius = cover.radius();
    let r_max = match cfg.mode {
        Mode::Classical => 0,
        Mode::Hybrid => cfg.r_max.unwrap_or_else(|| rm.r_max(free)),
    };
    let descent = if cfg.mode == Mode::Hybrid && radius > r_max {
        Some(descent_params(alphabet, radius, cfg.seed, cfg.cover_cache.as_deref())?)
    } else {
        None
    };

    let mut stats = SolveStats {
        clause_width: alphabet,
        radius,
        r_max,
        delta: descent.as_ref().map(DescentParams::delta),
        cover_size: cover.len(),
        ..SolveStats::default()
    };
    let plan = Plan {
        alphabet,
        radius,
        r_max,
        epsilon: cfg.epsilon,
        retries: cfg.retries.max(1),
        mode: cfg.mode,
        descent,
    };

    let top = f.top_k_vars(cfg.k)?;
    let free_vars: Vec<usize> = (1..=n).filter(|v| !top.contains(v)).collect();
    let mut parts = f.decompose(cfg.k)?;
    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));

    let mut records = Vec::new();
    let mut found: Option<Assignment> = None;

    'prefixes: for &pi in &order {
        let (prefix, restriction) = std::mem::replace(&mut parts[pi], (Default::default(), Restriction::Conflict));
        let Restriction::Formula(sub) = restriction else {
            continue;
        };
        stats.prefixes_tried += 1;
        let prefix_label = prefix.to_string();

        let mut centers: Vec<(usize, usize, Assignment)> = cover
            .codewords()
            .iter()
            .enumerate()
            .map(|(ci, word)| {
                let mut x = Assignment::zeros(n);
                for (&v, &bit) in top.iter().zip(prefix.bits()) {
                    x.set(v, bit);
                }
                for (&v, &bit) in free_vars.iter().zip(word) {
                    x.set(v, bit == 1);
                }
                (sub.count_unsat(&x), ci, x)
            })
            .collect();
        if let Some((_, _, x)) = centers.iter().find(|c| c.0 == 0) {
            found = Some(x.clone());
            break 'prefixes;
        }
        centers.sort_by_key(|c| c.0);

        for batch in centers.chunks(workers) {
            let jobs: Vec<Job> = batch
                .iter()
                .enumerate()
                .map(|(slot, (_, ci, x))| Job {
                    slot,
                    codeword: *ci,
                    formula: sub.clone(),
                    center: x.clone(),
                    seed: job_seed(cfg.seed, pi, *ci),
                })
                .collect();
            stats.dispatches += jobs.len();
            let results = dispatch(&plan, jobs, workers)?;
            for r in &results {
                absorb(&mut stats, &mut records, &plan, &prefix_label, r);
            }
            if let Some(model) = results.into_iter().find_map(|r| r.model) {
                found = Some(model);
                break 'prefixes;
            }
        }
    }

    if let Some(model) = &found {
        if !f.satisfied_by(model) {
            return Err(Error::invalid("internal error: lifted model does not satisfy the input"));
        }
    }
    stats.false_bound = if found.is_some() {
        0.0
    } else {
        let per_call = cfg.epsilon.powi(2 * plan.retries as i32);
        (stats.quantum_calls as f64 * per_call).min(1.0)
    };
    #[cfg(not(target_arch = "wasm32"))]
    {
        stats.wall_time = Some(started.elapsed());
    }
    Ok(SolveResult {
        status: if found.is_some() { Status::Sat } else { Status::False },
        model: found,
        stats,
        records,
    })
}

fn absorb(stats: &mut SolveStats, records: &mut Vec<StatsRecord>, plan: &Plan, prefix: &str, r: &JobResult) {
    stats.branches += r.stats.branches;
    stats.quantum_calls += r.stats.quantum_calls.len();
    stats.total_queries += r.stats.total_queries();
    match plan.mode {
        Mode::Classical => records.push(StatsRecord::Classical {
            prefix: prefix.to_string(),
            codeword: r.codeword,
            radius: plan.radius,
            branches: r.stats.branches,
            outcome: r.model.is_some().into(),
        }),
        Mode::Hybrid => records.extend(r.stats.quantum_calls.iter().map(|c| StatsRecord::Quantum {
            prefix: prefix.to_string(),
            codeword: r.codeword,
            radius: c.radius,
            l: c.l,
            queries: c.queries,
            attempts: c.attempts,
            branches: c.branches,
            outcome: c.success.into(),
        })),
    }
}

/// Runs one batch. The first success raises the shared cancel flag so the
/// remaining workers stop at their next branch. Results come back in slot
/// order.
fn dispatch(plan: &Plan, jobs: Vec<Job>, workers: usize) -> Result<Vec<JobResult>> {
    let cancel = AtomicBool::new(false);
    if workers == 1 || jobs.len() == 1 {
        let mut out = Vec::with_capacity(jobs.len());
        for job in &jobs {
            let r = plan.run(job, &cancel)?;
            let done = r.model.is_some();
            out.push(r);
            if done {
                break;
            }
        }
        return Ok(out);
    }

    let threads = workers.min(jobs.len());
    let (job_tx, job_rx) = crossbeam_channel::unbounded::<Job>();
    let (res_tx, res_rx) = crossbeam_channel::unbounded::<Result<JobResult>>();
    for job in jobs {
        job_tx.send(job).expect("receiver alive");
    }
    drop(job_tx);

    std::thread::scope(|scope| {
        for _ in 0..threads {
            let job_rx = job_rx.clone();
            let res_tx = res_tx.clone();
            let cancel = &cancel;
            scope.spawn(move || {
                for job in job_rx.iter() {
                    if cancel.load(Ordering::Relaxed) {
                        break;
                    }
                    let r = plan.run(&job, cancel);
                    if matches!(&r, Ok(JobResult { model: Some(_), .. })) {
                        cancel.store(true, Ordering::Relaxed);
                    }
                    if res_tx.send(r).is_err() {
                        break;
                    }
                }
            });
        }
    });
    drop(res_tx);

    let mut out = res_rx.iter().collect::<Result<Vec<_>>>()?;
    out.sort_by_key(|r| r.slot);
    Ok(out)
}

fn job_seed(seed: u64, prefix: usize, codeword: usize) -> u64 {
    let mut z = seed
        ^ (prefix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (codeword as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn binary_cover(len: usize, rho: f64, blocks: usize, cache: Option<&Path>) -> Result<BinaryCoveringCode> {
    if len == 0 {
        return BinaryCoveringCode::greedy(0, 0);
    }
    let radius = (rho * len as f64).floor() as usize;
    let Some(dir) = cache else {
        return BinaryCoveringCode::build(len, rho, blocks);
    };
    let path = dir.join(format!("binary-{len}-{radius}.cover"));
    if let Ok(text) = std::fs::read_to_string(&path) {
        let code = BinaryCoveringCode::from_text(&text)?;
        let usable = code.word_length() == len
            && code.radius() <= radius
            && (len > EXHAUSTIVE_VERIFY_LIMIT || code.verify().is_covered());
        if usable {
            return Ok(code);
        }
        log::warn!("ignoring unusable cover cache {}", path.display());
    }
    let code = BinaryCoveringCode::build(len, rho, blocks)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(&path, code.to_text())?;
    Ok(code)
}

fn descent_params(alphabet: u8, radius: usize, seed: u64, cache: Option<&Path>) -> Result<DescentParams> {
    let Some(dir) = cache else {
        return DescentParams::for_radius(alphabet, radius, seed);
    };
    let t = DescentParams::word_length_for(alphabet, radius);
    let s = t / alphabet as usize;
    let path = dir.join(format!("kary-{alphabet}-{t}-{s}.cover"));
    if let Ok(text) = std::fs::read_to_string(&path) {
        match KaryCoveringCode::from_text(&text).and_then(DescentParams::from_code) {
            Ok(dp) => return Ok(dp),
            Err(e) => log::warn!("ignoring cover cache {}: {e}", path.display()),
        }
    }
    let dp = DescentParams::for_radius(alphabet, radius, seed)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(&path, dp.code().to_text())?;
    Ok(dp)
}
