//! Covering codes over the assignment space `{0,1}^m` and over the
//! flip-choice space `{1..K}^t`.
//!
//! Words are stored as `Vec<u8>`: binary words hold 0/1, K-ary words hold
//! symbols `1..=K`. Both kinds serialize to the same line format:
//!
//! ```text
//! cover <alphabet> <word_length> <radius> <count>
//! 0 1 1 0
//! ...
//! ```

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest block length the greedy binary construction will enumerate.
pub const MAX_GREEDY_BLOCK: usize = 24;
/// Largest K-ary space the randomized construction will enumerate.
pub const MAX_KARY_SPACE: u64 = 1_000_000;
/// Binary codes at most this long are verified exhaustively after the
/// product step; longer ones rely on their verified blocks.
pub const EXHAUSTIVE_VERIFY_LIMIT: usize = 20;

pub fn hamming_distance<T: PartialEq>(a: &[T], b: &[T]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

/// Base-2 binary entropy.
pub fn binary_entropy(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid(format!("entropy needs 0 < rho < 1, got {rho}")));
    }
    Ok(-rho * rho.log2() - (1.0 - rho) * (1.0 - rho).log2())
}

/// All words of a fixed length over the symbols `first..first + size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WordSpace {
    first: u8,
    size: u8,
    len: usize,
}

impl WordSpace {
    pub fn binary(len: usize) -> Self {
        WordSpace {
            first: 0,
            size: 2,
            len,
        }
    }

    pub fn kary(alphabet: u8, len: usize) -> Self {
        WordSpace {
            first: 1,
            size: alphabet,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.cardinality() == 0
    }

    pub fn alphabet(&self) -> u8 {
        self.size
    }

    pub fn cardinality(&self) -> u128 {
        (self.size as u128).saturating_pow(self.len as u32)
    }

    /// The word with the given lexicographic rank.
    pub fn word_at(&self, mut index: u64) -> Vec<u8> {
        let base = self.size as u64;
        let mut word = vec![self.first; self.len];
        for slot in word.iter_mut().rev() {
            *slot = self.first + (index % base) as u8;
            index /= base;
        }
        word
    }

    pub fn index_of(&self, word: &[u8]) -> u64 {
        word.iter()
            .fold(0u64, |acc, &s| acc * self.size as u64 + (s - self.first) as u64)
    }

    pub fn contains(&self, word: &[u8]) -> bool {
        word.len() == self.len
            && word
                .iter()
                .all(|&s| s >= self.first && s - self.first < self.size)
    }

    /// Lexicographic enumeration.
    pub fn iter(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        let total = self.cardinality().min(u64::MAX as u128) as u64;
        (0..total).map(move |i| self.word_at(i))
    }

    /// Ranks of every word within distance `radius` of the word ranked
    /// `center`, including `center` itself.
    fn ball_indices(&self, center: u64, radius: usize, out: &mut Vec<u64>) {
        out.clear();
        let base = self.size as u64;
        let mut place = vec![1u64; self.len];
        for i in (0..self.len.saturating_sub(1)).rev() {
            place[i] = place[i + 1] * base;
        }
        let digits: Vec<u64> = (0..self.len).map(|i| (center / place[i]) % base).collect();
        fn rec(
            pos: usize,
            budget: usize,
            current: u64,
            digits: &[u64],
            place: &[u64],
            base: u64,
            out: &mut Vec<u64>,
        ) {
            if pos == digits.len() {
                out.push(current);
                return;
            }
            rec(pos + 1, budget, current, digits, place, base, out);
            if budget == 0 {
                return;
            }
            for symbol in 0..base {
                if symbol == digits[pos] {
                    continue;
                }
                let moved = current - digits[pos] * place[pos] + symbol * place[pos];
                rec(pos + 1, budget - 1, moved, digits, place, base, out);
            }
        }
        rec(0, radius, center, &digits, &place, base, out);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coverage {
    Covered,
    /// The first word (in lexicographic order) no codeword reaches.
    Uncovered(Vec<u8>),
}

impl Coverage {
    pub fn is_covered(&self) -> bool {
        matches!(self, Coverage::Covered)
    }
}

/// Exhaustively checks that every word of `space` lies within `radius` of
/// some codeword.
pub fn verify_cover(codewords: &[Vec<u8>], radius: usize, space: &WordSpace) -> Coverage {
    for word in space.iter() {
        let reached = codewords.iter().any(|c| {
            c.len() == word.len()
                && c.iter().zip(&word).filter(|(a, b)| a != b).count() <= radius
        });
        if !reached {
            return Coverage::Uncovered(word);
        }
    }
    Coverage::Covered
}

/// Shared read access to both code kinds.
pub trait CoveringCode {
    fn space(&self) -> WordSpace;
    fn radius(&self) -> usize;
    fn codewords(&self) -> &[Vec<u8>];

    fn len(&self) -> usize {
        self.codewords().len()
    }

    fn is_empty(&self) -> bool {
        self.codewords().is_empty()
    }

    fn verify(&self) -> Coverage {
        verify_cover(self.codewords(), self.radius(), &self.space())
    }

    fn to_text(&self) -> String {
        let space = self.space();
        let mut out = format!(
            "cover {} {} {} {}\n",
            space.alphabet(),
            space.len(),
            self.radius(),
            self.len()
        );
        for word in self.codewords() {
            let line: Vec<String> = word.iter().map(u8::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryCoveringCode {
    word_length: usize,
    radius: usize,
    codewords: Vec<Vec<u8>>,
}

impl CoveringCode for BinaryCoveringCode {
    fn space(&self) -> WordSpace {
        WordSpace::binary(self.word_length)
    }
    fn radius(&self) -> usize {
        self.radius
    }
    fn codewords(&self) -> &[Vec<u8>] {
        &self.codewords
    }
}

impl BinaryCoveringCode {
    pub fn word_length(&self) -> usize {
        self.word_length
    }

    /// Blockwise cover of `{0,1}^word_length`: the word is cut into
    /// `blocks` equal pieces, each piece gets a greedy cover of radius
    /// `⌊rho · block_len⌋`, and the result is their direct product.
    pub fn build(word_length: usize, rho: f64, blocks: usize) -> Result<Self> {
        if !(rho > 0.0 && rho < 0.5) {
            return Err(Error::invalid(format!(
                "cover radius fraction must lie in (0, 1/2), got {rho}"
            )));
        }
        if blocks == 0 || !word_length.is_multiple_of(blocks) {
            return Err(Error::invalid(format!(
                "{blocks} blocks do not divide word length {word_length}"
            )));
        }
        let block_len = word_length / blocks;
        let block_radius = (rho * block_len as f64).floor() as usize;
        Self::blockwise(word_length, block_radius, blocks)
    }

    /// Single-block greedy cover with an explicit radius.
    pub fn greedy(word_length: usize, radius: usize) -> Result<Self> {
        Self::blockwise(word_length, radius, 1)
    }

    fn blockwise(word_length: usize, block_radius: usize, blocks: usize) -> Result<Self> {
        let block_len = word_length / blocks;
        if block_len > MAX_GREEDY_BLOCK {
            return Err(Error::ScaleExceeded {
                size: 1u128 << block_len.min(127),
                limit: 1u128 << MAX_GREEDY_BLOCK,
            });
        }
        let block = greedy_block(block_len, block_radius);
        debug_assert!(
            verify_cover(&block, block_radius, &WordSpace::binary(block_len)).is_covered()
        );
        let mut codewords: Vec<Vec<u8>> = vec![Vec::with_capacity(word_length)];
        for _ in 0..blocks {
            codewords = codewords
                .iter()
                .flat_map(|head| {
                    block.iter().map(move |tail| {
                        let mut w = head.clone();
                        w.extend_from_slice(tail);
                        w
                    })
                })
                .collect();
        }
        let code = BinaryCoveringCode {
            word_length,
            radius: block_radius * blocks,
            codewords,
        };
        if word_length <= EXHAUSTIVE_VERIFY_LIMIT {
            assert!(code.verify().is_covered(), "greedy cover left a word uncovered");
        }
        Ok(code)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let parsed = parse_code_text(text)?;
        if parsed.alphabet != 2 {
            return Err(Error::parse(1, "binary cover must have alphabet 2"));
        }
        let code = BinaryCoveringCode {
            word_length: parsed.word_length,
            radius: parsed.radius,
            codewords: parsed.codewords,
        };
        if !code.codewords.iter().all(|w| code.space().contains(w)) {
            return Err(Error::parse(1, "codeword symbol outside {0,1}"));
        }
        Ok(code)
    }
}

/// Convenience wrapper with the argument order used by the solver config.
pub fn build_binary_cover(word_length: usize, rho: f64, blocks: usize) -> Result<BinaryCoveringCode> {
    BinaryCoveringCode::build(word_length, rho, blocks)
}

/// Lazy greedy set cover of `{0,1}^len` by radius-`radius` balls. Gains only
/// shrink as words get covered, so a popped entry whose refreshed gain still
/// tops the heap is the true maximum. Ties go to the smallest word.
fn greedy_block(len: usize, radius: usize) -> Vec<Vec<u8>> {
    let total = 1usize << len;
    let masks: Vec<u32> = (0..total as u32)
        .filter(|m| (m.count_ones() as usize) <= radius)
        .collect();
    let mut covered = vec![false; total];
    let mut remaining = total;
    let mut heap: BinaryHeap<(usize, Reverse<u32>)> =
        (0..total as u32).map(|w| (masks.len(), Reverse(w))).collect();
    let mut chosen = Vec::new();

    while remaining > 0 {
        let (_, Reverse(word)) = heap.pop().expect("uncovered words remain");
        let gain = masks
            .iter()
            .filter(|&&m| !covered[(word ^ m) as usize])
            .count();
        if gain == 0 {
            continue;
        }
        if let Some(&(next, Reverse(next_word))) = heap.peek() {
            if next > gain || (next == gain && next_word < word) {
                heap.push((gain, Reverse(word)));
                continue;
            }
        }
        for &m in &masks {
            let w = (word ^ m) as usize;
            if !covered[w] {
                covered[w] = true;
                remaining -= 1;
            }
        }
        chosen.push(word);
    }

    chosen.sort_unstable();
    chosen
        .into_iter()
        .map(|w| (0..len).map(|i| ((w >> (len - 1 - i)) & 1) as u8).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KaryCoveringCode {
    alphabet: u8,
    word_length: usize,
    radius: usize,
    codewords: Vec<Vec<u8>>,
    size_bound: u64,
    repaired: bool,
}

impl CoveringCode for KaryCoveringCode {
    fn space(&self) -> WordSpace {
        WordSpace::kary(self.alphabet, self.word_length)
    }
    fn radius(&self) -> usize {
        self.radius
    }
    fn codewords(&self) -> &[Vec<u8>] {
        &self.codewords
    }
}

impl KaryCoveringCode {
    /// Random code of the guaranteed size, repaired until it covers.
    ///
    /// Draws `⌈t ln K · K^t / (C(t,s) (K-1)^s)⌉` distinct words uniformly,
    /// then adds the first uncovered word until none is left. `repaired()`
    /// reports whether the random draw alone fell short.
    pub fn build(alphabet: u8, word_length: usize, radius: usize, seed: u64) -> Result<Self> {
        if alphabet < 2 {
            return Err(Error::invalid("alphabet must have at least 2 symbols"));
        }
        if radius > word_length {
            return Err(Error::invalid(format!(
                "radius {radius} exceeds word length {word_length}"
            )));
        }
        let space = WordSpace::kary(alphabet, word_length);
        let total = space.cardinality();
        if total > MAX_KARY_SPACE as u128 {
            return Err(Error::ScaleExceeded {
                size: total,
                limit: MAX_KARY_SPACE as u128,
            });
        }
        let total = total as u64;
        let size_bound = kary_size_bound(alphabet, word_length, radius);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws = size_bound.min(total) as usize;
        let mut picks: Vec<u64> = rand::seq::index::sample(&mut rng, total as usize, draws)
            .into_iter()
            .map(|i| i as u64)
            .collect();
        picks.sort_unstable();

        let mut covered = vec![false; total as usize];
        let mut ball = Vec::new();
        let mut mark = |center: u64, covered: &mut Vec<bool>| {
            space.ball_indices(center, radius, &mut ball);
            for &i in &ball {
                covered[i as usize] = true;
            }
        };
        for &p in &picks {
            mark(p, &mut covered);
        }
        let mut repaired = false;
        let mut cursor = 0usize;
        while let Some(offset) = covered[cursor..].iter().position(|c| !c) {
            let hole = (cursor + offset) as u64;
            repaired = true;
            picks.push(hole);
            mark(hole, &mut covered);
            cursor += offset;
        }
        picks.sort_unstable();

        Ok(KaryCoveringCode {
            alphabet,
            word_length,
            radius,
            codewords: picks.into_iter().map(|i| space.word_at(i)).collect(),
            size_bound,
            repaired,
        })
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn word_length(&self) -> usize {
        self.word_length
    }

    /// The random-construction size guarantee for these parameters.
    pub fn size_bound(&self) -> u64 {
        self.size_bound
    }

    /// True when the initial random draw did not cover and words were added.
    pub fn repaired(&self) -> bool {
        self.repaired
    }

    pub fn within_bound(&self) -> bool {
        self.codewords.len() as u64 <= self.size_bound
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let parsed = parse_code_text(text)?;
        if parsed.alphabet < 2 || parsed.alphabet > u8::MAX as usize {
            return Err(Error::parse(1, "alphabet out of range"));
        }
        let alphabet = parsed.alphabet as u8;
        let size_bound = kary_size_bound(alphabet, parsed.word_length, parsed.radius);
        let space = WordSpace::kary(alphabet, parsed.word_length);
        if !parsed.codewords.iter().all(|w| space.contains(w)) {
            return Err(Error::parse(1, "codeword symbol outside 1..=K"));
        }
        let repaired = parsed.codewords.len() as u64 > size_bound;
        Ok(KaryCoveringCode {
            alphabet,
            word_length: parsed.word_length,
            radius: parsed.radius,
            codewords: parsed.codewords,
            size_bound,
            repaired,
        })
    }
}

pub fn build_kary_cover(alphabet: u8, word_length: usize, radius: usize, seed: u64) -> Result<KaryCoveringCode> {
    KaryCoveringCode::build(alphabet, word_length, radius, seed)
}

/// `⌈t ln K · K^t / (C(t,s) (K-1)^s)⌉`.
pub fn kary_size_bound(alphabet: u8, word_length: usize, radius: usize) -> u64 {
    let k = alphabet as f64;
    let t = word_length as f64;
    let sphere = binomial(word_length, radius) * (k - 1.0).powi(radius as i32);
    let bound = (t * k.ln() * k.powi(word_length as i32) / sphere).ceil();
    // t = 0 gives 0, but the single empty word still needs one codeword.
    (bound as u64).max(1)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

struct CodeText {
    alphabet: usize,
    word_length: usize,
    radius: usize,
    codewords: Vec<Vec<u8>>,
}

fn parse_code_text(text: &str) -> Result<CodeText> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty cover file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let nums: Vec<usize> = match fields.as_slice() {
        ["cover", rest @ ..] if rest.len() == 4 => rest
            .iter()
            .map(|f| f.parse().map_err(|_| Error::parse(1, format!("bad number '{f}'"))))
            .collect::<Result<_>>()?,
        _ => return Err(Error::parse(1, "expected 'cover <alphabet> <length> <radius> <count>'")),
    };
    let (alphabet, word_length, radius, count) = (nums[0], nums[1], nums[2], nums[3]);
    let mut codewords = Vec::with_capacity(count);
    for _ in 0..count {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| Error::parse(count + 1, "fewer codewords than declared"))?;
        let word = line
            .split_whitespace()
            .map(|s| {
                s.parse::<u8>()
                    .map_err(|_| Error::parse(idx + 1, format!("bad symbol '{s}'")))
            })
            .collect::<Result<Vec<u8>>>()?;
        if word.len() != word_length {
            return Err(Error::parse(idx + 1, "codeword has the wrong length"));
        }
        codewords.push(word);
    }
    Ok(CodeText {
        alphabet,
        word_length,
        radius,
        codewords,
    })
}
