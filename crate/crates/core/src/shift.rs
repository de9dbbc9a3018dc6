//! Shift spaces of finite type and their word combinatorics.
//!
//! A one-dimensional space is described by an alphabet `{0, .., k-1}` and a
//! 0/1 transition matrix; two-dimensional spaces are full shifts (used by the
//! lattice pressure routines).  All enumeration is in lexicographic order and
//! guarded by a configurable item cap, and counting questions are answered
//! exactly with `u128` matrix powers so enumerators can be cross-checked
//! without being run.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Symbol = u16;

pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 24;

/// A finite admissible word.  Ordering and hashing are lexicographic on the
/// symbol sequence.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl From<&[Symbol]> for Word {
    fn from(v: &[Symbol]) -> Self {
        Word(v.to_vec())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Structure {
    /// One-sided subshift of finite type with `matrix[a * k + b] = true` when
    /// the pair `ab` is allowed.
    OneDim { matrix: Vec<bool> },
    /// Full shift on the two-dimensional lattice.
    TwoDimFull,
}

#[derive(Clone, Debug)]
pub struct ShiftSpace {
    k: usize,
    structure: Structure,
    successors: Vec<Vec<Symbol>>,
    primitivity: Option<usize>,
    cap: usize,
}

impl PartialEq for ShiftSpace {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.structure == other.structure
    }
}

impl ShiftSpace {
    /// Builds a 1-D SFT from 0/1 rows.  Rejects non-square or non-binary
    /// input and any symbol with no successor or no predecessor (such a
    /// symbol appears in no bi-infinite point).
    pub fn sft(rows: &[Vec<u8>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::EmptyAlphabet);
        }
        if k > usize::from(Symbol::MAX) + 1 {
            return Err(Error::invalid(
                "alphabet",
                format!("alphabet size {k} exceeds the supported maximum of 65536"),
            ));
        }
        let mut matrix = vec![false; k * k];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::NonSquareMatrix {
                    rows: k,
                    row: r,
                    cols: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => matrix[r * k + c] = true,
                    other => {
                        return Err(Error::NonBinaryEntry {
                            row: r,
                            col: c,
                            value: f64::from(other),
                        })
                    }
                }
            }
        }
        Self::from_bool_matrix(k, matrix)
    }

    fn from_bool_matrix(k: usize, matrix: Vec<bool>) -> Result<Self> {
        for a in 0..k {
            if !matrix[a * k..(a + 1) * k].iter().any(|&x| x) {
                return Err(Error::StrandedSymbol {
                    symbol: a,
                    outgoing: true,
                });
            }
            if !(0..k).any(|r| matrix[r * k + a]) {
                return Err(Error::StrandedSymbol {
                    symbol: a,
                    outgoing: false,
                });
            }
        }
        let successors: Vec<Vec<Symbol>> = (0..k)
            .map(|a| {
                (0..k)
                    .filter(|&b| matrix[a * k + b])
                    .map(|b| b as Symbol)
                    .collect()
            })
            .collect();
        let primitivity = primitivity_index(k, &matrix);
        Ok(ShiftSpace {
            k,
            structure: Structure::OneDim { matrix },
            successors,
            primitivity,
            cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    /// Full 1-D shift on `k` symbols.
    pub fn full_shift(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyAlphabet);
        }
        Self::from_bool_matrix(k, vec![true; k * k])
    }

    /// Full shift on the two-dimensional lattice.
    pub fn full_shift_2d(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyAlphabet);
        }
        if k > usize::from(Symbol::MAX) + 1 {
            return Err(Error::invalid(
                "alphabet",
                format!("alphabet size {k} exceeds the supported maximum of 65536"),
            ));
        }
        Ok(ShiftSpace {
            k,
            structure: Structure::TwoDimFull,
            successors: Vec::new(),
            primitivity: Some(1),
            cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    pub fn with_enumeration_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn enumeration_cap(&self) -> usize {
        self.cap
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    pub fn dimension(&self) -> usize {
        match self.structure {
            Structure::OneDim { .. } => 1,
            Structure::TwoDimFull => 2,
        }
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// Smallest `m` with every entry of the m-th matrix power positive, or
    /// `None` when no power works (search is bounded by `(k-1)^2 + 1`, past
    /// which no new positivity can appear).
    pub fn primitivity_index(&self) -> Option<usize> {
        self.primitivity
    }

    pub fn is_primitive(&self) -> bool {
        self.primitivity.is_some()
    }

    fn one_dim_matrix(&self, op: &'static str) -> Result<&[bool]> {
        match &self.structure {
            Structure::OneDim { matrix } => Ok(matrix),
            Structure::TwoDimFull => Err(Error::OneDimensionalOnly { op }),
        }
    }

    #[inline]
    pub fn is_admissible_pair(&self, a: Symbol, b: Symbol) -> bool {
        match &self.structure {
            Structure::OneDim { matrix } => matrix[usize::from(a) * self.k + usize::from(b)],
            Structure::TwoDimFull => true,
        }
    }

    pub fn successors(&self, a: Symbol) -> &[Symbol] {
        &self.successors[usize::from(a)]
    }

    pub fn is_admissible(&self, word: &Word) -> bool {
        let s = word.symbols();
        if s.is_empty() || s.iter().any(|&a| usize::from(a) >= self.k) {
            return false;
        }
        s.windows(2).all(|p| self.is_admissible_pair(p[0], p[1]))
    }

    pub fn is_cyclically_admissible(&self, word: &Word) -> bool {
        let s = word.symbols();
        self.is_admissible(word) && self.is_admissible_pair(s[s.len() - 1], s[0])
    }

    /// Number of admissible words of length `n`, exactly.
    pub fn word_count(&self, n: usize) -> Result<u128> {
        self.one_dim_matrix("word_count")?;
        if n == 0 {
            return Ok(1);
        }
        if n == 1 {
            return Ok(self.k as u128);
        }
        let p = self.counting_power(n - 1)?;
        Ok(p.iter().fold(0u128, |acc, v| acc.saturating_add(*v)))
    }

    /// Number of cyclically admissible words of length `n` = trace of the
    /// n-th matrix power.
    pub fn periodic_count(&self, n: usize) -> Result<u128> {
        self.one_dim_matrix("periodic_count")?;
        let p = self.counting_power(n)?;
        Ok((0..self.k).fold(0u128, |acc, i| acc.saturating_add(p[i * self.k + i])))
    }

    fn counting_power(&self, n: usize) -> Result<Vec<u128>> {
        let matrix = self.one_dim_matrix("counting_power")?;
        let k = self.k;
        let base: Vec<u128> = matrix.iter().map(|&b| u128::from(b)).collect();
        let mut result: Vec<u128> = (0..k * k).map(|i| u128::from(i / k == i % k)).collect();
        let mut sq = base;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = mat_mul_u128(k, &result, &sq);
            }
            e >>= 1;
            if e > 0 {
                sq = mat_mul_u128(k, &sq, &sq);
            }
        }
        Ok(result)
    }

    fn check_cap(&self, required: u128) -> Result<()> {
        if required > self.cap as u128 {
            return Err(Error::EnumerationCap {
                required,
                cap: self.cap,
            });
        }
        Ok(())
    }

    /// All admissible words of length `n` in lexicographic order.
    pub fn admissible_words(&self, n: usize) -> Result<Vec<Word>> {
        self.one_dim_matrix("admissible_words")?;
        if n == 0 {
            return Err(Error::ZeroWindow);
        }
        self.check_cap(self.word_count(n)?)?;
        let mut out = Vec::new();
        let mut prefix: Vec<Symbol> = Vec::with_capacity(n);
        self.extend_words(&mut prefix, n, None, &mut out);
        Ok(out)
    }

    /// All cyclically admissible words of length `n` (one per periodic point
    /// of period dividing into the cycle structure), lexicographic order.
    pub fn periodic_points(&self, n: usize) -> Result<Vec<Word>> {
        self.one_dim_matrix("periodic_points")?;
        if n == 0 {
            return Err(Error::ZeroWindow);
        }
        let count = self.periodic_count(n)?;
        if count == 0 {
            return Err(Error::EmptyPeriodicSet { n });
        }
        self.check_cap(count)?;
        let mut out = Vec::new();
        let mut prefix: Vec<Symbol> = Vec::with_capacity(n);
        for first in 0..self.k as Symbol {
            prefix.push(first);
            self.extend_words(&mut prefix, n, Some(first), &mut out);
            prefix.pop();
        }
        Ok(out)
    }

    fn extend_words(
        &self,
        prefix: &mut Vec<Symbol>,
        n: usize,
        wrap_to: Option<Symbol>,
        out: &mut Vec<Word>,
    ) {
        if prefix.len() == n {
            if let Some(first) = wrap_to {
                if !self.is_admissible_pair(prefix[n - 1], first) {
                    return;
                }
            }
            out.push(Word(prefix.clone()));
            return;
        }
        if prefix.is_empty() {
            for a in 0..self.k as Symbol {
                prefix.push(a);
                self.extend_words(prefix, n, wrap_to, out);
                prefix.pop();
            }
        } else {
            let last = prefix[prefix.len() - 1];
            for &b in self.successors(last) {
                prefix.push(b);
                self.extend_words(prefix, n, wrap_to, out);
                prefix.pop();
            }
        }
    }

    /// One representative per admissible word of length `n + r`.  Distinct
    /// representatives are Bowen-separated at scale `2^-(r+1)` over `n`
    /// shifts, and every point agrees with one of them to that scale.
    pub fn separated_set_representatives(&self, n: usize, r: usize) -> Result<Vec<Word>> {
        self.one_dim_matrix("separated_set_representatives")?;
        if n == 0 {
            return Err(Error::ZeroWindow);
        }
        self.admissible_words(n + r)
    }

    /// Extends `word` to `target_len` symbols by repeatedly appending the
    /// least admissible successor.
    pub fn canonical_extension(&self, word: &Word, target_len: usize) -> Result<Word> {
        self.one_dim_matrix("canonical_extension")?;
        if !self.is_admissible(word) {
            return Err(Error::InadmissibleWord {
                word: format!("{:?}", word.symbols()),
            });
        }
        let mut s = word.symbols().to_vec();
        while s.len() < target_len {
            let last = s[s.len() - 1];
            let next = self.successors(last)[0];
            s.push(next);
        }
        Ok(Word(s))
    }

    /// Recodes to the shift on admissible `m`-blocks.
    pub fn higher_block_recode(&self, m: usize) -> Result<Recoding> {
        self.one_dim_matrix("higher_block_recode")?;
        if m == 0 {
            return Err(Error::ZeroWindow);
        }
        let blocks = self.admissible_words(m)?;
        let kk = blocks.len();
        if kk > usize::from(Symbol::MAX) + 1 {
            return Err(Error::invalid(
                "higher_block_recode",
                format!("recoded alphabet of {kk} blocks exceeds the supported maximum"),
            ));
        }
        let mut index: HashMap<Vec<Symbol>, Symbol> = HashMap::with_capacity(kk);
        for (i, b) in blocks.iter().enumerate() {
            index.insert(b.symbols().to_vec(), i as Symbol);
        }
        let mut matrix = vec![false; kk * kk];
        let mut step = vec![vec![None; self.k]; kk];
        for (u, bu) in blocks.iter().enumerate() {
            for a in 0..self.k as Symbol {
                // Overlap-and-append: admissibility of the overlap word is
                // automatic because both blocks are admissible.
                if m == 1 {
                    if !self.is_admissible_pair(bu.symbols()[0], a) {
                        continue;
                    }
                } else if !self.is_admissible_pair(bu.symbols()[m - 1], a) {
                    continue;
                }
                let mut next: Vec<Symbol> = bu.symbols()[1..].to_vec();
                next.push(a);
                if m == 1 {
                    next = vec![a];
                }
                if let Some(&v) = index.get(&next) {
                    matrix[u * kk + usize::from(v)] = true;
                    step[u][usize::from(a)] = Some(v);
                }
            }
        }
        let space = ShiftSpace::from_bool_matrix(kk, matrix)?.with_enumeration_cap(self.cap);
        Ok(Recoding {
            base: self.clone(),
            order: m,
            space,
            blocks,
            index,
            step,
        })
    }
}

fn mat_mul_u128(k: usize, a: &[u128], b: &[u128]) -> Vec<u128> {
    let mut out = vec![0u128; k * k];
    for i in 0..k {
        for l in 0..k {
            let v = a[i * k + l];
            if v == 0 {
                continue;
            }
            for j in 0..k {
                let add = v.saturating_mul(b[l * k + j]);
                out[i * k + j] = out[i * k + j].saturating_add(add);
            }
        }
    }
    out
}

/// Boolean matrices over u64 blocks, for the primitivity search.
#[derive(Clone)]
struct BoolMat {
    k: usize,
    stride: usize,
    bits: Vec<u64>,
}

impl BoolMat {
    fn from_flags(k: usize, flags: &[bool]) -> Self {
        let stride = k.div_ceil(64);
        let mut bits = vec![0u64; k * stride];
        for r in 0..k {
            for c in 0..k {
                if flags[r * k + c] {
                    bits[r * stride + c / 64] |= 1u64 << (c % 64);
                }
            }
        }
        BoolMat { k, stride, bits }
    }

    fn identity(k: usize) -> Self {
        let stride = k.div_ceil(64);
        let mut bits = vec![0u64; k * stride];
        for r in 0..k {
            bits[r * stride + r / 64] |= 1u64 << (r % 64);
        }
        BoolMat { k, stride, bits }
    }

    fn mul(&self, other: &BoolMat) -> BoolMat {
        let k = self.k;
        let stride = self.stride;
        let mut bits = vec![0u64; k * stride];
        for r in 0..k {
            let out_row = r * stride;
            for c in 0..k {
                if self.bits[out_row + c / 64] >> (c % 64) & 1 == 1 {
                    let src = c * stride;
                    for w in 0..stride {
                        bits[out_row + w] |= other.bits[src + w];
                    }
                }
            }
        }
        BoolMat { k, stride, bits }
    }

    fn all_positive(&self) -> bool {
        let k = self.k;
        for r in 0..k {
            let row = &self.bits[r * self.stride..(r + 1) * self.stride];
            let mut count = 0u32;
            for w in row {
                count += w.count_ones();
            }
            if (count as usize) < k {
                return false;
            }
        }
        true
    }

    fn pow(&self, mut e: usize) -> BoolMat {
        let mut result = BoolMat::identity(self.k);
        let mut sq = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        result
    }
}

/// Bounded search for the primitivity index.  Positivity of powers is
/// monotone once no symbol is stranded, so a binary search over exponents is
/// sound.
fn primitivity_index(k: usize, flags: &[bool]) -> Option<usize> {
    let bound = (k - 1) * (k - 1) + 1;
    let a = BoolMat::from_flags(k, flags);
    if !a.pow(bound).all_positive() {
        return None;
    }
    let (mut lo, mut hi) = (1usize, bound);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if a.pow(mid).all_positive() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

/// Higher-block recoding: a bijection between length-`L` words of the base
/// space (`L >= m`) and length-`L - m + 1` words of the block space.
#[derive(Clone, Debug)]
pub struct Recoding {
    base: ShiftSpace,
    order: usize,
    space: ShiftSpace,
    blocks: Vec<Word>,
    index: HashMap<Vec<Symbol>, Symbol>,
    step: Vec<Vec<Option<Symbol>>>,
}

impl Recoding {
    pub fn base(&self) -> &ShiftSpace {
        &self.base
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn space(&self) -> &ShiftSpace {
        &self.space
    }

    pub fn blocks(&self) -> &[Word] {
        &self.blocks
    }

    pub fn block(&self, state: Symbol) -> &Word {
        &self.blocks[usize::from(state)]
    }

    pub fn state_of(&self, block: &[Symbol]) -> Option<Symbol> {
        self.index.get(block).copied()
    }

    /// State reached from `state` after reading one more base symbol.
    #[inline]
    pub fn step(&self, state: Symbol, next: Symbol) -> Option<Symbol> {
        self.step[usize::from(state)][usize::from(next)]
    }

    pub fn encode(&self, word: &Word) -> Result<Word> {
        let s = word.symbols();
        let m = self.order;
        if s.len() < m {
            return Err(Error::invalid(
                "recode",
                format!(
                    "word of length {} is shorter than the block order {m}",
                    s.len()
                ),
            ));
        }
        let mut state = self
            .state_of(&s[0..m])
            .ok_or_else(|| Error::InadmissibleWord {
                word: format!("{:?}", &s[0..m]),
            })?;
        let mut out = vec![state];
        for &a in &s[m..] {
            state = self.step(state, a).ok_or_else(|| Error::InadmissibleWord {
                word: format!("{:?}", s),
            })?;
            out.push(state);
        }
        Ok(Word(out))
    }

    pub fn decode(&self, word: &Word) -> Word {
        let s = word.symbols();
        let m = self.order;
        let mut out: Vec<Symbol> = Vec::with_capacity(s.len() + m - 1);
        out.extend_from_slice(self.block(s[0]).symbols());
        for &state in &s[1..] {
            out.push(self.block(state).symbols()[m - 1]);
        }
        Word(out)
    }
}

/// Lexicographic table of the admissible `n`-words with reverse lookup.
#[derive(Clone, Debug)]
pub struct WordTable {
    n: usize,
    words: Vec<Word>,
    index: HashMap<Vec<Symbol>, usize>,
}

impl WordTable {
    pub fn new(space: &ShiftSpace, n: usize) -> Result<Self> {
        let words = space.admissible_words(n)?;
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            index.insert(w.symbols().to_vec(), i);
        }
        Ok(WordTable { n, words, index })
    }

    pub fn window(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, symbols: &[Symbol]) -> Option<usize> {
        self.index.get(symbols).copied()
    }
}

/// Finite sampling box on the lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBox {
    pub sides: Vec<usize>,
}

impl LatticeBox {
    pub fn new(sides: Vec<usize>) -> Self {
        LatticeBox { sides }
    }

    pub fn volume(&self) -> usize {
        self.sides.iter().product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> ShiftSpace {
        ShiftSpace::sft(&[vec![1, 1], vec![1, 0]]).unwrap()
    }

    fn words_as_vecs(words: &[Word]) -> Vec<Vec<Symbol>> {
        words.iter().map(|w| w.symbols().to_vec()).collect()
    }

    #[test]
    fn golden_mean_is_primitive_with_index_two() {
        assert_eq!(golden().primitivity_index(), Some(2));
    }

    #[test]
    fn full_shift_has_index_one() {
        assert_eq!(
            ShiftSpace::full_shift(2).unwrap().primitivity_index(),
            Some(1)
        );
        assert_eq!(
            ShiftSpace::full_shift(1).unwrap().primitivity_index(),
            Some(1)
        );
    }

    #[test]
    fn identity_matrix_is_not_primitive() {
        let s = ShiftSpace::sft(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(s.primitivity_index(), None);
    }

    #[test]
    fn swap_matrix_is_not_primitive() {
        let s = ShiftSpace::sft(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(s.primitivity_index(), None);
    }

    #[test]
    fn zero_row_is_rejected_with_the_row_named() {
        let err = ShiftSpace::sft(&[vec![0, 0], vec![1, 1]]).unwrap_err();
        match err {
            Error::StrandedSymbol {
                symbol: 0,
                outgoing: true,
            } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn zero_column_is_rejected() {
        let err = ShiftSpace::sft(&[vec![1, 0], vec![1, 0]]).unwrap_err();
        match err {
            Error::StrandedSymbol {
                symbol: 1,
                outgoing: false,
            } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_binary_entries_are_rejected() {
        let err = ShiftSpace::sft(&[vec![1, 2], vec![1, 0]]).unwrap_err();
        assert!(matches!(err, Error::NonBinaryEntry { row: 0, col: 1, .. }));
    }

    #[test]
    fn golden_mean_words_of_length_three() {
        let words = golden().admissible_words(3).unwrap();
        assert_eq!(
            words_as_vecs(&words),
            vec![
                vec![0, 0, 0],
                vec![0, 0, 1],
                vec![0, 1, 0],
                vec![1, 0, 0],
                vec![1, 0, 1],
            ]
        );
    }

    #[test]
    fn word_counts_match_matrix_powers() {
        let g = golden();
        // Fibonacci counts: 2, 3, 5, 8, 13, ...
        let expect = [2u128, 3, 5, 8, 13, 21, 34, 55];
        for (i, &e) in expect.iter().enumerate() {
            assert_eq!(g.word_count(i + 1).unwrap(), e);
            assert_eq!(g.admissible_words(i + 1).unwrap().len() as u128, e);
        }
    }

    #[test]
    fn golden_mean_periodic_points_of_period_three() {
        let pts = golden().periodic_points(3).unwrap();
        assert_eq!(
            words_as_vecs(&pts),
            vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]
        );
        assert_eq!(golden().periodic_count(3).unwrap(), 4);
    }

    #[test]
    fn periodic_counts_follow_the_lucas_sequence() {
        let g = golden();
        // trace A^n for the golden mean: 1, 3, 4, 7, 11, 18, 29, ...
        let expect = [1u128, 3, 4, 7, 11, 18, 29, 47, 76, 123];
        for (i, &e) in expect.iter().enumerate() {
            assert_eq!(g.periodic_count(i + 1).unwrap(), e);
        }
    }

    #[test]
    fn empty_periodic_set_is_flagged() {
        let s = ShiftSpace::sft(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert!(matches!(
            s.periodic_points(3).unwrap_err(),
            Error::EmptyPeriodicSet { n: 3 }
        ));
    }

    #[test]
    fn separated_representatives_are_all_longer_words() {
        let g = golden();
        let reps = g.separated_set_representatives(2, 1).unwrap();
        assert_eq!(reps.len(), 5);
        assert_eq!(reps, g.admissible_words(3).unwrap());
    }

    #[test]
    fn canonical_extension_prefers_least_symbols() {
        let g = golden();
        let w = g.canonical_extension(&Word::new(vec![0, 1]), 4).unwrap();
        assert_eq!(w.symbols(), &[0, 1, 0, 0]);
        let f = ShiftSpace::full_shift(2).unwrap();
        let w = f.canonical_extension(&Word::new(vec![1]), 3).unwrap();
        assert_eq!(w.symbols(), &[1, 0, 0]);
    }

    #[test]
    fn recode_golden_mean_to_pairs() {
        let rec = golden().higher_block_recode(2).unwrap();
        assert_eq!(
            words_as_vecs(rec.blocks()),
            vec![vec![0, 0], vec![0, 1], vec![1, 0]]
        );
        let m = match rec.space().structure() {
            Structure::OneDim { matrix } => matrix.clone(),
            _ => unreachable!(),
        };
        let as_u8: Vec<u8> = m.iter().map(|&b| u8::from(b)).collect();
        assert_eq!(as_u8, vec![1, 1, 0, 0, 0, 1, 1, 1, 0]);
    }

    #[test]
    fn recode_round_trips_words() {
        let g = golden();
        for m in 1..=3 {
            let rec = g.higher_block_recode(m).unwrap();
            for n in m..=6 {
                let originals = g.admissible_words(n).unwrap();
                let coded = rec.space().admissible_words(n - m + 1).unwrap();
                assert_eq!(originals.len(), coded.len());
                for w in &originals {
                    let enc = rec.encode(w).unwrap();
                    assert_eq!(&rec.decode(&enc), w);
                }
            }
        }
    }

    #[test]
    fn recoded_space_of_a_primitive_space_is_primitive() {
        let rec = golden().higher_block_recode(3).unwrap();
        assert!(rec.space().is_primitive());
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let g = golden().with_enumeration_cap(4);
        match g.admissible_words(3).unwrap_err() {
            Error::EnumerationCap {
                required: 5,
                cap: 4,
            } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn two_dimensional_spaces_reject_word_enumeration() {
        let s = ShiftSpace::full_shift_2d(2).unwrap();
        assert!(matches!(
            s.admissible_words(3).unwrap_err(),
            Error::OneDimensionalOnly { .. }
        ));
        assert!(s.is_primitive());
    }

    #[test]
    fn word_table_round_trips_indices() {
        let t = WordTable::new(&golden(), 3).unwrap();
        assert_eq!(t.len(), 5);
        for (i, w) in t.words().iter().enumerate() {
            assert_eq!(t.index_of(w.symbols()), Some(i));
        }
        assert_eq!(t.index_of(&[1, 1, 0]), None);
    }
}
