//! Potentials (window functions) and finite observable families.
//!
//! A potential of window `m` assigns a value to every admissible `m`-word and
//! is read on a longer word through its sliding windows.  Families share one
//! common window so that linear combinations and moment maps stay simple
//! table arithmetic.

use crate::error::{Error, Result};
use crate::scalar::{KahanSum, Scalar};
use crate::shift::{ShiftSpace, Symbol, Word, WordTable};

#[derive(Clone, Debug)]
pub struct Potential<T> {
    space: ShiftSpace,
    table: WordTable,
    values: Vec<T>,
}

impl<T: Scalar> Potential<T> {
    /// `values[i]` is the value on the i-th admissible `window`-word in
    /// lexicographic order.
    pub fn new(space: &ShiftSpace, window: usize, values: Vec<T>) -> Result<Self> {
        let table = WordTable::new(space, window)?;
        if values.len() != table.len() {
            return Err(Error::PotentialTableMismatch {
                window,
                detail: format!(
                    "{} values supplied for {} admissible words",
                    values.len(),
                    table.len()
                ),
            });
        }
        Ok(Potential {
            space: space.clone(),
            table,
            values,
        })
    }

    pub fn zero(space: &ShiftSpace) -> Result<Self> {
        let table = WordTable::new(space, 1)?;
        let values = vec![T::zero(); table.len()];
        Ok(Potential {
            space: space.clone(),
            table,
            values,
        })
    }

    pub fn constant(space: &ShiftSpace, c: T) -> Result<Self> {
        let table = WordTable::new(space, 1)?;
        let values = vec![c; table.len()];
        Ok(Potential {
            space: space.clone(),
            table,
            values,
        })
    }

    /// Indicator of the cylinder set `[word]` (window = word length).
    pub fn indicator(space: &ShiftSpace, word: &Word) -> Result<Self> {
        let table = WordTable::new(space, word.len())?;
        let idx = table
            .index_of(word.symbols())
            .ok_or_else(|| Error::InadmissibleWord {
                word: format!("{:?}", word.symbols()),
            })?;
        let mut values = vec![T::zero(); table.len()];
        values[idx] = T::one();
        Ok(Potential {
            space: space.clone(),
            table,
            values,
        })
    }

    pub fn space(&self) -> &ShiftSpace {
        &self.space
    }

    pub fn window(&self) -> usize {
        self.table.window()
    }

    pub fn words(&self) -> &[Word] {
        self.table.words()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value_by_index(&self, i: usize) -> T {
        self.values[i]
    }

    /// Value on an exact window; `None` when the window is inadmissible.
    pub fn value_of(&self, window: &[Symbol]) -> Option<T> {
        debug_assert_eq!(window.len(), self.window());
        self.table.index_of(window).map(|i| self.values[i])
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Sum of the first `count` sliding-window values along `word`.
    /// The word must carry at least `count + window - 1` symbols.
    pub fn birkhoff_sum(&self, word: &Word, count: usize) -> T {
        let s = word.symbols();
        let m = self.window();
        assert!(
            s.len() + 1 >= count + m,
            "word of length {} too short for {} windows of size {}",
            s.len(),
            count,
            m
        );
        let mut acc = KahanSum::new();
        if m == 1 {
            for x in 0..count {
                acc.add(self.values[self.table.index_of(&s[x..=x]).expect("admissible symbol")]);
            }
        } else {
            for x in 0..count {
                let v = self
                    .value_of(&s[x..x + m])
                    .expect("window of an admissible word is admissible");
                acc.add(v);
            }
        }
        acc.value()
    }

    /// Sum of the window values at every cyclic position of `word`.
    pub fn cyclic_birkhoff_sum(&self, word: &Word) -> T {
        let n = word.len();
        let m = self.window();
        let s = word.symbols();
        let mut acc = KahanSum::new();
        let mut buf: Vec<Symbol> = Vec::with_capacity(m);
        for x in 0..n {
            buf.clear();
            for i in 0..m {
                buf.push(s[(x + i) % n]);
            }
            let v = self
                .value_of(&buf)
                .expect("cyclic window of a cyclically admissible word is admissible");
            acc.add(v);
        }
        acc.value()
    }

    /// `self + sum_i coeffs[i] * others[i]`, expanded to the common window.
    pub fn linear_combination(space: &ShiftSpace, terms: &[(T, &Potential<T>)]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyFamily);
        }
        for (_, p) in terms {
            if p.space != *space {
                return Err(Error::SpaceMismatch);
            }
        }
        let window = terms.iter().map(|(_, p)| p.window()).max().unwrap();
        let table = WordTable::new(space, window)?;
        let mut values = vec![T::zero(); table.len()];
        for (i, w) in table.words().iter().enumerate() {
            let mut acc = T::zero();
            for (c, p) in terms {
                let v = p
                    .value_of(&w.symbols()[..p.window()])
                    .expect("prefix of an admissible word is admissible");
                acc += *c * v;
            }
            values[i] = acc;
        }
        Ok(Potential {
            space: space.clone(),
            table,
            values,
        })
    }
}

/// A finite list of potentials re-read on one shared window, i.e. the moment
/// coordinates used by rate functions and empirical point clouds.
#[derive(Clone, Debug)]
pub struct ObservableFamily<T> {
    space: ShiftSpace,
    table: WordTable,
    components: Vec<Vec<T>>,
}

impl<T: Scalar> ObservableFamily<T> {
    pub fn new(space: &ShiftSpace, potentials: &[Potential<T>]) -> Result<Self> {
        if potentials.is_empty() {
            return Err(Error::EmptyFamily);
        }
        for p in potentials {
            if p.space() != space {
                return Err(Error::SpaceMismatch);
            }
        }
        let window = potentials.iter().map(|p| p.window()).max().unwrap();
        let table = WordTable::new(space, window)?;
        let mut components = Vec::with_capacity(potentials.len());
        for p in potentials {
            let mut vals = Vec::with_capacity(table.len());
            for w in table.words() {
                vals.push(
                    p.value_of(&w.symbols()[..p.window()])
                        .expect("prefix of an admissible word is admissible"),
                );
            }
            components.push(vals);
        }
        Ok(ObservableFamily {
            space: space.clone(),
            table,
            components,
        })
    }

    /// Indicators of the admissible `n`-cylinders with the lexicographically
    /// last one dropped (its indicator is one minus the sum of the others, so
    /// keeping it would make the moment coordinates affinely dependent).
    pub fn cylinder_indicators(space: &ShiftSpace, n: usize) -> Result<Self> {
        let table = WordTable::new(space, n)?;
        let d = table.len().saturating_sub(1);
        if d == 0 {
            return Err(Error::invalid(
                "cylinder_indicators",
                format!(
                    "only {} admissible {n}-word(s); no free coordinate remains",
                    table.len()
                ),
            ));
        }
        let mut components = Vec::with_capacity(d);
        for i in 0..d {
            let mut vals = vec![T::zero(); table.len()];
            vals[i] = T::one();
            components.push(vals);
        }
        Ok(ObservableFamily {
            space: space.clone(),
            table,
            components,
        })
    }

    pub fn space(&self) -> &ShiftSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn window(&self) -> usize {
        self.table.window()
    }

    pub fn words(&self) -> &[Word] {
        self.table.words()
    }

    pub fn word_table(&self) -> &WordTable {
        &self.table
    }

    /// Value table of the i-th observable over the admissible window-words.
    pub fn component(&self, i: usize) -> &[T] {
        &self.components[i]
    }

    pub fn value(&self, i: usize, word_index: usize) -> T {
        self.components[i][word_index]
    }

    pub fn max_abs(&self) -> T {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// The potential `sum_i t[i] * g_i`.
    pub fn combination(&self, t: &[T]) -> Result<Potential<T>> {
        if t.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: t.len(),
            });
        }
        let mut values = vec![T::zero(); self.table.len()];
        for (coef, comp) in t.iter().zip(&self.components) {
            if *coef == T::zero() {
                continue;
            }
            for (v, c) in values.iter_mut().zip(comp) {
                *v += *coef * *c;
            }
        }
        Potential::new(&self.space, self.window(), values)
    }

    /// Per-observable averages of the first `count` sliding windows of `word`.
    pub fn averages_along(&self, word: &Word, count: usize) -> Vec<T> {
        let s = word.symbols();
        let m = self.window();
        assert!(s.len() + 1 >= count + m);
        let n_inv = T::one() / T::from_usize(count).unwrap();
        let mut sums = vec![KahanSum::new(); self.dim()];
        for x in 0..count {
            let idx = self
                .table
                .index_of(&s[x..x + m])
                .expect("window of an admissible word is admissible");
            for (acc, comp) in sums.iter_mut().zip(&self.components) {
                acc.add(comp[idx]);
            }
        }
        sums.iter().map(|a| a.value() * n_inv).collect()
    }

    /// Per-observable averages over all cyclic windows of `word`.
    pub fn cyclic_averages(&self, word: &Word) -> Vec<T> {
        let s = word.symbols();
        let n = s.len();
        let m = self.window();
        let n_inv = T::one() / T::from_usize(n).unwrap();
        let mut sums = vec![KahanSum::new(); self.dim()];
        let mut buf: Vec<Symbol> = Vec::with_capacity(m);
        for x in 0..n {
            buf.clear();
            for i in 0..m {
                buf.push(s[(x + i) % n]);
            }
            let idx = self
                .table
                .index_of(&buf)
                .expect("cyclic window of a cyclically admissible word is admissible");
            for (acc, comp) in sums.iter_mut().zip(&self.components) {
                acc.add(comp[idx]);
            }
        }
        sums.iter().map(|a| a.value() * n_inv).collect()
    }
}

/// Nearest-neighbour pair energy on the 2-D lattice, as a full `k x k` table
/// over ordered symbol pairs.
#[derive(Clone, Debug)]
pub struct PairPotential<T> {
    k: usize,
    values: Vec<T>,
}

impl<T: Scalar> PairPotential<T> {
    pub fn new(k: usize, rows: &[Vec<T>]) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyAlphabet);
        }
        if rows.len() != k {
            return Err(Error::NonSquareMatrix {
                rows: k,
                row: rows.len().min(k),
                cols: rows.first().map_or(0, Vec::len),
            });
        }
        let mut values = Vec::with_capacity(k * k);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::NonSquareMatrix {
                    rows: k,
                    row: r,
                    cols: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(PairPotential { k, values })
    }

    pub fn zero(k: usize) -> Result<Self> {
        Self::new(k, &vec![vec![T::zero(); k]; k])
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn value(&self, a: usize, b: usize) -> T {
        self.values[a * self.k + b]
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}
