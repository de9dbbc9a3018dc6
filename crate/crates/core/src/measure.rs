//! Shift-invariant measures represented exactly: stationary Markov chains on
//! higher-block states, finite convex mixtures of those, and empirical
//! measures of periodic orbits.
//!
//! Entropy rates are in nats.  Mixtures keep their components, so entropy and
//! integration are affine by construction rather than by approximation.

use crate::error::{Error, Result};
use crate::linalg::{solve_in_place, DenseMatrix};
use crate::potential::{ObservableFamily, Potential};
use crate::scalar::{KahanSum, Scalar};
use crate::shift::{Recoding, ShiftSpace, Symbol, Word};

pub const STOCHASTIC_TOL: f64 = 1e-12;
pub const STATIONARY_TOL: f64 = 1e-12;

/// Unique stationary vector of a row-stochastic matrix, solved directly by
/// Gaussian elimination on `(Q^T - I) pi = 0` with the normalization row.
/// Requires irreducibility on the support; otherwise the trapped component
/// is reported.
pub fn stationary_distribution<T: Scalar>(rows: &[Vec<T>]) -> Result<Vec<T>> {
    let d = rows.len();
    let tol = T::tolerance(STOCHASTIC_TOL);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(Error::NonSquareMatrix {
                rows: d,
                row: r,
                cols: row.len(),
            });
        }
        let mut sum = KahanSum::new();
        for &v in row {
            if v < T::zero() {
                return Err(Error::invalid(
                    "stochastic matrix",
                    format!("negative entry {v} in row {r}"),
                ));
            }
            sum.add(v);
        }
        if (sum.value() - T::one()).abs() > tol {
            return Err(Error::NotStochastic {
                row: r,
                sum: sum.value().as_f64(),
                tol: STOCHASTIC_TOL,
            });
        }
    }
    if let Some(component) = trapped_component(rows) {
        return Err(Error::ReducibleChain { component });
    }

    // (Q^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = DenseMatrix::zeros(d);
    for u in 0..d {
        for v in 0..d {
            a.set(v, u, rows[u][v]);
        }
    }
    for u in 0..d {
        let x = a.at(u, u) - T::one();
        a.set(u, u, x);
    }
    for c in 0..d {
        a.set(d - 1, c, T::one());
    }
    let mut b = vec![T::zero(); d];
    b[d - 1] = T::one();
    solve_in_place(&mut a, &mut b)?;

    let clamp = T::tolerance(STATIONARY_TOL);
    for v in b.iter_mut() {
        if *v < T::zero() {
            if *v < -clamp {
                return Err(Error::StationaryResidual {
                    residual: (-*v).as_f64(),
                    tol: STATIONARY_TOL,
                });
            }
            *v = T::zero();
        }
    }
    let residual = stationary_residual(rows, &b);
    if residual > T::tolerance(STATIONARY_TOL) {
        return Err(Error::StationaryResidual {
            residual: residual.as_f64(),
            tol: STATIONARY_TOL,
        });
    }
    Ok(b)
}

fn stationary_residual<T: Scalar>(rows: &[Vec<T>], pi: &[T]) -> T {
    let d = rows.len();
    let mut worst = T::zero();
    for v in 0..d {
        let mut acc = KahanSum::new();
        for u in 0..d {
            acc.add(pi[u] * rows[u][v]);
        }
        worst = worst.max((acc.value() - pi[v]).abs());
    }
    let mut total = KahanSum::new();
    for &p in pi {
        total.add(p);
    }
    worst.max((total.value() - T::one()).abs())
}

/// First closed proper subset of states under the support graph, if any.
fn trapped_component<T: Scalar>(rows: &[Vec<T>]) -> Option<Vec<usize>> {
    let d = rows.len();
    for start in 0..d {
        let mut seen = vec![false; d];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for v in 0..d {
                if rows[u][v] > T::zero() && !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        if count < d {
            return Some((0..d).filter(|&i| seen[i]).collect());
        }
    }
    None
}

/// Stationary Markov chain of some order `m`: states are the admissible
/// `m`-words of the base space, transitions follow block overlaps.
#[derive(Clone, Debug)]
pub struct MarkovMeasure<T> {
    recoding: Recoding,
    transition: Vec<Vec<T>>,
    stationary: Vec<T>,
}

impl<T: Scalar> MarkovMeasure<T> {
    pub fn new(
        space: &ShiftSpace,
        order: usize,
        transition: Vec<Vec<T>>,
        stationary: Option<Vec<T>>,
    ) -> Result<Self> {
        let recoding = space.higher_block_recode(order)?;
        Self::from_recoding(recoding, transition, stationary)
    }

    pub fn from_recoding(
        recoding: Recoding,
        transition: Vec<Vec<T>>,
        stationary: Option<Vec<T>>,
    ) -> Result<Self> {
        let d = recoding.blocks().len();
        if transition.len() != d {
            return Err(Error::NonSquareMatrix {
                rows: d,
                row: transition.len().min(d),
                cols: transition.first().map_or(0, Vec::len),
            });
        }
        let tol = T::tolerance(STOCHASTIC_TOL);
        for (u, row) in transition.iter().enumerate() {
            if row.len() != d {
                return Err(Error::NonSquareMatrix {
                    rows: d,
                    row: u,
                    cols: row.len(),
                });
            }
            let mut sum = KahanSum::new();
            for (v, &q) in row.iter().enumerate() {
                if q < T::zero() {
                    return Err(Error::invalid(
                        "transition matrix",
                        format!("negative probability at ({u}, {v})"),
                    ));
                }
                if q > T::zero()
                    && !recoding
                        .space()
                        .is_admissible_pair(u as Symbol, v as Symbol)
                {
                    return Err(Error::UnsupportedTransition {
                        row: u,
                        col: v,
                        value: q.as_f64(),
                    });
                }
                sum.add(q);
            }
            if (sum.value() - T::one()).abs() > tol {
                return Err(Error::NotStochastic {
                    row: u,
                    sum: sum.value().as_f64(),
                    tol: STOCHASTIC_TOL,
                });
            }
        }
        let stationary = match stationary {
            Some(pi) => {
                if pi.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: pi.len(),
                    });
                }
                if pi.iter().any(|&p| p < T::zero()) {
                    return Err(Error::invalid(
                        "stationary vector",
                        "negative entry".to_string(),
                    ));
                }
                let residual = stationary_residual(&transition, &pi);
                if residual > T::tolerance(STATIONARY_TOL) {
                    return Err(Error::NotStationary {
                        residual: residual.as_f64(),
                        tol: STATIONARY_TOL,
                    });
                }
                pi
            }
            None => stationary_distribution(&transition)?,
        };
        Ok(MarkovMeasure {
            recoding,
            transition,
            stationary,
        })
    }

    /// Point mass on the orbit of the periodic word `cycle`, encoded as a
    /// chain of order `|cycle|` with deterministic transitions.  States the
    /// orbit never visits get the lexicographically least admissible row so
    /// the matrix stays stochastic.
    pub fn dirac_orbit(space: &ShiftSpace, cycle: &Word) -> Result<Self> {
        if !space.is_cyclically_admissible(cycle) {
            return Err(Error::InadmissibleWord {
                word: format!("{:?}", cycle.symbols()),
            });
        }
        let n = cycle.len();
        let recoding = space.higher_block_recode(n)?;
        let d = recoding.blocks().len();
        let mut transition = vec![vec![T::zero(); d]; d];
        let mut visits = vec![0usize; d];
        let s = cycle.symbols();
        let window_at = |x: usize| -> Vec<Symbol> { (0..n).map(|i| s[(x + i) % n]).collect() };
        for x in 0..n {
            let here = recoding
                .state_of(&window_at(x))
                .expect("cyclic window of an admissible cycle");
            let next = recoding
                .state_of(&window_at((x + 1) % n))
                .expect("cyclic window of an admissible cycle");
            transition[usize::from(here)][usize::from(next)] = T::one();
            visits[usize::from(here)] += 1;
        }
        for (u, row) in transition.iter_mut().enumerate() {
            if visits[u] == 0 {
                let target = recoding.space().successors(u as Symbol)[0];
                row[usize::from(target)] = T::one();
            }
        }
        let n_t = T::from_usize(n).unwrap();
        let stationary: Vec<T> = visits
            .iter()
            .map(|&c| T::from_usize(c).unwrap() / n_t)
            .collect();
        Self::from_recoding(recoding, transition, Some(stationary))
    }

    pub fn space(&self) -> &ShiftSpace {
        self.recoding.base()
    }

    pub fn order(&self) -> usize {
        self.recoding.order()
    }

    pub fn recoding(&self) -> &Recoding {
        &self.recoding
    }

    pub fn states(&self) -> &[Word] {
        self.recoding.blocks()
    }

    pub fn transition(&self) -> &[Vec<T>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[T] {
        &self.stationary
    }

    /// Entropy rate in nats, clamped at zero against rounding.
    pub fn entropy_rate(&self) -> T {
        let mut acc = KahanSum::new();
        for (u, row) in self.transition.iter().enumerate() {
            let pu = self.stationary[u];
            if pu == T::zero() {
                continue;
            }
            for &q in row {
                if q > T::zero() {
                    acc.add(-pu * q * q.ln());
                }
            }
        }
        acc.value().max(T::zero())
    }

    /// Probability of the cylinder `[word]`; zero off the admissible set.
    pub fn cylinder_probability(&self, word: &Word) -> T {
        let s = word.symbols();
        let m = self.order();
        if s.is_empty() {
            return T::one();
        }
        if s.len() < m {
            // Marginalize the block distribution over extensions.
            let mut acc = KahanSum::new();
            for (i, block) in self.recoding.blocks().iter().enumerate() {
                if &block.symbols()[..s.len()] == s {
                    acc.add(self.stationary[i]);
                }
            }
            return acc.value();
        }
        let mut state = match self.recoding.state_of(&s[0..m]) {
            Some(st) => st,
            None => return T::zero(),
        };
        let mut p = self.stationary[usize::from(state)];
        for &a in &s[m..] {
            if p == T::zero() {
                return T::zero();
            }
            let next = match self.recoding.step(state, a) {
                Some(st) => st,
                None => return T::zero(),
            };
            p = p * self.transition[usize::from(state)][usize::from(next)];
            state = next;
        }
        p
    }
}

/// Finite convex mixture of Markov components over one base space.
#[derive(Clone, Debug)]
pub struct InvariantMeasure<T> {
    components: Vec<(T, MarkovMeasure<T>)>,
}

impl<T: Scalar> InvariantMeasure<T> {
    pub fn from_markov(m: MarkovMeasure<T>) -> Self {
        InvariantMeasure {
            components: vec![(T::one(), m)],
        }
    }

    /// Convex mixture; nested mixtures are flattened, weights multiply out.
    pub fn mix(parts: &[(T, InvariantMeasure<T>)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let space = parts[0].1.space().clone();
        let mut sum = KahanSum::new();
        let mut components = Vec::new();
        for (w, measure) in parts {
            if *w <= T::zero() {
                return Err(Error::BadMixtureWeights { sum: w.as_f64() });
            }
            if measure.space() != &space {
                return Err(Error::SpaceMismatch);
            }
            sum.add(*w);
            for (inner_w, comp) in &measure.components {
                components.push((*w * *inner_w, comp.clone()));
            }
        }
        if (sum.value() - T::one()).abs() > T::tolerance(STOCHASTIC_TOL) {
            return Err(Error::BadMixtureWeights {
                sum: sum.value().as_f64(),
            });
        }
        Ok(InvariantMeasure { components })
    }

    pub fn space(&self) -> &ShiftSpace {
        self.components[0].1.space()
    }

    pub fn components(&self) -> &[(T, MarkovMeasure<T>)] {
        &self.components
    }

    /// Affine in the mixture weights by construction.
    pub fn entropy_rate(&self) -> T {
        let mut acc = KahanSum::new();
        for (w, comp) in &self.components {
            acc.add(*w * comp.entropy_rate());
        }
        acc.value()
    }

    pub fn cylinder_probability(&self, word: &Word) -> T {
        let mut acc = KahanSum::new();
        for (w, comp) in &self.components {
            acc.add(*w * comp.cylinder_probability(word));
        }
        acc.value()
    }

    /// `sum_w mu([w]) f(w)` over the admissible window-words of `f`.
    pub fn integrate(&self, f: &Potential<T>) -> Result<T> {
        if f.space() != self.space() {
            return Err(Error::SpaceMismatch);
        }
        let mut acc = KahanSum::new();
        for (i, w) in f.words().iter().enumerate() {
            acc.add(self.cylinder_probability(w) * f.value_by_index(i));
        }
        Ok(acc.value())
    }

    /// Moment vector of an observable family.
    pub fn moments(&self, family: &ObservableFamily<T>) -> Result<Vec<T>> {
        if family.space() != self.space() {
            return Err(Error::SpaceMismatch);
        }
        let probs: Vec<T> = family
            .words()
            .iter()
            .map(|w| self.cylinder_probability(w))
            .collect();
        Ok((0..family.dim())
            .map(|i| {
                let mut acc = KahanSum::new();
                for (p, g) in probs.iter().zip(family.component(i)) {
                    acc.add(*p * *g);
                }
                acc.value()
            })
            .collect())
    }
}

/// Empirical measure of a periodic orbit, kept as the generating word; all
/// cylinder probabilities are counts over cyclic positions divided by the
/// period.
#[derive(Clone, Debug)]
pub struct EmpiricalOrbitMeasure {
    space: ShiftSpace,
    cycle: Word,
}

impl EmpiricalOrbitMeasure {
    pub fn new(space: &ShiftSpace, cycle: Word) -> Result<Self> {
        if !space.is_cyclically_admissible(&cycle) {
            return Err(Error::InadmissibleWord {
                word: format!("{:?}", cycle.symbols()),
            });
        }
        Ok(EmpiricalOrbitMeasure {
            space: space.clone(),
            cycle,
        })
    }

    pub fn space(&self) -> &ShiftSpace {
        &self.space
    }

    pub fn period(&self) -> usize {
        self.cycle.len()
    }

    pub fn cycle(&self) -> &Word {
        &self.cycle
    }

    pub fn cylinder_probability<T: Scalar>(&self, word: &Word) -> T {
        let n = self.period();
        let s = self.cycle.symbols();
        let target = word.symbols();
        let mut hits = 0usize;
        for x in 0..n {
            if (0..target.len()).all(|i| s[(x + i) % n] == target[i]) {
                hits += 1;
            }
        }
        T::from_usize(hits).unwrap() / T::from_usize(n).unwrap()
    }

    /// Moment vector: cyclic window averages of each observable.
    pub fn moments<T: Scalar>(&self, family: &ObservableFamily<T>) -> Result<Vec<T>> {
        if family.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(family.cyclic_averages(&self.cycle))
    }

    /// The same measure as an order-`n` Markov chain (entropy rate zero).
    pub fn to_markov<T: Scalar>(&self) -> Result<MarkovMeasure<T>> {
        MarkovMeasure::dirac_orbit(&self.space, &self.cycle)
    }
}
