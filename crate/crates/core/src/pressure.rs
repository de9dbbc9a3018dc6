//! Topological pressure by several routes, and the equilibrium states that
//! attain it.
//!
//! For one-dimensional spaces the spectral route is the reference: pressure
//! is the log of the dominant eigenvalue of a weighted transfer matrix, and
//! the eigenvector data yields the equilibrium Markov chain.  The periodic
//! and separated routes are finite-sample estimates that converge to it.
//! For two-dimensional full shifts with nearest-neighbor pair energies the
//! module provides a strip transfer engine and an exhaustive torus-box sum.

use crate::error::{Error, Result};
use crate::linalg::log_sum_exp;
use crate::measure::{InvariantMeasure, MarkovMeasure};
use crate::potential::{PairPotential, Potential};
use crate::scalar::{KahanSum, Scalar};
use crate::shift::{Recoding, ShiftSpace, Symbol};

/// Power iteration stops when the log-domain eigenvalue bracket is this
/// narrow (a relative gap on the eigenvalue itself).
pub const EIGEN_BRACKET_GAP: f64 = 1e-12;
pub const EIGEN_MAX_ITERATIONS: usize = 200_000;
pub const DEFAULT_MAX_STRIP_WIDTH: usize = 6;
/// Strip transfer matrices are dense; cap the state count `k^w`.
pub const DEFAULT_STRIP_STATE_CAP: usize = 4096;
/// Torus sums enumerate `k^(a1*a2)` configurations; cap that count.
pub const DEFAULT_BOX_TERM_BUDGET: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PressureRoute {
    Spectral,
    Periodic,
    Separated,
    Strip,
    Box,
}

impl PressureRoute {
    pub fn name(self) -> &'static str {
        match self {
            PressureRoute::Spectral => "spectral",
            PressureRoute::Periodic => "periodic",
            PressureRoute::Separated => "separated",
            PressureRoute::Strip => "strip",
            PressureRoute::Box => "box",
        }
    }
}

/// A pressure value in nats per site, tagged with the route and the
/// parameters that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PressureResult<T> {
    pub value: T,
    pub route: PressureRoute,
    pub n: Option<usize>,
    pub r: Option<usize>,
    pub width: Option<usize>,
    pub box_sides: Option<(usize, usize)>,
}

impl<T: Scalar> PressureResult<T> {
    fn bare(value: T, route: PressureRoute) -> Self {
        PressureResult {
            value,
            route,
            n: None,
            r: None,
            width: None,
            box_sides: None,
        }
    }
}

/// Square matrix of log-weights; absent transitions carry `-inf`.
#[derive(Clone, Debug)]
pub struct LogMatrix<T> {
    dim: usize,
    rows: Vec<T>,
}

impl<T: Scalar> LogMatrix<T> {
    pub fn filled(dim: usize, value: T) -> Self {
        LogMatrix {
            dim,
            rows: vec![value; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, u: usize, v: usize) -> T {
        self.rows[u * self.dim + v]
    }

    pub fn set(&mut self, u: usize, v: usize, value: T) {
        self.rows[u * self.dim + v] = value;
    }

    pub fn row(&self, u: usize) -> &[T] {
        &self.rows[u * self.dim..(u + 1) * self.dim]
    }
}

/// Sparse log-weight matrix in compressed-row form; only present
/// transitions are stored.
#[derive(Clone, Debug)]
pub struct CsrLogMatrix<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<T>,
}

impl<T: Scalar> CsrLogMatrix<T> {
    /// Rows given as `(column, log weight)` lists; column order within a row
    /// is preserved.
    pub fn from_rows(rows: &[Vec<(usize, T)>]) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for &(c, w) in row {
                cols.push(c);
                weights.push(w);
            }
            row_ptr.push(cols.len());
        }
        CsrLogMatrix {
            dim,
            row_ptr,
            cols,
            weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edge_count(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, u: usize) -> (&[usize], &[T]) {
        let span = self.row_ptr[u]..self.row_ptr[u + 1];
        (&self.cols[span.clone()], &self.weights[span])
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Same sparsity pattern, fresh weights.
    pub fn with_weights(&self, weights: Vec<T>) -> Self {
        debug_assert_eq!(weights.len(), self.weights.len());
        CsrLogMatrix {
            dim: self.dim,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            weights,
        }
    }
}

/// Dominant-eigenvalue data of a nonnegative matrix in log form.
#[derive(Clone, Debug)]
pub struct SpectralData<T> {
    /// Log of the dominant eigenvalue.
    pub log_value: T,
    /// Log of the (positive) right eigenvector, normalized to max 0.
    pub log_right: Vec<T>,
    pub iterations: usize,
}

/// Extra iterations after the bracket first closes, to converge the
/// eigenvector itself well past the bracket tolerance.
const EIGEN_POLISH_ITERATIONS: usize = 10;

/// How often the bracket progress is checked against the remaining budget.
const STALL_CHECK_PERIOD: usize = 1024;

/// Power iteration with two-sided eigenvalue bracketing: after each step the
/// componentwise growth exponents bound `log lambda` from both sides; stop
/// when the bracket closes to `EIGEN_BRACKET_GAP` (plus a short polish
/// phase).  Deterministic all-ones start vector.  `apply` must compute
/// `y = log(M exp(x))` rowwise; every row needs at least one finite entry.
/// Stalled brackets (collapsed spectral gap) fail fast instead of exhausting
/// the iteration cap.
fn log_spectral_generic<T: Scalar>(
    dim: usize,
    mut apply: impl FnMut(&[T], &mut [T]),
) -> Result<SpectralData<T>> {
    let gap_tol = T::tolerance(EIGEN_BRACKET_GAP);
    let mut x = vec![T::zero(); dim];
    let mut y = vec![T::zero(); dim];
    let mut width = T::infinity();
    let mut checkpoint = T::infinity();
    let mut polish_left: Option<usize> = None;
    for iteration in 1..=EIGEN_MAX_ITERATIONS {
        apply(&x, &mut y);
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for u in 0..dim {
            let growth = y[u] - x[u];
            lo = lo.min(growth);
            hi = hi.max(growth);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(
                "power iteration",
                "a state lost all outgoing weight".to_string(),
            ));
        }
        width = hi - lo;
        if width <= gap_tol && polish_left.is_none() {
            polish_left = Some(EIGEN_POLISH_ITERATIONS);
        }
        if let Some(left) = polish_left.as_mut() {
            if *left == 0 {
                let two = T::of(2.0);
                let log_value = lo + width / two;
                let shift = y.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
                let log_right = y.iter().map(|&v| v - shift).collect();
                return Ok(SpectralData {
                    log_value,
                    log_right,
                    iterations: iteration,
                });
            }
            *left -= 1;
        }
        if iteration % STALL_CHECK_PERIOD == 0 && polish_left.is_none() {
            // Power-iteration shrink rates only decline, so if the rate
            // observed over the last window cannot close the bracket within
            // the remaining budget, the full run could not either.
            let window = T::from_usize(STALL_CHECK_PERIOD).unwrap();
            let remaining = T::from_usize(EIGEN_MAX_ITERATIONS - iteration).unwrap();
            let per_iteration = (width.ln() - checkpoint.ln()) / window;
            if width.ln() + per_iteration * remaining > gap_tol.ln() {
                return Err(Error::EigenNonConvergence {
                    iterations: iteration,
                    width: width.as_f64(),
                });
            }
            checkpoint = width;
        }
        let shift = y.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        for u in 0..dim {
            x[u] = y[u] - shift;
        }
    }
    Err(Error::EigenNonConvergence {
        iterations: EIGEN_MAX_ITERATIONS,
        width: width.as_f64(),
    })
}

pub fn log_spectral<T: Scalar>(matrix: &LogMatrix<T>) -> Result<SpectralData<T>> {
    let d = matrix.dim();
    let mut scratch = vec![T::zero(); d];
    log_spectral_generic(d, |x, y| {
        for u in 0..d {
            let row = matrix.row(u);
            for v in 0..d {
                scratch[v] = row[v] + x[v];
            }
            y[u] = log_sum_exp(&scratch);
        }
    })
}

pub fn log_spectral_csr<T: Scalar>(matrix: &CsrLogMatrix<T>) -> Result<SpectralData<T>> {
    let d = matrix.dim();
    let mut scratch: Vec<T> = Vec::with_capacity(d);
    log_spectral_generic(d, |x, y| {
        for u in 0..d {
            let (cols, weights) = matrix.row(u);
            scratch.clear();
            for (&v, &w) in cols.iter().zip(weights) {
                scratch.push(w + x[v]);
            }
            y[u] = log_sum_exp(&scratch);
        }
    })
}

/// The transfer operator of `(space, f)` realized on the higher-block
/// recoding of order `max(m - 1, 1)`: each recoded transition reads exactly
/// one window of `f`.
#[derive(Clone, Debug)]
pub struct TransferMachine<T> {
    recoding: Recoding,
    matrix: CsrLogMatrix<T>,
}

impl<T: Scalar> TransferMachine<T> {
    pub fn new(space: &ShiftSpace, f: &Potential<T>) -> Result<Self> {
        if f.space() != space {
            return Err(Error::SpaceMismatch);
        }
        let order = f.window().saturating_sub(1).max(1);
        let recoding = space.higher_block_recode(order)?;
        let matrix = edge_matrix(&recoding, |window| {
            f.value_of(&window[window.len() - f.window()..])
                .expect("transition windows of admissible blocks are admissible")
        });
        Ok(TransferMachine { recoding, matrix })
    }

    pub fn recoding(&self) -> &Recoding {
        &self.recoding
    }

    pub fn matrix(&self) -> &CsrLogMatrix<T> {
        &self.matrix
    }

    /// Requires a primitive base space: the dominant eigenvalue is then
    /// simple and the bracketing iteration converges.
    pub fn spectral(&self) -> Result<SpectralData<T>> {
        if !self.recoding.base().is_primitive() {
            return Err(Error::NotPrimitive);
        }
        log_spectral_csr(&self.matrix)
    }

    /// The equilibrium Markov chain: `Q_{uv} = M_{uv} r_v / (lambda r_u)`
    /// with `r` the right eigenvector, rows renormalized; its stationary
    /// vector is recovered by the direct solve.
    pub fn equilibrium(&self) -> Result<MarkovMeasure<T>> {
        let spectral = self.spectral()?;
        Ok(equilibrium_from_spectral(
            &self.recoding,
            &self.matrix,
            &spectral,
        )?)
    }
}

/// Builds the recoded-edge log-weight matrix, reading each edge's
/// transition word (block of `u` plus the last symbol of `v`).
pub(crate) fn edge_matrix<T: Scalar>(
    recoding: &Recoding,
    mut weight_of: impl FnMut(&[Symbol]) -> T,
) -> CsrLogMatrix<T> {
    let order = recoding.order();
    let d = recoding.blocks().len();
    let mut rows: Vec<Vec<(usize, T)>> = Vec::with_capacity(d);
    let mut transition_word: Vec<Symbol> = Vec::with_capacity(order + 1);
    for u in 0..d {
        transition_word.clear();
        transition_word.extend_from_slice(recoding.block(u as Symbol).symbols());
        transition_word.push(0);
        let mut row = Vec::new();
        for &v in recoding.space().successors(u as Symbol) {
            let last = *recoding
                .block(v)
                .symbols()
                .last()
                .expect("blocks are nonempty");
            transition_word[order] = last;
            row.push((usize::from(v), weight_of(&transition_word)));
        }
        rows.push(row);
    }
    CsrLogMatrix::from_rows(&rows)
}

/// The RPF chain of a weighted matrix given its spectral data.
pub(crate) fn equilibrium_from_spectral<T: Scalar>(
    recoding: &Recoding,
    matrix: &CsrLogMatrix<T>,
    spectral: &SpectralData<T>,
) -> Result<MarkovMeasure<T>> {
    let d = matrix.dim();
    let mut rows = vec![vec![T::zero(); d]; d];
    let mut terms: Vec<T> = Vec::new();
    for u in 0..d {
        let (cols, weights) = matrix.row(u);
        terms.clear();
        for (&v, &w) in cols.iter().zip(weights) {
            terms.push(w + spectral.log_right[v]);
        }
        // Row normalizer log(sum) replaces log(lambda) + log r_u exactly,
        // so each row sums to 1 up to rounding in exp.
        let normalizer = log_sum_exp(&terms);
        let mut sum = KahanSum::new();
        for (&v, &term) in cols.iter().zip(terms.iter()) {
            let q = (term - normalizer).exp();
            rows[u][v] = q;
            sum.add(q);
        }
        let total = sum.value();
        for (&v, _) in cols.iter().zip(terms.iter()) {
            rows[u][v] = rows[u][v] / total;
        }
    }
    MarkovMeasure::from_recoding(recoding.clone(), rows, None)
}

/// The weighted transfer matrix in linear form, together with the recoding
/// its indices refer to.
pub fn weighted_transfer_matrix<T: Scalar>(
    space: &ShiftSpace,
    f: &Potential<T>,
) -> Result<(Recoding, Vec<Vec<T>>)> {
    let machine = TransferMachine::new(space, f)?;
    let d = machine.matrix().dim();
    let mut dense = vec![vec![T::zero(); d]; d];
    for (u, dense_row) in dense.iter_mut().enumerate() {
        let (cols, weights) = machine.matrix().row(u);
        for (&v, &w) in cols.iter().zip(weights) {
            dense_row[v] = w.exp();
        }
    }
    Ok((machine.recoding.clone(), dense))
}

/// Pressure as the log dominant eigenvalue of the weighted transfer matrix.
pub fn pressure_spectral<T: Scalar>(
    space: &ShiftSpace,
    f: &Potential<T>,
) -> Result<PressureResult<T>> {
    let machine = TransferMachine::new(space, f)?;
    let spectral = machine.spectral()?;
    Ok(PressureResult::bare(
        spectral.log_value,
        PressureRoute::Spectral,
    ))
}

/// The equilibrium state of `f`: the unique invariant measure attaining
/// `integrate(f) + entropy_rate = pressure`.
pub fn equilibrium_state<T: Scalar>(
    space: &ShiftSpace,
    f: &Potential<T>,
) -> Result<MarkovMeasure<T>> {
    TransferMachine::new(space, f)?.equilibrium()
}

/// `(1/n) log` of the cyclic-weight sum over all periodic orbits of period
/// dividing `n`, accumulated in fixed lexicographic order.
pub fn pressure_periodic<T: Scalar>(
    space: &ShiftSpace,
    f: &Potential<T>,
    n: usize,
) -> Result<PressureResult<T>> {
    if n == 0 {
        return Err(Error::ZeroWindow);
    }
    let points = space.periodic_points(n)?;
    let terms: Vec<T> = points.iter().map(|w| f.cyclic_birkhoff_sum(w)).collect();
    let value = log_sum_exp(&terms) / T::from_usize(n).unwrap();
    Ok(PressureResult {
        n: Some(n),
        ..PressureResult::bare(value, PressureRoute::Periodic)
    })
}

/// `(1/n) log` of the weight sum over a maximal separated set at scale
/// `2^-(r+1)`: one representative per admissible `(n+r)`-word, each extended
/// canonically so that `n` windows of `f` are defined.
pub fn pressure_separated<T: Scalar>(
    space: &ShiftSpace,
    f: &Potential<T>,
    n: usize,
    r: usize,
) -> Result<PressureResult<T>> {
    if n == 0 {
        return Err(Error::ZeroWindow);
    }
    let representatives = space.separated_set_representatives(n, r)?;
    let target_len = n + r.max(f.window() - 1);
    let mut terms = Vec::with_capacity(representatives.len());
    for rep in &representatives {
        let extended = space.canonical_extension(rep, target_len)?;
        terms.push(f.birkhoff_sum(&extended, n));
    }
    let value = log_sum_exp(&terms) / T::from_usize(n).unwrap();
    Ok(PressureResult {
        n: Some(n),
        r: Some(r),
        ..PressureResult::bare(value, PressureRoute::Separated)
    })
}

/// Defect of the variational principle at `mu`:
/// `pressure - (integral of f + entropy rate)`.  Nonnegative up to rounding,
/// and zero exactly at the equilibrium state.
pub fn variational_gap<T: Scalar>(
    space: &ShiftSpace,
    f: &Potential<T>,
    mu: &InvariantMeasure<T>,
) -> Result<T> {
    let pressure = pressure_spectral(space, f)?.value;
    let attained = mu.integrate(f)? + mu.entropy_rate();
    Ok(pressure - attained)
}

/// Neighbor edges along one periodic direction of length `s`, as index
/// pairs `(j, j+1 mod s)`.  Each unordered pair appears once: all `s` wrap
/// edges for `s >= 3`, a single edge for `s in {1, 2}` (for `s = 1` it is
/// the cell paired with itself).
fn wrap_edges(s: usize) -> impl Iterator<Item = (usize, usize)> {
    let count = if s >= 3 { s } else { 1 };
    (0..count).map(move |j| (j, (j + 1) % s))
}

fn check_pair_alphabet<T: Scalar>(k: usize, nn: &PairPotential<T>) -> Result<()> {
    if nn.alphabet_size() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: nn.alphabet_size(),
        });
    }
    Ok(())
}

/// Pressure per site of the 2-D full shift on `k` symbols with
/// nearest-neighbor energies `nn`, from the row-transfer matrix of a strip
/// of the given width with periodic boundary across the width.
pub fn pressure_2d_strip<T: Scalar>(
    k: usize,
    nn: &PairPotential<T>,
    width: usize,
) -> Result<PressureResult<T>> {
    pressure_2d_strip_limited(
        k,
        nn,
        width,
        DEFAULT_MAX_STRIP_WIDTH,
        DEFAULT_STRIP_STATE_CAP,
    )
}

pub fn pressure_2d_strip_limited<T: Scalar>(
    k: usize,
    nn: &PairPotential<T>,
    width: usize,
    max_width: usize,
    state_cap: usize,
) -> Result<PressureResult<T>> {
    check_pair_alphabet(k, nn)?;
    if width < 2 || width > max_width {
        return Err(Error::BadStripWidth {
            width,
            max: max_width,
        });
    }
    let states = (k as u128).pow(width as u32);
    if states > state_cap as u128 {
        return Err(Error::EnumerationCap {
            required: states,
            cap: state_cap,
        });
    }
    let d = states as usize;
    // Row configurations are encoded in base k, cell j in digit j.
    let cell = |state: usize, j: usize| -> usize { (state / k.pow(j as u32)) % k };
    let mut within = vec![T::zero(); d];
    for (v, w) in within.iter_mut().enumerate() {
        let mut acc = KahanSum::new();
        for (a, b) in wrap_edges(width) {
            acc.add(nn.value(cell(v, a), cell(v, b)));
        }
        *w = acc.value();
    }
    let mut log_weights = LogMatrix::filled(d, T::zero());
    for u in 0..d {
        for v in 0..d {
            let mut acc = KahanSum::new();
            for j in 0..width {
                acc.add(nn.value(cell(u, j), cell(v, j)));
            }
            log_weights.set(u, v, acc.value() + within[v]);
        }
    }
    let spectral = log_spectral(&log_weights)?;
    let value = spectral.log_value / T::from_usize(width).unwrap();
    Ok(PressureResult {
        width: Some(width),
        ..PressureResult::bare(value, PressureRoute::Strip)
    })
}

/// Pressure per site from the exhaustive sum over all doubly periodic
/// configurations on an `a1 x a2` torus.
pub fn pressure_2d_box<T: Scalar>(
    k: usize,
    nn: &PairPotential<T>,
    a1: usize,
    a2: usize,
) -> Result<PressureResult<T>> {
    pressure_2d_box_limited(k, nn, a1, a2, DEFAULT_BOX_TERM_BUDGET)
}

pub fn pressure_2d_box_limited<T: Scalar>(
    k: usize,
    nn: &PairPotential<T>,
    a1: usize,
    a2: usize,
    term_budget: usize,
) -> Result<PressureResult<T>> {
    check_pair_alphabet(k, nn)?;
    if a1 == 0 || a2 == 0 {
        return Err(Error::BadBoxSides { a1, a2 });
    }
    let cells = a1 * a2;
    let required = (k as u128).pow(cells as u32);
    if required > term_budget as u128 {
        return Err(Error::EnumerationCap {
            required,
            cap: term_budget,
        });
    }
    // Horizontal edges within each row, then vertical edges within each
    // column, each unordered torus pair once (see wrap_edges).
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..a1 {
        for (a, b) in wrap_edges(a2) {
            edges.push((i * a2 + a, i * a2 + b));
        }
    }
    for (a, b) in wrap_edges(a1) {
        for j in 0..a2 {
            edges.push((a * a2 + j, b * a2 + j));
        }
    }
    let energy = |config: &[Symbol]| -> T {
        let mut acc = KahanSum::new();
        for &(x, y) in &edges {
            acc.add(nn.value(usize::from(config[x]), usize::from(config[y])));
        }
        acc.value()
    };
    // Two passes over the same lexicographic enumeration: max shift, then
    // a compensated sum of shifted exponentials.
    let mut shift = T::neg_infinity();
    for_each_config(k, cells, |config| {
        shift = shift.max(energy(config));
    });
    let mut sum = KahanSum::new();
    for_each_config(k, cells, |config| {
        sum.add((energy(config) - shift).exp());
    });
    let value = (shift + sum.value().ln()) / T::from_usize(cells).unwrap();
    Ok(PressureResult {
        box_sides: Some((a1, a2)),
        ..PressureResult::bare(value, PressureRoute::Box)
    })
}

/// Visits all `k^cells` symbol arrays in lexicographic order (last cell
/// varies fastest).
fn for_each_config(k: usize, cells: usize, mut visit: impl FnMut(&[Symbol])) {
    let mut config = vec![0 as Symbol; cells];
    loop {
        visit(&config);
        let mut pos = cells;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if usize::from(config[pos]) + 1 < k {
                config[pos] += 1;
                break;
            }
            config[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::InvariantMeasure;
    use crate::shift::Word;

    const LOG_PHI: f64 = 0.4812118250596035;

    fn golden() -> ShiftSpace {
        ShiftSpace::sft(&[vec![1, 1], vec![1, 0]]).unwrap()
    }

    fn full2() -> ShiftSpace {
        ShiftSpace::full_shift(2).unwrap()
    }

    fn zero64(space: &ShiftSpace) -> Potential<f64> {
        Potential::zero(space).unwrap()
    }

    fn log3_on_ones(space: &ShiftSpace) -> Potential<f64> {
        Potential::new(space, 1, vec![0.0, 3.0f64.ln()]).unwrap()
    }

    /// Dominant eigenvalue of a 2x2 nonnegative matrix, closed form.
    fn dominant_2x2(m: &[Vec<f64>]) -> f64 {
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0
    }

    #[test]
    fn transfer_matrix_of_the_zero_potential_is_the_adjacency() {
        let (_, m) = weighted_transfer_matrix(&full2(), &zero64(&full2())).unwrap();
        assert_eq!(m, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let g = golden();
        let (_, m) = weighted_transfer_matrix(&g, &zero64(&g)).unwrap();
        assert_eq!(m, vec![vec![1.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn single_site_weights_scale_columns() {
        let f = full2();
        let (_, m) = weighted_transfer_matrix(&f, &log3_on_ones(&f)).unwrap();
        for row in &m {
            assert!((row[0] - 1.0).abs() < 1e-15);
            assert!((row[1] - 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn window_two_weights_sit_on_single_transitions() {
        let g = golden();
        let f = Potential::new(&g, 2, vec![0.5, -0.25, 1.5]).unwrap(); // 00, 01, 10
        let (rec, m) = weighted_transfer_matrix(&g, &f).unwrap();
        assert_eq!(rec.order(), 1);
        assert!((m[0][0] - 0.5f64.exp()).abs() < 1e-15);
        assert!((m[0][1] - (-0.25f64).exp()).abs() < 1e-15);
        assert!((m[1][0] - 1.5f64.exp()).abs() < 1e-15);
        assert_eq!(m[1][1], 0.0);
    }

    #[test]
    fn spectral_pressure_of_full_shifts_and_golden_mean() {
        let f2 = full2();
        let p = pressure_spectral(&f2, &zero64(&f2)).unwrap();
        assert!((p.value - 2.0f64.ln()).abs() < 1e-12);
        assert_eq!(p.route, PressureRoute::Spectral);

        let g = golden();
        let p = pressure_spectral(&g, &zero64(&g)).unwrap();
        assert!((p.value - LOG_PHI).abs() < 1e-10);

        let p = pressure_spectral(&f2, &log3_on_ones(&f2)).unwrap();
        assert!((p.value - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn spectral_pressure_matches_the_closed_form_for_pair_weights() {
        let g = golden();
        let f = Potential::new(&g, 2, vec![0.3, -0.7, 0.2]).unwrap();
        let (_, m) = weighted_transfer_matrix(&g, &f).unwrap();
        let expect = dominant_2x2(&m).ln();
        let got = pressure_spectral(&g, &f).unwrap().value;
        assert!((got - expect).abs() < 1e-11, "got {got}, expect {expect}");
    }

    #[test]
    fn non_primitive_spaces_are_rejected() {
        let swap = ShiftSpace::sft(&[vec![0, 1], vec![1, 0]]).unwrap();
        let err = pressure_spectral(&swap, &zero64(&swap)).unwrap_err();
        assert!(matches!(err, Error::NotPrimitive));
    }

    #[test]
    fn equilibrium_of_the_free_full_shift_is_uniform() {
        let f2 = full2();
        let eq = equilibrium_state(&f2, &zero64(&f2)).unwrap();
        for row in eq.transition() {
            assert!((row[0] - 0.5).abs() < 1e-12);
            assert!((row[1] - 0.5).abs() < 1e-12);
        }
        assert!((eq.stationary()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn site_weights_give_the_product_measure() {
        let f2 = full2();
        let eq = equilibrium_state(&f2, &log3_on_ones(&f2)).unwrap();
        for row in eq.transition() {
            assert!((row[0] - 0.25).abs() < 1e-12);
            assert!((row[1] - 0.75).abs() < 1e-12);
        }
        assert!((eq.stationary()[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_of_the_golden_mean_is_the_parry_chain() {
        let g = golden();
        let eq = equilibrium_state(&g, &zero64(&g)).unwrap();
        assert!((eq.transition()[0][0] - 0.618034).abs() < 1e-6);
        assert!((eq.transition()[0][1] - 0.381966).abs() < 1e-6);
        assert!((eq.transition()[1][0] - 1.0).abs() < 1e-12);
        assert!((eq.stationary()[0] - 0.723607).abs() < 1e-6);
        assert!((eq.stationary()[1] - 0.276393).abs() < 1e-6);
    }

    #[test]
    fn equilibrium_satisfies_the_gibbs_identity() {
        let g = golden();
        let f = Potential::<f64>::new(&g, 2, vec![0.4, -0.9, 1.1]).unwrap();
        let eq = equilibrium_state(&g, &f).unwrap();
        let mu = InvariantMeasure::from_markov(eq);
        let attained = mu.integrate(&f).unwrap() + mu.entropy_rate();
        let pressure = pressure_spectral(&g, &f).unwrap().value;
        assert!((attained - pressure).abs() < 1e-10);
    }

    #[test]
    fn periodic_pressure_of_the_full_shift_is_exact() {
        let f2 = full2();
        let zero = zero64(&f2);
        for n in [1usize, 2, 5, 10] {
            let p = pressure_periodic(&f2, &zero, n).unwrap();
            assert_eq!(p.value, 2.0f64.ln(), "n = {n}");
            assert_eq!(p.n, Some(n));
        }
    }

    #[test]
    fn periodic_pressure_counts_golden_mean_cycles() {
        let g = golden();
        let p = pressure_periodic(&g, &zero64(&g), 3).unwrap();
        assert!((p.value - 4.0f64.ln() / 3.0).abs() < 1e-14);
    }

    #[test]
    fn periodic_pressure_weights_fixed_points() {
        let f2 = full2();
        let f = log3_on_ones(&f2);
        let p1 = pressure_periodic(&f2, &f, 1).unwrap();
        assert!((p1.value - 4.0f64.ln()).abs() < 1e-14);
        // Product structure keeps every n at log 4.
        let p2 = pressure_periodic(&f2, &f, 2).unwrap();
        assert!((p2.value - 4.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn periodic_pressure_flags_empty_periodic_sets() {
        let swap = ShiftSpace::sft(&[vec![0, 1], vec![1, 0]]).unwrap();
        let err = pressure_periodic(&swap, &zero64(&swap), 3).unwrap_err();
        assert!(matches!(err, Error::EmptyPeriodicSet { n: 3 }));
    }

    #[test]
    fn separated_pressure_counts_representatives() {
        let f2 = full2();
        let p = pressure_separated(&f2, &zero64(&f2), 10, 2).unwrap();
        assert!((p.value - 1.2 * 2.0f64.ln()).abs() < 1e-12);
        assert_eq!((p.n, p.r), (Some(10), Some(2)));
    }

    #[test]
    fn separated_pressure_of_the_single_point_space_is_zero() {
        let one = ShiftSpace::full_shift(1).unwrap();
        let p = pressure_separated(&one, &zero64(&one), 7, 3).unwrap();
        assert_eq!(p.value, 0.0);
    }

    #[test]
    fn separated_pressure_extends_windows_for_wide_potentials() {
        let g = golden();
        let f = Potential::new(&g, 2, vec![0.2, -0.4, 0.6]).unwrap();
        // r = 0 still needs one symbol of lookahead for the window-2 sums.
        let p = pressure_separated(&g, &f, 4, 0).unwrap();
        let words = g.admissible_words(4).unwrap();
        let mut terms = Vec::new();
        for w in words {
            let ext = g.canonical_extension(&w, 5).unwrap();
            terms.push(f.birkhoff_sum(&ext, 4));
        }
        let expect = crate::linalg::log_sum_exp(&terms) / 4.0;
        assert_eq!(p.value, expect);
    }

    #[test]
    fn variational_gap_is_zero_at_equilibrium_and_positive_elsewhere() {
        let f2 = full2();
        let zero = zero64(&f2);
        let eq = InvariantMeasure::from_markov(equilibrium_state(&f2, &zero).unwrap());
        assert!(variational_gap(&f2, &zero, &eq).unwrap().abs() < 1e-8);

        let bern = InvariantMeasure::from_markov(
            MarkovMeasure::new(&f2, 1, vec![vec![0.25, 0.75], vec![0.25, 0.75]], None).unwrap(),
        );
        let gap = variational_gap(&f2, &zero, &bern).unwrap();
        assert!((gap - 0.130812).abs() < 1e-6);

        let dirac = InvariantMeasure::from_markov(
            MarkovMeasure::dirac_orbit(&f2, &Word::new(vec![0])).unwrap(),
        );
        let gap = variational_gap(&f2, &zero, &dirac).unwrap();
        assert!((gap - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn free_strip_pressure_is_exactly_log_k() {
        let zero2 = PairPotential::<f64>::zero(2).unwrap();
        for w in 2..=6 {
            let p = pressure_2d_strip(2, &zero2, w).unwrap();
            assert_eq!(p.value, 2.0f64.ln(), "width {w}");
            assert_eq!(p.width, Some(w));
        }
        let zero4 = PairPotential::<f64>::zero(4).unwrap();
        for w in 2..=4 {
            let p = pressure_2d_strip(4, &zero4, w).unwrap();
            assert_eq!(p.value, 4.0f64.ln(), "width {w}");
        }
    }

    #[test]
    fn strip_widths_disagree_only_slightly_for_a_coupled_model() {
        let mut vals = Vec::new();
        let nn = PairPotential::<f64>::new(2, &[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        for w in 4..=6 {
            vals.push(pressure_2d_strip(2, &nn, w).unwrap().value);
        }
        for a in &vals {
            for b in &vals {
                assert!((a - b).abs() < 0.05);
            }
        }
    }

    #[test]
    fn strip_width_bounds_are_enforced() {
        let zero = PairPotential::<f64>::zero(2).unwrap();
        assert!(matches!(
            pressure_2d_strip(2, &zero, 1).unwrap_err(),
            Error::BadStripWidth { width: 1, max: 6 }
        ));
        assert!(matches!(
            pressure_2d_strip(2, &zero, 7).unwrap_err(),
            Error::BadStripWidth { width: 7, max: 6 }
        ));
        let zero5 = PairPotential::<f64>::zero(5).unwrap();
        assert!(matches!(
            pressure_2d_strip(5, &zero5, 6).unwrap_err(),
            Error::EnumerationCap {
                required: 15625,
                ..
            }
        ));
    }

    #[test]
    fn free_box_pressure_is_exactly_log_k() {
        let zero = PairPotential::<f64>::zero(2).unwrap();
        for a1 in 1..=4 {
            for a2 in 1..=5 {
                let p = pressure_2d_box(2, &zero, a1, a2).unwrap();
                assert_eq!(p.value, 2.0f64.ln(), "box {a1}x{a2}");
                assert_eq!(p.box_sides, Some((a1, a2)));
            }
        }
    }

    #[test]
    fn one_by_one_box_counts_both_self_pairs() {
        let nn = PairPotential::<f64>::new(2, &[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let p = pressure_2d_box(2, &nn, 1, 1).unwrap();
        // each symbol a contributes exp(2 * nn(a, a))
        let expect = (2.0 * 1.0f64.exp()).ln();
        assert!((p.value - expect).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_box_matches_a_direct_sum() {
        let nn = PairPotential::<f64>::new(2, &[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let p = pressure_2d_box(2, &nn, 2, 2).unwrap();
        // independent enumeration: cells (00, 01, 10, 11) as bits of c,
        // the 2x2 torus has exactly these four unordered neighbor pairs
        let pairs = [(0, 1), (2, 3), (0, 2), (1, 3)];
        let mut sum = 0.0f64;
        for c in 0..16u32 {
            let bit = |i: usize| (c >> i) & 1;
            let equal = pairs.iter().filter(|&&(a, b)| bit(a) == bit(b)).count();
            sum += (0.5 * equal as f64).exp();
        }
        assert!((p.value - sum.ln() / 4.0).abs() < 1e-14);
    }

    #[test]
    fn box_limits_are_enforced() {
        let zero = PairPotential::<f64>::zero(2).unwrap();
        assert!(matches!(
            pressure_2d_box(2, &zero, 0, 3).unwrap_err(),
            Error::BadBoxSides { a1: 0, a2: 3 }
        ));
        match pressure_2d_box(2, &zero, 5, 5).unwrap_err() {
            Error::EnumerationCap { required, cap } => {
                assert_eq!(required, 1 << 25);
                assert_eq!(cap, 1 << 20);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn strip_and_box_agree_for_a_coupled_model() {
        let nn = PairPotential::<f64>::new(2, &[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let strip = pressure_2d_strip(2, &nn, 6).unwrap().value;
        let boxed = pressure_2d_box(2, &nn, 4, 5).unwrap().value;
        assert!((strip - boxed).abs() < 0.05, "strip {strip} vs box {boxed}");
    }
}
