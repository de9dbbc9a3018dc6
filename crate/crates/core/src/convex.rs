//! Convex duality for moment-constrained equilibrium selection.
//!
//! For an observable family `S = (g_1, ..., g_d)` the shifted cumulant
//! `L(t) = P(f + tS) - P(f)` is smooth and convex; its Legendre conjugate
//! `I(x) = sup_t { <t, x> - L(t) }` is the rate function of the empirical
//! moment vector, and equals the constrained defect
//! `inf { P(f) - h(mu) - mu(f) : moments(mu) = x }`.  The supremum is
//! computed by quasi-Newton ascent on the smooth concave dual; the maximizer
//! `t*` yields a witness measure, the equilibrium state of `f + t*S`, whose
//! moments reproduce `x`.
//!
//! The same machinery drives the entropy-approximation construction: match
//! the cylinder moments of an arbitrary invariant target at growing window
//! sizes; the resulting equilibrium states converge to the target in
//! moments and in entropy.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::measure::{InvariantMeasure, MarkovMeasure};
use crate::potential::{ObservableFamily, Potential};
use crate::pressure::{
    edge_matrix, equilibrium_from_spectral, log_spectral_csr, variational_gap, CsrLogMatrix,
    SpectralData,
};
use crate::scalar::{ExtReal, KahanSum, Scalar};
use crate::shift::{Recoding, ShiftSpace};

/// Dual ascent stops when the Euclidean gradient norm falls below this.
pub const DUAL_GRADIENT_TOL: f64 = 1e-9;
/// `|t|` beyond this is declared divergent: the target moment vector lies
/// outside the closed moment range.
pub const DUAL_DIVERGENCE_NORM: f64 = 1e3;
pub const DUAL_MAX_ITERATIONS: usize = 500;
/// Inward perturbation weight for boundary moment targets.
pub const INTERIOR_PERTURBATION: f64 = 1e-6;
const ARMIJO_SLOPE: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Per-iteration cap on the search-step norm, to keep a briefly inflated
/// curvature model from teleporting the iterate.
const MAX_STEP_NORM: f64 = 100.0;
/// Log-weight spread beyond which a dual probe is considered past the
/// floating-point frontier and rejected without an eigensolve.
const PROBE_SPREAD_LIMIT: f64 = 500.0;
/// Stagnation thresholds for wedge detection: objective progress relative to
/// `1 + |F|`, gradient-norm progress relative to the norm itself, and how
/// many consecutive stagnant iterations to tolerate.
const WEDGE_PROGRESS_EPS: f64 = 1e-13;
const WEDGE_GRAD_RELATIVE: f64 = 1e-6;
const WEDGE_PATIENCE: usize = 12;
/// Iterate norm beyond which a wedged run is read as divergence rather than
/// an unconverged interior problem; smooth interior optima at unit
/// observable scale sit far below this.
const WEDGE_T_NORM: f64 = 20.0;
/// A wedged iterate whose gradient is within this factor of the tolerance
/// has converged to eigensolver precision and is accepted.
const WEDGE_GRAD_SLACK: f64 = 100.0;
/// Safety margin on the rigorous lower bound for the dual objective at
/// feasible points; the bound itself is exact, the margin only absorbs
/// eigensolver round-off.
const DUAL_OBJECTIVE_MARGIN: f64 = 1.0;

/// Errors that mean a dual probe degenerated numerically: exp underflow makes
/// the equilibrium chain reducible, or the transfer matrix turns nearly
/// reducible and its spectral gap collapses.  Both happen only at extreme
/// `|t|`, i.e. on the way to dual divergence.
fn dual_probe_degenerated(e: &Error) -> bool {
    matches!(
        e,
        Error::ReducibleChain { .. }
            | Error::StationaryResidual { .. }
            | Error::NotStochastic { .. }
            | Error::NotStationary { .. }
            | Error::UnsupportedTransition { .. }
            | Error::EigenNonConvergence { .. }
    )
}

/// `P(f) - h(mu) - mu(f)`: the convex defect that vanishes exactly at the
/// equilibrium state of `f`.  Identical to the variational gap; named for
/// its role as the dual functional being minimized under moment
/// constraints.
pub fn q_star<T: Scalar>(
    space: &ShiftSpace,
    f: &Potential<T>,
    mu: &InvariantMeasure<T>,
) -> Result<T> {
    variational_gap(space, f, mu)
}

/// Indicators of all admissible `n`-cylinders with the lexicographically
/// last dropped (it is affinely dependent on the others).
pub fn cylinder_family<T: Scalar>(space: &ShiftSpace, n: usize) -> Result<ObservableFamily<T>> {
    ObservableFamily::cylinder_indicators(space, n)
}

/// Outcome of a rate-function evaluation.
#[derive(Clone, Debug)]
pub struct RateValue<T> {
    /// `I(x)`; `+inf` when `x` lies outside the closed moment range.
    pub value: ExtReal<T>,
    /// The dual maximizer, when the ascent converged.
    pub argmax: Option<Vec<T>>,
    /// The equilibrium state of `f + t* S`; its moments reproduce `x`.
    pub witness: Option<MarkovMeasure<T>>,
    pub iterations: usize,
}

/// The rate function `I` of one `(space, f, S)` triple, with its cumulant
/// `L` and both gradients, plus a memo of solved moment vectors.
pub struct RateFunctionHandle<T> {
    space: ShiftSpace,
    f: Potential<T>,
    family: ObservableFamily<T>,
    recoding: Recoding,
    base: CsrLogMatrix<T>,
    components: Vec<Vec<T>>,
    base_pressure: T,
    cache: Mutex<HashMap<Vec<u64>, RateValue<T>>>,
}

impl<T: Scalar> RateFunctionHandle<T> {
    pub fn new(space: &ShiftSpace, f: &Potential<T>, family: &ObservableFamily<T>) -> Result<Self> {
        if f.space() != space || family.space() != space {
            return Err(Error::SpaceMismatch);
        }
        if !space.is_primitive() {
            return Err(Error::NotPrimitive);
        }
        let window = f.window().max(family.window());
        let order = window.saturating_sub(1).max(1);
        let recoding = space.higher_block_recode(order)?;
        let fw = f.window();
        let base = edge_matrix(&recoding, |word| {
            f.value_of(&word[word.len() - fw..])
                .expect("transition windows of admissible blocks are admissible")
        });
        let sw = family.window();
        let components = (0..family.dim())
            .map(|i| {
                edge_matrix(&recoding, |word: &[crate::shift::Symbol]| {
                    let idx = family
                        .word_table()
                        .index_of(&word[word.len() - sw..])
                        .expect("transition windows of admissible blocks are admissible");
                    family.value(i, idx)
                })
                .weights()
                .to_vec()
            })
            .collect();
        let base_pressure = log_spectral_csr(&base)?.log_value;
        Ok(RateFunctionHandle {
            space: space.clone(),
            f: f.clone(),
            family: family.clone(),
            recoding,
            base,
            components,
            base_pressure,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn space(&self) -> &ShiftSpace {
        &self.space
    }

    pub fn potential(&self) -> &Potential<T> {
        &self.f
    }

    pub fn family(&self) -> &ObservableFamily<T> {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn base_pressure(&self) -> T {
        self.base_pressure
    }

    fn check_dim(&self, v: &[T]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    fn weights_at(&self, t: &[T]) -> CsrLogMatrix<T> {
        let mut w = self.base.weights().to_vec();
        for (ti, comp) in t.iter().zip(&self.components) {
            if *ti == T::zero() {
                continue;
            }
            for (we, ce) in w.iter_mut().zip(comp) {
                *we += *ti * *ce;
            }
        }
        self.base.with_weights(w)
    }

    fn spectral_at(&self, t: &[T]) -> Result<(CsrLogMatrix<T>, SpectralData<T>)> {
        let m = self.weights_at(t);
        let s = log_spectral_csr(&m)?;
        Ok((m, s))
    }

    /// Range of the tilted log weights, a cheap proxy for how close `t` has
    /// pushed the transfer matrix to the floating-point frontier.
    fn weight_spread_at(&self, t: &[T]) -> T {
        let m = self.weights_at(t);
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for v in m.weights() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        hi - lo
    }

    /// The shifted cumulant `L(t) = P(f + tS) - P(f)`.
    pub fn l_eval(&self, t: &[T]) -> Result<T> {
        self.check_dim(t)?;
        Ok(self.spectral_at(t)?.1.log_value - self.base_pressure)
    }

    /// Equilibrium state of `f + tS`.
    pub fn equilibrium_at(&self, t: &[T]) -> Result<MarkovMeasure<T>> {
        self.check_dim(t)?;
        let (m, s) = self.spectral_at(t)?;
        equilibrium_from_spectral(&self.recoding, &m, &s)
    }

    /// `grad L(t)`: the moment vector of the equilibrium state of `f + tS`.
    pub fn l_grad(&self, t: &[T]) -> Result<Vec<T>> {
        Ok(self.chain_moments(&self.equilibrium_at(t)?))
    }

    /// Moments of a chain on this handle's recoding, summed over edges in
    /// fixed row order.
    fn chain_moments(&self, chain: &MarkovMeasure<T>) -> Vec<T> {
        let pi = chain.stationary();
        let q = chain.transition();
        let d = self.base.dim();
        let mut edge_mass = Vec::with_capacity(self.base.edge_count());
        for u in 0..d {
            let (cols, _) = self.base.row(u);
            for &v in cols {
                edge_mass.push(pi[u] * q[u][v]);
            }
        }
        self.components
            .iter()
            .map(|comp| {
                let mut acc = KahanSum::new();
                for (mass, value) in edge_mass.iter().zip(comp) {
                    acc.add(*mass * *value);
                }
                acc.value()
            })
            .collect()
    }

    /// The rate function `I(x) = sup_t { <t, x> - L(t) }`, by BFGS descent
    /// on `F(t) = L(t) - <t, x>` from `t = 0`.  Returns the dual value with
    /// maximizer and witness measure, or a `+inf` flag when the iterates
    /// diverge (`x` outside the closed moment range; extremal boundary
    /// points, where the supremum is approached only as `|t| -> inf`, also
    /// flag).  Solutions are memoized per exact bit pattern of `x`.
    pub fn rate_at(&self, x: &[T]) -> Result<RateValue<T>> {
        self.check_dim(x)?;
        let key: Vec<u64> = x.iter().map(|v| v.bit_pattern()).collect();
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let solved = self.solve_dual(x)?;
        let mut cache = self.cache.lock().unwrap();
        let stored = cache.entry(key).or_insert(solved);
        Ok(stored.clone())
    }

    fn solve_dual(&self, x: &[T]) -> Result<RateValue<T>> {
        let d = self.dim();
        let grad_tol = T::tolerance(DUAL_GRADIENT_TOL);
        let t_bound = T::of(DUAL_DIVERGENCE_NORM);
        let slope = T::of(ARMIJO_SLOPE);
        let half = T::of(0.5);

        let value_at = |t: &[T]| -> Result<T> {
            let l = self.spectral_at(t)?.1.log_value - self.base_pressure;
            Ok(l - dot(t, x))
        };
        let grad_at = |t: &[T]| -> Result<Vec<T>> {
            let m = self.l_grad(t)?;
            Ok(m.iter().zip(x).map(|(mi, xi)| *mi - *xi).collect())
        };

        // Every point of the closed moment range is the average of some
        // shift-invariant measure mu, and the variational principle then
        // pins the dual objective above (min f) - P(f): the tilt term
        // cancels against <t, x> at mu and entropy is nonnegative.  An
        // objective seen below that floor proves the target lies outside
        // the moment range, so the rate is +inf.
        let objective_floor = self
            .f
            .values()
            .iter()
            .fold(T::infinity(), |m, &v| if v < m { v } else { m })
            - self.base_pressure
            - T::of(DUAL_OBJECTIVE_MARGIN);

        let mut t = vec![T::zero(); d];
        let mut fval = value_at(&t)?;
        let mut grad = grad_at(&t)?;
        // Inverse-Hessian approximation, reset to identity on stalls.
        let mut h = identity(d);
        let mut stalled = false;
        let mut iterations = 0;
        let mut prev_f = T::infinity();
        let mut prev_gn = T::infinity();
        let mut wedge_count = 0usize;
        loop {
            iterations += 1;
            if iterations > DUAL_MAX_ITERATIONS {
                return Err(Error::DualNonConvergence {
                    iterations: DUAL_MAX_ITERATIONS,
                    grad_norm: norm2(&grad).as_f64(),
                    t_norm: norm2(&t).as_f64(),
                });
            }
            let gn = norm2(&grad);
            if gn < grad_tol {
                break;
            }
            if norm2(&t) > t_bound || fval < objective_floor {
                return Ok(RateValue {
                    value: ExtReal::PosInfinity,
                    argmax: None,
                    witness: None,
                    iterations,
                });
            }
            // Wedge detection: neither the objective nor the gradient norm is
            // moving while the gradient is still large.  A smooth interior
            // optimum cannot do this; it is the signature of an iterate
            // pinned against a phase boundary, where the objective kinks in
            // the infinite-tilt limit.
            let stagnant = prev_f - fval
                <= (T::one() + fval.abs()) * T::tolerance(WEDGE_PROGRESS_EPS)
                && prev_gn - gn <= gn * T::of(WEDGE_GRAD_RELATIVE);
            wedge_count = if stagnant { wedge_count + 1 } else { 0 };
            prev_f = fval;
            prev_gn = gn;
            if wedge_count >= WEDGE_PATIENCE {
                if gn < grad_tol * T::of(WEDGE_GRAD_SLACK) {
                    // Progress is floating-point limited but the gradient is
                    // already tiny; the value error is quadratic in it.
                    break;
                }
                if norm2(&t) > T::of(WEDGE_T_NORM) {
                    return Ok(RateValue {
                        value: ExtReal::PosInfinity,
                        argmax: None,
                        witness: None,
                        iterations,
                    });
                }
                return Err(Error::DualNonConvergence {
                    iterations,
                    grad_norm: gn.as_f64(),
                    t_norm: norm2(&t).as_f64(),
                });
            }
            let mut dir = mat_vec_neg(&h, &grad);
            let mut slope_dir = dot(&grad, &dir);
            if slope_dir >= T::zero() {
                // curvature model broke; fall back to steepest descent
                h = identity(d);
                dir = grad.iter().map(|g| -*g).collect();
                slope_dir = dot(&grad, &dir);
            }
            let dir_norm = norm2(&dir);
            if dir_norm > T::of(MAX_STEP_NORM) {
                let scale = T::of(MAX_STEP_NORM) / dir_norm;
                for di in dir.iter_mut() {
                    *di = *di * scale;
                }
                slope_dir = slope_dir * scale;
            }

            let mut alpha = T::one();
            let mut accepted: Option<(Vec<T>, T)> = None;
            let mut best: Option<(Vec<T>, T)> = None;
            let mut frontier_hits = 0usize;
            for _ in 0..MAX_BACKTRACKS {
                let cand: Vec<T> = t
                    .iter()
                    .zip(&dir)
                    .map(|(ti, di)| *ti + alpha * *di)
                    .collect();
                if self.weight_spread_at(&cand) > T::of(PROBE_SPREAD_LIMIT) {
                    // Probe would tilt the transfer matrix past the
                    // floating-point frontier; shrink the step instead of
                    // paying for a doomed eigensolve.
                    frontier_hits += 1;
                    alpha = alpha * half;
                    continue;
                }
                let fc = match value_at(&cand) {
                    Ok(v) => v,
                    Err(e) if dual_probe_degenerated(&e) => {
                        frontier_hits += 1;
                        alpha = alpha * half;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                if fc <= fval + slope * alpha * slope_dir {
                    accepted = Some((cand, fc));
                    break;
                }
                if best.as_ref().map_or(true, |(_, fb)| fc < *fb) {
                    best = Some((cand, fc));
                }
                alpha *= half;
            }
            let (t_new, f_new) = match accepted {
                Some(step) => {
                    stalled = false;
                    step
                }
                None => {
                    // Sufficient decrease is below floating-point resolution:
                    // either the iterates are pressed against the frontier
                    // with the objective still sloping away (divergence), or
                    // we are at the optimum's float floor, where any
                    // gradient-norm reduction is worth accepting; otherwise
                    // reset the curvature model once.
                    let Some((cand, fc)) = best else {
                        // Every probe around `t` was beyond floating-point
                        // range: the iterate has already run off to infinity.
                        return Ok(RateValue {
                            value: ExtReal::PosInfinity,
                            argmax: None,
                            witness: None,
                            iterations,
                        });
                    };
                    let g_cand = match grad_at(&cand) {
                        Ok(g) => g,
                        Err(e) if dual_probe_degenerated(&e) => {
                            return Ok(RateValue {
                                value: ExtReal::PosInfinity,
                                argmax: None,
                                witness: None,
                                iterations,
                            });
                        }
                        Err(e) => return Err(e),
                    };
                    if norm2(&g_cand) < gn {
                        stalled = false;
                        // Keep the curvature model updating here: these tiny
                        // steps are exactly where it must learn a stiff
                        // direction, and resetting it would freeze progress.
                        bfgs_update(&mut h, &t, &grad, &cand, &g_cand);
                        t = cand;
                        fval = fc;
                        grad = g_cand;
                        continue;
                    }
                    if frontier_hits > 0 {
                        return Ok(RateValue {
                            value: ExtReal::PosInfinity,
                            argmax: None,
                            witness: None,
                            iterations,
                        });
                    }
                    if stalled {
                        return Err(Error::DualNonConvergence {
                            iterations,
                            grad_norm: gn.as_f64(),
                            t_norm: norm2(&t).as_f64(),
                        });
                    }
                    stalled = true;
                    h = identity(d);
                    continue;
                }
            };
            let grad_new = match grad_at(&t_new) {
                Ok(g) => g,
                Err(e) if dual_probe_degenerated(&e) => {
                    return Ok(RateValue {
                        value: ExtReal::PosInfinity,
                        argmax: None,
                        witness: None,
                        iterations,
                    });
                }
                Err(e) => return Err(e),
            };
            bfgs_update(&mut h, &t, &grad, &t_new, &grad_new);
            t = t_new;
            grad = grad_new;
            fval = f_new;
        }

        let witness = self.equilibrium_at(&t)?;
        Ok(RateValue {
            value: ExtReal::Finite(-fval),
            argmax: Some(t),
            witness: Some(witness),
            iterations,
        })
    }
}

fn identity<T: Scalar>(d: usize) -> Vec<Vec<T>> {
    let mut m = vec![vec![T::zero(); d]; d];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

fn mat_vec_neg<T: Scalar>(m: &[Vec<T>], v: &[T]) -> Vec<T> {
    m.iter()
        .map(|row| {
            let mut acc = KahanSum::new();
            for (a, b) in row.iter().zip(v) {
                acc.add(*a * *b);
            }
            -acc.value()
        })
        .collect()
}

/// Standard inverse-Hessian BFGS update; skipped when the curvature product
/// is too small to be trustworthy.
fn bfgs_update<T: Scalar>(h: &mut Vec<Vec<T>>, t_old: &[T], g_old: &[T], t_new: &[T], g_new: &[T]) {
    let d = t_old.len();
    let s: Vec<T> = t_new.iter().zip(t_old).map(|(a, b)| *a - *b).collect();
    let y: Vec<T> = g_new.iter().zip(g_old).map(|(a, b)| *a - *b).collect();
    let sy = dot(&s, &y);
    let guard = T::tolerance(1e-12) * norm2(&s) * norm2(&y);
    if sy <= guard {
        return;
    }
    let rho = T::one() / sy;
    // h <- (I - rho s y^T) h (I - rho y s^T) + rho s s^T
    let hy: Vec<T> = (0..d)
        .map(|i| {
            let mut acc = KahanSum::new();
            for j in 0..d {
                acc.add(h[i][j] * y[j]);
            }
            acc.value()
        })
        .collect();
    let yhy = dot(&y, &hy);
    for i in 0..d {
        for j in 0..d {
            let term = rho * (s[i] * hy[j] + hy[i] * s[j]);
            let add = rho * s[i] * s[j] * (T::one() + rho * yhy);
            h[i][j] = h[i][j] - term + add;
        }
    }
}

/// Brute-force Legendre conjugate from samples of `L` on a `t`-grid:
/// a lower bound of the true conjugate, adequate as an independent oracle
/// on dense grids.
pub struct GridConjugate<T> {
    dim: usize,
    step: T,
    samples: Vec<(Vec<T>, T)>,
}

impl<T: Scalar> GridConjugate<T> {
    pub fn new(dim: usize, step: T, samples: Vec<(Vec<T>, T)>) -> Result<Self> {
        if dim == 0 || dim > 2 {
            return Err(Error::invalid(
                "grid conjugate",
                format!("supported in dimension 1 or 2, got {dim}"),
            ));
        }
        if samples.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if step <= T::zero() {
            return Err(Error::invalid("grid conjugate", "step must be positive"));
        }
        for (point, _) in &samples {
            if point.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: point.len(),
                });
            }
        }
        Ok(GridConjugate { dim, step, samples })
    }

    /// Samples `L` of the handle on the regular grid `[lo, hi]` with the
    /// given step per axis.
    pub fn sample(handle: &RateFunctionHandle<T>, lo: &[T], hi: &[T], step: T) -> Result<Self> {
        let dim = handle.dim();
        if dim > 2 {
            return Err(Error::invalid(
                "grid conjugate",
                format!("supported in dimension 1 or 2, got {dim}"),
            ));
        }
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: lo.len().min(hi.len()),
            });
        }
        let counts: Vec<usize> = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| {
                if *b < *a {
                    0
                } else {
                    ((*b - *a) / step).as_f64().floor() as usize + 1
                }
            })
            .collect();
        let total: usize = counts.iter().product();
        if total == 0 {
            return Err(Error::invalid("grid conjugate", "empty grid"));
        }
        if total > 10_000_000 {
            return Err(Error::EnumerationCap {
                required: total as u128,
                cap: 10_000_000,
            });
        }
        let mut samples = Vec::with_capacity(total);
        let mut index = vec![0usize; dim];
        loop {
            let point: Vec<T> = index
                .iter()
                .zip(lo)
                .map(|(i, a)| *a + T::from_usize(*i).unwrap() * step)
                .collect();
            let l = handle.l_eval(&point)?;
            samples.push((point, l));
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return GridConjugate::new(dim, step, samples);
                }
                axis -= 1;
                index[axis] += 1;
                if index[axis] < counts[axis] {
                    break;
                }
                index[axis] = 0;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[(Vec<T>, T)] {
        &self.samples
    }

    /// `max over grid t of <t, x> - L(t)`.
    pub fn conjugate_at(&self, x: &[T]) -> T {
        let mut best = T::neg_infinity();
        for (t, l) in &self.samples {
            best = best.max(dot(t, x) - *l);
        }
        best
    }

    /// Reported accuracy bound: grid-resolution term plus the largest
    /// second difference of the samples as a curvature proxy.
    pub fn gap_bound(&self, x: &[T]) -> T {
        let mut curvature = T::zero();
        for w in self.samples.windows(3) {
            let second = (w[2].1 - w[1].1 - (w[1].1 - w[0].1)).abs();
            curvature = curvature.max(second);
        }
        self.step * norm2(x) + curvature
    }
}

/// One window of the entropy-approximation construction.
#[derive(Clone, Debug)]
pub struct ApproximationStep<T> {
    pub window: usize,
    pub family_dim: usize,
    /// The matched moment target (after interior perturbation, when applied).
    pub target_moments: Vec<T>,
    pub perturbed: bool,
    pub dual_point: Option<Vec<T>>,
    pub measure: Option<MarkovMeasure<T>>,
    /// `max_i |moments(measure)_i - target_moments_i|`.
    pub moment_error: Option<T>,
    pub entropy: Option<T>,
    /// `entropy(measure) - entropy(target)`.
    pub entropy_gap: Option<T>,
    /// Set when the dual failed or the moment tolerance was missed.
    pub failure: Option<String>,
}

/// Runs the moment-matching construction for windows `1..=max_window`:
/// match the target's cylinder moments with an equilibrium state at every
/// window.  Boundary targets (a zero cylinder probability) and dual
/// divergences are retried once with the moment vector pulled toward the
/// `f`-equilibrium moments by `INTERIOR_PERTURBATION`.
pub fn entropy_approximation_sequence<T: Scalar>(
    space: &ShiftSpace,
    f: &Potential<T>,
    target: &InvariantMeasure<T>,
    max_window: usize,
    moment_tol: T,
) -> Result<Vec<ApproximationStep<T>>> {
    if target.space() != space {
        return Err(Error::SpaceMismatch);
    }
    if max_window == 0 {
        return Err(Error::ZeroWindow);
    }
    let target_entropy = target.entropy_rate();
    let mut steps = Vec::with_capacity(max_window);
    for n in 1..=max_window {
        let family = cylinder_family::<T>(space, n)?;
        let handle = RateFunctionHandle::new(space, f, &family)?;
        let words = space.admissible_words(n)?;
        let full_probs: Vec<T> = words
            .iter()
            .map(|w| target.cylinder_probability(w))
            .collect();
        let x: Vec<T> = full_probs[..family.dim()].to_vec();
        let boundary = full_probs.iter().any(|p| *p == T::zero());

        let perturb = |x0: &[T]| -> Result<Vec<T>> {
            let eta = T::of(INTERIOR_PERTURBATION);
            let center = handle.l_grad(&vec![T::zero(); handle.dim()])?;
            Ok(x0
                .iter()
                .zip(&center)
                .map(|(xi, ci)| (T::one() - eta) * *xi + eta * *ci)
                .collect())
        };

        let (x_used, perturbed, outcome) = if boundary {
            let xp = perturb(&x)?;
            let o = handle.rate_at(&xp);
            (xp, true, o)
        } else {
            match handle.rate_at(&x) {
                Ok(rv) if !rv.value.is_finite() => {
                    let xp = perturb(&x)?;
                    let o = handle.rate_at(&xp);
                    (xp, true, o)
                }
                other => (x.clone(), false, other),
            }
        };

        let step = match outcome {
            Ok(rv) => match (&rv.value, rv.argmax, rv.witness) {
                (ExtReal::Finite(_), Some(t_star), Some(chain)) => {
                    let mixture = InvariantMeasure::from_markov(chain.clone());
                    let got = mixture.moments(&family)?;
                    let mut err = T::zero();
                    for (gi, xi) in got.iter().zip(&x_used) {
                        err = err.max((*gi - *xi).abs());
                    }
                    let entropy = chain.entropy_rate();
                    let failure = if err > moment_tol {
                        Some(format!(
                            "moment error {err:e} exceeds tolerance {moment_tol:e}"
                        ))
                    } else {
                        None
                    };
                    ApproximationStep {
                        window: n,
                        family_dim: family.dim(),
                        target_moments: x_used,
                        perturbed,
                        dual_point: Some(t_star),
                        measure: Some(chain),
                        moment_error: Some(err),
                        entropy: Some(entropy),
                        entropy_gap: Some(entropy - target_entropy),
                        failure,
                    }
                }
                _ => ApproximationStep {
                    window: n,
                    family_dim: family.dim(),
                    target_moments: x_used,
                    perturbed,
                    dual_point: None,
                    measure: None,
                    moment_error: None,
                    entropy: None,
                    entropy_gap: None,
                    failure: Some(
                        "dual ascent diverged even after interior perturbation".to_string(),
                    ),
                },
            },
            Err(e) => ApproximationStep {
                window: n,
                family_dim: family.dim(),
                target_moments: x_used,
                perturbed,
                dual_point: None,
                measure: None,
                moment_error: None,
                entropy: None,
                entropy_gap: None,
                failure: Some(format!("dual ascent failed: {e}")),
            },
        };
        steps.push(step);
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pressure::{equilibrium_state, pressure_spectral};
    use crate::shift::Word;

    fn full2() -> ShiftSpace {
        ShiftSpace::full_shift(2).unwrap()
    }

    fn golden() -> ShiftSpace {
        ShiftSpace::sft(&[vec![1, 1], vec![1, 0]]).unwrap()
    }

    fn ones_handle() -> RateFunctionHandle<f64> {
        let f2 = full2();
        let f = Potential::zero(&f2).unwrap();
        let ones = Potential::new(&f2, 1, vec![0.0, 1.0]).unwrap();
        let family = ObservableFamily::new(&f2, &[ones]).unwrap();
        RateFunctionHandle::new(&f2, &f, &family).unwrap()
    }

    /// closed form for the full 2-shift, f = 0, S = (1_{[1]})
    fn l_closed(t: f64) -> f64 {
        ((1.0 + t.exp()) / 2.0).ln()
    }

    fn i_closed(x: f64) -> f64 {
        2.0f64.ln() + x * x.ln() + (1.0 - x) * (1.0 - x).ln()
    }

    #[test]
    fn q_star_matches_the_variational_defect() {
        let f2 = full2();
        let f = Potential::<f64>::zero(&f2).unwrap();
        let eq = InvariantMeasure::from_markov(equilibrium_state(&f2, &f).unwrap());
        assert!(q_star(&f2, &f, &eq).unwrap().abs() < 1e-8);

        let bern = InvariantMeasure::from_markov(
            MarkovMeasure::new(&f2, 1, vec![vec![0.25, 0.75], vec![0.25, 0.75]], None).unwrap(),
        );
        assert!((q_star(&f2, &f, &bern).unwrap() - 0.130812).abs() < 1e-6);

        let dirac = InvariantMeasure::from_markov(
            MarkovMeasure::dirac_orbit(&f2, &Word::new(vec![0])).unwrap(),
        );
        assert!((q_star(&f2, &f, &dirac).unwrap() - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cumulant_matches_the_closed_form() {
        let h = ones_handle();
        assert_eq!(h.l_eval(&[0.0]).unwrap(), 0.0);
        for t in [-2.0, -0.5, 1.0, 3.0f64.ln(), 2.5] {
            assert!(
                (h.l_eval(&[t]).unwrap() - l_closed(t)).abs() < 1e-11,
                "t = {t}"
            );
        }
        assert!((h.l_eval(&[3.0f64.ln()]).unwrap() - 2.0f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn cumulant_matches_direct_pressure_differences() {
        let g = golden();
        let f = Potential::<f64>::new(&g, 2, vec![0.3, -0.2, 0.6]).unwrap();
        let fam = ObservableFamily::new(
            &g,
            &[
                Potential::indicator(&g, &Word::new(vec![0])).unwrap(),
                Potential::indicator(&g, &Word::new(vec![1, 0])).unwrap(),
            ],
        )
        .unwrap();
        let h = RateFunctionHandle::new(&g, &f, &fam).unwrap();
        let t = [0.7, -1.1];
        let ts = fam.combination(&t).unwrap();
        let combined = Potential::linear_combination(&g, &[(1.0, &f), (1.0, &ts)]).unwrap();
        let direct = pressure_spectral(&g, &combined).unwrap().value
            - pressure_spectral(&g, &f).unwrap().value;
        assert!((h.l_eval(&t).unwrap() - direct).abs() < 1e-11);
    }

    #[test]
    fn cumulant_gradient_is_the_equilibrium_moment_vector() {
        let h = ones_handle();
        let g0 = h.l_grad(&[0.0]).unwrap();
        assert!((g0[0] - 0.5).abs() < 1e-10);
        let g3 = h.l_grad(&[3.0f64.ln()]).unwrap();
        assert!((g3[0] - 0.75).abs() < 1e-10);
    }

    #[test]
    fn cumulant_gradient_matches_finite_differences() {
        let g = golden();
        let f = Potential::<f64>::new(&g, 2, vec![0.2, -0.5, 0.4]).unwrap();
        let fam = ObservableFamily::new(
            &g,
            &[
                Potential::indicator(&g, &Word::new(vec![0])).unwrap(),
                Potential::indicator(&g, &Word::new(vec![0, 1])).unwrap(),
            ],
        )
        .unwrap();
        let h = RateFunctionHandle::new(&g, &f, &fam).unwrap();
        let t = [0.4, -0.8];
        let grad = h.l_grad(&t).unwrap();
        let step = 1e-5;
        for i in 0..2 {
            let mut up = t;
            let mut dn = t;
            up[i] += step;
            dn[i] -= step;
            let fd = (h.l_eval(&up).unwrap() - h.l_eval(&dn).unwrap()) / (2.0 * step);
            assert!((grad[i] - fd).abs() < 1e-6, "component {i}");
        }
    }

    #[test]
    fn rate_vanishes_at_the_equilibrium_moments() {
        let h = ones_handle();
        let x = h.l_grad(&[0.0]).unwrap();
        let rv = h.rate_at(&x).unwrap();
        let value = rv.value.finite().unwrap();
        assert!(value.abs() < 1e-9);
        assert!(norm2(rv.argmax.as_ref().unwrap()) < 1e-6);
    }

    #[test]
    fn rate_matches_the_binary_entropy_form() {
        let h = ones_handle();
        for x in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let rv = h.rate_at(&[x]).unwrap();
            let got = rv.value.finite().unwrap();
            assert!(
                (got - i_closed(x)).abs() < 1e-7,
                "x = {x}: got {got}, closed {}",
                i_closed(x)
            );
            // witness reproduces the moment
            let w = rv.witness.unwrap();
            let mu = InvariantMeasure::from_markov(w);
            let m = mu.moments(h.family()).unwrap();
            assert!((m[0] - x).abs() < 1e-7);
        }
    }

    #[test]
    fn rate_flags_points_outside_the_moment_range() {
        let h = ones_handle();
        let rv = h.rate_at(&[1.2]).unwrap();
        assert_eq!(rv.value, ExtReal::PosInfinity);
        assert!(rv.argmax.is_none());
        let rv = h.rate_at(&[-0.05]).unwrap();
        assert_eq!(rv.value, ExtReal::PosInfinity);
    }

    #[test]
    fn rate_cache_replays_bit_identical_values() {
        let h = ones_handle();
        let a = h.rate_at(&[0.7]).unwrap();
        let b = h.rate_at(&[0.7]).unwrap();
        match (a.value, b.value) {
            (ExtReal::Finite(va), ExtReal::Finite(vb)) => {
                assert_eq!(va.to_bits(), vb.to_bits());
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn young_equality_holds_at_gradient_pairs() {
        let h = ones_handle();
        for t in [-1.0, 0.3, 1.4] {
            let x = h.l_grad(&[t]).unwrap();
            let i = h.rate_at(&x).unwrap().value.finite().unwrap();
            let resid = i + h.l_eval(&[t]).unwrap() - t * x[0];
            assert!(resid.abs() < 1e-7, "t = {t}: residual {resid}");
        }
    }

    #[test]
    fn grid_oracle_reproduces_the_conjugate() {
        let h = ones_handle();
        let grid = GridConjugate::sample(&h, &[-12.0], &[12.0], 1e-3).unwrap();
        assert!(grid.conjugate_at(&[0.5]).abs() < 1e-6);
        assert!((grid.conjugate_at(&[0.9]) - i_closed(0.9)).abs() < 1e-5);
        let direct = h.rate_at(&[0.9]).unwrap().value.finite().unwrap();
        assert!((grid.conjugate_at(&[0.9]) - direct).abs() < 1e-5);
    }

    #[test]
    fn grid_oracle_validates_its_input() {
        assert!(GridConjugate::<f64>::new(3, 0.1, vec![(vec![0.0; 3], 0.0)]).is_err());
        assert!(GridConjugate::<f64>::new(1, 0.1, vec![]).is_err());
        assert!(GridConjugate::<f64>::new(1, -0.5, vec![(vec![0.0], 0.0)]).is_err());
    }

    #[test]
    fn cylinder_families_have_the_contracted_dimensions() {
        assert_eq!(cylinder_family::<f64>(&full2(), 1).unwrap().dim(), 1);
        assert_eq!(cylinder_family::<f64>(&golden(), 2).unwrap().dim(), 2);
        assert_eq!(cylinder_family::<f64>(&full2(), 2).unwrap().dim(), 3);
    }

    #[test]
    fn approximation_sequence_fixes_equilibrium_targets() {
        let g = golden();
        let f = Potential::<f64>::new(&g, 2, vec![0.3, -0.4, 0.1]).unwrap();
        let target = InvariantMeasure::from_markov(equilibrium_state(&g, &f).unwrap());
        let steps = entropy_approximation_sequence(&g, &f, &target, 3, 1e-6).unwrap();
        assert_eq!(steps.len(), 3);
        for s in &steps {
            assert!(s.failure.is_none(), "window {}: {:?}", s.window, s.failure);
            assert!(!s.perturbed);
            assert!(s.moment_error.unwrap() < 1e-9);
            assert!(s.entropy_gap.unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn approximation_sequence_approaches_a_mixture_target() {
        let f2 = full2();
        let f = Potential::zero(&f2).unwrap();
        let bern = InvariantMeasure::from_markov(
            MarkovMeasure::new(&f2, 1, vec![vec![0.5, 0.5], vec![0.5, 0.5]], None).unwrap(),
        );
        let dirac = InvariantMeasure::from_markov(
            MarkovMeasure::dirac_orbit(&f2, &Word::new(vec![0])).unwrap(),
        );
        let target = InvariantMeasure::mix(&[(0.5, bern), (0.5, dirac)]).unwrap();
        let steps = entropy_approximation_sequence(&f2, &f, &target, 4, 1e-6).unwrap();
        let h_target = 0.5 * 2.0f64.ln();
        assert!((target.entropy_rate() - h_target).abs() < 1e-12);
        let mut last_gap = f64::INFINITY;
        for s in &steps {
            assert!(s.failure.is_none(), "window {}: {:?}", s.window, s.failure);
            // The Bernoulli component charges every cylinder, so the target
            // stays interior and no perturbation is needed.
            assert!(!s.perturbed);
            let gap = s.entropy_gap.unwrap();
            assert!(gap >= -1e-9, "window {}: gap {gap}", s.window);
            assert!(
                gap <= last_gap + 1e-9,
                "window {}: gap not decreasing",
                s.window
            );
            last_gap = gap;
        }
        assert!(steps.last().unwrap().entropy_gap.unwrap() < 0.11);
    }

    #[test]
    fn approximation_sequence_perturbs_boundary_targets() {
        let f2 = full2();
        let f = Potential::zero(&f2).unwrap();
        // A single periodic orbit zeroes every cylinder off its path, so the
        // moment target sits on the simplex boundary at every window.
        let dirac = InvariantMeasure::from_markov(
            MarkovMeasure::dirac_orbit(&f2, &Word::new(vec![0])).unwrap(),
        );
        let steps = entropy_approximation_sequence(&f2, &f, &dirac, 3, 1e-3).unwrap();
        assert_eq!(steps.len(), 3);
        for s in &steps {
            assert!(s.failure.is_none(), "window {}: {:?}", s.window, s.failure);
            assert!(s.perturbed, "window {} should need perturbation", s.window);
            let gap = s.entropy_gap.unwrap();
            // Target entropy is zero, so the gap is the (tiny) entropy the
            // interior perturbation lets back in.
            assert!(
                gap >= -1e-12 && gap < 1e-3,
                "window {}: gap {gap}",
                s.window
            );
        }
    }
}
