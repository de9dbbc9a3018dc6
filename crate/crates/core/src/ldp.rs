//! Empirical-measure point clouds and finite-size large-deviation reports.
//!
//! Each ensemble (periodic orbits, separated sets, Gibbs cylinders) pushes its
//! weighted configurations forward through an observable family, giving a
//! cloud of weighted points in `R^d`.  Box queries measure the cloud mass in a
//! product of intervals; `(1/n) log mass` is the finite-size rate estimate,
//! which the report compares against the convex-duality rate function.

use std::collections::BTreeMap;
use std::fmt;

use crate::convex::RateFunctionHandle;
use crate::error::{Error, Result};
use crate::measure::MarkovMeasure;
use crate::potential::{ObservableFamily, Potential};
use crate::pressure::equilibrium_state;
use crate::scalar::{ExtReal, KahanSum, Scalar};
use crate::shift::ShiftSpace;

/// Cloud weights must total 1 within this tolerance.
pub const CLOUD_WEIGHT_TOL: f64 = 1e-12;
/// Points closer than this (per coordinate) merge into one atom.
pub const POINT_MERGE_TOL: f64 = 1e-12;
/// Coarse grid step for the planar box infimum.
pub const INF_GRID_COARSE_STEP: f64 = 0.02;
/// Local refinement scale for the planar box infimum.
pub const INF_GRID_REFINE_TOL: f64 = 1e-4;
/// Atom-counting constant `c` in the report slack `(d log(n+1) + log c)/n`.
pub const SLACK_ATOM_CONSTANT: f64 = 1.0;
const INF_GRID_EVAL_BUDGET: usize = 20_000;

/// Which ensemble produced a cloud.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Provenance {
    Periodic,
    Separated,
    Gibbs,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Periodic => "periodic",
            Provenance::Separated => "separated",
            Provenance::Gibbs => "gibbs",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A finite distribution on `R^d`: positive weights summing to 1, one point
/// each, tagged with the system size `n` and the ensemble it came from.
#[derive(Clone, Debug)]
pub struct WeightedPointCloud<T> {
    atoms: Vec<(T, Vec<T>)>,
    n: usize,
    dim: usize,
    provenance: Provenance,
}

impl<T: Scalar> WeightedPointCloud<T> {
    pub fn new(atoms: Vec<(T, Vec<T>)>, n: usize, provenance: Provenance) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("point cloud", "index n must be positive"));
        }
        if atoms.is_empty() {
            return Err(Error::invalid("point cloud", "needs at least one atom"));
        }
        let dim = atoms[0].1.len();
        let mut total = KahanSum::new();
        for (i, (w, p)) in atoms.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if !(*w > T::zero()) {
                return Err(Error::invalid(
                    "point cloud",
                    format!("atom {i} has non-positive weight"),
                ));
            }
            total.add(*w);
        }
        let defect = (total.value() - T::one()).abs();
        if defect > T::tolerance(CLOUD_WEIGHT_TOL) {
            return Err(Error::invalid(
                "point cloud",
                format!("weights sum to {}, not 1", total.value().as_f64()),
            ));
        }
        Ok(Self {
            atoms,
            n,
            dim,
            provenance,
        })
    }

    pub fn atoms(&self) -> &[(T, Vec<T>)] {
        &self.atoms
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn total_weight(&self) -> T {
        let mut total = KahanSum::new();
        for (w, _) in &self.atoms {
            total.add(*w);
        }
        total.value()
    }

    /// A copy with atoms sorted by point and equal points (per-coordinate
    /// within `POINT_MERGE_TOL`) combined, weights added.
    pub fn merged(&self) -> Self {
        let mut order: Vec<usize> = (0..self.atoms.len()).collect();
        order.sort_by(|&a, &b| cmp_points(&self.atoms[a].1, &self.atoms[b].1));
        let tol = T::tolerance(POINT_MERGE_TOL);
        let mut atoms: Vec<(T, Vec<T>)> = Vec::new();
        for &i in &order {
            let (w, p) = &self.atoms[i];
            match atoms.last_mut() {
                Some((lw, lp)) if points_equal(lp, p, tol) => *lw = *lw + *w,
                _ => atoms.push((*w, p.clone())),
            }
        }
        Self {
            atoms,
            n: self.n,
            dim: self.dim,
            provenance: self.provenance,
        }
    }

    /// Total weight of atoms whose point lies in the box.
    pub fn mass_in(&self, query: &BoxQuery<T>) -> Result<T> {
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: query.dim(),
            });
        }
        let mut mass = KahanSum::new();
        for (w, p) in &self.atoms {
            if query.contains(p) {
                mass.add(*w);
            }
        }
        Ok(mass.value())
    }
}

fn cmp_points<T: Scalar>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("cloud points are NaN-free") {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

fn points_equal<T: Scalar>(a: &[T], b: &[T], tol: T) -> bool {
    a.iter().zip(b).all(|(x, y)| (*x - *y).abs() <= tol)
}

/// A product of intervals with per-face open/closed flags.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxQuery<T> {
    lo: Vec<T>,
    hi: Vec<T>,
    lo_open: Vec<bool>,
    hi_open: Vec<bool>,
}

impl<T: Scalar> BoxQuery<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>, lo_open: Vec<bool>, hi_open: Vec<bool>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::invalid("box query", "needs at least one interval"));
        }
        if lo.len() != hi.len() || lo.len() != lo_open.len() || lo.len() != hi_open.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len().max(lo_open.len()).max(hi_open.len()),
            });
        }
        for (j, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(*a <= *b) {
                return Err(Error::invalid(
                    "box query",
                    format!("interval {j} has lo > hi"),
                ));
            }
        }
        Ok(Self {
            lo,
            hi,
            lo_open,
            hi_open,
        })
    }

    /// All faces closed.
    pub fn closed(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        let d = lo.len();
        Self::new(lo, hi, vec![false; d], vec![false; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[T] {
        &self.lo
    }

    pub fn hi(&self) -> &[T] {
        &self.hi
    }

    pub fn lo_open(&self) -> &[bool] {
        &self.lo_open
    }

    pub fn hi_open(&self) -> &[bool] {
        &self.hi_open
    }

    pub fn contains(&self, point: &[T]) -> bool {
        debug_assert_eq!(point.len(), self.lo.len());
        point.iter().enumerate().all(|(j, x)| {
            let lo_ok = if self.lo_open[j] {
                *x > self.lo[j]
            } else {
                *x >= self.lo[j]
            };
            let hi_ok = if self.hi_open[j] {
                *x < self.hi[j]
            } else {
                *x <= self.hi[j]
            };
            lo_ok && hi_ok
        })
    }

    /// The same intervals with every face closed.
    pub fn closure(&self) -> Self {
        Self {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            lo_open: vec![false; self.lo.len()],
            hi_open: vec![false; self.hi.len()],
        }
    }

    /// Compact interval notation, e.g. `[0.8,1]` or `[0,0.5)x(0.2,1]`.
    pub fn label(&self) -> String {
        let mut out = String::new();
        for j in 0..self.dim() {
            if j > 0 {
                out.push('x');
            }
            out.push(if self.lo_open[j] { '(' } else { '[' });
            out.push_str(&format!("{},{}", self.lo[j].as_f64(), self.hi[j].as_f64()));
            out.push(if self.hi_open[j] { ')' } else { ']' });
        }
        out
    }
}

impl<T: Scalar> fmt::Display for BoxQuery<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn check_one_dimensional(space: &ShiftSpace, op: &'static str) -> Result<()> {
    if space.dimension() != 1 {
        return Err(Error::OneDimensionalOnly { op });
    }
    Ok(())
}

fn check_spaces<T: Scalar>(
    space: &ShiftSpace,
    f: &Potential<T>,
    family: &ObservableFamily<T>,
) -> Result<()> {
    if f.space() != space || family.space() != space {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

/// Normalize exponential weights in log domain and assemble the cloud.
fn normalized_cloud<T: Scalar>(
    log_weights: Vec<T>,
    points: Vec<Vec<T>>,
    n: usize,
    provenance: Provenance,
) -> Result<WeightedPointCloud<T>> {
    let max = log_weights
        .iter()
        .fold(T::neg_infinity(), |acc, v| if *v > acc { *v } else { acc });
    let shifted: Vec<T> = log_weights.iter().map(|lw| (*lw - max).exp()).collect();
    let mut total = KahanSum::new();
    for v in &shifted {
        total.add(*v);
    }
    let inv = T::one() / total.value();
    let atoms = shifted
        .into_iter()
        .zip(points)
        .map(|(w, p)| (w * inv, p))
        .collect();
    WeightedPointCloud::new(atoms, n, provenance)
}

/// One atom per cyclically admissible `n`-word, weighted by the exponential
/// of the cyclic Birkhoff sum of `f`, located at the cyclic averages of the
/// observables.
pub fn empirical_distribution_periodic<T: Scalar>(
    space: &ShiftSpace,
    f: &Potential<T>,
    n: usize,
    family: &ObservableFamily<T>,
) -> Result<WeightedPointCloud<T>> {
    check_one_dimensional(space, "empirical_distribution_periodic")?;
    check_spaces(space, f, family)?;
    if n == 0 {
        return Err(Error::invalid(
            "empirical_distribution_periodic",
            "period n must be positive",
        ));
    }
    let cycles = space.periodic_points(n)?;
    if cycles.is_empty() {
        return Err(Error::EmptyPeriodicSet { n });
    }
    let mut log_weights = Vec::with_capacity(cycles.len());
    let mut points = Vec::with_capacity(cycles.len());
    for w in &cycles {
        log_weights.push(f.cyclic_birkhoff_sum(w));
        points.push(family.cyclic_averages(w));
    }
    normalized_cloud(log_weights, points, n, Provenance::Periodic)
}

/// One atom per separated-set representative at scale `2^-(r+1)`, extended
/// canonically far enough to read both `f` and the observables over `n`
/// windows; weights are exponential linear Birkhoff sums.
pub fn empirical_distribution_separated<T: Scalar>(
    space: &ShiftSpace,
    f: &Potential<T>,
    n: usize,
    r: usize,
    family: &ObservableFamily<T>,
) -> Result<WeightedPointCloud<T>> {
    check_one_dimensional(space, "empirical_distribution_separated")?;
    check_spaces(space, f, family)?;
    if n == 0 {
        return Err(Error::invalid(
            "empirical_distribution_separated",
            "length n must be positive",
        ));
    }
    let reps = space.separated_set_representatives(n, r)?;
    let window = f.window().max(family.window());
    let target = n + r.max(window - 1);
    let mut log_weights = Vec::with_capacity(reps.len());
    let mut points = Vec::with_capacity(reps.len());
    for rep in &reps {
        let ext = space.canonical_extension(rep, target)?;
        log_weights.push(f.birkhoff_sum(&ext, n));
        points.push(family.averages_along(&ext, n));
    }
    normalized_cloud(log_weights, points, n, Provenance::Separated)
}

/// Exact pushforward of a Markov measure: one atom per admissible word long
/// enough for `n` observable windows, weighted by its cylinder probability.
/// Atoms at equal points are merged.
pub fn gibbs_pushforward<T: Scalar>(
    measure: &MarkovMeasure<T>,
    n: usize,
    family: &ObservableFamily<T>,
) -> Result<WeightedPointCloud<T>> {
    if family.space() != measure.space() {
        return Err(Error::SpaceMismatch);
    }
    if n == 0 {
        return Err(Error::invalid(
            "gibbs_pushforward",
            "length n must be positive",
        ));
    }
    let len = n + family.window() - 1;
    let words = measure.space().admissible_words(len)?;
    // Deterministic accumulation: group by exact point bit pattern first, in
    // key order, then let `merged` fold in any near-equal stragglers.
    let mut groups: BTreeMap<Vec<u64>, (KahanSum<T>, Vec<T>)> = BTreeMap::new();
    for w in &words {
        let weight = measure.cylinder_probability(w);
        if !(weight > T::zero()) {
            continue;
        }
        let point = family.averages_along(w, n);
        let key: Vec<u64> = point.iter().map(|v| v.bit_pattern()).collect();
        groups
            .entry(key)
            .or_insert_with(|| (KahanSum::new(), point))
            .0
            .add(weight);
    }
    let atoms: Vec<(T, Vec<T>)> = groups
        .into_values()
        .map(|(acc, point)| (acc.value(), point))
        .collect();
    Ok(WeightedPointCloud::new(atoms, n, Provenance::Gibbs)?.merged())
}

/// `gibbs_pushforward` of the equilibrium state of `f_base`.
pub fn empirical_distribution_gibbs<T: Scalar>(
    space: &ShiftSpace,
    f_base: &Potential<T>,
    n: usize,
    family: &ObservableFamily<T>,
) -> Result<WeightedPointCloud<T>> {
    check_one_dimensional(space, "empirical_distribution_gibbs")?;
    check_spaces(space, f_base, family)?;
    let mu = equilibrium_state(space, f_base)?;
    gibbs_pushforward(&mu, n, family)
}

/// `(1/n) log` of the cloud mass inside the box; `-inf` flag on zero mass.
pub fn rate_estimate<T: Scalar>(
    cloud: &WeightedPointCloud<T>,
    query: &BoxQuery<T>,
) -> Result<ExtReal<T>> {
    let mass = cloud.mass_in(query)?;
    Ok(log_mass_rate(mass, cloud.n()))
}

fn log_mass_rate<T: Scalar>(mass: T, n: usize) -> ExtReal<T> {
    if mass > T::zero() {
        ExtReal::Finite(mass.ln() / T::from_usize(n).unwrap())
    } else {
        ExtReal::NegInfinity
    }
}

/// Infimum of the rate function over the closure of the box.
///
/// In one dimension convexity settles it: zero if the equilibrium moment lies
/// inside, else the rate at the nearest endpoint.  In two dimensions a coarse
/// grid (step `INF_GRID_COARSE_STEP`) is refined locally to
/// `INF_GRID_REFINE_TOL` within a fixed evaluation budget.  `+inf` means every
/// probe diverged: the box misses the moment range (boundary-touching boxes
/// inherit the divergence flag from `rate_at`).
pub fn inf_rate_over_box<T: Scalar>(
    handle: &RateFunctionHandle<T>,
    query: &BoxQuery<T>,
) -> Result<ExtReal<T>> {
    let d = handle.dim();
    if query.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: query.dim(),
        });
    }
    if d == 0 || d > 2 {
        return Err(Error::invalid(
            "inf_rate_over_box",
            format!("supports dimension 1 or 2, got {d}"),
        ));
    }
    let closed = query.closure();
    let center = handle.l_grad(&vec![T::zero(); d])?;
    if closed.contains(&center) {
        return Ok(ExtReal::Finite(T::zero()));
    }
    if d == 1 {
        let endpoint = if center[0] < closed.lo()[0] {
            closed.lo()[0]
        } else {
            closed.hi()[0]
        };
        return Ok(handle.rate_at(&[endpoint])?.value);
    }

    let step = T::of(INF_GRID_COARSE_STEP);
    let xs = grid_axis(closed.lo()[0], closed.hi()[0], step);
    let ys = grid_axis(closed.lo()[1], closed.hi()[1], step);
    let mut best: Option<(T, [T; 2])> = None;
    for &x in &xs {
        for &y in &ys {
            if let ExtReal::Finite(v) = handle.rate_at(&[x, y])?.value {
                if best.map_or(true, |(bv, _)| v < bv) {
                    best = Some((v, [x, y]));
                }
            }
        }
    }
    let Some((mut bv, mut bp)) = best else {
        return Ok(ExtReal::PosInfinity);
    };

    let half = T::of(0.5);
    let mut h = step * half;
    let floor = T::of(INF_GRID_REFINE_TOL);
    let mut budget = INF_GRID_EVAL_BUDGET;
    const OFFSETS: [(f64, f64); 8] = [
        (-1.0, -1.0),
        (-1.0, 0.0),
        (-1.0, 1.0),
        (0.0, -1.0),
        (0.0, 1.0),
        (1.0, -1.0),
        (1.0, 0.0),
        (1.0, 1.0),
    ];
    while h >= floor && budget > 0 {
        let mut improved: Option<(T, [T; 2])> = None;
        for (dx, dy) in OFFSETS {
            let cand = [
                (bp[0] + h * T::of(dx))
                    .max(closed.lo()[0])
                    .min(closed.hi()[0]),
                (bp[1] + h * T::of(dy))
                    .max(closed.lo()[1])
                    .min(closed.hi()[1]),
            ];
            if cand[0] == bp[0] && cand[1] == bp[1] {
                continue;
            }
            budget -= 1;
            if let ExtReal::Finite(v) = handle.rate_at(&cand)?.value {
                if v < bv && improved.map_or(true, |(iv, _)| v < iv) {
                    improved = Some((v, cand));
                }
            }
            if budget == 0 {
                break;
            }
        }
        match improved {
            Some((v, p)) => {
                bv = v;
                bp = p;
            }
            None => h = h * half,
        }
    }
    Ok(ExtReal::Finite(bv))
}

fn grid_axis<T: Scalar>(lo: T, hi: T, step: T) -> Vec<T> {
    let mut nodes = vec![lo];
    let mut k = 1usize;
    loop {
        let x = lo + T::from_usize(k).unwrap() * step;
        if x >= hi || k > 1_000_000 {
            break;
        }
        nodes.push(x);
        k += 1;
    }
    if *nodes.last().unwrap() < hi {
        nodes.push(hi);
    }
    nodes
}

fn neg_ext<T: Scalar>(e: ExtReal<T>) -> ExtReal<T> {
    match e {
        ExtReal::Finite(v) => {
            // keep zero unsigned so reports never print -0
            ExtReal::Finite(if v == T::zero() { T::zero() } else { -v })
        }
        ExtReal::PosInfinity => ExtReal::NegInfinity,
        ExtReal::NegInfinity => ExtReal::PosInfinity,
    }
}

/// One row of the large-deviation comparison table.
#[derive(Clone, Debug)]
pub struct LdpRow<T> {
    pub variant: Provenance,
    pub n: usize,
    pub mass: T,
    /// `(1/n) log` of the box mass (`-inf` on zero mass).
    pub rate_estimate: ExtReal<T>,
    /// `-inf_B I`, the large-deviation prediction for the estimate's limit.
    pub neg_inf_rate: ExtReal<T>,
    /// Atom-counting allowance `(d log(n+1) + log c)/n`.
    pub slack: T,
    /// `neg_inf_rate - rate_estimate` when both are finite.
    pub gap: Option<T>,
}

/// The comparison table for one box, one ensemble, several sizes.
#[derive(Clone, Debug)]
pub struct LdpReport<T> {
    pub variant: Provenance,
    pub box_query: BoxQuery<T>,
    pub rows: Vec<LdpRow<T>>,
}

/// Builds the cloud for each `n`, estimates the box rate, and sets it against
/// the rate-function infimum over the same box.  Separated clouds use
/// separation index `r = 0`, where representative enumeration is exact.
pub fn ldp_report<T: Scalar>(
    space: &ShiftSpace,
    f: &Potential<T>,
    family: &ObservableFamily<T>,
    query: &BoxQuery<T>,
    ns: &[usize],
    variant: Provenance,
) -> Result<LdpReport<T>> {
    if query.dim() != family.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            got: query.dim(),
        });
    }
    let handle = RateFunctionHandle::new(space, f, family)?;
    let neg_inf_rate = neg_ext(inf_rate_over_box(&handle, query)?);
    let d = T::from_usize(family.dim()).unwrap();
    let log_c = T::of(SLACK_ATOM_CONSTANT).ln();
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let cloud = match variant {
            Provenance::Periodic => empirical_distribution_periodic(space, f, n, family)?,
            Provenance::Separated => empirical_distribution_separated(space, f, n, 0, family)?,
            Provenance::Gibbs => empirical_distribution_gibbs(space, f, n, family)?,
        };
        let mass = cloud.mass_in(query)?;
        let rate_estimate = log_mass_rate(mass, n);
        let slack = (d * T::from_usize(n + 1).unwrap().ln() + log_c) / T::from_usize(n).unwrap();
        let gap = match (neg_inf_rate, rate_estimate) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => Some(a - b),
            _ => None,
        };
        rows.push(LdpRow {
            variant,
            n,
            mass,
            rate_estimate,
            neg_inf_rate,
            slack,
            gap,
        });
    }
    Ok(LdpReport {
        variant,
        box_query: query.clone(),
        rows,
    })
}
