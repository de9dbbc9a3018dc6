//! JSON experiment descriptions and their validation.
//!
//! A config names a shift space, a base potential, one task with its
//! parameters, and output/parallelism knobs.  Every spec type knows how to
//! build the core object it describes; validation is exactly "build
//! everything without computing", so a config that validates cannot fail
//! validation again inside the runner.  Errors carry a dotted field pointer
//! (`task.ldp-report.ns`) naming what to fix.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::convex::cylinder_family;
use crate::error::{Error, Result};
use crate::ldp::{BoxQuery, Provenance};
use crate::measure::{InvariantMeasure, MarkovMeasure};
use crate::potential::{ObservableFamily, PairPotential, Potential};
use crate::pressure::{
    equilibrium_state, DEFAULT_BOX_TERM_BUDGET, DEFAULT_MAX_STRIP_WIDTH, DEFAULT_STRIP_STATE_CAP,
};
use crate::shift::{ShiftSpace, Symbol, Word};

/// Alphabets up to this size write words as plain digit strings ("0110");
/// larger alphabets separate symbols with '-' ("0-11-3").
pub const DIGIT_WORD_ALPHABET_MAX: usize = 10;

/// Parses a word in the textual convention above.  Symbols are range-checked
/// against `k`; admissibility is the caller's concern.
pub fn parse_word(text: &str, k: usize) -> Result<Word> {
    if text.is_empty() {
        return Err(Error::invalid("word", "must not be empty"));
    }
    let mut symbols = Vec::new();
    if k <= DIGIT_WORD_ALPHABET_MAX {
        for c in text.chars() {
            let d = c.to_digit(10).ok_or_else(|| {
                Error::invalid("word", format!("'{text}' has non-digit character '{c}'"))
            })?;
            symbols.push(d as Symbol);
        }
    } else {
        for part in text.split('-') {
            let s: usize = part.parse().map_err(|_| {
                Error::invalid("word", format!("'{text}' has non-numeric symbol '{part}'"))
            })?;
            symbols.push(s as Symbol);
        }
    }
    for &s in &symbols {
        if (s as usize) >= k {
            return Err(Error::invalid(
                "word",
                format!("symbol {s} in '{text}' is outside the alphabet 0..{k}"),
            ));
        }
    }
    Ok(Word::new(symbols))
}

/// Inverse of [`parse_word`].
pub fn format_word(word: &Word, k: usize) -> String {
    let mut out = String::new();
    for (i, s) in word.symbols().iter().enumerate() {
        if k > DIGIT_WORD_ALPHABET_MAX && i > 0 {
            out.push('-');
        }
        out.push_str(&s.to_string());
    }
    out
}

fn at(path: &str, field: &str) -> String {
    format!("{path}.{field}")
}

/// Re-points an error from a core constructor at the config field that
/// supplied the bad data, keeping the constructor's diagnosis as the message.
fn pointed(path: impl Into<String>) -> impl FnOnce(Error) -> Error {
    let path = path.into();
    move |e| match e {
        Error::InvalidInput { context, message } if context.starts_with(&path) => {
            Error::InvalidInput { context, message }
        }
        other => Error::invalid(path, other.to_string()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetParams {
    pub alphabet: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SftParams {
    pub matrix: Vec<Vec<u8>>,
}

/// The shift space under study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpaceSpec {
    /// `{"full": {"alphabet": k}}` — one-dimensional full shift.
    #[serde(rename = "full")]
    Full(AlphabetParams),
    /// `{"sft": {"matrix": [[...]]}}` — vertex shift on a 0/1 matrix.
    #[serde(rename = "sft")]
    Sft(SftParams),
    /// `{"full-2d": {"alphabet": k}}` — planar full shift.
    #[serde(rename = "full-2d")]
    Full2d(AlphabetParams),
}

impl SpaceSpec {
    pub fn build(&self) -> Result<ShiftSpace> {
        match self {
            SpaceSpec::Full(p) => {
                ShiftSpace::full_shift(p.alphabet).map_err(pointed("space.full.alphabet"))
            }
            SpaceSpec::Sft(p) => ShiftSpace::sft(&p.matrix).map_err(pointed("space.sft.matrix")),
            SpaceSpec::Full2d(p) => {
                ShiftSpace::full_shift_2d(p.alphabet).map_err(pointed("space.full-2d.alphabet"))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantParams {
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorParams {
    pub word: String,
    /// Coefficient in front of the indicator; defaults to 1.
    #[serde(default)]
    pub scale: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableParams {
    pub window: usize,
    /// One entry per admissible window word, keyed by its textual form.
    pub values: BTreeMap<String, f64>,
}

/// A potential, described one of four ways.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PotentialSpec {
    /// `"zero"`.
    #[serde(rename = "zero")]
    Zero,
    /// `{"constant": {"value": c}}`.
    #[serde(rename = "constant")]
    Constant(ConstantParams),
    /// `{"indicator": {"word": "1", "scale": 1.0986}}`.
    #[serde(rename = "indicator")]
    Indicator(IndicatorParams),
    /// `{"table": {"window": 2, "values": {"00": 0.1, ...}}}`; the value map
    /// must cover the admissible window words exactly.
    #[serde(rename = "table")]
    Table(TableParams),
}

impl PotentialSpec {
    pub fn build(&self, space: &ShiftSpace, path: &str) -> Result<Potential<f64>> {
        match self {
            PotentialSpec::Zero => Potential::zero(space),
            PotentialSpec::Constant(p) => {
                if !p.value.is_finite() {
                    return Err(Error::invalid(
                        at(path, "constant.value"),
                        format!("must be finite, got {}", p.value),
                    ));
                }
                Potential::constant(space, p.value)
            }
            PotentialSpec::Indicator(p) => {
                let field = at(path, "indicator.word");
                let word = parse_word(&p.word, space.alphabet_size()).map_err(pointed(&field))?;
                if !space.is_admissible(&word) {
                    return Err(Error::invalid(
                        field,
                        format!("word '{}' is not admissible", p.word),
                    ));
                }
                let indicator = Potential::indicator(space, &word)?;
                match p.scale {
                    None => Ok(indicator),
                    Some(s) if s.is_finite() => {
                        Potential::linear_combination(space, &[(s, &indicator)])
                    }
                    Some(s) => Err(Error::invalid(
                        at(path, "indicator.scale"),
                        format!("must be finite, got {s}"),
                    )),
                }
            }
            PotentialSpec::Table(p) => build_table_potential(space, p, path),
        }
    }
}

fn build_table_potential(
    space: &ShiftSpace,
    params: &TableParams,
    path: &str,
) -> Result<Potential<f64>> {
    let field = at(path, "table.values");
    if params.window == 0 {
        return Err(Error::invalid(
            at(path, "table.window"),
            "must be at least 1",
        ));
    }
    let k = space.alphabet_size();
    let mut by_word: BTreeMap<Vec<Symbol>, f64> = BTreeMap::new();
    for (text, &value) in &params.values {
        let word = parse_word(text, k).map_err(pointed(&field))?;
        if word.len() != params.window {
            return Err(Error::invalid(
                &field,
                format!(
                    "word '{text}' has length {}, the table window is {}",
                    word.len(),
                    params.window
                ),
            ));
        }
        if !space.is_admissible(&word) {
            return Err(Error::invalid(
                &field,
                format!("word '{text}' is not admissible"),
            ));
        }
        if !value.is_finite() {
            return Err(Error::invalid(
                &field,
                format!("value for '{text}' must be finite, got {value}"),
            ));
        }
        by_word.insert(word.symbols().to_vec(), value);
    }
    let admissible = space.admissible_words(params.window)?;
    let mut values = Vec::with_capacity(admissible.len());
    for w in &admissible {
        match by_word.get(w.symbols()) {
            Some(&v) => values.push(v),
            None => {
                return Err(Error::invalid(
                    &field,
                    format!("missing admissible word '{}'", format_word(w, k)),
                ));
            }
        }
    }
    // Inadmissible and wrong-length keys were rejected above, so a surplus
    // key cannot exist once every admissible word is matched.
    Potential::new(space, params.window, values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorsParams {
    pub words: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylindersParams {
    pub window: usize,
}

/// An observable family: the coordinates for rate functions and point clouds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FamilySpec {
    /// `{"indicators": {"words": ["1", "11"]}}` — one indicator per word.
    #[serde(rename = "indicators")]
    Indicators(IndicatorsParams),
    /// `{"cylinders": {"window": n}}` — all admissible `n`-cylinder
    /// indicators except the affinely dependent last one.
    #[serde(rename = "cylinders")]
    Cylinders(CylindersParams),
}

impl FamilySpec {
    pub fn build(&self, space: &ShiftSpace, path: &str) -> Result<ObservableFamily<f64>> {
        match self {
            FamilySpec::Indicators(p) => {
                let field = at(path, "indicators.words");
                if p.words.is_empty() {
                    return Err(Error::invalid(field, "must name at least one word"));
                }
                let mut potentials = Vec::with_capacity(p.words.len());
                for (i, text) in p.words.iter().enumerate() {
                    let slot = format!("{field}[{i}]");
                    let word = parse_word(text, space.alphabet_size()).map_err(pointed(&slot))?;
                    if !space.is_admissible(&word) {
                        return Err(Error::invalid(
                            slot,
                            format!("word '{text}' is not admissible"),
                        ));
                    }
                    potentials.push(Potential::indicator(space, &word)?);
                }
                ObservableFamily::new(space, &potentials)
            }
            FamilySpec::Cylinders(p) => {
                if p.window == 0 {
                    return Err(Error::invalid(
                        at(path, "cylinders.window"),
                        "must be at least 1",
                    ));
                }
                cylinder_family(space, p.window)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovParams {
    pub order: usize,
    pub transition: Vec<Vec<f64>>,
    #[serde(default)]
    pub stationary: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumMeasureParams {
    pub potential: PotentialSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitParams {
    pub cycle: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixturePart {
    pub weight: f64,
    pub measure: MeasureSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureParams {
    pub parts: Vec<MixturePart>,
}

/// An invariant measure, described constructively.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeasureSpec {
    /// `{"markov": {"order": 1, "transition": [[...]], "stationary": [...]}}`
    /// (stationary optional — computed when omitted).
    #[serde(rename = "markov")]
    Markov(MarkovParams),
    /// `{"equilibrium": {"potential": ...}}`.
    #[serde(rename = "equilibrium")]
    Equilibrium(Box<EquilibriumMeasureParams>),
    /// `{"orbit": {"cycle": "01"}}` — uniform measure on a periodic orbit.
    #[serde(rename = "orbit")]
    Orbit(OrbitParams),
    /// `{"mixture": {"parts": [{"weight": 0.5, "measure": ...}, ...]}}`.
    #[serde(rename = "mixture")]
    Mixture(MixtureParams),
}

impl MeasureSpec {
    pub fn build(&self, space: &ShiftSpace, path: &str) -> Result<InvariantMeasure<f64>> {
        match self {
            MeasureSpec::Markov(p) => {
                if p.order == 0 {
                    return Err(Error::invalid(
                        at(path, "markov.order"),
                        "must be at least 1",
                    ));
                }
                let m =
                    MarkovMeasure::new(space, p.order, p.transition.clone(), p.stationary.clone())
                        .map_err(pointed(at(path, "markov")))?;
                Ok(InvariantMeasure::from_markov(m))
            }
            MeasureSpec::Equilibrium(p) => {
                let f = p
                    .potential
                    .build(space, &at(path, "equilibrium.potential"))?;
                let m = equilibrium_state(space, &f)?;
                Ok(InvariantMeasure::from_markov(m))
            }
            MeasureSpec::Orbit(p) => {
                let field = at(path, "orbit.cycle");
                let cycle = parse_word(&p.cycle, space.alphabet_size()).map_err(pointed(&field))?;
                let m = MarkovMeasure::dirac_orbit(space, &cycle).map_err(pointed(field))?;
                Ok(InvariantMeasure::from_markov(m))
            }
            MeasureSpec::Mixture(p) => {
                let field = at(path, "mixture.parts");
                if p.parts.is_empty() {
                    return Err(Error::invalid(field, "must have at least one part"));
                }
                let mut parts = Vec::with_capacity(p.parts.len());
                for (i, part) in p.parts.iter().enumerate() {
                    let measure = part
                        .measure
                        .build(space, &format!("{field}[{i}].measure"))?;
                    parts.push((part.weight, measure));
                }
                InvariantMeasure::mix(&parts).map_err(pointed(field))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairTableParams {
    pub rows: Vec<Vec<f64>>,
}

/// A nearest-neighbour pair potential for planar tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PairSpec {
    /// `"zero"`.
    #[serde(rename = "zero")]
    Zero,
    /// `{"table": {"rows": k x k}}` — value on each ordered symbol pair.
    #[serde(rename = "table")]
    Table(PairTableParams),
}

impl PairSpec {
    pub fn build(&self, k: usize, path: &str) -> Result<PairPotential<f64>> {
        match self {
            PairSpec::Zero => PairPotential::zero(k),
            PairSpec::Table(p) => {
                PairPotential::new(k, &p.rows).map_err(pointed(at(path, "table.rows")))
            }
        }
    }
}

/// A product of intervals with per-face open/closed flags; flags default to
/// closed when omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default)]
    pub lo_open: Vec<bool>,
    #[serde(default)]
    pub hi_open: Vec<bool>,
}

impl BoxSpec {
    pub fn build(&self, path: &str) -> Result<BoxQuery<f64>> {
        let d = self.lo.len();
        let lo_open = if self.lo_open.is_empty() {
            vec![false; d]
        } else {
            self.lo_open.clone()
        };
        let hi_open = if self.hi_open.is_empty() {
            vec![false; d]
        } else {
            self.hi_open.clone()
        };
        BoxQuery::new(self.lo.clone(), self.hi.clone(), lo_open, hi_open)
            .map_err(pointed(path.to_string()))
    }
}

/// Which empirical ensemble an LDP report samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantSpec {
    Periodic,
    Separated,
    Gibbs,
}

impl VariantSpec {
    pub fn provenance(self) -> Provenance {
        match self {
            VariantSpec::Periodic => Provenance::Periodic,
            VariantSpec::Separated => Provenance::Separated,
            VariantSpec::Gibbs => Provenance::Gibbs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureSweepParams {
    /// Word lengths for the finite-stage routes.
    pub ns: Vec<usize>,
    /// Separation scale; separated rows are emitted only when present.
    #[serde(default)]
    pub r: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSweepParams {
    pub family: FamilySpec,
    /// Segment endpoints in moment space; `count` evenly spaced points.
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpReportParams {
    pub family: FamilySpec,
    #[serde(rename = "box")]
    pub box_query: BoxSpec,
    pub ns: Vec<usize>,
    pub variant: VariantSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyApproxParams {
    pub target: MeasureSpec,
    pub max_window: usize,
    pub moment_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoDPressureParams {
    pub pair: PairSpec,
    /// Strip widths to evaluate (each at least 2).
    #[serde(default)]
    pub widths: Vec<usize>,
    /// Finite boxes to evaluate, as `[a1, a2]` side pairs.
    #[serde(default)]
    pub boxes: Vec<[usize; 2]>,
}

/// The experiment to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TaskSpec {
    /// `{"pressure-sweep": {"ns": [...], "r": 4}}` — spectral value plus
    /// periodic (and optionally separated) stages with their errors.
    #[serde(rename = "pressure-sweep")]
    PressureSweep(PressureSweepParams),
    /// `"equilibrium"` — the equilibrium state of the base potential.
    #[serde(rename = "equilibrium")]
    Equilibrium,
    /// `{"rate-sweep": {...}}` — rate-function values along a segment.
    #[serde(rename = "rate-sweep")]
    RateSweep(RateSweepParams),
    /// `{"ldp-report": {...}}` — empirical box masses against the rate bound.
    #[serde(rename = "ldp-report")]
    LdpReport(LdpReportParams),
    /// `{"entropy-approx": {...}}` — moment-matching approximation steps.
    #[serde(rename = "entropy-approx")]
    EntropyApprox(Box<EntropyApproxParams>),
    /// `{"2d-pressure": {...}}` — strip and box pressures on a planar shift.
    #[serde(rename = "2d-pressure")]
    TwoDPressure(TwoDPressureParams),
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::PressureSweep(_) => "pressure-sweep",
            TaskSpec::Equilibrium => "equilibrium",
            TaskSpec::RateSweep(_) => "rate-sweep",
            TaskSpec::LdpReport(_) => "ldp-report",
            TaskSpec::EntropyApprox(_) => "entropy-approx",
            TaskSpec::TwoDPressure(_) => "2d-pressure",
        }
    }
}

/// A complete experiment description: one space, one base potential, one
/// task.  See the crate configs directory for worked examples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub space: SpaceSpec,
    /// Base potential; defaults to zero.
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    pub task: TaskSpec,
    /// Output directory for artifacts; the command line may override it.
    #[serde(default)]
    pub out_dir: Option<String>,
    /// Parallelism degree; the command line may override it.
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid("config", e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::invalid("config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    pub fn build_space(&self) -> Result<ShiftSpace> {
        self.space.build()
    }

    pub fn build_potential(&self, space: &ShiftSpace) -> Result<Potential<f64>> {
        match &self.potential {
            None => Potential::zero(space),
            Some(spec) => spec.build(space, "potential"),
        }
    }

    /// Full schema-plus-semantics validation with zero computation: builds
    /// every referenced object and range-checks the task parameters.
    pub fn validate(&self) -> Result<()> {
        let space = self.build_space()?;
        let wants_planar = matches!(self.task, TaskSpec::TwoDPressure(_));
        if wants_planar && space.dimension() != 2 {
            return Err(Error::invalid(
                "space",
                format!("task '{}' needs a two-dimensional space", self.task.name()),
            ));
        }
        if !wants_planar && space.dimension() != 1 {
            return Err(Error::invalid(
                "space",
                format!("task '{}' needs a one-dimensional space", self.task.name()),
            ));
        }
        if space.dimension() == 1 {
            self.build_potential(&space)?;
        } else if self.potential.is_some() {
            return Err(Error::invalid(
                "potential",
                "planar tasks weight configurations with the pair potential; drop this field",
            ));
        }
        if let Some(jobs) = self.jobs {
            if jobs == 0 {
                return Err(Error::invalid("jobs", "must be at least 1"));
            }
        }
        match &self.task {
            TaskSpec::PressureSweep(p) => {
                check_ns(&p.ns, "task.pressure-sweep.ns")?;
            }
            TaskSpec::Equilibrium => {}
            TaskSpec::RateSweep(p) => {
                let path = "task.rate-sweep";
                let family = p.family.build(&space, &at(path, "family"))?;
                let d = family.dim();
                for (name, v) in [("lo", &p.lo), ("hi", &p.hi)] {
                    if v.len() != d {
                        return Err(Error::invalid(
                            at(path, name),
                            format!("has {} coordinates, the family has {d}", v.len()),
                        ));
                    }
                    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                        return Err(Error::invalid(
                            at(path, name),
                            format!("coordinates must be finite, got {bad}"),
                        ));
                    }
                }
                if p.count == 0 {
                    return Err(Error::invalid(at(path, "count"), "must be at least 1"));
                }
            }
            TaskSpec::LdpReport(p) => {
                let path = "task.ldp-report";
                let family = p.family.build(&space, &at(path, "family"))?;
                if family.dim() > 2 {
                    return Err(Error::invalid(
                        at(path, "family"),
                        format!(
                            "rate minimization over a box supports dimension 1 or 2, got {}",
                            family.dim()
                        ),
                    ));
                }
                let query = p.box_query.build(&at(path, "box"))?;
                if query.dim() != family.dim() {
                    return Err(Error::invalid(
                        at(path, "box"),
                        format!(
                            "has dimension {}, the family has {}",
                            query.dim(),
                            family.dim()
                        ),
                    ));
                }
                check_ns(&p.ns, "task.ldp-report.ns")?;
            }
            TaskSpec::EntropyApprox(p) => {
                let path = "task.entropy-approx";
                p.target.build(&space, &at(path, "target"))?;
                if p.max_window == 0 {
                    return Err(Error::invalid(at(path, "max_window"), "must be at least 1"));
                }
                if !(p.moment_tol > 0.0 && p.moment_tol.is_finite()) {
                    return Err(Error::invalid(
                        at(path, "moment_tol"),
                        format!("must be a positive finite number, got {}", p.moment_tol),
                    ));
                }
            }
            TaskSpec::TwoDPressure(p) => {
                let path = "task.2d-pressure";
                let k = space.alphabet_size();
                p.pair.build(k, &at(path, "pair"))?;
                if p.widths.is_empty() && p.boxes.is_empty() {
                    return Err(Error::invalid(
                        path,
                        "needs at least one strip width or box",
                    ));
                }
                for &w in &p.widths {
                    if w < 2 || w > DEFAULT_MAX_STRIP_WIDTH {
                        return Err(Error::invalid(
                            at(path, "widths"),
                            format!(
                                "width {w} outside supported range 2..={DEFAULT_MAX_STRIP_WIDTH}"
                            ),
                        ));
                    }
                    let states = (k as u128).pow(w as u32);
                    if states > DEFAULT_STRIP_STATE_CAP as u128 {
                        return Err(Error::invalid(
                            at(path, "widths"),
                            format!(
                                "width {w} needs {states} column states, the cap is {DEFAULT_STRIP_STATE_CAP}"
                            ),
                        ));
                    }
                }
                for &[a1, a2] in &p.boxes {
                    if a1 == 0 || a2 == 0 {
                        return Err(Error::invalid(
                            at(path, "boxes"),
                            format!("sides must be at least 1, got {a1} x {a2}"),
                        ));
                    }
                    let cells = (a1 as u32).saturating_mul(a2 as u32);
                    let terms = (k as u128).saturating_pow(cells);
                    if terms > DEFAULT_BOX_TERM_BUDGET as u128 {
                        return Err(Error::invalid(
                            at(path, "boxes"),
                            format!(
                                "box {a1} x {a2} needs {terms} terms, the cap is {DEFAULT_BOX_TERM_BUDGET}"
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_ns(ns: &[usize], field: &str) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::invalid(field, "must list at least one length"));
    }
    if ns.contains(&0) {
        return Err(Error::invalid(field, "lengths must be at least 1"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_config(task: &str) -> String {
        format!(
            r#"{{
                "space": {{"sft": {{"matrix": [[1, 1], [1, 0]]}}}},
                "potential": "zero",
                "task": {task}
            }}"#
        )
    }

    #[test]
    fn words_round_trip_in_both_conventions() {
        let w = parse_word("0110", 2).unwrap();
        assert_eq!(w.symbols(), &[0, 1, 1, 0]);
        assert_eq!(format_word(&w, 2), "0110");

        let big = parse_word("0-11-3", 12).unwrap();
        assert_eq!(big.symbols(), &[0, 11, 3]);
        assert_eq!(format_word(&big, 12), "0-11-3");
    }

    #[test]
    fn word_parsing_names_the_bad_symbol() {
        let err = parse_word("021", 2).unwrap_err().to_string();
        assert!(err.contains("symbol 2"), "{err}");
        assert!(parse_word("", 2).is_err());
        assert!(parse_word("0a1", 2).is_err());
        assert!(parse_word("3-x", 12).is_err());
    }

    #[test]
    fn space_specs_build_and_point_errors_at_the_matrix() {
        let full = SpaceSpec::Full(AlphabetParams { alphabet: 3 });
        assert_eq!(full.build().unwrap().alphabet_size(), 3);

        let bad = SpaceSpec::Sft(SftParams {
            matrix: vec![vec![0, 0], vec![1, 1]],
        });
        let err = bad.build().unwrap_err().to_string();
        assert!(err.contains("space.sft.matrix"), "{err}");
        assert!(err.contains("0"), "{err}");
    }

    #[test]
    fn indicator_potentials_scale_and_check_admissibility() {
        let space = ShiftSpace::sft(&[vec![1, 1], vec![1, 0]]).unwrap();
        let spec = PotentialSpec::Indicator(IndicatorParams {
            word: "1".into(),
            scale: Some(2.0),
        });
        let f = spec.build(&space, "potential").unwrap();
        assert_eq!(f.value_of(&[1]), Some(2.0));
        assert_eq!(f.value_of(&[0]), Some(0.0));

        let bad = PotentialSpec::Indicator(IndicatorParams {
            word: "11".into(),
            scale: None,
        });
        let err = bad.build(&space, "potential").unwrap_err().to_string();
        assert!(err.contains("potential.indicator.word"), "{err}");
        assert!(err.contains("'11'"), "{err}");
    }

    #[test]
    fn table_potentials_must_cover_admissible_words_exactly() {
        let space = ShiftSpace::sft(&[vec![1, 1], vec![1, 0]]).unwrap();
        let mut values = BTreeMap::new();
        values.insert("00".to_string(), 0.1);
        values.insert("01".to_string(), -0.2);
        values.insert("10".to_string(), 0.3);
        let missing = PotentialSpec::Table(TableParams {
            window: 2,
            values: values.clone(),
        });
        let f = missing.build(&space, "potential");
        assert!(f.is_ok(), "{f:?}");

        values.remove("10");
        let short = PotentialSpec::Table(TableParams {
            window: 2,
            values: values.clone(),
        });
        let err = short.build(&space, "potential").unwrap_err().to_string();
        assert!(err.contains("missing admissible word '10'"), "{err}");

        values.insert("10".to_string(), 0.3);
        values.insert("11".to_string(), 9.0);
        let extra = PotentialSpec::Table(TableParams { window: 2, values });
        let err = extra.build(&space, "potential").unwrap_err().to_string();
        assert!(err.contains("'11' is not admissible"), "{err}");
    }

    #[test]
    fn measure_specs_cover_the_four_constructions() {
        let space = ShiftSpace::full_shift(2).unwrap();
        let bernoulli = MeasureSpec::Markov(MarkovParams {
            order: 1,
            transition: vec![vec![0.25, 0.75], vec![0.25, 0.75]],
            stationary: Some(vec![0.25, 0.75]),
        });
        let mu = bernoulli.build(&space, "target").unwrap();
        assert!((mu.entropy_rate() - 0.5623351446188083).abs() < 1e-12);

        let orbit = MeasureSpec::Orbit(OrbitParams { cycle: "01".into() });
        let nu = orbit.build(&space, "target").unwrap();
        assert_eq!(nu.entropy_rate(), 0.0);

        let mix = MeasureSpec::Mixture(MixtureParams {
            parts: vec![
                MixturePart {
                    weight: 0.5,
                    measure: bernoulli.clone(),
                },
                MixturePart {
                    weight: 0.5,
                    measure: orbit,
                },
            ],
        });
        let mixed = mix.build(&space, "target").unwrap();
        assert!((mixed.entropy_rate() - 0.5 * 0.5623351446188083).abs() < 1e-12);

        let eq = MeasureSpec::Equilibrium(Box::new(EquilibriumMeasureParams {
            potential: PotentialSpec::Indicator(IndicatorParams {
                word: "1".into(),
                scale: Some(3.0_f64.ln()),
            }),
        }));
        let pi = eq.build(&space, "target").unwrap();
        let one = parse_word("1", 2).unwrap();
        assert!((pi.cylinder_probability(&one) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn mixture_errors_carry_the_part_index() {
        let space = ShiftSpace::sft(&[vec![1, 1], vec![1, 0]]).unwrap();
        let mix = MeasureSpec::Mixture(MixtureParams {
            parts: vec![MixturePart {
                weight: 1.0,
                measure: MeasureSpec::Orbit(OrbitParams { cycle: "11".into() }),
            }],
        });
        let err = mix.build(&space, "target").unwrap_err().to_string();
        assert!(err.contains("target.mixture.parts[0].measure"), "{err}");
    }

    #[test]
    fn full_configs_parse_validate_and_reject_unknown_fields() {
        let text = golden_config(r#"{"pressure-sweep": {"ns": [4, 8, 12], "r": 2}}"#);
        let config = ExperimentConfig::from_json(&text).unwrap();
        config.validate().unwrap();
        assert_eq!(config.task.name(), "pressure-sweep");

        let typo = text.replace("\"potential\"", "\"potental\"");
        let err = ExperimentConfig::from_json(&typo).unwrap_err().to_string();
        assert!(err.contains("potental"), "{err}");
    }

    #[test]
    fn task_validation_names_the_offending_field() {
        let empty_ns = golden_config(r#"{"pressure-sweep": {"ns": []}}"#);
        let err = ExperimentConfig::from_json(&empty_ns)
            .unwrap()
            .validate()
            .unwrap_err()
            .to_string();
        assert!(err.contains("task.pressure-sweep.ns"), "{err}");

        let bad_box = golden_config(
            r#"{"ldp-report": {
                "family": {"indicators": {"words": ["1"]}},
                "box": {"lo": [0.2, 0.0], "hi": [0.5, 1.0]},
                "ns": [4, 8],
                "variant": "periodic"
            }}"#,
        );
        let err = ExperimentConfig::from_json(&bad_box)
            .unwrap()
            .validate()
            .unwrap_err()
            .to_string();
        assert!(err.contains("task.ldp-report.box"), "{err}");
    }

    #[test]
    fn planar_tasks_need_planar_spaces_and_respect_caps() {
        let on_line = golden_config(r#"{"2d-pressure": {"pair": "zero", "widths": [3]}}"#);
        let err = ExperimentConfig::from_json(&on_line)
            .unwrap()
            .validate()
            .unwrap_err()
            .to_string();
        assert!(err.contains("two-dimensional"), "{err}");

        let text = r#"{
            "space": {"full-2d": {"alphabet": 2}},
            "task": {"2d-pressure": {"pair": "zero", "boxes": [[5, 5]]}}
        }"#;
        let err = ExperimentConfig::from_json(text)
            .unwrap()
            .validate()
            .unwrap_err()
            .to_string();
        assert!(err.contains("1048576"), "{err}");

        let ok = r#"{
            "space": {"full-2d": {"alphabet": 2}},
            "task": {"2d-pressure": {"pair": "zero", "widths": [2, 3], "boxes": [[2, 3]]}}
        }"#;
        ExperimentConfig::from_json(ok).unwrap().validate().unwrap();
    }

    #[test]
    fn validate_points_at_planar_task_on_line_space_mismatches() {
        let text = r#"{
            "space": {"full-2d": {"alphabet": 2}},
            "task": "equilibrium"
        }"#;
        let err = ExperimentConfig::from_json(text)
            .unwrap()
            .validate()
            .unwrap_err()
            .to_string();
        assert!(err.contains("one-dimensional"), "{err}");
    }

    #[test]
    fn configs_round_trip_through_serde() {
        let text = golden_config(
            r#"{"ldp-report": {
                "family": {"indicators": {"words": ["1"]}},
                "box": {"lo": [0.8], "hi": [1.0]},
                "ns": [8, 12, 16, 20],
                "variant": "gibbs"
            }}"#,
        );
        let config = ExperimentConfig::from_json(&text).unwrap();
        let echoed = serde_json::to_string(&config).unwrap();
        let back = ExperimentConfig::from_json(&echoed).unwrap();
        assert_eq!(config, back);
    }
}
