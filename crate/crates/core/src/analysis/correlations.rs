//! Correlation tables P(a,b|x,y), exact or estimated from simulated rounds.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{RandomSource, UnitVector};
use crate::models::{BellSampler, CellProbs, FiniteSettings, Outcome, ROW_TOLERANCE};

/// Rounds per RNG sub-stream. Fixed, so results do not depend on the thread
/// count.
pub const CHUNK_ROUNDS: u64 = 1 << 14;

/// E = −x·y for projective measurements on the singlet.
pub fn singlet_correlation(x: UnitVector, y: UnitVector) -> f64 {
    -x.dot(y)
}

/// The exact singlet table, P(a,b|x,y) = (1 − ab·x·y)/4.
pub fn singlet_table(settings: &FiniteSettings) -> Result<CorrelationTable> {
    let (alice, bob) = (settings.alice().to_vec(), settings.bob().to_vec());
    CorrelationTable::exact(settings.clone(), |x, y| {
        CellProbs::from_correlator(singlet_correlation(alice[x], bob[y]))
    })
}

/// PR box with uniform marginals on the CHSH preset settings, oriented like
/// the singlet there: E = +1 at (x, y) = (0, 1) and −1 elsewhere, so S = −4.
pub fn pr_box_table() -> CorrelationTable {
    CorrelationTable::exact(FiniteSettings::chsh(), |x, y| {
        CellProbs::from_correlator(if (x, y) == (0, 1) { 1.0 } else { -1.0 })
    })
    .expect("PR box is a valid table")
}

/// Click counts for models with imperfect detectors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DetectionTally {
    pub attempts: u64,
    pub alice_clicks: u64,
    pub bob_clicks: u64,
}

impl DetectionTally {
    pub fn alice_efficiency(&self) -> f64 {
        self.alice_clicks as f64 / self.attempts as f64
    }

    pub fn bob_efficiency(&self) -> f64 {
        self.bob_clicks as f64 / self.attempts as f64
    }

    fn merge(&mut self, other: &DetectionTally) {
        self.attempts += other.attempts;
        self.alice_clicks += other.alice_clicks;
        self.bob_clicks += other.bob_clicks;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
    pub probs: CellProbs,
    /// Number of (post-selected) rounds behind an estimate; 0 for exact cells.
    pub n: u64,
    pub exact: bool,
    pub detection: Option<DetectionTally>,
}

impl Cell {
    /// An estimated cell that never received a round.
    pub fn is_empty(&self) -> bool {
        !self.exact && self.n == 0
    }

    pub fn correlator(&self) -> f64 {
        self.probs.correlator()
    }

    /// √((1 − E²)/n), zero for exact cells.
    pub fn correlator_std_error(&self) -> f64 {
        if self.exact || self.n == 0 {
            return 0.0;
        }
        let e = self.correlator();
        ((1.0 - e * e).max(0.0) / self.n as f64).sqrt()
    }

    /// √(p(1 − p)/n) per entry, zero for exact cells.
    pub fn std_errors(&self) -> [f64; 4] {
        if self.exact || self.n == 0 {
            return [0.0; 4];
        }
        self.probs.0.map(|p| (p * (1.0 - p) / self.n as f64).sqrt())
    }
}

/// P(a,b|x,y) for every pair of a finite settings list.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    settings: FiniteSettings,
    cells: Vec<Cell>,
}

impl CorrelationTable {
    pub fn exact(settings: FiniteSettings, f: impl Fn(usize, usize) -> CellProbs) -> Result<Self> {
        let (n_a, n_b) = (settings.n_alice(), settings.n_bob());
        let cells = (0..n_a)
            .flat_map(|x| (0..n_b).map(move |y| (x, y)))
            .map(|(x, y)| Some(f(x, y)))
            .collect();
        CorrelationTable::exact_partial(settings, cells)
    }

    /// Exact table where `None` marks setting pairs with no defined
    /// conditional (those become empty cells). Cells are row-major.
    pub fn exact_partial(settings: FiniteSettings, cells: Vec<Option<CellProbs>>) -> Result<Self> {
        let n_b = settings.n_bob();
        if cells.len() != settings.n_alice() * n_b {
            return Err(Error::Config("cell count does not match settings".into()));
        }
        let cells = cells
            .into_iter()
            .enumerate()
            .map(|(i, probs)| Cell {
                x: i / n_b,
                y: i % n_b,
                exact: probs.is_some(),
                probs: probs.unwrap_or(CellProbs([0.0; 4])),
                n: 0,
                detection: None,
            })
            .collect();
        let table = CorrelationTable { settings, cells };
        table.validate()?;
        Ok(table)
    }

    /// Builds a table from explicit cells, e.g. when parsing a file.
    pub fn from_cells(settings: FiniteSettings, mut cells: Vec<Cell>) -> Result<Self> {
        let n_b = settings.n_bob();
        let expected = settings.n_alice() * n_b;
        cells.sort_by_key(|c| (c.x, c.y));
        let complete = cells.len() == expected
            && cells.iter().enumerate().all(|(i, c)| c.x == i / n_b && c.y == i % n_b);
        if !complete {
            return Err(Error::Config(format!(
                "table must list each of the {expected} setting pairs exactly once"
            )));
        }
        let table = CorrelationTable { settings, cells };
        table.validate()?;
        Ok(table)
    }

    pub fn settings(&self) -> &FiniteSettings {
        &self.settings
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, x: usize, y: usize) -> &Cell {
        &self.cells[x * self.settings.n_bob() + y]
    }

    pub fn is_exact(&self) -> bool {
        self.cells.iter().all(|c| c.exact || c.is_empty())
    }

    pub fn has_detection(&self) -> bool {
        self.cells.iter().any(|c| c.detection.is_some())
    }

    /// Pairs that were never sampled.
    pub fn empty_cells(&self) -> Vec<(usize, usize)> {
        self.cells
            .iter()
            .filter(|c| c.is_empty())
            .map(|c| (c.x, c.y))
            .collect()
    }

    /// Non-empty cells sum to 1 within [`ROW_TOLERANCE`], entries are
    /// probabilities and |E| ≤ 1.
    pub fn validate(&self) -> Result<()> {
        for c in self.cells.iter().filter(|c| !c.is_empty()) {
            c.probs.validate().map_err(|e| {
                Error::Validation(format!("cell ({}, {}): {e}", c.x, c.y))
            })?;
            if c.correlator().abs() > 1.0 + ROW_TOLERANCE {
                return Err(Error::Validation(format!("cell ({}, {}) has |E| > 1", c.x, c.y)));
            }
        }
        Ok(())
    }

    /// Max-norm distance to another table over the cells both define.
    pub fn max_deviation(&self, other: &CorrelationTable) -> f64 {
        self.cells
            .iter()
            .zip(&other.cells)
            .filter(|(a, b)| !a.is_empty() && !b.is_empty())
            .map(|(a, b)| a.probs.max_abs_diff(&b.probs))
            .fold(0.0, f64::max)
    }

    /// Alice's click rate per setting, pooled over Bob's settings.
    pub fn alice_efficiencies(&self) -> Option<Vec<DetectionTally>> {
        if !self.has_detection() {
            return None;
        }
        let mut out = vec![DetectionTally::default(); self.settings.n_alice()];
        for c in &self.cells {
            if let Some(d) = &c.detection {
                out[c.x].merge(d);
            }
        }
        Some(out)
    }

    /// Pooled click counts over the whole table.
    pub fn total_detection(&self) -> Option<DetectionTally> {
        let mut total = DetectionTally::default();
        for c in &self.cells {
            total.merge(c.detection.as_ref()?);
        }
        Some(total)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EstimateOptions {
    /// Visit the supported setting pairs round-robin instead of drawing them
    /// from P(x,y).
    pub cycle: bool,
    pub parallelism: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            cycle: false,
            parallelism: 1,
        }
    }
}

#[derive(Clone, Default)]
struct Tally {
    counts: [u64; 4],
    detection: DetectionTally,
}

/// Runs `rounds` rounds, tallying outcomes of double-click rounds per setting
/// pair. Rounds are split into fixed chunks, each on its own sub-stream of
/// `rng`, so the result depends only on the seed.
pub fn estimate_correlations<S: BellSampler + ?Sized>(
    sampler: &S,
    settings: &FiniteSettings,
    rounds: u64,
    rng: &RandomSource,
    options: &EstimateOptions,
) -> Result<CorrelationTable> {
    if rounds == 0 {
        return Err(Error::Config("rounds must be at least 1".into()));
    }
    let n_b = settings.n_bob();
    let n_cells = settings.n_alice() * n_b;
    let support = settings.input().support();
    let chunks = rounds.div_ceil(CHUNK_ROUNDS);

    let run_chunk = |chunk: u64| -> Vec<Tally> {
        let mut stream = rng.substream(chunk);
        let mut tallies = vec![Tally::default(); n_cells];
        let start = chunk * CHUNK_ROUNDS;
        let end = (start + CHUNK_ROUNDS).min(rounds);
        for k in start..end {
            let (x, y) = if options.cycle {
                support[(k % support.len() as u64) as usize]
            } else {
                settings.input().sample(&mut stream)
            };
            let r = sampler.round(&settings.alice_setting(x), &settings.bob_setting(y), &mut stream);
            let t = &mut tallies[x * n_b + y];
            t.detection.attempts += 1;
            t.detection.alice_clicks += u64::from(r.alice_click);
            t.detection.bob_clicks += u64::from(r.bob_click);
            if r.alice_click && r.bob_click {
                t.counts[2 * r.a.index() + r.b.index()] += 1;
            }
        }
        tallies
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let per_chunk: Vec<Vec<Tally>> =
        pool.install(|| (0..chunks).into_par_iter().map(run_chunk).collect());

    let mut totals = vec![Tally::default(); n_cells];
    for chunk in &per_chunk {
        for (t, c) in totals.iter_mut().zip(chunk) {
            for i in 0..4 {
                t.counts[i] += c.counts[i];
            }
            t.detection.merge(&c.detection);
        }
    }

    let imperfect = totals
        .iter()
        .any(|t| t.detection.alice_clicks != t.detection.attempts || t.detection.bob_clicks != t.detection.attempts);
    let cells = totals
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let n: u64 = t.counts.iter().sum();
            let probs = if n > 0 {
                CellProbs(t.counts.map(|c| c as f64 / n as f64))
            } else {
                CellProbs([0.0; 4])
            };
            Cell {
                x: i / n_b,
                y: i % n_b,
                probs,
                n,
                exact: false,
                detection: imperfect.then_some(t.detection),
            }
        })
        .collect();

    let table = CorrelationTable {
        settings: settings.clone(),
        cells,
    };
    table
        .validate()
        .map_err(|e| Error::Inconsistent(format!("estimated table failed validation: {e}")))?;
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshValue {
    pub s: f64,
    pub std_error: f64,
}

/// S = E(x₀,y₀) − E(x₀,y₁) + E(x₁,y₀) + E(x₁,y₁), with the four standard
/// errors added in quadrature.
pub fn chsh(table: &CorrelationTable, x0: usize, x1: usize, y0: usize, y1: usize) -> Result<ChshValue> {
    let s = table.settings();
    if [x0, x1].iter().any(|&x| x >= s.n_alice()) || [y0, y1].iter().any(|&y| y >= s.n_bob()) {
        return Err(Error::Config("CHSH setting index out of range".into()));
    }
    let terms = [(x0, y0, 1.0), (x0, y1, -1.0), (x1, y0, 1.0), (x1, y1, 1.0)];
    let mut value = 0.0;
    let mut var = 0.0;
    for (x, y, sign) in terms {
        let c = table.cell(x, y);
        if c.is_empty() {
            return Err(Error::Config(format!("CHSH needs cell ({x}, {y}), which has no data")));
        }
        value += sign * c.correlator();
        var += c.correlator_std_error().powi(2);
    }
    Ok(ChshValue {
        s: value,
        std_error: var.sqrt(),
    })
}

/// Outcome counts in the fixed (++, +−, −+, −−) order; handy for tests.
pub fn outcome_slot(a: Outcome, b: Outcome) -> usize {
    2 * a.index() + b.index()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Round, Setting};
    use std::f64::consts::{PI, SQRT_2};

    struct AlwaysPlus;

    impl BellSampler for AlwaysPlus {
        fn round(&self, _x: &Setting, _y: &Setting, _rng: &mut RandomSource) -> Round {
            Round {
                a: Outcome::Plus,
                b: Outcome::Plus,
                alice_click: true,
                bob_click: true,
            }
        }
    }

    #[test]
    fn singlet_correlation_values() {
        let z = UnitVector::Z;
        assert_eq!(singlet_correlation(z, z), -1.0);
        assert_eq!(singlet_correlation(UnitVector::X, UnitVector::Y), 0.0);
        let e = singlet_correlation(z, UnitVector::in_xz_plane(2.0 * PI / 3.0));
        assert!((e - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_chsh_on_preset() {
        let table = singlet_table(&FiniteSettings::chsh()).unwrap();
        let s = chsh(&table, 0, 1, 0, 1).unwrap();
        assert!((s.s + 2.0 * SQRT_2).abs() < 1e-12);
        assert_eq!(s.std_error, 0.0);
    }

    #[test]
    fn deterministic_model_hits_local_bound() {
        let settings = FiniteSettings::chsh();
        let table = estimate_correlations(
            &AlwaysPlus,
            &settings,
            1000,
            &RandomSource::new(0),
            &EstimateOptions::default(),
        )
        .unwrap();
        for c in table.cells() {
            assert_eq!(c.correlator(), 1.0);
            assert_eq!(c.correlator_std_error(), 0.0);
        }
        assert!(!table.has_detection());
        assert_eq!(chsh(&table, 0, 1, 0, 1).unwrap().s.abs(), 2.0);
    }

    #[test]
    fn empty_cells_are_flagged() {
        let settings = FiniteSettings::chsh();
        let table = estimate_correlations(
            &AlwaysPlus,
            &settings,
            2,
            &RandomSource::new(0),
            &EstimateOptions {
                cycle: true,
                parallelism: 1,
            },
        )
        .unwrap();
        assert_eq!(table.empty_cells(), vec![(1, 0), (1, 1)]);
        assert!(chsh(&table, 0, 1, 0, 1).is_err());
    }

    #[test]
    fn zero_rounds_rejected() {
        let err = estimate_correlations(
            &AlwaysPlus,
            &FiniteSettings::chsh(),
            0,
            &RandomSource::new(0),
            &EstimateOptions::default(),
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn pr_box_reaches_four() {
        let s = chsh(&pr_box_table(), 0, 1, 0, 1).unwrap();
        assert_eq!(s.s, -4.0);
    }
}
