//! Constructions that turn communication models and detection-efficiency
//! models into Bell-local correlated-settings models.
//!
//! From a communication model, λ = (μ, m) and
//! P_CS(a,b,x,y,λ) = P(x,y)·P_C(a,b,μ,m|x,y); the result satisfies
//! I(x,y:λ) = H(m|μ) ≤ H(m). From a detection model, settings are drawn first
//! and rounds are rejected until both detectors click, which conditions on
//! (D_A, D_B) exactly.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{MIEstimate, MIMethod};
use crate::error::{Error, Result};
use crate::geom::RandomSource;
use crate::models::{
    CellProbs, CommunicationModel, Conversation, CorrelatedSettingsModel, CsRound, DetectionModel,
    ExactCsModel, FiniteSettings, Outcome, SampledModel, Setting, SettingsSpec,
};
use crate::probcore::{binary_entropy_unchecked, FiniteDistribution, InfoBits, Variable};

/// Default lower limit on the double-click probability for [`det_to_cs`].
pub const DEFAULT_ACCEPTANCE_FLOOR: f64 = 1e-6;

/// Gate, in standard errors, for Monte Carlo reproduction checks.
pub const SIGMA_GATE: f64 = 4.0;

/// Tolerance for exact reproduction on finite tables.
pub const EXACT_TOLERANCE: f64 = 1e-12;

const CHUNK_ROUNDS: u64 = 1 << 14;

#[derive(Debug, Clone, Copy)]
pub struct TransformOptions {
    /// Rounds drawn for the Monte Carlo part of a report.
    pub rounds: u64,
    pub seed: u64,
    pub parallelism: usize,
    pub acceptance_floor: f64,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            rounds: 100_000,
            seed: 0,
            parallelism: 1,
            acceptance_floor: DEFAULT_ACCEPTANCE_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformReport {
    pub source: String,
    pub exact: bool,
    /// Max-norm distance between target and reproduced P(a,b|x,y); for
    /// continuous settings, |mean(ab + x·y)|.
    pub correlation_deviation: f64,
    /// Max-norm distance between declared and reproduced P(x,y).
    pub input_deviation: Option<f64>,
    /// Largest deviation in units of its standard error (sampled reports).
    pub max_sigma: Option<f64>,
    pub within_tolerance: bool,
    pub rounds: Option<u64>,
    pub acceptance_rate: Option<f64>,
    pub mi_value: Option<MIEstimate>,
    pub mi_bound: Option<InfoBits>,
}

/// Correlated-settings model derived from a communication model; λ = (μ, m).
#[derive(Debug, Clone)]
pub struct CommDerivedModel<C> {
    comm: C,
    spec: SettingsSpec,
}

impl<C: CommunicationModel> CommDerivedModel<C> {
    pub fn source(&self) -> &C {
        &self.comm
    }
}

impl<C: CommunicationModel> SampledModel for CommDerivedModel<C> {
    type Hidden = (C::Shared, Conversation);

    fn settings(&self) -> &SettingsSpec {
        &self.spec
    }

    fn sample(&self, rng: &mut RandomSource) -> Result<CsRound<Self::Hidden>> {
        let (x, y) = self.spec.draw(rng);
        let r = self.comm.play(&x, &y, rng);
        Ok(CsRound {
            x,
            y,
            a: r.a,
            b: r.b,
            lambda: (r.mu, r.m),
        })
    }

    fn alice_response(&self, x: &Setting, lambda: &Self::Hidden) -> Outcome {
        self.comm.alice_output(x, &lambda.0, &lambda.1)
    }

    fn bob_response(&self, y: &Setting, lambda: &Self::Hidden) -> Outcome {
        self.comm.bob_output(y, &lambda.0, &lambda.1)
    }
}

/// Correlated-settings model derived from a detection model by post-selecting
/// double clicks; λ is the detection model's hidden variable.
#[derive(Debug, Clone)]
pub struct DetectionDerivedModel<D> {
    det: D,
    spec: SettingsSpec,
    max_attempts: u64,
    floor: f64,
}

impl<D: DetectionModel> DetectionDerivedModel<D> {
    pub fn new(det: D, spec: SettingsSpec, acceptance_floor: f64) -> Result<Self> {
        if !(acceptance_floor > 0.0 && acceptance_floor <= 1.0) {
            return Err(Error::Config(format!(
                "acceptance floor must lie in (0, 1], got {acceptance_floor}"
            )));
        }
        // At a true rate equal to the floor, 20/floor attempts all fail with
        // probability e⁻²⁰.
        let max_attempts = (20.0 / acceptance_floor).ceil() as u64;
        Ok(DetectionDerivedModel {
            det,
            spec,
            max_attempts,
            floor: acceptance_floor,
        })
    }

    pub fn source(&self) -> &D {
        &self.det
    }

    /// Draws settings, then rounds until both detectors click. Also returns
    /// the number of rounds used.
    pub fn sample_counted(&self, rng: &mut RandomSource) -> Result<(CsRound<D::Hidden>, u64)> {
        let (x, y) = self.spec.draw(rng);
        for attempt in 1..=self.max_attempts {
            let r = self.det.play(&x, &y, rng);
            if r.alice_click && r.bob_click {
                let round = CsRound {
                    x,
                    y,
                    a: r.a,
                    b: r.b,
                    lambda: r.lambda,
                };
                return Ok((round, attempt));
            }
        }
        Err(Error::AcceptanceFloor {
            floor: self.floor,
            accepted: 0,
            attempts: self.max_attempts,
        })
    }
}

impl<D: DetectionModel> SampledModel for DetectionDerivedModel<D> {
    type Hidden = D::Hidden;

    fn settings(&self) -> &SettingsSpec {
        &self.spec
    }

    fn sample(&self, rng: &mut RandomSource) -> Result<CsRound<D::Hidden>> {
        self.sample_counted(rng).map(|(r, _)| r)
    }

    fn alice_response(&self, x: &Setting, lambda: &D::Hidden) -> Outcome {
        self.det.alice(x, lambda).outcome
    }

    fn bob_response(&self, y: &Setting, lambda: &D::Hidden) -> Outcome {
        self.det.bob(y, lambda).outcome
    }
}

/// Communication model → correlated-settings model.
///
/// With a finite settings list and a finite μ support the result is an exact
/// table with variables a, b, x, y, mu, m (λ = {mu, m}) and the report holds
/// exact I(x,y:λ) and H(m). Otherwise the result is a sampler and the report
/// is estimated from `options.rounds` rounds.
pub fn comm_to_cs<C: CommunicationModel + Clone>(
    c: &C,
    spec: &SettingsSpec,
    options: &TransformOptions,
) -> Result<(CorrelatedSettingsModel<CommDerivedModel<C>>, TransformReport)> {
    if let Some((n_a, n_b)) = c.alphabet() {
        match spec.finite() {
            Some(f) if f.n_alice() == n_a && f.n_bob() == n_b => {}
            Some(f) => {
                return Err(Error::Config(format!(
                    "model has {n_a}×{n_b} inputs but settings are {}×{}",
                    f.n_alice(),
                    f.n_bob()
                )))
            }
            None => {
                return Err(Error::Config(format!(
                    "model `{}` needs a finite settings list",
                    c.name()
                )))
            }
        }
    }

    if let (Some(finite), Some(support)) = (spec.finite(), c.shared_support()) {
        return exact_comm_to_cs(c, finite, support);
    }

    let model = CommDerivedModel {
        comm: c.clone(),
        spec: spec.clone(),
    };
    let target = |x: &Setting, y: &Setting| c.target(x, y);
    let stats = collect(
        |rng| model.sample(rng).map(|r| (r, 1)),
        spec,
        options,
    )?;
    let mut report = stats.report(c.name(), spec, &target);
    report.mi_bound = c.max_message_bits().map(|b| InfoBits::new(f64::from(b)));
    if let Some(finite) = spec.finite() {
        report.mi_value = Some(conditional_message_entropy(
            c,
            finite,
            options.rounds.max(1000),
            &RandomSource::new(options.seed).substream(u64::MAX),
            options.parallelism,
        )?);
    }
    Ok((CorrelatedSettingsModel::Sampled(model), report))
}

fn exact_comm_to_cs<C: CommunicationModel>(
    c: &C,
    settings: &FiniteSettings,
    support: Vec<(C::Shared, f64)>,
) -> Result<(CorrelatedSettingsModel<CommDerivedModel<C>>, TransformReport)> {
    let mut mu_labels: Vec<String> = support.iter().map(|(mu, _)| c.shared_label(mu)).collect();
    let mut distinct = mu_labels.clone();
    distinct.sort();
    distinct.dedup();
    if distinct.len() != mu_labels.len() {
        mu_labels = (0..support.len()).map(|i| format!("mu{i}")).collect();
    }

    let input = settings.input();
    let mut rows = Vec::new();
    let mut conversations: BTreeMap<Conversation, usize> = BTreeMap::new();
    for (x, y) in input.support() {
        let (sx, sy) = (settings.alice_setting(x), settings.bob_setting(y));
        for (i, (mu, p)) in support.iter().enumerate() {
            let m = c.conversation(&sx, &sy, mu);
            let a = c.alice_output(&sx, mu, &m);
            let b = c.bob_output(&sy, mu, &m);
            let next = conversations.len();
            conversations.entry(m.clone()).or_insert(next);
            rows.push((a, b, x, y, i, m, input.get(x, y) * p));
        }
    }

    // Conversation labels in canonical (sorted) order.
    let order: BTreeMap<&Conversation, usize> =
        conversations.keys().enumerate().map(|(i, m)| (m, i)).collect();
    let m_labels: Vec<String> = conversations.keys().map(ToString::to_string).collect();
    let entries: Vec<(Vec<usize>, f64)> = rows
        .iter()
        .map(|(a, b, x, y, i, m, w)| (vec![a.index(), b.index(), *x, *y, *i, order[m]], *w))
        .collect();

    let table = FiniteDistribution::new(
        vec![
            Outcome::variable("a"),
            Outcome::variable("b"),
            Variable::indexed("x", settings.n_alice()),
            Variable::indexed("y", settings.n_bob()),
            Variable::new("mu", mu_labels),
            Variable::new("m", m_labels),
        ],
        entries,
    )?;
    let model = ExactCsModel::from_table(table)?;

    let reproduced = model.conditional_cells();
    let mut deviation = 0.0f64;
    for (x, y) in input.support() {
        let got = reproduced[x * settings.n_bob() + y].ok_or(Error::ZeroProbabilityEvidence)?;
        let want = c.target(&settings.alice_setting(x), &settings.bob_setting(y));
        deviation = deviation.max(got.max_abs_diff(&want));
    }
    let input_deviation = max_matrix_diff(model.input_distribution()?.matrix(), input.matrix());

    let mi = model.mutual_information(&["x", "y"], &["mu", "m"])?;
    let h_m = model.table().entropy(&["m"])?;
    let report = TransformReport {
        source: c.name().to_string(),
        exact: true,
        correlation_deviation: deviation,
        input_deviation: Some(input_deviation),
        max_sigma: None,
        within_tolerance: deviation <= EXACT_TOLERANCE && input_deviation <= EXACT_TOLERANCE,
        rounds: None,
        acceptance_rate: None,
        mi_value: Some(MIEstimate {
            value: mi,
            method: MIMethod::Exact,
            uncertainty: 0.0,
        }),
        mi_bound: Some(h_m),
    };
    Ok((CorrelatedSettingsModel::Exact(model), report))
}

/// Detection model → correlated-settings model by post-selection.
pub fn det_to_cs<D: DetectionModel + Clone>(
    dmodel: &D,
    spec: &SettingsSpec,
    options: &TransformOptions,
) -> Result<(DetectionDerivedModel<D>, TransformReport)> {
    let model = DetectionDerivedModel::new(dmodel.clone(), spec.clone(), options.acceptance_floor)?;
    let target = |x: &Setting, y: &Setting| dmodel.target(x, y);
    let stats = collect(|rng| model.sample_counted(rng), spec, options)?;
    let rate = stats.n as f64 / stats.attempts as f64;
    if rate < options.acceptance_floor {
        return Err(Error::AcceptanceFloor {
            floor: options.acceptance_floor,
            accepted: stats.n,
            attempts: stats.attempts,
        });
    }
    let mut report = stats.report(dmodel.name(), spec, &target);
    report.acceptance_rate = Some(rate);
    Ok((model, report))
}

/// H(m|μ) by Monte Carlo over μ, with the conversation distribution given μ
/// computed exactly over the finite inputs. Equals I(x,y:λ) for λ = (μ, m).
pub fn conditional_message_entropy<C: CommunicationModel>(
    c: &C,
    settings: &FiniteSettings,
    mu_samples: u64,
    rng: &RandomSource,
    parallelism: usize,
) -> Result<MIEstimate> {
    if mu_samples < 2 {
        return Err(Error::Domain("need at least two μ samples".into()));
    }
    let cells: Vec<(Setting, Setting, f64)> = settings
        .input()
        .support()
        .into_iter()
        .map(|(x, y)| (settings.alice_setting(x), settings.bob_setting(y), settings.input().get(x, y)))
        .collect();
    let chunk_size = 1u64 << 12;
    let chunks = mu_samples.div_ceil(chunk_size);
    let run_chunk = |chunk: u64| -> (f64, f64) {
        let mut stream = rng.substream(chunk);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        let start = chunk * chunk_size;
        for _ in start..(start + chunk_size).min(mu_samples) {
            let mu = c.sample_shared(&mut stream);
            let mut law: BTreeMap<Conversation, f64> = BTreeMap::new();
            for (sx, sy, p) in &cells {
                *law.entry(c.conversation(sx, sy, &mu)).or_insert(0.0) += p;
            }
            let h = if law.len() == 2 {
                binary_entropy_unchecked(law.values().next().copied().unwrap_or(0.0).clamp(0.0, 1.0))
            } else {
                law.values().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
            };
            sum += h;
            sum_sq += h * h;
        }
        (sum, sum_sq)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let parts: Vec<(f64, f64)> = pool.install(|| (0..chunks).into_par_iter().map(run_chunk).collect());
    let (sum, sum_sq) = parts.into_iter().fold((0.0, 0.0), |(s, q), (a, b)| (s + a, q + b));
    let n = mu_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(MIEstimate {
        value: InfoBits::new(mean),
        method: MIMethod::MonteCarlo,
        uncertainty: (var / n).sqrt(),
    })
}

fn max_matrix_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

/// Tallies of sampled correlated-settings rounds.
#[derive(Default)]
struct SampleStats {
    n: u64,
    attempts: u64,
    /// Per finite cell: (++, +−, −+, −−) counts.
    counts: Vec<[u64; 4]>,
    residual_sum: f64,
    residual_sq: f64,
}

impl SampleStats {
    fn merge(&mut self, other: SampleStats) {
        self.n += other.n;
        self.attempts += other.attempts;
        if self.counts.is_empty() {
            self.counts = other.counts;
        } else {
            for (a, b) in self.counts.iter_mut().zip(other.counts) {
                for i in 0..4 {
                    a[i] += b[i];
                }
            }
        }
        self.residual_sum += other.residual_sum;
        self.residual_sq += other.residual_sq;
    }

    fn report(
        &self,
        source: &str,
        spec: &SettingsSpec,
        target: &dyn Fn(&Setting, &Setting) -> CellProbs,
    ) -> TransformReport {
        let n = self.n as f64;
        let (deviation, input_deviation, max_sigma) = match spec.finite() {
            Some(f) => {
                let mut dev = 0.0f64;
                let mut in_dev = 0.0f64;
                let mut sigma = 0.0f64;
                let mut note = |d: f64, se: f64| {
                    let s = if d == 0.0 {
                        0.0
                    } else if se > 0.0 {
                        d / se
                    } else {
                        f64::INFINITY
                    };
                    sigma = sigma.max(s);
                };
                for x in 0..f.n_alice() {
                    for y in 0..f.n_bob() {
                        let cell = self.counts[x * f.n_bob() + y];
                        let cell_n: u64 = cell.iter().sum();
                        let p_xy = f.input().get(x, y);
                        let freq = cell_n as f64 / n;
                        let d = (freq - p_xy).abs();
                        in_dev = in_dev.max(d);
                        note(d, (p_xy * (1.0 - p_xy) / n).sqrt());
                        if p_xy == 0.0 {
                            continue;
                        }
                        if cell_n == 0 {
                            note(1.0, 0.0);
                            continue;
                        }
                        let want = target(&f.alice_setting(x), &f.bob_setting(y));
                        for (i, &c) in cell.iter().enumerate() {
                            let p = want.0[i];
                            let d = (c as f64 / cell_n as f64 - p).abs();
                            dev = dev.max(d);
                            note(d, (p * (1.0 - p) / cell_n as f64).sqrt());
                        }
                    }
                }
                (dev, Some(in_dev), sigma)
            }
            None => {
                let mean = self.residual_sum / n;
                let var = (self.residual_sq / n - mean * mean).max(0.0);
                let se = (var / n).sqrt();
                let d = mean.abs();
                let s = if d == 0.0 { 0.0 } else if se > 0.0 { d / se } else { f64::INFINITY };
                (d, None, s)
            }
        };
        TransformReport {
            source: source.to_string(),
            exact: false,
            correlation_deviation: deviation,
            input_deviation,
            max_sigma: Some(max_sigma),
            within_tolerance: max_sigma <= SIGMA_GATE,
            rounds: Some(self.n),
            acceptance_rate: None,
            mi_value: None,
            mi_bound: None,
        }
    }
}

fn collect<H, F>(draw: F, spec: &SettingsSpec, options: &TransformOptions) -> Result<SampleStats>
where
    F: Fn(&mut RandomSource) -> Result<(CsRound<H>, u64)> + Sync,
{
    if options.rounds == 0 {
        return Err(Error::Config("rounds must be at least 1".into()));
    }
    let root = RandomSource::new(options.seed);
    let finite = spec.finite();
    let n_cells = finite.map(|f| f.n_alice() * f.n_bob()).unwrap_or(0);
    let chunks = options.rounds.div_ceil(CHUNK_ROUNDS);

    let run_chunk = |chunk: u64| -> Result<SampleStats> {
        let mut stream = root.substream(chunk);
        let mut stats = SampleStats {
            counts: vec![[0; 4]; n_cells],
            ..SampleStats::default()
        };
        let start = chunk * CHUNK_ROUNDS;
        for _ in start..(start + CHUNK_ROUNDS).min(options.rounds) {
            let (r, attempts) = draw(&mut stream)?;
            stats.n += 1;
            stats.attempts += attempts;
            let ab = f64::from(r.a.value() * r.b.value());
            match (finite, r.x.index, r.y.index) {
                (Some(f), Some(x), Some(y)) => {
                    stats.counts[x * f.n_bob() + y][2 * r.a.index() + r.b.index()] += 1;
                }
                _ => {
                    let res = ab + r.x.direction.dot(r.y.direction);
                    stats.residual_sum += res;
                    stats.residual_sq += res * res;
                }
            }
        }
        Ok(stats)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let parts: Vec<Result<SampleStats>> =
        pool.install(|| (0..chunks).into_par_iter().map(run_chunk).collect());

    let mut total = SampleStats::default();
    for part in parts {
        total.merge(part?);
    }
    Ok(total)
}
