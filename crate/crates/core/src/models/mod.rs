//! Hidden-variable constructions and the types they share.
//!
//! Two model families are supported: communication models, where Alice and
//! Bob share randomness μ and exchange a conversation m, and detection models,
//! where each detector may fail to click depending on the hidden variable.
//! Both produce outcomes in {+1, −1}.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;


use crate::error::{Error, Result};
use crate::geom::{sample_uniform_sphere, RandomSource, UnitVector};
use crate::probcore::{FiniteDistribution, Variable};

pub mod brans;
pub mod correlated;
pub mod gisin_gisin;
pub mod input_broadcast;
pub mod toner_bacon;

pub use brans::brans_build;
pub use correlated::{CorrelatedSettingsModel, CsRound, ExactCsModel, ExactPlayer, SampledModel};
pub use gisin_gisin::{gg_round, GgRound, GisinGisin};
pub use input_broadcast::{input_broadcast_build, BroadcastShared, InputBroadcast};
pub use toner_bacon::{tb_round, TbRound, TbShared, TonerBacon};

/// Tolerance on rows of a user-supplied conditional or input distribution.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// A measurement outcome, ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn from_sign(s: i8) -> Self {
        if s >= 0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    /// 0 for +1, 1 for −1; the order used by [`CellProbs`].
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Plus => "+",
            Outcome::Minus => "-",
        }
    }

    pub fn variable(name: &str) -> Variable {
        Variable::new(name, ["+", "-"])
    }
}

/// P(a,b|x,y) for one setting pair, ordered (++, +−, −+, −−).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellProbs(pub [f64; 4]);

impl CellProbs {
    pub fn get(&self, a: Outcome, b: Outcome) -> f64 {
        self.0[2 * a.index() + b.index()]
    }

    /// E = Σ ab·P(a,b).
    pub fn correlator(&self) -> f64 {
        self.0[0] - self.0[1] - self.0[2] + self.0[3]
    }

    /// P(a,b) = (1 + ab·E)/4, the table of a pair with uniform marginals.
    pub fn from_correlator(e: f64) -> Self {
        CellProbs([(1.0 + e) / 4.0, (1.0 - e) / 4.0, (1.0 - e) / 4.0, (1.0 + e) / 4.0])
    }

    pub fn alice_marginal(&self) -> [f64; 2] {
        [self.0[0] + self.0[1], self.0[2] + self.0[3]]
    }

    pub fn bob_marginal(&self) -> [f64; 2] {
        [self.0[0] + self.0[2], self.0[1] + self.0[3]]
    }

    pub fn max_abs_diff(&self, other: &CellProbs) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Validation(format!("negative or non-finite entry in {:?}", self.0)));
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::Validation(format!("row sums to {sum}")));
        }
        Ok(())
    }
}

/// One party's measurement choice. Finite-alphabet models identify settings
/// by index; geometric models read the Bloch direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setting {
    pub index: Option<usize>,
    pub direction: UnitVector,
}

impl Setting {
    pub fn indexed(index: usize, direction: UnitVector) -> Self {
        Setting {
            index: Some(index),
            direction,
        }
    }

    pub fn continuous(direction: UnitVector) -> Self {
        Setting {
            index: None,
            direction,
        }
    }
}

/// P(x,y) over finite setting indices.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    p: Vec<Vec<f64>>,
}

impl InputDistribution {
    /// Accepts a rectangular non-negative matrix summing to 1 within
    /// [`ROW_TOLERANCE`]; the stored matrix is rescaled to sum to 1.
    pub fn new(p: Vec<Vec<f64>>) -> Result<Self> {
        let n_b = p.first().map(Vec::len).unwrap_or(0);
        if p.is_empty() || n_b == 0 || p.iter().any(|row| row.len() != n_b) {
            return Err(Error::Config("p_xy must be a non-empty rectangular matrix".into()));
        }
        if p.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("p_xy entries must be finite and non-negative".into()));
        }
        let total: f64 = p.iter().flatten().sum();
        if (total - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::Config(format!("p_xy sums to {total}")));
        }
        let p = p
            .into_iter()
            .map(|row| row.into_iter().map(|v| v / total).collect())
            .collect();
        Ok(InputDistribution { p })
    }

    pub fn uniform(n_alice: usize, n_bob: usize) -> Self {
        let w = 1.0 / (n_alice * n_bob) as f64;
        InputDistribution {
            p: vec![vec![w; n_bob]; n_alice],
        }
    }

    pub fn n_alice(&self) -> usize {
        self.p.len()
    }

    pub fn n_bob(&self) -> usize {
        self.p[0].len()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[x][y]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn alice_marginal(&self) -> Vec<f64> {
        self.p.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn bob_marginal(&self) -> Vec<f64> {
        (0..self.n_bob())
            .map(|y| self.p.iter().map(|row| row[y]).sum())
            .collect()
    }

    /// Setting pairs with positive probability, row-major.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for (x, row) in self.p.iter().enumerate() {
            for (y, &w) in row.iter().enumerate() {
                if w > 0.0 {
                    cells.push((x, y));
                }
            }
        }
        cells
    }

    pub fn sample(&self, rng: &mut RandomSource) -> (usize, usize) {
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut last = (0, 0);
        for (x, row) in self.p.iter().enumerate() {
            for (y, &w) in row.iter().enumerate() {
                if w > 0.0 {
                    acc += w;
                    last = (x, y);
                    if u < acc {
                        return (x, y);
                    }
                }
            }
        }
        last
    }

    pub fn to_distribution(&self) -> Result<FiniteDistribution> {
        let mut entries = Vec::new();
        for (x, row) in self.p.iter().enumerate() {
            for (y, &w) in row.iter().enumerate() {
                entries.push((vec![x, y], w));
            }
        }
        FiniteDistribution::new(
            vec![
                Variable::indexed("x", self.n_alice()),
                Variable::indexed("y", self.n_bob()),
            ],
            entries,
        )
    }
}

/// Finite setting lists with their joint input distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSettings {
    alice: Vec<UnitVector>,
    bob: Vec<UnitVector>,
    input: InputDistribution,
}

impl FiniteSettings {
    pub fn new(alice: Vec<UnitVector>, bob: Vec<UnitVector>, input: InputDistribution) -> Result<Self> {
        if alice.is_empty() || bob.is_empty() {
            return Err(Error::Config("setting lists must be non-empty".into()));
        }
        if input.n_alice() != alice.len() || input.n_bob() != bob.len() {
            return Err(Error::Config(format!(
                "p_xy is {}×{} but there are {} Alice and {} Bob settings",
                input.n_alice(),
                input.n_bob(),
                alice.len(),
                bob.len()
            )));
        }
        Ok(FiniteSettings { alice, bob, input })
    }

    pub fn uniform(alice: Vec<UnitVector>, bob: Vec<UnitVector>) -> Result<Self> {
        let input = InputDistribution::uniform(alice.len().max(1), bob.len().max(1));
        FiniteSettings::new(alice, bob, input)
    }

    /// Alice at polar angles {0, π/2}, Bob at {π/4, 3π/4}, all in the x–z
    /// plane, uniform independent inputs. The singlet gives S = −2√2 here.
    pub fn chsh() -> Self {
        FiniteSettings::uniform(
            vec![UnitVector::in_xz_plane(0.0), UnitVector::in_xz_plane(FRAC_PI_2)],
            vec![
                UnitVector::in_xz_plane(FRAC_PI_4),
                UnitVector::in_xz_plane(3.0 * FRAC_PI_4),
            ],
        )
        .expect("preset is well formed")
    }

    /// Both parties choose from the same three directions.
    pub fn parallel() -> Self {
        let dirs = vec![
            UnitVector::in_xz_plane(0.0),
            UnitVector::in_xz_plane(PI / 3.0),
            UnitVector::in_xz_plane(FRAC_PI_2),
        ];
        FiniteSettings::uniform(dirs.clone(), dirs).expect("preset is well formed")
    }

    pub fn alice(&self) -> &[UnitVector] {
        &self.alice
    }

    pub fn bob(&self) -> &[UnitVector] {
        &self.bob
    }

    pub fn input(&self) -> &InputDistribution {
        &self.input
    }

    pub fn n_alice(&self) -> usize {
        self.alice.len()
    }

    pub fn n_bob(&self) -> usize {
        self.bob.len()
    }

    pub fn alice_setting(&self, x: usize) -> Setting {
        Setting::indexed(x, self.alice[x])
    }

    pub fn bob_setting(&self, y: usize) -> Setting {
        Setting::indexed(y, self.bob[y])
    }

    pub fn with_input(&self, input: InputDistribution) -> Result<Self> {
        FiniteSettings::new(self.alice.clone(), self.bob.clone(), input)
    }
}

/// Where the settings come from: finite lists with P(x,y), or independent
/// uniform directions on the sphere for each party.
#[derive(Debug, Clone, PartialEq)]
pub enum SettingsSpec {
    Finite(FiniteSettings),
    ContinuousUniform,
}

impl SettingsSpec {
    pub fn finite(&self) -> Option<&FiniteSettings> {
        match self {
            SettingsSpec::Finite(f) => Some(f),
            SettingsSpec::ContinuousUniform => None,
        }
    }

    pub fn draw(&self, rng: &mut RandomSource) -> (Setting, Setting) {
        match self {
            SettingsSpec::Finite(f) => {
                let (x, y) = f.input.sample(rng);
                (f.alice_setting(x), f.bob_setting(y))
            }
            SettingsSpec::ContinuousUniform => {
                let x = sample_uniform_sphere(rng);
                let y = sample_uniform_sphere(rng);
                (Setting::continuous(x), Setting::continuous(y))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    Alice,
    Bob,
}

/// One message of a conversation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message {
    pub from: Party,
    pub symbol: i64,
}

/// The full transcript c₁…c_k of one round.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Conversation(pub Vec<Message>);

impl Conversation {
    pub fn single(from: Party, symbol: i64) -> Self {
        Conversation(vec![Message { from, symbol }])
    }

    pub fn messages(&self) -> &[Message] {
        &self.0
    }
}

impl fmt::Display for Conversation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|m| {
                let who = match m.from {
                    Party::Alice => "A",
                    Party::Bob => "B",
                };
                format!("{who}:{}", m.symbol)
            })
            .collect();
        f.write_str(&parts.join("|"))
    }
}

/// A simulation in which the parties share μ and exchange a conversation
/// before answering. Outputs are deterministic given (own input, μ, m); any
/// further randomness is part of μ.
pub trait CommunicationModel: Sync {
    type Shared: Clone + Send + Sync;

    fn name(&self) -> &'static str;

    fn sample_shared(&self, rng: &mut RandomSource) -> Self::Shared;

    /// m = f(x, y, μ). Each message may depend only on μ, earlier messages,
    /// and the sender's own input.
    fn conversation(&self, x: &Setting, y: &Setting, mu: &Self::Shared) -> Conversation;

    fn alice_output(&self, x: &Setting, mu: &Self::Shared, m: &Conversation) -> Outcome;

    fn bob_output(&self, y: &Setting, mu: &Self::Shared, m: &Conversation) -> Outcome;

    /// The correlations this model is built to reproduce.
    fn target(&self, x: &Setting, y: &Setting) -> CellProbs;

    /// Upper bound on the conversation length in bits, if bounded.
    fn max_message_bits(&self) -> Option<u32>;

    /// (n_A, n_B) when the model only accepts indexed settings.
    fn alphabet(&self) -> Option<(usize, usize)> {
        None
    }

    /// Enumerated support of μ with probabilities, when μ is discrete.
    fn shared_support(&self) -> Option<Vec<(Self::Shared, f64)>> {
        None
    }

    fn shared_label(&self, _mu: &Self::Shared) -> String {
        String::from("mu")
    }

    fn play(&self, x: &Setting, y: &Setting, rng: &mut RandomSource) -> CommRound<Self::Shared> {
        let mu = self.sample_shared(rng);
        let m = self.conversation(x, y, &mu);
        let a = self.alice_output(x, &mu, &m);
        let b = self.bob_output(y, &mu, &m);
        CommRound { mu, m, a, b }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommRound<S> {
    pub mu: S,
    pub m: Conversation,
    pub a: Outcome,
    pub b: Outcome,
}

/// What one detector does given its setting and λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalResponse {
    pub outcome: Outcome,
    pub click_probability: f64,
}

/// A Bell-local model whose detectors may fail depending on λ. The hidden
/// variable is drawn independently of the settings; each side's response sees
/// only its own setting and λ.
pub trait DetectionModel: Sync {
    type Hidden: Clone + Send + Sync;

    fn name(&self) -> &'static str;

    fn sample_hidden(&self, rng: &mut RandomSource) -> Self::Hidden;

    fn alice(&self, x: &Setting, lambda: &Self::Hidden) -> LocalResponse;

    fn bob(&self, y: &Setting, lambda: &Self::Hidden) -> LocalResponse;

    /// The post-selected correlations this model is built to reproduce.
    fn target(&self, x: &Setting, y: &Setting) -> CellProbs;

    /// Draws λ, then Alice's click, then Bob's click.
    fn play(&self, x: &Setting, y: &Setting, rng: &mut RandomSource) -> DetRound<Self::Hidden> {
        let lambda = self.sample_hidden(rng);
        let ra = self.alice(x, &lambda);
        let rb = self.bob(y, &lambda);
        let alice_click = rng.uniform() < ra.click_probability;
        let bob_click = rng.uniform() < rb.click_probability;
        DetRound {
            lambda,
            a: ra.outcome,
            b: rb.outcome,
            alice_click,
            bob_click,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetRound<H> {
    pub lambda: H,
    pub a: Outcome,
    pub b: Outcome,
    pub alice_click: bool,
    pub bob_click: bool,
}

/// A single experimental run as seen by the tally: outcomes plus clicks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Round {
    pub a: Outcome,
    pub b: Outcome,
    pub alice_click: bool,
    pub bob_click: bool,
}

/// Anything that can answer a given setting pair with one round.
pub trait BellSampler: Sync {
    fn round(&self, x: &Setting, y: &Setting, rng: &mut RandomSource) -> Round;
}

pub(crate) fn communication_round<C: CommunicationModel>(
    c: &C,
    x: &Setting,
    y: &Setting,
    rng: &mut RandomSource,
) -> Round {
    let r = c.play(x, y, rng);
    Round {
        a: r.a,
        b: r.b,
        alice_click: true,
        bob_click: true,
    }
}

pub(crate) fn detection_round<D: DetectionModel>(
    d: &D,
    x: &Setting,
    y: &Setting,
    rng: &mut RandomSource,
) -> Round {
    let r = d.play(x, y, rng);
    Round {
        a: r.a,
        b: r.b,
        alice_click: r.alice_click,
        bob_click: r.bob_click,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_probs_layout() {
        let c = CellProbs([0.1, 0.2, 0.3, 0.4]);
        assert_eq!(c.get(Outcome::Plus, Outcome::Minus), 0.2);
        assert_eq!(c.get(Outcome::Minus, Outcome::Plus), 0.3);
        assert!((c.correlator() - 0.0).abs() < 1e-15);
        assert_eq!(CellProbs::from_correlator(-1.0).0, [0.0, 0.5, 0.5, 0.0]);
        assert!(CellProbs([0.5, 0.5, 0.1, 0.0]).validate().is_err());
    }

    #[test]
    fn input_distribution_validation() {
        assert!(InputDistribution::new(vec![vec![0.5, 0.5], vec![0.1]]).is_err());
        assert!(InputDistribution::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(InputDistribution::new(vec![vec![1.5, -0.5]]).is_err());
        let d = InputDistribution::new(vec![vec![0.25, 0.25], vec![0.5, 0.0]]).unwrap();
        assert_eq!(d.support(), vec![(0, 0), (0, 1), (1, 0)]);
        assert_eq!(d.alice_marginal(), vec![0.5, 0.5]);
        assert_eq!(d.bob_marginal(), vec![0.75, 0.25]);
    }

    #[test]
    fn input_sampling_matches_weights() {
        let d = InputDistribution::new(vec![vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let mut rng = RandomSource::new(11);
        let mut counts = [[0u32; 2]; 2];
        let n = 200_000;
        for _ in 0..n {
            let (x, y) = d.sample(&mut rng);
            counts[x][y] += 1;
        }
        for x in 0..2 {
            for y in 0..2 {
                let p = d.get(x, y);
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!((counts[x][y] as f64 / n as f64 - p).abs() < 4.0 * se);
            }
        }
    }

    #[test]
    fn settings_shape_must_match_input() {
        let dirs = vec![UnitVector::Z, UnitVector::X];
        assert!(FiniteSettings::new(dirs.clone(), dirs.clone(), InputDistribution::uniform(2, 3)).is_err());
        assert!(FiniteSettings::new(vec![], dirs, InputDistribution::uniform(1, 2)).is_err());
    }

    #[test]
    fn conversation_labels() {
        let m = Conversation(vec![
            Message { from: Party::Alice, symbol: -1 },
            Message { from: Party::Bob, symbol: 3 },
        ]);
        assert_eq!(m.to_string(), "A:-1|B:3");
    }
}
