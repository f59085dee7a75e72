//! Correlated-settings models: a joint law over (a, b, x, y, λ) where the
//! settings may depend on λ.
//!
//! Exact models are finite tables with variables named `a`, `b`, `x`, `y`
//! plus any number of hidden variables that together make up λ. Sampled models
//! emit rounds and carry their own response functions, which double as the
//! locality certificate: a must be recomputable from (x, λ) and b from (y, λ).

use super::{
    BellSampler, CellProbs, FiniteSettings, InputDistribution, Outcome, Round, Setting,
    SettingsSpec,
};
use crate::analysis::CorrelationTable;
use crate::error::{Error, Result};
use crate::geom::RandomSource;
use crate::probcore::{FiniteDistribution, InfoBits};

pub const OUTCOME_VARIABLES: [&str; 2] = ["a", "b"];
pub const SETTING_VARIABLES: [&str; 2] = ["x", "y"];

/// A correlated-settings model given by its exact finite joint table.
#[derive(Debug, Clone)]
pub struct ExactCsModel {
    table: FiniteDistribution,
    hidden: Vec<String>,
    slots: Slots,
    n_alice: usize,
    n_bob: usize,
}

#[derive(Debug, Clone, Copy)]
struct Slots {
    a: usize,
    b: usize,
    x: usize,
    y: usize,
}

impl ExactCsModel {
    /// Every variable other than `a`, `b`, `x`, `y` is taken as part of λ.
    /// Outcome labels must be `+`/`-`; setting labels must be `0..n`.
    pub fn from_table(table: FiniteDistribution) -> Result<Self> {
        let slots = Slots {
            a: table.index_of("a")?,
            b: table.index_of("b")?,
            x: table.index_of("x")?,
            y: table.index_of("y")?,
        };
        for name in OUTCOME_VARIABLES {
            let v = table.variable(name)?;
            if v.labels != ["+", "-"] {
                return Err(Error::Config(format!(
                    "outcome variable `{name}` must have labels [\"+\", \"-\"]"
                )));
            }
        }
        for name in SETTING_VARIABLES {
            let v = table.variable(name)?;
            if v.labels.iter().enumerate().any(|(i, l)| *l != i.to_string()) {
                return Err(Error::Config(format!(
                    "setting variable `{name}` must have labels \"0\", \"1\", ..."
                )));
            }
        }
        let hidden = table
            .variables()
            .iter()
            .map(|v| v.name.clone())
            .filter(|n| !OUTCOME_VARIABLES.contains(&n.as_str()) && !SETTING_VARIABLES.contains(&n.as_str()))
            .collect();
        let n_alice = table.variable("x")?.labels.len();
        let n_bob = table.variable("y")?.labels.len();
        Ok(ExactCsModel {
            table,
            hidden,
            slots,
            n_alice,
            n_bob,
        })
    }

    pub fn table(&self) -> &FiniteDistribution {
        &self.table
    }

    pub fn into_table(self) -> FiniteDistribution {
        self.table
    }

    /// Names of the variables that make up λ.
    pub fn hidden_variables(&self) -> Vec<&str> {
        self.hidden.iter().map(String::as_str).collect()
    }

    pub fn n_alice(&self) -> usize {
        self.n_alice
    }

    pub fn n_bob(&self) -> usize {
        self.n_bob
    }

    /// The reproduced P(x,y).
    pub fn input_distribution(&self) -> Result<InputDistribution> {
        let mut p = vec![vec![0.0; self.n_bob]; self.n_alice];
        for (k, w) in self.table.entries() {
            p[k[self.slots.x]][k[self.slots.y]] += w;
        }
        InputDistribution::new(p)
    }

    /// The reproduced P(a,b|x,y) for every setting pair; `None` where
    /// P(x,y) = 0.
    pub fn conditional_cells(&self) -> Vec<Option<CellProbs>> {
        let mut joint = vec![[0.0f64; 4]; self.n_alice * self.n_bob];
        let mut mass = vec![0.0f64; self.n_alice * self.n_bob];
        for (k, w) in self.table.entries() {
            let cell = k[self.slots.x] * self.n_bob + k[self.slots.y];
            joint[cell][2 * k[self.slots.a] + k[self.slots.b]] += w;
            mass[cell] += w;
        }
        joint
            .into_iter()
            .zip(mass)
            .map(|(j, m)| (m > 0.0).then(|| CellProbs(j.map(|v| v / m))))
            .collect()
    }

    pub fn correlations(&self, x: usize, y: usize) -> Result<CellProbs> {
        self.conditional_cells()[x * self.n_bob + y].ok_or(Error::ZeroProbabilityEvidence)
    }

    /// Reproduced correlations as an exact table on the given setting lists.
    pub fn correlation_table(&self, settings: &FiniteSettings) -> Result<CorrelationTable> {
        if settings.n_alice() != self.n_alice || settings.n_bob() != self.n_bob {
            return Err(Error::Config("settings do not match the model's alphabets".into()));
        }
        let settings = settings.with_input(self.input_distribution()?)?;
        CorrelationTable::exact_partial(settings, self.conditional_cells())
    }

    /// I(A:B) on the model's table; λ can be referred to by its parts.
    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<InfoBits> {
        self.table.mutual_information(a, b)
    }

    /// Plays the model as a sampler: given (x, y), draws λ from P(λ|x,y).
    pub fn player(&self) -> ExactPlayer {
        let mut cells: Vec<Vec<(f64, Outcome, Outcome)>> = vec![Vec::new(); self.n_alice * self.n_bob];
        for (k, w) in self.table.entries() {
            let a = if k[self.slots.a] == 0 { Outcome::Plus } else { Outcome::Minus };
            let b = if k[self.slots.b] == 0 { Outcome::Plus } else { Outcome::Minus };
            cells[k[self.slots.x] * self.n_bob + k[self.slots.y]].push((w, a, b));
        }
        let cells = cells
            .into_iter()
            .map(|entries| {
                let mut acc = 0.0;
                entries
                    .into_iter()
                    .map(|(w, a, b)| {
                        acc += w;
                        (acc, a, b)
                    })
                    .collect()
            })
            .collect();
        ExactPlayer {
            cells,
            n_bob: self.n_bob,
        }
    }
}

/// Sampler view of an [`ExactCsModel`].
#[derive(Debug, Clone)]
pub struct ExactPlayer {
    /// Cumulative (weight, a, b) per setting pair.
    cells: Vec<Vec<(f64, Outcome, Outcome)>>,
    n_bob: usize,
}

impl BellSampler for ExactPlayer {
    fn round(&self, x: &Setting, y: &Setting, rng: &mut RandomSource) -> Round {
        let (x, y) = (
            x.index.expect("exact model needs indexed settings"),
            y.index.expect("exact model needs indexed settings"),
        );
        let cell = &self.cells[x * self.n_bob + y];
        let total = cell.last().map(|c| c.0).expect("setting pair outside the model's support");
        let u = rng.uniform() * total;
        let &(_, a, b) = cell.iter().find(|c| u < c.0).unwrap_or(cell.last().unwrap());
        Round {
            a,
            b,
            alice_click: true,
            bob_click: true,
        }
    }
}

/// One draw from a sampled correlated-settings model.
#[derive(Debug, Clone, PartialEq)]
pub struct CsRound<H> {
    pub x: Setting,
    pub y: Setting,
    pub a: Outcome,
    pub b: Outcome,
    pub lambda: H,
}

/// A correlated-settings model realized as a seeded round sampler.
pub trait SampledModel: Sync {
    type Hidden: Clone + Send;

    fn settings(&self) -> &SettingsSpec;

    fn sample(&self, rng: &mut RandomSource) -> Result<CsRound<Self::Hidden>>;

    /// Alice's answer recomputed from (x, λ) alone.
    fn alice_response(&self, x: &Setting, lambda: &Self::Hidden) -> Outcome;

    /// Bob's answer recomputed from (y, λ) alone.
    fn bob_response(&self, y: &Setting, lambda: &Self::Hidden) -> Outcome;
}

#[derive(Debug, Clone)]
pub enum CorrelatedSettingsModel<S> {
    Exact(ExactCsModel),
    Sampled(S),
}

impl<S> CorrelatedSettingsModel<S> {
    pub fn exact(&self) -> Option<&ExactCsModel> {
        match self {
            CorrelatedSettingsModel::Exact(m) => Some(m),
            CorrelatedSettingsModel::Sampled(_) => None,
        }
    }

    pub fn sampled(&self) -> Option<&S> {
        match self {
            CorrelatedSettingsModel::Exact(_) => None,
            CorrelatedSettingsModel::Sampled(s) => Some(s),
        }
    }
}
