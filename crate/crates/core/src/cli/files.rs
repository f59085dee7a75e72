//! On-disk formats: settings, input distributions, correlation tables and
//! finite models. JSON is authoritative; reals are written with 17
//! significant digits so every file re-parses to the same f64 values.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{ser::Error as _, Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::analysis::{Cell, CorrelationTable, DetectionTally};
use crate::error::{Error, Result};
use crate::geom::UnitVector;
use crate::models::{CellProbs, FiniteSettings, InputDistribution};
use crate::probcore::{FiniteDistribution, Variable};

/// Direction vectors in files may be off the unit sphere by this much and
/// are then renormalized.
pub const FILE_UNIT_TOLERANCE: f64 = 1e-6;

/// A real written as `d.dddddddddddddddde±x`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct Real(pub f64);

pub fn format_real(v: f64) -> String {
    // Adding 0.0 folds −0 into +0.
    format!("{:.16e}", v + 0.0)
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        RawValue::from_string(format_real(self.0))
            .map_err(S::Error::custom)?
            .serialize(s)
    }
}

fn reals3(v: UnitVector) -> [Real; 3] {
    v.to_array().map(Real)
}

fn matrix(m: &[Vec<f64>]) -> Vec<Vec<Real>> {
    m.iter().map(|r| r.iter().copied().map(Real).collect()).collect()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn directions(raw: &[[f64; 3]], who: &str) -> Result<Vec<UnitVector>> {
    raw.iter()
        .map(|v| {
            // Keep vectors that are already unit so files round-trip bit for bit.
            if let Ok(u) = UnitVector::new(v[0], v[1], v[2]) {
                return Ok(u);
            }
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if !n.is_finite() || (n - 1.0).abs() > FILE_UNIT_TOLERANCE {
                return Err(Error::Config(format!(
                    "{who} setting {v:?} is not a unit vector (norm {n})"
                )));
            }
            UnitVector::normalized(*v).ok_or_else(|| Error::Config(format!("bad {who} setting {v:?}")))
        })
        .collect()
}

fn build_settings(alice: &[[f64; 3]], bob: &[[f64; 3]], p_xy: Option<Vec<Vec<f64>>>) -> Result<FiniteSettings> {
    let alice = directions(alice, "Alice")?;
    let bob = directions(bob, "Bob")?;
    let input = match p_xy {
        Some(p) => InputDistribution::new(p)?,
        None => InputDistribution::uniform(alice.len().max(1), bob.len().max(1)),
    };
    FiniteSettings::new(alice, bob, input)
}

/// `{"alice_settings": [[x,y,z]…], "bob_settings": […], "p_xy": [[…]]?}`;
/// missing p_xy means uniform independent inputs.
#[derive(Debug, Deserialize)]
struct SettingsFile {
    alice_settings: Vec<[f64; 3]>,
    bob_settings: Vec<[f64; 3]>,
    #[serde(default)]
    p_xy: Option<Vec<Vec<f64>>>,
}

pub fn read_settings(path: &Path) -> Result<FiniteSettings> {
    let f: SettingsFile = read_json(path)?;
    build_settings(&f.alice_settings, &f.bob_settings, f.p_xy)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum InputFile {
    Wrapped { p_xy: Vec<Vec<f64>> },
    Bare(Vec<Vec<f64>>),
}

/// Either `{"p_xy": [[…]]}` or a bare matrix.
pub fn read_input_distribution(path: &Path) -> Result<InputDistribution> {
    let p = match read_json::<InputFile>(path)? {
        InputFile::Wrapped { p_xy } => p_xy,
        InputFile::Bare(p) => p,
    };
    InputDistribution::new(p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub attempts: u64,
    pub alice_clicks: u64,
    pub bob_clicks: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice_efficiency: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bob_efficiency: Option<Real>,
}

impl From<&DetectionTally> for DetectionRecord {
    fn from(t: &DetectionTally) -> Self {
        DetectionRecord {
            attempts: t.attempts,
            alice_clicks: t.alice_clicks,
            bob_clicks: t.bob_clicks,
            alice_efficiency: Some(Real(t.alice_efficiency())),
            bob_efficiency: Some(Real(t.bob_efficiency())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRecord {
    pub x: usize,
    pub y: usize,
    pub pp: Real,
    pub pm: Real,
    pub mp: Real,
    pub mm: Real,
    #[serde(default)]
    pub n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlator: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<Real>,
    /// Per-outcome standard errors in (pp, pm, mp, mm) order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob_std_errors: Option<[Real; 4]>,
    /// Singlet prediction −x·y.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum: Option<Real>,
    /// Correlator of the table the model is built to reproduce.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation_sigma: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flagged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChshRecord {
    pub s: Real,
    pub std_error: Real,
    pub abs_s: Real,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub alice_settings: Vec<[Real; 3]>,
    pub bob_settings: Vec<[Real; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_xy: Option<Vec<Vec<Real>>>,
    pub cells: Vec<CellRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chsh: Option<ChshRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionRecord>,
}

impl TableFile {
    /// Bare schema projection of a table; annotations are added by callers.
    pub fn from_table(t: &CorrelationTable) -> Self {
        let s = t.settings();
        TableFile {
            model: None,
            rounds: None,
            seed: None,
            alice_settings: s.alice().iter().copied().map(reals3).collect(),
            bob_settings: s.bob().iter().copied().map(reals3).collect(),
            p_xy: Some(matrix(s.input().matrix())),
            cells: t
                .cells()
                .iter()
                .map(|c| CellRecord {
                    x: c.x,
                    y: c.y,
                    pp: Real(c.probs.0[0]),
                    pm: Real(c.probs.0[1]),
                    mp: Real(c.probs.0[2]),
                    mm: Real(c.probs.0[3]),
                    n: c.n,
                    exact: None,
                    correlator: None,
                    std_error: None,
                    prob_std_errors: None,
                    quantum: None,
                    target: None,
                    deviation_sigma: None,
                    flagged: None,
                    detection: c.detection.as_ref().map(DetectionRecord::from),
                })
                .collect(),
            chsh: None,
            detection: None,
        }
    }

    /// Rebuilds the table. A cell is exact when `exact` says so or, if the
    /// flag is absent, when it has n = 0 and non-zero probabilities.
    pub fn to_table(&self) -> Result<CorrelationTable> {
        let raw = |v: &[[Real; 3]]| v.iter().map(|r| r.map(|c| c.0)).collect::<Vec<_>>();
        let p_xy = self
            .p_xy
            .as_ref()
            .map(|m| m.iter().map(|r| r.iter().map(|c| c.0).collect()).collect());
        let settings = build_settings(&raw(&self.alice_settings), &raw(&self.bob_settings), p_xy)?;
        let cells = self
            .cells
            .iter()
            .map(|r| {
                let probs = CellProbs([r.pp.0, r.pm.0, r.mp.0, r.mm.0]);
                let mass: f64 = probs.0.iter().sum();
                Cell {
                    x: r.x,
                    y: r.y,
                    probs,
                    n: r.n,
                    exact: r.exact.unwrap_or(r.n == 0 && mass > 0.0),
                    detection: r.detection.as_ref().map(|d| DetectionTally {
                        attempts: d.attempts,
                        alice_clicks: d.alice_clicks,
                        bob_clicks: d.bob_clicks,
                    }),
                }
            })
            .collect();
        CorrelationTable::from_cells(settings, cells)
    }
}

pub fn read_table(path: &Path) -> Result<CorrelationTable> {
    read_json::<TableFile>(path)?.to_table()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightRecord {
    pub assignment: Vec<String>,
    pub p: Real,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub variables: Vec<Variable>,
    pub weights: Vec<WeightRecord>,
}

impl ModelFile {
    pub fn from_distribution(d: &FiniteDistribution) -> Self {
        ModelFile {
            variables: d.variables().to_vec(),
            weights: d
                .labeled_entries()
                .map(|(labels, p)| WeightRecord {
                    assignment: labels.into_iter().map(String::from).collect(),
                    p: Real(p),
                })
                .collect(),
        }
    }

    pub fn to_distribution(&self) -> Result<FiniteDistribution> {
        FiniteDistribution::from_labeled(
            self.variables.clone(),
            self.weights.iter().map(|w| (w.assignment.clone(), w.p.0)),
        )
    }
}

pub fn read_model(path: &Path) -> Result<FiniteDistribution> {
    read_json::<ModelFile>(path)?.to_distribution()
}
