//! The extreme correlated-settings model: λ fixes the settings outright.
//!
//! λ = (x, y, a, b) with P(λ) = P(x,y)·P(a,b|x,y); settings and outcomes are
//! read off λ. Any correlations are reproduced, and I(x,y:λ) = H(x,y).

use super::{ExactCsModel, FiniteSettings, Outcome};
use crate::analysis::CorrelationTable;
use crate::error::{Error, Result};
use crate::probcore::{FiniteDistribution, Variable};

pub fn brans_build(corr: &CorrelationTable, spec: &FiniteSettings) -> Result<ExactCsModel> {
    let (n_a, n_b) = (spec.n_alice(), spec.n_bob());
    if corr.settings().n_alice() != n_a || corr.settings().n_bob() != n_b {
        return Err(Error::Config(format!(
            "correlations are {}×{} but settings are {n_a}×{n_b}",
            corr.settings().n_alice(),
            corr.settings().n_bob()
        )));
    }

    let mut lambda_labels = Vec::new();
    let mut entries = Vec::new();
    for x in 0..n_a {
        for y in 0..n_b {
            let pxy = spec.input().get(x, y);
            if pxy == 0.0 {
                continue;
            }
            let cell = corr.cell(x, y);
            if cell.is_empty() {
                return Err(Error::Validation(format!("cell ({x}, {y}) has no data")));
            }
            cell.probs.validate()?;
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    let p = cell.probs.get(a, b);
                    if p == 0.0 {
                        continue;
                    }
                    let l = lambda_labels.len();
                    lambda_labels.push(format!("x{x}y{y}a{}b{}", a.label(), b.label()));
                    entries.push((vec![a.index(), b.index(), x, y, l], pxy * p));
                }
            }
        }
    }

    // Rows may be off by up to the row tolerance; rescale to exact unit mass.
    let total: f64 = entries.iter().map(|(_, w)| w).sum();
    let entries = entries.into_iter().map(|(k, w)| (k, w / total));

    let table = FiniteDistribution::new(
        vec![
            Outcome::variable("a"),
            Outcome::variable("b"),
            Variable::indexed("x", n_a),
            Variable::indexed("y", n_b),
            Variable::new("lambda", lambda_labels),
        ],
        entries,
    )?;
    ExactCsModel::from_table(table)
}
