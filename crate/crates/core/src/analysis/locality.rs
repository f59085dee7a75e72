use serde::Serialize;

use crate::error::Result;
use crate::models::ExactCsModel;
use crate::probcore::Witness;

#[derive(Debug, Clone, Serialize)]
pub struct LocalityCheck {
    pub condition: String,
    pub max_deviation: f64,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalityReport {
    pub passed: bool,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub checks: Vec<LocalityCheck>,
    /// Worst cell over all checks, when any check deviates.
    pub witness: Option<Witness>,
}

/// Checks P(a,b|x,y,λ) = P(a|x,λ)·P(b|y,λ) on an exact model.
///
/// Three conditional independences are tested: a ⟂ b given (x, y, λ), a ⟂ y
/// given (x, λ), and b ⟂ x given (y, λ). Together they are equivalent to the
/// factorization on the support of (x, y, λ).
pub fn verify_bell_local(model: &ExactCsModel, tol: f64) -> Result<LocalityReport> {
    let t = model.table();
    let hidden = model.hidden_variables();
    let with = |extra: &[&'static str]| -> Vec<&str> {
        extra.iter().copied().chain(hidden.iter().copied()).collect()
    };

    let specs: [(&str, &str, &str, Vec<&str>); 3] = [
        ("a ⟂ b | x,y,λ", "a", "b", with(&["x", "y"])),
        ("a ⟂ y | x,λ", "a", "y", with(&["x"])),
        ("b ⟂ x | y,λ", "b", "x", with(&["y"])),
    ];

    let mut checks = Vec::with_capacity(3);
    for (condition, left, right, given) in specs {
        let p = t.is_product(&[left], &[right], &given, tol)?;
        checks.push(LocalityCheck {
            condition: condition.to_string(),
            max_deviation: p.max_deviation,
            witness: p.witness,
        });
    }

    let worst = checks
        .iter()
        .max_by(|a, b| a.max_deviation.total_cmp(&b.max_deviation))
        .expect("three checks");
    let max_deviation = worst.max_deviation;
    let witness = worst.witness.clone();
    Ok(LocalityReport {
        passed: max_deviation <= tol,
        tolerance: tol,
        max_deviation,
        checks,
        witness,
    })
}
