//! Exact finite probability tables over named discrete variables, and the
//! Shannon measures (in bits) evaluated on them.
//!
//! Variables are addressed by name so that tables built by different
//! constructions can be marginalized, conditioned and compared without
//! positional bookkeeping. Weights are stored sparsely: only assignments with
//! strictly positive probability are kept.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total weight accepted at construction.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Negative information values down to this magnitude are rounding noise and
/// are clamped to zero; anything more negative is reported as an error.
pub const NEGATIVE_INFO_TOLERANCE: f64 = 1e-10;

/// An amount of information in bits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InfoBits(f64);

impl InfoBits {
    pub const ZERO: InfoBits = InfoBits(0.0);

    pub fn new(bits: f64) -> Self {
        InfoBits(bits)
    }

    pub fn bits(self) -> f64 {
        self.0
    }
}

impl fmt::Display for InfoBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} bits", self.0)
    }
}

impl From<InfoBits> for f64 {
    fn from(value: InfoBits) -> f64 {
        value.0
    }
}

/// A named variable with a finite, ordered label alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub labels: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>, L: Into<String>>(
        name: S,
        labels: impl IntoIterator<Item = L>,
    ) -> Self {
        Variable {
            name: name.into(),
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    /// A variable whose labels are `"0"`, `"1"`, ..., `"n-1"`.
    pub fn indexed<S: Into<String>>(name: S, n: usize) -> Self {
        Variable::new(name, (0..n).map(|i| i.to_string()))
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel {
                variable: self.name.clone(),
                label: label.to_string(),
            })
    }
}

/// Exact joint distribution over a list of named variables.
#[derive(Debug, Clone)]
pub struct FiniteDistribution {
    variables: Vec<Variable>,
    weights: BTreeMap<Vec<usize>, f64>,
}

/// Outcome of a conditional-independence check, see
/// [`FiniteDistribution::is_product`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductCheck {
    pub holds: bool,
    pub max_deviation: f64,
    /// Cell attaining the largest deviation, when any deviation is non-zero.
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub given: Vec<(String, String)>,
    pub left: Vec<(String, String)>,
    pub right: Vec<(String, String)>,
    pub joint: f64,
    pub product: f64,
}

impl FiniteDistribution {
    /// Builds a table from label-index assignments. Repeated assignments are
    /// accumulated; zero weights are dropped.
    pub fn new(
        variables: Vec<Variable>,
        entries: impl IntoIterator<Item = (Vec<usize>, f64)>,
    ) -> Result<Self> {
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
            if v.labels.is_empty() {
                return Err(Error::Config(format!("variable `{}` has no labels", v.name)));
            }
            for (j, l) in v.labels.iter().enumerate() {
                if v.labels[..j].contains(l) {
                    return Err(Error::Config(format!(
                        "variable `{}` repeats label `{l}`",
                        v.name
                    )));
                }
            }
        }

        let mut weights = BTreeMap::new();
        let mut total = 0.0;
        for (assignment, w) in entries {
            if assignment.len() != variables.len() {
                return Err(Error::AssignmentArity {
                    expected: variables.len(),
                    got: assignment.len(),
                });
            }
            for (&k, v) in assignment.iter().zip(&variables) {
                if k >= v.labels.len() {
                    return Err(Error::UnknownLabel {
                        variable: v.name.clone(),
                        label: format!("#{k}"),
                    });
                }
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight { weight: w });
            }
            total += w;
            if w > 0.0 {
                *weights.entry(assignment).or_insert(0.0) += w;
            }
        }

        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Normalization {
                sum: total,
                tolerance: NORMALIZATION_TOLERANCE,
            });
        }
        Ok(FiniteDistribution { variables, weights })
    }

    /// Like [`FiniteDistribution::new`] but with assignments given as labels.
    pub fn from_labeled<S: AsRef<str>>(
        variables: Vec<Variable>,
        entries: impl IntoIterator<Item = (Vec<S>, f64)>,
    ) -> Result<Self> {
        let mut indexed = Vec::new();
        for (labels, w) in entries {
            if labels.len() != variables.len() {
                return Err(Error::AssignmentArity {
                    expected: variables.len(),
                    got: labels.len(),
                });
            }
            let assignment = labels
                .iter()
                .zip(&variables)
                .map(|(l, v)| v.label_index(l.as_ref()))
                .collect::<Result<Vec<_>>>()?;
            indexed.push((assignment, w));
        }
        FiniteDistribution::new(variables, indexed)
    }

    /// Independent product of two tables over disjoint variables.
    pub fn product(&self, other: &FiniteDistribution) -> Result<Self> {
        let mut variables = self.variables.clone();
        variables.extend(other.variables.iter().cloned());
        let mut entries = Vec::with_capacity(self.weights.len() * other.weights.len());
        for (ka, wa) in &self.weights {
            for (kb, wb) in &other.weights {
                let mut k = ka.clone();
                k.extend_from_slice(kb);
                entries.push((k, wa * wb));
            }
        }
        FiniteDistribution::new(variables, entries)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        Ok(&self.variables[self.index_of(name)?])
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Support entries as (label indices, weight), in canonical order.
    pub fn entries(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.weights.iter().map(|(k, &w)| (k.as_slice(), w))
    }

    /// Support entries with label strings.
    pub fn labeled_entries(&self) -> impl Iterator<Item = (Vec<&str>, f64)> {
        self.weights.iter().map(move |(k, &w)| {
            let labels = k
                .iter()
                .zip(&self.variables)
                .map(|(&i, v)| v.labels[i].as_str())
                .collect();
            (labels, w)
        })
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Probability of the event fixing the given variables to the given labels.
    pub fn probability(&self, event: &[(&str, &str)]) -> Result<f64> {
        let fixed = self.resolve_event(event)?;
        Ok(self
            .weights
            .iter()
            .filter(|(k, _)| fixed.iter().all(|&(i, l)| k[i] == l))
            .map(|(_, &w)| w)
            .sum())
    }

    /// Sums out every variable not in `keep`. The result lists variables in
    /// the order given by `keep`.
    pub fn marginalize(&self, keep: &[&str]) -> Result<FiniteDistribution> {
        let idx = self.resolve_set(keep)?;
        let weights = self.marginal_map(&idx);
        Ok(FiniteDistribution {
            variables: idx.iter().map(|&i| self.variables[i].clone()).collect(),
            weights,
        })
    }

    /// Restricts to the evidence event and renormalizes. All variables are
    /// kept; conditioned ones become point masses.
    pub fn condition(&self, evidence: &[(&str, &str)]) -> Result<FiniteDistribution> {
        let fixed = self.resolve_event(evidence)?;
        let kept: Vec<(Vec<usize>, f64)> = self
            .weights
            .iter()
            .filter(|(k, _)| fixed.iter().all(|&(i, l)| k[i] == l))
            .map(|(k, &w)| (k.clone(), w))
            .collect();
        let mass: f64 = kept.iter().map(|(_, w)| w).sum();
        if mass <= 0.0 {
            return Err(Error::ZeroProbabilityEvidence);
        }
        Ok(FiniteDistribution {
            variables: self.variables.clone(),
            weights: kept.into_iter().map(|(k, w)| (k, w / mass)).collect(),
        })
    }

    /// Shannon entropy of the marginal on `vars`, in bits.
    pub fn entropy(&self, vars: &[&str]) -> Result<InfoBits> {
        let idx = self.resolve_set(vars)?;
        Ok(InfoBits(entropy_of(self.marginal_map(&idx).into_values())))
    }

    /// I(A:B) = H(A) + H(B) − H(A∪B).
    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<InfoBits> {
        check_disjoint(&[a, b])?;
        let ha = self.entropy(a)?.0;
        let hb = self.entropy(b)?.0;
        let hab = self.entropy(&union(&[a, b]))?.0;
        clamp_info(ha + (hb - hab), "I(A:B)")
    }

    /// I(A:B|C) = H(A∪C) + H(B∪C) − H(A∪B∪C) − H(C).
    pub fn conditional_mutual_information(
        &self,
        a: &[&str],
        b: &[&str],
        c: &[&str],
    ) -> Result<InfoBits> {
        check_disjoint(&[a, b, c])?;
        let hac = self.entropy(&union(&[a, c]))?.0;
        let hbc = self.entropy(&union(&[b, c]))?.0;
        let habc = self.entropy(&union(&[a, b, c]))?.0;
        let hc = self.entropy(c)?.0;
        clamp_info((hac - hc) + (hbc - habc), "I(A:B|C)")
    }

    /// H(A|B) = H(A∪B) − H(B).
    pub fn conditional_entropy(&self, a: &[&str], given: &[&str]) -> Result<InfoBits> {
        check_disjoint(&[a, given])?;
        let hab = self.entropy(&union(&[a, given]))?.0;
        let hb = self.entropy(given)?.0;
        clamp_info(hab - hb, "H(A|B)")
    }

    /// Checks P(A,B|c) = P(A|c)·P(B|c) for every c with P(c) > 0, in max norm.
    pub fn is_product(&self, a: &[&str], b: &[&str], given: &[&str], tol: f64) -> Result<ProductCheck> {
        check_disjoint(&[a, b, given])?;
        let ia = self.resolve_set(a)?;
        let ib = self.resolve_set(b)?;
        let ic = self.resolve_set(given)?;

        struct Group {
            mass: f64,
            left: BTreeMap<Vec<usize>, f64>,
            right: BTreeMap<Vec<usize>, f64>,
            joint: BTreeMap<(Vec<usize>, Vec<usize>), f64>,
        }

        let mut groups: BTreeMap<Vec<usize>, Group> = BTreeMap::new();
        for (k, &w) in &self.weights {
            let g = groups.entry(project(k, &ic)).or_insert_with(|| Group {
                mass: 0.0,
                left: BTreeMap::new(),
                right: BTreeMap::new(),
                joint: BTreeMap::new(),
            });
            let ka = project(k, &ia);
            let kb = project(k, &ib);
            g.mass += w;
            *g.left.entry(ka.clone()).or_insert(0.0) += w;
            *g.right.entry(kb.clone()).or_insert(0.0) += w;
            *g.joint.entry((ka, kb)).or_insert(0.0) += w;
        }

        let mut max_dev = 0.0f64;
        let mut witness = None;
        for (kc, g) in &groups {
            for (ka, &pa) in &g.left {
                for (kb, &pb) in &g.right {
                    let joint = g.joint.get(&(ka.clone(), kb.clone())).copied().unwrap_or(0.0) / g.mass;
                    let product = (pa / g.mass) * (pb / g.mass);
                    let dev = (joint - product).abs();
                    if dev > max_dev {
                        max_dev = dev;
                        witness = Some(Witness {
                            given: self.describe(&ic, kc),
                            left: self.describe(&ia, ka),
                            right: self.describe(&ib, kb),
                            joint,
                            product,
                        });
                    }
                }
            }
        }
        Ok(ProductCheck {
            holds: max_dev <= tol,
            max_deviation: max_dev,
            witness,
        })
    }

    /// Same variables (by name, labels and order) and weights equal within `tol`.
    pub fn approx_eq(&self, other: &FiniteDistribution, tol: f64) -> bool {
        if self.variables != other.variables {
            return false;
        }
        let mismatch = |a: &BTreeMap<Vec<usize>, f64>, b: &BTreeMap<Vec<usize>, f64>| {
            a.iter()
                .any(|(k, &w)| (w - b.get(k).copied().unwrap_or(0.0)).abs() > tol)
        };
        !mismatch(&self.weights, &other.weights) && !mismatch(&other.weights, &self.weights)
    }

    fn resolve_set(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut idx = Vec::with_capacity(names.len());
        for name in names {
            let i = self.index_of(name)?;
            if idx.contains(&i) {
                return Err(Error::DuplicateVariable(name.to_string()));
            }
            idx.push(i);
        }
        Ok(idx)
    }

    fn resolve_event(&self, event: &[(&str, &str)]) -> Result<Vec<(usize, usize)>> {
        event
            .iter()
            .map(|&(name, label)| {
                let i = self.index_of(name)?;
                Ok((i, self.variables[i].label_index(label)?))
            })
            .collect()
    }

    fn marginal_map(&self, idx: &[usize]) -> BTreeMap<Vec<usize>, f64> {
        let mut out = BTreeMap::new();
        for (k, &w) in &self.weights {
            *out.entry(project(k, idx)).or_insert(0.0) += w;
        }
        out
    }

    fn describe(&self, idx: &[usize], key: &[usize]) -> Vec<(String, String)> {
        idx.iter()
            .zip(key)
            .map(|(&i, &l)| {
                let v = &self.variables[i];
                (v.name.clone(), v.labels[l].clone())
            })
            .collect()
    }
}

/// h(p) = −p log₂ p − (1−p) log₂(1−p).
pub fn binary_entropy(p: f64) -> Result<InfoBits> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("binary entropy of p = {p}")));
    }
    Ok(InfoBits(binary_entropy_unchecked(p)))
}

/// [`binary_entropy`] for callers that already guarantee `p ∈ [0, 1]`.
#[inline]
pub(crate) fn binary_entropy_unchecked(p: f64) -> f64 {
    plogp(p) + plogp(1.0 - p)
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Entropy of a list of probabilities. Terms are summed in ascending order so
/// that equal multisets of probabilities give bit-identical results.
fn entropy_of(probs: impl IntoIterator<Item = f64>) -> f64 {
    let mut ps: Vec<f64> = probs.into_iter().filter(|&p| p > 0.0).collect();
    ps.sort_by(f64::total_cmp);
    ps.into_iter().map(plogp).sum()
}

fn clamp_info(value: f64, what: &str) -> Result<InfoBits> {
    if value >= 0.0 {
        Ok(InfoBits(value))
    } else if value >= -NEGATIVE_INFO_TOLERANCE {
        Ok(InfoBits(0.0))
    } else {
        Err(Error::Inconsistent(format!("{what} evaluated to {value}")))
    }
}

fn project(key: &[usize], idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|&i| key[i]).collect()
}

fn check_disjoint(sets: &[&[&str]]) -> Result<()> {
    for (i, s) in sets.iter().enumerate() {
        for t in &sets[i + 1..] {
            if let Some(shared) = s.iter().find(|n| t.contains(n)) {
                return Err(Error::OverlappingSets(shared.to_string()));
            }
        }
    }
    Ok(())
}

fn union<'a>(sets: &[&[&'a str]]) -> Vec<&'a str> {
    sets.iter().flat_map(|s| s.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(name: &str) -> Variable {
        Variable::new(name, ["0", "1"])
    }

    fn uniform_xy() -> FiniteDistribution {
        FiniteDistribution::new(
            vec![bits("x"), bits("y")],
            [(vec![0, 0], 0.25), (vec![0, 1], 0.25), (vec![1, 0], 0.25), (vec![1, 1], 0.25)],
        )
        .unwrap()
    }

    #[test]
    fn rejects_unnormalized_tables() {
        let err = FiniteDistribution::new(vec![bits("x")], [(vec![0], 0.5), (vec![1], 0.4)]);
        assert!(matches!(err, Err(Error::Normalization { .. })));
        let err = FiniteDistribution::new(vec![bits("x")], [(vec![0], 1.5), (vec![1], -0.5)]);
        assert!(matches!(err, Err(Error::InvalidWeight { .. })));
        let err = FiniteDistribution::new(vec![bits("x"), bits("x")], [(vec![0, 0], 1.0)]);
        assert!(matches!(err, Err(Error::DuplicateVariable(_))));
    }

    #[test]
    fn marginal_of_uniform_pair() {
        let m = uniform_xy().marginalize(&["x"]).unwrap();
        assert_eq!(m.variables().len(), 1);
        assert_eq!(m.probability(&[("x", "0")]).unwrap(), 0.5);
        assert_eq!(m.probability(&[("x", "1")]).unwrap(), 0.5);
    }

    #[test]
    fn marginal_of_point_mass() {
        let d = FiniteDistribution::new(vec![bits("x"), bits("y")], [(vec![0, 0], 1.0)]).unwrap();
        let m = d.marginalize(&["y"]).unwrap();
        assert_eq!(m.probability(&[("y", "0")]).unwrap(), 1.0);
        assert_eq!(m.entropy(&["y"]).unwrap().bits(), 0.0);
    }

    #[test]
    fn unknown_variable_is_an_error() {
        assert!(matches!(
            uniform_xy().marginalize(&["z"]),
            Err(Error::UnknownVariable(_))
        ));
        assert!(matches!(
            uniform_xy().entropy(&["x", "q"]),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn conditioning_independent_pair() {
        let c = uniform_xy().condition(&[("x", "0")]).unwrap();
        let y = c.marginalize(&["y"]).unwrap();
        assert_eq!(y.probability(&[("y", "0")]).unwrap(), 0.5);
        assert_eq!(c.probability(&[("x", "1")]).unwrap(), 0.0);
    }

    #[test]
    fn conditioning_on_full_assignment_gives_point_mass() {
        let c = uniform_xy().condition(&[("x", "1"), ("y", "0")]).unwrap();
        assert_eq!(c.support_size(), 1);
        assert_eq!(c.probability(&[("x", "1"), ("y", "0")]).unwrap(), 1.0);
    }

    #[test]
    fn conditioning_on_null_event_fails_loudly() {
        let d = FiniteDistribution::new(vec![bits("x"), bits("y")], [(vec![0, 0], 1.0)]).unwrap();
        assert!(matches!(
            d.condition(&[("x", "1")]),
            Err(Error::ZeroProbabilityEvidence)
        ));
    }

    #[test]
    fn entropy_examples() {
        let d = uniform_xy();
        assert_eq!(d.entropy(&["x"]).unwrap().bits(), 1.0);
        assert_eq!(d.entropy(&["x", "y"]).unwrap().bits(), 2.0);

        let v = Variable::new("v", ["a", "b", "c"]);
        let d = FiniteDistribution::new(vec![v], [(vec![0], 0.5), (vec![1], 0.25), (vec![2], 0.25)])
            .unwrap();
        assert_eq!(d.entropy(&["v"]).unwrap().bits(), 1.5);
    }

    #[test]
    fn mutual_information_examples() {
        assert_eq!(uniform_xy().mutual_information(&["x"], &["y"]).unwrap().bits(), 0.0);

        let copied = FiniteDistribution::new(
            vec![bits("x"), bits("lambda")],
            [(vec![0, 0], 0.5), (vec![1, 1], 0.5)],
        )
        .unwrap();
        assert_eq!(
            copied.mutual_information(&["x"], &["lambda"]).unwrap().bits(),
            1.0
        );
        assert!(matches!(
            copied.mutual_information(&["x"], &["x", "lambda"]),
            Err(Error::OverlappingSets(_))
        ));
    }

    #[test]
    fn conditional_mi_reduces_to_mi_for_independent_condition() {
        let copied = FiniteDistribution::new(
            vec![bits("a"), bits("b")],
            [(vec![0, 0], 0.5), (vec![1, 1], 0.5)],
        )
        .unwrap();
        let coin = FiniteDistribution::new(vec![bits("c")], [(vec![0], 0.3), (vec![1], 0.7)]).unwrap();
        let d = copied.product(&coin).unwrap();
        let cmi = d.conditional_mutual_information(&["a"], &["b"], &["c"]).unwrap().bits();
        let mi = d.mutual_information(&["a"], &["b"]).unwrap().bits();
        assert!((cmi - mi).abs() < 1e-12);
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap().bits(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap().bits(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap().bits(), 0.0);
        // −¼log₂¼ − ¾log₂¾ = 0.5 + 0.75·log₂(4/3)
        let expected = 0.5 + 0.75 * (4.0f64 / 3.0).log2();
        assert!((binary_entropy(0.25).unwrap().bits() - expected).abs() < 1e-15);
        assert!((binary_entropy(0.25).unwrap().bits() - 0.811278).abs() < 1e-6);
        assert!(matches!(binary_entropy(1.5), Err(Error::Domain(_))));
        assert!(matches!(binary_entropy(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn product_check_on_independent_tables() {
        let check = uniform_xy().is_product(&["x"], &["y"], &[], 0.0).unwrap();
        assert!(check.holds);
        assert_eq!(check.max_deviation, 0.0);
        assert!(check.witness.is_none());
    }

    #[test]
    fn product_check_rejects_pr_box() {
        // a ⊕ b = x·y with uniform marginals, conditioned on the settings only.
        let vars = vec![bits("a"), bits("b"), bits("x"), bits("y")];
        let mut entries = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    let b = a ^ (x & y);
                    entries.push((vec![a, b, x, y], 0.125));
                }
            }
        }
        let pr = FiniteDistribution::new(vars, entries).unwrap();
        let check = pr.is_product(&["a"], &["b"], &["x", "y"], 1e-9).unwrap();
        assert!(!check.holds);
        assert_eq!(check.max_deviation, 0.25);
        assert!(check.witness.is_some());
    }

    fn arb_distribution() -> impl Strategy<Value = FiniteDistribution> {
        // Three variables with alphabets of size 2, 3, 2.
        prop::collection::vec(0.0f64..1.0, 12).prop_filter_map("non-degenerate", |raw| {
            let total: f64 = raw.iter().sum();
            if total < 1e-3 {
                return None;
            }
            let vars = vec![
                Variable::indexed("p", 2),
                Variable::indexed("q", 3),
                Variable::indexed("r", 2),
            ];
            let mut entries = Vec::new();
            let mut n = 0;
            for p in 0..2 {
                for q in 0..3 {
                    for r in 0..2 {
                        entries.push((vec![p, q, r], raw[n] / total));
                        n += 1;
                    }
                }
            }
            FiniteDistribution::new(vars, entries).ok()
        })
    }

    proptest! {
        #[test]
        fn mi_is_bounded_by_entropies(d in arb_distribution()) {
            let i = d.mutual_information(&["p", "r"], &["q"]).unwrap().bits();
            let ha = d.entropy(&["p", "r"]).unwrap().bits();
            let hb = d.entropy(&["q"]).unwrap().bits();
            prop_assert!(i >= 0.0);
            prop_assert!(i <= ha.min(hb) + 1e-10);
        }

        #[test]
        fn chain_rule_holds(d in arb_distribution()) {
            // I(p,q : r) = I(p : r) + I(q : r | p)
            let lhs = d.mutual_information(&["p", "q"], &["r"]).unwrap().bits();
            let rhs = d.mutual_information(&["p"], &["r"]).unwrap().bits()
                + d.conditional_mutual_information(&["q"], &["r"], &["p"]).unwrap().bits();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn measures_ignore_variable_order_and_label_names(d in arb_distribution()) {
            let permuted = d.marginalize(&["r", "p", "q"]).unwrap();
            let renamed = FiniteDistribution::new(
                permuted
                    .variables()
                    .iter()
                    .map(|v| Variable::new(v.name.clone(), v.labels.iter().map(|l| format!("L{l}"))))
                    .collect(),
                permuted.entries().map(|(k, w)| (k.to_vec(), w)),
            )
            .unwrap();
            for other in [&permuted, &renamed] {
                let a = d.mutual_information(&["p"], &["q", "r"]).unwrap().bits();
                let b = other.mutual_information(&["p"], &["q", "r"]).unwrap().bits();
                prop_assert!((a - b).abs() < 1e-12);
                let ha = d.entropy(&["p", "q", "r"]).unwrap().bits();
                let hb = other.entropy(&["r", "q", "p"]).unwrap().bits();
                prop_assert!((ha - hb).abs() < 1e-12);
            }
        }

        #[test]
        fn condition_and_marginalize_commute(d in arb_distribution(), label in 0usize..2) {
            let l = label.to_string();
            let Ok(c) = d.condition(&[("p", l.as_str())]) else { return Ok(()); };
            let lhs = c.marginalize(&["p", "q"]).unwrap();
            let rhs = d.marginalize(&["p", "q"]).unwrap().condition(&[("p", l.as_str())]).unwrap();
            prop_assert!(lhs.approx_eq(&rhs, 1e-12));
        }
    }
}
