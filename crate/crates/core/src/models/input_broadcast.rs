//! Finite-alphabet communication model in which Alice announces her input.
//!
//! μ holds Alice's answer a_x for every x, drawn from P(a|x), and Bob's answer
//! b for every (x, y, a), drawn from P(b|a,x,y). Alice sends m = x and reads
//! a_x; Bob reads his entry at (x, y, a_x). Any correlations whose Alice
//! marginal does not depend on y are reproduced exactly.

use super::{
    communication_round, BellSampler, CellProbs, CommunicationModel, Conversation, FiniteSettings,
    Outcome, Party, Round, Setting, ROW_TOLERANCE,
};
use crate::analysis::CorrelationTable;
use crate::error::{Error, Result};
use crate::geom::RandomSource;

/// Largest μ support that [`CommunicationModel::shared_support`] enumerates.
pub const MAX_ENUMERATED_SUPPORT: usize = 1 << 20;

#[derive(Debug, Clone)]
pub struct InputBroadcast {
    settings: FiniteSettings,
    cells: Vec<CellProbs>,
    /// P(a = + | x).
    alice_plus: Vec<f64>,
    /// P(b = + | a, x, y), indexed by [`InputBroadcast::bob_slot`].
    bob_plus: Vec<f64>,
    bits: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BroadcastShared {
    pub alice: Vec<Outcome>,
    pub bob: Vec<Outcome>,
}

/// Builds the model for `corr`, with inputs distributed as in `spec`.
pub fn input_broadcast_build(corr: &CorrelationTable, spec: &FiniteSettings) -> Result<InputBroadcast> {
    let (n_a, n_b) = (corr.settings().n_alice(), corr.settings().n_bob());
    if spec.n_alice() != n_a || spec.n_bob() != n_b {
        return Err(Error::Config(format!(
            "correlations are {n_a}×{n_b} but settings are {}×{}",
            spec.n_alice(),
            spec.n_bob()
        )));
    }

    let mut cells = Vec::with_capacity(n_a * n_b);
    for x in 0..n_a {
        for y in 0..n_b {
            let cell = corr.cell(x, y);
            if cell.is_empty() {
                return Err(Error::Validation(format!("cell ({x}, {y}) has no data")));
            }
            cell.probs.validate()?;
            cells.push(cell.probs);
        }
    }

    let mut alice_plus = Vec::with_capacity(n_a);
    for x in 0..n_a {
        let reference = cells[x * n_b].alice_marginal()[0];
        for y in 1..n_b {
            let p = cells[x * n_b + y].alice_marginal()[0];
            if (p - reference).abs() > ROW_TOLERANCE {
                return Err(Error::Validation(format!(
                    "Alice's marginal at x = {x} depends on y ({reference} vs {p} at y = {y}); \
                     one-way broadcast from Alice cannot reproduce it"
                )));
            }
        }
        alice_plus.push(reference.clamp(0.0, 1.0));
    }

    let mut bob_plus = vec![1.0; n_a * n_b * 2];
    for x in 0..n_a {
        for y in 0..n_b {
            let c = &cells[x * n_b + y];
            for a in Outcome::BOTH {
                let pa = c.get(a, Outcome::Plus) + c.get(a, Outcome::Minus);
                if pa > 0.0 {
                    bob_plus[(x * n_b + y) * 2 + a.index()] =
                        (c.get(a, Outcome::Plus) / pa).clamp(0.0, 1.0);
                }
            }
        }
    }

    let bits = usize::BITS - (n_a - 1).leading_zeros();
    Ok(InputBroadcast {
        settings: spec.clone(),
        cells,
        alice_plus,
        bob_plus,
        bits,
    })
}

impl InputBroadcast {
    pub fn settings(&self) -> &FiniteSettings {
        &self.settings
    }

    /// Message length ⌈log₂ n_A⌉.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    fn bob_slot(&self, x: usize, y: usize, a: Outcome) -> usize {
        (x * self.settings.n_bob() + y) * 2 + a.index()
    }

    fn index_of(s: &Setting) -> usize {
        s.index
            .expect("input-broadcast model needs indexed settings")
    }

    fn announced(m: &Conversation) -> usize {
        match m.messages() {
            [msg] if msg.from == Party::Alice && msg.symbol >= 0 => msg.symbol as usize,
            other => panic!("expected Alice's announced input, got {other:?}"),
        }
    }
}

fn two_way(p_plus: f64) -> Vec<(Outcome, f64)> {
    [(Outcome::Plus, p_plus), (Outcome::Minus, 1.0 - p_plus)]
        .into_iter()
        .filter(|(_, p)| *p > 0.0)
        .collect()
}

impl CommunicationModel for InputBroadcast {
    type Shared = BroadcastShared;

    fn name(&self) -> &'static str {
        "input-broadcast"
    }

    fn sample_shared(&self, rng: &mut RandomSource) -> BroadcastShared {
        let draw = |p: f64, rng: &mut RandomSource| {
            if rng.uniform() < p {
                Outcome::Plus
            } else {
                Outcome::Minus
            }
        };
        let alice = self.alice_plus.iter().map(|&p| draw(p, rng)).collect();
        let bob = self.bob_plus.iter().map(|&p| draw(p, rng)).collect();
        BroadcastShared { alice, bob }
    }

    fn conversation(&self, x: &Setting, _y: &Setting, _mu: &BroadcastShared) -> Conversation {
        Conversation::single(Party::Alice, Self::index_of(x) as i64)
    }

    fn alice_output(&self, x: &Setting, mu: &BroadcastShared, _m: &Conversation) -> Outcome {
        mu.alice[Self::index_of(x)]
    }

    fn bob_output(&self, y: &Setting, mu: &BroadcastShared, m: &Conversation) -> Outcome {
        let x = Self::announced(m);
        mu.bob[self.bob_slot(x, Self::index_of(y), mu.alice[x])]
    }

    fn target(&self, x: &Setting, y: &Setting) -> CellProbs {
        self.cells[Self::index_of(x) * self.settings.n_bob() + Self::index_of(y)]
    }

    fn max_message_bits(&self) -> Option<u32> {
        Some(self.bits)
    }

    fn alphabet(&self) -> Option<(usize, usize)> {
        Some((self.settings.n_alice(), self.settings.n_bob()))
    }

    fn shared_support(&self) -> Option<Vec<(BroadcastShared, f64)>> {
        let alice_choices: Vec<Vec<(Outcome, f64)>> =
            self.alice_plus.iter().map(|&p| two_way(p)).collect();
        let bob_choices: Vec<Vec<(Outcome, f64)>> = (0..self.bob_plus.len())
            .map(|slot| {
                let x = slot / (2 * self.settings.n_bob());
                let a = if slot % 2 == 0 { Outcome::Plus } else { Outcome::Minus };
                let reachable = match a {
                    Outcome::Plus => self.alice_plus[x] > 0.0,
                    Outcome::Minus => self.alice_plus[x] < 1.0,
                };
                if reachable {
                    two_way(self.bob_plus[slot])
                } else {
                    vec![(Outcome::Plus, 1.0)]
                }
            })
            .collect();

        let size = alice_choices
            .iter()
            .chain(&bob_choices)
            .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))?;
        if size > MAX_ENUMERATED_SUPPORT {
            return None;
        }

        let mut support = vec![(Vec::new(), 1.0)];
        for choices in alice_choices.iter().chain(&bob_choices) {
            let mut next = Vec::with_capacity(support.len() * choices.len());
            for (prefix, p) in &support {
                for &(o, q) in choices {
                    let mut v: Vec<Outcome> = prefix.clone();
                    v.push(o);
                    next.push((v, p * q));
                }
            }
            support = next;
        }
        let n_a = self.alice_plus.len();
        Some(
            support
                .into_iter()
                .map(|(mut v, p)| {
                    let bob = v.split_off(n_a);
                    (BroadcastShared { alice: v, bob }, p)
                })
                .collect(),
        )
    }

    fn shared_label(&self, mu: &BroadcastShared) -> String {
        let a: String = mu.alice.iter().map(|o| o.label()).collect();
        let b: String = mu.bob.iter().map(|o| o.label()).collect();
        format!("a{a}/b{b}")
    }
}

impl BellSampler for InputBroadcast {
    fn round(&self, x: &Setting, y: &Setting, rng: &mut RandomSource) -> Round {
        communication_round(self, x, y, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::pr_box_table;

    #[test]
    fn message_length_is_ceil_log2() {
        let chsh = FiniteSettings::chsh();
        let m = input_broadcast_build(&pr_box_table(), &chsh).unwrap();
        assert_eq!(m.bits(), 1);
        assert_eq!(m.max_message_bits(), Some(1));
    }

    #[test]
    fn pr_box_support_is_small_and_normalized() {
        let chsh = FiniteSettings::chsh();
        let m = input_broadcast_build(&pr_box_table(), &chsh).unwrap();
        let support = m.shared_support().unwrap();
        // Alice's two answers are free; Bob's answers are forced.
        assert_eq!(support.len(), 4);
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        assert_eq!(total, 1.0);
    }

    #[test]
    fn rejects_signalling_alice_marginal() {
        let chsh = FiniteSettings::chsh();
        let table = CorrelationTable::exact(chsh.clone(), |_, y| {
            if y == 0 {
                CellProbs([1.0, 0.0, 0.0, 0.0])
            } else {
                CellProbs([0.0, 0.0, 1.0, 0.0])
            }
        })
        .unwrap();
        assert!(matches!(
            input_broadcast_build(&table, &chsh),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn rejects_mismatched_alphabets() {
        let parallel = FiniteSettings::parallel();
        assert!(matches!(
            input_broadcast_build(&pr_box_table(), &parallel),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn deterministic_correlations_give_constant_outputs() {
        let chsh = FiniteSettings::chsh();
        let table = CorrelationTable::exact(chsh.clone(), |_, _| CellProbs([1.0, 0.0, 0.0, 0.0])).unwrap();
        let m = input_broadcast_build(&table, &chsh).unwrap();
        let spec = crate::models::SettingsSpec::Finite(chsh);
        let mut rng = RandomSource::new(3);
        for _ in 0..100 {
            let (x, y) = spec.draw(&mut rng);
            let r = m.play(&x, &y, &mut rng);
            assert_eq!((r.a, r.b), (Outcome::Plus, Outcome::Plus));
        }
    }
}
