//! One-bit communication model for projective measurements on a singlet.
//!
//! Shared randomness is a pair of independent uniform directions (λ₁, λ₂).
//! Alice answers a = −sgn(x·λ₁) and sends m = sgn(x·λ₁)·sgn(x·λ₂); Bob answers
//! b = sgn(y·(λ₁ + m λ₂)). Together these give E[ab] = −x·y.


use super::{
    communication_round, BellSampler, CellProbs, CommunicationModel, Conversation, Outcome, Party,
    Round, Setting,
};
use crate::geom::{sample_uniform_sphere, sgn_dot, sign, RandomSource, UnitVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbShared {
    pub lambda1: UnitVector,
    pub lambda2: UnitVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbRound {
    pub a: Outcome,
    pub b: Outcome,
    /// The communicated bit, ±1.
    pub m: i8,
    pub mu: TbShared,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TonerBacon;

impl TonerBacon {
    /// Draws μ, rejecting the exactly antipodal pair: only there can
    /// λ₁ + mλ₂ vanish.
    pub fn draw_shared(rng: &mut RandomSource) -> TbShared {
        loop {
            let lambda1 = sample_uniform_sphere(rng);
            let lambda2 = sample_uniform_sphere(rng);
            if lambda2 == -lambda1 {
                continue;
            }
            return TbShared { lambda1, lambda2 };
        }
    }

    pub fn message(x: UnitVector, mu: &TbShared) -> i8 {
        sgn_dot(x, mu.lambda1) * sgn_dot(x, mu.lambda2)
    }

    pub fn alice_answer(x: UnitVector, mu: &TbShared) -> Outcome {
        Outcome::from_sign(-sgn_dot(x, mu.lambda1))
    }

    pub fn bob_answer(y: UnitVector, mu: &TbShared, m: i8) -> Outcome {
        let (l1, l2) = (mu.lambda1.to_array(), mu.lambda2.to_array());
        let m = f64::from(m);
        let steer = [l1[0] + m * l2[0], l1[1] + m * l2[1], l1[2] + m * l2[2]];
        Outcome::from_sign(sign(y.dot_raw(steer)))
    }
}

/// One round of the protocol for Bloch directions `x` and `y`.
pub fn tb_round(x: UnitVector, y: UnitVector, r: &mut RandomSource) -> TbRound {
    let mu = TonerBacon::draw_shared(r);
    let m = TonerBacon::message(x, &mu);
    TbRound {
        a: TonerBacon::alice_answer(x, &mu),
        b: TonerBacon::bob_answer(y, &mu, m),
        m,
        mu,
    }
}

fn message_bit(m: &Conversation) -> i8 {
    match m.messages() {
        [msg] if msg.from == Party::Alice => {
            if msg.symbol >= 0 {
                1
            } else {
                -1
            }
        }
        other => panic!("Toner-Bacon conversation must be one message from Alice, got {other:?}"),
    }
}

impl CommunicationModel for TonerBacon {
    type Shared = TbShared;

    fn name(&self) -> &'static str {
        "toner-bacon"
    }

    fn sample_shared(&self, rng: &mut RandomSource) -> TbShared {
        TonerBacon::draw_shared(rng)
    }

    fn conversation(&self, x: &Setting, _y: &Setting, mu: &TbShared) -> Conversation {
        Conversation::single(Party::Alice, i64::from(TonerBacon::message(x.direction, mu)))
    }

    fn alice_output(&self, x: &Setting, mu: &TbShared, _m: &Conversation) -> Outcome {
        TonerBacon::alice_answer(x.direction, mu)
    }

    fn bob_output(&self, y: &Setting, mu: &TbShared, m: &Conversation) -> Outcome {
        TonerBacon::bob_answer(y.direction, mu, message_bit(m))
    }

    fn target(&self, x: &Setting, y: &Setting) -> CellProbs {
        CellProbs::from_correlator(-x.direction.dot(y.direction))
    }

    fn max_message_bits(&self) -> Option<u32> {
        Some(1)
    }

    fn shared_label(&self, mu: &TbShared) -> String {
        format!("{:?}|{:?}", mu.lambda1.to_array(), mu.lambda2.to_array())
    }
}

impl BellSampler for TonerBacon {
    fn round(&self, x: &Setting, y: &Setting, rng: &mut RandomSource) -> Round {
        communication_round(self, x, y, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_settings_always_anticorrelate() {
        let mut rng = RandomSource::new(1);
        for _ in 0..20_000 {
            let x = sample_uniform_sphere(&mut rng);
            let r = tb_round(x, x, &mut rng);
            assert_eq!(r.a.value() * r.b.value(), -1);
        }
    }

    #[test]
    fn message_ignores_bob_and_bob_ignores_alice() {
        let mut rng = RandomSource::new(2);
        for _ in 0..2_000 {
            let mu = TonerBacon::draw_shared(&mut rng);
            let x = Setting::continuous(sample_uniform_sphere(&mut rng));
            let y1 = Setting::continuous(sample_uniform_sphere(&mut rng));
            let y2 = Setting::continuous(sample_uniform_sphere(&mut rng));
            let m1 = TonerBacon.conversation(&x, &y1, &mu);
            assert_eq!(m1, TonerBacon.conversation(&x, &y2, &mu));

            // Any other Alice input producing the same bit must leave b unchanged.
            let x2 = Setting::continuous(sample_uniform_sphere(&mut rng));
            let m2 = TonerBacon.conversation(&x2, &y1, &mu);
            if m2 == m1 {
                assert_eq!(
                    TonerBacon.bob_output(&y1, &mu, &m1),
                    TonerBacon.bob_output(&y1, &mu, &m2)
                );
            }
        }
    }

    #[test]
    fn tie_breaks_are_deterministic() {
        let mu = TbShared {
            lambda1: UnitVector::X,
            lambda2: UnitVector::Y,
        };
        // x ⟂ λ₁ and x ⟂ λ₂: both signs are +1.
        assert_eq!(TonerBacon::message(UnitVector::Z, &mu), 1);
        assert_eq!(TonerBacon::alice_answer(UnitVector::Z, &mu), Outcome::Minus);
    }
}
