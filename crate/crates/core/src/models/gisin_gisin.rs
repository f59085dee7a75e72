//! Detection-efficiency model for projective measurements on a singlet.
//!
//! λ is a uniform direction. Alice's detector clicks with probability |x·λ|
//! and answers sgn(x·λ); Bob's always clicks and answers −sgn(y·λ). On the
//! double-click subensemble λ has density |λ·x|/2π and E[ab] = −x·y.

use super::{
    detection_round, BellSampler, CellProbs, DetectionModel, LocalResponse, Outcome, Round,
    Setting,
};
use crate::geom::{sample_uniform_sphere, sgn_dot, RandomSource, UnitVector};

#[derive(Debug, Clone, Copy, Default)]
pub struct GisinGisin;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgRound {
    pub a: Outcome,
    pub b: Outcome,
    pub alice_click: bool,
    pub bob_click: bool,
    pub lambda: UnitVector,
}

impl DetectionModel for GisinGisin {
    type Hidden = UnitVector;

    fn name(&self) -> &'static str {
        "gisin-gisin"
    }

    fn sample_hidden(&self, rng: &mut RandomSource) -> UnitVector {
        sample_uniform_sphere(rng)
    }

    fn alice(&self, x: &Setting, lambda: &UnitVector) -> LocalResponse {
        LocalResponse {
            outcome: Outcome::from_sign(sgn_dot(x.direction, *lambda)),
            click_probability: x.direction.dot(*lambda).abs(),
        }
    }

    fn bob(&self, y: &Setting, lambda: &UnitVector) -> LocalResponse {
        LocalResponse {
            outcome: Outcome::from_sign(-sgn_dot(y.direction, *lambda)),
            click_probability: 1.0,
        }
    }

    fn target(&self, x: &Setting, y: &Setting) -> CellProbs {
        CellProbs::from_correlator(-x.direction.dot(y.direction))
    }
}

/// One round for Bloch directions `x` and `y`, before any post-selection.
pub fn gg_round(x: UnitVector, y: UnitVector, r: &mut RandomSource) -> GgRound {
    let round = GisinGisin.play(&Setting::continuous(x), &Setting::continuous(y), r);
    GgRound {
        a: round.a,
        b: round.b,
        alice_click: round.alice_click,
        bob_click: round.bob_click,
        lambda: round.lambda,
    }
}

impl BellSampler for GisinGisin {
    fn round(&self, x: &Setting, y: &Setting, rng: &mut RandomSource) -> Round {
        detection_round(self, x, y, rng)
    }
}
