//! Mutual information between settings and the hidden variable.
//!
//! For communication-derived models with λ = (μ, m), m a function of (x, μ)
//! and μ independent of the settings, I(x,y:λ) = H(m|μ). Continuous cases are
//! evaluated through that identity (or through a KL divergence against the
//! uniform law), never through differential entropies of λ.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use super::quadrature::{adaptive_simpson, simpson_with_error};
use crate::error::{Error, Result};
use crate::geom::RandomSource;
use crate::models::{ExactCsModel, FiniteSettings, TonerBacon};
use crate::probcore::{binary_entropy_unchecked, InfoBits};

/// Default panel count for the Toner–Bacon quadrature.
pub const DEFAULT_PANELS: usize = 1 << 10;

/// μ samples per RNG sub-stream in [`mi_finite_settings_tb`].
const CHUNK_SAMPLES: u64 = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MIMethod {
    Exact,
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MIEstimate {
    pub value: InfoBits,
    pub method: MIMethod,
    /// Standard error (Monte Carlo) or error bound (quadrature); 0 if exact.
    pub uncertainty: f64,
}

/// I(x,y:λ) for the one-bit model with independent uniform settings:
///
/// ∫₀^π (sin θ / 2) · h(θ/π) dθ,
///
/// θ being the angle between λ₁ and λ₂ and 1 − θ/π the chance that a uniform
/// x gives sgn(x·λ₁) = sgn(x·λ₂).
pub fn mi_tb_quadrature(panels: usize) -> Result<MIEstimate> {
    if panels < 16 || panels % 4 != 0 {
        return Err(Error::Domain(format!(
            "panel count must be ≥ 16 and divisible by 4, got {panels}"
        )));
    }
    let integrand = |theta: f64| 0.5 * theta.sin() * binary_entropy_unchecked((theta / PI).clamp(0.0, 1.0));
    let (value, err) = simpson_with_error(integrand, 0.0, PI, panels);
    Ok(MIEstimate {
        value: InfoBits::new(value),
        method: MIMethod::Quadrature,
        uncertainty: err,
    })
}

/// 1 − 1/(2 ln 2): I(x:λ) for the detection model with uniform settings,
/// where λ given x has density |λ·x|/2π against the uniform 1/4π.
pub fn gg_closed_form() -> f64 {
    1.0 - 1.0 / (2.0 * LN_2)
}

/// The same quantity by adaptive quadrature of the KL integral
/// ∫₀^π |cos θ| sin θ · log₂(2|cos θ|) dθ, split at the kink θ = π/2.
pub fn mi_gg_quadrature(tol: f64) -> (f64, f64) {
    let f = |theta: f64| {
        let c = theta.cos().abs();
        if c > 0.0 {
            c * theta.sin() * (2.0 * c).log2()
        } else {
            0.0
        }
    };
    let (l, le) = adaptive_simpson(f, 0.0, PI / 2.0, tol / 2.0, 50);
    let (r, re) = adaptive_simpson(f, PI / 2.0, PI, tol / 2.0, 50);
    (l + r, le + re)
}

/// I(x,y:λ) = I(x:λ) for the detection-derived model with independent
/// uniform settings. The reported uncertainty is the distance to the
/// quadrature cross-check.
pub fn mi_gg_uniform() -> MIEstimate {
    let closed = gg_closed_form();
    let (quad, _) = mi_gg_quadrature(1e-13);
    MIEstimate {
        value: InfoBits::new(closed),
        method: MIMethod::ClosedForm,
        uncertainty: (closed - quad).abs(),
    }
}

/// I(x,y:λ) = H(m|μ) for the one-bit model on a finite settings list:
/// Monte Carlo over μ = (λ₁, λ₂), with P(m = +1 | μ) summed exactly over
/// Alice's alphabet.
pub fn mi_finite_settings_tb(
    settings: &FiniteSettings,
    mu_samples: u64,
    rng: &RandomSource,
    parallelism: usize,
) -> Result<MIEstimate> {
    if mu_samples < 1000 {
        return Err(Error::Domain(format!("need at least 1000 μ samples, got {mu_samples}")));
    }
    let p_x = settings.input().alice_marginal();
    let alice = settings.alice();
    let chunks = mu_samples.div_ceil(CHUNK_SAMPLES);

    let run_chunk = |chunk: u64| -> (f64, f64) {
        let mut stream = rng.substream(chunk);
        let start = chunk * CHUNK_SAMPLES;
        let end = (start + CHUNK_SAMPLES).min(mu_samples);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in start..end {
            let mu = TonerBacon::draw_shared(&mut stream);
            let same: f64 = alice
                .iter()
                .zip(&p_x)
                .filter(|(x, _)| TonerBacon::message(**x, &mu) == 1)
                .map(|(_, p)| p)
                .sum();
            let h = binary_entropy_unchecked(same.clamp(0.0, 1.0));
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

    let (sum, sum_sq) = parts
        .into_iter()
        .fold((0.0, 0.0), |(s, q), (ps, pq)| (s + ps, q + pq));
    let n = mu_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(MIEstimate {
        value: InfoBits::new(mean),
        method: MIMethod::MonteCarlo,
        uncertainty: (var / n).sqrt(),
    })
}

/// Exact I(A:B) on a finite model's table.
pub fn mi_exact_finite(model: &ExactCsModel, a: &[&str], b: &[&str]) -> Result<MIEstimate> {
    Ok(MIEstimate {
        value: model.mutual_information(a, b)?,
        method: MIMethod::Exact,
        uncertainty: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::UnitVector;

    #[test]
    fn panel_count_is_validated() {
        assert!(mi_tb_quadrature(8).is_err());
        assert!(mi_tb_quadrature(18).is_err());
        assert!(mi_tb_quadrature(16).is_ok());
    }

    #[test]
    fn single_alice_setting_carries_no_information() {
        let s = FiniteSettings::uniform(vec![UnitVector::Z], vec![UnitVector::X, UnitVector::Z]).unwrap();
        let est = mi_finite_settings_tb(&s, 2000, &RandomSource::new(4), 1).unwrap();
        assert_eq!(est.value.bits(), 0.0);
        assert_eq!(est.uncertainty, 0.0);
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(mi_finite_settings_tb(&FiniteSettings::chsh(), 999, &RandomSource::new(0), 1).is_err());
    }

    #[test]
    fn gg_closed_form_value() {
        assert!((gg_closed_form() - 0.278_652_479_555_518).abs() < 1e-14);
        assert!(mi_gg_uniform().uncertainty < 1e-10);
    }
}
