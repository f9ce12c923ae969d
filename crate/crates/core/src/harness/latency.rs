//! Simulated latency model for the remote planning stage.
//!
//! The edge scan and the guard decision are measured for real; the remote
//! round trip and the wait for a plan are simulated from calibrated
//! distributions. Draws are keyed by sample id (counter-based seeding), not
//! by draw order, so a parallel run consumes exactly the streams a serial
//! run would.

use crate::seeding::derive_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

/// Distribution parameters, all in milliseconds. The planning-stage round
/// trip is normal with a 1 ms floor (a clamp, which keeps the sample mean
/// within calibration tolerance, unlike rejection resampling). The
/// plan-wait residual is lognormal — strictly positive and right-skewed —
/// parameterized by its target mean and standard deviation; stacked on a
/// round-trip draw it yields the cumulative stage-3 profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyModel {
    pub l2_mean_ms: f64,
    pub l2_sd_ms: f64,
    pub l2_floor_ms: f64,
    pub l3_plan_wait_mean_ms: f64,
    pub l3_plan_wait_sd_ms: f64,
    pub seed: u64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel {
            l2_mean_ms: 288.1,
            l2_sd_ms: 144.8,
            l2_floor_ms: 1.0,
            // 288.1 + 660.5 = 948.6 cumulative mean;
            // sqrt(144.8^2 + 778.04^2) = 791.4 cumulative sd.
            l3_plan_wait_mean_ms: 660.5,
            l3_plan_wait_sd_ms: 778.04,
            seed: 1,
        }
    }
}

impl LatencyModel {
    pub fn validate(&self) -> crate::Result<()> {
        for (name, v) in [
            ("l2_mean_ms", self.l2_mean_ms),
            ("l2_sd_ms", self.l2_sd_ms),
            ("l2_floor_ms", self.l2_floor_ms),
            ("l3_plan_wait_mean_ms", self.l3_plan_wait_mean_ms),
            ("l3_plan_wait_sd_ms", self.l3_plan_wait_sd_ms),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(crate::Error::Config(format!(
                    "latency model: {name} must be a positive finite number, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn rng_for(&self, sample_id: &str, stream: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &format!("{sample_id}/{stream}")))
    }

    /// Simulated round-trip latency for the planning stage, ≥ the floor.
    pub fn l2_draw_ms(&self, sample_id: &str) -> f64 {
        let normal = Normal::new(self.l2_mean_ms, self.l2_sd_ms).expect("validated parameters");
        let draw = normal.sample(&mut self.rng_for(sample_id, "l2"));
        draw.max(self.l2_floor_ms)
    }

    /// Simulated wait between plan arrival and the guard decision point.
    /// Lognormal with the configured mean/sd, hence strictly positive.
    pub fn l3_plan_wait_ms(&self, sample_id: &str) -> f64 {
        let m = self.l3_plan_wait_mean_ms;
        let s = self.l3_plan_wait_sd_ms;
        let sigma_sq = (1.0 + (s / m).powi(2)).ln();
        let mu = m.ln() - sigma_sq / 2.0;
        let dist = LogNormal::new(mu, sigma_sq.sqrt()).expect("validated parameters");
        dist.sample(&mut self.rng_for(sample_id, "l3"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::stats::{mean, sample_sd};

    #[test]
    fn draws_are_keyed_by_sample_id_not_order() {
        let model = LatencyModel::default();
        let a1 = model.l2_draw_ms("s-0001");
        let b = model.l2_draw_ms("s-0002");
        let a2 = model.l2_draw_ms("s-0001");
        assert_eq!(a1, a2);
        assert_ne!(a1, b);
    }

    #[test]
    fn l2_calibration_over_ten_thousand_draws() {
        let model = LatencyModel::default();
        let draws: Vec<f64> = (0..10_000)
            .map(|i| model.l2_draw_ms(&format!("cal-{i:05}")))
            .collect();
        assert!(draws.iter().all(|&d| d >= model.l2_floor_ms));
        let m = mean(&draws).unwrap();
        let sd = sample_sd(&draws).unwrap();
        assert!(
            (m - 288.1).abs() / 288.1 < 0.02,
            "mean {m:.2} drifted beyond 2% of 288.1"
        );
        assert!(
            (sd - 144.8).abs() / 144.8 < 0.05,
            "sd {sd:.2} drifted beyond 5% of 144.8"
        );
    }

    #[test]
    fn cumulative_stage_three_profile_matches_targets() {
        let model = LatencyModel::default();
        let draws: Vec<f64> = (0..10_000)
            .map(|i| {
                let id = format!("cal-{i:05}");
                model.l2_draw_ms(&id) + model.l3_plan_wait_ms(&id)
            })
            .collect();
        assert!(draws.iter().all(|&d| d > 0.0));
        let m = mean(&draws).unwrap();
        let sd = sample_sd(&draws).unwrap();
        assert!(
            (m - 948.6).abs() / 948.6 < 0.03,
            "cumulative mean {m:.2} drifted beyond 3% of 948.6"
        );
        assert!(
            (sd - 791.4).abs() / 791.4 < 0.10,
            "cumulative sd {sd:.2} drifted beyond 10% of 791.4"
        );
    }

    #[test]
    fn invalid_parameters_are_config_errors() {
        let model = LatencyModel {
            l2_sd_ms: -1.0,
            ..LatencyModel::default()
        };
        assert!(model.validate().is_err());
    }
}
