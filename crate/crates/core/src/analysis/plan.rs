use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Slack allowed in subdifferential membership tests.
    pub membership: f64,
    /// Hull diameter below which a hull counts as a single point.
    pub singleton: f64,
    /// Fitted second-order quantities.
    pub fitted: f64,
    /// Relative disagreement allowed between FD gradients at steps η and η/2.
    pub fd_stability: f64,
    /// Largest gap tolerated between a secant slope and the sampled support range.
    pub hyperplane_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            membership: 1e-6,
            singleton: 1e-3,
            fitted: 1e-3,
            fd_stability: 1e-2,
            hyperplane_gap: 1e-3,
        }
    }
}

impl Tolerances {
    /// Applies a `key=value` override.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), AnalysisError> {
        let slot = match key {
            "membership" => &mut self.membership,
            "singleton" => &mut self.singleton,
            "fitted" => &mut self.fitted,
            "fd_stability" => &mut self.fd_stability,
            "hyperplane_gap" => &mut self.hyperplane_gap,
            other => return Err(AnalysisError::InvalidPlan(format!("unknown tolerance '{other}'"))),
        };
        if !(value.is_finite() && value > 0.0) {
            return Err(AnalysisError::InvalidPlan(format!("tolerance {key} must be positive")));
        }
        *slot = value;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingPlan {
    /// Shell radii r_m, strictly decreasing.
    pub radii: Vec<f64>,
    pub samples_per_shell: usize,
    /// Finite-difference step η_fd; shells use min(η_fd, r/10).
    pub fd_step: f64,
    pub direction_count: usize,
    pub seed: u64,
    /// Scale of sampled base points and horizontal increments.
    pub base_scale: f64,
    pub lambda_grid: Vec<f64>,
    /// Interior points checked when deciding that x·[0,h] lies in Ω.
    pub segment_checks: usize,
    /// First step and number of halvings of the directional-derivative ladder.
    pub dd_lambda0: f64,
    pub dd_levels: usize,
    /// Ball radii for the extended-differential fit.
    pub ext_radii: Vec<f64>,
    /// Second-order scale ladder τ_k = τ₀ 2^{-k}.
    pub tau0: f64,
    pub tau_levels: usize,
    /// Directions w per τ in the subdifferential-quotient inclusion test.
    pub mignot_samples: usize,
    pub tolerances: Tolerances,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            radii: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
            samples_per_shell: 256,
            fd_step: 1e-5,
            direction_count: 64,
            seed: 0x5eed,
            base_scale: 1.0,
            lambda_grid: (1..10).map(|k| k as f64 / 10.0).collect(),
            segment_checks: 32,
            dd_lambda0: 1e-3,
            dd_levels: 12,
            ext_radii: (0..8).map(|k| 0.1 * 0.5f64.powi(k)).collect(),
            tau0: 0.5,
            tau_levels: 8,
            mignot_samples: 16,
            tolerances: Tolerances::default(),
        }
    }
}

fn strictly_decreasing_positive(v: &[f64]) -> bool {
    !v.is_empty() && v.iter().all(|r| r.is_finite() && *r > 0.0) && v.windows(2).all(|w| w[1] < w[0])
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: &str| Err(AnalysisError::InvalidPlan(m.to_string()));
        if !strictly_decreasing_positive(&self.radii) {
            return bad("radii must be positive and strictly decreasing");
        }
        if !strictly_decreasing_positive(&self.ext_radii) {
            return bad("ext_radii must be positive and strictly decreasing");
        }
        if self.samples_per_shell == 0
            || self.direction_count == 0
            || self.segment_checks == 0
            || self.dd_levels < 2
            || self.tau_levels == 0
            || self.mignot_samples == 0
        {
            return bad("sample counts must be positive (dd_levels at least 2)");
        }
        for (name, v) in [
            ("fd_step", self.fd_step),
            ("base_scale", self.base_scale),
            ("dd_lambda0", self.dd_lambda0),
            ("tau0", self.tau0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return bad("lambda_grid entries must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn finest_radius(&self) -> f64 {
        *self.radii.last().expect("validated plan has radii")
    }

    /// FD step used on the shell of radius `r`.
    pub fn shell_step(&self, r: f64) -> f64 {
        self.fd_step.min(r / 10.0)
    }

    /// The plan with every length scale (radii and FD step) multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut p = self.clone();
        p.radii.iter_mut().for_each(|r| *r *= s);
        p.fd_step *= s;
        p
    }

    pub fn tau_ladder(&self) -> Vec<f64> {
        (0..self.tau_levels)
            .map(|k| self.tau0 * 0.5f64.powi(k as i32))
            .collect()
    }

    /// Independent deterministic stream for a named task.
    pub fn rng(&self, tag: &str, index: u64) -> ChaCha8Rng {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in tag.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        ChaCha8Rng::seed_from_u64(splitmix(self.seed ^ splitmix(h ^ splitmix(index))))
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn default_plan_is_valid() {
        SamplingPlan::default().validate().unwrap();
    }

    #[test]
    fn rejects_increasing_radii() {
        let p = SamplingPlan {
            radii: vec![1e-3, 1e-2],
            ..SamplingPlan::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let p = SamplingPlan::default();
        let a: f64 = p.rng("shell", 1).random();
        let b: f64 = p.rng("shell", 1).random();
        let c: f64 = p.rng("shell", 2).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn plan_file_fields_default() {
        let p: SamplingPlan = serde_json::from_str(r#"{"seed": 7}"#).unwrap();
        assert_eq!(p.seed, 7);
        assert_eq!(p.radii, SamplingPlan::default().radii);
        assert!(serde_json::from_str::<SamplingPlan>(r#"{"sead": 7}"#).is_err());
    }
}
