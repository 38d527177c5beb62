//! Dual-slope log-distance propagation with log-normal shadowing.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, RadioError};
use crate::types::Position;

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// How reception decisions treat shadowing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TxRangePolicy {
    Deterministic,
    #[default]
    Shadowed,
}

/// How the shadowing term enters the carrier-sense range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ShadowingMode {
    /// Mean of the log-normal range factor.
    Expectation,
    /// X_sigma added as a constant dB margin.
    #[default]
    FixedOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BranchSelection {
    #[default]
    Auto,
    ForceNear,
    ForceFar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Near,
    Far,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    /// m
    pub d0: f64,
    /// dB
    pub pr_d0: f64,
    /// dB
    pub c_th: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// m
    pub h_t: f64,
    /// m
    pub h_r: f64,
    /// m
    pub wavelength: f64,
    /// dB
    pub x_sigma1: f64,
    /// dB
    pub x_sigma2: f64,
    /// dB
    pub rx_sensitivity: f64,
    pub tx_range_policy: TxRangePolicy,
    pub shadowing_mode: ShadowingMode,
    /// Use gamma1 in the far-branch denominator of the range expression.
    pub literal_far_exponent: bool,
    pub branch: BranchSelection,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            d0: 10.0,
            pr_d0: -60.0,
            c_th: -85.0,
            gamma1: 1.9,
            gamma2: 3.8,
            h_t: 1.5,
            h_r: 1.5,
            wavelength: SPEED_OF_LIGHT / 5.9e9,
            x_sigma1: 5.6,
            x_sigma2: 5.6,
            rx_sensitivity: -85.0,
            tx_range_policy: TxRangePolicy::Shadowed,
            shadowing_mode: ShadowingMode::FixedOffset,
            literal_far_exponent: false,
            branch: BranchSelection::Auto,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("radio.d0", self.d0),
            ("radio.gamma1", self.gamma1),
            ("radio.gamma2", self.gamma2),
            ("radio.h_t", self.h_t),
            ("radio.h_r", self.h_r),
            ("radio.wavelength", self.wavelength),
        ];
        for (key, v) in positive {
            if !(v > 0.0) {
                return Err(ConfigError::invariant(&[key], format!("must be > 0, got {v}")));
            }
        }
        for (key, v) in [
            ("radio.x_sigma1", self.x_sigma1),
            ("radio.x_sigma2", self.x_sigma2),
        ] {
            if !(v >= 0.0) {
                return Err(ConfigError::invariant(&[key], format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Deterministic received power at distance `d`, in dB.
    pub fn mean_power_at(&self, d: f64) -> f64 {
        let d = d.max(f64::MIN_POSITIVE);
        let d_c = critical_distance(self);
        if d <= d_c {
            self.pr_d0 - 10.0 * self.gamma1 * (d / self.d0).log10()
        } else {
            self.pr_d0 - 10.0 * self.gamma1 * (d_c / self.d0).log10() - 10.0 * self.gamma2 * (d / d_c).log10()
        }
    }

    /// Shadowing standard deviation for the regime containing `d`.
    pub fn sigma_at(&self, d: f64) -> f64 {
        if d <= critical_distance(self) {
            self.x_sigma1
        } else {
            self.x_sigma2
        }
    }

    /// Whether a transmitter at distance `d` keeps the medium busy.
    pub fn senses(&self, d: f64) -> bool {
        self.mean_power_at(d) >= self.c_th
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficParams {
    /// vehicles per metre of road
    pub beta: f64,
}

impl Default for TrafficParams {
    fn default() -> Self {
        TrafficParams { beta: 0.025 }
    }
}

pub fn critical_distance(p: &RadioParams) -> f64 {
    4.0 * p.h_t * p.h_r / p.wavelength
}

/// Carrier-sense range with the branch that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsRange {
    pub meters: f64,
    pub branch: Branch,
}

fn shadow_factor(p: &RadioParams, sigma: f64, gamma: f64) -> (f64, f64) {
    // (dB addend, multiplicative factor)
    match p.shadowing_mode {
        ShadowingMode::FixedOffset => (sigma, 1.0),
        ShadowingMode::Expectation => {
            let s = sigma * std::f64::consts::LN_10 / (10.0 * gamma);
            (0.0, (s * s / 2.0).exp())
        }
    }
}

fn near_branch(p: &RadioParams) -> f64 {
    let (db, factor) = shadow_factor(p, p.x_sigma1, p.gamma1);
    factor * p.d0 * 10f64.powf((p.pr_d0 - p.c_th + db) / (10.0 * p.gamma1))
}

fn far_branch(p: &RadioParams) -> f64 {
    let d_c = critical_distance(p);
    let gamma = if p.literal_far_exponent {
        p.gamma1
    } else {
        p.gamma2
    };
    let (db, factor) = shadow_factor(p, p.x_sigma2, gamma);
    let excess = p.pr_d0 - 10.0 * p.gamma1 * (d_c / p.d0).log10() - p.c_th + db;
    factor * d_c * 10f64.powf(excess / (10.0 * gamma))
}

pub fn carrier_sense_range_detail(p: &RadioParams) -> Result<CsRange, RadioError> {
    let near = near_branch(p);
    let far = far_branch(p);
    let d_c = critical_distance(p);
    match p.branch {
        BranchSelection::ForceNear => Ok(CsRange {
            meters: near,
            branch: Branch::Near,
        }),
        BranchSelection::ForceFar => Ok(CsRange {
            meters: far,
            branch: Branch::Far,
        }),
        BranchSelection::Auto => {
            if near >= p.d0 && near <= d_c {
                Ok(CsRange {
                    meters: near,
                    branch: Branch::Near,
                })
            } else if far > d_c {
                Ok(CsRange {
                    meters: far,
                    branch: Branch::Far,
                })
            } else {
                Err(RadioError::BranchInconsistent {
                    near,
                    far,
                    d0: p.d0,
                    d_c,
                })
            }
        }
    }
}

pub fn carrier_sense_range(p: &RadioParams) -> Result<f64, RadioError> {
    carrier_sense_range_detail(p).map(|r| r.meters)
}

/// Expected number of vehicles within carrier-sense range on a straight road.
pub fn vehicles_in_cs_range(t: &TrafficParams, l_cs: f64) -> f64 {
    2.0 * t.beta * l_cs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reception {
    Received,
    BelowSensitivity,
}

pub fn receives<R: Rng>(tx: &Position, rx: &Position, p: &RadioParams, rng: &mut R) -> Reception {
    let d = tx.distance(rx);
    let mut power = p.mean_power_at(d);
    if p.tx_range_policy == TxRangePolicy::Shadowed {
        let sigma = p.sigma_at(d);
        if sigma > 0.0 {
            power += Normal::new(0.0, sigma).expect("sigma validated").sample(rng);
        }
    }
    if power >= p.rx_sensitivity {
        Reception::Received
    } else {
        Reception::BelowSensitivity
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn deterministic() -> RadioParams {
        RadioParams {
            x_sigma1: 0.0,
            x_sigma2: 0.0,
            tx_range_policy: TxRangePolicy::Deterministic,
            ..RadioParams::default()
        }
    }

    #[test]
    fn critical_distance_examples() {
        let p = RadioParams {
            wavelength: 0.05085,
            ..RadioParams::default()
        };
        assert_relative_eq!(critical_distance(&p), 9.0 / 0.05085, epsilon = 1e-9);
        assert!((critical_distance(&p) - 177.0).abs() < 0.1);
        let unit = RadioParams {
            h_t: 1.0,
            h_r: 1.0,
            wavelength: 4.0,
            ..RadioParams::default()
        };
        assert_relative_eq!(critical_distance(&unit), 1.0);
        let doubled = RadioParams { h_t: 3.0, ..p };
        assert_relative_eq!(critical_distance(&doubled), 2.0 * critical_distance(&p));
        let scaled = RadioParams {
            h_t: 3.0,
            h_r: 3.0,
            ..p
        };
        assert_relative_eq!(critical_distance(&scaled), 4.0 * critical_distance(&p));
    }

    #[test]
    fn zero_excess_power_gives_d0() {
        for gamma in [1.5, 2.0, 3.3] {
            let p = RadioParams {
                pr_d0: -85.0,
                gamma1: gamma,
                ..deterministic()
            };
            let r = carrier_sense_range_detail(&p).unwrap();
            assert_relative_eq!(r.meters, p.d0, epsilon = 1e-9);
            assert_eq!(r.branch, Branch::Near);
        }
    }

    #[test]
    fn near_branch_with_table_values() {
        let p = RadioParams {
            branch: BranchSelection::ForceNear,
            ..RadioParams::default()
        };
        let l = carrier_sense_range(&p).unwrap();
        assert_relative_eq!(l, 10.0 * 10f64.powf(30.6 / 19.0), epsilon = 1e-9);
        // 10 * 10^(30.6 / 19) = 407.87 m, which rounds to the quoted 408 m.
        assert!((l - 408.3).abs() < 0.5, "{l}");
    }

    #[test]
    fn near_branch_hand_value() {
        let p = RadioParams {
            pr_d0: -66.0,
            h_t: 10.0,
            h_r: 10.0,
            ..deterministic()
        };
        let r = carrier_sense_range_detail(&p).unwrap();
        assert_eq!(r.branch, Branch::Near);
        assert_relative_eq!(r.meters, 100.0, epsilon = 1e-9);
    }

    #[test]
    fn auto_selects_far_branch_for_table_values() {
        let p = RadioParams::default();
        let r = carrier_sense_range_detail(&p).unwrap();
        assert_eq!(r.branch, Branch::Far);
        let d_c = critical_distance(&p);
        let expected = d_c * 10f64.powf((25.0 + 5.6 - 19.0 * (d_c / 10.0).log10()) / 38.0);
        assert_relative_eq!(r.meters, expected, epsilon = 1e-9);
        assert!(r.meters > d_c);
    }

    #[test]
    fn literal_far_branch_equals_near_expression() {
        // With gamma1 in both places the d_c terms cancel exactly.
        let p = RadioParams {
            literal_far_exponent: true,
            ..RadioParams::default()
        };
        let r = carrier_sense_range_detail(&p).unwrap();
        assert_eq!(r.branch, Branch::Far);
        assert_relative_eq!(r.meters, 10.0 * 10f64.powf(30.6 / 19.0), epsilon = 1e-9);
    }

    #[test]
    fn expectation_mode_applies_lognormal_mean() {
        let p = RadioParams {
            shadowing_mode: ShadowingMode::Expectation,
            branch: BranchSelection::ForceNear,
            ..RadioParams::default()
        };
        let s = 5.6 * std::f64::consts::LN_10 / 19.0;
        let expected = 10.0 * 10f64.powf(25.0 / 19.0) * (s * s / 2.0).exp();
        assert_relative_eq!(carrier_sense_range(&p).unwrap(), expected, epsilon = 1e-9);
    }

    #[test]
    fn inconsistent_branches_reported() {
        let p = RadioParams {
            pr_d0: -90.0,
            ..deterministic()
        };
        assert!(matches!(
            carrier_sense_range(&p),
            Err(RadioError::BranchInconsistent { .. })
        ));
    }

    #[test]
    fn density_coupling() {
        let t = TrafficParams { beta: 0.0 };
        assert_eq!(vehicles_in_cs_range(&t, 408.3), 0.0);
        let t = TrafficParams { beta: 0.025 };
        assert!((vehicles_in_cs_range(&t, 408.3) - 20.4).abs() < 0.02);
        let t = TrafficParams { beta: 0.01 };
        assert_relative_eq!(vehicles_in_cs_range(&t, 100.0), 2.0);
    }

    #[test]
    fn range_monotone_in_margin_and_exponent() {
        let mut prev = 0.0;
        for margin in 0..40 {
            let p = RadioParams {
                pr_d0: -85.0 + margin as f64,
                ..deterministic()
            };
            let l = carrier_sense_range(&p).unwrap();
            assert!(l >= prev);
            prev = l;
        }
        let mut prev = f64::INFINITY;
        for g in 0..20 {
            let gamma = 1.5 + 0.1 * g as f64;
            let p = RadioParams {
                gamma1: gamma,
                gamma2: 2.0 * gamma,
                ..deterministic()
            };
            let l = carrier_sense_range(&p).unwrap();
            assert!(l <= prev);
            prev = l;
        }
    }

    #[test]
    fn deterministic_reception_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let origin = Position::new(0.0, 0.0);
        let p = RadioParams {
            rx_sensitivity: -60.0,
            ..deterministic()
        };
        assert_eq!(
            receives(&origin, &Position::new(10.0, 0.0), &p, &mut rng),
            Reception::Received
        );

        let p = RadioParams {
            h_t: 10.0,
            h_r: 10.0,
            ..deterministic()
        };
        // Distance at which the deterministic power is exactly 1 dB below sensitivity.
        let d = 10.0 * 10f64.powf(26.0 / 19.0);
        assert!(d < critical_distance(&p));
        assert_eq!(
            receives(&origin, &Position::new(d, 0.0), &p, &mut rng),
            Reception::BelowSensitivity
        );

        let mut last = true;
        for step in 1..400 {
            let got =
                receives(&origin, &Position::new(step as f64, 0.0), &p, &mut rng) == Reception::Received;
            assert!(last || !got, "reception not monotone at {step} m");
            last = got;
        }
    }

    #[test]
    fn shadowed_reception_matches_gaussian_tail() {
        use statrs::distribution::{ContinuousCDF, Normal as SNormal};
        let p = RadioParams::default();
        let d = 150.0;
        let margin = p.mean_power_at(d) - p.rx_sensitivity;
        let expected = SNormal::new(0.0, 1.0).unwrap().cdf(margin / p.x_sigma1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let origin = Position::new(0.0, 0.0);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| receives(&origin, &Position::new(d, 0.0), &p, &mut rng) == Reception::Received)
            .count();
        let observed = hits as f64 / n as f64;
        assert!((observed - expected).abs() < 0.02, "{observed} vs {expected}");
    }
}
