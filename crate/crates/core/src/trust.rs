//! Beta-reputation assessment of acquaintances.
//!
//! An observer keeps two discounted counters per acquaintance: evidence about its
//! false-alarm rate from test messages without intrusion, and about its detection
//! rate from test messages with intrusion. Each record is weighted by
//! `λ^(now − t_k)`, so older evidence counts less.

use statrs::function::gamma::ln_gamma;

use crate::decision::PeerProfile;
use crate::error::{Error, Result};

/// Ground-truth class of a diagnosis record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordClass {
    /// No intrusion was present. `result = 1` means the peer raised a false alarm.
    M0,
    /// An intrusion was present. `result = 1` means the peer detected it.
    M1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosisRecord {
    pub timestamp: f64,
    pub class: RecordClass,
    pub alarm: bool,
}

impl DiagnosisRecord {
    pub fn new(timestamp: f64, class: RecordClass, alarm: bool) -> Self {
        Self {
            timestamp,
            class,
            alarm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaTrust {
    pub alpha_f: f64,
    pub beta_f: f64,
    pub alpha_d: f64,
    pub beta_d: f64,
    pub lambda_f: f64,
    pub lambda_d: f64,
}

impl BetaTrust {
    pub fn empty(lambda_f: f64, lambda_d: f64) -> Result<Self> {
        check_discount("lambda_f", lambda_f)?;
        check_discount("lambda_d", lambda_d)?;
        Ok(Self {
            alpha_f: 0.0,
            beta_f: 0.0,
            alpha_d: 0.0,
            beta_d: 0.0,
            lambda_f,
            lambda_d,
        })
    }

    /// Discounted weight of the no-intrusion evidence.
    pub fn weight_f(&self) -> f64 {
        self.alpha_f + self.beta_f
    }

    /// Discounted weight of the intrusion evidence.
    pub fn weight_d(&self) -> f64 {
        self.alpha_d + self.beta_d
    }

    pub fn expected_rates(&self) -> PeerProfile {
        expected_rates(self)
    }

    /// Density of the false-alarm rate, with one pseudo-count added to each counter.
    pub fn false_alarm_density(&self, x: f64) -> f64 {
        beta_density(x, self.alpha_f + 1.0, self.beta_f + 1.0).expect("smoothed shapes are positive")
    }

    /// Density of the detection rate, with one pseudo-count added to each counter.
    pub fn detection_density(&self, x: f64) -> f64 {
        beta_density(x, self.alpha_d + 1.0, self.beta_d + 1.0).expect("smoothed shapes are positive")
    }
}

fn check_discount(name: &str, lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must lie in (0, 1], got {lambda}"
        )))
    }
}

/// Builds the discounted counters from a diagnosis history evaluated at time `now`.
pub fn accumulate<'a, I>(records: I, lambda_f: f64, lambda_d: f64, now: f64) -> Result<BetaTrust>
where
    I: IntoIterator<Item = &'a DiagnosisRecord>,
{
    let mut trust = BetaTrust::empty(lambda_f, lambda_d)?;
    for rec in records {
        if rec.timestamp.is_nan() || rec.timestamp < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "record timestamp must be nonnegative, got {}",
                rec.timestamp
            )));
        }
        if rec.timestamp > now {
            return Err(Error::FutureRecord {
                timestamp: rec.timestamp,
                now,
            });
        }
        let age = now - rec.timestamp;
        let (lambda, hit, miss) = match rec.class {
            RecordClass::M0 => (lambda_f, &mut trust.alpha_f, &mut trust.beta_f),
            RecordClass::M1 => (lambda_d, &mut trust.alpha_d, &mut trust.beta_d),
        };
        let w = lambda.powf(age);
        if rec.alarm {
            *hit += w;
        } else {
            *miss += w;
        }
    }
    Ok(trust)
}

/// Posterior-mean rates. A class with no evidence falls back to 0.5.
pub fn expected_rates(trust: &BetaTrust) -> PeerProfile {
    let mean = |a: f64, b: f64| if a + b > 0.0 { a / (a + b) } else { 0.5 };
    PeerProfile::new(mean(trust.alpha_f, trust.beta_f), mean(trust.alpha_d, trust.beta_d))
}

/// Normal approximation of `Beta(alpha, beta)`: `(mean, stddev)`.
pub fn gaussian_approx(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    if alpha < 0.0 || beta < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "accumulators must be nonnegative, got ({alpha}, {beta})"
        )));
    }
    let total = alpha + beta;
    if total <= 0.0 {
        return Err(Error::InsufficientData);
    }
    let mean = alpha / total;
    let var = alpha * beta / (total * total * (total + 1.0));
    Ok((mean, var.sqrt()))
}

pub fn beta_density(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta shapes must be positive, got ({alpha}, {beta})"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Ok(0.0);
    }
    // endpoints: the density is 0, finite, or unbounded depending on the shape
    let edge = |shape: f64, norm: f64| match shape.partial_cmp(&1.0) {
        Some(std::cmp::Ordering::Greater) => 0.0,
        Some(std::cmp::Ordering::Equal) => norm,
        _ => f64::INFINITY,
    };
    if x == 0.0 {
        return Ok(edge(alpha, beta));
    }
    if x == 1.0 {
        return Ok(edge(beta, alpha));
    }
    let ln_norm = ln_gamma(alpha + beta) - ln_gamma(alpha) - ln_gamma(beta);
    Ok((ln_norm + (alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn detections(ages: &[f64], now: f64) -> Vec<DiagnosisRecord> {
        ages.iter()
            .map(|a| DiagnosisRecord::new(now - a, RecordClass::M1, true))
            .collect()
    }

    #[test]
    fn undiscounted_counts() {
        let recs = detections(&[0.0, 1.0, 2.0, 3.0], 10.0);
        let t = accumulate(&recs, 1.0, 1.0, 10.0).unwrap();
        assert_eq!((t.alpha_d, t.beta_d, t.alpha_f, t.beta_f), (4.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn discounted_counts() {
        let recs = detections(&[0.0, 1.0], 5.0);
        let t = accumulate(&recs, 0.9, 0.9, 5.0).unwrap();
        assert_relative_eq!(t.alpha_d, 1.9, epsilon = 1e-12);
        assert_eq!(t.beta_d, 0.0);
    }

    #[test]
    fn empty_history() {
        let t = accumulate(&[], 0.9, 0.9, 0.0).unwrap();
        assert_eq!(t.weight_f() + t.weight_d(), 0.0);
        assert_eq!(expected_rates(&t), PeerProfile::new(0.5, 0.5));
    }

    #[test]
    fn future_records_rejected() {
        let recs = [DiagnosisRecord::new(3.0, RecordClass::M0, false)];
        assert!(matches!(
            accumulate(&recs, 1.0, 1.0, 2.0),
            Err(Error::FutureRecord { .. })
        ));
        assert!(accumulate(&recs, 0.0, 1.0, 5.0).is_err());
    }

    #[test]
    fn rates_from_counters() {
        let t = BetaTrust {
            alpha_f: 1.0,
            beta_f: 3.0,
            alpha_d: 3.0,
            beta_d: 1.0,
            lambda_f: 1.0,
            lambda_d: 1.0,
        };
        let p = expected_rates(&t);
        assert_relative_eq!(p.p_false_alarm(), 0.25);
        assert_relative_eq!(p.p_detection(), 0.75);
        let (mean_f, _) = gaussian_approx(t.alpha_f, t.beta_f).unwrap();
        assert_eq!(mean_f, p.p_false_alarm());
    }

    #[test]
    fn gaussian_values() {
        let (m, s) = gaussian_approx(10.0, 10.0).unwrap();
        assert_eq!(m, 0.5);
        assert_relative_eq!(s, (100.0f64 / (400.0 * 21.0)).sqrt(), epsilon = 1e-12);
        let (m50, s50) = gaussian_approx(50.0, 50.0).unwrap();
        let (m5, s5) = gaussian_approx(5.0, 5.0).unwrap();
        assert_eq!(m50, m5);
        assert!(s50 < s5);
        assert!(matches!(gaussian_approx(0.0, 0.0), Err(Error::InsufficientData)));
    }

    #[test]
    fn density_values() {
        assert_relative_eq!(beta_density(0.5, 1.0, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(beta_density(0.5, 2.0, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(beta_density(0.25, 2.0, 2.0).unwrap(), 1.125, epsilon = 1e-12);
        assert!(beta_density(0.5, 0.0, 1.0).is_err());
        assert_eq!(beta_density(0.0, 2.0, 2.0).unwrap(), 0.0);
    }

    /// Composite Simpson on [0, 1]; the shapes used here have bounded densities.
    fn simpson(f: impl Fn(f64) -> f64, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn density_integrates_to_one() {
        for (a, b) in [(1.0, 1.0), (2.0, 5.0), (3.7, 1.4), (11.0, 11.0), (1.0, 40.0)] {
            let area = simpson(|x| beta_density(x, a, b).unwrap(), 20_000);
            assert!((area - 1.0).abs() < 1e-6, "shape ({a}, {b}) integrates to {area}");
        }
        let t = accumulate(&detections(&[0.0, 2.0, 5.0], 5.0), 0.9, 0.9, 5.0).unwrap();
        let area = simpson(|x| t.detection_density(x), 20_000);
        assert!((area - 1.0).abs() < 1e-6);
    }

    #[test]
    fn older_records_weigh_less() {
        let base = detections(&[1.0, 4.0], 10.0);
        let mut old = base.clone();
        old.push(DiagnosisRecord::new(0.0, RecordClass::M1, false));
        let mut recent = base.clone();
        recent.push(DiagnosisRecord::new(10.0, RecordClass::M1, false));
        let t0 = accumulate(&base, 0.9, 0.9, 10.0).unwrap();
        let t_old = accumulate(&old, 0.9, 0.9, 10.0).unwrap();
        let t_recent = accumulate(&recent, 0.9, 0.9, 10.0).unwrap();
        assert!(t_old.beta_d - t0.beta_d < t_recent.beta_d - t0.beta_d);
    }

    fn record() -> impl Strategy<Value = DiagnosisRecord> {
        (0.0f64..100.0, any::<bool>(), any::<bool>()).prop_map(|(t, m1, alarm)| {
            let class = if m1 { RecordClass::M1 } else { RecordClass::M0 };
            DiagnosisRecord::new(t, class, alarm)
        })
    }

    proptest! {
        #[test]
        fn order_does_not_matter(recs in prop::collection::vec(record(), 0..60), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = recs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = accumulate(&recs, 0.9, 0.8, 100.0).unwrap();
            let b = accumulate(&shuffled, 0.9, 0.8, 100.0).unwrap();
            for (x, y) in [(a.alpha_f, b.alpha_f), (a.beta_f, b.beta_f), (a.alpha_d, b.alpha_d), (a.beta_d, b.beta_d)] {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn weights_match_discounted_class_totals(recs in prop::collection::vec(record(), 0..60)) {
            let t = accumulate(&recs, 0.9, 0.8, 100.0).unwrap();
            let total = |class, lambda: f64| -> f64 {
                recs.iter().filter(|r| r.class == class).map(|r| lambda.powf(100.0 - r.timestamp)).sum()
            };
            prop_assert!((t.weight_f() - total(RecordClass::M0, 0.9)).abs() < 1e-9);
            prop_assert!((t.weight_d() - total(RecordClass::M1, 0.8)).abs() < 1e-9);
            prop_assert!(t.alpha_f >= 0.0 && t.beta_f >= 0.0 && t.alpha_d >= 0.0 && t.beta_d >= 0.0);
        }
    }
}
