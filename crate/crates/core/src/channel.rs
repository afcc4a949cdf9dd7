//! Bounded time-varying delay lines between master and slave.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::JointVec;
use crate::error::{Error, Result};

/// Time-varying communication delay T(t), in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayProfile {
    Constant {
        delay: f64,
    },
    Sinusoid {
        mean: f64,
        amplitude: f64,
        period: f64,
    },
    /// Piecewise-constant delay redrawn from U[lo, hi] at every multiple of
    /// `update_period`.
    PiecewiseUniform {
        lo: f64,
        hi: f64,
        update_period: f64,
        seed: u64,
    },
}

impl DelayProfile {
    pub fn constant(delay: f64) -> Self {
        DelayProfile::Constant { delay }
    }

    pub fn piecewise_uniform(lo: f64, hi: f64, update_period: f64, seed: u64) -> Self {
        DelayProfile::PiecewiseUniform {
            lo,
            hi,
            update_period,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DelayProfile::Constant { delay } => delay.is_finite() && delay >= 0.0,
            DelayProfile::Sinusoid {
                mean,
                amplitude,
                period,
            } => {
                mean.is_finite()
                    && amplitude.is_finite()
                    && amplitude >= 0.0
                    && mean - amplitude >= 0.0
                    && period > 0.0
            }
            DelayProfile::PiecewiseUniform {
                lo,
                hi,
                update_period,
                ..
            } => lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && update_period > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid delay profile {self:?}")))
        }
    }

    /// Upper bound of the delay over all time.
    pub fn max_delay(&self) -> f64 {
        match *self {
            DelayProfile::Constant { delay } => delay,
            DelayProfile::Sinusoid { mean, amplitude, .. } => mean + amplitude,
            DelayProfile::PiecewiseUniform { hi, .. } => hi,
        }
    }

    /// Index of the update window containing `t`; tolerant to grid round-off
    /// so that t = k·period lands in window k.
    pub fn window_index(t: f64, update_period: f64) -> u64 {
        (t / update_period + 1e-9).floor().max(0.0) as u64
    }

    /// Delay at time `t` (t ≥ 0). Pure: the same profile always yields the same value.
    pub fn delay_at(&self, t: f64) -> f64 {
        match *self {
            DelayProfile::Constant { delay } => delay,
            DelayProfile::Sinusoid {
                mean,
                amplitude,
                period,
            } => mean + amplitude * (TAU * t / period).sin(),
            DelayProfile::PiecewiseUniform {
                lo,
                hi,
                update_period,
                seed,
            } => {
                if lo == hi {
                    return lo;
                }
                let window = Self::window_index(t, update_period);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(window);
                rng.gen_range(lo..=hi)
            }
        }
    }
}

/// Timestamped history answering "value at t − T" queries.
#[derive(Debug, Clone)]
pub struct DelayLine {
    samples: VecDeque<(f64, JointVec)>,
    horizon: f64,
}

impl DelayLine {
    pub fn new(horizon: f64) -> Self {
        Self {
            samples: VecDeque::new(),
            horizon,
        }
    }

    /// A line that retains enough history for `max_delay`.
    pub fn for_delay(max_delay: f64) -> Self {
        Self::new(max_delay + 1.0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn earliest(&self) -> Option<f64> {
        self.samples.front().map(|(t, _)| *t)
    }

    pub fn latest(&self) -> Option<f64> {
        self.samples.back().map(|(t, _)| *t)
    }

    pub fn push(&mut self, t: f64, value: JointVec) -> Result<()> {
        if let Some(last) = self.latest() {
            if !(t > last) {
                return Err(Error::contract(format!(
                    "delay line timestamps must increase: {t} after {last}"
                )));
            }
        }
        self.samples.push_back((t, value));
        let cutoff = t - self.horizon;
        while self.samples.front().is_some_and(|(ts, _)| *ts < cutoff) {
            self.samples.pop_front();
        }
        Ok(())
    }

    /// Linearly interpolated value at `t − delay`. Queries before the first
    /// sample return the first sample; queries past the newest sample return
    /// the newest (no extrapolation into the future).
    pub fn sample_delayed(&self, t: f64, delay: f64) -> Result<JointVec> {
        if delay < 0.0 {
            return Err(Error::contract("delay must be >= 0"));
        }
        let (first, last) = match (self.samples.front(), self.samples.back()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::contract("sample_delayed on an empty delay line")),
        };
        let at = t - delay;
        if at <= first.0 {
            return Ok(first.1.clone());
        }
        if at >= last.0 {
            return Ok(last.1.clone());
        }
        let idx = self.samples.partition_point(|(ts, _)| *ts <= at);
        let (t0, v0) = &self.samples[idx - 1];
        let (t1, v1) = &self.samples[idx];
        let w = (at - t0) / (t1 - t0);
        Ok(v0 * (1.0 - w) + v1 * w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::joint_vec;
    use proptest::prelude::*;

    fn scalar(x: f64) -> JointVec {
        joint_vec(&[x])
    }

    #[test]
    fn constant_profile() {
        let p = DelayProfile::constant(0.5);
        assert_eq!(p.delay_at(0.0), 0.5);
        assert_eq!(p.delay_at(123.4), 0.5);
    }

    #[test]
    fn piecewise_uniform_bounds_and_windows() {
        let p = DelayProfile::piecewise_uniform(0.3, 0.9, 0.096, 42);
        let dt = 1e-3;
        let mut prev = p.delay_at(0.0);
        for k in 1..=60_000 {
            let t = k as f64 * dt;
            let d = p.delay_at(t);
            assert!((0.3..=0.9).contains(&d));
            if d != prev {
                let windows = t / 0.096;
                assert!((windows - windows.round()).abs() < 1e-6, "change at t = {t}");
            }
            prev = d;
        }
        let q = DelayProfile::piecewise_uniform(0.3, 0.9, 0.096, 42);
        for k in 0..5000 {
            let t = k as f64 * 0.0123;
            assert_eq!(p.delay_at(t).to_bits(), q.delay_at(t).to_bits());
        }
    }

    #[test]
    fn a_million_queries_stay_in_bounds() {
        let p = DelayProfile::piecewise_uniform(0.3, 0.9, 0.1, 7);
        for k in 0..1_000_000u32 {
            let d = p.delay_at(f64::from(k) * 1.7e-3);
            assert!((0.3..=0.9).contains(&d));
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = DelayProfile::piecewise_uniform(0.3, 0.9, 0.1, 1);
        let b = DelayProfile::piecewise_uniform(0.3, 0.9, 0.1, 2);
        let same = (0..100).filter(|k| a.delay_at(*k as f64 * 0.1) == b.delay_at(*k as f64 * 0.1));
        assert!(same.count() < 5);
    }

    #[test]
    fn push_and_evict() {
        let mut line = DelayLine::new(100.0);
        line.push(0.0, scalar(0.0)).unwrap();
        assert_eq!(line.len(), 1);
        for k in 1..10 {
            line.push(k as f64, scalar(k as f64)).unwrap();
        }
        assert_eq!(line.len(), 10);

        let mut line = DelayLine::new(1.0);
        for k in 0..=3000 {
            line.push(k as f64 * 1e-3, scalar(0.0)).unwrap();
        }
        assert!(line.earliest().unwrap() >= 3.0 - 1.0 - 1e-12);
        assert!(line.push(2.0, scalar(0.0)).is_err());
        assert!(line.push(3.0, scalar(0.0)).is_err());
    }

    #[test]
    fn sample_linear_signal_and_clamp() {
        let mut line = DelayLine::new(10.0);
        for k in 0..=2000 {
            let t = k as f64 * 1e-3;
            line.push(t, scalar(t)).unwrap();
        }
        let v = line.sample_delayed(2.0, 0.5).unwrap();
        assert!((v[0] - 1.5).abs() < 1e-12);
        let v = line.sample_delayed(0.2, 0.5).unwrap();
        assert_eq!(v[0], 0.0);
        assert!(DelayLine::new(1.0).sample_delayed(1.0, 0.1).is_err());
        assert!(line.sample_delayed(1.0, -0.1).is_err());
    }

    #[test]
    fn sample_sinusoid_error_bound() {
        let mut line = DelayLine::new(10.0);
        for k in 0..=5000 {
            let t = k as f64 * 1e-3;
            line.push(t, scalar(t.sin())).unwrap();
        }
        for k in 300..5000 {
            let t = k as f64 * 1e-3 + 0.000_37;
            let v = line.sample_delayed(t.min(5.0), 0.3).unwrap();
            assert!((v[0] - (t.min(5.0) - 0.3).sin()).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn delay_always_within_bounds(seed in any::<u64>(), t in 0.0f64..1e4, lo in 0.0f64..1.0, width in 0.0f64..1.0) {
            let p = DelayProfile::piecewise_uniform(lo, lo + width, 0.1, seed);
            let d = p.delay_at(t);
            prop_assert!(d >= lo && d <= lo + width);
        }

        #[test]
        fn never_reads_the_future(t in 0.0f64..3.0, delay in 0.0f64..1.0) {
            // Sample value equals its own timestamp, so the result is the read time.
            let mut line = DelayLine::new(10.0);
            for k in 0..=3000 {
                let ts = k as f64 * 1e-3;
                if ts > t { break; }
                line.push(ts, scalar(ts)).unwrap();
            }
            let v = line.sample_delayed(t, delay).unwrap();
            prop_assert!(v[0] <= t + 1e-12);
        }
    }
}
