//! Navigation scores: time-efficiency metric, optimal time and success,
//! collision and timeout rates.

use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// How an episode ended. Exactly one terminal state applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    Collision,
    Timeout,
}

impl Outcome {
    pub fn success(self) -> u8 {
        u8::from(self == Outcome::Success)
    }

    pub fn collision(self) -> u8 {
        u8::from(self == Outcome::Collision)
    }

    pub fn timeout(self) -> u8 {
        u8::from(self == Outcome::Timeout)
    }
}

/// `S · T_opt / clip(T_act, 2·T_opt, 8·T_opt)`.
pub fn metric_score(success: bool, t_act: f64, t_opt: f64) -> Result<f64> {
    if !(t_opt > 0.0 && t_opt.is_finite()) {
        return Err(invalid("optimal time must be positive"));
    }
    if !success {
        return Ok(0.0);
    }
    let clipped = if t_act.is_nan() {
        8.0 * t_opt
    } else {
        t_act.clamp(2.0 * t_opt, 8.0 * t_opt)
    };
    Ok(t_opt / clipped)
}

/// Traversal time at full speed along the reference path.
pub fn optimal_time(path_length: f64, v_max: f64) -> Result<f64> {
    if !(path_length > 0.0 && path_length.is_finite()) || !(v_max > 0.0 && v_max.is_finite()) {
        return Err(invalid("path length and v_max must be positive"));
    }
    Ok(path_length / v_max)
}

/// Per-episode input to [`aggregate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeScore {
    pub outcome: Outcome,
    pub t_act: f64,
    pub t_opt: f64,
}

impl EpisodeScore {
    pub fn metric(&self) -> Result<f64> {
        metric_score(self.outcome == Outcome::Success, self.t_act, self.t_opt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub metric: f64,
    pub success_rate: f64,
    pub collision_rate: f64,
    pub timeout_rate: f64,
    pub episodes: usize,
}

/// Arithmetic means of the per-episode metric and terminal flags.
pub fn aggregate(episodes: &[EpisodeScore]) -> Result<Aggregate> {
    if episodes.is_empty() {
        return Err(invalid("cannot aggregate zero episodes"));
    }
    let metrics: Vec<f64> = episodes.iter().map(|e| e.metric()).collect::<Result<_>>()?;
    let n = episodes.len() as f64;
    let mean = |f: fn(Outcome) -> u8| episodes.iter().map(|e| f64::from(f(e.outcome))).sum::<f64>() / n;
    Ok(Aggregate {
        metric: metrics.iter().sum::<f64>() / n,
        success_rate: mean(Outcome::success),
        collision_rate: mean(Outcome::collision),
        timeout_rate: mean(Outcome::timeout),
        episodes: episodes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn saturations() {
        assert_eq!(metric_score(true, 10.0, 10.0).unwrap(), 0.5);
        assert_eq!(metric_score(true, 20.0, 10.0).unwrap(), 0.5);
        assert_eq!(metric_score(true, 80.0, 10.0).unwrap(), 0.125);
        assert_eq!(metric_score(true, 500.0, 10.0).unwrap(), 0.125);
        assert_eq!(metric_score(false, 25.0, 10.0).unwrap(), 0.0);
        assert_eq!(metric_score(true, 40.0, 10.0).unwrap(), 0.25);
        assert!(metric_score(true, 1.0, 0.0).is_err());
    }

    #[test]
    fn optimal_time_examples() {
        assert_eq!(optimal_time(10.0, 0.5).unwrap(), 20.0);
        assert_eq!(optimal_time(10.0, 1.0).unwrap(), 10.0);
        assert!(optimal_time(-1.0, 1.0).is_err());
        assert!(optimal_time(1.0, 0.0).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let fast = EpisodeScore {
            outcome: Outcome::Success,
            t_act: 5.0,
            t_opt: 10.0,
        };
        let a = aggregate(&[fast; 4]).unwrap();
        assert_eq!((a.success_rate, a.metric), (1.0, 0.5));
        let crash = EpisodeScore {
            outcome: Outcome::Collision,
            ..fast
        };
        let a = aggregate(&[fast, crash, fast, crash]).unwrap();
        assert_eq!((a.success_rate, a.collision_rate, a.metric), (0.5, 0.5, 0.25));
        assert!(aggregate(&[]).is_err());
    }

    proptest! {
        #[test]
        fn metric_monotone_in_time(t_opt in 0.1f64..100.0, a in 0.0f64..1000.0, b in 0.0f64..1000.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(metric_score(true, lo, t_opt).unwrap() >= metric_score(true, hi, t_opt).unwrap());
        }

        #[test]
        fn aggregate_invariants(
            eps in proptest::collection::vec((0u8..3, 0.0f64..200.0, 1.0f64..30.0), 1..60)
        ) {
            let scores: std::vec::Vec<EpisodeScore> = eps
                .iter()
                .map(|&(o, t_act, t_opt)| EpisodeScore {
                    outcome: [Outcome::Success, Outcome::Collision, Outcome::Timeout][o as usize],
                    t_act,
                    t_opt,
                })
                .collect();
            let a = aggregate(&scores).unwrap();
            prop_assert!(a.metric <= a.success_rate / 2.0 + 1e-15);
            prop_assert!((a.success_rate + a.collision_rate + a.timeout_rate - 1.0).abs() <= 1e-12);
            prop_assert!(a.metric >= 0.0 && a.metric <= 0.5);
        }
    }
}
