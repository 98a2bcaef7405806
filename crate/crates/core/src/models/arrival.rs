use crate::error::{config_err, Result};
use crate::tolerance::PMF_SUM;

/// Per-slot packet arrivals.
#[derive(Clone, Debug, PartialEq)]
pub enum ArrivalModel {
    Deterministic { lambda: f64 },
    /// `probs[k]` = Pr{a = k packets}.
    Pmf { probs: Vec<f64> },
}

impl ArrivalModel {
    pub fn deterministic(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(config_err(format!("arrival rate must be finite and >= 0, got {lambda}")));
        }
        Ok(ArrivalModel::Deterministic { lambda })
    }

    pub fn pmf(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(config_err("arrival pmf is empty"));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(config_err(format!("arrival pmf has invalid entry {p}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > PMF_SUM {
            return Err(config_err(format!("arrival pmf sums to {s}, expected 1")));
        }
        Ok(ArrivalModel::Pmf { probs })
    }

    pub fn mean(&self) -> f64 {
        match self {
            ArrivalModel::Deterministic { lambda } => *lambda,
            ArrivalModel::Pmf { probs } => probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum(),
        }
    }

    /// Largest arrival with positive probability.
    pub fn a_max(&self) -> f64 {
        match self {
            ArrivalModel::Deterministic { lambda } => *lambda,
            ArrivalModel::Pmf { probs } => probs.iter().rposition(|p| *p > 0.0).unwrap_or(0) as f64,
        }
    }

    /// (packets, probability) pairs with positive probability.
    pub fn support(&self) -> Vec<(f64, f64)> {
        match self {
            ArrivalModel::Deterministic { lambda } => vec![(*lambda, 1.0)],
            ArrivalModel::Pmf { probs } => probs
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(k, p)| (k as f64, *p))
                .collect(),
        }
    }

    /// Inverse-CDF draw from a uniform `u ∈ [0, 1)`.
    pub fn sample(&self, u: f64) -> f64 {
        match self {
            ArrivalModel::Deterministic { lambda } => *lambda,
            ArrivalModel::Pmf { probs } => {
                let mut acc = 0.0;
                for (k, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return k as f64;
                    }
                }
                self.a_max()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_validation() {
        assert!(ArrivalModel::pmf(vec![0.5, 0.5]).is_ok());
        assert!(ArrivalModel::pmf(vec![0.5, 0.4]).is_err());
        assert!(ArrivalModel::pmf(vec![1.5, -0.5]).is_err());
        assert!(ArrivalModel::pmf(vec![]).is_err());
        assert!(ArrivalModel::deterministic(-1.0).is_err());
    }

    #[test]
    fn moments_and_support() {
        let a = ArrivalModel::pmf(vec![0.6, 0.0, 0.4, 0.0]).unwrap();
        assert!((a.mean() - 0.8).abs() < 1e-15);
        assert_eq!(a.a_max(), 2.0);
        assert_eq!(a.support(), vec![(0.0, 0.6), (2.0, 0.4)]);
        assert_eq!(a.sample(0.59), 0.0);
        assert_eq!(a.sample(0.61), 2.0);
        assert_eq!(ArrivalModel::deterministic(1.0).unwrap().sample(0.3), 1.0);
    }
}
