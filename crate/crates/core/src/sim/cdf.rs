use super::SimError;

/// Empirical CDF over distinct sample values. Tied samples share the
/// higher cumulative probability.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    points: Vec<(f64, f64)>,
}

impl EmpiricalCdf {
    /// Unweighted CDF: the i-th smallest of n samples maps to i/n.
    pub fn new(samples: &[f64]) -> Result<Self, SimError> {
        Self::weighted(samples, &vec![1.0; samples.len()])
    }

    /// CDF where each sample carries a non-negative weight.
    pub fn weighted(samples: &[f64], weights: &[f64]) -> Result<Self, SimError> {
        if samples.is_empty() {
            return Err(SimError::EmptyInput);
        }
        if samples.len() != weights.len() {
            return Err(SimError::Numeric(format!("{} samples but {} weights", samples.len(), weights.len())));
        }
        if samples.iter().any(|v| !v.is_finite()) || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(SimError::Numeric("non-finite sample or negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(SimError::Numeric("weights sum to zero".into()));
        }
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| samples[a].total_cmp(&samples[b]));
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut acc = 0.0;
        for i in order {
            acc += weights[i];
            match points.last_mut() {
                Some(last) if last.0 == samples[i] => last.1 = acc,
                _ => points.push((samples[i], acc)),
            }
        }
        for p in &mut points {
            p.1 /= total;
        }
        if let Some(last) = points.last_mut() {
            last.1 = 1.0;
        }
        Ok(Self { points })
    }

    /// `(value, cumulative probability)` pairs, ascending.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Probability that a sample is `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        match self.points.partition_point(|p| p.0 <= x) {
            0 => 0.0,
            n => self.points[n - 1].1,
        }
    }

    /// Smallest value whose cumulative probability reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let i = self.points.partition_point(|q| q.1 < p).min(self.points.len() - 1);
        self.points[i].0
    }
}

/// Free function form of [`EmpiricalCdf::new`].
pub fn cdf_compute(samples: &[f64]) -> Result<EmpiricalCdf, SimError> {
    EmpiricalCdf::new(samples)
}
