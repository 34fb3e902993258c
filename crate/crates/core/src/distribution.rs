//! Finite-support base laws and the scenario families built from them.

use thiserror::Error;

use crate::scalar::{compensated_sum, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("distribution has no atoms")]
    Empty,
    #[error("atom {index} is not finite")]
    NonFinite { index: usize },
    #[error("atom {index} has probability {probability} outside [0, 1]")]
    BadProbability { index: usize, probability: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("scenario set must contain at least one scenario")]
    EmptyScenarioSet,
}

/// A probability law with finitely many atoms, kept in canonical form:
/// strictly increasing values, strictly positive probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<S> {
    atoms: Vec<(S, S)>,
    cdf: Vec<f64>,
}

impl<S: Scalar> DiscreteDistribution<S> {
    /// Builds a distribution from `(value, probability)` pairs in any order.
    /// Repeated values are merged and zero-probability atoms dropped.
    pub fn new<I>(atoms: I) -> Result<Self, DistributionError>
    where
        I: IntoIterator<Item = (S, S)>,
    {
        let mut raw: Vec<(S, S)> = atoms.into_iter().collect();
        if raw.is_empty() {
            return Err(DistributionError::Empty);
        }
        for (index, &(v, p)) in raw.iter().enumerate() {
            if !v.is_finite() || !p.is_finite() {
                return Err(DistributionError::NonFinite { index });
            }
            if p < S::zero() || p > S::one() {
                return Err(DistributionError::BadProbability {
                    index,
                    probability: p.to_f64_lossy(),
                });
            }
        }
        let sum = compensated_sum(raw.iter().map(|a| a.1));
        if (sum - S::one()).abs() > S::exact_tolerance() {
            return Err(DistributionError::NotNormalized {
                sum: sum.to_f64_lossy(),
            });
        }
        raw.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
        let mut merged: Vec<(S, S)> = Vec::with_capacity(raw.len());
        for (v, p) in raw {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        merged.retain(|a| a.1 > S::zero());
        let mut acc = 0.0;
        let cdf = merged
            .iter()
            .map(|a| {
                acc += a.1.to_f64_lossy();
                acc
            })
            .collect();
        Ok(Self { atoms: merged, cdf })
    }

    /// Dirac mass at `value`.
    pub fn point_mass(value: S) -> Self {
        Self::new([(value, S::one())]).expect("point mass is valid")
    }

    /// Equal weights on the given values.
    pub fn uniform(values: &[S]) -> Result<Self, DistributionError> {
        if values.is_empty() {
            return Err(DistributionError::Empty);
        }
        let w = S::one() / S::from_usize_lossy(values.len());
        Self::new(values.iter().map(|&v| (v, w)))
    }

    /// Uniform law on `{-scale, +scale}`.
    pub fn symmetric_sign(scale: S) -> Self {
        Self::uniform(&[-scale, scale]).expect("two-point law is valid")
    }

    pub fn atoms(&self) -> &[(S, S)] {
        &self.atoms
    }

    pub fn support(&self) -> impl Iterator<Item = S> + '_ {
        self.atoms.iter().map(|a| a.0)
    }

    pub fn probability_of(&self, value: S) -> S {
        self.atoms
            .iter()
            .find(|a| a.0 == value)
            .map_or(S::zero(), |a| a.1)
    }

    /// Linear expectation of `h(X)`.
    pub fn expect<F: Fn(S) -> S>(&self, h: F) -> S {
        self.atoms.iter().map(|&(v, p)| p * h(v)).sum()
    }

    pub fn mean(&self) -> S {
        self.expect(|x| x)
    }

    pub fn second_moment(&self) -> S {
        self.expect(|x| x * x)
    }

    pub fn max_abs(&self) -> S {
        self.atoms
            .iter()
            .fold(S::zero(), |m, a| m.max(a.0.abs()))
    }

    /// True when the law is invariant under `x -> -x`.
    pub fn is_symmetric(&self) -> bool {
        let n = self.atoms.len();
        (0..n).all(|i| {
            let (v, p) = self.atoms[i];
            let (w, q) = self.atoms[n - 1 - i];
            v == -w && (p - q).abs() <= S::exact_tolerance()
        })
    }

    /// Law of `factor * X`.
    pub fn scaled(&self, factor: S) -> Self {
        Self::new(self.atoms.iter().map(|&(v, p)| (factor * v, p)))
            .expect("scaling preserves validity")
    }

    /// Inverse-CDF draw for `u` in `[0, 1)`.
    pub fn sample_with(&self, u: f64) -> S {
        let idx = self.cdf.partition_point(|&c| c <= u);
        self.atoms[idx.min(self.atoms.len() - 1)].0
    }
}

/// The finite family over which upper expectations are taken.
/// Order is significant: ties are broken toward the lowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet<S> {
    scenarios: Vec<DiscreteDistribution<S>>,
}

impl<S: Scalar> ScenarioSet<S> {
    pub fn new(scenarios: Vec<DiscreteDistribution<S>>) -> Result<Self, DistributionError> {
        if scenarios.is_empty() {
            return Err(DistributionError::EmptyScenarioSet);
        }
        Ok(Self { scenarios })
    }

    pub fn singleton(law: DiscreteDistribution<S>) -> Self {
        Self {
            scenarios: vec![law],
        }
    }

    /// Point masses at each of `values`, one scenario per value.
    pub fn point_masses(values: &[S]) -> Result<Self, DistributionError> {
        Self::new(values.iter().map(|&v| DiscreteDistribution::point_mass(v)).collect())
    }

    /// Symmetric sign laws `Uniform{-s, +s}`, one scenario per scale.
    pub fn symmetric_signs(scales: &[S]) -> Result<Self, DistributionError> {
        Self::new(
            scales
                .iter()
                .map(|&s| DiscreteDistribution::symmetric_sign(s))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn get(&self, index: usize) -> &DiscreteDistribution<S> {
        &self.scenarios[index]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DiscreteDistribution<S>> {
        self.scenarios.iter()
    }

    /// Sorted union of all scenario supports.
    pub fn union_support(&self) -> Vec<S> {
        let mut all: Vec<S> = self.scenarios.iter().flat_map(|d| d.support()).collect();
        all.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        all.dedup();
        all
    }

    pub fn max_abs(&self) -> S {
        self.scenarios
            .iter()
            .fold(S::zero(), |m, d| m.max(d.max_abs()))
    }

    pub fn is_symmetric(&self) -> bool {
        self.scenarios.iter().all(|d| d.is_symmetric())
    }

    pub fn scaled(&self, factor: S) -> Self {
        Self {
            scenarios: self.scenarios.iter().map(|d| d.scaled(factor)).collect(),
        }
    }
}
