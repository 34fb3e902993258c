//! Exact checks of orthogonality and of the independence identity on small
//! instances.

use crate::functional::RandomFunctional;
use crate::scalar::Scalar;

use super::{Dependence, ModelError, SequenceModel};

#[derive(Debug, Clone, PartialEq)]
pub struct PairCheck<S> {
    pub i: usize,
    pub j: usize,
    /// `Ê[Y_i Y_j]`.
    pub upper: S,
    /// `ε̂[Y_i Y_j]`.
    pub lower: S,
    /// `σ_i σ_j f(|i - j|)`.
    pub bound: S,
}

impl<S: Scalar> PairCheck<S> {
    pub fn violation(&self) -> S {
        self.upper.abs().max(self.lower.abs()) - self.bound
    }
}

/// Result of checking `|Ê[Y_k Y_l]|, |ε̂[Y_k Y_l]| <= σ_k σ_l f(|k-l|)` on a
/// set of pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalityCertificate<S> {
    /// `f(0), f(1), ...`; missing entries are zero.
    pub f: Vec<S>,
    /// `σ_k^2 = Ê[Y_k^2]` for `k = 1..=horizon`.
    pub second_moments: Vec<S>,
    pub pairs: Vec<PairCheck<S>>,
    /// Pairs left out because the cap was reached or they were too large to
    /// enumerate.
    pub skipped: usize,
    pub max_violation: S,
}

impl<S: Scalar> OrthogonalityCertificate<S> {
    pub fn passes(&self) -> bool {
        self.max_violation <= S::exact_tolerance()
    }

    /// Largest `σ_k^2`.
    pub fn max_second_moment(&self) -> S {
        self.second_moments.iter().copied().fold(S::zero(), S::max)
    }

    /// `1 + 2 Σ_{j>=1} f(j)`.
    pub fn inflation(&self) -> S {
        let two = S::one() + S::one();
        S::one() + two * self.f.iter().skip(1).copied().sum::<S>()
    }
}

/// Checks pairs in order of increasing lag, at most `pair_cap` of them.
pub fn quasi_orthogonal_certificate<S: Scalar>(
    model: &SequenceModel<S>,
    f: &[S],
    pair_cap: usize,
) -> Result<OrthogonalityCertificate<S>, ModelError> {
    let n = model.horizon();
    let second_moments = model.output_second_moments()?;
    let oracle = model.oracle();
    let mut pairs = Vec::new();
    let mut max_violation = S::zero();
    let total = n * n.saturating_sub(1) / 2;
    'lags: for lag in 1..n {
        for i in 1..=n - lag {
            if pairs.len() >= pair_cap {
                break 'lags;
            }
            let j = i + lag;
            let prod = model.output(i).mul(model.output(j));
            if !oracle.is_enumerable(&prod) {
                continue;
            }
            let upper = oracle.upper(&prod, model.driver_horizon())?;
            let lower = oracle.lower(&prod, model.driver_horizon())?;
            let fj = f.get(lag).copied().unwrap_or_else(S::zero);
            let bound = second_moments[i - 1].sqrt() * second_moments[j - 1].sqrt() * fj;
            let check = PairCheck {
                i,
                j,
                upper,
                lower,
                bound,
            };
            max_violation = max_violation.max(check.violation());
            pairs.push(check);
        }
    }
    // unenumerable pairs and those past the cap
    let skipped = total - pairs.len();
    Ok(OrthogonalityCertificate {
        f: f.to_vec(),
        second_moments,
        pairs,
        skipped,
        max_violation,
    })
}

/// The quasi-orthogonal check with `f = (1, 0, 0, ...)`.
pub fn orthogonality_certificate<S: Scalar>(
    model: &SequenceModel<S>,
    pair_cap: usize,
) -> Result<OrthogonalityCertificate<S>, ModelError> {
    quasi_orthogonal_certificate(model, &[S::one()], pair_cap)
}

/// `Ê[φ ψ]` against the iterated form `Ê[h(φ)]` with
/// `h(x) = x Ê[ψ]` for `x >= 0` and `x ε̂[ψ]` otherwise, and `Ê[φ + ψ]`
/// against `Ê[φ] + Ê[ψ]`; `φ` sums outputs `left`, `ψ` sums `right`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceCheck<S> {
    pub left: (usize, usize),
    pub right: (usize, usize),
    pub product: S,
    pub product_iterated: S,
    pub sum: S,
    pub sum_iterated: S,
}

impl<S: Scalar> IndependenceCheck<S> {
    pub fn gap(&self) -> S {
        (self.product - self.product_iterated)
            .abs()
            .max((self.sum - self.sum_iterated).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceCertificate<S> {
    pub checks: Vec<IndependenceCheck<S>>,
    pub max_gap: S,
}

impl<S: Scalar> IndependenceCertificate<S> {
    pub fn passes(&self) -> bool {
        self.max_gap <= S::exact_tolerance() * S::from_f64_lossy(1e3)
    }
}

/// Spot check of the independence identity for pairs of output windows
/// separated by more than `m` inside each block (the whole horizon for
/// unblocked models). Windows are two outputs wide where room allows.
pub fn independence_certificate<S: Scalar>(
    model: &SequenceModel<S>,
    pair_cap: usize,
) -> Result<IndependenceCertificate<S>, ModelError> {
    let n = model.horizon();
    let m = model.m().unwrap_or(0);
    let spans: Vec<(usize, usize)> = match model.dependence() {
        Dependence::Blockwise { blocks, .. } => blocks.blocks(),
        _ => vec![(1, n + 1)],
    };
    let oracle = model.oracle();
    let dh = model.driver_horizon();
    let mut checks = Vec::new();
    let mut max_gap = S::zero();
    'outer: for (start, stop) in spans {
        // blocks no longer than m + 1 carry no constraint
        if stop - start <= m + 1 {
            continue;
        }
        for r in start..stop {
            let s = r + m + 1;
            if s >= stop {
                break;
            }
            if checks.len() >= pair_cap {
                break 'outer;
            }
            let left = (r.saturating_sub(1).max(start), r);
            let right = (s, (s + 1).min(stop - 1));
            let phi = model.lift(&RandomFunctional::partial_sum(left.0, left.1))?;
            let psi = model.lift(&RandomFunctional::partial_sum(right.0, right.1))?;
            let prod = phi.mul(&psi);
            if !oracle.is_enumerable(&prod) {
                continue;
            }
            let product = oracle.upper(&prod, dh)?;
            let psi_up = oracle.upper(&psi, dh)?;
            let psi_low = oracle.lower(&psi, dh)?;
            let h = phi.map("h", move |x| if x >= S::zero() { x * psi_up } else { x * psi_low });
            let product_iterated = oracle.upper(&h, dh)?;
            let sum = oracle.upper(&phi.add(&psi), dh)?;
            let sum_iterated = oracle.upper(&phi, dh)? + psi_up;
            let check = IndependenceCheck {
                left,
                right,
                product,
                product_iterated,
                sum,
                sum_iterated,
            };
            max_gap = max_gap.max(check.gap());
            checks.push(check);
        }
    }
    Ok(IndependenceCertificate { checks, max_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::ScenarioSet;
    use crate::models::{
        make_blockwise_m_dependent, make_m_dependent, make_orthogonal, BlockStructure, Glue,
        OrthogonalScheme,
    };

    fn signs() -> ScenarioSet<f64> {
        ScenarioSet::symmetric_signs(&[1.0]).unwrap()
    }

    fn avg() -> RandomFunctional<f64> {
        RandomFunctional::window(1, 2, "avg", |x| (x[0] + x[1]) / 2.0)
    }

    #[test]
    fn orthogonal_models_certify() {
        for scheme in [
            OrthogonalScheme::SymmetricSigns(ScenarioSet::symmetric_signs(&[1.0, 0.5]).unwrap()),
            OrthogonalScheme::HaarLike(signs()),
        ] {
            let m = make_orthogonal(8, scheme).unwrap();
            let c = orthogonality_certificate(&m, 100).unwrap();
            assert!(c.passes());
            assert_eq!(c.pairs.len(), 28);
            assert!((c.max_second_moment() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn window_average_is_quasi_orthogonal() {
        let m = make_m_dependent(signs(), &avg(), 1, 6).unwrap();
        let c = quasi_orthogonal_certificate(&m, &[1.0, 1.0], 100).unwrap();
        assert!(c.passes());
        assert_eq!(c.inflation(), 3.0);
        let strict = orthogonality_certificate(&m, 100).unwrap();
        assert!(!strict.passes());
        assert!((strict.max_violation - 0.25).abs() < 1e-12);
        let capped = orthogonality_certificate(&m, 3).unwrap();
        assert_eq!(capped.pairs.len(), 3);
        assert_eq!(capped.skipped, 12);
    }

    #[test]
    fn independence_identity_holds_within_blocks() {
        let m = make_m_dependent(signs(), &avg(), 1, 8).unwrap();
        let c = independence_certificate(&m, 10).unwrap();
        assert!(!c.checks.is_empty());
        assert!(c.passes(), "{}", c.max_gap);
        let pm = ScenarioSet::point_masses(&[1.0, -1.0]).unwrap();
        let blocks = BlockStructure::new(vec![1, 4, 16, 64], 20).unwrap();
        let b = make_blockwise_m_dependent(&blocks, pm, &avg(), 1, Glue::SharedBoundary).unwrap();
        let c = independence_certificate(&b, 40).unwrap();
        assert!(c.passes(), "{}", c.max_gap);
        assert!(c.checks.iter().all(|ch| ch.left.1 < 4 || ch.left.0 >= 4));
    }
}
