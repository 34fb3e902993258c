//! Output sequences `Y_1, ..., Y_n` built as functionals of a
//! Peng-independent driver path: independent, m-dependent, blockwise
//! m-dependent and orthogonal constructions.

mod blocks;
mod certificate;

use std::sync::Arc;

use rand::Rng;
use smallvec::SmallVec;
use thiserror::Error;

pub use blocks::{dyadic_blocks, phi, phi_table, BlockStructure, DyadicBlockReport};
pub use certificate::{
    independence_certificate, orthogonality_certificate, quasi_orthogonal_certificate,
    IndependenceCertificate, IndependenceCheck, OrthogonalityCertificate, PairCheck,
};

use crate::distribution::ScenarioSet;
use crate::expectation::{ExactOracle, ExpectationError};
use crate::functional::RandomFunctional;
use crate::scalar::Scalar;
use crate::selector::Selector;
use crate::simulate::draw_path;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("horizon must be at least one")]
    EmptyHorizon,
    #[error("window functional covers coordinates {first}..={last}, expected 1..={expected}")]
    WindowMismatch {
        first: usize,
        last: usize,
        expected: usize,
    },
    #[error("scheme unavailable: {0}")]
    SchemeUnavailable(String),
    #[error("invalid block structure: {0}")]
    InvalidBlocks(String),
    #[error("dyadic index {k} lies beyond horizon {horizon}")]
    OutOfHorizon { k: u32, horizon: usize },
    #[error("output index {index} outside 1..={horizon}")]
    OutputIndex { index: usize, horizon: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Expectation(#[from] ExpectationError),
}

/// How adjacent blocks are wired to the driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Glue {
    /// Each block reads its own driver segment; blocks are independent.
    FreshDriverPerBlock,
    /// Consecutive segments share one driver coordinate.
    SharedBoundary,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrthogonalScheme<S> {
    /// `Y_k = ξ_k` for a family of symmetric laws.
    SymmetricSigns(ScenarioSet<S>),
    /// The Haar system on `2^p` outputs: the constant, then
    /// `2^{j/2} 1{signs of ξ_1..ξ_j spell l} ξ_{j+1}`.
    HaarLike(ScenarioSet<S>),
}

impl<S> OrthogonalScheme<S> {
    pub fn name(&self) -> &'static str {
        match self {
            OrthogonalScheme::SymmetricSigns(_) => "symmetric_signs",
            OrthogonalScheme::HaarLike(_) => "haar_like",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dependence {
    Independent,
    MDependent { m: usize },
    Blockwise {
        m: usize,
        blocks: BlockStructure,
        glue: Glue,
    },
    Orthogonal { scheme: &'static str },
}

/// A finite sequence `Y_1..Y_n` of driver functionals.
#[derive(Debug, Clone)]
pub struct SequenceModel<S> {
    driver: ScenarioSet<S>,
    maps: Vec<RandomFunctional<S>>,
    driver_horizon: usize,
    dependence: Dependence,
    /// Outputs sharing a class have the same law under every functional of
    /// that output alone.
    class: Vec<usize>,
    /// Per driver step, the outputs whose last coordinate it is.
    completions: Arc<Vec<Vec<usize>>>,
    certificate: Option<OrthogonalityCertificate<S>>,
}

impl<S: Scalar> SequenceModel<S> {
    fn from_parts(
        driver: ScenarioSet<S>,
        maps: Vec<RandomFunctional<S>>,
        dependence: Dependence,
        class: Vec<usize>,
    ) -> Self {
        let driver_horizon = maps.iter().map(|f| f.window_bounds().1).max().unwrap_or(0);
        let mut completions = vec![Vec::new(); driver_horizon + 1];
        for (k, f) in maps.iter().enumerate() {
            completions[f.window_bounds().1].push(k);
        }
        Self {
            driver,
            maps,
            driver_horizon,
            dependence,
            class,
            completions: Arc::new(completions),
            certificate: None,
        }
    }

    pub fn horizon(&self) -> usize {
        self.maps.len()
    }

    pub fn driver(&self) -> &ScenarioSet<S> {
        &self.driver
    }

    pub fn driver_horizon(&self) -> usize {
        self.driver_horizon
    }

    pub fn dependence(&self) -> &Dependence {
        &self.dependence
    }

    /// Dependence range when the construction fixes one.
    pub fn m(&self) -> Option<usize> {
        match &self.dependence {
            Dependence::Independent => Some(0),
            Dependence::MDependent { m } | Dependence::Blockwise { m, .. } => Some(*m),
            Dependence::Orthogonal { scheme } => (*scheme == "symmetric_signs").then_some(0),
        }
    }

    /// `Y_k`, 1-based.
    pub fn output(&self, k: usize) -> &RandomFunctional<S> {
        &self.maps[k - 1]
    }

    pub fn outputs(&self) -> &[RandomFunctional<S>] {
        &self.maps
    }

    pub fn law_class(&self, k: usize) -> usize {
        self.class[k - 1]
    }

    pub fn certificate(&self) -> Option<&OrthogonalityCertificate<S>> {
        self.certificate.as_ref()
    }

    pub fn with_certificate(mut self, certificate: OrthogonalityCertificate<S>) -> Self {
        self.certificate = Some(certificate);
        self
    }

    pub fn oracle(&self) -> ExactOracle<S> {
        ExactOracle::new(&self.driver)
    }

    /// `Y_k -> s_k Y_k`. Law classes and certificates are dropped.
    pub fn with_scales(&self, scales: &[S]) -> Result<Self, ModelError> {
        if scales.len() != self.horizon() {
            return Err(ModelError::LengthMismatch {
                expected: self.horizon(),
                got: scales.len(),
            });
        }
        let maps = self
            .maps
            .iter()
            .zip(scales)
            .map(|(f, &s)| f.scale(s))
            .collect();
        let class = (0..self.horizon()).collect();
        Ok(Self::from_parts(self.driver.clone(), maps, self.dependence.clone(), class))
    }

    /// Rewrites a functional of output coordinates as a functional of the
    /// driver coordinates those outputs read.
    pub fn lift(&self, h: &RandomFunctional<S>) -> Result<RandomFunctional<S>, ModelError> {
        let outs = h.coords().to_vec();
        if let Some(&bad) = outs.iter().find(|&&k| k == 0 || k > self.horizon()) {
            return Err(ModelError::OutputIndex {
                index: bad,
                horizon: self.horizon(),
            });
        }
        let mut union: Vec<usize> = outs
            .iter()
            .flat_map(|&k| self.maps[k - 1].coords().iter().copied())
            .collect();
        union.sort_unstable();
        union.dedup();
        let parts: Vec<(RandomFunctional<S>, Vec<usize>)> = outs
            .iter()
            .map(|&k| {
                let f = self.maps[k - 1].clone();
                let pos = f
                    .coords()
                    .iter()
                    .map(|c| union.binary_search(c).expect("coordinate in union"))
                    .collect();
                (f, pos)
            })
            .collect();
        let h = h.clone();
        let label = format!("{}∘Y", h.label());
        Ok(RandomFunctional::sparse(union, label, move |x| {
            let mut ys: SmallVec<[S; 16]> = SmallVec::with_capacity(parts.len());
            let mut buf: SmallVec<[S; 16]> = SmallVec::new();
            for (f, pos) in &parts {
                buf.clear();
                buf.extend(pos.iter().map(|&p| x[p]));
                ys.push(f.evaluate(&buf));
            }
            h.evaluate(&ys)
        }))
    }

    /// `S_k` as a driver functional.
    pub fn partial_sum(&self, k: usize) -> Result<RandomFunctional<S>, ModelError> {
        self.lift(&RandomFunctional::partial_sum(1, k))
    }

    /// Exact `Ê` of a functional of output coordinates.
    pub fn upper_exact(&self, h: &RandomFunctional<S>) -> Result<S, ModelError> {
        Ok(self.oracle().upper(&self.lift(h)?, self.driver_horizon)?)
    }

    pub fn lower_exact(&self, h: &RandomFunctional<S>) -> Result<S, ModelError> {
        Ok(self.oracle().lower(&self.lift(h)?, self.driver_horizon)?)
    }

    /// Exact `Ê[t(Y_k)]` for every `k`, computed once per law class.
    pub fn output_upper<T>(&self, transform: T) -> Result<Vec<S>, ModelError>
    where
        T: Fn(&RandomFunctional<S>) -> RandomFunctional<S>,
    {
        let oracle = self.oracle();
        let mut cache: std::collections::HashMap<usize, S> = Default::default();
        let mut out = Vec::with_capacity(self.horizon());
        for (k, f) in self.maps.iter().enumerate() {
            let v = match cache.get(&self.class[k]) {
                Some(&v) => v,
                None => {
                    let v = oracle.upper(&transform(f), self.driver_horizon)?;
                    cache.insert(self.class[k], v);
                    v
                }
            };
            out.push(v);
        }
        Ok(out)
    }

    /// `(Ê[Y_k], ε̂[Y_k])` for every `k`.
    pub fn output_means(&self) -> Result<(Vec<S>, Vec<S>), ModelError> {
        let upper = self.output_upper(|f| f.clone())?;
        let lower = self.output_upper(|f| f.neg())?.into_iter().map(|v| -v).collect();
        Ok((upper, lower))
    }

    /// `Ê[Y_k^2]` for every `k`.
    pub fn output_second_moments(&self) -> Result<Vec<S>, ModelError> {
        self.output_upper(|f| f.mul(f))
    }

    /// Draws one driver path under `selector` and writes `Y_1..Y_n` to `out`.
    /// Greedy selectors observe `Σ w_k Y_k` over completed outputs, with
    /// `w = weights` or all ones.
    pub fn simulate<R: Rng>(
        &self,
        selector: &Selector<S>,
        rng: &mut R,
        weights: Option<&[S]>,
        driver_path: &mut Vec<S>,
        out: &mut Vec<S>,
    ) {
        out.clear();
        out.resize(self.horizon(), S::zero());
        let completions = &self.completions;
        let weight_of = |k: usize| weights.map_or(S::one(), |w| w[k]);
        draw_path(
            &self.driver,
            selector,
            self.driver_horizon,
            rng,
            driver_path,
            |step| completions[step].first().map_or(S::one(), |&k| weight_of(k)),
            |step, path| {
                let mut inc = S::zero();
                for &k in &completions[step] {
                    let y = self.maps[k].eval_on_path(path);
                    out[k] = y;
                    inc += weight_of(k) * y;
                }
                inc
            },
        );
    }
}

pub fn make_independent_sequence<S: Scalar>(
    theta: ScenarioSet<S>,
    horizon: usize,
) -> Result<SequenceModel<S>, ModelError> {
    if horizon == 0 {
        return Err(ModelError::EmptyHorizon);
    }
    let maps = (1..=horizon).map(RandomFunctional::coordinate).collect();
    Ok(SequenceModel::from_parts(
        theta,
        maps,
        Dependence::Independent,
        vec![0; horizon],
    ))
}

fn check_window<S: Scalar>(g: &RandomFunctional<S>, m: usize) -> Result<(), ModelError> {
    let (first, last) = g.window_bounds();
    if first != 1 || last != m + 1 {
        return Err(ModelError::WindowMismatch {
            first,
            last,
            expected: m + 1,
        });
    }
    Ok(())
}

/// `Y_n = g(ξ_n, ..., ξ_{n+m})`.
pub fn make_m_dependent<S: Scalar>(
    theta: ScenarioSet<S>,
    g: &RandomFunctional<S>,
    m: usize,
    horizon: usize,
) -> Result<SequenceModel<S>, ModelError> {
    if horizon == 0 {
        return Err(ModelError::EmptyHorizon);
    }
    check_window(g, m)?;
    let maps = (0..horizon).map(|n| g.shifted(n)).collect();
    Ok(SequenceModel::from_parts(
        theta,
        maps,
        Dependence::MDependent { m },
        vec![0; horizon],
    ))
}

/// The window construction restarted on every block.
pub fn make_blockwise_m_dependent<S: Scalar>(
    blocks: &BlockStructure,
    theta: ScenarioSet<S>,
    g: &RandomFunctional<S>,
    m: usize,
    glue: Glue,
) -> Result<SequenceModel<S>, ModelError> {
    check_window(g, m)?;
    let mut maps = Vec::with_capacity(blocks.horizon());
    let mut offset = 0usize;
    for (start, stop) in blocks.blocks() {
        let len = stop - start;
        for q in 0..len {
            maps.push(g.shifted(offset + q));
        }
        offset += len + m;
        if glue == Glue::SharedBoundary {
            offset -= 1;
        }
    }
    let n = maps.len();
    Ok(SequenceModel::from_parts(
        theta,
        maps,
        Dependence::Blockwise {
            m,
            blocks: blocks.clone(),
            glue,
        },
        vec![0; n],
    ))
}

fn haar_output<S: Scalar>(k: usize) -> RandomFunctional<S> {
    if k == 1 {
        return RandomFunctional::constant(S::one()).with_label("haar[0]");
    }
    let j = (k - 1).ilog2() as usize;
    let l = k - 1 - (1 << j);
    let height = S::from_f64_lossy(2f64.powf(j as f64 / 2.0));
    RandomFunctional::window(1, j + 1, format!("haar[{j},{l}]"), move |x| {
        for (b, &v) in x[..j].iter().enumerate() {
            let bit = (l >> (j - 1 - b)) & 1 == 1;
            let ok = if bit { v > S::zero() } else { v < S::zero() };
            if !ok {
                return S::zero();
            }
        }
        height * x[j]
    })
}

pub fn make_orthogonal<S: Scalar>(
    horizon: usize,
    scheme: OrthogonalScheme<S>,
) -> Result<SequenceModel<S>, ModelError> {
    if horizon < 2 {
        return Err(ModelError::SchemeUnavailable(format!(
            "orthogonal sequences need horizon >= 2, got {horizon}"
        )));
    }
    let name = scheme.name();
    match scheme {
        OrthogonalScheme::SymmetricSigns(theta) => {
            if !theta.is_symmetric() {
                return Err(ModelError::SchemeUnavailable(
                    "symmetric_signs needs sign-symmetric scenarios".into(),
                ));
            }
            let maps = (1..=horizon).map(RandomFunctional::coordinate).collect();
            Ok(SequenceModel::from_parts(
                theta,
                maps,
                Dependence::Orthogonal { scheme: name },
                vec![0; horizon],
            ))
        }
        OrthogonalScheme::HaarLike(theta) => {
            if !horizon.is_power_of_two() {
                return Err(ModelError::SchemeUnavailable(format!(
                    "haar_like needs a power-of-two horizon, got {horizon}"
                )));
            }
            if !theta.is_symmetric() {
                return Err(ModelError::SchemeUnavailable(
                    "haar_like needs sign-symmetric scenarios".into(),
                ));
            }
            let maps = (1..=horizon).map(haar_output).collect();
            let class = (1..=horizon)
                .map(|k| if k == 1 { 0 } else { 1 + (k - 1).ilog2() as usize })
                .collect();
            Ok(SequenceModel::from_parts(
                theta,
                maps,
                Dependence::Orthogonal { scheme: name },
                class,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::DiscreteDistribution;
    use crate::rng::replication_rng;

    fn signs() -> ScenarioSet<f64> {
        ScenarioSet::symmetric_signs(&[1.0]).unwrap()
    }

    fn pm() -> ScenarioSet<f64> {
        ScenarioSet::point_masses(&[1.0, -1.0]).unwrap()
    }

    fn avg() -> RandomFunctional<f64> {
        RandomFunctional::window(1, 2, "avg", |x| (x[0] + x[1]) / 2.0)
    }

    #[test]
    fn independent_sequences() {
        let m = make_independent_sequence(pm(), 3).unwrap();
        let s3 = RandomFunctional::partial_sum(1, 3);
        assert_eq!(m.upper_exact(&s3).unwrap(), 3.0);
        let (up, low) = m.output_means().unwrap();
        assert_eq!(up, vec![1.0; 3]);
        assert_eq!(low, vec![-1.0; 3]);
        let prod = RandomFunctional::coordinate(1).mul(&RandomFunctional::coordinate(2));
        assert_eq!(m.upper_exact(&prod).unwrap(), 1.0);
        assert!(make_independent_sequence(pm(), 0).is_err());
    }

    #[test]
    fn m_dependent_constructions() {
        let zero = make_m_dependent(signs(), &RandomFunctional::coordinate(1), 0, 3).unwrap();
        assert_eq!(zero.driver_horizon(), 3);
        let m1 = make_m_dependent(signs(), &avg(), 1, 4).unwrap();
        let (up, low) = m1.output_means().unwrap();
        assert_eq!(up, vec![0.0; 4]);
        assert_eq!(low, vec![0.0; 4]);
        let prod = RandomFunctional::window(1, 2, "ab", |x| x[0] * x[1]);
        let m = make_m_dependent(pm(), &prod, 1, 2).unwrap();
        let y1y2 = RandomFunctional::coordinate(1).mul(&RandomFunctional::coordinate(2));
        assert_eq!(m.upper_exact(&y1y2).unwrap(), 1.0);
        assert!(matches!(
            make_m_dependent(signs(), &avg(), 2, 4),
            Err(ModelError::WindowMismatch { .. })
        ));
    }

    #[test]
    fn shared_boundary_links_blocks() {
        let blocks = BlockStructure::new(vec![1, 4, 16, 64], 20).unwrap();
        let y34 = RandomFunctional::coordinate(3).mul(&RandomFunctional::coordinate(4));
        let shared =
            make_blockwise_m_dependent(&blocks, signs(), &avg(), 1, Glue::SharedBoundary).unwrap();
        assert_eq!(shared.upper_exact(&y34).unwrap(), 0.25);
        let fresh =
            make_blockwise_m_dependent(&blocks, signs(), &avg(), 1, Glue::FreshDriverPerBlock)
                .unwrap();
        assert_eq!(fresh.upper_exact(&y34).unwrap(), 0.0);
        assert_eq!(fresh.horizon(), 20);
        let unit = BlockStructure::unit(6).unwrap();
        assert!(make_blockwise_m_dependent(&unit, signs(), &avg(), 1, Glue::SharedBoundary).is_ok());
    }

    #[test]
    fn orthogonal_schemes() {
        let two = ScenarioSet::symmetric_signs(&[1.0, 2.0]).unwrap();
        let m = make_orthogonal(2, OrthogonalScheme::SymmetricSigns(two)).unwrap();
        let y12 = RandomFunctional::coordinate(1).mul(&RandomFunctional::coordinate(2));
        assert_eq!(m.upper_exact(&y12).unwrap(), 0.0);
        assert_eq!(m.lower_exact(&y12).unwrap(), 0.0);
        assert_eq!(m.output_second_moments().unwrap(), vec![4.0, 4.0]);
        assert!(make_orthogonal(6, OrthogonalScheme::HaarLike(signs())).is_err());
        assert!(make_orthogonal(
            4,
            OrthogonalScheme::SymmetricSigns(ScenarioSet::point_masses(&[1.0]).unwrap())
        )
        .is_err());
        let h = make_orthogonal(8, OrthogonalScheme::HaarLike(signs())).unwrap();
        for k in 1..=8 {
            for l in 1..=8 {
                let p = RandomFunctional::coordinate(k).mul(&RandomFunctional::coordinate(l));
                let v = h.upper_exact(&p).unwrap();
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "{k} {l} {v}");
            }
        }
    }

    #[test]
    fn simulation_matches_maps() {
        let m = make_m_dependent(signs(), &avg(), 1, 5).unwrap();
        let mut rng = replication_rng(3, 0, 0);
        let (mut path, mut out) = (Vec::new(), Vec::new());
        m.simulate(&Selector::Constant(0), &mut rng, None, &mut path, &mut out);
        assert_eq!(path.len(), 6);
        for k in 1..=5 {
            assert_eq!(out[k - 1], m.output(k).eval_on_path(&path));
        }
        let d = ScenarioSet::singleton(DiscreteDistribution::point_mass(2.0));
        let c = make_independent_sequence(d, 3).unwrap();
        c.simulate(&Selector::Constant(0), &mut rng, None, &mut path, &mut out);
        assert_eq!(out, vec![2.0; 3]);
    }

    #[test]
    fn scales_and_lift() {
        let m = make_independent_sequence(signs(), 3).unwrap();
        let s = m.with_scales(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.output_second_moments().unwrap(), vec![1.0, 4.0, 9.0]);
        assert!(m.with_scales(&[1.0]).is_err());
        assert!(m.lift(&RandomFunctional::coordinate(4)).is_err());
    }
}
