//! Seeded random instances for the exact-oracle suites.
//!
//! Atom values are multiples of 1/8 and probabilities multiples of 1/8, so
//! expectations of coordinate sums are exact in binary floating point.

use rand::seq::index::sample;
use rand::Rng;
use sublaw_core::rng::replication_rng;
use sublaw_core::{DiscreteDistribution, RandomFunctional, ScenarioSet};

/// At most `max_atoms` atoms on the grid `{-2, -15/8, ..., 2}` with
/// dyadic weights.
pub fn random_law<R: Rng>(rng: &mut R, max_atoms: usize) -> DiscreteDistribution<f64> {
    let k = rng.gen_range(1..=max_atoms.min(8));
    let values: Vec<f64> = sample(rng, 33, k).into_iter().map(|i| i as f64 / 8.0 - 2.0).collect();
    let mut cuts: Vec<usize> = sample(rng, 7, k - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    cuts.push(8);
    let mut prev = 0;
    let atoms = values.into_iter().zip(cuts).map(|(v, c)| {
        let p = (c - prev) as f64 / 8.0;
        prev = c;
        (v, p)
    });
    DiscreteDistribution::new(atoms).expect("dyadic weights sum to one")
}

pub fn random_scenarios<R: Rng>(rng: &mut R, max_scenarios: usize, max_atoms: usize) -> ScenarioSet<f64> {
    let s = rng.gen_range(1..=max_scenarios);
    ScenarioSet::new((0..s).map(|_| random_law(rng, max_atoms)).collect()).expect("nonempty family")
}

/// A smooth-plus-kink functional of coordinates `1..=horizon`.
pub fn random_functional<R: Rng>(rng: &mut R, horizon: usize, label: &str) -> RandomFunctional<f64> {
    let a: Vec<f64> = (0..horizon).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let d: Vec<f64> = (0..horizon).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let b: f64 = rng.gen_range(-1.0..1.0);
    let c: f64 = rng.gen_range(-1.0..1.0);
    let e: f64 = rng.gen_range(-1.0..1.0);
    RandomFunctional::window(1, horizon, label, move |x: &[f64]| {
        let lin: f64 = x.iter().zip(&a).map(|(x, a)| x * a).sum();
        let prod: f64 = x.iter().product();
        let phase: f64 = x.iter().zip(&d).map(|(x, d)| x * d).sum();
        let top = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lin + b * prod + c * phase.sin() + e * top
    })
}

/// One instance of the axiom suite.
#[derive(Debug, Clone)]
pub struct AxiomInstance {
    pub driver: ScenarioSet<f64>,
    pub horizon: usize,
    pub f: RandomFunctional<f64>,
    pub g: RandomFunctional<f64>,
    pub constant: f64,
    pub lambda: f64,
}

/// `count` instances with at most 3 scenarios, 4 coordinates and 4 atoms.
pub fn axiom_instances(seed: u64, count: usize) -> Vec<AxiomInstance> {
    (0..count)
        .map(|i| {
            let mut rng = replication_rng(seed, 0xA710, i as u64);
            let driver = random_scenarios(&mut rng, 3, 4);
            let horizon = rng.gen_range(1..=4);
            let f = random_functional(&mut rng, horizon, "f");
            let g = random_functional(&mut rng, horizon, "g");
            AxiomInstance {
                driver,
                horizon,
                f,
                g,
                constant: rng.gen_range(-3.0..3.0),
                lambda: rng.gen_range(0.0..4.0),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laws_are_dyadic_and_bounded() {
        let mut rng = replication_rng(1, 2, 3);
        for _ in 0..200 {
            let law = random_law(&mut rng, 4);
            assert!(law.atoms().len() <= 4);
            for &(v, p) in law.atoms() {
                assert_eq!((v * 8.0).fract(), 0.0);
                assert_eq!((p * 8.0).fract(), 0.0);
                assert!(v.abs() <= 2.0);
            }
        }
        let a = axiom_instances(5, 10);
        let b = axiom_instances(5, 10);
        assert_eq!(a[3].driver, b[3].driver);
        assert!(a.iter().all(|i| i.driver.len() <= 3 && i.horizon <= 4));
    }
}
