//! History-dependent scenario selection.
//!
//! A selector picks, before each driver coordinate is drawn, which scenario
//! of the family governs it. Letting the choice depend on the history is what
//! realizes the iterated supremum behind Peng independence.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::distribution::{DiscreteDistribution, ScenarioSet};
use crate::functional::RandomFunctional;
use crate::rng::{derive_seed, splitmix64};
use crate::scalar::Scalar;

const DIGEST_INIT: u64 = 0x243F_6A88_85A3_08D3;

/// What a selector may look at when choosing the law of coordinate `step`.
#[derive(Debug, Clone, Copy)]
pub struct PathContext<'a, S> {
    /// 1-based index of the driver coordinate about to be drawn.
    pub step: usize,
    /// Driver values at coordinates `1..step`.
    pub history: &'a [S],
    /// Rolling hash of `history`.
    pub digest: u64,
    /// Sum of the output coordinates completed so far (0 for plain functionals).
    pub running_sum: S,
    /// Factor applied to the increment this step contributes to `running_sum`.
    pub next_weight: S,
}

pub fn initial_digest() -> u64 {
    DIGEST_INIT
}

pub fn extend_digest<S: Scalar>(digest: u64, value: S) -> u64 {
    splitmix64(digest ^ splitmix64(value.key_bits()))
}

pub type ScoreFn<S> =
    Arc<dyn Fn(&PathContext<'_, S>, &DiscreteDistribution<S>) -> S + Send + Sync>;

/// Explicit map from history prefixes to scenario indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TableSelector {
    entries: BTreeMap<Vec<u64>, usize>,
    fallback: usize,
}

impl TableSelector {
    pub fn new(fallback: usize) -> Self {
        Self {
            entries: BTreeMap::new(),
            fallback,
        }
    }

    /// Scenario used after observing `history`.
    pub fn insert<S: Scalar>(&mut self, history: &[S], index: usize) {
        self.entries
            .insert(history.iter().map(|v| v.key_bits()).collect(), index);
    }

    pub fn lookup<S: Scalar>(&self, history: &[S]) -> usize {
        let key: Vec<u64> = history.iter().map(|v| v.key_bits()).collect();
        self.entries.get(&key).copied().unwrap_or(self.fallback)
    }

    fn max_index(&self) -> usize {
        self.entries.values().copied().fold(self.fallback, usize::max)
    }
}

/// Picks the scenario with the highest score; ties go to the lowest index.
#[derive(Clone)]
pub struct GreedySelector<S> {
    id: String,
    score: ScoreFn<S>,
}

impl<S> fmt::Debug for GreedySelector<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GreedySelector({})", self.id)
    }
}

#[derive(Debug, Clone)]
pub enum Selector<S> {
    Constant(usize),
    Table(TableSelector),
    /// A pseudo-random function of the history prefix, fixed by `seed`.
    Randomized { seed: u64 },
    Greedy(GreedySelector<S>),
}

impl<S: Scalar> Selector<S> {
    pub fn greedy<F>(id: impl Into<String>, score: F) -> Self
    where
        F: Fn(&PathContext<'_, S>, &DiscreteDistribution<S>) -> S + Send + Sync + 'static,
    {
        Selector::Greedy(GreedySelector {
            id: id.into(),
            score: Arc::new(score),
        })
    }

    /// Maximizes `E[(s + X)^2]` for the running output sum `s`.
    pub fn chase_square() -> Self {
        Self::greedy("chase_sq", |ctx, law| {
            let (s, w) = (ctx.running_sum, ctx.next_weight);
            law.expect(|x| (s + w * x) * (s + w * x))
        })
    }

    /// Maximizes `E[((s + X)^+)^2]`.
    pub fn chase_up() -> Self {
        Self::greedy("chase_up", |ctx, law| {
            let (s, w) = (ctx.running_sum, ctx.next_weight);
            law.expect(|x| {
                let p = (s + w * x).max(S::zero());
                p * p
            })
        })
    }

    /// Maximizes `E[((s + X)^-)^2]`.
    pub fn chase_down() -> Self {
        Self::greedy("chase_down", |ctx, law| {
            let (s, w) = (ctx.running_sum, ctx.next_weight);
            law.expect(|x| {
                let p = (s + w * x).min(S::zero());
                p * p
            })
        })
    }

    /// Minimizes `E[(s + X)^2]`.
    pub fn contrarian() -> Self {
        Self::greedy("contrarian", |ctx, law| {
            let (s, w) = (ctx.running_sum, ctx.next_weight);
            -law.expect(|x| (s + w * x) * (s + w * x))
        })
    }

    /// One-step lookahead on `f`: the candidate law is scored by the mean of
    /// `f` with the current coordinate drawn from it and every later
    /// coordinate frozen at `fill`.
    pub fn lookahead(f: &RandomFunctional<S>, fill: S) -> Self {
        let f = f.clone();
        let id = format!("lookahead[{}]", f.label());
        Self::greedy(id, move |ctx, law| {
            let (_, last) = f.window_bounds();
            if ctx.step > last {
                return S::zero();
            }
            let mut path: Vec<S> = Vec::with_capacity(last);
            path.extend_from_slice(ctx.history);
            path.push(S::zero());
            path.resize(last, fill);
            law.expect(|x| {
                let mut p = path.clone();
                p[ctx.step - 1] = x;
                f.eval_on_path(&p)
            })
        })
    }

    pub fn select(&self, ctx: &PathContext<'_, S>, scenarios: &ScenarioSet<S>) -> usize {
        let n = scenarios.len();
        match self {
            Selector::Constant(i) => *i,
            Selector::Table(t) => t.lookup(ctx.history),
            Selector::Randomized { seed } => {
                let h = splitmix64(*seed ^ ctx.digest ^ (ctx.step as u64).wrapping_mul(0x9E37_79B9));
                (h % n as u64) as usize
            }
            Selector::Greedy(g) => {
                let mut best = 0;
                let mut best_score = S::neg_infinity();
                for (i, law) in scenarios.iter().enumerate() {
                    let s = (g.score)(ctx, law);
                    if s > best_score {
                        best = i;
                        best_score = s;
                    }
                }
                best
            }
        }
    }

    pub fn id(&self) -> String {
        match self {
            Selector::Constant(i) => format!("const:{i}"),
            Selector::Table(t) => format!("table:{}", t.entries.len()),
            Selector::Randomized { seed } => format!("rand:{seed:016x}"),
            Selector::Greedy(g) => format!("greedy:{}", g.id),
        }
    }

    fn max_index(&self) -> Option<usize> {
        match self {
            Selector::Constant(i) => Some(*i),
            Selector::Table(t) => Some(t.max_index()),
            _ => None,
        }
    }
}

/// A finite family of selectors; maxima over it give one-sided estimates of
/// upper expectations and capacities.
#[derive(Debug, Clone)]
pub struct SelectorPool<S> {
    selectors: Vec<Selector<S>>,
}

impl<S: Scalar> SelectorPool<S> {
    pub fn new(selectors: Vec<Selector<S>>) -> Self {
        assert!(!selectors.is_empty(), "selector pool must be nonempty");
        Self { selectors }
    }

    /// Constant selectors first, then `greedy`, then randomized tables until
    /// `size` is reached. A singleton family needs only one selector.
    pub fn standard(
        scenarios: &ScenarioSet<S>,
        size: usize,
        seed: u64,
        greedy: Vec<Selector<S>>,
    ) -> Self {
        if scenarios.len() == 1 {
            return Self::new(vec![Selector::Constant(0)]);
        }
        let size = size.max(1);
        let mut selectors: Vec<Selector<S>> =
            (0..scenarios.len()).take(size).map(Selector::Constant).collect();
        for g in greedy {
            if selectors.len() >= size {
                break;
            }
            selectors.push(g);
        }
        let mut k = 0u64;
        while selectors.len() < size {
            selectors.push(Selector::Randomized {
                seed: derive_seed(seed, 0x5E1E_C7, k),
            });
            k += 1;
        }
        Self::new(selectors)
    }

    /// Pool tuned for partial-sum statistics.
    pub fn for_partial_sums(scenarios: &ScenarioSet<S>, size: usize, seed: u64) -> Self {
        Self::standard(
            scenarios,
            size,
            seed,
            vec![
                Selector::chase_square(),
                Selector::chase_up(),
                Selector::chase_down(),
                Selector::contrarian(),
            ],
        )
    }

    /// Pool with a one-step lookahead on `f`, filling unseen coordinates with
    /// the mean of scenario 0.
    pub fn for_functional(
        scenarios: &ScenarioSet<S>,
        size: usize,
        seed: u64,
        f: &RandomFunctional<S>,
    ) -> Self {
        let fill = scenarios.get(0).mean();
        Self::standard(scenarios, size, seed, vec![Selector::lookahead(f, fill)])
    }

    pub fn selectors(&self) -> &[Selector<S>] {
        &self.selectors
    }

    pub fn len(&self) -> usize {
        self.selectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selectors.is_empty()
    }

    /// True when every explicit index is a valid scenario index.
    pub fn is_valid_for(&self, scenarios: &ScenarioSet<S>) -> bool {
        self.selectors
            .iter()
            .filter_map(|s| s.max_index())
            .all(|i| i < scenarios.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx<'a>(history: &'a [f64], running_sum: f64) -> PathContext<'a, f64> {
        let digest = history.iter().fold(initial_digest(), |d, &v| extend_digest(d, v));
        PathContext {
            step: history.len() + 1,
            history,
            digest,
            running_sum,
            next_weight: 1.0,
        }
    }

    #[test]
    fn greedy_ties_break_to_lowest_index() {
        let set = ScenarioSet::symmetric_signs(&[1.0, 1.0]).unwrap();
        assert_eq!(Selector::chase_square().select(&ctx(&[], 0.0), &set), 0);
        let set = ScenarioSet::symmetric_signs(&[1.0, 2.0]).unwrap();
        assert_eq!(Selector::chase_square().select(&ctx(&[], 0.0), &set), 1);
        assert_eq!(Selector::contrarian().select(&ctx(&[], 0.0), &set), 0);
    }

    #[test]
    fn table_lookup_and_fallback() {
        let mut t = TableSelector::new(1);
        t.insert(&[1.0f64], 0);
        let sel = Selector::<f64>::Table(t);
        let set = ScenarioSet::point_masses(&[1.0, -1.0]).unwrap();
        assert_eq!(sel.select(&ctx(&[1.0], 0.0), &set), 0);
        assert_eq!(sel.select(&ctx(&[-1.0], 0.0), &set), 1);
    }

    #[test]
    fn randomized_is_a_function_of_history() {
        let set = ScenarioSet::symmetric_signs(&[1.0, 2.0, 3.0]).unwrap();
        let sel = Selector::<f64>::Randomized { seed: 11 };
        let a = sel.select(&ctx(&[1.0, -2.0], 0.0), &set);
        let b = sel.select(&ctx(&[1.0, -2.0], 5.0), &set);
        assert_eq!(a, b);
        let picks: std::collections::BTreeSet<usize> = (0..64)
            .map(|i| sel.select(&ctx(&[i as f64], 0.0), &set))
            .collect();
        assert_eq!(picks.len(), 3);
    }

    #[test]
    fn standard_pool_shape() {
        let set = ScenarioSet::symmetric_signs(&[1.0, 2.0]).unwrap();
        let pool = SelectorPool::for_partial_sums(&set, 32, 1);
        assert_eq!(pool.len(), 32);
        assert!(pool.is_valid_for(&set));
        assert_eq!(pool.selectors()[0].id(), "const:0");
        let single = ScenarioSet::symmetric_signs(&[1.0]).unwrap();
        assert_eq!(SelectorPool::for_partial_sums(&single, 32, 1).len(), 1);
    }
}
