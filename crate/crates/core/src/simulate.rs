//! Forward path simulation under a selector.

use rand::Rng;

use crate::distribution::ScenarioSet;
use crate::scalar::Scalar;
use crate::selector::{extend_digest, initial_digest, PathContext, Selector};

/// Draws driver coordinates `1..=len` into `path` (cleared first).
///
/// After each draw `after_step(step, path)` runs and returns the increment
/// of the running output sum that later selector calls observe;
/// `weight(step)` is the factor the selector is told that increment carries.
pub(crate) fn draw_path<S, R, F, W>(
    driver: &ScenarioSet<S>,
    selector: &Selector<S>,
    len: usize,
    rng: &mut R,
    path: &mut Vec<S>,
    weight: W,
    mut after_step: F,
) where
    S: Scalar,
    R: Rng,
    F: FnMut(usize, &[S]) -> S,
    W: Fn(usize) -> S,
{
    path.clear();
    let mut digest = initial_digest();
    let mut running = S::zero();
    for step in 1..=len {
        let ctx = PathContext {
            step,
            history: path.as_slice(),
            digest,
            running_sum: running,
            next_weight: weight(step),
        };
        let idx = selector.select(&ctx, driver);
        let x = driver.get(idx).sample_with(rng.gen::<f64>());
        path.push(x);
        digest = extend_digest(digest, x);
        running += after_step(step, path);
    }
}

/// Per selector and replication, simulates the model outputs and reduces
/// them with `stat`. Results are indexed `[selector][replication]` and do
/// not depend on thread scheduling.
pub(crate) fn model_statistics<S, T, F>(
    model: &crate::models::SequenceModel<S>,
    pool: &crate::selector::SelectorPool<S>,
    replications: usize,
    seed: u64,
    weights: Option<&[S]>,
    stat: F,
) -> Vec<Vec<T>>
where
    S: Scalar,
    T: Send,
    F: Fn(&[S]) -> T + Sync,
{
    use rayon::prelude::*;
    pool.selectors()
        .iter()
        .enumerate()
        .map(|(si, selector)| {
            (0..replications)
                .into_par_iter()
                .map_init(
                    || (Vec::new(), Vec::new()),
                    |(path, out), rep| {
                        let mut rng = crate::rng::replication_rng(seed, si as u64, rep as u64);
                        model.simulate(selector, &mut rng, weights, path, out);
                        stat(out)
                    },
                )
                .collect()
        })
        .collect()
}
