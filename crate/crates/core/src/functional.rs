//! Real functions of finitely many path coordinates.

use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::scalar::Scalar;

pub type EvalFn<S> = Arc<dyn Fn(&[S]) -> S + Send + Sync>;

/// Declared local-Lipschitz growth bound
/// `|f(x) - f(y)| <= C (1 + |x|^m + |y|^m) |x - y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzMeta<S> {
    pub constant: S,
    pub power: u32,
}

/// A deterministic function of the path coordinates listed in `coords`
/// (1-based, strictly increasing). The evaluator receives the values of
/// exactly those coordinates, in order.
#[derive(Clone)]
pub struct RandomFunctional<S> {
    coords: Vec<usize>,
    contiguous: bool,
    eval: EvalFn<S>,
    lipschitz: Option<LipschitzMeta<S>>,
    label: String,
}

impl<S> fmt::Debug for RandomFunctional<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RandomFunctional")
            .field("label", &self.label)
            .field("coords", &self.coords)
            .finish()
    }
}

type Gather<S> = SmallVec<[S; 16]>;

impl<S: Scalar> RandomFunctional<S> {
    /// Functional of the contiguous coordinates `first..=last`.
    pub fn window<F>(first: usize, last: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[S]) -> S + Send + Sync + 'static,
    {
        assert!(first >= 1 && first <= last, "window must be nonempty and 1-based");
        Self {
            coords: (first..=last).collect(),
            contiguous: true,
            eval: Arc::new(f),
            lipschitz: None,
            label: label.into(),
        }
    }

    /// Functional of an arbitrary coordinate set; `coords` is sorted and deduplicated.
    pub fn sparse<F>(coords: Vec<usize>, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[S]) -> S + Send + Sync + 'static,
    {
        let mut coords = coords;
        coords.sort_unstable();
        coords.dedup();
        assert!(
            !coords.is_empty() && coords[0] >= 1,
            "coordinate set must be nonempty and 1-based"
        );
        let contiguous = coords.windows(2).all(|w| w[1] == w[0] + 1);
        Self {
            coords,
            contiguous,
            eval: Arc::new(f),
            lipschitz: None,
            label: label.into(),
        }
    }

    /// The coordinate `X_i`.
    pub fn coordinate(i: usize) -> Self {
        Self::window(i, i, format!("X{i}"), |x: &[S]| x[0])
            .with_lipschitz(S::one(), 0)
    }

    /// The constant `c`, nominally attached to coordinate 1.
    pub fn constant(c: S) -> Self {
        Self::window(1, 1, format!("const({c})"), move |_: &[S]| c).with_lipschitz(S::zero(), 0)
    }

    /// `X_first + ... + X_last`.
    pub fn partial_sum(first: usize, last: usize) -> Self {
        Self::window(first, last, format!("S[{first}..={last}]"), |x: &[S]| {
            x.iter().copied().sum()
        })
    }

    pub fn with_lipschitz(mut self, constant: S, power: u32) -> Self {
        self.lipschitz = Some(LipschitzMeta { constant, power });
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    /// `(first, last)` coordinate of the support.
    pub fn window_bounds(&self) -> (usize, usize) {
        (self.coords[0], *self.coords.last().expect("nonempty"))
    }

    pub fn arity(&self) -> usize {
        self.coords.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lipschitz(&self) -> Option<LipschitzMeta<S>> {
        self.lipschitz
    }

    /// Evaluates on the values of `coords()`, in order.
    pub fn evaluate(&self, values: &[S]) -> S {
        debug_assert_eq!(values.len(), self.coords.len());
        (self.eval)(values)
    }

    /// Evaluates on a full path where `path[0]` is coordinate 1.
    pub fn eval_on_path(&self, path: &[S]) -> S {
        if self.contiguous {
            let (first, last) = self.window_bounds();
            (self.eval)(&path[first - 1..last])
        } else {
            let g: Gather<S> = self.coords.iter().map(|&c| path[c - 1]).collect();
            (self.eval)(&g)
        }
    }

    /// Same function applied `offset` coordinates later.
    pub fn shifted(&self, offset: usize) -> Self {
        Self {
            coords: self.coords.iter().map(|c| c + offset).collect(),
            contiguous: self.contiguous,
            eval: Arc::clone(&self.eval),
            lipschitz: self.lipschitz,
            label: if offset == 0 {
                self.label.clone()
            } else {
                format!("{}>>{offset}", self.label)
            },
        }
    }

    /// Post-composition `h(f)`. The Lipschitz declaration is dropped.
    pub fn map<H>(&self, label: impl Into<String>, h: H) -> Self
    where
        H: Fn(S) -> S + Send + Sync + 'static,
    {
        let inner = Arc::clone(&self.eval);
        Self {
            coords: self.coords.clone(),
            contiguous: self.contiguous,
            eval: Arc::new(move |x: &[S]| h(inner(x))),
            lipschitz: None,
            label: label.into(),
        }
    }

    pub fn scale(&self, lambda: S) -> Self {
        let mut out = self.map(format!("{lambda}*({})", self.label), move |v| lambda * v);
        out.lipschitz = self.lipschitz.map(|m| LipschitzMeta {
            constant: m.constant * lambda.abs(),
            power: m.power,
        });
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.map(format!("-({})", self.label), |v| -v);
        out.lipschitz = self.lipschitz;
        out
    }

    pub fn add_constant(&self, c: S) -> Self {
        let mut out = self.map(format!("({})+{c}", self.label), move |v| v + c);
        out.lipschitz = self.lipschitz;
        out
    }

    pub fn abs(&self) -> Self {
        let mut out = self.map(format!("|{}|", self.label), |v| v.abs());
        out.lipschitz = self.lipschitz;
        out
    }

    /// Pointwise `op(self, other)` on the union of both supports.
    pub fn combine<Op>(&self, other: &Self, label: impl Into<String>, op: Op) -> Self
    where
        Op: Fn(S, S) -> S + Send + Sync + 'static,
    {
        let mut coords: Vec<usize> = self.coords.iter().chain(&other.coords).copied().collect();
        coords.sort_unstable();
        coords.dedup();
        let pos = |sub: &[usize]| -> Vec<usize> {
            sub.iter()
                .map(|c| coords.binary_search(c).expect("subset"))
                .collect()
        };
        let left_pos = pos(&self.coords);
        let right_pos = pos(&other.coords);
        let left = Arc::clone(&self.eval);
        let right = Arc::clone(&other.eval);
        Self::sparse(coords, label, move |x: &[S]| {
            let a: Gather<S> = left_pos.iter().map(|&i| x[i]).collect();
            let b: Gather<S> = right_pos.iter().map(|&i| x[i]).collect();
            op(left(&a), right(&b))
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, format!("{}+{}", self.label, other.label), |a, b| a + b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.combine(other, format!("{}*{}", self.label, other.label), |a, b| a * b)
    }

    /// Sum of several functionals on the union of their supports.
    pub fn sum_all(parts: &[Self]) -> Self {
        let mut acc = parts.first().expect("at least one part").clone();
        for p in &parts[1..] {
            acc = acc.add(p);
        }
        acc
    }

    /// Largest observed ratio of `|f(x) - f(y)|` to the declared growth bound
    /// over the sampled pairs; values above 1 contradict the declaration.
    /// Returns `None` when nothing is declared.
    pub fn lipschitz_spot_check(&self, pairs: &[(Vec<S>, Vec<S>)]) -> Option<S> {
        let meta = self.lipschitz?;
        let norm = |v: &[S]| v.iter().map(|&a| a * a).sum::<S>().sqrt();
        let mut worst = S::zero();
        for (x, y) in pairs {
            let diff: Vec<S> = x.iter().zip(y).map(|(&a, &b)| a - b).collect();
            let dist = norm(&diff);
            let num = (self.evaluate(x) - self.evaluate(y)).abs();
            if dist == S::zero() {
                continue;
            }
            let bound = meta.constant
                * (S::one() + norm(x).powi(meta.power as i32) + norm(y).powi(meta.power as i32))
                * dist;
            let ratio = if bound > S::zero() {
                num / bound
            } else if num > S::zero() {
                S::infinity()
            } else {
                S::zero()
            };
            worst = worst.max(ratio);
        }
        Some(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_aligns_sparse_supports() {
        let x1 = RandomFunctional::<f64>::coordinate(1);
        let x3 = RandomFunctional::coordinate(3);
        let p = x1.mul(&x3);
        assert_eq!(p.coords(), &[1, 3]);
        assert_eq!(p.evaluate(&[2.0, 5.0]), 10.0);
        assert_eq!(p.eval_on_path(&[2.0, 7.0, 5.0]), 10.0);
    }

    #[test]
    fn shift_moves_window() {
        let g = RandomFunctional::<f64>::window(1, 2, "diff", |x| x[1] - x[0]);
        let h = g.shifted(3);
        assert_eq!(h.window_bounds(), (4, 5));
        assert_eq!(h.eval_on_path(&[0.0, 0.0, 0.0, 1.0, 4.0]), 3.0);
    }

    #[test]
    fn lipschitz_spot_check_flags_violation() {
        let sq = RandomFunctional::<f64>::coordinate(1)
            .map("sq", |v| v * v)
            .with_lipschitz(1.0, 0);
        let pairs = vec![(vec![10.0], vec![11.0])];
        assert!(sq.lipschitz_spot_check(&pairs).unwrap() > 1.0);
        let ok = sq.clone().with_lipschitz(1.0, 1);
        assert!(ok.lipschitz_spot_check(&pairs).unwrap() <= 1.0);
    }
}
