use crate::scalar::Scalar;

/// Two-sided 97.5% standard normal quantile used for confidence intervals.
pub const NORMAL_Q975: f64 = 1.959_963_984_540_054;

/// Welford accumulator. A constant stream yields that constant as the mean
/// exactly, with zero variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats<S> {
    n: usize,
    mean: S,
    m2: S,
}

impl<S: Scalar> RunningStats<S> {
    pub fn new() -> Self {
        Self {
            n: 0,
            mean: S::zero(),
            m2: S::zero(),
        }
    }

    pub fn push(&mut self, x: S) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / S::from_usize_lossy(self.n);
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> S {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two observations.
    pub fn variance(&self) -> S {
        if self.n < 2 {
            S::zero()
        } else {
            (self.m2 / S::from_usize_lossy(self.n - 1)).max(S::zero())
        }
    }

    pub fn std_error(&self) -> S {
        if self.n == 0 {
            return S::zero();
        }
        (self.variance() / S::from_usize_lossy(self.n)).sqrt()
    }

    /// Half width of the normal-approximation 95% interval.
    pub fn half_width(&self) -> S {
        S::from_f64_lossy(NORMAL_Q975) * self.std_error()
    }
}

impl<S: Scalar> FromIterator<S> for RunningStats<S> {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}
