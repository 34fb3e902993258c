//! Finite unions of real intervals with rational endpoints.

use num_rational::Rational64;

pub type Rational = Rational64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational, lo_closed: bool, hi_closed: bool) -> Self {
        Self {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }

    pub fn closed(lo: Rational, hi: Rational) -> Self {
        Self::new(lo, hi, true, true)
    }

    pub fn open(lo: Rational, hi: Rational) -> Self {
        Self::new(lo, hi, false, false)
    }

    pub fn point(x: Rational) -> Self {
        Self::closed(x, x)
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn length(&self) -> Rational {
        if self.is_empty() {
            Rational::from_integer(0)
        } else {
            self.hi - self.lo
        }
    }

    pub fn contains(&self, x: Rational) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = match self.lo.cmp(&other.lo) {
            std::cmp::Ordering::Greater => (self.lo, self.lo_closed),
            std::cmp::Ordering::Less => (other.lo, other.lo_closed),
            std::cmp::Ordering::Equal => (self.lo, self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp(&other.hi) {
            std::cmp::Ordering::Less => (self.hi, self.hi_closed),
            std::cmp::Ordering::Greater => (other.hi, other.hi_closed),
            std::cmp::Ordering::Equal => (self.hi, self.hi_closed && other.hi_closed),
        };
        Interval::new(lo, hi, lo_closed, hi_closed)
    }
}

/// Canonical union: sorted, pairwise disjoint, and no two parts touching.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_intervals<I: IntoIterator<Item = Interval>>(intervals: I) -> Self {
        let mut parts: Vec<Interval> = intervals.into_iter().filter(|i| !i.is_empty()).collect();
        // closed left ends sort before open ones at the same point
        parts.sort_by(|a, b| a.lo.cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            if let Some(c) = merged.last_mut() {
                let touches = p.lo < c.hi || (p.lo == c.hi && (c.hi_closed || p.lo_closed));
                if touches {
                    if p.hi > c.hi {
                        c.hi = p.hi;
                        c.hi_closed = p.hi_closed;
                    } else if p.hi == c.hi {
                        c.hi_closed |= p.hi_closed;
                    }
                    continue;
                }
            }
            merged.push(p);
        }
        Self { parts: merged }
    }

    pub fn single(interval: Interval) -> Self {
        Self::from_intervals([interval])
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, x: Rational) -> bool {
        self.parts.iter().any(|p| p.contains(x))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        Self::from_intervals(self.parts.iter().chain(&other.parts).copied())
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        Self::from_intervals(
            self.parts
                .iter()
                .flat_map(|a| other.parts.iter().map(move |b| a.intersect(b))),
        )
    }

    /// `omega \ self`.
    pub fn complement_within(&self, omega: &Interval) -> IntervalSet {
        let inside = self.intersection(&IntervalSet::single(*omega));
        let mut gaps = Vec::new();
        let mut cursor = omega.lo;
        let mut cursor_closed = omega.lo_closed;
        for p in &inside.parts {
            gaps.push(Interval::new(cursor, p.lo, cursor_closed, !p.lo_closed));
            cursor = p.hi;
            cursor_closed = !p.hi_closed;
        }
        gaps.push(Interval::new(cursor, omega.hi, cursor_closed, omega.hi_closed));
        Self::from_intervals(gaps)
    }

    /// Lebesgue measure of `self ∩ [lo, hi]`.
    pub fn length_within(&self, lo: Rational, hi: Rational) -> Rational {
        let window = Interval::closed(lo, hi);
        self.parts
            .iter()
            .map(|p| p.intersect(&window).length())
            .sum()
    }
}
