//! Piecewise-constant profiles along the propagation axis.
//!
//! Used for the nonlinearity sign pattern `g(z)`, the cross-phase switches
//! `h_s(z)`, `h_i(z)` and the pump self-phase strength `zeta_p(z)`. The
//! profile is zero outside its declared segments.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    pub start: T,
    pub end: T,
    pub value: T,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Profile<T> {
    segments: Vec<Segment<T>>,
}

/// Restriction on the values a profile may take.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueSet {
    Any,
    /// `{-1, 0, +1}`
    Sign,
    /// `{0, 1}`
    Switch,
}

impl<T: Scalar> Profile<T> {
    pub fn zero() -> Self {
        Self { segments: Vec::new() }
    }

    /// Build a profile from possibly unsorted, non-overlapping segments.
    pub fn new(mut segments: Vec<Segment<T>>) -> Result<Self> {
        for (k, s) in segments.iter().enumerate() {
            if !(s.start.is_finite() && s.end.is_finite() && s.value.is_finite()) {
                return Err(Error::config(format!("segments[{k}]"), "non-finite bound or value"));
            }
            if s.start >= s.end {
                return Err(Error::config(format!("segments[{k}]"), "segment start must be below its end"));
            }
        }
        segments.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap());
        if segments.windows(2).any(|w| w[1].start < w[0].end) {
            return Err(Error::config("segments", "segments overlap"));
        }
        Ok(Self { segments })
    }

    pub fn constant(start: T, end: T, value: T) -> Result<Self> {
        Self::new(vec![Segment { start, end, value }])
    }

    /// Alternating `+1/-1` domains of length `period / 2` covering `[start, end)`.
    pub fn periodic_poling(start: T, end: T, period: T) -> Result<Self> {
        if !(period > T::zero()) {
            return Err(Error::config("period", "poling period must be positive"));
        }
        let half = period * T::lit(0.5);
        let mut segments = Vec::new();
        let mut k = 0usize;
        loop {
            let a = start + half * T::from_count(k);
            if a >= end {
                break;
            }
            let b = (start + half * T::from_count(k + 1)).min(end);
            let value = if k.is_multiple_of(2) { T::one() } else { -T::one() };
            segments.push(Segment { start: a, end: b, value });
            k += 1;
        }
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    pub fn is_zero(&self) -> bool {
        self.segments.iter().all(|s| s.value == T::zero())
    }

    pub fn check_values(&self, allowed: ValueSet, field: &str) -> Result<()> {
        let ok = |v: T| match allowed {
            ValueSet::Any => true,
            ValueSet::Sign => v == T::one() || v == -T::one() || v == T::zero(),
            ValueSet::Switch => v == T::one() || v == T::zero(),
        };
        match self.segments.iter().position(|s| !ok(s.value)) {
            None => Ok(()),
            Some(k) => Err(Error::config(
                format!("{field}[{k}]"),
                match allowed {
                    ValueSet::Sign => "value must be -1, 0 or +1",
                    ValueSet::Switch => "value must be 0 or 1",
                    ValueSet::Any => unreachable!(),
                },
            )),
        }
    }

    /// Value at `z`, with segments treated as half-open `[start, end)`.
    pub fn value_at(&self, z: T) -> T {
        self.segments
            .iter()
            .find(|s| s.start <= z && z < s.end)
            .map_or(T::zero(), |s| s.value)
    }

    /// Signed integral `int_a^b f(z) dz`.
    pub fn integral(&self, a: T, b: T) -> T {
        if a == b {
            return T::zero();
        }
        let (lo, hi, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };
        let total = self.segments.iter().fold(T::zero(), |acc, s| {
            let l = s.start.max(lo);
            let h = s.end.min(hi);
            if h > l {
                acc + s.value * (h - l)
            } else {
                acc
            }
        });
        sign * total
    }

    /// Discontinuities strictly inside `(a, b)`, ascending and deduplicated.
    pub fn breakpoints(&self, a: T, b: T) -> Vec<T> {
        let mut out: Vec<T> = Vec::new();
        for s in &self.segments {
            for p in [s.start, s.end] {
                if p > a && p < b {
                    out.push(p);
                }
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out.dedup();
        // keep only genuine jumps
        out.retain(|&p| {
            let left = self.segments.iter().find(|s| s.start < p && p <= s.end).map_or(T::zero(), |s| s.value);
            self.value_at(p) != left
        });
        out
    }

    /// True when the profile takes a single value on `[a, b)`.
    pub fn is_constant_on(&self, a: T, b: T) -> bool {
        self.breakpoints(a, b).is_empty()
    }
}
