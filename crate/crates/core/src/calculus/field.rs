use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use rand::Rng;

use crate::space::DiscreteMms;
use crate::{util, Error, Result};

/// Real-valued function on the vertices of a space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self((0..n).map(f).collect())
    }

    /// Seeded field with independent uniform values in `[-1, 1)`.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = util::rng(seed);
        Self((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    /// Seeded random field projected to zero measure-weighted mean.
    pub fn random_zero_mean(space: &DiscreteMms, seed: u64) -> Self {
        let f = Self::random(space.len(), seed);
        let mean = f.mean(space);
        f.map(|v| v - mean)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self, space: &DiscreteMms) -> Result<()> {
        if self.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                got: self.len(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `Σ u m`.
    pub fn integral(&self, space: &DiscreteMms) -> f64 {
        self.0.iter().zip(space.measure()).map(|(u, m)| u * m).sum()
    }

    /// Measure-weighted mean.
    pub fn mean(&self, space: &DiscreteMms) -> f64 {
        self.integral(space) / space.total_measure()
    }

    /// Subtracts the measure-weighted mean.
    pub fn project_zero_mean(&self, space: &DiscreteMms) -> Self {
        let mean = self.mean(space);
        self.map(|v| v - mean)
    }

    /// `Σ u v m`.
    pub fn inner(&self, other: &Self, space: &DiscreteMms) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .zip(space.measure())
            .map(|((a, b), m)| a * b * m)
            .sum()
    }

    pub fn norm_l2(&self, space: &DiscreteMms) -> f64 {
        self.inner(self, space).sqrt()
    }

    /// `(Σ |u|^p m)^{1/p}`.
    pub fn norm_lp(&self, space: &DiscreteMms, p: f64) -> f64 {
        self.0
            .iter()
            .zip(space.measure())
            .map(|(u, m)| u.abs().powf(p) * m)
            .sum::<f64>()
            .powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Text form: `<index> <value>` per line, 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.0.iter().enumerate() {
            let _ = writeln!(out, "{i} {}", util::fmt17(*v));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: idx + 1, message };
            let mut tokens = line.split_whitespace();
            let (Some(i), Some(v), None) = (tokens.next(), tokens.next(), tokens.next()) else {
                return Err(err(format!("expected '<index> <value>', got '{line}'")));
            };
            let i: usize = i.parse().map_err(|_| err(format!("bad index '{i}'")))?;
            let v: f64 = v.parse().map_err(|_| err(format!("bad value '{v}'")))?;
            if i != values.len() {
                return Err(err(format!("expected index {}, got {i}", values.len())));
            }
            values.push(v);
        }
        Ok(Self(values))
    }
}

impl Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ScalarField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn text_format() {
        let f = ScalarField::new(vec![0.5, -1.0]);
        assert_eq!(f.to_text(), "0 5.0000000000000000e-1\n1 -1.0000000000000000e0\n");
        assert!(ScalarField::parse("0 1\n2 3").is_err());
        assert!(ScalarField::parse("0 x").is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip(values in prop::collection::vec(-1e6f64..1e6, 0..20)) {
            let f = ScalarField::new(values);
            prop_assert_eq!(ScalarField::parse(&f.to_text()).unwrap(), f);
        }
    }
}
