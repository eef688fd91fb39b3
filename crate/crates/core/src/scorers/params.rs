use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ScorerError;

/// A named, contiguous slice of a [`ParamVector`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Flat parameter vector with a named segment layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Vec<Segment>,
}

impl ParamVector {
    /// Zero vector for a layout given as `(name, len)` pairs.
    pub fn zeros(segments: &[(&str, usize)]) -> Self {
        let mut layout = Vec::with_capacity(segments.len());
        let mut offset = 0;
        for &(name, len) in segments {
            layout.push(Segment {
                name: name.to_string(),
                offset,
                len,
            });
            offset += len;
        }
        Self {
            values: vec![0.0; offset],
            layout,
        }
    }

    /// Entries i.i.d. uniform in `[-scale, scale]` from a seeded stream.
    pub fn uniform(segments: &[(&str, usize)], scale: f64, seed: u64) -> Result<Self, ScorerError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(ScorerError::NonPositiveScale(scale));
        }
        let mut p = Self::zeros(segments);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut p.values {
            *v = rng.random_range(-scale..=scale);
        }
        Ok(p)
    }

    /// Rebuild from raw parts, checking that the layout tiles the values.
    pub fn from_parts(values: Vec<f64>, layout: Vec<Segment>) -> Result<Self, ScorerError> {
        let mut offset = 0;
        for s in &layout {
            if s.offset != offset {
                return Err(ScorerError::Layout(format!(
                    "segment `{}` starts at {} but {} expected",
                    s.name, s.offset, offset
                )));
            }
            offset += s.len;
        }
        if offset != values.len() {
            return Err(ScorerError::Layout(format!(
                "layout covers {offset} values but vector has {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ScorerError::NonFinite(i));
        }
        Ok(Self { values, layout })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layout(&self) -> &[Segment] {
        &self.layout
    }

    pub fn segment(&self, name: &str) -> &[f64] {
        let s = self
            .layout
            .iter()
            .find(|s| s.name == name)
            .unwrap_or_else(|| panic!("no segment `{name}`"));
        &self.values[s.offset..s.offset + s.len]
    }

    pub fn segment_mut(&mut self, name: &str) -> &mut [f64] {
        let s = self
            .layout
            .iter()
            .find(|s| s.name == name)
            .unwrap_or_else(|| panic!("no segment `{name}`"))
            .clone();
        &mut self.values[s.offset..s.offset + s.len]
    }

    pub fn offset_of(&self, name: &str) -> usize {
        self.layout
            .iter()
            .find(|s| s.name == name)
            .unwrap_or_else(|| panic!("no segment `{name}`"))
            .offset
    }

    /// `self += alpha * direction`
    pub fn add_scaled(&mut self, alpha: f64, direction: &[f64]) {
        crate::math::axpy(alpha, direction, &mut self.values);
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Bit-exact fingerprint of the values.
    pub fn checksum(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for v in &self.values {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}
