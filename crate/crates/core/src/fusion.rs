//! Concatenation of a general-purpose table with a PP-context table.
//!
//! Tokens present on only one side are padded with a constant filler vector
//! on the other side, so every fused row has `left.dim() + right.dim()`
//! coordinates.

use crate::embedding_store::{EmbeddingError, EmbeddingTable, WordVector};

pub const DEFAULT_FILLER: f64 = 0.1;

pub struct FusionSpec<'a> {
    pub left: &'a EmbeddingTable,
    pub right: &'a EmbeddingTable,
    pub filler_value: f64,
}

impl<'a> FusionSpec<'a> {
    pub fn new(left: &'a EmbeddingTable, right: &'a EmbeddingTable) -> Self {
        FusionSpec {
            left,
            right,
            filler_value: DEFAULT_FILLER,
        }
    }

    pub fn with_filler(mut self, value: f64) -> Self {
        self.filler_value = value;
        self
    }
}

/// A vector of length `dim` with every coordinate equal to `value`.
pub fn make_filler(dim: usize, value: f64) -> WordVector {
    WordVector::new(vec![value; dim])
}

/// Builds the fused table.
///
/// Output order: left vocabulary in its input order, then tokens found only
/// on the right in their input order.
pub fn fuse(spec: &FusionSpec<'_>) -> Result<EmbeddingTable, EmbeddingError> {
    if !spec.filler_value.is_finite() {
        return Err(EmbeddingError::Format {
            line: 0,
            message: format!("filler value {} is not finite", spec.filler_value),
        });
    }
    let (left, right) = (spec.left, spec.right);
    let filler = spec.filler_value as f32;
    let left_filler = vec![filler; left.dim()];
    let right_filler = vec![filler; right.dim()];

    let mut fused = EmbeddingTable::new(left.dim() + right.dim());
    let mut row = Vec::with_capacity(fused.dim());
    for (word, v1) in left.iter() {
        row.clear();
        row.extend_from_slice(v1);
        row.extend_from_slice(right.lookup(word).unwrap_or(&right_filler));
        fused.insert(word.to_string(), &row)?;
    }
    for (word, v2) in right.iter() {
        if left.contains(word) {
            continue;
        }
        row.clear();
        row.extend_from_slice(&left_filler);
        row.extend_from_slice(v2);
        fused.insert(word.to_string(), &row)?;
    }
    Ok(fused)
}
