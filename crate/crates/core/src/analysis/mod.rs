//! Merged-system analysis: determinant classification, witnesses and
//! minimal overlaps with product vectors.

pub mod alternating;
pub mod quadruple;
pub mod witness;
