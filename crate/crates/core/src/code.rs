//! Scalar-linear codes and their verification.

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::gf::{span_of, FVector, Field, GfError};
use crate::model::{serialize_label, MessageSet, Problem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("code assigns {got} vectors but the problem has {n} messages")]
    Coverage { got: usize, n: usize },
    #[error(transparent)]
    Field(#[from] GfError),
}

/// A precoding vector per message: the codeword is `Σ V_i W_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecodingAssignment {
    field: Field,
    len: usize,
    vectors: Vec<FVector>,
}

impl PrecodingAssignment {
    /// Checks that every vector has length `len` over `field`.
    pub fn new(field: Field, len: usize, vectors: Vec<FVector>) -> Result<Self, CodeError> {
        for v in &vectors {
            if v.field() != field || v.len() != len {
                return Err(GfError::DimensionMismatch { expected: len, q: field.q(), got: v.len(), got_q: v.field().q() }
                    .into());
            }
        }
        Ok(PrecodingAssignment { field, len, vectors })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Code length `L`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[FVector] {
        &self.vectors
    }

    pub fn vector(&self, m: usize) -> &FVector {
        &self.vectors[m]
    }

    pub fn dim_of(&self, set: &MessageSet) -> Result<usize, GfError> {
        let vs: Vec<FVector> = set.iter().map(|&m| self.vectors[m]).collect();
        Ok(span_of(self.field, self.len, &vs)?.dim())
    }
}

impl Serialize for PrecodingAssignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct Vectors<'a>(&'a [FVector]);
        impl Serialize for Vectors<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.len()))?;
                for (i, v) in self.0.iter().enumerate() {
                    map.serialize_entry(&(i + 1).to_string(), v)?;
                }
                map.end()
            }
        }
        let mut map = serializer.serialize_map(Some(3))?;
        map.serialize_entry("L", &self.len)?;
        map.serialize_entry("q", &self.field.q())?;
        map.serialize_entry("vectors", &Vectors(&self.vectors))?;
        map.end()
    }
}

/// A demand whose vector lies in the span of its interference.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    #[serde(serialize_with = "serialize_label")]
    pub receiver: usize,
    #[serde(serialize_with = "serialize_label")]
    pub demand: usize,
    pub interference: MessageSet,
}

/// Lists every unresolved conflict; empty means every receiver can decode.
pub fn verify_code(p: &Problem, code: &PrecodingAssignment) -> Result<Vec<Violation>, CodeError> {
    if code.vectors.len() != p.n() {
        return Err(CodeError::Coverage { got: code.vectors.len(), n: p.n() });
    }
    let mut out = Vec::new();
    for h in p.hyperedges() {
        let vs: Vec<FVector> = h.interference.iter().map(|&m| code.vectors[m]).collect();
        let span = span_of(code.field, code.len, &vs)?;
        if span.contains(&code.vectors[h.demand])? {
            out.push(Violation { receiver: h.receiver, demand: h.demand, interference: h.interference });
        }
    }
    Ok(out)
}
