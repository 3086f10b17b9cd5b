//! Code embeddings: the provider trait, cosine similarity and a hashed
//! bag-of-tokens embedder for offline runs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{contract, Error, Result};
use crate::lexer::tokenize_code;

/// Something that maps code strings to fixed-dimension vectors.
///
/// Implementations must return one vector per input, in input order.
pub trait CodeEmbedder {
    type Error: From<Error>;

    fn embed_code(&self, inputs: &[&str]) -> core::result::Result<Vec<Vec<f64>>, Self::Error>;
}

impl<T: CodeEmbedder + ?Sized> CodeEmbedder for &T {
    type Error = T::Error;

    fn embed_code(&self, inputs: &[&str]) -> core::result::Result<Vec<Vec<f64>>, Self::Error> {
        (**self).embed_code(inputs)
    }
}

/// Cosine similarity. A zero vector has similarity 0 with everything.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(contract("embedding dimensions differ"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(contract("embedding contains a non-finite value"));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / libm::sqrt(na * nb)).clamp(-1.0, 1.0))
}

/// Cosine similarity of the two embeddings, floored at 0.
pub fn codebert_similarity<E: CodeEmbedder>(gen: &str, reference: &str, embedder: &E) -> core::result::Result<f64, E::Error> {
    let vectors = embedder.embed_code(&[gen, reference])?;
    let [a, b] = vectors.as_slice() else {
        return Err(contract("embedder returned the wrong number of vectors").into());
    };
    if a == b {
        return Ok(1.0);
    }
    Ok(cosine(a, b)?.max(0.0))
}

/// 32-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for &b in bytes {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Token counts hashed into `dim` buckets. Deterministic and network-free.
#[derive(Clone, Debug)]
pub struct HashedCodeEmbedder {
    pub dim: usize,
}

impl Default for HashedCodeEmbedder {
    fn default() -> Self {
        Self { dim: 256 }
    }
}

impl HashedCodeEmbedder {
    pub fn embed_one(&self, code: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim.max(1)];
        let len = v.len();
        for tok in tokenize_code(code).tokens {
            v[fnv1a(tok.text.as_bytes()) as usize % len] += 1.0;
        }
        v
    }
}

impl CodeEmbedder for HashedCodeEmbedder {
    type Error = Error;

    fn embed_code(&self, inputs: &[&str]) -> Result<Vec<Vec<f64>>> {
        Ok(inputs.iter().map(|s| self.embed_one(s)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<Vec<f64>>);

    impl CodeEmbedder for Fixed {
        type Error = Error;
        fn embed_code(&self, _: &[&str]) -> Result<Vec<Vec<f64>>> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn identical_inputs() {
        let e = HashedCodeEmbedder::default();
        let code = "class A(Scene):\n    pass\n";
        assert_eq!(codebert_similarity(code, code, &e).unwrap(), 1.0);
    }

    #[test]
    fn orthogonal_and_negative() {
        let ortho = Fixed(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(codebert_similarity("a", "b", &ortho).unwrap(), 0.0);
        let neg = Fixed(vec![vec![1.0, 0.0], vec![-0.2, (1.0f64 - 0.04).sqrt()]]);
        assert!((cosine(&neg.0[0], &neg.0[1]).unwrap() + 0.2).abs() < 1e-12);
        assert_eq!(codebert_similarity("a", "b", &neg).unwrap(), 0.0);
    }

    #[test]
    fn contract_errors() {
        let bad = Fixed(vec![vec![1.0]]);
        assert!(codebert_similarity("a", "b", &bad).is_err());
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
        assert!(cosine(&[f64::NAN], &[1.0]).is_err());
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0x811c_9dc5);
        assert_eq!(fnv1a(b"a"), 0xe40c_292c);
        assert_eq!(fnv1a(b"foobar"), 0xbf9c_f968);
    }

    #[test]
    fn hashed_embedding_counts_tokens() {
        let e = HashedCodeEmbedder { dim: 64 };
        let v = e.embed_one("x = x");
        assert_eq!(v.iter().sum::<f64>(), 3.0);
        assert_eq!(v[fnv1a(b"x") as usize % 64], 2.0);
    }
}
