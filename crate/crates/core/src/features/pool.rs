use serde::{Deserialize, Serialize};

use super::FeatureError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Average,
    Max,
}

impl std::fmt::Display for Pooling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pooling::Average => "average",
            Pooling::Max => "max",
        })
    }
}

/// Reduces a day's tweet vectors to one vector, component-wise.
pub fn pool_embeddings<V: AsRef<[f32]>>(vectors: &[V], mode: Pooling) -> Result<Vec<f64>, FeatureError> {
    let first = vectors
        .first()
        .ok_or_else(|| FeatureError::Contract("cannot pool an empty set of vectors".into()))?
        .as_ref();
    let dim = first.len();
    if dim == 0 {
        return Err(FeatureError::Contract("vectors must have dimension >= 1".into()));
    }
    if let Some(i) = vectors.iter().position(|v| v.as_ref().len() != dim) {
        return Err(FeatureError::Contract(format!(
            "vector {i} has dimension {}, expected {dim}",
            vectors[i].as_ref().len()
        )));
    }
    let base: Vec<f64> = first.iter().map(|&x| f64::from(x)).collect();
    let mut acc = match mode {
        // offsets from the first vector, so identical inputs average exactly
        Pooling::Average => vec![0.0; dim],
        Pooling::Max => base.clone(),
    };
    for v in &vectors[1..] {
        for ((a, b), &x) in acc.iter_mut().zip(&base).zip(v.as_ref()) {
            let x = f64::from(x);
            match mode {
                Pooling::Average => *a += x - b,
                Pooling::Max => *a = a.max(x),
            }
        }
    }
    if mode == Pooling::Average {
        let n = vectors.len() as f64;
        for (a, b) in acc.iter_mut().zip(&base) {
            *a = b + *a / n;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn average_example() {
        let out = pool_embeddings(&[vec![1.0f32, 3.0], vec![3.0, 5.0]], Pooling::Average).unwrap();
        assert_eq!(out, vec![2.0, 4.0]);
    }

    #[test]
    fn max_example() {
        let out = pool_embeddings(&[vec![1.0f32, 0.0], vec![0.0, 1.0]], Pooling::Max).unwrap();
        assert_eq!(out, vec![1.0, 1.0]);
    }

    #[test]
    fn single_vector_identity() {
        let v = vec![0.25f32, -7.5, 3.0];
        for mode in [Pooling::Average, Pooling::Max] {
            let out = pool_embeddings(std::slice::from_ref(&v), mode).unwrap();
            assert_eq!(out, vec![0.25, -7.5, 3.0]);
        }
    }

    #[test]
    fn contract_errors() {
        let empty: [Vec<f32>; 0] = [];
        assert!(pool_embeddings(&empty, Pooling::Max).is_err());
        assert!(pool_embeddings(&[vec![1.0f32], vec![1.0, 2.0]], Pooling::Average).is_err());
    }

    fn vectors(dim: usize) -> impl Strategy<Value = Vec<Vec<f32>>> {
        prop::collection::vec(prop::collection::vec(-1e3f32..1e3, dim), 1..12)
    }

    proptest! {
        #[test]
        fn average_within_bounds(vs in (1usize..6).prop_flat_map(vectors)) {
            let avg = pool_embeddings(&vs, Pooling::Average).unwrap();
            for (j, a) in avg.iter().enumerate() {
                let lo = vs.iter().map(|v| f64::from(v[j])).fold(f64::INFINITY, f64::min);
                let hi = vs.iter().map(|v| f64::from(v[j])).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(*a >= lo - 1e-9 * lo.abs().max(1.0));
                prop_assert!(*a <= hi + 1e-9 * hi.abs().max(1.0));
            }
        }

        #[test]
        fn max_is_monotone(vs in (1usize..6).prop_flat_map(vectors), extra in prop::collection::vec(-1e3f32..1e3, 6)) {
            let before = pool_embeddings(&vs, Pooling::Max).unwrap();
            let mut more = vs.clone();
            more.push(extra[..vs[0].len()].to_vec());
            let after = pool_embeddings(&more, Pooling::Max).unwrap();
            for (b, a) in before.iter().zip(&after) {
                prop_assert!(a >= b);
            }
        }

        #[test]
        fn copies_pool_to_self(v in prop::collection::vec(-1e3f32..1e3, 1..8), k in 1usize..10) {
            let copies = vec![v.clone(); k];
            let want: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
            prop_assert_eq!(pool_embeddings(&copies, Pooling::Max).unwrap(), want.clone());
            prop_assert_eq!(pool_embeddings(&copies, Pooling::Average).unwrap(), want);
        }
    }
}
