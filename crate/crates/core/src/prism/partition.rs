use std::cmp::Reverse;
use std::collections::BTreeMap;

use serde::Serialize;

use super::quant::{abs_row, product, quantize_rows};
use crate::error::Result;
use crate::spectral::KSlice;

/// Ordered vertex classes with their shared absolute-value signature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    classes: Vec<Vec<usize>>,
    signatures: Vec<Vec<i64>>,
}

impl Partition {
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    /// Quantized `|U_v|` shared by every vertex of each class.
    pub fn signatures(&self) -> &[Vec<i64>] {
        &self.signatures
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn n(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }

    pub fn is_discrete(&self) -> bool {
        self.classes.iter().all(|c| c.len() == 1)
    }

    /// Columns where the class signature is nonzero.
    pub fn support(&self, class: usize) -> Vec<usize> {
        self.signatures[class].iter().enumerate().filter(|(_, &x)| x != 0).map(|(j, _)| j).collect()
    }

    /// Class index of every vertex.
    pub fn class_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n()];
        for (c, members) in self.classes.iter().enumerate() {
            for &v in members {
                out[v] = c;
            }
        }
        out
    }
}

/// Groups vertices by an integer signature, classes in descending signature order.
pub(crate) fn partition_by(keys: &[Vec<i64>]) -> Partition {
    let mut groups: BTreeMap<Reverse<&Vec<i64>>, Vec<usize>> = BTreeMap::new();
    for (v, key) in keys.iter().enumerate() {
        groups.entry(Reverse(key)).or_default().push(v);
    }
    let (signatures, classes) = groups.into_iter().map(|(Reverse(k), vs)| (k.clone(), vs)).unzip();
    Partition { classes, signatures }
}

pub(crate) fn partition_quantized(q: &[Vec<i64>]) -> Partition {
    partition_by(&q.iter().map(|r| abs_row(r)).collect::<Vec<_>>())
}

/// Stage 1: classes of equal quantized `|U_v|`.
pub fn partition(uk: &KSlice, p: u32) -> Result<Partition> {
    Ok(partition_quantized(&quantize_rows(uk.vectors(), p)?))
}

/// Splits classes until, inside every class, all members see the same
/// multiset of products `q_v * q_u` over the class.
///
/// `signatures` of the result keep describing `|U_v|` restricted to the
/// refinement columns; the initial classes may come from a coarser key.
pub(crate) fn refine_quantized(start: &Partition, q: &[Vec<i64>]) -> Partition {
    let mut classes = start.classes.clone();
    let mut signatures = start.signatures.clone();
    loop {
        let mut changed = false;
        let mut next_classes = Vec::with_capacity(classes.len());
        let mut next_signatures = Vec::with_capacity(classes.len());
        for (class, sig) in classes.iter().zip(&signatures) {
            if class.len() == 1 {
                next_classes.push(class.clone());
                next_signatures.push(sig.clone());
                continue;
            }
            let mut groups: BTreeMap<Reverse<Vec<Vec<i128>>>, Vec<usize>> = BTreeMap::new();
            for &v in class {
                let mut key: Vec<Vec<i128>> = class.iter().map(|&u| product(&q[v], &q[u])).collect();
                key.sort_unstable();
                groups.entry(Reverse(key)).or_default().push(v);
            }
            changed |= groups.len() > 1;
            for members in groups.into_values() {
                next_classes.push(members);
                next_signatures.push(sig.clone());
            }
        }
        classes = next_classes;
        signatures = next_signatures;
        if !changed {
            return Partition { classes, signatures };
        }
    }
}

/// Stage 2: within-class spectral refinement to its fixed point.
pub fn refine(part: &Partition, uk: &KSlice, p: u32) -> Result<Partition> {
    Ok(refine_quantized(part, &quantize_rows(uk.vectors(), p)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prism::tests::eq1;
    use nalgebra::DMatrix;

    #[test]
    fn eq1_partition_has_two_classes() {
        let u = eq1();
        let part = partition(&u, 0).unwrap();
        assert_eq!(part.classes(), &[vec![0, 2], vec![1, 3]]);
        assert_eq!(part.signatures(), &[vec![1, 1, 2, 1], vec![1, 0, 1, 2]]);
        assert_eq!(part.support(1), vec![0, 2, 3]);
        assert_eq!(refine(&part, &u, 0).unwrap(), part);
    }

    #[test]
    fn identity_rows_are_singletons() {
        let u = KSlice::from_raw(DMatrix::identity(3, 3)).unwrap();
        let part = partition(&u, 8).unwrap();
        assert_eq!(part.len(), 3);
        assert!(part.is_discrete());
        assert_eq!(refine(&part, &u, 8).unwrap(), part);
    }

    #[test]
    fn refine_splits_unbalanced_class() {
        // All rows share |row| = (1, 1). Over the class, row 0 sees
        // {(1,1), (1,1), (1,-1), (-1,1)}, row 2 sees {(1,-1), (1,-1), (1,1), (-1,-1)}
        // and row 3 sees {(-1,1), (-1,1), (-1,-1), (1,1)}.
        let u = KSlice::from_raw(DMatrix::from_row_slice(
            4,
            2,
            &[1.0, 1.0, 1.0, 1.0, 1.0, -1.0, -1.0, 1.0],
        ))
        .unwrap();
        let part = partition(&u, 0).unwrap();
        assert_eq!(part.len(), 1);
        let refined = refine(&part, &u, 0).unwrap();
        assert_eq!(refined.classes().len(), 3);
        let mut sorted: Vec<Vec<usize>> = refined.classes().to_vec();
        sorted.sort();
        assert_eq!(sorted, vec![vec![0, 1], vec![2], vec![3]]);
        let q = quantize_rows(u.vectors(), 0).unwrap();
        // Oracle: every refined class is balanced.
        for class in refined.classes() {
            let key = |v: usize| {
                let mut k: Vec<_> = class.iter().map(|&w| product(&q[v], &q[w])).collect();
                k.sort();
                k
            };
            assert!(class.iter().all(|&v| key(v) == key(class[0])));
        }
    }
}
