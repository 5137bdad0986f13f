use serde::Serialize;

use super::partition::Partition;
use super::quant::quantize_rows;
use crate::error::{Error, Result};
use crate::gf2::{self, BitMatrix, BitVector, EchelonBuilder};
use crate::spectral::KSlice;

/// Sign-pattern data of one class: `A = anchor + W`, `W = ker(parity_check)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSignClass {
    pub members: Vec<usize>,
    /// Columns where the class has nonzero entries.
    pub support: Vec<usize>,
    pub anchor: BitVector,
    /// Echelon basis of the difference space `W`.
    pub differences: BitMatrix,
    pub parity_check: BitMatrix,
    pub rhs: BitVector,
    /// How many parity-check rows were independent of the rows before them.
    pub kept_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignSolution {
    /// Bit `j` set means column `j` is negated.
    pub sign: BitVector,
    /// Sign automorphisms `ker(E)`, as a reduced echelon basis.
    pub kernel: BitMatrix,
    pub classes: Vec<AffineSignClass>,
    /// Rows of `E` (independent parity checks).
    pub appended_rows: usize,
    /// Independent relative-sign relations, `sum dim W`.
    pub relation_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SolveStats {
    pub appended_rows: usize,
    pub relation_rows: usize,
    pub kernel_dim: usize,
}

impl SignSolution {
    pub fn stats(&self) -> SolveStats {
        SolveStats {
            appended_rows: self.appended_rows,
            relation_rows: self.relation_rows,
            kernel_dim: self.kernel.nrows(),
        }
    }

    pub fn flips(&self) -> Vec<bool> {
        self.sign.to_bools()
    }
}

fn sign_bits(row: &[i64], support: &[usize]) -> BitVector {
    BitVector::from_bools(&support.iter().map(|&j| row[j] < 0).collect::<Vec<_>>())
}

pub(crate) fn solve_quantized(part: &Partition, q: &[Vec<i64>], k: usize) -> Result<SignSolution> {
    let n = q.len();
    let mut e = BitMatrix::new(k);
    let mut f = Vec::new();
    let mut builder = EchelonBuilder::new(k);
    let mut classes = Vec::with_capacity(part.len());
    let mut relation_rows = 0;

    for members in part.classes() {
        let support: Vec<usize> = (0..k).filter(|&j| q[members[0]][j] != 0).collect();
        if support.is_empty() {
            continue;
        }
        let anchor_vertex = *members.iter().min_by(|&&a, &&b| q[a].cmp(&q[b]).then(a.cmp(&b))).unwrap();
        let anchor = sign_bits(&q[anchor_vertex], &support);
        let diffs = members.iter().map(|&v| sign_bits(&q[v], &support).xor(&anchor)).collect();
        let differences = gf2::row_reduce(&BitMatrix::from_rows(support.len(), diffs)?).matrix;
        relation_rows += differences.nrows();
        let parity_check = gf2::parity_check(&differences);
        let rhs = parity_check.mul_vec(&anchor)?;

        let mut kept_rows = 0;
        for (t, b) in parity_check.rows().iter().zip(rhs.to_bools()) {
            let row = t.embed(&support, k);
            if builder.insert(&row) {
                e.push_row(row)?;
                f.push(b);
                kept_rows += 1;
            }
        }
        classes.push(AffineSignClass {
            members: members.clone(),
            support,
            anchor,
            differences,
            parity_check,
            rhs,
            kept_rows,
        });
    }

    let bound = n - part.len();
    if relation_rows > bound {
        return Err(Error::Internal(format!(
            "{relation_rows} sign relations exceed the n - L = {bound} bound"
        )));
    }

    let solution = gf2::solve(&e, &BitVector::from_bools(&f))?;
    let sign = gf2::lexmin_coset(&solution.particular, &solution.kernel)?;
    let kernel = gf2::row_reduce(&solution.kernel).matrix;
    Ok(SignSolution { sign, kernel, classes, appended_rows: e.nrows(), relation_rows })
}

/// Stage 3: the canonical sign vector and the sign-automorphism group.
pub fn solve_signs(part: &Partition, uk: &KSlice, p: u32) -> Result<SignSolution> {
    solve_quantized(part, &quantize_rows(uk.vectors(), p)?, uk.k())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prism::partition::{partition, refine};
    use crate::prism::tests::eq1;

    #[test]
    fn eq1_flips_every_column() {
        let u = eq1();
        let part = refine(&partition(&u, 0).unwrap(), &u, 0).unwrap();
        let sol = solve_signs(&part, &u, 0).unwrap();
        assert_eq!(sol.sign.to_string(), "1111");
        assert_eq!(sol.kernel.nrows(), 0);
        assert_eq!(sol.relation_rows, 2);
        // Every column is pinned, so E has full rank 4 even though n - L = 2.
        assert_eq!(sol.appended_rows, 4);
    }

    #[test]
    fn positive_singletons_need_no_flip() {
        let u = KSlice::from_raw(nalgebra::DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0])).unwrap();
        let part = partition(&u, 0).unwrap();
        let sol = solve_signs(&part, &u, 0).unwrap();
        assert!(sol.sign.is_zero());
        assert_eq!(sol.relation_rows, 0);
    }

    #[test]
    fn symmetric_columns_leave_a_kernel() {
        // Column 1 is a sign automorphism: negating it swaps rows 0 and 1.
        let u = KSlice::from_raw(nalgebra::DMatrix::from_row_slice(
            3,
            2,
            &[-1.0, 1.0, -1.0, -1.0, 2.0, 0.0],
        ))
        .unwrap();
        let part = refine(&partition(&u, 0).unwrap(), &u, 0).unwrap();
        let sol = solve_signs(&part, &u, 0).unwrap();
        assert_eq!(sol.kernel.nrows(), 1);
        assert_eq!(sol.kernel.row(0).to_string(), "01");
        assert_eq!(sol.sign.to_string(), "00");
    }
}
