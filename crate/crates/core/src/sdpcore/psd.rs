//! Exact positive semidefiniteness.

use std::cmp::Ordering;

use num_traits::Zero;

use crate::dyadic::DyadicValue;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Ring operations the PSD recursion needs. The recursion is fraction free,
/// so any ordered ring with exact arithmetic works.
pub trait PsdScalar: Clone + PartialEq {
    fn sign(&self) -> Ordering;
    fn times(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
}

impl PsdScalar for Rational {
    fn sign(&self) -> Ordering {
        self.cmp(&<Rational as Zero>::zero())
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
}

impl PsdScalar for DyadicValue {
    fn sign(&self) -> Ordering {
        self.signum()
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
}

impl PsdScalar for i128 {
    fn sign(&self) -> Ordering {
        self.cmp(&0)
    }
    fn times(&self, other: &Self) -> Self {
        self.checked_mul(*other).expect("i128 overflow in PSD test")
    }
    fn minus(&self, other: &Self) -> Self {
        self.checked_sub(*other).expect("i128 overflow in PSD test")
    }
}

fn check_square_symmetric<T: PsdScalar>(m: &[Vec<T>]) -> Result<()> {
    let n = m.len();
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidArgument(format!("row {i} has length {}, expected {n}", row.len())));
        }
        for j in 0..i {
            if m[i][j] != m[j][i] {
                return Err(Error::InvalidArgument(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Exact PSD test. Eliminates the first row and column: a negative pivot
/// fails, a zero pivot requires a zero row, a positive pivot `d` continues on
/// `d C - b b^T`, a positive multiple of the Schur complement.
pub fn psd_exact<T: PsdScalar>(m: &[Vec<T>]) -> Result<bool> {
    check_square_symmetric(m)?;
    let mut cur: Vec<Vec<T>> = m.to_vec();
    while !cur.is_empty() {
        let d = cur[0][0].clone();
        let rest = cur.len() - 1;
        match d.sign() {
            Ordering::Less => return Ok(false),
            Ordering::Equal => {
                if cur[0].iter().any(|x| x.sign() != Ordering::Equal) {
                    return Ok(false);
                }
                cur = cur[1..].iter().map(|row| row[1..].to_vec()).collect();
            }
            Ordering::Greater => {
                let mut next = Vec::with_capacity(rest);
                for i in 1..=rest {
                    let mut row = Vec::with_capacity(rest);
                    for j in 1..=rest {
                        row.push(d.times(&cur[i][j]).minus(&cur[i][0].times(&cur[0][j])));
                    }
                    next.push(row);
                }
                cur = next;
            }
        }
    }
    Ok(true)
}

fn det_i128(m: &[Vec<i128>]) -> i128 {
    // Laplace expansion along the first row; only used on tiny matrices.
    match m.len() {
        0 => 1,
        1 => m[0][0],
        n => {
            let mut acc = 0i128;
            for c in 0..n {
                if m[0][c] == 0 {
                    continue;
                }
                let minor: Vec<Vec<i128>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &v)| v).collect())
                    .collect();
                let term = m[0][c] * det_i128(&minor);
                acc += if c % 2 == 0 { term } else { -term };
            }
            acc
        }
    }
}

/// Reference criterion: a symmetric matrix is PSD iff every principal minor
/// is nonnegative. Exponential in the dimension.
pub fn psd_by_principal_minors(m: &[Vec<i128>]) -> bool {
    let n = m.len();
    assert!(n < 20, "principal-minor test is exponential");
    (1u32..(1 << n)).all(|mask| {
        let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let sub: Vec<Vec<i128>> = idx.iter().map(|&i| idx.iter().map(|&j| m[i][j]).collect()).collect();
        det_i128(&sub) >= 0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    fn r(m: &[&[i64]]) -> Vec<Vec<Rational>> {
        m.iter().map(|row| row.iter().map(|&v| int(v)).collect()).collect()
    }

    #[test]
    fn small_examples() {
        assert!(psd_exact(&r(&[&[1, 1], &[1, 1]])).unwrap());
        assert!(!psd_exact(&r(&[&[0, 1], &[1, 0]])).unwrap());
        assert!(psd_exact(&r(&[&[2, 1], &[1, 2]])).unwrap());
        assert!(psd_exact::<Rational>(&[]).unwrap());
        assert!(!psd_exact(&r(&[&[-1]])).unwrap());
        assert!(psd_exact(&r(&[&[0, 0], &[0, 3]])).unwrap());
    }

    #[test]
    fn asymmetric_is_an_error() {
        assert!(psd_exact(&r(&[&[1, 2], &[0, 1]])).is_err());
        assert!(psd_exact(&r(&[&[1, 2]])).is_err());
    }

    #[test]
    fn dyadic_gadget_block() {
        let huge = DyadicValue::pow2(1000);
        let m = vec![
            vec![huge.clone(), DyadicValue::pow2(500)],
            vec![DyadicValue::pow2(500), DyadicValue::one()],
        ];
        assert!(psd_exact(&m).unwrap());
        let short = &huge - &DyadicValue::one();
        let m2 = vec![
            vec![short, DyadicValue::pow2(500)],
            vec![DyadicValue::pow2(500), DyadicValue::one()],
        ];
        assert!(!psd_exact(&m2).unwrap());
    }

    #[test]
    fn rational_schur_step() {
        let m = vec![vec![rat(1, 2), int(1)], vec![int(1), int(2)]];
        assert!(psd_exact(&m).unwrap());
        let m = vec![vec![rat(1, 2), int(1)], vec![int(1), rat(3, 2)]];
        assert!(!psd_exact(&m).unwrap());
    }

    fn sym3() -> impl Strategy<Value = Vec<Vec<i128>>> {
        proptest::collection::vec(-3i128..=3, 6).prop_map(|v| {
            vec![vec![v[0], v[1], v[2]], vec![v[1], v[3], v[4]], vec![v[2], v[4], v[5]]]
        })
    }

    proptest! {
        #[test]
        fn agrees_with_minors(m in sym3()) {
            prop_assert_eq!(psd_exact(&m).unwrap(), psd_by_principal_minors(&m));
        }

        #[test]
        fn gram_matrices_are_psd(v in proptest::collection::vec(-5i128..=5, 6)) {
            // G = V V^T for a 3x2 V
            let rows = [[v[0], v[1]], [v[2], v[3]], [v[4], v[5]]];
            let g: Vec<Vec<Rational>> = (0..3)
                .map(|i| (0..3).map(|j| Rational::from_integer((rows[i][0] * rows[j][0] + rows[i][1] * rows[j][1]).into())).collect())
                .collect();
            prop_assert!(psd_exact(&g).unwrap());
        }
    }
}
