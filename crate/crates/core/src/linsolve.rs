//! Exact linear solves by fraction-free (Bareiss) elimination.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::rational::Rational;

/// Solves `a x = b` exactly. Returns `None` when `a` is singular.
///
/// Rows are scaled to integers first; elimination then stays in the
/// integers with exact Bareiss divisions. Pivots are the first nonzero
/// entry in the column, so the result does not depend on magnitudes.
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    assert_eq!(b.len(), n, "right-hand side length");
    let mut m: Vec<Vec<BigInt>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            assert_eq!(row.len(), n, "matrix must be square");
            let scale = row
                .iter()
                .chain(std::iter::once(rhs))
                .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
            row.iter()
                .chain(std::iter::once(rhs))
                .map(|r| (r * Rational::from_integer(scale.clone())).to_integer())
                .collect()
        })
        .collect();

    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot = (k..n).find(|&r| !m[r][k].is_zero())?;
        m.swap(k, pivot);
        for i in k + 1..n {
            for j in k + 1..=n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                debug_assert!((&v % &prev).is_zero());
                m[i][j] = v / &prev;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }

    let mut x = vec![Rational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = Rational::from_integer(m[i][n].clone());
        for j in i + 1..n {
            acc -= Rational::from_integer(m[i][j].clone()) * &x[j];
        }
        x[i] = acc / Rational::from_integer(m[i][i].clone());
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn two_by_two() {
        // x - y/2 = 0, y = 1/2
        let a = vec![vec![int(1), rat(-1, 2)], vec![int(0), int(1)]];
        let x = solve(&a, &[int(0), rat(1, 2)]).unwrap();
        assert_eq!(x, vec![rat(1, 4), rat(1, 2)]);
    }

    #[test]
    fn needs_row_swap() {
        let a = vec![vec![int(0), int(1)], vec![int(2), int(0)]];
        let x = solve(&a, &[int(3), int(4)]).unwrap();
        assert_eq!(x, vec![int(2), int(3)]);
    }

    #[test]
    fn singular() {
        let a = vec![vec![int(1), int(1)], vec![int(2), int(2)]];
        assert!(solve(&a, &[int(1), int(2)]).is_none());
    }

    #[test]
    fn empty_system() {
        assert_eq!(solve(&[], &[]), Some(vec![]));
    }

    #[test]
    fn three_by_three_against_substitution() {
        let a = vec![
            vec![int(2), int(1), int(-1)],
            vec![int(-3), int(-1), int(2)],
            vec![int(-2), int(1), int(2)],
        ];
        let b = [int(8), int(-11), int(-3)];
        let x = solve(&a, &b).unwrap();
        assert_eq!(x, vec![int(2), int(3), int(-1)]);
        for (row, rhs) in a.iter().zip(&b) {
            let lhs: Rational = row.iter().zip(&x).map(|(c, v)| c * v).sum();
            assert_eq!(&lhs, rhs);
        }
    }
}
