//! Exact Gaussian elimination over the rationals.

use num_traits::Zero;

use crate::scalar::Scalar;

/// Reduced row echelon form, in place. Returns the pivot column of each row
/// that carries one.
pub fn rref(rows: &mut Vec<Vec<Scalar>>) -> Vec<usize> {
    if rows.is_empty() {
        return vec![];
    }
    let ncols = rows[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(pr) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = rows[r][c].clone();
        for x in rows[r].iter_mut() {
            *x /= &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..ncols {
                    let t = &rows[r][j] * &f;
                    rows[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.retain(|row| row.iter().any(|x| !x.is_zero()));
    pivots
}

/// Basis of the kernel of the homogeneous system `rows * x = 0` in `ncols`
/// unknowns. Free variables are set to 1 one at a time.
pub fn kernel_basis(mut rows: Vec<Vec<Scalar>>, ncols: usize) -> Vec<Vec<Scalar>> {
    for row in &rows {
        assert_eq!(row.len(), ncols);
    }
    let pivots = rref(&mut rows);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::new();
    for &f in &free {
        let mut v = vec![Scalar::zero(); ncols];
        v[f] = Scalar::from_integer(1.into());
        for (ri, &pc) in pivots.iter().enumerate() {
            v[pc] = -rows[ri][f].clone();
        }
        basis.push(v);
    }
    basis
}

/// Rank of the row span.
pub fn rank(mut rows: Vec<Vec<Scalar>>) -> usize {
    rref(&mut rows).len()
}

/// Is `v` in the row span of `rows`?
pub fn in_span(rows: &[Vec<Scalar>], v: &[Scalar]) -> bool {
    let base = rank(rows.to_vec());
    let mut ext: Vec<Vec<Scalar>> = rows.to_vec();
    ext.push(v.to_vec());
    rank(ext) == base
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::s_int;

    #[test]
    fn kernel_of_single_equation() {
        // x + y - z = 0 in 3 unknowns: kernel dim 2
        let rows = vec![vec![s_int(1), s_int(1), s_int(-1)]];
        let basis = kernel_basis(rows, 3);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert_eq!(&v[0] + &v[1] - &v[2], s_int(0));
        }
    }

    #[test]
    fn span_membership() {
        let rows = vec![vec![s_int(1), s_int(0)], vec![s_int(0), s_int(1)]];
        assert!(in_span(&rows, &[s_int(3), s_int(-7)]));
        let rows2 = vec![vec![s_int(1), s_int(1)]];
        assert!(!in_span(&rows2, &[s_int(1), s_int(0)]));
    }
}
