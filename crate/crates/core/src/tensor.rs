//! Index arithmetic over dense rank-M tensors whose axes all have size N.
//!
//! Axis 0 is the most significant digit of the flat index.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub(crate) fn checked_dim(n: usize, m: usize) -> Option<usize> {
    let mut d: usize = 1;
    for _ in 0..m {
        d = d.checked_mul(n)?;
    }
    Some(d)
}

pub(crate) fn strides(n: usize, m: usize) -> Vec<usize> {
    let mut s = vec![1usize; m];
    for p in (0..m.saturating_sub(1)).rev() {
        s[p] = s[p + 1] * n;
    }
    s
}

#[inline]
pub(crate) fn digit(index: usize, stride: usize, n: usize) -> usize {
    (index / stride) % n
}

/// `out[.., a, ..] = sum_b M[a, b] data[.., b, ..]` along the axis with the given
/// stride. `matrix` is row-major `n x n`.
pub(crate) fn apply_axis(data: &[Complex64], n: usize, stride: usize, matrix: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(matrix.len(), n * n);
    let block = stride * n;
    let mut out = vec![ZERO; data.len()];
    let mut col = vec![ZERO; n];
    for hi in (0..data.len()).step_by(block) {
        for lo in 0..stride {
            let base = hi + lo;
            for (b, c) in col.iter_mut().enumerate() {
                *c = data[base + b * stride];
            }
            for a in 0..n {
                let row = &matrix[a * n..(a + 1) * n];
                let mut acc = ZERO;
                for (m, c) in row.iter().zip(&col) {
                    acc += m * c;
                }
                out[base + a * stride] = acc;
            }
        }
    }
    out
}

/// Flat offsets of every ket whose digits on the target axes are all zero,
/// in ascending order.
pub(crate) fn bases(len: usize, n: usize, target_strides: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    let mut st = 1;
    while st < len {
        if !target_strides.contains(&st) {
            let prev = core::mem::take(&mut out);
            out.reserve(prev.len() * n);
            for d in 0..n {
                out.extend(prev.iter().map(|b| b + d * st));
            }
        }
        st *= n;
    }
    out
}

/// Flat offset of each joint sub-index on the target axes (first stride is
/// the most significant digit).
pub(crate) fn sub_offsets(n: usize, target_strides: &[usize]) -> Vec<usize> {
    let k = target_strides.len();
    let sub = checked_dim(n, k).expect("block dimension overflow");
    (0..sub)
        .map(|s| {
            let mut rem = s;
            let mut off = 0;
            for t in (0..k).rev() {
                off += (rem % n) * target_strides[t];
                rem /= n;
            }
            off
        })
        .collect()
}

/// Apply a dense `N^k x N^k` row-major matrix on the axes with the given
/// strides (first stride is the most significant sub-index digit).
pub(crate) fn apply_block(data: &[Complex64], n: usize, target_strides: &[usize], matrix: &[Complex64]) -> Vec<Complex64> {
    let offsets = sub_offsets(n, target_strides);
    let sub = offsets.len();
    debug_assert_eq!(matrix.len(), sub * sub);
    let mut out = vec![ZERO; data.len()];
    let mut gathered = vec![ZERO; sub];
    for base in bases(data.len(), n, target_strides) {
        for (g, off) in gathered.iter_mut().zip(&offsets) {
            *g = data[base + off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let row = &matrix[r * sub..(r + 1) * sub];
            let mut acc = ZERO;
            for (m, g) in row.iter().zip(&gathered) {
                acc += m * g;
            }
            out[base + off] = acc;
        }
    }
    out
}

/// Move every amplitude to the basis ket obtained by rewriting the digits on
/// the target axes with `f`, which must be a bijection on `0..N^k`.
pub(crate) fn permute_digits<F>(data: &[Complex64], n: usize, target_strides: &[usize], mut f: F) -> Result<Vec<Complex64>>
where
    F: FnMut(&mut [usize]),
{
    let k = target_strides.len();
    let offsets = sub_offsets(n, target_strides);
    let sub = offsets.len();
    let mut dest = vec![0usize; sub];
    let mut hit = vec![false; sub];
    let mut digits = vec![0usize; k];
    for (s, slot) in dest.iter_mut().enumerate() {
        let mut rem = s;
        for d in digits.iter_mut().rev() {
            *d = rem % n;
            rem /= n;
        }
        f(&mut digits);
        let mut t = 0;
        for &d in &digits {
            if d >= n {
                return Err(Error::ShapeMismatch("digit map left the grid"));
            }
            t = t * n + d;
        }
        if hit[t] {
            return Err(Error::ShapeMismatch("digit map is not a bijection"));
        }
        hit[t] = true;
        *slot = offsets[t];
    }
    let mut out = vec![ZERO; data.len()];
    for base in bases(data.len(), n, target_strides) {
        for (src, dst) in offsets.iter().zip(&dest) {
            out[base + dst] = data[base + src];
        }
    }
    Ok(out)
}

/// `out[i] = data[j(i)]` where the digits of `i` in the new axis order index
/// the old axes with strides `old`.
pub(crate) fn gather_axes(data: &[Complex64], n: usize, old: &[usize]) -> Vec<Complex64> {
    let m = old.len();
    let mut out = Vec::with_capacity(data.len());
    let mut digits = vec![0usize; m];
    let mut j = 0usize;
    for _ in 0..data.len() {
        out.push(data[j]);
        let mut p = m;
        while p > 0 {
            p -= 1;
            digits[p] += 1;
            j += old[p];
            if digits[p] < n {
                break;
            }
            digits[p] = 0;
            j -= n * old[p];
        }
    }
    out
}

/// Probability of each value of one axis.
pub(crate) fn axis_marginal(data: &[Complex64], n: usize, stride: usize) -> Vec<f64> {
    let mut p = vec![0.0; n];
    for base in bases(data.len(), n, &[stride]) {
        for (d, slot) in p.iter_mut().enumerate() {
            *slot += data[base + d * stride].norm_sqr();
        }
    }
    p
}

pub(crate) fn norm_sqr(data: &[Complex64]) -> f64 {
    data.iter().map(|a| a.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides_are_row_major() {
        assert_eq!(strides(4, 3), [16, 4, 1]);
        assert_eq!(strides(3, 1), [1]);
        assert!(strides(3, 0).is_empty());
    }

    #[test]
    fn block_matches_axis_for_single_mode() {
        let n = 3;
        let data: Vec<Complex64> = (0..27).map(|i| Complex64::new(i as f64, -(i as f64) / 2.0)).collect();
        let m: Vec<Complex64> = (0..9).map(|i| Complex64::new((i * i) as f64, 1.0)).collect();
        for st in [9, 3, 1] {
            let a = apply_axis(&data, n, st, &m);
            let b = apply_block(&data, n, &[st], &m);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn non_bijection_is_caught() {
        let data = vec![Complex64::new(1.0, 0.0); 4];
        assert!(permute_digits(&data, 2, &[2, 1], |d| d[0] = 0).is_err());
    }

    #[test]
    fn gather_matches_naive_transpose() {
        let n = 3;
        let data: Vec<Complex64> = (0..27).map(|i| Complex64::new(i as f64, 0.0)).collect();
        // new order (axis2, axis0, axis1) of the old axes with strides (9, 3, 1)
        let out = gather_axes(&data, n, &[1, 9, 3]);
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    assert_eq!(out[c * 9 + a * 3 + b], data[a * 9 + b * 3 + c]);
                }
            }
        }
        assert_eq!(bases(27, 3, &[3]), [0, 1, 2, 9, 10, 11, 18, 19, 20]);
    }
}
