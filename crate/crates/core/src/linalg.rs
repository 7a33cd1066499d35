//! Row-major dense kernels over `matrixmultiply`.

/// `c = a · bᵀ + beta·c` with `a: m×k`, `b: n×k`, `c: m×n`.
pub(crate) fn matmul_nt(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    debug_assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), 1, k as isize,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// `c = aᵀ · b + beta·c` with `a: k×m`, `b: k×n`, `c: m×n`.
pub(crate) fn matmul_tn(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    debug_assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0,
            a.as_ptr(), 1, m as isize,
            b.as_ptr(), n as isize, 1,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// `c = a · b + beta·c` with `a: m×k`, `b: k×n`, `c: m×n`.
pub(crate) fn matmul_nn(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), n as isize, 1,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

#[inline]
pub(crate) fn sum_squares(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_match_naive() {
        let (m, k, n) = (3, 4, 2);
        let a: alloc::vec::Vec<f64> = (0..m * k).map(|x| x as f64 * 0.5 - 1.0).collect();
        let bt: alloc::vec::Vec<f64> = (0..n * k).map(|x| libm::sin(x as f64)).collect(); // n×k
        let mut c = alloc::vec![1.0; m * n];
        matmul_nt(m, k, n, &a, &bt, 0.0, &mut c);
        for r in 0..m {
            for s in 0..n {
                let want: f64 = (0..k).map(|j| a[r * k + j] * bt[s * k + j]).sum();
                assert!((c[r * n + s] - want).abs() < 1e-12);
            }
        }
        // b = btᵀ as k×n
        let mut b = alloc::vec![0.0; k * n];
        for s in 0..n {
            for j in 0..k {
                b[j * n + s] = bt[s * k + j];
            }
        }
        let mut c2 = alloc::vec![0.0; m * n];
        matmul_nn(m, k, n, &a, &b, 0.0, &mut c2);
        assert!(c.iter().zip(&c2).all(|(x, y)| (x - y).abs() < 1e-12));
        // aᵀ as k×m, then matmul_tn recovers a·b
        let mut at = alloc::vec![0.0; k * m];
        for r in 0..m {
            for j in 0..k {
                at[j * m + r] = a[r * k + j];
            }
        }
        let mut c3 = alloc::vec![0.0; m * n];
        matmul_tn(m, k, n, &at, &b, 0.0, &mut c3);
        assert!(c.iter().zip(&c3).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}
