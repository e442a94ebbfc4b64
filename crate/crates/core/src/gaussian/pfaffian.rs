//! Pfaffians of real antisymmetric matrices.

use nalgebra::DMatrix;

/// Pfaffian via Parlett-Reid tridiagonalization with partial pivoting.
pub fn pfaffian(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "pfaffian needs a square matrix");
    if n % 2 == 1 {
        return 0.0;
    }
    let mut a = m.clone();
    let mut pf = 1.0;
    for k in (0..n.saturating_sub(1)).step_by(2) {
        let mut kp = k + 1;
        let mut best = a[(k + 1, k)].abs();
        for i in k + 2..n {
            if a[(i, k)].abs() > best {
                best = a[(i, k)].abs();
                kp = i;
            }
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let pivot = a[(k, k + 1)];
        if pivot == 0.0 {
            return 0.0;
        }
        pf *= pivot;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|j| a[(k, j)] / pivot).collect();
            let col: Vec<f64> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
    }
    pf
}

/// Pfaffian by expansion along the first row. Exponential cost; test oracle only.
pub fn pfaffian_expansion(m: &DMatrix<f64>) -> f64 {
    fn rec(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
        if idx.is_empty() {
            return 1.0;
        }
        let first = idx[0];
        let mut total = 0.0;
        for j in 1..idx.len() {
            let rest: Vec<usize> = idx[1..].iter().copied().filter(|&x| x != idx[j]).collect();
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            total += sign * m[(first, idx[j])] * rec(m, &rest);
        }
        total
    }
    let n = m.nrows();
    if n % 2 == 1 {
        return 0.0;
    }
    rec(m, &(0..n).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_antisym(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let x: f64 = rng.random_range(-1.0..1.0);
                a[(i, j)] = x;
                a[(j, i)] = -x;
            }
        }
        a
    }

    #[test]
    fn two_by_two() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(pfaffian(&m), 1.0);
    }

    #[test]
    fn matches_expansion_and_det() {
        let mut rng = crate::rng::stream_rng(11, 0);
        for n in (2..=12).step_by(2) {
            for _ in 0..10 {
                let a = random_antisym(n, &mut rng);
                let pf = pfaffian(&a);
                let det = a.clone().determinant();
                assert!((pf * pf - det).abs() <= 1e-8 * det.abs().max(1.0), "n={n}");
                if n <= 8 {
                    assert!((pf - pfaffian_expansion(&a)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn odd_and_empty() {
        assert_eq!(pfaffian(&DMatrix::zeros(3, 3)), 0.0);
        assert_eq!(pfaffian(&DMatrix::zeros(0, 0)), 1.0);
    }
}
