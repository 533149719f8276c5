//! Small dense f64 helpers shared by the sampled checks and the pointwise
//! (numeric-only) verification path.

pub(crate) type Mat = Vec<Vec<f64>>;

pub(crate) fn zeros(n: usize, m: usize) -> Mat {
    vec![vec![0.0; m]; n]
}

pub(crate) fn identity(n: usize) -> Mat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub(crate) fn mat_add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

pub(crate) fn mat_sub(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect()
}

pub(crate) fn mat_scale(a: &Mat, s: f64) -> Mat {
    a.iter()
        .map(|r| r.iter().map(|x| x * s).collect())
        .collect()
}

pub(crate) fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut out = zeros(n, m);
    for i in 0..n {
        for p in 0..k {
            let f = a[i][p];
            if f == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += f * b[p][j];
            }
        }
    }
    out
}

pub(crate) fn mat_vec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub(crate) fn transpose(a: &Mat) -> Mat {
    let n = a.len();
    let m = a[0].len();
    let mut out = zeros(m, n);
    for i in 0..n {
        for j in 0..m {
            out[j][i] = a[i][j];
        }
    }
    out
}

pub(crate) fn one_norm(a: &Mat) -> f64 {
    let m = a[0].len();
    (0..m)
        .map(|j| a.iter().map(|r| r[j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Determinant via LU with partial pivoting.
pub(crate) fn det(a: &Mat) -> f64 {
    let n = a.len();
    let mut m: Mat = a.to_vec();
    let mut d = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| m[p][col].abs().partial_cmp(&m[q][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            d = -d;
        }
        d *= m[col][col];
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            for c in col..n {
                m[row][c] -= f * m[col][c];
            }
        }
    }
    d
}

/// Determinant of the leading k×k submatrix.
pub(crate) fn leading_minor(g: &Mat, k: usize) -> f64 {
    let sub: Mat = (0..k).map(|i| g[i][..k].to_vec()).collect();
    det(&sub)
}

/// Inverse via Gauss-Jordan with partial pivoting; `None` if singular.
pub(crate) fn inverse(a: &Mat) -> Option<Mat> {
    let n = a.len();
    let mut m: Mat = a.to_vec();
    let mut inv = identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| m[p][col].abs().partial_cmp(&m[q][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(pivot, col);
        inv.swap(pivot, col);
        let d = m[col][col];
        for c in 0..n {
            m[col][c] /= d;
            inv[col][c] /= d;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row][col];
            if f == 0.0 {
                continue;
            }
            for c in 0..n {
                m[row][c] -= f * m[col][c];
                inv[row][c] -= f * inv[col][c];
            }
        }
    }
    Some(inv)
}

/// Matrix exponential by scaling-and-squaring with a Taylor core. Matrices
/// here are small (≤ 16×16 for the block-augmented derivatives), so a plain
/// Taylor series after scaling to norm ≤ 1/2 reaches machine precision.
pub(crate) fn expm(a: &Mat) -> Mat {
    let norm = one_norm(a);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = mat_scale(a, 0.5f64.powi(s as i32));
    let mut term = identity(a.len());
    let mut sum = identity(a.len());
    for k in 1..=30 {
        term = mat_scale(&mat_mul(&term, &scaled), 1.0 / k as f64);
        sum = mat_add(&sum, &term);
        if one_norm(&term) < 1e-18 * one_norm(&sum) {
            break;
        }
    }
    let mut out = sum;
    for _ in 0..s {
        out = mat_mul(&out, &out);
    }
    out
}

/// `exp(M)` together with its directional (Fréchet) derivative `L(M, E)`,
/// read off the top-right block of `exp([[M, E], [0, M]])`.
pub(crate) fn expm_frechet(m: &Mat, e: &Mat) -> (Mat, Mat) {
    let n = m.len();
    let mut big = zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            big[i][j] = m[i][j];
            big[n + i][n + j] = m[i][j];
            big[i][n + j] = e[i][j];
        }
    }
    let be = expm(&big);
    let mut em = zeros(n, n);
    let mut le = zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            em[i][j] = be[i][j];
            le[i][j] = be[i][n + j];
        }
    }
    (em, le)
}

/// Second-order directional data: the top-right block of the 3×3 block
/// matrix `exp([[M, A, 0], [0, M, B], [0, 0, M]])` equals
/// `G(A,B) = Σ_n 1/n! Σ_{p+q+r=n-2} M^p A M^q B M^r`; the full second
/// derivative is `D²exp(M)[A,B] = G(A,B) + G(B,A)`.
pub(crate) fn expm_second_block(m: &Mat, a: &Mat, b: &Mat) -> Mat {
    let n = m.len();
    let mut big = zeros(3 * n, 3 * n);
    for i in 0..n {
        for j in 0..n {
            big[i][j] = m[i][j];
            big[n + i][n + j] = m[i][j];
            big[2 * n + i][2 * n + j] = m[i][j];
            big[i][n + j] = a[i][j];
            big[n + i][2 * n + j] = b[i][j];
        }
    }
    let be = expm(&big);
    let mut g = zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[i][j] = be[i][2 * n + j];
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_hyperbolic_generator() {
        // M = [[0, -t], [-t, 0]] has exp = [[cosh t, -sinh t], [-sinh t, cosh t]]
        let t: f64 = 0.7;
        let m = vec![vec![0.0, -t], vec![-t, 0.0]];
        let e = expm(&m);
        assert!((e[0][0] - t.cosh()).abs() < 1e-14);
        assert!((e[0][1] + t.sinh()).abs() < 1e-14);
        assert!((e[1][0] + t.sinh()).abs() < 1e-14);
        assert!((e[1][1] - t.cosh()).abs() < 1e-14);
    }

    #[test]
    fn frechet_matches_finite_differences() {
        let m = vec![vec![0.1, 0.3], vec![-0.2, 0.05]];
        let e = vec![vec![0.4, -0.1], vec![0.2, 0.3]];
        let (_, l) = expm_frechet(&m, &e);
        let h = 1e-6;
        let plus = expm(&mat_add(&m, &mat_scale(&e, h)));
        let minus = expm(&mat_sub(&m, &mat_scale(&e, h)));
        let fd = mat_scale(&mat_sub(&plus, &minus), 0.5 / h);
        for i in 0..2 {
            for j in 0..2 {
                assert!((l[i][j] - fd[i][j]).abs() < 1e-8, "({i},{j})");
            }
        }
    }

    #[test]
    fn second_block_matches_finite_differences() {
        let m = vec![vec![0.1, 0.3], vec![-0.2, 0.05]];
        let a = vec![vec![0.4, -0.1], vec![0.2, 0.3]];
        let b = vec![vec![-0.3, 0.2], vec![0.1, -0.4]];
        // D².exp(M)[A,B] = G(A,B) + G(B,A) against central differences of the
        // Fréchet derivative in direction A along B
        let gab = expm_second_block(&m, &a, &b);
        let gba = expm_second_block(&m, &b, &a);
        let d2 = mat_add(&gab, &gba);
        let h = 1e-5;
        let (_, lp) = expm_frechet(&mat_add(&m, &mat_scale(&b, h)), &a);
        let (_, lm) = expm_frechet(&mat_sub(&m, &mat_scale(&b, h)), &a);
        let fd = mat_scale(&mat_sub(&lp, &lm), 0.5 / h);
        for i in 0..2 {
            for j in 0..2 {
                assert!((d2[i][j] - fd[i][j]).abs() < 1e-7, "({i},{j})");
            }
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]];
        let inv = inverse(&a).unwrap();
        let prod = mat_mul(&a, &inv);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i][j] - expected).abs() < 1e-12);
            }
        }
    }
}
