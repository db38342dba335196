//! Dense reference implementations shared by the integration tests. Nothing
//! here calls into the library's fast paths.

#![allow(dead_code, clippy::needless_range_loop)]

pub fn hadamard(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect())
        .collect()
}

pub fn naive_transform(x: &[f64]) -> Vec<f64> {
    let h = hadamard(x.len());
    h.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// `(1/k) ΦᵗΦ` built by explicit matrix multiplication.
pub fn gram(rows: &[usize], n: usize) -> Vec<Vec<f64>> {
    let h = hadamard(n);
    let k = rows.len() as f64;
    let mut g = vec![vec![0.0; n]; n];
    for &r in rows {
        for i in 0..n {
            for j in 0..n {
                g[i][j] += h[r][i] * h[r][j];
            }
        }
    }
    g.iter_mut().for_each(|row| row.iter_mut().for_each(|v| *v /= k));
    g
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

pub fn spectral_norm(m: &[Vec<f64>]) -> f64 {
    jacobi_eigenvalues(m).into_iter().fold(0.0, |acc, l| acc.max(l.abs()))
}

pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// `max_S ‖(1/k) Φ_Sᵗ Φ_S − I‖` over all `r`-subsets.
pub fn rip_constant(rows: &[usize], n: usize, r: usize) -> f64 {
    let g = gram(rows, n);
    combinations(n, r)
        .iter()
        .map(|s| {
            let sub: Vec<Vec<f64>> = s
                .iter()
                .map(|&i| s.iter().map(|&j| g[i][j] - if i == j { 1.0 } else { 0.0 }).collect())
                .collect();
            spectral_norm(&sub)
        })
        .fold(0.0, f64::max)
}

/// `‖D_y² − (1/k) D_y ΦᵗΦ D_y‖`.
pub fn deviation(rows: &[usize], y: &[f64]) -> f64 {
    let n = y.len();
    let g = gram(rows, n);
    let m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * (if i == j { 1.0 } else { 0.0 } - g[i][j])).collect())
        .collect();
    spectral_norm(&m)
}

/// Maximum deviation over vectors with `s` entries equal to `±alpha` and zeros
/// elsewhere. The first sign is fixed since `y` and `-y` give the same value.
pub fn flat_family_max(rows: &[usize], n: usize, s: usize, alpha: f64) -> f64 {
    let mut best: f64 = 0.0;
    for support in combinations(n, s) {
        for mask in 0..1usize << (s - 1) {
            let mut y = vec![0.0; n];
            for (t, &i) in support.iter().enumerate() {
                let neg = t > 0 && (mask >> (t - 1)) & 1 == 1;
                y[i] = if neg { -alpha } else { alpha };
            }
            best = best.max(deviation(rows, &y));
        }
    }
    best
}

/// Dense `(1/sqrt(k)) Φ D_b` as rows.
pub fn dense_transform(rows: &[usize], signs: &[f64]) -> Vec<Vec<f64>> {
    let n = signs.len();
    let h = hadamard(n);
    let scale = 1.0 / (rows.len() as f64).sqrt();
    rows.iter().map(|&r| (0..n).map(|j| scale * h[r][j] * signs[j]).collect()).collect()
}

pub fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// Small deterministic generator (SplitMix64) so test inputs do not depend on
/// the library's RNG.
pub struct TestRng(pub u64);

impl TestRng {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    pub fn vector(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.symmetric()).collect()
    }

    pub fn unit_vector(&mut self, n: usize) -> Vec<f64> {
        let v = self.vector(n);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    }
}
