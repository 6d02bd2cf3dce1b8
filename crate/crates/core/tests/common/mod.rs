//! Reference implementations used only by tests. They share no code with
//! the library paths they check.
#![allow(dead_code, clippy::needless_range_loop)]

/// Straight transcription of the two-term node recurrence. Returns one row
/// of node values per input. `phases[k][j]` is kept explicitly so the
/// boundary rule (node 0 couples to node V-1 of the previous step) is
/// spelled out.
pub fn node_recurrence_oracle(
    inputs: &[f64],
    mask: &[f64],
    alpha: f64,
    beta: f64,
    c: f64,
    eps: f64,
) -> Vec<Vec<f64>> {
    let v = mask.len();
    let l = inputs.len();
    let mut m = vec![vec![0.0f64; v]; l + 1]; // m[0] is the zero initial state
    let mut phase = vec![vec![0.0f64; v]; l + 1];
    for k in 1..=l {
        for j in 0..v {
            phase[k][j] = beta * mask[j] * inputs[k - 1] + alpha * m[k - 1][j];
        }
        for j in 0..v {
            let pred = if j == 0 {
                if k == 1 {
                    0.0
                } else {
                    phase[k - 1][v - 1]
                }
            } else {
                phase[k][j - 1]
            };
            m[k][j] = c * pred.sin() * eps + c * phase[k][j].sin() * (1.0 - eps);
        }
    }
    m.split_off(1)
}

/// Solves `(A^T A + lambda I) x = A^T y` by Gaussian elimination with
/// partial pivoting on explicitly accumulated sums.
pub fn ridge_oracle(rows: &[Vec<f64>], y: &[f64], lambda: f64) -> Vec<f64> {
    let n = rows[0].len();
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for r in rows {
                s += r[i] * r[j];
            }
            a[i][j] = s + if i == j { lambda } else { 0.0 };
        }
        let mut s = 0.0;
        for (r, t) in rows.iter().zip(y) {
            s += r[i] * t;
        }
        a[i][n] = s;
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..=n {
                a[r][k] -= f * a[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = a[i][n];
        for k in i + 1..n {
            s -= a[i][k] * x[k];
        }
        x[i] = s / a[i][i];
    }
    x
}

/// Simple deterministic generator for test fixtures (xorshift64*).
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        let x = self.0.wrapping_mul(0x2545_F491_4F6C_DD1D);
        (x >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}
