//! Symmetric positive-definite solves for normal matrices whose leading block
//! is banded and whose trailing columns ("border") couple to anything.

use nalgebra::{DMatrix, DVector};

/// Lower band of the leading block plus dense border blocks.
#[derive(Debug, Clone)]
pub struct BorderedBanded {
    n: usize,
    bw: usize,
    /// `band[i * (bw + 1) + k]` holds `A[i][i - k]`.
    band: Vec<f64>,
    /// `border[(i, j)]` holds `A[i][n + j]` for the leading rows.
    border: DMatrix<f64>,
    corner: DMatrix<f64>,
}

impl BorderedBanded {
    pub fn zeros(n: usize, bw: usize, nb: usize) -> Self {
        Self {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
            border: DMatrix::zeros(n, nb),
            corner: DMatrix::zeros(nb, nb),
        }
    }

    pub fn dim(&self) -> usize {
        self.n + self.corner.nrows()
    }

    /// Adds `v` to `A[i][j]` and, implicitly, to `A[j][i]`. Callers pass each
    /// unordered pair once with `i >= j`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let n = self.n;
        match (i >= n, j >= n) {
            (false, false) => {
                let k = i - j;
                assert!(k <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
                self.band[i * (self.bw + 1) + k] += v;
            }
            (true, false) => self.border[(j, i - n)] += v,
            (false, true) => self.border[(i, j - n)] += v,
            (true, true) => {
                self.corner[(i - n, j - n)] += v;
                if i != j {
                    self.corner[(j - n, i - n)] += v;
                }
            }
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.band[i * (self.bw + 1)] += v;
        }
        for i in 0..self.corner.nrows() {
            self.corner[(i, i)] += v;
        }
    }

    fn cholesky_in_place(&mut self) -> bool {
        let w = self.bw + 1;
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..=i {
                let mut s = self.band[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(self.bw));
                for k in k0..j {
                    s -= self.band[i * w + (i - k)] * self.band[j * w + (j - k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return false;
                    }
                    self.band[i * w] = s.sqrt();
                } else {
                    self.band[i * w + (i - j)] = s / self.band[j * w];
                }
            }
        }
        true
    }

    fn forward(&self, b: &mut [f64]) {
        let w = self.bw + 1;
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.band[i * w + (i - k)] * b[k];
            }
            b[i] = s / self.band[i * w];
        }
    }

    fn backward(&self, b: &mut [f64]) {
        let w = self.bw + 1;
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + self.bw + 1).min(self.n) {
                s -= self.band[k * w + (k - i)] * b[k];
            }
            b[i] = s / self.band[i * w];
        }
    }

    fn solve_leading(&self, b: &mut [f64]) {
        self.forward(b);
        self.backward(b);
    }

    /// Solves `A x = rhs`, consuming the matrix. Returns `None` when `A` is
    /// not numerically positive definite.
    pub fn solve(mut self, rhs: &[f64]) -> Option<Vec<f64>> {
        assert_eq!(rhs.len(), self.dim());
        if !self.cholesky_in_place() {
            return None;
        }
        let n = self.n;
        let nb = self.corner.nrows();
        let mut x1: Vec<f64> = rhs[..n].to_vec();
        self.solve_leading(&mut x1);
        if nb == 0 {
            return Some(x1);
        }
        // Y = A11^-1 A12, Schur complement S = A22 - A21 Y
        let mut y = self.border.clone();
        for j in 0..nb {
            let mut col: Vec<f64> = y.column(j).iter().copied().collect();
            self.solve_leading(&mut col);
            y.set_column(j, &DVector::from_vec(col));
        }
        let schur = &self.corner - self.border.transpose() * &y;
        let r2 = DVector::from_column_slice(&rhs[n..]) - self.border.transpose() * DVector::from_column_slice(&x1);
        let x2 = schur.cholesky()?.solve(&r2);
        let correction = &y * &x2;
        for i in 0..n {
            x1[i] -= correction[i];
        }
        x1.extend(x2.iter());
        Some(x1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, bw: usize, nb: usize, seed: u64) -> (BorderedBanded, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = n + nb;
        // J^T J + I with J respecting the sparsity pattern
        let mut j = DMatrix::<f64>::zeros(3 * dim, dim);
        for r in 0..3 * dim {
            let c0 = rng.random_range(0..n.max(1));
            for c in c0..(c0 + bw / 2 + 1).min(n) {
                j[(r, c)] = rng.random_range(-1.0..1.0);
            }
            for c in n..dim {
                j[(r, c)] = rng.random_range(-1.0..1.0);
            }
        }
        let dense = j.transpose() * &j + DMatrix::identity(dim, dim);
        let mut m = BorderedBanded::zeros(n, bw, nb);
        for i in 0..dim {
            for k in 0..=i {
                if i < n && i - k > bw {
                    continue;
                }
                m.add(i, k, dense[(i, k)]);
            }
        }
        (m, dense)
    }

    #[test]
    fn matches_dense_solution() {
        for (n, bw, nb, seed) in [(12, 3, 0, 1), (20, 5, 2, 2), (7, 0, 3, 3), (30, 8, 1, 4)] {
            let (m, dense) = random_spd(n, bw, nb, seed);
            let rhs: Vec<f64> = (0..n + nb).map(|i| (i as f64 * 0.37).sin()).collect();
            let x = m.solve(&rhs).expect("spd");
            let r = &dense * DVector::from_vec(x) - DVector::from_vec(rhs);
            assert!(r.amax() < 1e-9, "residual {}", r.amax());
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut m = BorderedBanded::zeros(2, 1, 0);
        m.add(0, 0, 1.0);
        m.add(1, 0, 2.0);
        m.add(1, 1, 1.0);
        assert!(m.solve(&[1.0, 1.0]).is_none());
    }
}
