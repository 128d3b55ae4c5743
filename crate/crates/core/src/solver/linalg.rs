//! Symmetric band matrices: Cholesky factorization and a diagonally
//! preconditioned conjugate-gradient fallback.

/// Lower band of a symmetric `n×n` matrix with half-bandwidth `b`.
/// Row `k` stores `A[k][k-b..=k]` contiguously; `A[k][m]` lives at
/// `k·(b+1) + (m + b - k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    pub n: usize,
    pub b: usize,
    pub data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, b: usize) -> Self {
        Self { n, b, data: vec![0.0; n * (b + 1)] }
    }

    fn pos(&self, k: usize, m: usize) -> usize {
        debug_assert!(m <= k && k - m <= self.b);
        k * (self.b + 1) + (m + self.b - k)
    }

    /// Adds `v` to `A[k][m]` (and implicitly `A[m][k]`).
    pub fn add(&mut self, k: usize, m: usize, v: f64) {
        let (k, m) = if k >= m { (k, m) } else { (m, k) };
        let p = self.pos(k, m);
        self.data[p] += v;
    }

    pub fn get(&self, k: usize, m: usize) -> f64 {
        let (k, m) = if k >= m { (k, m) } else { (m, k) };
        if k - m > self.b {
            0.0
        } else {
            self.data[self.pos(k, m)]
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.data[self.pos(k, k)]).collect()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.n {
            let lo = k.saturating_sub(self.b);
            let row = &self.data[k * (self.b + 1)..(k + 1) * (self.b + 1)];
            let mut acc = row[self.b] * x[k];
            for m in lo..k {
                let a = row[m + self.b - k];
                acc += a * x[m];
                y[m] += a * x[k];
            }
            y[k] += acc;
        }
    }

    /// `L` with `A = L Lᵀ` in the same layout, or `None` at a non-positive
    /// pivot.
    pub fn cholesky(&self) -> Option<BandMatrix> {
        let (n, b) = (self.n, self.b);
        let w = b + 1;
        let mut l = self.clone();
        for k in 0..n {
            let lo = k.saturating_sub(b);
            for j in lo..k {
                // L[k][j] = (A[k][j] - Σ_{m<j} L[k][m] L[j][m]) / L[j][j]
                let mlo = lo.max(j.saturating_sub(b));
                let (head, tail) = l.data.split_at_mut(k * w);
                let row_j = &head[j * w..(j + 1) * w];
                let row_k = &mut tail[..w];
                let mut s = row_k[j + b - k];
                for m in mlo..j {
                    s -= row_k[m + b - k] * row_j[m + b - j];
                }
                row_k[j + b - k] = s / row_j[b];
            }
            let row_k = &mut l.data[k * w..(k + 1) * w];
            let mut s = row_k[b];
            for m in lo..k {
                let v = row_k[m + b - k];
                s -= v * v;
            }
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            row_k[b] = s.sqrt();
        }
        Some(l)
    }

    /// Solves `L Lᵀ x = r` for a factor returned by [`cholesky`](Self::cholesky).
    #[allow(clippy::needless_range_loop)]
    pub fn cholesky_solve(&self, r: &[f64]) -> Vec<f64> {
        let (n, b) = (self.n, self.b);
        let w = b + 1;
        let mut y = r.to_vec();
        for k in 0..n {
            let lo = k.saturating_sub(b);
            let row = &self.data[k * w..(k + 1) * w];
            let mut s = y[k];
            for m in lo..k {
                s -= row[m + b - k] * y[m];
            }
            y[k] = s / row[b];
        }
        for k in (0..n).rev() {
            let hi = (k + b).min(n - 1);
            let mut s = y[k];
            for m in k + 1..=hi {
                s -= self.data[m * w + (k + b - m)] * y[m];
            }
            y[k] = s / self.data[k * w + b];
        }
        y
    }
}

/// Outcome of [`pcg`].
#[derive(Clone, Debug, PartialEq)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients on `A x = r` with Jacobi preconditioning.
pub fn pcg(a: &BandMatrix, r: &[f64], rel_tol: f64, max_iter: usize) -> CgResult {
    let n = a.n;
    let diag: Vec<f64> = a.diagonal().iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let norm_r = dot(r, r).sqrt();
    let mut x = vec![0.0; n];
    if norm_r == 0.0 {
        return CgResult { x, iterations: 0, relative_residual: 0.0, converged: true };
    }
    let mut res = r.to_vec();
    let mut z: Vec<f64> = res.iter().zip(&diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&res, &z);
    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            let rel = dot(&res, &res).sqrt() / norm_r;
            return CgResult { x, iterations: it, relative_residual: rel, converged: false };
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            res[k] -= alpha * ap[k];
        }
        let rel = dot(&res, &res).sqrt() / norm_r;
        if rel <= rel_tol {
            return CgResult { x, iterations: it, relative_residual: rel, converged: true };
        }
        for k in 0..n {
            z[k] = res[k] * diag[k];
        }
        let rz_new = dot(&res, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    let rel = dot(&res, &res).sqrt() / norm_r;
    CgResult { x, iterations: max_iter, relative_residual: rel, converged: false }
}
