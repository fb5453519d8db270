use super::UniPoly;

/// Dense polynomial in `(w, lambda)`: `sum c[i][j] w^i lambda^j`.
///
/// Stored row-major with `deg_lambda + 1` entries per `w`-power.
#[derive(Debug, Clone, PartialEq)]
pub struct BiPoly {
    deg_w: usize,
    deg_lambda: usize,
    c: Vec<f64>,
}

/// Variable selector for elimination and restriction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    W,
    Lambda,
}

impl BiPoly {
    pub fn zeros(deg_w: usize, deg_lambda: usize) -> Self {
        Self {
            deg_w,
            deg_lambda,
            c: vec![0.0; (deg_w + 1) * (deg_lambda + 1)],
        }
    }

    /// From a coefficient grid `grid[i][j]` for `w^i lambda^j`.
    pub fn from_grid(grid: &[Vec<f64>]) -> Self {
        let deg_w = grid.len().saturating_sub(1);
        let deg_lambda = grid.iter().map(|r| r.len()).max().unwrap_or(1).saturating_sub(1);
        let mut p = Self::zeros(deg_w, deg_lambda);
        for (i, row) in grid.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                p.set(i, j, v);
            }
        }
        p
    }

    pub fn constant(v: f64) -> Self {
        let mut p = Self::zeros(0, 0);
        p.c[0] = v;
        p
    }

    /// `a + b w + c lambda`
    pub fn linear(a: f64, b: f64, c: f64) -> Self {
        Self::from_grid(&[vec![a, c], vec![b, 0.0]])
    }

    pub fn deg_w(&self) -> usize {
        self.deg_w
    }

    pub fn deg_lambda(&self) -> usize {
        self.deg_lambda
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i > self.deg_w || j > self.deg_lambda {
            0.0
        } else {
            self.c[i * (self.deg_lambda + 1) + j]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.c[i * (self.deg_lambda + 1) + j] = v;
    }

    pub fn coefficients(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        let stride = self.deg_lambda + 1;
        self.c.iter().enumerate().map(move |(k, &v)| ((k / stride, k % stride), v))
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.c.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    /// Largest `i + j` over nonzero coefficients.
    pub fn total_degree(&self) -> usize {
        self.coefficients()
            .filter(|&(_, v)| v != 0.0)
            .map(|((i, j), _)| i + j)
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, var: Var) -> usize {
        match var {
            Var::W => self.deg_w,
            Var::Lambda => self.deg_lambda,
        }
    }

    /// Nested Horner evaluation.
    pub fn eval(&self, w: f64, lambda: f64) -> f64 {
        let stride = self.deg_lambda + 1;
        self.c.chunks_exact(stride).rev().fold(0.0, |acc, row| {
            acc * w + row.iter().rev().fold(0.0, |a, &v| a * lambda + v)
        })
    }

    /// `sum |c_ij| |w|^i |lambda|^j`.
    pub fn eval_abs(&self, w: f64, lambda: f64) -> f64 {
        let (w, lambda) = (w.abs(), lambda.abs());
        let stride = self.deg_lambda + 1;
        self.c.chunks_exact(stride).rev().fold(0.0, |acc, row| {
            acc * w + row.iter().rev().fold(0.0, |a, &v| a * lambda + v.abs())
        })
    }

    /// Partial derivatives `(d/dw, d/dlambda)` at a point.
    pub fn gradient(&self, w: f64, lambda: f64) -> (f64, f64) {
        let stride = self.deg_lambda + 1;
        // Horner over w of (row value, row lambda-derivative), carrying d/dw
        let (mut v, mut dw, mut dl) = (0.0, 0.0, 0.0);
        for row in self.c.chunks_exact(stride).rev() {
            let (mut r, mut dr) = (0.0, 0.0);
            for &c in row.iter().rev() {
                dr = dr * lambda + r;
                r = r * lambda + c;
            }
            dw = dw * w + v;
            v = v * w + r;
            dl = dl * w + dr;
        }
        (dw, dl)
    }

    /// Fixes one variable and returns the polynomial in the other.
    pub fn restrict(&self, var: Var, value: f64) -> UniPoly {
        match var {
            // w fixed -> polynomial in lambda
            Var::W => {
                let mut out = vec![0.0; self.deg_lambda + 1];
                for i in (0..=self.deg_w).rev() {
                    for (j, o) in out.iter_mut().enumerate() {
                        *o = *o * value + self.get(i, j);
                    }
                }
                UniPoly::from_raw(out)
            }
            Var::Lambda => {
                let mut out = vec![0.0; self.deg_w + 1];
                for j in (0..=self.deg_lambda).rev() {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = *o * value + self.get(i, j);
                    }
                }
                UniPoly::from_raw(out)
            }
        }
    }

    /// Coefficient of `var^k` as a polynomial in the other variable.
    pub fn coefficient_of(&self, var: Var, k: usize) -> UniPoly {
        match var {
            Var::Lambda => UniPoly::from_raw((0..=self.deg_w).map(|i| self.get(i, k)).collect()),
            Var::W => UniPoly::from_raw((0..=self.deg_lambda).map(|j| self.get(k, j)).collect()),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.deg_w + other.deg_w, self.deg_lambda + other.deg_lambda);
        for ((i, j), a) in self.coefficients() {
            if a == 0.0 {
                continue;
            }
            for ((k, l), b) in other.coefficients() {
                let idx = (i + k) * (out.deg_lambda + 1) + j + l;
                out.c[idx] += a * b;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.deg_w.max(other.deg_w), self.deg_lambda.max(other.deg_lambda));
        for p in [self, other] {
            for ((i, j), v) in p.coefficients() {
                let idx = i * (out.deg_lambda + 1) + j;
                out.c[idx] += v;
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            c: self.c.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// Shrinks the declared degrees past trailing rows/columns whose entries
    /// are all below `tol * max|c|`.
    pub fn trim(&mut self, tol: f64) {
        let limit = tol * self.max_abs();
        let mut dw = self.deg_w;
        while dw > 0 && (0..=self.deg_lambda).all(|j| self.get(dw, j).abs() <= limit) {
            dw -= 1;
        }
        let mut dl = self.deg_lambda;
        while dl > 0 && (0..=dw).all(|i| self.get(i, dl).abs() <= limit) {
            dl -= 1;
        }
        if dw != self.deg_w || dl != self.deg_lambda {
            let mut out = Self::zeros(dw, dl);
            for i in 0..=dw {
                for j in 0..=dl {
                    out.set(i, j, self.get(i, j));
                }
            }
            *self = out;
        }
    }

    /// Divides out the largest `w^k` factor (entries of the lowest `w`-rows
    /// below `tol * max|c|` are treated as zero). Returns `k`.
    pub fn saturate_w(&mut self, tol: f64) -> usize {
        let limit = tol * self.max_abs();
        let mut k = 0;
        while k < self.deg_w && (0..=self.deg_lambda).all(|j| self.get(k, j).abs() <= limit) {
            k += 1;
        }
        if k > 0 {
            let mut out = Self::zeros(self.deg_w - k, self.deg_lambda);
            for i in k..=self.deg_w {
                for j in 0..=self.deg_lambda {
                    out.set(i - k, j, self.get(i, j));
                }
            }
            *self = out;
        }
        k
    }
}
