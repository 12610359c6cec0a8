use num_complex::Complex;

use super::grid::PhaseGrid;
use crate::real::{pairwise_sum, Real};

/// Perturbation `h_hat(k, eta)` on a [`PhaseGrid`], row-major in `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    pub grid: PhaseGrid<T>,
    pub data: Vec<Complex<T>>,
    pub time: T,
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: PhaseGrid<T>) -> Self {
        SpectralField {
            grid,
            data: vec![Complex::new(T::zero(), T::zero()); grid.len()],
            time: T::zero(),
        }
    }

    /// Samples `f(k, eta)` at every lattice point.
    pub fn from_fn(grid: PhaseGrid<T>, f: impl Fn(i64, T) -> Complex<T>) -> Self {
        let mut out = Self::zeros(grid);
        for k in grid.ks() {
            let r = grid.row(k);
            for j in 0..grid.n_eta {
                out.data[r * grid.n_eta + j] = f(k, grid.eta(j));
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, k: i64, j: usize) -> Complex<T> {
        self.data[self.grid.row(k) * self.grid.n_eta + j]
    }

    #[inline]
    pub fn at_mut(&mut self, k: i64, j: usize) -> &mut Complex<T> {
        let n = self.grid.n_eta;
        &mut self.data[self.grid.row(k) * n + j]
    }

    pub fn row(&self, k: i64) -> &[Complex<T>] {
        let n = self.grid.n_eta;
        let r = self.grid.row(k);
        &self.data[r * n..(r + 1) * n]
    }

    pub fn row_mut(&mut self, k: i64) -> &mut [Complex<T>] {
        let n = self.grid.n_eta;
        let r = self.grid.row(k);
        &mut self.data[r * n..(r + 1) * n]
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// `sum_k int |h_hat(k, eta)|^2 d eta`, which equals `int int |h|^2 dx dv`.
    pub fn l2_norm_sq(&self) -> T {
        let sq: Vec<T> = self.data.iter().map(|z| z.norm_sqr()).collect();
        pairwise_sum(&sq) * self.grid.d_eta()
    }

    pub fn l2_norm(&self) -> T {
        self.l2_norm_sq().sqrt()
    }

    /// `sqrt(int |h_hat(k, eta)|^2 d eta)` for one row.
    pub fn row_norm(&self, k: i64) -> T {
        let sq: Vec<T> = self.row(k).iter().map(|z| z.norm_sqr()).collect();
        (pairwise_sum(&sq) * self.grid.d_eta()).sqrt()
    }

    /// `max |h(k, eta) - conj h(-k, -eta)|` over the paired columns.
    pub fn reality_defect(&self) -> T {
        let g = self.grid;
        let mut d = T::zero();
        for k in g.ks() {
            for j in 1..g.n_eta {
                let a = self.at(k, j);
                let b = self.at(-k, g.mirror(j)).conj();
                d = d.max((a - b).norm());
            }
        }
        d
    }

    /// Replaces the field by the average of itself and its reality mirror and
    /// clears the unpaired column 0.
    pub fn symmetrize(&mut self) {
        let g = self.grid;
        let half = T::lit(0.5);
        let src = self.data.clone();
        for k in g.ks() {
            let r = g.row(k);
            let rm = g.row(-k);
            for j in 0..g.n_eta {
                let a = src[r * g.n_eta + j];
                let b = src[rm * g.n_eta + g.mirror(j)].conj();
                self.data[r * g.n_eta + j] = if j == 0 {
                    Complex::new(T::zero(), T::zero())
                } else {
                    (a + b) * half
                };
            }
        }
    }

    /// Largest magnitude on the two outermost columns relative to the maximum.
    pub fn boundary_ratio(&self) -> T {
        let g = self.grid;
        let n = g.n_eta;
        let mut b = T::zero();
        for k in g.ks() {
            let row = self.row(k);
            for &j in &[0, 1, n - 2, n - 1] {
                b = b.max(row[j].norm());
            }
        }
        let m = self.max_abs();
        if m == T::zero() {
            T::zero()
        } else {
            b / m
        }
    }

    pub fn axpy(&mut self, a: T, other: &Self) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x = *x + *y * a;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrize_restores_reality() {
        let g = PhaseGrid::aligned(2, 8.0f64, 32).unwrap();
        let mut f = SpectralField::from_fn(g, |k, e| {
            Complex::new((-(e * e) / 2.0).exp() * (1.0 + k as f64), 0.3 * e)
        });
        assert!(f.reality_defect() > 0.1);
        f.symmetrize();
        assert!(f.reality_defect() < 1e-15);
    }

    #[test]
    fn gaussian_row_norm() {
        let g = PhaseGrid::aligned(1, 20.0f64, 800).unwrap();
        let f = SpectralField::from_fn(g, |k, e| {
            if k == 1 {
                Complex::new((-(e * e) / 2.0).exp(), 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        let want = std::f64::consts::PI.sqrt();
        assert!((f.row_norm(1).powi(2) - want).abs() < 1e-12);
    }
}
