//! Fourth-order centered differences on the uniform `eta` grid.
//!
//! Values beyond the lattice are taken as zero; fields are required to be
//! negligible there by the aliasing sentinel.

use num_complex::Complex;

use crate::real::Real;

#[inline]
fn get<T: Real>(row: &[Complex<T>], j: isize) -> Complex<T> {
    if j < 0 || j as usize >= row.len() {
        Complex::new(T::zero(), T::zero())
    } else {
        row[j as usize]
    }
}

/// `d/d eta` at column `j`.
#[inline]
pub fn d1_at<T: Real>(row: &[Complex<T>], j: usize, h: T) -> Complex<T> {
    let j = j as isize;
    let s = get(row, j - 2) - get(row, j - 1) * T::lit(8.0) + get(row, j + 1) * T::lit(8.0)
        - get(row, j + 2);
    s / (T::lit(12.0) * h)
}

/// `d^2/d eta^2` at column `j`.
#[inline]
pub fn d2_at<T: Real>(row: &[Complex<T>], j: usize, h: T) -> Complex<T> {
    let j = j as isize;
    let s = -get(row, j - 2) + get(row, j - 1) * T::lit(16.0) - get(row, j) * T::lit(30.0)
        + get(row, j + 1) * T::lit(16.0)
        - get(row, j + 2);
    s / (T::lit(12.0) * h * h)
}

/// `d/d eta` of a whole row.
pub fn d1_row<T: Real>(row: &[Complex<T>], h: T, out: &mut [Complex<T>]) {
    for (j, o) in out.iter_mut().enumerate() {
        *o = d1_at(row, j, h);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quartics() {
        let h = 0.1f64;
        let row: Vec<Complex<f64>> = (0..11)
            .map(|j| {
                let x = (j as f64 - 5.0) * h;
                Complex::new(x.powi(4) + 2.0 * x.powi(3) - x, 0.0)
            })
            .collect();
        assert!((d1_at(&row, 5, h).re + 1.0).abs() < 1e-12);
        assert!(d2_at(&row, 5, h).re.abs() < 1e-10);
        // at x = h: d1 = 4h^3 + 6h^2 - 1
        let want = 4.0 * h.powi(3) + 6.0 * h * h - 1.0;
        assert!((d1_at(&row, 6, h).re - want).abs() < 1e-12);
    }
}
