//! Truncated power series in the shifted variable t = s - s0.

use num_complex::Complex64 as C64;

use super::poly::Poly;

#[derive(Debug, Clone)]
pub struct Series {
    pub c: Vec<C64>,
}

impl Series {
    pub fn one(order: usize) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); order + 1];
        c[0] = C64::new(1.0, 0.0);
        Series { c }
    }

    /// Taylor expansion of a polynomial around s0.
    pub fn from_poly(p: &Poly, s0: C64, order: usize) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); order + 1];
        let mut d = p.clone();
        let mut fact = 1.0;
        for (k, ck) in c.iter_mut().enumerate() {
            if k > 0 {
                d = d.derivative();
                fact *= k as f64;
            }
            *ck = d.eval(s0) / fact;
        }
        Series { c }
    }

    /// Expansion of (b - s)^(-k) around s0, b != s0.
    pub fn inv_linear_pow(b: C64, s0: C64, k: u32, order: usize) -> Self {
        // 1/(d - t) = sum_n t^n / d^(n+1) with d = b - s0
        let d = b - s0;
        let base = Series { c: (0..=order).map(|n| 1.0 / d.powi(n as i32 + 1)).collect() };
        (0..k).fold(Series::one(order), |acc, _| acc.mul(&base))
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.c.len().min(other.c.len());
        let mut c = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n - i {
                c[i + j] += self.c[i] * other.c[j];
            }
        }
        Series { c }
    }

    /// Multiply by s = s0 + t.
    pub fn mul_by_s(&self, s0: C64) -> Series {
        let n = self.c.len();
        let c = (0..n)
            .map(|k| s0 * self.c[k] + if k > 0 { self.c[k - 1] } else { C64::new(0.0, 0.0) })
            .collect();
        Series { c }
    }

    /// k-th derivative at t = 0.
    pub fn derivative_at(&self, k: usize) -> C64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.c[k] * fact
    }
}
