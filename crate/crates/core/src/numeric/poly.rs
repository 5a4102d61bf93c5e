//! Dense polynomials with complex coefficients (ascending order) and an
//! Aberth-Ehrlich simultaneous root finder.

use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<C64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map_or(false, |c| c.norm() == 0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(C64::new(0.0, 0.0));
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn constant(c: f64) -> Self {
        Poly::from_real(&[c])
    }

    /// (a + b r)
    pub fn linear(a: f64, b: f64) -> Self {
        Poly::from_real(&[a, b])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.re)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::constant(0.0);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = C64::new(0.0, 0.0);
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(zero)
                        + other.coeffs.get(k).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::constant(1.0), |acc, _| acc.mul(self))
    }

    /// p(-r)
    pub fn reflect(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| if k % 2 == 1 { -c } else { c })
                .collect(),
        )
    }

    /// All complex roots, polished by Aberth-Ehrlich iteration.
    pub fn roots(&self) -> Vec<C64> {
        aberth(&self.coeffs, 500, 1e-15)
    }
}

fn aberth(coeffs: &[C64], max_iter: usize, tol: f64) -> Vec<C64> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[n];
    let monic: Vec<C64> = coeffs.iter().map(|&c| c / lead).collect();
    let deriv: Vec<C64> = monic.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect();
    let eval = |cs: &[C64], x: C64| cs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c);

    // Fujiwara-type radius bound for the initial circle
    let radius = (0..n)
        .map(|k| monic[k].norm().powf(1.0 / (n - k) as f64))
        .fold(0.0_f64, f64::max)
        .max(1e-3);
    let mut z: Vec<C64> = (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            C64::from_polar(radius, th)
        })
        .collect();
    let mut done = vec![false; n];
    for _ in 0..max_iter {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let p = eval(&monic, z[i]);
            let dp = eval(&deriv, z[i]);
            if p.norm() == 0.0 {
                done[i] = true;
                continue;
            }
            let ratio = p / dp;
            let mut sum = C64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    sum += 1.0 / (z[i] - z[j]);
                }
            }
            let step = ratio / (C64::new(1.0, 0.0) - ratio * sum);
            z[i] -= step;
            if step.norm() <= tol * (1.0 + z[i].norm()) {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_known_cubic() {
        // (r - 1)(r - 2)(r + 3) = r^3 - 7r + 6
        let p = Poly::from_real(&[6.0, -7.0, 0.0, 1.0]);
        let mut r: Vec<f64> = p.roots().iter().map(|z| z.re).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in r.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_pair() {
        let p = Poly::from_real(&[5.0, -2.0, 1.0]);
        let roots = p.roots();
        for z in roots {
            assert!((z.re - 1.0).abs() < 1e-12 && (z.im.abs() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reflect_and_mul() {
        let p = Poly::linear(1.0, 2.0).mul(&Poly::linear(3.0, -1.0));
        let x = C64::new(0.3, -0.7);
        assert!((p.reflect().eval(x) - p.eval(-x)).norm() < 1e-14);
        assert!((p.derivative().eval(x) - (C64::new(5.0, 0.0) - x * 4.0)).norm() < 1e-14);
    }
}
