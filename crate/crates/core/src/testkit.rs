//! Extended-precision scaffolding for tests only: a small double-double
//! type (roughly 32 significant digits) and high-order central-difference
//! stencils for derivatives of cumulant-generating functions. Keeping the
//! finite-difference oracle in ~1e-32 arithmetic lets a step of 1e-3 reach
//! fourth derivatives with ~1e-9 relative truncation error and no rounding
//! floor.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }
}

impl Dd {
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::from(0.0);
        }
        let x = self.hi.sqrt();
        let r = self - Dd::from(x) * Dd::from(x);
        let c = (r.hi + r.lo) / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, c);
        Dd { hi, lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = (r.hi + r.lo) / o.hi;
        let r2 = r - o * Dd::from(q2);
        let q3 = (r2.hi + r2.lo) / o.hi;
        let (s, e) = two_sum(q1, q2);
        let (hi, lo) = quick_two_sum(s, e + q3);
        Dd { hi, lo }
    }
}

/// First four derivatives of k at 0 by fourth-order central differences
/// with step h, evaluated in double-double arithmetic. Integer-coefficient
/// stencils; offsets up to 3h.
pub fn cgf_derivatives<F: Fn(Dd) -> Dd>(k: &F, h: f64) -> [f64; 4] {
    let hd = Dd::from(h);
    let at = |i: i32| k(hd * Dd::from(i as f64));
    let f = [at(-3), at(-2), at(-1), at(0), at(1), at(2), at(3)];
    let c = |x: f64| Dd::from(x);

    let d1 = (f[1] - c(8.0) * f[2] + c(8.0) * f[4] - f[5]) / (c(12.0) * hd);
    let d2 = (-f[1] + c(16.0) * f[2] - c(30.0) * f[3] + c(16.0) * f[4] - f[5])
        / (c(12.0) * hd * hd);
    let d3 = (f[0] - c(8.0) * f[1] + c(13.0) * f[2] - c(13.0) * f[4] + c(8.0) * f[5] - f[6])
        / (c(8.0) * hd * hd * hd);
    let d4 = (-f[0] + c(12.0) * f[1] - c(39.0) * f[2] + c(56.0) * f[3] - c(39.0) * f[4]
        + c(12.0) * f[5]
        - f[6])
        / (c(6.0) * hd * hd * hd * hd);
    [d1.to_f64(), d2.to_f64(), d3.to_f64(), d4.to_f64()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_arithmetic_round_trips() {
        let a = Dd::from(0.1) + Dd::from(0.2);
        // double-double captures the rounding error of 0.1 + 0.2
        assert!((a.to_f64() - 0.3).abs() < 1e-16);
        let b = Dd::from(2.0).sqrt();
        let sq = b * b - Dd::from(2.0);
        assert!(sq.to_f64().abs() < 1e-30);
        let d = Dd::from(1.0) / Dd::from(3.0);
        let back = d * Dd::from(3.0) - Dd::from(1.0);
        assert!(back.to_f64().abs() < 1e-30);
    }

    #[test]
    fn stencils_are_exact_on_polynomials() {
        // k(t) = t + t^2 + t^3 + t^4 has derivatives 1, 2, 6, 24 at zero
        let k = |t: Dd| {
            let t2 = t * t;
            t + t2 + t2 * t + t2 * t2
        };
        let d = cgf_derivatives(&k, 1e-3);
        assert!((d[0] - 1.0).abs() < 1e-12, "d1 {}", d[0]);
        assert!((d[1] - 2.0).abs() < 1e-9, "d2 {}", d[1]);
        assert!((d[2] - 6.0).abs() < 1e-6, "d3 {}", d[2]);
        assert!((d[3] - 24.0).abs() < 1e-3, "d4 {}", d[3]);
    }

    #[test]
    fn stencils_reach_exponential_derivatives() {
        // all derivatives of e^t - 1 at zero equal 1
        let k = |t: Dd| {
            // e^t via its series in double-double; |t| <= 3e-3 so 12 terms
            // are far beyond the working precision
            let mut sum = Dd::from(0.0);
            let mut term = Dd::from(1.0);
            for i in 1..=12 {
                term = term * t / Dd::from(i as f64);
                sum = sum + term;
            }
            sum
        };
        let d = cgf_derivatives(&k, 1e-3);
        for (i, &v) in d.iter().enumerate() {
            assert!(
                (v - 1.0).abs() < 1e-8,
                "derivative {} came out {v}",
                i + 1
            );
        }
    }
}
