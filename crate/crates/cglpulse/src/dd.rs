//! Double-double arithmetic: an unevaluated sum hi + lo with |lo| ≤ ulp(hi)/2.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn half(self) -> Self {
        Dd { hi: 0.5 * self.hi, lo: 0.5 * self.lo }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Add<f64> for Dd {
    type Output = Dd;
    fn add(self, o: f64) -> Dd {
        let (s, e) = two_sum(self.hi, o);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Dd { hi, lo }
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, o: Dd) {
        *self = *self + o;
    }
}

impl AddAssign<f64> for Dd {
    fn add_assign(&mut self, o: f64) {
        *self = *self + o;
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
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
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, o: f64) -> Dd {
        let (p, e) = two_prod(self.hi, o);
        let (hi, lo) = quick_two_sum(p, e + self.lo * o);
        Dd { hi, lo }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn keeps_bits_below_double_precision() {
        let x = Dd::new(1.0) + 1e-20;
        assert_eq!((x - Dd::new(1.0)).to_f64(), 1e-20);
        let third = Dd::new(1.0) * (1.0 / 3.0);
        assert!(third.lo == 0.0);
    }

    #[test]
    fn accumulation_beats_plain_sum() {
        let mut d = Dd::ZERO;
        let mut f = 0.0;
        for _ in 0..1_000_000 {
            d += 0.1;
            f += 0.1;
        }
        // Exact value of 10⁶ × fl(0.1).
        let exact = 100000.00000000000555;
        assert!((d.to_f64() - exact).abs() < 1e-10);
        assert!((f - exact).abs() > 1e-7);
    }

    proptest! {
        #[test]
        fn products_are_exact_for_integers(a in -(1i64 << 40)..(1i64 << 40), b in -(1i64 << 40)..(1i64 << 40)) {
            let p = Dd::new(a as f64) * Dd::new(b as f64);
            let exact = a as i128 * b as i128;
            prop_assert_eq!(p.hi as i128 + p.lo as i128, exact);
        }

        #[test]
        fn sums_are_exact_for_integers(a in -(1i64 << 62)..(1i64 << 62), b in -(1i64 << 62)..(1i64 << 62)) {
            let (fa, fb) = (a as f64, b as f64);
            let s = Dd::new(fa) + Dd::new(fb);
            prop_assert_eq!(s.hi as i128 + s.lo as i128, fa as i128 + fb as i128);
            prop_assert!(s.lo.abs() <= 0.5 * (s.hi.abs() * f64::EPSILON));
        }
    }
}
