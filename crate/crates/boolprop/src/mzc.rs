//! Multi-zero-conscious numbers.
//!
//! `(a, i)` stands for `a * 0^i`: the magnitude of a quantity together with
//! how many zero factors went into it. Products and quotients stay exact in
//! the presence of zeros, so a zero can later be divided back out.

use std::fmt;

use crate::PotentialError;

#[derive(Clone, Copy, PartialEq)]
pub struct Mzc {
    pub a: f64,
    pub i: i32,
}

#[allow(clippy::should_implement_trait)]
impl Mzc {
    pub const ONE: Mzc = Mzc { a: 1.0, i: 0 };

    pub fn new(a: f64, i: i32) -> Self {
        debug_assert!(a > 0.0, "mzc magnitude must be positive");
        Mzc { a, i }
    }

    pub fn from_real(x: f64) -> Result<Self, PotentialError> {
        if x.is_nan() || x < 0.0 {
            return Err(PotentialError::Negative(x));
        }
        Ok(if x == 0.0 { Mzc { a: 1.0, i: 1 } } else { Mzc { a: x, i: 0 } })
    }

    pub fn to_real(self) -> Result<f64, PotentialError> {
        match self.i {
            0 => Ok(self.a),
            i if i > 0 => Ok(0.0),
            i => Err(PotentialError::NegativeZeroCount(i)),
        }
    }

    pub fn mul(self, o: Mzc) -> Mzc {
        Mzc { a: self.a * o.a, i: self.i + o.i }
    }

    pub fn div(self, o: Mzc) -> Mzc {
        Mzc { a: self.a / o.a, i: self.i - o.i }
    }

    pub fn add(self, o: Mzc) -> Mzc {
        use std::cmp::Ordering::*;
        match self.i.cmp(&o.i) {
            Less => self,
            Equal => Mzc { a: self.a + o.a, i: self.i },
            Greater => o,
        }
    }
}

impl fmt::Debug for Mzc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.i)
    }
}

/// Scalar arithmetic shared by the real and MZC code paths.
pub trait Scalar: Copy + fmt::Debug + 'static {
    fn one() -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn add(self, o: Self) -> Self;
    fn lift(x: f64) -> Result<Self, PotentialError>;
    fn lower(self) -> Result<f64, PotentialError>;
}

impl Scalar for f64 {
    fn one() -> Self {
        1.0
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Self {
        if o == 0.0 {
            0.0
        } else {
            self / o
        }
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn lift(x: f64) -> Result<Self, PotentialError> {
        Ok(x)
    }
    fn lower(self) -> Result<f64, PotentialError> {
        Ok(self)
    }
}

impl Scalar for Mzc {
    fn one() -> Self {
        Mzc::ONE
    }
    fn mul(self, o: Self) -> Self {
        Mzc::mul(self, o)
    }
    fn div(self, o: Self) -> Self {
        Mzc::div(self, o)
    }
    fn add(self, o: Self) -> Self {
        Mzc::add(self, o)
    }
    fn lift(x: f64) -> Result<Self, PotentialError> {
        Mzc::from_real(x)
    }
    fn lower(self) -> Result<f64, PotentialError> {
        self.to_real()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert_eq!(Mzc::from_real(0.0).unwrap(), Mzc::new(1.0, 1));
        assert_eq!(Mzc::from_real(5.0).unwrap(), Mzc::new(5.0, 0));
        assert_eq!(Mzc::from_real(1.0).unwrap(), Mzc::new(1.0, 0));
        assert!(Mzc::from_real(-1.0).is_err());
        assert_eq!(Mzc::new(3.0, 1).to_real().unwrap(), 0.0);
        assert_eq!(Mzc::new(3.0, 0).to_real().unwrap(), 3.0);
        assert_eq!(Mzc::new(1.0, 2).to_real().unwrap(), 0.0);
        assert!(Mzc::new(1.0, -1).to_real().is_err());
    }

    #[test]
    fn rule_examples() {
        assert_eq!(Mzc::new(2.0, 0).mul(Mzc::new(3.0, 0)), Mzc::new(6.0, 0));
        assert_eq!(Mzc::new(1.0, 1).add(Mzc::new(5.0, 0)), Mzc::new(5.0, 0));
        assert_eq!(Mzc::new(3.0, 1).div(Mzc::new(2.0, 1)), Mzc::new(1.5, 0));
        assert_eq!(Mzc::new(2.0, 1).add(Mzc::new(3.0, 1)), Mzc::new(5.0, 1));
    }

    #[test]
    fn zero_divides_back_out() {
        let z = Mzc::from_real(0.0).unwrap();
        let x = Mzc::from_real(4.0).unwrap().mul(z);
        assert_eq!(x.to_real().unwrap(), 0.0);
        assert_eq!(x.div(z).to_real().unwrap(), 4.0);
    }
}
