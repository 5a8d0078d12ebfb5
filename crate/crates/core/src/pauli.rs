//! Phase-free Pauli operators in binary symplectic form.

use std::fmt;

use crate::error::{Error, Result};
use crate::f2::BitVec;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliVec {
    pub x: BitVec,
    pub z: BitVec,
}

impl PauliVec {
    pub fn identity(n: usize) -> Self {
        Self {
            x: BitVec::zeros(n),
            z: BitVec::zeros(n),
        }
    }

    pub fn new(x: BitVec, z: BitVec) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::LengthMismatch(x.len(), z.len()));
        }
        Ok(Self { x, z })
    }

    pub fn single(n: usize, qubit: usize, op: char) -> Self {
        let mut p = Self::identity(n);
        match op {
            'X' => p.x.set(qubit, true),
            'Z' => p.z.set(qubit, true),
            'Y' => {
                p.x.set(qubit, true);
                p.z.set(qubit, true);
            }
            _ => {}
        }
        p
    }

    pub fn z_type(z: BitVec) -> Self {
        Self {
            x: BitVec::zeros(z.len()),
            z,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.x.or(&self.z).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// `x_p . z_q + x_q . z_p` over F2; `false` means the operators commute.
    pub fn symplectic_product(&self, other: &PauliVec) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(self.x.dot(&other.z) ^ other.x.dot(&self.z))
    }

    pub fn commutes_with(&self, other: &PauliVec) -> bool {
        !self.symplectic_product(other).expect("length mismatch")
    }

    /// Product up to phase.
    pub fn mul_assign(&mut self, other: &PauliVec) {
        self.x.xor_assign(&other.x);
        self.z.xor_assign(&other.z);
    }

    pub fn mul(&self, other: &PauliVec) -> PauliVec {
        let mut p = self.clone();
        p.mul_assign(other);
        p
    }

    pub fn op_at(&self, qubit: usize) -> char {
        match (self.x.get(qubit), self.z.get(qubit)) {
            (false, false) => 'I',
            (true, false) => 'X',
            (false, true) => 'Z',
            (true, true) => 'Y',
        }
    }
}

impl std::str::FromStr for PauliVec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        let mut p = PauliVec::identity(n);
        for (i, c) in s.chars().enumerate() {
            match c {
                'I' => {}
                'X' | 'Y' | 'Z' => {
                    let q = PauliVec::single(n, i, c);
                    p.mul_assign(&q);
                }
                _ => return Err(Error::Config(format!("bad Pauli character {c:?}"))),
            }
        }
        Ok(p)
    }
}

impl fmt::Debug for PauliVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            write!(f, "{}", self.op_at(i))?;
        }
        Ok(())
    }
}

impl fmt::Display for PauliVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symplectic_examples() {
        let x0 = PauliVec::single(2, 0, 'X');
        let z0 = PauliVec::single(2, 0, 'Z');
        let z1 = PauliVec::single(2, 1, 'Z');
        assert!(x0.symplectic_product(&z0).unwrap());
        assert!(!x0.symplectic_product(&z1).unwrap());
        assert!(x0.symplectic_product(&PauliVec::identity(3)).is_err());
    }

    #[test]
    fn parse_and_weight() {
        let p: PauliVec = "XIZYI".parse().unwrap();
        assert_eq!(p.weight(), 3);
        assert_eq!(format!("{p}"), "XIZYI");
        assert!("XQ".parse::<PauliVec>().is_err());
    }
}
