//! Symplectic n-qubit Pauli algebra.
//!
//! An operator is stored as `i^p · X^x · Z^z` with the X and Z parts packed
//! into 64-bit words. Qubit 0 is the leftmost letter of the text form and the
//! most significant bit of a computational basis index.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_DENSE_LIMIT: usize = 12;

const WORD: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::I, Letter::X, Letter::Y, Letter::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Letter {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

fn words(n: usize) -> usize {
    n.div_ceil(WORD)
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        PauliOperator {
            n,
            x: vec![0; words(n)],
            z: vec![0; words(n)],
            phase: 0,
        }
    }

    /// Hermitian Pauli with +1 sign from a letter list.
    pub fn from_letters(letters: &[Letter]) -> Self {
        let mut p = PauliOperator::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set_letter(q, l);
        }
        p
    }

    /// Single-qubit Pauli `letter` on qubit `q` of an n-qubit register.
    pub fn single(n: usize, q: usize, letter: Letter) -> Self {
        assert!(q < n, "qubit {q} out of range for n = {n}");
        let mut p = PauliOperator::identity(n);
        p.set_letter(q, letter);
        p
    }

    /// Replace the letter on qubit `q`, keeping the displayed sign.
    fn set_letter(&mut self, q: usize, letter: Letter) {
        let e = self.sign_power();
        let (xb, zb) = letter.bits();
        let (w, b) = (q / WORD, q % WORD);
        self.x[w] = (self.x[w] & !(1 << b)) | ((xb as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((zb as u64) << b);
        self.phase = ((e as usize + self.y_count()) % 4) as u8;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Power p in `i^p · X^x Z^z`.
    pub fn phase_power(&self) -> u8 {
        self.phase
    }

    /// Power e of the displayed coefficient `i^e` in front of the letters.
    pub fn sign_power(&self) -> u8 {
        ((self.phase as usize + 4 - self.y_count() % 4) % 4) as u8
    }

    pub fn x_bit(&self, q: usize) -> bool {
        (self.x[q / WORD] >> (q % WORD)) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        (self.z[q / WORD] >> (q % WORD)) & 1 == 1
    }

    pub fn letter(&self, q: usize) -> Letter {
        Letter::from_bits(self.x_bit(q), self.z_bit(q))
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.n).map(|q| self.letter(q)).collect()
    }

    fn y_count(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&q| self.x_bit(q) || self.z_bit(q))
            .collect()
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    pub fn is_hermitian(&self) -> bool {
        self.sign_power().is_multiple_of(2)
    }

    /// Same letters with a +1 sign.
    pub fn unsigned(&self) -> Self {
        self.with_sign_power(0)
    }

    pub fn with_sign_power(&self, e: u8) -> Self {
        let mut p = self.clone();
        p.phase = ((e as usize + self.y_count()) % 4) as u8;
        p
    }

    pub fn negate(&self) -> Self {
        let mut p = self.clone();
        p.phase = (p.phase + 2) % 4;
        p
    }

    /// Multiply by `i^k`.
    pub fn times_i_pow(&self, k: u8) -> Self {
        let mut p = self.clone();
        p.phase = (p.phase + k) % 4;
        p
    }

    pub fn eq_up_to_phase(&self, other: &Self) -> bool {
        self.n == other.n && self.x == other.x && self.z == other.z
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut swaps = 0u32;
        for (zw, xw) in self.z.iter().zip(&other.x) {
            swaps += (zw & xw).count_ones();
        }
        let phase = ((self.phase as u32 + other.phase as u32 + 2 * swaps) % 4) as u8;
        PauliOperator {
            n: self.n,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect(),
            z: self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect(),
            phase,
        }
    }

    fn symplectic_parity(&self, other: &Self) -> u32 {
        let mut acc = 0u32;
        for i in 0..self.x.len() {
            acc += ((self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i])).count_ones();
        }
        acc & 1
    }

    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_dims(other)?;
        Ok(self.symplectic_parity(other) == 0)
    }

    /// Commutation test for operators already known to share a register size.
    pub fn commutes_with(&self, other: &Self) -> bool {
        assert_eq!(self.n, other.n, "Pauli register sizes differ");
        self.symplectic_parity(other) == 0
    }

    pub fn anticommutes_with(&self, other: &Self) -> bool {
        !self.commutes_with(other)
    }

    pub fn inverse(&self) -> Self {
        // (i^p X^x Z^z)^{-1} = i^{-p} Z^z X^x = i^{-p} (-1)^{x·z} X^x Z^z
        let y = self.y_count() as u32;
        let mut p = self.clone();
        p.phase = ((4 - self.phase as u32 % 4 + 2 * y) % 4) as u8;
        p
    }

    /// `self ⊗ other`, with `other` on the trailing qubits.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut letters = self.letters();
        letters.extend(other.letters());
        PauliOperator::from_letters(&letters)
            .with_sign_power((self.sign_power() + other.sign_power()) % 4)
    }

    /// X words followed by Z words; the symplectic vector modulo phase.
    pub fn symplectic_words(&self) -> Vec<u64> {
        let mut v = self.x.clone();
        v.extend_from_slice(&self.z);
        v
    }

    /// X and Z masks over basis indices (qubit q ↔ bit n−1−q).
    pub fn index_masks(&self) -> (usize, usize) {
        assert!(self.n < usize::BITS as usize, "register too large for index masks");
        let mut xm = 0usize;
        let mut zm = 0usize;
        for q in 0..self.n {
            let bit = 1usize << (self.n - 1 - q);
            if self.x_bit(q) {
                xm |= bit;
            }
            if self.z_bit(q) {
                zm |= bit;
            }
        }
        (xm, zm)
    }

    /// `i^p` as a complex number.
    pub fn phase_factor(&self) -> Complex64 {
        i_pow(self.phase)
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.to_dense_limited(DEFAULT_DENSE_LIMIT)
    }

    pub fn to_dense_limited(&self, limit: usize) -> Result<DMatrix<Complex64>> {
        if self.n > limit {
            return Err(Error::DenseLimit { n: self.n, limit });
        }
        let dim = 1usize << self.n;
        let (xm, zm) = self.index_masks();
        let f = self.phase_factor();
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let sign = if (zm & k).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m[(k ^ xm, k)] = f * sign;
        }
        Ok(m)
    }
}

pub(crate) fn i_pow(p: u8) -> Complex64 {
    match p % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl Mul for &PauliOperator {
    type Output = PauliOperator;

    /// Panics when register sizes differ; use [`PauliOperator::multiply`] for a checked product.
    fn mul(self, rhs: &PauliOperator) -> PauliOperator {
        assert_eq!(self.n, rhs.n, "Pauli register sizes differ");
        self.mul_unchecked(rhs)
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.sign_power() {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for q in 0..self.n {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

impl FromStr for PauliOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::PauliParse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let t = s.trim();
        let (e, body) = if let Some(r) = t.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = t.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = t.strip_prefix('-') {
            (2, r)
        } else if let Some(r) = t.strip_prefix('+') {
            (0, r)
        } else if let Some(r) = t.strip_prefix('i') {
            (1, r)
        } else {
            (0, t)
        };
        if body.is_empty() {
            return Err(err("no qubit letters"));
        }
        let letters = body
            .chars()
            .map(|c| match c {
                'I' => Ok(Letter::I),
                'X' => Ok(Letter::X),
                'Y' => Ok(Letter::Y),
                'Z' => Ok(Letter::Z),
                _ => Err(err(&format!("unexpected character {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliOperator::from_letters(&letters).with_sign_power(e))
    }
}

impl Serialize for PauliOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
