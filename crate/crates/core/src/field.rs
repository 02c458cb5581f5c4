//! Small finite fields 𝔽_q for q ∈ {2, 3, 4, 5}.
//!
//! Elements are encoded as `u8` in `0..q`. For prime q this is the residue;
//! for q = 4 the element `a + b·ω` (with ω² = ω + 1) is encoded as `a | b << 1`.

use serde::{Deserialize, Serialize};

use crate::error::ForgeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gf {
    q: u8,
}

impl Gf {
    pub fn new(q: u32) -> Result<Self, ForgeError> {
        match q {
            2 | 3 | 4 | 5 => Ok(Gf { q: q as u8 }),
            _ => Err(ForgeError::UnsupportedOrder(q)),
        }
    }

    #[inline]
    pub fn order(&self) -> u8 {
        self.q
    }

    pub fn characteristic(&self) -> u8 {
        if self.q == 4 {
            2
        } else {
            self.q
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = u8> {
        0..self.q
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        if self.q == 4 {
            a ^ b
        } else {
            (a + b) % self.q
        }
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        if self.q == 4 || a == 0 {
            a
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        if self.q == 4 {
            gf4_mul(a, b)
        } else {
            ((a as u16 * b as u16) % self.q as u16) as u8
        }
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self, a: u8) -> u8 {
        assert!(a != 0, "inverse of zero in GF({})", self.q);
        (1..self.q)
            .find(|&b| self.mul(a, b) == 1)
            .expect("every nonzero element of a field is invertible")
    }

    /// Reduce an integer coefficient into the field. Only meaningful for prime q.
    pub fn from_int(&self, v: i64) -> u8 {
        if self.q == 4 {
            (v.rem_euclid(4)) as u8
        } else {
            v.rem_euclid(self.q as i64) as u8
        }
    }
}

fn gf4_mul(a: u8, b: u8) -> u8 {
    // (a0 + a1 ω)(b0 + b1 ω) with ω² = ω + 1
    let (a0, a1) = (a & 1, (a >> 1) & 1);
    let (b0, b1) = (b & 1, (b >> 1) & 1);
    let hi = a1 & b1;
    let c0 = (a0 & b0) ^ hi;
    let c1 = (a0 & b1) ^ (a1 & b0) ^ hi;
    c0 | (c1 << 1)
}

/// Scale a vector so its first nonzero coordinate is 1. Returns `None` for the zero vector.
pub fn normalize_projective(f: &Gf, v: &[u8]) -> Option<Vec<u8>> {
    let lead = v.iter().copied().find(|&x| x != 0)?;
    let inv = f.inv(lead);
    Some(v.iter().map(|&x| f.mul(x, inv)).collect())
}

/// All normalized nonzero vectors of 𝔽_q^dim in lexicographic order: the points of PG(dim-1, q).
pub fn projective_points(f: &Gf, dim: usize) -> Vec<Vec<u8>> {
    let q = f.order() as usize;
    let total = q.pow(dim as u32);
    let mut out = Vec::new();
    for code in 1..total {
        let mut v = vec![0u8; dim];
        let mut c = code;
        for slot in v.iter_mut().rev() {
            *slot = (c % q) as u8;
            c /= q;
        }
        if v.iter().find(|&&x| x != 0) == Some(&1) {
            out.push(v);
        }
    }
    out
}
