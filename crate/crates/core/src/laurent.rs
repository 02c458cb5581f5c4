//! Laurent polynomials over 𝔽_q and 3×3 matrices of them.
//!
//! Every element of 𝔽_q[t, t⁻¹] is stored exactly; truncation only happens
//! where the caller works in a quotient `𝔽_q[t]/tᴰ` on purpose.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ForgeError, Result};
use crate::field::Gf;

/// `Σ coeffs[i] · t^(val + i)`, with no leading or trailing zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Laurent {
    val: i32,
    coeffs: Vec<u8>,
}

impl Laurent {
    pub fn zero() -> Laurent {
        Laurent::default()
    }

    pub fn one() -> Laurent {
        Laurent::monomial(1, 0)
    }

    pub fn monomial(c: u8, e: i32) -> Laurent {
        Laurent { val: e, coeffs: vec![c] }.trimmed()
    }

    /// Sums repeated exponents.
    pub fn from_terms(f: &Gf, terms: impl IntoIterator<Item = (i32, u8)>) -> Laurent {
        let mut acc: BTreeMap<i32, u8> = BTreeMap::new();
        for (e, c) in terms {
            let slot = acc.entry(e).or_insert(0);
            *slot = f.add(*slot, c % f.order());
        }
        let Some((&lo, _)) = acc.iter().next() else {
            return Laurent::zero();
        };
        let hi = *acc.keys().next_back().expect("nonempty");
        let mut coeffs = vec![0u8; (hi - lo + 1) as usize];
        for (e, c) in acc {
            coeffs[(e - lo) as usize] = c;
        }
        Laurent { val: lo, coeffs }.trimmed()
    }

    fn trimmed(mut self) -> Laurent {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|&&c| c == 0).count();
        if lead == self.coeffs.len() {
            return Laurent::zero();
        }
        self.coeffs.drain(..lead);
        self.val += lead as i32;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest exponent with nonzero coefficient.
    pub fn valuation(&self) -> Option<i32> {
        (!self.is_zero()).then_some(self.val)
    }

    pub fn degree(&self) -> Option<i32> {
        (!self.is_zero()).then(|| self.val + self.coeffs.len() as i32 - 1)
    }

    pub fn coeff(&self, e: i32) -> u8 {
        let i = e - self.val;
        if i < 0 {
            0
        } else {
            self.coeffs.get(i as usize).copied().unwrap_or(0)
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, u8)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(move |(i, &c)| (self.val + i as i32, c))
    }

    pub fn as_monomial(&self) -> Option<(u8, i32)> {
        (self.coeffs.len() == 1).then(|| (self.coeffs[0], self.val))
    }

    pub fn add(&self, f: &Gf, o: &Laurent) -> Laurent {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let lo = self.val.min(o.val);
        let hi = self.degree().unwrap().max(o.degree().unwrap());
        let coeffs = (lo..=hi).map(|e| f.add(self.coeff(e), o.coeff(e))).collect();
        Laurent { val: lo, coeffs }.trimmed()
    }

    pub fn neg(&self, f: &Gf) -> Laurent {
        Laurent {
            val: self.val,
            coeffs: self.coeffs.iter().map(|&c| f.neg(c)).collect(),
        }
    }

    pub fn sub(&self, f: &Gf, o: &Laurent) -> Laurent {
        self.add(f, &o.neg(f))
    }

    pub fn mul(&self, f: &Gf, o: &Laurent) -> Laurent {
        if self.is_zero() || o.is_zero() {
            return Laurent::zero();
        }
        let mut coeffs = vec![0u8; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] = f.add(coeffs[i + j], f.mul(a, b));
            }
        }
        Laurent { val: self.val + o.val, coeffs }.trimmed()
    }

    pub fn scale(&self, f: &Gf, c: u8) -> Laurent {
        Laurent {
            val: self.val,
            coeffs: self.coeffs.iter().map(|&x| f.mul(x, c)).collect(),
        }
        .trimmed()
    }

    /// Multiply by `t^k`.
    pub fn shift(&self, k: i32) -> Laurent {
        if self.is_zero() {
            return Laurent::zero();
        }
        Laurent {
            val: self.val + k,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Drop every term with exponent `≥ below`.
    pub fn truncate(&self, below: i32) -> Laurent {
        if self.is_zero() || self.val >= below {
            return Laurent::zero();
        }
        let keep = ((below - self.val) as usize).min(self.coeffs.len());
        Laurent {
            val: self.val,
            coeffs: self.coeffs[..keep].to_vec(),
        }
        .trimmed()
    }

    /// Terms with exponent `≥ from`, divided by `t^from`.
    pub fn quotient_from(&self, from: i32) -> Laurent {
        Laurent::from_terms_raw(self.terms().filter(|&(e, _)| e >= from).map(|(e, c)| (e - from, c)))
    }

    fn from_terms_raw(terms: impl Iterator<Item = (i32, u8)>) -> Laurent {
        let terms: Vec<(i32, u8)> = terms.collect();
        let Some(&(lo, _)) = terms.first() else {
            return Laurent::zero();
        };
        let hi = terms.last().unwrap().0;
        let mut coeffs = vec![0u8; (hi - lo + 1) as usize];
        for (e, c) in terms {
            coeffs[(e - lo) as usize] = c;
        }
        Laurent { val: lo, coeffs }.trimmed()
    }

    /// For `self = tᵛ·u` with `u` a unit power series, the inverse of `u`
    /// modulo `t^prec`.
    pub fn unit_inverse(&self, f: &Gf, prec: i32) -> Laurent {
        assert!(!self.is_zero(), "inverse of zero");
        let n = prec.max(1) as usize;
        let u = &self.coeffs;
        let inv0 = f.inv(u[0]);
        let mut out = vec![0u8; n];
        out[0] = inv0;
        for k in 1..n {
            // Σ_{i=0..k} u_i out_{k-i} = 0
            let mut s = 0u8;
            for i in 1..=k.min(u.len() - 1) {
                s = f.add(s, f.mul(u[i], out[k - i]));
            }
            out[k] = f.mul(f.neg(s), inv0);
        }
        Laurent { val: 0, coeffs: out }.trimmed()
    }

    /// Value at `t = 0` of a polynomial (coefficient of `t⁰`).
    pub fn constant_term(&self) -> u8 {
        self.coeff(0)
    }
}

impl Serialize for Laurent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m: BTreeMap<i32, u8> = self.terms().collect();
        m.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Laurent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m: BTreeMap<i32, u8> = BTreeMap::deserialize(d)?;
        Ok(Laurent::from_terms_raw(m.into_iter().filter(|&(_, c)| c != 0)))
    }
}

/// A 3×3 matrix over 𝔽_q[t, t⁻¹]; `m[i][j]` is row `i`, column `j`.
pub type LMatrix = [[Laurent; 3]; 3];

pub fn identity() -> LMatrix {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { Laurent::one() } else { Laurent::zero() }))
}

/// `diag(t^e₀, t^e₁, t^e₂)`.
pub fn diagonal(e: [i32; 3]) -> LMatrix {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| if i == j { Laurent::monomial(1, e[i]) } else { Laurent::zero() })
    })
}

pub fn from_constant(m: [[u8; 3]; 3]) -> LMatrix {
    std::array::from_fn(|i| std::array::from_fn(|j| Laurent::monomial(m[i][j], 0)))
}

pub fn mat_mul(f: &Gf, a: &LMatrix, b: &LMatrix) -> LMatrix {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            (0..3).fold(Laurent::zero(), |acc, k| acc.add(f, &a[i][k].mul(f, &b[k][j])))
        })
    })
}

pub fn det2(f: &Gf, a: &Laurent, b: &Laurent, c: &Laurent, d: &Laurent) -> Laurent {
    a.mul(f, d).sub(f, &b.mul(f, c))
}

/// Determinant of the 3×3 matrix with the given columns.
pub fn det_columns(f: &Gf, c0: &[Laurent; 3], c1: &[Laurent; 3], c2: &[Laurent; 3]) -> Laurent {
    let m: LMatrix = std::array::from_fn(|i| [c0[i].clone(), c1[i].clone(), c2[i].clone()]);
    det(f, &m)
}

pub fn det(f: &Gf, m: &LMatrix) -> Laurent {
    let t0 = m[0][0].mul(f, &det2(f, &m[1][1], &m[1][2], &m[2][1], &m[2][2]));
    let t1 = m[0][1].mul(f, &det2(f, &m[1][0], &m[1][2], &m[2][0], &m[2][2]));
    let t2 = m[0][2].mul(f, &det2(f, &m[1][0], &m[1][1], &m[2][0], &m[2][1]));
    t0.sub(f, &t1).add(f, &t2)
}

pub fn adjugate(f: &Gf, m: &LMatrix) -> LMatrix {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            // cofactor of entry (j, i)
            let rows: Vec<usize> = (0..3).filter(|&r| r != j).collect();
            let cols: Vec<usize> = (0..3).filter(|&c| c != i).collect();
            let minor = det2(
                f,
                &m[rows[0]][cols[0]],
                &m[rows[0]][cols[1]],
                &m[rows[1]][cols[0]],
                &m[rows[1]][cols[1]],
            );
            if (i + j) % 2 == 1 {
                minor.neg(f)
            } else {
                minor
            }
        })
    })
}

/// Inverse over 𝔽_q[t, t⁻¹]; exists exactly when the determinant is a monomial.
pub fn inverse(f: &Gf, m: &LMatrix) -> Result<LMatrix> {
    let d = det(f, m);
    let (c, e) = d.as_monomial().ok_or(ForgeError::NotLaurentInvertible)?;
    let inv = Laurent::monomial(f.inv(c), -e);
    let adj = adjugate(f, m);
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| adj[i][j].mul(f, &inv))))
}

pub fn min_valuation(m: &LMatrix) -> Option<i32> {
    m.iter().flatten().filter_map(Laurent::valuation).min()
}

pub fn shift_matrix(m: &LMatrix, k: i32) -> LMatrix {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].shift(k)))
}

pub fn column(m: &LMatrix, j: usize) -> [Laurent; 3] {
    std::array::from_fn(|i| m[i][j].clone())
}

pub fn from_columns(cols: &[[Laurent; 3]; 3]) -> LMatrix {
    std::array::from_fn(|i| std::array::from_fn(|j| cols[j][i].clone()))
}
