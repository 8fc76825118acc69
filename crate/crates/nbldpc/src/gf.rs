//! GF(2^m) arithmetic on the m-bit vector representation.
//!
//! A field element is stored as its symbol index in `0..2^m`; bit `i` of the
//! index is coordinate `i` of the bit-vector representation, so `1 = (1,0,..)`
//! is index 1 and the primitive element `alpha = (0,1,0,..)` is index 2.
//! Addition is XOR of indices. Multiplication goes through exp/log tables
//! built from a primitive polynomial.
//!
//! The table also precomputes, for every exponent `i`, the binary m-by-m
//! matrix `(A^i)^T` where `A` is the companion matrix of the primitive
//! polynomial. Applying `A^i` to a bit vector multiplies the element by
//! `alpha^i`; applying the transpose realizes the index permutation used on
//! Walsh-spectrum vectors.

use thiserror::Error;

/// Largest supported extension degree. Message vectors have length `2^m` and
/// pairwise log-convolutions cost `2^{2m}`, so degrees beyond 10 are refused.
pub const MAX_DEGREE: u32 = 10;

/// An element of GF(2^m), stored as its symbol index (`value < 2^m`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Gf(pub u16);

impl Gf {
    pub const ZERO: Gf = Gf(0);
    pub const ONE: Gf = Gf(1);

    /// Coordinate `i` of the bit-vector representation.
    #[inline]
    pub fn bit(self, i: u32) -> u8 {
        ((self.0 >> i) & 1) as u8
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Parity (mod 2) of the dot product of two bit-vector representations.
///
/// This is the exponent of `(-1)` in the transform kernel: for
/// `z = (1,1,0,1,1,1,0,0)` and `x = (1,0,0,1,1,0,1,1)` the dot product is 3,
/// so the parity is 1.
#[inline]
pub fn dot_parity(z: Gf, x: Gf) -> u8 {
    ((z.0 & x.0).count_ones() & 1) as u8
}

/// A binary m-by-m matrix acting on bit-vector representations.
///
/// Row `r` is stored as a bitmask over columns, so `(M x)_r` is the parity of
/// `rows[r] & x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinMatrix {
    rows: Vec<u16>,
}

impl BinMatrix {
    pub fn identity(m: u32) -> Self {
        BinMatrix {
            rows: (0..m).map(|r| 1u16 << r).collect(),
        }
    }

    pub fn from_rows(rows: Vec<u16>) -> Self {
        BinMatrix { rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Matrix-vector product over GF(2).
    #[inline]
    pub fn apply(&self, x: Gf) -> Gf {
        let mut out = 0u16;
        for (r, &mask) in self.rows.iter().enumerate() {
            out |= (((mask & x.0).count_ones() & 1) as u16) << r;
        }
        Gf(out)
    }

    pub fn transpose(&self) -> BinMatrix {
        let m = self.rows.len();
        let rows = (0..m)
            .map(|r| {
                let mut mask = 0u16;
                for (c, &row) in self.rows.iter().enumerate() {
                    mask |= ((row >> r) & 1) << c;
                }
                mask
            })
            .collect();
        BinMatrix { rows }
    }

    /// Matrix product `self * other` over GF(2).
    pub fn matmul(&self, other: &BinMatrix) -> BinMatrix {
        let ot = other.transpose();
        let rows = self
            .rows
            .iter()
            .map(|&row| {
                let mut mask = 0u16;
                for (c, &col) in ot.rows.iter().enumerate() {
                    mask |= (((row & col).count_ones() & 1) as u16) << c;
                }
                mask
            })
            .collect();
        BinMatrix { rows }
    }
}

/// Errors from field construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("extension degree {0} outside supported range 1..={MAX_DEGREE}")]
    DegreeOutOfRange(u32),
    #[error("polynomial mask {poly:#x} out of range for degree {m}")]
    PolyOutOfRange { m: u32, poly: u32 },
    #[error("polynomial mask {poly:#x} is not primitive for degree {m} (generator period {period} != {expected})")]
    NotPrimitive { m: u32, poly: u32, period: usize, expected: usize },
}

/// Default primitive polynomials per degree, as bitmasks of the coefficients
/// of `x^0..x^{m-1}` (the monic `x^m` term is implicit). Index by `m - 1`.
const DEFAULT_POLYS: [u32; MAX_DEGREE as usize] = [
    0x001, // x + 1
    0x003, // x^2 + x + 1
    0x003, // x^3 + x + 1
    0x003, // x^4 + x + 1
    0x005, // x^5 + x^2 + 1
    0x003, // x^6 + x + 1
    0x009, // x^7 + x^3 + 1
    0x01d, // x^8 + x^4 + x^3 + x^2 + 1
    0x011, // x^9 + x^4 + 1
    0x009, // x^10 + x^3 + 1
];

/// Precomputed GF(2^m) arithmetic: exp/log tables and companion-matrix powers.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct FieldTable {
    m: u32,
    poly: u32,
    q: usize,
    /// `exp[e]` is the symbol index of `alpha^e`, for `e` in `0..q-1`.
    exp: Vec<u16>,
    /// `log[v]` is the exponent of nonzero symbol `v`; `log[0]` is a sentinel.
    log: Vec<u16>,
    /// `companion_pow[i]` is `(A^i)^T`, the spectrum-index permutation matrix
    /// for the coefficient `alpha^i`.
    companion_pow: Vec<BinMatrix>,
}

impl FieldTable {
    /// Build GF(2^m) with the built-in default primitive polynomial.
    pub fn new(m: u32) -> Result<Self, GfError> {
        if m == 0 || m > MAX_DEGREE {
            return Err(GfError::DegreeOutOfRange(m));
        }
        Self::with_poly(m, DEFAULT_POLYS[(m - 1) as usize])
    }

    /// Build GF(2^m) from an explicit polynomial bitmask.
    ///
    /// The mask carries the coefficients of `x^0..x^{m-1}`; `x^m` is implicit.
    /// Non-primitive polynomials are rejected: the generator sequence must
    /// have period exactly `2^m - 1`.
    pub fn with_poly(m: u32, poly: u32) -> Result<Self, GfError> {
        if m == 0 || m > MAX_DEGREE {
            return Err(GfError::DegreeOutOfRange(m));
        }
        let q = 1usize << m;
        if poly as usize >= q {
            return Err(GfError::PolyOutOfRange { m, poly });
        }

        let mut exp = vec![0u16; q - 1];
        let mut val = 1u16;
        for (e, slot) in exp.iter_mut().enumerate() {
            if val == 1 && e > 0 {
                return Err(GfError::NotPrimitive { m, poly, period: e, expected: q - 1 });
            }
            *slot = val;
            val <<= 1;
            if val as usize >= q {
                val = (val & (q as u16 - 1)) ^ poly as u16;
            }
        }
        if val != 1 {
            // The sequence either repeats a non-unit state or collapses; both
            // mean the generator period is not q-1.
            return Err(GfError::NotPrimitive { m, poly, period: q, expected: q - 1 });
        }

        let mut log = vec![u16::MAX; q];
        for (e, &v) in exp.iter().enumerate() {
            if log[v as usize] != u16::MAX {
                return Err(GfError::NotPrimitive { m, poly, period: e, expected: q - 1 });
            }
            log[v as usize] = e as u16;
        }

        let mut table = FieldTable {
            m,
            poly,
            q,
            exp,
            log,
            companion_pow: Vec::new(),
        };
        // Row j of (A^i)^T is column j of A^i, i.e. the image of the unit
        // vector e_j = alpha^j under multiplication by alpha^i.
        table.companion_pow = (0..q - 1)
            .map(|i| {
                let h = table.alpha_pow(i as u32);
                BinMatrix::from_rows((0..m).map(|j| table.mul(h, Gf(1 << j)).0).collect())
            })
            .collect();
        Ok(table)
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    /// Field size `2^m`.
    pub fn size(&self) -> usize {
        self.q
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// `alpha^e` (exponent taken mod `2^m - 1`).
    pub fn alpha_pow(&self, e: u32) -> Gf {
        Gf(self.exp[e as usize % (self.q - 1)])
    }

    /// Exponent of a nonzero element.
    ///
    /// # Panics
    ///
    /// Panics on the zero element.
    pub fn log(&self, a: Gf) -> u32 {
        assert!(!a.is_zero(), "log of zero");
        self.log[a.0 as usize] as u32
    }

    /// Field addition: component-wise GF(2) sum of the bit representations.
    #[inline]
    pub fn add(&self, a: Gf, b: Gf) -> Gf {
        Gf(a.0 ^ b.0)
    }

    /// Field multiplication through the exp/log tables.
    #[inline]
    pub fn mul(&self, a: Gf, b: Gf) -> Gf {
        if a.is_zero() || b.is_zero() {
            return Gf::ZERO;
        }
        let e = self.log[a.0 as usize] as usize + self.log[b.0 as usize] as usize;
        Gf(self.exp[e % (self.q - 1)])
    }

    /// Multiplicative inverse.
    ///
    /// # Panics
    ///
    /// Panics on the zero element.
    pub fn inv(&self, a: Gf) -> Gf {
        assert!(!a.is_zero(), "inverse of zero");
        let e = self.log[a.0 as usize] as usize;
        Gf(self.exp[(self.q - 1 - e) % (self.q - 1)])
    }

    /// All nonzero elements, in exponent order.
    pub fn nonzero_elements(&self) -> impl Iterator<Item = Gf> + '_ {
        self.exp.iter().map(|&v| Gf(v))
    }

    /// All elements in index order.
    pub fn elements(&self) -> impl Iterator<Item = Gf> {
        (0..self.q as u16).map(Gf)
    }

    /// The spectrum-index permutation matrix `(A^i)^T` for coefficient
    /// `h = alpha^i`.
    ///
    /// # Panics
    ///
    /// Panics if `h` is zero.
    pub fn fourier_matrix(&self, h: Gf) -> &BinMatrix {
        &self.companion_pow[self.log(h) as usize]
    }

    /// Inverse spectrum-index permutation: `((A^i)^T)^{-1} = (A^{-i})^T`.
    pub fn fourier_matrix_inv(&self, h: Gf) -> &BinMatrix {
        let e = self.log(h) as usize;
        &self.companion_pow[(self.q - 1 - e) % (self.q - 1)]
    }

    /// `(A^i)^T` by exponent.
    pub fn companion_pow(&self, i: usize) -> &BinMatrix {
        &self.companion_pow[i]
    }

    /// The companion-matrix power `A^i` itself; applying it to a bit vector
    /// multiplies the element by `alpha^i`.
    pub fn mul_matrix(&self, i: usize) -> BinMatrix {
        self.companion_pow[i].transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf8() -> FieldTable {
        FieldTable::new(3).unwrap()
    }

    #[test]
    fn gf8_bit_patterns_match_reference_listing() {
        let f = gf8();
        // 1=(1,0,0), a=(0,1,0), a^2=(0,0,1), a^3=(1,1,0), a^4=(0,1,1),
        // a^5=(1,1,1), a^6=(1,0,1)
        let expected = [1u16, 2, 4, 3, 6, 7, 5];
        for (e, &v) in expected.iter().enumerate() {
            assert_eq!(f.alpha_pow(e as u32), Gf(v), "alpha^{e}");
        }
    }

    #[test]
    fn gf2_is_the_binary_field() {
        let f = FieldTable::new(1).unwrap();
        assert_eq!(f.size(), 2);
        assert_eq!(f.alpha_pow(0), Gf(1));
        assert_eq!(f.mul(Gf(1), Gf(1)), Gf(1));
    }

    #[test]
    fn reducible_poly_rejected() {
        // x^3 + x^2 + x + 1 has generator period 4, not 7.
        let err = FieldTable::with_poly(3, 0b111).unwrap_err();
        match err {
            GfError::NotPrimitive { period, expected, .. } => {
                assert_eq!(period, 4);
                assert_eq!(expected, 7);
            }
            other => panic!("expected NotPrimitive, got {other:?}"),
        }
    }

    #[test]
    fn degree_out_of_range_rejected() {
        assert!(FieldTable::new(0).is_err());
        assert!(FieldTable::new(11).is_err());
    }

    #[test]
    fn add_matches_xor_of_bit_patterns() {
        let f = gf8();
        // a^3 + a = (1,1,0) xor (0,1,0) = (1,0,0) = 1
        assert_eq!(f.add(f.alpha_pow(3), f.alpha_pow(1)), Gf::ONE);
        for x in f.elements() {
            assert_eq!(f.add(x, x), Gf::ZERO);
            assert_eq!(f.add(x, Gf::ZERO), x);
        }
    }

    #[test]
    fn mul_exponent_arithmetic() {
        let f = gf8();
        // a^2 * a = a^3 = (1,1,0)
        assert_eq!(f.mul(f.alpha_pow(2), f.alpha_pow(1)), Gf(3));
        // a^6 * a^6 = a^5 = (1,1,1) since 12 mod 7 = 5
        assert_eq!(f.mul(f.alpha_pow(6), f.alpha_pow(6)), Gf(7));
        for x in f.elements() {
            assert_eq!(f.mul(Gf::ONE, x), x);
            assert_eq!(f.mul(Gf::ZERO, x), Gf::ZERO);
        }
    }

    #[test]
    fn inverse_defining_property() {
        let f = gf8();
        assert_eq!(f.inv(Gf::ONE), Gf::ONE);
        assert_eq!(f.inv(f.alpha_pow(1)), f.alpha_pow(6));
        for x in f.nonzero_elements() {
            assert_eq!(f.mul(x, f.inv(x)), Gf::ONE);
        }
    }

    #[test]
    #[should_panic(expected = "inverse of zero")]
    fn inverse_of_zero_rejected() {
        gf8().inv(Gf::ZERO);
    }

    #[test]
    fn companion_matrix_action_is_field_multiplication() {
        let f = gf8();
        // A applied to 1 = (1,0,0) gives alpha = (0,1,0).
        assert_eq!(f.mul_matrix(1).apply(Gf::ONE), Gf(2));
        let id = BinMatrix::identity(3);
        for x in f.elements() {
            assert_eq!(id.apply(x), x);
        }
        // A^i alpha^j = alpha^{i+j}, exhaustively.
        for i in 0..7 {
            let ai = f.mul_matrix(i);
            let h = f.alpha_pow(i as u32);
            for x in f.elements() {
                assert_eq!(ai.apply(x), f.mul(h, x), "A^{i} on {x:?}");
            }
        }
    }

    #[test]
    fn companion_pow_zero_is_identity() {
        for m in 1..=6 {
            let f = FieldTable::new(m).unwrap();
            assert_eq!(*f.companion_pow(0), BinMatrix::identity(m));
        }
    }

    #[test]
    fn companion_pow_composition() {
        let f = FieldTable::new(4).unwrap();
        let period = f.size() - 1;
        for i in 0..period {
            for j in 0..period {
                let prod = f.companion_pow(i).matmul(f.companion_pow(j));
                assert_eq!(&prod, f.companion_pow((i + j) % period));
            }
        }
    }

    #[test]
    fn dot_parity_reference_example() {
        // z=(1,1,0,1,1,1,0,0), x=(1,0,0,1,1,0,1,1): dot product 3, parity 1.
        let z = Gf(0b0011_1011);
        let x = Gf(0b1101_1001);
        assert_eq!((z.0 & x.0).count_ones(), 3);
        assert_eq!(dot_parity(z, x), 1);
    }

    #[test]
    fn dot_parity_zero_and_symmetry() {
        let f = FieldTable::new(4).unwrap();
        for x in f.elements() {
            assert_eq!(dot_parity(Gf::ZERO, x), 0);
            for z in f.elements() {
                assert_eq!(dot_parity(z, x), dot_parity(x, z));
            }
        }
    }

    #[test]
    fn distributivity_exhaustive_small_fields() {
        for m in 1..=4 {
            let f = FieldTable::new(m).unwrap();
            for a in f.elements() {
                for b in f.elements() {
                    for c in f.elements() {
                        assert_eq!(
                            f.mul(a, f.add(b, c)),
                            f.add(f.mul(a, b), f.mul(a, c)),
                            "m={m} a={a:?} b={b:?} c={c:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn transpose_adjoint_identity_exhaustive() {
        // dot(z, A^i x) == dot((A^i)^T z, x) for all z, x, i.
        for m in 1..=4 {
            let f = FieldTable::new(m).unwrap();
            for i in 0..f.size() - 1 {
                let a = f.mul_matrix(i);
                let at = f.companion_pow(i);
                for z in f.elements() {
                    for x in f.elements() {
                        assert_eq!(
                            dot_parity(z, a.apply(x)),
                            dot_parity(at.apply(z), x),
                            "m={m} i={i} z={z:?} x={x:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn default_polys_are_primitive_for_all_degrees() {
        for m in 1..=MAX_DEGREE {
            let f = FieldTable::new(m).unwrap();
            assert_eq!(f.size(), 1 << m);
            // exp and log are mutual inverses on nonzero symbols.
            for e in 0..f.size() - 1 {
                assert_eq!(f.log(f.alpha_pow(e as u32)), e as u32);
            }
        }
    }
}
