//! Transforms and convolutions on length-`2^m` message vectors.
//!
//! Four message representations share these kernels:
//!
//! - probability vectors (entries in `[0,1]`),
//! - log vectors (entries nominally in `[-inf, 0]`, minus infinity encoded as
//!   a finite floor),
//! - Walsh-spectrum vectors (entries nominally in `[-1,1]`),
//! - signed-log vectors (pairs of a GF(2) sign bit and a log magnitude).
//!
//! The transform is the Walsh-Hadamard transform with kernel
//! `(-1)^{dot(z,x)}`, which plays the role of the Fourier transform over the
//! additive group of GF(2^m). Convolution is indexed by XOR since field
//! addition is XOR of the bit representations.

use crate::gf::{FieldTable, Gf};

/// Finite stand-in for log(0). Sits below the double-precision exp underflow
/// threshold so `exp(floor)` rounds to zero; arithmetic saturates here.
pub const DEFAULT_LOG_FLOOR: f64 = -745.0;

/// In-place Walsh-Hadamard butterfly, O(m 2^m). No scaling.
pub fn wht_in_place(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let a = v[j];
                let b = v[j + h];
                v[j] = a + b;
                v[j + h] = a - b;
            }
            i += h * 2;
        }
        h *= 2;
    }
}

/// Walsh-Hadamard transform: `P(z) = sum_x p(x) (-1)^{dot(z,x)}`.
pub fn wht(p: &[f64]) -> Vec<f64> {
    let mut v = p.to_vec();
    wht_in_place(&mut v);
    v
}

/// Inverse transform: `wht` followed by division by `2^m`.
pub fn iwht(spectrum: &[f64]) -> Vec<f64> {
    let scale = 1.0 / spectrum.len() as f64;
    let mut v = spectrum.to_vec();
    wht_in_place(&mut v);
    for x in v.iter_mut() {
        *x *= scale;
    }
    v
}

/// Direct O(2^{2m}) convolution over the additive group:
/// `out(x) = sum_{x1 + x2 = x} a(x1) b(x2)` with field addition, i.e. XOR of
/// indices. This is the reference path for all convolution call sites.
///
/// # Panics
///
/// Panics if the lengths differ.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "convolution length mismatch");
    let n = a.len();
    let mut out = vec![0.0; n];
    for (x1, &av) in a.iter().enumerate() {
        if av == 0.0 {
            continue;
        }
        for (x2, &bv) in b.iter().enumerate() {
            out[x1 ^ x2] += av * bv;
        }
    }
    out
}

/// Transform-domain fast path: `iwht(wht(a) . wht(b))`, O(m 2^m).
///
/// Only probability-domain call sites may use it; the log-domain algorithms
/// exist precisely because this shortcut is unavailable there.
pub fn convolve_via_wht(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "convolution length mismatch");
    let mut fa = wht(a);
    let fb = wht(b);
    for (x, y) in fa.iter_mut().zip(fb.iter()) {
        *x *= y;
    }
    iwht(&fa)
}

/// Log-domain convolution: `out(x) = ln sum_{x1+x2=x} exp(a(x1) + b(x2))`,
/// accumulated with a max-factored log-sum-exp per output bucket. Entries at
/// or below `floor` are treated as exact zeros and saturate silently.
pub fn log_convolve(a: &[f64], b: &[f64], floor: f64) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "convolution length mismatch");
    let n = a.len();
    let mut max = vec![f64::NEG_INFINITY; n];
    for (x1, &av) in a.iter().enumerate() {
        if av <= floor {
            continue;
        }
        for (x2, &bv) in b.iter().enumerate() {
            if bv <= floor {
                continue;
            }
            let s = av + bv;
            let bucket = x1 ^ x2;
            if s > max[bucket] {
                max[bucket] = s;
            }
        }
    }
    let mut sum = vec![0.0; n];
    for (x1, &av) in a.iter().enumerate() {
        if av <= floor {
            continue;
        }
        for (x2, &bv) in b.iter().enumerate() {
            if bv <= floor {
                continue;
            }
            let bucket = x1 ^ x2;
            sum[bucket] += (av + bv - max[bucket]).exp();
        }
    }
    for (out, &s) in max.iter_mut().zip(sum.iter()) {
        *out = if out.is_finite() { (*out + s.ln()).max(floor) } else { floor };
    }
    max
}

/// One entry of a signed-log vector: an element of GF(2) x [-inf, 0].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    /// GF(2) sign bit: 0 for positive, 1 for negative.
    pub sign: u8,
    /// Log magnitude, floored.
    pub mag: f64,
}

impl SignedLog {
    pub const fn new(sign: u8, mag: f64) -> Self {
        SignedLog { sign, mag }
    }

    /// Zero element under the floor encoding. The sign of an exact zero is
    /// fixed to 0 for reproducibility.
    pub const fn zero(floor: f64) -> Self {
        SignedLog { sign: 0, mag: floor }
    }

    pub fn is_zero(&self, floor: f64) -> bool {
        self.mag <= floor
    }

    /// Pointwise product in the signed-log representation: signs add in
    /// GF(2), magnitudes add with saturation at the floor.
    #[inline]
    pub fn mul(self, other: SignedLog, floor: f64) -> SignedLog {
        if self.mag <= floor || other.mag <= floor {
            SignedLog::zero(floor)
        } else {
            SignedLog {
                sign: self.sign ^ other.sign,
                mag: self.mag + other.mag,
            }
        }
    }

    /// Pointwise quotient: signs add in GF(2), magnitudes subtract.
    #[inline]
    pub fn div(self, other: SignedLog, floor: f64) -> SignedLog {
        if self.mag <= floor {
            SignedLog::zero(floor)
        } else {
            SignedLog {
                sign: self.sign ^ other.sign,
                mag: self.mag - other.mag,
            }
        }
    }
}

/// Signed-log codec: `gamma(x) = (sign(x), ln|x|)`.
///
/// The sign of an exact zero is 0, a deterministic choice so repeated runs
/// agree bit for bit.
pub fn gamma(x: f64, floor: f64) -> SignedLog {
    if x == 0.0 {
        return SignedLog::zero(floor);
    }
    let mag = x.abs().ln().max(floor);
    SignedLog {
        sign: if x < 0.0 { 1 } else { 0 },
        mag,
    }
}

/// Inverse of [`gamma`]: `(-1)^sign * exp(mag)`, with floored magnitudes
/// decoding to exact zero.
pub fn gamma_inv(s: SignedLog, floor: f64) -> f64 {
    if s.mag <= floor {
        return 0.0;
    }
    let v = s.mag.exp();
    if s.sign == 1 {
        -v
    } else {
        v
    }
}

/// Log-convolution of signed-log vectors: the signed-real convolution of the
/// decoded values, re-encoded. Positive and negative mass are accumulated in
/// separate max-factored log-sum-exp accumulators per output bucket and
/// combined with the sign of the larger magnitude; exact cancellation yields
/// the floor with sign 0.
pub fn signed_log_convolve(a: &[SignedLog], b: &[SignedLog], floor: f64) -> Vec<SignedLog> {
    assert_eq!(a.len(), b.len(), "convolution length mismatch");
    let n = a.len();
    // max[bucket][sign], sum[bucket][sign]
    let mut max = vec![[f64::NEG_INFINITY; 2]; n];
    for (x1, av) in a.iter().enumerate() {
        if av.mag <= floor {
            continue;
        }
        for (x2, bv) in b.iter().enumerate() {
            if bv.mag <= floor {
                continue;
            }
            let s = av.mag + bv.mag;
            let sign = (av.sign ^ bv.sign) as usize;
            let bucket = x1 ^ x2;
            if s > max[bucket][sign] {
                max[bucket][sign] = s;
            }
        }
    }
    let mut sum = vec![[0.0f64; 2]; n];
    for (x1, av) in a.iter().enumerate() {
        if av.mag <= floor {
            continue;
        }
        for (x2, bv) in b.iter().enumerate() {
            if bv.mag <= floor {
                continue;
            }
            let sign = (av.sign ^ bv.sign) as usize;
            let bucket = x1 ^ x2;
            sum[bucket][sign] += (av.mag + bv.mag - max[bucket][sign]).exp();
        }
    }
    (0..n)
        .map(|x| {
            let lp = if max[x][0].is_finite() {
                Some(max[x][0] + sum[x][0].ln())
            } else {
                None
            };
            let ln = if max[x][1].is_finite() {
                Some(max[x][1] + sum[x][1].ln())
            } else {
                None
            };
            combine_signed_sums(lp, ln, floor)
        })
        .collect()
}

/// Combine the log of accumulated positive mass and the log of accumulated
/// negative mass into one signed-log value.
fn combine_signed_sums(lp: Option<f64>, ln: Option<f64>, floor: f64) -> SignedLog {
    match (lp, ln) {
        (None, None) => SignedLog::zero(floor),
        (Some(p), None) => SignedLog::new(0, p.max(floor)),
        (None, Some(n)) => SignedLog::new(1, n.max(floor)),
        (Some(p), Some(n)) => {
            let (sign, hi, lo) = if p > n { (0, p, n) } else { (1, n, p) };
            // ln(e^hi - e^lo) = hi + ln(1 - e^{lo-hi})
            let mag = hi + (-((lo - hi).exp())).ln_1p();
            if !mag.is_finite() || mag <= floor {
                SignedLog::zero(floor)
            } else {
                SignedLog::new(sign, mag)
            }
        }
    }
}

/// Index remap directions for coefficient permutations of message vectors.
///
/// Symbol-domain vectors are remapped by field multiplication; spectrum
/// vectors are remapped through the transposed companion-matrix powers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermuteDirection {
    /// `out(x) = in(h x)`
    ByH,
    /// `out(x) = in(h^{-1} x)`
    ByHInv,
    /// `out(z) = in(H z)` with `H = (A^i)^T` for `h = alpha^i`
    FourierByH,
    /// `out(z) = in(H^{-1} z)`
    FourierByHInv,
}

/// Remap a message vector's indices by a nonzero coefficient.
///
/// `ByHInv` followed by a transform equals the transform followed by
/// `FourierByH`; `ByH` then `ByHInv` is the identity.
///
/// # Panics
///
/// Panics if `h` is zero or the vector length is not the field size.
pub fn field_permute<T: Clone>(
    v: &[T],
    h: Gf,
    direction: PermuteDirection,
    field: &FieldTable,
) -> Vec<T> {
    assert!(!h.is_zero(), "permutation by zero coefficient");
    assert_eq!(v.len(), field.size(), "vector length != field size");
    let map = |x: usize| -> usize {
        let x = Gf(x as u16);
        match direction {
            PermuteDirection::ByH => field.mul(h, x).0 as usize,
            PermuteDirection::ByHInv => field.mul(field.inv(h), x).0 as usize,
            PermuteDirection::FourierByH => field.fourier_matrix(h).apply(x).0 as usize,
            PermuteDirection::FourierByHInv => field.fourier_matrix_inv(h).apply(x).0 as usize,
        }
    };
    (0..v.len()).map(|x| v[map(x)].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::{dot_parity, FieldTable};
    use proptest::collection::vec as pvec;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const FLOOR: f64 = DEFAULT_LOG_FLOOR;

    fn assert_close(a: &[f64], b: &[f64], tol: f64, what: &str) {
        assert_eq!(a.len(), b.len());
        for (i, (&x, &y)) in a.iter().zip(b.iter()).enumerate() {
            assert!(
                (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())),
                "{what}: entry {i}: {x} vs {y}"
            );
        }
    }

    /// O(2^{2m}) direct transform, the oracle for the butterfly.
    fn wht_direct(p: &[f64]) -> Vec<f64> {
        let n = p.len();
        (0..n)
            .map(|z| {
                (0..n)
                    .map(|x| {
                        let s = if dot_parity(Gf(z as u16), Gf(x as u16)) == 1 {
                            -1.0
                        } else {
                            1.0
                        };
                        s * p[x]
                    })
                    .sum()
            })
            .collect()
    }

    fn random_probs(n: usize, rng: &mut StdRng) -> Vec<f64> {
        let mut p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        p
    }

    #[test]
    fn wht_uniform_is_delta() {
        assert_eq!(wht(&[0.5, 0.5]), vec![1.0, 0.0]);
    }

    #[test]
    fn wht_delta_is_all_ones() {
        assert_eq!(wht(&[1.0, 0.0]), vec![1.0, 1.0]);
    }

    #[test]
    fn iwht_reference_values() {
        assert_eq!(iwht(&[1.0, 1.0]), vec![1.0, 0.0]);
        assert_eq!(iwht(&[1.0, 0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn iwht_inverts_wht() {
        let mut rng = StdRng::seed_from_u64(21);
        let p = random_probs(16, &mut rng);
        assert_close(&iwht(&wht(&p)), &p, 1e-12, "round trip");
    }

    #[test]
    fn wht_matches_direct_sum_oracle() {
        let mut rng = StdRng::seed_from_u64(7);
        for m in 1..=6 {
            let p = random_probs(1 << m, &mut rng);
            assert_close(&wht(&p), &wht_direct(&p), 1e-12, "wht vs direct");
        }
    }

    #[test]
    fn spectrum_of_normalized_vector_has_unit_dc() {
        let mut rng = StdRng::seed_from_u64(8);
        for m in 1..=6 {
            let p = random_probs(1 << m, &mut rng);
            let spec = wht(&p);
            assert!((spec[0] - 1.0).abs() < 1e-9);
            for &s in &spec {
                assert!(s.abs() <= spec[0] + 1e-9);
            }
        }
    }

    #[test]
    fn convolve_reference_pair() {
        let out = convolve(&[0.9, 0.1], &[0.8, 0.2]);
        assert_close(&out, &[0.74, 0.26], 1e-15, "m=1 convolution");
    }

    #[test]
    fn convolve_delta_identity() {
        let mut rng = StdRng::seed_from_u64(9);
        let a = random_probs(8, &mut rng);
        let mut delta = vec![0.0; 8];
        delta[0] = 1.0;
        assert_close(&convolve(&a, &delta), &a, 1e-15, "delta identity");
    }

    #[test]
    #[should_panic(expected = "length mismatch")]
    fn convolve_length_mismatch_rejected() {
        convolve(&[1.0, 0.0], &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn log_convolve_matches_linear_oracle() {
        let a = [0.9f64, 0.1];
        let b = [0.8f64, 0.2];
        let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
        let lb: Vec<f64> = b.iter().map(|x| x.ln()).collect();
        let out = log_convolve(&la, &lb, FLOOR);
        let expect: Vec<f64> = convolve(&a, &b).iter().map(|x| x.ln()).collect();
        for (x, y) in out.iter().zip(expect.iter()) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn log_convolve_delta_identity() {
        let mut rng = StdRng::seed_from_u64(10);
        let a: Vec<f64> = (0..8).map(|_| rng.gen_range(-5.0..0.0)).collect();
        let mut delta = vec![FLOOR; 8];
        delta[0] = 0.0;
        let out = log_convolve(&a, &delta, FLOOR);
        assert_close(&out, &a, 1e-12, "log delta identity");
    }

    #[test]
    fn log_convolve_all_floor_saturates() {
        let a = vec![FLOOR; 4];
        let b = vec![-1.0; 4];
        let out = log_convolve(&a, &b, FLOOR);
        assert!(out.iter().all(|&x| x == FLOOR));
    }

    #[test]
    fn gamma_reference_values() {
        let g = gamma(-0.5, FLOOR);
        assert_eq!(g.sign, 1);
        assert!((g.mag - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(gamma(1.0, FLOOR), SignedLog::new(0, 0.0));
        assert_eq!(gamma(0.0, FLOOR), SignedLog::zero(FLOOR));
    }

    #[test]
    fn gamma_roundtrip_and_homomorphism() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..10_000 {
            let x: f64 = rng.gen_range(-3.0..3.0);
            let y: f64 = rng.gen_range(-3.0..3.0);
            if x == 0.0 || y == 0.0 {
                continue;
            }
            let rx = gamma_inv(gamma(x, FLOOR), FLOOR);
            assert!((rx - x).abs() <= 1e-12 * x.abs(), "roundtrip {x}");
            let prod = gamma_inv(gamma(x, FLOOR).mul(gamma(y, FLOOR), FLOOR), FLOOR);
            assert!(
                (prod - x * y).abs() <= 1e-12 * (x * y).abs(),
                "homomorphism {x} * {y}"
            );
        }
    }

    #[test]
    fn signed_log_convolve_reference_pair() {
        // (0.5, -0.5) convolved with itself: bucket 0 = 0.25 + 0.25,
        // bucket 1 = -0.25 - 0.25.
        let a: Vec<SignedLog> = [0.5, -0.5].iter().map(|&x| gamma(x, FLOOR)).collect();
        let out = signed_log_convolve(&a, &a, FLOOR);
        let decoded: Vec<f64> = out.iter().map(|&s| gamma_inv(s, FLOOR)).collect();
        assert_close(&decoded, &[0.5, -0.5], 1e-12, "signed conv");
        assert_eq!(out[0].sign, 0);
        assert_eq!(out[1].sign, 1);
    }

    #[test]
    fn signed_log_convolve_matches_real_oracle() {
        let mut rng = StdRng::seed_from_u64(12);
        for m in 1..=4 {
            let n = 1 << m;
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ga: Vec<SignedLog> = a.iter().map(|&x| gamma(x, FLOOR)).collect();
            let gb: Vec<SignedLog> = b.iter().map(|&x| gamma(x, FLOOR)).collect();
            let out: Vec<f64> = signed_log_convolve(&ga, &gb, FLOOR)
                .iter()
                .map(|&s| gamma_inv(s, FLOOR))
                .collect();
            assert_close(&out, &convolve(&a, &b), 1e-9, "signed vs real conv");
        }
    }

    #[test]
    fn signed_log_convolve_exact_cancellation_gives_floor() {
        // (1, -1) with (1, 1): bucket 0 = 1 - 1 = 0, bucket 1 = 1 - 1 = 0.
        let a = vec![gamma(1.0, FLOOR), gamma(-1.0, FLOOR)];
        let b = vec![gamma(1.0, FLOOR), gamma(1.0, FLOOR)];
        let out = signed_log_convolve(&a, &b, FLOOR);
        for s in out {
            assert_eq!(s, SignedLog::zero(FLOOR));
        }
    }

    #[test]
    fn permute_by_unit_coefficient_is_identity() {
        let f = FieldTable::new(3).unwrap();
        let v: Vec<f64> = (0..8).map(|x| x as f64).collect();
        for dir in [
            PermuteDirection::ByH,
            PermuteDirection::ByHInv,
            PermuteDirection::FourierByH,
            PermuteDirection::FourierByHInv,
        ] {
            assert_eq!(field_permute(&v, Gf::ONE, dir, &f), v);
        }
    }

    #[test]
    fn permute_is_a_bijection() {
        let f = FieldTable::new(4).unwrap();
        let v: Vec<f64> = (0..16).map(|x| x as f64).collect();
        for h in f.nonzero_elements() {
            for dir in [
                PermuteDirection::ByH,
                PermuteDirection::ByHInv,
                PermuteDirection::FourierByH,
                PermuteDirection::FourierByHInv,
            ] {
                let mut out = field_permute(&v, h, dir, &f);
                out.sort_by(|a, b| a.partial_cmp(b).unwrap());
                assert_eq!(out, v, "h={h:?} {dir:?}");
            }
        }
    }

    #[test]
    fn permute_roundtrip_identity() {
        let f = FieldTable::new(3).unwrap();
        let mut rng = StdRng::seed_from_u64(13);
        let v = random_probs(8, &mut rng);
        for h in f.nonzero_elements() {
            let fwd = field_permute(&v, h, PermuteDirection::ByH, &f);
            let back = field_permute(&fwd, h, PermuteDirection::ByHInv, &f);
            assert_eq!(back, v);
            let ffwd = field_permute(&v, h, PermuteDirection::FourierByH, &f);
            let fback = field_permute(&ffwd, h, PermuteDirection::FourierByHInv, &f);
            assert_eq!(fback, v);
        }
    }

    #[test]
    fn transform_of_permuted_vector_is_permuted_transform() {
        // wht(p(h^{-1} x)) = P(H z), exhaustively over h for m = 3.
        let f = FieldTable::new(3).unwrap();
        let mut rng = StdRng::seed_from_u64(14);
        let p = random_probs(8, &mut rng);
        for h in f.nonzero_elements() {
            let lhs = wht(&field_permute(&p, h, PermuteDirection::ByHInv, &f));
            let rhs = field_permute(&wht(&p), h, PermuteDirection::FourierByH, &f);
            assert_close(&lhs, &rhs, 1e-12, "spectrum permutation identity");
        }
    }

    fn arb_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1u32..=6).prop_flat_map(|m| {
            let n = 1usize << m;
            (pvec(0.01..1.0f64, n), pvec(0.01..1.0f64, n))
        })
    }

    proptest! {
        #[test]
        fn involution_recovers_scaled_input((a, _) in arb_pair()) {
            let twice = wht(&wht(&a));
            let n = a.len() as f64;
            for (x, y) in twice.iter().zip(a.iter()) {
                prop_assert!((x - n * y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn convolution_theorem_pointwise((a, b) in arb_pair()) {
            let lhs = wht(&convolve(&a, &b));
            let fa = wht(&a);
            let fb = wht(&b);
            for (i, &l) in lhs.iter().enumerate() {
                let r = fa[i] * fb[i];
                prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs().max(r.abs())));
            }
        }

        #[test]
        fn log_linear_consistency((a, b) in arb_pair()) {
            let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
            let lb: Vec<f64> = b.iter().map(|x| x.ln()).collect();
            let out = log_convolve(&la, &lb, FLOOR);
            let expect = convolve(&a, &b);
            for (x, y) in out.iter().zip(expect.iter()) {
                prop_assert!((x.exp() - y).abs() <= 1e-9 * (1.0 + y.abs()));
            }
        }

        #[test]
        fn fast_convolution_path_matches_direct((a, b) in arb_pair()) {
            let fast = convolve_via_wht(&a, &b);
            let direct = convolve(&a, &b);
            for (x, y) in fast.iter().zip(direct.iter()) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
            }
        }
    }
}
