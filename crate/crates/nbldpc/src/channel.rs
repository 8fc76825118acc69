//! Channel simulation and computation of the initial symbol priors.
//!
//! Two models are supported: BPSK over AWGN (each of the m bits of a symbol
//! maps to +-1 plus Gaussian noise) and the q-ary symmetric channel (a symbol
//! flips to a uniformly random different symbol with probability epsilon).
//! Either way the decoder consumes one normalized probability vector
//! `p_v(x) = Pr(X_v = x | Y_v = y_v)` per transmitted symbol.

use crate::gf::Gf;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ChannelError {
    #[error("noise standard deviation must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("symbol error probability must lie in [0, 1], got {0}")]
    EpsilonOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelKind {
    /// BPSK over AWGN with per-bit noise standard deviation `sigma`;
    /// bit 0 maps to +1, bit 1 to -1.
    AwgnBpsk { sigma: f64 },
    /// q-ary symmetric channel with symbol error probability `epsilon`.
    Qsc { epsilon: f64 },
}

/// A channel over GF(2^m) symbols. Sampling is driven by a caller-supplied
/// generator so that simulation seeds stay with the harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    kind: ChannelKind,
    m: u32,
}

/// Channel output for one codeword: `N*m` real samples for AWGN/BPSK, or `N`
/// received symbols for the symmetric channel.
#[derive(Debug, Clone, PartialEq)]
pub enum ReceivedWord {
    Soft(Vec<f64>),
    Hard(Vec<Gf>),
}

impl ChannelModel {
    pub fn awgn_bpsk(m: u32, sigma: f64) -> Result<Self, ChannelError> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(ChannelError::NonPositiveSigma(sigma));
        }
        Ok(ChannelModel { kind: ChannelKind::AwgnBpsk { sigma }, m })
    }

    pub fn qsc(m: u32, epsilon: f64) -> Result<Self, ChannelError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(ChannelError::EpsilonOutOfRange(epsilon));
        }
        Ok(ChannelModel { kind: ChannelKind::Qsc { epsilon }, m })
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    fn q(&self) -> usize {
        1 << self.m
    }

    /// Send a symbol vector through the channel.
    pub fn transmit<R: Rng>(&self, x: &[Gf], rng: &mut R) -> ReceivedWord {
        match self.kind {
            ChannelKind::AwgnBpsk { sigma } => {
                let mut samples = Vec::with_capacity(x.len() * self.m as usize);
                for &sym in x {
                    for i in 0..self.m {
                        let s = if sym.bit(i) == 0 { 1.0 } else { -1.0 };
                        let noise: f64 = StandardNormal.sample(rng);
                        samples.push(s + sigma * noise);
                    }
                }
                ReceivedWord::Soft(samples)
            }
            ChannelKind::Qsc { epsilon } => {
                let q = self.q();
                let received = x
                    .iter()
                    .map(|&sym| {
                        if rng.gen::<f64>() < epsilon {
                            // XOR with a uniform nonzero offset is uniform over
                            // the other symbols.
                            Gf(sym.0 ^ rng.gen_range(1..q) as u16)
                        } else {
                            sym
                        }
                    })
                    .collect();
                ReceivedWord::Hard(received)
            }
        }
    }

    /// Posterior symbol probabilities given the channel output, one
    /// normalized length-`2^m` vector per symbol.
    ///
    /// # Panics
    ///
    /// Panics if the received word does not match the channel kind or its
    /// length is not a multiple of the symbol width.
    pub fn priors(&self, y: &ReceivedWord) -> Vec<Vec<f64>> {
        let q = self.q();
        match (self.kind, y) {
            (ChannelKind::AwgnBpsk { sigma }, ReceivedWord::Soft(samples)) => {
                assert!(samples.len().is_multiple_of(self.m as usize), "sample count not a multiple of m");
                let inv_two_var = 1.0 / (2.0 * sigma * sigma);
                samples
                    .chunks(self.m as usize)
                    .map(|chunk| {
                        let mut loglik = vec![0.0f64; q];
                        for (x, ll) in loglik.iter_mut().enumerate() {
                            *ll = chunk
                                .iter()
                                .enumerate()
                                .map(|(i, &yv)| {
                                    let s = if (x >> i) & 1 == 0 { 1.0 } else { -1.0 };
                                    -(yv - s) * (yv - s) * inv_two_var
                                })
                                .sum();
                        }
                        softmax(&loglik)
                    })
                    .collect()
            }
            (ChannelKind::Qsc { epsilon }, ReceivedWord::Hard(received)) => received
                .iter()
                .map(|&sym| {
                    let other = epsilon / (q - 1) as f64;
                    let mut p = vec![other; q];
                    p[sym.0 as usize] = 1.0 - epsilon;
                    p
                })
                .collect(),
            _ => panic!("received word does not match channel kind"),
        }
    }
}

fn softmax(loglik: &[f64]) -> Vec<f64> {
    let max = loglik.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = loglik.iter().map(|&ll| (ll - max).exp()).collect();
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= sum);
    p
}

/// Noise standard deviation for a target Eb/N0 in dB at code rate `R`, with
/// unit-energy BPSK: `sigma^2 = 1 / (2 R 10^{EbN0/10})`.
pub fn ebn0_db_to_sigma(ebn0_db: f64, rate: f64) -> f64 {
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    (1.0 / (2.0 * rate * ebn0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn near_zero_noise_preserves_bpsk_pattern() {
        let ch = ChannelModel::awgn_bpsk(3, 1e-9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = vec![Gf(0b101), Gf(0)];
        match ch.transmit(&x, &mut rng) {
            ReceivedWord::Soft(samples) => {
                let expect = [-1.0, 1.0, -1.0, 1.0, 1.0, 1.0];
                for (s, e) in samples.iter().zip(expect.iter()) {
                    assert!((s - e).abs() < 1e-6, "{s} vs {e}");
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn qsc_extreme_epsilons() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<Gf> = (0..50).map(|i| Gf(i % 4)).collect();
        let quiet = ChannelModel::qsc(2, 0.0).unwrap();
        assert_eq!(quiet.transmit(&x, &mut rng), ReceivedWord::Hard(x.clone()));
        let loud = ChannelModel::qsc(2, 1.0).unwrap();
        match loud.transmit(&x, &mut rng) {
            ReceivedWord::Hard(y) => {
                for (a, b) in x.iter().zip(y.iter()) {
                    assert_ne!(a, b);
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn qsc_prior_reference_values() {
        let ch = ChannelModel::qsc(2, 0.3).unwrap();
        let p = ch.priors(&ReceivedWord::Hard(vec![Gf(2)]));
        let expect = [0.1, 0.1, 0.7, 0.1];
        for (a, b) in p[0].iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn awgn_prior_peaks_at_transmitted_symbol() {
        let ch = ChannelModel::awgn_bpsk(3, 0.5).unwrap();
        for sym in 0..8u16 {
            // Noise-free received word equal to the BPSK image of `sym`.
            let samples: Vec<f64> = (0..3)
                .map(|i| if (sym >> i) & 1 == 0 { 1.0 } else { -1.0 })
                .collect();
            let p = ch.priors(&ReceivedWord::Soft(samples));
            let argmax = p[0]
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, sym as usize);
        }
    }

    #[test]
    fn awgn_midpoint_sample_is_uninformative() {
        let ch = ChannelModel::awgn_bpsk(1, 1.0).unwrap();
        let p = ch.priors(&ReceivedWord::Soft(vec![0.0]));
        assert!((p[0][0] - 0.5).abs() < 1e-12);
        assert!((p[0][1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn priors_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = ChannelModel::awgn_bpsk(4, 0.8).unwrap();
        let x = vec![Gf(5); 16];
        let y = ch.transmit(&x, &mut rng);
        for p in ch.priors(&y) {
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn awgn_bit_likelihood_ratio_factorization() {
        // The marginal likelihood ratio of bit i must equal exp(2 y_i / sigma^2).
        let sigma = 0.7;
        let ch = ChannelModel::awgn_bpsk(3, sigma).unwrap();
        let samples = vec![0.4, -1.2, 0.9];
        let p = &ch.priors(&ReceivedWord::Soft(samples.clone()))[0];
        for (i, &sample) in samples.iter().enumerate() {
            let p0: f64 = (0..8).filter(|x| (x >> i) & 1 == 0).map(|x| p[x]).sum();
            let p1: f64 = (0..8).filter(|x| (x >> i) & 1 == 1).map(|x| p[x]).sum();
            let expect = (2.0 * sample / (sigma * sigma)).exp();
            assert!(
                ((p0 / p1) - expect).abs() < 1e-9 * expect,
                "bit {i}: {} vs {expect}",
                p0 / p1
            );
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(ChannelModel::awgn_bpsk(2, 0.0).is_err());
        assert!(ChannelModel::qsc(2, 1.5).is_err());
        assert!(ChannelModel::qsc(2, -0.1).is_err());
    }

    #[test]
    fn ebn0_conversion_reference_point() {
        // At rate 1/2 and 0 dB: sigma^2 = 1/(2 * 0.5 * 1) = 1.
        assert!((ebn0_db_to_sigma(0.0, 0.5) - 1.0).abs() < 1e-12);
    }
}
