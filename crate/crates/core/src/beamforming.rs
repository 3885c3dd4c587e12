//! Closed-form robust beamformer at the serving BS.

use crate::channel::CsiSample;
use crate::error::{Error, Result};
use crate::linalg::{norm_sqr, CVector, C64};
use crate::rate::PhaseShiftVector;

const UNIT_NORM_TOL: f64 = 1e-9;

/// Unit-norm transmit beamformer.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer(CVector);

impl Beamformer {
    /// Wraps `w`, rejecting vectors whose norm is not 1 within 1e-9.
    pub fn new(w: CVector) -> Result<Self> {
        let n = norm_sqr(&w).sqrt();
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::Contract(format!("beamformer norm is {n}, expected 1")));
        }
        Ok(Self(w))
    }

    /// Normalizes `w`; fails on the zero vector.
    pub fn normalized(w: CVector) -> Result<Self> {
        let n = norm_sqr(&w).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateChannel);
        }
        Ok(Self(w.unscale(n)))
    }

    /// First standard basis vector, used when the equivalent channel vanishes.
    pub fn first_basis(len: usize) -> Self {
        let mut w = CVector::zeros(len);
        w[0] = C64::new(1.0, 0.0);
        Self(w)
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    pub fn into_vector(self) -> CVector {
        self.0
    }
}

/// `Ĝ^H v + ĥ`, the column form of the estimated equivalent channel.
pub fn equivalent_channel(v: &CVector, sample: &CsiSample) -> CVector {
    sample.est_cascaded.ad_mul(v) + &sample.est_direct
}

/// `w = (Ĝ^H v + ĥ) / ‖v^H Ĝ + ĥ^H‖₂`.
///
/// By Cauchy-Schwarz this maximizes `|(v^H Ĝ + ĥ^H) w|²` over unit-norm `w`;
/// the maximum is `‖Ĝ^H v + ĥ‖²`. Cost is one `M₀N₀ × M_rN_r` product.
pub fn mrt_equivalent_beamformer(v: &PhaseShiftVector, sample: &CsiSample) -> Result<Beamformer> {
    if v.len() != sample.irs_elements() {
        return Err(Error::Dimension {
            context: "phase shifts vs cascaded channel",
            expected: sample.irs_elements(),
            found: v.len(),
        });
    }
    Beamformer::normalized(equivalent_channel(v.values(), sample))
}

/// As [`mrt_equivalent_beamformer`], falling back to the first basis vector
/// when the equivalent channel is zero.
pub fn robust_beamformer(v: &PhaseShiftVector, sample: &CsiSample) -> Result<Beamformer> {
    match mrt_equivalent_beamformer(v, sample) {
        Err(Error::DegenerateChannel) => Ok(Beamformer::first_basis(sample.antennas())),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, gaussian_vector};
    use crate::CMatrix;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_sample(rng: &mut ChaCha8Rng, n_irs: usize, n_ant: usize) -> CsiSample {
        CsiSample::from_estimate(
            gaussian_matrix(rng, n_irs, n_ant, 1.0),
            gaussian_vector(rng, n_ant, 1.0),
        )
    }

    fn signal(v: &PhaseShiftVector, s: &CsiSample, w: &CVector) -> f64 {
        equivalent_channel(v.values(), s).dotc(w).norm_sqr()
    }

    #[test]
    fn zero_cascade_reduces_to_direct_mrt() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = gaussian_vector(&mut rng, 6, 1.0);
        let s = CsiSample::from_estimate(CMatrix::zeros(3, 6), h.clone());
        let v = PhaseShiftVector::ones(3);
        let w = mrt_equivalent_beamformer(&v, &s).unwrap();
        let expected = h.unscale(norm_sqr(&h).sqrt());
        assert!((w.as_vector() - expected).norm() < 1e-15);
    }

    #[test]
    fn degenerate_channel() {
        let s = CsiSample::from_estimate(CMatrix::zeros(2, 3), CVector::zeros(3));
        let v = PhaseShiftVector::ones(2);
        assert!(matches!(
            mrt_equivalent_beamformer(&v, &s),
            Err(Error::DegenerateChannel)
        ));
        let w = robust_beamformer(&v, &s).unwrap();
        assert_eq!(w.as_vector()[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let s = CsiSample::from_estimate(CMatrix::zeros(2, 3), CVector::zeros(3));
        let v = PhaseShiftVector::ones(4);
        assert!(matches!(
            mrt_equivalent_beamformer(&v, &s),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn beats_random_unit_beamformers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let s = random_sample(&mut rng, 4, 5);
            let phases: Vec<f64> = (0..4).map(|i| i as f64 * 0.7).collect();
            let v = PhaseShiftVector::from_phases(&phases);
            let w = mrt_equivalent_beamformer(&v, &s).unwrap();
            let best = signal(&v, &s, w.as_vector());
            let eq = norm_sqr(&equivalent_channel(v.values(), &s));
            assert!((best - eq).abs() <= 1e-12 * eq);
            for _ in 0..1000 {
                let u = Beamformer::normalized(gaussian_vector(&mut rng, 5, 1.0)).unwrap();
                assert!(signal(&v, &s, u.as_vector()) <= best * (1.0 + 1e-12));
            }
        }
    }

    proptest! {
        #[test]
        fn unit_norm_and_phase_rotation(seed in any::<u64>(), theta in 0.0f64..6.283) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_sample(&mut rng, 3, 4);
            let v = PhaseShiftVector::from_phases(&[0.1, 2.0, -1.3]);
            let w = mrt_equivalent_beamformer(&v, &s).unwrap();
            prop_assert!((norm_sqr(w.as_vector()) - 1.0).abs() < 1e-12);

            let rot = C64::from_polar(1.0, theta);
            let rotated = CsiSample::from_estimate(
                s.est_cascaded.map(|z| z * rot.conj()),
                s.est_direct.map(|z| z * rot),
            );
            let w_rot = mrt_equivalent_beamformer(&v, &rotated).unwrap();
            prop_assert!((w_rot.as_vector() - w.as_vector() * rot).norm() < 1e-12);
            let p = signal(&v, &s, w.as_vector());
            let p_rot = signal(&v, &rotated, w_rot.as_vector());
            prop_assert!((p - p_rot).abs() <= 1e-12 * p);
        }
    }
}
