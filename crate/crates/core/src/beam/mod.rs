//! ULA array responses, single-path beam gains and the link budget.
//!
//! The gNB steers a conjugate beam toward a boresight angle. With one LoS path
//! the power gain toward a UE at `ue_angle` is `Nt * |a(boresight)^H a(ue_angle)|^2`,
//! the Fejér kernel in `psi = (d/lambda) * (sin(boresight) - sin(ue_angle))`.

mod forming;

pub use forming::{coverage_rate, form_beams, is_covered, Beam, BeamCluster};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const CQI_LEVELS: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("UE distance must be positive and finite, got {0} m")]
    InvalidDistance(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaConfig {
    pub n_elements: usize,
    pub element_spacing_over_wavelength: f64,
    pub carrier_frequency_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
}

impl Default for AntennaConfig {
    fn default() -> Self {
        Self {
            n_elements: 1024,
            element_spacing_over_wavelength: 0.5,
            carrier_frequency_hz: 28e9,
            tx_power_dbm: 30.0,
            noise_power_dbm: -94.0,
        }
    }
}

impl AntennaConfig {
    pub fn with_elements(n_elements: usize) -> Self {
        Self { n_elements, ..Self::default() }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    /// Free-space path gain `(lambda / (4 pi d))^2`.
    pub fn path_gain(&self, distance_m: f64) -> f64 {
        let g = self.wavelength() / (4.0 * PI * distance_m);
        g * g
    }
}

/// Unit-norm ULA steering vector toward `angle`.
pub fn array_response(angle: f64, cfg: &AntennaConfig) -> Vec<Complex64> {
    let n = cfg.n_elements;
    let scale = 1.0 / (n as f64).sqrt();
    let phase = 2.0 * PI * cfg.element_spacing_over_wavelength * angle.sin();
    (0..n).map(|m| Complex64::from_polar(scale, m as f64 * phase)).collect()
}

/// Linear power gain of a beam steered at `boresight` toward `ue_angle`, in [0, Nt].
pub fn beam_gain(boresight: f64, ue_angle: f64, cfg: &AntennaConfig) -> f64 {
    let n = cfg.n_elements as f64;
    let psi = cfg.element_spacing_over_wavelength * (boresight.sin() - ue_angle.sin());
    let x = PI * psi;
    let den = x.sin();
    if psi == 0.0 || den.abs() < 1e-300 {
        return n;
    }
    let num = (n * x).sin();
    (num * num) / (n * den * den)
}

/// Gain via the explicit inner product of steering vectors.
pub fn beam_gain_inner_product(boresight: f64, ue_angle: f64, cfg: &AntennaConfig) -> f64 {
    let a = array_response(boresight, cfg);
    let b = array_response(ue_angle, cfg);
    let ip: Complex64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
    cfg.n_elements as f64 * ip.norm_sqr()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// SINR in dB at a UE served by `serving` while `interferers` transmit on the
/// same RBG. Members of the serving beam are orthogonal and do not interfere.
pub fn compute_sinr<'a, I>(
    ue_angle: f64,
    ue_distance: f64,
    serving: &Beam,
    interferers: I,
    cfg: &AntennaConfig,
) -> Result<f64, ChannelError>
where
    I: IntoIterator<Item = &'a Beam>,
{
    if !(ue_distance > 0.0 && ue_distance.is_finite()) {
        return Err(ChannelError::InvalidDistance(ue_distance));
    }
    let rx_scale = db_to_linear(cfg.tx_power_dbm) * cfg.path_gain(ue_distance);
    let signal = rx_scale * beam_gain(serving.boresight, ue_angle, cfg);
    let interference: f64 = interferers.into_iter().map(|b| rx_scale * beam_gain(b.boresight, ue_angle, cfg)).sum();
    Ok(linear_to_db(signal / (db_to_linear(cfg.noise_power_dbm) + interference)))
}

/// SINR-to-CQI thresholds and RBG sizing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Minimum SINR in dB for CQI 1..=15.
    pub cqi_thresholds_db: Vec<f64>,
    pub subcarrier_spacing_hz: f64,
    pub subcarriers_per_rb: usize,
    pub rbs_per_rbg: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            cqi_thresholds_db: (1..CQI_LEVELS).map(|k| (-67.0 + 18.0 * (k - 1) as f64) / 10.0).collect(),
            subcarrier_spacing_hz: 120e3,
            subcarriers_per_rb: 12,
            rbs_per_rbg: 2,
        }
    }
}

impl LinkConfig {
    pub fn rbg_bandwidth_hz(&self) -> f64 {
        self.subcarriers_per_rb as f64 * self.subcarrier_spacing_hz * self.rbs_per_rbg as f64
    }

    pub fn thresholds_valid(&self) -> bool {
        self.cqi_thresholds_db.len() == CQI_LEVELS - 1
            && self.cqi_thresholds_db.iter().all(|t| t.is_finite())
            && self.cqi_thresholds_db.windows(2).all(|w| w[0] <= w[1])
    }
}

pub fn sinr_to_cqi(sinr_db: f64, link: &LinkConfig) -> u8 {
    link.cqi_thresholds_db.iter().take_while(|t| sinr_db >= **t).count() as u8
}

/// Shannon rate of one RBG in bits per second.
pub fn rbg_rate(sinr_db: f64, link: &LinkConfig) -> f64 {
    link.rbg_bandwidth_hz() * (1.0 + db_to_linear(sinr_db)).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkQuality {
    pub sinr_db: f64,
    pub cqi: u8,
    pub rate_bps: f64,
}

impl LinkQuality {
    pub fn from_sinr(sinr_db: f64, link: &LinkConfig) -> Self {
        Self { sinr_db, cqi: sinr_to_cqi(sinr_db, link), rate_bps: rbg_rate(sinr_db, link) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn beam_at(boresight: f64) -> Beam {
        Beam { boresight, width: 20f64.to_radians(), members: vec![0], rbg_count: 24 }
    }

    #[test]
    fn array_response_examples() {
        let cfg = AntennaConfig::with_elements(4);
        for v in array_response(0.0, &cfg) {
            assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
        let cfg = AntennaConfig::with_elements(2);
        let a = array_response(PI / 2.0, &cfg);
        let s = 1.0 / 2f64.sqrt();
        assert!((a[0] - Complex64::new(s, 0.0)).norm() < 1e-15);
        assert!((a[1] - Complex64::new(-s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn array_response_is_unit_norm() {
        let cfg = AntennaConfig::with_elements(64);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a = array_response(rng.random_range(-PI..PI), &cfg);
            let norm: f64 = a.iter().map(|v| v.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gain_examples() {
        let cfg = AntennaConfig::default();
        assert_eq!(beam_gain(0.3, 0.3, &cfg), 1024.0);
        let cfg8 = AntennaConfig::with_elements(8);
        let null = 0.25f64.asin();
        assert!(beam_gain(0.0, null, &cfg8) < 1e-9);
        assert!(beam_gain_inner_product(0.0, null, &cfg8) < 1e-9);
        let one = AntennaConfig::with_elements(1);
        for a in [-1.0, 0.0, 0.4, 2.5] {
            assert_eq!(beam_gain(0.1, a, &one), 1.0);
        }
    }

    #[test]
    fn closed_form_matches_inner_product() {
        let cfg = AntennaConfig::with_elements(32);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let b = rng.random_range(-PI / 2.0..PI / 2.0);
            let u = rng.random_range(-PI / 2.0..PI / 2.0);
            let closed = beam_gain(b, u, &cfg);
            let explicit = beam_gain_inner_product(b, u, &cfg);
            let scale = closed.abs().max(explicit.abs()).max(1e-12);
            assert!((closed - explicit).abs() / scale < 1e-9 || (closed - explicit).abs() < 1e-12);
        }
    }

    #[test]
    fn dft_grid_is_parseval() {
        let n = 16;
        let cfg = AntennaConfig::with_elements(n);
        let ue = 0.37;
        let total: f64 = (0..n)
            .map(|b| {
                let s = -1.0 + 2.0 * b as f64 / n as f64;
                beam_gain(s.asin(), ue, &cfg) / n as f64
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-9, "total = {total}");
    }

    #[test]
    fn sinr_follows_inverse_square() {
        let cfg = AntennaConfig::default();
        let b = beam_at(0.2);
        let s1 = compute_sinr(0.2, 50.0, &b, [], &cfg).unwrap();
        let s2 = compute_sinr(0.2, 100.0, &b, [], &cfg).unwrap();
        assert!((s1 - s2 - 20.0 * 2f64.log10()).abs() < 1e-9);
        assert!((s1 - s2 - 6.02).abs() < 0.01);
    }

    #[test]
    fn null_interferer_is_invisible() {
        let cfg = AntennaConfig::with_elements(8);
        let serving = beam_at(0.0);
        // The UE sits on the interferer's first null.
        let ue = 0.25f64.asin();
        let interferer = beam_at(0.0);
        let snr = compute_sinr(ue, 80.0, &beam_at(ue), [], &cfg).unwrap();
        let sinr = compute_sinr(ue, 80.0, &beam_at(ue), [&interferer], &cfg).unwrap();
        assert!((snr - sinr).abs() < 1e-9);
        assert!(compute_sinr(ue, 80.0, &serving, [], &cfg).is_ok());
    }

    #[test]
    fn sinr_fixture_matches_direct_formula() {
        let cfg = AntennaConfig::with_elements(64);
        let serving = beam_at(0.0);
        let interferer = beam_at(0.1);
        let ue = 0.01;
        let got = compute_sinr(ue, 100.0, &serving, [&interferer], &cfg).unwrap();

        // Independent chain: explicit steering-vector inner products, mW units.
        let lambda = 299_792_458.0 / 28e9;
        let pl = (lambda / (4.0 * PI * 100.0)).powi(2);
        let ptx = 1000.0; // 30 dBm
        let noise = 10f64.powf(-9.4) * 1.0; // -94 dBm in mW
        let g_s = beam_gain_inner_product(0.0, ue, &cfg);
        let g_i = beam_gain_inner_product(0.1, ue, &cfg);
        let want = 10.0 * (ptx * g_s * pl / (noise + ptx * g_i * pl)).log10();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn zero_distance_rejected() {
        let cfg = AntennaConfig::default();
        assert_eq!(compute_sinr(0.0, 0.0, &beam_at(0.0), [], &cfg), Err(ChannelError::InvalidDistance(0.0)));
    }

    #[test]
    fn cqi_and_rate_examples() {
        let link = LinkConfig::default();
        assert_eq!(sinr_to_cqi(-10.0, &link), 0);
        assert_eq!(sinr_to_cqi(-6.7, &link), 1);
        assert_eq!(sinr_to_cqi(100.0, &link), 15);
        assert!((link.rbg_bandwidth_hz() - 2.88e6).abs() < 1e-6);
        // 2.88e6 * log2(1 + 10^1.5)
        let rate = rbg_rate(15.0, &link);
        assert!((rate - 14_480_086.1).abs() < 1.0, "rate = {rate}");
        assert!((rate / 1e6 - 14.49).abs() < 0.02);
    }

    #[test]
    fn cqi_and_rate_monotone() {
        let link = LinkConfig::default();
        let mut prev = LinkQuality::from_sinr(-40.0, &link);
        for i in 0..800 {
            let q = LinkQuality::from_sinr(-40.0 + i as f64 * 0.1, &link);
            assert!(q.cqi >= prev.cqi && q.rate_bps >= prev.rate_bps);
            prev = q;
        }
        assert!(link.thresholds_valid());
    }
}
