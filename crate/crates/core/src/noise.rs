//! Baseline background noise and additive white Gaussian noise.
//!
//! SNR follows `10·log10(Ps/Pn)` with `Ps` the mean squared intensity of the
//! clean (normalized) spectrum. In the combined scenario only the Gaussian
//! component counts towards `Pn`; the baseline is structured interference.

use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;
use crate::seed::{self, Stream};
use crate::spectrum::{Spectrum, SpectrumError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// No noise.
    Clean,
    /// Gaussian noise only.
    Gn,
    /// Baseline drift only.
    Bb,
    /// Baseline drift, then Gaussian noise.
    Gb,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Clean, Scenario::Gn, Scenario::Bb, Scenario::Gb];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Clean => "clean",
            Scenario::Gn => "gn",
            Scenario::Bb => "bb",
            Scenario::Gb => "gb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.as_str().eq_ignore_ascii_case(s))
    }

    pub fn has_gaussian(self) -> bool {
        matches!(self, Scenario::Gn | Scenario::Gb)
    }

    pub fn has_baseline(self) -> bool {
        matches!(self, Scenario::Bb | Scenario::Gb)
    }
}

impl core::fmt::Display for Scenario {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("signal power is zero")]
    ZeroSignal,
    #[error("invalid noise configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// Ranges the random baseline is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineParams {
    /// Inclusive range of the number of sinusoids.
    pub n_sinusoids: (u32, u32),
    /// Amplitude range as a fraction of the signal peak.
    pub amplitude: (f64, f64),
    /// Wavelength range as a fraction of the axis span.
    pub wavelength: (f64, f64),
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            n_sinusoids: (1, 5),
            amplitude: (0.1, 1.0),
            wavelength: (0.2, 1.0),
        }
    }
}

impl BaselineParams {
    pub fn validate(&self) -> Result<(), NoiseError> {
        let (nlo, nhi) = self.n_sinusoids;
        if nlo < 1 || nhi > 16 || nlo > nhi {
            return Err(NoiseError::InvalidConfig("n_sinusoids must be a range within [1, 16]"));
        }
        let (alo, ahi) = self.amplitude;
        if !(alo > 0.0 && alo <= ahi && ahi <= 2.0) {
            return Err(NoiseError::InvalidConfig("amplitude must be a range within (0, 2]"));
        }
        let (wlo, whi) = self.wavelength;
        if !(wlo > 0.0 && wlo <= whi && whi <= 1.0) {
            return Err(NoiseError::InvalidConfig("wavelength must be a range within (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub scenario: Scenario,
    /// Target SNR in dB; ignored for `Clean` and `Bb`.
    pub snr_db: f64,
    pub baseline: BaselineParams,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(scenario: Scenario, snr_db: f64, seed: u64) -> Self {
        Self { scenario, snr_db, baseline: BaselineParams::default(), seed }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        self.baseline.validate()?;
        if self.scenario.has_gaussian() && !self.snr_db.is_finite() {
            return Err(NoiseError::InvalidConfig("snr_db must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisySample {
    pub clean: Spectrum,
    pub noisy: Spectrum,
    pub scenario: Scenario,
    pub target_snr_db: Option<f64>,
    pub measured_snr_db: Option<f64>,
    pub seed: u64,
}

/// Mean of squared values.
pub fn signal_power(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64
}

/// Noise power that yields `snr_db` against a signal of power `ps`.
pub fn noise_power_for(ps: f64, snr_db: f64) -> f64 {
    ps * math::pow(10.0, -snr_db / 10.0)
}

pub fn snr_db(ps: f64, pn: f64) -> f64 {
    10.0 * math::log10(ps / pn)
}

/// Adds i.i.d. Gaussian noise of power `pn` to `base`. Returns the noisy
/// values and the empirical noise power.
fn add_gaussian<R: Rng + ?Sized>(base: &[f64], pn: f64, rng: &mut R) -> (Vec<f64>, f64) {
    let normal = Normal::new(0.0, math::sqrt(pn)).expect("finite, non-negative sigma");
    let mut drawn = 0.0;
    let noisy = base
        .iter()
        .map(|&v| {
            let n = normal.sample(rng);
            drawn += n * n;
            v + n
        })
        .collect();
    (noisy, drawn / base.len() as f64)
}

/// White Gaussian noise at `snr_db` relative to the power of `s`.
pub fn awgn<R: Rng + ?Sized>(s: &Spectrum, snr_db_target: f64, rng: &mut R) -> Result<NoisySample, NoiseError> {
    let ps = signal_power(s.intensities());
    if ps == 0.0 {
        return Err(NoiseError::ZeroSignal);
    }
    let (noisy, pn) = add_gaussian(s.intensities(), noise_power_for(ps, snr_db_target), rng);
    Ok(NoisySample {
        clean: s.clone(),
        noisy: s.with_intensities(noisy)?,
        scenario: Scenario::Gn,
        target_snr_db: Some(snr_db_target),
        measured_snr_db: Some(snr_db(ps, pn)),
        seed: 0,
    })
}

/// One term `amplitude · sin(2π (x − phase) / wavelength)` of a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineTerm {
    pub amplitude: f64,
    pub wavelength: f64,
    pub phase: f64,
}

impl SineTerm {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * math::sin(2.0 * PI * (x - self.phase) / self.wavelength)
    }
}

/// Evaluates a sum of sinusoids on `grid`.
pub fn eval_baseline(terms: &[SineTerm], grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|&x| terms.iter().map(|t| t.eval(x)).sum()).collect()
}

/// Draws the sinusoid terms of one random baseline. Amplitudes scale with
/// `signal_peak`, wavelengths with the axis span; phases are uniform over one
/// wavelength.
pub fn draw_baseline<R: Rng + ?Sized>(
    params: &BaselineParams,
    grid: &[f64],
    signal_peak: f64,
    rng: &mut R,
) -> Vec<SineTerm> {
    let span = grid[grid.len() - 1] - grid[0];
    let k = rng.random_range(params.n_sinusoids.0..=params.n_sinusoids.1);
    (0..k)
        .map(|_| {
            let amplitude = rng.random_range(params.amplitude.0..=params.amplitude.1) * signal_peak;
            let wavelength = rng.random_range(params.wavelength.0..=params.wavelength.1) * span;
            let phase = grid[0] + rng.random_range(0.0..1.0) * wavelength;
            SineTerm { amplitude, wavelength, phase }
        })
        .collect()
}

/// A random baseline sampled on `grid`.
pub fn baseline<R: Rng + ?Sized>(
    params: &BaselineParams,
    grid: &[f64],
    signal_peak: f64,
    rng: &mut R,
) -> Vec<f64> {
    eval_baseline(&draw_baseline(params, grid, signal_peak, rng), grid)
}

/// Applies the configured scenario to the normalized form of `s`.
///
/// The baseline and the Gaussian noise come from separate streams of
/// `cfg.seed`, so the output is a pure function of `(s, cfg)`.
pub fn inject(s: &Spectrum, cfg: &NoiseConfig) -> Result<NoisySample, NoiseError> {
    cfg.validate()?;
    let clean = s.normalized();
    let ps = signal_power(clean.intensities());
    let mut values = clean.intensities().to_vec();
    if cfg.scenario.has_baseline() {
        let peak = clean.min_max().1;
        let mut rng = seed::rng(cfg.seed, Stream::Baseline);
        let drift = baseline(&cfg.baseline, clean.wavenumbers(), peak, &mut rng);
        for (v, d) in values.iter_mut().zip(drift) {
            *v += d;
        }
    }
    let (target, measured) = if cfg.scenario.has_gaussian() {
        if ps == 0.0 {
            return Err(NoiseError::ZeroSignal);
        }
        let mut rng = seed::rng(cfg.seed, Stream::Gaussian);
        let (noisy, pn) = add_gaussian(&values, noise_power_for(ps, cfg.snr_db), &mut rng);
        values = noisy;
        (Some(cfg.snr_db), Some(snr_db(ps, pn)))
    } else {
        (None, None)
    };
    Ok(NoisySample {
        noisy: clean.with_intensities(values)?,
        clean,
        scenario: cfg.scenario,
        target_snr_db: target,
        measured_snr_db: measured,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{synth_lorentzian, uniform_grid, Peak};
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn unit_power(n: usize) -> Spectrum {
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        Spectrum::new(x, y, None, "pm1").unwrap()
    }

    fn lorentz() -> Spectrum {
        let grid = uniform_grid(100.0, 1200.0, 1024);
        synth_lorentzian(
            &[Peak::new(400.0, 8.0, 1.0), Peak::new(800.0, 12.0, 0.6)],
            &grid,
            Some("x".into()),
            "l",
        )
        .unwrap()
    }

    #[test]
    fn power_of_simple_signals() {
        assert_eq!(signal_power(&[1.0; 10]), 1.0);
        assert_eq!(signal_power(&[1.0, -1.0, 1.0, -1.0]), 1.0);
    }

    #[test]
    fn noise_power_targets() {
        assert_abs_diff_eq!(noise_power_for(1.0, 30.0), 1e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(noise_power_for(1.0, 20.0), 1e-2, epsilon = 1e-15);
    }

    #[test]
    fn zero_signal_rejected() {
        let x: Vec<f64> = (0..32).map(f64::from).collect();
        let s = Spectrum::new(x, vec![0.0; 32], None, "z").unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert_eq!(awgn(&s, 10.0, &mut rng).unwrap_err(), NoiseError::ZeroSignal);
    }

    #[test]
    fn awgn_measured_snr_near_target() {
        let s = unit_power(1024);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for target in [5.0, 20.0] {
            let ns = awgn(&s, target, &mut rng).unwrap();
            assert!((ns.measured_snr_db.unwrap() - target).abs() < 0.5);
        }
    }

    #[test]
    fn single_term_spans_one_period() {
        let grid = uniform_grid(0.0, 100.0, 401);
        let t = SineTerm { amplitude: 1.0, wavelength: 100.0, phase: 0.0 };
        let b = eval_baseline(&[t], &grid);
        assert_abs_diff_eq!(b[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b[400], 0.0, epsilon = 1e-12);
        let min_at = b.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(min_at, 300);
        assert_abs_diff_eq!(b[100], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn opposite_phases_cancel() {
        let grid = uniform_grid(0.0, 100.0, 201);
        let a = SineTerm { amplitude: 0.7, wavelength: 40.0, phase: 3.0 };
        let b = SineTerm { phase: 23.0, ..a };
        for v in eval_baseline(&[a, b], &grid) {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn drawn_terms_respect_ranges() {
        let grid = uniform_grid(0.0, 500.0, 128);
        let params = BaselineParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let terms = draw_baseline(&params, &grid, 2.0, &mut rng);
            assert!((1..=5).contains(&terms.len()));
            for t in terms {
                assert!(t.amplitude >= 0.2 && t.amplitude <= 2.0);
                assert!(t.wavelength >= 100.0 && t.wavelength <= 500.0);
            }
        }
    }

    #[test]
    fn clean_passes_through() {
        let s = lorentz();
        let ns = inject(&s, &NoiseConfig::new(Scenario::Clean, 10.0, 4)).unwrap();
        assert_eq!(ns.noisy, ns.clean);
        assert_eq!(ns.measured_snr_db, None);
    }

    #[test]
    fn inject_is_deterministic() {
        let s = lorentz();
        for sc in Scenario::ALL {
            let cfg = NoiseConfig::new(sc, 12.0, 77);
            let a = inject(&s, &cfg).unwrap();
            let b = inject(&s, &cfg).unwrap();
            assert_eq!(a, b);
            for (x, y) in a.noisy.intensities().iter().zip(b.noisy.intensities()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn baseline_independent_of_gaussian_stream() {
        // BB and GB share the baseline stream: subtracting the BB output from
        // the GB output must leave pure Gaussian noise of the configured power.
        let s = lorentz();
        let bb = inject(&s, &NoiseConfig::new(Scenario::Bb, 20.0, 5)).unwrap();
        let gb = inject(&s, &NoiseConfig::new(Scenario::Gb, 20.0, 5)).unwrap();
        let gn = inject(&s, &NoiseConfig::new(Scenario::Gn, 20.0, 5)).unwrap();
        for i in 0..s.len() {
            let gauss_gb = gb.noisy.intensities()[i] - bb.noisy.intensities()[i];
            let gauss_gn = gn.noisy.intensities()[i] - gn.clean.intensities()[i];
            assert_abs_diff_eq!(gauss_gb, gauss_gn, epsilon = 1e-12);
        }
        assert_eq!(gb.measured_snr_db, gn.measured_snr_db);
    }

    #[test]
    fn invalid_baseline_ranges() {
        let mut cfg = NoiseConfig::new(Scenario::Bb, 0.0, 0);
        cfg.baseline.n_sinusoids = (0, 3);
        assert!(inject(&lorentz(), &cfg).is_err());
        cfg.baseline.n_sinusoids = (1, 17);
        assert!(cfg.validate().is_err());
        cfg.baseline = BaselineParams { amplitude: (0.0, 1.0), ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.baseline = BaselineParams { wavelength: (0.5, 1.5), ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
