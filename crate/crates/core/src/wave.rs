//! Parametric wave spectra and random-phase harmonic realizations.
//!
//! Two spectrum families are supported. The Bretschneider-type form
//!
//! ```text
//! S(w) = Hs^2 (5/3) wp^4 / w^5 exp(-5/4 (wp/w)^4)
//! ```
//!
//! integrates to `Hs^2 / 3` (not the usual `Hs^2 / 16`); it is implemented as
//! written. The JONSWAP form uses the standard peak-enhancement factor and is
//! normalized numerically so that its zeroth moment equals `Hs^2 / 16`.
//!
//! Realizations are sums of cosines with frequencies on an equally spaced grid
//! `w_i = i * dw`, `dw = 2 pi / duration`, so the elevation repeats exactly
//! after `duration` seconds. Phases are drawn from a ChaCha8 stream seeded with
//! a `u64`, which makes realizations identical across platforms.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower edge of the sampled band, as a multiple of the peak frequency.
pub const BAND_LOW: f64 = 0.2;
/// Upper edge of the sampled band, as a multiple of the peak frequency.
pub const BAND_HIGH: f64 = 8.0;

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumKind {
    BretschneiderForm,
    Jonswap,
}

/// Spectrum parameters. `omega_p` is always stored in rad/s; for JONSWAP the
/// peak period is recovered with [`SpectrumSpec::peak_period`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    pub hs: f64,
    pub omega_p: f64,
    pub gamma: f64,
}

impl SpectrumSpec {
    pub fn bretschneider(hs: f64, omega_p: f64) -> Result<Self> {
        Self {
            kind: SpectrumKind::BretschneiderForm,
            hs,
            omega_p,
            gamma: 1.0,
        }
        .validated()
    }

    pub fn jonswap(hs: f64, tp: f64, gamma: f64) -> Result<Self> {
        if !(tp > 0.0) {
            return Err(Error::Domain(format!("peak period must be positive, got {tp}")));
        }
        Self {
            kind: SpectrumKind::Jonswap,
            hs,
            omega_p: 2.0 * PI / tp,
            gamma,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.hs >= 0.0) || !self.hs.is_finite() {
            return Err(Error::Domain(format!("Hs must be >= 0, got {}", self.hs)));
        }
        if !(self.omega_p > 0.0) || !self.omega_p.is_finite() {
            return Err(Error::Domain(format!(
                "peak frequency must be > 0, got {}",
                self.omega_p
            )));
        }
        if !(self.gamma >= 1.0) {
            return Err(Error::Domain(format!(
                "peak-shape factor must be >= 1, got {}",
                self.gamma
            )));
        }
        Ok(self)
    }

    pub fn peak_period(&self) -> f64 {
        2.0 * PI / self.omega_p
    }

    /// `omega_p` for the Bretschneider form, `Tp` for JONSWAP (the value stored
    /// in realization documents).
    pub fn omega_p_or_tp(&self) -> f64 {
        match self.kind {
            SpectrumKind::BretschneiderForm => self.omega_p,
            SpectrumKind::Jonswap => self.peak_period(),
        }
    }

    /// Analytic zeroth moment of the continuous spectrum.
    pub fn zeroth_moment(&self) -> f64 {
        match self.kind {
            SpectrumKind::BretschneiderForm => self.hs * self.hs / 3.0,
            SpectrumKind::Jonswap => self.hs * self.hs / 16.0,
        }
    }

    fn density_fn(&self) -> SpectralDensity {
        SpectralDensity::new(*self)
    }
}

/// Spectrum with any normalization constant precomputed.
struct SpectralDensity {
    spec: SpectrumSpec,
    jonswap_scale: f64,
}

impl SpectralDensity {
    fn new(spec: SpectrumSpec) -> Self {
        let jonswap_scale = match spec.kind {
            SpectrumKind::BretschneiderForm => 1.0,
            SpectrumKind::Jonswap => 1.0 / jonswap_shape_integral(spec.gamma),
        };
        Self {
            spec,
            jonswap_scale,
        }
    }

    fn eval(&self, omega: f64) -> f64 {
        let s = &self.spec;
        let x = omega / s.omega_p;
        match s.kind {
            SpectrumKind::BretschneiderForm => {
                s.hs * s.hs * (5.0 / 3.0) * s.omega_p.powi(4) / omega.powi(5)
                    * (-1.25 * x.powi(-4)).exp()
            }
            SpectrumKind::Jonswap => {
                s.hs * s.hs / 16.0 / s.omega_p * self.jonswap_scale * jonswap_shape(x, s.gamma)
            }
        }
    }
}

/// Unnormalized JONSWAP shape in the dimensionless frequency `x = w / wp`.
fn jonswap_shape(x: f64, gamma: f64) -> f64 {
    let pm = x.powi(-5) * (-1.25 * x.powi(-4)).exp();
    if gamma == 1.0 {
        return pm;
    }
    let sigma = if x <= 1.0 { 0.07 } else { 0.09 };
    let r = (-(x - 1.0).powi(2) / (2.0 * sigma * sigma)).exp();
    pm * gamma.powf(r)
}

/// Integral of [`jonswap_shape`] over (0, inf).
fn jonswap_shape_integral(gamma: f64) -> f64 {
    if gamma == 1.0 {
        // substitution u = 1.25 x^-4 gives exactly 1/5
        return 0.2;
    }
    // Simpson over x in [0.05, 60]; the tail beyond is x^-4/4 analytically.
    let (a, b) = (0.05, 60.0);
    let n = 60_000;
    let h = (b - a) / n as f64;
    let mut acc = jonswap_shape(a, gamma) + jonswap_shape(b, gamma);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * jonswap_shape(a + i as f64 * h, gamma);
    }
    acc * h / 3.0 + b.powi(-4) / 4.0
}

/// Spectral density `S(omega)` in m^2 s.
pub fn eval_spectrum(spec: &SpectrumSpec, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "spectral density requires omega > 0, got {omega}"
        )));
    }
    Ok(spec.density_fn().eval(omega))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveComponent {
    pub omega: f64,
    pub zeta: f64,
    pub phi: f64,
}

/// A deterministic irregular-wave record.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveRealization {
    pub spec: Option<SpectrumSpec>,
    pub components: Vec<WaveComponent>,
    pub repeat_period: f64,
    pub seed: u64,
}

/// Draws a random-phase realization whose repeat period equals `duration`.
pub fn sample_realization(spec: &SpectrumSpec, duration: f64, seed: u64) -> Result<WaveRealization> {
    let spec = spec.validated()?;
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::Domain(format!("duration must be > 0, got {duration}")));
    }
    let d_omega = 2.0 * PI / duration;
    let density = spec.density_fn();
    let first = ((BAND_LOW * spec.omega_p) / d_omega).ceil().max(1.0) as usize;
    let last = ((BAND_HIGH * spec.omega_p) / d_omega).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components = (first..=last)
        .map(|i| {
            let omega = i as f64 * d_omega;
            let zeta = (2.0 * density.eval(omega) * d_omega).sqrt();
            let phi = rng.gen_range(-2.0 * PI..2.0 * PI);
            WaveComponent { omega, zeta, phi }
        })
        .collect();
    Ok(WaveRealization {
        spec: Some(spec),
        components,
        repeat_period: duration,
        seed,
    })
}

impl WaveRealization {
    /// A hand-built realization, e.g. a single regular wave.
    pub fn from_components(components: Vec<WaveComponent>, repeat_period: f64) -> Self {
        Self {
            spec: None,
            components,
            repeat_period,
            seed: 0,
        }
    }

    /// Calm water.
    pub fn calm(repeat_period: f64) -> Self {
        Self::from_components(Vec::new(), repeat_period)
    }

    pub fn delta_omega(&self) -> f64 {
        2.0 * PI / self.repeat_period
    }

    /// Every amplitude multiplied by `factor`, phases untouched.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.components {
            c.zeta *= factor;
        }
        if let Some(spec) = &mut out.spec {
            spec.hs *= factor;
        }
        out
    }

    pub fn elevation(&self, t: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.zeta * (c.omega * t + c.phi).cos())
            .sum()
    }

    /// Elevation seen from a vessel advancing at `speed` into head seas.
    pub fn encountered_elevation(&self, t: f64, speed: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.zeta * (encounter_frequency(c.omega, speed) * t + c.phi).cos())
            .sum()
    }

    /// `sum_i cos(w_i t + phi_i)` without amplitudes.
    pub fn unit_cosine_sum(&self, t: f64) -> f64 {
        self.components
            .iter()
            .map(|c| (c.omega * t + c.phi).cos())
            .sum()
    }

    pub fn elevation_series(&self, t0: f64, dt: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.elevation(t0 + i as f64 * dt)).collect()
    }

    /// Variance of the discrete harmonic sum, `sum zeta^2 / 2`.
    pub fn variance(&self) -> f64 {
        self.components.iter().map(|c| 0.5 * c.zeta * c.zeta).sum()
    }

    pub fn to_document(&self, duration: f64) -> RealizationDocument {
        let spec = self.spec;
        RealizationDocument {
            kind: spec.map(|s| s.kind),
            hs: spec.map(|s| s.hs),
            omega_p_or_tp: spec.map(|s| s.omega_p_or_tp()),
            gamma: spec.map(|s| s.gamma),
            duration,
            seed: self.seed,
            components: self
                .components
                .iter()
                .map(|c| [c.omega, c.zeta, c.phi])
                .collect(),
        }
    }

    pub fn from_document(doc: &RealizationDocument) -> Result<Self> {
        let spec = match (doc.kind, doc.hs, doc.omega_p_or_tp, doc.gamma) {
            (Some(kind), Some(hs), Some(p), Some(gamma)) => Some(match kind {
                SpectrumKind::BretschneiderForm => SpectrumSpec::bretschneider(hs, p)?,
                SpectrumKind::Jonswap => SpectrumSpec::jonswap(hs, p, gamma)?,
            }),
            (None, None, None, None) => None,
            _ => {
                return Err(Error::Data(
                    "realization document has a partial spectrum description".into(),
                ))
            }
        };
        if !(doc.duration > 0.0) {
            return Err(Error::Data(format!("invalid duration {}", doc.duration)));
        }
        Ok(Self {
            spec,
            components: doc
                .components
                .iter()
                .map(|&[omega, zeta, phi]| WaveComponent { omega, zeta, phi })
                .collect(),
            repeat_period: doc.duration,
            seed: doc.seed,
        })
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let doc = self.to_document(self.repeat_period);
        std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let doc: RealizationDocument = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_document(&doc)
    }

    /// Two-column `t,eta` CSV with a header row.
    pub fn write_elevation_csv<W: Write>(&self, out: W, dt: f64, n: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "eta"])?;
        for i in 0..n {
            let t = i as f64 * dt;
            w.write_record([t.to_string(), self.elevation(t).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// JSON form of a realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationDocument {
    pub kind: Option<SpectrumKind>,
    #[serde(rename = "Hs")]
    pub hs: Option<f64>,
    pub omega_p_or_tp: Option<f64>,
    pub gamma: Option<f64>,
    pub duration: f64,
    pub seed: u64,
    pub components: Vec<[f64; 3]>,
}

/// Head-seas encounter frequency `w + w^2 U / g`.
pub fn encounter_frequency(omega: f64, speed: f64) -> f64 {
    omega + omega * omega * speed / GRAVITY
}

/// Number of indices with `eta[n] < 0 <= eta[n + 1]`.
pub fn count_zuc(series: &[f64]) -> usize {
    series
        .windows(2)
        .filter(|w| w[0] < 0.0 && w[1] >= 0.0)
        .count()
}

/// Mean zero-up-crossing period `2 pi sqrt(m0 / m2)` of the sampled band.
pub fn mean_zero_crossing_period(spec: &SpectrumSpec) -> f64 {
    let density = spec.density_fn();
    let (a, b) = (BAND_LOW * spec.omega_p, BAND_HIGH * spec.omega_p);
    let n = 20_000;
    let h = (b - a) / n as f64;
    let (mut m0, mut m2) = (0.0, 0.0);
    for i in 0..=n {
        let w = a + i as f64 * h;
        let weight = if i == 0 || i == n { 0.5 } else { 1.0 };
        let s = density.eval(w);
        m0 += weight * s;
        m2 += weight * s * w * w;
    }
    2.0 * PI * (m0 / m2).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn trapezoid(spec: &SpectrumSpec, hi: f64, n: usize) -> f64 {
        let h = hi / n as f64;
        let density = spec.density_fn();
        (1..=n)
            .map(|i| {
                let w = i as f64 * h;
                let s = density.eval(w);
                if i == n {
                    0.5 * s
                } else {
                    s
                }
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn bretschneider_at_peak() {
        let spec = SpectrumSpec::bretschneider(1.0, 1.0).unwrap();
        let s = eval_spectrum(&spec, 1.0).unwrap();
        assert_relative_eq!(s, (5.0 / 3.0) * (-1.25f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(s, 0.47750, epsilon = 1e-5);
    }

    #[test]
    fn zero_height_and_tails() {
        let calm = SpectrumSpec::bretschneider(0.0, 1.0).unwrap();
        for w in [0.1, 1.0, 7.0] {
            assert_eq!(eval_spectrum(&calm, w).unwrap(), 0.0);
        }
        let spec = SpectrumSpec::bretschneider(1.0, 1.0).unwrap();
        assert!(eval_spectrum(&spec, 1e3).unwrap() < 1e-14);
        assert!(eval_spectrum(&spec, 1e-2).unwrap() < 1e-300);
    }

    #[test]
    fn non_positive_omega_rejected() {
        let spec = SpectrumSpec::bretschneider(1.0, 1.0).unwrap();
        assert!(matches!(eval_spectrum(&spec, 0.0), Err(Error::Domain(_))));
        assert!(matches!(eval_spectrum(&spec, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(SpectrumSpec::bretschneider(-1.0, 1.0).is_err());
        assert!(SpectrumSpec::bretschneider(1.0, 0.0).is_err());
        assert!(SpectrumSpec::jonswap(1.0, 8.0, 0.5).is_err());
    }

    #[test]
    fn spectral_closure() {
        for hs in [0.5, 1.0, 2.0] {
            let spec = SpectrumSpec::bretschneider(hs, 1.0).unwrap();
            let m0 = trapezoid(&spec, 20.0, 200_000);
            assert_relative_eq!(m0, hs * hs / 3.0, max_relative = 5e-3);
        }
    }

    #[test]
    fn jonswap_normalized_to_hs_squared_over_16() {
        for gamma in [1.0, 3.3] {
            let spec = SpectrumSpec::jonswap(4.0, 8.5, gamma).unwrap();
            let m0 = trapezoid(&spec, 20.0 * spec.omega_p, 200_000);
            assert_relative_eq!(m0, 1.0, max_relative = 2e-3);
        }
    }

    #[test]
    fn jonswap_gamma_one_is_pierson_moskowitz_shape() {
        // PM with m0 = Hs^2/16: S = 5/16 Hs^2 wp^4 w^-5 exp(-5/4 (wp/w)^4)
        let spec = SpectrumSpec::jonswap(2.0, 7.5, 1.0).unwrap();
        let wp = spec.omega_p;
        for w in [0.5f64, 0.8, 1.3] {
            let pm = 5.0 / 16.0 * 4.0 * wp.powi(4) / w.powi(5) * (-1.25 * (wp / w).powi(4)).exp();
            assert_relative_eq!(eval_spectrum(&spec, w).unwrap(), pm, max_relative = 1e-12);
        }
    }

    #[test]
    fn band_captures_nearly_all_variance() {
        let spec = SpectrumSpec::bretschneider(1.0, 1.0).unwrap();
        let real = sample_realization(&spec, 2000.0, 3).unwrap();
        assert!(real.variance() / spec.zeroth_moment() > 0.999);
    }

    #[test]
    fn sampled_grid_and_amplitudes() {
        let spec = SpectrumSpec::bretschneider(1.0, 1.0).unwrap();
        let real = sample_realization(&spec, 500.0, 0).unwrap();
        let dw = 2.0 * PI / 500.0;
        assert_relative_eq!(real.delta_omega(), dw, max_relative = 1e-15);
        assert_relative_eq!(dw, 0.012566, epsilon = 1e-6);
        for pair in real.components.windows(2) {
            assert!(pair[1].omega > pair[0].omega);
            assert_relative_eq!(pair[1].omega - pair[0].omega, dw, max_relative = 1e-9);
        }
        for c in &real.components {
            assert!(c.omega > 0.0);
            assert!((-2.0 * PI..2.0 * PI).contains(&c.phi));
            let expect = 2.0 * eval_spectrum(&spec, c.omega).unwrap() * dw;
            assert_relative_eq!(c.zeta * c.zeta, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let spec = SpectrumSpec::bretschneider(1.0, 1.0).unwrap();
        let a = sample_realization(&spec, 500.0, 42).unwrap();
        let b = sample_realization(&spec, 500.0, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_realization(&spec, 500.0, 43).unwrap();
        assert_ne!(a.components[0].phi, c.components[0].phi);
    }

    #[test]
    fn elevation_of_single_component() {
        let real = WaveRealization::from_components(
            vec![WaveComponent {
                omega: 1.0,
                zeta: 1.0,
                phi: 0.0,
            }],
            2.0 * PI,
        );
        assert_relative_eq!(real.elevation(0.0), 1.0);
        assert_relative_eq!(real.elevation(PI), -1.0);
    }

    #[test]
    fn periodic_and_zero_mean_over_repeat_period() {
        let spec = SpectrumSpec::bretschneider(1.0, 1.0).unwrap();
        let real = sample_realization(&spec, 500.0, 9).unwrap();
        for t in [0.0, 13.7, 250.0] {
            let a = real.elevation(t);
            let b = real.elevation(t + real.repeat_period);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let n = 5000;
        let series = real.elevation_series(0.0, 500.0 / n as f64, n);
        let mean = series.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-10 * spec.hs);
        let var = series.iter().map(|x| x * x).sum::<f64>() / n as f64 - mean * mean;
        assert_relative_eq!(var, real.variance(), max_relative = 1e-9);
        assert_relative_eq!(var, 1.0 / 3.0, max_relative = 0.01);
    }

    #[test]
    fn zero_up_crossings() {
        let n = 300;
        let cosine: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 3.0 * i as f64 / n as f64).cos())
            .collect();
        assert_eq!(count_zuc(&cosine), 3);
        assert_eq!(count_zuc(&[1.0, 2.0, 0.5, 3.0]), 0);
        assert_eq!(count_zuc(&[-1.0, 0.0]), 1);
    }

    #[test]
    fn zuc_count_of_training_record() {
        let spec = SpectrumSpec::bretschneider(1.0, 1.0).unwrap();
        let real = sample_realization(&spec, 500.0, 2024).unwrap();
        let n = count_zuc(&real.elevation_series(0.0, 0.1, 5000));
        assert!((95..=120).contains(&n), "N_ZUC = {n}");
    }

    #[test]
    fn document_round_trip() {
        let spec = SpectrumSpec::jonswap(4.0, 8.5, 1.0).unwrap();
        let real = sample_realization(&spec, 100.0, 5).unwrap();
        let doc = real.to_document(100.0);
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.contains("\"Hs\""));
        let back = WaveRealization::from_document(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.components, real.components);
        assert_relative_eq!(back.spec.unwrap().omega_p, spec.omega_p, max_relative = 1e-14);
    }

    #[test]
    fn elevation_csv_has_header() {
        let real = WaveRealization::calm(10.0);
        let mut buf = Vec::new();
        real.write_elevation_csv(&mut buf, 0.5, 3).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("t,eta"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn encounter_frequency_head_seas() {
        assert_relative_eq!(encounter_frequency(1.0, 18.2), 1.0 + 18.2 / GRAVITY);
        assert_eq!(encounter_frequency(0.7, 0.0), 0.7);
    }
}
