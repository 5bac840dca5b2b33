//! Pointwise and distributional prediction errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default histogram resolution for response pdfs.
pub const DEFAULT_BINS: usize = 101;
/// Default half-width of the histogram support, in reference standard deviations.
pub const DEFAULT_SUPPORT_SIGMAS: f64 = 5.0;

fn check_pair(pred: &[f64], reference: &[f64]) -> Result<()> {
    if pred.len() != reference.len() {
        return Err(Error::Data(format!(
            "series lengths differ: {} vs {}",
            pred.len(),
            reference.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Data("cannot compare empty series".into()));
    }
    Ok(())
}

/// Root-mean-square difference.
pub fn l2_error(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check_pair(pred, reference)?;
    let sum: f64 = pred.iter().zip(reference).map(|(p, r)| (p - r) * (p - r)).sum();
    Ok((sum / pred.len() as f64).sqrt())
}

/// Largest absolute pointwise difference.
pub fn linf_error(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check_pair(pred, reference)?;
    Ok(pred
        .iter()
        .zip(reference)
        .map(|(p, r)| (p - r).abs())
        .fold(0.0, f64::max))
}

/// Histogram estimate of a probability mass function on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pdf {
    pub bin_edges: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub sample_count: usize,
}

impl Pdf {
    pub fn bin_count(&self) -> usize {
        self.probabilities.len()
    }

    /// Builds a pdf directly from bin masses (normalized here).
    pub fn from_masses(lo: f64, hi: f64, masses: &[f64]) -> Result<Self> {
        if masses.len() < 2 || !(hi > lo) {
            return Err(Error::Domain("pdf needs >= 2 bins and hi > lo".into()));
        }
        if masses.iter().any(|&m| !(m >= 0.0)) {
            return Err(Error::Domain("bin masses must be non-negative".into()));
        }
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("bin masses sum to zero".into()));
        }
        Ok(Self {
            bin_edges: uniform_edges(lo, hi, masses.len()),
            probabilities: masses.iter().map(|m| m / total).collect(),
            sample_count: 0,
        })
    }

    fn same_grid(&self, other: &Pdf) -> bool {
        self.bin_edges.len() == other.bin_edges.len()
            && self
                .bin_edges
                .iter()
                .zip(&other.bin_edges)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
    }
}

fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let w = (hi - lo) / bins as f64;
    (0..=bins)
        .map(|i| if i == bins { hi } else { lo + i as f64 * w })
        .collect()
}

/// Normalized histogram over `[lo, hi]`; samples outside are clipped into the
/// end bins.
pub fn estimate_pdf(series: &[f64], bin_count: usize, support: (f64, f64)) -> Result<Pdf> {
    let (lo, hi) = support;
    if series.is_empty() {
        return Err(Error::Data("cannot estimate a pdf from an empty series".into()));
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("invalid support ({lo}, {hi})")));
    }
    if bin_count < 2 {
        return Err(Error::Domain("bin_count must be >= 2".into()));
    }
    let width = (hi - lo) / bin_count as f64;
    let mut counts = vec![0usize; bin_count];
    for &x in series {
        let idx = if x.is_nan() {
            return Err(Error::Data("series contains NaN".into()));
        } else {
            ((x - lo) / width).floor().clamp(0.0, (bin_count - 1) as f64) as usize
        };
        counts[idx] += 1;
    }
    let n = series.len() as f64;
    Ok(Pdf {
        bin_edges: uniform_edges(lo, hi, bin_count),
        probabilities: counts.iter().map(|&c| c as f64 / n).collect(),
        sample_count: series.len(),
    })
}

fn kl_against_mixture(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(&pi, &mi)| pi > 0.0 && mi > 0.0)
        .map(|(&pi, &mi)| pi * (pi / mi).ln())
        .sum()
}

/// Jensen-Shannon divergence with natural logarithms, in `[0, ln 2]`.
pub fn jsd(p: &Pdf, q: &Pdf) -> Result<f64> {
    if !p.same_grid(q) {
        return Err(Error::Data("pdfs are defined on different bin grids".into()));
    }
    let m: Vec<f64> = p
        .probabilities
        .iter()
        .zip(&q.probabilities)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let value =
        0.5 * kl_against_mixture(&p.probabilities, &m) + 0.5 * kl_against_mixture(&q.probabilities, &m);
    Ok(value.clamp(0.0, std::f64::consts::LN_2))
}

/// Histogram settings recorded alongside every JSD value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdfSettings {
    pub bins: usize,
    pub support_sigmas: f64,
}

impl Default for PdfSettings {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            support_sigmas: DEFAULT_SUPPORT_SIGMAS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub l2: f64,
    pub linf: f64,
    pub jsd: f64,
    pub bin_count: usize,
    pub support: (f64, f64),
    pub transient_cutoff: f64,
    pub n_samples: usize,
}

/// L2, L-infinity and JSD of `pred` against `reference`. The shared histogram
/// grid spans `mean +/- support_sigmas * std` of the reference.
pub fn compare(pred: &[f64], reference: &[f64], settings: PdfSettings, transient_cutoff: f64) -> Result<MetricsReport> {
    check_pair(pred, reference)?;
    let n = reference.len() as f64;
    let mean = reference.iter().sum::<f64>() / n;
    let std = (reference.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    // a flat reference still needs a non-degenerate grid
    let half = if std > 0.0 {
        settings.support_sigmas * std
    } else {
        pred.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max).max(1e-12)
    };
    let support = (mean - half, mean + half);
    let p = estimate_pdf(reference, settings.bins, support)?;
    let q = estimate_pdf(pred, settings.bins, support)?;
    Ok(MetricsReport {
        l2: l2_error(pred, reference)?,
        linf: linf_error(pred, reference)?,
        jsd: jsd(&p, &q)?,
        bin_count: settings.bins,
        support,
        transient_cutoff,
        n_samples: reference.len(),
    })
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    #[serde(rename = "Hs")]
    pub hs: f64,
    pub tp_or_wp: f64,
    pub model_id: String,
    pub dof: String,
    pub quantity: String,
    pub l2: f64,
    pub linf: f64,
    pub jsd: f64,
    pub n_samples: usize,
}

impl MetricsRow {
    pub fn new(hs: f64, tp_or_wp: f64, model_id: &str, dof: &str, quantity: &str, report: &MetricsReport) -> Self {
        Self {
            hs,
            tp_or_wp,
            model_id: model_id.to_string(),
            dof: dof.to_string(),
            quantity: quantity.to_string(),
            l2: report.l2,
            linf: report.linf,
            jsd: report.jsd,
            n_samples: report.n_samples,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    #[test]
    fn l2_examples() {
        assert_eq!(l2_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_relative_eq!(l2_error(&[1.5, 2.5, 3.5], &[1.0, 2.0, 3.0]).unwrap(), 0.5);
        assert_relative_eq!(
            l2_error(&[1.0, 2.0, 3.0], &[1.0, 2.0, 5.0]).unwrap(),
            (4.0f64 / 3.0).sqrt()
        );
        assert!(matches!(l2_error(&[1.0], &[1.0, 2.0]), Err(Error::Data(_))));
    }

    #[test]
    fn linf_examples() {
        assert_eq!(linf_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(linf_error(&[1.0, -1.0], &[1.0, 2.0]).unwrap(), 3.0);
        assert_eq!(linf_error(&[1.0, 2.0, 3.0], &[1.0, 2.0, 5.0]).unwrap(), 2.0);
        assert!(linf_error(&[], &[]).is_err());
    }

    #[test]
    fn pdf_single_bin_and_uniform() {
        let p = estimate_pdf(&[0.1, 0.12, 0.15], 4, (0.0, 1.0)).unwrap();
        assert_eq!(p.probabilities, vec![1.0, 0.0, 0.0, 0.0]);
        let centers = [0.125, 0.375, 0.625, 0.875, 0.125, 0.375, 0.625, 0.875];
        let u = estimate_pdf(&centers, 4, (0.0, 1.0)).unwrap();
        assert_eq!(u.probabilities, vec![0.25; 4]);
        assert_eq!(u.sample_count, 8);
    }

    #[test]
    fn pdf_clips_out_of_support() {
        let p = estimate_pdf(&[-10.0, 10.0, 0.5], 2, (0.0, 1.0)).unwrap();
        assert_relative_eq!(p.probabilities[0], 1.0 / 3.0);
        assert_relative_eq!(p.probabilities[1], 2.0 / 3.0);
    }

    #[test]
    fn pdf_errors() {
        assert!(matches!(estimate_pdf(&[], 4, (0.0, 1.0)), Err(Error::Data(_))));
        assert!(estimate_pdf(&[0.5], 1, (0.0, 1.0)).is_err());
        assert!(estimate_pdf(&[0.5], 4, (1.0, 1.0)).is_err());
    }

    #[test]
    fn gaussian_center_bin() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..1_000_000).map(|_| rng.sample(StandardNormal)).collect();
        let p = estimate_pdf(&xs, 101, (-5.0, 5.0)).unwrap();
        let width = 10.0 / 101.0;
        let expect = width / (2.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(p.probabilities[50], expect, max_relative = 0.03);
        assert_relative_eq!(expect, 0.0395, epsilon = 1e-3);
    }

    #[test]
    fn jsd_examples() {
        let p = Pdf::from_masses(0.0, 1.0, &[1.0, 0.0]).unwrap();
        let q = Pdf::from_masses(0.0, 1.0, &[0.0, 1.0]).unwrap();
        assert_eq!(jsd(&p, &p).unwrap(), 0.0);
        assert_relative_eq!(jsd(&p, &q).unwrap(), std::f64::consts::LN_2, epsilon = 1e-15);
        let other = Pdf::from_masses(0.0, 2.0, &[1.0, 0.0]).unwrap();
        assert!(matches!(jsd(&p, &other), Err(Error::Data(_))));
    }

    #[test]
    fn compare_identical_series() {
        let xs: Vec<f64> = (0..500).map(|i| (i as f64 * 0.1).sin()).collect();
        let r = compare(&xs, &xs, PdfSettings::default(), 100.0).unwrap();
        assert_eq!((r.l2, r.linf, r.jsd), (0.0, 0.0, 0.0));
        assert_eq!(r.n_samples, 500);
        assert_eq!(r.bin_count, 101);
    }

    fn masses(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, n).prop_filter("non-zero", |m| m.iter().sum::<f64>() > 1e-6)
    }

    proptest! {
        #[test]
        fn jsd_bounded_and_symmetric((a, b) in (2usize..20).prop_flat_map(|n| (masses(n), masses(n)))) {
            let p = Pdf::from_masses(-1.0, 1.0, &a).unwrap();
            let q = Pdf::from_masses(-1.0, 1.0, &b).unwrap();
            let pq = jsd(&p, &q).unwrap();
            let qp = jsd(&q, &p).unwrap();
            prop_assert!((0.0..=std::f64::consts::LN_2).contains(&pq));
            prop_assert!((pq - qp).abs() <= 1e-14);
        }

        #[test]
        fn l2_never_exceeds_linf(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50)) {
            let (p, r): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assert!(l2_error(&p, &r).unwrap() <= linf_error(&p, &r).unwrap() * (1.0 + 1e-12));
        }
    }
}
