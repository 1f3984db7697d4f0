//! Local-average prediction on delay vectors: empirical conditional means
//! χ_ε(y) and deviations σ_ε(y) of successors over ε-balls, their behaviour
//! along a decreasing ε ladder, and predictability reports over many
//! reference vectors.

use std::io;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cli::{emit_csv, Field};
use crate::embedding::DelaySeries;
use crate::neighbors::{KdTree, Payload, TreeError};

pub const DEFAULT_MIN_COUNT: usize = 20;
pub const DEFAULT_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("no neighbour with a successor within eps = {0}")]
    EmptyBall(f64),
    #[error("eps must be positive, got {0}")]
    BadEps(f64),
    #[error("ladder must be non-empty, positive and strictly decreasing")]
    BadLadder,
    #[error("min_count must be at least 2")]
    BadMinCount,
    #[error("reference vector has dimension {got}, series has k = {k}")]
    DimensionMismatch { got: usize, k: usize },
    #[error("cannot sample {want} references from {have} candidates")]
    TooFewCandidates { want: usize, have: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Indices i with a successor and ‖y_i − y‖ < eps, ascending. Linear scan.
pub fn neighbor_indices(series: &DelaySeries, y: &[f64], eps: f64) -> Vec<usize> {
    let mask = series.successor_mask();
    series
        .vectors()
        .enumerate()
        .filter(|(i, v)| mask[*i] && distance(v, y) < eps)
        .map(|(i, _)| i)
        .collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean and RMS spread of the successors of the in-ball vectors. An empty
/// ball has `count == 0`, and then `chi` and `sigma` are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSigma {
    pub chi: Vec<f64>,
    pub sigma: f64,
    pub count: usize,
}

impl ChiSigma {
    fn empty(k: usize) -> ChiSigma {
        ChiSigma { chi: vec![f64::NAN; k], sigma: f64::NAN, count: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn chi_norm(&self) -> f64 {
        self.chi.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Two-pass χ/σ over the successors of the given indices.
pub fn chi_sigma_of(series: &DelaySeries, indices: &[usize]) -> ChiSigma {
    let k = series.k();
    if indices.is_empty() {
        return ChiSigma::empty(k);
    }
    let n = indices.len() as f64;
    let mut chi = vec![0.0; k];
    for &i in indices {
        for (c, v) in chi.iter_mut().zip(series.vector(i + 1)) {
            *c += v;
        }
    }
    chi.iter_mut().for_each(|c| *c /= n);
    let ss: f64 = indices.iter().map(|&i| distance(series.vector(i + 1), &chi).powi(2)).sum();
    ChiSigma { chi, sigma: (ss / n).sqrt(), count: indices.len() }
}

/// χ_ε(y), σ_ε(y) by linear scan.
pub fn chi_sigma(series: &DelaySeries, y: &[f64], eps: f64) -> ChiSigma {
    chi_sigma_of(series, &neighbor_indices(series, y, eps))
}

/// Average of the successors of vectors within `eps` of the last vector.
pub fn predict_next(series: &DelaySeries, eps: f64) -> Result<Vec<f64>, PredictError> {
    if !(eps > 0.0) {
        return Err(PredictError::BadEps(eps));
    }
    let last = series.vector(series.len() - 1);
    let cs = chi_sigma(series, last, eps);
    if cs.is_empty() {
        return Err(PredictError::EmptyBall(eps));
    }
    Ok(cs.chi)
}

/// A delay series with a tree over its vectors whose payload is each
/// vector's successor.
pub struct SeriesIndex<'a> {
    series: &'a DelaySeries,
    tree: KdTree,
}

impl<'a> SeriesIndex<'a> {
    pub fn new(series: &'a DelaySeries) -> Result<SeriesIndex<'a>, PredictError> {
        let k = series.k();
        let present = series.successor_mask();
        let flat = series.as_flat();
        let mut rows = Vec::with_capacity(flat.len());
        rows.extend_from_slice(&flat[k.min(flat.len())..]);
        rows.resize(flat.len(), 0.0);
        let tree = KdTree::build(flat, k, None, Some(Payload { dim: k, rows, present }))?;
        Ok(SeriesIndex { series, tree })
    }

    pub fn series(&self) -> &DelaySeries {
        self.series
    }

    pub fn neighbor_indices(&self, y: &[f64], eps: f64) -> Vec<usize> {
        let mut idx = self.tree.within(y, eps);
        idx.retain(|&i| self.series.has_successor(i));
        idx
    }

    pub fn chi_sigma(&self, y: &[f64], eps: f64) -> ChiSigma {
        let m = self.tree.moments_within(y, eps);
        if m.count == 0 {
            return ChiSigma::empty(self.series.k());
        }
        let sigma = m.variance().sqrt();
        ChiSigma { chi: m.mean, sigma, count: m.count }
    }
}

/// Strictly decreasing positive radii.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder(Vec<f64>);

impl Ladder {
    pub fn new(eps: Vec<f64>) -> Result<Ladder, PredictError> {
        let ok = !eps.is_empty()
            && eps.iter().all(|e| e.is_finite() && *e > 0.0)
            && eps.windows(2).all(|w| w[1] < w[0]);
        if ok {
            Ok(Ladder(eps))
        } else {
            Err(PredictError::BadLadder)
        }
    }

    /// top · 2^{−j}, j = 0..levels.
    pub fn geometric(top: f64, levels: usize) -> Result<Ladder, PredictError> {
        Ladder::new((0..levels).map(|j| top * 0.5f64.powi(j as i32)).collect())
    }

    /// 0.2 · scale · 2^{−j}, j = 0..7.
    pub fn default_for(scale: f64) -> Result<Ladder, PredictError> {
        Ladder::geometric(0.2 * scale, 8)
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }
}

/// How a ladder is fixed for a series: relative levels are multiplied by
/// the series diameter.
#[derive(Debug, Clone, PartialEq)]
pub enum LadderSpec {
    Absolute(Ladder),
    RelativeGeometric { top: f64, levels: usize },
}

impl Default for LadderSpec {
    fn default() -> Self {
        LadderSpec::RelativeGeometric { top: 0.2, levels: 8 }
    }
}

impl LadderSpec {
    pub fn resolve(&self, series: &DelaySeries) -> Result<Ladder, PredictError> {
        match self {
            LadderSpec::Absolute(l) => Ok(l.clone()),
            LadderSpec::RelativeGeometric { top, levels } => {
                let diam = series.diameter();
                // a constant series still needs positive radii
                let scale = if diam > 0.0 { diam } else { 1.0 };
                Ladder::geometric(top * scale, *levels)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderLevel {
    pub eps: f64,
    pub count: usize,
    pub chi: Vec<f64>,
    pub sigma: f64,
}

impl LadderLevel {
    pub fn chi_norm(&self) -> f64 {
        self.chi.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaEstimate {
    pub y: Vec<f64>,
    pub ladder: Vec<LadderLevel>,
    pub min_count: usize,
    /// σ at the smallest ε with at least `min_count` neighbours; `None`
    /// when no level qualifies.
    pub sigma_hat: Option<f64>,
    pub predictable: Option<bool>,
    /// Least-squares slope of log σ against log ε over admissible levels
    /// with σ > 0.
    pub slope: Option<f64>,
}

impl SigmaEstimate {
    pub fn admissible(&self) -> impl Iterator<Item = &LadderLevel> {
        self.ladder.iter().filter(move |l| l.count >= self.min_count)
    }

    pub fn is_defined(&self) -> bool {
        self.sigma_hat.is_some()
    }

    /// Whether σ strictly decreases along the last `m` admissible levels;
    /// `None` if fewer than `m` levels are admissible.
    pub fn decreasing_tail(&self, m: usize) -> Option<bool> {
        let sig: Vec<f64> = self.admissible().map(|l| l.sigma).collect();
        if m < 2 || sig.len() < m {
            return None;
        }
        Some(sig[sig.len() - m..].windows(2).all(|w| w[1] < w[0]))
    }
}

pub fn sigma_profile(
    index: &SeriesIndex<'_>,
    y: &[f64],
    ladder: &Ladder,
    min_count: usize,
    threshold: f64,
) -> Result<SigmaEstimate, PredictError> {
    if min_count < 2 {
        return Err(PredictError::BadMinCount);
    }
    let k = index.series().k();
    if y.len() != k {
        return Err(PredictError::DimensionMismatch { got: y.len(), k });
    }
    let levels: Vec<LadderLevel> = ladder
        .levels()
        .iter()
        .map(|&eps| {
            let cs = index.chi_sigma(y, eps);
            LadderLevel { eps, count: cs.count, chi: cs.chi, sigma: cs.sigma }
        })
        .collect();
    let admissible: Vec<&LadderLevel> = levels.iter().filter(|l| l.count >= min_count).collect();
    let sigma_hat = admissible.last().map(|l| l.sigma);
    let pts: Vec<(f64, f64)> = admissible
        .iter()
        .filter(|l| l.sigma > 0.0)
        .map(|l| (l.eps.ln(), l.sigma.ln()))
        .collect();
    Ok(SigmaEstimate {
        y: y.to_vec(),
        ladder: levels,
        min_count,
        sigma_hat,
        predictable: sigma_hat.map(|s| s < threshold),
        slope: fit_line(&pts).map(|f| f.slope),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares; `None` with fewer than two points or no spread
/// in x.
pub fn fit_line(pts: &[(f64, f64)]) -> Option<LineFit> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    Some(LineFit { slope, intercept: my - slope * mx, r_squared })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub n_refs: usize,
    /// References are drawn from indices ≥ tail_start · len.
    pub tail_start: f64,
    pub ladder: LadderSpec,
    pub min_count: usize,
    pub threshold: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            n_refs: 200,
            tail_start: 0.5,
            ladder: LadderSpec::default(),
            min_count: DEFAULT_MIN_COUNT,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantiles {
    pub q10: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q90: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos - pos.floor());
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictabilityReport {
    pub ladder: Ladder,
    pub threshold: f64,
    /// (reference index in the series, estimate), in sampling order.
    pub estimates: Vec<(usize, SigmaEstimate)>,
}

impl PredictabilityReport {
    pub fn defined(&self) -> impl Iterator<Item = &SigmaEstimate> {
        self.estimates.iter().map(|(_, e)| e).filter(|e| e.is_defined())
    }

    pub fn n_undefined(&self) -> usize {
        self.estimates.len() - self.defined().count()
    }

    /// Fraction of defined estimates that are predictable.
    pub fn predictable_fraction(&self) -> f64 {
        let (mut yes, mut n) = (0usize, 0usize);
        for e in self.defined() {
            n += 1;
            yes += (e.predictable == Some(true)) as usize;
        }
        if n == 0 {
            f64::NAN
        } else {
            yes as f64 / n as f64
        }
    }

    pub fn sigma_quantiles(&self) -> Quantiles {
        let mut s: Vec<f64> = self.defined().filter_map(|e| e.sigma_hat).collect();
        s.sort_by(f64::total_cmp);
        Quantiles {
            q10: quantile(&s, 0.1),
            q25: quantile(&s, 0.25),
            q50: quantile(&s, 0.5),
            q75: quantile(&s, 0.75),
            q90: quantile(&s, 0.9),
        }
    }

    pub fn median_slope(&self) -> f64 {
        let mut s: Vec<f64> = self.estimates.iter().filter_map(|(_, e)| e.slope).collect();
        s.sort_by(f64::total_cmp);
        quantile(&s, 0.5)
    }

    /// Fraction of references with at least `m` admissible levels whose σ
    /// strictly decreases along the last `m` of them.
    pub fn decreasing_fraction(&self, m: usize) -> f64 {
        let flags: Vec<bool> = self.estimates.iter().filter_map(|(_, e)| e.decreasing_tail(m)).collect();
        if flags.is_empty() {
            return f64::NAN;
        }
        flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64
    }

    /// Median over references of σ at each ladder level (admissible
    /// entries only).
    pub fn median_sigma_by_level(&self) -> Vec<f64> {
        (0..self.ladder.levels().len())
            .map(|j| {
                let mut s: Vec<f64> = self
                    .estimates
                    .iter()
                    .map(|(_, e)| &e.ladder[j])
                    .filter(|l| l.count >= self.min_count())
                    .map(|l| l.sigma)
                    .collect();
                s.sort_by(f64::total_cmp);
                quantile(&s, 0.5)
            })
            .collect()
    }

    fn min_count(&self) -> usize {
        self.estimates.first().map_or(DEFAULT_MIN_COUNT, |(_, e)| e.min_count)
    }

    /// Rows `ref_idx,eps,count,sigma,chi_norm`.
    pub fn write_csv(&self, path: &Path) -> Result<(), PredictError> {
        let rows = self.estimates.iter().flat_map(|(i, e)| {
            e.ladder.iter().map(move |l| {
                vec![Field::from(*i), Field::Real(l.eps), Field::from(l.count), Field::Real(l.sigma), Field::Real(l.chi_norm())]
            })
        });
        emit_csv(path, &["ref_idx", "eps", "count", "sigma", "chi_norm"], rows)?;
        Ok(())
    }

    /// Plain `key = value` lines.
    pub fn summary(&self) -> String {
        let q = self.sigma_quantiles();
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        line("n_refs", self.estimates.len().to_string());
        line("n_undefined", self.n_undefined().to_string());
        line("predictable_fraction", format!("{}", self.predictable_fraction()));
        line("threshold", format!("{}", self.threshold));
        for (name, v) in [("q10", q.q10), ("q25", q.q25), ("q50", q.q50), ("q75", q.q75), ("q90", q.q90)] {
            line(&format!("sigma_hat_{name}"), format!("{v}"));
        }
        line("median_slope", format!("{}", self.median_slope()));
        s
    }
}

/// Estimates at the given reference indices, in the given order.
pub fn report_at(index: &SeriesIndex<'_>, refs: &[usize], opts: &ReportOptions) -> Result<PredictabilityReport, PredictError> {
    let ladder = opts.ladder.resolve(index.series())?;
    let estimates = refs
        .par_iter()
        .map(|&i| {
            let y = index.series().vector(i);
            sigma_profile(index, y, &ladder, opts.min_count, opts.threshold).map(|e| (i, e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PredictabilityReport { ladder, threshold: opts.threshold, estimates })
}

/// `n` distinct indices drawn uniformly from `candidates`, kept in
/// ascending order.
pub fn sample_refs<R: Rng + ?Sized>(candidates: &[usize], n: usize, rng: &mut R) -> Result<Vec<usize>, PredictError> {
    if n > candidates.len() {
        return Err(PredictError::TooFewCandidates { want: n, have: candidates.len() });
    }
    let mut out: Vec<usize> = sample(rng, candidates.len(), n).into_iter().map(|j| candidates[j]).collect();
    out.sort_unstable();
    Ok(out)
}

/// Report over references sampled uniformly from the tail of the series.
pub fn predictability_report<R: Rng + ?Sized>(
    series: &DelaySeries,
    opts: &ReportOptions,
    rng: &mut R,
) -> Result<PredictabilityReport, PredictError> {
    let index = SeriesIndex::new(series)?;
    let start = ((series.len() as f64) * opts.tail_start.clamp(0.0, 1.0)) as usize;
    let candidates: Vec<usize> = (start..series.len()).collect();
    let n = opts.n_refs.min(candidates.len());
    let refs = sample_refs(&candidates, n, rng)?;
    report_at(&index, &refs, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{trajectory, State, SystemConfig, SystemId, GOLDEN_ALPHA};
    use crate::embedding::{delay_series, measure};
    use crate::manifold::wrap_circle;
    use crate::observables::{cos_turns, cosine_circle, Observable};
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn series1(xs: &[f64]) -> DelaySeries {
        delay_series(xs, 1).unwrap()
    }

    #[test]
    fn neighbor_examples() {
        let s = series1(&[0.0, 1.0, 2.0]);
        assert_eq!(neighbor_indices(&s, &[0.0], 0.5), vec![0]);
        assert_eq!(neighbor_indices(&s, &[0.0], 100.0), vec![0, 1]);
        assert!(neighbor_indices(&s, &[0.5], 1e-12).is_empty());
        let idx = SeriesIndex::new(&s).unwrap();
        assert_eq!(idx.neighbor_indices(&[0.0], 100.0), vec![0, 1]);
    }

    #[test]
    fn chi_sigma_examples() {
        // neighbours 0 and 2 with successors 5 and 9
        let s = series1(&[0.0, 5.0, 0.1, 9.0]);
        let cs = chi_sigma(&s, &[0.0], 0.5);
        assert_eq!(cs.count, 2);
        assert_eq!(cs.chi, vec![7.0]);
        assert_eq!(cs.sigma, 2.0);
        let s = series1(&[0.0, 3.0, 0.0, 3.0, 0.0, 3.0]);
        let cs = chi_sigma(&s, &[0.0], 0.5);
        assert_eq!(cs.sigma, 0.0);
        assert_eq!(cs.count, 3);
        let cs = chi_sigma(&s, &[1.5], 0.1);
        assert!(cs.is_empty() && cs.sigma.is_nan());
    }

    #[test]
    fn predict_examples() {
        let s = series1(&[0.0, 4.0, 0.0, 4.0, 0.0]);
        assert_eq!(predict_next(&s, 0.5).unwrap(), vec![4.0]);
        let s = series1(&[0.0, 4.0, 7.0, 0.05]);
        assert_eq!(predict_next(&s, 0.1).unwrap(), vec![4.0]);
        assert!(matches!(predict_next(&s, 0.01), Err(PredictError::EmptyBall(_))));
        assert!(predict_next(&s, 0.0).is_err());
    }

    #[test]
    fn rotation_prediction_error_is_order_eps() {
        // h(t) = t is injective on [0,1) away from the cut, and the rotation is an isometry
        let alpha = GOLDEN_ALPHA;
        let xs: Vec<f64> = (0..20_000).map(|i| (0.05 + i as f64 * alpha).rem_euclid(1.0)).collect();
        for n in [5_000, 12_345, 19_999] {
            let s = series1(&xs[..n]);
            let y = xs[n - 1];
            let next = (y + alpha).rem_euclid(1.0);
            if y > 0.05 && y < 0.95 && next > 0.05 && next < 0.95 {
                for eps in [0.01, 0.003] {
                    let p = predict_next(&s, eps).unwrap();
                    assert!((p[0] - next).abs() <= eps * 1.01);
                }
            }
        }
    }

    #[test]
    fn tree_and_scan_agree() {
        let cfg = SystemConfig::new(SystemId::Henon);
        let h = Observable::new(crate::observables::Base::Coordinate(0), 2).unwrap();
        let st = trajectory(&cfg, State::Plane([0.1, 0.1]), 20_000, 100).unwrap();
        let s = delay_series(&measure(&h, &st), 2).unwrap();
        let idx = SeriesIndex::new(&s).unwrap();
        for i in [0, 10, 777, 15_000] {
            let y = s.vector(i);
            for eps in [0.5, 0.05, 0.005] {
                let a = chi_sigma(&s, y, eps);
                let b = idx.chi_sigma(y, eps);
                assert_eq!(a.count, b.count);
                assert_eq!(neighbor_indices(&s, y, eps), idx.neighbor_indices(y, eps));
                if a.count > 0 {
                    assert!((a.sigma - b.sigma).abs() < 1e-12);
                    for (x, z) in a.chi.iter().zip(&b.chi) {
                        assert!((x - z).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn profile_of_identical_vectors_is_zero() {
        let s = series1(&[1.5; 100]);
        let idx = SeriesIndex::new(&s).unwrap();
        let ladder = LadderSpec::default().resolve(&s).unwrap();
        let e = sigma_profile(&idx, &[1.5], &ladder, 20, 1e-3).unwrap();
        assert_eq!(e.sigma_hat, Some(0.0));
        assert_eq!(e.predictable, Some(true));
    }

    #[test]
    fn profile_rejects_bad_input() {
        let s = series1(&[0.0, 1.0, 2.0]);
        let idx = SeriesIndex::new(&s).unwrap();
        let l = Ladder::new(vec![1.0]).unwrap();
        assert!(sigma_profile(&idx, &[0.0], &l, 1, 1e-3).is_err());
        assert!(sigma_profile(&idx, &[0.0, 1.0], &l, 2, 1e-3).is_err());
        assert!(Ladder::new(vec![1.0, 1.0]).is_err());
        assert!(Ladder::new(vec![]).is_err());
        let e = sigma_profile(&idx, &[0.0], &Ladder::new(vec![1e-6]).unwrap(), 2, 1e-3).unwrap();
        assert_eq!(e.sigma_hat, None);
        assert_eq!(e.predictable, None);
    }

    #[test]
    fn linear_system_sigma_is_order_eps() {
        // x → 0.9 x + 0.05 on an orbit segment reversed in time for density
        let mut xs = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let mut x: f64 = rng.gen_range(-1.0..1.0);
            for _ in 0..100 {
                xs.push(x);
                x = 0.9 * x + 0.05;
            }
        }
        let parts: Vec<DelaySeries> = xs.chunks(100).map(series1).collect();
        let s = DelaySeries::join(&parts).unwrap();
        let idx = SeriesIndex::new(&s).unwrap();
        let ladder = Ladder::geometric(0.2, 8).unwrap();
        let e = sigma_profile(&idx, &[0.1], &ladder, 10, 1e-3).unwrap();
        let slope = e.slope.unwrap();
        assert!((slope - 1.0).abs() < 0.25, "slope {slope}");
    }

    #[test]
    fn two_atom_oracle_on_rotation() {
        let cfg = SystemConfig::new(SystemId::Rotation);
        let h = cosine_circle();
        let st = trajectory(&cfg, State::Circle(wrap_circle(0.0).unwrap()), 200_000, 0).unwrap();
        let s = delay_series(&measure(&h, &st), 1).unwrap();
        let idx = SeriesIndex::new(&s).unwrap();
        let ladder = LadderSpec::default().resolve(&s).unwrap();
        for t0 in [0.1, 0.2, 0.33, 0.65, 0.8] {
            let want = (cos_turns(t0 + GOLDEN_ALPHA) - cos_turns(-t0 + GOLDEN_ALPHA)).abs() / 2.0;
            let e = sigma_profile(&idx, &[cos_turns(t0)], &ladder, 20, 1e-3).unwrap();
            let got = e.sigma_hat.unwrap();
            assert!((got - want).abs() <= 0.1 * want, "t0 {t0}: {got} vs {want}");
        }
    }

    #[test]
    fn constant_observable_is_predictable() {
        let cfg = SystemConfig::new(SystemId::Henon);
        let h = Observable::constant(0.7, 2).unwrap();
        let st = trajectory(&cfg, State::Plane([0.1, 0.1]), 5_000, 100).unwrap();
        let s = delay_series(&measure(&h, &st), 2).unwrap();
        let r = predictability_report(&s, &ReportOptions { n_refs: 50, ..Default::default() }, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(r.predictable_fraction(), 1.0);
    }

    #[test]
    fn rotation_k1_is_mostly_unpredictable() {
        let cfg = SystemConfig::new(SystemId::Rotation);
        let st = trajectory(&cfg, State::Circle(wrap_circle(0.0).unwrap()), 100_000, 0).unwrap();
        let s = delay_series(&measure(&cosine_circle(), &st), 1).unwrap();
        let opts = ReportOptions { n_refs: 200, ..Default::default() };
        let r = predictability_report(&s, &opts, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(r.predictable_fraction() < 0.2);
    }

    #[test]
    fn report_csv_and_determinism() {
        let cfg = SystemConfig::new(SystemId::Henon);
        let h = Observable::new(crate::observables::Base::Coordinate(0), 2).unwrap();
        let st = trajectory(&cfg, State::Plane([0.1, 0.1]), 20_000, 100).unwrap();
        let s = delay_series(&measure(&h, &st), 2).unwrap();
        let opts = ReportOptions { n_refs: 30, ..Default::default() };
        let a = predictability_report(&s, &opts, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = predictability_report(&s, &opts, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert!(a.estimates.iter().all(|(i, _)| *i >= 10_000));
        let dir = tempfile::tempdir().unwrap();
        let (p, q) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        a.write_csv(&p).unwrap();
        b.write_csv(&q).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, std::fs::read_to_string(&q).unwrap());
        assert!(text.starts_with("ref_idx,eps,count,sigma,chi_norm\n"));
        assert_eq!(text.lines().count(), 1 + 30 * 8);
        assert!(a.summary().contains("predictable_fraction"));
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0], 0.5), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
        assert!(quantile(&[], 0.5).is_nan());
    }

    proptest! {
        #[test]
        fn sigma_is_standard_deviation(xs in prop::collection::vec(-10.0f64..10.0, 2..80), y in -10.0f64..10.0, eps in 0.1f64..25.0) {
            let s = series1(&xs);
            let cs = chi_sigma(&s, &[y], eps);
            let succ: Vec<f64> = (0..xs.len() - 1).filter(|&i| (xs[i] - y).abs() < eps).map(|i| xs[i + 1]).collect();
            prop_assert_eq!(cs.count, succ.len());
            if !succ.is_empty() {
                let n = succ.len() as f64;
                let mean = succ.iter().sum::<f64>() / n;
                let sd = (succ.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                prop_assert!((cs.chi[0] - mean).abs() < 1e-12);
                prop_assert!((cs.sigma - sd).abs() < 1e-12);
                let tree = SeriesIndex::new(&s).unwrap().chi_sigma(&[y], eps);
                prop_assert!((tree.sigma - sd).abs() < 1e-12);
            }
        }

        #[test]
        fn counts_non_increasing(xs in prop::collection::vec(-1.0f64..1.0, 3..200), y in -1.0f64..1.0) {
            let s = series1(&xs);
            let idx = SeriesIndex::new(&s).unwrap();
            let ladder = Ladder::geometric(2.0, 10).unwrap();
            let e = sigma_profile(&idx, &[y], &ladder, 2, 1e-3).unwrap();
            prop_assert!(e.ladder.windows(2).all(|w| w[1].count <= w[0].count));
            prop_assert!(e.ladder.iter().all(|l| l.count == 0 || l.sigma >= 0.0));
        }

        #[test]
        fn permutation_invariance(xs in prop::collection::vec(-5.0f64..5.0, 3..60), seed in 0u64..1000) {
            let s = delay_series(&xs, 2).unwrap();
            let mut idx: Vec<usize> = (0..s.len() - 1).collect();
            let a = chi_sigma_of(&s, &idx);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::SliceRandom::shuffle(&mut idx[..], &mut rng);
            let b = chi_sigma_of(&s, &idx);
            prop_assert!((a.sigma - b.sigma).abs() < 1e-12);
            for (x, z) in a.chi.iter().zip(&b.chi) {
                prop_assert!((x - z).abs() < 1e-12);
            }
        }

        #[test]
        fn translation_equivariance(xs in prop::collection::vec(-5.0f64..5.0, 3..60), c in -100.0f64..100.0, y in -5.0f64..5.0) {
            let s = series1(&xs);
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let t = series1(&shifted);
            let a = chi_sigma(&s, &[y], 2.0);
            let b = chi_sigma(&t, &[y + c], 2.0);
            prop_assert_eq!(a.count, b.count);
            if a.count > 0 {
                prop_assert!((a.chi[0] + c - b.chi[0]).abs() < 1e-12);
                prop_assert!((a.sigma - b.sigma).abs() < 1e-12);
            }
        }

        #[test]
        fn two_point_formula(v1 in -5.0f64..5.0, v2 in -5.0f64..5.0) {
            let s = DelaySeries::join(&[series1(&[0.0, v1]), series1(&[0.0, v2])]).unwrap();
            let want = (v1 - v2).powi(2) / 4.0;
            let cs = chi_sigma(&s, &[0.0], 0.5);
            prop_assert_eq!(cs.count, 2);
            prop_assert!((cs.sigma.powi(2) - want).abs() <= 1e-12 * (1.0 + want));
            let tree = SeriesIndex::new(&s).unwrap().chi_sigma(&[0.0], 0.5);
            prop_assert!((tree.sigma.powi(2) - want).abs() <= 1e-12 * (1.0 + want));
        }
    }
}
