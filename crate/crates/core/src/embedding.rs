//! Delay-coordinate maps and delay-vector series.

use std::io;
use std::path::Path;

use thiserror::Error;

use crate::cli::{emit_csv, Field};
use crate::dynamics::{DynamicsError, State, SystemConfig};
use crate::observables::Observable;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("embedding dimension must be at least 1")]
    ZeroK,
    #[error("need at least {k} measurements, got {got}")]
    TooShort { k: usize, got: usize },
    #[error("cannot join series with k = {0} and k = {1}")]
    MixedK(usize, usize),
    #[error("no series to join")]
    NothingToJoin,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Delay vectors y_i = (h_i, …, h_{i+k−1}) stored row-major. A series may
/// consist of several segments; the last vector of a segment has no
/// successor.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySeries {
    k: usize,
    data: Vec<f64>,
    source_len: usize,
    // index of the last vector of each segment, ascending
    segment_ends: Vec<usize>,
}

impl DelaySeries {
    /// Sliding windows of length `k` over `measurements`.
    pub fn from_measurements(measurements: &[f64], k: usize) -> Result<DelaySeries, EmbeddingError> {
        if k == 0 {
            return Err(EmbeddingError::ZeroK);
        }
        if measurements.len() < k {
            return Err(EmbeddingError::TooShort { k, got: measurements.len() });
        }
        let n = measurements.len() - k + 1;
        let mut data = Vec::with_capacity(n * k);
        for w in measurements.windows(k) {
            data.extend_from_slice(w);
        }
        Ok(DelaySeries { k, data, source_len: measurements.len(), segment_ends: vec![n - 1] })
    }

    /// Concatenation of series with the same `k`; no vector of one part is
    /// the successor of a vector in another.
    pub fn join(parts: &[DelaySeries]) -> Result<DelaySeries, EmbeddingError> {
        let first = parts.first().ok_or(EmbeddingError::NothingToJoin)?;
        let mut out = DelaySeries { k: first.k, data: Vec::new(), source_len: 0, segment_ends: Vec::new() };
        for p in parts {
            if p.k != out.k {
                return Err(EmbeddingError::MixedK(out.k, p.k));
            }
            let offset = out.len();
            out.data.extend_from_slice(&p.data);
            out.source_len += p.source_len;
            out.segment_ends.extend(p.segment_ends.iter().map(|e| e + offset));
        }
        Ok(out)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn segments(&self) -> usize {
        self.segment_ends.len()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn vectors(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.k)
    }

    /// Row-major coordinates of all vectors.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn has_successor(&self, i: usize) -> bool {
        i + 1 < self.len() && self.segment_ends.binary_search(&i).is_err()
    }

    pub fn successor(&self, i: usize) -> Option<usize> {
        self.has_successor(i).then_some(i + 1)
    }

    /// Per-vector successor flags, cheaper than repeated `has_successor`.
    pub fn successor_mask(&self) -> Vec<bool> {
        let mut mask = vec![true; self.len()];
        for &e in &self.segment_ends {
            mask[e] = false;
        }
        mask
    }

    /// Length of the diagonal of the bounding box of the vectors.
    pub fn diameter(&self) -> f64 {
        let mut lo = vec![f64::INFINITY; self.k];
        let mut hi = vec![f64::NEG_INFINITY; self.k];
        for v in self.vectors() {
            for j in 0..self.k {
                lo[j] = lo[j].min(v[j]);
                hi[j] = hi[j].max(v[j]);
            }
        }
        lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    /// Writes `i,y0,...,y{k-1}`.
    pub fn write_csv(&self, path: &Path) -> Result<(), EmbeddingError> {
        let mut header = vec!["i".to_string()];
        header.extend((0..self.k).map(|j| format!("y{j}")));
        let rows = self.vectors().enumerate().map(|(i, v)| {
            let mut row = vec![Field::Int(i as i64)];
            row.extend(v.iter().map(|&x| Field::Real(x)));
            row
        });
        emit_csv(path, &header, rows)?;
        Ok(())
    }
}

pub fn delay_series(measurements: &[f64], k: usize) -> Result<DelaySeries, EmbeddingError> {
    DelaySeries::from_measurements(measurements, k)
}

/// h evaluated along a list of states.
pub fn measure(h: &Observable, states: &[State]) -> Vec<f64> {
    states.iter().map(|s| h.evaluate(s.ambient().as_slice())).collect()
}

/// φ_{h,k}(x) = (h(x), h(Tx), …, h(T^{k−1}x)).
pub fn delay_map(h: &Observable, k: usize, cfg: &SystemConfig, x: &State) -> Result<Vec<f64>, EmbeddingError> {
    if k == 0 {
        return Err(EmbeddingError::ZeroK);
    }
    let mut out = Vec::with_capacity(k);
    let mut s = *x;
    for j in 0..k {
        if !s.is_finite() {
            return Err(DynamicsError::Divergence { index: j }.into());
        }
        out.push(h.evaluate(s.ambient().as_slice()));
        if j + 1 < k {
            s = cfg.step(&s)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{trajectory, SystemId, GOLDEN_ALPHA};
    use crate::manifold::{wrap_circle, CirclePoint};
    use crate::observables::{cos_turns, cosine_circle, Base};
    use proptest::prelude::*;

    #[test]
    fn series_examples() {
        let s = delay_series(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        let v: Vec<&[f64]> = s.vectors().collect();
        assert_eq!(v, vec![&[1.0, 2.0][..], &[2.0, 3.0], &[3.0, 4.0]]);
        let s = delay_series(&[5.0, 6.0, 7.0], 1).unwrap();
        assert_eq!(s.as_flat(), &[5.0, 6.0, 7.0]);
        let s = delay_series(&[2.5; 6], 3).unwrap();
        assert!(s.vectors().all(|v| v == [2.5, 2.5, 2.5]));
        assert!(matches!(delay_series(&[1.0], 2), Err(EmbeddingError::TooShort { .. })));
        assert!(matches!(delay_series(&[1.0], 0), Err(EmbeddingError::ZeroK)));
    }

    #[test]
    fn successors_respect_segments() {
        let a = delay_series(&[1.0, 2.0, 3.0], 1).unwrap();
        let b = delay_series(&[7.0, 8.0], 1).unwrap();
        let j = DelaySeries::join(&[a, b]).unwrap();
        assert_eq!(j.len(), 5);
        assert_eq!(j.source_len(), 5);
        let succ: Vec<Option<usize>> = (0..5).map(|i| j.successor(i)).collect();
        assert_eq!(succ, vec![Some(1), Some(2), None, Some(4), None]);
        assert_eq!(j.successor_mask(), vec![true, true, false, true, false]);
        let c = delay_series(&[1.0, 2.0], 2).unwrap();
        assert!(DelaySeries::join(&[j, c]).is_err());
    }

    #[test]
    fn delay_map_examples() {
        let cfg = SystemConfig::new(SystemId::Rotation);
        let h = cosine_circle();
        let x = State::Circle(wrap_circle(0.1).unwrap());
        assert_eq!(delay_map(&h, 1, &cfg, &x).unwrap(), vec![h.evaluate(x.ambient().as_slice())]);
        let c = Observable::constant(3.0, 2).unwrap();
        assert_eq!(delay_map(&c, 4, &cfg, &x).unwrap(), vec![3.0; 4]);
        let t0 = 0.1;
        let v = delay_map(&h, 2, &cfg, &x).unwrap();
        assert!((v[0] - cos_turns(t0)).abs() < 1e-12);
        assert!((v[1] - cos_turns(t0 + GOLDEN_ALPHA)).abs() < 1e-12);
    }

    #[test]
    fn csv_export() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        delay_series(&[0.5, 1.0, 2.0], 2).unwrap().write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,y0,y1");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,"));
    }

    #[test]
    fn henon_routes_agree() {
        let cfg = SystemConfig::new(SystemId::Henon);
        let h = Observable::new(Base::Coordinate(0), 2).unwrap().perturb_seeded(3, 0.1, 4).unwrap();
        let states = trajectory(&cfg, State::Plane([0.1, 0.1]), 2000, 100).unwrap();
        let series = delay_series(&measure(&h, &states), 3).unwrap();
        for i in [0, 17, 500, 1997] {
            let direct = delay_map(&h, 3, &cfg, &states[i]).unwrap();
            for (a, b) in direct.iter().zip(series.vector(i)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn construction_routes_agree(t0 in 0.0f64..1.0, k in 1usize..5, seed in 0u64..100, i in 0usize..300) {
            let cfg = SystemConfig::new(SystemId::Rotation);
            let h = cosine_circle().perturb_seeded(3, 0.1, seed).unwrap();
            let x0 = State::Circle(CirclePoint::wrap_unchecked(t0));
            let states = trajectory(&cfg, x0, 400, 0).unwrap();
            let series = delay_series(&measure(&h, &states), k).unwrap();
            let direct = delay_map(&h, k, &cfg, &states[i]).unwrap();
            for (a, b) in direct.iter().zip(series.vector(i)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn successive_vectors_overlap(xs in prop::collection::vec(-5.0f64..5.0, 1..60), k in 1usize..6) {
            prop_assume!(xs.len() >= k);
            let s = delay_series(&xs, k).unwrap();
            prop_assert_eq!(s.len(), xs.len() - k + 1);
            for i in 0..s.len().saturating_sub(1) {
                prop_assert_eq!(&s.vector(i)[1..], &s.vector(i + 1)[..k - 1]);
            }
        }
    }
}
