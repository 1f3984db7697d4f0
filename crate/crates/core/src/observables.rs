//! Observables on ambient coordinates: a base function plus a polynomial
//! part, and random polynomial perturbations drawn from a monomial probe set.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("expected {expected} amplitudes, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("multi-index {index:?} does not fit ambient dimension {dim}")]
    BadIndex { index: Vec<u32>, dim: usize },
    #[error("coefficient {0} is not finite")]
    NonFinite(f64),
    #[error("coordinate {coord} out of range for ambient dimension {dim}")]
    BadCoordinate { coord: usize, dim: usize },
    #[error("ambient dimension must be at least 1")]
    ZeroDimension,
    #[error("cannot parse observable: {0}")]
    Parse(String),
}

/// Exponent vector of a monomial, one entry per ambient coordinate.
pub type MultiIndex = Vec<u32>;

/// All multi-indices of total degree ≤ `degree`, ordered by degree and then
/// descending lexicographically, so (1,0) precedes (0,1).
pub fn monomial_basis(ambient_dim: usize, degree: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for d in 0..=degree {
        let mut level = Vec::new();
        compositions(ambient_dim, d, &mut vec![0; ambient_dim], 0, &mut level);
        level.sort_by(|a, b| b.cmp(a));
        out.extend(level);
    }
    out
}

fn compositions(dim: usize, left: u32, cur: &mut Vec<u32>, pos: usize, out: &mut Vec<MultiIndex>) {
    if pos + 1 == dim {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for e in 0..=left {
        cur[pos] = e;
        compositions(dim, left - e, cur, pos + 1, out);
    }
    cur[pos] = 0;
}

/// The non-polynomial part of an observable. Coordinates are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Base {
    Zero,
    Coordinate(usize),
    /// Sum of the listed coordinates.
    CoordinateSum(Vec<usize>),
    /// cos 2πt of the circle fiber, read off as the second-to-last ambient
    /// coordinate (the circle and the product S²×S¹ both end in (cos, sin)).
    CosineFiber,
}

impl Base {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Base::Zero => 0.0,
            Base::Coordinate(j) => x[*j],
            Base::CoordinateSum(js) => js.iter().map(|&j| x[j]).sum(),
            Base::CosineFiber => x[x.len() - 2],
        }
    }

    fn check(&self, dim: usize) -> Result<(), ObservableError> {
        let bad = |coord| Err(ObservableError::BadCoordinate { coord, dim });
        match self {
            Base::Coordinate(j) if *j >= dim => bad(*j),
            Base::CoordinateSum(js) => match js.iter().find(|&&j| j >= dim) {
                Some(&j) => bad(j),
                None => Ok(()),
            },
            Base::CosineFiber if dim < 2 => bad(dim - 1),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Base::Zero => f.write_str("zero"),
            Base::Coordinate(j) => write!(f, "coordinate:{j}"),
            Base::CoordinateSum(js) => {
                let parts: Vec<String> = js.iter().map(|j| j.to_string()).collect();
                write!(f, "sum:{}", parts.join(","))
            }
            Base::CosineFiber => f.write_str("cosine_fiber"),
        }
    }
}

impl FromStr for Base {
    type Err = ObservableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_idx = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| ObservableError::Parse(format!("bad coordinate '{t}'")))
        };
        match s.trim() {
            "zero" => Ok(Base::Zero),
            "cosine_fiber" => Ok(Base::CosineFiber),
            other => {
                if let Some(j) = other.strip_prefix("coordinate:") {
                    Ok(Base::Coordinate(parse_idx(j)?))
                } else if let Some(list) = other.strip_prefix("sum:") {
                    let js = list.split(',').map(parse_idx).collect::<Result<Vec<_>, _>>()?;
                    Ok(Base::CoordinateSum(js))
                } else {
                    Err(ObservableError::Parse(format!("unknown base '{other}'")))
                }
            }
        }
    }
}

/// h(x) = base(x) + Σ c_m x^m over ambient coordinates x.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    base: Base,
    ambient_dim: usize,
    degree_bound: u32,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl Observable {
    pub fn new(base: Base, ambient_dim: usize) -> Result<Observable, ObservableError> {
        if ambient_dim == 0 {
            return Err(ObservableError::ZeroDimension);
        }
        base.check(ambient_dim)?;
        Ok(Observable { base, ambient_dim, degree_bound: 0, coeffs: BTreeMap::new() })
    }

    pub fn zero(ambient_dim: usize) -> Result<Observable, ObservableError> {
        Observable::new(Base::Zero, ambient_dim)
    }

    pub fn constant(c: f64, ambient_dim: usize) -> Result<Observable, ObservableError> {
        Observable::zero(ambient_dim)?.with_term(vec![0; ambient_dim], c)
    }

    /// Adds `c` to the coefficient of x^index.
    pub fn with_term(mut self, index: MultiIndex, c: f64) -> Result<Observable, ObservableError> {
        if index.len() != self.ambient_dim {
            return Err(ObservableError::BadIndex { index, dim: self.ambient_dim });
        }
        if !c.is_finite() {
            return Err(ObservableError::NonFinite(c));
        }
        let deg: u32 = index.iter().sum();
        self.degree_bound = self.degree_bound.max(deg);
        *self.coeffs.entry(index).or_insert(0.0) += c;
        Ok(self)
    }

    pub fn base(&self) -> &Base {
        &self.base
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    pub fn coefficient(&self, index: &[u32]) -> f64 {
        self.coeffs.get(index).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(k, v)| (k, *v))
    }

    /// Euclidean norm of the polynomial coefficients.
    pub fn coefficient_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// h + Σ α_j m_j over the monomial basis of the given degree.
    pub fn perturb(&self, degree: u32, amplitudes: &[f64]) -> Result<Observable, ObservableError> {
        let basis = monomial_basis(self.ambient_dim, degree);
        if basis.len() != amplitudes.len() {
            return Err(ObservableError::LengthMismatch { expected: basis.len(), got: amplitudes.len() });
        }
        let mut out = self.clone();
        out.degree_bound = out.degree_bound.max(degree);
        for (m, &a) in basis.into_iter().zip(amplitudes) {
            if !a.is_finite() {
                return Err(ObservableError::NonFinite(a));
            }
            if a != 0.0 {
                *out.coeffs.entry(m).or_insert(0.0) += a;
            }
        }
        Ok(out)
    }

    /// Perturbation with amplitudes drawn uniformly from [−scale, scale].
    pub fn perturb_random<R: Rng + ?Sized>(&self, degree: u32, scale: f64, rng: &mut R) -> Result<Observable, ObservableError> {
        let n = monomial_basis(self.ambient_dim, degree).len();
        let amps: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
        self.perturb(degree, &amps)
    }

    pub fn perturb_seeded(&self, degree: u32, scale: f64, seed: u64) -> Result<Observable, ObservableError> {
        self.perturb_random(degree, scale, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Value at an ambient point; `x.len()` must equal the ambient dimension.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.ambient_dim);
        let mut v = self.base.eval(x);
        for (m, c) in &self.coeffs {
            v += c * monomial(m, x);
        }
        v
    }

    /// Largest difference quotient |h(a) − h(b)| / |a − b| over `n_pairs`
    /// random pairs drawn from `points` (rows of length ambient_dim).
    pub fn sampled_lipschitz<R: Rng + ?Sized>(&self, points: &[f64], n_pairs: usize, rng: &mut R) -> f64 {
        let d = self.ambient_dim;
        let n = points.len() / d;
        if n < 2 {
            return 0.0;
        }
        let mut best: f64 = 0.0;
        for _ in 0..n_pairs {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let (a, b) = (&points[i * d..(i + 1) * d], &points[j * d..(j + 1) * d]);
            let dist = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            if dist > 0.0 {
                best = best.max((self.evaluate(a) - self.evaluate(b)).abs() / dist);
            }
        }
        best
    }
}

pub fn monomial(m: &[u32], x: &[f64]) -> f64 {
    m.iter().zip(x).fold(1.0, |acc, (&e, &xi)| if e == 0 { acc } else { acc * xi.powi(e as i32) })
}

/// cos 2πt written as an observable on the circle embedded in the plane.
pub fn cosine_circle() -> Observable {
    Observable::new(Base::CosineFiber, 2).expect("valid base")
}

/// Value of cos 2πt, for cross-checking the fiber base.
pub fn cos_turns(t: f64) -> f64 {
    (2.0 * PI * t).cos()
}

/// Text record: a header line with base, dimension and degree, then one
/// `term e1 e2 ... coefficient` line per monomial.
impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "observable base={} dim={} degree={}", self.base, self.ambient_dim, self.degree_bound)?;
        for (m, c) in &self.coeffs {
            let exps: Vec<String> = m.iter().map(|e| e.to_string()).collect();
            writeln!(f, "term {} {:e}", exps.join(" "), c)?;
        }
        Ok(())
    }
}

impl FromStr for Observable {
    type Err = ObservableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| ObservableError::Parse(msg.to_string());
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| bad("empty record"))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("observable") {
            return Err(bad("missing 'observable' header"));
        }
        let (mut base, mut dim, mut degree) = (None, None, None);
        for field in fields {
            let (k, v) = field.split_once('=').ok_or_else(|| bad(field))?;
            match k {
                "base" => base = Some(v.parse::<Base>()?),
                "dim" => dim = Some(v.parse::<usize>().map_err(|_| bad(field))?),
                "degree" => degree = Some(v.parse::<u32>().map_err(|_| bad(field))?),
                _ => return Err(bad(field)),
            }
        }
        let dim = dim.ok_or_else(|| bad("missing dim"))?;
        let mut h = Observable::new(base.ok_or_else(|| bad("missing base"))?, dim)?;
        for line in lines {
            let mut parts: Vec<&str> = line.split_whitespace().collect();
            if parts.first() != Some(&"term") || parts.len() != dim + 2 {
                return Err(bad(line));
            }
            let c: f64 = parts.pop().unwrap().parse().map_err(|_| bad(line))?;
            let m = parts[1..]
                .iter()
                .map(|e| e.parse::<u32>().map_err(|_| bad(line)))
                .collect::<Result<MultiIndex, _>>()?;
            h = h.with_term(m, c)?;
        }
        let degree = degree.ok_or_else(|| bad("missing degree"))?;
        if degree < h.degree_bound {
            return Err(bad("term exceeds degree bound"));
        }
        h.degree_bound = degree;
        Ok(h)
    }
}
