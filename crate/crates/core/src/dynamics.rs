//! The dynamical systems: circle rotation, the parabolic circle map g, the
//! spiral map f on S², the skew product T on S²×S¹, the two-component model
//! T₀, and the Hénon and Ikeda maps. Also visit bookkeeping for orbits of f
//! near its fixed points p and q.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::manifold::{
    angle_distance, circle_coords, embed_ambient, CirclePoint, ManifoldError, PolarPoint,
    ProductPoint, AMBIENT_DIM,
};

/// Golden rotation number (√5 − 1)/2.
pub const GOLDEN_ALPHA: f64 = 0.618_033_988_749_894_9;
pub const DEFAULT_KAPPA: f64 = 0.05;
pub const DEFAULT_DELTA: f64 = 0.1;
/// Strength of the parabolic circle map g.
pub const G_STRENGTH: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error("orbit diverged at iterate {index}")]
    Divergence { index: usize },
    #[error("state {state} does not belong to the phase space of {system}")]
    StateMismatch { system: SystemId, state: &'static str },
    #[error("point is neither the atom p0 nor on the rotating circle")]
    OffModelSet,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("orbit length must be at least 1")]
    EmptyOrbit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SystemId {
    Rotation,
    CircleG,
    SpiralF,
    SkewT,
    ModelT0,
    Henon,
    Ikeda,
}

impl SystemId {
    pub const ALL: [SystemId; 7] = [
        SystemId::Rotation,
        SystemId::CircleG,
        SystemId::SpiralF,
        SystemId::SkewT,
        SystemId::ModelT0,
        SystemId::Henon,
        SystemId::Ikeda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemId::Rotation => "rotation",
            SystemId::CircleG => "circle_g",
            SystemId::SpiralF => "spiral_f",
            SystemId::SkewT => "skew_T",
            SystemId::ModelT0 => "model_T0",
            SystemId::Henon => "henon",
            SystemId::Ikeda => "ikeda",
        }
    }

    /// Dimension of the Euclidean space the phase space is embedded in.
    pub fn ambient_dim(self) -> usize {
        match self {
            SystemId::Rotation | SystemId::CircleG => 2,
            SystemId::SpiralF => 3,
            SystemId::SkewT | SystemId::ModelT0 => AMBIENT_DIM,
            SystemId::Henon | SystemId::Ikeda => 2,
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemId {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SystemId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| DynamicsError::InvalidConfig(format!("unknown system '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HenonParams {
    pub a: f64,
    pub b: f64,
}

impl Default for HenonParams {
    fn default() -> Self {
        HenonParams { a: 1.4, b: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkedaParams {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for IkedaParams {
    fn default() -> Self {
        IkedaParams { c0: 1.0, c1: 0.4, c2: 0.9, c3: 6.0 }
    }
}

/// Parameters of one system. `kappa` is the spiral strength of f and
/// `delta` the half-width of the neighbourhoods U_p and U_q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub system: SystemId,
    pub alpha: f64,
    pub kappa: f64,
    pub delta: f64,
    pub henon: HenonParams,
    pub ikeda: IkedaParams,
}

impl SystemConfig {
    pub fn new(system: SystemId) -> SystemConfig {
        SystemConfig {
            system,
            alpha: GOLDEN_ALPHA,
            kappa: DEFAULT_KAPPA,
            delta: DEFAULT_DELTA,
            henon: HenonParams::default(),
            ikeda: IkedaParams::default(),
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.kappa > 0.0 && self.kappa <= 0.1) {
            return Err(DynamicsError::InvalidConfig(format!(
                "kappa must lie in (0, 0.1], got {}",
                self.kappa
            )));
        }
        if !(self.delta > 0.0 && self.delta <= 0.2) {
            return Err(DynamicsError::InvalidConfig(format!(
                "delta must lie in (0, 0.2], got {}",
                self.delta
            )));
        }
        if !self.alpha.is_finite() {
            return Err(DynamicsError::InvalidConfig("alpha must be finite".into()));
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.system.ambient_dim()
    }

    /// One iterate of the configured map.
    pub fn step(&self, x: &State) -> Result<State, DynamicsError> {
        let mismatch = || DynamicsError::StateMismatch { system: self.system, state: x.kind() };
        match (self.system, x) {
            (SystemId::Rotation, State::Circle(t)) => Ok(State::Circle(rotation_step(*t, self.alpha))),
            (SystemId::CircleG, State::Circle(t)) => Ok(State::Circle(g_step(*t))),
            (SystemId::SpiralF, State::Sphere(z)) => Ok(State::Sphere(f_step(z, self.kappa))),
            (SystemId::SkewT, State::Product(p)) => Ok(State::Product(skew_step(p, self))),
            (SystemId::ModelT0, State::Product(p)) => Ok(State::Product(model_t0_step(p, self.alpha)?)),
            (SystemId::Henon, State::Plane([x, y])) => {
                let (a, b) = henon_step(*x, *y, self.henon.a, self.henon.b);
                Ok(State::Plane([a, b]))
            }
            (SystemId::Ikeda, State::Plane([x, y])) => {
                let (a, b) = ikeda_step(*x, *y, &self.ikeda);
                Ok(State::Plane([a, b]))
            }
            _ => Err(mismatch()),
        }
    }
}

/// Coordinates of a point in the ambient Euclidean space of its system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ambient {
    coords: [f64; AMBIENT_DIM],
    len: usize,
}

impl Ambient {
    fn from_slice(xs: &[f64]) -> Ambient {
        let mut coords = [0.0; AMBIENT_DIM];
        coords[..xs.len()].copy_from_slice(xs);
        Ambient { coords, len: xs.len() }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.len]
    }
}

/// A phase-space point of any of the supported systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum State {
    Circle(CirclePoint),
    Sphere(PolarPoint),
    Product(ProductPoint),
    Plane([f64; 2]),
}

impl State {
    pub fn kind(&self) -> &'static str {
        match self {
            State::Circle(_) => "circle",
            State::Sphere(_) => "sphere",
            State::Product(_) => "product",
            State::Plane(_) => "plane",
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            State::Circle(t) => t.turns().is_finite(),
            State::Sphere(z) => z.r().is_finite() && z.phi().is_finite(),
            State::Product(p) => p.base.r().is_finite() && p.base.phi().is_finite() && p.fiber.turns().is_finite(),
            State::Plane([x, y]) => x.is_finite() && y.is_finite(),
        }
    }

    pub fn ambient(&self) -> Ambient {
        match self {
            State::Circle(t) => Ambient::from_slice(&circle_coords(*t)),
            State::Sphere(z) => Ambient::from_slice(&z.sphere_coords()),
            State::Product(p) => Ambient::from_slice(&embed_ambient(p).coords),
            State::Plane(xy) => Ambient::from_slice(xy),
        }
    }

    pub fn as_sphere(&self) -> Option<PolarPoint> {
        match self {
            State::Sphere(z) => Some(*z),
            State::Product(p) => Some(p.base),
            _ => None,
        }
    }
}

pub fn rotation_step(t: CirclePoint, alpha: f64) -> CirclePoint {
    CirclePoint::wrap_unchecked(t.turns() + alpha)
}

/// g(t) = t + sin²(πt)/100 mod 1; parabolic fixed point at 0.
pub fn g_step(t: CirclePoint) -> CirclePoint {
    g_family(t, G_STRENGTH)
}

fn g_family(t: CirclePoint, strength: f64) -> CirclePoint {
    let s = (PI * t.turns()).sin();
    CirclePoint::wrap_unchecked(t.turns() + strength * s * s)
}

/// Radial part of f: R(r) = r + κ r (1 − r)³ / (1 + r⁴).
pub fn r_map(r: f64, kappa: f64) -> Result<f64, DynamicsError> {
    if !r.is_finite() {
        return Err(ManifoldError::NonFinite(r).into());
    }
    if r < 0.0 {
        return Err(ManifoldError::NegativeRadius(r).into());
    }
    Ok(radial(r, kappa))
}

#[inline]
fn radial(r: f64, kappa: f64) -> f64 {
    let u = 1.0 - r;
    let r2 = r * r;
    r + kappa * r * u * u * u / (1.0 + r2 * r2)
}

/// θ(φ) = sin²φ: π-periodic, quadratic tangency at the zeros kπ.
pub fn theta_fn(phi: f64) -> f64 {
    let s = phi.sin();
    s * s
}

/// The C^∞ step: 0 for x ≤ 0, 1 for x ≥ 1.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// Radial cutoff, identically 1 on [1/2, 3/2], so that (1 − r)² η(r) dies
/// at 0⁺ and at ∞.
pub fn eta_fn(r: f64) -> Result<f64, DynamicsError> {
    if !r.is_finite() {
        return Err(ManifoldError::NonFinite(r).into());
    }
    if r <= 0.0 {
        return Err(DynamicsError::InvalidConfig(format!("eta needs r > 0, got {r}")));
    }
    Ok(eta(r))
}

#[inline]
fn eta(r: f64) -> f64 {
    let inner = smooth_step((0.5 - r) / 0.25);
    let outer = smooth_step(r - 1.5);
    let mut v = 1.0;
    if inner > 0.0 {
        v *= (-inner / r).exp();
    }
    if outer > 0.0 {
        v *= (-outer * r).exp();
    }
    v
}

/// Angular part of f: Φ(r, φ) = φ + κ θ(φ) + (1 − r)² η(r), unwrapped.
pub fn phi_map(r: f64, phi: f64, kappa: f64) -> Result<f64, DynamicsError> {
    if !phi.is_finite() {
        return Err(ManifoldError::NonFinite(phi).into());
    }
    eta_fn(r)?;
    Ok(angular(r, phi, kappa))
}

#[inline]
fn angular(r: f64, phi: f64, kappa: f64) -> f64 {
    let u = 1.0 - r;
    phi + kappa * theta_fn(phi) + u * u * eta(r)
}

/// The spiral map f of S²; fixes the origin, ∞, p and q.
pub fn f_step(z: &PolarPoint, kappa: f64) -> PolarPoint {
    if z.is_infinity() || z.is_origin() {
        return *z;
    }
    let (r, phi) = (z.r(), z.phi());
    PolarPoint::from_parts(radial(r, kappa), angular(r, phi, kappa))
}

/// Product of a radial and an angular bump: 1 on the δ-box around the
/// point at angle `center` on the unit circle, 0 outside the 2δ-box.
fn bump(z: &PolarPoint, center: f64, delta: f64) -> f64 {
    if z.is_infinity() || z.is_origin() {
        return 0.0;
    }
    let dr = (z.r() - 1.0).abs() / delta;
    if dr >= 2.0 {
        return 0.0;
    }
    let da = angle_distance(z.phi(), center) / delta;
    if da >= 2.0 {
        return 0.0;
    }
    smooth_step(2.0 - dr) * smooth_step(2.0 - da)
}

/// Weight of g in the fiber map at `z`.
pub fn lambda_p(z: &PolarPoint, delta: f64) -> f64 {
    bump(z, 0.0, delta)
}

/// Weight of the rotation in the fiber map at `z`.
pub fn lambda_q(z: &PolarPoint, delta: f64) -> f64 {
    bump(z, PI, delta)
}

/// h_z(t) = t + λ_p(z) sin²(πt)/100 + λ_q(z) α mod 1.
pub fn fiber_map(z: &PolarPoint, t: CirclePoint, cfg: &SystemConfig) -> CirclePoint {
    let lp = lambda_p(z, cfg.delta);
    let lq = lambda_q(z, cfg.delta);
    let s = (PI * t.turns()).sin();
    CirclePoint::wrap_unchecked(t.turns() + lp * G_STRENGTH * s * s + lq * cfg.alpha)
}

/// T(z, t) = (f(z), h_z(t)).
pub fn skew_step(x: &ProductPoint, cfg: &SystemConfig) -> ProductPoint {
    ProductPoint::new(f_step(&x.base, cfg.kappa), fiber_map(&x.base, x.fiber, cfg))
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

pub fn is_model_atom(x: &ProductPoint) -> bool {
    !x.base.is_infinity()
        && near(x.base.r(), 1.0)
        && angle_distance(x.base.phi(), 0.0) <= 1e-12
        && crate::manifold::circle_distance(x.fiber, CirclePoint::ZERO) <= 1e-12
}

pub fn is_model_circle(x: &ProductPoint) -> bool {
    !x.base.is_infinity() && near(x.base.r(), 1.0) && angle_distance(x.base.phi(), PI) <= 1e-12
}

/// T₀: identity on p₀, rotation by α on the circle {q}×S¹.
pub fn model_t0_step(x: &ProductPoint, alpha: f64) -> Result<ProductPoint, DynamicsError> {
    if is_model_atom(x) {
        Ok(*x)
    } else if is_model_circle(x) {
        Ok(ProductPoint::new(x.base, rotation_step(x.fiber, alpha)))
    } else {
        Err(DynamicsError::OffModelSet)
    }
}

pub fn henon_step(x: f64, y: f64, a: f64, b: f64) -> (f64, f64) {
    (1.0 - a * x * x + y, b * x)
}

pub fn ikeda_step(x: f64, y: f64, p: &IkedaParams) -> (f64, f64) {
    let w = p.c1 - p.c3 / (1.0 + x * x + y * y);
    let (s, c) = w.sin_cos();
    (p.c0 + p.c2 * (x * c - y * s), p.c2 * (x * s + y * c))
}

/// Lazy orbit x₀, T x₀, T² x₀, … that stops with an error at the first
/// non-finite state.
pub struct Orbit<'a> {
    cfg: &'a SystemConfig,
    next: Option<State>,
    index: usize,
}

impl<'a> Orbit<'a> {
    pub fn new(cfg: &'a SystemConfig, x0: State) -> Orbit<'a> {
        Orbit { cfg, next: Some(x0), index: 0 }
    }
}

impl Iterator for Orbit<'_> {
    type Item = Result<State, DynamicsError>;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next.take()?;
        if !current.is_finite() {
            return Some(Err(DynamicsError::Divergence { index: self.index }));
        }
        match self.cfg.step(&current) {
            Ok(s) => self.next = Some(s),
            Err(e) => return Some(Err(e)),
        }
        self.index += 1;
        Some(Ok(current))
    }
}

/// `n` consecutive states after discarding `burn_in` iterates.
pub fn trajectory(cfg: &SystemConfig, x0: State, n: usize, burn_in: usize) -> Result<Vec<State>, DynamicsError> {
    if n == 0 {
        return Err(DynamicsError::EmptyOrbit);
    }
    Orbit::new(cfg, x0).skip(burn_in).take(n).collect()
}

/// Orbit of f as bare polar points, for the long runs in the visit analysis.
pub fn spiral_orbit(z0: PolarPoint, kappa: f64, n: usize) -> Vec<PolarPoint> {
    let mut out = Vec::with_capacity(n);
    let mut z = z0;
    for _ in 0..n {
        out.push(z);
        z = f_step(&z, kappa);
    }
    out
}

/// Which fixed-point neighbourhood the orbit reaches first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisitOrder {
    PFirst,
    QFirst,
}

/// Entry/exit times of the i-th visits to U_p and U_q (exit is the first
/// iterate outside).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VisitRecord {
    pub index: usize,
    pub n_minus_p: usize,
    pub n_plus_p: usize,
    pub n_minus_q: usize,
    pub n_plus_q: usize,
}

impl VisitRecord {
    pub fn n_p(&self) -> usize {
        self.n_plus_p - self.n_minus_p
    }

    pub fn n_q(&self) -> usize {
        self.n_plus_q - self.n_minus_q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisitStatistics {
    pub order: VisitOrder,
    pub records: Vec<VisitRecord>,
}

/// Gap between the end of one visit and the start of the next one to U_p ∪ U_q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VisitGap {
    /// Visit index i of the visit that ends the gap's preceding stay.
    pub after_visit: usize,
    pub len: usize,
}

pub fn in_u_p(z: &PolarPoint, delta: f64) -> bool {
    !z.is_infinity() && (z.r() - 1.0).abs() < delta && angle_distance(z.phi(), 0.0) < delta
}

pub fn in_u_q(z: &PolarPoint, delta: f64) -> bool {
    !z.is_infinity() && (z.r() - 1.0).abs() < delta && angle_distance(z.phi(), PI) < delta
}

/// Maximal runs `[start, end)` where `inside` holds; runs still open at the
/// end of the data are dropped.
fn complete_runs(traj: &[PolarPoint], inside: impl Fn(&PolarPoint) -> bool) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (n, z) in traj.iter().enumerate() {
        match (inside(z), start) {
            (true, None) => start = Some(n),
            (false, Some(s)) => {
                runs.push((s, n));
                start = None;
            }
            _ => {}
        }
    }
    runs
}

/// Visit records for a spiral orbit. The i-th record pairs the i-th complete
/// visit to U_p with the i-th complete visit to U_q; unmatched trailing
/// visits are not reported.
pub fn visit_statistics(traj: &[PolarPoint], delta: f64) -> VisitStatistics {
    let p_runs = complete_runs(traj, |z| in_u_p(z, delta));
    let q_runs = complete_runs(traj, |z| in_u_q(z, delta));
    let order = match (p_runs.first(), q_runs.first()) {
        (Some(p), Some(q)) if q.0 < p.0 => VisitOrder::QFirst,
        (None, Some(_)) => VisitOrder::QFirst,
        _ => VisitOrder::PFirst,
    };
    let records = p_runs
        .iter()
        .zip(q_runs.iter())
        .enumerate()
        .map(|(i, (p, q))| VisitRecord {
            index: i + 1,
            n_minus_p: p.0,
            n_plus_p: p.1,
            n_minus_q: q.0,
            n_plus_q: q.1,
        })
        .collect();
    VisitStatistics { order, records }
}

impl VisitStatistics {
    /// Visits in time order as (entry, exit) pairs.
    fn timeline(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * self.records.len());
        for r in &self.records {
            let p = (r.n_minus_p, r.n_plus_p);
            let q = (r.n_minus_q, r.n_plus_q);
            match self.order {
                VisitOrder::PFirst => out.extend([p, q]),
                VisitOrder::QFirst => out.extend([q, p]),
            }
        }
        out
    }

    /// Whether entries and exits alternate p, q, p, q, … (or q, p, …) strictly.
    pub fn is_interleaved(&self) -> bool {
        let tl = self.timeline();
        tl.iter().all(|(a, b)| a < b) && tl.windows(2).all(|w| w[0].1 < w[1].0)
    }

    /// Times spent outside U_p ∪ U_q between consecutive visits.
    pub fn gaps(&self) -> Vec<VisitGap> {
        let tl = self.timeline();
        tl.windows(2)
            .enumerate()
            .map(|(j, w)| VisitGap { after_visit: j / 2 + 1, len: w[1].0.saturating_sub(w[0].1) })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{wrap_circle, P_POINT, Q_POINT};

    fn circ(t: f64) -> CirclePoint {
        wrap_circle(t).unwrap()
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation_step(CirclePoint::ZERO, GOLDEN_ALPHA).turns(), GOLDEN_ALPHA);
        assert_eq!(rotation_step(circ(0.5), 0.25).turns(), 0.75);
        assert!((rotation_step(circ(0.9), 0.25).turns() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_step(CirclePoint::ZERO).turns(), 0.0);
        assert!((g_step(circ(0.5)).turns() - 0.51).abs() < 1e-15);
        assert!((g_step(circ(0.25)).turns() - 0.255).abs() < 1e-15);
    }

    #[test]
    fn g_attracts_everything_to_zero() {
        let mut t = circ(0.3);
        for _ in 0..200_000 {
            let next = g_step(t);
            // moves forward except for the wrap through 0
            assert!(next.turns() >= t.turns() || next.turns() < 0.01);
            t = next;
        }
        assert!(crate::manifold::circle_distance(t, CirclePoint::ZERO) < 1e-3);
    }

    #[test]
    fn r_map_examples() {
        assert_eq!(r_map(1.0, 0.05).unwrap(), 1.0);
        assert_eq!(r_map(0.0, 0.05).unwrap(), 0.0);
        // 0.5 + 0.05 * (0.5 * 0.125) / 1.0625
        let want = 0.5 + 0.05 * 0.0625 / 1.0625;
        assert!((r_map(0.5, 0.05).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.502_941_176_470_588_2).abs() < 1e-15);
        assert!(r_map(-0.1, 0.05).is_err());
    }

    #[test]
    fn r_map_is_strictly_monotone() {
        for kappa in [0.01, 0.05, 0.1] {
            let mut prev = r_map(0.0, kappa).unwrap();
            for i in 1..=10_000 {
                let r = 3.0 * i as f64 / 10_000.0;
                let v = r_map(r, kappa).unwrap();
                assert!(v > prev, "kappa {kappa} r {r}");
                prev = v;
            }
        }
    }

    #[test]
    fn r_map_moves_towards_unit_circle() {
        for i in 1..1000 {
            let r = i as f64 / 1000.0;
            assert!(r_map(r, 0.05).unwrap() > r);
            let r = 1.0 + i as f64 / 100.0;
            assert!(r_map(r, 0.05).unwrap() < r);
        }
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_fn(0.0), 0.0);
        assert!(theta_fn(PI) < 1e-30);
        assert!((theta_fn(PI / 2.0) - 1.0).abs() < 1e-15);
        for i in 0..100 {
            let x = -3.0 + 0.061 * i as f64;
            assert!((theta_fn(x) - theta_fn(x + PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_fn(1.0).unwrap(), 1.0);
        assert_eq!(eta_fn(0.75).unwrap(), 1.0);
        assert_eq!(eta_fn(0.5).unwrap(), 1.0);
        assert_eq!(eta_fn(1.5).unwrap(), 1.0);
        let r: f64 = 1e-6;
        assert!((1.0 - r).powi(2) * eta_fn(r).unwrap() < 1e-3);
        let r: f64 = 1e3;
        assert!((1.0 - r).powi(2) * eta_fn(r).unwrap() < 1e-3);
        assert!(eta_fn(0.3).unwrap() > 0.0);
        assert!(eta_fn(0.0).is_err());
    }

    #[test]
    fn phi_map_examples() {
        assert_eq!(phi_map(1.0, 0.0, 0.05).unwrap(), 0.0);
        assert_eq!(phi_map(1.0, PI, 0.05).unwrap(), PI);
        assert!((phi_map(1.0, PI / 2.0, 0.05).unwrap() - (PI / 2.0 + 0.05)).abs() < 1e-15);
    }

    #[test]
    fn phi_map_increasing_in_phi() {
        for r in [0.2, 0.7, 1.0, 1.3, 4.0] {
            let mut prev = phi_map(r, -7.0, 0.05).unwrap();
            for i in 1..2000 {
                let phi = -7.0 + 14.0 * i as f64 / 2000.0;
                let v = phi_map(r, phi, 0.05).unwrap();
                assert!(v > prev);
                prev = v;
            }
        }
    }

    #[test]
    fn f_fixed_points() {
        assert_eq!(f_step(&P_POINT, 0.05), P_POINT);
        assert_eq!(f_step(&Q_POINT, 0.05), Q_POINT);
        assert_eq!(f_step(&PolarPoint::ORIGIN, 0.05), PolarPoint::ORIGIN);
        assert_eq!(f_step(&PolarPoint::INFINITY, 0.05), PolarPoint::INFINITY);
        let z = PolarPoint::new(0.5, 0.1).unwrap();
        let fz = f_step(&z, 0.05);
        assert!((fz.r() - 0.502_941_176_470_588_2).abs() < 1e-15);
        assert_eq!(fz.phi(), phi_map(0.5, 0.1, 0.05).unwrap());
    }

    #[test]
    fn fiber_map_examples() {
        let cfg = SystemConfig::new(SystemId::SkewT);
        assert!((fiber_map(&P_POINT, circ(0.5), &cfg).turns() - 0.51).abs() < 1e-15);
        let want = circ(0.1 + GOLDEN_ALPHA).turns();
        assert!((fiber_map(&Q_POINT, circ(0.1), &cfg).turns() - want).abs() < 1e-15);
        let far = PolarPoint::new(0.3, 1.5).unwrap();
        assert_eq!(lambda_p(&far, cfg.delta), 0.0);
        assert_eq!(lambda_q(&far, cfg.delta), 0.0);
        assert_eq!(fiber_map(&far, circ(0.37), &cfg), circ(0.37));
        // plateau and support of the bumps
        let inside = PolarPoint::new(1.0 + 0.09, -0.09).unwrap();
        assert_eq!(lambda_p(&inside, 0.1), 1.0);
        let edge = PolarPoint::new(1.0, 0.15).unwrap();
        let l = lambda_p(&edge, 0.1);
        assert!(l > 0.0 && l < 1.0);
        assert_eq!(lambda_p(&PolarPoint::new(1.0, 0.2).unwrap(), 0.1), 0.0);
    }

    #[test]
    fn fiber_maps_are_orientation_preserving() {
        let cfg = SystemConfig::new(SystemId::SkewT);
        for z in [P_POINT, PolarPoint::new(1.0, 0.15).unwrap(), PolarPoint::new(1.12, 0.05).unwrap()] {
            let lp = lambda_p(&z, cfg.delta);
            for i in 0..1000 {
                let t = i as f64 / 1000.0;
                let d = 1.0 + lp * G_STRENGTH * PI * (2.0 * PI * t).sin();
                assert!(d > 0.0);
            }
        }
    }

    #[test]
    fn skew_examples() {
        let cfg = SystemConfig::new(SystemId::SkewT);
        let p0 = ProductPoint::p0();
        assert_eq!(skew_step(&p0, &cfg), p0);
        let x = ProductPoint::new(Q_POINT, circ(0.2));
        let y = skew_step(&x, &cfg);
        assert_eq!(y.base, Q_POINT);
        assert!((y.fiber.turns() - circ(0.2 + GOLDEN_ALPHA).turns()).abs() < 1e-15);
        let g = ProductPoint::new(PolarPoint::new(0.9, 1.0).unwrap(), circ(0.3));
        let h = skew_step(&g, &cfg);
        assert_eq!(h.base, f_step(&g.base, cfg.kappa));
        assert_eq!(h.fiber, fiber_map(&g.base, g.fiber, &cfg));
    }

    #[test]
    fn model_examples() {
        let p0 = ProductPoint::p0();
        assert_eq!(model_t0_step(&p0, GOLDEN_ALPHA).unwrap(), p0);
        let c = ProductPoint::new(Q_POINT, CirclePoint::ZERO);
        assert_eq!(model_t0_step(&c, GOLDEN_ALPHA).unwrap().fiber.turns(), GOLDEN_ALPHA);
        let c = ProductPoint::new(Q_POINT, circ(0.5));
        assert_eq!(model_t0_step(&c, GOLDEN_ALPHA).unwrap().fiber, circ(0.5 + GOLDEN_ALPHA));
        let off = ProductPoint::new(PolarPoint::new(0.5, 1.0).unwrap(), CirclePoint::ZERO);
        assert_eq!(model_t0_step(&off, GOLDEN_ALPHA), Err(DynamicsError::OffModelSet));
    }

    #[test]
    fn henon_examples() {
        assert_eq!(henon_step(0.0, 0.0, 1.4, 0.3), (1.0, 0.0));
        let (x, y) = henon_step(1.0, 0.0, 1.4, 0.3);
        assert!((x + 0.4).abs() < 1e-15 && (y - 0.3).abs() < 1e-15);
        let xs = (-0.7 + (0.49f64 + 5.6).sqrt()) / 2.8;
        let ys = 0.3 * xs;
        let (x1, y1) = henon_step(xs, ys, 1.4, 0.3);
        assert!((x1 - xs).abs() < 1e-12 && (y1 - ys).abs() < 1e-12);
    }

    #[test]
    fn ikeda_examples() {
        let p = IkedaParams::default();
        assert_eq!(ikeda_step(0.0, 0.0, &p), (1.0, 0.0));
        assert!((p.c1 - p.c3 / 1.0 - (-5.6)).abs() < 1e-15);
        let w: f64 = 0.4 - 3.0;
        let (x, y) = ikeda_step(1.0, 0.0, &p);
        assert!((x - (1.0 + 0.9 * w.cos())).abs() < 1e-15);
        assert!((y - 0.9 * w.sin()).abs() < 1e-15);
    }

    #[test]
    fn henon_divergence_is_reported() {
        let cfg = SystemConfig::new(SystemId::Henon);
        let err = trajectory(&cfg, State::Plane([10.0, 0.0]), 50, 0).unwrap_err();
        assert!(matches!(err, DynamicsError::Divergence { .. }));
    }

    #[test]
    fn trajectory_examples() {
        let cfg = SystemConfig::new(SystemId::Rotation).with_alpha(0.25);
        let tr = trajectory(&cfg, State::Circle(CirclePoint::ZERO), 3, 0).unwrap();
        let ts: Vec<f64> = tr
            .iter()
            .map(|s| match s {
                State::Circle(t) => t.turns(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(ts, vec![0.0, 0.25, 0.5]);
        for id in SystemId::ALL {
            let cfg = SystemConfig::new(id);
            let x0 = match id {
                SystemId::Rotation | SystemId::CircleG => State::Circle(circ(0.1)),
                SystemId::SpiralF => State::Sphere(PolarPoint::new(0.5, 0.0).unwrap()),
                SystemId::SkewT | SystemId::ModelT0 => State::Product(ProductPoint::p0()),
                SystemId::Henon | SystemId::Ikeda => State::Plane([0.1, 0.1]),
            };
            assert_eq!(trajectory(&cfg, x0, 1, 0).unwrap(), vec![x0]);
        }
        assert!(trajectory(&cfg, State::Circle(CirclePoint::ZERO), 0, 0).is_err());
        let tr = trajectory(&cfg, State::Circle(CirclePoint::ZERO), 2, 2).unwrap();
        assert_eq!(tr[0], State::Circle(circ(0.5)));
    }

    #[test]
    fn mismatched_state_is_rejected() {
        let cfg = SystemConfig::new(SystemId::Henon);
        assert!(cfg.step(&State::Circle(CirclePoint::ZERO)).is_err());
    }

    #[test]
    fn spiral_radius_increases_towards_one() {
        let orbit = spiral_orbit(PolarPoint::new(0.5, 0.0).unwrap(), 0.05, 20_000);
        for w in orbit.windows(2) {
            assert!(w[1].r() > w[0].r());
            assert!(w[1].r() < 1.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::new(SystemId::SpiralF).validate().is_ok());
        assert!(SystemConfig::new(SystemId::SpiralF).with_kappa(0.2).validate().is_err());
        assert!(SystemConfig::new(SystemId::SpiralF).with_delta(0.0).validate().is_err());
        assert_eq!("skew_t".parse::<SystemId>().unwrap(), SystemId::SkewT);
    }

    #[test]
    fn visits_start_inside_u_p() {
        let z0 = PolarPoint::new(0.95, -0.05).unwrap();
        let orbit = spiral_orbit(z0, 0.05, 200_000);
        let stats = visit_statistics(&orbit, 0.1);
        assert_eq!(stats.order, VisitOrder::PFirst);
        assert_eq!(stats.records[0].n_minus_p, 0);
        assert!(stats.records.iter().all(|r| r.n_p() >= 1 && r.n_q() >= 1));
        assert!(stats.is_interleaved());
    }

    #[test]
    fn visits_interleave_from_outside() {
        for (r0, phi0) in [(0.5, 0.0), (1.7, 1.0), (0.3, 2.0)] {
            let orbit = spiral_orbit(PolarPoint::new(r0, phi0).unwrap(), 0.05, 300_000);
            let stats = visit_statistics(&orbit, 0.1);
            assert!(stats.records.len() > 50);
            assert!(stats.is_interleaved());
            assert_eq!(stats.gaps().len(), 2 * stats.records.len() - 1);
        }
    }

    #[test]
    fn short_trajectory_yields_no_partial_records() {
        let orbit = spiral_orbit(PolarPoint::new(0.95, -0.05).unwrap(), 0.05, 3);
        assert!(visit_statistics(&orbit, 0.1).records.is_empty());
    }
}
