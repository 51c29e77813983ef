//! Stationary random environments indexed by `N^2` and their `n x n` windows.
//!
//! An [`Environment`] evaluates `f(T^(i,j) omega)` for any cell `(i, j)`, with
//! `i, j >= 0`. Three families are provided:
//!
//! * `iid`: independent Uniform[lo, hi] entries from a counter-based generator;
//! * `product_rotation`: `f(x0 + i alpha, y0 + j beta)` on the 2-torus for a
//!   menu of functions `f`;
//! * `separable_profile`: `phi(x0 + i alpha) * psi(y0 + j beta)`.
//!
//! For all three (except the coupled non-separable field) the limiting
//! scaling mean has a closed form, see [`analytic_scaling_mean`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{permanental_mean, Matrix, RYSER_MAX_N};
use crate::randomized::bgg_estimate;
use crate::rng::{CounterRng, Domain};
use crate::scaling::{scaling_mean, DEFAULT_TOL};

pub const GOLDEN_ANGLE: f64 = 0.618_033_988_749_894_8;
pub const SILVER_ANGLE: f64 = std::f64::consts::SQRT_2 - 1.0;

/// Number of midpoint nodes for profile geometric means.
pub const QUADRATURE_POINTS: usize = 10_000;

/// One-dimensional periodic profiles on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// `1 + a sin(2 pi x)`, `|a| < 1`.
    AffineSine(f64),
    /// `exp(a sin(2 pi x))`.
    ExpSine(f64),
}

impl Profile {
    fn validate(&self) -> Result<()> {
        match *self {
            Profile::Constant(c) if !(c > 0.0 && c.is_finite()) => {
                Err(Error::NonPositive { name: "constant profile", value: c })
            }
            Profile::AffineSine(a) if !(a.abs() < 1.0) => Err(Error::InvalidParameter(format!(
                "affine_sine amplitude must satisfy |a| < 1, got {a}"
            ))),
            Profile::ExpSine(a) if !a.is_finite() => {
                Err(Error::InvalidParameter(format!("exp_sine amplitude must be finite, got {a}")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Profile::Constant(c) => c,
            Profile::AffineSine(a) => 1.0 + a * (2.0 * PI * x).sin(),
            Profile::ExpSine(a) => (a * (2.0 * PI * x).sin()).exp(),
        }
    }

    /// `(min, max)` of the profile over a period.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            Profile::Constant(c) => (c, c),
            Profile::AffineSine(a) => (1.0 - a.abs(), 1.0 + a.abs()),
            Profile::ExpSine(a) => ((-a.abs()).exp(), a.abs().exp()),
        }
    }

    /// `exp(int_0^1 log profile)` in closed form. For the affine sine,
    /// `int_0^1 log(1 + a sin 2 pi x) dx = log((1 + sqrt(1 - a^2)) / 2)`.
    pub fn geometric_mean(&self) -> f64 {
        match *self {
            Profile::Constant(c) => c,
            Profile::AffineSine(a) => (1.0 + (1.0 - a * a).sqrt()) / 2.0,
            Profile::ExpSine(_) => 1.0,
        }
    }

    /// Same quantity by the midpoint rule on `points` nodes.
    pub fn geometric_mean_quadrature(&self, points: usize) -> f64 {
        let h = 1.0 / points as f64;
        let s: f64 = (0..points).map(|k| self.eval((k as f64 + 0.5) * h).ln()).sum();
        (s * h).exp()
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(c) => write!(f, "constant:{c}"),
            Profile::AffineSine(a) => write!(f, "affine_sine:{a}"),
            Profile::ExpSine(a) => write!(f, "exp_sine:{a}"),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown profile {s:?}"));
        let (name, arg) = s.split_once(':').ok_or_else(bad)?;
        let v: f64 = arg.trim().parse().map_err(|_| bad())?;
        let p = match name.trim() {
            "constant" => Profile::Constant(v),
            "affine_sine" => Profile::AffineSine(v),
            "exp_sine" => Profile::ExpSine(v),
            _ => return Err(bad()),
        };
        p.validate()?;
        Ok(p)
    }
}

impl Serialize for Profile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Profile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Functions on the 2-torus for rotation environments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSpec {
    Constant(f64),
    /// `phi(x) * psi(y)`.
    Product(Profile, Profile),
    /// `exp(a sin 2 pi x + b sin 2 pi y + c sin 2 pi (x + y))`; not separable
    /// when `c != 0`, so no closed-form scaling mean.
    ExpSineCoupled { a: f64, b: f64, c: f64 },
}

impl FieldSpec {
    fn validate(&self) -> Result<()> {
        match self {
            FieldSpec::Constant(c) => Profile::Constant(*c).validate(),
            FieldSpec::Product(p, q) => p.validate().and(q.validate()),
            FieldSpec::ExpSineCoupled { a, b, c } => {
                if a.is_finite() && b.is_finite() && c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("exp_sine_coupled amplitudes must be finite".into()))
                }
            }
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            FieldSpec::Constant(c) => c,
            FieldSpec::Product(p, q) => p.eval(x) * q.eval(y),
            FieldSpec::ExpSineCoupled { a, b, c } => {
                let t = 2.0 * PI;
                (a * (t * x).sin() + b * (t * y).sin() + c * (t * (x + y)).sin()).exp()
            }
        }
    }

    fn range(&self) -> (f64, f64) {
        match *self {
            FieldSpec::Constant(c) => (c, c),
            FieldSpec::Product(p, q) => {
                let (a, b) = p.range();
                let (c, d) = q.range();
                (a * c, b * d)
            }
            FieldSpec::ExpSineCoupled { a, b, c } => {
                let s = a.abs() + b.abs() + c.abs();
                ((-s).exp(), s.exp())
            }
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Constant(c) => write!(f, "constant:{c}"),
            FieldSpec::Product(p, q) => write!(f, "product:{p}*{q}"),
            FieldSpec::ExpSineCoupled { a, b, c } => write!(f, "exp_sine_coupled:{a},{b},{c}"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown field {s:?}"));
        let (name, arg) = s.split_once(':').ok_or_else(bad)?;
        let spec = match name.trim() {
            "constant" => FieldSpec::Constant(arg.trim().parse().map_err(|_| bad())?),
            "product" => {
                let (p, q) = arg.split_once('*').ok_or_else(bad)?;
                FieldSpec::Product(p.parse()?, q.parse()?)
            }
            "exp_sine_coupled" => {
                let v: Vec<f64> = arg
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
                let [a, b, c] = v[..] else { return Err(bad()) };
                FieldSpec::ExpSineCoupled { a, b, c }
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for FieldSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FieldSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_alpha() -> f64 {
    GOLDEN_ANGLE
}

fn default_beta() -> f64 {
    SILVER_ANGLE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentKind {
    Iid {
        lo: f64,
        hi: f64,
    },
    ProductRotation {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        y0: f64,
        f: FieldSpec,
    },
    SeparableProfile {
        phi: Profile,
        psi: Profile,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        y0: f64,
    },
}

/// Key-value form of an environment, as embedded in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    #[serde(flatten)]
    pub kind: EnvironmentKind,
    #[serde(default)]
    pub seed: u64,
}

/// A validated environment with its certified entry band `[1/lambda, lambda]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvironmentSpec", into = "EnvironmentSpec")]
pub struct Environment {
    kind: EnvironmentKind,
    seed: u64,
    lambda: f64,
}

impl TryFrom<EnvironmentSpec> for Environment {
    type Error = Error;

    fn try_from(spec: EnvironmentSpec) -> Result<Self> {
        Environment::from_spec(spec)
    }
}

impl From<Environment> for EnvironmentSpec {
    fn from(env: Environment) -> Self {
        env.spec()
    }
}

fn band_lambda(lo: f64, hi: f64) -> f64 {
    hi.max(1.0 / lo).max(1.0)
}

/// Whether `x` lies within `1e-12` of a rational with denominator at most 1000.
pub fn is_near_rational(x: f64) -> bool {
    (1..=1000u32).any(|q| {
        let q = q as f64;
        (x - (x * q).round() / q).abs() < 1e-12
    })
}

fn check_angles(alpha: f64, beta: f64) -> Result<()> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be finite")));
        }
        if is_near_rational(v) {
            log::warn!("rotation angle {name} = {v} is numerically rational; the action is not ergodic");
        }
    }
    Ok(())
}

fn wrap(x: f64) -> f64 {
    x.rem_euclid(1.0)
}

/// Environment with iid Uniform[lo, hi] entries.
pub fn iid_environment(lo: f64, hi: f64, seed: u64) -> Result<Environment> {
    Environment::from_spec(EnvironmentSpec { kind: EnvironmentKind::Iid { lo, hi }, seed })
}

/// `f(x0 + i alpha, y0 + j beta)` for commuting circle rotations.
pub fn product_rotation_environment(
    alpha: f64,
    beta: f64,
    x0: f64,
    y0: f64,
    f: FieldSpec,
) -> Result<Environment> {
    Environment::from_spec(EnvironmentSpec {
        kind: EnvironmentKind::ProductRotation { alpha, beta, x0, y0, f },
        seed: 0,
    })
}

/// `phi(x0 + i alpha) * psi(y0 + j beta)`.
pub fn separable_profile_environment(
    phi: Profile,
    psi: Profile,
    alpha: f64,
    beta: f64,
    x0: f64,
    y0: f64,
) -> Result<Environment> {
    Environment::from_spec(EnvironmentSpec {
        kind: EnvironmentKind::SeparableProfile { phi, psi, alpha, beta, x0, y0 },
        seed: 0,
    })
}

impl Environment {
    pub fn from_spec(spec: EnvironmentSpec) -> Result<Self> {
        let lambda = match &spec.kind {
            EnvironmentKind::Iid { lo, hi } => {
                if !(*lo > 0.0 && lo.is_finite()) {
                    return Err(Error::NonPositive { name: "lo", value: *lo });
                }
                if !(hi >= lo && hi.is_finite()) {
                    return Err(Error::InvalidParameter(format!("need lo <= hi, got [{lo}, {hi}]")));
                }
                band_lambda(*lo, *hi)
            }
            EnvironmentKind::ProductRotation { alpha, beta, f, .. } => {
                check_angles(*alpha, *beta)?;
                f.validate()?;
                let (lo, hi) = f.range();
                band_lambda(lo, hi)
            }
            EnvironmentKind::SeparableProfile { phi, psi, alpha, beta, .. } => {
                check_angles(*alpha, *beta)?;
                phi.validate()?;
                psi.validate()?;
                let (a, b) = phi.range();
                let (c, d) = psi.range();
                band_lambda(a * c, b * d)
            }
        };
        Ok(Environment { kind: spec.kind, seed: spec.seed, lambda })
    }

    pub fn spec(&self) -> EnvironmentSpec {
        EnvironmentSpec { kind: self.kind.clone(), seed: self.seed }
    }

    pub fn kind(&self) -> &EnvironmentKind {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Entries are certified to lie in `[1/lambda, lambda]`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Same family and parameters with a new seed. Rotation families draw
    /// their starting point `(x0, y0)` from the seed.
    pub fn reseeded(&self, seed: u64) -> Environment {
        let mut kind = self.kind.clone();
        let origin = CounterRng::new(seed, Domain::RotationOrigin, 0);
        match &mut kind {
            EnvironmentKind::Iid { .. } => {}
            EnvironmentKind::ProductRotation { x0, y0, .. }
            | EnvironmentKind::SeparableProfile { x0, y0, .. } => {
                *x0 = origin.uniform(0, 0);
                *y0 = origin.uniform(0, 1);
            }
        }
        Environment { kind, seed, lambda: self.lambda }
    }

    /// Torus point `T^(i,j)(x0, y0)` for the rotation families.
    pub fn orbit_point(&self, i: u64, j: u64) -> Option<(f64, f64)> {
        match self.kind {
            EnvironmentKind::Iid { .. } => None,
            EnvironmentKind::ProductRotation { alpha, beta, x0, y0, .. }
            | EnvironmentKind::SeparableProfile { alpha, beta, x0, y0, .. } => {
                Some((wrap(x0 + i as f64 * alpha), wrap(y0 + j as f64 * beta)))
            }
        }
    }

    /// `f(T^(i,j) omega)`.
    pub fn entry(&self, i: u64, j: u64) -> f64 {
        match &self.kind {
            EnvironmentKind::Iid { lo, hi } => {
                let u = CounterRng::new(self.seed, Domain::IidEnvironment, 0).uniform(i, j);
                lo + (hi - lo) * u
            }
            EnvironmentKind::ProductRotation { f, .. } => {
                let (x, y) = self.orbit_point(i, j).expect("rotation family");
                f.eval(x, y)
            }
            EnvironmentKind::SeparableProfile { phi, psi, .. } => {
                let (x, y) = self.orbit_point(i, j).expect("rotation family");
                phi.eval(x) * psi.eval(y)
            }
        }
    }
}

/// Limiting scaling mean where a closed form exists.
///
/// With trivial invariant sigma-algebras (iid) the competitors in the
/// infimum are constants and the scaling mean is the mean `(lo + hi)/2`. For
/// separable `phi * psi` it is `gm(phi) gm(psi)`.
pub fn analytic_scaling_mean(env: &Environment) -> Result<f64> {
    match &env.kind {
        EnvironmentKind::Iid { lo, hi } => Ok((lo + hi) / 2.0),
        EnvironmentKind::SeparableProfile { phi, psi, .. }
        | EnvironmentKind::ProductRotation { f: FieldSpec::Product(phi, psi), .. } => {
            Ok(phi.geometric_mean() * psi.geometric_mean())
        }
        EnvironmentKind::ProductRotation { f: FieldSpec::Constant(c), .. } => Ok(*c),
        EnvironmentKind::ProductRotation { f: FieldSpec::ExpSineCoupled { c, .. }, .. } if *c == 0.0 => {
            Ok(1.0)
        }
        EnvironmentKind::ProductRotation { .. } => Err(Error::Unavailable),
    }
}

/// `Box_n f(omega)`: the `n x n` window `(f(T^(i,j) omega))_{0 <= i,j < n}`.
pub fn box_matrix(env: &Environment, n: usize) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    Matrix::from_fn(n, |i, j| env.entry(i as u64, j as u64))
}

/// One point of a convergence series `per(Box_n) / sm(f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlpRecord {
    pub n: usize,
    pub seed: u64,
    pub per_value: f64,
    pub sm_reference: f64,
    pub ratio: f64,
    /// False when the permanent came from the Gaussian estimator.
    pub exact: bool,
    /// False when `sm_reference` is the finite-`n` scaling mean of `Box_n`.
    pub sm_analytic: bool,
}

/// Samples used by the estimator route above the exact-permanent limit.
pub const LLP_ESTIMATOR_SAMPLES: usize = 1_000;

pub fn llp_ratio_series(env: &Environment, ns: &[usize]) -> Result<Vec<LlpRecord>> {
    let analytic = match analytic_scaling_mean(env) {
        Ok(v) => Some(v),
        Err(Error::Unavailable) => None,
        Err(e) => return Err(e),
    };
    ns.iter()
        .map(|&n| {
            let b = box_matrix(env, n)?;
            let (per_value, exact) = if n <= RYSER_MAX_N {
                (permanental_mean(&b)?, true)
            } else {
                let est = bgg_estimate(&b, LLP_ESTIMATOR_SAMPLES, env.seed)?;
                let lf = crate::matrix::log_factorial(n);
                (((est.mean.ln() - lf) / n as f64).exp(), false)
            };
            let (sm_reference, sm_analytic) = match analytic {
                Some(v) => (v, true),
                None => (scaling_mean(&b, DEFAULT_TOL)?, false),
            };
            Ok(LlpRecord {
                n,
                seed: env.seed,
                per_value,
                sm_reference,
                ratio: per_value / sm_reference,
                exact,
                sm_analytic,
            })
        })
        .collect()
}
