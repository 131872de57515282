//! Translation-invariant radial kernels `h(x − y)`.
//!
//! Every kernel is written as `h = f(ρ)` with `ρ = |x − y|²`, so that
//! `∇ₓh = 2f'(ρ) d` and `∇²ₓₓh = 2f'(ρ) I + 4f''(ρ) d dᵀ` with `d = x − y`.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `|x − y|^k`
    Power { k: f64 },
    /// `Σ_{j ≤ Q} (−|x − y|²/t)^j / j!`
    TruncatedHeat { q: u32, t: f64 },
    /// `exp(−|x − y|²/t)`
    Gaussian { t: f64 },
    /// Indicator of `|x − y| < r`.
    Characteristic { r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Capabilities {
    pub has_gradient: bool,
    pub has_hessian: bool,
}

/// `f(ρ), f'(ρ), f''(ρ)`.
#[derive(Debug, Clone, Copy)]
pub struct Radial {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
}

fn truncated_exp(q: i64, z: f64) -> f64 {
    if q < 0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..=q {
        term *= z / j as f64;
        sum += term;
    }
    sum
}

impl Kernel {
    pub fn power(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::KernelSpec(format!("power:k={k}"), "k must be positive".into()));
        }
        Ok(Kernel::Power { k })
    }

    pub fn truncated_heat(q: u32, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::KernelSpec(format!("heat:Q={q},t={t}"), "t must be positive".into()));
        }
        Ok(Kernel::TruncatedHeat { q, t })
    }

    pub fn gaussian(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::KernelSpec(format!("gauss:t={t}"), "t must be positive".into()));
        }
        Ok(Kernel::Gaussian { t })
    }

    pub fn characteristic(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::KernelSpec(format!("char:r={r}"), "r must be positive".into()));
        }
        Ok(Kernel::Characteristic { r })
    }

    pub fn capabilities(&self) -> Capabilities {
        let smooth = match *self {
            Kernel::Power { k } => k >= 2.0,
            Kernel::TruncatedHeat { .. } | Kernel::Gaussian { .. } => true,
            Kernel::Characteristic { .. } => false,
        };
        Capabilities { has_gradient: smooth, has_hessian: smooth }
    }

    pub fn is_even_power(&self) -> bool {
        matches!(*self, Kernel::Power { k } if k.fract() == 0.0 && (k as u64) % 2 == 0)
    }

    /// Total polynomial degree in `(x, y)`, when the kernel is a polynomial.
    pub fn polynomial_degree(&self) -> Option<u32> {
        match *self {
            Kernel::Power { k } if self.is_even_power() => Some(k as u32),
            Kernel::TruncatedHeat { q, .. } => Some(2 * q),
            _ => None,
        }
    }

    /// Quadrature degree used when none is requested.
    pub fn default_degree(&self) -> u32 {
        match self.polynomial_degree() {
            Some(d) => (d + 2).min(crate::quadrature::MAX_DEGREE),
            None => 12,
        }
    }

    /// Radial profile at `ρ = |x − y|²`. For the characteristic kernel the
    /// derivatives are reported as zero.
    pub fn radial(&self, rho: f64) -> Radial {
        match *self {
            Kernel::Power { k } => {
                let m = 0.5 * k;
                if self.is_even_power() {
                    let mi = m as i32;
                    let f = rho.powi(mi);
                    let df = if mi >= 1 { m * rho.powi(mi - 1) } else { 0.0 };
                    let d2f = if mi >= 2 { m * (m - 1.0) * rho.powi(mi - 2) } else { 0.0 };
                    Radial { f, df, d2f }
                } else {
                    if rho <= 1e-24 {
                        return Radial { f: 0.0, df: 0.0, d2f: 0.0 };
                    }
                    let f = rho.powf(m);
                    Radial { f, df: m * f / rho, d2f: m * (m - 1.0) * f / (rho * rho) }
                }
            }
            Kernel::TruncatedHeat { q, t } => {
                let z = -rho / t;
                let q = q as i64;
                Radial {
                    f: truncated_exp(q, z),
                    df: -truncated_exp(q - 1, z) / t,
                    d2f: truncated_exp(q - 2, z) / (t * t),
                }
            }
            Kernel::Gaussian { t } => {
                let f = (-rho / t).exp();
                Radial { f, df: -f / t, d2f: f / (t * t) }
            }
            Kernel::Characteristic { r } => Radial { f: if rho < r * r { 1.0 } else { 0.0 }, df: 0.0, d2f: 0.0 },
        }
    }

    /// `h(d)` for `d = x − y`.
    pub fn value_at(&self, d: &Point) -> f64 {
        self.radial(d.norm_squared()).f
    }

    pub fn value(&self, x: &Point, y: &Point) -> f64 {
        self.value_at(&(x - y))
    }

    fn require(&self, hessian: bool) -> Result<()> {
        let c = self.capabilities();
        if (hessian && !c.has_hessian) || !c.has_gradient {
            return Err(Error::NotDifferentiable(self.to_string()));
        }
        Ok(())
    }

    /// `(h, ∇ₓh, ∇²ₓₓh)` at `d = x − y`; callers must have checked capabilities.
    pub(crate) fn jet(&self, d: &Point) -> (f64, Point, Matrix2<f64>) {
        let rad = self.radial(d.norm_squared());
        let g = d * (2.0 * rad.df);
        let h = Matrix2::identity() * (2.0 * rad.df) + d * d.transpose() * (4.0 * rad.d2f);
        (rad.f, g, h)
    }

    pub fn grad_x(&self, x: &Point, y: &Point) -> Result<Point> {
        self.require(false)?;
        let d = x - y;
        Ok(d * (2.0 * self.radial(d.norm_squared()).df))
    }

    pub fn grad_y(&self, x: &Point, y: &Point) -> Result<Point> {
        Ok(-self.grad_x(x, y)?)
    }

    pub fn hess_xx(&self, x: &Point, y: &Point) -> Result<Matrix2<f64>> {
        self.require(true)?;
        Ok(self.jet(&(x - y)).2)
    }

    pub fn hess_xy(&self, x: &Point, y: &Point) -> Result<Matrix2<f64>> {
        Ok(-self.hess_xx(x, y)?)
    }

    pub fn hess_yx(&self, x: &Point, y: &Point) -> Result<Matrix2<f64>> {
        Ok(self.hess_xy(x, y)?.transpose())
    }

    pub fn hess_yy(&self, x: &Point, y: &Point) -> Result<Matrix2<f64>> {
        self.hess_xx(x, y)
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Kernel::Power { k } => write!(f, "power:k={k}"),
            Kernel::TruncatedHeat { q, t } => write!(f, "heat:Q={q},t={t}"),
            Kernel::Gaussian { t } => write!(f, "gauss:t={t}"),
            Kernel::Characteristic { r } => write!(f, "char:r={r}"),
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    /// Parses `power:k=6`, `heat:Q=12,t=1`, `gauss:t=1`, `char:r=0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::KernelSpec(s.to_string(), why.to_string());
        let (name, args) = s.split_once(':').ok_or_else(|| bad("expected NAME:key=value[,key=value]"))?;
        let mut params: Vec<(&str, f64)> = Vec::new();
        for part in args.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let v: f64 = value.trim().parse().map_err(|_| bad(&format!("{value:?} is not a number")))?;
            params.push((key.trim(), v));
        }
        let take = |key: &str| -> Result<f64> {
            params
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(key))
                .map(|&(_, v)| v)
                .ok_or_else(|| bad(&format!("missing parameter {key}")))
        };
        let expect = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(bad("unexpected parameter"))
            }
        };
        let kernel = match name.trim() {
            "power" => {
                expect(1)?;
                Kernel::power(take("k")?)
            }
            "heat" => {
                expect(2)?;
                let q = take("Q")?;
                if q < 0.0 || q.fract() != 0.0 || q > 170.0 {
                    return Err(bad("Q must be a nonnegative integer"));
                }
                Kernel::truncated_heat(q as u32, take("t")?)
            }
            "gauss" => {
                expect(1)?;
                Kernel::gaussian(take("t")?)
            }
            "char" => {
                expect(1)?;
                Kernel::characteristic(take("r")?)
            }
            other => return Err(bad(&format!("unknown kernel {other:?}"))),
        };
        kernel.map_err(|_| bad("parameter out of range"))
    }
}

impl Serialize for Kernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Upper bound for `|exp(−ρ/t) − h_Q|` over pairs at distance `≤ diam`.
pub fn heat_truncation_bound(q: u32, t: f64, diam: f64) -> f64 {
    let z = diam * diam / t;
    let fact: f64 = (1..=q + 1).map(|j| j as f64).product();
    if z <= 1.0 {
        1.0 / fact
    } else {
        z.powi(q as i32 + 1) / fact
    }
}
