//! Two-dimensional charts carrying a Riemannian metric and an exact magnetic
//! field `F = dA` with a globally defined potential `A`.
//!
//! Three analytic kinds are built in:
//!
//! * `plane_constant_B`: flat plane, `A = (B/2)(x dy - y dx)`, `F_12 = B`;
//! * `flat_torus_sine`: unit-square flat torus, `A = a sin(2πkx) dy`;
//! * `conformal_torus`: the same potential on `g = e^{2u}·I`,
//!   `u = u_amp cos(2πx)`.
//!
//! Index conventions: `metric_derivs(p)[k][i][j] = ∂_k g_ij`,
//! `potential_jacobian(p)[k][i] = ∂_k A_i`, `christoffel(p)[i][j][k] = Γ^i_jk`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// 2×2 matrix, row major.
pub type Mat2<T> = [[T; 2]; 2];

/// Christoffel symbols `Γ^i_jk` indexed `[i][j][k]`.
pub type Christoffel<T> = [[[T; 2]; 2]; 2];

/// A point (or displacement) in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ChartPoint<T> {
    pub x: T,
    pub y: T,
}

/// Chart components of a tangent vector.
pub type Tangent<T> = ChartPoint<T>;
/// Chart components of a covector (one-form value).
pub type Covector<T> = ChartPoint<T>;

impl<T: Scalar> ChartPoint<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    /// Checked constructor enforcing finite coordinates.
    pub fn try_new(x: T, y: T) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(Error::NonFinite("chart point"))
        }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// Euclidean norm of the chart components.
    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn get(self, i: usize) -> T {
        if i == 0 {
            self.x
        } else {
            self.y
        }
    }

    #[inline]
    pub fn from_array(a: [T; 2]) -> Self {
        Self::new(a[0], a[1])
    }

    #[inline]
    pub fn to_array(self) -> [T; 2] {
        [self.x, self.y]
    }
}

impl<T: Scalar> Add for ChartPoint<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for ChartPoint<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> AddAssign for ChartPoint<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.x = self.x + o.x;
        self.y = self.y + o.y;
    }
}

impl<T: Scalar> SubAssign for ChartPoint<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.x = self.x - o.x;
        self.y = self.y - o.y;
    }
}

impl<T: Scalar> Mul<T> for ChartPoint<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Scalar> Neg for ChartPoint<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// `M v`.
#[inline]
pub fn mat_vec<T: Scalar>(m: &Mat2<T>, v: ChartPoint<T>) -> ChartPoint<T> {
    ChartPoint::new(m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y)
}

/// `uᵀ M v`.
#[inline]
pub fn bilinear<T: Scalar>(m: &Mat2<T>, u: ChartPoint<T>, v: ChartPoint<T>) -> T {
    u.dot(mat_vec(m, v))
}

pub fn mat_inverse<T: Scalar>(m: &Mat2<T>) -> Mat2<T> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ]
}

/// Which analytic field/metric pair a [`GeometrySpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    #[serde(rename = "plane_constant_B")]
    PlaneConstantB,
    FlatTorusSine,
    ConformalTorus,
}

fn default_k() -> u32 {
    1
}

fn zero<T: Scalar>() -> T {
    T::zero()
}

/// A chart with metric `g`, potential `A` and field `F = dA`.
///
/// Serialized as `{"kind": …, "B": …, "a": …, "k": …, "u_amp": …}`; absent
/// numeric fields default to 0 and `k` to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
pub struct GeometrySpec<T> {
    pub kind: GeometryKind,
    #[serde(rename = "B", default = "zero")]
    pub b: T,
    #[serde(default = "zero")]
    pub a: T,
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default = "zero")]
    pub u_amp: T,
}

impl<T: Scalar> GeometrySpec<T> {
    pub fn plane(b: T) -> Self {
        Self {
            kind: GeometryKind::PlaneConstantB,
            b,
            a: T::zero(),
            k: 1,
            u_amp: T::zero(),
        }
    }

    pub fn flat_torus_sine(a: T, k: u32) -> Self {
        Self {
            kind: GeometryKind::FlatTorusSine,
            b: T::zero(),
            a,
            k,
            u_amp: T::zero(),
        }
    }

    pub fn conformal_torus(u_amp: T, a: T, k: u32) -> Self {
        Self {
            kind: GeometryKind::ConformalTorus,
            b: T::zero(),
            a,
            k,
            u_amp,
        }
    }

    /// Checks that every parameter is finite and `k ≥ 1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.b.is_finite() && self.a.is_finite() && self.u_amp.is_finite()) {
            return Err(Error::InvalidParams(
                "geometry parameters must be finite".into(),
            ));
        }
        if self.is_torus() && self.k == 0 {
            return Err(Error::InvalidParams(
                "torus wavenumber k must be ≥ 1".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn is_torus(&self) -> bool {
        !matches!(self.kind, GeometryKind::PlaneConstantB)
    }

    /// Canonical representative in `[0,1)²` for torus kinds; identity on the plane.
    pub fn wrap_point(&self, p: ChartPoint<T>) -> ChartPoint<T> {
        if self.is_torus() {
            ChartPoint::new(wrap_unit(p.x), wrap_unit(p.y))
        } else {
            p
        }
    }

    /// Conformal exponent `u` and `du/dx` (zero for flat kinds).
    #[inline]
    fn conformal(&self, x: T) -> (T, T) {
        match self.kind {
            GeometryKind::ConformalTorus => {
                let phase = T::TAU() * wrap_unit(x);
                (
                    self.u_amp * phase.cos(),
                    -T::TAU() * self.u_amp * phase.sin(),
                )
            }
            _ => (T::zero(), T::zero()),
        }
    }

    /// Metric `g_ij(p)`.
    pub fn metric(&self, p: ChartPoint<T>) -> Mat2<T> {
        let (u, _) = self.conformal(p.x);
        let s = (u + u).exp();
        [[s, T::zero()], [T::zero(), s]]
    }

    /// Inverse metric `g^ij(p)`.
    pub fn inverse_metric(&self, p: ChartPoint<T>) -> Mat2<T> {
        let (u, _) = self.conformal(p.x);
        let s = (-(u + u)).exp();
        [[s, T::zero()], [T::zero(), s]]
    }

    /// Partial derivatives `∂_k g_ij`, indexed `[k][i][j]`.
    pub fn metric_derivs(&self, p: ChartPoint<T>) -> [Mat2<T>; 2] {
        let (u, du) = self.conformal(p.x);
        let dx = (u + u).exp() * (du + du);
        let z = T::zero();
        [[[dx, z], [z, dx]], [[z, z], [z, z]]]
    }

    /// Christoffel symbols of the second kind,
    /// `Γ^i_jk = ½ g^il (∂_j g_lk + ∂_k g_lj − ∂_l g_jk)`.
    pub fn christoffel(&self, p: ChartPoint<T>) -> Christoffel<T> {
        let ginv = self.inverse_metric(p);
        let dg = self.metric_derivs(p);
        let half = T::lit(0.5);
        let mut out = [[[T::zero(); 2]; 2]; 2];
        for (i, out_i) in out.iter_mut().enumerate() {
            for j in 0..2 {
                for k in 0..2 {
                    let mut acc = T::zero();
                    for l in 0..2 {
                        acc = acc + ginv[i][l] * (dg[j][l][k] + dg[k][l][j] - dg[l][j][k]);
                    }
                    out_i[j][k] = half * acc;
                }
            }
        }
        out
    }

    /// Potential one-form `(A_1, A_2)`.
    pub fn potential(&self, p: ChartPoint<T>) -> Covector<T> {
        match self.kind {
            GeometryKind::PlaneConstantB => {
                let h = self.b * T::lit(0.5);
                ChartPoint::new(-h * p.y, h * p.x)
            }
            GeometryKind::FlatTorusSine | GeometryKind::ConformalTorus => {
                let phase = T::TAU() * T::from_u32(self.k).unwrap() * wrap_unit(p.x);
                ChartPoint::new(T::zero(), self.a * phase.sin())
            }
        }
    }

    /// Jacobian `∂_k A_i`, indexed `[k][i]`.
    pub fn potential_jacobian(&self, p: ChartPoint<T>) -> Mat2<T> {
        let z = T::zero();
        match self.kind {
            GeometryKind::PlaneConstantB => {
                let h = self.b * T::lit(0.5);
                [[z, h], [-h, z]]
            }
            GeometryKind::FlatTorusSine | GeometryKind::ConformalTorus => {
                let w = T::TAU() * T::from_u32(self.k).unwrap();
                [[z, self.a * w * (w * wrap_unit(p.x)).cos()], [z, z]]
            }
        }
    }

    /// Field `F_ij = ∂_i A_j − ∂_j A_i`.
    pub fn field(&self, p: ChartPoint<T>) -> Mat2<T> {
        let f12 = self.field_12(p);
        [[T::zero(), f12], [-f12, T::zero()]]
    }

    /// The single independent component `F_12`.
    pub fn field_12(&self, p: ChartPoint<T>) -> T {
        match self.kind {
            GeometryKind::PlaneConstantB => self.b,
            GeometryKind::FlatTorusSine | GeometryKind::ConformalTorus => {
                let w = T::TAU() * T::from_u32(self.k).unwrap();
                self.a * w * (w * wrap_unit(p.x)).cos()
            }
        }
    }

    /// `g^ik F_kj v^j`, the Lorentz-force direction for velocity `v`.
    pub fn lorentz(&self, p: ChartPoint<T>, v: Tangent<T>) -> Tangent<T> {
        mat_vec(&self.inverse_metric(p), mat_vec(&self.field(p), v))
    }

    /// `Γ^i_jk v^j v^k`.
    pub fn christoffel_contract(&self, p: ChartPoint<T>, v: Tangent<T>) -> Tangent<T> {
        let gamma = self.christoffel(p);
        let c = |i: usize| {
            let g = &gamma[i];
            g[0][0] * v.x * v.x + (g[0][1] + g[1][0]) * v.x * v.y + g[1][1] * v.y * v.y
        };
        ChartPoint::new(c(0), c(1))
    }

    /// Riemannian norm `|v|_g` at `p`.
    pub fn norm_at(&self, p: ChartPoint<T>, v: Tangent<T>) -> T {
        bilinear(&self.metric(p), v, v).max(T::zero()).sqrt()
    }
}

/// Reduces a coordinate into `[0, 1)`.
#[inline]
pub fn wrap_unit<T: Scalar>(x: T) -> T {
    let r = x - x.floor();
    // x slightly below an integer can round up to exactly 1
    if r >= T::one() {
        T::zero()
    } else {
        r
    }
}
