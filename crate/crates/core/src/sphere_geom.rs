//! Spherical directions, intrinsic z-y-x rotations and the polarization
//! basis rotation between a rotated (primed) frame and its parent frame.
//!
//! All angles at the public surface are in degrees. A direction `(θ, φ)`
//! has `θ` measured from the +z axis and `φ` from +x towards +y.
//!
//! Three frames are tracked by tag:
//!
//! ```text
//!   GCS (global)  --Ω_UT inverse-->  LCS (device)  --element inverse-->  ACS (antenna)
//! ```

use thiserror::Error;

use crate::scalar::{dot, wrap_deg, Real, Vec3};

/// Angular distance from a pole below which the polarization basis is
/// considered undefined.
pub const POLE_EPS_DEG: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("polar angle {0} deg outside [0, 180]")]
    ThetaOutOfRange(f64),
    #[error("non-finite angle")]
    NonFinite,
    #[error("direction at a pole of the {0:?} frame; polarization basis undefined")]
    PoleDegenerate(Frame),
}

/// Coordinate frame tag carried by a [`Direction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    /// Antenna coordinate system (double-primed).
    Acs,
    /// Device local coordinate system (single-primed).
    Lcs,
    /// Global coordinate system (unprimed).
    Gcs,
}

impl Frame {
    /// Frame reached by an inverse rotation. ACS is the innermost frame.
    pub fn inner(self) -> Frame {
        match self {
            Frame::Gcs => Frame::Lcs,
            Frame::Lcs | Frame::Acs => Frame::Acs,
        }
    }

    /// Frame reached by a forward rotation. GCS is the outermost frame.
    pub fn outer(self) -> Frame {
        match self {
            Frame::Acs => Frame::Lcs,
            Frame::Lcs | Frame::Gcs => Frame::Gcs,
        }
    }
}

/// A direction on the unit sphere in a tagged frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction<T> {
    theta: T,
    phi: T,
    frame: Frame,
}

impl<T: Real> Direction<T> {
    /// Builds a direction, wrapping `phi` to `[-180, 180)`.
    pub fn new(theta_deg: T, phi_deg: T, frame: Frame) -> Result<Self, GeomError> {
        if !theta_deg.is_finite() || !phi_deg.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if theta_deg < T::zero() || theta_deg > T::lit(180.0) {
            return Err(GeomError::ThetaOutOfRange(theta_deg.as_f64()));
        }
        Ok(Self {
            theta: theta_deg,
            phi: wrap_deg(phi_deg),
            frame,
        })
    }

    pub fn gcs(theta_deg: T, phi_deg: T) -> Result<Self, GeomError> {
        Self::new(theta_deg, phi_deg, Frame::Gcs)
    }

    pub fn lcs(theta_deg: T, phi_deg: T) -> Result<Self, GeomError> {
        Self::new(theta_deg, phi_deg, Frame::Lcs)
    }

    pub fn acs(theta_deg: T, phi_deg: T) -> Result<Self, GeomError> {
        Self::new(theta_deg, phi_deg, Frame::Acs)
    }

    /// Direction of a (not necessarily unit) Cartesian vector. At the poles
    /// the azimuth is reported as 0.
    pub fn from_vector(v: Vec3<T>, frame: Frame) -> Self {
        let rho = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let theta = rho.atan2(v[2]).to_degrees();
        let pole = T::lit(POLE_EPS_DEG);
        let phi = if theta <= pole || theta >= T::lit(180.0) - pole {
            T::zero()
        } else {
            wrap_deg(v[1].atan2(v[0]).to_degrees())
        };
        Self { theta, phi, frame }
    }

    #[inline]
    pub fn theta(&self) -> T {
        self.theta
    }

    #[inline]
    pub fn phi(&self) -> T {
        self.phi
    }

    #[inline]
    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Same angles, retagged. Use only when the frames coincide.
    pub fn with_frame(self, frame: Frame) -> Self {
        Self { frame, ..self }
    }

    /// True when within [`POLE_EPS_DEG`] of θ = 0 or θ = 180.
    pub fn is_near_pole(&self) -> bool {
        let eps = T::lit(POLE_EPS_DEG);
        self.theta <= eps || self.theta >= T::lit(180.0) - eps
    }

    /// Radial unit vector.
    pub fn unit_vector(&self) -> Vec3<T> {
        unit_vector_and_basis(self).rho
    }
}

/// Local orthonormal spherical basis at a direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalBasis<T> {
    pub rho: Vec3<T>,
    pub theta: Vec3<T>,
    pub phi: Vec3<T>,
}

/// Radial, polar and azimuthal unit vectors at `d`.
pub fn unit_vector_and_basis<T: Real>(d: &Direction<T>) -> SphericalBasis<T> {
    let (st, ct) = d.theta.to_radians().sin_cos();
    let (sp, cp) = d.phi.to_radians().sin_cos();
    SphericalBasis {
        rho: [st * cp, st * sp, ct],
        theta: [ct * cp, ct * sp, -st],
        phi: [-sp, cp, T::zero()],
    }
}

/// Bearing, downtilt and slant angles in degrees, each wrapped to `[-180, 180)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotationAngles<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

impl<T: Real> RotationAngles<T> {
    pub fn new(alpha_deg: T, beta_deg: T, gamma_deg: T) -> Self {
        Self {
            alpha: wrap_deg(alpha_deg),
            beta: wrap_deg(beta_deg),
            gamma: wrap_deg(gamma_deg),
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }
}

/// A proper 3×3 rotation matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation<T> {
    m: [[T; 3]; 3],
}

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        let (o, l) = (T::zero(), T::one());
        Self {
            m: [[l, o, o], [o, l, o], [o, o, l]],
        }
    }

    /// Wraps a raw matrix without checking orthonormality.
    pub fn from_matrix_unchecked(m: [[T; 3]; 3]) -> Self {
        Self { m }
    }

    /// `R_z(α)·R_y(β)·R_x(γ)` with right-handed elementary rotations.
    pub fn from_angles(a: &RotationAngles<T>) -> Self {
        let (sa, ca) = a.alpha.to_radians().sin_cos();
        let (sb, cb) = a.beta.to_radians().sin_cos();
        let (sg, cg) = a.gamma.to_radians().sin_cos();
        Self {
            m: [
                [ca * cb, ca * sb * sg - sa * cg, ca * sb * cg + sa * sg],
                [sa * cb, sa * sb * sg + ca * cg, sa * sb * cg - ca * sg],
                [-sb, cb * sg, cb * cg],
            ],
        }
    }

    #[inline]
    pub fn matrix(&self) -> &[[T; 3]; 3] {
        &self.m
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        let mut out = [[T::zero(); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).fold(T::zero(), |acc, k| acc + self.m[i][k] * rhs.m[k][j]);
            }
        }
        Self { m: out }
    }

    /// `R·v`.
    #[inline]
    pub fn apply(&self, v: &Vec3<T>) -> Vec3<T> {
        [dot(&self.m[0], v), dot(&self.m[1], v), dot(&self.m[2], v)]
    }

    /// `Rᵀ·v`.
    #[inline]
    pub fn apply_transpose(&self, v: &Vec3<T>) -> Vec3<T> {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn determinant(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest absolute entry of `RᵀR − I`.
    pub fn orthonormality_error(&self) -> T {
        let p = self.transpose().compose(self);
        let mut worst = T::zero();
        for (i, row) in p.m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }
}

/// Rotation matrix for an angle triple.
pub fn rotation_matrix<T: Real>(a: &RotationAngles<T>) -> Rotation<T> {
    Rotation::from_angles(a)
}

/// Maps a direction through `R` (forward, primed to parent) or `Rᵀ`
/// (inverse, parent to primed). The frame tag moves one level accordingly.
pub fn transform_direction<T: Real>(r: &Rotation<T>, d: &Direction<T>, inverse: bool) -> Direction<T> {
    let v = d.unit_vector();
    if inverse {
        Direction::from_vector(r.apply_transpose(&v), d.frame.inner())
    } else {
        Direction::from_vector(r.apply(&v), d.frame.outer())
    }
}

/// `cos ψ` and `sin ψ` of the polarization rotation from a primed frame
/// into its parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationRotation<T> {
    pub cos_psi: T,
    pub sin_psi: T,
}

impl<T: Real> PolarizationRotation<T> {
    /// `[F_θ; F_φ] = [[cosψ, −sinψ], [sinψ, cosψ]]·[F'_θ'; F'_φ']`.
    #[inline]
    pub fn apply(&self, f_theta: T, f_phi: T) -> (T, T) {
        (
            self.cos_psi * f_theta - self.sin_psi * f_phi,
            self.sin_psi * f_theta + self.cos_psi * f_phi,
        )
    }
}

/// Polarization basis rotation for a field defined in the frame rotated by
/// `r`, observed at `d` in the parent frame.
///
/// Computed by projecting the rotated primed `θ̂'` onto the parent `θ̂`, `φ̂`.
pub fn polarization_angle<T: Real>(
    r: &Rotation<T>,
    d: &Direction<T>,
) -> Result<PolarizationRotation<T>, GeomError> {
    if d.is_near_pole() {
        return Err(GeomError::PoleDegenerate(d.frame));
    }
    let primed = transform_direction(r, d, true);
    if primed.is_near_pole() {
        return Err(GeomError::PoleDegenerate(primed.frame));
    }
    let basis = unit_vector_and_basis(d);
    let theta_primed = r.apply(&unit_vector_and_basis(&primed).theta);
    Ok(PolarizationRotation {
        cos_psi: dot(&basis.theta, &theta_primed),
        sin_psi: dot(&basis.phi, &theta_primed),
    })
}
