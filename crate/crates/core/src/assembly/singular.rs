//! Closed-form potential integrals of the static kernel over a flat triangle
//! (Wilton et al. style edge decomposition):
//!
//! * `I0  = ∫_T dA' / |r − r'|`
//! * `Iv  = ∫_T (r' − ρ0) dA' / |r − r'|`
//!
//! where `ρ0` is the projection of the observation point onto the triangle
//! plane. Together they give the inner integral of `f_j(r')/R` analytically,
//! leaving only a smooth outer integral for nearly singular Galerkin pairs.

use crate::geom::Vec3;
use crate::{cast, Scalar};

/// Result of the analytic inner integration.
#[derive(Clone, Copy, Debug)]
pub struct PotentialIntegrals<T> {
    /// ∫ 1/R dA'
    pub i0: T,
    /// ∫ (r' − ρ0)/R dA' (lies in the triangle plane)
    pub iv: Vec3<T>,
    /// Projection of the observation point onto the triangle plane.
    pub rho0: Vec3<T>,
}

impl<T: Scalar> PotentialIntegrals<T> {
    /// ∫ r'/R dA' reassembled from the plane-relative parts.
    #[inline]
    pub fn moment(&self) -> Vec3<T> {
        self.rho0 * self.i0 + self.iv
    }
}

/// Evaluate the closed forms for an arbitrary observation point, including
/// points inside the triangle or on its plane. Edge terms degenerate only
/// when the observation point sits on an edge line; their limits vanish and
/// are skipped.
pub fn potential_integrals<T: Scalar>(
    tri: &[Vec3<T>; 3],
    obs: Vec3<T>,
) -> PotentialIntegrals<T> {
    let normal = (tri[1] - tri[0]).cross(tri[2] - tri[0]).normalized();
    let h = (obs - tri[0]).dot(normal);
    let rho0 = obs - normal * h;
    let habs = h.abs();

    let mut i0 = T::zero();
    let mut iv = Vec3::zero();
    for k in 0..3 {
        let v1 = tri[k];
        let v2 = tri[(k + 1) % 3];
        let seg = v2 - v1;
        let len = seg.norm();
        let s_hat = seg / len;
        let m_hat = s_hat.cross(normal);
        let l1 = (v1 - rho0).dot(s_hat);
        let l2 = (v2 - rho0).dot(s_hat);
        let p0 = (v1 - rho0).dot(m_hat);
        let r1 = obs.dist(v1);
        let r2 = obs.dist(v2);
        let r0_sq = p0 * p0 + h * h;

        // Stable log term: (R+l) and (R−l) forms are algebraically equal
        // since (R+l)(R−l) = R0²; pick the one away from cancellation.
        let tiny = (len + r1 + r2) * T::epsilon();
        let f2 = {
            let a1 = r1 + l1;
            let a2 = r2 + l2;
            if a1 > tiny && a2 > tiny {
                (a2 / a1).ln()
            } else {
                let b1 = r1 - l1;
                let b2 = r2 - l2;
                if b1 > tiny && b2 > tiny {
                    (b1 / b2).ln()
                } else {
                    T::zero() // observation on the edge segment
                }
            }
        };
        iv += m_hat * ((r0_sq * f2 + l2 * r2 - l1 * r1) * cast::<T>(0.5));
        if r0_sq > tiny * tiny {
            let beta = (p0 * l2 / (r0_sq + habs * r2)).atan()
                - (p0 * l1 / (r0_sq + habs * r1)).atan();
            i0 += p0 * f2 - habs * beta;
        }
    }
    PotentialIntegrals { i0, iv, rho0 }
}
