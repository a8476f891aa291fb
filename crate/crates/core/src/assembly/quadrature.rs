//! Symmetric Gauss rules on triangles (Dunavant tables) plus an adaptive
//! subdivision integrator for the nearly singular outer integrals.

use crate::geom::Vec3;
use crate::{cast, Scalar};

/// One quadrature node in barycentric coordinates; weights sum to 1 and are
/// scaled by the triangle area at evaluation time.
#[derive(Clone, Copy, Debug)]
pub struct BaryNode {
    pub l: [f64; 3],
    pub w: f64,
}

/// Degree-5 rule, 7 points.
pub const TRI_GAUSS_7: [BaryNode; 7] = {
    const A2: f64 = 0.059_715_871_789_770;
    const B2: f64 = 0.470_142_064_105_115;
    const W2: f64 = 0.132_394_152_788_506;
    const A3: f64 = 0.797_426_985_353_087;
    const B3: f64 = 0.101_286_507_323_456;
    const W3: f64 = 0.125_939_180_544_827;
    [
        BaryNode {
            l: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            w: 0.225,
        },
        BaryNode { l: [A2, B2, B2], w: W2 },
        BaryNode { l: [B2, A2, B2], w: W2 },
        BaryNode { l: [B2, B2, A2], w: W2 },
        BaryNode { l: [A3, B3, B3], w: W3 },
        BaryNode { l: [B3, A3, B3], w: W3 },
        BaryNode { l: [B3, B3, A3], w: W3 },
    ]
};

/// Degree-8 rule, 16 points; used for quadrature-refinement checks.
pub const TRI_GAUSS_16: [BaryNode; 16] = {
    const A1: f64 = 0.081_414_823_414_554;
    const B1: f64 = 0.459_292_588_292_723;
    const W1: f64 = 0.095_091_634_267_285;
    const A2: f64 = 0.658_861_384_496_480;
    const B2: f64 = 0.170_569_307_751_760;
    const W2: f64 = 0.103_217_370_534_718;
    const A3: f64 = 0.898_905_543_365_938;
    const B3: f64 = 0.050_547_228_317_031;
    const W3: f64 = 0.032_458_497_623_198;
    const A4: f64 = 0.008_394_777_409_958;
    const B4: f64 = 0.263_112_829_634_638;
    const C4: f64 = 0.728_492_392_955_404;
    const W4: f64 = 0.027_230_314_174_435;
    [
        BaryNode {
            l: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            w: 0.144_315_607_677_787,
        },
        BaryNode { l: [A1, B1, B1], w: W1 },
        BaryNode { l: [B1, A1, B1], w: W1 },
        BaryNode { l: [B1, B1, A1], w: W1 },
        BaryNode { l: [A2, B2, B2], w: W2 },
        BaryNode { l: [B2, A2, B2], w: W2 },
        BaryNode { l: [B2, B2, A2], w: W2 },
        BaryNode { l: [A3, B3, B3], w: W3 },
        BaryNode { l: [B3, A3, B3], w: W3 },
        BaryNode { l: [B3, B3, A3], w: W3 },
        BaryNode { l: [A4, B4, C4], w: W4 },
        BaryNode { l: [A4, C4, B4], w: W4 },
        BaryNode { l: [B4, A4, C4], w: W4 },
        BaryNode { l: [B4, C4, A4], w: W4 },
        BaryNode { l: [C4, A4, B4], w: W4 },
        BaryNode { l: [C4, B4, A4], w: W4 },
    ]
};

/// 8-point Gauss-Legendre nodes/weights on [0, 1].
pub const SEGMENT_GAUSS_8: [(f64, f64); 8] = [
    (0.019_855_071_751_231_8, 0.050_614_268_145_188_1),
    (0.101_666_761_293_186_5, 0.111_190_517_226_687_2),
    (0.237_233_795_041_835_5, 0.156_853_322_938_943_6),
    (0.408_282_678_752_175_2, 0.181_341_891_689_181_0),
    (0.591_717_321_247_824_8, 0.181_341_891_689_181_0),
    (0.762_766_204_958_164_5, 0.156_853_322_938_943_6),
    (0.898_333_238_706_813_5, 0.111_190_517_226_687_2),
    (0.980_144_928_248_768_2, 0.050_614_268_145_188_1),
];

#[inline]
pub fn bary_point<T: Scalar>(v: &[Vec3<T>; 3], node: &BaryNode) -> Vec3<T> {
    v[0] * cast(node.l[0]) + v[1] * cast(node.l[1]) + v[2] * cast(node.l[2])
}

/// Integrate `f` over a triangle with a fixed barycentric rule.
pub fn integrate_triangle<T: Scalar, F>(v: &[Vec3<T>; 3], rule: &[BaryNode], mut f: F) -> T
where
    F: FnMut(Vec3<T>) -> T,
{
    let area = crate::geom::triangle_area(v[0], v[1], v[2]);
    let mut acc = T::zero();
    for node in rule {
        acc += f(bary_point(v, node)) * cast(node.w);
    }
    acc * area
}

/// Adaptive vector-valued integration over a triangle by uniform 4-way
/// subdivision with the 7-point rule, refined where the coarse and fine
/// estimates disagree. The integrand is smooth away from the triangle edges,
/// so refinement concentrates there.
pub fn integrate_adaptive<T: Scalar, F, const N: usize>(
    v: [Vec3<T>; 3],
    f: &F,
    rel_tol: T,
    max_depth: usize,
) -> [T; N]
where
    F: Fn(Vec3<T>) -> [T; N],
{
    let coarse = rule_on(&v, f);
    // Scale for the relative test, fixed once at the root.
    let mut scale = T::zero();
    for c in &coarse {
        scale = scale.max(c.abs());
    }
    let mut out = [T::zero(); N];
    subdivide(v, f, coarse, rel_tol, scale, max_depth, &mut out);
    out
}

fn rule_on<T: Scalar, F, const N: usize>(v: &[Vec3<T>; 3], f: &F) -> [T; N]
where
    F: Fn(Vec3<T>) -> [T; N],
{
    let area = crate::geom::triangle_area(v[0], v[1], v[2]);
    let mut acc = [T::zero(); N];
    for node in &TRI_GAUSS_7 {
        let val = f(bary_point(v, node));
        let w = cast::<T>(node.w) * area;
        for (a, x) in acc.iter_mut().zip(val.iter()) {
            *a += *x * w;
        }
    }
    acc
}

fn subdivide<T: Scalar, F, const N: usize>(
    v: [Vec3<T>; 3],
    f: &F,
    coarse: [T; N],
    rel_tol: T,
    scale: T,
    depth_left: usize,
    out: &mut [T; N],
) where
    F: Fn(Vec3<T>) -> [T; N],
{
    let half = cast::<T>(0.5);
    let m01 = (v[0] + v[1]) * half;
    let m12 = (v[1] + v[2]) * half;
    let m20 = (v[2] + v[0]) * half;
    let children = [
        [v[0], m01, m20],
        [v[1], m12, m01],
        [v[2], m20, m12],
        [m01, m12, m20],
    ];
    let fine: [[T; N]; 4] = [
        rule_on(&children[0], f),
        rule_on(&children[1], f),
        rule_on(&children[2], f),
        rule_on(&children[3], f),
    ];
    let mut sum = [T::zero(); N];
    for child in &fine {
        for (s, x) in sum.iter_mut().zip(child.iter()) {
            *s += *x;
        }
    }
    let mut err = T::zero();
    let mut local_scale = scale;
    for k in 0..N {
        err = err.max((sum[k] - coarse[k]).abs());
        local_scale = local_scale.max(sum[k].abs());
    }
    if depth_left == 0 || err <= rel_tol * local_scale {
        for (o, s) in out.iter_mut().zip(sum.iter()) {
            *o += *s;
        }
        return;
    }
    for (child, est) in children.iter().zip(fine.iter()) {
        subdivide(*child, f, *est, rel_tol, scale, depth_left - 1, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_tri() -> [Vec3<f64>; 3] {
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn rules_integrate_polynomials_exactly() {
        let v = unit_tri();
        // ∫ x² over the unit right triangle = 1/12; ∫ x⁴ = 1/30
        for rule in [&TRI_GAUSS_7[..], &TRI_GAUSS_16[..]] {
            let x2 = integrate_triangle(&v, rule, |p| p.x * p.x);
            assert!((x2 - 1.0 / 12.0).abs() < 1e-15);
            let x4 = integrate_triangle(&v, rule, |p| p.x.powi(4));
            assert!((x4 - 1.0 / 30.0).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_sum_to_one() {
        for rule in [&TRI_GAUSS_7[..], &TRI_GAUSS_16[..]] {
            let s: f64 = rule.iter().map(|n| n.w).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
        let s: f64 = SEGMENT_GAUSS_8.iter().map(|n| n.1).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_edge_log_singularity() {
        // ∫ ln x over the unit right triangle: ∫₀¹ (1−x) ln x dx = −3/4
        let v = unit_tri();
        let got: [f64; 1] =
            integrate_adaptive(v, &|p: Vec3<f64>| [p.x.max(1e-300).ln()], 1e-9, 16);
        assert!(
            (got[0] + 0.75).abs() < 1e-5,
            "got {} want -0.75",
            got[0]
        );
    }
}
