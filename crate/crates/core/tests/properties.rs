use std::sync::OnceLock;

use proptest::prelude::*;

use hypercauchy::algebra::{Algebra, AlgebraElement, AlgebraSpec, C64};
use hypercauchy::geometry::{
    box_surface, covering_number, cube_staple_patch, hemisphere_patch, jacobians, lebesgue_area, unit_cube,
    unit_sphere, Aabb, Affine3, BoundarySampling, DomainSpec, ExprChart, QuadratureGrid, SurfacePatch,
};
use hypercauchy::harness::{boundary_cube_count, lemma3_check, theorem1_cascade};
use hypercauchy::hyperfun::{modulus_of_continuity, modulus_series, HyperFunction, PointE3};
use hypercauchy::integration::{
    scalar_surface_integrals, sigma_integral, SigmaIntegralResult,
};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn complex() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| c(re, im))
}

fn element(n: usize) -> impl Strategy<Value = AlgebraElement> {
    proptest::collection::vec(complex(), n).prop_map(AlgebraElement::new)
}

fn invert(p: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = p.len();
    let mut a: Vec<Vec<C64>> = p
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm())).unwrap();
        a.swap(col, pivot);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                for k in 0..2 * n {
                    let t = a[col][k];
                    a[r][k] -= f * t;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `base` rewritten in the basis `f_i = sum_j P_ij e_j`.
fn change_basis(base: &AlgebraSpec, p: &[Vec<C64>]) -> AlgebraSpec {
    let n = base.dimension();
    let q = invert(p);
    AlgebraSpec::from_fn("rebased", n, None, |i, k| {
        (0..n)
            .map(|out| {
                let mut acc = c(0.0, 0.0);
                for j in 0..n {
                    for l in 0..n {
                        for m in 0..n {
                            acc += p[i][j] * p[k][l] * base.constant(j, l, m) * q[m][out];
                        }
                    }
                }
                acc
            })
            .collect()
    })
    .unwrap()
}

/// C^3, H3 or C[t]/(t^4), in a random nearby basis.
fn random_algebra() -> impl Strategy<Value = AlgebraSpec> {
    let truncated4 = AlgebraSpec::from_fn("t4", 4, Some(0), |m, s| {
        (0..4).map(|k| if m + s == k { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()
    })
    .unwrap();
    let bases = vec![AlgebraSpec::c3(), AlgebraSpec::h3(), truncated4];
    (0..3usize, proptest::collection::vec(complex(), 16)).prop_map(move |(which, noise)| {
        let base = &bases[which];
        let n = base.dimension();
        let p: Vec<Vec<C64>> = (0..n)
            .map(|i| (0..n).map(|j| noise[i * 4 + j] * 0.15 + if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
            .collect();
        change_basis(base, &p)
    })
}

fn table_scale(spec: &AlgebraSpec) -> f64 {
    let n = spec.dimension();
    let mut m = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for k in 0..n {
                m = m.max(spec.constant(a, b, k).norm());
            }
        }
    }
    (1.0 + m) * (1.0 + m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rebased_algebras_validate(spec in random_algebra()) {
        prop_assert!(Algebra::new(spec).is_ok());
    }

    #[test]
    fn product_is_exactly_commutative_and_associative(
        spec in random_algebra(),
        seeds in proptest::collection::vec(complex(), 12),
    ) {
        let n = spec.dimension();
        let a = AlgebraElement::new(seeds[0..n].to_vec());
        let b = AlgebraElement::new(seeds[4..4 + n].to_vec());
        let cc = AlgebraElement::new(seeds[8..8 + n].to_vec());
        prop_assert_eq!(spec.multiply(&a, &b).unwrap(), spec.multiply(&b, &a).unwrap());
        let left = spec.multiply(&spec.multiply(&a, &b).unwrap(), &cc).unwrap();
        let right = spec.multiply(&a, &spec.multiply(&b, &cc).unwrap()).unwrap();
        let tol = 1e-10 * a.norm() * b.norm() * cc.norm() * table_scale(&spec);
        prop_assert!((&left - &right).norm() <= tol);
    }

    #[test]
    fn basis_bound_is_attained(spec in random_algebra()) {
        let n = spec.dimension();
        let m = spec.basis_product_bound();
        let mut hit = false;
        for a in 0..n {
            for b in 0..n {
                let v = spec.basis_product(a, b).norm();
                prop_assert!(v <= m);
                hit |= v == m;
            }
        }
        prop_assert!(hit);
    }

    #[test]
    fn norm_axioms(a in element(3), b in element(3), z in complex()) {
        prop_assert!((&a + &b).norm() <= (a.norm() + b.norm()) * (1.0 + 1e-15));
        let scaled = a.scale(z).norm();
        prop_assert!((scaled - z.norm() * a.norm()).abs() <= 1e-14 * (1.0 + scaled));
    }
}

fn point() -> impl Strategy<Value = PointE3> {
    (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y, z)| PointE3::new(x, y, z))
}

fn h3_power() -> impl Strategy<Value = (usize, Vec<AlgebraElement>)> {
    proptest::collection::vec(element(3), 1..=5).prop_map(|coeffs| (coeffs.len() - 1, coeffs))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn powers_of_zeta_are_hyperholomorphic((deg, coeffs) in h3_power(), points in proptest::collection::vec(point(), 16)) {
        let f = HyperFunction::power_function(&Algebra::h3(), coeffs).unwrap();
        for p in points {
            let r = f.holomorphy_residual(&p).unwrap().norm();
            prop_assert!(r <= 1e-8 * (1.0 + p.norm().powi(deg as i32)), "{r}");
        }
    }

    #[test]
    fn closed_form_partials_match_differences((_, coeffs) in h3_power(), p in point()) {
        let f = HyperFunction::power_function(&Algebra::h3(), coeffs).unwrap();
        let fd = f.clone().with_finite_differences(1e-5);
        let exact = f.partials(&p).unwrap();
        let approx = fd.partials(&p).unwrap();
        for j in 0..3 {
            let err = (&exact[j] - &approx[j]).norm();
            prop_assert!(err <= 1e-6 * exact[j].norm().max(1.0), "axis {j}: {err}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn modulus_series_is_monotone(d1 in 0.01..0.3f64, d2 in 0.01..0.3f64, seed in any::<u64>()) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let f = HyperFunction::square(&Algebra::h3());
        let s = modulus_series(&f, &DomainSpec::unit_cube(), &[lo, hi], 2000, seed).unwrap();
        prop_assert!(s[0] <= s[1]);
        let k = HyperFunction::constant(&Algebra::h3(), Algebra::h3().basis(1)).unwrap();
        prop_assert_eq!(modulus_of_continuity(&k, &DomainSpec::unit_cube(), hi, 500, seed).unwrap(), 0.0);
    }
}

fn patches() -> Vec<SurfacePatch> {
    vec![
        hemisphere_patch(),
        cube_staple_patch(),
        SurfacePatch::from_chart("saddle", ExprChart::parse("u", "v", "u*v - 0.3*sin(u)").unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parameter_swap_negates_jacobians(u in 0.0..1.0f64, v in 0.0..1.0f64) {
        for p in patches() {
            let j = jacobians(&p, u, v).unwrap();
            let s = jacobians(&p.swapped(), v, u).unwrap();
            for k in 0..3 {
                prop_assert!((j[k] + s[k]).abs() <= 1e-9 * (1.0 + j[k].abs()), "{}: {j:?} vs {s:?}", p.label());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn area_is_invariant_under_swap_and_rigid_motion(
        axis in (-1.0..1.0f64, -1.0..1.0f64, 0.1..1.0f64),
        angle in -3.0..3.0f64,
        shift in (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64),
    ) {
        let grid = QuadratureGrid::gauss3(16);
        let h = hemisphere_patch();
        let a = lebesgue_area(&h, &grid).unwrap().value;
        prop_assert!((lebesgue_area(&h.swapped(), &grid).unwrap().value - a).abs() <= 1e-12 * a);
        let motion = Affine3::translation([shift.0, shift.1, shift.2]).compose(&Affine3::rotation([axis.0, axis.1, axis.2], angle));
        let moved = lebesgue_area(&h.transformed(&motion), &grid).unwrap().value;
        prop_assert!((moved - a).abs() <= 1e-10 * a, "{moved} vs {a}");
    }
}

fn sphere_sampling() -> &'static BoundarySampling {
    static S: OnceLock<BoundarySampling> = OnceLock::new();
    S.get_or_init(|| BoundarySampling::from_surface(&unit_sphere(), 1.0 / 128.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn covering_grows_as_scale_halves(eps in 1.0 / 16.0..0.6f64) {
        let s = sphere_sampling();
        prop_assert!(covering_number(s, eps / 2.0).unwrap() >= covering_number(s, eps).unwrap());
    }
}

fn small_functions() -> impl Strategy<Value = (bool, usize, Vec<AlgebraElement>)> {
    (any::<bool>(), 0..3usize, proptest::collection::vec(element(3), 1..=3))
}

fn build(algebra: &Algebra, kind: usize, coeffs: Vec<AlgebraElement>) -> HyperFunction {
    match kind {
        // power series need e1 to be the unit, which fails for c3
        0 if algebra.spec().unit_index() == Some(0) => HyperFunction::power_function(algebra, coeffs).unwrap(),
        0 | 1 => HyperFunction::coordinate(algebra, coeffs.len() - 1).unwrap(),
        _ => HyperFunction::square(algebra),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reassembly_and_orientation_are_exact((use_h3, kind, coeffs) in small_functions()) {
        let algebra = if use_h3 { Algebra::h3() } else { Algebra::c3() };
        let f = build(&algebra, kind, coeffs);
        let grid = QuadratureGrid::gauss3(6);
        for s in [unit_sphere(), unit_cube()] {
            let r = sigma_integral(&f, &s, &grid).unwrap();
            prop_assert_eq!(&r.value, &SigmaIntegralResult::reassemble(&r.planes, algebra.spec()));
            let flipped = sigma_integral(&f, &s.swapped_roles(), &grid).unwrap();
            prop_assert_eq!(&flipped.value, &-r.value.clone());
            let g = |p: [f64; 3]| c(p[0] * p[1] + p[2], p[2] * p[2]);
            let a = scalar_surface_integrals(&g, &s, &grid).unwrap();
            let b = scalar_surface_integrals(&g, &s.swapped_roles(), &grid).unwrap();
            for k in 0..3 {
                prop_assert_eq!(b[k].value, -a[k].value);
            }
        }
    }

    #[test]
    fn sigma_integral_is_linear(a in complex(), b in complex(), coeffs in proptest::collection::vec(element(3), 1..=3)) {
        let h3 = Algebra::h3();
        let f1 = HyperFunction::power_function(&h3, coeffs).unwrap();
        let f2 = HyperFunction::coordinate(&h3, 0).unwrap();
        let combo = HyperFunction::linear_combination(&[(a, &f1), (b, &f2)]).unwrap();
        let grid = QuadratureGrid::gauss3(6);
        let s = unit_sphere();
        let i1 = sigma_integral(&f1, &s, &grid).unwrap().value;
        let i2 = sigma_integral(&f2, &s, &grid).unwrap().value;
        let lhs = sigma_integral(&combo, &s, &grid).unwrap().value;
        let rhs = &i1.scale(a) + &i2.scale(b);
        let scale = i1.norm() * a.norm() + i2.norm() * b.norm();
        prop_assert!((&lhs - &rhs).norm() <= 1e-10 * scale.max(1e-300) + 1e-14, "{lhs:?} vs {rhs:?}");
    }

    #[test]
    fn lemma3_bound_holds((use_h3, kind, coeffs) in small_functions()) {
        let algebra = if use_h3 { Algebra::h3() } else { Algebra::c3() };
        let f = build(&algebra, kind, coeffs);
        for s in [unit_sphere(), unit_cube()] {
            let r = lemma3_check(&f, &s, &QuadratureGrid::gauss3(6)).unwrap();
            prop_assert!(r.passed, "{}", r.to_json());
            prop_assert!(r.is_consistent());
        }
    }

    #[test]
    fn cascade_additivity_for_any_smooth_function((use_h3, kind, coeffs) in small_functions()) {
        let algebra = if use_h3 { Algebra::h3() } else { Algebra::c3() };
        let f = build(&algebra, kind, coeffs);
        let cube = Aabb::cube([-0.5, 0.25, 0.0], 1.5);
        let (report, levels) = theorem1_cascade(&f, &cube, 1, &QuadratureGrid::gauss3(3), 0).unwrap();
        let whole = &levels[0].integrals[0];
        let mut sum = algebra.zero();
        for v in &levels[1].integrals {
            sum += v;
        }
        prop_assert!((&sum - whole).norm() <= 1e-10 * whole.norm().max(1.0));
        prop_assert!(report.is_consistent());
    }
}

#[test]
fn quadrature_error_drops_fourfold_per_doubling() {
    // int x^3 dydz over the sphere = int 3 x^2 dV = 4 pi / 5
    let exact = 4.0 * std::f64::consts::PI / 5.0;
    let f = |p: [f64; 3]| c(p[0].powi(3), 0.0);
    let errors: Vec<f64> = [2, 4, 8, 16]
        .iter()
        .map(|&n| (scalar_surface_integrals(&f, &unit_sphere(), &QuadratureGrid::gauss3(n)).unwrap()[0].value.re - exact).abs())
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] <= w[0] / 4.0 || w[1] < 1e-13, "{errors:?}");
    }
}

#[test]
fn boundary_cells_shrink_in_volume() {
    for d in [DomainSpec::unit_cube(), DomainSpec::unit_ball(), DomainSpec::takagi_cap(6).unwrap(), DomainSpec::staircase(&[2]).unwrap()] {
        let counts: Vec<_> = [0.25, 0.125, 0.0625].iter().map(|&e| boundary_cube_count(&d, e).unwrap()).collect();
        for w in counts.windows(2) {
            assert!(w[1].j_eps3 < w[0].j_eps3, "{}: {counts:?}", d.label());
            assert!(w[1].j_eps2 <= 2.0 * w[0].j_eps2, "{}: {counts:?}", d.label());
        }
    }
}

#[test]
fn split_box_surfaces_have_zero_flux_of_constants() {
    let s = box_surface([-1.0, 0.5, 2.0], [0.5, 3.0, 2.25]).unwrap();
    let r = scalar_surface_integrals(&|_| c(1.0, 0.0), &s, &QuadratureGrid::gauss3(4)).unwrap();
    assert!(r.iter().all(|v| v.value.norm() < 1e-14));
}
