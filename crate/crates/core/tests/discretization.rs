use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thinpore_core::discretization::{
    anisotropic_divergence, anisotropic_gradient, build_mesh, extend_by_zero, vertical_average,
    AnisotropyParameter, Field, Mesh, MeshSource,
};
use thinpore_core::geometry::{build_perforated_domain, build_unit_cell, ObstacleShape, Rect};

fn eps(e: f64) -> AnisotropyParameter {
    AnisotropyParameter::new(e).unwrap()
}

fn empty_cell_mesh(h: f64, layers: usize) -> Arc<Mesh> {
    let cell = build_unit_cell(ObstacleShape::None).unwrap();
    Arc::new(Mesh::unit_cell(&cell, h, Some(layers), false).unwrap())
}

fn square_layer(epsilon: f64, h: f64, layers: usize) -> Arc<Mesh> {
    let cell = build_unit_cell(ObstacleShape::square(0.5)).unwrap();
    let domain = build_perforated_domain(epsilon, cell, Rect::UNIT_SQUARE).unwrap();
    Arc::new(Mesh::perforated(&domain, h, layers).unwrap())
}

fn random_field(mesh: Arc<Mesh>, components: usize, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..mesh.node_count() * components)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    Field::from_values(mesh, components, values)
}

#[test]
fn gradient_of_vertical_shear() {
    let mesh = empty_cell_mesh(0.25, 4);
    let v = Field::vector_from_fn(mesh, |x| [x[2], 0.0, 0.0]);
    let g = anisotropic_gradient(&v, eps(0.5));
    for e in 0..g.elements().len() {
        for r in 0..3 {
            for c in 0..3 {
                let expected = if (r, c) == (0, 2) { 2.0 } else { 0.0 };
                assert!((g.get(e, r, c) - expected).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn gradient_of_horizontal_stretch_ignores_eps() {
    let mesh = empty_cell_mesh(0.25, 4);
    let v = Field::vector_from_fn(mesh, |x| [x[0], 0.0, 0.0]);
    for e_val in [1.0, 0.1, 1e-3] {
        let g = anisotropic_gradient(&v, eps(e_val));
        for e in 0..g.elements().len() {
            assert!((g.get(e, 0, 0) - 1.0).abs() < 1e-12);
            for r in 0..3 {
                assert_eq!(g.get(e, r, 2), 0.0);
            }
        }
    }
}

#[test]
fn divergence_of_vertical_stretch() {
    let mesh = empty_cell_mesh(0.25, 4);
    let v = Field::vector_from_fn(mesh, |x| [0.0, 0.0, x[2]]);
    let d = anisotropic_divergence(&v, eps(0.25));
    assert_eq!(d.shape(), (1, 1));
    for e in 0..d.elements().len() {
        assert!((d.get(e, 0, 0) - 4.0).abs() < 1e-12);
    }
}

#[test]
fn anisotropy_rejects_nonpositive() {
    assert!(AnisotropyParameter::new(0.0).is_err());
    assert!(AnisotropyParameter::new(-1.0).is_err());
    assert!(AnisotropyParameter::new(f64::NAN).is_err());
}

#[test]
fn vertical_average_examples() {
    let mesh = square_layer(0.5, 0.125, 8);
    let c = Field::constant(mesh.clone(), &[3.0, -1.0, 0.5]);
    let avg = vertical_average(&c);
    for node in 0..avg.field.mesh().node_count() {
        let v = avg.field.node_values(node);
        assert!((v[0] - 3.0).abs() < 1e-14 && (v[1] + 1.0).abs() < 1e-14);
        assert!((v[2] - 0.5).abs() < 1e-14);
    }
    assert_eq!(avg.masked_columns, 4 * 2 * 2);

    let linear = Field::vector_from_fn(mesh.clone(), |x| [x[2], 0.0, 0.0]);
    let avg = vertical_average(&linear);
    for node in 0..avg.field.mesh().node_count() {
        assert!((avg.field.value(node, 0) - 0.5).abs() < 1e-15);
        assert_eq!(avg.field.value(node, 1), 0.0);
    }

    // trapezoid error of a parabola is -h^2/12 * f'' * 1, f'' = -12
    let parabola = Field::vector_from_fn(mesh, |x| [6.0 * x[2] * (1.0 - x[2]), 0.0, 0.0]);
    let avg = vertical_average(&parabola);
    let hz: f64 = 1.0 / 8.0;
    for node in 0..avg.field.mesh().node_count() {
        assert!((avg.field.value(node, 0) - (1.0 - hz * hz)).abs() < 1e-14);
    }
}

#[test]
fn extension_by_zero_examples() {
    let mesh = square_layer(0.5, 0.125, 4);
    let one = Field::constant(mesh.clone(), &[1.0]);
    let ext = extend_by_zero(&one);
    assert!((ext.mean()[0] - 0.75).abs() < 1e-14);
    assert_eq!(ext.field().mesh().element_count(), 8 * 8 * 4);

    let zero = extend_by_zero(&Field::zeros(mesh.clone(), 3));
    assert_eq!(zero.l2_norm(), 0.0);
    assert!(zero.field().values().iter().all(|v| *v == 0.0));

    let v = random_field(mesh, 3, 7);
    let ext = extend_by_zero(&v);
    let (a, b) = (ext.l2_norm(), v.l2_norm());
    assert!((a - b).abs() <= 1e-14 * b);
    for p in [1.0, 3.0] {
        let (a, b) = (ext.lp_norm(p), v.lp_norm(p));
        assert!((a - b).abs() <= 1e-13 * b);
    }
}

#[test]
fn build_mesh_counts() {
    let cell = build_unit_cell(ObstacleShape::square(0.5)).unwrap();
    let mesh = build_mesh(MeshSource::CellExtrusion { cell: &cell, layers: 8 }, 0.125).unwrap();
    assert_eq!(mesh.fluid_element_count(), 8 * 8 * 8 - 4 * 4 * 8);

    let domain = build_perforated_domain(0.25, cell, Rect::UNIT_SQUARE).unwrap();
    let mesh = build_mesh(MeshSource::Perforated { domain: &domain, layers: 8 }, 1.0 / 16.0).unwrap();
    assert_eq!(mesh.fluid_element_count(), 16 * 16 * 8 - 16 * 2 * 2 * 8);

    let empty = build_unit_cell(ObstacleShape::None).unwrap();
    let flat = build_mesh(MeshSource::Cell2d { cell: &empty }, 0.25).unwrap();
    assert_eq!(flat.dim(), 2);
    assert_eq!(flat.fluid_element_count(), 16);
    assert!(!flat.has_tag(thinpore_core::geometry::BoundaryTag::Obstacle));
}

#[test]
fn seminorm_vanishes_on_constants_only() {
    let mesh = square_layer(0.5, 0.125, 4);
    let c = Field::constant(mesh.clone(), &[2.0, -1.0, 4.0]);
    assert_eq!(c.d_eps_norm(0.5), 0.0);
    assert!(c.l2_norm() > 0.0);
    let v = random_field(mesh, 3, 3);
    assert!(v.d_eps_norm(0.5) > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradient_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, e in 0.05f64..1.0) {
        let mesh = square_layer(0.5, 0.125, 3);
        let u = random_field(mesh.clone(), 3, seed);
        let w = random_field(mesh, 3, seed + 1);
        let combo = u.axpy(a, &w);
        let gu = anisotropic_gradient(&u, eps(e));
        let gw = anisotropic_gradient(&w, eps(e));
        let gc = anisotropic_gradient(&combo, eps(e));
        let scale = gc.max_abs().max(1.0);
        for s in 0..gc.elements().len() {
            for r in 0..3 {
                for c in 0..3 {
                    let expected = gu.get(s, r, c) + a * gw.get(s, r, c);
                    prop_assert!((gc.get(s, r, c) - expected).abs() <= 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn gradient_exact_on_affine_fields(
        m in proptest::array::uniform9(-2.0f64..2.0),
        b in proptest::array::uniform3(-1.0f64..1.0),
        e in 0.05f64..1.0,
    ) {
        let mesh = square_layer(0.5, 0.125, 3);
        let v = Field::vector_from_fn(mesh, |x| {
            let mut out = b;
            for (i, o) in out.iter_mut().enumerate() {
                for (j, xj) in x.iter().enumerate() {
                    *o += m[3 * i + j] * xj;
                }
            }
            out
        });
        let g = anisotropic_gradient(&v, eps(e));
        for s in 0..g.elements().len() {
            for i in 0..3 {
                for j in 0..3 {
                    let expected = if j == 2 { m[3 * i + j] / e } else { m[3 * i + j] };
                    prop_assert!((g.get(s, i, j) - expected).abs() <= 1e-11 * (1.0 + expected.abs()));
                }
            }
        }
    }

    #[test]
    fn averaging_extension_commutes_with_scaling(seed in 0u64..1000, c in -5.0f64..5.0) {
        let mesh = square_layer(0.5, 0.125, 3);
        let v = random_field(mesh, 2, seed);
        let lhs = extend_by_zero(&v.scaled(c)).vertical_average();
        let rhs = extend_by_zero(&v).vertical_average().scaled(c);
        for (a, b) in lhs.field().values().iter().zip(rhs.field().values()) {
            prop_assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn norms_are_nonnegative_and_definite(seed in 0u64..1000, e in 0.05f64..1.0) {
        let mesh = square_layer(0.5, 0.125, 3);
        let v = random_field(mesh.clone(), 3, seed);
        prop_assert!(v.l2_norm() > 0.0);
        prop_assert!(v.d_eps_norm(e) >= 0.0);
        prop_assert_eq!(Field::zeros(mesh, 3).l2_norm(), 0.0);
    }
}
