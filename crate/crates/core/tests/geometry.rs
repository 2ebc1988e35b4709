use approx::assert_abs_diff_eq;

use cfill::geometry::*;
use cfill::measures::{f4_normalization, fill4_from_profile};
use cfill::*;

fn shape_of(state: &PureState) -> (Shape, MeshMeta) {
    let p = concurrence_profile(state).unwrap();
    let fill = fill4_from_profile(&p, &SolverOptions::default()).unwrap();
    let meta = MeshMeta {
        volume: fill.volume,
        f4: fill.f4,
        degeneracy: fill.degeneracy,
    };
    (shape_for(&fill.solution).unwrap(), meta)
}

fn obj_text(shape: &Shape, meta: MeshMeta) -> String {
    String::from_utf8(export_mesh(shape, meta, MeshFormat::Obj).unwrap()).unwrap()
}

#[test]
fn ghz_obj_encloses_unit_fill() {
    let (shape, meta) = shape_of(&NamedState::Ghz4.state());
    let text = obj_text(&shape, meta);
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 4);
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 4);
    let mesh = parse_obj(&text).unwrap();
    let v = enclosed_volume(&mesh.vertices, &mesh.faces);
    assert!(v > 0.0, "faces must be outward");
    assert_abs_diff_eq!(v * f4_normalization(), 1.0, epsilon = 1e-7);
}

#[test]
fn obj_round_trip_keeps_nine_digits() {
    for seed in 0..20 {
        let (shape, meta) = shape_of(&haar_random_state(4, seed).unwrap());
        let Shape::Tetrahedron(emb) = &shape else {
            panic!("Haar state gave a degenerate shape");
        };
        let mesh = parse_obj(&obj_text(&shape, meta)).unwrap();
        for (a, b) in mesh.vertices.iter().flatten().zip(emb.vertices.iter().flatten()) {
            assert!((a - b).abs() <= 5e-9 * b.abs() + 1e-15, "{a} vs {b}");
        }
        let v = enclosed_volume(&mesh.vertices, &mesh.faces);
        assert!((v - emb.volume).abs() <= 3e-8 * emb.volume);
    }
}

#[test]
fn json_mesh_round_trip() {
    let (shape, meta) = shape_of(&NamedState::Cluster4.state());
    let bytes = export_mesh(&shape, meta, MeshFormat::Json).unwrap();
    let back: MeshJson = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(back, mesh_of(&shape, meta));
    assert_eq!(back.faces.len(), 4);
    assert_abs_diff_eq!(back.meta.f4, 3f64.powf(1.25) / 4.0, epsilon = 1e-10);
}

#[test]
fn zero_volume_classes_export_primitives() {
    let (point, meta) = shape_of(&NamedState::Product4.state());
    assert_eq!(point, Shape::Degenerate(Primitive::Point));
    assert_eq!(obj_text(&point, meta), "v 0.00000000e0 0.00000000e0 0.00000000e0\np 1\n");

    // |0>|0>|Phi+>: only sigma_34 survives, equal to C^2_{3(124)} = 1
    let (tri, meta) = shape_of(&NamedState::BisepOneOneTwo.state());
    let Shape::Degenerate(Primitive::Triangle { area }) = tri else {
        panic!("expected a triangle, got {tri:?}");
    };
    assert_abs_diff_eq!(area, 1.0, epsilon = 1e-12);
    let mesh = parse_obj(&obj_text(&tri, meta)).unwrap();
    assert_eq!((mesh.vertices.len(), mesh.faces.len()), (3, 1));

    let (line, meta) = shape_of(&NamedState::BisepTwoToTwo.state());
    assert_eq!(line, Shape::Degenerate(Primitive::Line));
    let mesh = parse_obj(&obj_text(&line, meta)).unwrap();
    assert_eq!(mesh.lines.len(), 1);
}

#[test]
fn embedding_invariants_hold_for_random_states() {
    for seed in 100..130 {
        let (shape, _) = shape_of(&haar_random_state(4, seed).unwrap());
        let Shape::Tetrahedron(emb) = shape else { panic!() };
        for [a, b] in emb.split_areas {
            assert!((a - b).abs() <= 1e-8 * a.max(b));
        }
        // each face is the sum of its three split areas
        for (face, &area) in emb.face_areas.iter().enumerate() {
            let i = face + 1;
            let sum: f64 = emb.sigma().iter().zip(cfill::concurrence::PAIRS).filter(|(_, (a, b))| *a == i || *b == i).map(|(s, _)| s).sum();
            assert!((sum - area).abs() <= 1e-8 * area);
        }
        assert!((cayley_menger_volume(&emb.edge_lengths) - emb.volume).abs() <= 1e-9 * emb.volume);
        // contacts sit one inradius from the incenter
        for c in emb.contacts {
            let d = ((0..3).map(|k| (c[k] - emb.incenter[k]).powi(2)).sum::<f64>()).sqrt();
            assert!((d - emb.inradius).abs() <= 1e-9 * emb.inradius);
        }
    }
}

#[test]
fn unsupported_format_is_rejected() {
    assert!("stl".parse::<MeshFormat>().is_err());
    assert_eq!("OBJ".parse::<MeshFormat>().unwrap(), MeshFormat::Obj);
}
