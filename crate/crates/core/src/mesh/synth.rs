//! Procedural meshes: analytic test shapes and a stand-in head with
//! expression morphs, for demos, benchmarks and tests.

use nalgebra::{Point3, Vector3};

use super::TriMesh;

/// Latitude/longitude sphere with outward (counter-clockwise) winding.
/// Produces `2 · segments · (rings − 1)` triangles.
pub fn uv_sphere(center: Point3<f64>, radius: f64, segments: u32, rings: u32) -> TriMesh {
    let (vertices, triangles) = ellipsoid_grid(center, Vector3::repeat(radius), segments, rings);
    TriMesh::new(vertices, triangles).expect("sphere is well formed")
}

fn ellipsoid_grid(
    center: Point3<f64>,
    radii: Vector3<f64>,
    segments: u32,
    rings: u32,
) -> (Vec<Point3<f64>>, Vec<[u32; 3]>) {
    assert!(segments >= 3 && rings >= 2);
    let mut vertices = vec![center + Vector3::new(0.0, radii.y, 0.0)];
    for i in 1..rings {
        let theta = std::f64::consts::PI * i as f64 / rings as f64;
        for j in 0..segments {
            let phi = std::f64::consts::TAU * j as f64 / segments as f64;
            vertices.push(
                center
                    + Vector3::new(
                        radii.x * theta.sin() * phi.sin(),
                        radii.y * theta.cos(),
                        radii.z * theta.sin() * phi.cos(),
                    ),
            );
        }
    }
    let bottom = vertices.len() as u32;
    vertices.push(center - Vector3::new(0.0, radii.y, 0.0));

    let ring = |i: u32, j: u32| 1 + (i - 1) * segments + j % segments;
    let mut triangles = Vec::new();
    for j in 0..segments {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..rings - 1 {
        for j in 0..segments {
            let (a, b, c, d) = (
                ring(i, j),
                ring(i + 1, j),
                ring(i + 1, j + 1),
                ring(i, j + 1),
            );
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    for j in 0..segments {
        triangles.push([ring(rings - 1, j), bottom, ring(rings - 1, j + 1)]);
    }
    (vertices, triangles)
}

/// Rectangle in the plane `z = −depth`, facing +z (toward a camera at the
/// origin looking down −z).
pub fn facing_quad(depth: f64, half_width: f64, half_height: f64) -> TriMesh {
    let z = -depth;
    TriMesh::new(
        vec![
            Point3::new(-half_width, -half_height, z),
            Point3::new(half_width, -half_height, z),
            Point3::new(half_width, half_height, z),
            Point3::new(-half_width, half_height, z),
        ],
        vec![[0, 1, 2], [0, 2, 3]],
    )
    .expect("quad is well formed")
}

/// Axis-aligned cube `[0, 1]^3` with outward winding.
pub fn unit_cube() -> TriMesh {
    let vertices: Vec<Point3<f64>> = (0..8)
        .map(|i| Point3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let quads = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let centre = Point3::new(0.5, 0.5, 0.5);
    let mut triangles = Vec::new();
    for q in quads {
        for mut t in [[q[0], q[1], q[2]], [q[0], q[2], q[3]]] {
            let [a, b, c] = t.map(|i: u32| vertices[i as usize]);
            let n = (b - a).cross(&(c - a));
            if n.dot(&(a - centre)) < 0.0 {
                t.swap(1, 2);
            }
            triangles.push(t);
        }
    }
    TriMesh::new(vertices, triangles).expect("cube is well formed")
}

fn bump(p: &Point3<f64>, c: Vector3<f64>, sigma: f64) -> f64 {
    (-(p.coords - c).norm_squared() / (2.0 * sigma * sigma)).exp()
}

/// Stylised head: an ellipsoid with a nose, in head coordinates (origin at
/// the head centre, +y up, face toward +z), carrying `angry`, `happy`, `sad`
/// and `scared` morph targets.
pub fn demo_head(segments: u32, rings: u32) -> TriMesh {
    let radii = Vector3::new(0.075, 0.105, 0.09);
    let (mut vertices, triangles) = ellipsoid_grid(Point3::origin(), radii, segments, rings);
    let nose = Vector3::new(0.0, -0.005, radii.z);
    for v in &mut vertices {
        v.z += 0.022 * bump(v, nose, 0.013);
    }

    let mouth = Vector3::new(0.0, -0.045, 0.085);
    let brow = Vector3::new(0.0, 0.03, 0.085);
    let chin = Vector3::new(0.0, -0.08, 0.06);
    let morph = |f: &dyn Fn(&Point3<f64>) -> Vector3<f64>| -> Vec<Vector3<f64>> {
        vertices.iter().map(f).collect()
    };
    let happy = morph(&|p| {
        let w = bump(p, mouth, 0.025);
        Vector3::new(0.15 * p.x, 0.25 * p.x.abs(), 0.0) * w + Vector3::new(0.0, 0.0, 0.003 * w)
    });
    let sad = morph(&|p| {
        let m = bump(p, mouth, 0.025);
        let b = bump(p, brow, 0.02);
        Vector3::new(
            0.0,
            -0.2 * p.x.abs() * m + 0.004 * b * (1.0 - 40.0 * p.x.abs()).max(0.0),
            0.0,
        )
    });
    let angry = morph(&|p| {
        let b = bump(p, brow, 0.02);
        Vector3::new(-0.1 * p.x * b, -0.006 * b, 0.002 * b)
    });
    let scared = morph(&|p| {
        let b = bump(p, brow, 0.022);
        let j = bump(p, chin, 0.03);
        Vector3::new(0.0, 0.006 * b - 0.01 * j, -0.002 * j)
    });

    let mut mesh = TriMesh::new(vertices, triangles).expect("head is well formed");
    for (name, deltas) in [
        ("angry", angry),
        ("happy", happy),
        ("sad", sad),
        ("scared", scared),
    ] {
        mesh.add_morph(name, deltas).expect("morph sized to mesh");
    }
    mesh
}
