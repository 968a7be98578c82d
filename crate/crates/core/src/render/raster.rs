use arrayvec::ArrayVec;
use nalgebra::{Point3, Vector3};

use super::{Albedo, DepthMap, FramePacket, Mask, RenderError, RenderSettings, RgbImage};
use crate::mesh::TriMesh;
use crate::scene::{CameraRig, Intrinsics, PointLight};

/// Sub-pixel precision of snapped screen coordinates (8 bits).
const SUBPIXEL_BITS: u32 = 8;
const SUBPIXEL: f64 = (1 << SUBPIXEL_BITS) as f64;
/// Snapped coordinates are clamped to ±2^29 so edge products fit in i64.
const COORD_LIMIT: f64 = (1i64 << 29) as f64;

const NO_TRIANGLE: u32 = u32::MAX;

/// Vertex in the camera frame with its shading attributes.
#[derive(Debug, Clone, Copy)]
struct ClipVertex {
    pos: Point3<f64>,
    normal: Vector3<f64>,
    uv: [f64; 2],
}

impl ClipVertex {
    fn depth(&self) -> f64 {
        -self.pos.z
    }

    fn lerp(&self, other: &ClipVertex, t: f64) -> ClipVertex {
        ClipVertex {
            pos: self.pos + (other.pos - self.pos) * t,
            normal: self.normal + (other.normal - self.normal) * t,
            uv: [
                self.uv[0] + (other.uv[0] - self.uv[0]) * t,
                self.uv[1] + (other.uv[1] - self.uv[1]) * t,
            ],
        }
    }
}

/// Clipped, projected triangle kept for the shading pass.
struct ScreenTriangle {
    verts: [ClipVertex; 3],
    face_normal: Vector3<f64>,
}

/// Sutherland–Hodgman against `depth >= near`. Intersections are always
/// computed from the inside endpoint so that edges shared by neighbouring
/// triangles clip to bit-identical points.
fn clip_near(tri: &[ClipVertex; 3], near: f64) -> ArrayVec<ClipVertex, 4> {
    let mut out = ArrayVec::new();
    for i in 0..3 {
        let cur = tri[i];
        let next = tri[(i + 1) % 3];
        let cur_in = cur.depth() >= near;
        let next_in = next.depth() >= near;
        if cur_in {
            out.push(cur);
        }
        if cur_in != next_in {
            let (inside, outside) = if cur_in { (cur, next) } else { (next, cur) };
            let t = (inside.depth() - near) / (inside.depth() - outside.depth());
            let mut p = inside.lerp(&outside, t);
            p.pos.z = -near;
            out.push(p);
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Fixed {
    x: i64,
    y: i64,
}

fn snap(u: f64, v: f64) -> Fixed {
    let s = |c: f64| (c * SUBPIXEL).round().clamp(-COORD_LIMIT, COORD_LIMIT) as i64;
    Fixed { x: s(u), y: s(v) }
}

fn orient(a: Fixed, b: Fixed, p: Fixed) -> i64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

/// Top-left rule for the positive orientation in a y-down raster: pixels
/// exactly on a top or left edge belong to the triangle.
fn is_top_left(a: Fixed, b: Fixed) -> bool {
    let dy = b.y - a.y;
    let dx = b.x - a.x;
    dy < 0 || (dy == 0 && dx > 0)
}

struct Buffers {
    width: u32,
    height: u32,
    depth: Vec<f64>,
    triangle: Vec<u32>,
    /// Perspective-correct weights of vertices 1 and 2.
    weights: Vec<[f64; 2]>,
}

impl Buffers {
    fn new(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        Buffers {
            width,
            height,
            depth: vec![f64::INFINITY; n],
            triangle: vec![NO_TRIANGLE; n],
            weights: vec![[0.0; 2]; n],
        }
    }
}

fn raster_triangle(
    buf: &mut Buffers,
    id: u32,
    tri: &[ClipVertex; 3],
    intr: &Intrinsics,
    near: f64,
    far: f64,
) {
    let z = tri.map(|v| v.depth());
    let project = |v: &ClipVertex, d: f64| {
        snap(
            intr.cx + intr.fx * v.pos.x / d,
            intr.cy - intr.fy * v.pos.y / d,
        )
    };
    let mut p = [
        project(&tri[0], z[0]),
        project(&tri[1], z[1]),
        project(&tri[2], z[2]),
    ];
    let mut order = [0usize, 1, 2];
    let mut area = orient(p[0], p[1], p[2]);
    if area == 0 {
        return;
    }
    if area < 0 {
        p.swap(1, 2);
        order.swap(1, 2);
        area = -area;
    }
    let zs = order.map(|k| z[k]);
    // 1/z is affine in screen space; this form returns z0 exactly when all
    // three depths agree.
    let r1 = zs[0] / zs[1] - 1.0;
    let r2 = zs[0] / zs[2] - 1.0;

    let min_x = p.iter().map(|q| q.x).min().unwrap();
    let max_x = p.iter().map(|q| q.x).max().unwrap();
    let min_y = p.iter().map(|q| q.y).min().unwrap();
    let max_y = p.iter().map(|q| q.y).max().unwrap();
    let half = (SUBPIXEL / 2.0) as i64;
    let sub = SUBPIXEL as i64;
    let x0 = ((min_x - half).div_euclid(sub)).max(0);
    let x1 = ((max_x - half).div_euclid(sub) + 1).min(buf.width as i64 - 1);
    let y0 = ((min_y - half).div_euclid(sub)).max(0);
    let y1 = ((max_y - half).div_euclid(sub) + 1).min(buf.height as i64 - 1);
    if x0 > x1 || y0 > y1 {
        return;
    }

    let edges = [(p[1], p[2]), (p[2], p[0]), (p[0], p[1])];
    let bias = edges.map(|(a, b)| if is_top_left(a, b) { 0 } else { 1 });
    let step_x = edges.map(|(a, b)| -(b.y - a.y) * sub);
    let step_y = edges.map(|(a, b)| (b.x - a.x) * sub);
    let start = Fixed {
        x: x0 * sub + half,
        y: y0 * sub + half,
    };
    let mut row = edges.map(|(a, b)| orient(a, b, start));
    let inv_area = 1.0 / area as f64;

    for y in y0..=y1 {
        let mut w = row;
        for x in x0..=x1 {
            if w[0] >= bias[0] && w[1] >= bias[1] && w[2] >= bias[2] {
                let b1 = w[1] as f64 * inv_area;
                let b2 = w[2] as f64 * inv_area;
                let depth = zs[0] / (1.0 + b1 * r1 + b2 * r2);
                let idx = y as usize * buf.width as usize + x as usize;
                if depth.is_finite() && depth > near && depth <= far && depth < buf.depth[idx] {
                    buf.depth[idx] = depth;
                    buf.triangle[idx] = id;
                    let pc1 = (b1 * depth / zs[1]).clamp(0.0, 1.0);
                    let pc2 = (b2 * depth / zs[2]).clamp(0.0, 1.0);
                    buf.weights[idx] = match order {
                        [_, 1, 2] => [pc1, pc2],
                        _ => [pc2, pc1],
                    };
                }
            }
            for k in 0..3 {
                w[k] += step_x[k];
            }
        }
        for k in 0..3 {
            row[k] += step_y[k];
        }
    }
}

fn sample_bilinear(img: &RgbImage, uv: [f64; 2]) -> [f64; 3] {
    let (w, h) = img.dimensions();
    let fx = (uv[0] * w as f64 - 0.5).clamp(0.0, (w - 1) as f64);
    let fy = ((1.0 - uv[1]) * h as f64 - 0.5).clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (fx.floor() as u32, fy.floor() as u32);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
    let px = |x, y| img.get_pixel(x, y).0.map(|c| c as f64 / 255.0);
    let (a, b, c, d) = (px(x0, y0), px(x1, y0), px(x0, y1), px(x1, y1));
    std::array::from_fn(|k| {
        let top = a[k] + (b[k] - a[k]) * tx;
        let bottom = c[k] + (d[k] - c[k]) * tx;
        top + (bottom - top) * ty
    })
}

fn shade(
    tri: &ScreenTriangle,
    weights: [f64; 2],
    light_pos: &Point3<f64>,
    light: &PointLight,
    settings: &RenderSettings,
    textured: bool,
) -> [u8; 3] {
    let w = [1.0 - weights[0] - weights[1], weights[0], weights[1]];
    let [a, b, c] = &tri.verts;
    let pos = Point3::from(a.pos.coords * w[0] + b.pos.coords * w[1] + c.pos.coords * w[2]);
    let mut n = a.normal * w[0] + b.normal * w[1] + c.normal * w[2];
    let len = n.norm();
    n = if len > 0.0 && len.is_finite() {
        n / len
    } else {
        tri.face_normal
    };

    let to_light = light_pos - pos;
    let d2 = to_light.norm_squared();
    let diffuse = if d2 > 0.0 && d2.is_finite() {
        light.intensity * n.dot(&to_light).max(0.0) / (d2 * d2.sqrt())
    } else {
        0.0
    };
    let albedo = match &settings.albedo {
        Albedo::Texture(img) if textured => {
            let uv = [
                a.uv[0] * w[0] + b.uv[0] * w[1] + c.uv[0] * w[2],
                a.uv[1] * w[0] + b.uv[1] * w[1] + c.uv[1] * w[2],
            ];
            sample_bilinear(img, uv)
        }
        Albedo::Texture(_) => RenderSettings::DEFAULT_ALBEDO,
        Albedo::Flat(rgb) => *rgb,
    };
    std::array::from_fn(|k| {
        let v = albedo[k] * (settings.ambient + light.color[k] * diffuse);
        let v = if v.is_finite() {
            v.clamp(0.0, 1.0)
        } else {
            0.0
        };
        (v * 255.0).round() as u8
    })
}

/// Renders `mesh` (world coordinates) without background.
///
/// Depth is planar distance along the optical axis, interpolated
/// perspective-correctly. Coverage samples pixel centres with the top-left
/// fill rule; the depth test keeps strictly nearer fragments, so equal
/// depths resolve to the earlier triangle. Geometry is clipped at the near
/// plane and fragments beyond the far plane are dropped.
pub fn rasterize(
    mesh: &TriMesh,
    cam: &CameraRig,
    light: &PointLight,
    settings: &RenderSettings,
) -> Result<FramePacket, RenderError> {
    cam.validate()?;
    light.validate()?;
    settings.validate()?;
    let intr = cam.intrinsics();
    let (width, height) = (cam.width_px, cam.height_px);
    let rot_t = cam.pose.rotation().transpose();

    let cam_vertices: Vec<Point3<f64>> = mesh.vertices().iter().map(|p| cam.to_camera(p)).collect();
    let cam_normals: Vec<Vector3<f64>> = mesh.normals().iter().map(|n| rot_t * n).collect();
    let textured = mesh.has_texcoords();

    let mut buf = Buffers::new(width, height);
    let mut screen: Vec<ScreenTriangle> = Vec::new();

    for (t, tri) in mesh.triangles().iter().enumerate() {
        let verts: [ClipVertex; 3] = std::array::from_fn(|k| {
            let i = tri[k] as usize;
            ClipVertex {
                pos: cam_vertices[i],
                normal: cam_normals[i],
                uv: if textured {
                    mesh.texcoords()[mesh.uv_triangles()[t][k] as usize]
                } else {
                    [0.0; 2]
                },
            }
        });
        if verts.iter().all(|v| v.depth() < cam.near_clip) {
            continue;
        }
        let face_normal = (verts[1].pos - verts[0].pos)
            .cross(&(verts[2].pos - verts[0].pos))
            .try_normalize(0.0)
            .unwrap_or_else(Vector3::zeros);
        let poly = clip_near(&verts, cam.near_clip);
        for k in 1..poly.len().saturating_sub(1) {
            let sub = [poly[0], poly[k], poly[k + 1]];
            let id = screen.len() as u32;
            raster_triangle(&mut buf, id, &sub, &intr, cam.near_clip, cam.far_clip);
            screen.push(ScreenTriangle {
                verts: sub,
                face_normal,
            });
        }
    }

    let light_pos = cam.to_camera(&light.position());
    let mut rgb = RgbImage::new(width, height);
    let mut depth = DepthMap::new(width, height);
    let mut mask = vec![false; buf.depth.len()];
    for (idx, &id) in buf.triangle.iter().enumerate() {
        if id == NO_TRIANGLE {
            continue;
        }
        depth.values_mut()[idx] = buf.depth[idx];
        mask[idx] = true;
        let color = shade(
            &screen[id as usize],
            buf.weights[idx],
            &light_pos,
            light,
            settings,
            textured,
        );
        let (x, y) = ((idx % width as usize) as u32, (idx / width as usize) as u32);
        rgb.put_pixel(x, y, image::Rgb(color));
    }

    Ok(FramePacket {
        rgb,
        depth,
        mask: Mask::from_vec(width, height, mask).expect("sized to frame"),
        meta: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn light_at(p: [f64; 3]) -> PointLight {
        PointLight {
            position: p,
            intensity: 0.66,
            color: [1.0; 3],
        }
    }

    #[test]
    fn top_left_rule_partitions_shared_edge() {
        // Two triangles forming a square whose diagonal passes through pixel centres.
        let a = Fixed { x: 0, y: 0 };
        let b = Fixed { x: 10 * 256, y: 0 };
        let c = Fixed {
            x: 10 * 256,
            y: 10 * 256,
        };
        assert!(is_top_left(a, b) != is_top_left(b, a));
        assert!(is_top_left(c, a) != is_top_left(a, c));
    }

    #[test]
    fn clip_keeps_inside_triangle() {
        let v = |z: f64| ClipVertex {
            pos: Point3::new(0.0, 0.0, z),
            normal: Vector3::z(),
            uv: [0.0; 2],
        };
        assert_eq!(clip_near(&[v(-1.0), v(-2.0), v(-3.0)], 0.01).len(), 3);
        assert_eq!(clip_near(&[v(1.0), v(-2.0), v(-3.0)], 0.01).len(), 4);
        assert_eq!(clip_near(&[v(1.0), v(2.0), v(-3.0)], 0.01).len(), 3);
    }

    #[test]
    fn light_behind_surface_gives_ambient_only() {
        let quad = crate::mesh::synth::facing_quad(0.85, 0.05, 0.05);
        let settings = RenderSettings::default();
        let front = rasterize(
            &quad,
            &CameraRig::default(),
            &light_at([0.0, 0.0, 0.0]),
            &settings,
        )
        .unwrap();
        let back = rasterize(
            &quad,
            &CameraRig::default(),
            &light_at([0.0, 0.0, -2.0]),
            &settings,
        )
        .unwrap();
        let ambient_only = (0.75f64 * 0.15 * 255.0).round() as u8;
        let centre = |f: &FramePacket| f.rgb.get_pixel(240, 320).0;
        assert_eq!(centre(&back), [ambient_only; 3]);
        // Default lighting at 0.85 m is close to 0.8 grey.
        let lit = centre(&front)[0] as f64 / 255.0;
        assert!((lit - 0.8).abs() < 0.02, "{lit}");
    }

    #[test]
    fn background_pixels_are_black_before_compositing() {
        let quad = crate::mesh::synth::facing_quad(0.85, 0.01, 0.01);
        let f = rasterize(
            &quad,
            &CameraRig::default(),
            &light_at([0.0; 3]),
            &RenderSettings::default(),
        )
        .unwrap();
        assert_eq!(f.rgb.get_pixel(0, 0).0, [0, 0, 0]);
        assert!(!f.mask.get(0, 0));
        assert!(f.mask.get(240, 320));
    }

    #[test]
    fn texture_sampling_at_texel_centre() {
        let mut img = RgbImage::new(2, 1);
        img.put_pixel(0, 0, image::Rgb([255, 0, 0]));
        img.put_pixel(1, 0, image::Rgb([0, 0, 255]));
        assert_eq!(sample_bilinear(&img, [0.25, 0.5]), [1.0, 0.0, 0.0]);
        assert_eq!(sample_bilinear(&img, [0.5, 0.5]), [0.5, 0.0, 0.5]);
    }
}
