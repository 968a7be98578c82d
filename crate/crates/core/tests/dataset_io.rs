use std::path::Path;

use facedepth_core::dataset::{
    colorize_depth, read_depth_png, write_dataset, DepthEncoding, Manifest, ManifestHeader,
    MANIFEST_FILE,
};
use facedepth_core::mesh::synth;
use facedepth_core::render::{render_frame, solid_background};
use facedepth_core::scene::sample_scene;
use facedepth_core::{CameraRig, DepthMap, RenderSettings, SweepConfig};
use rand::{Rng, SeedableRng};

fn header(frames: u64) -> ManifestHeader {
    ManifestHeader::new(
        42,
        frames,
        DepthEncoding::default(),
        CameraRig::default(),
        serde_json::json!({"sweep": {"frame_count": frames}}),
    )
}

fn generate(dir: &Path, frames: u64, sidecar: bool) -> Manifest {
    let head = synth::demo_head(32, 16);
    let cam = CameraRig::default();
    let bg = solid_background(480, 640, [128, 128, 128]);
    let settings = RenderSettings::default();
    let cfg = SweepConfig::default();
    let packets = (0..frames).map(|i| {
        let s = sample_scene(&cfg, i, 42).unwrap();
        render_frame(&head, &s, &cam, &bg, &settings).unwrap()
    });
    write_dataset(packets, dir, header(frames), sidecar).unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn empty_dataset_has_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate(dir.path(), 0, false);
    assert!(m.records.is_empty());
    let text = String::from_utf8(read(&dir.path().join(MANIFEST_FILE))).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("# "));
    assert_eq!(Manifest::read(&dir.path().join(MANIFEST_FILE)).unwrap(), m);
}

#[test]
fn two_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate(a.path(), 10, true);
    generate(b.path(), 10, true);
    assert_eq!(
        read(&a.path().join(MANIFEST_FILE)),
        read(&b.path().join(MANIFEST_FILE))
    );
    for i in 0..10 {
        for sub in ["rgb", "depth"] {
            let rel = format!("{sub}/{i:06}.png");
            assert_eq!(
                read(&a.path().join(&rel)),
                read(&b.path().join(&rel)),
                "{rel}"
            );
        }
        let rel = format!("depth_raw/{i:06}.bin");
        assert_eq!(read(&a.path().join(&rel)), read(&b.path().join(&rel)));
    }
}

#[test]
fn records_match_files_and_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let written = generate(dir.path(), 6, false);
    let parsed = Manifest::read(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(parsed, written);
    let depth_files = std::fs::read_dir(dir.path().join("depth")).unwrap().count();
    assert_eq!(depth_files, parsed.records.len());
    assert!(!dir.path().join("depth_raw").exists());
    for r in &parsed.records {
        let depth = read_depth_png(&dir.path().join(&r.depth), &parsed.header.encoding).unwrap();
        assert_eq!(depth.dims(), (480, 640));
        assert_eq!(depth.valid_count() as u64, r.valid_pixels);
        let rgb = image::open(dir.path().join(&r.rgb)).unwrap();
        assert_eq!(rgb.color(), image::ColorType::Rgb8);
        assert!((0.7..=1.0).contains(&r.camera_distance));
    }
}

#[test]
fn randomized_metric_round_trip() {
    let enc = DepthEncoding::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1_000_000 {
        let d: f64 = rng.random_range(0.01..=5.0);
        if d <= 0.01 {
            continue;
        }
        let back = enc.decode(enc.encode(d).unwrap());
        worst = worst.max((back - d).abs());
    }
    assert!(worst <= 0.5 / enc.scale + 1e-12, "worst error {worst}");
    assert!(worst < 1e-4);
}

#[test]
fn colorized_depth_is_monotone_and_black_when_invalid() {
    let values: Vec<f64> = (0..64)
        .map(|i| {
            if i % 7 == 0 {
                0.0
            } else {
                0.5 + i as f64 * 0.05
            }
        })
        .collect();
    let depth = DepthMap::from_vec(8, 8, values.clone()).unwrap();
    let img = colorize_depth(&depth);
    let px: Vec<[u8; 3]> = img.pixels().map(|p| p.0).collect();
    for (i, &a) in values.iter().enumerate() {
        if a == 0.0 {
            assert_eq!(px[i], [0, 0, 0]);
            continue;
        }
        assert_ne!(px[i], [0, 0, 0]);
        for (j, &b) in values.iter().enumerate() {
            if b != 0.0 && a < b {
                assert!((0..3).all(|c| px[i][c] >= px[j][c]));
            }
        }
    }
    let blank = colorize_depth(&DepthMap::new(4, 4));
    assert!(blank.pixels().all(|p| p.0 == [0, 0, 0]));
}
