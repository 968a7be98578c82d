//! Shared fixtures for the benchmarks.

use facedepth_core::mesh::synth;
use facedepth_core::scene::sample_scene;
use facedepth_core::{
    apply_expression, render_frame, transform_mesh, CameraRig, FramePacket, PointLight,
    RenderSettings, SweepConfig, TriMesh,
};

/// Demo head posed and expressed as frame `index` of the default sweep,
/// in world coordinates, with that frame's light.
pub fn posed_head(segments: u32, rings: u32, index: u64) -> (TriMesh, PointLight) {
    let head = synth::demo_head(segments, rings);
    let sample = sample_scene(&SweepConfig::default(), index, 42).expect("default sweep");
    let expressed = apply_expression(&head, &sample.expression).expect("known expression");
    (
        transform_mesh(&expressed, &sample.head_pose).expect("valid pose"),
        sample.light,
    )
}

/// A fully rendered default frame.
pub fn frame(index: u64) -> FramePacket {
    let head = synth::demo_head(64, 32);
    let cam = CameraRig::default();
    let sample = sample_scene(&SweepConfig::default(), index, 42).expect("default sweep");
    let bg = facedepth_core::render::solid_background(cam.width_px, cam.height_px, [128; 3]);
    render_frame(&head, &sample, &cam, &bg, &RenderSettings::default()).expect("renders")
}
