//! Synthetic face depth datasets: mesh loading and morphing, seeded scene
//! sampling, z-buffer rendering of colour and metric depth, on-disk dataset
//! encoding and depth-estimation error metrics.

pub mod dataset;
pub mod mesh;
pub mod metrics;
pub mod render;
pub mod scene;

pub use nalgebra;

pub use dataset::{DatasetError, DepthEncoding, FrameRecord, Manifest, ManifestHeader};
pub use mesh::{apply_expression, transform_mesh, ExpressionWeights, MeshError, TriMesh};
pub use metrics::{
    aggregate_report, align_prediction, compute_metrics, evaluate, format_report, valid_mask,
    Aggregation, Alignment, EvalError, MetricReport,
};
pub use render::{render_frame, DepthMap, FramePacket, Mask, RenderError, RenderSettings};
pub use scene::{
    sample_scene, CameraRig, Intrinsics, PointLight, RigidTransform, SceneError, SceneSample,
    SweepConfig,
};
