//! Metrics, the four-method comparison and the demo corpus.

mod metrics;
mod pipeline;
mod report;

pub use metrics::{detection_metrics, distance_to_centerlines, reconstruction_metrics, DetectionMetrics, ReconstructionMetrics};
pub use pipeline::{
    demo_corpus, run_corpus, run_demo, run_method, scene_seed, CorpusConfig, Method, MethodArtifacts, MethodResult,
    PipelineConfig,
};
pub use report::{emit_report, report_csv, CSV_HEADER};
