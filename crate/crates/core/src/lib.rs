//! Numerical experiments around the Kobayashi–Royden metric: closed forms,
//! disc-search upper bounds, lengths and Hausdorff measures in the metric,
//! homotopy invariants of annuli and tubes, and holomorphic contractions.

pub mod cli;
pub mod contraction;
pub mod distance;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod hausdorff;
pub mod invariants;
pub mod mesh;
pub mod metrics;
pub mod polymap;
pub mod quadrature;

pub use contraction::{
    check_strict_image, degree_collapse_demo, iterate_to_fixed_point, quasi_random_starts, CollapseReport,
    FixedPointOptions, FixedPointReport, StrictImage,
};
pub use distance::{
    curve_length, curve_length_metric, graph_distance, kob_distance_graph, LengthMetric, LengthMode, MetricGraph,
    MetricKind,
};
pub use error::{Error, Result};
pub use estimator::{
    enlarge_disc, estimate_disc, estimate_kob_royden, lemma_compare_bound, seed_affine_disc,
    uniform_monotonicity_constant, DiscEstimate, MonotonicityReport, OptimizerBudget, PolyDiscCandidate,
};
pub use geometry::{
    dist_to_complement, domain_separation, membership, BBox, CPoint, Domain, DomainKind, DomainSpec, SampledCurve,
    TVector, C64,
};
pub use hausdorff::{
    flat_calibration, hausdorff_k_measure, hausdorff_k_measure_with, sphere_map_measure_upper,
    sphere_map_measure_upper_with, CoverEstimate, CoverPiece, MeasureBudget, MeasureReport, MeasuredObject,
};
pub use invariants::{
    annulus_map_homotopy_verdict, l1_annulus, l1_annulus_general, lk_tube_upper, sphere_degree, tube_map_degree,
    vk_tube_upper, winding_number, Certificate, HomotopyVerdict, InvariantReport, L1Budget, SphereProjection,
    VerdictReport,
};
pub use mesh::SphereMeshMap;
pub use metrics::{
    annulus_canonical_density, annulus_l1_closed, kob_distance_closed, kob_royden_closed, poincare_disc_density,
    MetricSource, MetricValue,
};
pub use polymap::{PolyMap, Term};
