//! Metric on one-parameter families of states, split into the part carried
//! by the eigenvalues and the part carried by the rotating eigenbasis.

mod curve;
mod metric;
mod tracking;

pub use curve::{Family, StateCurve};
pub use metric::{
    classical_metric, classical_metric_escort_form, fisher_metric, metric_at,
    metric_from_divergence, metric_profile, quantum_metric, quantum_metric_q1, MetricOptions,
    MetricPoint, MetricSample, P_FLOOR,
};
pub use tracking::{build_eigencurve, EigenCurve, AMBIGUITY_GAP, CLUSTER_TOL, CONTINUITY_MIN};
