//! Leave-one-language-out evaluation, ranking metrics, score histograms and
//! significance tests.

mod lolo;
mod metrics;
mod report;
mod significance;

pub use lolo::{evaluate_fold, lolo_evaluate, FoldResult};
pub use metrics::{histogram_to_tsv, kendall_tau, kendall_tau_orders, pairwise_accuracy, score_histogram, HistBin};
pub use report::{
    average_rows, format_number, format_row, rows_for_target, ReportRow, SelectionReport, AVERAGE_LABEL,
    REPORT_HEADER,
};
pub use significance::{paired_bootstrap, paired_bootstrap_exhaustive, z_test, ZTest, EXHAUSTIVE_MAX_LEN};
