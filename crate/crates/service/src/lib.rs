//! Session service, batch anonymizer and report generator built on
//! `anonbench-core`.

pub mod app;
pub mod batch;
pub mod report;
pub mod snapshot;
pub mod store;

pub use app::{router, AppState, ServiceConfig, ServiceError, STUDY_KEY_HEADER};
pub use report::{generate_report, Report, ReportInput};
