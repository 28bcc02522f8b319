//! Scenario files, report formats and the command implementations behind
//! the `fracgame` binary.

mod commands;
mod report;
mod scenario;

pub use commands::{run, Command, Flags, RunOutput};
pub use report::{emit_report, parse_jsonl, write_reports, ReportFormat};
pub use scenario::{GameSection, Numerics, Outputs, Scenario};
