//! Command-line front end: subcommands, CSV/JSON reports and SVG portraits.

pub mod app;
pub mod report;
pub mod svg;

pub use app::{run_cli, Cli, CliError};
pub use report::{read_report, write_report};
pub use svg::{render_svg, SvgScene};
