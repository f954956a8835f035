//! Turn a report into the three-panel figure data (price, trading signal,
//! equity) plus the objective-vs-epoch trace, one CSV per panel.

use std::fs;
use std::path::Path;

use rrl_core::backtest::report::ParsedReport;

use crate::CliError;

fn write_section_csv(
    parsed: &ParsedReport,
    section: &str,
    path: &Path,
) -> Result<usize, CliError> {
    let section = parsed.section(section).map_err(CliError::from)?;
    let mut out = String::new();
    out.push_str(&section.header.join(","));
    out.push('\n');
    for row in &section.rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(section.rows.len())
}

/// Emit `price_panel.csv`, `signal_panel.csv`, `equity_panel.csv` for the
/// chosen split and `objective_trace.csv`; the three panels always carry the
/// same row count.
pub fn emit(parsed: &ParsedReport, split: &str, out_dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)?;
    let price_rows = write_section_csv(
        parsed,
        &format!("{split}.prices"),
        &out_dir.join("price_panel.csv"),
    )?;
    let signal_rows = write_section_csv(
        parsed,
        &format!("{split}.signal"),
        &out_dir.join("signal_panel.csv"),
    )?;
    let equity_rows = write_section_csv(
        parsed,
        &format!("{split}.equity"),
        &out_dir.join("equity_panel.csv"),
    )?;
    if price_rows != signal_rows || signal_rows != equity_rows {
        return Err(CliError {
            category: "io.parse",
            message: format!(
                "panel row counts diverge: price {price_rows}, signal {signal_rows}, equity {equity_rows}"
            ),
            code: crate::EXIT_IO,
        });
    }
    write_section_csv(
        parsed,
        "trace.objective",
        &out_dir.join("objective_trace.csv"),
    )?;
    println!(
        "panels: {} rows each in {}",
        price_rows,
        out_dir.display()
    );
    Ok(())
}
