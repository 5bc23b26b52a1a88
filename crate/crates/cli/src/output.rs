//! Table emission: homogeneous report lists to CSV or JSON with
//! deterministic, bit-faithful formatting.
//!
//! Floats print as `{:.16e}` (17 significant digits), which reloads to the
//! identical f64. String cells are always double-quoted with internal quotes
//! doubled. Column orders are fixed and documented in the README.

use bosechain::interference::IntensityProfile;
use bosechain::transfer::TransferReport;
use serde::Serialize;

use crate::CliError;

/// One output row of a run.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Report {
    Transfer {
        sweep_value: Option<f64>,
        #[serde(flatten)]
        report: TransferReport,
    },
    Interference(IntensityProfile),
    Oracle(OracleRow),
}

/// One analytic-vs-dense comparison point.
#[derive(Clone, Debug, Serialize)]
pub struct OracleRow {
    pub sites: usize,
    pub time: f64,
    pub max_deviation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(name: &str) -> Result<Format, CliError> {
        match name {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(CliError::Config(format!(
                "unknown output format '{other}' (json, csv)"
            ))),
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

fn kind_index(report: &Report) -> usize {
    match report {
        Report::Transfer { .. } => 0,
        Report::Interference(_) => 1,
        Report::Oracle(_) => 2,
    }
}

fn check_homogeneous(reports: &[Report]) -> Result<(), CliError> {
    if reports.is_empty() {
        return Err(CliError::Config("no reports to emit".into()));
    }
    let first = kind_index(&reports[0]);
    if reports.iter().any(|r| kind_index(r) != first) {
        return Err(CliError::Config(
            "cannot emit a mixed report table; report kinds must be homogeneous".into(),
        ));
    }
    Ok(())
}

/// Render a homogeneous report list in the requested format.
pub fn emit_table(reports: &[Report], format: Format) -> Result<String, CliError> {
    check_homogeneous(reports)?;
    match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(reports)
                .map_err(|e| CliError::Io(format!("serializing reports: {e}")))?;
            text.push('\n');
            Ok(text)
        }
        Format::Csv => Ok(emit_csv(reports)),
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn emit_csv(reports: &[Report]) -> String {
    let mut out = String::new();
    match &reports[0] {
        Report::Transfer { .. } => {
            out.push_str(
                "row,sweep_value,sites,processor_sites,sector,dimension,time,signature_re,signature_im,function,mirror_function,fidelity,phase_error,truncation_loss,pst_profile,multi_boson_interaction,mirror_law_exact\n",
            );
            for (i, r) in reports.iter().enumerate() {
                let Report::Transfer { sweep_value, report } = r else {
                    unreachable!("homogeneity checked")
                };
                out.push_str(&format!(
                    "{i},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    opt_num(*sweep_value),
                    report.sites,
                    report.processor_sites,
                    quoted(&report.sector),
                    report.dimension,
                    num(report.time),
                    num(report.signature[0]),
                    num(report.signature[1]),
                    quoted(report.function.as_deref().unwrap_or("")),
                    quoted(report.mirror_function.as_deref().unwrap_or("")),
                    num(report.fidelity),
                    num(report.phase_error),
                    opt_num(report.truncation_loss),
                    report.pst_profile,
                    report.multi_boson_interaction,
                    report.mirror_law_exact,
                ));
            }
        }
        Report::Interference(_) => {
            out.push_str(
                "row,time,path,path_length,site,site_intensity,signature_re,signature_im,arrival_re,arrival_im,receiver_intensity,interference_factor\n",
            );
            let mut row = 0usize;
            for r in reports {
                let Report::Interference(profile) = r else {
                    unreachable!("homogeneity checked")
                };
                for (path, sites) in profile.per_path_site_intensity.iter().enumerate() {
                    for (site, &intensity) in sites.iter().enumerate() {
                        out.push_str(&format!(
                            "{row},{},{path},{},{},{},{},{},{},{},{},{}\n",
                            num(profile.time),
                            sites.len(),
                            site + 1,
                            num(intensity),
                            num(profile.per_path_signature[path][0]),
                            num(profile.per_path_signature[path][1]),
                            num(profile.receiver_amplitudes[path][0]),
                            num(profile.receiver_amplitudes[path][1]),
                            num(profile.receiver_intensity),
                            num(profile.interference_factor),
                        ));
                        row += 1;
                    }
                }
            }
        }
        Report::Oracle(_) => {
            out.push_str("row,sites,time,max_deviation\n");
            for (i, r) in reports.iter().enumerate() {
                let Report::Oracle(o) = r else {
                    unreachable!("homogeneity checked")
                };
                out.push_str(&format!(
                    "{i},{},{},{}\n",
                    o.sites,
                    num(o.time),
                    num(o.max_deviation)
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dummy_transfer(sweep: Option<f64>) -> Report {
        Report::Transfer {
            sweep_value: sweep,
            report: TransferReport {
                sites: 5,
                processor_sites: 1,
                sector: "total-at-most(1)".into(),
                dimension: 6,
                time: 3.14,
                signature: [1.0, 0.0],
                function: Some("x1".into()),
                mirror_function: Some("x5".into()),
                fidelity: 1.0,
                phase_error: 0.0,
                truncation_loss: None,
                pst_profile: true,
                multi_boson_interaction: false,
                mirror_law_exact: true,
            },
        }
    }

    #[test]
    fn csv_has_header_and_one_row_per_report() {
        let text = emit_table(&[dummy_transfer(None), dummy_transfer(Some(0.5))], Format::Csv)
            .unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("row,sweep_value,sites"));
        assert!(lines[1].starts_with("0,,5"));
        assert!(lines[2].starts_with(&format!("1,{:.16e},5", 0.5)));
    }

    #[test]
    fn csv_floats_round_trip() {
        let value = 0.217_646_099_730_187_4_f64;
        let printed = format!("{value:.16e}");
        let back: f64 = printed.parse().unwrap();
        assert_eq!(value.to_bits(), back.to_bits());
    }

    #[test]
    fn mixed_tables_are_rejected() {
        let mixed = [
            dummy_transfer(None),
            Report::Oracle(OracleRow {
                sites: 3,
                time: 0.5,
                max_deviation: 1e-12,
            }),
        ];
        assert!(matches!(
            emit_table(&mixed, Format::Csv),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            emit_table(&[], Format::Json),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn json_emits_an_array() {
        let text = emit_table(&[dummy_transfer(None)], Format::Json).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(parsed.is_array());
        assert_eq!(parsed[0]["fidelity"], 1.0);
        assert_eq!(parsed[0]["function"], "x1");
    }
}
