//! CSV readers and writers for the two calibration stages.
//!
//! Standards use the header `X,u,Y` where `u` is the standard uncertainty of
//! the prepared concentration; it enters the model as the variance `u^2`.
//! Sample readings use the single header `Y0`.

use ccal_core::{FirstStage, SecondStage};

use crate::error::CliError;

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes)
}

fn parse_error(line: u64, column: &str, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), CliError> {
    let headers = rdr.headers().map_err(|e| parse_error(1, "header", e.to_string()))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(parse_error(
            1,
            "header",
            format!("expected `{}`, found `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn field(record: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<f64, CliError> {
    let raw = record
        .get(idx)
        .ok_or_else(|| parse_error(line, name, "missing value"))?;
    let v: f64 = raw
        .parse()
        .map_err(|_| parse_error(line, name, format!("`{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(line, name, format!("`{raw}` is not finite")));
    }
    Ok(v)
}

fn record_line(record: &csv::StringRecord, fallback: u64) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(fallback)
}

pub fn parse_first_stage(bytes: &[u8]) -> Result<FirstStage, CliError> {
    let mut rdr = reader(bytes);
    check_header(&mut rdr, &["X", "u", "Y"])?;
    let (mut x, mut dv, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_error(i as u64 + 2, "row", e.to_string()))?;
        let line = record_line(&rec, i as u64 + 2);
        if rec.len() != 3 {
            return Err(parse_error(
                line,
                "row",
                format!("expected 3 fields, found {}", rec.len()),
            ));
        }
        let u = field(&rec, 1, "u", line)?;
        if u < 0.0 {
            return Err(CliError::NegativeUncertainty { line, value: u });
        }
        x.push(field(&rec, 0, "X", line)?);
        dv.push(u * u);
        y.push(field(&rec, 2, "Y", line)?);
    }
    Ok(FirstStage::new(x, y, dv)?)
}

pub fn parse_second_stage(bytes: &[u8]) -> Result<SecondStage, CliError> {
    let mut rdr = reader(bytes);
    check_header(&mut rdr, &["Y0"])?;
    let mut y0 = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_error(i as u64 + 2, "row", e.to_string()))?;
        let line = record_line(&rec, i as u64 + 2);
        if rec.len() != 1 {
            return Err(parse_error(
                line,
                "row",
                format!("expected 1 field, found {}", rec.len()),
            ));
        }
        y0.push(field(&rec, 0, "Y0", line)?);
    }
    Ok(SecondStage::new(y0)?)
}

/// Standards as `X,u,Y` with shortest round-trip float formatting.
pub fn write_first_stage(first: &FirstStage) -> String {
    let mut out = String::from("X,u,Y\n");
    for ((x, d), y) in first.x_fixed().iter().zip(first.delta_var()).zip(first.y()) {
        out.push_str(&format!("{},{},{}\n", x, d.sqrt(), y));
    }
    out
}

pub fn write_second_stage(second: &SecondStage) -> String {
    let mut out = String::from("Y0\n");
    for y in second.y0() {
        out.push_str(&format!("{y}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHROMIUM: &str = "X,u,Y\n0.05,0.00016,6455.900\n0.11,0.00027,13042.933\n0.26,0.00040,32621.733\n0.79,0.00122,97364.500\n1.05,0.00161,129178.100\n";

    #[test]
    fn chromium_standards() {
        let f = parse_first_stage(CHROMIUM.as_bytes()).unwrap();
        assert_eq!(f.n(), 5);
        assert!((f.delta_var()[0] - 2.56e-08).abs() < 1e-22);
        assert_eq!(f.x_fixed()[4], 1.05);
        assert_eq!(f.y()[1], 13042.933);
    }

    #[test]
    fn header_only_is_too_few_standards() {
        let err = parse_first_stage(b"X,u,Y\n").unwrap_err();
        assert!(matches!(err, CliError::Data(ccal_core::Error::TooFewStandards(0))));
    }

    #[test]
    fn zero_uncertainties_are_valid() {
        let f = parse_first_stage(b"X,u,Y\n0,0,1\n1,0,3\n2,0,5").unwrap();
        assert!(f.is_exact());
    }

    #[test]
    fn errors_carry_position() {
        match parse_first_stage(b"X,u,Y\n0,0,1\n1,abc,3\n2,0,5\n").unwrap_err() {
            CliError::Parse { line, column, .. } => assert_eq!((line, column.as_str()), (3, "u")),
            e => panic!("{e}"),
        }
        assert!(matches!(
            parse_first_stage(b"X,u,Y\n0,0,1\n1,-0.1,3\n2,0,5\n").unwrap_err(),
            CliError::NegativeUncertainty { line: 3, .. }
        ));
        assert!(matches!(
            parse_first_stage(b"X,Y,u\n0,0,1\n").unwrap_err(),
            CliError::Parse { line: 1, .. }
        ));
        assert!(matches!(
            parse_first_stage(b"X,u,Y\n0,0\n").unwrap_err(),
            CliError::Parse { .. }
        ));
    }

    #[test]
    fn sample_files() {
        let s = parse_second_stage(b"Y0\n10173.6\n10516.9\n10352.2\n").unwrap();
        assert_eq!(s.y0(), &[10173.6, 10516.9, 10352.2]);
        assert_eq!(parse_second_stage(b"Y0\n1\n2").unwrap().k(), 2);
        assert!(matches!(
            parse_second_stage(b"").unwrap_err(),
            CliError::Parse { .. } | CliError::Data(ccal_core::Error::TooFewReplicates(0))
        ));
        assert!(matches!(
            parse_second_stage(b"Y0\n").unwrap_err(),
            CliError::Data(ccal_core::Error::TooFewReplicates(0))
        ));
    }

    #[test]
    fn crlf_and_whitespace_are_tolerated() {
        let s = parse_second_stage(b"Y0\r\n 1.5 \r\n2.5\r\n").unwrap();
        assert_eq!(s.y0(), &[1.5, 2.5]);
    }
}
