//! CSV output with a fixed column order and 9-significant-digit numbers.

use std::io::Write;

use crate::error::{Error, Result};

/// Formats like C's `%.9g`: nine significant digits, trailing zeros dropped,
/// scientific notation outside `[1e-4, 1e9)`.
pub fn format_sig9(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A row type with a stable header.
pub trait CsvRecord {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// Writes a header row and one record per row.
pub fn write_csv<W: Write, R: CsvRecord>(out: W, rows: &[R]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    writer.write_record(R::header()).map_err(io)?;
    for row in rows {
        writer.write_record(row.fields()).map_err(io)?;
    }
    writer.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

pub fn to_csv_string<R: CsvRecord>(rows: &[R]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (1.0, "1"),
            (0.5, "0.5"),
            (1.34, "1.34"),
            (100.092954992503, "100.092955"),
            (1.0 / 3.0, "0.333333333"),
            (-2.5e-7, "-2.5e-07"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001, "1e-05"),
            (9.9999999999, "10"),
            (f64::INFINITY, "inf"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig9(x), want, "{x}");
        }
    }

    struct Row(u32, f64);

    impl CsvRecord for Row {
        fn header() -> &'static [&'static str] {
            &["k", "value"]
        }
        fn fields(&self) -> Vec<String> {
            vec![self.0.to_string(), format_sig9(self.1)]
        }
    }

    #[test]
    fn writes_header_and_rows() {
        let s = to_csv_string(&[Row(1, 0.25), Row(2, 3.0)]).unwrap();
        assert_eq!(s, "k,value\n1,0.25\n2,3\n");
    }
}
