//! Input vectors and sweep CSV files.
//!
//! Sweep files start with one `# sumbound <version>` comment line, then a
//! header row, then one row per `(n, trial)`. Floats are written in
//! shortest round-trip scientific notation, so reading a file back
//! reproduces every row exactly.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::experiments::{Distribution, RowFlags, SweepRow};

pub const SWEEP_HEADER: [&str; 16] = [
    "n",
    "trial",
    "precision",
    "distribution",
    "delta",
    "seed",
    "det_variant",
    "true_rel_err",
    "det_bound",
    "azuma_bound",
    "martingale_bound",
    "z_n",
    "sum_abs_x",
    "time_c_path_ns",
    "time_m_path_ns",
    "flags",
];

/// Marker in the distribution column for rows computed from supplied data.
pub const FILE_DISTRIBUTION: &str = "file";

/// One finite number per line. Blank lines and `#` comments are skipped.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let value: f64 = line.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("not a number: {line:?}"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("non-finite value {line:?}"),
            });
        }
        out.push(value);
    }
    Ok(out)
}

fn float_field(x: f64) -> String {
    format!("{x:e}")
}

fn to_record(row: &SweepRow) -> [String; 16] {
    [
        row.n.to_string(),
        row.trial.to_string(),
        row.precision.to_string(),
        row.distribution
            .map_or_else(|| FILE_DISTRIBUTION.to_string(), |d| d.to_string()),
        float_field(row.delta),
        row.seed.to_string(),
        row.det_variant.to_string(),
        float_field(row.true_rel_err),
        float_field(row.det_bound),
        float_field(row.azuma_bound),
        float_field(row.martingale_bound),
        float_field(row.z_n),
        float_field(row.sum_abs_x),
        row.time_c_path_ns.to_string(),
        row.time_m_path_ns.to_string(),
        row.flags.to_string(),
    ]
}

pub fn write_sweep_csv<W: Write>(mut writer: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(writer, "# sumbound {}", env!("CARGO_PKG_VERSION"))?;
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(SWEEP_HEADER)?;
    for row in rows {
        csv.write_record(to_record(row))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn sweep_csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing column {}", SWEEP_HEADER[i]),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {} value {raw:?}", SWEEP_HEADER[i]),
    })
}

fn from_record(rec: &csv::StringRecord, line: usize) -> Result<SweepRow> {
    if rec.len() != SWEEP_HEADER.len() {
        return Err(Error::Parse {
            line,
            message: format!(
                "expected {} columns, found {}",
                SWEEP_HEADER.len(),
                rec.len()
            ),
        });
    }
    let distribution = match &rec[3] {
        FILE_DISTRIBUTION => None,
        _ => Some(field::<Distribution>(rec, 3, line)?),
    };
    let flags = rec[15].parse::<RowFlags>().map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })?;
    Ok(SweepRow {
        n: field(rec, 0, line)?,
        trial: field(rec, 1, line)?,
        precision: field(rec, 2, line)?,
        distribution,
        delta: field(rec, 4, line)?,
        seed: field(rec, 5, line)?,
        det_variant: field(rec, 6, line)?,
        true_rel_err: field(rec, 7, line)?,
        det_bound: field(rec, 8, line)?,
        azuma_bound: field(rec, 9, line)?,
        martingale_bound: field(rec, 10, line)?,
        z_n: field(rec, 11, line)?,
        sum_abs_x: field(rec, 12, line)?,
        time_c_path_ns: field(rec, 13, line)?,
        time_m_path_ns: field(rec, 14, line)?,
        flags,
    })
}

/// Reads a file produced by [`write_sweep_csv`]. `#` lines are ignored.
pub fn read_sweep_csv<R: Read>(reader: R) -> Result<Vec<SweepRow>> {
    let mut csv = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(reader);
    let header = csv.headers()?.clone();
    if header.iter().ne(SWEEP_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: "unexpected sweep header".into(),
        });
    }
    let mut rows = Vec::new();
    for rec in csv.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push(from_record(&rec, line)?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::DetVariant;
    use crate::precision::FloatFormat;

    fn row() -> SweepRow {
        SweepRow {
            n: 100,
            trial: 2,
            precision: FloatFormat::Half,
            distribution: Some(Distribution::Uniform),
            delta: 1e-16,
            seed: 123,
            det_variant: DetVariant::Graphs,
            true_rel_err: 1.2345678901234567e-4,
            det_bound: 0.1,
            azuma_bound: f64::NAN,
            martingale_bound: 3.0e-300,
            z_n: -0.0,
            sum_abs_x: 5e-324,
            time_c_path_ns: 17,
            time_m_path_ns: 0,
            flags: RowFlags {
                subnormal: true,
                ..RowFlags::default()
            },
        }
    }

    fn same(a: &SweepRow, b: &SweepRow) -> bool {
        format!("{a:?}") == format!("{b:?}")
    }

    #[test]
    fn vector_parsing() {
        let v = parse_vector("# header\n1.5\n\n  -2e-3  # trailing\n0x\n").unwrap_err();
        assert!(matches!(v, Error::Parse { line: 5, .. }));
        assert_eq!(
            parse_vector("1\n2\n# c\n3.25\n").unwrap(),
            vec![1.0, 2.0, 3.25]
        );
        assert!(parse_vector("inf\n").is_err());
        assert!(parse_vector("NaN\n").is_err());
        assert!(parse_vector("").unwrap().is_empty());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut other = row();
        other.distribution = None;
        other.flags = RowFlags::default();
        let rows = vec![row(), other];
        let text = sweep_csv_string(&rows).unwrap();
        assert!(text.starts_with("# sumbound "));
        let back = read_sweep_csv(text.as_bytes()).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in rows.iter().zip(&back) {
            assert!(same(a, b), "{a:?} != {b:?}");
        }
        assert!(text.contains(",file,"));
    }

    #[test]
    fn rejects_bad_header_and_rows() {
        assert!(read_sweep_csv("a,b\n1,2\n".as_bytes()).is_err());
        let mut text = sweep_csv_string(&[row()]).unwrap();
        text.push_str("1,2,3\n");
        assert!(read_sweep_csv(text.as_bytes()).is_err());
    }
}
