//! CSV and JSON output with fixed headers and lossless float rendering.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::studies::{AnalyticRecord, MinRatioRecord, PlateRecord, SweepRecord};

pub const ANALYTIC_HEADER: [&str; 7] = ["d", "chi", "alpha", "M", "K", "lambda", "dt_crit"];
pub const SWEEP_HEADER: [&str; 6] = ["d", "p", "alpha", "chi", "lambda_max", "dt_crit"];
pub const MIN_RATIO_HEADER: [&str; 6] = ["d", "p", "alpha", "dt_min", "dt_full_c", "ratio"];
pub const PLATE_HEADER: [&str; 12] = [
    "config",
    "dx",
    "dy",
    "p",
    "k",
    "dt_element",
    "dt_global",
    "dt_full_c",
    "dt_full_l",
    "dt_cfl_fc",
    "element_ok",
    "global_ok",
];

/// Seventeen significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Rows that map to one CSV line each.
pub trait CsvRecord: Sized {
    const HEADER: &'static [&'static str];
    fn to_fields(&self) -> Vec<String>;
    fn from_fields(fields: &csv::StringRecord) -> Result<Self>;
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = rec
        .get(i)
        .ok_or_else(|| Error::Parse(format!("missing column {name}")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad value {raw:?} in column {name}")))
}

impl CsvRecord for AnalyticRecord {
    const HEADER: &'static [&'static str] = &ANALYTIC_HEADER;

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.d.to_string(),
            format_float(self.chi),
            format_float(self.alpha),
            format_float(self.mass),
            format_float(self.stiffness),
            format_float(self.lambda),
            format_float(self.dt_crit),
        ]
    }

    fn from_fields(r: &csv::StringRecord) -> Result<Self> {
        Ok(Self {
            d: field(r, 0, "d")?,
            chi: field(r, 1, "chi")?,
            alpha: field(r, 2, "alpha")?,
            mass: field(r, 3, "M")?,
            stiffness: field(r, 4, "K")?,
            lambda: field(r, 5, "lambda")?,
            dt_crit: field(r, 6, "dt_crit")?,
        })
    }
}

impl CsvRecord for SweepRecord {
    const HEADER: &'static [&'static str] = &SWEEP_HEADER;

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.d.to_string(),
            self.p.to_string(),
            format_float(self.alpha),
            format_float(self.chi),
            format_float(self.lambda_max),
            format_float(self.dt_crit),
        ]
    }

    fn from_fields(r: &csv::StringRecord) -> Result<Self> {
        Ok(Self {
            d: field(r, 0, "d")?,
            p: field(r, 1, "p")?,
            alpha: field(r, 2, "alpha")?,
            chi: field(r, 3, "chi")?,
            lambda_max: field(r, 4, "lambda_max")?,
            dt_crit: field(r, 5, "dt_crit")?,
        })
    }
}

impl CsvRecord for MinRatioRecord {
    const HEADER: &'static [&'static str] = &MIN_RATIO_HEADER;

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.d.to_string(),
            self.p.to_string(),
            format_float(self.alpha),
            format_float(self.dt_min),
            format_float(self.dt_full_c),
            format_float(self.ratio),
        ]
    }

    fn from_fields(r: &csv::StringRecord) -> Result<Self> {
        Ok(Self {
            d: field(r, 0, "d")?,
            p: field(r, 1, "p")?,
            alpha: field(r, 2, "alpha")?,
            dt_min: field(r, 3, "dt_min")?,
            dt_full_c: field(r, 4, "dt_full_c")?,
            ratio: field(r, 5, "ratio")?,
        })
    }
}

impl CsvRecord for PlateRecord {
    const HEADER: &'static [&'static str] = &PLATE_HEADER;

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.config.to_string(),
            format_float(self.dx),
            format_float(self.dy),
            self.p.to_string(),
            self.k.to_string(),
            format_float(self.dt_element),
            format_float(self.dt_global),
            format_float(self.dt_full_c),
            format_float(self.dt_full_l),
            format_float(self.dt_cfl_fc),
            self.element_ok.to_string(),
            self.global_ok.to_string(),
        ]
    }

    fn from_fields(r: &csv::StringRecord) -> Result<Self> {
        Ok(Self {
            config: field(r, 0, "config")?,
            dx: field(r, 1, "dx")?,
            dy: field(r, 2, "dy")?,
            p: field(r, 3, "p")?,
            k: field(r, 4, "k")?,
            dt_element: field(r, 5, "dt_element")?,
            dt_global: field(r, 6, "dt_global")?,
            dt_full_c: field(r, 7, "dt_full_c")?,
            dt_full_l: field(r, 8, "dt_full_l")?,
            dt_cfl_fc: field(r, 9, "dt_cfl_fc")?,
            element_ok: field(r, 10, "element_ok")?,
            global_ok: field(r, 11, "global_ok")?,
        })
    }
}

pub fn write_csv<R: CsvRecord, W: Write>(out: W, records: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::HEADER)?;
    for r in records {
        w.write_record(r.to_fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Parses records, rejecting a header that differs from the schema.
pub fn read_csv<R: CsvRecord, In: Read>(input: In) -> Result<Vec<R>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(R::HEADER.iter().copied()) {
        return Err(Error::Parse(format!(
            "expected header {}, found {}",
            R::HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rdr.records().map(|rec| R::from_fields(&rec?)).collect()
}

pub fn write_csv_file<R: CsvRecord>(path: &Path, records: &[R]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::fs::File::create(path)?;
    write_csv(std::io::BufWriter::new(file), records)
}

pub fn read_csv_file<R: CsvRecord>(path: &Path) -> Result<Vec<R>> {
    read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_json_file<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn float_rendering() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(3.0), "3.0000000000000000e0");
        let x = 2.0 / 12f64.sqrt();
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let text = "d,chi,alpha,M,K,lambda\n1,1,1,1,1,1\n";
        assert!(read_csv::<AnalyticRecord, _>(text.as_bytes()).is_err());
        let text = "d,p,alpha,chi,lambda_max,dt_crit\n1,x,1,1,1,1\n";
        assert!(read_csv::<SweepRecord, _>(text.as_bytes()).is_err());
    }

    #[test]
    fn plate_header_text() {
        let mut buf = Vec::new();
        write_csv::<PlateRecord, _>(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "config,dx,dy,p,k,dt_element,dt_global,dt_full_c,dt_full_l,dt_cfl_fc,element_ok,global_ok\n"
        );
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            any::<f64>().prop_filter("finite", |x| x.is_finite()),
            1e-300f64..1e300,
        ]
    }

    proptest! {
        #[test]
        fn analytic_round_trip(d in 1usize..6, v in proptest::collection::vec(finite(), 6)) {
            let rec = AnalyticRecord { d, chi: v[0], alpha: v[1], mass: v[2], stiffness: v[3], lambda: v[4], dt_crit: v[5] };
            let mut buf = Vec::new();
            write_csv(&mut buf, &[rec]).unwrap();
            let back: Vec<AnalyticRecord> = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, vec![rec]);
        }

        #[test]
        fn sweep_round_trip(d in 1usize..4, p in 1usize..11, v in proptest::collection::vec(finite(), 4)) {
            let rec = SweepRecord { d, p, alpha: v[0], chi: v[1], lambda_max: v[2], dt_crit: v[3] };
            let mut buf = Vec::new();
            write_csv(&mut buf, &[rec, rec]).unwrap();
            let back: Vec<SweepRecord> = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, vec![rec, rec]);
        }

        #[test]
        fn min_ratio_round_trip(d in 1usize..4, p in 1usize..11, v in proptest::collection::vec(finite(), 4)) {
            let rec = MinRatioRecord { d, p, alpha: v[0], dt_min: v[1], dt_full_c: v[2], ratio: v[3] };
            let mut buf = Vec::new();
            write_csv(&mut buf, &[rec]).unwrap();
            let back: Vec<MinRatioRecord> = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, vec![rec]);
        }

        #[test]
        fn plate_round_trip(
            config in 1usize..751,
            p in 1usize..11,
            k in 0usize..9,
            v in proptest::collection::vec(finite(), 7),
            flags in any::<(bool, bool)>(),
        ) {
            let rec = PlateRecord {
                config, dx: v[0], dy: v[1], p, k,
                dt_element: v[2], dt_global: v[3], dt_full_c: v[4], dt_full_l: v[5], dt_cfl_fc: v[6],
                element_ok: flags.0, global_ok: flags.1,
            };
            let mut buf = Vec::new();
            write_csv(&mut buf, &[rec]).unwrap();
            let back: Vec<PlateRecord> = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, vec![rec]);
        }
    }
}
