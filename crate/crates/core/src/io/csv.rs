//! CSV tables with fixed 9-significant-digit formatting.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::metrics::{ForcePolytope, InertiaTensorResult, SweepTable};

pub const SWEEP_HEADER: [&str; 5] = ["eta_f", "eta_b", "fc_fwd_norm", "fc_bwd_norm", "imf"];

/// `%.9g`: nine significant digits, trailing zeros removed, `inf`/`nan`
/// spelled out.
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (8 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn sweep_csv(table: &SweepTable) -> Result<String> {
    let mut w = writer();
    w.write_record(SWEEP_HEADER).map_err(io)?;
    for r in &table.rows {
        w.write_record(
            [r.eta_f, r.eta_b, r.fc_fwd_norm, r.fc_bwd_norm, r.imf].map(format_sig9),
        )
        .map_err(io)?;
    }
    finish(w)
}

/// `variant,t11,t12,...` with row-major tensor entries.
pub fn git_csv(results: &[InertiaTensorResult]) -> Result<String> {
    let n = results.first().map_or(2, |r| r.tensor.nrows());
    let mut w = writer();
    let mut header = vec!["variant".to_string()];
    for i in 1..=n {
        for j in 1..=n {
            header.push(format!("t{i}{j}"));
        }
    }
    w.write_record(&header).map_err(io)?;
    for r in results {
        if r.tensor.nrows() != n || r.tensor.ncols() != n {
            return Err(Error::DimensionMismatch("tensors of different sizes".into()));
        }
        let mut rec = vec![r.variant.to_string()];
        for i in 0..n {
            for j in 0..n {
                rec.push(format_sig9(r.tensor[(i, j)]));
            }
        }
        w.write_record(&rec).map_err(io)?;
    }
    finish(w)
}

/// `variant,index,fx,fz` with hull vertices in counter-clockwise order.
pub fn fc_csv(polytopes: &[ForcePolytope]) -> Result<String> {
    let mut w = writer();
    w.write_record(["variant", "index", "fx", "fz"]).map_err(io)?;
    for p in polytopes {
        if p.dim != 2 {
            return Err(Error::DimensionMismatch("fc.csv holds planar polytopes".into()));
        }
        for (k, v) in p.vertices.iter().enumerate() {
            w.write_record([
                p.variant.to_string(),
                k.to_string(),
                format_sig9(v[0]),
                format_sig9(v[1]),
            ])
            .map_err(io)?;
        }
    }
    finish(w)
}

/// Piecewise-constant input signal read from `t,v1,...,vk` rows. A first row
/// that does not parse as numbers is taken as a header.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    times: Vec<f64>,
    values: Vec<DVector<f64>>,
}

impl Series {
    pub fn parse(text: &str, width: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::InvalidParameter(format!("input series: {e}")))?;
            let line = rec.position().map_or(k + 1, |p| p.line() as usize);
            let nums: std::result::Result<Vec<f64>, _> =
                rec.iter().map(str::parse::<f64>).collect();
            let nums = match nums {
                Ok(n) => n,
                Err(_) if k == 0 => continue,
                Err(_) => {
                    return Err(Error::InvalidParameter(format!(
                        "input series line {line}: non-numeric field"
                    )))
                }
            };
            if nums.len() != width + 1 {
                return Err(Error::InvalidParameter(format!(
                    "input series line {line}: expected time and {width} values"
                )));
            }
            if let Some(&last) = times.last() {
                if nums[0] <= last {
                    return Err(Error::InvalidParameter(format!(
                        "input series line {line}: times must increase"
                    )));
                }
            }
            times.push(nums[0]);
            values.push(DVector::from_column_slice(&nums[1..]));
        }
        if times.is_empty() {
            return Err(Error::InvalidParameter("input series is empty".into()));
        }
        Ok(Series { times, values })
    }

    pub fn constant(value: DVector<f64>) -> Self {
        Series {
            times: vec![0.0],
            values: vec![value],
        }
    }

    /// Value of the last row at or before `t`; the first row before it.
    pub fn at(&self, t: f64) -> DVector<f64> {
        let i = self.times.partition_point(|&s| s <= t);
        self.values[i.saturating_sub(1)].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{MetricVariant, SweepRow};
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn sig9() {
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.8), "0.8");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(-2.0 / 3.0 * 100.0), "-66.6666667");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1234567894.0), "1.23456789e+09");
        assert_eq!(format_sig9(6.6666667e-5), "6.6666667e-05");
        assert_eq!(format_sig9(0.00012), "0.00012");
        assert_eq!(format_sig9(f64::INFINITY), "inf");
        assert_eq!(format_sig9(f64::NAN), "nan");
        assert_eq!(format_sig9(-0.0), "0");
        assert_eq!(format_sig9(0.9999999999), "1");
    }

    #[test]
    fn sweep_layout() {
        let table = SweepTable {
            rows: vec![SweepRow {
                eta_f: 0.5,
                eta_b: 0.0,
                fc_fwd_norm: 0.5,
                fc_bwd_norm: f64::INFINITY,
                imf: 0.0,
            }],
            approximate_map: true,
        };
        assert_eq!(
            sweep_csv(&table).unwrap(),
            "eta_f,eta_b,fc_fwd_norm,fc_bwd_norm,imf\n0.5,0,0.5,inf,0\n"
        );
    }

    #[test]
    fn git_layout() {
        let t = dmatrix![1.0, 2.0; 3.0, 4.0];
        let r = InertiaTensorResult {
            symmetric_part: t.clone(),
            tensor: t,
            variant: MetricVariant::Forward,
            reading: None,
        };
        assert_eq!(git_csv(&[r]).unwrap(), "variant,t11,t12,t21,t22\nforward,1,2,3,4\n");
    }

    #[test]
    fn series_hold() {
        let s = Series::parse("t,tau1,tau2\n0,1,2\n0.5,3,4\n", 2).unwrap();
        assert_eq!(s.at(0.2), dvector![1.0, 2.0]);
        assert_eq!(s.at(0.5), dvector![3.0, 4.0]);
        assert_eq!(s.at(-1.0), dvector![1.0, 2.0]);
        assert!(Series::parse("0,1\n", 2).is_err());
        assert!(Series::parse("0,1,2\n0,1,2\n", 2).is_err());
    }
}
