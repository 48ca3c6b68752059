//! Time series and their two-column CSV form.
//!
//! ```text
//! # chi0_khz=27.78
//! # kind=population
//! time_s,value
//! 0,0
//! 1e-6,0.0075...
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimedTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Free-form `key=value` metadata carried in the CSV comment header.
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl TimedTrace {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let t = TimedTrace {
            times,
            values,
            params: BTreeMap::new(),
        };
        t.validate()?;
        Ok(t)
    }

    pub(crate) fn from_parts_unchecked(times: Vec<f64>, values: Vec<f64>) -> Self {
        TimedTrace {
            times,
            values,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::invalid(format!(
                "trace has {} times but {} values",
                self.times.len(),
                self.values.len()
            )));
        }
        crate::error::ensure_finite("trace times", &self.times)?;
        crate::error::ensure_finite("trace values", &self.values)?;
        if let Some(&t0) = self.times.first() {
            if t0 < 0.0 {
                return Err(Error::invalid("trace starts before t = 0"));
            }
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("trace times must be strictly increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Value at the sample closest to `t`.
    pub fn value_near(&self, t: f64) -> Option<f64> {
        let i = self.times.partition_point(|&x| x < t);
        let candidates = [i.checked_sub(1), Some(i)];
        candidates
            .into_iter()
            .flatten()
            .filter(|&j| j < self.times.len())
            .min_by(|&a, &b| {
                (self.times[a] - t)
                    .abs()
                    .total_cmp(&(self.times[b] - t).abs())
            })
            .map(|j| self.values[j])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        for (k, v) in &self.params {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_s", "value"])?;
        for (t, v) in self.times.iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut params = BTreeMap::new();
        for line in text.lines().filter(|l| l.starts_with('#')) {
            if let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') {
                params.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::invalid(format!(
                    "row {}: expected 2 columns, found {}",
                    i + 1,
                    rec.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::invalid(format!("row {}: `{s}`: {e}", i + 1)))
            };
            times.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        let trace = TimedTrace {
            times,
            values,
            params,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_traces() {
        assert!(TimedTrace::new(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(TimedTrace::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(TimedTrace::new(vec![-1.0], vec![0.0]).is_err());
        assert!(TimedTrace::read_csv("time_s,value\n0,1,2\n".as_bytes()).is_err());
        assert!(TimedTrace::read_csv("time_s,value\n0,abc\n".as_bytes()).is_err());
    }

    #[test]
    fn header_params() {
        let t = TimedTrace::new(vec![0.0, 1e-6], vec![0.0, 0.25])
            .unwrap()
            .with_param("chi0_khz", 27.78)
            .with_param("kind", "population");
        let s = t.to_csv_string();
        assert!(s.starts_with("# chi0_khz=27.78\n# kind=population\ntime_s,value\n"));
        let back = TimedTrace::read_csv(s.as_bytes()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn nearest_sample() {
        let t = TimedTrace::new(vec![0.0, 1.0, 2.0], vec![10.0, 11.0, 12.0]).unwrap();
        assert_eq!(t.value_near(1.4), Some(11.0));
        assert_eq!(t.value_near(1.6), Some(12.0));
        assert_eq!(t.value_near(-3.0), Some(10.0));
        assert_eq!(t.value_near(9.0), Some(12.0));
    }

    proptest! {
        #[test]
        fn csv_round_trip(values in proptest::collection::vec(-1e3..1e3f64, 1..50), dt in 1e-9..1e-3f64) {
            let times: Vec<f64> = (0..values.len()).map(|i| i as f64 * dt).collect();
            let t = TimedTrace::new(times, values).unwrap();
            let back = TimedTrace::read_csv(t.to_csv_string().as_bytes()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
