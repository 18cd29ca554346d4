//! CSV and JSON readers and writers. CSV files are UTF-8, comma separated,
//! with `#`-prefixed metadata lines before the header row. Floats are
//! written in shortest round-trip form so reruns are byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::collapse::Curve;
use crate::dynamics::{Axis, Observable, ObservableSeries};
use crate::error::{Error, Result};
use crate::interaction::InteractionMatrix;
use crate::stats::ShotSet;

fn reader(text: &str, has_headers: bool) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(has_headers)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

/// `key=value` pairs from the `#` lines of a file.
pub fn read_metadata(text: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for line in text.lines().filter_map(|l| l.strip_prefix('#')) {
        for tok in line.split_whitespace() {
            if let Some((k, v)) = tok.split_once('=') {
                out.insert(k.to_string(), v.to_string());
            }
        }
    }
    out
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::invalid(format!("cannot parse {what} '{s}'")))
}

fn metadata_block(meta: &[(&str, String)]) -> String {
    meta.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

pub fn matrix_to_csv(j: &InteractionMatrix) -> String {
    let mut s = format!("# N={} kac={:?}\n", j.n(), j.kac());
    for row in j.matrix().row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn matrix_from_csv(text: &str) -> Result<InteractionMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader(text, false).records() {
        let rec = rec?;
        rows.push(rec.iter().map(|c| parse_f64(c, "matrix entry")).collect::<Result<_>>()?);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::invalid(format!("matrix CSV must be square, got {n} rows")));
    }
    InteractionMatrix::new(DMatrix::from_fn(n, n, |a, b| rows[a][b]))
}

pub fn read_matrix(path: &Path) -> Result<InteractionMatrix> {
    matrix_from_csv(&fs::read_to_string(path)?)
}

/// Columns t, value, stderr, N, label; stderr is empty when absent.
pub fn series_to_csv(series: &[&ObservableSeries], meta: &[(&str, String)]) -> String {
    let mut s = metadata_block(meta);
    s.push_str("t,value,stderr,N,label\n");
    for ser in series {
        for i in 0..ser.len() {
            let e = ser.stderr.as_ref().map_or(String::new(), |e| format!("{:?}", e[i]));
            s.push_str(&format!("{:?},{:?},{},{},{}\n", ser.times[i], ser.values[i], e, ser.n, ser.label.label()));
        }
    }
    s
}

/// Groups rows by (N, label) in order of first appearance. The Kac factor
/// comes from a `kac=` metadata entry and defaults to 1.
pub fn series_from_csv(text: &str) -> Result<Vec<ObservableSeries>> {
    let kac = match read_metadata(text).get("kac") {
        Some(v) => parse_f64(v, "kac")?,
        None => 1.0,
    };
    let mut order: Vec<(usize, String)> = Vec::new();
    let mut cols: BTreeMap<(usize, String), (Vec<f64>, Vec<f64>, Vec<Option<f64>>)> = BTreeMap::new();
    let mut rdr = reader(text, true);
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 5 {
            return Err(Error::invalid("series CSV rows need t,value,stderr,N,label"));
        }
        let n: usize = rec[3].parse().map_err(|_| Error::invalid(format!("bad N '{}'", &rec[3])))?;
        let key = (n, rec[4].to_string());
        let entry = cols.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Default::default()
        });
        entry.0.push(parse_f64(&rec[0], "time")?);
        entry.1.push(parse_f64(&rec[1], "value")?);
        entry.2.push(if rec[2].is_empty() { None } else { Some(parse_f64(&rec[2], "stderr")?) });
    }
    order
        .into_iter()
        .map(|key| {
            let (t, v, e) = cols.remove(&key).unwrap();
            let mut s = ObservableSeries::new(Observable::from_label(&key.1)?, key.0, kac, t, v)?;
            if e.iter().all(Option::is_some) {
                s.stderr = Some(e.into_iter().flatten().collect());
            } else if e.iter().any(Option::is_some) {
                return Err(Error::invalid("stderr column partially filled"));
            }
            s.validate()?;
            Ok(s)
        })
        .collect()
}

pub fn read_series(path: &Path) -> Result<Vec<ObservableSeries>> {
    series_from_csv(&fs::read_to_string(path)?)
}

pub fn curve_to_csv(curve: &Curve, meta: &[(&str, String)]) -> String {
    let mut s = metadata_block(meta);
    s.push_str("x,y,dx,dy\n");
    for p in curve.points() {
        s.push_str(&format!("{:?},{:?},{:?},{:?}\n", p.x, p.y, p.dx, p.dy));
    }
    s
}

/// One row per repetition, one 0/1 column per ion. `axis=` and `time=`
/// metadata are picked up when present.
pub fn shots_from_csv(text: &str) -> Result<ShotSet> {
    let meta = read_metadata(text);
    let axis = match meta.get("axis").map(String::as_str) {
        None => None,
        Some("x") => Some(Axis::X),
        Some("y") => Some(Axis::Y),
        Some("z") => Some(Axis::Z),
        Some(other) => return Err(Error::invalid(format!("unknown axis '{other}'"))),
    };
    let time = meta.get("time").map(|t| parse_f64(t, "time")).transpose()?;
    let mut rows = Vec::new();
    for rec in reader(text, false).records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|c| match c {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(Error::invalid(format!("shot entry '{other}' is not 0 or 1"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        rows.push(row);
    }
    ShotSet::from_rows(&rows, axis, time)
}

pub fn shots_to_csv(shots: &ShotSet) -> String {
    let mut s = String::new();
    if let Some(a) = shots.axis {
        s.push_str(&format!("# axis={}\n", axis_label(a)));
    }
    if let Some(t) = shots.time {
        s.push_str(&format!("# time={t:?}\n"));
    }
    for row in shots.rows() {
        let cells: Vec<&str> = row.iter().map(|&b| if b == 1 { "1" } else { "0" }).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn read_shots(path: &Path) -> Result<ShotSet> {
    shots_from_csv(&fs::read_to_string(path)?)
}

pub fn axis_label(a: Axis) -> &'static str {
    match a {
        Axis::X => "x",
        Axis::Y => "y",
        Axis::Z => "z",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{synthetic_jij, Boundary};

    #[test]
    fn matrix_round_trip() {
        let j = synthetic_jij(5, 0.9, Boundary::Open, 1.3).unwrap();
        let text = matrix_to_csv(&j);
        assert!(text.starts_with("# N=5 kac="));
        assert_eq!(matrix_from_csv(&text).unwrap(), j);
        assert!(matrix_from_csv("1,2\n3\n").is_err());
    }

    #[test]
    fn series_round_trip_with_groups() {
        let mut a = ObservableSeries::new(Observable::Cx2, 4, 2.5, vec![0.0, 0.1], vec![1.0, 1.5]).unwrap();
        a.stderr = Some(vec![0.01, 0.02]);
        let b = ObservableSeries::new(Observable::Cx2, 8, 2.5, vec![0.0, 0.1, 0.3], vec![2.0, 2.5, 1.0]).unwrap();
        let text = series_to_csv(&[&a, &b], &[("kac", "2.5".into())]);
        let back = series_from_csv(&text).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn shots_parse() {
        let s = shots_from_csv("# axis=x time=1.5\n0,1,1\n1,1,0\n").unwrap();
        assert_eq!((s.n(), s.repetitions(), s.axis, s.time), (3, 2, Some(Axis::X), Some(1.5)));
        assert_eq!(shots_from_csv(&shots_to_csv(&s)).unwrap(), s);
        assert!(shots_from_csv("0,2\n1,1\n").is_err());
    }
}
