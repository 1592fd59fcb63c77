//! JSON documents for realizations and CSV for signals.
//!
//! Matrices are row-major nested arrays of `[re, im]` pairs so that real and
//! complex systems share one format.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::Signal;
use super::realization::{Realization, SpaceLabels};
use crate::error::{Error, Result};
use crate::linalg::Scalar;

pub type ComplexRows = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RealizationDoc {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    #[serde(rename = "A")]
    pub a: ComplexRows,
    #[serde(rename = "B")]
    pub b: ComplexRows,
    #[serde(rename = "C")]
    pub c: ComplexRows,
    #[serde(rename = "D")]
    pub d: ComplexRows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<SpaceLabels>,
}

pub fn matrix_to_rows<T: Scalar>(m: &DMatrix<T>) -> ComplexRows {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| {
                    let z = m[(i, j)].to_c64();
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

pub fn rows_to_matrix<T: Scalar>(
    rows: &ComplexRows,
    nrows: usize,
    ncols: usize,
    what: &'static str,
) -> Result<DMatrix<T>> {
    if rows.len() != nrows {
        return Err(Error::dim(what, format!("{nrows} rows"), rows.len()));
    }
    let mut out = DMatrix::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::dim(what, format!("{ncols} columns"), row.len()));
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            out[(i, j)] = T::from_c64(Complex64::new(re, im))
                .ok_or_else(|| Error::param(format!("{what}: complex entry in a real matrix")))?;
        }
    }
    Ok(out)
}

impl RealizationDoc {
    pub fn from_realization<T: Scalar>(r: &Realization<T>) -> Self {
        RealizationDoc {
            n: r.n(),
            m: r.m(),
            p: r.p(),
            a: matrix_to_rows(r.a()),
            b: matrix_to_rows(r.b()),
            c: matrix_to_rows(r.c()),
            d: matrix_to_rows(r.d()),
            labels: Some(r.labels().clone()),
        }
    }

    pub fn to_realization<T: Scalar>(&self) -> Result<Realization<T>> {
        let (n, m, p) = (self.n, self.m, self.p);
        let r = Realization::new(
            rows_to_matrix(&self.a, n, n, "A")?,
            rows_to_matrix(&self.b, n, m, "B")?,
            rows_to_matrix(&self.c, p, n, "C")?,
            rows_to_matrix(&self.d, p, m, "D")?,
        )?;
        Ok(match &self.labels {
            Some(l) => r.with_labels(l.clone()),
            None => r,
        })
    }

    /// True when every entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .all(|m| m.iter().flatten().all(|z| z[1] == 0.0))
    }
}

pub fn realization_to_json<T: Scalar>(r: &Realization<T>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&RealizationDoc::from_realization(r))?)
}

pub fn realization_from_json<T: Scalar>(s: &str) -> Result<Realization<T>> {
    let doc: RealizationDoc = serde_json::from_str(s)?;
    doc.to_realization()
}

/// Writes `t, v0_re, v0_im, ...` rows.
pub fn write_signal_csv<T: Scalar, W: Write>(s: &Signal<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for i in 0..s.dim() {
        header.push(format!("v{i}_re"));
        header.push(format!("v{i}_im"));
    }
    w.write_record(&header)?;
    for (t, v) in s.grid().times().zip(s.values()) {
        let mut rec = vec![format!("{t:e}")];
        for x in v.iter() {
            let z = x.to_c64();
            rec.push(format!("{:e}", z.re));
            rec.push(format!("{:e}", z.im));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a signal written by [`write_signal_csv`]; the grid is rebuilt from the time column.
pub fn read_signal_csv<T: Scalar, R: Read>(input: R) -> Result<Signal<T>> {
    let mut rd = csv::Reader::from_reader(input);
    let width = rd.headers()?.len();
    if width < 1 || (width - 1) % 2 != 0 {
        return Err(Error::param("signal CSV needs a t column and re/im pairs"));
    }
    let dim = (width - 1) / 2;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let nums: Vec<f64> = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::param(format!("signal CSV: {e}")))?;
        times.push(nums[0]);
        let v: Option<Vec<T>> = (0..dim)
            .map(|i| T::from_c64(Complex64::new(nums[1 + 2 * i], nums[2 + 2 * i])))
            .collect();
        values.push(nalgebra::DVector::from_vec(
            v.ok_or_else(|| Error::param("complex sample in a real signal"))?,
        ));
    }
    if times.len() < 2 {
        return Err(Error::param("signal CSV needs at least two samples"));
    }
    let grid = super::grid::TimeGrid::new(times[times.len() - 1], times.len() - 1)?;
    for (k, &t) in times.iter().enumerate() {
        if (t - grid.time(k)).abs() > 1e-9 * grid.t_end() {
            return Err(Error::OffGrid { t, dt: grid.dt() });
        }
    }
    Signal::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::grid::TimeGrid;
    use nalgebra::DVector;

    #[test]
    fn json_round_trip_real_and_complex() {
        let r = Realization::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            DMatrix::from_row_slice(2, 1, &[0.5, -0.5]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::from_element(1, 1, 0.1),
        )
        .unwrap();
        let s = realization_to_json(&r).unwrap();
        let back: Realization<f64> = realization_from_json(&s).unwrap();
        assert_eq!(back, r);
        let c: Realization<Complex64> = realization_from_json(&s).unwrap();
        assert_eq!(c.a()[(1, 0)], Complex64::new(3.0, 0.0));

        let mut doc = RealizationDoc::from_realization(&r);
        doc.a[0][0] = [1.0, 1.0];
        assert!(!doc.is_real());
        assert!(doc.to_realization::<f64>().is_err());
        assert!(doc.to_realization::<Complex64>().is_ok());
    }

    #[test]
    fn json_dimension_mismatch() {
        let s = r#"{"n":2,"m":1,"p":1,"A":[[[0,0]]],"B":[[[0,0]]],"C":[[[0,0]]],"D":[[[0,0]]]}"#;
        assert!(realization_from_json::<f64>(s).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = TimeGrid::new(0.5, 5).unwrap();
        let s = Signal::from_fn(g, |t| DVector::from_vec(vec![t.sin(), t * t])).unwrap();
        let mut buf = Vec::new();
        write_signal_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,v0_re,v0_im,v1_re,v1_im"));
        let back: Signal<f64> = read_signal_csv(buf.as_slice()).unwrap();
        assert!(back.max_rel_deviation(&s) < 1e-15);
    }
}
