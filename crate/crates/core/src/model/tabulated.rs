//! Generic conditional families loaded from a tabulation file.
//!
//! Format: CSV with header `theta,v,G,g,dG_dtheta`, listing a full
//! rectangular tabulation — one block per `theta` in ascending order, each
//! block enumerating the same ascending `v` grid. Evaluation interpolates
//! bilinearly inside the rectangle and clamps coordinates to its edges.
//!
//! A tabulated family declares no analytic extension, so operations that
//! need the virtual value where the tabulated density vanishes report an
//! error instead of extrapolating.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ValueFamily;
use crate::numerics::Grid;

/// Bilinear interpolant of `(G, g, dG/dtheta)` on a rectangle.
#[derive(Debug, Clone)]
pub struct TabulatedFamily {
    thetas: Vec<f64>,
    vs: Vec<f64>,
    // Row-major over (theta, v).
    cdf: Vec<f64>,
    pdf: Vec<f64>,
    dtheta: Vec<f64>,
}

impl TabulatedFamily {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        {
            let headers = csv.headers()?;
            let expected = ["theta", "v", "G", "g", "dG_dtheta"];
            let got: Vec<&str> = headers.iter().collect();
            if got != expected {
                return Err(Error::TabulatedFormat(format!(
                    "expected header {expected:?}, got {got:?}"
                )));
            }
        }
        let mut rows: Vec<[f64; 5]> = Vec::new();
        for record in csv.records() {
            let record = record?;
            if record.len() != 5 {
                return Err(Error::TabulatedFormat(format!(
                    "expected 5 fields per row, got {}",
                    record.len()
                )));
            }
            let mut row = [0.0; 5];
            for (i, field) in record.iter().enumerate() {
                row[i] = field.parse::<f64>().map_err(|e| {
                    Error::TabulatedFormat(format!("bad number {field:?}: {e}"))
                })?;
                if !row[i].is_finite() {
                    return Err(Error::TabulatedFormat(format!("non-finite entry {field:?}")));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::TabulatedFormat("no data rows".into()));
        }

        // The first block determines the v grid; every later block must
        // repeat it exactly.
        let first_theta = rows[0][0];
        let n_v = rows.iter().take_while(|r| r[0] == first_theta).count();
        if n_v < 2 {
            return Err(Error::TabulatedFormat("need at least 2 v points per theta".into()));
        }
        if rows.len() % n_v != 0 {
            return Err(Error::TabulatedFormat(format!(
                "row count {} is not a multiple of the v-grid size {n_v}",
                rows.len()
            )));
        }
        let n_theta = rows.len() / n_v;
        if n_theta < 2 {
            return Err(Error::TabulatedFormat("need at least 2 theta points".into()));
        }
        let vs: Vec<f64> = rows[..n_v].iter().map(|r| r[1]).collect();
        if vs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::TabulatedFormat("v grid must be strictly increasing".into()));
        }
        let mut thetas = Vec::with_capacity(n_theta);
        let mut cdf = Vec::with_capacity(rows.len());
        let mut pdf = Vec::with_capacity(rows.len());
        let mut dtheta = Vec::with_capacity(rows.len());
        for (b, block) in rows.chunks(n_v).enumerate() {
            let theta = block[0][0];
            if block.iter().any(|r| r[0] != theta) {
                return Err(Error::TabulatedFormat(format!(
                    "block {b} mixes theta values"
                )));
            }
            if let Some(&prev) = thetas.last() {
                if theta <= prev {
                    return Err(Error::TabulatedFormat(
                        "theta blocks must be strictly increasing".into(),
                    ));
                }
            }
            for (j, row) in block.iter().enumerate() {
                if row[1] != vs[j] {
                    return Err(Error::TabulatedFormat(format!(
                        "block {b} lists v = {} where {} was expected",
                        row[1], vs[j]
                    )));
                }
                cdf.push(row[2]);
                pdf.push(row[3]);
                dtheta.push(row[4]);
            }
            thetas.push(theta);
        }
        Ok(TabulatedFamily {
            thetas,
            vs,
            cdf,
            pdf,
            dtheta,
        })
    }

    /// Writes a tabulation of an arbitrary family in the loader's format,
    /// with round-trip float precision.
    pub fn write_csv<W: Write>(
        family: &dyn ValueFamily,
        theta_grid: &Grid,
        v_grid: &Grid,
        mut out: W,
    ) -> Result<()> {
        writeln!(out, "theta,v,G,g,dG_dtheta")?;
        for theta in theta_grid.iter() {
            for v in v_grid.iter() {
                writeln!(
                    out,
                    "{theta:.16e},{v:.16e},{:.16e},{:.16e},{:.16e}",
                    family.cdf(v, theta),
                    family.pdf(v, theta),
                    family.theta_partial(v, theta),
                )?;
            }
        }
        Ok(())
    }

    pub fn theta_grid(&self) -> &[f64] {
        &self.thetas
    }

    pub fn v_grid(&self) -> &[f64] {
        &self.vs
    }

    fn interpolate(&self, table: &[f64], v: f64, theta: f64) -> f64 {
        let (i, s) = locate(&self.thetas, theta);
        let (j, t) = locate(&self.vs, v);
        let n_v = self.vs.len();
        let at = |i: usize, j: usize| table[i * n_v + j];
        let a = at(i, j) * (1.0 - t) + at(i, j + 1) * t;
        let b = at(i + 1, j) * (1.0 - t) + at(i + 1, j + 1) * t;
        a * (1.0 - s) + b * s
    }
}

/// Segment index and clamped fraction for coordinate `x` in a sorted grid.
fn locate(grid: &[f64], x: f64) -> (usize, f64) {
    let n = grid.len();
    if x <= grid[0] {
        return (0, 0.0);
    }
    if x >= grid[n - 1] {
        return (n - 2, 1.0);
    }
    let i = match grid.binary_search_by(|p| p.partial_cmp(&x).expect("finite grid")) {
        Ok(i) => i.min(n - 2),
        Err(i) => i - 1,
    };
    let frac = (x - grid[i]) / (grid[i + 1] - grid[i]);
    (i, frac.clamp(0.0, 1.0))
}

impl ValueFamily for TabulatedFamily {
    fn cdf(&self, v: f64, theta: f64) -> f64 {
        self.interpolate(&self.cdf, v, theta)
    }

    fn pdf(&self, v: f64, theta: f64) -> f64 {
        self.interpolate(&self.pdf, v, theta)
    }

    fn theta_partial(&self, v: f64, theta: f64) -> f64 {
        self.interpolate(&self.dtheta, v, theta)
    }

    fn support_lo(&self, _theta: f64) -> f64 {
        self.vs[0]
    }

    fn support_hi(&self, _theta: f64) -> f64 {
        *self.vs.last().expect("non-empty grid")
    }

    fn global_lo(&self) -> f64 {
        self.vs[0]
    }

    fn global_hi(&self) -> f64 {
        *self.vs.last().expect("non-empty grid")
    }
}
