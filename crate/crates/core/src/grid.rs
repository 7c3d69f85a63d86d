//! Rectangular lattice fields and the two five-point Laplacians.
//!
//! A `Grid2D` stores interior values only in Dirichlet mode (the zero
//! boundary layer is implicit and never stored) and the full field in
//! periodic mode. Layout is row-major with index `j * nx + i`; all
//! serialization follows the same convention.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Boundary handling for a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Interior points only; neighbors outside the lattice read as zero.
    DirichletZero,
    /// Neighbor indices wrap modulo the grid size.
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::DirichletZero => write!(f, "dirichlet"),
            Boundary::Periodic => write!(f, "periodic"),
        }
    }
}

/// Hard cap on cells accepted from external input. Far beyond anything the
/// solvers are sized for, but small enough that a hostile header cannot
/// force a huge allocation.
const MAX_CELLS: usize = 1 << 26;

/// Scalar field on an nx-by-ny lattice with spacing `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    h: f64,
    bc: Boundary,
    data: Vec<f64>,
}

impl Grid2D {
    /// Builds a grid from existing data. The length must be exactly
    /// `nx * ny` and every value must be finite.
    pub fn new(nx: usize, ny: usize, h: f64, bc: Boundary, data: Vec<f64>) -> Result<Self> {
        Self::check_dims(nx, ny, h)?;
        let cells = nx
            .checked_mul(ny)
            .ok_or_else(|| Error::Domain("grid size overflows".into()))?;
        if data.len() != cells {
            return Err(Error::Shape {
                expected: format!("{nx}x{ny} = {cells} values"),
                actual: format!("{} values", data.len()),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("grid values must be finite".into()));
        }
        Ok(Self { nx, ny, h, bc, data })
    }

    pub fn zeros(nx: usize, ny: usize, h: f64, bc: Boundary) -> Result<Self> {
        Self::constant(nx, ny, h, bc, 0.0)
    }

    pub fn constant(nx: usize, ny: usize, h: f64, bc: Boundary, value: f64) -> Result<Self> {
        Self::check_dims(nx, ny, h)?;
        if !value.is_finite() {
            return Err(Error::Domain("grid values must be finite".into()));
        }
        let cells = nx
            .checked_mul(ny)
            .ok_or_else(|| Error::Domain("grid size overflows".into()))?;
        Ok(Self { nx, ny, h, bc, data: vec![value; cells] })
    }

    /// Fills a grid from a function of the zero-based lattice indices (i, j).
    pub fn from_fn(
        nx: usize,
        ny: usize,
        h: f64,
        bc: Boundary,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut g = Self::zeros(nx, ny, h, bc)?;
        for j in 0..ny {
            for i in 0..nx {
                g.data[j * nx + i] = f(i, j);
            }
        }
        if !g.data.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("grid values must be finite".into()));
        }
        Ok(g)
    }

    fn check_dims(nx: usize, ny: usize, h: f64) -> Result<()> {
        if nx == 0 || ny == 0 {
            return Err(Error::Domain("nx and ny must be at least 1".into()));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Domain(format!("spacing h must be positive, got {h}")));
        }
        Ok(())
    }

    /// Same shape, spacing and boundary mode without touching the data.
    pub(crate) fn like(&self) -> Grid2D {
        Grid2D {
            nx: self.nx,
            ny: self.ny,
            h: self.h,
            bc: self.bc,
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bc(&self) -> Boundary {
        self.bc
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn same_shape(&self, other: &Grid2D) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.h == other.h && self.bc == other.bc
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Grid2D {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = f(*v);
        }
        out
    }

    /// Five-point Laplacian matching this grid's boundary mode.
    pub fn laplacian(&self) -> Grid2D {
        match self.bc {
            Boundary::DirichletZero => self.lap_dirichlet_kernel(),
            Boundary::Periodic => self.lap_periodic_kernel(),
        }
    }

    /// Five-point Laplacian with the implicit zero boundary layer.
    /// Errors if the grid is not in Dirichlet mode.
    pub fn laplacian_dirichlet(&self) -> Result<Grid2D> {
        if self.bc != Boundary::DirichletZero {
            return Err(Error::Contract(
                "laplacian_dirichlet requires a DirichletZero grid".into(),
            ));
        }
        Ok(self.lap_dirichlet_kernel())
    }

    /// Five-point Laplacian with wraparound neighbors.
    /// Errors if the grid is not in periodic mode.
    pub fn laplacian_periodic(&self) -> Result<Grid2D> {
        if self.bc != Boundary::Periodic {
            return Err(Error::Contract(
                "laplacian_periodic requires a Periodic grid".into(),
            ));
        }
        Ok(self.lap_periodic_kernel())
    }

    fn lap_dirichlet_kernel(&self) -> Grid2D {
        let (nx, ny) = (self.nx, self.ny);
        let inv_h2 = 1.0 / (self.h * self.h);
        let d = &self.data;
        let mut out = self.like();
        for j in 0..ny {
            let row = j * nx;
            for i in 0..nx {
                let k = row + i;
                let mut s = -4.0 * d[k];
                if i > 0 {
                    s += d[k - 1];
                }
                if i + 1 < nx {
                    s += d[k + 1];
                }
                if j > 0 {
                    s += d[k - nx];
                }
                if j + 1 < ny {
                    s += d[k + nx];
                }
                out.data[k] = s * inv_h2;
            }
        }
        out
    }

    fn lap_periodic_kernel(&self) -> Grid2D {
        let (nx, ny) = (self.nx, self.ny);
        let inv_h2 = 1.0 / (self.h * self.h);
        let d = &self.data;
        let mut out = self.like();
        for j in 0..ny {
            let row = j * nx;
            let up = (if j == 0 { ny - 1 } else { j - 1 }) * nx;
            let down = (if j + 1 == ny { 0 } else { j + 1 }) * nx;
            for i in 0..nx {
                let left = if i == 0 { nx - 1 } else { i - 1 };
                let right = if i + 1 == nx { 0 } else { i + 1 };
                let s = d[row + left] + d[row + right] + d[up + i] + d[down + i]
                    - 4.0 * d[row + i];
                out.data[row + i] = s * inv_h2;
            }
        }
        out
    }

    /// Sup norm of the values.
    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Discrete L2 norm, sqrt(h^2 * sum of squares).
    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.data.iter().map(|v| v * v).sum();
        (self.h * self.h * s).sqrt()
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Elementwise clamp to [0, 1].
    pub fn clip01(&self) -> Grid2D {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    pub fn clip01_in_place(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// Largest entry of (self - other). Shapes must match.
    pub fn max_signed_diff(&self, other: &Grid2D) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::Shape {
                expected: format!("{}x{} h={} bc={}", self.nx, self.ny, self.h, self.bc),
                actual: format!("{}x{} h={} bc={}", other.nx, other.ny, other.h, other.bc),
            });
        }
        let mut m = f64::NEG_INFINITY;
        for (a, b) in self.data.iter().zip(&other.data) {
            m = m.max(a - b);
        }
        Ok(m)
    }

    /// Sup norm of (self - other). Shapes must match.
    pub fn max_abs_diff(&self, other: &Grid2D) -> Result<f64> {
        let up = self.max_signed_diff(other)?;
        let down = other.max_signed_diff(self)?;
        Ok(up.max(down))
    }

    /// Serializes to CSV: a `# nx=.. ny=.. h=.. bc=..` header, then one line
    /// per lattice row with 17 significant digits per value (round-trip
    /// exact for f64).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# nx={} ny={} h={} bc={}\n",
            self.nx, self.ny, self.h, self.bc
        ));
        for j in 0..self.ny {
            let row = &self.data[j * self.nx..(j + 1) * self.nx];
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Strict CSV parser. Requires the exact header produced by
    /// `to_csv_string`, exactly `ny` data rows of exactly `nx` finite
    /// values, and nothing else.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid file".into()))?;
        let rest = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing '#' header line".into()))?;
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(Error::Parse(format!(
                "header must have exactly nx= ny= h= bc=, got {} tokens",
                tokens.len()
            )));
        }
        let nx: usize = parse_kv(tokens[0], "nx")?;
        let ny: usize = parse_kv(tokens[1], "ny")?;
        let h: f64 = parse_kv(tokens[2], "h")?;
        let bc = match token_value(tokens[3], "bc")? {
            "dirichlet" => Boundary::DirichletZero,
            "periodic" => Boundary::Periodic,
            other => return Err(Error::Parse(format!("unknown bc '{other}'"))),
        };
        if nx == 0 || ny == 0 {
            return Err(Error::Parse("nx and ny must be at least 1".into()));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Parse("h must be a positive finite number".into()));
        }
        let cells = nx
            .checked_mul(ny)
            .filter(|&c| c <= MAX_CELLS)
            .ok_or_else(|| Error::Parse("declared grid size is too large".into()))?;

        let mut data: Vec<f64> = Vec::new();
        let mut rows = 0usize;
        for line in lines.by_ref() {
            if rows == ny {
                if !line.trim().is_empty() {
                    return Err(Error::Parse("trailing content after the last row".into()));
                }
                continue;
            }
            if line.trim().is_empty() {
                return Err(Error::Parse(format!("row {rows} is empty")));
            }
            let mut count = 0usize;
            for field in line.split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad value '{}' in row {rows}", field.trim())))?;
                if !v.is_finite() {
                    return Err(Error::Parse(format!("non-finite value in row {rows}")));
                }
                // Incremental growth; the declared size only caps it.
                if data.len() == cells {
                    return Err(Error::Parse("more values than the header declares".into()));
                }
                data.push(v);
                count += 1;
            }
            if count != nx {
                return Err(Error::Parse(format!(
                    "row {rows} has {count} values, expected {nx}"
                )));
            }
            rows += 1;
        }
        if rows != ny {
            return Err(Error::Parse(format!("expected {ny} rows, got {rows}")));
        }
        Grid2D::new(nx, ny, h, bc, data)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_csv_str(&text)
    }
}

fn token_value<'a>(token: &'a str, key: &str) -> Result<&'a str> {
    token
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| Error::Parse(format!("expected {key}=<value>, got '{token}'")))
}

fn parse_kv<T: std::str::FromStr>(token: &str, key: &str) -> Result<T> {
    let raw = token_value(token, key)?;
    raw.parse()
        .map_err(|_| Error::Parse(format!("bad value for {key}: '{raw}'")))
}
