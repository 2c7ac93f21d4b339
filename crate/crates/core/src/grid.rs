//! ESRI ASCII Grid rasters.
//!
//! Header keys are `ncols`, `nrows`, `xllcorner` (or `xllcenter`),
//! `yllcorner` (or `yllcenter`), `cellsize` and an optional `NODATA_value`,
//! matched case-insensitively. Values are row-major with the first row at
//! the north edge.

use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("expected {expected} cell values, found {found}")]
    CellCount { expected: usize, found: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsciiGrid {
    pub ncols: usize,
    pub nrows: usize,
    pub xll: f64,
    pub yll: f64,
    pub cellsize: f64,
    pub nodata: Option<f64>,
    /// Row-major, row 0 is the northernmost row.
    pub values: Vec<f64>,
}

impl AsciiGrid {
    pub fn new(ncols: usize, nrows: usize, xll: f64, yll: f64, cellsize: f64) -> Self {
        Self {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata: None,
            values: vec![0.0; ncols * nrows],
        }
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    pub fn set(&mut self, col: usize, row: usize, v: f64) {
        self.values[row * self.ncols + col] = v;
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        self.nodata.is_some_and(|nd| v == nd)
    }

    /// `(col, row)` of the cell containing world point `(x, y)`, if inside.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = (x - self.xll) / self.cellsize;
        let fy = (self.yll + self.nrows as f64 * self.cellsize - y) / self.cellsize;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (c, r) = (fx.floor() as usize, fy.floor() as usize);
        (c < self.ncols && r < self.nrows).then_some((c, r))
    }

    pub fn parse(text: &str) -> Result<Self, GridError> {
        let mut header = std::collections::HashMap::new();
        let mut lines = text.lines().enumerate().peekable();
        let mut center = (false, false);
        while let Some((no, line)) = lines.peek().copied() {
            let mut parts = line.split_whitespace();
            let Some(key) = parts.next() else {
                lines.next();
                continue;
            };
            let lower = key.to_ascii_lowercase();
            if !lower.starts_with(|c: char| c.is_ascii_alphabetic()) {
                break;
            }
            let value: f64 = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| GridError::Parse {
                    line: no + 1,
                    message: format!("header key `{key}` needs a numeric value"),
                })?;
            let canonical = match lower.as_str() {
                "ncols" | "nrows" | "cellsize" | "nodata_value" => lower.clone(),
                "xllcorner" => "xll".into(),
                "yllcorner" => "yll".into(),
                "xllcenter" => {
                    center.0 = true;
                    "xll".into()
                }
                "yllcenter" => {
                    center.1 = true;
                    "yll".into()
                }
                _ => {
                    return Err(GridError::Parse {
                        line: no + 1,
                        message: format!("unknown header key `{key}`"),
                    })
                }
            };
            header.insert(canonical, value);
            lines.next();
        }
        let need = |k: &str| {
            header.get(k).copied().ok_or_else(|| GridError::Parse {
                line: 1,
                message: format!("missing header key `{k}`"),
            })
        };
        let ncols = need("ncols")? as usize;
        let nrows = need("nrows")? as usize;
        let cellsize = need("cellsize")?;
        if !(cellsize > 0.0) {
            return Err(GridError::Parse {
                line: 1,
                message: "cellsize must be positive".into(),
            });
        }
        let mut xll = need("xll")?;
        let mut yll = need("yll")?;
        if center.0 {
            xll -= cellsize / 2.0;
        }
        if center.1 {
            yll -= cellsize / 2.0;
        }
        let nodata = header.get("nodata_value").copied();
        let mut values = Vec::with_capacity(ncols * nrows);
        for (no, line) in lines {
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| GridError::Parse {
                    line: no + 1,
                    message: format!("bad cell value `{tok}`"),
                })?;
                values.push(v);
            }
        }
        if values.len() != ncols * nrows {
            return Err(GridError::CellCount {
                expected: ncols * nrows,
                found: values.len(),
            });
        }
        Ok(Self {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata,
            values,
        })
    }

    pub fn read(path: &Path) -> Result<Self, GridError> {
        let text = std::fs::read_to_string(path).map_err(|source| GridError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 2 + 128);
        let _ = writeln!(s, "ncols {}", self.ncols);
        let _ = writeln!(s, "nrows {}", self.nrows);
        let _ = writeln!(s, "xllcorner {}", self.xll);
        let _ = writeln!(s, "yllcorner {}", self.yll);
        let _ = writeln!(s, "cellsize {}", self.cellsize);
        if let Some(nd) = self.nodata {
            let _ = writeln!(s, "NODATA_value {nd}");
        }
        for row in self.values.chunks(self.ncols.max(1)) {
            let mut first = true;
            for v in row {
                if !first {
                    s.push(' ');
                }
                first = false;
                let _ = write!(s, "{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), GridError> {
        std::fs::write(path, self.to_text()).map_err(|source| GridError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_roundtrip() {
        let text = "ncols 3\nnrows 2\nxllcorner 10\nyllcorner 20\ncellsize 0.5\nNODATA_value -9999\n1 0 1\n0 -9999 1\n";
        let g = AsciiGrid::parse(text).unwrap();
        assert_eq!((g.ncols, g.nrows), (3, 2));
        assert_eq!(g.get(1, 1), -9999.0);
        assert!(g.is_nodata(g.get(1, 1)));
        assert_eq!(AsciiGrid::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn cell_lookup_uses_north_up_rows() {
        let g = AsciiGrid::new(4, 2, 0.0, 0.0, 1.0);
        assert_eq!(g.cell_of(0.5, 1.5), Some((0, 0)));
        assert_eq!(g.cell_of(0.5, 0.5), Some((0, 1)));
        assert_eq!(g.cell_of(4.5, 0.5), None);
        assert_eq!(g.cell_of(-0.1, 0.5), None);
    }

    #[test]
    fn center_registration_shifts_origin() {
        let g = AsciiGrid::parse("ncols 1\nnrows 1\nxllcenter 5\nyllcenter 5\ncellsize 2\n1\n").unwrap();
        assert_eq!((g.xll, g.yll), (4.0, 4.0));
    }

    #[test]
    fn errors_carry_context() {
        let e = AsciiGrid::parse("ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 x\n").unwrap_err();
        assert!(matches!(e, GridError::Parse { line: 6, .. }), "{e}");
        let e = AsciiGrid::parse("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 1\n").unwrap_err();
        assert!(matches!(e, GridError::CellCount { expected: 4, found: 2 }));
    }
}
