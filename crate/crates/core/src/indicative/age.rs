use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IndicativeError;
use crate::geom::Point;
use crate::grid::AsciiGrid;

pub const GAIA_FIRST: i32 = 1985;
pub const GAIA_LAST: i32 = 2018;

/// First impervious year, or `AF2018` (after the last layer): 35 classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeClass {
    Year(i32),
    AF2018,
}

impl fmt::Display for AgeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgeClass::Year(y) => write!(f, "{y}"),
            AgeClass::AF2018 => f.write_str("AF2018"),
        }
    }
}

impl FromStr for AgeClass {
    type Err = IndicativeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("AF2018") {
            return Ok(AgeClass::AF2018);
        }
        match s.parse::<i32>() {
            Ok(y) if (GAIA_FIRST..=GAIA_LAST).contains(&y) => Ok(AgeClass::Year(y)),
            _ => Err(IndicativeError::UnknownAge(s.into())),
        }
    }
}

/// Validation bins with edges 1985, 1990, 2000, 2010, 2018.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeBin {
    #[serde(rename = "<=1985")]
    Upto1985,
    #[serde(rename = "1986-1990")]
    To1990,
    #[serde(rename = "1991-2000")]
    To2000,
    #[serde(rename = "2001-2010")]
    To2010,
    #[serde(rename = "2011-2018")]
    To2018,
    #[serde(rename = "AF2018")]
    After2018,
}

impl AgeBin {
    pub const ALL: [AgeBin; 6] = [
        AgeBin::Upto1985,
        AgeBin::To1990,
        AgeBin::To2000,
        AgeBin::To2010,
        AgeBin::To2018,
        AgeBin::After2018,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgeBin::Upto1985 => "<=1985",
            AgeBin::To1990 => "1986-1990",
            AgeBin::To2000 => "1991-2000",
            AgeBin::To2010 => "2001-2010",
            AgeBin::To2018 => "2011-2018",
            AgeBin::After2018 => "AF2018",
        }
    }
}

impl fmt::Display for AgeBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgeBin {
    type Err = IndicativeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| IndicativeError::UnknownAge(s.into()))
    }
}

pub fn age_bin(class: AgeClass) -> AgeBin {
    match class {
        AgeClass::Year(y) if y <= 1985 => AgeBin::Upto1985,
        AgeClass::Year(y) if y <= 1990 => AgeBin::To1990,
        AgeClass::Year(y) if y <= 2000 => AgeBin::To2000,
        AgeClass::Year(y) if y <= 2010 => AgeBin::To2010,
        AgeClass::Year(_) => AgeBin::To2018,
        AgeClass::AF2018 => AgeBin::After2018,
    }
}

/// 34 annual binary rasters (1985..=2018) on one transform; a cell value of
/// 1 means impervious, anything else (incl. NODATA) not.
#[derive(Debug, Clone, PartialEq)]
pub struct ImperviousStack {
    layers: Vec<AsciiGrid>,
}

impl ImperviousStack {
    /// `layers[i]` is year 1985 + i.
    pub fn new(layers: Vec<AsciiGrid>) -> Result<Self, IndicativeError> {
        let want = (GAIA_LAST - GAIA_FIRST + 1) as usize;
        if layers.len() != want {
            return Err(IndicativeError::BadStack(format!("expected {want} layers, got {}", layers.len())));
        }
        let g0 = &layers[0];
        for (i, g) in layers.iter().enumerate() {
            if (g.ncols, g.nrows, g.xll, g.yll, g.cellsize) != (g0.ncols, g0.nrows, g0.xll, g0.yll, g0.cellsize) {
                return Err(IndicativeError::BadStack(format!("layer {} has a different transform", GAIA_FIRST + i as i32)));
            }
        }
        Ok(Self { layers })
    }

    /// Reads `*.asc` files whose name contains the year (first 4-digit run).
    pub fn read_dir(dir: &Path) -> Result<Self, IndicativeError> {
        let entries = std::fs::read_dir(dir).map_err(|e| IndicativeError::BadStack(format!("{}: {e}", dir.display())))?;
        let mut by_year = std::collections::BTreeMap::new();
        for e in entries {
            let path = e.map_err(|e| IndicativeError::BadStack(e.to_string()))?.path();
            if path.extension().and_then(|x| x.to_str()) != Some("asc") {
                continue;
            }
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let Some(year) = year_in(name) else { continue };
            if by_year.insert(year, AsciiGrid::read(&path)?).is_some() {
                return Err(IndicativeError::BadStack(format!("duplicate year {year}")));
            }
        }
        if let Some(y) = (GAIA_FIRST..=GAIA_LAST).find(|y| !by_year.contains_key(y)) {
            return Err(IndicativeError::BadStack(format!("missing year {y}")));
        }
        Self::new(by_year.into_iter().filter(|(y, _)| (GAIA_FIRST..=GAIA_LAST).contains(y)).map(|(_, g)| g).collect())
    }

    pub fn layer(&self, year: i32) -> &AsciiGrid {
        &self.layers[(year - GAIA_FIRST) as usize]
    }

    pub fn layers(&self) -> &[AsciiGrid] {
        &self.layers
    }
}

fn year_in(name: &str) -> Option<i32> {
    let b = name.as_bytes();
    (0..b.len().saturating_sub(3)).find_map(|i| {
        let w = &b[i..i + 4];
        let bounded = (i == 0 || !b[i - 1].is_ascii_digit()) && b.get(i + 4).is_none_or(|c| !c.is_ascii_digit());
        (bounded && w.iter().all(u8::is_ascii_digit)).then(|| name[i..i + 4].parse().ok()).flatten()
    })
}

/// Minimum year whose raster is impervious at the centroid's cell.
pub fn assign_age(centroid: &Point, stack: &ImperviousStack) -> Result<AgeClass, IndicativeError> {
    let (c, r) = stack.layers[0].cell_of(centroid.x, centroid.y).ok_or(IndicativeError::OutOfExtent {
        x: centroid.x,
        y: centroid.y,
    })?;
    Ok(stack
        .layers
        .iter()
        .position(|g| g.get(c, r) == 1.0)
        .map_or(AgeClass::AF2018, |i| AgeClass::Year(GAIA_FIRST + i as i32)))
}
