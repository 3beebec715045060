//! Row-major rasters and the landscape they describe, with the CSV and PGM
//! formats used for import and export.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use super::{FloraError, ResourceId, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Raster<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Raster<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }
}

impl<T> Raster<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(FloraError::Raster(format!(
                "{} values do not fill a {rows}×{cols} raster",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.cols + col]
    }

    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        &mut self.data[row * self.cols + col]
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (i / cols, i % cols, v))
    }
}

impl Raster<f64> {
    /// Writes one CSV line per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in self.data.chunks(self.cols.max(1)) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Plain (ASCII) PGM, affinely rescaled so the minimum maps to 0 and the
    /// maximum to 255. A constant raster is written as all zeros.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let finite = self.data.iter().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        let span = hi - lo;
        writeln!(w, "P2")?;
        writeln!(w, "{} {}", self.cols, self.rows)?;
        writeln!(w, "255")?;
        for row in self.data.chunks(self.cols.max(1)) {
            let line: Vec<String> = row
                .iter()
                .map(|&v| {
                    let g = if span > 0.0 && v.is_finite() {
                        ((v - lo) / span * 255.0).round()
                    } else {
                        0.0
                    };
                    (g as u8).to_string()
                })
                .collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Resource footprints on a regular grid. Id 0 marks floral vacuum.
#[derive(Clone, Debug, PartialEq)]
pub struct Landscape {
    pub ids: Raster<ResourceId>,
    /// Cell edge length (m).
    pub cell_size: f64,
    /// World coordinates of the centre of cell (0, 0).
    pub origin: [f64; 2],
    /// Cell holding the hive, as (row, col).
    pub hive: [usize; 2],
}

pub const VACUUM: ResourceId = 0;

impl Landscape {
    pub fn new(ids: Raster<ResourceId>, cell_size: f64, hive: [usize; 2]) -> Result<Self> {
        let [row, col] = hive;
        if row >= ids.rows() || col >= ids.cols() {
            return Err(FloraError::HiveOutside {
                row,
                col,
                rows: ids.rows(),
                cols: ids.cols(),
            });
        }
        if !(cell_size > 0.0) {
            return Err(FloraError::Raster(format!(
                "cell size must be > 0, got {cell_size}"
            )));
        }
        Ok(Self {
            ids,
            cell_size,
            origin: [0.0, 0.0],
            hive,
        })
    }

    /// Parses a CSV grid of integer resource ids (empty fields count as
    /// vacuum). Every row must have the same width.
    pub fn read_ids_csv<R: Read>(reader: R) -> Result<Raster<ResourceId>> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut data = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for (r, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| FloraError::Raster(e.to_string()))?;
            let width = record.len();
            match cols {
                None => cols = Some(width),
                Some(w) if w != width => {
                    return Err(FloraError::Raster(format!(
                        "row {} has {width} cells, expected {w}",
                        r + 1
                    )))
                }
                _ => {}
            }
            for (c, field) in record.iter().enumerate() {
                let id = if field.is_empty() {
                    VACUUM
                } else {
                    field.parse().map_err(|_| {
                        FloraError::Raster(format!(
                            "cell ({r}, {c}): {field:?} is not a resource id"
                        ))
                    })?
                };
                data.push(id);
            }
            rows += 1;
        }
        Raster::from_vec(rows, cols.unwrap_or(0), data)
    }

    pub fn ids_present(&self) -> BTreeSet<ResourceId> {
        self.ids
            .values()
            .iter()
            .copied()
            .filter(|&id| id != VACUUM)
            .collect()
    }

    pub fn mask(&self, id: ResourceId) -> Raster<bool> {
        self.ids.map(|&v| v == id)
    }

    pub fn is_vacuum(&self, row: usize, col: usize) -> bool {
        *self.ids.get(row, col) == VACUUM
    }

    /// Straight-line distance (m) from the hive cell to the nearest cell of
    /// resource `id`, or `None` if the resource has no footprint.
    pub fn distance_from_hive(&self, id: ResourceId) -> Option<f64> {
        let [hr, hc] = self.hive;
        self.ids
            .cells()
            .filter(|(_, _, v)| **v == id)
            .map(|(r, c, _)| {
                let dr = r as f64 - hr as f64;
                let dc = c as f64 - hc as f64;
                dr * dr + dc * dc
            })
            .min_by(f64::total_cmp)
            .map(|d2| d2.sqrt() * self.cell_size)
    }
}
