//! Quality fields over a landscape raster.
//!
//! For a patch of uniform quality `I` the field is the cone
//! `I − dist(x, patch)/d_max`, so each resource needs one exact distance
//! transform. The landscape field is the pointwise maximum of the resource
//! fields. Away from every patch the field decays at slope `1/d_max`, which
//! [`eikonal_residual`] measures on the raster.

use crate::par::{self, Execution};

use super::edt::squared_distance_transform;
use super::raster::{Landscape, Raster};
use super::{intrinsic_quality, FloraError, FloralResource, ForagingParams, ResourceId, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QualityField {
    pub values: Raster<f64>,
    /// Resource attaining the maximum in each cell.
    pub source: Raster<Option<ResourceId>>,
    /// Cells holding no resource of the set the field was built from.
    pub vacuum: Raster<bool>,
    pub cell_size: f64,
    pub origin: [f64; 2],
}

impl QualityField {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        *self.values.get(row, col)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .values()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise maximum; ties go to the smaller resource id so the merge is
    /// associative and commutative.
    pub fn merge(mut self, other: &QualityField) -> QualityField {
        let n = self.values.len();
        let (rows, cols) = (self.values.rows(), self.values.cols());
        let mut values = self.values.values().to_vec();
        let mut source = self.source.values().to_vec();
        let mut vacuum = self.vacuum.values().to_vec();
        for i in 0..n {
            let v = other.values.values()[i];
            let s = other.source.values()[i];
            if v > values[i]
                || (v == values[i] && s < source[i] && s.is_some())
                || source[i].is_none()
            {
                values[i] = v;
                source[i] = s;
            }
            vacuum[i] &= other.vacuum.values()[i];
        }
        self.values = Raster::from_vec(rows, cols, values).expect("same shape");
        self.source = Raster::from_vec(rows, cols, source).expect("same shape");
        self.vacuum = Raster::from_vec(rows, cols, vacuum).expect("same shape");
        self
    }
}

fn check_resolution(landscape: &Landscape, p: &ForagingParams) -> Result<()> {
    let limit = p.d_max / 100.0;
    if landscape.cell_size > limit {
        return Err(FloraError::ResolutionTooCoarse {
            cell_size: landscape.cell_size,
            limit,
        });
    }
    Ok(())
}

/// Field of a single nectar resource over the landscape.
pub fn resource_field(
    landscape: &Landscape,
    res: &FloralResource,
    p: &ForagingParams,
    exec: Execution,
) -> Result<QualityField> {
    check_resolution(landscape, p)?;
    let intrinsic = intrinsic_quality(res, p)?;
    let mask = landscape.mask(res.id);
    if !mask.values().iter().any(|&b| b) {
        return Err(FloraError::MissingFromRaster(res.id));
    }
    let d2 = squared_distance_transform(&mask, exec);
    let scale = landscape.cell_size / p.d_max;
    Ok(QualityField {
        values: d2.map(|&d| intrinsic - d.sqrt() * scale),
        source: mask.map(|_| Some(res.id)),
        vacuum: mask.map(|&inside| !inside),
        cell_size: landscape.cell_size,
        origin: landscape.origin,
    })
}

/// Per-resource fields for every nectar resource with a footprint, in id
/// order.
pub fn resource_fields(
    landscape: &Landscape,
    resources: &[FloralResource],
    p: &ForagingParams,
    exec: Execution,
) -> Result<Vec<(ResourceId, QualityField)>> {
    check_resolution(landscape, p)?;
    let present = landscape.ids_present();
    if let Some(&unknown) = present
        .iter()
        .find(|id| !resources.iter().any(|r| r.id == **id))
    {
        return Err(FloraError::UnknownResource(unknown));
    }
    let mut nectar: Vec<&FloralResource> = resources
        .iter()
        .filter(|r| r.is_nectar() && present.contains(&r.id))
        .collect();
    nectar.sort_by_key(|r| r.id);
    if nectar.is_empty() {
        return Err(FloraError::EmptyResources);
    }
    par::map(exec, &nectar, |r| {
        resource_field(landscape, r, p, Execution::Sequential).map(|f| (r.id, f))
    })
    .into_iter()
    .collect()
}

/// `Q(x) = max_y (I(y) − d(x, y)/d_max)` over all nectar cells `y`.
pub fn quality_field_with(
    landscape: &Landscape,
    resources: &[FloralResource],
    p: &ForagingParams,
    exec: Execution,
) -> Result<QualityField> {
    let fields = resource_fields(landscape, resources, p, exec)?;
    let mut iter = fields.into_iter().map(|(_, f)| f);
    let first = iter.next().ok_or(FloraError::EmptyResources)?;
    Ok(iter.fold(first, |acc, f| acc.merge(&f)))
}

pub fn quality_field(
    landscape: &Landscape,
    resources: &[FloralResource],
    p: &ForagingParams,
) -> Result<QualityField> {
    quality_field_with(landscape, resources, p, Execution::default())
}

/// Gradient-norm error of a quality field on its vacuum cells.
#[derive(Clone, Debug, PartialEq)]
pub struct EikonalReport {
    /// `|‖∇Q‖ − 1/d_max|` per interior vacuum cell; `None` elsewhere.
    pub residuals: Raster<Option<f64>>,
    pub count: usize,
    pub max: f64,
    pub mean: f64,
    /// Set when the field has no slope anywhere (e.g. a single cell or a
    /// landscape entirely covered by one patch); no residuals are reported.
    pub degenerate: bool,
    pub target: f64,
}

impl EikonalReport {
    /// Share of residual cells within `rel·(1/d_max)` of the eikonal slope.
    pub fn fraction_within(&self, rel: f64) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let ok = self
            .residuals
            .values()
            .iter()
            .flatten()
            .filter(|r| **r <= rel * self.target)
            .count();
        ok as f64 / self.count as f64
    }
}

/// Central-difference check of `‖∇Q‖ = 1/d_max` on interior vacuum cells.
pub fn eikonal_residual(field: &QualityField, p: &ForagingParams) -> EikonalReport {
    let values = &field.values;
    let (rows, cols) = (values.rows(), values.cols());
    let target = 1.0 / p.d_max;
    let lo = values
        .values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = field.max_value();
    let degenerate = rows < 3 || cols < 3 || !(hi > lo);
    let h2 = 2.0 * field.cell_size;

    let residuals = Raster::from_fn(rows, cols, |r, c| {
        if degenerate
            || r == 0
            || c == 0
            || r + 1 == rows
            || c + 1 == cols
            || !*field.vacuum.get(r, c)
        {
            return None;
        }
        let gx = (values.get(r, c + 1) - values.get(r, c - 1)) / h2;
        let gy = (values.get(r + 1, c) - values.get(r - 1, c)) / h2;
        Some(((gx * gx + gy * gy).sqrt() - target).abs())
    });
    let all: Vec<f64> = residuals.values().iter().flatten().copied().collect();
    let count = all.len();
    let max = all.iter().copied().fold(0.0, f64::max);
    let mean = if count > 0 {
        all.iter().sum::<f64>() / count as f64
    } else {
        0.0
    };
    EikonalReport {
        residuals,
        count,
        max,
        mean,
        degenerate,
        target,
    }
}
