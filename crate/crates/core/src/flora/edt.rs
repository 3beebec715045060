//! Exact squared Euclidean distance transform (Felzenszwalb–Huttenlocher).
//!
//! Two separable passes of the 1-D lower envelope of parabolas. All inputs
//! and outputs are integer squared distances in cell units, so the result is
//! exact in `f64` for any raster that fits in memory.

use crate::par::{self, Execution};

use super::raster::Raster;

/// 1-D transform of `f` (0 at sources, `∞` elsewhere, or any squared
/// distances from a previous pass) into `out`.
fn envelope_1d(f: &[f64], out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    for (q, &fq) in f.iter().enumerate() {
        if !fq.is_finite() {
            continue;
        }
        let qf = q as f64;
        loop {
            let Some(&p) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let pf = p as f64;
            let s = ((fq + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf);
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    if v.is_empty() {
        out.fill(f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < v.len() && z[k + 1] < qf {
            k += 1;
        }
        let dq = qf - v[k] as f64;
        *o = dq * dq + f[v[k]];
    }
}

/// Squared distance (in cells) from every cell to the nearest `true` cell of
/// `mask`; `∞` everywhere if the mask is empty.
pub fn squared_distance_transform(mask: &Raster<bool>, exec: Execution) -> Raster<f64> {
    let (rows, cols) = (mask.rows(), mask.cols());
    if rows == 0 || cols == 0 {
        return Raster::filled(rows, cols, f64::INFINITY);
    }

    // Columns first, stored column-major.
    let columns: Vec<Vec<f64>> = par::map_range(exec, cols, |c| {
        let f: Vec<f64> = (0..rows)
            .map(|r| if *mask.get(r, c) { 0.0 } else { f64::INFINITY })
            .collect();
        let mut out = vec![0.0; rows];
        envelope_1d(&f, &mut out, &mut Vec::new(), &mut Vec::new());
        out
    });

    let mut data = vec![0.0; rows * cols];
    par::for_each_chunk_mut(exec, &mut data, cols, |r, row| {
        let f: Vec<f64> = columns.iter().map(|col| col[r]).collect();
        envelope_1d(&f, row, &mut Vec::new(), &mut Vec::new());
    });
    Raster::from_vec(rows, cols, data).expect("dimensions preserved")
}
