//! Quantile bins on one or two features, with sparse cells merged into
//! their neighbours along the last axis.

type Remap = Box<dyn Fn(usize, usize) -> (usize, usize)>;

/// Interior quantile cut points splitting `values` into `bins` groups.
pub fn quantile_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() || bins < 2 {
        return Vec::new();
    }
    let mut edges: Vec<f64> = (1..bins).map(|k| sorted[k * sorted.len() / bins]).collect();
    edges.dedup();
    edges
}

/// Bin index of `x` given interior edges; bin `j` is `[edge_{j-1}, edge_j)`.
pub fn bin_of(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e <= x)
}

/// Assignment of items to merged cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Cells {
    /// Cell id per item, `None` when the item could not be placed in a cell
    /// with enough members.
    pub of_item: Vec<Option<usize>>,
    /// `(row, first column, last column)` of each merged cell.
    pub extent: Vec<(usize, usize, usize)>,
    /// Items left in cells below the occupancy floor.
    pub dropped: usize,
}

impl Cells {
    pub fn len(&self) -> usize {
        self.extent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.extent.is_empty()
    }
}

/// Tensor quantile bins over one or two features. Cells with fewer than
/// `min_occupancy` items are merged with the next cells of the same row;
/// a sparse tail joins the previous merged cell. A row whose total stays
/// below the floor is dropped and counted in [`Cells::dropped`].
pub fn tensor_cells(features: &[[f64; 2]], dims: usize, bins: usize, min_occupancy: usize) -> Cells {
    let first: Vec<f64> = features.iter().map(|f| f[0]).collect();
    let e0 = quantile_edges(&first, bins);
    let e1 = if dims > 1 {
        let second: Vec<f64> = features.iter().map(|f| f[1]).collect();
        quantile_edges(&second, bins)
    } else {
        Vec::new()
    };
    let (rows, cols) = (e0.len() + 1, e1.len() + 1);
    let raw: Vec<Option<(usize, usize)>> = features
        .iter()
        .map(|f| {
            let ok = f[0].is_finite() && (dims < 2 || f[1].is_finite());
            ok.then(|| (bin_of(&e0, f[0]), if dims > 1 { bin_of(&e1, f[1]) } else { 0 }))
        })
        .collect();

    let mut counts = vec![vec![0usize; cols]; rows];
    for &(r, c) in raw.iter().flatten() {
        counts[r][c] += 1;
    }

    // With one feature, run the merge along the only axis.
    let (counts, remap): (Vec<Vec<usize>>, Remap) = if dims > 1 {
        (counts, Box::new(|r, c| (r, c)))
    } else {
        (vec![counts.iter().map(|row| row[0]).collect()], Box::new(|r, _| (0, r)))
    };

    let mut cell_id = vec![vec![None; counts[0].len()]; counts.len()];
    let mut extent: Vec<(usize, usize, usize)> = Vec::new();
    for (r, row) in counts.iter().enumerate() {
        let mut start = 0;
        let mut acc = 0;
        let mut row_cells: Vec<usize> = Vec::new();
        for (c, &n) in row.iter().enumerate() {
            acc += n;
            if acc >= min_occupancy {
                let id = extent.len();
                extent.push((r, start, c));
                row_cells.push(id);
                for slot in &mut cell_id[r][start..=c] {
                    *slot = Some(id);
                }
                start = c + 1;
                acc = 0;
            }
        }
        if start < row.len() {
            if let Some(&last) = row_cells.last() {
                extent[last].2 = row.len() - 1;
                for slot in &mut cell_id[r][start..] {
                    *slot = Some(last);
                }
            }
        }
    }

    let mut dropped = 0;
    let of_item = raw
        .iter()
        .map(|rc| {
            let id = rc.and_then(|(r, c)| {
                let (r, c) = remap(r, c);
                cell_id[r][c]
            });
            if id.is_none() {
                dropped += 1;
            }
            id
        })
        .collect();
    Cells { of_item, extent, dropped }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_edges_split_evenly() {
        let v: Vec<f64> = (0..100).map(f64::from).collect();
        let e = quantile_edges(&v, 4);
        assert_eq!(e, vec![25.0, 50.0, 75.0]);
        assert_eq!(bin_of(&e, 24.9), 0);
        assert_eq!(bin_of(&e, 25.0), 1);
        assert_eq!(bin_of(&e, 99.0), 3);
    }

    #[test]
    fn one_dimensional_cells_cover_everything() {
        let f: Vec<[f64; 2]> = (0..1000).map(|i| [i as f64, 0.0]).collect();
        let cells = tensor_cells(&f, 1, 20, 30);
        assert_eq!(cells.len(), 20);
        assert_eq!(cells.dropped, 0);
    }

    #[test]
    fn sparse_cells_merge_along_the_row() {
        // Strongly dependent features leave off-diagonal cells empty.
        let f: Vec<[f64; 2]> = (0..2000).map(|i| [i as f64, i as f64 + (i % 7) as f64]).collect();
        let cells = tensor_cells(&f, 2, 10, 30);
        let mut sizes = vec![0usize; cells.len()];
        for id in cells.of_item.iter().flatten() {
            sizes[*id] += 1;
        }
        assert!(sizes.iter().all(|&n| n >= 30), "{sizes:?}");
        assert_eq!(cells.dropped, 0);
    }

    #[test]
    fn tiny_rows_are_dropped_not_faked() {
        let f = vec![[0.0, 0.0]; 10];
        let cells = tensor_cells(&f, 1, 20, 30);
        assert!(cells.is_empty());
        assert_eq!(cells.dropped, 10);
    }
}
