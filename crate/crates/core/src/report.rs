//! Summaries of per-tile values: area-weighted distributions, percentiles,
//! and grayscale heatmaps.

use std::path::Path;

use crate::error::{Error, Result};
use crate::pgm;

/// Relative slack when comparing cumulative weights against a target
/// fraction, so that e.g. four equal cells reach exactly 50% at the second.
const FRACTION_EPS: f64 = 1e-12;

/// Values with area weights, sorted by value.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    entries: Vec<(f64, f64)>,
    total: f64,
}

impl Distribution {
    /// `entries` are `(value, area)` pairs. Areas must be non-negative with a
    /// positive sum.
    pub fn new(mut entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("distribution needs at least one value".into()));
        }
        if entries.iter().any(|(v, w)| v.is_nan() || !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "distribution values must be numbers with finite non-negative weights".into(),
            ));
        }
        let total: f64 = entries.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument("distribution weights sum to zero".into()));
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Distribution { entries, total })
    }

    /// Every value weighted equally.
    pub fn uniform(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        Distribution::new(values.into_iter().map(|v| (v, 1.0)).collect())
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn min(&self) -> f64 {
        self.entries[0].0
    }

    pub fn max(&self) -> f64 {
        self.entries[self.entries.len() - 1].0
    }

    /// Weighted fraction of values `<= threshold`.
    pub fn cumulative_fraction(&self, threshold: f64) -> f64 {
        let below: f64 = self
            .entries
            .iter()
            .take_while(|(v, _)| *v <= threshold)
            .fold(0.0, |acc, (_, w)| acc + w);
        (below / self.total).clamp(0.0, 1.0)
    }

    /// Smallest value whose cumulative fraction reaches `p / 100`.
    pub fn percentile(&self, p: f64) -> Result<f64> {
        if !(0.0..=100.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("percentile {p} outside [0, 100]")));
        }
        let target = p / 100.0 * self.total * (1.0 - FRACTION_EPS);
        let mut acc = 0.0;
        for (i, &(v, w)) in self.entries.iter().enumerate() {
            acc += w;
            // Equal values are one step of the CDF.
            let last_of_run = self.entries.get(i + 1).is_none_or(|n| n.0 != v);
            if last_of_run && acc >= target {
                return Ok(v);
            }
        }
        Ok(self.max())
    }

    /// Fraction of the space whose bound is within `tolerance`.
    pub fn trusted_fraction(&self, tolerance: f64) -> f64 {
        self.cumulative_fraction(tolerance)
    }

    /// `(threshold, fraction)` rows at every distinct value.
    pub fn cdf_table(&self) -> Vec<(f64, f64)> {
        let mut rows: Vec<(f64, f64)> = Vec::new();
        let mut acc = 0.0;
        for &(v, w) in &self.entries {
            acc += w;
            match rows.last_mut() {
                Some(last) if last.0 == v => last.1 = acc / self.total,
                _ => rows.push((v, acc / self.total)),
            }
        }
        rows
    }
}

/// One grayscale pixel per grid cell. Offset index runs left to right and
/// angle index bottom to top.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    pub min: f64,
    pub max: f64,
}

impl Heatmap {
    /// Builds a heatmap from `(offset index, angle index, value)` triples
    /// covering a `delta_cells × theta_cells` grid exactly once each. The
    /// value range maps linearly onto 0..=255; a constant field is all zero.
    pub fn from_cells(
        delta_cells: usize,
        theta_cells: usize,
        cells: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Result<Self> {
        let mut grid: Vec<Option<f64>> = vec![None; delta_cells * theta_cells];
        for ((i, j), v) in cells {
            if i >= delta_cells || j >= theta_cells {
                return Err(Error::InvalidArgument(format!(
                    "cell ({i}, {j}) outside {delta_cells}x{theta_cells} grid"
                )));
            }
            grid[j * delta_cells + i] = Some(v);
        }
        let mut values = Vec::with_capacity(grid.len());
        for (k, v) in grid.iter().enumerate() {
            values.push(v.ok_or(Error::MissingCell((k % delta_cells, k / delta_cells)))?);
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        let mut pixels = vec![0u8; values.len()];
        for j in 0..theta_cells {
            let row = theta_cells - 1 - j;
            for i in 0..delta_cells {
                let v = values[j * delta_cells + i];
                let level = if span > 0.0 {
                    ((v - min) / span * 255.0).round()
                } else {
                    0.0
                };
                pixels[row * delta_cells + i] = level as u8;
            }
        }
        Ok(Heatmap {
            width: delta_cells,
            height: theta_cells,
            pixels,
            min,
            max,
        })
    }

    /// Writes `<path>` as PGM and `<path>.txt` with the legend.
    pub fn write(&self, path: impl AsRef<Path>, title: &str, axes: &str) -> Result<()> {
        let path = path.as_ref();
        pgm::write_raster(path, self.width, self.height, &self.pixels)?;
        let legend = format!(
            "title: {title}\n{axes}\nwidth: {}\nheight: {}\nblack: {}\nwhite: {}\n",
            self.width, self.height, self.min, self.max
        );
        let mut legend_path = path.as_os_str().to_owned();
        legend_path.push(".txt");
        std::fs::write(&legend_path, legend).map_err(|e| Error::io(legend_path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cumulative_fraction_examples() {
        let d = Distribution::uniform([1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(d.cumulative_fraction(0.5).is_sign_positive() && d.cumulative_fraction(0.5) == 0.0);
        assert_eq!(d.cumulative_fraction(9.0), 1.0);
        assert_eq!(d.cumulative_fraction(2.0), 0.5);
    }

    #[test]
    fn percentile_examples() {
        let d = Distribution::uniform([4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(d.percentile(100.0).unwrap(), 4.0);
        assert_eq!(d.percentile(0.0).unwrap(), 1.0);
        assert_eq!(d.percentile(50.0).unwrap(), 2.0);
        assert_eq!(d.percentile(50.1).unwrap(), 3.0);
        assert!(d.percentile(101.0).is_err());
    }

    #[test]
    fn area_weights_count() {
        // A half-size edge cell counts half.
        let d = Distribution::new(vec![(1.0, 1.0), (5.0, 0.5)]).unwrap();
        assert!((d.cumulative_fraction(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.total_weight(), 1.5);
    }

    #[test]
    fn trusted_fraction_examples() {
        let d = Distribution::uniform([0.5, 1.0, 2.0, 5.0]).unwrap();
        assert_eq!(d.trusted_fraction(0.03 * 80.0), 0.75);
        assert_eq!(d.trusted_fraction(0.0), 0.0);
        assert_eq!(d.trusted_fraction(f64::INFINITY), 1.0);
        let with_zero = Distribution::uniform([0.0, 1.0]).unwrap();
        assert_eq!(with_zero.trusted_fraction(0.0), 0.5);
    }

    #[test]
    fn empty_distribution_fails() {
        assert!(Distribution::uniform(std::iter::empty()).is_err());
    }

    #[test]
    fn heatmap_layout() {
        let cells = (0..3).flat_map(|i| (0..2).map(move |j| ((i, j), 7.0)));
        let flat = Heatmap::from_cells(3, 2, cells).unwrap();
        assert_eq!(flat.pixels, vec![0; 6]);

        let cells = (0..3).flat_map(|i| (0..2).map(move |j| ((i, j), if (i, j) == (2, 0) { 9.0 } else { 1.0 })));
        let one = Heatmap::from_cells(3, 2, cells).unwrap();
        // Angle index 0 is the bottom row.
        assert_eq!(one.pixels, vec![0, 0, 0, 0, 0, 255]);
        assert_eq!((one.min, one.max), (1.0, 9.0));

        let missing = Heatmap::from_cells(2, 2, [((0, 0), 1.0)]);
        assert!(matches!(missing, Err(Error::MissingCell(_))));
    }

    proptest! {
        #[test]
        fn cdf_and_percentile_are_monotone_inverses(
            values in prop::collection::vec((0.0f64..100.0, 0.01f64..2.0), 1..40),
            t1 in 0.0f64..100.0, t2 in 0.0f64..100.0,
        ) {
            let d = Distribution::new(values).unwrap();
            let (a, b) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(d.cumulative_fraction(a) <= d.cumulative_fraction(b));
            prop_assert!(d.percentile(a).unwrap() <= d.percentile(b).unwrap());
            for v in [a, b] {
                let p = d.cumulative_fraction(v) * 100.0;
                prop_assert!(d.percentile(p).unwrap() <= v.max(d.min()));
            }
        }
    }
}
