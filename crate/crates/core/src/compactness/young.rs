//! Windowed empirical value distributions standing in for `ν_{x,t}`.

use crate::compactness::windows::WindowLattice;
use crate::error::Result;
use crate::flux::{FluxComponent, RANGE_SLACK};
use crate::grid::{FieldTrajectory, Interval};

#[derive(Debug, Clone, PartialEq)]
pub struct YoungHistogramSet {
    pub window: Vec<usize>,
    pub bins: usize,
    pub interval: Interval,
    /// One probability vector per window.
    pub probabilities: Vec<Vec<f64>>,
    /// Exact window means `⟨ν, λ⟩`.
    pub means: Vec<f64>,
    /// Exact window variances `⟨ν, λ²⟩ − ⟨ν, λ⟩²`.
    pub variances: Vec<f64>,
}

impl YoungHistogramSet {
    pub fn bin_width(&self) -> f64 {
        self.interval.width() / self.bins as f64
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        self.interval.lo + (b as f64 + 0.5) * self.bin_width()
    }

    /// Mean of the binned measure of window `w`.
    pub fn histogram_mean(&self, w: usize) -> f64 {
        self.probabilities[w]
            .iter()
            .enumerate()
            .map(|(b, p)| p * self.bin_center(b))
            .sum()
    }
}

fn bin_of(interval: Interval, bins: usize, u: f64) -> Result<usize> {
    interval.check(u, RANGE_SLACK)?;
    let width = interval.width();
    if width == 0.0 {
        return Ok(0);
    }
    let b = ((u - interval.lo) / width * bins as f64).floor();
    Ok((b.max(0.0) as usize).min(bins - 1))
}

/// Histograms of `u` over each (cells × snapshots) window, with `bins`
/// equal bins covering `interval`.
pub fn young_histograms(
    traj: &FieldTrajectory,
    window: &[usize],
    bins: usize,
    interval: Interval,
) -> Result<YoungHistogramSet> {
    let lattice = WindowLattice::new(traj.grid(), traj.len(), window)?;
    let bins = bins.max(1);
    let count = lattice.count();
    let mut probabilities = vec![vec![0.0; bins]; count];
    // sums are taken relative to one sample per window, so point masses
    // come out with exactly zero variance
    let mut shift = vec![f64::NAN; count];
    let mut sums = vec![0.0; count];
    for n in 0..traj.len() {
        for (idx, &u) in traj.snapshot(n).iter().enumerate() {
            let w = lattice.assign(n, idx);
            probabilities[w][bin_of(interval, bins, u)?] += 1.0;
            if shift[w].is_nan() {
                shift[w] = u;
            }
            sums[w] += u - shift[w];
        }
    }
    let size = lattice.size() as f64;
    let offsets: Vec<f64> = sums.iter().map(|s| s / size).collect();
    let means: Vec<f64> = shift.iter().zip(&offsets).map(|(s, o)| s + o).collect();
    let mut variances = vec![0.0; count];
    for n in 0..traj.len() {
        for (idx, &u) in traj.snapshot(n).iter().enumerate() {
            let w = lattice.assign(n, idx);
            variances[w] += (u - shift[w] - offsets[w]).powi(2);
        }
    }
    variances.iter_mut().for_each(|v| *v /= size);
    for p in probabilities.iter_mut() {
        p.iter_mut().for_each(|x| *x /= size);
    }
    Ok(YoungHistogramSet {
        window: window.to_vec(),
        bins,
        interval,
        probabilities,
        means,
        variances,
    })
}

/// Mean window variance divided by `|I|²`; zero exactly when every window
/// is a point mass.
pub fn dirac_concentration(set: &YoungHistogramSet) -> f64 {
    let width = set.interval.width();
    if width == 0.0 || set.variances.is_empty() {
        return 0.0;
    }
    set.variances.iter().sum::<f64>() / set.variances.len() as f64 / (width * width)
}

/// Largest window value of `|⟨ν, f⟩ − f(⟨ν, λ⟩)|`.
pub fn young_flux_defect(
    traj: &FieldTrajectory,
    window: &[usize],
    component: FluxComponent,
) -> Result<f64> {
    let lattice = WindowLattice::new(traj.grid(), traj.len(), window)?;
    let means = lattice.averages(|n, i| traj.snapshot(n)[i]);
    let flux_means = lattice.averages(|n, i| component.value(traj.snapshot(n)[i]));
    Ok(means
        .iter()
        .zip(&flux_means)
        .map(|(m, fm)| (fm - component.value(*m)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{snapshot_times, Grid};
    use std::sync::Arc;

    fn traj(values: impl Fn(usize, usize) -> f64) -> FieldTrajectory {
        let grid = Arc::new(Grid::unit_1d(16, 1.0).unwrap());
        let times = snapshot_times(1.0, 8);
        let snaps = (0..8)
            .map(|n| (0..16).map(|i| values(n, i)).collect())
            .collect();
        FieldTrajectory::new(grid, 0.01, times, snaps).unwrap()
    }

    #[test]
    fn constant_field_is_a_point_mass() {
        let set =
            young_histograms(&traj(|_, _| 0.3), &[4, 4], 10, Interval::symmetric(1.0)).unwrap();
        for p in &set.probabilities {
            assert_eq!(p.iter().filter(|&&x| x > 0.0).count(), 1);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(p[6], 1.0);
        }
        assert_eq!(dirac_concentration(&set), 0.0);
    }

    #[test]
    fn checkerboard_splits_mass() {
        let board = traj(|n, i| if (n + i) % 2 == 0 { 1.0 } else { -1.0 });
        let set = young_histograms(&board, &[4, 4], 8, Interval::symmetric(1.0)).unwrap();
        for p in &set.probabilities {
            assert_eq!(p[0], 0.5);
            assert_eq!(p[7], 0.5);
        }
        assert!((dirac_concentration(&set) - 0.25).abs() < 1e-15);
        let smooth = traj(|n, i| 0.1 * ((n + i) % 2) as f64);
        let s2 = young_histograms(&smooth, &[4, 4], 8, Interval::symmetric(1.0)).unwrap();
        assert!(dirac_concentration(&s2) < dirac_concentration(&set));
    }

    #[test]
    fn histogram_means_track_window_means() {
        let t = traj(|n, i| ((n * 16 + i) as f64 * 0.37).sin());
        let set = young_histograms(&t, &[4, 2], 20, Interval::symmetric(1.0)).unwrap();
        for w in 0..set.means.len() {
            assert!((set.histogram_mean(w) - set.means[w]).abs() <= set.bin_width());
        }
    }

    #[test]
    fn values_outside_the_interval_are_rejected() {
        let t = traj(|_, _| 1.5);
        assert!(young_histograms(&t, &[4, 4], 8, Interval::symmetric(1.0)).is_err());
    }

    #[test]
    fn flux_defect_vanishes_for_constants() {
        let d = young_flux_defect(&traj(|_, _| 0.4), &[4, 4], FluxComponent::Burgers).unwrap();
        assert!(d < 1e-15);
        let board = traj(|n, i| if (n + i) % 2 == 0 { 1.0 } else { -1.0 });
        let d = young_flux_defect(&board, &[4, 4], FluxComponent::Burgers).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }
}
