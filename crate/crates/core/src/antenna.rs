//! Azimuthal directivity patterns.
//!
//! Gains are linear power-density weights normalized so that their mean over
//! the circle is one. Angles are in degrees, measured from boresight.

use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Pattern {
    /// Flat main lobe of width `beamwidth_deg` and flat back lobe.
    Irp {
        beamwidth_deg: f64,
        main_gain: f64,
        back_gain: f64,
    },
    /// Piecewise-linear pattern through `(angles[i], gains[i])`, periodic in 360°.
    Tabulated { angles: Vec<f64>, gains: Vec<f64> },
}

/// Wraps an angle in degrees to `[-180, 180)`.
pub fn wrap_deg(phi: f64) -> f64 {
    let w = (phi + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

#[derive(Deserialize)]
struct Row {
    angle_deg: f64,
    gain_linear: f64,
}

impl Pattern {
    /// Ideal sector pattern; the back-lobe gain follows from losslessness.
    pub fn irp(beamwidth_deg: f64, main_gain: f64) -> Result<Self> {
        if !(beamwidth_deg > 0.0 && beamwidth_deg < 360.0) {
            return Err(Error::Pattern(format!(
                "beamwidth {beamwidth_deg} outside (0, 360)"
            )));
        }
        let frac = beamwidth_deg / 360.0;
        if !(main_gain >= 1.0 && main_gain * frac <= 1.0 + 1e-12) {
            return Err(Error::Pattern(format!(
                "main-lobe gain {main_gain} outside [1, {}]",
                1.0 / frac
            )));
        }
        let back_gain = ((1.0 - frac * main_gain) / (1.0 - frac)).max(0.0);
        Ok(Pattern::Irp {
            beamwidth_deg,
            main_gain,
            back_gain,
        })
    }

    pub fn omni() -> Self {
        Pattern::Irp {
            beamwidth_deg: 120.0,
            main_gain: 1.0,
            back_gain: 1.0,
        }
    }

    /// Builds a tabulated pattern and rescales it to unit circular mean.
    pub fn from_table(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 8 {
            return Err(Error::Pattern(format!(
                "need at least 8 samples, got {}",
                samples.len()
            )));
        }
        for (i, &(a, g)) in samples.iter().enumerate() {
            if !a.is_finite() || !g.is_finite() {
                return Err(Error::Pattern(format!("non-finite sample at row {i}")));
            }
            if !(-180.0..180.0).contains(&a) {
                return Err(Error::Pattern(format!("angle {a} outside [-180, 180)")));
            }
            if g < 0.0 {
                return Err(Error::Pattern(format!("negative gain {g} at angle {a}")));
            }
            if i > 0 && a <= samples[i - 1].0 {
                return Err(Error::Pattern(format!(
                    "angles not strictly ascending at row {i}"
                )));
            }
        }
        let angles: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let gains: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let mean = circular_mean(&angles, &gains);
        if !(mean > 0.0) {
            return Err(Error::Pattern("pattern has zero total gain".into()));
        }
        Ok(Pattern::Tabulated {
            angles,
            gains: gains.iter().map(|g| g / mean).collect(),
        })
    }

    /// Reads a two-column `angle_deg,gain_linear` table with a header row.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["angle_deg", "gain_linear"] {
            return Err(Error::Pattern(format!(
                "expected header `angle_deg,gain_linear`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut samples = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            samples.push((row.angle_deg, row.gain_linear));
        }
        Self::from_table(&samples)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Gain toward `phi` degrees off boresight. The main-lobe edge
    /// `|phi| = beamwidth/2` counts as main lobe.
    pub fn gain_at(&self, phi: f64) -> f64 {
        let phi = wrap_deg(phi);
        match self {
            Pattern::Irp {
                beamwidth_deg,
                main_gain,
                back_gain,
            } => {
                if phi.abs() <= beamwidth_deg / 2.0 {
                    *main_gain
                } else {
                    *back_gain
                }
            }
            Pattern::Tabulated { angles, gains } => interpolate(angles, gains, phi),
        }
    }

    /// True when the pattern is identical in every direction.
    pub fn is_omni(&self) -> bool {
        match self {
            Pattern::Irp {
                main_gain,
                back_gain,
                ..
            } => main_gain == back_gain,
            Pattern::Tabulated { gains, .. } => gains.iter().all(|g| *g == gains[0]),
        }
    }
}

fn interpolate(angles: &[f64], gains: &[f64], phi: f64) -> f64 {
    let n = angles.len();
    // index of the first sample strictly above phi
    let hi = angles.partition_point(|&a| a <= phi);
    let (a0, g0, a1, g1) = if hi == 0 {
        (angles[n - 1] - 360.0, gains[n - 1], angles[0], gains[0])
    } else if hi == n {
        (angles[n - 1], gains[n - 1], angles[0] + 360.0, gains[0])
    } else {
        (angles[hi - 1], gains[hi - 1], angles[hi], gains[hi])
    };
    let w = (phi - a0) / (a1 - a0);
    g0 + w * (g1 - g0)
}

/// Exact mean of the periodic linear interpolant.
fn circular_mean(angles: &[f64], gains: &[f64]) -> f64 {
    let n = angles.len();
    let mut area = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        let span = if j == 0 {
            angles[0] + 360.0 - angles[n - 1]
        } else {
            angles[j] - angles[i]
        };
        area += 0.5 * (gains[i] + gains[j]) * span;
    }
    area / 360.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn back(p: &Pattern) -> f64 {
        match p {
            Pattern::Irp { back_gain, .. } => *back_gain,
            _ => unreachable!(),
        }
    }

    #[test]
    fn irp_back_lobe() {
        assert_eq!(back(&Pattern::irp(120.0, 3.0).unwrap()), 0.0);
        assert!((back(&Pattern::irp(120.0, 2.0).unwrap()) - 0.5).abs() < 1e-15);
        assert_eq!(back(&Pattern::irp(120.0, 1.0).unwrap()), 1.0);
    }

    #[test]
    fn irp_rejects_out_of_range_gain() {
        assert!(Pattern::irp(120.0, 3.5).is_err());
        assert!(Pattern::irp(120.0, 0.5).is_err());
        assert!(Pattern::irp(0.0, 1.0).is_err());
        assert!(Pattern::irp(360.0, 1.0).is_err());
    }

    #[test]
    fn irp_boundary_and_wrap() {
        let p = Pattern::irp(120.0, 3.0).unwrap();
        assert_eq!(p.gain_at(0.0), 3.0);
        assert_eq!(p.gain_at(60.0), 3.0);
        assert_eq!(p.gain_at(-60.0), 3.0);
        assert_eq!(p.gain_at(60.001), 0.0);
        assert_eq!(p.gain_at(-300.0), 3.0);
        assert_eq!(p.gain_at(180.0), 0.0);
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_deg(180.0), -180.0);
        assert_eq!(wrap_deg(-180.0), -180.0);
        assert_eq!(wrap_deg(540.0), -180.0);
        assert!(wrap_deg(-1e-14) < 180.0);
    }

    #[test]
    fn constant_table_normalizes_to_one() {
        let rows: Vec<_> = (0..12).map(|i| (-180.0 + 30.0 * i as f64, 2.0)).collect();
        let p = Pattern::from_table(&rows).unwrap();
        for phi in [-180.0, -17.3, 0.0, 95.0, 179.9] {
            assert!((p.gain_at(phi) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn table_rejects_bad_rows() {
        let mut rows: Vec<_> = (0..12).map(|i| (-180.0 + 30.0 * i as f64, 1.0)).collect();
        rows[4].1 = -0.1;
        assert!(matches!(Pattern::from_table(&rows), Err(Error::Pattern(_))));
        rows[4].1 = 1.0;
        rows.swap(2, 3);
        assert!(Pattern::from_table(&rows).is_err());
        assert!(Pattern::from_table(&rows[..7]).is_err());
        assert!(Pattern::from_table(&[(180.0, 1.0); 8]).is_err());
    }

    #[test]
    fn irp_round_trip_through_table() {
        let irp = Pattern::irp(120.0, 3.0).unwrap();
        // Half-degree offsets keep the 60° edges between samples, so the
        // interpolant already has unit mean.
        let rows: Vec<_> = (0..360)
            .map(|i| {
                let a = -179.5 + i as f64;
                (a, irp.gain_at(a))
            })
            .collect();
        let tab = Pattern::from_table(&rows).unwrap();
        for i in 0..3600 {
            let phi = -180.0 + 0.1 * i as f64;
            if (phi.abs() - 60.0).abs() > 1.0 {
                assert!(
                    (tab.gain_at(phi) - irp.gain_at(phi)).abs() < 1e-9,
                    "phi={phi}"
                );
            }
        }
    }

    #[test]
    fn csv_reader() {
        let text =
            "angle_deg,gain_linear\n-180,0\n-135,0\n-90,0.5\n-45,2\n0,3\n45,2\n90,0.5\n135,0\n";
        let p = Pattern::from_csv_reader(text.as_bytes()).unwrap();
        assert!(p.gain_at(0.0) > p.gain_at(90.0));
        assert!(Pattern::from_csv_reader("deg,gain\n".as_bytes()).is_err());
    }

    fn grid_mean(p: &Pattern) -> f64 {
        (0..3600)
            .map(|i| p.gain_at(-180.0 + 0.1 * i as f64))
            .sum::<f64>()
            / 3600.0
    }

    proptest! {
        #[test]
        fn irp_is_lossless(theta in 10.0f64..350.0, u in 0.0f64..1.0) {
            let aq = 1.0 + u * (360.0 / theta - 1.0);
            let p = Pattern::irp(theta, aq).unwrap();
            prop_assert!((grid_mean(&p) - 1.0).abs() < 1e-3 * aq.max(1.0) * 2.0);
        }

        #[test]
        fn tabulated_is_lossless_and_periodic(
            gains in proptest::collection::vec(0.0f64..5.0, 8..64),
            phi in -720.0f64..720.0,
        ) {
            prop_assume!(gains.iter().sum::<f64>() > 1e-3);
            let n = gains.len();
            let rows: Vec<_> = gains.iter().enumerate()
                .map(|(i, g)| (-180.0 + 360.0 * i as f64 / n as f64, *g)).collect();
            let p = Pattern::from_table(&rows).unwrap();
            prop_assert!((grid_mean(&p) - 1.0).abs() < 1e-3);
            prop_assert!((p.gain_at(phi) - p.gain_at(phi + 360.0)).abs() < 1e-9);
        }
    }
}
