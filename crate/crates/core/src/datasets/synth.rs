use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SequenceSample;
use crate::error::{Error, Result};
use crate::tensor::{Matrix, RandomStream};

/// Ranges for randomly drawn sinusoids `A * sin(2 pi f t + phi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SinusoidSpec {
    pub amplitude: (f64, f64),
    /// Cycles per timestep.
    pub frequency: (f64, f64),
    pub phase: (f64, f64),
    pub length: usize,
    pub count: usize,
}

impl Default for SinusoidSpec {
    fn default() -> Self {
        Self {
            amplitude: (0.5, 2.0),
            frequency: (0.02, 0.1),
            phase: (0.0, 2.0 * PI),
            length: 100,
            count: 1000,
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::Parameter(format!("{name} range [{lo}, {hi}] is invalid")));
    }
    Ok(())
}

/// Draws `spec.count` sinusoids on the unit grid `t = 0..length`.
pub fn gen_sinusoids(spec: &SinusoidSpec, stream: &mut RandomStream) -> Result<Vec<SequenceSample>> {
    check_range("amplitude", spec.amplitude)?;
    check_range("frequency", spec.frequency)?;
    check_range("phase", spec.phase)?;
    if spec.length < 2 {
        return Err(Error::Parameter(format!(
            "sinusoid length must be at least 2, got {}",
            spec.length
        )));
    }
    let mut out = Vec::with_capacity(spec.count);
    for id in 0..spec.count {
        let a = stream.uniform_range(spec.amplitude.0, spec.amplitude.1);
        let f = stream.uniform_range(spec.frequency.0, spec.frequency.1);
        let phi = stream.uniform_range(spec.phase.0, spec.phase.1);
        let values = (0..spec.length)
            .map(|t| a * (2.0 * PI * f * t as f64 + phi).sin())
            .collect();
        out.push(SequenceSample::new(
            id,
            None,
            Matrix::from_vec(spec.length, 1, values)?,
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Linear,
    Circles,
    Spirals,
}

impl std::str::FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "circles" => Ok(Self::Circles),
            "spirals" => Ok(Self::Spirals),
            other => Err(Error::Parameter(format!("unknown boundary kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundarySpec {
    pub kind: BoundaryKind,
    pub samples_per_class: usize,
    pub noise_std: f64,
}

impl Default for BoundarySpec {
    fn default() -> Self {
        Self {
            kind: BoundaryKind::Spirals,
            samples_per_class: 500,
            noise_std: 0.05,
        }
    }
}

/// Two-class labelled points in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoints {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

/// Spiral arms make this many full turns.
pub const SPIRAL_TURNS: f64 = 1.75;

/// Generates one of the two-class boundary benchmarks.
///
/// * `Linear`: two elongated Gaussian blobs on either side of the line
///   `y = x`; without noise every class-0 point has `y > x`.
/// * `Circles`: a disc of radius 1 inside an annulus `1.5 <= r < 2.5`.
/// * `Spirals`: two interleaved Archimedean spirals, the second rotated by pi.
///
/// Samples alternate between classes; `noise_std` adds isotropic Gaussian noise.
pub fn gen_boundary_dataset(spec: &BoundarySpec, stream: &mut RandomStream) -> Result<LabeledPoints> {
    if spec.samples_per_class == 0 {
        return Err(Error::Parameter("samples_per_class must be at least 1".into()));
    }
    if !(spec.noise_std >= 0.0) || !spec.noise_std.is_finite() {
        return Err(Error::Parameter(format!("noise_std {} is invalid", spec.noise_std)));
    }
    let n = spec.samples_per_class;
    let mut points = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(2 * n);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for _ in 0..n {
        for class in 0..2usize {
            let sign = if class == 0 { 1.0 } else { -1.0 };
            let (x, y) = match spec.kind {
                BoundaryKind::Linear => {
                    let along = stream.normal();
                    let across = 0.25 + 0.5 * stream.normal().abs();
                    // along (1, 1)/sqrt2, across (-1, 1)/sqrt2
                    (
                        (along - sign * across) * inv_sqrt2,
                        (along + sign * across) * inv_sqrt2,
                    )
                }
                BoundaryKind::Circles => {
                    let r = if class == 0 {
                        stream.uniform().sqrt()
                    } else {
                        stream.uniform_range(1.5, 2.5)
                    };
                    let theta = stream.uniform_range(0.0, 2.0 * PI);
                    (r * theta.cos(), r * theta.sin())
                }
                BoundaryKind::Spirals => {
                    let theta = stream.uniform().sqrt() * SPIRAL_TURNS * 2.0 * PI;
                    let r = theta / (SPIRAL_TURNS * 2.0 * PI) * 2.0;
                    let offset = if class == 0 { 0.0 } else { PI };
                    (r * (theta + offset).cos(), r * (theta + offset).sin())
                }
            };
            let (nx, ny) = if spec.noise_std > 0.0 {
                (spec.noise_std * stream.normal(), spec.noise_std * stream.normal())
            } else {
                (0.0, 0.0)
            };
            points.push(vec![x + nx, y + ny]);
            labels.push(class);
        }
    }
    Ok(LabeledPoints { points, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::fit_sinusoid;

    #[test]
    fn degenerate_ranges_give_exact_sinusoid() {
        let spec = SinusoidSpec {
            amplitude: (1.0, 1.0),
            frequency: (0.05, 0.05),
            phase: (0.3, 0.3),
            length: 50,
            count: 2,
        };
        let s = gen_sinusoids(&spec, &mut RandomStream::new(1)).unwrap();
        for t in 0..50 {
            let want = (2.0 * PI * 0.05 * t as f64 + 0.3).sin();
            assert_eq!(s[0].values.get(t, 0), want);
        }
    }

    #[test]
    fn bounded_by_max_amplitude() {
        let spec = SinusoidSpec {
            count: 50,
            ..Default::default()
        };
        for s in gen_sinusoids(&spec, &mut RandomStream::new(2)).unwrap() {
            assert!(s.values.as_slice().iter().all(|v| v.abs() <= 2.0));
            assert_eq!(s.len(), 100);
        }
    }

    #[test]
    fn fit_recovers_generating_parameters() {
        let spec = SinusoidSpec {
            count: 5,
            ..Default::default()
        };
        let mut st = RandomStream::new(3);
        let samples = gen_sinusoids(&spec, &mut st.clone()).unwrap();
        for s in &samples {
            let a = st.uniform_range(0.5, 2.0);
            let f = st.uniform_range(0.02, 0.1);
            let phi = st.uniform_range(0.0, 2.0 * PI);
            let fit = fit_sinusoid(&s.values.column(0)).unwrap();
            assert!(fit.rms_residual < 1e-9, "residual {}", fit.rms_residual);
            assert!((fit.amplitude - a).abs() < 1e-8);
            assert!((fit.frequency - f).abs() < 1e-10);
            let dphi = (fit.phase - phi).rem_euclid(2.0 * PI);
            assert!(dphi < 1e-7 || 2.0 * PI - dphi < 1e-7);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut st = RandomStream::new(0);
        let bad = SinusoidSpec {
            amplitude: (2.0, 1.0),
            ..Default::default()
        };
        assert!(gen_sinusoids(&bad, &mut st).is_err());
        let short = SinusoidSpec {
            length: 1,
            ..Default::default()
        };
        assert!(gen_sinusoids(&short, &mut st).is_err());
        let spec = BoundarySpec {
            kind: BoundaryKind::Linear,
            samples_per_class: 0,
            noise_std: 0.0,
        };
        assert!(gen_boundary_dataset(&spec, &mut st).is_err());
    }

    #[test]
    fn noiseless_linear_is_separated_by_construction_line() {
        let spec = BoundarySpec {
            kind: BoundaryKind::Linear,
            samples_per_class: 200,
            noise_std: 0.0,
        };
        let d = gen_boundary_dataset(&spec, &mut RandomStream::new(5)).unwrap();
        for (p, y) in d.points.iter().zip(&d.labels) {
            if *y == 0 {
                assert!(p[1] > p[0]);
            } else {
                assert!(p[1] < p[0]);
            }
        }
    }

    #[test]
    fn noiseless_circles_are_nested() {
        let spec = BoundarySpec {
            kind: BoundaryKind::Circles,
            samples_per_class: 200,
            noise_std: 0.0,
        };
        let d = gen_boundary_dataset(&spec, &mut RandomStream::new(6)).unwrap();
        let r = |p: &Vec<f64>| p[0].hypot(p[1]);
        let max0 = d
            .points
            .iter()
            .zip(&d.labels)
            .filter(|(_, y)| **y == 0)
            .map(|(p, _)| r(p))
            .fold(0.0, f64::max);
        let min1 = d
            .points
            .iter()
            .zip(&d.labels)
            .filter(|(_, y)| **y == 1)
            .map(|(p, _)| r(p))
            .fold(f64::INFINITY, f64::min);
        assert!(max0 < min1);
    }

    #[test]
    fn spirals_are_learnable_by_one_nn() {
        let mut st = RandomStream::new(7);
        let reference = gen_boundary_dataset(
            &BoundarySpec {
                kind: BoundaryKind::Spirals,
                samples_per_class: 2000,
                noise_std: 0.05,
            },
            &mut st,
        )
        .unwrap();
        let test = gen_boundary_dataset(
            &BoundarySpec {
                kind: BoundaryKind::Spirals,
                samples_per_class: 250,
                noise_std: 0.05,
            },
            &mut st,
        )
        .unwrap();
        let mut wrong = 0;
        for (q, y) in test.points.iter().zip(&test.labels) {
            let (mut best, mut label) = (f64::INFINITY, 0);
            for (p, l) in reference.points.iter().zip(&reference.labels) {
                let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                if d < best {
                    best = d;
                    label = *l;
                }
            }
            if label != *y {
                wrong += 1;
            }
        }
        let err = wrong as f64 / test.labels.len() as f64;
        assert!(err < 0.05, "1-NN error {err}");
    }
}
