//! Ensemble-averaged decoupling fidelities.
//!
//! Every ensemble member carries one static field `B` and one error sample,
//! and the sample is reused for every pulse of the sequence: errors are
//! systematic, not per-pulse noise.
//!
//! Averages are a deterministic fan-out over member indices followed by a
//! reduction in index order, so results are bit-identical for any number of
//! worker threads.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DdError, Result};
use crate::pulse::{
    draw_error_sample, spatial_error, BathParams, ErrorMode, PulseErrorParams, PulseErrorSample, PulseSet, ZOrder,
};
use crate::quadrature::{bath_rule, unit_interval};
use crate::sequence::{build, Event, Protocol, PulseAxis, PulseSequence};
use crate::spin::{Axis, Unitary2};
use crate::stream::MemberVariates;

const MC_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Averaging {
    /// Gauss-Hermite (or composite Gauss-Legendre at long times) in `B`,
    /// Gauss-Legendre in the spatial coordinate of each error parameter.
    Quadrature {
        nodes_b: usize,
        nodes_eps: usize,
        nodes_nz: usize,
    },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for Averaging {
    fn default() -> Self {
        Averaging::Quadrature {
            nodes_b: 32,
            nodes_eps: 16,
            nodes_nz: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub bath: BathParams,
    pub errors: PulseErrorParams,
    pub averaging: Averaging,
    #[serde(default)]
    pub error_mode: ErrorMode,
    #[serde(default)]
    pub z_order: ZOrder,
}

impl EnsembleConfig {
    pub fn new(bath: BathParams, errors: PulseErrorParams) -> Self {
        EnsembleConfig {
            bath,
            errors,
            averaging: Averaging::default(),
            error_mode: ErrorMode::default(),
            z_order: ZOrder::default(),
        }
    }

    pub fn with_averaging(mut self, averaging: Averaging) -> Self {
        self.averaging = averaging;
        self
    }

    pub fn with_error_mode(mut self, mode: ErrorMode) -> Self {
        self.error_mode = mode;
        self
    }

    pub fn with_z_order(mut self, order: ZOrder) -> Self {
        self.z_order = order;
        self
    }

    /// Quadrature with every node count multiplied by `factor`.
    pub fn refined(mut self, factor: usize) -> Self {
        if let Averaging::Quadrature {
            nodes_b,
            nodes_eps,
            nodes_nz,
        } = self.averaging
        {
            self.averaging = Averaging::Quadrature {
                nodes_b: nodes_b * factor,
                nodes_eps: nodes_eps * factor,
                nodes_nz: nodes_nz * factor,
            };
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        BathParams::new(self.bath.b)?;
        self.errors.validate()?;
        match self.averaging {
            Averaging::Quadrature {
                nodes_b,
                nodes_eps,
                nodes_nz,
            } => {
                for (key, n) in [("nodes_b", nodes_b), ("nodes_eps", nodes_eps), ("nodes_nz", nodes_nz)] {
                    if n < 2 {
                        return Err(DdError::config(key, format!("must be at least 2, got {n}")));
                    }
                }
            }
            Averaging::MonteCarlo { samples, .. } => {
                if samples == 0 {
                    return Err(DdError::config("samples", "must be at least 1"));
                }
            }
        }
        Ok(())
    }

    /// Short stable hash of the configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(json.as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Ensemble-averaged `(F_x, F_y, F_z)`, with Monte Carlo standard errors when
/// sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fidelities {
    pub values: [f64; 3],
    pub std_err: Option<[f64; 3]>,
}

impl Fidelities {
    pub fn get(&self, axis: Axis) -> f64 {
        self.values[axis.index()]
    }
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Delay(f64),
    Pulse(PulseAxis),
}

/// A sequence with zero-length delays dropped, ready for repeated evaluation.
#[derive(Debug, Clone)]
struct Compiled {
    steps: Vec<Step>,
}

impl Compiled {
    fn new(seq: &PulseSequence) -> Self {
        let steps = seq
            .events()
            .iter()
            .filter_map(|e| match *e {
                Event::Delay(d) if d == 0.0 => None,
                Event::Delay(d) => Some(Step::Delay(d)),
                Event::Pulse(a) => Some(Step::Pulse(a)),
            })
            .collect();
        Compiled { steps }
    }

    #[inline]
    fn evolve(&self, field: f64, pulses: &PulseSet) -> Unitary2 {
        let mut u = Unitary2::IDENTITY;
        for step in &self.steps {
            u = match *step {
                Step::Delay(tau) => {
                    let half = Complex64::from_polar(1.0, -0.5 * field * tau);
                    u.premul_diagonal(half, half.conj())
                }
                Step::Pulse(PulseAxis::X) => pulses.x * u,
                Step::Pulse(PulseAxis::Y) => pulses.y * u,
                Step::Pulse(PulseAxis::Z) => pulses.z * u,
            };
        }
        debug_assert!(u.unitarity_defect() < 1e-10, "lost unitarity: {}", u.unitarity_defect());
        u
    }
}

/// Evolution operator of one ensemble member, with the composite pi_Z built
/// as pi_X then pi_Y.
pub fn evolve_once(seq: &PulseSequence, field: f64, sample: &PulseErrorSample) -> Result<Unitary2> {
    evolve_with_order(seq, field, sample, ZOrder::XThenY)
}

pub fn evolve_with_order(seq: &PulseSequence, field: f64, sample: &PulseErrorSample, order: ZOrder) -> Result<Unitary2> {
    let pulses = PulseSet::new(sample, order)?;
    Ok(Compiled::new(seq).evolve(field, &pulses))
}

/// Weighted error samples covering the error distribution.
fn error_nodes(config: &EnsembleConfig, nodes_eps: usize, nodes_nz: usize) -> Result<Vec<(PulseErrorSample, f64)>> {
    let p = &config.errors;
    let coordinate = |scale: f64, n: usize| -> Vec<(f64, f64)> {
        if scale == 0.0 {
            vec![(0.0, 1.0)]
        } else {
            unit_interval(n).iter().map(|(u, w)| (spatial_error(u, scale), w)).collect()
        }
    };
    let sample = |eps: f64, n_z: f64| PulseErrorSample {
        n_y: p.in_plane_ny,
        m_x: p.in_plane_mx,
        ..PulseErrorSample::symmetric(eps, n_z)
    };
    let nodes = match config.error_mode {
        ErrorMode::Independent => {
            let eps = coordinate(p.epsilon0, nodes_eps);
            let nz = coordinate(p.n0, nodes_nz);
            eps.iter()
                .flat_map(|&(e, we)| nz.iter().map(move |&(n, wn)| (e, n, we * wn)))
                .map(|(e, n, w)| (sample(e, n), w))
                .collect()
        }
        ErrorMode::CorrelatedSpatial => {
            if p.epsilon0 == 0.0 && p.n0 == 0.0 {
                vec![(sample(0.0, 0.0), 1.0)]
            } else {
                unit_interval(nodes_eps)
                    .iter()
                    .map(|(u, w)| (sample(spatial_error(u, p.epsilon0), spatial_error(u, p.n0)), w))
                    .collect()
            }
        }
    };
    for (s, _) in &nodes {
        s.x_axis()?;
        s.y_axis()?;
    }
    Ok(nodes)
}

fn weighted_sum(parts: impl IntoIterator<Item = [f64; 3]>) -> [f64; 3] {
    parts.into_iter().fold([0.0; 3], |mut acc, p| {
        for k in 0..3 {
            acc[k] += p[k];
        }
        acc
    })
}

fn member_sample(config: &EnsembleConfig, v: &MemberVariates) -> Result<PulseErrorSample> {
    let p_nz = match config.error_mode {
        ErrorMode::Independent => v.p_nz,
        ErrorMode::CorrelatedSpatial => v.p_eps,
    };
    draw_error_sample(&config.errors, v.p_eps, p_nz)
}

fn monte_carlo(
    samples: usize,
    seed: u64,
    eval: impl Fn(&MemberVariates) -> Result<[f64; 3]> + Sync,
) -> Result<Fidelities> {
    let chunks: Vec<(usize, usize)> = (0..samples)
        .step_by(MC_CHUNK)
        .map(|start| (start, (start + MC_CHUNK).min(samples)))
        .collect();
    let partial: Vec<([f64; 3], [f64; 3])> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut sum = [0.0; 3];
            let mut sq = [0.0; 3];
            for i in lo..hi {
                let f = eval(&MemberVariates::draw(seed, i as u64))?;
                for k in 0..3 {
                    sum[k] += f[k];
                    sq[k] += f[k] * f[k];
                }
            }
            Ok((sum, sq))
        })
        .collect::<Result<_>>()?;
    let n = samples as f64;
    let sum = weighted_sum(partial.iter().map(|p| p.0));
    let sq = weighted_sum(partial.iter().map(|p| p.1));
    let mut mean = [0.0; 3];
    let mut se = [0.0; 3];
    for k in 0..3 {
        mean[k] = sum[k] / n;
        let var = if samples > 1 {
            ((sq[k] - n * mean[k] * mean[k]) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        se[k] = (var / n).sqrt();
    }
    Ok(Fidelities {
        values: mean,
        std_err: Some(se),
    })
}

/// Ensemble average of all three fidelities for one sequence.
pub fn fidelities(seq: &PulseSequence, config: &EnsembleConfig) -> Result<Fidelities> {
    config.validate()?;
    let compiled = Compiled::new(seq);
    match config.averaging {
        Averaging::Quadrature {
            nodes_b,
            nodes_eps,
            nodes_nz,
        } => {
            let bath = bath_rule(config.bath.b * seq.total_time(), nodes_b);
            let members = error_nodes(config, nodes_eps, nodes_nz)?;
            let partial: Vec<[f64; 3]> = members
                .par_iter()
                .map(|(sample, weight)| {
                    let pulses = PulseSet::new(sample, config.z_order)?;
                    let inner = weighted_sum(bath.iter().map(|(z, wb)| {
                        let f = compiled.evolve(config.bath.b * z, &pulses).axis_fidelities();
                        [wb * f[0], wb * f[1], wb * f[2]]
                    }));
                    Ok([weight * inner[0], weight * inner[1], weight * inner[2]])
                })
                .collect::<Result<_>>()?;
            Ok(Fidelities {
                values: weighted_sum(partial),
                std_err: None,
            })
        }
        Averaging::MonteCarlo { samples, seed } => monte_carlo(samples, seed, |v| {
            let sample = member_sample(config, v)?;
            let pulses = PulseSet::new(&sample, config.z_order)?;
            Ok(compiled.evolve(config.bath.b * v.z_bath, &pulses).axis_fidelities())
        }),
    }
}

/// Fidelities for one fixed field `B`, averaged over the pulse errors only.
pub fn fidelities_fixed_field(seq: &PulseSequence, field: f64, config: &EnsembleConfig) -> Result<Fidelities> {
    config.validate()?;
    let compiled = Compiled::new(seq);
    match config.averaging {
        Averaging::Quadrature {
            nodes_eps, nodes_nz, ..
        } => {
            let members = error_nodes(config, nodes_eps, nodes_nz)?;
            let partial: Vec<[f64; 3]> = members
                .par_iter()
                .map(|(sample, weight)| {
                    let pulses = PulseSet::new(sample, config.z_order)?;
                    let f = compiled.evolve(field, &pulses).axis_fidelities();
                    Ok([weight * f[0], weight * f[1], weight * f[2]])
                })
                .collect::<Result<_>>()?;
            Ok(Fidelities {
                values: weighted_sum(partial),
                std_err: None,
            })
        }
        Averaging::MonteCarlo { samples, seed } => monte_carlo(samples, seed, |v| {
            let sample = member_sample(config, v)?;
            let pulses = PulseSet::new(&sample, config.z_order)?;
            Ok(compiled.evolve(field, &pulses).axis_fidelities())
        }),
    }
}

/// `F_axis = 2 <S_axis>` for the initial state along `axis`.
pub fn fidelity_at(seq: &PulseSequence, axis: Axis, config: &EnsembleConfig) -> Result<f64> {
    Ok(fidelities(seq, config)?.get(axis))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub t: f64,
    pub f: [f64; 3],
}

/// Fidelity versus total evolution time.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityCurve {
    pub protocol: Protocol,
    pub level: u32,
    pub pulse_count: usize,
    pub config_digest: String,
    pub rows: Vec<CurveRow>,
}

impl FidelityCurve {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.t)
    }

    pub fn column(&self, axis: Axis) -> Vec<f64> {
        self.rows.iter().map(|r| r.f[axis.index()]).collect()
    }

    /// Header `t,F_x,F_y,F_z`; values in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,F_x,F_y,F_z\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.t, r.f[0], r.f[1], r.f[2]));
        }
        out
    }

    /// Mean and spread (max - min) over the `count` largest times with
    /// `b t >= min_bt`. `None` when no grid time qualifies.
    pub fn tail(&self, b: f64, min_bt: f64, count: usize) -> Option<TailStats> {
        let eligible: Vec<&CurveRow> = self.rows.iter().filter(|r| b * r.t >= min_bt).collect();
        let used = &eligible[eligible.len().saturating_sub(count)..];
        if used.is_empty() {
            return None;
        }
        let n = used.len() as f64;
        let mut mean = [0.0; 3];
        let mut spread = [0.0; 3];
        for k in 0..3 {
            let vals = used.iter().map(|r| r.f[k]);
            mean[k] = vals.clone().sum::<f64>() / n;
            let hi = vals.clone().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.fold(f64::INFINITY, f64::min);
            spread[k] = hi - lo;
        }
        Some(TailStats {
            mean,
            spread,
            points: used.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailStats {
    pub mean: [f64; 3],
    pub spread: [f64; 3],
    pub points: usize,
}

/// Minimum `b t` of the grid points used to read off saturation values.
pub const SATURATION_MIN_BT: f64 = 40.0;
/// Number of largest qualifying grid times averaged for saturation values.
pub const SATURATION_POINTS: usize = 10;

/// Runs `fidelities` over a time grid. A `t = 0` row (all delays zero) is
/// prepended when the grid does not start at zero.
pub fn sweep(protocol: Protocol, level: u32, times: &[f64], config: &EnsembleConfig) -> Result<FidelityCurve> {
    config.validate()?;
    if times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(DdError::config("times", "must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DdError::config("times", "must be strictly increasing"));
    }
    let mut grid = Vec::with_capacity(times.len() + 1);
    if times.first().is_none_or(|&t| t > 0.0) {
        grid.push(0.0);
    }
    grid.extend_from_slice(times);
    let mut rows = Vec::with_capacity(grid.len());
    for &t in &grid {
        let seq = build(protocol, level, t)?;
        rows.push(CurveRow {
            t,
            f: fidelities(&seq, config)?.values,
        });
    }
    Ok(FidelityCurve {
        protocol,
        level,
        pulse_count: protocol.pulse_count(level),
        config_digest: config.digest(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::build_udd;
    use crate::spin::{equal_up_to_phase, rotation};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn defaults(b: f64) -> EnsembleConfig {
        EnsembleConfig::new(BathParams::new(b).unwrap(), PulseErrorParams::default())
    }

    #[test]
    fn perfect_pulses_refocus_any_udd() {
        for level in 1..=8 {
            let seq = build_udd(level, 3.7, PulseAxis::X).unwrap();
            for field in [0.0, 0.4, -2.3] {
                let u = evolve_once(&seq, field, &PulseErrorSample::perfect()).unwrap();
                assert!(equal_up_to_phase(&u, &Unitary2::IDENTITY, 1e-12), "UDD-{level} B={field}");
            }
        }
    }

    #[test]
    fn udd2_without_field_adds_angles() {
        let seq = build_udd(2, 1.0, PulseAxis::X).unwrap();
        let u = evolve_once(&seq, 0.0, &PulseErrorSample::symmetric(0.3, 0.0)).unwrap();
        let r = rotation([1.0, 0.0, 0.0], 2.0 * (PI + 0.3)).unwrap();
        assert!(equal_up_to_phase(&u, &r, 1e-14));
    }

    #[test]
    fn qdd3_perfect_pulses_refocus() {
        let seq = build(Protocol::Qdd, 3, 2.0).unwrap();
        let u = evolve_once(&seq, 1.3, &PulseErrorSample::perfect()).unwrap();
        assert!(equal_up_to_phase(&u, &Unitary2::IDENTITY, 1e-12));
    }

    #[test]
    fn zero_error_config_gives_unit_fidelity() {
        let config = EnsembleConfig::new(BathParams::new(1.0).unwrap(), PulseErrorParams::perfect());
        for protocol in Protocol::ALL {
            let seq = build(protocol, 3, 5.0).unwrap();
            let f = fidelities(&seq, &config).unwrap();
            for v in f.values {
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn udd2_keeps_x_component() {
        let config = defaults(1.0);
        for t in [0.0, 1.0, 5.0] {
            let seq = build_udd(2, t, PulseAxis::X).unwrap();
            assert!(fidelity_at(&seq, Axis::X, &config).unwrap() >= 0.99);
        }
    }

    #[test]
    fn sweep_prepends_zero_and_validates_grid() {
        let config = defaults(1.0);
        let curve = sweep(Protocol::Udd, 2, &[1.0, 2.0], &config).unwrap();
        assert_eq!(curve.rows.len(), 3);
        assert_eq!(curve.rows[0].t, 0.0);
        assert!(sweep(Protocol::Udd, 2, &[2.0, 1.0], &config).is_err());
        assert!(sweep(Protocol::Udd, 2, &[-1.0], &config).is_err());
        let with_zero = sweep(Protocol::Udd, 2, &[0.0, 1.0], &config).unwrap();
        assert_eq!(with_zero.rows.len(), 2);
    }

    #[test]
    fn csv_header_and_rows() {
        let config = defaults(1.0);
        let curve = sweep(Protocol::Udd, 2, &[1.0], &config).unwrap();
        let csv = curve.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,F_x,F_y,F_z"));
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_nodes = defaults(1.0).with_averaging(Averaging::Quadrature {
            nodes_b: 1,
            nodes_eps: 16,
            nodes_nz: 16,
        });
        assert!(matches!(bad_nodes.validate(), Err(DdError::InvalidConfig { key, .. }) if key == "nodes_b"));
        let bad_mc = defaults(1.0).with_averaging(Averaging::MonteCarlo { samples: 0, seed: 1 });
        assert!(bad_mc.validate().is_err());
    }

    #[test]
    fn monte_carlo_is_seed_reproducible() {
        let seq = build_udd(2, 2.0, PulseAxis::X).unwrap();
        let config = defaults(1.0).with_averaging(Averaging::MonteCarlo { samples: 10_000, seed: 42 });
        let a = fidelities(&seq, &config).unwrap();
        let b = fidelities(&seq, &config).unwrap();
        assert_eq!(a, b);
        assert!(a.std_err.is_some());
    }

    #[test]
    fn tail_uses_largest_qualifying_times() {
        let curve = FidelityCurve {
            protocol: Protocol::Udd,
            level: 2,
            pulse_count: 2,
            config_digest: String::new(),
            rows: (0..30)
                .map(|i| CurveRow {
                    t: i as f64 * 2.0,
                    f: [1.0, i as f64, 0.0],
                })
                .collect(),
        };
        let tail = curve.tail(1.0, 40.0, 10).unwrap();
        assert_eq!(tail.points, 10);
        // rows 20..29 qualify (t >= 40); the last ten are rows 20..=29
        assert_abs_diff_eq!(tail.mean[1], 24.5);
        assert_abs_diff_eq!(tail.spread[1], 9.0);
        assert!(curve.tail(1.0, 100.0, 10).is_none());
    }
}
