//! Lorenz-96 vector fields, a fixed-step RK4 integrator and synthetic
//! observation data.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng::StreamKey;

/// States with a component above this magnitude count as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("invalid Lorenz-96 parameters: {0}")]
    InvalidParams(String),
    #[error("state has {got} components, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid integration interval: {0}")]
    InvalidInterval(String),
    #[error("ground-truth trajectory diverged at t = {time}")]
    TruthDiverged { time: f64 },
    #[error("malformed observation data: {0}")]
    MalformedData(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, OdeError>;

/// Fast-variable block of the two-scale model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoScale {
    /// Fast variables per slow variable.
    pub j: usize,
    pub h: f64,
    pub c: f64,
    pub b: f64,
}

impl Default for TwoScale {
    fn default() -> Self {
        Self {
            j: 10,
            h: 1.0,
            c: 10.0,
            b: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorenz96Params {
    /// Number of slow variables `K`.
    pub k: usize,
    pub forcing: f64,
    pub two_scale: Option<TwoScale>,
}

impl Lorenz96Params {
    pub fn single_scale(k: usize, forcing: f64) -> Result<Self> {
        let p = Self {
            k,
            forcing,
            two_scale: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn two_scale(k: usize, forcing: f64, fast: TwoScale) -> Result<Self> {
        let p = Self {
            k,
            forcing,
            two_scale: Some(fast),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 4 {
            return Err(OdeError::InvalidParams(format!(
                "need at least 4 slow variables, got {}",
                self.k
            )));
        }
        if !self.forcing.is_finite() {
            return Err(OdeError::InvalidParams("forcing must be finite".into()));
        }
        if let Some(ts) = self.two_scale {
            if ts.j == 0 {
                return Err(OdeError::InvalidParams("J must be at least 1".into()));
            }
            if ts.c == 0.0 || ts.b == 0.0 || !(ts.c.is_finite() && ts.b.is_finite() && ts.h.is_finite()) {
                return Err(OdeError::InvalidParams("c and b must be finite and nonzero".into()));
            }
        }
        Ok(())
    }

    /// Length of the full state vector (slow plus fast variables).
    pub fn state_dim(&self) -> usize {
        self.k + self.two_scale.map_or(0, |ts| self.k * ts.j)
    }
}

/// Writes `d state / dt` into `out`.
///
/// Slow variables: `dX_k = (X_{k+1} - X_{k-2}) X_{k-1} - X_k + F - (hc/b) Σ_{j∈block k} Y_j`.
/// Fast variables: `dY_j = -cb Y_{j+1}(Y_{j+2} - Y_{j-1}) - c Y_j + (hc/b) X_{⌊j/J⌋}`.
/// Indices wrap cyclically.
pub fn lorenz96_rhs_into(params: &Lorenz96Params, state: &[f64], out: &mut [f64]) -> Result<()> {
    let n = params.state_dim();
    if state.len() != n || out.len() != n {
        return Err(OdeError::DimensionMismatch {
            expected: n,
            got: if state.len() != n { state.len() } else { out.len() },
        });
    }
    let k = params.k;
    let (x, y) = state.split_at(k);
    let (dx, dy) = out.split_at_mut(k);
    for i in 0..k {
        let xm2 = x[(i + k - 2) % k];
        let xm1 = x[(i + k - 1) % k];
        let xp1 = x[(i + 1) % k];
        dx[i] = (xp1 - xm2) * xm1 - x[i] + params.forcing;
    }
    if let Some(ts) = params.two_scale {
        let nf = k * ts.j;
        let coupling = ts.h * ts.c / ts.b;
        for (i, d) in dx.iter_mut().enumerate() {
            let block: f64 = y[i * ts.j..(i + 1) * ts.j].iter().sum();
            *d -= coupling * block;
        }
        for jj in 0..nf {
            let yp1 = y[(jj + 1) % nf];
            let yp2 = y[(jj + 2) % nf];
            let ym1 = y[(jj + nf - 1) % nf];
            dy[jj] = -ts.c * ts.b * yp1 * (yp2 - ym1) - ts.c * y[jj] + coupling * x[jj / ts.j];
        }
    }
    Ok(())
}

pub fn lorenz96_rhs(params: &Lorenz96Params, state: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; params.state_dim()];
    lorenz96_rhs_into(params, state, &mut out)?;
    Ok(out)
}

/// States saved at every step, starting with the initial state at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Set when a state became non-finite or exceeded [`DIVERGENCE_THRESHOLD`];
    /// the offending state is not stored.
    pub diverged: bool,
}

impl Trajectory {
    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// CSV with header `time,x1,...,xK`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let dim = self.states.first().map_or(0, Vec::len);
        let mut header = vec!["time".to_string()];
        header.extend((1..=dim).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![t.to_string()];
            row.extend(s.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Number of steps of size `step` needed to cover `[t0, t1]`, with the last step
/// possibly shortened.
pub fn step_count(t0: f64, t1: f64, step: f64) -> usize {
    let raw = (t1 - t0) / step;
    let n = raw.round();
    if (raw - n).abs() < 1e-9 * raw.max(1.0) {
        n as usize
    } else {
        raw.ceil() as usize
    }
}

/// Time of step `i` out of `n` on `[t0, t1]`; the final step lands exactly on `t1`.
pub fn step_time(t0: f64, t1: f64, step: f64, i: usize, n: usize) -> f64 {
    if i == n {
        t1
    } else {
        t0 + i as f64 * step
    }
}

fn is_diverged(state: &[f64]) -> bool {
    state.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_THRESHOLD)
}

/// Fixed-step classical Runge-Kutta integration from `t0` to `t1`.
pub fn integrate(
    params: &Lorenz96Params,
    initial: &[f64],
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<Trajectory> {
    params.validate()?;
    let dim = params.state_dim();
    if initial.len() != dim {
        return Err(OdeError::DimensionMismatch {
            expected: dim,
            got: initial.len(),
        });
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(OdeError::InvalidInterval(format!("step must be positive, got {step}")));
    }
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(OdeError::InvalidInterval(format!("need t1 > t0, got [{t0}, {t1}]")));
    }

    let n = step_count(t0, t1, step);
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    if is_diverged(initial) {
        return Ok(Trajectory {
            times,
            states,
            diverged: true,
        });
    }
    times.push(t0);
    states.push(initial.to_vec());

    let mut x = initial.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut t_prev = t0;
    for i in 1..=n {
        let t = step_time(t0, t1, step, i, n);
        let h = t - t_prev;
        lorenz96_rhs_into(params, &x, &mut k1)?;
        for d in 0..dim {
            tmp[d] = x[d] + 0.5 * h * k1[d];
        }
        lorenz96_rhs_into(params, &tmp, &mut k2)?;
        for d in 0..dim {
            tmp[d] = x[d] + 0.5 * h * k2[d];
        }
        lorenz96_rhs_into(params, &tmp, &mut k3)?;
        for d in 0..dim {
            tmp[d] = x[d] + h * k3[d];
        }
        lorenz96_rhs_into(params, &tmp, &mut k4)?;
        for d in 0..dim {
            x[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
        if is_diverged(&x) {
            return Ok(Trajectory {
                times,
                states,
                diverged: true,
            });
        }
        times.push(t);
        states.push(x.clone());
        t_prev = t;
    }
    Ok(Trajectory {
        times,
        states,
        diverged: false,
    })
}

/// Noisy observations of every state component at every step after `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecord {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl ObservationRecord {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn n_components(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn n_observations(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    /// CSV with header `time,component,value`, rows sorted by time then
    /// (1-based) component.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "component", "value"])?;
        for (t, row) in self.times.iter().zip(&self.values) {
            for (c, v) in row.iter().enumerate() {
                w.write_record([t.to_string(), (c + 1).to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["time", "component", "value"] {
            return Err(OdeError::MalformedData(format!(
                "expected header time,component,value, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut times: Vec<f64> = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| OdeError::MalformedData(format!("row {}: bad field {i}", line + 2)))
            };
            let t = parse(0)?;
            let comp = rec
                .get(1)
                .and_then(|s| s.trim().parse::<usize>().ok())
                .ok_or_else(|| OdeError::MalformedData(format!("row {}: bad component", line + 2)))?;
            let v = parse(2)?;
            if times.last() != Some(&t) {
                if let Some(&prev) = times.last() {
                    if t <= prev {
                        return Err(OdeError::MalformedData(format!(
                            "row {}: times must increase",
                            line + 2
                        )));
                    }
                }
                times.push(t);
                values.push(Vec::new());
            }
            let row = values.last_mut().expect("row pushed above");
            if comp != row.len() + 1 {
                return Err(OdeError::MalformedData(format!(
                    "row {}: expected component {}, found {comp}",
                    line + 2,
                    row.len() + 1
                )));
            }
            row.push(v);
        }
        let width = values.first().map_or(0, Vec::len);
        if values.iter().any(|r| r.len() != width) {
            return Err(OdeError::MalformedData("unequal component counts across times".into()));
        }
        Ok(Self { times, values })
    }
}

/// Forward solve from `truth` plus i.i.d. `N(0, noise_variance)` noise on every
/// saved state component after `t0`.
pub fn generate_lorenz96_data(
    params: &Lorenz96Params,
    truth: &[f64],
    t0: f64,
    t1: f64,
    step: f64,
    noise_variance: f64,
    stream: StreamKey,
) -> Result<ObservationRecord> {
    if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
        return Err(OdeError::InvalidParams(format!(
            "noise variance must be non-negative, got {noise_variance}"
        )));
    }
    let traj = integrate(params, truth, t0, t1, step)?;
    if traj.diverged {
        let time = traj.times.last().copied().unwrap_or(t0);
        return Err(OdeError::TruthDiverged { time });
    }
    let sd = noise_variance.sqrt();
    let mut rng = stream.rng();
    let times = traj.times[1..].to_vec();
    let values = traj.states[1..]
        .iter()
        .map(|s| {
            s.iter()
                .map(|v| {
                    let e: f64 = rng.sample(StandardNormal);
                    v + sd * e
                })
                .collect()
        })
        .collect();
    Ok(ObservationRecord { times, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_state_is_a_fixed_point() {
        let p = Lorenz96Params::single_scale(6, 8.0).unwrap();
        assert_eq!(lorenz96_rhs(&p, &[8.0; 6]).unwrap(), vec![0.0; 6]);
    }

    #[test]
    fn hand_evaluated_rhs() {
        let p = Lorenz96Params::single_scale(4, 0.0).unwrap();
        assert_eq!(lorenz96_rhs(&p, &[1.0, 0.0, 0.0, 0.0]).unwrap(), vec![-1.0, 0.0, 0.0, 0.0]);
        // X = (1, 2, 3, 4), F = 0: dX_k = (X_{k+1} - X_{k-2}) X_{k-1} - X_k.
        let d = lorenz96_rhs(&p, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d, vec![(2.0 - 3.0) * 4.0 - 1.0, (3.0 - 4.0) * 1.0 - 2.0, (4.0 - 1.0) * 2.0 - 3.0, (1.0 - 2.0) * 3.0 - 4.0]);
    }

    #[test]
    fn decoupled_two_scale_matches_single_scale() {
        let single = Lorenz96Params::single_scale(5, 8.0).unwrap();
        let fast = TwoScale { h: 0.0, ..TwoScale::default() };
        let two = Lorenz96Params::two_scale(5, 8.0, fast).unwrap();
        let mut state: Vec<f64> = (0..two.state_dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        state[0] = 3.0;
        let d1 = lorenz96_rhs(&single, &state[..5]).unwrap();
        let d2 = lorenz96_rhs(&two, &state).unwrap();
        assert_eq!(&d2[..5], d1.as_slice());
        assert_eq!(d2.len(), 55);
    }

    #[test]
    fn two_scale_coupling_terms() {
        let fast = TwoScale { j: 2, h: 1.0, c: 2.0, b: 4.0 };
        let p = Lorenz96Params::two_scale(4, 0.0, fast).unwrap();
        let mut state = vec![0.0; 12];
        state[0] = 1.0; // X_1
        state[4] = 1.0; // Y_1, in X_1's block
        let d = lorenz96_rhs(&p, &state).unwrap();
        let coupling = 1.0 * 2.0 / 4.0;
        assert_eq!(d[0], -1.0 - coupling);
        // Y_1: -c Y_1 + coupling X_1 (advection term vanishes: Y_2 = 0)
        assert_eq!(d[4], -2.0 + coupling);
        // Y_2 (same block): coupling X_1, advection -cb Y_3 (Y_4 - Y_1) = 0
        assert_eq!(d[5], coupling);
        // Y_8: advection -cb Y_1 (Y_2 - Y_7) = 0, block of X_4 = 0
        assert_eq!(d[11], 0.0);
    }

    #[test]
    fn invalid_parameters_and_dimensions() {
        assert!(Lorenz96Params::single_scale(3, 8.0).is_err());
        assert!(Lorenz96Params::two_scale(4, 8.0, TwoScale { j: 0, ..TwoScale::default() }).is_err());
        assert!(Lorenz96Params::two_scale(4, 8.0, TwoScale { c: 0.0, ..TwoScale::default() }).is_err());
        let p = Lorenz96Params::single_scale(4, 8.0).unwrap();
        assert!(matches!(
            lorenz96_rhs(&p, &[1.0; 5]),
            Err(OdeError::DimensionMismatch { expected: 4, got: 5 })
        ));
        assert!(integrate(&p, &[1.0; 4], 0.0, 1.0, 0.0).is_err());
        assert!(integrate(&p, &[1.0; 4], 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn step_grid_lands_on_t1() {
        assert_eq!(step_count(0.0, 10.0, 0.01), 1000);
        assert_eq!(step_count(0.0, 1.0, 0.3), 4);
        let p = Lorenz96Params::single_scale(4, 8.0).unwrap();
        let tr = integrate(&p, &[1.0, 2.0, 3.0, 4.0], 0.0, 1.0, 0.3).unwrap();
        assert_eq!(tr.times.len(), 5);
        assert_eq!(*tr.times.last().unwrap(), 1.0);
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn divergence_is_flagged_not_raised() {
        let p = Lorenz96Params::single_scale(4, 1e6).unwrap();
        let tr = integrate(&p, &[1e7, -1e7, 1e7, -1e7], 0.0, 10.0, 0.1).unwrap();
        assert!(tr.diverged);
        assert!(tr.states.iter().flatten().all(|v| v.is_finite()));
        let err = generate_lorenz96_data(&p, &[1e7, -1e7, 1e7, -1e7], 0.0, 10.0, 0.1, 0.1, StreamKey::root(0));
        assert!(matches!(err, Err(OdeError::TruthDiverged { .. })));
    }

    #[test]
    fn observation_csv_round_trip_and_validation() {
        let rec = ObservationRecord {
            times: vec![0.1, 0.2],
            values: vec![vec![1.5, -2.25], vec![0.1 + 0.2, 3.0]],
        };
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time,component,value\n0.1,1,1.5\n0.1,2,-2.25\n"));
        assert_eq!(ObservationRecord::read_csv(buf.as_slice()).unwrap(), rec);

        let bad = "time,component,value\n0.1,2,1.0\n";
        assert!(ObservationRecord::read_csv(bad.as_bytes()).is_err());
        let backwards = "time,component,value\n0.2,1,1.0\n0.1,1,1.0\n";
        assert!(ObservationRecord::read_csv(backwards.as_bytes()).is_err());
        assert!(ObservationRecord::read_csv("t,c,v\n".as_bytes()).is_err());
    }
}
