//! Training sets and evaluation grids.
//!
//! The time axis `[0, T]` splits into `[0, T/2]` for training, `(T/2, 4T/5]`
//! for validation and `(4T/5, T]` for testing.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pdes::{BoundaryKind, PdeSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSplit {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

pub fn time_split(final_time: f64) -> TimeSplit {
    TimeSplit {
        train: final_time / 2.0,
        val: 4.0 * final_time / 5.0,
        test: final_time,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    pub x: f64,
    pub t: f64,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicPair {
    pub x_left: f64,
    pub x_right: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainSet {
    pub data_points: Vec<DataPoint>,
    pub periodic_pairs: Vec<PeriodicPair>,
    pub collocation: Vec<(f64, f64)>,
}

/// Stratified sample of `n` points in `[lo.0, hi.0] x [lo.1, hi.1]`: each
/// coordinate has exactly one point in each of its `n` equal strata.
pub fn latin_hypercube<R: Rng>(rng: &mut R, n: usize, lo: (f64, f64), hi: (f64, f64)) -> Vec<(f64, f64)> {
    let mut axis = |a: f64, b: f64| -> Vec<f64> {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        strata
            .into_iter()
            .map(|k| a + (b - a) * (k as f64 + rng.random::<f64>()) / n as f64)
            .collect()
    };
    let xs = axis(lo.0, hi.0);
    let ts = axis(lo.1, hi.1);
    xs.into_iter().zip(ts).collect()
}

/// Initial/boundary tuples plus Latin-hypercube collocation points over the
/// training window. Half of `n_u` lies on the initial curve, the rest on the
/// boundary (alternating sides for two-sided Dirichlet data, one tuple per
/// periodic pair).
pub fn build_train_set(spec: &PdeSpec, n_u: usize, n_f: usize, seed: u64) -> Result<TrainSet> {
    if n_u < 2 {
        return Err(Error::InvalidArgument(format!("n_u = {n_u} must be at least 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_train = time_split(spec.final_time).train;
    let n_init = n_u / 2;
    let n_bnd = n_u - n_init;
    let mut set = TrainSet::default();

    for _ in 0..n_init {
        let x = rng.random_range(spec.x_min..=spec.x_max);
        set.data_points.push(DataPoint {
            x,
            t: 0.0,
            target: spec.initial_condition(x)?,
        });
    }
    for i in 0..n_bnd {
        let t = rng.random_range(0.0..=t_train);
        match spec.boundary_kind {
            BoundaryKind::Periodic => set.periodic_pairs.push(PeriodicPair {
                x_left: spec.x_min,
                x_right: spec.x_max,
                t,
            }),
            BoundaryKind::DirichletBoth | BoundaryKind::InflowLeft => {
                let targets = spec.boundary_points(t)?;
                let pick = if spec.boundary_kind == BoundaryKind::DirichletBoth { i % 2 } else { 0 };
                if let crate::pdes::BoundaryTarget::Value { x, target } = &targets[pick] {
                    set.data_points.push(DataPoint {
                        x: *x,
                        t,
                        target: target.clone(),
                    });
                }
            }
        }
    }
    set.collocation = latin_hypercube(&mut rng, n_f, (spec.x_min, 0.0), (spec.x_max, t_train));
    Ok(set)
}

/// Adds `n_r` labelled interior points drawn uniformly over the training window
/// and drops the collocation points.
pub fn build_regression_set<F>(spec: &PdeSpec, base: &TrainSet, n_r: usize, seed: u64, label: F) -> Result<TrainSet>
where
    F: FnOnce(&[(f64, f64)]) -> Result<Vec<Vec<f64>>>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let t_train = time_split(spec.final_time).train;
    let points: Vec<(f64, f64)> = (0..n_r)
        .map(|_| {
            (
                rng.random_range(spec.x_min..=spec.x_max),
                rng.random_range(0.0..=t_train),
            )
        })
        .collect();
    let labels = label(&points)?;
    if labels.len() != points.len() {
        return Err(Error::ShapeMismatch {
            expected: points.len(),
            actual: labels.len(),
        });
    }
    let mut set = base.clone();
    set.collocation.clear();
    set.data_points.extend(
        points
            .into_iter()
            .zip(labels)
            .map(|((x, t), target)| DataPoint { x, t, target }),
    );
    Ok(set)
}

impl TrainSet {
    pub fn is_empty(&self) -> bool {
        self.data_points.is_empty() && self.periodic_pairs.is_empty() && self.collocation.is_empty()
    }

    fn target_header(channels: usize) -> Vec<String> {
        let mut h = vec!["x".to_owned(), "t".to_owned()];
        h.extend((0..channels).map(|c| format!("target_{c}")));
        h
    }

    /// Initial/boundary tuples as `x,t,target_0[,target_1]`.
    pub fn write_data_csv<W: Write>(&self, channels: usize, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::target_header(channels))?;
        for p in &self.data_points {
            let mut row = vec![format!("{:?}", p.x), format!("{:?}", p.t)];
            row.extend(p.target.iter().map(|v| format!("{v:?}")));
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Collocation points with their all-zero residual targets.
    pub fn write_collocation_csv<W: Write>(&self, channels: usize, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::target_header(channels))?;
        for &(x, t) in &self.collocation {
            let mut row = vec![format!("{x:?}"), format!("{t:?}")];
            row.extend((0..channels).map(|_| "0".to_owned()));
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_periodic_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_left", "x_right", "t"])?;
        for p in &self.periodic_pairs {
            w.write_record([format!("{:?}", p.x_left), format!("{:?}", p.x_right), format!("{:?}", p.t)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Segment {
    Train,
    Validation,
    Test,
}

impl Segment {
    pub const ALL: [Segment; 3] = [Segment::Train, Segment::Validation, Segment::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Segment::Train => "train",
            Segment::Validation => "validation",
            Segment::Test => "test",
        }
    }
}

impl std::fmt::Display for Segment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Segment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Segment::Train),
            "validation" | "val" => Ok(Segment::Validation),
            "test" => Ok(Segment::Test),
            _ => Err(Error::InvalidArgument(format!("unknown segment `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalGrid {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    pub segment: Segment,
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Uniform grid restricted to the segment's time window. The training window
/// includes `t = 0`; the others start at the first step strictly inside.
pub fn build_eval_grid(spec: &PdeSpec, segment: Segment) -> EvalGrid {
    let split = time_split(spec.final_time);
    let (lo, hi, closed_lo) = match segment {
        Segment::Train => (0.0, split.train, true),
        Segment::Validation => (split.train, split.val, false),
        Segment::Test => (split.val, split.test, false),
    };
    let dt = spec.eval_time_step();
    let k_of = |t: f64| (t / dt + 1e-9).floor() as usize;
    let k_lo = if closed_lo { 0 } else { k_of(lo) + 1 };
    let k_hi = k_of(hi);
    let ts = (k_lo..=k_hi).map(|k| (k as f64 * dt).min(hi)).collect();
    EvalGrid {
        xs: linspace(spec.x_min, spec.x_max, spec.eval_points()),
        ts,
        segment,
    }
}

impl EvalGrid {
    pub fn len(&self) -> usize {
        self.xs.len() * self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All `(x, t)` pairs, time-major.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.ts
            .iter()
            .flat_map(|&t| self.xs.iter().map(move |&x| (x, t)))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "t"])?;
        for (x, t) in self.points() {
            w.write_record([format!("{x:?}"), format!("{t:?}")])?;
        }
        w.flush()?;
        Ok(())
    }
}
