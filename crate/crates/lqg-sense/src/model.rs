//! Time-varying linear-Gaussian system, candidate sensors, and the stacked
//! measurement model of an active sensor set.
//!
//! The system is
//!
//! ```text
//! x_{t+1} = A_t x_t + B_t u_t + w_t,      w_t ~ N(0, W_t),   t = 1..T,
//! y_{i,t} = C_{i,t} x_t + v_{i,t},        v_{i,t} ~ N(0, V_{i,t}),
//! ```
//!
//! with `x_1 ~ N(0, Sigma_{1|0})`. An active sensor set stacks its sensors'
//! measurement rows in increasing id order and block-diagonalizes their noise.
//!
//! All types are immutable after construction and safe to share across
//! threads. Covariance and cost matrices are symmetrized on construction;
//! asymmetry beyond 1e-8 relative is rejected because the recursions amplify
//! it.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Discrete-time linear-Gaussian system over a finite horizon with quadratic
/// stage costs. State dimension is fixed across time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingSystem {
    horizon: usize,
    n: usize,
    m: usize,
    a: Vec<DMatrix<f64>>,
    b: Vec<DMatrix<f64>>,
    w: Vec<DMatrix<f64>>,
    q: Vec<DMatrix<f64>>,
    r: Vec<DMatrix<f64>>,
    sigma_1_0: DMatrix<f64>,
}

impl TimeVaryingSystem {
    /// Validates and stores the per-step matrices. Each `Vec` must have one
    /// entry per time step `t = 1..T`.
    ///
    /// Requirements: `W_t`, `Q_t` symmetric PSD; `R_t` symmetric PD;
    /// `Sigma_{1|0}` symmetric PD; consistent dimensions throughout.
    pub fn new(
        a: Vec<DMatrix<f64>>,
        b: Vec<DMatrix<f64>>,
        w: Vec<DMatrix<f64>>,
        q: Vec<DMatrix<f64>>,
        r: Vec<DMatrix<f64>>,
        sigma_1_0: DMatrix<f64>,
    ) -> Result<Self> {
        let horizon = a.len();
        if horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        for (name, len) in [
            ("B", b.len()),
            ("W", w.len()),
            ("Q", q.len()),
            ("R", r.len()),
        ] {
            if len != horizon {
                return Err(Error::DimensionMismatch {
                    what: format!("{name} sequence"),
                    expected: format!("{horizon} matrices"),
                    got: format!("{len}"),
                });
            }
        }
        let n = a[0].nrows();
        let m = b[0].ncols();
        for (t, at) in a.iter().enumerate() {
            if at.nrows() != n || at.ncols() != n {
                return Err(Error::DimensionMismatch {
                    what: format!("A_{}", t + 1),
                    expected: format!("{n}x{n}"),
                    got: format!("{}x{}", at.nrows(), at.ncols()),
                });
            }
        }
        for (t, bt) in b.iter().enumerate() {
            if bt.nrows() != n || bt.ncols() != m {
                return Err(Error::DimensionMismatch {
                    what: format!("B_{}", t + 1),
                    expected: format!("{n}x{m}"),
                    got: format!("{}x{}", bt.nrows(), bt.ncols()),
                });
            }
        }
        let w = w
            .iter()
            .enumerate()
            .map(|(t, wt)| {
                expect_dim(wt, n, &format!("W_{}", t + 1))?;
                linalg::check_psd(wt, &format!("W_{}", t + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        let q = q
            .iter()
            .enumerate()
            .map(|(t, qt)| {
                expect_dim(qt, n, &format!("Q_{}", t + 1))?;
                linalg::check_psd(qt, &format!("Q_{}", t + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        let r = r
            .iter()
            .enumerate()
            .map(|(t, rt)| {
                expect_dim(rt, m, &format!("R_{}", t + 1))?;
                linalg::check_pd(rt, &format!("R_{}", t + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        expect_dim(&sigma_1_0, n, "sigma_1_0")?;
        let sigma_1_0 = linalg::check_pd(&sigma_1_0, "sigma_1_0")?;

        Ok(Self {
            horizon,
            n,
            m,
            a,
            b,
            w,
            q,
            r,
            sigma_1_0,
        })
    }

    /// Time-invariant system: the given matrices are broadcast across all
    /// `horizon` steps.
    pub fn time_invariant(
        horizon: usize,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        w: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        sigma_1_0: DMatrix<f64>,
    ) -> Result<Self> {
        Self::new(
            vec![a; horizon],
            vec![b; horizon],
            vec![w; horizon],
            vec![q; horizon],
            vec![r; horizon],
            sigma_1_0,
        )
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// State dimension.
    pub fn state_dim(&self) -> usize {
        self.n
    }

    /// Input dimension.
    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn a(&self, t: usize) -> &DMatrix<f64> {
        &self.a[t - 1]
    }

    pub fn b(&self, t: usize) -> &DMatrix<f64> {
        &self.b[t - 1]
    }

    pub fn w(&self, t: usize) -> &DMatrix<f64> {
        &self.w[t - 1]
    }

    pub fn q(&self, t: usize) -> &DMatrix<f64> {
        &self.q[t - 1]
    }

    pub fn r(&self, t: usize) -> &DMatrix<f64> {
        &self.r[t - 1]
    }

    pub fn sigma_1_0(&self) -> &DMatrix<f64> {
        &self.sigma_1_0
    }

    pub fn check_time(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.horizon {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }
}

fn expect_dim(m: &DMatrix<f64>, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: what.to_string(),
            expected: format!("{n}x{n}"),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// One candidate sensor: per-step measurement matrix `C_t` (p x n) and
/// positive definite measurement-noise covariance `V_t` (p x p).
#[derive(Debug, Clone, PartialEq)]
pub struct Sensor {
    id: usize,
    tag: Option<String>,
    c: Vec<DMatrix<f64>>,
    v: Vec<DMatrix<f64>>,
}

impl Sensor {
    pub fn new(
        id: usize,
        tag: Option<String>,
        c: Vec<DMatrix<f64>>,
        v: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        if c.is_empty() || c.len() != v.len() {
            return Err(Error::DimensionMismatch {
                what: format!("sensor {id} C/V sequences"),
                expected: format!("{} matrices each", c.len().max(1)),
                got: format!("C: {}, V: {}", c.len(), v.len()),
            });
        }
        let rows = c[0].nrows();
        let cols = c[0].ncols();
        for (t, ct) in c.iter().enumerate() {
            if ct.nrows() != rows || ct.ncols() != cols {
                return Err(Error::DimensionMismatch {
                    what: format!("sensor {id} C_{}", t + 1),
                    expected: format!("{rows}x{cols}"),
                    got: format!("{}x{}", ct.nrows(), ct.ncols()),
                });
            }
        }
        let v = v
            .iter()
            .enumerate()
            .map(|(t, vt)| {
                if vt.nrows() != rows || vt.ncols() != rows {
                    return Err(Error::DimensionMismatch {
                        what: format!("sensor {id} V_{}", t + 1),
                        expected: format!("{rows}x{rows}"),
                        got: format!("{}x{}", vt.nrows(), vt.ncols()),
                    });
                }
                linalg::check_pd(vt, "noise").map_err(|e| match e {
                    Error::NotPositiveDefinite { .. } => {
                        Error::MeasurementNoiseNotPd { id, t: t + 1 }
                    }
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { id, tag, c, v })
    }

    /// Time-invariant sensor broadcast across `horizon` steps.
    pub fn time_invariant(
        id: usize,
        tag: Option<String>,
        c: DMatrix<f64>,
        v: DMatrix<f64>,
        horizon: usize,
    ) -> Result<Self> {
        Self::new(id, tag, vec![c; horizon], vec![v; horizon])
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    /// Number of measurement rows (constant across time).
    pub fn output_dim(&self) -> usize {
        self.c[0].nrows()
    }

    pub fn horizon(&self) -> usize {
        self.c.len()
    }

    pub fn c(&self, t: usize) -> &DMatrix<f64> {
        &self.c[t - 1]
    }

    pub fn v(&self, t: usize) -> &DMatrix<f64> {
        &self.v[t - 1]
    }
}

/// An active sensor set: a canonical (sorted, deduplicated) list of sensor
/// ids, so equality is structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SensorSet {
    ids: Vec<usize>,
}

impl SensorSet {
    pub fn new(ids: impl IntoIterator<Item = usize>) -> Self {
        let mut ids: Vec<usize> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        Self { ids }
    }

    pub fn empty() -> Self {
        Self { ids: Vec::new() }
    }

    /// The full ground set.
    pub fn all(ground_set: &[Sensor]) -> Self {
        Self::new(ground_set.iter().map(Sensor::id))
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    /// This set extended with one sensor.
    pub fn with(&self, id: usize) -> Self {
        let mut ids = self.ids.clone();
        ids.push(id);
        Self::new(ids)
    }

    /// Checks every id appears in the ground set.
    pub fn validate(&self, ground_set: &[Sensor]) -> Result<()> {
        for &id in &self.ids {
            if !ground_set.iter().any(|s| s.id() == id) {
                return Err(Error::SensorNotInGroundSet { id });
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for SensorSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, id) in self.ids.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

fn sensor_by_id(ground_set: &[Sensor], id: usize) -> Result<&Sensor> {
    ground_set
        .iter()
        .find(|s| s.id() == id)
        .ok_or(Error::SensorNotInGroundSet { id })
}

/// Stacked measurement model of an active set at time `t`: `C_t(S)` is the
/// row-stack of the members' `C_{i,t}` in increasing id order and `V_t(S)` the
/// block-diagonal of their `V_{i,t}` in the same order.
///
/// The empty set yields a 0-row `C` and a 0x0 `V`.
pub fn stack_measurement(
    ground_set: &[Sensor],
    s: &SensorSet,
    t: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = ground_set.first().map_or(0, |s| s.c[0].ncols());
    let members = s
        .ids()
        .iter()
        .map(|&id| sensor_by_id(ground_set, id))
        .collect::<Result<Vec<_>>>()?;
    for sensor in &members {
        if t == 0 || t > sensor.horizon() {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: sensor.horizon(),
            });
        }
        if sensor.c(t).ncols() != n {
            return Err(Error::DimensionMismatch {
                what: format!("sensor {} C_{t}", sensor.id()),
                expected: format!("n = {n} columns"),
                got: format!("{}", sensor.c(t).ncols()),
            });
        }
    }
    let total_rows: usize = members.iter().map(|s| s.output_dim()).sum();
    let mut c = DMatrix::zeros(total_rows, n);
    let mut v = DMatrix::zeros(total_rows, total_rows);
    let mut row = 0;
    for sensor in &members {
        let p = sensor.output_dim();
        c.view_mut((row, 0), (p, n)).copy_from(sensor.c(t));
        v.view_mut((row, row), (p, p)).copy_from(sensor.v(t));
        row += p;
    }
    Ok((c, v))
}

/// Normalized measurement matrix `V_{i,t}^{-1/2} C_{i,t}`, where the inverse
/// symmetric square root comes from the eigendecomposition of `V_{i,t}`.
pub fn normalized_measurement(sensor: &Sensor, t: usize) -> Result<DMatrix<f64>> {
    if t == 0 || t > sensor.horizon() {
        return Err(Error::TimeOutOfRange {
            t,
            horizon: sensor.horizon(),
        });
    }
    let inv_sqrt = linalg::inv_sqrt_pd(sensor.v(t), "noise").map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::MeasurementNoiseNotPd { id: sensor.id(), t },
        other => other,
    })?;
    Ok(inv_sqrt * sensor.c(t))
}

// ---------------------------------------------------------------------------
// JSON document format
// ---------------------------------------------------------------------------

type MatrixJson = Vec<Vec<f64>>;

/// Either one matrix broadcast across the horizon or one matrix per step.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSeq {
    PerStep(Vec<MatrixJson>),
    Broadcast(MatrixJson),
}

impl MatrixSeq {
    fn to_matrices(&self, horizon: usize, what: &str) -> Result<Vec<DMatrix<f64>>> {
        match self {
            MatrixSeq::Broadcast(m) => Ok(vec![json_to_matrix(m, what)?; horizon]),
            MatrixSeq::PerStep(seq) => {
                if seq.len() != horizon {
                    return Err(Error::DimensionMismatch {
                        what: what.to_string(),
                        expected: format!("{horizon} matrices"),
                        got: format!("{}", seq.len()),
                    });
                }
                seq.iter().map(|m| json_to_matrix(m, what)).collect()
            }
        }
    }

    /// Collapses an all-equal sequence back to the broadcast form.
    fn from_matrices(seq: &[DMatrix<f64>]) -> Self {
        if seq.len() > 1 && seq.iter().all(|m| m == &seq[0]) {
            MatrixSeq::Broadcast(matrix_to_json(&seq[0]))
        } else {
            MatrixSeq::PerStep(seq.iter().map(matrix_to_json).collect())
        }
    }
}

fn json_to_matrix(rows: &MatrixJson, what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidConfig(format!("{what}: ragged matrix rows")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn matrix_to_json(m: &DMatrix<f64>) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensorDocument {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(rename = "C")]
    pub c: MatrixSeq,
    #[serde(rename = "V")]
    pub v: MatrixSeq,
}

/// On-disk model format: system matrices plus the sensor ground set. Matrices
/// are row-major nested arrays; time-invariant entries may supply a single
/// matrix that is broadcast across the horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: MatrixSeq,
    #[serde(rename = "B")]
    pub b: MatrixSeq,
    #[serde(rename = "W")]
    pub w: MatrixSeq,
    #[serde(rename = "Q")]
    pub q: MatrixSeq,
    #[serde(rename = "R")]
    pub r: MatrixSeq,
    pub sigma_1_0: MatrixJson,
    pub sensors: Vec<SensorDocument>,
}

impl ModelDocument {
    pub fn from_parts(model: &TimeVaryingSystem, ground_set: &[Sensor]) -> Self {
        Self {
            horizon: model.horizon(),
            n: model.state_dim(),
            m: model.input_dim(),
            a: MatrixSeq::from_matrices(&model.a),
            b: MatrixSeq::from_matrices(&model.b),
            w: MatrixSeq::from_matrices(&model.w),
            q: MatrixSeq::from_matrices(&model.q),
            r: MatrixSeq::from_matrices(&model.r),
            sigma_1_0: matrix_to_json(&model.sigma_1_0),
            sensors: ground_set
                .iter()
                .map(|s| SensorDocument {
                    id: s.id(),
                    tag: s.tag.clone(),
                    c: MatrixSeq::from_matrices(&s.c),
                    v: MatrixSeq::from_matrices(&s.v),
                })
                .collect(),
        }
    }

    /// Validates and converts into the in-memory model and ground set.
    pub fn into_parts(self) -> Result<(TimeVaryingSystem, Vec<Sensor>)> {
        let model = TimeVaryingSystem::new(
            self.a.to_matrices(self.horizon, "A")?,
            self.b.to_matrices(self.horizon, "B")?,
            self.w.to_matrices(self.horizon, "W")?,
            self.q.to_matrices(self.horizon, "Q")?,
            self.r.to_matrices(self.horizon, "R")?,
            json_to_matrix(&self.sigma_1_0, "sigma_1_0")?,
        )?;
        if model.state_dim() != self.n || model.input_dim() != self.m {
            return Err(Error::DimensionMismatch {
                what: "declared n/m".to_string(),
                expected: format!("n = {}, m = {}", model.state_dim(), model.input_dim()),
                got: format!("n = {}, m = {}", self.n, self.m),
            });
        }
        let mut ids = std::collections::HashSet::new();
        let sensors = self
            .sensors
            .into_iter()
            .map(|doc| {
                if !ids.insert(doc.id) {
                    return Err(Error::InvalidConfig(format!(
                        "duplicate sensor id {}",
                        doc.id
                    )));
                }
                let c = doc.c.to_matrices(self.horizon, "sensor C")?;
                if c[0].ncols() != model.state_dim() {
                    return Err(Error::DimensionMismatch {
                        what: format!("sensor {} C", doc.id),
                        expected: format!("{} columns", model.state_dim()),
                        got: format!("{}", c[0].ncols()),
                    });
                }
                Sensor::new(
                    doc.id,
                    doc.tag,
                    c,
                    doc.v.to_matrices(self.horizon, "sensor V")?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((model, sensors))
    }
}
