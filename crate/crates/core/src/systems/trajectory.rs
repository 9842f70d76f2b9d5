use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::ode;

/// Which system a trajectory belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    Kinematic,
    Mechanical,
}

/// Sampled trajectory: grid, states, optional velocities and cost
/// coordinates, controls.
///
/// Kinematic trajectories carry `w` as controls and at most `x0`; mechanical
/// trajectories carry velocities, `u` as controls and both `x0`, `v0` when
/// extended.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub velocities: Option<Vec<DVector<f64>>>,
    pub cost_position: Option<Vec<f64>>,
    pub cost_velocity: Option<Vec<f64>>,
    pub controls: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn kinematic(
        times: Vec<f64>,
        states: Vec<DVector<f64>>,
        controls: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let t = Trajectory {
            kind: TrajectoryKind::Kinematic,
            times,
            states,
            velocities: None,
            cost_position: None,
            cost_velocity: None,
            controls,
        };
        t.check()?;
        Ok(t)
    }

    pub fn mechanical(
        times: Vec<f64>,
        states: Vec<DVector<f64>>,
        velocities: Vec<DVector<f64>>,
        controls: Vec<DVector<f64>>,
    ) -> Result<Self> {
        let t = Trajectory {
            kind: TrajectoryKind::Mechanical,
            times,
            states,
            velocities: Some(velocities),
            cost_position: None,
            cost_velocity: None,
            controls,
        };
        t.check()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.states.first().map_or(0, |x| x.len())
    }

    pub fn control_dim(&self) -> usize {
        self.controls.first().map_or(0, |u| u.len())
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn tf(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// True when the cost coordinates required by the kind are present.
    pub fn is_extended(&self) -> bool {
        match self.kind {
            TrajectoryKind::Kinematic => self.cost_position.is_some(),
            TrajectoryKind::Mechanical => {
                self.cost_position.is_some() && self.cost_velocity.is_some()
            }
        }
    }

    pub fn velocity(&self, k: usize) -> Option<&DVector<f64>> {
        self.velocities.as_ref().map(|v| &v[k])
    }

    /// Shape checks: grid, consistent lengths and dimensions, finite values.
    pub fn check(&self) -> Result<()> {
        ode::check_grid(&self.times)?;
        let len = self.times.len();
        let bad = |what: &str, got: usize| {
            Error::InvalidTrajectory(format!("{what} has {got} rows, grid has {len}"))
        };
        if self.states.len() != len {
            return Err(bad("states", self.states.len()));
        }
        if self.controls.len() != len {
            return Err(bad("controls", self.controls.len()));
        }
        let n = self.state_dim();
        let m = self.control_dim();
        if self.states.iter().any(|x| x.len() != n) || self.controls.iter().any(|u| u.len() != m) {
            return Err(Error::InvalidTrajectory(
                "ragged state or control rows".into(),
            ));
        }
        match (self.kind, &self.velocities) {
            (TrajectoryKind::Mechanical, None) => {
                return Err(Error::InvalidTrajectory(
                    "mechanical trajectory without velocities".into(),
                ))
            }
            (TrajectoryKind::Kinematic, Some(_)) => {
                return Err(Error::InvalidTrajectory(
                    "kinematic trajectory with velocities".into(),
                ))
            }
            (_, Some(v)) => {
                if v.len() != len {
                    return Err(bad("velocities", v.len()));
                }
                if v.iter().any(|v| v.len() != n) {
                    return Err(Error::InvalidTrajectory("ragged velocity rows".into()));
                }
            }
            _ => {}
        }
        if self.kind == TrajectoryKind::Kinematic && self.cost_velocity.is_some() {
            return Err(Error::InvalidTrajectory(
                "kinematic trajectory with v0 column".into(),
            ));
        }
        for (name, col) in [("x0", &self.cost_position), ("v0", &self.cost_velocity)] {
            if let Some(c) = col {
                if c.len() != len {
                    return Err(bad(name, c.len()));
                }
            }
        }
        let all_finite = self
            .states
            .iter()
            .chain(self.controls.iter())
            .chain(self.velocities.iter().flatten())
            .all(|v| v.iter().all(|x| x.is_finite()))
            && self
                .cost_position
                .iter()
                .chain(self.cost_velocity.iter())
                .flatten()
                .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::InvalidTrajectory("non-finite value".into()));
        }
        Ok(())
    }

    /// CSV header for this trajectory's columns.
    pub fn header(&self) -> Vec<String> {
        let n = self.state_dim();
        let mut h = vec!["t".to_string()];
        h.extend((1..=n).map(|i| format!("x{i}")));
        if self.velocities.is_some() {
            h.extend((1..=n).map(|i| format!("v{i}")));
        }
        if self.cost_position.is_some() {
            h.push("x0".into());
        }
        if self.cost_velocity.is_some() {
            h.push("v0".into());
        }
        h.extend((1..=self.control_dim()).map(|s| format!("u{s}")));
        h
    }

    /// Row `k` in header order.
    pub fn row(&self, k: usize) -> Vec<f64> {
        let mut r = vec![self.times[k]];
        r.extend(self.states[k].iter());
        if let Some(v) = &self.velocities {
            r.extend(v[k].iter());
        }
        if let Some(c) = &self.cost_position {
            r.push(c[k]);
        }
        if let Some(c) = &self.cost_velocity {
            r.push(c[k]);
        }
        r.extend(self.controls[k].iter());
        r
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for k in 0..self.len() {
            w.write_record(self.row(k).iter().map(|v| format_float(*v)))?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Reads the column layout `t,x1..xn[,v1..vn][,x0[,v0]],u1..um`. The
    /// presence of `v*` columns selects the mechanical kind.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let layout = Layout::from_header(&header)?;
        let mut t = Trajectory {
            kind: if layout.v.is_empty() {
                TrajectoryKind::Kinematic
            } else {
                TrajectoryKind::Mechanical
            },
            times: Vec::new(),
            states: Vec::new(),
            velocities: (!layout.v.is_empty()).then(Vec::new),
            cost_position: layout.x0.map(|_| Vec::new()),
            cost_velocity: layout.v0.map(|_| Vec::new()),
            controls: Vec::new(),
        };
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::InvalidTrajectory(format!(
                    "row {} has {} fields, header has {}",
                    line + 1,
                    rec.len(),
                    header.len()
                )));
            }
            let vals = rec
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    s.parse::<f64>().map_err(|_| {
                        Error::InvalidTrajectory(format!(
                            "row {}, column `{}`: `{s}` is not a number",
                            line + 1,
                            header[c]
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let pick =
                |cols: &[usize]| DVector::from_iterator(cols.len(), cols.iter().map(|&c| vals[c]));
            t.times.push(vals[layout.t]);
            t.states.push(pick(&layout.x));
            if let Some(v) = &mut t.velocities {
                v.push(pick(&layout.v));
            }
            if let (Some(c), Some(col)) = (&mut t.cost_position, layout.x0) {
                c.push(vals[col]);
            }
            if let (Some(c), Some(col)) = (&mut t.cost_velocity, layout.v0) {
                c.push(vals[col]);
            }
            t.controls.push(pick(&layout.u));
        }
        t.check()?;
        Ok(t)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read_csv(file)
    }
}

/// Round-trip float formatting: 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

struct Layout {
    t: usize,
    x: Vec<usize>,
    v: Vec<usize>,
    x0: Option<usize>,
    v0: Option<usize>,
    u: Vec<usize>,
}

impl Layout {
    fn from_header(header: &[String]) -> Result<Self> {
        let indexed = |prefix: char| -> Vec<(usize, usize)> {
            header
                .iter()
                .enumerate()
                .filter_map(|(c, h)| {
                    let rest = h.strip_prefix(prefix)?;
                    let i: usize = rest.parse().ok()?;
                    (i >= 1).then_some((i, c))
                })
                .collect()
        };
        let ordered = |prefix: char| -> Result<Vec<usize>> {
            let mut cols = indexed(prefix);
            cols.sort();
            for (expect, (i, _)) in cols.iter().enumerate() {
                if *i != expect + 1 {
                    return Err(Error::InvalidTrajectory(format!(
                        "column `{prefix}{}` missing from header",
                        expect + 1
                    )));
                }
            }
            Ok(cols.into_iter().map(|(_, c)| c).collect())
        };
        let find = |name: &str| header.iter().position(|h| h == name);
        let t = find("t")
            .ok_or_else(|| Error::InvalidTrajectory("header lacks a `t` column".into()))?;
        let x = ordered('x')?;
        let v = ordered('v')?;
        let u = ordered('u')?;
        if x.is_empty() {
            return Err(Error::InvalidTrajectory(
                "header lacks state columns x1..".into(),
            ));
        }
        if !v.is_empty() && v.len() != x.len() {
            return Err(Error::InvalidTrajectory(format!(
                "{} velocity columns for {} states",
                v.len(),
                x.len()
            )));
        }
        let x0 = find("x0");
        let v0 = find("v0");
        if v0.is_some() && (x0.is_none() || v.is_empty()) {
            return Err(Error::InvalidTrajectory(
                "`v0` needs `x0` and velocity columns".into(),
            ));
        }
        let known = 1 + x.len() + v.len() + u.len() + x0.iter().count() + v0.iter().count();
        if known != header.len() {
            let unknown = header
                .iter()
                .enumerate()
                .find(|(c, _)| {
                    *c != t
                        && !x.contains(c)
                        && !v.contains(c)
                        && !u.contains(c)
                        && Some(*c) != x0
                        && Some(*c) != v0
                })
                .map(|(_, h)| h.clone())
                .unwrap_or_default();
            return Err(Error::InvalidTrajectory(format!(
                "unexpected column `{unknown}`"
            )));
        }
        Ok(Layout { t, x, v, x0, v0, u })
    }
}
