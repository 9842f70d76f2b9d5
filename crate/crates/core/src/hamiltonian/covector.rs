use std::io::{Read, Write};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::systems::format_float;
use crate::systems::{Mode, Trajectory};

/// Momenta along a trajectory grid: `(a₀, a₁…aₙ)` for kinematic paths,
/// `(p₀, p₁…pₙ, q₀, q₁…qₙ)` for mechanical ones.
#[derive(Debug, Clone, PartialEq)]
pub struct CovectorPath {
    pub mode: Mode,
    pub times: Vec<f64>,
    pub covectors: Vec<DVector<f64>>,
}

fn momentum_names(mode: Mode, n: usize) -> Vec<String> {
    match mode {
        Mode::Kinematic => (0..=n).map(|i| format!("a{i}")).collect(),
        Mode::Mechanical => (0..=n)
            .map(|i| format!("p{i}"))
            .chain((0..=n).map(|i| format!("q{i}")))
            .collect(),
    }
}

fn is_momentum_column(h: &str) -> bool {
    let mut chars = h.chars();
    matches!(chars.next(), Some('a' | 'p' | 'q'))
        && !chars.as_str().is_empty()
        && chars.all(|c| c.is_ascii_digit())
}

impl CovectorPath {
    /// State dimension `n` (not counting the cost coordinate).
    pub fn state_dim(&self) -> usize {
        let d = self.covectors.first().map_or(0, |c| c.len());
        match self.mode {
            Mode::Kinematic => d.saturating_sub(1),
            Mode::Mechanical => (d / 2).saturating_sub(1),
        }
    }

    pub fn names(&self) -> Vec<String> {
        momentum_names(self.mode, self.state_dim())
    }

    /// Smallest Euclidean norm along the path.
    pub fn min_norm(&self) -> f64 {
        self.covectors
            .iter()
            .map(|c| c.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest deviation of component `i` from its initial value.
    pub fn drift(&self, i: usize) -> f64 {
        let c0 = self.covectors[0][i];
        self.covectors
            .iter()
            .map(|c| (c[i] - c0).abs())
            .fold(0.0, f64::max)
    }

    /// Writes the trajectory columns followed by the momentum columns.
    pub fn write_csv<W: Write>(&self, traj: &Trajectory, out: W) -> Result<()> {
        if traj.times != self.times {
            return Err(Error::InvalidTrajectory(
                "covector path and trajectory grids differ".into(),
            ));
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = traj.header();
        header.extend(self.names());
        w.write_record(&header)?;
        for k in 0..self.times.len() {
            let mut row: Vec<String> = traj.row(k).into_iter().map(format_float).collect();
            row.extend(self.covectors[k].iter().map(|v| format_float(*v)));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn to_csv_string(&self, traj: &Trajectory) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(traj, &mut buf)?;
        Ok(String::from_utf8(buf).expect("ascii output"))
    }

    /// Reads a file written by [`Self::write_csv`].
    pub fn read_csv<R: Read>(input: R) -> Result<(Trajectory, CovectorPath)> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let (mom_cols, traj_cols): (Vec<usize>, Vec<usize>) =
            (0..header.len()).partition(|&c| is_momentum_column(&header[c]));
        let mut traj_text = csv::Writer::from_writer(Vec::new());
        traj_text.write_record(traj_cols.iter().map(|&c| &header[c]))?;
        let mut moms: Vec<Vec<String>> = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            traj_text.write_record(traj_cols.iter().map(|&c| rec.get(c).unwrap_or("")))?;
            moms.push(
                mom_cols
                    .iter()
                    .map(|&c| rec.get(c).unwrap_or("").to_string())
                    .collect(),
            );
        }
        let bytes = traj_text
            .into_inner()
            .map_err(|e| Error::Csv(e.into_error().into()))?;
        let traj = Trajectory::read_csv(bytes.as_slice())?;
        let mode = match traj.kind {
            crate::systems::TrajectoryKind::Kinematic => Mode::Kinematic,
            crate::systems::TrajectoryKind::Mechanical => Mode::Mechanical,
        };
        let names = momentum_names(mode, traj.state_dim());
        let order = names
            .iter()
            .map(|name| {
                mom_cols
                    .iter()
                    .position(|&c| &header[c] == name)
                    .ok_or_else(|| {
                        Error::InvalidTrajectory(format!("momentum column `{name}` missing"))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        if order.len() != mom_cols.len() {
            return Err(Error::InvalidTrajectory(format!(
                "expected momentum columns {}",
                names.join(",")
            )));
        }
        let covectors = moms
            .iter()
            .enumerate()
            .map(|(row, vals)| {
                order
                    .iter()
                    .map(|&j| {
                        vals[j].parse::<f64>().map_err(|_| {
                            Error::InvalidTrajectory(format!(
                                "row {}, column `{}`: `{}` is not a number",
                                row + 1,
                                header[mom_cols[j]],
                                vals[j]
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(DVector::from_vec)
            })
            .collect::<Result<Vec<_>>>()?;
        let path = CovectorPath {
            mode,
            times: traj.times.clone(),
            covectors,
        };
        Ok((traj, path))
    }
}
