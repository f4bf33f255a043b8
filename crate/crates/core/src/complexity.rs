//! Growth exponents of per-node message load, fitted by least squares on
//! log-log data.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexityError {
    #[error("need at least 3 distinct positive parameter values, got {0}")]
    InsufficientData(usize),
}

/// Slope of ln(y) against ln(x). Points with non-positive coordinates are
/// ignored.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64, ComplexityError> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let distinct: BTreeSet<u64> = pts.iter().map(|(x, _)| x.to_bits()).collect();
    if distinct.len() < 3 {
        return Err(ComplexityError::InsufficientData(distinct.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Which parameter was varied in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axis {
    CommitteeSize,
    Committees,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::CommitteeSize => "c",
            Axis::Committees => "m",
        }
    }
}

/// Mean per-node units for every (role, phase) at one sweep point.
#[derive(Clone, Debug, Default)]
pub struct SweepPoint {
    pub param: f64,
    pub load: BTreeMap<(String, String), f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeRow {
    pub axis: Axis,
    pub role: String,
    pub phase: String,
    pub slope: f64,
    /// Exponent the complexity table predicts, where it states one.
    pub expected: Option<f64>,
}

impl SlopeRow {
    pub fn within(&self, tolerance: f64) -> Option<bool> {
        self.expected.map(|e| (self.slope - e).abs() <= tolerance)
    }
}

/// Predicted exponents checked by the report.
pub fn expected_exponent(axis: Axis, role: &str, phase: &str) -> Option<f64> {
    match (axis, role, phase) {
        (Axis::CommitteeSize, "common", "config") => Some(1.0),
        (Axis::CommitteeSize, "key", "config") => Some(2.0),
        (Axis::Committees, "referee", "commitment") => Some(2.0),
        _ => None,
    }
}

fn slopes(axis: Axis, sweep: &[SweepPoint]) -> Result<Vec<SlopeRow>, ComplexityError> {
    let keys: BTreeSet<&(String, String)> = sweep.iter().flat_map(|p| p.load.keys()).collect();
    let mut rows = Vec::new();
    for key in keys {
        let pts: Vec<(f64, f64)> = sweep
            .iter()
            .filter_map(|p| p.load.get(key).map(|v| (p.param, *v)))
            .collect();
        match loglog_slope(&pts) {
            Ok(slope) => rows.push(SlopeRow {
                axis,
                role: key.0.clone(),
                phase: key.1.clone(),
                slope,
                expected: expected_exponent(axis, &key.0, &key.1),
            }),
            Err(e) if expected_exponent(axis, &key.0, &key.1).is_some() => return Err(e),
            Err(_) => {}
        }
    }
    Ok(rows)
}

/// Slopes for every (role, phase) along both sweeps.
pub fn complexity_report(c_sweep: &[SweepPoint], m_sweep: &[SweepPoint]) -> Result<Vec<SlopeRow>, ComplexityError> {
    for sweep in [c_sweep, m_sweep] {
        let distinct: BTreeSet<u64> = sweep.iter().map(|p| p.param.to_bits()).collect();
        if distinct.len() < 3 {
            return Err(ComplexityError::InsufficientData(distinct.len()));
        }
    }
    let mut rows = slopes(Axis::CommitteeSize, c_sweep)?;
    rows.extend(slopes(Axis::Committees, m_sweep)?);
    Ok(rows)
}

pub fn report_csv(rows: &[SlopeRow]) -> String {
    let mut out = String::from("axis,role,phase,slope,expected\n");
    for r in rows {
        let expected = r.expected.map(|e| format!("{e:.1}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{:.4},{}\n",
            r.axis.label(),
            r.role,
            r.phase,
            r.slope,
            expected
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let quad: Vec<(f64, f64)> = [8.0, 16.0, 32.0].iter().map(|&x| (x, 3.0 * x * x)).collect();
        assert!((loglog_slope(&quad).unwrap() - 2.0).abs() < 1e-12);
        let lin: Vec<(f64, f64)> = [8.0, 16.0, 32.0].iter().map(|&x| (x, 5.0 * x + 0.0)).collect();
        assert!((loglog_slope(&lin).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert_eq!(
            loglog_slope(&[(8.0, 1.0), (16.0, 2.0)]),
            Err(ComplexityError::InsufficientData(2))
        );
        assert_eq!(
            loglog_slope(&[(8.0, 1.0), (8.0, 2.0), (16.0, 2.0)]),
            Err(ComplexityError::InsufficientData(2))
        );
    }

    #[test]
    fn report_marks_expectations() {
        let point = |c: f64| SweepPoint {
            param: c,
            load: [
                (("common".to_string(), "config".to_string()), 4.0 * c),
                (("key".to_string(), "config".to_string()), c * c),
            ]
            .into_iter()
            .collect(),
        };
        let c_sweep: Vec<SweepPoint> = [8.0, 16.0, 32.0].into_iter().map(point).collect();
        assert_eq!(
            complexity_report(&c_sweep, &[]),
            Err(ComplexityError::InsufficientData(0))
        );
        let m_sweep: Vec<SweepPoint> = [8.0, 16.0, 32.0]
            .into_iter()
            .map(|m| SweepPoint {
                param: m,
                load: [(("referee".to_string(), "commitment".to_string()), 2.0 * m * m + 8.0 * m)]
                    .into_iter()
                    .collect(),
            })
            .collect();
        let rows = complexity_report(&c_sweep, &m_sweep).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.within(0.3) == Some(true)));
        assert!(report_csv(&rows).starts_with("axis,role,phase,slope,expected\n"));
    }
}
