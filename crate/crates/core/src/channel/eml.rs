//! Static EML transfer curve: drive voltage → optical output power.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Default inflection (bias) point in volts.
pub const DEFAULT_V_INFL: f64 = -3.1;
/// Default tanh slope in 1/V.
pub const DEFAULT_SLOPE: f64 = 0.8;
/// Default saturated output power in mW; gives 2.8 mW at the inflection point.
pub const DEFAULT_P_MAX: f64 = 5.6;

#[derive(Debug, Clone, PartialEq)]
pub enum EmlCurve {
    /// `P(v) = p_max · ½(1 + tanh(slope · (v − v_infl)))`
    Analytic { v_infl: f64, slope: f64, p_max: f64 },
    /// Measured points with monotone cubic (Fritsch–Carlson) interpolation.
    Lookup(LookupCurve),
}

impl Default for EmlCurve {
    fn default() -> Self {
        EmlCurve::Analytic {
            v_infl: DEFAULT_V_INFL,
            slope: DEFAULT_SLOPE,
            p_max: DEFAULT_P_MAX,
        }
    }
}

impl EmlCurve {
    pub fn analytic(v_infl: f64, slope: f64, p_max: f64) -> Result<Self> {
        if !(v_infl.is_finite() && slope.is_finite() && p_max.is_finite())
            || slope <= 0.0
            || p_max <= 0.0
        {
            return Err(Error::InvalidParameter(format!(
                "analytic EML curve needs finite v_infl and positive slope, p_max (got {v_infl}, {slope}, {p_max})"
            )));
        }
        Ok(EmlCurve::Analytic {
            v_infl,
            slope,
            p_max,
        })
    }

    pub fn lookup(points: Vec<(f64, f64)>) -> Result<Self> {
        LookupCurve::new(points).map(EmlCurve::Lookup)
    }

    /// Reads a `voltage_V,power_mW` CSV table.
    pub fn from_csv(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            #[serde(rename = "voltage_V")]
            voltage: f64,
            #[serde(rename = "power_mW")]
            power: f64,
        }
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(file);
        let points = reader
            .deserialize::<Row>()
            .map(|row| row.map(|r| (r.voltage, r.power)))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        Self::lookup(points).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Output power in mW at drive voltage `v`. Lookup tables clamp outside their range.
    pub fn power(&self, v: f64) -> f64 {
        match self {
            EmlCurve::Analytic {
                v_infl,
                slope,
                p_max,
            } => p_max * 0.5 * (1.0 + (slope * (v - v_infl)).tanh()),
            EmlCurve::Lookup(table) => table.eval(v),
        }
    }
}

/// Monotone piecewise-cubic Hermite interpolant over measured points.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupCurve {
    voltages: Vec<f64>,
    powers: Vec<f64>,
    slopes: Vec<f64>,
}

impl LookupCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter(
                "lookup table needs at least two points".into(),
            ));
        }
        for (i, pair) in points.windows(2).enumerate() {
            let ((v0, p0), (v1, p1)) = (pair[0], pair[1]);
            if !(v1 > v0) {
                return Err(Error::InvalidParameter(format!(
                    "voltages must be strictly increasing (row {})",
                    i + 2
                )));
            }
            if p1 < p0 {
                return Err(Error::InvalidParameter(format!(
                    "powers must be non-decreasing (row {})",
                    i + 2
                )));
            }
        }
        if points
            .iter()
            .any(|&(v, p)| !v.is_finite() || !p.is_finite() || p < 0.0)
        {
            return Err(Error::InvalidParameter(
                "lookup entries must be finite with non-negative power".into(),
            ));
        }
        let (voltages, powers): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        let slopes = fritsch_carlson(&voltages, &powers);
        Ok(Self {
            voltages,
            powers,
            slopes,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.voltages[0], *self.voltages.last().unwrap())
    }

    fn eval(&self, v: f64) -> f64 {
        let (lo, hi) = self.range();
        if v <= lo {
            return self.powers[0];
        }
        if v >= hi {
            return *self.powers.last().unwrap();
        }
        let k = self.voltages.partition_point(|&x| x <= v) - 1;
        let h = self.voltages[k + 1] - self.voltages[k];
        let t = (v - self.voltages[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.powers[k]
            + h10 * h * self.slopes[k]
            + h01 * self.powers[k + 1]
            + h11 * h * self.slopes[k + 1]
    }
}

fn fritsch_carlson(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let secants: Vec<f64> = (0..n - 1)
        .map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k]))
        .collect();
    let mut m = vec![0.0; n];
    m[0] = secants[0];
    m[n - 1] = secants[n - 2];
    for k in 1..n - 1 {
        m[k] = if secants[k - 1] * secants[k] <= 0.0 {
            0.0
        } else {
            0.5 * (secants[k - 1] + secants[k])
        };
    }
    for k in 0..n - 1 {
        if secants[k] == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = m[k] / secants[k];
        let b = m[k + 1] / secants[k];
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[k] = tau * a * secants[k];
            m[k + 1] = tau * b * secants[k];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_defaults() {
        let c = EmlCurve::default();
        assert!((c.power(-3.1) - 2.8).abs() < 1e-12);
        assert!((c.power(100.0) - 5.6).abs() < 1e-12);
        assert!(c.power(-100.0) < 1e-12);
        assert!(EmlCurve::analytic(-3.1, 0.0, 5.6).is_err());
        assert!(EmlCurve::analytic(-3.1, 0.8, -1.0).is_err());
    }

    #[test]
    fn lookup_validation() {
        assert!(EmlCurve::lookup(vec![(0.0, 1.0)]).is_err());
        assert!(EmlCurve::lookup(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(EmlCurve::lookup(vec![(0.0, 2.0), (1.0, 1.0)]).is_err());
        assert!(EmlCurve::lookup(vec![(0.0, -1.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn lookup_clamps_and_stays_monotone() {
        let analytic = EmlCurve::default();
        let points: Vec<(f64, f64)> = (0..=24)
            .map(|i| {
                let v = -6.0 + 0.25 * i as f64;
                (v, analytic.power(v))
            })
            .collect();
        let table = EmlCurve::lookup(points).unwrap();
        assert_eq!(table.power(-10.0), analytic.power(-6.0));
        assert_eq!(table.power(10.0), analytic.power(0.0));
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=6000 {
            let v = -6.0 + 1e-3 * i as f64;
            let p = table.power(v);
            assert!(p >= prev - 1e-15);
            assert!((p - analytic.power(v)).abs() < 5e-3);
            prev = p;
        }
    }

    #[test]
    fn step_table_has_no_overshoot() {
        let table = EmlCurve::lookup(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (3.0, 1.0)]).unwrap();
        for i in 0..=300 {
            let p = table.power(i as f64 * 0.01);
            assert!((0.0..=1.0).contains(&p));
        }
    }
}
