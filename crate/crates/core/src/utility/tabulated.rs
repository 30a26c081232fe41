use std::io::Read;
use std::sync::Arc;

use super::{CustomUtility, UtilityError, UtilityFunction, UtilityKind};
use crate::scalar::Real;

#[derive(Debug, serde::Deserialize)]
struct TableRow {
    x: f64,
    u: f64,
    uprime: f64,
}

struct Table {
    x: Vec<f64>,
    u: Vec<f64>,
    d: Vec<f64>,
}

impl Table {
    fn interval(&self, x: f64) -> Option<usize> {
        let n = self.x.len();
        if !(x >= self.x[0] && x <= self.x[n - 1]) {
            return None;
        }
        Some(match self.x.partition_point(|&xi| xi <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        })
    }

    /// Cubic Hermite interpolation using the tabulated slopes.
    fn u(&self, x: f64) -> f64 {
        let Some(i) = self.interval(x) else {
            return f64::NAN;
        };
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.u[i]
            + (t3 - 2.0 * t2 + t) * h * self.d[i]
            + (-2.0 * t3 + 3.0 * t2) * self.u[i + 1]
            + (t3 - t2) * h * self.d[i + 1]
    }

    /// Linear interpolation of the tabulated marginal utility.
    fn d(&self, x: f64) -> f64 {
        let Some(i) = self.interval(x) else {
            return f64::NAN;
        };
        let t = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.d[i] + t * (self.d[i + 1] - self.d[i])
    }
}

/// Reads a utility tabulated as CSV with header `x,u,uprime`.
///
/// Rows must have strictly increasing `x`, increasing `u` and positive,
/// strictly decreasing `uprime`. Between rows `U` is the cubic Hermite
/// interpolant of `(u, uprime)` and `U'` is interpolated linearly; outside
/// the table both evaluate to NaN.
pub fn from_csv<F: Real, R: Read>(reader: R, critical_wealth: F) -> Result<UtilityFunction<F>, UtilityError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| UtilityError::Table(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "u", "uprime"] {
        return Err(UtilityError::Table(format!(
            "expected header `x,u,uprime`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut table = Table {
        x: Vec::new(),
        u: Vec::new(),
        d: Vec::new(),
    };
    for (line, row) in rdr.deserialize::<TableRow>().enumerate() {
        let row = row.map_err(|e| UtilityError::Table(e.to_string()))?;
        let at = line + 2;
        if !(row.x.is_finite() && row.u.is_finite() && row.uprime.is_finite()) {
            return Err(UtilityError::Table(format!("line {at}: non-finite value")));
        }
        if row.uprime <= 0.0 {
            return Err(UtilityError::Table(format!("line {at}: uprime must be positive")));
        }
        if let (Some(&px), Some(&pu), Some(&pd)) = (table.x.last(), table.u.last(), table.d.last()) {
            if row.x <= px {
                return Err(UtilityError::Table(format!("line {at}: x must increase")));
            }
            if row.u <= pu {
                return Err(UtilityError::Table(format!("line {at}: u must increase")));
            }
            if row.uprime >= pd {
                return Err(UtilityError::Table(format!("line {at}: uprime must decrease")));
            }
        }
        if row.x <= critical_wealth.as_f64() {
            return Err(UtilityError::Table(format!(
                "line {at}: x lies at or below the critical wealth"
            )));
        }
        table.x.push(row.x);
        table.u.push(row.u);
        table.d.push(row.uprime);
    }
    if table.x.len() < 2 {
        return Err(UtilityError::Table("need at least two rows".into()));
    }
    let table = Arc::new(table);
    let (tu, td) = (Arc::clone(&table), Arc::clone(&table));
    Ok(UtilityFunction {
        critical_wealth,
        kind: UtilityKind::Custom(CustomUtility {
            label: "tabulated".into(),
            u: Arc::new(move |x: F| F::lit(tu.u(x.as_f64()))),
            u_prime: Arc::new(move |x: F| F::lit(td.d(x.as_f64()))),
            sup: None,
        }),
    })
}
