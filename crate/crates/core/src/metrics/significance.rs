use statrs::distribution::{ContinuousCDF, StudentsT};

use super::MetricVector;
use crate::error::{Error, Result};

/// Result of a two-sided paired t-test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    pub p: f64,
}

/// Paired t-test on the per-user differences `a - b`.
///
/// All-zero differences give `t = 0, p = 1`. Constant non-zero differences
/// have no spread and give an infinite `t` with `p = 0`.
pub fn paired_t_test(a: &MetricVector, b: &MetricVector) -> Result<TTest> {
    if a.values.len() != b.values.len() || a.values.keys().ne(b.values.keys()) {
        return Err(Error::MismatchedUsers(format!(
            "{}/{} covers {} users, {}/{} covers {}",
            a.model,
            a.metric,
            a.values.len(),
            b.model,
            b.metric,
            b.values.len()
        )));
    }
    let n = a.values.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("paired t-test needs n >= 2, got {n}")));
    }
    let diffs: Vec<f64> = a.values.values().zip(b.values.values()).map(|(x, y)| x - y).collect();
    let df = n - 1;
    if diffs.iter().all(|&d| d == 0.0) {
        return Ok(TTest { t: 0.0, df, p: 1.0 });
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        return Ok(TTest {
            t: mean.signum() * f64::INFINITY,
            df,
            p: 0.0,
        });
    }
    let t = mean / (var.sqrt() / nf.sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1 is a valid Student t");
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(TTest { t, df, p })
}
