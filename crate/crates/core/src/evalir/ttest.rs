use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::metrics::{Metric, MetricReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-tailed.
    pub p: f64,
    pub df: usize,
    /// Every paired difference is the same non-zero value, so the statistic
    /// is unbounded. `t` is ±∞ and `p` is 0.
    pub degenerate: bool,
}

impl TTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p < alpha
    }
}

/// Two-tailed paired t-test of `a` against `b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidInput("a paired t-test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = n - 1;
    // differences equal up to rounding count as constant
    let scale = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if var.sqrt() <= 1e-12 * scale.max(1e-300) || var == 0.0 {
        if mean.abs() <= 1e-15 * scale.max(1.0) {
            return Ok(TTest { t: 0.0, p: 1.0, df, degenerate: false });
        }
        return Ok(TTest {
            t: mean.signum() * f64::INFINITY,
            p: 0.0,
            df,
            degenerate: true,
        });
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(TTest { t, p, df, degenerate: false })
}

/// Pairwise tests between named systems, per metric.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SignificanceMatrix {
    pub tests: BTreeMap<Metric, BTreeMap<(String, String), TTest>>,
}

impl SignificanceMatrix {
    /// Tests every ordered pair of distinct systems on every metric. All
    /// reports must cover the same queries.
    pub fn build(systems: &[(String, &MetricReport)]) -> Result<Self> {
        check_coverage(systems.iter().map(|(n, r)| (n.as_str(), *r)))?;
        let mut tests: BTreeMap<Metric, BTreeMap<(String, String), TTest>> = BTreeMap::new();
        for m in Metric::ALL {
            let row = tests.entry(m).or_default();
            for (na, ra) in systems {
                for (nb, rb) in systems {
                    if na == nb {
                        continue;
                    }
                    row.insert((na.clone(), nb.clone()), paired_ttest(&ra.values(m), &rb.values(m))?);
                }
            }
        }
        Ok(SignificanceMatrix { tests })
    }

    pub fn get(&self, m: Metric, a: &str, b: &str) -> Option<&TTest> {
        self.tests.get(&m)?.get(&(a.to_string(), b.to_string()))
    }
}

pub(crate) fn check_coverage<'a>(mut reports: impl Iterator<Item = (&'a str, &'a MetricReport)>) -> Result<()> {
    let Some((first_name, first)) = reports.next() else {
        return Ok(());
    };
    for (name, r) in reports {
        if !r.per_query.keys().eq(first.per_query.keys()) {
            return Err(Error::Validation(format!(
                "runs `{first_name}` and `{name}` cover different queries"
            )));
        }
    }
    Ok(())
}
