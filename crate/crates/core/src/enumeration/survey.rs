//! Growth surveys over a ladder of box sizes.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{count, EnumConfig, EnumError};
use crate::systems::SystemSpec;

/// Least-squares line through `(ln P, ln delta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Continued-fraction approximation of the slope, denominator at most 1000.
    #[serde(with = "crate::decimal::rational")]
    pub slope_rational: BigRational,
    /// `ln delta - (intercept + slope ln P)` per fitted rung.
    pub residuals: Vec<f64>,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    #[serde(flatten)]
    pub spec: SystemSpec,
    /// Rungs that were counted.
    pub ladder: Vec<u64>,
    #[serde(with = "crate::decimal::vec")]
    pub deltas: Vec<BigInt>,
    pub fit: Option<LogLogFit>,
    /// First rung refused by the memory budget, with the reason.
    pub stopped_at: Option<(u64, String)>,
}

impl SurveyReport {
    /// `P,delta,log_P,log_delta` rows for plotting.
    pub fn csv(&self) -> String {
        let mut s = String::from("P,delta,log_P,log_delta\n");
        for (p, d) in self.ladder.iter().zip(&self.deltas) {
            let ld = if d.is_zero() {
                String::new()
            } else {
                format!("{:.6}", ln_big(d))
            };
            s.push_str(&format!("{p},{d},{:.6},{ld}\n", (*p as f64).ln()));
        }
        s
    }
}

fn ln_big(v: &BigInt) -> f64 {
    // exact enough for values far beyond f64 range too
    let bits = v.bits();
    if bits < 1000 {
        v.to_f64().expect("finite").ln()
    } else {
        let shift = bits - 60;
        (v >> shift).to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Best rational approximation with bounded denominator.
pub fn approximate_rational(x: f64, max_den: i64) -> BigRational {
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i64;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac.abs() < 1e-12 {
            break;
        }
        r = 1.0 / frac;
    }
    BigRational::new(BigInt::from(h1), BigInt::from(k1))
}

/// Fits `ln delta = a + b ln P` over the positive deltas; needs three points.
pub fn fit_loglog(ladder: &[u64], deltas: &[BigInt]) -> Option<LogLogFit> {
    let pts: Vec<(f64, f64)> = ladder
        .iter()
        .zip(deltas)
        .filter(|(_, d)| **d > BigInt::zero())
        .map(|(p, d)| ((*p as f64).ln(), ln_big(d)))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Some(LogLogFit {
        slope,
        intercept,
        slope_rational: approximate_rational(slope, 1000),
        residuals: pts.iter().map(|p| p.1 - intercept - slope * p.0).collect(),
        points: pts.len(),
    })
}

/// Counts each rung in order. A rung over the memory budget stops the survey
/// and the partial ladder is reported.
pub fn survey(
    spec: &SystemSpec,
    ladder: &[u64],
    config: &EnumConfig,
) -> Result<SurveyReport, EnumError> {
    if ladder.is_empty() {
        return Err(EnumError::Ladder("empty ladder".into()));
    }
    if ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EnumError::Ladder(format!(
            "ladder must be strictly increasing: {ladder:?}"
        )));
    }
    let mut done = Vec::new();
    let mut deltas = Vec::new();
    let mut stopped_at = None;
    for &p in ladder {
        match count(spec, p, config) {
            Ok(c) => {
                done.push(p);
                deltas.push(c.delta);
            }
            Err(e @ EnumError::BudgetExceeded { .. }) => {
                stopped_at = Some((p, e.to_string()));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let fit = fit_loglog(&done, &deltas);
    Ok(SurveyReport {
        spec: *spec,
        ladder: done,
        deltas,
        fit,
        stopped_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SystemSpec {
        SystemSpec::positive(2, 1).unwrap()
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let ladder = [2u64, 4, 8, 16];
        let deltas: Vec<BigInt> = ladder.iter().map(|p| BigInt::from(p * p * p)).collect();
        let fit = fit_loglog(&ladder, &deltas).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-9);
        assert_eq!(fit.slope_rational, BigRational::from_integer(3.into()));
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-9));
    }

    #[test]
    fn rational_approximation() {
        let r = approximate_rational(14.0 / 3.0, 1000);
        assert_eq!(r, BigRational::new(14.into(), 3.into()));
        let r = approximate_rational(std::f64::consts::PI, 1000);
        assert_eq!(r, BigRational::new(355.into(), 113.into()));
    }

    #[test]
    fn zero_deltas_give_no_fit() {
        let r = survey(&spec(), &[2, 3, 4, 5], &EnumConfig::default()).unwrap();
        assert_eq!(r.deltas, vec![BigInt::zero(); 4]);
        assert!(r.fit.is_none());
    }

    #[test]
    fn single_rung_gives_no_fit() {
        let r = survey(&spec(), &[8], &EnumConfig::default()).unwrap();
        assert_eq!(r.ladder, vec![8]);
        assert!(r.fit.is_none());
    }

    #[test]
    fn ladder_must_increase() {
        assert!(survey(&spec(), &[8, 8], &EnumConfig::default()).is_err());
        assert!(survey(&spec(), &[9, 8], &EnumConfig::default()).is_err());
        assert!(survey(&spec(), &[], &EnumConfig::default()).is_err());
    }

    #[test]
    fn budget_stops_the_ladder() {
        let cfg = EnumConfig {
            threads: 1,
            memory_budget: crate::enumeration::memory_estimate(&spec(), 10, false),
        };
        let r = survey(&spec(), &[6, 8, 10, 40, 80], &cfg).unwrap();
        assert_eq!(r.ladder, vec![6, 8, 10]);
        assert_eq!(r.stopped_at.as_ref().unwrap().0, 40);
        assert!(r.fit.is_some());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let r = survey(&spec(), &[5, 6], &EnumConfig::default()).unwrap();
        let csv = r.csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "P,delta,log_P,log_delta");
        assert!(lines[1].starts_with("5,0,") && lines[1].ends_with(','));
        assert!(lines[2].starts_with("6,36,"));
    }
}
