use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::ForecastSet;
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Skill {
    /// Correlation of ensemble means with observations.
    pub correlation: f64,
    /// Share of observations inside the 95% member interval.
    pub coverage: f64,
}

pub fn skill(set: &ForecastSet) -> Result<Skill> {
    if set.years().len() < 3 {
        return Err(Error::InvalidArgument("skill needs at least 3 forecast years".into()));
    }
    let correlation = stats::pearson(&set.ensemble_means(), &set.observations())?;
    let inside = set
        .years()
        .iter()
        .filter(|y| {
            let (lo, hi) = y.interval();
            lo <= y.observed && y.observed <= hi
        })
        .count();
    Ok(Skill { correlation, coverage: inside as f64 / set.years().len() as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WindowSkill {
    pub first_year: i32,
    pub last_year: i32,
    /// Year the value is plotted at.
    pub year: i32,
    pub correlation: f64,
    /// SD of the companion series over the window, when supplied for every
    /// year of it.
    pub companion_sd: Option<f64>,
}

/// Correlation over every run of `window` consecutive forecasts. The value
/// is placed at the `window / 2`-th year of the run. `companion` pairs
/// years with values (typically yearly means of the forced signal).
pub fn moving_window_skill(
    set: &ForecastSet,
    window: usize,
    companion: Option<&[(i32, f64)]>,
) -> Result<Vec<WindowSkill>> {
    if window < 5 {
        return Err(Error::InvalidArgument(format!("window of {window} years is shorter than 5")));
    }
    let years = set.labels();
    if years.len() < window {
        return Err(Error::InvalidArgument(format!("{} forecast years for a {window}-year window", years.len())));
    }
    let fc = set.ensemble_means();
    let obs = set.observations();
    let lookup: Option<BTreeMap<i32, f64>> = companion.map(|c| c.iter().copied().collect());
    (0..=years.len() - window)
        .map(|s| {
            let e = s + window;
            let correlation = stats::pearson(&fc[s..e], &obs[s..e]).unwrap_or(f64::NAN);
            let companion_sd = lookup.as_ref().and_then(|m| {
                let v: Option<Vec<f64>> = years[s..e].iter().map(|y| m.get(y).copied()).collect();
                v.map(|v| stats::std_dev(&v))
            });
            Ok(WindowSkill {
                first_year: years[s],
                last_year: years[e - 1],
                year: years[s + window / 2 - 1],
                correlation,
                companion_sd,
            })
        })
        .collect()
}

/// Named yearly forecast values.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub name: String,
    pub years: Vec<i32>,
    pub values: Vec<f64>,
}

impl Predictor {
    pub fn new(name: impl Into<String>, years: Vec<i32>, values: Vec<f64>) -> Result<Self> {
        if years.len() != values.len() {
            return Err(Error::Dimension(format!("{} years for {} values", years.len(), values.len())));
        }
        if years.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("predictor years must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite predictor value".into()));
        }
        Ok(Self { name: name.into(), years, values })
    }

    pub fn from_set(name: impl Into<String>, set: &ForecastSet) -> Self {
        Self { name: name.into(), years: set.labels(), values: set.ensemble_means() }
    }

    fn get(&self, year: i32) -> Option<f64> {
        self.years.binary_search(&year).ok().map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, serde::Deserialize)]
struct ExternalRow {
    year: i32,
    ensemble_mean: f64,
}

/// Reads a CSV with columns `year,ensemble_mean`; rows are sorted by year.
pub fn read_external_forecast(path: impl AsRef<Path>, name: &str) -> Result<Predictor> {
    let path = path.as_ref();
    let wrap = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    let mut rows = r.deserialize().map(|row| row.map_err(wrap)).collect::<Result<Vec<ExternalRow>>>()?;
    rows.sort_by_key(|row| row.year);
    Predictor::new(
        name,
        rows.iter().map(|row| row.year).collect(),
        rows.iter().map(|row| row.ensemble_mean).collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recalibrated {
    pub name: String,
    pub raw_correlation: f64,
    pub intercept: f64,
    pub slope: f64,
    /// Correlation of `intercept + slope * x` with the observations.
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub years: Vec<i32>,
    pub sets: Vec<Recalibrated>,
    /// Predictors in the multiple regression, in input order.
    pub used: Vec<String>,
    /// Predictors left out as collinear with earlier ones.
    pub dropped: Vec<String>,
    /// Intercept followed by one coefficient per used predictor.
    pub coefficients: Vec<f64>,
    pub combined: Vec<f64>,
    pub correlation: f64,
}

fn design(columns: &[&[f64]], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, columns.len() + 1, |r, c| if c == 0 { 1.0 } else { columns[c - 1][r] })
}

/// Over the years common to all predictors and the observations, fits each
/// predictor to the observations by least squares, then regresses the
/// observations on all of them together. A predictor that adds no rank to
/// the earlier ones is dropped and reported.
pub fn recalibrate_and_combine(
    predictors: &[Predictor],
    observed: &Predictor,
) -> Result<Combination> {
    if predictors.is_empty() {
        return Err(Error::InvalidArgument("no forecasts to combine".into()));
    }
    let years: Vec<i32> = observed
        .years
        .iter()
        .copied()
        .filter(|y| predictors.iter().all(|p| p.get(*y).is_some()))
        .collect();
    if years.len() < 5 {
        return Err(Error::InvalidArgument(format!("{} common years; at least 5 are needed", years.len())));
    }
    let n = years.len();
    let obs: Vec<f64> = years.iter().map(|y| observed.get(*y).unwrap()).collect();
    let cols: Vec<Vec<f64>> = predictors.iter().map(|p| years.iter().map(|y| p.get(*y).unwrap()).collect()).collect();
    let y = DVector::from_column_slice(&obs);

    let mut sets = Vec::with_capacity(predictors.len());
    for (p, x) in predictors.iter().zip(&cols) {
        let raw_correlation = stats::pearson(x, &obs)?;
        let b = stats::ols(&design(&[x], n), &y)?;
        let fitted: Vec<f64> = x.iter().map(|v| b[0] + b[1] * v).collect();
        sets.push(Recalibrated {
            name: p.name.clone(),
            raw_correlation,
            intercept: b[0],
            slope: b[1],
            correlation: stats::pearson(&fitted, &obs)?,
        });
    }

    let mut used: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    let mut coefficients = DVector::zeros(0);
    for j in 0..predictors.len() {
        let mut trial: Vec<&[f64]> = used.iter().map(|&u| cols[u].as_slice()).collect();
        trial.push(&cols[j]);
        match stats::ols(&design(&trial, n), &y) {
            Ok(b) if trial.len() + 1 <= n => {
                used.push(j);
                coefficients = b;
            }
            Ok(_) | Err(Error::RankDeficient(_)) => dropped.push(predictors[j].name.clone()),
            Err(e) => return Err(e),
        }
    }
    let columns: Vec<&[f64]> = used.iter().map(|&u| cols[u].as_slice()).collect();
    let combined: Vec<f64> = (design(&columns, n) * &coefficients).iter().copied().collect();
    Ok(Combination {
        years,
        sets,
        used: used.iter().map(|&u| predictors[u].name.clone()).collect(),
        dropped,
        coefficients: coefficients.iter().copied().collect(),
        correlation: stats::pearson(&combined, &obs)?,
        combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::MonthWindow;
    use crate::forecast::ForecastYear;
    use chrono::NaiveDate;

    fn set(obs: &[f64], means: &[f64]) -> ForecastSet {
        let years = obs
            .iter()
            .zip(means)
            .enumerate()
            .map(|(i, (o, m))| ForecastYear {
                year: 1960 + i as i32,
                init: NaiveDate::from_ymd_opt(1959 + i as i32, 12, 1).unwrap(),
                members: vec![m - 1.0, *m, m + 1.0],
                observed: *o,
            })
            .collect();
        ForecastSet::new(MonthWindow::DJF, years).unwrap()
    }

    #[test]
    fn skill_by_hand() {
        let s = set(&[0.0, 1.0, 5.0, 3.0], &[0.5, 1.0, 2.0, 3.0]);
        let k = skill(&s).unwrap();
        assert!((k.coverage - 0.75).abs() < 1e-15);
        let r = stats::pearson(&[0.5, 1.0, 2.0, 3.0], &[0.0, 1.0, 5.0, 3.0]).unwrap();
        assert_eq!(k.correlation, r);
        assert!(skill(&set(&[0.0, 1.0], &[0.0, 1.0])).is_err());
    }

    #[test]
    fn moving_windows() {
        let obs: Vec<f64> = (0..12).map(|i| ((i * 5) % 7) as f64).collect();
        let fc: Vec<f64> = (0..12).map(|i| ((i * 3) % 5) as f64).collect();
        let s = set(&obs, &fc);
        let companion: Vec<(i32, f64)> = (1960..1970).map(|y| (y, y as f64)).collect();
        let w = moving_window_skill(&s, 6, Some(&companion)).unwrap();
        assert_eq!(w.len(), 7);
        assert_eq!((w[0].first_year, w[0].last_year, w[0].year), (1960, 1965, 1962));
        assert_eq!(w[2].correlation, stats::pearson(&fc[2..8], &obs[2..8]).unwrap());
        assert!((w[0].companion_sd.unwrap() - stats::std_dev(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0])).abs() < 1e-12);
        // 1970 and 1971 have no companion value.
        assert_eq!(w[6].companion_sd, None);
        assert!(moving_window_skill(&s, 4, None).is_err());
        assert!(moving_window_skill(&s, 13, None).is_err());
    }

    #[test]
    fn combination_recovers_a_linear_truth() {
        let years: Vec<i32> = (1980..2000).collect();
        let a: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..20).map(|i| (i as f64 * 1.3).cos()).collect();
        let obs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 1.0 + 2.0 * x - 0.5 * y).collect();
        let pa = Predictor::new("a", years.clone(), a.clone()).unwrap();
        let pb = Predictor::new("b", years.clone(), b).unwrap();
        let twice = Predictor::new("a2", years.clone(), a.iter().map(|v| 2.0 * v + 1.0).collect()).unwrap();
        let o = Predictor::new("obs", years, obs).unwrap();
        let c = recalibrate_and_combine(&[pa, twice, pb], &o).unwrap();
        assert_eq!(c.used, vec!["a".to_string(), "b".to_string()]);
        assert_eq!(c.dropped, vec!["a2".to_string()]);
        for (got, want) in c.coefficients.iter().zip([1.0, 2.0, -0.5]) {
            assert!((got - want).abs() < 1e-9);
        }
        assert!((c.correlation - 1.0).abs() < 1e-12);
        // Recalibration is affine, so it keeps the size of the correlation.
        for s in &c.sets {
            assert!((s.correlation - s.raw_correlation.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn combination_needs_five_common_years() {
        let p = Predictor::new("p", (1990..1996).collect(), vec![1.0, 3.0, 2.0, 5.0, 4.0, 6.0]).unwrap();
        let o = Predictor::new("o", (1992..2000).collect(), (0..8).map(f64::from).collect()).unwrap();
        assert!(recalibrate_and_combine(&[p], &o).is_err());
    }

    #[test]
    fn external_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ext.csv");
        std::fs::write(&path, "year,ensemble_mean\n1991,0.5\n1990,-0.25\n").unwrap();
        let p = read_external_forecast(&path, "ext").unwrap();
        assert_eq!(p.years, vec![1990, 1991]);
        assert_eq!(p.values, vec![-0.25, 0.5]);
        std::fs::write(&path, "year,mean\n1991,0.5\n").unwrap();
        assert!(read_external_forecast(&path, "ext").is_err());
    }
}
