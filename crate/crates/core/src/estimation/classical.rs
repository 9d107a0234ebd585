use std::collections::BTreeMap;

use crate::calendar::MonthWindow;
use crate::error::{Error, Result};
use crate::stats;
use crate::timeseries::DailySeries;

/// Variance partition of seasonal means under an AR(1) weather null.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalPp {
    /// Fraction of the inter-annual variance not explained by accumulated
    /// AR(1) weather noise.
    pub forced_fraction: f64,
    pub noise_fraction: f64,
    pub phi: f64,
    pub innovation_variance: f64,
    pub seasons: usize,
}

/// Classical potential-predictability estimate for `season` on an already
/// deseasonalised series. Only complete, fully observed seasons are used.
pub fn classical_pp(data: &DailySeries, season: MonthWindow) -> Result<ClassicalPp> {
    let mut by_year: BTreeMap<i32, Vec<Option<f64>>> = BTreeMap::new();
    for (i, v) in data.values().iter().enumerate() {
        let d = data.date(i);
        if season.contains(d) {
            by_year.entry(season.season_year(d)).or_default().push(*v);
        }
    }
    let segments: Vec<Vec<f64>> = by_year
        .into_iter()
        .filter(|(y, vals)| {
            let len = (season.last_day(*y) - season.first_day(*y)).num_days() as usize + 1;
            vals.len() == len && vals.iter().all(|v| v.is_some())
        })
        .map(|(_, vals)| vals.into_iter().flatten().collect())
        .collect();
    if segments.len() < 10 {
        return Err(Error::Data(format!(
            "classical estimate needs at least 10 complete {season} seasons, found {}",
            segments.len()
        )));
    }
    let means: Vec<f64> = segments.iter().map(|s| stats::mean(s)).collect();
    // Pooled AR(1) fit to within-season anomalies.
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (seg, m) in segments.iter().zip(&means) {
        for w in seg.windows(2) {
            sxy += (w[0] - m) * (w[1] - m);
            sxx += (w[0] - m) * (w[0] - m);
        }
    }
    if !(sxx > 0.0) {
        return Err(Error::Data("zero within-season variance".into()));
    }
    let phi = sxy / sxx;
    if phi.abs() >= 1.0 {
        return Err(Error::Numerical(format!("AR(1) coefficient {phi} is not stationary")));
    }
    let mut resid = Vec::new();
    for (seg, m) in segments.iter().zip(&means) {
        resid.extend(seg.windows(2).map(|w| (w[1] - m) - phi * (w[0] - m)));
    }
    let innovation_variance = stats::sum(resid.iter().map(|r| r * r)) / resid.len() as f64;
    let len = stats::mean(&segments.iter().map(|s| s.len() as f64).collect::<Vec<_>>());
    let implied = ar1_mean_variance(phi, innovation_variance, len.round() as usize);
    let observed = stats::variance(&means);
    if !(observed > 0.0) {
        return Err(Error::Data("seasonal means have zero variance".into()));
    }
    let noise = (implied / observed).min(1.0);
    Ok(ClassicalPp {
        forced_fraction: 1.0 - noise,
        noise_fraction: noise,
        phi,
        innovation_variance,
        seasons: segments.len(),
    })
}

/// Variance of the mean of `len` consecutive values of a stationary AR(1)
/// with coefficient `phi` and innovation variance `w`.
pub(crate) fn ar1_mean_variance(phi: f64, w: f64, len: usize) -> f64 {
    let l = len as f64;
    let var_x = w / (1.0 - phi * phi);
    let mut acc = 1.0;
    let mut pk = 1.0;
    for k in 1..len {
        pk *= phi;
        acc += 2.0 * (1.0 - k as f64 / l) * pk;
    }
    var_x * acc / l
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        (0..n + 200)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = phi * x + e;
                x
            })
            .skip(200)
            .collect()
    }

    #[test]
    fn mean_variance_matches_direct_sum() {
        let (phi, w, len) = (0.7f64, 2.0, 40usize);
        let var_x = w / (1.0 - phi * phi);
        let mut direct = 0.0;
        for i in 0..len {
            for j in 0..len {
                direct += var_x * phi.powi((i as i32 - j as i32).abs());
            }
        }
        direct /= (len * len) as f64;
        assert!((ar1_mean_variance(phi, w, len) - direct).abs() < 1e-12);
    }

    #[test]
    fn no_forcing_gives_small_fraction() {
        let start = NaiveDate::from_ymd_opt(1900, 1, 1).unwrap();
        let x = ar1(365 * 80, 0.8, 3);
        let s = DailySeries::from_values(start, x).unwrap();
        let r = classical_pp(&s, MonthWindow::DJF).unwrap();
        assert!(r.forced_fraction < 0.15, "{r:?}");
        assert!((r.phi - 0.8).abs() < 0.05);
    }

    #[test]
    fn injected_shift_is_recovered() {
        let start = NaiveDate::from_ymd_opt(1900, 1, 1).unwrap();
        let n = 365 * 100;
        let phi = 0.8;
        let mut x = ar1(n, phi, 8);
        let s0 = DailySeries::from_values(start, x.clone()).unwrap();
        // Shift variance = 3 x the AR(1) seasonal-mean variance (90 days).
        let shift_var = 3.0 * ar1_mean_variance(phi, 1.0, 90);
        let normal = Normal::new(0.0, shift_var.sqrt()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut shifts = BTreeMap::new();
        for (i, v) in x.iter_mut().enumerate() {
            let d = s0.date(i);
            if MonthWindow::DJF.contains(d) {
                let y = MonthWindow::DJF.season_year(d);
                *v += *shifts.entry(y).or_insert_with(|| normal.sample(&mut rng));
            }
        }
        let s = DailySeries::from_values(start, x).unwrap();
        let r = classical_pp(&s, MonthWindow::DJF).unwrap();
        assert!((r.forced_fraction - 0.75).abs() < 0.1, "{r:?}");
    }

    #[test]
    fn too_few_seasons() {
        let start = NaiveDate::from_ymd_opt(1900, 1, 1).unwrap();
        let s = DailySeries::from_values(start, ar1(365 * 5, 0.5, 1)).unwrap();
        assert!(matches!(classical_pp(&s, MonthWindow::DJF), Err(Error::Data(_))));
    }
}
