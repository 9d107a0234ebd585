use std::fmt::Write as _;

use anyhow::Result;
use chrono::{Datelike, NaiveDate};
use nao_ssm::analysis::{
    anova, attribute_years, decompose_path, posterior_predictive_check, write_anova_csv, write_attribution_csv,
    write_bands_csv, write_check_csv, AnovaTerm, Band, ForcingEvolution, SeasonalMeans, SummaryTracks,
};
use nao_ssm::estimation::classical_pp;
use nao_ssm::forecast::deseasonalize;
use nao_ssm::model::ForcingKind;
use nao_ssm::ssm::{ekf_filter, BackwardSampler};
use nao_ssm::{DailySeries, MonthWindow};
use rayon::prelude::*;

use super::decimal_year;
use crate::svg::{self, Panel, Ribbon, Series};
use crate::{write_text, AnalyzeArgs, RunConfig};

/// Samples `run.members` trajectories from the fitted model and writes the
/// seasonal variance table, per-year attributions, component tracks,
/// within-winter forcing bands, the predictive check and the classical
/// estimate, with figures.
pub fn cmd_analyze(run: &RunConfig, args: &AnalyzeArgs) -> Result<()> {
    let data = run.load_data()?;
    let config = run.fitted_config()?;
    let model = config.build(data.start())?;
    let prior = config.prior()?;
    let filter = ekf_filter(&model, &prior, data.values())?;
    let sampler = BackwardSampler::new(&filter)?;
    drop(filter);
    let steps = data.len();

    let mut seasons = MonthWindow::CLIMATOLOGICAL
        .iter()
        .map(|s| SeasonalMeans::new(&data, *s, None))
        .collect::<nao_ssm::Result<Vec<_>>>()?;
    let mut tracks = SummaryTracks::new(&model, steps, args.stride)?;
    let winters: Vec<i32> = match (&args.winters, config.layout.forcing) {
        (_, kind) if kind != ForcingKind::MeanShift => Vec::new(),
        (Some(w), _) => w.clone(),
        (None, _) => last_complete_winter(&data).into_iter().collect(),
    };
    let mut forcing =
        winters.iter().map(|&w| ForcingEvolution::new(&model, steps, w)).collect::<nao_ssm::Result<Vec<_>>>()?;

    // Paths are drawn in parallel batches but consumed in member order, so
    // the output does not depend on the thread count.
    let batch = 4 * rayon::current_num_threads();
    let mut next = 0;
    while next < run.members {
        let end = (next + batch).min(run.members);
        let paths: Vec<Vec<f64>> = (next..end).into_par_iter().map(|m| sampler.draw_member(run.seed, m)).collect();
        for path in &paths {
            let parts = decompose_path(path, &model, &data)?;
            for s in &mut seasons {
                s.push(&parts)?;
            }
            tracks.push(path)?;
            for f in &mut forcing {
                f.push(path)?;
            }
        }
        next = end;
    }
    drop(sampler);

    let rows = seasons.iter().map(anova).collect::<nao_ssm::Result<Vec<_>>>()?;
    write_anova_csv(&rows, run.output("anova.csv")?)?;
    let mut attribution_panels = Vec::new();
    for s in &seasons {
        let a = attribute_years(s)?;
        write_attribution_csv(&a, run.output(&format!("attribution_{}.csv", a.season))?)?;
        let mut p = Panel::new(format!("{} anomalies", a.season), "year", "hPa");
        let ext = a.term(AnovaTerm::External);
        p.series.push(Series::bars("external", a.years.iter().zip(&ext).map(|(y, v)| (*y as f64, *v)).collect()));
        p.series.push(Series::points(
            "observed",
            a.years.iter().zip(&a.observed_anomaly).map(|(y, v)| (*y as f64, *v)).collect(),
        ));
        attribution_panels.push(p);
    }
    svg::write(&run.output("attribution.svg")?, &svg::panels(&attribution_panels, 2))?;

    let mut anova_panel = Panel::new("Share of inter-annual variance", "season", "fraction");
    for (j, term) in AnovaTerm::ALL.iter().enumerate() {
        anova_panel.series.push(Series::points(
            term.name(),
            rows.iter().enumerate().map(|(i, r)| (i as f64 + 0.15 * j as f64, r.fraction(*term).0)).collect(),
        ));
    }
    svg::write(&run.output("anova.svg")?, &svg::panels(&[anova_panel], 1))?;

    let bands = tracks.bands();
    write_bands_csv(&bands, run.output("trend.csv")?)?;
    let track_panels: Vec<Panel> = tracks
        .names()
        .iter()
        .filter(|n| ["mu", "amplitude1", "phase1", "phi1"].contains(&n.as_str()))
        .map(|name| band_panel(name, "date", &bands.iter().filter(|b| &b.name == name).cloned().collect::<Vec<_>>()))
        .collect();
    svg::write(&run.output("trend.svg")?, &svg::panels(&track_panels, 2))?;

    for (w, f) in winters.iter().zip(&forcing) {
        let bands = f.bands();
        write_bands_csv(&bands, run.output(&format!("forcing_{w}.csv"))?)?;
        let panel = band_panel(&format!("Forcing, winter {w}"), "date", &bands);
        svg::write(&run.output(&format!("forcing_{w}.svg"))?, &svg::panels(&[panel], 1))?;
    }

    match args.check_start.or_else(|| default_check_start(&data)) {
        Some(start) => {
            let report = posterior_predictive_check(&model, &prior, &data, start, run.members.max(2), run.seed)?;
            write_check_csv(&report, run.output("check.csv")?)?;
        }
        None => eprintln!("note: fewer than 20 whole years of data; predictive check skipped"),
    }

    let anomalies = deseasonalize(&data)?;
    let mut text = String::from("# season forced_fraction noise_fraction phi innovation_variance seasons\n");
    for season in MonthWindow::CLIMATOLOGICAL {
        match classical_pp(&anomalies, season) {
            Ok(c) => writeln!(
                text,
                "{season} {} {} {} {} {}",
                c.forced_fraction, c.noise_fraction, c.phi, c.innovation_variance, c.seasons
            )?,
            Err(e) => writeln!(text, "{season} unavailable: {e}")?,
        }
    }
    write_text(&run.output("classical.txt")?, &text)?;
    Ok(())
}

fn band_panel(title: &str, x_label: &str, bands: &[Band]) -> Panel {
    let mut p = Panel::new(title, x_label, "");
    let x = |b: &Band| decimal_year(b.date);
    p.ribbons.push(Ribbon { name: "95%".into(), points: bands.iter().map(|b| (x(b), b.lo, b.hi)).collect() });
    p.series.push(Series::line("mean", bands.iter().map(|b| (x(b), b.mean)).collect()));
    p
}

/// January year of the last November to April span inside the data.
fn last_complete_winter(data: &DailySeries) -> Option<i32> {
    let end = data.end();
    let mut w = end.year();
    loop {
        let from = NaiveDate::from_ymd_opt(w - 1, 11, 1)?;
        let to = NaiveDate::from_ymd_opt(w, 4, 30)?;
        if from < data.start() {
            return None;
        }
        if to <= end {
            return Some(w);
        }
        w -= 1;
    }
}

/// Leaves the first twenty whole years (or as many as possible while
/// keeping twenty) for the filter to settle; `None` below twenty years.
fn default_check_start(data: &DailySeries) -> Option<i32> {
    let (start, end) = (data.start(), data.end());
    let first = if start.ordinal() == 1 { start.year() } else { start.year() + 1 };
    let last = if end.month() == 12 && end.day() == 31 { end.year() } else { end.year() - 1 };
    let full = last - first + 1;
    (full >= 20).then(|| first + (full - 20).min(20))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(from: (i32, u32, u32), to: (i32, u32, u32)) -> DailySeries {
        let a = NaiveDate::from_ymd_opt(from.0, from.1, from.2).unwrap();
        let b = NaiveDate::from_ymd_opt(to.0, to.1, to.2).unwrap();
        DailySeries::from_values(a, vec![0.0; (b - a).num_days() as usize + 1]).unwrap()
    }

    #[test]
    fn winters_and_check_years() {
        assert_eq!(last_complete_winter(&series((1950, 1, 1), (2016, 12, 31))), Some(2016));
        assert_eq!(last_complete_winter(&series((1950, 1, 1), (2016, 4, 29))), Some(2015));
        assert_eq!(last_complete_winter(&series((1950, 1, 1), (1950, 12, 31))), None);
        assert_eq!(default_check_start(&series((1950, 1, 1), (2016, 12, 31))), Some(1970));
        assert_eq!(default_check_start(&series((1950, 3, 1), (1979, 12, 31))), Some(1960));
        assert_eq!(default_check_start(&series((1950, 1, 1), (1968, 12, 31))), None);
    }
}
