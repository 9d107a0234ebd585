use std::fmt::Write as _;

use anyhow::{bail, Result};
use chrono::Duration;
use nao_ssm::analysis::read_attribution_csv;
use nao_ssm::forecast::{
    deseasonalize, moving_window_skill, optimize_baseline, read_external_forecast, recalibrate_and_combine,
    seasonal_forecast, skill, Baseline, BaselineScan, ForecastSet, Predictor,
};
use nao_ssm::{DailySeries, MonthWindow};

use super::{num, opt, write_rows};
use crate::svg::{self, Panel, Ribbon, Series};
use crate::{write_text, ForecastArgs, RunConfig, UsageError};

/// Years whose season starts at least a year into the data and ends inside
/// it.
pub fn forecast_years(data: &DailySeries, season: MonthWindow) -> Vec<i32> {
    let earliest = data.start() + Duration::days(365);
    (season.season_year(data.start())..=season.season_year(data.end()))
        .filter(|&y| season.first_day(y) >= earliest && season.last_day(y) <= data.end())
        .filter(|&y| nao_ssm::forecast::observed_seasonal_mean(data, season, y).is_some())
        .collect()
}

/// Ensemble forecasts for every requested season, with persistence
/// baselines, moving-window skill and optional combination with external
/// forecasts. Writes one CSV set per season, `skill.txt` and figures.
pub fn cmd_forecast(run: &RunConfig, args: &ForecastArgs) -> Result<()> {
    let data = run.load_data()?;
    let config = run.fitted_config()?;
    let model = config.build(data.start())?;
    let prior = config.prior()?;
    let seasons = args
        .seasons
        .iter()
        .map(|s| s.parse::<MonthWindow>().map_err(|e| UsageError(e.to_string())))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let target: MonthWindow = args.target.parse().map_err(|e: nao_ssm::Error| UsageError(e.to_string()))?;
    let companion = match &args.companion {
        None => None,
        Some(p) => Some(
            read_attribution_csv(p)?
                .into_iter()
                .filter(|r| r.component == "external")
                .map(|r| (r.year, r.hpa))
                .collect::<Vec<_>>(),
        ),
    };
    let anomalies = deseasonalize(&data)?;

    let mut text = String::from(
        "# Baseline parameters are tuned on the same years they are scored on,\n\
         # so their correlations are optimistic.\n",
    );
    let mut forecast_panels = Vec::new();
    let mut baseline_panels = Vec::new();
    let mut window_panels = Vec::new();
    let mut target_set = None;
    for &season in &seasons {
        let years = forecast_years(&data, season);
        if years.len() < 3 {
            bail!(nao_ssm::Error::Data(format!("only {} forecastable {season} seasons in the data", years.len())));
        }
        let set = seasonal_forecast(&model, &prior, &data, season, &years, run.members, run.seed)?;
        set.write_csv(run.output(&format!("forecast_{season}.csv"))?)?;
        let sk = skill(&set)?;
        let observed = set.observations();
        let linear = optimize_baseline(&anomalies, season, &years, &observed, &Baseline::linear_grid())?;
        let exponential = optimize_baseline(&anomalies, season, &years, &observed, &Baseline::exponential_grid())?;
        write_rows(
            &run.output(&format!("baselines_{season}.csv"))?,
            &["kind", "parameter", "correlation"],
            linear
                .curve
                .iter()
                .chain(&exponential.curve)
                .map(|(b, r)| vec![b.kind().to_string(), num(b.parameter()), num(*r)]),
        )?;
        writeln!(text, "{season}.years = {}", years.len())?;
        writeln!(text, "{season}.first_year = {}", years[0])?;
        writeln!(text, "{season}.last_year = {}", years[years.len() - 1])?;
        writeln!(text, "{season}.correlation = {}", sk.correlation)?;
        writeln!(text, "{season}.coverage95 = {}", sk.coverage)?;
        for (tag, scan) in [("linear", &linear), ("exponential", &exponential)] {
            writeln!(text, "{season}.best_{tag} = {}", scan.best.parameter())?;
            writeln!(text, "{season}.best_{tag}_correlation = {}", scan.best_correlation)?;
        }

        if years.len() >= args.window {
            let comp = if season == target { companion.as_deref() } else { None };
            let ws = moving_window_skill(&set, args.window, comp)?;
            write_rows(
                &run.output(&format!("moving_window_{season}.csv"))?,
                &["first_year", "last_year", "year", "correlation", "companion_sd"],
                ws.iter().map(|w| {
                    vec![
                        w.first_year.to_string(),
                        w.last_year.to_string(),
                        w.year.to_string(),
                        num(w.correlation),
                        opt(w.companion_sd),
                    ]
                }),
            )?;
            let mut p = Panel::new(format!("{season}, {}-year windows", args.window), "year", "correlation");
            p.series.push(Series::line("model", ws.iter().map(|w| (w.year as f64, w.correlation)).collect()));
            if ws.iter().any(|w| w.companion_sd.is_some()) {
                p.series.push(Series::line(
                    "SD of forcing",
                    ws.iter().filter_map(|w| w.companion_sd.map(|s| (w.year as f64, s))).collect(),
                ));
            }
            window_panels.push(p);
        }

        forecast_panels.push(forecast_panel(&set));
        baseline_panels.push(baseline_panel(season, &linear, sk.correlation));
        if season == target {
            target_set = Some(set);
        }
    }

    if let Some(path) = &args.external {
        let Some(set) = &target_set else {
            bail!(UsageError(format!("--external needs the target season {target} among --seasons")));
        };
        let external = read_external_forecast(path, "external")?;
        let model_p = Predictor::from_set("model", set);
        let observed = Predictor::new("observed", set.labels(), set.observations())?;
        let c = recalibrate_and_combine(&[model_p, external], &observed)?;
        writeln!(text, "\n# Combination with external forecasts, {target}")?;
        writeln!(text, "combination.years = {}", c.years.len())?;
        for r in &c.sets {
            writeln!(text, "combination.{}.raw_correlation = {}", r.name, r.raw_correlation)?;
            writeln!(text, "combination.{}.intercept = {}", r.name, r.intercept)?;
            writeln!(text, "combination.{}.slope = {}", r.name, r.slope)?;
        }
        writeln!(text, "combination.used = {}", c.used.join(","))?;
        writeln!(text, "combination.dropped = {}", c.dropped.join(","))?;
        let coef: Vec<String> = c.coefficients.iter().map(|v| v.to_string()).collect();
        writeln!(text, "combination.coefficients = {}", coef.join(","))?;
        writeln!(text, "combination.correlation = {}", c.correlation)?;
    }

    write_text(&run.output("skill.txt")?, &text)?;
    svg::write(&run.output("forecast.svg")?, &svg::panels(&forecast_panels, 2))?;
    svg::write(&run.output("baselines.svg")?, &svg::panels(&baseline_panels, 2))?;
    if !window_panels.is_empty() {
        svg::write(&run.output("moving_window.svg")?, &svg::panels(&window_panels, 2))?;
    }
    Ok(())
}

fn forecast_panel(set: &ForecastSet) -> Panel {
    let mut p = Panel::new(format!("{} forecasts", set.season), "year", "hPa");
    let ys = set.years();
    p.ribbons.push(Ribbon {
        name: "95% members".into(),
        points: ys.iter().map(|y| {
            let (lo, hi) = y.interval();
            (y.year as f64, lo, hi)
        })
        .collect(),
    });
    p.series.push(Series::line("ensemble mean", ys.iter().map(|y| (y.year as f64, y.mean())).collect()));
    p.series.push(Series::points("observed", ys.iter().map(|y| (y.year as f64, y.observed)).collect()));
    p
}

fn baseline_panel(season: MonthWindow, scan: &BaselineScan, model: f64) -> Panel {
    let mut p = Panel::new(format!("{season} linear persistence"), "K (days)", "correlation");
    p.series.push(Series::line("persistence", scan.curve.iter().map(|(b, r)| (b.parameter(), *r)).collect()));
    p.rules.push((model, "model".into()));
    p
}
