use anyhow::{bail, Result};
use nao_ssm::estimation::{grid_search, write_grid_csv, GridOptions, GridRow};
use nao_ssm::model::{ForcingKind, InfluenceFunction};

use crate::svg;
use crate::{RunConfig, SelectArgs, UsageError};

const MONTHS: [&str; 12] = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

/// Fits the grid and writes `grid.csv`, one `bic_{kind}.svg` heatmap per
/// forced kind and the best model as `best.cfg`. Returns the rows sorted by
/// BIC.
pub fn cmd_select(run: &RunConfig, args: &SelectArgs) -> Result<Vec<GridRow>> {
    let data = run.load_data()?;
    let base = run.load_config()?;
    let mut kinds = Vec::new();
    for k in &args.kinds {
        match k.parse::<ForcingKind>() {
            Ok(ForcingKind::None) => {}
            Ok(kind) if !kinds.contains(&kind) => kinds.push(kind),
            Ok(_) => {}
            Err(e) => bail!(UsageError(e.to_string())),
        }
    }
    let lengths: Vec<u32> = args.lengths.clone().unwrap_or_else(|| (90..=330).step_by(30).collect());
    let family = InfluenceFunction::family(&lengths, args.taper).map_err(|e| UsageError(e.to_string()))?;
    if args.refine == Some(0) {
        bail!(UsageError("--refine must be at least 1".into()));
    }
    let options = GridOptions { kinds: kinds.clone(), family, refine: args.refine, ..GridOptions::default() };
    let rows = grid_search(&data, &base, &options)?;

    write_grid_csv(&rows, run.output("grid.csv")?)?;
    let null_bic = rows.iter().find(|r| r.influence.is_none()).map(GridRow::bic).unwrap_or(f64::NAN);
    for kind in &kinds {
        let values: Vec<Vec<Option<f64>>> = (1..=12u32)
            .map(|m| {
                lengths
                    .iter()
                    .map(|&len| {
                        rows.iter()
                            .find(|r| r.kind == *kind && r.influence.is_some_and(|f| f.start_month == m && f.length == len))
                            .map(|r| r.bic() - null_bic)
                            .filter(|v| v.is_finite())
                    })
                    .collect()
            })
            .collect();
        let doc = svg::heatmap(
            &format!("BIC relative to the unforced model: {kind}"),
            &MONTHS.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            &lengths.iter().map(|l| format!("{l}d")).collect::<Vec<_>>(),
            &values,
            &format!("unforced BIC {null_bic:.1}; negative cells favour forcing"),
        );
        svg::write(&run.output(&format!("bic_{kind}.svg"))?, &doc)?;
    }
    match rows.first().map(|r| &r.outcome) {
        Some(Ok(best)) => best.config.write(run.output("best.cfg")?)?,
        _ => bail!(nao_ssm::Error::Numerical("every fit in the grid failed".into())),
    }
    Ok(rows)
}
