use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use super::influence::parse_month_day;
use super::{build_model, default_priors, InfluenceFunction, ModelParams, NaoModel, StateLayout, StatePriors};
use crate::error::{Error, Result};
use crate::ssm::GaussianState;

/// Everything needed to rebuild a fitted model: layout, influence window,
/// parameters and the initial-state prior.
///
/// Stored as flat `key = value` text with `#` comments. Numbers are written
/// in shortest round-trip form, so write-then-read is bit exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub layout: StateLayout,
    pub influence: InfluenceFunction,
    pub params: ModelParams,
    /// Forces `W_psi = W_mu`.
    pub tie_psi: bool,
    pub priors: StatePriors,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::for_layout(StateLayout::default())
    }
}

const PARAM_KEYS: [&str; 10] =
    ["V", "W_mu", "W_psi", "W_beta", "W_X", "a_X", "b_X", "W_phi", "W_delta", "varphi"];

fn param_mut<'a>(p: &'a mut ModelParams, key: &str) -> &'a mut f64 {
    match key {
        "V" => &mut p.v,
        "W_mu" => &mut p.w_mu,
        "W_psi" => &mut p.w_psi,
        "W_beta" => &mut p.w_beta,
        "W_X" => &mut p.w_x,
        "a_X" => &mut p.a_x,
        "b_X" => &mut p.b_x,
        "W_phi" => &mut p.w_phi,
        "W_delta" => &mut p.w_delta,
        "varphi" => &mut p.varphi,
        _ => unreachable!("unknown parameter key"),
    }
}

/// Prior groups and the coordinates they cover.
fn prior_groups(layout: &StateLayout) -> Vec<(String, Vec<usize>)> {
    let mut out = vec![
        ("mu".to_string(), vec![StateLayout::MU]),
        ("beta".to_string(), vec![StateLayout::BETA]),
    ];
    for k in 1..=layout.harmonics {
        out.push((format!("psi{k}"), vec![layout.psi(k), layout.psi_star(k)]));
    }
    out.push(("x".to_string(), (0..layout.order).map(|l| layout.x(l)).collect()));
    out.push(("phi".to_string(), (1..=layout.order).map(|p| layout.phi(p)).collect()));
    if layout.forcing_dim() > 0 {
        out.push(("delta".to_string(), (0..layout.forcing_dim()).map(|i| layout.delta(i)).collect()));
    }
    out
}

impl ModelConfig {
    /// Default parameters and priors for `layout`.
    pub fn for_layout(layout: StateLayout) -> Self {
        Self {
            layout,
            influence: InfluenceFunction::default(),
            params: ModelParams::default(),
            tie_psi: true,
            priors: default_priors(&layout),
        }
    }

    /// The same configuration with another layout; the prior is reset to the
    /// defaults of the new layout.
    pub fn with_layout(&self, layout: StateLayout) -> Self {
        Self { layout, priors: default_priors(&layout), ..self.clone() }
    }

    pub fn build(&self, origin: NaiveDate) -> Result<NaoModel> {
        let mut params = self.params;
        if self.tie_psi {
            params.w_psi = params.w_mu;
        }
        build_model(self.layout, params, self.influence, origin)
    }

    pub fn prior(&self) -> Result<GaussianState> {
        if self.priors.mean.len() != self.layout.dim() || self.priors.var.len() != self.layout.dim() {
            return Err(Error::Dimension("prior does not match the state layout".into()));
        }
        self.priors.to_state()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
        Self::parse(&text, path)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_string())
            .map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
    }

    /// Parses configuration text; `path` only labels error messages.
    /// Missing keys take their defaults.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse { path: PathBuf::from(path), line, msg };
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(i + 1, format!("expected key = value, got '{line}'")))?;
            let k = k.trim().to_string();
            if entries.insert(k.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(err(i + 1, format!("duplicate key '{k}'")));
            }
        }
        let mut take = |key: &str| entries.remove(key);
        let num = |(line, v): (usize, String)| -> Result<f64> {
            v.parse::<f64>().map_err(|_| err(line, format!("'{v}' is not a number")))
        };
        let count = |(line, v): (usize, String)| -> Result<usize> {
            v.parse::<usize>().map_err(|_| err(line, format!("'{v}' is not a non-negative integer")))
        };

        let mut layout = StateLayout::default();
        if let Some(e) = take("harmonics") {
            layout.harmonics = count(e)?;
        }
        if let Some(e) = take("ar_order") {
            let line = e.0;
            layout.order = count(e)?;
            if layout.order == 0 {
                return Err(err(line, "ar_order must be at least 1".into()));
            }
        }
        if let Some((line, v)) = take("forcing") {
            layout.forcing = v.parse().map_err(|e: Error| err(line, e.to_string()))?;
        }
        let mut cfg = Self::for_layout(layout);

        let mut inf = cfg.influence;
        if let Some((line, v)) = take("influence.start") {
            let (m, d) = parse_month_day(&v).ok_or_else(|| err(line, format!("expected MM-DD, got '{v}'")))?;
            inf.start_month = m;
            inf.start_day = d;
        }
        if let Some(e) = take("influence.length") {
            inf.length = count(e)? as u32;
        }
        if let Some(e) = take("influence.taper") {
            inf.taper = count(e)? as u32;
        }
        cfg.influence = InfluenceFunction::new(inf.start_month, inf.start_day, inf.length, inf.taper)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;

        if let Some((line, v)) = take("tie_w_psi") {
            cfg.tie_psi = match v.as_str() {
                "true" => true,
                "false" => false,
                _ => return Err(err(line, format!("expected true or false, got '{v}'"))),
            };
        }
        let mut psi_line = None;
        for key in PARAM_KEYS {
            if let Some(e) = take(key) {
                if key == "W_psi" {
                    psi_line = Some(e.0);
                }
                *param_mut(&mut cfg.params, key) = num(e)?;
            }
        }
        if cfg.tie_psi {
            if let Some(line) = psi_line {
                return Err(err(line, "W_psi is tied to W_mu; set tie_w_psi = false to give it".into()));
            }
            cfg.params.w_psi = cfg.params.w_mu;
        }
        cfg.params.validate().map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;

        let groups = prior_groups(&cfg.layout);
        let mut all_groups: Vec<(String, Vec<usize>)> = groups.clone();
        all_groups.push(("psi".to_string(), (1..=cfg.layout.harmonics)
            .flat_map(|k| [cfg.layout.psi(k), cfg.layout.psi_star(k)])
            .collect()));
        // The broadcast `psi` group applies first so per-harmonic keys win.
        all_groups.rotate_right(1);
        for (name, coords) in &all_groups {
            for field in ["mean", "var"] {
                let key = format!("prior.{name}.{field}");
                let Some((line, v)) = take(&key) else { continue };
                let values: Vec<f64> = v
                    .split(',')
                    .map(|s| num((line, s.trim().to_string())))
                    .collect::<Result<_>>()?;
                let values = match values.len() {
                    1 => vec![values[0]; coords.len()],
                    n if n == coords.len() => values,
                    n => {
                        return Err(err(line, format!(
                            "{key} has {n} values for {} coordinates",
                            coords.len()
                        )))
                    }
                };
                let target = if field == "mean" { &mut cfg.priors.mean } else { &mut cfg.priors.var };
                for (&c, v) in coords.iter().zip(values) {
                    if field == "var" && !(v >= 0.0 && v.is_finite()) {
                        return Err(err(line, format!("{key}: variance must be finite and >= 0")));
                    }
                    target[c] = v;
                }
            }
        }

        if let Some((key, (line, _))) = entries.into_iter().next() {
            return Err(err(line, format!("unknown key '{key}'")));
        }
        Ok(cfg)
    }
}

fn join(values: &[f64]) -> String {
    if values.iter().all(|v| v.to_bits() == values[0].to_bits()) {
        format!("{}", values[0])
    } else {
        values.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let l = &self.layout;
        let inf = &self.influence;
        writeln!(s, "# model structure")?;
        writeln!(s, "harmonics = {}", l.harmonics)?;
        writeln!(s, "ar_order = {}", l.order)?;
        writeln!(s, "forcing = {}", l.forcing)?;
        writeln!(s, "influence.start = {:02}-{:02}", inf.start_month, inf.start_day)?;
        writeln!(s, "influence.length = {}", inf.length)?;
        writeln!(s, "influence.taper = {}", inf.taper)?;
        writeln!(s, "tie_w_psi = {}", self.tie_psi)?;
        writeln!(s, "\n# parameters")?;
        let mut p = self.params;
        for key in PARAM_KEYS {
            if key == "W_psi" && self.tie_psi {
                continue;
            }
            writeln!(s, "{key} = {}", *param_mut(&mut p, key))?;
        }
        writeln!(s, "\n# initial-state prior")?;
        for (name, coords) in prior_groups(l) {
            let m: Vec<f64> = coords.iter().map(|&c| self.priors.mean[c]).collect();
            let v: Vec<f64> = coords.iter().map(|&c| self.priors.var[c]).collect();
            writeln!(s, "prior.{name}.mean = {}", join(&m))?;
            writeln!(s, "prior.{name}.var = {}", join(&v))?;
        }
        f.write_str(&s)
    }
}
