//! Illustrative projections of a bilateral distance series beyond the last
//! observed year. These are explicit models, not fitted forecasts.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Codomain a projected value is clamped to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// Raw Jaccard distance, clamped to [0, 1].
    #[default]
    Raw,
    /// `-ln D`, clamped to [0, ∞).
    Rescaled,
}

impl Representation {
    pub fn clamp(self, v: f64) -> f64 {
        match self {
            Representation::Raw => v.clamp(0.0, 1.0),
            Representation::Rescaled => v.max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    A,
    B,
    C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario")]
pub enum ScenarioParams {
    A,
    B { damping: f64 },
    C { damping: f64, peak_years: u32, decline_rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySeries {
    pub pair: String,
    pub representation: Representation,
    pub observed: Vec<(i32, f64)>,
    pub scenario: Scenario,
    pub params: ScenarioParams,
    pub projected: Vec<(i32, f64)>,
}

fn check_observed(observed: &[(i32, f64)]) -> Result<(), Error> {
    if observed.len() < 2 {
        return Err(Error::Argument("projection needs at least two observed points".into()));
    }
    if observed.windows(2).any(|w| w[1].0 != w[0].0 + 1) {
        return Err(Error::Argument("observed years must be contiguous and ascending".into()));
    }
    Ok(())
}

fn check_horizon(horizon: u32) -> Result<(), Error> {
    if horizon == 0 {
        return Err(Error::Argument("horizon must be at least one year".into()));
    }
    Ok(())
}

/// Scenario A, time reflection about the last observed year:
/// value(t_end + k) = value(t_end - k). Stops early when the mirror runs out
/// of observed history.
pub fn project_a(
    pair: &str,
    observed: &[(i32, f64)],
    horizon: u32,
    representation: Representation,
) -> Result<TrajectorySeries, Error> {
    check_observed(observed)?;
    check_horizon(horizon)?;
    let last = observed.len() - 1;
    let (t_end, _) = observed[last];
    let projected = (1..=horizon as usize)
        .take_while(|k| *k <= last)
        .map(|k| (t_end + k as i32, representation.clamp(observed[last - k].1)))
        .collect();
    Ok(TrajectorySeries {
        pair: pair.into(),
        representation,
        observed: observed.to_vec(),
        scenario: Scenario::A,
        params: ScenarioParams::A,
        projected,
    })
}

fn damped_growth(observed: &[(i32, f64)], years: u32, damping: f64, representation: Representation) -> Vec<(i32, f64)> {
    let last = observed.len() - 1;
    let (t_end, v_end) = observed[last];
    let step = v_end - observed[last - 1].1;
    let mut value = v_end;
    let mut factor = 1.0;
    (1..=years as i32)
        .map(|k| {
            factor *= damping;
            value += factor * step;
            (t_end + k, representation.clamp(value))
        })
        .collect()
}

/// Scenario B: the last observed increment continues, damped geometrically,
/// Δ(t_end + k) = λ^k · (value(t_end) - value(t_end - 1)).
pub fn project_b(
    pair: &str,
    observed: &[(i32, f64)],
    horizon: u32,
    damping: f64,
    representation: Representation,
) -> Result<TrajectorySeries, Error> {
    check_observed(observed)?;
    check_horizon(horizon)?;
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::Argument(format!("damping must lie in (0, 1), got {damping}")));
    }
    Ok(TrajectorySeries {
        pair: pair.into(),
        representation,
        observed: observed.to_vec(),
        scenario: Scenario::B,
        params: ScenarioParams::B { damping },
        projected: damped_growth(observed, horizon, damping, representation),
    })
}

/// Scenario C: Scenario B growth for `peak_years`, then a linear return at
/// `decline_rate` per year in the direction opposite to the recent trend.
pub fn project_c(
    pair: &str,
    observed: &[(i32, f64)],
    horizon: u32,
    damping: f64,
    peak_years: u32,
    decline_rate: f64,
    representation: Representation,
) -> Result<TrajectorySeries, Error> {
    check_observed(observed)?;
    check_horizon(horizon)?;
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::Argument(format!("damping must lie in (0, 1), got {damping}")));
    }
    if peak_years == 0 {
        return Err(Error::Argument("peak_years must be at least 1".into()));
    }
    if !(decline_rate > 0.0) || !decline_rate.is_finite() {
        return Err(Error::Argument(format!("decline_rate must be positive, got {decline_rate}")));
    }
    let last = observed.len() - 1;
    let direction = if observed[last].1 >= observed[last - 1].1 { 1.0 } else { -1.0 };
    let growth = peak_years.min(horizon);
    let mut projected = damped_growth(observed, growth, damping, representation);
    let mut value = projected.last().map_or(observed[last].1, |p| p.1);
    let t_peak = observed[last].0 + growth as i32;
    for k in 1..=(horizon - growth) as i32 {
        value -= direction * decline_rate;
        projected.push((t_peak + k, representation.clamp(value)));
    }
    Ok(TrajectorySeries {
        pair: pair.into(),
        representation,
        observed: observed.to_vec(),
        scenario: Scenario::C,
        params: ScenarioParams::C { damping, peak_years, decline_rate },
        projected,
    })
}

/// Mean absolute per-year change between two observed years, the default
/// Scenario C return rate.
pub fn mean_annual_change(observed: &[(i32, f64)], from: i32, to: i32) -> Result<f64, Error> {
    let at = |y: i32| {
        observed
            .iter()
            .find(|p| p.0 == y)
            .map(|p| p.1)
            .ok_or_else(|| Error::Argument(format!("no observed value for {y}")))
    };
    if to <= from {
        return Err(Error::Argument("mean change needs from < to".into()));
    }
    Ok(((at(to)? - at(from)?) / (to - from) as f64).abs())
}

/// Number of strict interior local maxima of the observed tail joined with
/// the projection.
pub fn local_maxima(values: &[f64]) -> usize {
    values.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count()
}
