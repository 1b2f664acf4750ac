//! Return panels, the exogenous uncertainty index and the regime calendar.

mod io;

pub use io::{
    load_calendar, load_panel, load_series, parse_calendar, read_panel, read_series, write_panel, write_series,
    CsvOptions, LoadedPanel,
};

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Date-indexed `T x N` matrix of daily returns (or prices, before
/// [`log_returns`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    dates: Vec<NaiveDate>,
    returns: DMatrix<f64>,
    asset_names: Vec<String>,
}

impl ReturnPanel {
    pub fn new(dates: Vec<NaiveDate>, returns: DMatrix<f64>, asset_names: Vec<String>) -> Result<Self> {
        let (t, n) = returns.shape();
        if dates.len() != t {
            return Err(Error::invalid(format!("{} dates for {} rows", dates.len(), t)));
        }
        if asset_names.len() != n {
            return Err(Error::invalid(format!("{} names for {} columns", asset_names.len(), n)));
        }
        if n < 2 {
            return Err(Error::invalid("a panel needs at least 2 assets"));
        }
        if t < 2 {
            return Err(Error::invalid("a panel needs at least 2 observations"));
        }
        if let Some(w) = dates.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!("dates not strictly increasing at {}", dates[w + 1])));
        }
        if let Some(k) = returns.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "panel", t: k % t });
        }
        Ok(ReturnPanel { dates, returns, asset_names })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn n_assets(&self) -> usize {
        self.asset_names.len()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    pub fn asset_names(&self) -> &[String] {
        &self.asset_names
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.returns.column(i).iter().copied().collect()
    }

    /// Rows `range` as a new panel.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<ReturnPanel> {
        if range.end > self.len() || range.start >= range.end {
            return Err(Error::invalid(format!("row range {:?} outside panel of {} rows", range, self.len())));
        }
        let rows = self.returns.rows(range.start, range.len()).into_owned();
        ReturnPanel::new(self.dates[range].to_vec(), rows, self.asset_names.clone())
    }

    /// Index range of the rows whose dates fall in `[start, end]`.
    pub fn date_range(&self, start: NaiveDate, end: NaiveDate) -> std::ops::Range<usize> {
        let lo = self.dates.partition_point(|d| *d < start);
        let hi = self.dates.partition_point(|d| *d <= end);
        lo..hi.max(lo)
    }
}

/// The exogenous index `x_t` aligned to a panel, with its sample mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub sample_mean: f64,
}

impl ExogenousSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() || values.is_empty() {
            return Err(Error::invalid("exogenous dates and values must be non-empty and of equal length"));
        }
        if let Some(t) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(format!("exogenous value at t={t} is negative or non-finite")));
        }
        let sample_mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(ExogenousSeries { dates, values, sample_mean })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sub-window with the mean recomputed over that window only.
    pub fn window(&self, range: std::ops::Range<usize>) -> Result<Self> {
        ExogenousSeries::new(self.dates[range.clone()].to_vec(), self.values[range].to_vec())
    }
}

/// Binary regime indicator `D_t` on trading dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCalendar {
    pub dates: Vec<NaiveDate>,
    pub dummy: Vec<u8>,
    /// Trading dates on which the dummy changes value.
    pub switch_dates: Vec<NaiveDate>,
}

impl RegimeCalendar {
    pub fn new(dates: Vec<NaiveDate>, dummy: Vec<u8>) -> Result<Self> {
        if dates.len() != dummy.len() {
            return Err(Error::invalid("calendar dates and dummy differ in length"));
        }
        if dummy.iter().any(|d| *d > 1) {
            return Err(Error::invalid("regime dummy must be 0 or 1"));
        }
        let switch_dates = (1..dummy.len()).filter(|&t| dummy[t] != dummy[t - 1]).map(|t| dates[t]).collect();
        Ok(RegimeCalendar { dates, dummy, switch_dates })
    }

    /// Calendar with a constant regime.
    pub fn constant(dates: Vec<NaiveDate>, regime: u8) -> Result<Self> {
        let n = dates.len();
        RegimeCalendar::new(dates, vec![regime; n])
    }

    pub fn len(&self) -> usize {
        self.dummy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dummy.is_empty()
    }

    pub fn window(&self, range: std::ops::Range<usize>) -> Result<Self> {
        RegimeCalendar::new(self.dates[range.clone()].to_vec(), self.dummy[range].to_vec())
    }
}

/// Raw dated observations before alignment; gaps allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

/// One entry of a regime calendar file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSwitch {
    pub date: NaiveDate,
    pub regime: u8,
}

/// Declarative calendar: the regime in force before the first switch, then
/// the regime starting at each switch date.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CalendarSpec {
    #[serde(default)]
    pub initial_regime: u8,
    #[serde(default, rename = "switch")]
    pub switches: Vec<RegimeSwitch>,
}

/// Percent log returns `100 (ln p_t - ln p_{t-1})`.
pub fn log_returns(prices: &ReturnPanel) -> Result<ReturnPanel> {
    let p = prices.returns();
    let (t, n) = p.shape();
    if let Some(k) = p.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::invalid(format!("non-positive price at row {}, column {}", k % t, k / t)));
    }
    let r = DMatrix::from_fn(t - 1, n, |i, j| 100.0 * (p[(i + 1, j)].ln() - p[(i, j)].ln()));
    ReturnPanel::new(prices.dates()[1..].to_vec(), r, prices.asset_names().to_vec())
}

/// Aligns the exogenous index and the regime calendar to the panel's dates.
///
/// Exogenous gaps are filled with the last observation on or before each
/// trading day. A switch takes effect on the first trading day on or after
/// its date.
pub fn align(
    panel: &ReturnPanel,
    exog: &RawSeries,
    calendar: &CalendarSpec,
) -> Result<(ReturnPanel, ExogenousSeries, RegimeCalendar)> {
    let mut obs: Vec<(NaiveDate, f64)> =
        exog.dates.iter().copied().zip(exog.values.iter().copied()).filter(|(_, v)| v.is_finite()).collect();
    obs.sort_by_key(|(d, _)| *d);
    let first = obs.first().ok_or_else(|| Error::invalid("exogenous series is empty"))?;
    if first.0 > panel.dates()[0] {
        return Err(Error::invalid(format!(
            "exogenous series starts {} after panel start {}",
            first.0,
            panel.dates()[0]
        )));
    }
    let mut values = Vec::with_capacity(panel.len());
    let mut k = 0;
    for d in panel.dates() {
        while k + 1 < obs.len() && obs[k + 1].0 <= *d {
            k += 1;
        }
        values.push(obs[k].1);
    }
    let exog = ExogenousSeries::new(panel.dates().to_vec(), values)?;

    let regimes = align_calendar(panel.dates(), calendar)?;
    Ok((panel.clone(), exog, regimes))
}

/// Regime dummy on `dates`; a switch takes effect on the first date on or
/// after its own date.
pub fn align_calendar(dates: &[NaiveDate], calendar: &CalendarSpec) -> Result<RegimeCalendar> {
    if calendar.initial_regime > 1 || calendar.switches.iter().any(|s| s.regime > 1) {
        return Err(Error::invalid("regime values must be 0 or 1"));
    }
    let mut switches = calendar.switches.clone();
    switches.sort_by_key(|s| s.date);
    let mut dummy = Vec::with_capacity(dates.len());
    let mut current = calendar.initial_regime;
    let mut s = 0;
    for d in dates {
        while s < switches.len() && switches[s].date <= *d {
            current = switches[s].regime;
            s += 1;
        }
        dummy.push(current);
    }
    RegimeCalendar::new(dates.to_vec(), dummy)
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Trailing-window Pearson correlation of one pair of columns. Entry `k`
/// covers rows `k..k+window` and is dated at the window's last row; windows
/// with a constant column yield `None`.
pub fn rolling_correlation(
    panel: &ReturnPanel,
    pair: (usize, usize),
    window: usize,
) -> Result<Vec<(NaiveDate, Option<f64>)>> {
    let (i, j) = pair;
    if i >= panel.n_assets() || j >= panel.n_assets() {
        return Err(Error::invalid("asset index out of range"));
    }
    if window < 2 || window > panel.len() {
        return Err(Error::invalid(format!("window {window} must be in [2, {}]", panel.len())));
    }
    let x = panel.column(i);
    let y = panel.column(j);
    Ok((window - 1..panel.len())
        .map(|end| {
            let lo = end + 1 - window;
            (panel.dates()[end], pearson(&x[lo..=end], &y[lo..=end]))
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct Subsample {
    pub correlation: DMatrix<f64>,
    pub exog_mean: Option<f64>,
    pub n_obs: usize,
}

/// Sample Pearson correlations over the dates `[start, end]`, together with
/// the average exogenous level over the same dates.
pub fn subsample_correlations(
    panel: &ReturnPanel,
    exog: Option<&ExogenousSeries>,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<Subsample> {
    let range = panel.date_range(start, end);
    if range.len() < 3 {
        return Err(Error::invalid(format!("range {start}..{end} holds {} observations, need 3", range.len())));
    }
    let rows = panel.returns().rows(range.start, range.len()).into_owned();
    let correlation = linalg::pearson_correlation(&rows);
    if correlation.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("constant column within the sub-sample".into()));
    }
    let exog_mean = match exog {
        Some(x) => {
            if x.dates != panel.dates() {
                return Err(Error::invalid("exogenous series is not aligned to the panel"));
            }
            Some(x.values[range.clone()].iter().sum::<f64>() / range.len() as f64)
        }
        None => None,
    };
    Ok(Subsample { correlation, exog_mean, n_obs: range.len() })
}

/// `count` consecutive weekdays starting on or after `start`.
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}
