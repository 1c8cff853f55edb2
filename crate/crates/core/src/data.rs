//! Weather and price ingestion, turbine wind synthesis, method-of-bins power
//! curves and daily aggregation.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{NaiveDateTime, Timelike};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("row {row}: expected hour {expected}, found {found}")]
    Gap {
        row: usize,
        expected: NaiveDateTime,
        found: NaiveDateTime,
    },
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("series is empty")]
    Empty,
    #[error("series of {len} hours does not split into whole days")]
    PartialDay { len: usize },
    #[error("power curve has no occupied bins")]
    NoBins,
    #[error("invalid argument: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    pub timestamps: Vec<NaiveDateTime>,
    pub wind: Vec<f64>,
    pub wave: Vec<f64>,
}

impl WeatherSeries {
    pub fn len(&self) -> usize {
        self.wind.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wind.is_empty()
    }

    /// Hour of day of the first sample.
    pub fn first_hour(&self) -> u32 {
        self.timestamps.first().map_or(0, |t| t.hour())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub timestamps: Vec<NaiveDateTime>,
    /// Π_t, $/MWh
    pub hourly: Vec<f64>,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.hourly.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hourly.is_empty()
    }

    /// Π_d
    pub fn daily(&self) -> Result<Vec<f64>, DataError> {
        daily_aggregate(&self.hourly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    /// `timestamp,wind_ms,wave_m`
    Weather,
    /// `timestamp,price_usd_mwh`
    Price,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ingested {
    Weather(WeatherSeries),
    Price(PriceSeries),
}

impl Ingested {
    pub fn len(&self) -> usize {
        match self {
            Ingested::Weather(w) => w.len(),
            Ingested::Price(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

const TIME_FORMATS: [&str; 4] = [
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%dT%H:%M",
];

fn parse_time(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    TIME_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn column(headers: &csv::StringRecord, name: &'static str) -> Result<usize, DataError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or(DataError::MissingColumn(name))
}

/// Reads an hourly CSV with a header row. Rows are numbered from 0 after
/// the header.
pub fn ingest_reader<R: Read>(reader: R, schema: Schema) -> Result<Ingested, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let ts_col = column(&headers, "timestamp")?;
    let value_cols: Vec<usize> = match schema {
        Schema::Weather => vec![column(&headers, "wind_ms")?, column(&headers, "wave_m")?],
        Schema::Price => vec![column(&headers, "price_usd_mwh")?],
    };
    let mut timestamps = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); value_cols.len()];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| DataError::Row {
            row,
            message: e.to_string(),
        })?;
        let raw_ts = rec.get(ts_col).unwrap_or_default();
        let ts = parse_time(raw_ts).ok_or_else(|| DataError::Row {
            row,
            message: format!("unparsable timestamp `{raw_ts}`"),
        })?;
        if let Some(prev) = timestamps.last() {
            let expected = *prev + chrono::Duration::hours(1);
            if ts != expected {
                return Err(DataError::Gap {
                    row,
                    expected,
                    found: ts,
                });
            }
        }
        timestamps.push(ts);
        for (k, &c) in value_cols.iter().enumerate() {
            let raw = rec.get(c).unwrap_or_default();
            let v: f64 = raw.parse().map_err(|_| DataError::Row {
                row,
                message: format!(
                    "unparsable value `{raw}` in column {}",
                    headers.get(c).unwrap_or("?")
                ),
            })?;
            if !v.is_finite() {
                return Err(DataError::Row {
                    row,
                    message: format!("non-finite value {v}"),
                });
            }
            if schema == Schema::Weather && v < 0.0 {
                let what = if k == 0 { "wind speed" } else { "wave height" };
                return Err(DataError::Row {
                    row,
                    message: format!("negative {what} {v}"),
                });
            }
            values[k].push(v);
        }
    }
    if timestamps.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(match schema {
        Schema::Weather => {
            let wave = values.pop().unwrap_or_default();
            let wind = values.pop().unwrap_or_default();
            Ingested::Weather(WeatherSeries {
                timestamps,
                wind,
                wave,
            })
        }
        Schema::Price => Ingested::Price(PriceSeries {
            timestamps,
            hourly: values.pop().unwrap_or_default(),
        }),
    })
}

pub fn ingest_csv(path: impl AsRef<Path>, schema: Schema) -> Result<Ingested, DataError> {
    ingest_reader(File::open(path)?, schema)
}

pub fn read_weather(path: impl AsRef<Path>) -> Result<WeatherSeries, DataError> {
    match ingest_csv(path, Schema::Weather)? {
        Ingested::Weather(w) => Ok(w),
        Ingested::Price(_) => unreachable!(),
    }
}

pub fn read_prices(path: impl AsRef<Path>) -> Result<PriceSeries, DataError> {
    match ingest_csv(path, Schema::Price)? {
        Ingested::Price(p) => Ok(p),
        Ingested::Weather(_) => unreachable!(),
    }
}

/// Reads `wind_ms,power` pairs (power normalized to rated capacity).
pub fn read_power_pairs<R: Read>(reader: R) -> Result<Vec<(f64, f64)>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let (vc, pc) = (column(&headers, "wind_ms")?, column(&headers, "power")?);
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| DataError::Row {
            row,
            message: e.to_string(),
        })?;
        let parse = |c: usize| -> Result<f64, DataError> {
            let raw = rec.get(c).unwrap_or_default();
            raw.parse().map_err(|_| DataError::Row {
                row,
                message: format!("unparsable value `{raw}`"),
            })
        };
        out.push((parse(vc)?, parse(pc)?));
    }
    Ok(out)
}

/// Per-turbine hourly winds drawn from N(buoy_t, sigma²), truncated at 0.
/// Turbine-major draws: turbine i's series does not depend on how many
/// turbines follow it.
pub fn synthesize_turbine_winds(
    buoy: &[f64],
    n_turbines: usize,
    sigma: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>, DataError> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(DataError::Invalid(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    if n_turbines == 0 {
        return Err(DataError::Invalid(
            "at least one turbine is required".into(),
        ));
    }
    if sigma == 0.0 {
        return Ok(vec![buoy.iter().map(|v| v.max(0.0)).collect(); n_turbines]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).map_err(|e| DataError::Invalid(e.to_string()))?;
    Ok((0..n_turbines)
        .map(|_| {
            buoy.iter()
                .map(|&b| (b + noise.sample(&mut rng)).max(0.0))
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub bin_width: f64,
    /// Bin centers, m/s, ascending and evenly spaced.
    pub centers: Vec<f64>,
    /// Mean normalized power per bin.
    pub values: Vec<f64>,
    pub cut_in: f64,
    pub cut_out: f64,
}

pub const DEFAULT_BIN_WIDTH: f64 = 0.5;
pub const DEFAULT_CUT_IN: f64 = 3.0;
pub const DEFAULT_CUT_OUT: f64 = 25.0;

/// Method of bins: the mean normalized power of bins `[k w, (k+1) w)`.
/// Empty bins between occupied ones are interpolated linearly; bins outside
/// the occupied range are dropped and the curve extends with its end values.
pub fn fit_power_curve(pairs: &[(f64, f64)], bin_width: f64) -> Result<PowerCurve, DataError> {
    fit_power_curve_with(pairs, bin_width, DEFAULT_CUT_IN, DEFAULT_CUT_OUT)
}

pub fn fit_power_curve_with(
    pairs: &[(f64, f64)],
    bin_width: f64,
    cut_in: f64,
    cut_out: f64,
) -> Result<PowerCurve, DataError> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(DataError::Invalid(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    if pairs.is_empty() {
        return Err(DataError::NoBins);
    }
    for (row, &(v, p)) in pairs.iter().enumerate() {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(DataError::Row {
                row,
                message: format!("wind speed {v} outside [0, inf)"),
            });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(DataError::Row {
                row,
                message: format!("normalized power {p} outside [0, 1]"),
            });
        }
    }
    let max_v = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    let nbins = (max_v / bin_width).floor() as usize + 1;
    let mut sum = vec![0.0; nbins];
    let mut count = vec![0usize; nbins];
    for &(v, p) in pairs {
        let k = ((v / bin_width).floor() as usize).min(nbins - 1);
        sum[k] += p;
        count[k] += 1;
    }
    let occupied: Vec<usize> = (0..nbins).filter(|&k| count[k] > 0).collect();
    let (&first, &last) = match (occupied.first(), occupied.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(DataError::NoBins),
    };
    let mut values = vec![f64::NAN; nbins];
    for &k in &occupied {
        values[k] = sum[k] / count[k] as f64;
    }
    for w in occupied.windows(2) {
        let (a, b) = (w[0], w[1]);
        for k in a + 1..b {
            let r = (k - a) as f64 / (b - a) as f64;
            values[k] = values[a] + r * (values[b] - values[a]);
        }
    }
    let centers = (first..=last)
        .map(|k| (k as f64 + 0.5) * bin_width)
        .collect();
    let values = values[first..=last]
        .iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    Ok(PowerCurve {
        bin_width,
        centers,
        values,
        cut_in,
        cut_out,
    })
}

/// Writes a curve as `wind_ms,power` rows under `# key=value` metadata.
pub fn write_curve<W: Write>(mut out: W, curve: &PowerCurve) -> Result<(), DataError> {
    writeln!(out, "# bin_width={}", curve.bin_width)?;
    writeln!(out, "# cut_in={}", curve.cut_in)?;
    writeln!(out, "# cut_out={}", curve.cut_out)?;
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["wind_ms", "power"])?;
    for (c, v) in curve.centers.iter().zip(&curve.values) {
        wr.write_record([c.to_string(), v.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_curve<R: Read>(mut reader: R) -> Result<PowerCurve, DataError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let meta = |key: &str| -> Result<f64, DataError> {
        text.lines()
            .filter_map(|l| l.strip_prefix('#'))
            .filter_map(|l| l.trim().split_once('='))
            .find(|(k, _)| k.trim() == key)
            .and_then(|(_, v)| v.trim().parse().ok())
            .ok_or_else(|| DataError::Invalid(format!("curve file lacks `# {key}=`")))
    };
    let (bin_width, cut_in, cut_out) = (meta("bin_width")?, meta("cut_in")?, meta("cut_out")?);
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| [l, "\n"])
        .collect();
    let pairs = read_power_pairs(body.as_bytes())?;
    if pairs.is_empty() {
        return Err(DataError::NoBins);
    }
    let (centers, values) = pairs.into_iter().unzip();
    Ok(PowerCurve {
        bin_width,
        centers,
        values,
        cut_in,
        cut_out,
    })
}

/// f(speed): zero below cut-in and above cut-out, linear between bin
/// centers, constant beyond the outermost centers.
pub fn normalized_power(curve: &PowerCurve, speed: f64) -> f64 {
    if !(speed >= curve.cut_in) || speed > curve.cut_out {
        return 0.0;
    }
    let c = &curve.centers;
    let n = c.len();
    if speed <= c[0] {
        return curve.values[0];
    }
    if speed >= c[n - 1] {
        return curve.values[n - 1];
    }
    let pos = (speed - c[0]) / curve.bin_width;
    let k = (pos.floor() as usize).min(n - 2);
    let r = pos - k as f64;
    (curve.values[k] + r * (curve.values[k + 1] - curve.values[k])).clamp(0.0, 1.0)
}

/// Means of consecutive 24-hour blocks.
pub fn daily_aggregate(hourly: &[f64]) -> Result<Vec<f64>, DataError> {
    if hourly.len() % 24 != 0 {
        return Err(DataError::PartialDay { len: hourly.len() });
    }
    Ok(hourly
        .chunks(24)
        .map(|d| d.iter().sum::<f64>() / 24.0)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weather_csv(rows: &[(&str, f64, f64)]) -> String {
        let mut s = String::from("timestamp,wind_ms,wave_m\n");
        for (t, w, h) in rows {
            s.push_str(&format!("{t},{w},{h}\n"));
        }
        s
    }

    #[test]
    fn gap_is_reported_at_row() {
        let csv = weather_csv(&[
            ("2019-09-01 00:00:00", 5.0, 0.5),
            ("2019-09-01 01:00:00", 5.0, 0.5),
            ("2019-09-01 03:00:00", 5.0, 0.5),
        ]);
        match ingest_reader(csv.as_bytes(), Schema::Weather) {
            Err(DataError::Gap { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_wave_is_rejected() {
        let csv = weather_csv(&[
            ("2019-09-01 00:00:00", 5.0, 0.5),
            ("2019-09-01 01:00:00", 5.0, -0.1),
        ]);
        match ingest_reader(csv.as_bytes(), Schema::Weather) {
            Err(DataError::Row { row, message }) => {
                assert_eq!(row, 1);
                assert!(message.contains("wave"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn prices_parse() {
        let csv = "timestamp,price_usd_mwh\n2020-01-01T00:00,20.5\n2020-01-01T01:00,30\n";
        let Ingested::Price(p) = ingest_reader(csv.as_bytes(), Schema::Price).unwrap() else {
            panic!()
        };
        assert_eq!(p.hourly, vec![20.5, 30.0]);
    }

    #[test]
    fn zero_sigma_copies_buoy() {
        let buoy = vec![1.0, 5.0, 9.5];
        let w = synthesize_turbine_winds(&buoy, 3, 0.0, 1).unwrap();
        assert!(w.iter().all(|s| *s == buoy));
    }

    #[test]
    fn curve_file_round_trips() {
        let pairs: Vec<(f64, f64)> = (0..200)
            .map(|k| (k as f64 * 0.13, (k as f64 / 200.0).powi(3)))
            .collect();
        let c = fit_power_curve(&pairs, 0.5).unwrap();
        let mut buf = Vec::new();
        write_curve(&mut buf, &c).unwrap();
        assert_eq!(read_curve(buf.as_slice()).unwrap(), c);
        assert!(read_curve("wind_ms,power\n1,0.5\n".as_bytes()).is_err());
    }

    #[test]
    fn single_pair_curve_is_constant() {
        let c = fit_power_curve(&[(8.0, 0.4)], 0.5).unwrap();
        assert_eq!(c.values, vec![0.4]);
        for v in [3.0, 8.0, 12.0, 24.0] {
            assert_eq!(normalized_power(&c, v), 0.4);
        }
    }

    #[test]
    fn out_of_range_power_rejected() {
        assert!(fit_power_curve(&[(8.0, 1.2)], 0.5).is_err());
        assert!(fit_power_curve(&[], 0.5).is_err());
    }

    #[test]
    fn standstill_and_cut_out() {
        let c = fit_power_curve(&[(8.0, 0.4), (20.0, 1.0)], 0.5).unwrap();
        assert_eq!(normalized_power(&c, 0.0), 0.0);
        assert_eq!(normalized_power(&c, 30.0), 0.0);
    }

    #[test]
    fn interior_gaps_are_interpolated() {
        let c = fit_power_curve(&[(0.1, 0.0), (2.1, 1.0)], 1.0).unwrap();
        assert_eq!(c.values, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn daily_means() {
        assert_eq!(daily_aggregate(&[10.0; 48]).unwrap(), vec![10.0, 10.0]);
        let p: Vec<f64> = (0..24).map(f64::from).collect();
        assert_eq!(daily_aggregate(&p).unwrap(), vec![11.5]);
        assert_eq!(daily_aggregate(&vec![0.0; 2400]).unwrap().len(), 100);
        assert!(matches!(
            daily_aggregate(&[1.0; 25]),
            Err(DataError::PartialDay { len: 25 })
        ));
    }
}
