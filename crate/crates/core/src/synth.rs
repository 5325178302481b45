//! Synthetic ego populations with planted layers.
//!
//! Every ego is a star: its alters are unique to it and all events run
//! between the ego and one alter. Each alter belongs to one planted annulus
//! and has a true contact frequency at or above that annulus' floor
//! frequency. The least frequent member of every annulus sits exactly on the
//! floor and the others spread upward by `exp(σ |z|)`, so the floors are the
//! per-layer minimum frequencies a perfect clustering would report.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::egonet::DAYS_PER_YEAR;
use crate::error::{Error, Result};
use crate::ingest::{InteractionEvent, Timestamp, UserId, SECONDS_PER_DAY};
use crate::report::write_atomic;

/// Download time stamped on generated logs (2009-08-12).
pub const DEFAULT_DOWNLOAD_TIME: Timestamp = 1_250_000_000;

/// Alter ids are `ego * ALTER_STRIDE + j + 1`.
pub const ALTER_STRIDE: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountModel {
    /// `f · span` rounded stochastically to a neighbouring integer.
    #[default]
    Expected,
    /// Poisson-distributed with mean `f · span`.
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    /// Target nested layer sizes; fractional sizes are realised by
    /// stochastic rounding.
    pub cumulative_sizes: Vec<f64>,
    /// Floor contact frequency of each layer, events per year.
    pub layer_freqs: Vec<f64>,
    /// Log-scale spread σ of frequencies above the floor.
    pub freq_noise: f64,
    /// Standard deviation of annulus sizes in units of `sqrt(size)`.
    #[serde(default)]
    pub size_jitter: f64,
    #[serde(default)]
    pub count_model: CountModel,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Argument(format!("invalid layer spec: {msg}")));
        let k = self.cumulative_sizes.len();
        if k == 0 {
            return bad("no layers".into());
        }
        if self.layer_freqs.len() != k {
            return bad(format!(
                "{k} layer sizes but {} layer frequencies",
                self.layer_freqs.len()
            ));
        }
        let sizes = &self.cumulative_sizes;
        if sizes.iter().any(|s| !s.is_finite()) || sizes[0] <= 0.0 {
            return bad(format!("sizes {sizes:?} must be finite and positive"));
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "cumulative sizes {sizes:?} are not strictly increasing"
            ));
        }
        if sizes[k - 1] >= ALTER_STRIDE as f64 {
            return bad(format!("at most {} alters per ego", ALTER_STRIDE - 1));
        }
        let freqs = &self.layer_freqs;
        if freqs.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return bad(format!("frequencies {freqs:?} must be finite and positive"));
        }
        if freqs.windows(2).any(|w| w[0] <= w[1]) {
            return bad(format!("frequencies {freqs:?} are not strictly decreasing"));
        }
        for (name, v) in [
            ("freq_noise", self.freq_noise),
            ("size_jitter", self.size_jitter),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} = {v} must be a non-negative number"));
            }
        }
        Ok(())
    }

    pub fn annulus_sizes(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative_sizes
            .iter()
            .map(|&c| {
                let a = c - prev;
                prev = c;
                a
            })
            .collect()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: LayerSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedAlter {
    pub alter: UserId,
    pub layer: usize,
    pub true_freq: f64,
    pub events: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedEgo {
    pub ego: UserId,
    /// Alters ordered by layer, then by generation order.
    pub alters: Vec<PlantedAlter>,
    /// Sorted by `(timestamp, src, dst)`.
    pub events: Vec<InteractionEvent>,
}

impl PlantedEgo {
    /// Planted annulus sizes, including alters that drew zero events.
    pub fn annulus_sizes(&self, layers: usize) -> Vec<usize> {
        let mut sizes = vec![0; layers];
        for a in &self.alters {
            sizes[a.layer] += 1;
        }
        sizes
    }
}

pub fn span_seconds(span_years: f64) -> u64 {
    (span_years * DAYS_PER_YEAR * SECONDS_PER_DAY).round() as u64
}

fn stochastic_round(x: f64, rng: &mut ChaCha8Rng) -> u64 {
    let floor = x.floor();
    floor as u64 + u64::from(rng.random::<f64>() < x - floor)
}

fn check_span(span_years: f64) -> Result<()> {
    if !(span_years.is_finite() && span_years > 0.0) {
        return Err(Error::Argument(format!(
            "span must be positive, got {span_years} years"
        )));
    }
    if span_seconds(span_years) > DEFAULT_DOWNLOAD_TIME {
        return Err(Error::Argument(format!(
            "span of {span_years} years reaches before 1970"
        )));
    }
    Ok(())
}

/// Generates one planted ego. The output depends only on `(spec, ego, span,
/// seed)`: each ego draws from its own stream of the seeded generator.
pub fn generate_ego(
    spec: &LayerSpec,
    ego: UserId,
    span_years: f64,
    seed: u64,
) -> Result<PlantedEgo> {
    spec.validate()?;
    check_span(span_years)?;
    if ego == 0 || ego >= ALTER_STRIDE {
        return Err(Error::Argument(format!(
            "ego id {ego} outside 1..{ALTER_STRIDE}"
        )));
    }
    Ok(generate_valid(spec, ego, span_years, seed))
}

fn generate_valid(spec: &LayerSpec, ego: UserId, span_years: f64, seed: u64) -> PlantedEgo {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ego);

    let mut alters = Vec::new();
    for (layer, (&size, &floor)) in spec
        .annulus_sizes()
        .iter()
        .zip(&spec.layer_freqs)
        .enumerate()
    {
        let target = if spec.size_jitter > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            (size + spec.size_jitter * size.sqrt() * z).max(0.0)
        } else {
            size
        };
        let count = stochastic_round(target, &mut rng) as usize;
        let z: Vec<f64> = (0..count)
            .map(|_| StandardNormal.sample(&mut rng))
            .map(|z: f64| z.abs())
            .collect();
        let z_min = z.iter().copied().fold(f64::INFINITY, f64::min);
        for zj in z {
            let spread = spec.freq_noise * (zj - z_min);
            alters.push(PlantedAlter {
                alter: ego * ALTER_STRIDE + alters.len() as u64 + 1,
                layer,
                true_freq: if spread == 0.0 {
                    floor
                } else {
                    floor * spread.exp()
                },
                events: 0,
            });
        }
    }

    let span_secs = span_seconds(span_years);
    let download = DEFAULT_DOWNLOAD_TIME;
    let start = download - span_secs;
    let mut events = Vec::new();
    for planted in &mut alters {
        let mean = planted.true_freq * span_years;
        planted.events = match spec.count_model {
            CountModel::Expected => stochastic_round(mean, &mut rng),
            CountModel::Poisson => Poisson::new(mean).map_or(0, |p| p.sample(&mut rng) as u64),
        };
        for i in 0..planted.events {
            // The first event opens the window so the observed duration
            // equals the span.
            let timestamp = if i == 0 {
                start
            } else {
                rng.random_range(start..=download)
            };
            let (src, dst) = if rng.random::<bool>() {
                (ego, planted.alter)
            } else {
                (planted.alter, ego)
            };
            events.push(InteractionEvent {
                src,
                dst,
                timestamp,
            });
        }
    }
    events.sort_unstable_by_key(|e| (e.timestamp, e.src, e.dst));
    PlantedEgo {
        ego,
        alters,
        events,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub spec: LayerSpec,
    pub span_years: f64,
    pub seed: u64,
    pub download_time: Timestamp,
    pub egos: Vec<PlantedEgo>,
}

#[derive(Serialize)]
struct SynthMeta<'a> {
    download_time: Timestamp,
    span_years: f64,
    egos: usize,
    seed: u64,
    events: usize,
    spec: &'a LayerSpec,
}

/// Generates egos `1..=m` in parallel.
pub fn generate_population(
    spec: &LayerSpec,
    m: usize,
    span_years: f64,
    seed: u64,
) -> Result<Population> {
    spec.validate()?;
    check_span(span_years)?;
    if m == 0 || m as u64 >= ALTER_STRIDE {
        return Err(Error::Argument(format!(
            "ego count {m} outside 1..{ALTER_STRIDE}"
        )));
    }
    let egos = (1..=m as u64)
        .into_par_iter()
        .map(|ego| generate_valid(spec, ego, span_years, seed))
        .collect();
    Ok(Population {
        spec: spec.clone(),
        span_years,
        seed,
        download_time: DEFAULT_DOWNLOAD_TIME,
        egos,
    })
}

impl Population {
    pub fn event_count(&self) -> usize {
        self.egos.iter().map(|e| e.events.len()).sum()
    }

    pub fn write_events<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "src,dst,timestamp")?;
        for ego in &self.egos {
            for e in &ego.events {
                writeln!(out, "{},{},{}", e.src, e.dst, e.timestamp)?;
            }
        }
        out.flush()
    }

    pub fn write_oracle<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "ego,alter,layer,true_freq")?;
        for ego in &self.egos {
            for a in &ego.alters {
                writeln!(out, "{},{},{},{}", ego.ego, a.alter, a.layer, a.true_freq)?;
            }
        }
        out.flush()
    }

    pub fn meta_json(&self) -> Result<String> {
        let meta = SynthMeta {
            download_time: self.download_time,
            span_years: self.span_years,
            egos: self.egos.len(),
            seed: self.seed,
            events: self.event_count(),
            spec: &self.spec,
        };
        Ok(serde_json::to_string_pretty(&meta)? + "\n")
    }

    /// Writes `events.csv`, `oracle.csv` and `synth.json` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_atomic(&dir.join("events.csv"), |w| self.write_events(w))?;
        write_atomic(&dir.join("oracle.csv"), |w| self.write_oracle(w))?;
        let meta = self.meta_json()?;
        write_atomic(&dir.join("synth.json"), |w| w.write_all(meta.as_bytes()))
    }
}
