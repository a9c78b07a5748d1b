//! TOML experiment configs and CSV output.
//!
//! A config is a flat table of run parameters plus either a preset name or
//! an explicit `[[subsystems]]` array:
//!
//! ```toml
//! M = 3
//! p = 0.7
//! T = 5000                 # default 5000
//! policy = "offset-greedy" # default
//! master_seed = 0          # default
//! replications = 10        # default
//! divergence_limit = 1e12  # default; inf disables all but overflow
//! preset = "table1"        # default when no subsystems are given
//!
//! [[subsystems]]
//! A = [[1.1, 0.22], [-0.22, 1.1]]
//! B = [[1.0, 0.0], [0.0, 1.0]]
//! K = [[-0.2, 0.0], [0.0, -0.2]]
//! Q = [[100.0, 0.0], [0.0, 100.0]]
//! P = [[1.0, 0.0], [0.0, 1.0]]
//! R = [[0.25, 0.0], [0.0, 0.25]]
//! x0 = [1.0, 1.0]
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{
    ExperimentConfig, RunResult, StepRecord, DEFAULT_HORIZON, DEFAULT_REPLICATIONS,
    DIVERGENCE_LIMIT,
};
use crate::matrix::Mat;
use crate::model::{SubsystemSpec, SystemMatrices};
use crate::offset::OffsetWeightTable;
use crate::policies::Policy;
use crate::presets::{self, Preset};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    t: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    replications: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    divergence_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    /// Gain of the last `table1` loop; only valid with that preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    table1_last_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subsystems: Option<Vec<RawSubsystem>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubsystem {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "K")]
    k: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    #[serde(rename = "P")]
    p: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
    x0: Vec<f64>,
}

impl RawSubsystem {
    fn from_spec(s: &SubsystemSpec) -> Self {
        Self {
            a: s.a().to_rows(),
            b: s.b().to_rows(),
            k: s.k().to_rows(),
            q: s.q().to_rows(),
            p: s.p().to_rows(),
            r: s.r().to_rows(),
            x0: s.x0().to_vec(),
        }
    }

    fn into_spec(self, index: usize) -> Result<SubsystemSpec> {
        let mat = |name: &str, rows: &[Vec<f64>]| {
            Mat::from_rows(rows).map_err(|e| Error::InvalidConfig {
                key: format!("subsystems[{index}].{name}"),
                reason: e.to_string(),
            })
        };
        let m = SystemMatrices {
            a: mat("A", &self.a)?,
            b: mat("B", &self.b)?,
            k: mat("K", &self.k)?,
            q: mat("Q", &self.q)?,
            p: mat("P", &self.p)?,
            r: mat("R", &self.r)?,
        };
        SubsystemSpec::new(index, m, self.x0).map_err(|e| match e {
            Error::InvalidSpec { reason, .. } => Error::InvalidConfig {
                key: format!("subsystems[{index}]"),
                reason,
            },
            other => other,
        })
    }
}

/// Command-line values that take precedence over the config text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub preset: Option<String>,
    pub policy: Option<String>,
    pub p: Option<f64>,
    pub m: Option<usize>,
    pub horizon: Option<u64>,
    pub seed: Option<u64>,
    pub replications: Option<usize>,
}

fn missing(key: &str) -> Error {
    Error::InvalidConfig {
        key: key.into(),
        reason: "required key is missing".into(),
    }
}

/// Parses and validates a config, filling in defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with(text, &ConfigOverrides::default())
}

pub fn parse_config_with(text: &str, overrides: &ConfigOverrides) -> Result<ExperimentConfig> {
    let mut raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if overrides.preset.is_some() {
        raw.preset = overrides.preset.clone();
    }
    if overrides.policy.is_some() {
        raw.policy = overrides.policy.clone();
    }
    raw.p = overrides.p.or(raw.p);
    raw.m = overrides.m.or(raw.m);
    raw.t = overrides.horizon.or(raw.t);
    raw.master_seed = overrides.seed.or(raw.master_seed);
    raw.replications = overrides.replications.or(raw.replications);
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig> {
    let subsystems = match (raw.subsystems, raw.preset.as_deref()) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidConfig {
                key: "preset".into(),
                reason: "give either a preset or explicit subsystems, not both".into(),
            })
        }
        (Some(list), None) => {
            if raw.table1_last_gain.is_some() {
                return Err(Error::InvalidConfig {
                    key: "table1_last_gain".into(),
                    reason: "only applies to the table1 preset".into(),
                });
            }
            list.into_iter()
                .enumerate()
                .map(|(i, s)| s.into_spec(i))
                .collect::<Result<Vec<_>>>()?
        }
        (None, name) => {
            let preset: Preset =
                name.unwrap_or("table1")
                    .parse()
                    .map_err(|reason| Error::InvalidConfig {
                        key: "preset".into(),
                        reason,
                    })?;
            match (preset, raw.table1_last_gain) {
                (Preset::Table1, Some(g)) => presets::table1_with_last_gain(g),
                (Preset::Table2, Some(_)) => {
                    return Err(Error::InvalidConfig {
                        key: "table1_last_gain".into(),
                        reason: "only applies to the table1 preset".into(),
                    })
                }
                (preset, None) => preset.subsystems(),
            }
        }
    };
    let policy = raw
        .policy
        .as_deref()
        .unwrap_or(Policy::OffsetGreedy.name())
        .parse()?;
    let config = ExperimentConfig {
        subsystems,
        m: raw.m.ok_or_else(|| missing("M"))?,
        p: raw.p.ok_or_else(|| missing("p"))?,
        horizon: raw.t.unwrap_or(DEFAULT_HORIZON),
        policy,
        master_seed: raw.master_seed.unwrap_or(0),
        replications: raw.replications.unwrap_or(DEFAULT_REPLICATIONS),
        divergence_limit: raw.divergence_limit.unwrap_or(DIVERGENCE_LIMIT),
    };
    config.validate()?;
    Ok(config)
}

/// Serializes a config with its subsystems spelled out.
pub fn config_to_toml(config: &ExperimentConfig) -> String {
    let raw = RawConfig {
        m: Some(config.m),
        p: Some(config.p),
        t: Some(config.horizon),
        policy: Some(config.policy.name().to_owned()),
        master_seed: Some(config.master_seed),
        replications: Some(config.replications),
        divergence_limit: Some(config.divergence_limit),
        preset: None,
        table1_last_gain: None,
        subsystems: Some(
            config
                .subsystems
                .iter()
                .map(RawSubsystem::from_spec)
                .collect(),
        ),
    };
    toml::to_string(&raw).expect("config is always serializable")
}

/// Config text for a preset with the default run parameters (`M = 3`, `p = 0.7`).
pub fn preset_config_text(preset: Preset) -> String {
    config_to_toml(&ExperimentConfig::new(
        preset.subsystems(),
        3,
        0.7,
        Policy::OffsetGreedy,
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn flush(mut w: csv::Writer<impl Write>, path: Option<&Path>) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.map(Path::to_path_buf).unwrap_or_default(),
        source,
    })
}

/// Writes one row per run:
/// `policy,p,M,seed,empiric_offset,empiric_lq,J_1,…,J_N`.
pub fn write_runs_csv<W: Write>(runs: &[RunResult], out: W) -> Result<()> {
    write_runs(runs, out, None)
}

fn write_runs<W: Write>(runs: &[RunResult], out: W, path: Option<&Path>) -> Result<()> {
    let first = runs.first().ok_or(Error::EmptyResults)?;
    let n = first.per_subsystem_lq.len();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["policy", "p", "M", "seed", "empiric_offset", "empiric_lq"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=n).map(|i| format!("J_{i}")));
    w.write_record(&header)?;
    for r in runs {
        if r.per_subsystem_lq.len() != n {
            return Err(Error::LengthMismatch {
                what: "per-subsystem costs",
                expected: n,
                actual: r.per_subsystem_lq.len(),
            });
        }
        let mut row = vec![
            r.policy.name().to_owned(),
            r.p.to_string(),
            r.m.to_string(),
            r.seed.to_string(),
            r.empiric_offset.to_string(),
            r.empiric_lq.to_string(),
        ];
        row.extend(r.per_subsystem_lq.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    flush(w, path)
}

/// Writes the sweep CSV to `path`. Refuses to write an empty result set.
pub fn emit_csv(runs: &[RunResult], path: &Path) -> Result<()> {
    if runs.is_empty() {
        return Err(Error::EmptyResults);
    }
    write_runs(runs, create(path)?, Some(path))
}

/// Writes `k,i,delta,alpha,beta,offset_term,lq_term`, one row per loop per
/// slot. Loop indices are 1-based, matching the `J_i` columns.
pub fn write_trace_csv<W: Write>(trace: &[StepRecord], out: W) -> Result<()> {
    write_trace(trace, out, None)
}

fn write_trace<W: Write>(trace: &[StepRecord], out: W, path: Option<&Path>) -> Result<()> {
    if trace.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "i", "delta", "alpha", "beta", "offset_term", "lq_term"])?;
    for rec in trace {
        for (i, e) in rec.entries.iter().enumerate() {
            w.write_record([
                rec.k.to_string(),
                (i + 1).to_string(),
                e.delta.to_string(),
                u8::from(e.alpha).to_string(),
                u8::from(e.beta).to_string(),
                e.offset_term.to_string(),
                e.lq_term.to_string(),
            ])?;
        }
    }
    flush(w, path)
}

pub fn emit_trace_csv(trace: &[StepRecord], path: &Path) -> Result<()> {
    if trace.is_empty() {
        return Err(Error::EmptyResults);
    }
    write_trace(trace, create(path)?, Some(path))
}

/// Dumps `w_i(j)` for `j = 0..=j_max` as `i,j,weight,cumulative_offset,estimation_error`.
pub fn write_weights_csv<W: Write>(specs: &[SubsystemSpec], j_max: usize, out: W) -> Result<()> {
    let mut table = OffsetWeightTable::new(specs);
    table.ensure_all(j_max + 2)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "weight", "cumulative_offset", "estimation_error"])?;
    for i in 0..specs.len() {
        for j in 0..=j_max {
            w.write_record([
                (i + 1).to_string(),
                j.to_string(),
                table.weight(i, j)?.to_string(),
                table.cumulative_offset(i, j)?.to_string(),
                table.estimation_error(i, j)?.to_string(),
            ])?;
        }
    }
    flush(w, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{run_simulation, run_simulation_with_trace};
    use crate::presets::table1;
    use proptest::prelude::*;

    #[test]
    fn minimal_preset_config() {
        let c = parse_config("preset = \"table1\"\nM = 3\np = 0.7\n").unwrap();
        assert_eq!(c.subsystems, table1());
        assert_eq!((c.m, c.p, c.horizon), (3, 0.7, 5000));
        assert_eq!(c.policy, Policy::OffsetGreedy);
        assert_eq!(c.replications, 10);
    }

    #[test]
    fn defaults_to_table1() {
        let c = parse_config("M = 2\np = 0.5\n").unwrap();
        assert_eq!(c.subsystems, table1());
    }

    #[test]
    fn rejects_out_of_range_p() {
        let err = parse_config("M = 3\np = 1.3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("`p`") && msg.contains("[0, 1]"), "{msg}");
    }

    #[test]
    fn rejects_m_above_n() {
        let err = parse_config("M = 9\np = 0.5\n").unwrap_err();
        assert!(err.to_string().contains("`M`"));
    }

    #[test]
    fn names_missing_and_unknown_keys() {
        assert!(parse_config("p = 0.5\n")
            .unwrap_err()
            .to_string()
            .contains("`M`"));
        let err = parse_config("M = 1\np = 0.5\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
        let err = parse_config("M = 1\np = 0.5\npolicy = \"fifo\"\n").unwrap_err();
        assert!(err.to_string().contains("`policy`"));
        let err = parse_config("M = 1\np = 0.5\npreset = \"table3\"\n").unwrap_err();
        assert!(err.to_string().contains("`preset`"));
    }

    #[test]
    fn explicit_subsystem_errors_name_the_entry() {
        let text = r#"
M = 1
p = 0.5
[[subsystems]]
A = [[1.0, 0.0], [0.0, 1.0]]
B = [[1.0, 0.0], [0.0, 1.0]]
K = [[1.0, 0.0], [0.0, 1.0]]
Q = [[1.0, 0.0], [0.0, 1.0]]
P = [[1.0, 0.0], [0.0, 1.0]]
R = [[1.0, 0.5], [0.0, 1.0]]
x0 = [0.0, 0.0]
"#;
        let err = parse_config(text).unwrap_err().to_string();
        assert!(
            err.contains("subsystems[0]") && err.contains("diagonal"),
            "{err}"
        );
    }

    #[test]
    fn overrides_win() {
        let o = ConfigOverrides {
            preset: Some("table2".into()),
            p: Some(0.9),
            m: Some(5),
            horizon: Some(77),
            policy: Some("random".into()),
            seed: Some(4),
            replications: Some(2),
        };
        let c = parse_config_with("M = 3\np = 0.7\nT = 10\n", &o).unwrap();
        assert_eq!(c.subsystems, presets::table2());
        assert_eq!(
            (c.m, c.p, c.horizon, c.master_seed, c.replications),
            (5, 0.9, 77, 4, 2)
        );
        assert_eq!(c.policy, Policy::Random);
    }

    #[test]
    fn last_gain_override() {
        let c = parse_config("M = 3\np = 0.7\ntable1_last_gain = -1.0\n").unwrap();
        assert_eq!(c.subsystems[7].k(), &Mat::identity(2).scale(-1.0));
        assert!(
            parse_config("M = 3\np = 0.7\npreset = \"table2\"\ntable1_last_gain = -1.0\n").is_err()
        );
    }

    #[test]
    fn preset_text_parses_back() {
        for preset in [Preset::Table1, Preset::Table2] {
            let c = parse_config(&preset_config_text(preset)).unwrap();
            assert_eq!(c.subsystems, preset.subsystems());
        }
    }

    #[test]
    fn csv_layout() {
        let c = ExperimentConfig {
            horizon: 20,
            ..ExperimentConfig::new(table1(), 3, 0.7, Policy::RoundRobin)
        };
        let r = run_simulation_with_trace(&c).unwrap();
        let mut buf = Vec::new();
        write_runs_csv(std::slice::from_ref(&r), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "policy,p,M,seed,empiric_offset,empiric_lq,J_1,J_2,J_3,J_4,J_5,J_6,J_7,J_8"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&row[..4], &["round-robin", "0.7", "3", "0"]);
        assert_eq!(row[4].parse::<f64>().unwrap(), r.empiric_offset);
        assert_eq!(row[5].parse::<f64>().unwrap(), r.empiric_lq);
        assert!(lines.next().is_none());

        let mut buf = Vec::new();
        write_trace_csv(r.trace.as_ref().unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,i,delta,alpha,beta,offset_term,lq_term\n1,1,"));
        assert_eq!(text.lines().count(), 1 + 20 * 8);
    }

    #[test]
    fn empty_results_are_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        assert!(matches!(emit_csv(&[], &path), Err(Error::EmptyResults)));
        assert!(!path.exists());
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let c = ExperimentConfig {
            horizon: 5,
            ..ExperimentConfig::new(table1(), 3, 0.7, Policy::AoiMax)
        };
        let r = run_simulation(&c).unwrap();
        let path = Path::new("/nonexistent-dir/sub/out.csv");
        let err = emit_csv(&[r], path).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/sub/out.csv"));
    }

    #[test]
    fn weight_dump() {
        let mut buf = Vec::new();
        write_weights_csv(&table1()[..1], 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1,0,0,0,"));
        let w1: f64 = lines[2].split(',').nth(2).unwrap().parse().unwrap();
        assert!((w1 - 2.0008).abs() < 1e-9);
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        let entry = -3.0f64..3.0;
        let mat = prop::collection::vec(entry.clone(), 4)
            .prop_map(|d| Mat::from_row_major(2, 2, d).unwrap());
        let diag = prop::collection::vec(0.0f64..2.0, 2).prop_map(|d| Mat::diagonal(&d));
        let spec = (
            mat.clone(),
            mat.clone(),
            mat,
            diag.clone(),
            diag.clone(),
            diag,
            prop::collection::vec(entry, 2),
        )
            .prop_map(|(a, b, k, q, p, r, x0)| {
                SubsystemSpec::new(0, SystemMatrices { a, b, k, q, p, r }, x0).unwrap()
            });
        (
            prop::collection::vec(spec, 1..5),
            0.0f64..=1.0,
            1u64..10_000,
            prop::sample::select(Policy::ALL.to_vec()),
            0u64..1 << 40,
            1usize..30,
            prop_oneof![Just(DIVERGENCE_LIMIT), Just(f64::INFINITY), 1.0f64..1e15],
        )
            .prop_flat_map(|(specs, p, t, policy, seed, reps, limit)| {
                let n = specs.len();
                (1..=n).prop_map(move |m| ExperimentConfig {
                    subsystems: specs
                        .iter()
                        .cloned()
                        .enumerate()
                        .map(|(i, s)| s.with_index(i))
                        .collect(),
                    m,
                    p,
                    horizon: t,
                    policy,
                    master_seed: seed,
                    replications: reps,
                    divergence_limit: limit,
                })
            })
    }

    proptest! {
        #[test]
        fn config_text_round_trips(c in arb_config()) {
            let text = config_to_toml(&c);
            prop_assert_eq!(parse_config(&text).unwrap(), c);
        }
    }
}
