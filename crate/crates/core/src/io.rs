//! File formats: realization JSON, sweep and census CSV, atomic writes.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::carpet::Realization;
use crate::connectivity::{ComponentCensus, Direction, Layout};
use crate::error::{Error, Result};
use crate::estimator::SweepResult;
use crate::grid::{Cell, GridParams};

fn is_one(v: &u32) -> bool {
    *v == 1
}

fn one() -> u32 {
    1
}

/// On-disk form of a [`Realization`]. Cells are written sorted by column,
/// then row. `force_prefix` is omitted for ordinary realizations.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RealizationFile {
    n: u32,
    m: u32,
    p: f64,
    depth: u32,
    seed: u64,
    copy: u32,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    force_prefix: u32,
    levels: Vec<Vec<Cell>>,
}

pub fn realization_to_json(r: &Realization) -> String {
    let file = RealizationFile {
        n: r.params().n(),
        m: r.params().m(),
        p: r.p(),
        depth: r.depth(),
        seed: r.seed(),
        copy: r.copy(),
        force_prefix: r.forced_prefix(),
        levels: r.levels().to_vec(),
    };
    let mut s = serde_json::to_string(&file).expect("realization serializes");
    s.push('\n');
    s
}

pub fn realization_from_json(text: &str) -> Result<Realization> {
    let file: RealizationFile = serde_json::from_str(text)?;
    let params = GridParams::new(file.n, file.m)?;
    if file.depth as usize != file.levels.len() {
        return Err(Error::domain(format!(
            "depth {} does not match the {} stored levels",
            file.depth,
            file.levels.len()
        )));
    }
    let mut levels = file.levels;
    for level in &mut levels {
        level.sort_unstable();
    }
    Realization::from_parts(
        params,
        file.p,
        file.seed,
        file.copy,
        file.force_prefix,
        levels,
    )
}

pub fn save_realization(path: &Path, r: &Realization) -> Result<()> {
    write_atomic(path, realization_to_json(r).as_bytes())
}

pub fn load_realization(path: &Path) -> Result<Realization> {
    realization_from_json(&std::fs::read_to_string(path)?)
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    p: f64,
    level: u32,
    direction: Direction,
    domain: Layout,
    trials: u64,
    hits: u64,
    p_hat: f64,
    ci_low: f64,
    ci_high: f64,
}

/// CSV with columns `p, level, direction, domain, trials, hits, p_hat, ci_low, ci_high`.
pub fn write_sweep_csv<W: Write>(out: W, sweep: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in &sweep.estimates {
        w.serialize(SweepRow {
            p: e.p,
            level: e.level,
            direction: e.direction,
            domain: e.domain,
            trials: e.trials,
            hits: e.hits,
            p_hat: e.p_hat,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_csv_string(sweep: &SweepResult) -> Result<String> {
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, sweep)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// One CSV row per census, header taken from the field names.
pub fn write_census_csv<W: Write>(out: W, rows: &[ComponentCensus]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carpet::{force_prefix, generate};
    use crate::connectivity::{census, Adjacency};
    use crate::estimator::{sweep, CrossingSetup};

    fn g23() -> GridParams {
        GridParams::new(2, 3).unwrap()
    }

    #[test]
    fn save_load_save_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let r = generate(g23(), 0.7, 4, 12345678901234567, 1).unwrap();
        save_realization(&path, &r).unwrap();
        let first = std::fs::read(&path).unwrap();
        let back = load_realization(&path).unwrap();
        assert_eq!(back, r);
        save_realization(&path, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }

    #[test]
    fn schema_fields() {
        let r = generate(g23(), 0.5, 2, 7, 0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&realization_to_json(&r)).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys.len(), 7);
        for k in ["n", "m", "p", "depth", "seed", "copy", "levels"] {
            assert!(keys.contains(&k));
        }
        let forced = force_prefix(g23(), 0.5, 3, 7, 0, 2).unwrap();
        let back = realization_from_json(&realization_to_json(&forced)).unwrap();
        assert_eq!(back.forced_prefix(), 2);
    }

    #[test]
    fn unsorted_cells_are_canonicalized() {
        let text = r#"{"n":2,"m":3,"p":1.0,"depth":1,"seed":0,"copy":0,
            "levels":[[[1,2],[0,0],[1,0],[0,1],[0,2],[1,1]]]}"#;
        let r = realization_from_json(text).unwrap();
        assert_eq!(r.level(1)[0], Cell::new(0, 0));
        assert_eq!(r.level(1)[5], Cell::new(1, 2));
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let text = realization_to_json(&generate(g23(), 0.8, 3, 1, 0).unwrap());
        let cut = &text[..text.len() / 2];
        match realization_from_json(cut) {
            Err(Error::Parse { line, column, .. }) => assert!(line >= 1 && column >= 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_contents() {
        let bad_shape = r#"{"n":3,"m":3,"p":0.5,"depth":1,"seed":0,"copy":0,"levels":[[]]}"#;
        let err = realization_from_json(bad_shape).unwrap_err();
        assert!(matches!(err, Error::InvalidGrid { .. }));
        assert!(err.to_string().contains("m > n >= 2"));

        let orphan =
            r#"{"n":2,"m":3,"p":0.5,"depth":2,"seed":0,"copy":0,"levels":[[[0,0]],[[5,5]]]}"#;
        assert!(matches!(
            realization_from_json(orphan),
            Err(Error::Domain(_))
        ));
        let out_of_grid = r#"{"n":2,"m":3,"p":0.5,"depth":1,"seed":0,"copy":0,"levels":[[[2,0]]]}"#;
        assert!(realization_from_json(out_of_grid).is_err());
        let dup = r#"{"n":2,"m":3,"p":0.5,"depth":1,"seed":0,"copy":0,"levels":[[[1,0],[1,0]]]}"#;
        assert!(realization_from_json(dup).is_err());
        let depth = r#"{"n":2,"m":3,"p":0.5,"depth":2,"seed":0,"copy":0,"levels":[[]]}"#;
        assert!(realization_from_json(depth).is_err());
        let prob = r#"{"n":2,"m":3,"p":1.5,"depth":1,"seed":0,"copy":0,"levels":[[]]}"#;
        assert!(matches!(
            realization_from_json(prob),
            Err(Error::InvalidProbability(_))
        ));
    }

    #[test]
    fn sweep_csv_columns() {
        let setup = CrossingSetup::new(g23(), 2, Direction::H);
        let s = sweep(&setup, &[0.0, 1.0], 5, true, 0).unwrap();
        let text = sweep_csv_string(&s).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "p,level,direction,domain,trials,hits,p_hat,ci_low,ci_high"
        );
        assert!(lines
            .next()
            .unwrap()
            .starts_with("0.0,2,H,unit,5,0,0.0,0.0,"));
        assert!(lines.next().unwrap().starts_with("1.0,2,H,unit,5,5,1.0,"));
    }

    #[test]
    fn census_json_and_csv() {
        let r = generate(g23(), 1.0, 2, 0, 0).unwrap();
        let c = census(&r, 2, Adjacency::Corner).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(
            json,
            r#"{"level":2,"num_components":1,"num_nontrivial":1,"num_touching_boundary":1,"num_islands":0,"largest_size":36,"crossing_h":true,"crossing_v":true}"#
        );
        let mut buf = Vec::new();
        write_census_csv(&mut buf, &[c]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("level,num_components,num_nontrivial,"));
        assert!(text.ends_with("2,1,1,1,0,36,true,true\n"));
    }
}
