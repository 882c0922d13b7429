//! CSV and JSON artefacts.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::acoustic::SyllableEmbedding;
use crate::env::{ArticulatorFrame, Trajectory, CHANNEL_NAMES, FRAME_DIM};
use crate::error::{Error, Result};

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv { path: path.to_path_buf(), message: e.to_string() }
}

pub fn trajectory_header() -> Vec<&'static str> {
    let mut h = vec!["step"];
    h.extend(CHANNEL_NAMES);
    h
}

/// One row per step (numbered from 1), floats in shortest round-trip form.
pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    if traj.is_empty() {
        return Err(Error::EmptyInput("trajectory"));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(trajectory_header()).map_err(|e| csv_err(path, e))?;
    for (i, f) in traj.frames.iter().enumerate() {
        let mut row = vec![(i + 1).to_string()];
        row.extend(f.as_array().iter().map(|v| format!("{v:?}")));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv(path: &Path, target_id: &str) -> Result<Trajectory> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != trajectory_header() {
        return Err(csv_err(path, format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut frames = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let mut vals = [0.0; FRAME_DIM];
        for (j, v) in vals.iter_mut().enumerate() {
            let cell = &rec[j + 1];
            *v = cell
                .trim()
                .parse()
                .map_err(|_| csv_err(path, format!("row {}: {} = {cell:?} is not a number", i + 1, CHANNEL_NAMES[j])))?;
        }
        frames.push(ArticulatorFrame::from_array(vals));
    }
    if frames.is_empty() {
        return Err(csv_err(path, "no rows"));
    }
    Ok(Trajectory::from_frames(frames, target_id))
}

/// Per-step reward log of a rollout.
pub fn write_rewards_csv(signals: &[crate::env::RewardSignal], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["step", "reward", "detected", "similarity"]).map_err(|e| csv_err(path, e))?;
    for (i, s) in signals.iter().enumerate() {
        let sim = if s.detected { format!("{:?}", s.similarity) } else { String::new() };
        w.write_record([(i + 1).to_string(), format!("{:?}", s.value), s.detected.to_string(), sim])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Target embedding file written by `make-target`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingFile {
    pub id: String,
    pub dim: usize,
    pub values: Vec<f64>,
}

pub fn write_embedding(id: &str, e: &SyllableEmbedding, path: &Path) -> Result<()> {
    let f = EmbeddingFile { id: id.into(), dim: e.dim(), values: e.values().to_vec() };
    let mut out = File::create(path)?;
    serde_json::to_writer_pretty(&mut out, &f).map_err(|e| Error::Config(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_embedding(path: &Path) -> Result<(String, SyllableEmbedding)> {
    let text = std::fs::read_to_string(path)?;
    let f: EmbeddingFile = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidTarget(format!("{}: {e}", path.display())))?;
    if f.dim != f.values.len() {
        return Err(Error::InvalidTarget(format!("{}: dim {} but {} values", path.display(), f.dim, f.values.len())));
    }
    Ok((f.id, SyllableEmbedding::new(f.values)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn trajectory_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let mut t = fixtures::expert_trajectory("uw").unwrap();
        t.frames[3].set_loudness(0.1 + 0.2);
        t.frames[4].set_loudness(1e-300);
        write_trajectory_csv(&t, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 51);
        assert_eq!(text.lines().next().unwrap(), "step,TD_x,TD_y,TB_x,TB_y,TT_x,TT_y,LI_x,LI_y,UL_x,UL_y,LL_x,LL_y,L");
        let back = read_trajectory_csv(&p, "uw").unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn zero_trajectory_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.csv");
        write_trajectory_csv(&Trajectory::from_frames(vec![ArticulatorFrame::zero(); 2], "z"), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "1,0.0,0.0,0.0,0.0,0.0,0.0,0.0,0.0,0.0,0.0,0.0,0.0,0.0");
    }

    #[test]
    fn bad_header_and_cells() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        std::fs::write(&p, "step,a\n1,2\n").unwrap();
        assert!(matches!(read_trajectory_csv(&p, "b"), Err(Error::Csv { .. })));
        let mut text = trajectory_header().join(",");
        text.push_str("\n1,x,0,0,0,0,0,0,0,0,0,0,0,0\n");
        std::fs::write(&p, text).unwrap();
        let e = read_trajectory_csv(&p, "b").unwrap_err().to_string();
        assert!(e.contains("TD_x"), "{e}");
    }

    #[test]
    fn embedding_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.json");
        let e = SyllableEmbedding::new(vec![0.6, -0.8, 1.0 / 3.0]).unwrap();
        write_embedding("x", &e, &p).unwrap();
        assert_eq!(read_embedding(&p).unwrap(), ("x".to_string(), e));
    }
}
