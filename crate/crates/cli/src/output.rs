//! File writers. Every file is written to a temporary name and renamed into
//! place.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use uasflow_core::sim::Event;
use uasflow_queueing::{AnalyticZone, Root, SpreadResult};

fn atomic(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> anyhow::Result<()>) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(&buf)?;
    f.sync_all()?;
    std::fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, v: &T) -> anyhow::Result<()> {
    atomic(path, |b| {
        serde_json::to_writer_pretty(&mut *b, v)?;
        b.push(b'\n');
        Ok(())
    })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    atomic(path, |b| {
        let mut w = csv::Writer::from_writer(b);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    })
}

/// One JSON record per line: slot, uas id, cell, tag.
pub fn write_events(path: &Path, events: &[Event]) -> anyhow::Result<()> {
    atomic(path, |b| Ok(uasflow_core::sim::events::write_jsonl(events, b)?))
}

/// Analytic per-zone row, joinable with the simulator's rows on
/// `(stream, level)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticRow {
    pub stream: i32,
    pub level: i32,
    pub theta0: f64,
    pub theta0_star: f64,
    pub mean_in_service: f64,
    pub mean_in_queue: f64,
    pub phi: f64,
    pub sigma: f64,
    pub pi: f64,
}

impl From<&AnalyticZone> for AnalyticRow {
    fn from(z: &AnalyticZone) -> Self {
        AnalyticRow {
            stream: z.stream,
            level: z.level,
            theta0: z.out.theta0,
            theta0_star: z.out.theta0_star,
            mean_in_service: z.out.mean_in_service,
            mean_in_queue: z.out.mean_in_queue,
            phi: z.out.phi,
            sigma: z.out.sigma,
            pi: z.out.pi,
        }
    }
}

#[derive(Serialize)]
pub struct RootRecord<'a> {
    pub stream: i32,
    pub level: i32,
    #[serde(flatten)]
    pub root: &'a Root,
}

/// Solver diagnostics for every solved zone, including all brackets.
pub fn root_report(r: &SpreadResult) -> Vec<RootRecord<'_>> {
    r.zones
        .iter()
        .filter_map(|z| z.out.root.as_ref().map(|root| RootRecord { stream: z.stream, level: z.level, root }))
        .collect()
}
