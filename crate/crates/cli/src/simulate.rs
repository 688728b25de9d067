use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use svp_core::device::protocol::{Command, Response};
use svp_core::{Device, DeviceMode, DeviceRecord, GroundTruth, SettingsStore, SynthesizedSource};

use crate::error::{CliError, CliResult};
use crate::manifest::{apply_point, RunManifest};
use crate::table::RecordTable;

/// Records requested per READ_MEM.
const READ_CHUNK: u16 = 512;

#[derive(Debug, Serialize)]
struct TruthLine {
    seq: u32,
    seed: u64,
    #[serde(flatten)]
    truth: GroundTruth,
}

pub struct Summary {
    pub records: usize,
    pub invalid: usize,
}

/// Host side of a memory readout: SET_MODE(Memory), then READ_MEM until an
/// empty block comes back.
pub fn read_memory(device: &mut Device) -> CliResult<Vec<DeviceRecord>> {
    let mut exchange = |cmd: Command| -> CliResult<Vec<Response>> {
        let bytes = cmd.to_frame().encode().map_err(|e| CliError::Data(format!("{e:?}")))?;
        device
            .receive_bytes(&bytes)
            .iter()
            .map(|f| Response::from_frame(f).ok_or_else(|| CliError::Data(format!("unparseable reply {f:?}"))))
            .collect()
    };
    match exchange(Command::SetMode(DeviceMode::Memory))?.as_slice() {
        [Response::Ack { .. }] => {}
        other => return Err(CliError::Data(format!("SET_MODE refused: {other:?}"))),
    }
    let mut records = Vec::new();
    loop {
        let start = records.len() as u32;
        match exchange(Command::ReadMem { start, count: READ_CHUNK })?.as_slice() {
            [Response::MemData { start: s, records: block }] if *s == start => {
                if block.is_empty() {
                    break;
                }
                records.extend_from_slice(block);
            }
            other => return Err(CliError::Data(format!("READ_MEM at {start}: {other:?}"))),
        }
    }
    Ok(records)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

pub fn run(manifest: &RunManifest) -> CliResult<Summary> {
    let mut store = SettingsStore::empty();
    store.write(&manifest.settings.encode());
    let mut device = Device::power_on(store);

    let mut truths = Vec::new();
    let mut seed = manifest.scenario.seed;
    for point in manifest.points()? {
        for _ in 0..manifest.records_per_point {
            let mut scenario = manifest.scenario.clone();
            apply_point(&mut scenario, &point);
            scenario.seed = seed;
            let mut source = SynthesizedSource::new(scenario).map_err(|e| CliError::Usage(e.to_string()))?;
            let record = device
                .run_cycle(&mut source)
                .map_err(|e| CliError::Data(format!("work cycle: {e}")))?;
            let truth = source.last_truth().expect("acquired");
            truths.push(TruthLine {
                seq: record.sequence,
                seed,
                truth,
            });
            seed = seed.wrapping_add(1);
        }
    }

    let records = read_memory(&mut device)?;
    if records.len() != truths.len() {
        return Err(CliError::Data(format!(
            "memory returned {} records, expected {}",
            records.len(),
            truths.len()
        )));
    }

    let mut table = RecordTable::new(create(&manifest.csv)?)?;
    for r in &records {
        table.push(r)?;
    }
    table.finish()?;

    let mut out = create(&manifest.truth)?;
    for t in &truths {
        serde_json::to_writer(&mut out, t).map_err(|e| CliError::Data(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;

    if let Some(path) = &manifest.dump {
        std::fs::write(path, device.dump_memory())
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    }

    Ok(Summary {
        records: records.len(),
        invalid: records
            .iter()
            .filter(|r| r.flags.contains(svp_core::RecordFlags::INVALID))
            .count(),
    })
}
