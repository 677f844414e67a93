//! Generates channels for the receiver loop of the lecture room, writes the
//! component table, and reads it back.
//!
//! cargo run --example lecture_room_channel [-- out.csv]

use qdchan::metrics::rms_delay_spread_of;
use qdchan::pipeline::{generate_all, run_generate, validate_mpc_file};
use qdchan::scenario::ScenarioConfig;
use qdchan::tables::{read_mpc_table, traces_from_records};

pub fn main() -> qdchan::Result<()> {
    let mut config = ScenarioConfig::lecture_room();
    config.seed = 2024;
    config.rx_loop.as_mut().expect("loop").count = 12;
    let library = config.load_library()?;
    config.validate(&library)?;

    let channels = generate_all(&config, &library)?;
    for (i, ch) in channels.iter().take(4) {
        let rx = ch.rx.expect("position");
        let direct = ch.direct.as_ref().map_or(f64::NAN, |d| d.pg_db);
        println!(
            "rx {i:>2} at ({:.2}, {:.2}): {} clusters, {} components, LOS {:.2} dB",
            rx.x,
            rx.y,
            ch.clusters.len(),
            ch.mpc_count(),
            direct
        );
    }

    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("qdchan_lecture_room.csv"));
    let summary = run_generate(&config, &library, &out)?;
    println!(
        "wrote {} rows for {} receivers to {}",
        summary.rows,
        summary.channels,
        out.display()
    );

    let (header, rows) = read_mpc_table(&out)?;
    println!(
        "header model: {:?}, seed: {:?}",
        header.get("model"),
        header.get("seed")
    );
    for t in traces_from_records(&rows).iter().take(4) {
        let kept: Vec<_> = t
            .mpcs
            .iter()
            .copied()
            .filter(|&(_, pg)| pg >= -120.0)
            .collect();
        println!(
            "rx {:>2}: RMS delay spread {:.2} ns",
            t.rx_index,
            rms_delay_spread_of(&kept)?
        );
    }
    let report = validate_mpc_file(&out)?;
    println!(
        "validation: {} clusters, {} violations",
        report.clusters,
        report.violations.len()
    );
    Ok(())
}
