//! Uses one seed of the reduced model as a stand-in measurement and checks
//! that a fresh reduced-model ensemble matches it more closely than rays
//! without diffuse components do.
//!
//! cargo run --example compare_ensembles

use qdchan::metrics::{compare_ensembles, ChannelTrace, CompareOptions};
use qdchan::pipeline::generate_all;
use qdchan::scenario::ScenarioConfig;
use qdchan::ModelVariant;

pub fn main() -> qdchan::Result<()> {
    let mut config = ScenarioConfig::lecture_room();
    config.rx_loop.as_mut().expect("loop").count = 54;
    let library = config.load_library()?;

    config.seed = 1;
    let reference: Vec<ChannelTrace> = generate_all(&config, &library)?
        .iter()
        .map(|(i, ch)| ChannelTrace::from_instance(*i, ch))
        .collect();

    let opts = CompareOptions::default();
    config.seed = 2;
    for model in [ModelVariant::Reduced, ModelVariant::DraysOnly] {
        config.qd.model = model;
        let sim: Vec<_> = generate_all(&config, &library)?
            .into_iter()
            .map(|(_, ch)| ch)
            .collect();
        let report = compare_ensembles(&sim, &reference, &opts)?;
        println!("{} vs reference", model.as_str());
        print!("{}", report.summary());
    }
    Ok(())
}
