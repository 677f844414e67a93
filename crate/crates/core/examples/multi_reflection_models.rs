//! Compares the reduced and complete generators on second-order rays.
//!
//! The reduced model gives each bounce one pre/post family around the cursor;
//! the complete model lets every diffuse component spawn its own families at
//! later bounces, so clusters grow much larger.
//!
//! cargo run --example multi_reflection_models

use qdchan::qd::{complete_model_bound, generate_cluster_complete, generate_cluster_reduced};
use qdchan::{trace, MaterialLibrary, Point3, Propagation, QdConfig, RngStream, Room};

pub fn main() -> qdchan::Result<()> {
    let room = Room::lecture_room();
    let library = MaterialLibrary::lecture_room().with_fallback("Floor", "Ceiling (TX1)");
    let prop = Propagation::at_frequency(60e9, &library);
    let rays = trace(
        &room,
        Point3::new(2.0, 3.0, 2.5),
        Point3::new(5.0, 8.0, 1.5),
        2,
        &prop,
    )?;
    let config = QdConfig::default();
    let reduced_bound = 2 * (config.n_pre + config.n_post) + 1;
    let complete_bound = complete_model_bound(&config, 2).expect("fits");
    println!("bounds for order 2: reduced {reduced_bound}, complete {complete_bound}");

    let (mut reduced_total, mut complete_total, mut clusters) = (0, 0, 0);
    for (i, ray) in rays.iter().enumerate().filter(|(_, r)| r.order == 2) {
        let stream = RngStream::new(11).child(i as u64);
        let reduced = generate_cluster_reduced(ray, &library, &config, &stream)?;
        let complete = generate_cluster_complete(ray, &library, &config, &stream)?;
        assert!(reduced.len() <= reduced_bound && complete.len() <= complete_bound);
        if clusters < 5 {
            println!(
                "{:<40} reduced {:>3}   complete {:>3}",
                ray.materials.join(" -> "),
                reduced.len(),
                complete.len()
            );
        }
        reduced_total += reduced.len();
        complete_total += complete.len();
        clusters += 1;
    }
    println!(
        "mean components per second-order cluster over {clusters}: reduced {:.1}, complete {:.1}",
        reduced_total as f64 / clusters as f64,
        complete_total as f64 / clusters as f64
    );

    // At order 3 the complete model would exceed a small cap and is refused.
    let capped = QdConfig {
        max_cluster_mpcs: 1000,
        ..config
    };
    let third = trace(
        &room,
        Point3::new(2.0, 3.0, 2.5),
        Point3::new(5.0, 8.0, 1.5),
        3,
        &prop,
    )?;
    let ray = third
        .iter()
        .find(|r| r.order == 3)
        .expect("third-order ray");
    match generate_cluster_complete(ray, &library, &capped, &RngStream::new(0)) {
        Err(e) => println!("order 3 with cap 1000: {e}"),
        Ok(c) => println!("order 3 with cap 1000: {} components", c.len()),
    }
    Ok(())
}
