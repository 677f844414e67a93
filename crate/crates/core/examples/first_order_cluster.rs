//! Builds a single-bounce cluster by hand and shows how the diffuse
//! components spread around the cursor in delay, gain and angle.
//!
//! cargo run --example first_order_cluster

use qdchan::qd::generate_cluster_first_order;
use qdchan::{trace, MaterialLibrary, Point3, Propagation, QdConfig, RngStream, Room};

pub fn main() -> qdchan::Result<()> {
    let room = Room::lecture_room();
    let library = MaterialLibrary::lecture_room().with_fallback("Floor", "Ceiling (TX1)");
    let prop = Propagation::at_frequency(60e9, &library);
    let rays = trace(
        &room,
        Point3::new(2.0, 3.0, 2.5),
        Point3::new(5.0, 8.0, 1.5),
        1,
        &prop,
    )?;
    let ceiling = rays
        .iter()
        .find(|r| r.materials == ["Ceiling (TX1)"])
        .expect("ceiling bounce");
    println!(
        "ceiling ray: tau {:.3} ns, deterministic gain {:.2} dB",
        ceiling.tau_ns, ceiling.pg_det_db
    );

    let config = QdConfig::default();
    for seed in 0..3 {
        let cluster =
            generate_cluster_first_order(ceiling, &library, &config, &RngStream::new(seed))?;
        println!(
            "\nseed {seed}: cursor {:.2} dB, {} pre, {} post",
            cluster.cursor.pg_db,
            cluster.pre.len(),
            cluster.post.len()
        );
        for m in cluster
            .pre
            .iter()
            .rev()
            .chain(std::iter::once(&cluster.cursor))
            .chain(&cluster.post)
        {
            println!(
                "  {:<6} tau {:>8.3} ns  gain {:>8.2} dB  aoa ({:>6.1}, {:>5.1})",
                m.kind.as_str(),
                m.tau_ns,
                m.pg_db,
                m.angles.aoa_az,
                m.angles.aoa_el
            );
        }
        assert!(cluster.diffuse().all(|m| m.pg_db < cluster.cursor.pg_db));
    }
    Ok(())
}
