//! Traces the specular rays between one transmitter and one receiver in the
//! lecture room and prints them ordered by delay.
//!
//! cargo run --example trace_lecture_room

use qdchan::geometry::{image_paths, SPEED_OF_LIGHT};
use qdchan::{trace, MaterialLibrary, Point3, Propagation, Room};

pub fn main() -> qdchan::Result<()> {
    let room = Room::lecture_room();
    let library = MaterialLibrary::lecture_room().with_fallback("Floor", "Ceiling (TX1)");
    let prop = Propagation::at_frequency(60e9, &library);
    let tx = Point3::new(2.0, 3.0, 2.5);
    let rx = Point3::new(5.0, 8.0, 1.5);

    let mut rays = trace(&room, tx, rx, 2, &prop)?;
    println!("{} rays up to second order", rays.len());
    rays.sort_by(|a, b| a.delay_abs_ns.total_cmp(&b.delay_abs_ns));
    println!(
        "{:>5} {:>9} {:>9} {:>9} {:>7} {:>7}  materials",
        "order", "delay ns", "tau ns", "gain dB", "aoa az", "aoa el"
    );
    for r in rays.iter().take(12) {
        println!(
            "{:>5} {:>9.3} {:>9.3} {:>9.2} {:>7.1} {:>7.1}  {}",
            r.order,
            r.delay_abs_ns,
            r.tau_ns,
            r.pg_det_db,
            r.aoa_az,
            r.aoa_el,
            r.materials.join(" / ")
        );
    }

    // Every bounce point of a path lies on its face, and the delay is the unfolded length over c.
    for path in image_paths(&room, tx, rx, 2)? {
        let mut len = 0.0;
        let mut prev = tx;
        for &p in path.bounce_points.iter().chain(std::iter::once(&rx)) {
            len += prev.distance(p);
            prev = p;
        }
        assert!((len - path.path_length).abs() < 1e-9 * path.path_length);
    }
    let direct = &rays[0];
    println!(
        "direct: {:.4} m, {:.4} ns",
        direct.path_length_m,
        direct.path_length_m / SPEED_OF_LIGHT * 1e9
    );
    Ok(())
}
