//! Loads, edits and round-trips a material library, and shows how a surface
//! without its own parameters borrows another material's reflection loss.
//!
//! cargo run --example material_library

use qdchan::{MaterialLibrary, MaterialParams, Side};

const EXTRA: &str = r#"
[[material]]
name = "Glass"
mu_rl_db = 5.0
rl = [5.0, 1.0]
k_pre = [8.0, 2.0]
k_post = [6.0, 2.0]
gamma_pre = [1.5, 0.3]
gamma_post = [2.5, 0.5]
sigma_s_pre = [2.0, 0.5]
sigma_s_post = [2.5, 0.5]
lambda_pre = [1.0, 0.2]
lambda_post = [0.8, 0.2]
sigma_alpha_az = [3.0, 1.0]
sigma_alpha_el = [2.0, 0.5]
"#;

pub fn main() -> qdchan::Result<()> {
    let builtin = MaterialLibrary::lecture_room();
    println!(
        "{:<20} {:>8} {:>10} {:>10}",
        "material", "mu_RL", "K post", "gamma post"
    );
    for m in builtin.iter() {
        let post = m.family(Side::Post);
        println!(
            "{:<20} {:>8.2} {:>10.2} {:>10.2}",
            m.name, m.mu_rl_db, post.k_db.s, post.gamma_ns.s
        );
    }

    let glass = MaterialLibrary::load(EXTRA)?;
    let mut all: Vec<MaterialParams> = builtin.iter().cloned().collect();
    all.extend(glass.iter().cloned());
    let lib = MaterialLibrary::new(all)?.with_fallback("Floor", "Ceiling (TX1)");
    println!("\n{} materials after adding Glass", lib.len());

    let floor = lib.resolve("Floor")?;
    println!(
        "Floor borrows mu_RL {:.2} dB; its diffuse families are disabled: {}",
        floor.mu_rl_db,
        floor.family(Side::Pre).is_disabled() && floor.family(Side::Post).is_disabled()
    );

    let doc = lib.to_document();
    let again = MaterialLibrary::load(&doc)?;
    assert_eq!(again.get("Glass"), lib.get("Glass"));

    match MaterialLibrary::load(&EXTRA.replace("mu_rl_db = 5.0", "mu_rl_db = -5.0")) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }
    Ok(())
}
