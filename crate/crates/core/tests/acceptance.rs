// Acceptance checks. Run with `cargo test --test acceptance`; prints one
// PASS/FAIL line per criterion and exits non-zero if any fails.

use std::f64::consts::{E, PI};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qdchan::distributions::{
    sample_exponential, sample_laplacian, sample_normal, sample_rician, sample_uniform,
};
use qdchan::geometry::{free_space_gain_db, image_paths, Face, FaceMaterials, SPEED_OF_LIGHT};
use qdchan::metrics::{ks_statistic, rms_delay_spread_of, ChannelTrace, CompareOptions};
use qdchan::pipeline::{generate_all, run_compare, run_generate, run_trace};
use qdchan::qd::{
    diffuse_gain_db, generate_cluster_complete, generate_cluster_first_order,
    generate_cluster_reduced, Cluster,
};
use qdchan::scenario::ScenarioConfig;
use qdchan::{
    trace, EmpiricalCdf, MaterialLibrary, ModelVariant, Point3, Propagation, QdConfig, RngStream,
    Room,
};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<String, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(format!("{t:.2?}"))
}

// ---------------------------------------------------------------- distributions

/// Modified Bessel function of the first kind by its power series.
fn bessel_i(nu: u32, z: f64) -> f64 {
    let mut term = (z / 2.0).powi(nu as i32) / (1..=nu).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..200 {
        term *= (z / 2.0).powi(2) / (k as f64 * (k + nu) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Rician mean: sigma * sqrt(pi/2) * L_{1/2}(-s^2 / 2 sigma^2).
fn rician_mean(s: f64, sigma: f64) -> f64 {
    let x = -s * s / (2.0 * sigma * sigma);
    let laguerre =
        (x / 2.0).exp() * ((1.0 - x) * bessel_i(0, -x / 2.0) - x * bessel_i(1, -x / 2.0));
    sigma * (PI / 2.0).sqrt() * laguerre
}

fn moment_check(name: &str, xs: &[f64], mean: f64, var: f64) -> Result<String, String> {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let se_mean = (v / n).sqrt();
    let se_var = ((m4 - v * v) / n).sqrt();
    let zm = (m - mean) / se_mean;
    let zv = (v - var) / se_var;
    ensure(zm.abs() < 5.0 && zv.abs() < 5.0, || {
        format!("{name}: mean {m} vs {mean} ({zm:+.2} SE), var {v} vs {var} ({zv:+.2} SE)")
    })?;
    Ok(format!("{name} {zm:+.1}/{zv:+.1}"))
}

fn distribution_suite() -> Check {
    const N: usize = 100_000;
    let start = Instant::now();
    let root = RngStream::new(20240601);
    let draw = |i: u64, f: &dyn Fn(&mut RngStream) -> qdchan::Result<f64>| -> Vec<f64> {
        let mut rng = root.child(i);
        (0..N).map(|_| f(&mut rng).unwrap()).collect()
    };
    let mut notes = Vec::new();

    notes.push(moment_check(
        "normal",
        &draw(0, &|r| sample_normal(r, -3.0, 2.5)),
        -3.0,
        6.25,
    )?);
    for (i, (s, sigma)) in [(0.0, 1.3), (2.0, 1.0), (6.5833, 2.1943), (0.0717, 1.2794)]
        .into_iter()
        .enumerate()
    {
        let mean = rician_mean(s, sigma);
        let var = 2.0 * sigma * sigma + s * s - mean * mean;
        let xs = draw(10 + i as u64, &|r| sample_rician(r, s, sigma));
        notes.push(moment_check(
            &format!("rician({s},{sigma})"),
            &xs,
            mean,
            var,
        )?);
    }
    notes.push(moment_check(
        "laplacian",
        &draw(1, &|r| sample_laplacian(r, 0.5, 9.0)),
        0.5,
        9.0,
    )?);
    notes.push(moment_check(
        "exponential",
        &draw(2, &|r| sample_exponential(r, 0.8)),
        1.25,
        1.5625,
    )?);
    notes.push(moment_check(
        "uniform",
        &draw(3, &|r| sample_uniform(r, -2.0, 5.0)),
        1.5,
        49.0 / 12.0,
    )?);

    let mut rng = root.child(4);
    for s in [0.0, 1.0, 6.9, 1e3] {
        for _ in 0..100 {
            let x = sample_rician(&mut rng, s, 0.0).unwrap();
            ensure(x == s, || format!("rician({s}, 0) gave {x}"))?;
        }
    }
    let t = within(Duration::from_secs(10), start)?;
    Ok(format!("{}; sigma=0 exact; {t}", notes.join(", ")))
}

// ---------------------------------------------------------------- geometry

fn random_room(rng: &mut ChaCha8Rng) -> (Room, Point3, Point3) {
    let dims = [
        rng.random_range(2.0..20.0),
        rng.random_range(2.0..20.0),
        rng.random_range(2.0..6.0),
    ];
    let room = Room::new(dims, FaceMaterials::uniform("Ceiling (TX1)")).unwrap();
    let mut inside = || {
        Point3::new(
            rng.random_range(0.05..0.95) * dims[0],
            rng.random_range(0.05..0.95) * dims[1],
            rng.random_range(0.05..0.95) * dims[2],
        )
    };
    let tx = inside();
    let rx = inside();
    (room, tx, rx)
}

/// Shortest TX -> face -> RX length by grid search on the face, refined
/// around the best cell until the cell is far below the tolerance.
fn grid_min_path(room: &Room, face: Face, tx: Point3, rx: Point3) -> f64 {
    let axis = face.axis();
    let (u, v) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let plane = if face.is_max() {
        room.dimensions[axis]
    } else {
        0.0
    };
    let point = |a: f64, b: f64| {
        let mut c = [0.0; 3];
        c[axis] = plane;
        c[u] = a;
        c[v] = b;
        Point3::new(c[0], c[1], c[2])
    };
    let (mut lo_a, mut hi_a) = (0.0, room.dimensions[u]);
    let (mut lo_b, mut hi_b) = (0.0, room.dimensions[v]);
    let mut best = f64::INFINITY;
    const G: usize = 64;
    for _ in 0..40 {
        let (da, db) = ((hi_a - lo_a) / G as f64, (hi_b - lo_b) / G as f64);
        let (mut ba, mut bb, mut local) = (lo_a, lo_b, f64::INFINITY);
        for i in 0..=G {
            for j in 0..=G {
                let (a, b) = (lo_a + i as f64 * da, lo_b + j as f64 * db);
                let p = point(a, b);
                let len = tx.distance(p) + p.distance(rx);
                if len < local {
                    local = len;
                    (ba, bb) = (a, b);
                }
            }
        }
        best = best.min(local);
        lo_a = (ba - 2.0 * da).max(0.0);
        hi_a = (ba + 2.0 * da).min(room.dimensions[u]);
        lo_b = (bb - 2.0 * db).max(0.0);
        hi_b = (bb + 2.0 * db).min(room.dimensions[v]);
        if da.max(db) < 1e-9 {
            break;
        }
    }
    best
}

fn geometry_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e0);
    let (mut worst_len, mut worst_law, mut paths) = (0.0f64, 0.0f64, 0usize);
    for case in 0..200 {
        let (room, tx, rx) = random_room(&mut rng);
        let all = image_paths(&room, tx, rx, 3).map_err(|e| e.to_string())?;
        let first: Vec<_> = all.iter().filter(|p| p.order() == 1).collect();
        ensure(first.len() == 6, || {
            format!("case {case}: {} first-order paths", first.len())
        })?;
        for p in &first {
            let face = p.faces[0];
            let image = room.mirror(tx, face);
            let oracle = grid_min_path(&room, face, tx, rx);
            for reference in [image.distance(rx), oracle] {
                let rel = (p.path_length - reference).abs() / reference;
                worst_len = worst_len.max(rel);
                ensure(rel < 1e-6, || {
                    format!(
                        "case {case} {face:?}: length {} vs {reference} (rel {rel:e})",
                        p.path_length
                    )
                })?;
            }
        }
        for p in &all {
            let mut prev = tx;
            let points: Vec<Point3> = p
                .bounce_points
                .iter()
                .copied()
                .chain(std::iter::once(rx))
                .collect();
            for (k, face) in p.faces.iter().enumerate() {
                let b = points[k];
                let next = points[k + 1];
                let axis = face.axis();
                let plane = if face.is_max() {
                    room.dimensions[axis]
                } else {
                    0.0
                };
                ensure((b.coord(axis) - plane).abs() < 1e-9, || {
                    format!("case {case}: bounce off its face")
                })?;
                for a in 0..3 {
                    ensure(
                        b.coord(a) >= -1e-9 && b.coord(a) <= room.dimensions[a] + 1e-9,
                        || format!("case {case}: bounce point {b} outside the room"),
                    )?;
                }
                let n = face.normal();
                let d_in = (b - prev) * (1.0 / (b - prev).norm());
                let d_out = (next - b) * (1.0 / (next - b).norm());
                // Normal component flips, tangential part is preserved.
                let reflected = d_in - n * (2.0 * d_in.dot(n));
                let residual = (d_in.dot(n) + d_out.dot(n))
                    .abs()
                    .max((d_out - reflected).norm());
                worst_law = worst_law.max(residual);
                ensure(residual < 1e-9, || {
                    format!("case {case}: specular residual {residual:e}")
                })?;
                prev = b;
            }
            paths += 1;
        }
    }
    Ok(format!(
        "{paths} paths in 200 rooms; worst length rel error {worst_len:.1e}, worst specular residual {worst_law:.1e}"
    ))
}

// ---------------------------------------------------------------- formulas

fn friis() -> Check {
    let f = 60e9;
    let got = free_space_gain_db(1.0, SPEED_OF_LIGHT / f).map_err(|e| e.to_string())?;
    let oracle = -20.0 * (4.0 * PI * 1.0 * f / 299_792_458.0).log10();
    ensure(
        (got - oracle).abs() < 1e-9 && (got + 68.0).abs() <= 0.1,
        || format!("gain {got} dB, oracle {oracle} dB"),
    )?;
    Ok(format!("{got:.4} dB"))
}

fn eq4_pinned() -> Check {
    let expected = -5.0 - 10.0 * E.log10() * 2.0;
    let mut worst = 0.0f64;
    for (tau0, tau) in [(0.0, 1.0), (10.0, 11.0), (10.0, 9.0)] {
        for pg0 in [0.0, -87.3] {
            let got = diffuse_gain_db(pg0, tau0, tau, 5.0, 0.5, 0.0) - pg0;
            worst = worst.max((got - expected).abs());
        }
    }
    ensure(worst < 1e-9, || format!("offset error {worst:e}"))?;
    Ok(format!("offset {expected:.9} dB, worst error {worst:.1e}"))
}

// ---------------------------------------------------------------- clusters

fn check_cluster(c: &Cluster, bound: usize, what: &str) -> Result<(), String> {
    ensure(c.len() <= bound, || {
        format!("{what}: {} components > {bound}", c.len())
    })?;
    for m in c.mpcs() {
        ensure(m.tau_ns >= 0.0, || {
            format!("{what}: negative tau {}", m.tau_ns)
        })?;
    }
    for m in c.diffuse() {
        ensure(m.pg_db < c.comparison_db, || {
            format!(
                "{what}: diffuse gain {} not below comparison {}",
                m.pg_db, c.comparison_db
            )
        })?;
    }
    Ok(())
}

fn count_and_pruning() -> Check {
    const CLUSTERS: usize = 10_000;
    let start = Instant::now();
    let room = Room::lecture_room();
    let library = MaterialLibrary::lecture_room().with_fallback("Floor", "Ceiling (TX1)");
    let prop = Propagation::at_frequency(60e9, &library);
    let config = QdConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut first, mut second, mut sizes) = (Vec::new(), Vec::new(), [0usize; 3]);
    while first.len() < CLUSTERS || second.len() < CLUSTERS {
        let p = |rng: &mut ChaCha8Rng| {
            Point3::new(
                rng.random_range(0.3..9.7),
                rng.random_range(0.3..18.7),
                rng.random_range(0.3..2.7),
            )
        };
        let (tx, rx) = (p(&mut rng), p(&mut rng));
        for ray in trace(&room, tx, rx, 2, &prop).map_err(|e| e.to_string())? {
            match ray.order {
                1 if first.len() < CLUSTERS => first.push(ray),
                2 if second.len() < CLUSTERS => second.push(ray),
                _ => {}
            }
        }
    }
    let root = RngStream::new(5150);
    for (i, ray) in first.iter().enumerate() {
        let c = generate_cluster_first_order(ray, &library, &config, &root.child(i as u64))
            .map_err(|e| e.to_string())?;
        check_cluster(&c, 20, "first order")?;
        sizes[0] = sizes[0].max(c.len());
    }
    for (i, ray) in second.iter().enumerate() {
        let s = root.child((CLUSTERS + i) as u64);
        let c = generate_cluster_reduced(ray, &library, &config, &s).map_err(|e| e.to_string())?;
        check_cluster(&c, 39, "reduced n=2")?;
        sizes[1] = sizes[1].max(c.len());
        let c = generate_cluster_complete(ray, &library, &config, &s).map_err(|e| e.to_string())?;
        check_cluster(&c, 400, "complete n=2")?;
        sizes[2] = sizes[2].max(c.len());
    }
    let t = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "{CLUSTERS} clusters each; largest first {} / reduced {} / complete {}; {t}",
        sizes[0], sizes[1], sizes[2]
    ))
}

// ---------------------------------------------------------------- metrics

fn metrics_oracle() -> Check {
    const GRID: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    // Samples sit on the evaluation lattice, so the grid sees every jump.
    let lattice = |j: usize| j as f64 * 1e-6;
    for pair in 0..100 {
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let n = rng.random_range(1..300);
            let spread = rng.random_range(10..GRID);
            let offset = rng.random_range(0..GRID - spread);
            (0..n)
                .map(|_| lattice(offset + rng.random_range(0..spread)))
                .collect()
        };
        let a = EmpiricalCdf::new(&draw(&mut rng)).map_err(|e| e.to_string())?;
        let b = EmpiricalCdf::new(&draw(&mut rng)).map_err(|e| e.to_string())?;
        let ks = ks_statistic(&a, &b);
        let brute = (0..GRID)
            .map(|j| (a.eval(lattice(j)) - b.eval(lattice(j))).abs())
            .fold(0.0, f64::max);
        ensure((ks - brute).abs() < 1e-12, || {
            format!("pair {pair}: KS {ks} vs grid {brute}")
        })?;
        ensure(ks_statistic(&a, &a) == 0.0, || {
            format!("pair {pair}: KS(self, self) != 0")
        })?;
    }
    let single = rms_delay_spread_of(&[(12.0, -80.0)]).map_err(|e| e.to_string())?;
    let pair = rms_delay_spread_of(&[(0.0, -90.0), (10.0, -90.0)]).map_err(|e| e.to_string())?;
    ensure(single == 0.0, || format!("single ray spread {single}"))?;
    ensure((pair - 5.0).abs() < 1e-12, || {
        format!("equal-power pair spread {pair}")
    })?;
    Ok("100 pairs match the 10^6-point grid; KS(self,self)=0; spreads 0 and 5 ns".into())
}

// ---------------------------------------------------------------- ensembles

fn self_consistency() -> Check {
    const REPS: usize = 100;
    const RX: usize = 60;
    let start = Instant::now();
    let mut config = ScenarioConfig::lecture_room();
    config.rx_loop.as_mut().unwrap().count = RX;
    let library = config.load_library().map_err(|e| e.to_string())?;
    let opts = CompareOptions::default();
    let run = |config: &ScenarioConfig| generate_all(config, &library).map_err(|e| e.to_string());

    let mut drays = config.clone();
    drays.qd.model = ModelVariant::DraysOnly;
    let drays: Vec<_> = run(&drays)?.into_iter().map(|(_, c)| c).collect();

    let (mut wins_rmsds, mut wins_pg) = (0, 0);
    let (mut qd_sum, mut dr_sum) = (0.0, 0.0);
    for rep in 0..REPS as u64 {
        config.seed = 1_000 + rep;
        let reference: Vec<ChannelTrace> = run(&config)?
            .iter()
            .map(|(i, c)| ChannelTrace::from_instance(*i, c))
            .collect();
        config.seed = 2_000 + rep;
        let qd: Vec<_> = run(&config)?.into_iter().map(|(_, c)| c).collect();
        let q = qdchan::compare_ensembles(&qd, &reference, &opts).map_err(|e| e.to_string())?;
        let d = qdchan::compare_ensembles(&drays, &reference, &opts).map_err(|e| e.to_string())?;
        wins_rmsds += usize::from(q.ks_rmsds < d.ks_rmsds);
        wins_pg += usize::from(q.ks_pg < d.ks_pg);
        qd_sum += q.ks_rmsds;
        dr_sum += d.ks_rmsds;
    }
    let t = within(Duration::from_secs(300), start)?;
    ensure(wins_rmsds >= 95 && wins_pg >= 95, || {
        format!("QD better in {wins_rmsds}/100 (rmsds) and {wins_pg}/100 (pg)")
    })?;
    Ok(format!(
        "QD better in {wins_rmsds}/100 (rmsds), {wins_pg}/100 (pg); mean KS_rmsds QD {:.3} vs d-rays {:.3}; {t}",
        qd_sum / REPS as f64,
        dr_sum / REPS as f64
    ))
}

fn pipeline_bytes(dir: &Path, threads: usize) -> Result<Vec<(String, Vec<u8>)>, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| -> qdchan::Result<()> {
        let mut config = ScenarioConfig::lecture_room();
        config.seed = 424242;
        let library = config.load_library()?;
        run_trace(&config, &library, &dir.join("drays.csv"))?;
        run_generate(&config, &library, &dir.join("sim.csv"))?;
        config.seed = 1;
        config.qd.model = ModelVariant::Complete;
        run_generate(&config, &library, &dir.join("ref.csv"))?;
        let opts = CompareOptions {
            per_position: true,
            ..Default::default()
        };
        run_compare(
            &dir.join("sim.csv"),
            &dir.join("ref.csv"),
            &opts,
            &dir.join("cmp"),
        )?;
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for sub in [dir.to_path_buf(), dir.join("cmp")] {
        let mut entries: Vec<_> = std::fs::read_dir(&sub)
            .map_err(|e| e.to_string())?
            .flatten()
            .collect();
        entries.sort_by_key(|e| e.file_name());
        for e in entries.into_iter().filter(|e| e.path().is_file()) {
            files.push((
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).map_err(|e| e.to_string())?,
            ));
        }
    }
    Ok(files)
}

fn determinism() -> Check {
    let runs: Vec<_> = [1, 1, 4, 8]
        .into_iter()
        .map(|threads| {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            pipeline_bytes(dir.path(), threads)
        })
        .collect::<Result<_, _>>()?;
    for (i, r) in runs.iter().enumerate().skip(1) {
        ensure(r == &runs[0], || format!("run {i} differs from run 0"))?;
    }
    let bytes: usize = runs[0].iter().map(|(_, b)| b.len()).sum();
    Ok(format!(
        "{} files, {bytes} bytes identical across 4 runs (1, 1, 4, 8 threads)",
        runs[0].len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("distribution suite", distribution_suite),
        ("geometry oracle", geometry_oracle),
        ("friis at 1 m, 60 GHz", friis),
        ("diffuse gain pinned draw", eq4_pinned),
        ("cluster counts and pruning", count_and_pruning),
        ("metrics oracle", metrics_oracle),
        ("self-consistency ensemble", self_consistency),
        ("pipeline determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
