//! Write and read fvecs and CSV files; gzipped input is read transparently.

use std::io::Write;

use grng::datagen::{generate, GenSpec};
use grng::io::{load, save, Format};

fn main() -> grng::Result<()> {
    let dir = std::env::temp_dir().join("grng-io-example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let data = generate(&GenSpec::clustered(1000, 8, 9))?;

    let csv = dir.join("points.csv");
    save(&data, &csv, None)?;
    assert_eq!(load(&csv, None)?, data);
    println!("csv round trip exact, {} bytes", std::fs::metadata(&csv).map_or(0, |m| m.len()));

    // fvecs keeps 32-bit floats, so compare after narrowing
    let fvecs = dir.join("points.fvecs");
    save(&data, &fvecs, Some(Format::Fvecs))?;
    let narrowed = load(&fvecs, None)?;
    let worst = data
        .iter()
        .zip(narrowed.iter())
        .flat_map(|(a, b)| a.coords.iter().zip(b.coords).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    println!("fvecs worst rounding error {worst:.2e}");

    let gz = dir.join("points.fvecs.gz");
    let mut enc = flate2::write::GzEncoder::new(std::fs::File::create(&gz).expect("create"), flate2::Compression::best());
    enc.write_all(&std::fs::read(&fvecs).expect("read")).expect("compress");
    enc.finish().expect("finish");
    assert_eq!(load(&gz, None)?, narrowed);
    println!("gzip read ok");

    std::fs::write(dir.join("bad.csv"), "1,2\n3,4\n5\n").expect("write");
    if let Err(e) = load(dir.join("bad.csv"), None) {
        println!("{e}");
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
