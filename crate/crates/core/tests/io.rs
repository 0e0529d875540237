use std::io::Write;

use grng::io::{load, save, Format};
use grng::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn f32_data(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0f32..1.0) as f64).collect())
        .collect();
    Dataset::from_rows(rows).unwrap()
}

#[test]
fn fvecs_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.fvecs");
    let data = f32_data(100, 7, 1);
    save(&data, &path, None).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 100 * (4 + 7 * 4));
    assert_eq!(load(&path, None).unwrap(), data);
}

#[test]
fn fvecs_dimension_change_names_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.fvecs");
    let mut bytes = Vec::new();
    for dim in [3i32, 3, 3, 2] {
        bytes.extend_from_slice(&dim.to_le_bytes());
        for _ in 0..dim {
            bytes.extend_from_slice(&0.5f32.to_le_bytes());
        }
    }
    std::fs::write(&path, bytes).unwrap();
    let msg = load(&path, None).unwrap_err().to_string();
    assert!(msg.contains("record 3") && msg.contains("byte 48"), "{msg}");
}

#[test]
fn csv_one_dimensional() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    std::fs::write(&path, "0\n1\n2\n").unwrap();
    let ds = load(&path, None).unwrap();
    assert_eq!((ds.len(), ds.dim()), (3, 1));
    assert_eq!(ds.rows(), vec![vec![0.0], vec![1.0], vec![2.0]]);
}

#[test]
fn csv_round_trip_keeps_every_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..3).map(|_| rng.gen_range(-1e6..1e6) * rng.gen::<f64>().powi(9)).collect())
        .collect();
    let data = Dataset::from_rows(rows).unwrap();
    save(&data, &path, Some(Format::Csv)).unwrap();
    assert_eq!(load(&path, None).unwrap(), data);
}

#[test]
fn gzip_reads_are_transparent() {
    let dir = tempfile::tempdir().unwrap();
    let data = f32_data(50, 4, 3);
    let plain = dir.path().join("v.fvecs");
    save(&data, &plain, None).unwrap();
    let gz = dir.path().join("v.fvecs.gz");
    let mut enc = flate2::write::GzEncoder::new(std::fs::File::create(&gz).unwrap(), flate2::Compression::default());
    enc.write_all(&std::fs::read(&plain).unwrap()).unwrap();
    enc.finish().unwrap();
    assert_eq!(load(&gz, None).unwrap(), data);

    let csv_gz = dir.path().join("p.csv.gz");
    let mut enc = flate2::write::GzEncoder::new(std::fs::File::create(&csv_gz).unwrap(), flate2::Compression::fast());
    enc.write_all(b"x,y\n1.5,2\n3,4\n").unwrap();
    enc.finish().unwrap();
    assert_eq!(load(&csv_gz, None).unwrap().rows(), vec![vec![1.5, 2.0], vec![3.0, 4.0]]);
}

#[test]
fn unknown_extension_needs_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    std::fs::write(&path, "1,2\n").unwrap();
    assert!(load(&path, None).is_err());
    assert_eq!(load(&path, Some(Format::Csv)).unwrap().len(), 1);
    assert!(load(dir.path().join("missing.csv"), None).is_err());
}
