use proptest::prelude::*;

use tbes::harness::{load_truths, BenchmarkSummary, ImageResult};
use tbes::LabelMap;

fn result(id: &str, pri: Option<f64>, regions: usize) -> ImageResult {
    ImageResult {
        id: id.into(),
        epsilon: Some(100.0),
        pri,
        voi: None,
        gfm: None,
        bits: None,
        regions,
        seconds: None,
        truths: 1,
    }
}

proptest! {
    #[test]
    fn aggregate_is_the_arithmetic_mean(values in prop::collection::vec((0.0f64..1.0, 1usize..50), 1..12)) {
        let images: Vec<ImageResult> = values
            .iter()
            .enumerate()
            .map(|(i, &(p, k))| result(&format!("img{:02}", values.len() - i), Some(p), k))
            .collect();
        let summary = BenchmarkSummary::new(images, Vec::new());
        let n = values.len() as f64;
        let pri: f64 = values.iter().map(|v| v.0).sum::<f64>() / n;
        let regions: f64 = values.iter().map(|v| v.1 as f64).sum::<f64>() / n;
        prop_assert!((summary.mean.pri.unwrap() - pri).abs() < 1e-12);
        prop_assert!((summary.mean.regions.unwrap() - regions).abs() < 1e-12);
        prop_assert_eq!(summary.mean.voi, None);
        prop_assert!(summary.images.windows(2).all(|w| w[0].id < w[1].id));
    }
}

#[test]
fn missing_values_are_left_out_of_the_mean() {
    let summary = BenchmarkSummary::new(
        vec![result("a", Some(0.5), 2), result("b", None, 4)],
        Vec::new(),
    );
    assert_eq!(summary.mean.pri, Some(0.5));
    assert_eq!(summary.mean.regions, Some(3.0));
}

#[test]
fn truths_from_directory_or_single_file() {
    let dir = tempfile::tempdir().unwrap();
    let map = |v: u32| LabelMap::new(2, 1, vec![0, v]).unwrap();
    std::fs::create_dir(dir.path().join("many")).unwrap();
    map(1).save_pgm(&dir.path().join("many/1.pgm")).unwrap();
    map(0).save_pgm(&dir.path().join("many/2.pgm")).unwrap();
    map(1).save_pgm(&dir.path().join("one.pgm")).unwrap();
    let many = load_truths(dir.path(), "many").unwrap().unwrap();
    assert_eq!(many, vec![map(1), map(0)]);
    assert_eq!(load_truths(dir.path(), "one").unwrap().unwrap(), vec![map(1)]);
    assert_eq!(load_truths(dir.path(), "none").unwrap(), None);
}
