use std::fs;
use std::path::PathBuf;

use tbma::dataio::{load_idx, synthetic, write_idx, Dataset};
use tbma::Error;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn reads_three_image_fixture() {
    let d = load_idx(&fixture("three-images-idx3-ubyte"), &fixture("three-labels-idx1-ubyte")).unwrap();
    assert_eq!(d.len(), 3);
    assert_eq!(d.n_dims, 784);
    assert_eq!(d.labels, vec![7, 2, 1]);
    // Pixel j of image i was written as (50 i + j) mod 256.
    for i in 0..3 {
        for j in [0, 1, 205, 783] {
            let byte = ((50 * i + j) % 256) as f64;
            assert_eq!(d.sample(i)[j], byte / 255.0);
        }
    }
    assert!(d.features.iter().all(|x| (0.0..=1.0).contains(x)));
}

#[test]
fn labels_passed_as_images_is_a_format_error() {
    let err = load_idx(&fixture("three-labels-idx1-ubyte"), &fixture("three-labels-idx1-ubyte")).unwrap_err();
    assert!(matches!(err, Error::Format { expected: 0x803, found: 0x801, .. }), "{err}");
    let err = load_idx(&fixture("three-images-idx3-ubyte"), &fixture("three-images-idx3-ubyte")).unwrap_err();
    assert!(matches!(err, Error::Format { expected: 0x801, found: 0x803, .. }), "{err}");
}

#[test]
fn count_mismatch_is_a_consistency_error() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels");
    fs::write(&labels, [0, 0, 8, 1, 0, 0, 0, 2, 7, 2]).unwrap();
    let err = load_idx(&fixture("three-images-idx3-ubyte"), &labels).unwrap_err();
    assert!(matches!(err, Error::Consistency { images: 3, labels: 2 }), "{err}");
}

#[test]
fn truncated_files_are_length_errors() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("images");
    let full = fs::read(fixture("three-images-idx3-ubyte")).unwrap();
    fs::write(&images, &full[..full.len() - 1]).unwrap();
    let err = load_idx(&images, &fixture("three-labels-idx1-ubyte")).unwrap_err();
    assert!(matches!(err, Error::Length { .. }), "{err}");

    fs::write(&images, &full[..10]).unwrap();
    assert!(matches!(
        load_idx(&images, &fixture("three-labels-idx1-ubyte")),
        Err(Error::Length { .. })
    ));

    let labels = dir.path().join("labels");
    fs::write(&labels, [0, 0, 8, 1, 0, 0, 0, 3, 7, 2]).unwrap();
    assert!(matches!(
        load_idx(&fixture("three-images-idx3-ubyte"), &labels),
        Err(Error::Length { .. })
    ));
}

#[test]
fn missing_file_is_io_error() {
    let err = load_idx(&fixture("nope"), &fixture("three-labels-idx1-ubyte")).unwrap_err();
    assert!(matches!(err, Error::Io(_)));
}

#[test]
fn write_then_read_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = (dir.path().join("i"), dir.path().join("l"));

    let original = load_idx(&fixture("three-images-idx3-ubyte"), &fixture("three-labels-idx1-ubyte")).unwrap();
    write_idx(&original, 28, 28, &img, &lab).unwrap();
    assert_eq!(fs::read(&img).unwrap(), fs::read(fixture("three-images-idx3-ubyte")).unwrap());
    assert_eq!(load_idx(&img, &lab).unwrap(), original);

    // Synthetic features snapped to the byte grid survive a round trip.
    let s = synthetic(3, 40, 16, 10, 2.0).unwrap();
    let snapped: Vec<f64> = s.features.iter().map(|x| (x * 255.0).round() / 255.0).collect();
    let s = Dataset::new(snapped, s.labels, 16, 10).unwrap();
    write_idx(&s, 4, 4, &img, &lab).unwrap();
    assert_eq!(load_idx(&img, &lab).unwrap(), s);
    assert!(write_idx(&s, 4, 3, &img, &lab).is_err());
}
