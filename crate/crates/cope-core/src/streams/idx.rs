//! IDX-format reader for the MNIST image/label files.

use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};

use super::Dataset;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

struct Reader {
    path: PathBuf,
    bytes: Vec<u8>,
    pos: usize,
}

impl Reader {
    fn open(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.to_path_buf(),
            bytes: std::fs::read(path)?,
            pos: 0,
        })
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                path: self.path.clone(),
                needed: self.pos + n,
                found: self.bytes.len(),
            });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn read_u32_be(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn expect_magic(&mut self, expected: u32) -> Result<()> {
        let found = self.read_u32_be()?;
        if found != expected {
            return Err(Error::BadMagic {
                path: self.path.clone(),
                expected,
                found,
            });
        }
        Ok(())
    }
}

/// Parse an IDX image/label file pair into a dataset with pixels scaled to
/// [0, 1]. The sample counts of the two files must agree.
pub fn parse_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let mut images = Reader::open(images_path)?;
    images.expect_magic(IMAGES_MAGIC)?;
    let n_images = images.read_u32_be()? as usize;
    let rows = images.read_u32_be()? as usize;
    let cols = images.read_u32_be()? as usize;
    let dim = rows * cols;
    let pixels = images.take(n_images * dim)?;

    let mut labels = Reader::open(labels_path)?;
    labels.expect_magic(LABELS_MAGIC)?;
    let n_labels = labels.read_u32_be()? as usize;
    if n_labels != n_images {
        return Err(Error::CountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }
    let label_bytes = labels.take(n_labels)?;

    let inputs = Array2::from_shape_vec(
        (n_images, dim),
        pixels.iter().map(|&p| f64::from(p) / 255.0).collect(),
    )
    .expect("shape from validated lengths");
    let labels: Vec<usize> = label_bytes.iter().map(|&l| l as usize).collect();
    let name = images_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".to_string());
    Dataset::new(name, inputs, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(bytes).unwrap();
        path
    }

    /// Byte-by-byte fixture: two 2x2 images plus labels.
    fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
        let mut img = Vec::new();
        img.extend_from_slice(&0x0000_0803u32.to_be_bytes());
        img.extend_from_slice(&2u32.to_be_bytes()); // samples
        img.extend_from_slice(&2u32.to_be_bytes()); // rows
        img.extend_from_slice(&2u32.to_be_bytes()); // cols
        img.extend_from_slice(&[0, 128, 255, 64]); // image 0
        img.extend_from_slice(&[255, 0, 10, 200]); // image 1
        let mut lab = Vec::new();
        lab.extend_from_slice(&0x0000_0801u32.to_be_bytes());
        lab.extend_from_slice(&2u32.to_be_bytes());
        lab.extend_from_slice(&[1, 0]);
        (
            write_file(dir, "imgs-idx3-ubyte", &img),
            write_file(dir, "labs-idx1-ubyte", &lab),
        )
    }

    #[test]
    fn fixture_pixels_recovered_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let (imgs, labs) = fixture(dir.path());
        let ds = parse_idx(&imgs, &labs).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.input_dim(), 4);
        assert_eq!(ds.labels, vec![1, 0]);
        let expected0 = [0.0, 128.0 / 255.0, 1.0, 64.0 / 255.0];
        let expected1 = [1.0, 0.0, 10.0 / 255.0, 200.0 / 255.0];
        for (got, want) in ds.inputs.row(0).iter().zip(expected0) {
            assert_eq!(*got, want);
        }
        for (got, want) in ds.inputs.row(1).iter().zip(expected1) {
            assert_eq!(*got, want);
        }
    }

    #[test]
    fn wrong_magic_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let (imgs, labs) = fixture(dir.path());
        // Labels parsed with the images path first: images magic found where
        // the labels magic is expected.
        let err = parse_idx(&labs, &imgs).unwrap_err();
        assert!(matches!(err, Error::BadMagic { expected, .. } if expected == IMAGES_MAGIC));
    }

    #[test]
    fn truncated_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let (imgs, labs) = fixture(dir.path());
        let mut bytes = std::fs::read(&imgs).unwrap();
        bytes.truncate(bytes.len() - 3);
        let short = write_file(dir.path(), "short-idx3-ubyte", &bytes);
        let err = parse_idx(&short, &labs).unwrap_err();
        assert!(matches!(err, Error::Truncated { .. }));
    }

    #[test]
    fn count_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let (imgs, _) = fixture(dir.path());
        let mut lab = Vec::new();
        lab.extend_from_slice(&0x0000_0801u32.to_be_bytes());
        lab.extend_from_slice(&3u32.to_be_bytes());
        lab.extend_from_slice(&[1, 0, 1]);
        let labs3 = write_file(dir.path(), "labs3-idx1-ubyte", &lab);
        let err = parse_idx(&imgs, &labs3).unwrap_err();
        assert!(matches!(
            err,
            Error::CountMismatch { images: 2, labels: 3 }
        ));
    }
}
