use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::scalar::Scalar;

pub const ERROR_MAP_FLOOR: f64 = 1e-10;

/// `log10(max((x − x̂)², floor))` per cell.
pub fn error_map<T: Scalar>(x: &Tensor<T>, x_hat: &Tensor<T>, floor: f64) -> Result<Tensor<T>> {
    if floor <= 0.0 {
        return Err(Error::config("error map floor must be positive"));
    }
    let floor = T::lit(floor);
    x.zip_map(x_hat, |a, b| ((a - b) * (a - b)).max(floor).log10())
}

/// Writes a 2-D tensor as CSV under a `row,c0,c1,…` header.
pub fn write_matrix_csv<T: Scalar>(path: &Path, m: &Tensor<T>) -> Result<()> {
    let [rows, cols] = m.dims2()?;
    let mut w = BufWriter::new(File::create(path)?);
    let header: Vec<String> = (0..cols).map(|c| format!("c{c}")).collect();
    writeln!(w, "row,{}", header.join(","))?;
    for r in 0..rows {
        let line: Vec<String> = m.data()[r * cols..(r + 1) * cols].iter().map(|v| v.to_string()).collect();
        writeln!(w, "{r},{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Min–max scales a 2-D tensor to 0–255; a constant map becomes all zeros.
pub fn to_gray8<T: Scalar>(m: &Tensor<T>) -> Vec<u8> {
    let lo = m.data().iter().copied().fold(T::infinity(), T::min);
    let hi = m.data().iter().copied().fold(T::neg_infinity(), T::max);
    let span = (hi - lo).as_f64();
    m.data()
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo).as_f64() / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect()
}

/// Binary (P5) 8-bit PGM with one image row per tensor row.
pub fn write_pgm<T: Scalar>(path: &Path, m: &Tensor<T>) -> Result<()> {
    let [rows, cols] = m.dims2()?;
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{cols} {rows}\n255\n")?;
    w.write_all(&to_gray8(m))?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn identical_inputs_give_floor() {
        let x = Tensor::<f64>::filled(&[3, 4], 0.7);
        let m = error_map(&x, &x, 1e-10).unwrap();
        assert!(m.data().iter().all(|&v| v == -10.0));
        assert!(to_gray8(&m).iter().all(|&p| p == 0));
    }

    #[test]
    fn single_cell_is_unique_max() {
        let x = Tensor::<f64>::filled(&[3, 4], 0.5);
        let mut y = x.clone();
        y.data_mut()[7] = 0.9;
        let m = error_map(&x, &y, 1e-10).unwrap();
        let gray = to_gray8(&m);
        assert_eq!(gray[7], 255);
        assert_eq!(gray.iter().filter(|&&p| p == 255).count(), 1);
    }

    #[test]
    fn monotone_in_absolute_difference() {
        let mut rng = seeded(8);
        for _ in 0..500 {
            let (d1, d2): (f64, f64) = (rng.gen(), rng.gen());
            let (small, large) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let xs = Tensor::new(vec![1, 2], vec![0.0, 0.0]).unwrap();
            let ys = Tensor::new(vec![1, 2], vec![small, -large]).unwrap();
            let m = error_map(&xs, &ys, 1e-10).unwrap();
            assert!(m.data()[0] <= m.data()[1]);
        }
    }

    #[test]
    fn csv_has_header_and_row_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_matrix_csv(&path, &Tensor::<f64>::from_fn(&[2, 2], |i| i as f64)).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "row,c0,c1\n0,0,1\n1,2,3\n");
    }

    #[test]
    fn pgm_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.pgm");
        let m = Tensor::<f64>::from_fn(&[2, 3], |i| i as f64);
        write_pgm(&path, &m).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[0, 51, 102, 153, 204, 255]);
    }
}
