//! Binary PPM rendering of image moduli.
//!
//! Moduli in `[0, 1]` map linearly to gray. Above 1 the pixel fades from white
//! to pure red, reaching it at `1 + vmax_excess`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::Image;

pub fn pixel(v: f64, vmax_excess: f64) -> [u8; 3] {
    if v.is_nan() {
        return [0, 0, 0];
    }
    if v <= 1.0 {
        let g = (v.max(0.0) * 255.0).round() as u8;
        [g, g, g]
    } else {
        let s = ((v - 1.0) / vmax_excess).min(1.0);
        let c = (255.0 * (1.0 - s)).round() as u8;
        [255, c, c]
    }
}

/// `P6` file contents for the entrywise modulus of `img`.
pub fn render_ppm(img: &Image, vmax_excess: f64) -> Result<Vec<u8>> {
    if !(vmax_excess > 0.0) {
        return Err(Error::InvalidParameter(format!("vmax_excess must be positive, got {vmax_excess}")));
    }
    let n = img.n();
    let mut out = format!("P6\n{n} {n}\n255\n").into_bytes();
    out.reserve(3 * n * n);
    for v in img.data() {
        out.extend_from_slice(&pixel(v.norm(), vmax_excess));
    }
    Ok(out)
}

pub fn write_ppm(path: &Path, img: &Image, vmax_excess: f64) -> Result<()> {
    fs::write(path, render_ppm(img, vmax_excess)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn endpoints() {
        assert_eq!(pixel(0.0, 1.0), [0, 0, 0]);
        assert_eq!(pixel(1.0, 1.0), [255, 255, 255]);
        assert_eq!(pixel(2.0, 1.0), [255, 0, 0]);
        assert_eq!(pixel(7.0, 1.0), [255, 0, 0]);
        assert_eq!(pixel(1.5, 1.0), [255, 128, 128]);
    }

    #[test]
    fn mid_gray_image() {
        let img = Image::constant(4, Complex64::new(0.5, 0.0));
        let bytes = render_ppm(&img, 1.0).unwrap();
        let header = b"P6\n4 4\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert!(bytes[header.len()..].iter().all(|&b| b == 128));
        assert_eq!(bytes.len(), header.len() + 48);
    }

    #[test]
    fn uses_the_modulus() {
        let img = Image::constant(2, Complex64::new(0.0, -1.0));
        assert!(render_ppm(&img, 1.0).unwrap()[11..].iter().all(|&b| b == 255));
        assert!(render_ppm(&img, 0.0).is_err());
    }
}
