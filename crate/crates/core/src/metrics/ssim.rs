use crate::error::{Error, Result};

const RADIUS: usize = 5;
const SIGMA: f64 = 1.5;

/// A row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height || pixels.is_empty() {
            return Err(Error::Shape(format!("{} pixels for {width}x{height}", pixels.len())));
        }
        Ok(Image { width, height, pixels })
    }

    /// Write as an 8-bit grayscale PNG, mapping `[0, 1]` to `[0, 255]`.
    pub fn save_png(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, bytes)
            .ok_or_else(|| Error::Image("buffer size mismatch".into()))?;
        img.save(path.as_ref()).map_err(|e| Error::Image(e.to_string()))
    }
}

impl Image {
    /// Images placed left to right, top-aligned, gaps filled with zeros.
    pub fn hstack(images: &[&Image]) -> Result<Image> {
        let width: usize = images.iter().map(|i| i.width).sum();
        let height = images.iter().map(|i| i.height).max().unwrap_or(0);
        let mut px = vec![0.0; width * height];
        let mut x0 = 0;
        for im in images {
            for r in 0..im.height {
                px[r * width + x0..r * width + x0 + im.width].copy_from_slice(&im.pixels[r * im.width..(r + 1) * im.width]);
            }
            x0 += im.width;
        }
        Image::new(width, height, px)
    }
}

fn gaussian(radius: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * SIGMA * SIGMA)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Separable "valid" filtering: output is `(w - 2r) x (h - 2r)`.
fn filter(img: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let r = k.len() / 2;
    let ow = w - 2 * r;
    let oh = h - 2 * r;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().enumerate().map(|(i, kv)| kv * img[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k.iter().enumerate().map(|(i, kv)| kv * tmp[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), shrunk for images
/// smaller than the window; `range` sets `C1 = (0.01 R)^2`, `C2 = (0.03 R)^2`.
pub fn ssim(a: &Image, b: &Image, range: f64) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::Shape("ssim images differ in size".into()));
    }
    if !(range > 0.0) {
        return Err(Error::Invalid(format!("ssim range {range} must be positive")));
    }
    let (w, h) = (a.width, a.height);
    let r = RADIUS.min((w.min(h) - 1) / 2);
    let k = gaussian(r);
    let c1 = (0.01 * range).powi(2);
    let c2 = (0.03 * range).powi(2);
    let prod = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p * q).collect() };
    let mx = filter(&a.pixels, w, h, &k);
    let my = filter(&b.pixels, w, h, &k);
    let mxx = filter(&prod(&a.pixels, &a.pixels), w, h, &k);
    let myy = filter(&prod(&b.pixels, &b.pixels), w, h, &k);
    let mxy = filter(&prod(&a.pixels, &b.pixels), w, h, &k);
    let mut acc = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let sx = mxx[i] - ux * ux;
        let sy = myy[i] - uy * uy;
        let sxy = mxy[i] - ux * uy;
        acc += ((2.0 * ux * uy + c1) * (2.0 * sxy + c2)) / ((ux * ux + uy * uy + c1) * (sx + sy + c2));
    }
    Ok(acc / mx.len() as f64)
}

/// Dynamic range of a nonnegative field, measured from zero; 1 when the
/// field is identically zero.
pub fn field_range(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(0.0, f64::max);
    let lo = values.iter().cloned().fold(0.0, f64::min);
    if hi - lo > 0.0 {
        hi - lo
    } else {
        1.0
    }
}

/// Reshape a node vector row-major into the smallest square, zero-padded.
pub fn square_image(values: &[f64]) -> Result<Image> {
    if values.is_empty() {
        return Err(Error::Invalid("empty field".into()));
    }
    let side = (values.len() as f64).sqrt().ceil() as usize;
    let side = if (side - 1) * (side - 1) >= values.len() { side - 1 } else { side };
    let mut px = values.to_vec();
    px.resize(side * side, 0.0);
    Image::new(side, side, px)
}

/// SSIM of the reshaped, zero-padded magnitude fields.
pub fn ssim_padded(pred_mag: &[f64], true_mag: &[f64]) -> Result<f64> {
    if pred_mag.len() != true_mag.len() {
        return Err(Error::Shape(format!("{} vs {} nodes", pred_mag.len(), true_mag.len())));
    }
    ssim(&square_image(pred_mag)?, &square_image(true_mag)?, field_range(true_mag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hstack_places_images_side_by_side() {
        let a = Image::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let b = Image::new(1, 1, vec![0.9]).unwrap();
        let c = Image::hstack(&[&a, &b]).unwrap();
        assert_eq!((c.width, c.height), (3, 2));
        assert_eq!(c.pixels, vec![0.1, 0.2, 0.9, 0.3, 0.4, 0.0]);
    }

    #[test]
    fn identical_fields_score_exactly_one() {
        let v: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        assert_eq!(ssim_padded(&v, &v).unwrap(), 1.0);
    }

    #[test]
    fn constant_images_match_closed_form() {
        let a = vec![2.0; 16];
        let b = vec![5.0; 16];
        let s = ssim_padded(&a, &b).unwrap();
        let r = 5.0;
        let c1 = (0.01f64 * r).powi(2);
        let want = (2.0 * 2.0 * 5.0 + c1) / (4.0 + 25.0 + c1);
        assert!(s < 1.0);
        assert!((s - want).abs() < 1e-12);
    }

    #[test]
    fn square_sizes() {
        assert_eq!(square_image(&[1.0; 16]).unwrap().width, 4);
        assert_eq!(square_image(&[1.0; 17]).unwrap().width, 5);
        assert_eq!(square_image(&[1.0; 5]).unwrap().pixels[5..], [0.0; 4]);
        assert!(square_image(&[]).is_err());
        assert!(ssim_padded(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn large_image_uses_full_window() {
        let n = 30 * 30;
        let a: Vec<f64> = (0..n).map(|i| ((i % 30) as f64 * 0.2).sin() + 1.0).collect();
        let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x + 0.1 * ((i * 7) % 5) as f64).collect();
        let s = ssim_padded(&a, &b).unwrap();
        assert!(s > 0.0 && s < 1.0);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in prop::collection::vec(0.0f64..3.0, 30), b in prop::collection::vec(0.0f64..3.0, 30)) {
            let ia = square_image(&a).unwrap();
            let ib = square_image(&b).unwrap();
            let s1 = ssim(&ia, &ib, 3.0).unwrap();
            let s2 = ssim(&ib, &ia, 3.0).unwrap();
            prop_assert!((s1 - s2).abs() < 1e-12);
            prop_assert!((-1.0..=1.0 + 1e-12).contains(&s1));
        }
    }
}
