//! Dense channels x height x width arrays.

use crate::error::{Error, Result, Shape};

/// A dense rank-3 array stored row-major in `(c, y, x)` order.
///
/// Images, feature maps, parsing maps and gradients all travel as tensors.
/// Pixel intensities are normalized to `[0, 1]` at ingest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::invalid(
                "tensor",
                format!("dimensions must be positive, got {channels}x{height}x{width}"),
            ));
        }
        if data.len() != channels * height * width {
            return Err(Error::invalid(
                "tensor",
                format!(
                    "{} values cannot fill a {channels}x{height}x{width} tensor",
                    data.len()
                ),
            ));
        }
        Ok(Tensor {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, 0.0)
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Self {
        assert!(
            channels > 0 && height > 0 && width > 0,
            "tensor dimensions must be positive"
        );
        Tensor {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut t = Self::zeros(channels, height, width);
        let mut i = 0;
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    t.data[i] = f(c, y, x);
                    i += 1;
                }
            }
        }
        t
    }

    pub fn shape(&self) -> Shape {
        Shape::new(self.channels, self.height, self.width)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.index(c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        let i = self.index(c, y, x);
        self.data[i] = v;
    }

    /// One channel plane as a contiguous slice.
    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Copies channel `c` into a new single-channel tensor.
    pub fn channel(&self, c: usize) -> Tensor {
        Tensor {
            channels: 1,
            height: self.height,
            width: self.width,
            data: self.plane(c).to_vec(),
        }
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.shape() == other.shape()
    }

    pub(crate) fn check_same_shape(&self, other: &Tensor, op: &'static str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        self.check_same_shape(other, "zip_map")?;
        Ok(Tensor {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &Tensor, scale: f64) -> Result<()> {
        self.check_same_shape(other, "add_scaled")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    /// Extracts the window `[y0, y0+h) x [x0, x0+w)` across all channels.
    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<Tensor> {
        if h == 0 || w == 0 || y0 + h > self.height || x0 + w > self.width {
            return Err(Error::invalid(
                "crop",
                format!(
                    "window {h}x{w} at ({y0}, {x0}) does not fit in {}",
                    self.shape()
                ),
            ));
        }
        let mut data = Vec::with_capacity(self.channels * h * w);
        for c in 0..self.channels {
            for y in y0..y0 + h {
                let start = self.index(c, y, x0);
                data.extend_from_slice(&self.data[start..start + w]);
            }
        }
        Ok(Tensor {
            channels: self.channels,
            height: h,
            width: w,
            data,
        })
    }

    /// Centered `h x w` window. Odd margins put the extra row/column after the window.
    pub fn center_crop(&self, h: usize, w: usize) -> Result<Tensor> {
        if h > self.height || w > self.width {
            return Err(Error::invalid(
                "center_crop",
                format!("cannot take {h}x{w} from {}", self.shape()),
            ));
        }
        self.crop((self.height - h) / 2, (self.width - w) / 2, h, w)
    }

    /// Surrounds every channel with `pad` rows/columns of zeros.
    pub fn pad_zero(&self, pad: usize) -> Tensor {
        if pad == 0 {
            return self.clone();
        }
        let (h, w) = (self.height + 2 * pad, self.width + 2 * pad);
        let mut out = Tensor::zeros(self.channels, h, w);
        for c in 0..self.channels {
            for y in 0..self.height {
                let src = self.index(c, y, 0);
                let dst = out.index(c, y + pad, pad);
                out.data[dst..dst + self.width].copy_from_slice(&self.data[src..src + self.width]);
            }
        }
        out
    }

    /// Inverse of [`Tensor::pad_zero`]: drops a `pad`-wide border.
    pub fn unpad(&self, pad: usize) -> Tensor {
        if pad == 0 {
            return self.clone();
        }
        self.crop(pad, pad, self.height - 2 * pad, self.width - 2 * pad)
            .expect("unpad border larger than tensor")
    }

    /// Stacks tensors of equal spatial size along the channel axis.
    pub fn concat_channels(parts: &[&Tensor]) -> Result<Tensor> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("concat_channels", "no tensors given"))?;
        let mut data = Vec::new();
        let mut channels = 0;
        for p in parts {
            if p.height != first.height || p.width != first.width {
                return Err(Error::ShapeMismatch {
                    op: "concat_channels",
                    left: first.shape(),
                    right: p.shape(),
                });
            }
            channels += p.channels;
            data.extend_from_slice(&p.data);
        }
        Tensor::new(channels, first.height, first.width, data)
    }

    /// Keeps channels `[start, start+count)`.
    pub fn slice_channels(&self, start: usize, count: usize) -> Result<Tensor> {
        if count == 0 || start + count > self.channels {
            return Err(Error::invalid(
                "slice_channels",
                format!("channels {start}..{} out of {}", start + count, self.channels),
            ));
        }
        let n = self.height * self.width;
        Tensor::new(
            count,
            self.height,
            self.width,
            self.data[start * n..(start + count) * n].to_vec(),
        )
    }

    /// Rotates every channel by 90 degrees counter-clockwise.
    pub fn rot90(&self) -> Tensor {
        let (h, w) = (self.height, self.width);
        let mut out = Tensor::zeros(self.channels, w, h);
        for c in 0..self.channels {
            for y in 0..h {
                for x in 0..w {
                    out.set(c, w - 1 - x, y, self.get(c, y, x));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inconsistent_length() {
        assert!(Tensor::new(1, 2, 2, vec![0.0; 3]).is_err());
        assert!(Tensor::new(0, 2, 2, vec![]).is_err());
    }

    #[test]
    fn pad_then_unpad_is_identity() {
        let t = Tensor::from_fn(2, 3, 4, |c, y, x| (c * 100 + y * 10 + x) as f64);
        let p = t.pad_zero(2);
        assert_eq!(p.shape(), Shape::new(2, 7, 8));
        assert_eq!(p.get(1, 0, 0), 0.0);
        assert_eq!(p.unpad(2), t);
    }

    #[test]
    fn center_crop_takes_middle() {
        let t = Tensor::from_fn(1, 5, 5, |_, y, x| (y * 5 + x) as f64);
        let c = t.center_crop(3, 3).unwrap();
        assert_eq!(c.get(0, 0, 0), 6.0);
        assert_eq!(c.get(0, 2, 2), 18.0);
        assert!(t.center_crop(6, 1).is_err());
    }

    #[test]
    fn four_rotations_are_identity() {
        let t = Tensor::from_fn(1, 3, 5, |_, y, x| (y * 7 + x) as f64);
        assert_eq!(t.rot90().rot90().rot90().rot90(), t);
    }

    #[test]
    fn concat_then_slice() {
        let a = Tensor::filled(1, 2, 2, 1.0);
        let b = Tensor::filled(2, 2, 2, 2.0);
        let c = Tensor::concat_channels(&[&a, &b]).unwrap();
        assert_eq!(c.channels(), 3);
        assert_eq!(c.slice_channels(1, 2).unwrap(), b);
        assert!(Tensor::concat_channels(&[&a, &Tensor::zeros(1, 3, 2)]).is_err());
    }
}
