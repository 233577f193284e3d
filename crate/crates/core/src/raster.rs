//! Owned RGB rasters and conversions to and from the `image` crate.

use std::path::Path;

use image::{imageops::FilterType, ImageReader, RgbImage};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("image has zero width or height")]
    Empty,
    #[error("pixel buffer holds {got} pixels, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("failed to read image: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to decode image: {0}")]
    Decode(#[from] image::ImageError),
}

/// Row-major RGB image with 8-bit channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self, RasterError> {
        if pixels.len() != width * height {
            return Err(RasterError::SizeMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image of a single color.
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Self {
        Self {
            width,
            height,
            pixels: vec![color; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, color: [u8; 3]) {
        self.pixels[y * self.width + x] = color;
    }

    /// Copies a window whose columns wrap around the right edge.
    ///
    /// Rows must lie inside the image.
    pub fn crop_cylindrical(&self, x0: usize, y0: usize, width: usize, height: usize) -> Self {
        assert!(y0 + height <= self.height, "crop rows out of bounds");
        let mut pixels = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            for x in 0..width {
                pixels.push(self.get((x0 + x) % self.width, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    /// Resamples to the given size with a triangle (bilinear) filter.
    pub fn resized(&self, width: usize, height: usize) -> Self {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let img = image::imageops::resize(
            &self.to_rgb_image(),
            width as u32,
            height as u32,
            FilterType::Triangle,
        );
        Self::from_rgb_image(&img)
    }

    pub fn from_rgb_image(img: &RgbImage) -> Self {
        let pixels = img.pixels().map(|p| p.0).collect();
        Self {
            width: img.width() as usize,
            height: img.height() as usize,
            pixels,
        }
    }

    pub fn to_rgb_image(&self) -> RgbImage {
        let raw: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer length matches dimensions")
    }

    /// Decodes a PNG or JPEG from memory.
    pub fn decode(bytes: &[u8]) -> Result<Self, RasterError> {
        let img = ImageReader::new(std::io::Cursor::new(bytes))
            .with_guessed_format()?
            .decode()?;
        Ok(Self::from_rgb_image(&img.to_rgb8()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RasterError> {
        let bytes = std::fs::read(path)?;
        Self::decode(&bytes)
    }

    /// Writes the image; the format follows the file extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RasterError> {
        self.to_rgb_image().save(path)?;
        Ok(())
    }
}
