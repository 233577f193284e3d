use peaktag::{Alignment, EdgeMap, RasterImage};

/// Photo-sized image with the photo dimmed, panorama edges in red and photo
/// edges in blue, the panorama sampled at the alignment offset.
pub fn render(photo: &RasterImage, photo_edges: &EdgeMap, pano_edges: &EdgeMap, alignment: &Alignment) -> RasterImage {
    let (w, h) = (photo_edges.width(), photo_edges.height());
    let backdrop = photo.resized(w, h);
    let wr = pano_edges.width() as i64;
    let hr = pano_edges.height() as i64;
    let mut out = RasterImage::filled(w, h, [0; 3]);
    for y in 0..h {
        for x in 0..w {
            let p = backdrop.get(x, y);
            let gray = ((p[0] as u32 + p[1] as u32 + p[2] as u32) / 12) as u8;
            let mut px = [gray; 3];
            let sy = y as i64 + alignment.dy;
            if (0..hr).contains(&sy) {
                let sx = (x as i64 + alignment.dx).rem_euclid(wr);
                let rho = pano_edges.get(sx as usize, sy as usize).0;
                if rho > 0.0 {
                    px[0] = (255.0 * rho.sqrt()).round() as u8;
                }
            }
            let rho = photo_edges.get(x, y).0;
            if rho > 0.0 {
                px[2] = (255.0 * rho.sqrt()).round() as u8;
            }
            out.set(x, y, px);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_land_in_their_channels() {
        let photo = RasterImage::filled(4, 3, [0; 3]);
        let mut pe = EdgeMap::zeros(4, 3);
        pe.set(1, 1, 1.0, 0.0);
        let mut re = EdgeMap::zeros(10, 5);
        re.set(6, 3, 1.0, 0.0);
        let a = Alignment::from_offsets(5, 2, 1.0, 0.0, 1.0, 4);
        let img = render(&photo, &pe, &re, &a);
        assert_eq!(img.get(1, 1), [255, 0, 255]);
        assert_eq!(img.get(0, 0), [0, 0, 0]);
    }
}
