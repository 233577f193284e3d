use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftDirection};

use super::{MatchError, ScoreGrid};
use crate::edges::EdgeMap;
use crate::fft::fft2d;

/// Squared complex edge field `(ρ·e^{iθ})² = ρ²·e^{2iθ}`.
#[inline]
fn squared_field(rho: f64, theta: f64) -> Complex64 {
    Complex64::from_polar(rho * rho, 2.0 * theta)
}

fn check_widths(photo: &EdgeMap, pano: &EdgeMap) -> Result<(), MatchError> {
    if photo.width() > pano.width() {
        return Err(MatchError::PhotoWiderThanPanorama {
            photo: photo.width(),
            panorama: pano.width(),
        });
    }
    Ok(())
}

/// Direct summation of the VCC score over every offset.
///
/// Slow (`O(rows · W_r · nnz(photo))`) and kept as the reference the FFT
/// path is checked against.
pub fn vcc_brute_force(photo: &EdgeMap, pano: &EdgeMap) -> Result<ScoreGrid, MatchError> {
    check_widths(photo, pano)?;
    let (wr, hr) = (pano.width(), pano.height());
    let hp = photo.height() as i64;
    let rows = pano.height() + photo.height() + 1;

    let photo_px: Vec<(usize, i64, Complex64)> = (0..photo.height())
        .flat_map(|y| (0..photo.width()).map(move |x| (x, y)))
        .filter_map(|(x, y)| {
            let (r, t) = photo.get(x, y);
            (r > 0.0).then(|| (x, y as i64, squared_field(r, t)))
        })
        .collect();
    let pano_field: Vec<Complex64> = pano
        .strength()
        .iter()
        .zip(pano.direction())
        .map(|(&r, &t)| squared_field(r, t))
        .collect();

    let mut scores = vec![0.0; rows * wr];
    scores
        .par_chunks_mut(wr.max(1))
        .enumerate()
        .for_each(|(row, out)| {
            let dy = row as i64 - hp;
            for (dx, slot) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for &(x, y, zp) in &photo_px {
                    let py = y + dy;
                    if py < 0 || py >= hr as i64 {
                        continue;
                    }
                    let zr = pano_field[py as usize * wr + (x + dx) % wr];
                    acc += (zp * zr.conj()).re;
                }
                *slot = acc;
            }
        });
    Ok(ScoreGrid::new(wr, rows, -hp, scores))
}

/// VCC score over every offset via the 2D FFT.
///
/// The panorama is padded with `H_p` zero rows above and below, making the
/// vertical correlation linear while the horizontal one stays circular.
pub fn compute_vcc_grid(photo: &EdgeMap, pano: &EdgeMap) -> Result<ScoreGrid, MatchError> {
    check_widths(photo, pano)?;
    let (wp, hp) = (photo.width(), photo.height());
    let (wr, hr) = (pano.width(), pano.height());
    let padded = hr + 2 * hp;
    let rows = hr + hp + 1;
    if wr == 0 || padded == 0 {
        return Ok(ScoreGrid::new(wr, if wr == 0 { 0 } else { rows }, -(hp as i64), vec![0.0; wr * rows]));
    }

    let mut photo_buf = vec![Complex64::default(); padded * wr];
    for y in 0..hp {
        for x in 0..wp {
            let (r, t) = photo.get(x, y);
            if r > 0.0 {
                photo_buf[y * wr + x] = squared_field(r, t);
            }
        }
    }
    let mut pano_buf = vec![Complex64::default(); padded * wr];
    for y in 0..hr {
        for x in 0..wr {
            let (r, t) = pano.get(x, y);
            if r > 0.0 {
                pano_buf[(y + hp) * wr + x] = squared_field(r, t);
            }
        }
    }

    fft2d(&mut photo_buf, padded, wr, FftDirection::Forward);
    fft2d(&mut pano_buf, padded, wr, FftDirection::Forward);
    // conj(P)·R transforms back to Σ conj(p(n))·r(n + s); its real part is
    // the score because Re(conj(a)·b) = Re(a·conj(b)).
    pano_buf
        .par_iter_mut()
        .zip(photo_buf.par_iter())
        .for_each(|(r, p)| *r *= p.conj());
    fft2d(&mut pano_buf, padded, wr, FftDirection::Inverse);

    let norm = 1.0 / (padded * wr) as f64;
    let scores = pano_buf[..rows * wr].iter().map(|c| c.re * norm).collect();
    Ok(ScoreGrid::new(wr, rows, -(hp as i64), scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::best_alignment;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> EdgeMap {
        let mut m = EdgeMap::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                if rng.random::<f64>() < density {
                    m.set(x, y, rng.random_range(0.05..=1.0), rng.random_range(0.0..TAU));
                }
            }
        }
        m
    }

    fn assert_grids_close(a: &ScoreGrid, b: &ScoreGrid, tol: f64) {
        assert_eq!((a.width(), a.rows(), a.dy_min()), (b.width(), b.rows(), b.dy_min()));
        let scale = b.scores().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.scores().iter().zip(b.scores()) {
            assert!((x - y).abs() <= tol * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn zero_photo_gives_zero_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pano = random_map(&mut rng, 9, 4, 0.5);
        let grid = vcc_brute_force(&EdgeMap::zeros(3, 2), &pano).unwrap();
        assert_eq!(grid.rows(), 7);
        assert!(grid.scores().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_field_translation() {
        let mut photo = EdgeMap::zeros(1, 1);
        photo.set(0, 0, 1.0, 0.0);
        let mut pano = EdgeMap::zeros(3, 1);
        for x in 0..3 {
            pano.set(x, 0, 1.0, 0.0);
        }
        for grid in [vcc_brute_force(&photo, &pano).unwrap(), compute_vcc_grid(&photo, &pano).unwrap()] {
            assert_eq!(grid.dy_min(), -1);
            for dx in 0..3 {
                assert!((grid.get(0, dx) - 1.0).abs() < 1e-12);
                assert!(grid.get(-1, dx).abs() < 1e-12);
                assert!(grid.get(1, dx).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fft_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (pw, ph, rw, rh) in [(16, 16, 32, 16), (32, 32, 64, 32), (5, 3, 5, 7), (1, 1, 1, 1)] {
            let photo = random_map(&mut rng, pw, ph, 0.4);
            let pano = random_map(&mut rng, rw, rh, 0.4);
            assert_grids_close(
                &compute_vcc_grid(&photo, &pano).unwrap(),
                &vcc_brute_force(&photo, &pano).unwrap(),
                1e-9,
            );
        }
    }

    #[test]
    fn wider_photo_is_rejected() {
        let err = compute_vcc_grid(&EdgeMap::zeros(5, 1), &EdgeMap::zeros(4, 1)).unwrap_err();
        assert_eq!(err, MatchError::PhotoWiderThanPanorama { photo: 5, panorama: 4 });
        assert!(vcc_brute_force(&EdgeMap::zeros(5, 1), &EdgeMap::zeros(4, 1)).is_err());
    }

    #[test]
    fn crop_is_found_at_its_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pano = random_map(&mut rng, 48, 20, 0.3);
        // crop wrapping around the seam
        let (x0, y0, w, h) = (40usize, 6usize, 16usize, 9usize);
        let mut photo = EdgeMap::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                let (r, t) = pano.get((x0 + x) % 48, y0 + y);
                photo.set(x, y, r, t);
            }
        }
        let grid = compute_vcc_grid(&photo, &pano).unwrap();
        let a = best_alignment(&grid, 1.0, 48.0 / 360.0, w).unwrap();
        assert_eq!((a.dx, a.dy), (x0 as i64, y0 as i64));
    }

    #[test]
    fn doubling_photo_strength_quadruples_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let photo = random_map(&mut rng, 8, 6, 0.5).scaled(0.5);
        let pano = random_map(&mut rng, 20, 10, 0.5);
        let g1 = compute_vcc_grid(&photo, &pano).unwrap();
        let g2 = compute_vcc_grid(&photo.scaled(2.0), &pano).unwrap();
        for (a, b) in g1.scores().iter().zip(g2.scores()) {
            assert!((4.0 * a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rotating_panorama_shifts_grid_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let photo = random_map(&mut rng, 7, 5, 0.5);
        let pano = random_map(&mut rng, 24, 8, 0.5);
        let delta = 5usize;
        let mut rotated = EdgeMap::zeros(24, 8);
        for y in 0..8 {
            for x in 0..24 {
                let (r, t) = pano.get(x, y);
                rotated.set((x + delta) % 24, y, r, t);
            }
        }
        let g = compute_vcc_grid(&photo, &pano).unwrap();
        let gr = compute_vcc_grid(&photo, &rotated).unwrap();
        for dy in g.dy_min()..=g.dy_max() {
            for dx in 0..24 {
                assert!((g.get(dy, dx) - gr.get(dy, (dx + delta) % 24)).abs() < 1e-9);
            }
        }
    }
}
