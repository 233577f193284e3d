//! Second-stage re-scoring of the best VCC candidates.
//!
//! Both maps are binarized, the panorama edges are grown into a band of
//! radius `neighborhood_radius`, and the photo edges that fall inside the
//! band at a candidate offset are grouped into clusters. Each cluster of
//! `l` pixels scores `l^a`, except short clusters that cross the band from
//! one side to the other, which cost `c`.

use std::collections::VecDeque;

use super::{Alignment, MatchError, ScoreGrid};
use crate::edges::EdgeMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustConfig {
    /// Exponent `a` on the cluster length.
    pub exponent: f64,
    /// Penalty `c` for a short crossing cluster.
    pub penalty: f64,
    /// Crossing clusters shorter than this are penalized.
    pub fit_length: f64,
    /// Radius of the band grown around panorama edges.
    pub neighborhood_radius: usize,
    /// Pixels closer than this belong to the same cluster.
    pub cluster_distance: f64,
    /// Number of grid maxima to re-score.
    pub top_n: usize,
}

impl Default for RobustConfig {
    fn default() -> Self {
        Self {
            exponent: 2.0,
            penalty: 5.0,
            fit_length: 3.0,
            neighborhood_radius: 2,
            cluster_distance: 2.0,
            top_n: 10,
        }
    }
}

const NMS_RADIUS: i64 = 5;

/// Up to `n` positive local maxima of the grid, best first, at least
/// [`NMS_RADIUS`] pixels apart (horizontal distance measured on the cylinder).
pub fn top_candidates(grid: &ScoreGrid, n: usize) -> Vec<(i64, i64, f64)> {
    let w = grid.width() as i64;
    let mut order: Vec<usize> = (0..grid.scores().len())
        .filter(|&i| grid.scores()[i] > 0.0)
        .collect();
    // stable sort keeps row-major order among equal scores
    order.sort_by(|&a, &b| grid.scores()[b].total_cmp(&grid.scores()[a]));

    let mut picked: Vec<(i64, i64, f64)> = Vec::new();
    for i in order {
        if picked.len() == n {
            break;
        }
        let dy = grid.dy_min() + (i / grid.width()) as i64;
        let dx = (i % grid.width()) as i64;
        let suppressed = picked.iter().any(|&(px, py, _)| {
            let hx = (dx - px).rem_euclid(w);
            let hx = hx.min(w - hx);
            hx * hx + (dy - py) * (dy - py) <= NMS_RADIUS * NMS_RADIUS
        });
        if !suppressed {
            picked.push((dx, dy, grid.scores()[i]));
        }
    }
    picked
}

/// Panorama edges grown by a disc of radius `r`, wrapping horizontally.
fn dilate(pano: &EdgeMap, r: usize) -> Vec<bool> {
    let (w, h) = (pano.width(), pano.height());
    let r = r as i64;
    let disc: Vec<(i64, i64)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|(dx, dy)| dx * dx + dy * dy <= r * r)
        .collect();
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if pano.get(x, y).0 <= 0.0 {
                continue;
            }
            for &(ox, oy) in &disc {
                let ny = y as i64 + oy;
                if ny < 0 || ny >= h as i64 {
                    continue;
                }
                let nx = (x as i64 + ox).rem_euclid(w as i64) as usize;
                out[ny as usize * w + nx] = true;
            }
        }
    }
    out
}

struct Band<'a> {
    pano: &'a EdgeMap,
    mask: Vec<bool>,
    radius: usize,
}

impl Band<'_> {
    fn contains(&self, x: i64, y: i64) -> bool {
        if y < 0 || y >= self.pano.height() as i64 {
            return false;
        }
        let w = self.pano.width() as i64;
        self.mask[y as usize * self.pano.width() + x.rem_euclid(w) as usize]
    }

    /// +1 if the panorama pixel lies below the nearest edge in its column,
    /// -1 if above, 0 if no edge is close enough to decide.
    fn side(&self, x: i64, y: i64) -> i8 {
        let w = self.pano.width() as i64;
        let col = x.rem_euclid(w) as usize;
        let reach = self.radius as i64 + 3;
        for k in 1..=reach {
            let up = y - k;
            let down = y + k;
            let hit_up = up >= 0 && (up as usize) < self.pano.height() && self.pano.get(col, up as usize).0 > 0.0;
            let hit_down = down >= 0 && (down as usize) < self.pano.height() && self.pano.get(col, down as usize).0 > 0.0;
            match (hit_up, hit_down) {
                (true, false) => return 1,
                (false, true) => return -1,
                _ => {}
            }
        }
        0
    }
}

fn robust_score_in_band(photo: &EdgeMap, band: &Band<'_>, dx: i64, dy: i64, cfg: &RobustConfig) -> f64 {
    let (w, h) = (photo.width(), photo.height());
    let on_photo = |x: i64, y: i64| {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && photo.get(x as usize, y as usize).0 > 0.0
    };
    let inside = |x: i64, y: i64| on_photo(x, y) && band.contains(x + dx, y + dy);

    let d = cfg.cluster_distance;
    let reach = d.ceil() as i64;
    let linkage: Vec<(i64, i64)> = (-reach..=reach)
        .flat_map(|oy| (-reach..=reach).map(move |ox| (ox, oy)))
        .filter(|&(ox, oy)| (ox, oy) != (0, 0) && ((ox * ox + oy * oy) as f64) < d * d)
        .collect();

    let mut seen = vec![false; w * h];
    let mut total = 0.0;
    for y0 in 0..h as i64 {
        for x0 in 0..w as i64 {
            if seen[y0 as usize * w + x0 as usize] || !inside(x0, y0) {
                continue;
            }
            let mut queue = VecDeque::from([(x0, y0)]);
            seen[y0 as usize * w + x0 as usize] = true;
            let mut length = 0usize;
            let (mut above, mut below) = (false, false);
            while let Some((x, y)) = queue.pop_front() {
                length += 1;
                for &(ox, oy) in &linkage {
                    let (nx, ny) = (x + ox, y + oy);
                    if inside(nx, ny) {
                        let i = ny as usize * w + nx as usize;
                        if !seen[i] {
                            seen[i] = true;
                            queue.push_back((nx, ny));
                        }
                    }
                }
                // photo edge pixels leaving the band next to this cluster
                for oy in -1..=1 {
                    for ox in -1..=1 {
                        let (nx, ny) = (x + ox, y + oy);
                        if on_photo(nx, ny) && !band.contains(nx + dx, ny + dy) {
                            match band.side(nx + dx, ny + dy) {
                                1 => below = true,
                                -1 => above = true,
                                _ => {}
                            }
                        }
                    }
                }
            }
            let l = length as f64;
            total += if above && below && l < cfg.fit_length {
                -cfg.penalty
            } else {
                l.powf(cfg.exponent)
            };
        }
    }
    total
}

/// Robust score of the photo placed at offset `(dx, dy)`.
pub fn robust_score(photo: &EdgeMap, pano: &EdgeMap, dx: i64, dy: i64, cfg: &RobustConfig) -> f64 {
    let band = Band {
        pano,
        mask: dilate(pano, cfg.neighborhood_radius),
        radius: cfg.neighborhood_radius,
    };
    robust_score_in_band(photo, &band, dx, dy, cfg)
}

/// Re-scores the `top_n` VCC maxima and returns the one with the highest
/// robust score. The returned alignment keeps the candidate's VCC score.
pub fn robust_rescore(
    photo: &EdgeMap,
    pano: &EdgeMap,
    grid: &ScoreGrid,
    cfg: &RobustConfig,
    scale: f64,
    pano_q: f64,
) -> Result<Alignment, MatchError> {
    let candidates = top_candidates(grid, cfg.top_n.max(1));
    if candidates.is_empty() {
        return Err(MatchError::NoCandidates);
    }
    let band = Band {
        pano,
        mask: dilate(pano, cfg.neighborhood_radius),
        radius: cfg.neighborhood_radius,
    };
    let mut best = candidates[0];
    let mut best_score = f64::NEG_INFINITY;
    for &(dx, dy, vcc) in &candidates {
        let s = robust_score_in_band(photo, &band, dx, dy, cfg);
        if s > best_score {
            best_score = s;
            best = (dx, dy, vcc);
        }
    }
    Ok(Alignment::from_offsets(best.0, best.1, scale, best.2, pano_q, photo.width()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{best_alignment, compute_vcc_grid};
    use std::f64::consts::FRAC_PI_2;

    fn hline(m: &mut EdgeMap, y: usize, x0: usize, len: usize) {
        for x in x0..x0 + len {
            m.set(x, y, 1.0, 0.0);
        }
    }

    #[test]
    fn straight_overlap_scores_length_squared() {
        let mut pano = EdgeMap::zeros(60, 20);
        hline(&mut pano, 10, 5, 30);
        let mut photo = EdgeMap::zeros(30, 8);
        hline(&mut photo, 4, 0, 12);
        // photo row 4 lands on panorama row 10 with dy = 6
        let s = robust_score(&photo, &pano, 10, 6, &RobustConfig::default());
        assert_eq!(s, 144.0);
    }

    #[test]
    fn short_crossing_cluster_is_penalized() {
        let mut pano = EdgeMap::zeros(40, 21);
        hline(&mut pano, 10, 0, 40);
        let mut photo = EdgeMap::zeros(10, 21);
        for y in 3..18 {
            photo.set(5, y, 1.0, FRAC_PI_2);
        }
        let cfg = RobustConfig {
            fit_length: 10.0,
            ..RobustConfig::default()
        };
        // band covers rows 8..=12: five pixels inside, exits above and below
        assert_eq!(robust_score(&photo, &pano, 0, 0, &cfg), -5.0);
        // the same cluster is rewarded once it is long enough
        assert_eq!(robust_score(&photo, &pano, 0, 0, &RobustConfig::default()), 25.0);
    }

    #[test]
    fn single_candidate_keeps_vcc_argmax() {
        let mut pano = EdgeMap::zeros(50, 16);
        hline(&mut pano, 5, 3, 20);
        for y in 2..12 {
            pano.set(35, y, 0.8, FRAC_PI_2);
        }
        let grid = compute_vcc_grid(&pano, &pano).unwrap();
        let cfg = RobustConfig {
            top_n: 1,
            ..RobustConfig::default()
        };
        let vcc = best_alignment(&grid, 1.0, 50.0 / 360.0, 50).unwrap();
        let robust = robust_rescore(&pano, &pano, &grid, &cfg, 1.0, 50.0 / 360.0).unwrap();
        assert_eq!((robust.dx, robust.dy), (vcc.dx, vcc.dy));
        assert_eq!((robust.dx, robust.dy), (0, 0));
    }

    #[test]
    fn all_zero_grid_has_no_candidates() {
        let grid = ScoreGrid::new(4, 2, -1, vec![0.0; 8]);
        let e = EdgeMap::zeros(2, 1);
        assert_eq!(
            robust_rescore(&e, &e, &grid, &RobustConfig::default(), 1.0, 1.0),
            Err(MatchError::NoCandidates)
        );
    }

    #[test]
    fn candidates_are_separated() {
        let mut scores = vec![0.0; 100];
        scores[3] = 5.0;
        scores[4] = 4.0;
        scores[10 * 9 + 9] = 3.0;
        let grid = ScoreGrid::new(10, 10, 0, scores);
        let c = top_candidates(&grid, 5);
        assert_eq!(c, vec![(3, 0, 5.0), (9, 9, 3.0)]);
    }

    /// Rank-1 VCC peak comes from many scattered dots, rank-2 from one long
    /// contiguous ridge; the robust stage must prefer the ridge.
    #[test]
    fn long_contiguous_overlap_beats_scattered_noise() {
        let (w, h) = (200, 40);
        let mut pano = EdgeMap::zeros(w, h);
        hline(&mut pano, 20, 10, 40);
        let mut dots = Vec::new();
        for gy in 0..8 {
            for gx in 0..8 {
                dots.push((120 + 3 * gx, 8 + 3 * gy));
            }
        }
        for &(x, y) in &dots {
            pano.set(x, y, 1.0, 0.0);
        }

        // photo: the ridge at (0, 10) and the dot grid at (60, 2), i.e. the
        // dots align when dx = 60 while the ridge aligns when dx = 10
        let mut photo = EdgeMap::zeros(90, 30);
        hline(&mut photo, 14, 0, 40);
        for &(x, y) in &dots {
            photo.set(x - 60, y - 6, 1.0, 0.0);
        }
        // ridge: photo (x, 14) -> pano (x + 10, 20) -> dx = 10, dy = 6
        // dots: photo (x - 60, y - 6) -> pano (x, y) -> dx = 60, dy = 6
        let grid = compute_vcc_grid(&photo, &pano).unwrap();
        let cands = top_candidates(&grid, 10);
        assert_eq!((cands[0].0, cands[0].1), (60, 6), "{cands:?}");
        assert!(cands.iter().any(|c| (c.0, c.1) == (10, 6)));

        let cfg = RobustConfig::default();
        let noise = robust_score(&photo, &pano, 60, 6, &cfg);
        let truth = robust_score(&photo, &pano, 10, 6, &cfg);
        assert_eq!(truth, 1600.0);
        assert_eq!(noise, 64.0);

        let picked = robust_rescore(&photo, &pano, &grid, &cfg, 1.0, w as f64 / 360.0).unwrap();
        assert_eq!((picked.dx, picked.dy), (10, 6));
    }
}
