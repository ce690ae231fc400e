//! Minimal line plots: one series per PNG, autoscaled, no text.

use std::path::Path;

use anyhow::{Context, Result};
use image::{Rgb, RgbImage};

const WIDTH: u32 = 800;
const HEIGHT: u32 = 500;
const MARGIN: u32 = 40;

const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);
const FRAME: Rgb<u8> = Rgb([90, 90, 90]);
const GRID: Rgb<u8> = Rgb([225, 225, 225]);
const TRACE: Rgb<u8> = Rgb([20, 70, 170]);

fn range(v: &[f64]) -> (f64, f64) {
    let (lo, hi) = v
        .iter()
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), colour: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, colour);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Renders `ys` against `xs`. Non-finite points break the trace.
pub fn render(xs: &[f64], ys: &[f64]) -> RgbImage {
    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, BACKGROUND);
    let (x_lo, x_hi) = range(xs);
    let (y_lo, y_hi) = range(ys);
    let (left, right) = (MARGIN as f64, (WIDTH - MARGIN) as f64);
    let (top, bottom) = (MARGIN as f64, (HEIGHT - MARGIN) as f64);
    let px = |x: f64| (left + (x - x_lo) / (x_hi - x_lo) * (right - left)).round() as i64;
    let py = |y: f64| (bottom - (y - y_lo) / (y_hi - y_lo) * (bottom - top)).round() as i64;

    for k in 1..10 {
        let gx = (left + (right - left) * k as f64 / 10.0) as i64;
        let gy = (top + (bottom - top) * k as f64 / 10.0) as i64;
        line(&mut img, (gx, top as i64), (gx, bottom as i64), GRID);
        line(&mut img, (left as i64, gy), (right as i64, gy), GRID);
    }
    if y_lo < 0.0 && y_hi > 0.0 {
        line(&mut img, (left as i64, py(0.0)), (right as i64, py(0.0)), FRAME);
    }
    let corners = [
        (left as i64, top as i64),
        (right as i64, top as i64),
        (right as i64, bottom as i64),
        (left as i64, bottom as i64),
    ];
    for k in 0..4 {
        line(&mut img, corners[k], corners[(k + 1) % 4], FRAME);
    }

    let mut prev: Option<(i64, i64)> = None;
    for (&x, &y) in xs.iter().zip(ys) {
        if !(x.is_finite() && y.is_finite()) {
            prev = None;
            continue;
        }
        let p = (px(x), py(y));
        match prev {
            Some(q) if q == p => {}
            Some(q) => line(&mut img, q, p, TRACE),
            None => line(&mut img, p, p, TRACE),
        }
        prev = Some(p);
    }
    img
}

pub fn save(path: &Path, xs: &[f64], ys: &[f64]) -> Result<()> {
    render(xs, ys).save(path).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_spans_the_plot_area() {
        let xs: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let img = render(&xs, &ys);
        let traced: Vec<(u32, u32)> = img.enumerate_pixels().filter(|(_, _, p)| **p == TRACE).map(|(x, y, _)| (x, y)).collect();
        let min_x = traced.iter().map(|p| p.0).min().unwrap();
        let max_x = traced.iter().map(|p| p.0).max().unwrap();
        assert!(min_x < MARGIN + 40 && max_x > WIDTH - MARGIN - 40);
        // parabola: left end low, right end high
        let left_y = traced.iter().filter(|p| p.0 == min_x).map(|p| p.1).max().unwrap();
        let right_y = traced.iter().filter(|p| p.0 == max_x).map(|p| p.1).min().unwrap();
        assert!(left_y > right_y);
    }

    #[test]
    fn constant_and_empty_series_render() {
        render(&[0.0, 1.0, 2.0], &[3.0, 3.0, 3.0]);
        render(&[], &[]);
        render(&[0.0, 1.0], &[f64::NAN, 0.0]);
    }
}
