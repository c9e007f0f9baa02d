//! RGB to hue-saturation-value conversion with the hue carried as a unit
//! vector, so the circular channel can be diffused like any other.
//!
//! The 4-component layout per node is (cos 2*pi*H, sin 2*pi*H, S, V).
//! Achromatic pixels get the hue vector (1, 0).

use crate::error::{Error, Result};
use crate::field::Field;
use std::f64::consts::TAU;

pub fn rgb_to_hsv(rgb: &[f64; 3]) -> [f64; 4] {
    let r = rgb[0].clamp(0.0, 1.0);
    let g = rgb[1].clamp(0.0, 1.0);
    let b = rgb[2].clamp(0.0, 1.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta == 0.0 || s == 0.0 {
        return [1.0, 0.0, s, v];
    }
    let hue_sixths = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let angle = hue_sixths / 6.0 * TAU;
    [angle.cos(), angle.sin(), s, v]
}

pub fn hsv_to_rgb(hsv: &[f64; 4]) -> [f64; 3] {
    let angle = hsv[1].atan2(hsv[0]).rem_euclid(TAU);
    let s = hsv[2].clamp(0.0, 1.0);
    let v = hsv[3].clamp(0.0, 1.0);
    let h = angle / TAU * 6.0;
    let c = v * s;
    let x = c * (1.0 - (h.rem_euclid(2.0) - 1.0).abs());
    let (r1, g1, b1) = match h as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r1 + m, g1 + m, b1 + m]
}

pub fn rgb_to_hsv_field(u: &Field) -> Result<Field> {
    if u.k() != 3 {
        return Err(Error::InvalidParameter("rgb field needs k=3".into()));
    }
    let mut out = Field::zeros(u.grid().clone(), 4);
    for i in 0..u.grid().node_count() {
        let rgb: [f64; 3] = u.node(i).try_into().unwrap();
        out.node_mut(i).copy_from_slice(&rgb_to_hsv(&rgb));
    }
    Ok(out)
}

pub fn hsv_to_rgb_field(u: &Field) -> Result<Field> {
    if u.k() != 4 {
        return Err(Error::InvalidParameter("hsv field needs k=4".into()));
    }
    let mut out = Field::zeros(u.grid().clone(), 3);
    for i in 0..u.grid().node_count() {
        let hsv: [f64; 4] = u.node(i).try_into().unwrap();
        out.node_mut(i).copy_from_slice(&hsv_to_rgb(&hsv));
    }
    Ok(out)
}
