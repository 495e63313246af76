//! Random-walk mobility with reflection at the scenario bounds.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::topology::{Bounds, Point};

/// Draws a velocity with speed ~ U[min, max] and uniform heading.
pub fn draw_velocity(rng: &mut ChaCha8Rng, speed_min: f64, speed_max: f64) -> Point {
    let speed = if speed_max > speed_min { rng.gen_range(speed_min..=speed_max) } else { speed_min };
    let heading = rng.gen_range(0.0..std::f64::consts::TAU);
    Point::new(speed * heading.cos(), speed * heading.sin())
}

/// Advances `pos` by `vel * dt_s`, mirroring position and velocity at the bounds.
pub fn advance(pos: &mut Point, vel: &mut Point, dt_s: f64, bounds: &Bounds) {
    pos.x += vel.x * dt_s;
    pos.y += vel.y * dt_s;
    reflect(&mut pos.x, &mut vel.x, bounds.min.x, bounds.max.x);
    reflect(&mut pos.y, &mut vel.y, bounds.min.y, bounds.max.y);
}

fn reflect(p: &mut f64, v: &mut f64, lo: f64, hi: f64) {
    // Loop handles steps longer than the box width.
    for _ in 0..8 {
        if *p < lo {
            *p = 2.0 * lo - *p;
            *v = v.abs();
        } else if *p > hi {
            *p = 2.0 * hi - *p;
            *v = -v.abs();
        } else {
            return;
        }
    }
    *p = p.clamp(lo, hi);
}
