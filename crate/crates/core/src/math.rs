//! Thin wrappers over `libm` so the crate builds without `std`.

pub use core::f64::consts::{FRAC_PI_2, PI, TAU};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn tan(x: f64) -> f64 {
    libm::tan(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a - TAU * floor((a + PI) / TAU);
    if r <= -PI {
        r += TAU;
    }
    if r > PI {
        r -= TAU;
    }
    r
}

/// Solves the dense system `m · x = rhs` in place by Gaussian elimination
/// with partial pivoting. Returns `None` when a pivot falls below `tiny`.
pub fn solve_dense<const N: usize>(
    mut m: [[f64; N]; N],
    mut rhs: [f64; N],
    tiny: f64,
) -> Option<[f64; N]> {
    for col in 0..N {
        let mut piv = col;
        for row in col + 1..N {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if !(m[piv][col].abs() > tiny) {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..N {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..N {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let mut acc = rhs[row];
        for k in row + 1..N {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}
