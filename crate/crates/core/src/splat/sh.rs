use nalgebra::Vector3;

use crate::Real;

/// Real spherical harmonic normalization constants, bands 0 through 3.
pub const SH_C0: f64 = 0.282_094_791_773_878_14;
pub const SH_C1: f64 = 0.488_602_511_902_919_9;
pub const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
pub const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Number of basis functions per channel for SH degree `degree`.
pub const fn sh_coefficient_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// Evaluates the SH expansion along `dir` and adds the 0.5 offset; bands beyond the
/// supplied coefficient count are treated as zero.
pub(crate) fn eval_sh<T: Real>(sh: &[[T; 3]], dir: &Vector3<T>) -> Vector3<T> {
    let coef = |k: usize| -> Vector3<T> {
        sh.get(k).map(|c| Vector3::new(c[0], c[1], c[2])).unwrap_or_else(Vector3::zeros)
    };
    let c = T::lit;
    let mut result = coef(0) * c(SH_C0);

    if sh.len() > 1 {
        let (x, y, z) = (dir.x, dir.y, dir.z);
        result += coef(1) * (-c(SH_C1) * y) + coef(2) * (c(SH_C1) * z) - coef(3) * (c(SH_C1) * x);

        if sh.len() > 4 {
            let (xx, yy, zz) = (x * x, y * y, z * z);
            let (xy, yz, xz) = (x * y, y * z, x * z);
            result += coef(4) * (c(SH_C2[0]) * xy)
                + coef(5) * (c(SH_C2[1]) * yz)
                + coef(6) * (c(SH_C2[2]) * (c(2.0) * zz - xx - yy))
                + coef(7) * (c(SH_C2[3]) * xz)
                + coef(8) * (c(SH_C2[4]) * (xx - yy));

            if sh.len() > 9 {
                result += coef(9) * (c(SH_C3[0]) * y * (c(3.0) * xx - yy))
                    + coef(10) * (c(SH_C3[1]) * xy * z)
                    + coef(11) * (c(SH_C3[2]) * y * (c(4.0) * zz - xx - yy))
                    + coef(12) * (c(SH_C3[3]) * z * (c(2.0) * zz - c(3.0) * xx - c(3.0) * yy))
                    + coef(13) * (c(SH_C3[4]) * x * (c(4.0) * zz - xx - yy))
                    + coef(14) * (c(SH_C3[5]) * z * (xx - yy))
                    + coef(15) * (c(SH_C3[6]) * x * (xx - c(3.0) * yy));
            }
        }
    }
    result.add_scalar(c(0.5))
}
