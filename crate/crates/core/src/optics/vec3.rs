use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            self
        }
    }

    pub fn abs(self) -> Vec3 {
        Vec3::new(self.x.abs(), self.y.abs(), self.z.abs())
    }

    pub fn max_scalar(self, s: f64) -> Vec3 {
        Vec3::new(self.x.max(s), self.y.max(s), self.z.max(s))
    }

    pub fn max_comp(self) -> f64 {
        self.x.max(self.y).max(self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self * -1.0
    }
}

/// Row-major 3×3 rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    /// `Rz(c)·Ry(b)·Rx(a)` for Euler angles in radians.
    pub fn from_euler(a: f64, b: f64, c: f64) -> Self {
        let (sa, ca) = a.sin_cos();
        let (sb, cb) = b.sin_cos();
        let (sc, cc) = c.sin_cos();
        let rx = Mat3([[1.0, 0.0, 0.0], [0.0, ca, -sa], [0.0, sa, ca]]);
        let ry = Mat3([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]]);
        let rz = Mat3([[cc, -sc, 0.0], [sc, cc, 0.0], [0.0, 0.0, 1.0]]);
        rz.mul(&ry).mul(&rx)
    }

    /// Rotation taking unit vector `from` onto unit vector `to` (Rodrigues).
    pub fn aligning(from: Vec3, to: Vec3) -> Self {
        let v = Vec3::new(
            from.y * to.z - from.z * to.y,
            from.z * to.x - from.x * to.z,
            from.x * to.y - from.y * to.x,
        );
        let c = from.dot(to);
        if (1.0 + c).abs() < 1e-12 {
            return Mat3([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]);
        }
        let k = 1.0 / (1.0 + c);
        Mat3([
            [v.x * v.x * k + c, v.x * v.y * k - v.z, v.x * v.z * k + v.y],
            [v.y * v.x * k + v.z, v.y * v.y * k + c, v.y * v.z * k - v.x],
            [v.z * v.x * k - v.y, v.z * v.y * k + v.x, v.z * v.z * k + c],
        ])
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(r)
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }
}
