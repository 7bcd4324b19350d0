//! Smooth exact solution on `[0, pi] x [0, 1]` over `[0, pi] x [-1, 0]` and its forcing.

use std::f64::consts::PI;

use crate::mesh::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactValues {
    pub u_s: [f64; 2],
    pub p_s: f64,
    pub u_d: [f64; 2],
    pub phi_d: f64,
}

/// Exact fields for `K = diag(k11, k22)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    pub k11: f64,
    pub k22: f64,
    pub nu: f64,
}

impl Manufactured {
    pub fn new(k11: f64, k22: f64, nu: f64) -> Self {
        Self { k11, k22, nu }
    }

    pub fn u_s(&self, p: Point) -> [f64; 2] {
        let [x, y] = p;
        let s = (PI * y).sin();
        [
            self.k11 / PI * (2.0 * PI * y).sin() * x.cos(),
            (-2.0 * self.k22 + self.k22 / (PI * PI) * s * s) * x.sin(),
        ]
    }

    /// `grad[c][d] = d u_c / d x_d`.
    pub fn grad_u_s(&self, p: Point) -> [[f64; 2]; 2] {
        let [x, y] = p;
        let s = (PI * y).sin();
        let s2 = (2.0 * PI * y).sin();
        [
            [-self.k11 / PI * s2 * x.sin(), 2.0 * self.k11 * (2.0 * PI * y).cos() * x.cos()],
            [(-2.0 * self.k22 + self.k22 / (PI * PI) * s * s) * x.cos(), self.k22 / PI * s2 * x.sin()],
        ]
    }

    pub fn p_s(&self, _p: Point) -> f64 {
        0.0
    }

    pub fn phi_d(&self, p: Point) -> f64 {
        (p[1].exp() - (-p[1]).exp()) * p[0].sin()
    }

    pub fn u_d(&self, p: Point) -> [f64; 2] {
        let [x, y] = p;
        let (ep, em) = (y.exp(), (-y).exp());
        [-self.k11 * (ep - em) * x.cos(), -self.k22 * (ep + em) * x.sin()]
    }

    pub fn div_u_d(&self, p: Point) -> f64 {
        (self.k11 - self.k22) * self.phi_d(p)
    }

    /// `-div T(u_S, p_S)` with `T = 2 nu D(u) - p I`.
    pub fn f_s(&self, p: Point) -> [f64; 2] {
        let [x, y] = p;
        let (a, b) = (self.k11 / PI, self.k22);
        let c = (self.k22 - self.k11) / PI;
        let (s2, c2) = ((2.0 * PI * y).sin(), (2.0 * PI * y).cos());
        let lap1 = -a * (4.0 * PI * PI + 1.0) * s2 * x.cos();
        let lap2 = 2.0 * b * x.sin() - b / (2.0 * PI * PI) * (1.0 - c2) * x.sin() + 2.0 * b * c2 * x.sin();
        let gd = [c * s2 * x.cos(), 2.0 * PI * c * c2 * x.sin()];
        [-self.nu * (lap1 + gd[0]), -self.nu * (lap2 + gd[1])]
    }

    pub fn f_d(&self, p: Point) -> f64 {
        self.div_u_d(p)
    }
}

pub fn exact_solution(k11: f64, k22: f64, p: Point) -> ExactValues {
    let m = Manufactured::new(k11, k22, 1.0);
    ExactValues { u_s: m.u_s(p), p_s: m.p_s(p), u_d: m.u_d(p), phi_d: m.phi_d(p) }
}

pub fn manufactured_forcing(k11: f64, k22: f64, nu: f64, p: Point) -> ([f64; 2], f64) {
    let m = Manufactured::new(k11, k22, nu);
    (m.f_s(p), m.f_d(p))
}
