//! Independent oracles: truncated Taylor arithmetic for the exact cosine
//! graph and adaptive Simpson quadrature.
#![allow(dead_code)]

pub const ORDER: usize = 14;

/// Truncated power series in a local variable.
#[derive(Clone, Debug)]
pub struct Jet(pub Vec<f64>);

impl Jet {
    pub fn constant(c: f64) -> Self {
        let mut v = vec![0.0; ORDER];
        v[0] = c;
        Jet(v)
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet(self.0.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let mut r = vec![0.0; ORDER];
        for i in 0..ORDER {
            for j in 0..ORDER - i {
                r[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(r)
    }

    /// `self^p` for a positive constant term.
    pub fn powf(&self, p: f64) -> Jet {
        let a = &self.0;
        let mut b = vec![0.0; ORDER];
        b[0] = a[0].powf(p);
        for j in 1..ORDER {
            let s: f64 = (1..=j)
                .map(|i| (p * i as f64 - (j - i) as f64) * a[i] * b[j - i])
                .sum();
            b[j] = s / (j as f64 * a[0]);
        }
        Jet(b)
    }

    pub fn deriv(&self) -> Jet {
        let mut r = vec![0.0; ORDER];
        for j in 1..ORDER {
            r[j - 1] = j as f64 * self.0[j];
        }
        Jet(r)
    }

    pub fn integral(&self) -> Jet {
        let mut r = vec![0.0; ORDER];
        for j in 0..ORDER - 1 {
            r[j + 1] = self.0[j] / (j + 1) as f64;
        }
        Jet(r)
    }

    /// `self(g(·))` for `g` without constant term.
    pub fn compose(&self, g: &Jet) -> Jet {
        assert_eq!(g.0[0], 0.0);
        let mut r = Jet::constant(self.0[ORDER - 1]);
        for j in (0..ORDER - 1).rev() {
            r = r.mul(g).add(&Jet::constant(self.0[j]));
        }
        r
    }

    /// Functional inverse of a series with zero constant and nonzero linear term.
    pub fn reverse(&self) -> Jet {
        let s1 = self.0[1];
        let mut higher = self.clone();
        higher.0[1] = 0.0;
        let mut ident = vec![0.0; ORDER];
        ident[1] = 1.0;
        let ident = Jet(ident);
        let mut t = ident.scale(1.0 / s1);
        for _ in 0..ORDER {
            t = ident.add(&higher.compose(&t).scale(-1.0)).scale(1.0 / s1);
        }
        t
    }

    /// `j`-th derivative at the expansion point.
    pub fn derivative_at(&self, j: usize) -> f64 {
        self.0[j] * (1..=j).product::<usize>() as f64
    }
}

/// `y = A cos(mπ(x − a)/(b − a))` over `[a, b]`.
#[derive(Clone, Copy, Debug)]
pub struct CosineGraph {
    pub amplitude: f64,
    pub mode: u32,
    pub a: f64,
    pub b: f64,
}

impl CosineGraph {
    pub fn standard(amplitude: f64, mode: u32) -> Self {
        Self { amplitude, mode, a: -1.0, b: 1.0 }
    }

    fn freq(&self) -> f64 {
        self.mode as f64 * std::f64::consts::PI / (self.b - self.a)
    }

    pub fn y(&self, x: f64) -> f64 {
        self.amplitude * (self.freq() * (x - self.a)).cos()
    }

    pub fn speed(&self, x: f64) -> f64 {
        let w = self.freq();
        let dy = -self.amplitude * w * (w * (x - self.a)).sin();
        (1.0 + dy * dy).sqrt()
    }

    /// Taylor series of y about `x0`.
    pub fn y_jet(&self, x0: f64) -> Jet {
        let w = self.freq();
        let phase = w * (x0 - self.a);
        let mut c = vec![0.0; ORDER];
        let mut fact = 1.0;
        for (j, cj) in c.iter_mut().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            let d = match j % 4 {
                0 => phase.cos(),
                1 => -phase.sin(),
                2 => -phase.cos(),
                _ => phase.sin(),
            };
            *cj = self.amplitude * w.powi(j as i32) * d / fact;
        }
        Jet(c)
    }

    /// `[k, k_s, k_ss, k_sss, k_s⁴, k_s⁵]` at the graph point above `x0`,
    /// with `k = dθ/ds` for the left-to-right orientation.
    pub fn curvature_jet(&self, x0: f64) -> [f64; 6] {
        let y = self.y_jet(x0);
        let dy = y.deriv();
        let ddy = dy.deriv();
        let q = Jet::constant(1.0).add(&dy.mul(&dy));
        let k = ddy.mul(&q.powf(-1.5));
        let s = q.powf(0.5).integral();
        let ks = k.compose(&s.reverse());
        std::array::from_fn(|j| ks.derivative_at(j))
    }
}

pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Gauss-Legendre quadrature with `panels` equal panels of 8 points each.
pub fn gauss_panels(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * width;
            let half = 0.5 * width;
            X.iter()
                .zip(W)
                .map(|(x, w)| w * (f(mid - half * x) + f(mid + half * x)))
                .sum::<f64>()
                * half
        })
        .sum()
}
