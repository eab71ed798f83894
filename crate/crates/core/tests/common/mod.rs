//! Oracles shared by the integration tests. The constants are evaluated
//! directly (not in log space) in 256-bit floating point.

#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};

const PREC: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

/// 256-bit real with just the operations the formulas need.
#[derive(Clone, Debug)]
pub struct Hp(BigFloat);

thread_local! {
    static CC: std::cell::RefCell<Consts> = std::cell::RefCell::new(Consts::new().expect("constants cache"));
}

impl Hp {
    pub fn new(x: f64) -> Self {
        Hp(BigFloat::from_f64(x, PREC))
    }
    pub fn int(x: i64) -> Self {
        Hp::new(x as f64)
    }
    pub fn add(&self, o: &Hp) -> Hp {
        Hp(self.0.add(&o.0, PREC, RM))
    }
    pub fn sub(&self, o: &Hp) -> Hp {
        Hp(self.0.sub(&o.0, PREC, RM))
    }
    pub fn mul(&self, o: &Hp) -> Hp {
        Hp(self.0.mul(&o.0, PREC, RM))
    }
    pub fn div(&self, o: &Hp) -> Hp {
        Hp(self.0.div(&o.0, PREC, RM))
    }
    pub fn pow(&self, e: &Hp) -> Hp {
        CC.with(|cc| Hp(self.0.pow(&e.0, PREC, RM, &mut cc.borrow_mut())))
    }
    pub fn to_f64(&self) -> f64 {
        let s = format!("{}", self.0);
        s.parse().unwrap_or_else(|_| panic!("unparsable big float {s}"))
    }
}

pub fn hp(x: f64) -> Hp {
    Hp::new(x)
}

pub fn theta(p: f64, n: usize) -> f64 {
    let half = hp(0.5);
    let num = hp(p).mul(&half).sub(&half);
    let den = num.add(&Hp::int(1).div(&Hp::int(n as i64)));
    num.div(&den).to_f64()
}

pub fn c1(p: f64, rho: f64, alpha: f64, chi: f64, gamma: f64, xi: f64, omega: f64) -> f64 {
    let (p, rho) = (hp(p), hp(rho));
    let one = Hp::int(1);
    let ac = hp(alpha).mul(&hp(chi));
    let pre = ac.mul(&p.sub(&one)).mul(&one.sub(&rho)).div(&p.add(&one));
    let base = p.add(&one).mul(&hp(gamma)).mul(&hp(xi)).div(&Hp::int(3).mul(&p.add(&rho)).mul(&ac));
    let expo = p.add(&rho).div(&rho.sub(&one));
    pre.mul(&base.pow(&expo)).mul(&hp(omega)).to_f64()
}

/// `(σ, ĉ, η, c̃)`
pub fn ehrling(p: f64, gamma: f64, xi: f64, delta: f64, c_e: f64) -> (f64, f64, f64, f64) {
    let (p, g, x, d) = (hp(p), hp(gamma), hp(xi), hp(delta));
    let one = Hp::int(1);
    let pm1 = p.sub(&one);
    let pp1 = p.add(&one);
    let sigma = g.mul(&x).mul(&pm1).div(&Hp::int(3));
    let c_hat = x.mul(&d).mul(&pm1).div(&pp1).div(&pp1.mul(&g).div(&Hp::int(3).mul(&p).mul(&d)).pow(&p));
    let k = g.mul(&pp1).div(&Hp::int(4)).pow(&pp1).mul(&c_hat).div(&p);
    let eta = sigma.div(&Hp::int(2).mul(&sigma).add(&k));
    let c_tilde = g.div(&d).pow(&pp1).mul(&c_hat.add(&Hp::int(2).mul(&sigma).div(&k))).mul(&hp(c_e));
    (sigma.to_f64(), c_hat.to_f64(), eta.to_f64(), c_tilde.to_f64())
}

pub fn c_star(p: f64, n: usize, m: f64, c_gn: f64) -> f64 {
    let th = {
        let half = hp(0.5);
        let num = hp(p).mul(&half).sub(&half);
        num.div(&num.add(&Hp::int(1).div(&Hp::int(n as i64))))
    };
    let one = Hp::int(1);
    let mp = hp(m).pow(&hp(p));
    let c2 = hp(c_gn).mul(&hp(c_gn));
    let base = Hp::int(2).mul(&hp(p).sub(&one)).div(&hp(p).mul(&th).mul(&c2));
    let inner = one.sub(&th).mul(&mp).mul(&base.pow(&th.div(&th.sub(&one)))).add(&one);
    Hp::int(2).mul(&mp).mul(&c2).mul(&inner).to_f64()
}

/// `(c̄, c_*)`
pub fn cbar_and_total(c1: f64, c_tilde: f64, m: f64, p: f64, c_star: f64) -> (f64, f64) {
    let cbar = hp(c1).add(&hp(c_tilde).mul(&hp(m).pow(&hp(p + 1.0))));
    (cbar.to_f64(), cbar.add(&hp(c_star)).to_f64())
}

/// Compensated sum.
pub fn kahan_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let y = x - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}
