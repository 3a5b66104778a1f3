use crate::tape::Op;
use crate::{Result, Scalar, Tape, Tensor, TensorError, Var};

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

pub(crate) fn gelu<T: Scalar>(x: T) -> T {
    let x3 = x * x * x;
    let t = (T::of(GELU_C) * (x + T::of(GELU_A) * x3)).tanh();
    T::of(0.5) * x * (T::one() + t)
}

pub(crate) fn gelu_grad<T: Scalar>(x: T) -> T {
    let c = T::of(GELU_C);
    let a = T::of(GELU_A);
    let t = (c * (x + a * x * x * x)).tanh();
    let half = T::of(0.5);
    half * (T::one() + t) + half * x * (T::one() - t * t) * c * (T::one() + T::of(3.0) * a * x * x)
}

#[derive(Clone, Copy)]
enum Bcast {
    Same,
    Rhs,
    Lhs,
}

fn is_suffix(short: &[usize], long: &[usize]) -> bool {
    short.len() <= long.len() && long[long.len() - short.len()..] == *short
}

impl<T: Scalar> Tape<T> {
    fn binary(
        &mut self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(T, T) -> T,
        make: impl FnOnce(Var, Var) -> Op<T>,
    ) -> Result<Var> {
        let (da, db) = (self.dims(a), self.dims(b));
        let bc = if da == db {
            Bcast::Same
        } else if is_suffix(db, da) {
            Bcast::Rhs
        } else if is_suffix(da, db) {
            Bcast::Lhs
        } else {
            return Err(TensorError::shape(op, da, db));
        };
        let out_dims = match bc {
            Bcast::Lhs => db.to_vec(),
            _ => da.to_vec(),
        };
        let (xa, xb) = (self.data(a), self.data(b));
        let data: Vec<T> = match bc {
            Bcast::Same => xa.iter().zip(xb).map(|(&p, &q)| f(p, q)).collect(),
            Bcast::Rhs => {
                let n = xb.len();
                xa.chunks(n.max(1))
                    .flat_map(|ch| ch.iter().zip(xb).map(|(&p, &q)| f(p, q)))
                    .collect()
            }
            Bcast::Lhs => {
                let n = xa.len();
                xb.chunks(n.max(1))
                    .flat_map(|ch| xa.iter().zip(ch).map(|(&p, &q)| f(p, q)))
                    .collect()
            }
        };
        let value = Tensor::new(out_dims, data)?;
        Ok(self.push(value, make(a, b), &[a, b]))
    }

    /// Elementwise sum; either operand may repeat over the other's leading axes.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |p, q| p + q, Op::Add)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |p, q| p - q, Op::Sub)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |p, q| p * q, Op::Mul)
    }

    fn unary(&mut self, x: Var, f: impl Fn(T) -> T, op: Op<T>) -> Var {
        let v = self.value(x);
        let data = v.data().iter().map(|&p| f(p)).collect();
        let value = Tensor::new(v.dims().to_vec(), data).unwrap();
        self.push(value, op, &[x])
    }

    pub fn scale(&mut self, x: Var, s: T) -> Var {
        self.unary(x, |p| p * s, Op::Scale(x, s))
    }

    pub fn neg(&mut self, x: Var) -> Var {
        self.scale(x, -T::one())
    }

    pub fn add_scalar(&mut self, x: Var, s: T) -> Var {
        self.unary(x, |p| p + s, Op::AddScalar(x))
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        self.unary(x, gelu, Op::Gelu(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, |p| if p > T::zero() { p } else { T::zero() }, Op::Relu(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.unary(x, |p| p.exp(), Op::Exp(x))
    }

    pub fn log(&mut self, x: Var) -> Result<Var> {
        if let Some(bad) = self.data(x).iter().find(|p| **p < T::zero() || p.is_nan()) {
            return Err(TensorError::Domain {
                op: "log",
                detail: format!("value {:?}", bad),
            });
        }
        Ok(self.unary(x, |p| p.ln(), Op::Log(x)))
    }

    pub fn sqrt(&mut self, x: Var) -> Result<Var> {
        if let Some(bad) = self.data(x).iter().find(|p| **p < T::zero() || p.is_nan()) {
            return Err(TensorError::Domain {
                op: "sqrt",
                detail: format!("value {:?}", bad),
            });
        }
        Ok(self.unary(x, |p| p.sqrt(), Op::Sqrt(x)))
    }
}
