//! Named families of states.

use std::fmt;
use std::path::PathBuf;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::io::read_state;
use crate::measurements::bell_state;
use crate::tensor::{pure_to_density, DensityMatrix, HermitianOperator, HilbertSpec, PureState, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateSpec {
    /// `(1-q) I/d² + q |B_1><B_1|`.
    Werner { d: usize, q: f64 },
    /// Fidelity `f` with `|B_1>`, the rest spread evenly over the other
    /// Bell states.
    Isotropic { d: usize, f: f64 },
    /// `(1/sqrt d) Σ_j |j>^{⊗n}`.
    Ghz { n: usize, d: usize },
    /// Equal superposition of the `n` single-excitation qubit states.
    Wstate { n: usize },
    MaximallyMixed { dims: Vec<usize> },
    /// Computational basis state with the given digits.
    Basis { dims: Vec<usize>, digits: Vec<usize> },
    Product { parts: Vec<StateSpec> },
    Mixture { parts: Vec<(f64, StateSpec)> },
    File { path: PathBuf },
}

/// `(syntax, description)` for every state family.
pub const STATE_CATALOG: &[(&str, &str)] = &[
    ("werner(d, q)", "(1-q) I/d^2 + q |B1><B1| on two qudits, q in [0,1]"),
    ("isotropic(d, f)", "fidelity f with |B1>, remaining weight uniform on the other Bell states"),
    ("ghz(n, d)", "(1/sqrt d) sum_j |j...j> on n qudits"),
    ("wstate(n)", "equal superposition of single-excitation states of n qubits"),
    ("mixed(d1, d2, ...)", "maximally mixed state"),
    ("basis(d1, ..., dn, i1, ..., in)", "computational basis state |i1...in>"),
    ("a * b", "tensor product of two states"),
    ("mixture(w1, s1, w2, s2, ...)", "convex combination, weights summing to 1"),
    ("path/to/state.json", "density matrix file {dims, matrix}"),
];

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("local dimension must be at least 2, got {d}")));
    }
    Ok(())
}

impl StateSpec {
    /// Parses the expression form, or treats the text as a file path.
    pub fn parse(s: &str) -> Result<StateSpec> {
        if expr::looks_like_expr(s) {
            Self::from_expr(&expr::parse(s)?)
        } else {
            Ok(StateSpec::File { path: PathBuf::from(s.trim()) })
        }
    }

    fn from_expr(e: &Expr) -> Result<StateSpec> {
        let (name, args) = match e {
            Expr::Product(parts) => {
                return Ok(StateSpec::Product { parts: parts.iter().map(Self::from_expr).collect::<Result<_>>()? })
            }
            Expr::Num(v) => return Err(Error::InvalidParameter(format!("expected a state, got number {v}"))),
            Expr::Call { name, args } => (name.as_str(), args),
        };
        let arity = |n: usize| -> Result<()> {
            if args.len() != n {
                return Err(Error::InvalidParameter(format!("{name} takes {n} arguments, got {}", args.len())));
            }
            Ok(())
        };
        let spec = match name {
            "werner" => {
                arity(2)?;
                StateSpec::Werner { d: args[0].as_usize()?, q: args[1].as_num()? }
            }
            "isotropic" => {
                arity(2)?;
                StateSpec::Isotropic { d: args[0].as_usize()?, f: args[1].as_num()? }
            }
            "ghz" => {
                arity(2)?;
                StateSpec::Ghz { n: args[0].as_usize()?, d: args[1].as_usize()? }
            }
            "wstate" | "w" => {
                arity(1)?;
                StateSpec::Wstate { n: args[0].as_usize()? }
            }
            "mixed" | "maximally-mixed" => StateSpec::MaximallyMixed {
                dims: args.iter().map(Expr::as_usize).collect::<Result<_>>()?,
            },
            "basis" => {
                if args.is_empty() || args.len() % 2 != 0 {
                    return Err(Error::InvalidParameter("basis takes dims followed by digits".into()));
                }
                let vals = args.iter().map(Expr::as_usize).collect::<Result<Vec<_>>>()?;
                let (dims, digits) = vals.split_at(vals.len() / 2);
                StateSpec::Basis { dims: dims.to_vec(), digits: digits.to_vec() }
            }
            "product" => StateSpec::Product { parts: args.iter().map(Self::from_expr).collect::<Result<_>>()? },
            "mixture" => {
                if args.is_empty() || args.len() % 2 != 0 {
                    return Err(Error::InvalidParameter("mixture takes weight, state pairs".into()));
                }
                let parts = args
                    .chunks(2)
                    .map(|c| Ok((c[0].as_num()?, Self::from_expr(&c[1])?)))
                    .collect::<Result<_>>()?;
                StateSpec::Mixture { parts }
            }
            other => return Err(Error::InvalidParameter(format!("unknown state family {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StateSpec::Werner { d, q } => {
                check_dim(*d)?;
                check_unit("q", *q)
            }
            StateSpec::Isotropic { d, f } => {
                check_dim(*d)?;
                check_unit("fidelity", *f)
            }
            StateSpec::Ghz { n, d } => {
                check_dim(*d)?;
                if *n < 2 {
                    return Err(Error::InvalidParameter(format!("GHZ state needs n >= 2, got {n}")));
                }
                Ok(())
            }
            StateSpec::Wstate { n } => {
                if *n < 2 {
                    return Err(Error::InvalidParameter(format!("W state needs n >= 2, got {n}")));
                }
                Ok(())
            }
            StateSpec::MaximallyMixed { dims } => HilbertSpec::new(dims.clone()).map(|_| ()),
            StateSpec::Basis { dims, digits } => {
                HilbertSpec::new(dims.clone())?;
                if dims.len() != digits.len() || digits.iter().zip(dims).any(|(i, d)| i >= d) {
                    return Err(Error::InvalidParameter(format!("basis digits {digits:?} do not fit dims {dims:?}")));
                }
                Ok(())
            }
            StateSpec::Product { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidParameter("empty product".into()));
                }
                parts.iter().try_for_each(StateSpec::validate)
            }
            StateSpec::Mixture { parts } => {
                let total: f64 = parts.iter().map(|(w, _)| w).sum();
                if parts.is_empty() || parts.iter().any(|(w, _)| w.is_nan() || *w < 0.0) || (total - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidParameter(format!(
                        "mixture weights must be nonnegative and sum to 1 (sum {total})"
                    )));
                }
                parts.iter().try_for_each(|(_, s)| s.validate())
            }
            StateSpec::File { .. } => Ok(()),
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            StateSpec::Werner { d, q } => write!(f, "werner({d},{q})"),
            StateSpec::Isotropic { d, f: fid } => write!(f, "isotropic({d},{fid})"),
            StateSpec::Ghz { n, d } => write!(f, "ghz({n},{d})"),
            StateSpec::Wstate { n } => write!(f, "wstate({n})"),
            StateSpec::MaximallyMixed { dims } => write!(f, "mixed({})", list(dims)),
            StateSpec::Basis { dims, digits } => write!(f, "basis({},{})", list(dims), list(digits)),
            StateSpec::Product { parts } => {
                let s: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                write!(f, "{}", s.join("*"))
            }
            StateSpec::Mixture { parts } => {
                let s: Vec<String> = parts.iter().map(|(w, p)| format!("{w},{p}")).collect();
                write!(f, "mixture({})", s.join(","))
            }
            StateSpec::File { path } => write!(f, "{}", path.display()),
        }
    }
}

fn bell_projector(d: usize) -> Result<HermitianOperator> {
    Ok(HermitianOperator::projector(&bell_state(d, 0, 0)?))
}

pub fn build_state(spec: &StateSpec) -> Result<DensityMatrix> {
    spec.validate()?;
    match spec {
        StateSpec::Werner { d, q } => {
            let p = bell_projector(*d)?;
            let mixed = DensityMatrix::maximally_mixed(p.spec());
            DensityMatrix::new(mixed.op().scale(1.0 - q).add(&p.scale(*q))?)
        }
        StateSpec::Isotropic { d, f } => {
            let p = bell_projector(*d)?;
            let rest = HermitianOperator::identity(p.spec()).sub(&p)?;
            let others = (d * d - 1) as f64;
            DensityMatrix::new(p.scale(*f).add(&rest.scale((1.0 - f) / others))?)
        }
        StateSpec::Ghz { n, d } => {
            let hs = HilbertSpec::new(vec![*d; *n])?;
            let total = hs.total_dim();
            // index of |j...j> is j * (1 + d + ... + d^(n-1))
            let stride = (total - 1) / (d - 1);
            let mut v = DVector::<C64>::zeros(total);
            for j in 0..*d {
                v[j * stride] = C64::new(1.0, 0.0);
            }
            pure_to_density(&PureState::normalized(hs, v)?)
        }
        StateSpec::Wstate { n } => {
            let hs = HilbertSpec::new(vec![2; *n])?;
            let mut v = DVector::<C64>::zeros(hs.total_dim());
            for k in 0..*n {
                v[1 << k] = C64::new(1.0, 0.0);
            }
            pure_to_density(&PureState::normalized(hs, v)?)
        }
        StateSpec::MaximallyMixed { dims } => Ok(DensityMatrix::maximally_mixed(&HilbertSpec::new(dims.clone())?)),
        StateSpec::Basis { dims, digits } => {
            let hs = HilbertSpec::new(dims.clone())?;
            let index = digits.iter().zip(dims).fold(0, |acc, (i, d)| acc * d + i);
            pure_to_density(&PureState::basis(&hs, index)?)
        }
        StateSpec::Product { parts } => {
            let mut it = parts.iter();
            let first = build_state(it.next().expect("validated nonempty"))?;
            it.try_fold(first, |acc, p| Ok(acc.kron(&build_state(p)?)))
        }
        StateSpec::Mixture { parts } => {
            let built = parts
                .iter()
                .map(|(w, s)| Ok((*w, build_state(s)?)))
                .collect::<Result<Vec<_>>>()?;
            let spec0 = built[0].1.spec().clone();
            if built.iter().any(|(_, r)| *r.spec() != spec0) {
                return Err(Error::DimensionMismatch("mixture components act on different spaces".into()));
            }
            let refs: Vec<(f64, &DensityMatrix)> = built.iter().map(|(w, r)| (*w, r)).collect();
            DensityMatrix::mixture(&refs)
        }
        StateSpec::File { path } => read_state(path),
    }
}
