//! Measurement expressions: `bell(3)`, `bell(2) * computational(2)`,
//! `random(7, 5, 2, 2)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::io::read_povm;
use crate::measurements::{bell_basis, computational_basis, product_povm, random_povm, random_product_basis, Povm};
use crate::tensor::HilbertSpec;

/// `(syntax, description)` for every measurement family.
pub const POVM_CATALOG: &[(&str, &str)] = &[
    ("bell(d)", "projectors onto the d^2 generalized Bell states"),
    ("computational(d1, d2, ...)", "computational basis projectors"),
    ("random(seed, m, d1, d2, ...)", "seeded random m-outcome POVM"),
    ("product-basis(seed, d1, d2, ...)", "seeded random product of local orthonormal bases"),
    ("a * b", "all products of the outcomes of a and b"),
    ("path/to/povm.json", "POVM file {dims, elements, labels}"),
];

/// Parses an expression, or reads the text as a file path.
pub fn parse_povm(s: &str) -> Result<Povm> {
    if expr::looks_like_expr(s) {
        povm_from_expr(&expr::parse(s)?)
    } else {
        read_povm(s.trim())
    }
}

fn dims(args: &[Expr]) -> Result<HilbertSpec> {
    HilbertSpec::new(args.iter().map(Expr::as_usize).collect::<Result<_>>()?)
}

fn povm_from_expr(e: &Expr) -> Result<Povm> {
    match e {
        Expr::Num(v) => Err(Error::InvalidParameter(format!("expected a measurement, got number {v}"))),
        Expr::Product(parts) => {
            let mut it = parts.iter();
            let first = povm_from_expr(it.next().expect("products have factors"))?;
            it.try_fold(first, |acc, p| Ok(product_povm(&acc, &povm_from_expr(p)?)))
        }
        Expr::Call { name, args } => match name.as_str() {
            "bell" => {
                if args.len() != 1 {
                    return Err(Error::InvalidParameter("bell takes one argument".into()));
                }
                bell_basis(args[0].as_usize()?)
            }
            "computational" => Ok(computational_basis(&dims(args)?)),
            "random" => {
                if args.len() < 3 {
                    return Err(Error::InvalidParameter("random takes seed, outcomes and dims".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(args[0].as_usize()? as u64);
                random_povm(&dims(&args[2..])?, args[1].as_usize()?, &mut rng)
            }
            "product-basis" => {
                if args.len() < 2 {
                    return Err(Error::InvalidParameter("product-basis takes seed and dims".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(args[0].as_usize()? as u64);
                random_product_basis(&dims(&args[1..])?, &mut rng)
            }
            other => Err(Error::InvalidParameter(format!("unknown measurement family {other:?}"))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::povm_hash;

    #[test]
    fn builds_named_measurements() {
        assert_eq!(parse_povm("bell(3)").unwrap().len(), 9);
        let p = parse_povm("bell(2) * computational(2)").unwrap();
        assert_eq!(p.len(), 8);
        assert_eq!(p.spec().dims(), &[2, 2, 2]);
        assert_eq!(parse_povm("random(3, 5, 2, 2)").unwrap().len(), 5);
        assert_eq!(parse_povm("product-basis(1, 2, 2, 2)").unwrap().len(), 8);
    }

    #[test]
    fn seeded_families_are_reproducible() {
        let a = parse_povm("random(9, 4, 3)").unwrap();
        let b = parse_povm("random(9,4,3)").unwrap();
        assert_eq!(povm_hash(&a), povm_hash(&b));
        let c = parse_povm("random(10, 4, 3)").unwrap();
        assert_ne!(povm_hash(&a), povm_hash(&c));
    }

    #[test]
    fn rejects_unknown_families() {
        assert!(parse_povm("mub(3)").is_err());
        assert!(parse_povm("bell(1)").is_err());
        assert!(parse_povm("/nonexistent/povm.json").is_err());
    }
}
