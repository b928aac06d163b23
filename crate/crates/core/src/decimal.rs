//! Serde helpers writing exact numbers as decimal strings.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{de::Error, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(D::Error::custom)
}

/// Rationals as `"p/q"` (or `"p"` when integral).
pub mod rational {
    use super::*;

    pub fn to_string(v: &BigRational) -> String {
        if v.is_integer() {
            v.numer().to_string()
        } else {
            format!("{}/{}", v.numer(), v.denom())
        }
    }

    pub fn parse(s: &str) -> Result<BigRational, String> {
        let parse_int = |t: &str| t.trim().parse::<BigInt>().map_err(|e| format!("{t:?}: {e}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let d = parse_int(d)?;
                if d == BigInt::from(0) {
                    return Err("zero denominator".into());
                }
                Ok(BigRational::new(parse_int(n)?, d))
            }
            None => Ok(BigRational::from_integer(parse_int(s)?)),
        }
    }

    pub fn serialize<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(D::Error::custom)
    }
}

/// Vectors of big integers as arrays of decimal strings.
pub mod vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&x.to_str_radix(10))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| s.parse().map_err(D::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::rational;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    #[test]
    fn rational_round_trip() {
        for (n, d) in [(14, 3), (4, 1), (-34, 7), (0, 5)] {
            let r = BigRational::new(BigInt::from(n), BigInt::from(d));
            assert_eq!(rational::parse(&rational::to_string(&r)).unwrap(), r);
        }
        assert_eq!(rational::to_string(&BigRational::new(8.into(), 2.into())), "4");
        assert!(rational::parse("1/0").is_err());
    }
}
