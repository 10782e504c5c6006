//! Serde helpers for extended reals: finite values as JSON numbers, infinities as
//! the strings `"inf"` / `"-inf"`.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Ext {
    Num(f64),
    Text(String),
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    match Ext::deserialize(d)? {
        Ext::Num(v) => Ok(v),
        Ext::Text(t) => match t.as_str() {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(de::Error::custom(format!("not a number: {other}"))),
        },
    }
}

/// Rounds to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// CSV rendering: 12 significant digits, scientific outside `[1e-4, 1e12)`.
pub fn csv(x: f64) -> String {
    let r = round_sig(x, 12);
    if r == 0.0 || !r.is_finite() || (1e-4..1e12).contains(&r.abs()) {
        r.to_string()
    } else {
        format!("{r:e}")
    }
}

/// Rounds every number in a JSON tree to 12 significant digits.
pub fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(f, 12)) {
                        *n = r;
                    }
                }
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.1234567890123456, 12), 0.123456789012);
        assert_eq!(round_sig(f64::INFINITY, 12), f64::INFINITY);
        let mut v = serde_json::json!({"a": [1.0/3.0, 2], "b": "x"});
        round_json(&mut v);
        assert_eq!(v["a"][0].as_f64().unwrap(), 0.333333333333);
        assert_eq!(v["a"][1].as_i64().unwrap(), 2);
    }
}
