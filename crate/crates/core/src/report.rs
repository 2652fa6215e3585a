//! Serialization helpers shared by the analysis reports.

/// Formats an extended real for CSV: shortest round-trip decimal, `inf`, `-inf` or `nan`.
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

pub fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "not_reached".to_string(), |t| t.to_string())
}

/// Serde adapter for extended reals: finite values as numbers, the rest as
/// the strings `"inf"`, `"-inf"` and `"nan"`.
pub mod ext_real {
    use serde::de::{self, Deserializer};
    use serde::ser::Serializer;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_finite() { Repr::Num(v) } else { Repr::Text(super::fmt_real(v)) }
    }

    fn from_repr<E: de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("not an extended real: {other}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(|x| to_repr(*x)).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Row {
        #[serde(with = "super::ext_real")]
        x: f64,
        #[serde(with = "super::ext_real::vec")]
        xs: Vec<f64>,
    }

    #[test]
    fn infinities_round_trip() {
        let row = Row { x: f64::INFINITY, xs: vec![1.5, f64::INFINITY] };
        let text = serde_json::to_string(&row).unwrap();
        assert_eq!(text, r#"{"x":"inf","xs":[1.5,"inf"]}"#);
        assert_eq!(serde_json::from_str::<Row>(&text).unwrap(), row);
    }
}
