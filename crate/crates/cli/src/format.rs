//! Number formatting and finiteness checks for emitted reports.

use serde::ser::{self, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// `%g`-style rendering with 9 significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        trim_zeros(format!("{:.*}", (8 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// [`sig9`] for a CSV cell; non-finite values are a numerical failure.
pub fn cell(x: f64, what: &str) -> Result<String, CliError> {
    if x.is_finite() {
        Ok(sig9(x))
    } else {
        Err(CliError::Numerical(format!("{what} is {x}")))
    }
}

/// Pretty JSON with every float rounded to 9 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut check = FiniteCheck::default();
    value
        .serialize(&mut check)
        .map_err(|e| CliError::Numerical(e.0))?;
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    round_floats(&mut v);
    let mut out = serde_json::to_string_pretty(&v).map_err(|e| CliError::Numerical(e.to_string()))?;
    out.push('\n');
    Ok(out)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("float");
            let r: f64 = sig9(x).parse().expect("round trip");
            *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

// Walks a value and fails on the first NaN or infinity, naming its path.

#[derive(Debug)]
pub struct NonFinite(String);

impl std::fmt::Display for NonFinite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NonFinite {}

impl ser::Error for NonFinite {
    fn custom<T: std::fmt::Display>(msg: T) -> Self {
        NonFinite(msg.to_string())
    }
}

#[derive(Default)]
struct FiniteCheck {
    path: Vec<String>,
}

impl FiniteCheck {
    fn float(&self, x: f64) -> Result<(), NonFinite> {
        if x.is_finite() {
            Ok(())
        } else {
            let at = if self.path.is_empty() { "value".into() } else { self.path.join(".") };
            Err(NonFinite(format!("{at} is {x}")))
        }
    }

    fn nested<T: Serialize + ?Sized>(&mut self, key: String, value: &T) -> Result<(), NonFinite> {
        self.path.push(key);
        let r = value.serialize(&mut *self);
        self.path.pop();
        r
    }
}

type Ok_ = ();

macro_rules! accept {
    ($($name:ident: $t:ty),* $(,)?) => {
        $(fn $name(self, _: $t) -> Result<Ok_, NonFinite> { Ok(()) })*
    };
}

impl<'a> ser::Serializer for &'a mut FiniteCheck {
    type Ok = Ok_;
    type Error = NonFinite;
    type SerializeSeq = Indexed<'a>;
    type SerializeTuple = Indexed<'a>;
    type SerializeTupleStruct = Indexed<'a>;
    type SerializeTupleVariant = Indexed<'a>;
    type SerializeMap = Keyed<'a>;
    type SerializeStruct = Keyed<'a>;
    type SerializeStructVariant = Keyed<'a>;

    accept!(
        serialize_bool: bool,
        serialize_i8: i8,
        serialize_i16: i16,
        serialize_i32: i32,
        serialize_i64: i64,
        serialize_u8: u8,
        serialize_u16: u16,
        serialize_u32: u32,
        serialize_u64: u64,
        serialize_char: char,
        serialize_str: &str,
        serialize_bytes: &[u8],
        serialize_unit_struct: &'static str,
    );

    fn serialize_f32(self, v: f32) -> Result<Ok_, NonFinite> {
        self.float(v as f64)
    }
    fn serialize_f64(self, v: f64) -> Result<Ok_, NonFinite> {
        self.float(v)
    }
    fn serialize_none(self) -> Result<Ok_, NonFinite> {
        Ok(())
    }
    fn serialize_some<T: Serialize + ?Sized>(self, value: &T) -> Result<Ok_, NonFinite> {
        value.serialize(self)
    }
    fn serialize_unit(self) -> Result<Ok_, NonFinite> {
        Ok(())
    }
    fn serialize_unit_variant(self, _: &'static str, _: u32, _: &'static str) -> Result<Ok_, NonFinite> {
        Ok(())
    }
    fn serialize_newtype_struct<T: Serialize + ?Sized>(self, _: &'static str, value: &T) -> Result<Ok_, NonFinite> {
        value.serialize(self)
    }
    fn serialize_newtype_variant<T: Serialize + ?Sized>(
        self,
        _: &'static str,
        _: u32,
        variant: &'static str,
        value: &T,
    ) -> Result<Ok_, NonFinite> {
        self.nested(variant.into(), value)
    }
    fn serialize_seq(self, _: Option<usize>) -> Result<Indexed<'a>, NonFinite> {
        Ok(Indexed { check: self, index: 0 })
    }
    fn serialize_tuple(self, _: usize) -> Result<Indexed<'a>, NonFinite> {
        Ok(Indexed { check: self, index: 0 })
    }
    fn serialize_tuple_struct(self, _: &'static str, _: usize) -> Result<Indexed<'a>, NonFinite> {
        Ok(Indexed { check: self, index: 0 })
    }
    fn serialize_tuple_variant(self, _: &'static str, _: u32, _: &'static str, _: usize) -> Result<Indexed<'a>, NonFinite> {
        Ok(Indexed { check: self, index: 0 })
    }
    fn serialize_map(self, _: Option<usize>) -> Result<Keyed<'a>, NonFinite> {
        Ok(Keyed { check: self, key: None })
    }
    fn serialize_struct(self, _: &'static str, _: usize) -> Result<Keyed<'a>, NonFinite> {
        Ok(Keyed { check: self, key: None })
    }
    fn serialize_struct_variant(self, _: &'static str, _: u32, _: &'static str, _: usize) -> Result<Keyed<'a>, NonFinite> {
        Ok(Keyed { check: self, key: None })
    }
}

struct Indexed<'a> {
    check: &'a mut FiniteCheck,
    index: usize,
}

impl Indexed<'_> {
    fn item<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<(), NonFinite> {
        let key = format!("[{}]", self.index);
        self.index += 1;
        self.check.nested(key, value)
    }
}

macro_rules! indexed {
    ($($tr:ident :: $method:ident),*) => {
        $(impl ser::$tr for Indexed<'_> {
            type Ok = Ok_;
            type Error = NonFinite;
            fn $method<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<(), NonFinite> {
                self.item(value)
            }
            fn end(self) -> Result<Ok_, NonFinite> {
                Ok(())
            }
        })*
    };
}

indexed!(
    SerializeSeq::serialize_element,
    SerializeTuple::serialize_element,
    SerializeTupleStruct::serialize_field,
    SerializeTupleVariant::serialize_field
);

struct Keyed<'a> {
    check: &'a mut FiniteCheck,
    key: Option<String>,
}

impl ser::SerializeMap for Keyed<'_> {
    type Ok = Ok_;
    type Error = NonFinite;
    fn serialize_key<T: Serialize + ?Sized>(&mut self, key: &T) -> Result<(), NonFinite> {
        self.key = Some(serde_json::to_string(key).unwrap_or_default().trim_matches('"').to_string());
        Ok(())
    }
    fn serialize_value<T: Serialize + ?Sized>(&mut self, value: &T) -> Result<(), NonFinite> {
        let key = self.key.take().unwrap_or_default();
        self.check.nested(key, value)
    }
    fn end(self) -> Result<Ok_, NonFinite> {
        Ok(())
    }
}

impl ser::SerializeStruct for Keyed<'_> {
    type Ok = Ok_;
    type Error = NonFinite;
    fn serialize_field<T: Serialize + ?Sized>(&mut self, key: &'static str, value: &T) -> Result<(), NonFinite> {
        self.check.nested(key.into(), value)
    }
    fn end(self) -> Result<Ok_, NonFinite> {
        Ok(())
    }
}

impl ser::SerializeStructVariant for Keyed<'_> {
    type Ok = Ok_;
    type Error = NonFinite;
    fn serialize_field<T: Serialize + ?Sized>(&mut self, key: &'static str, value: &T) -> Result<(), NonFinite> {
        self.check.nested(key.into(), value)
    }
    fn end(self) -> Result<Ok_, NonFinite> {
        Ok(())
    }
}
