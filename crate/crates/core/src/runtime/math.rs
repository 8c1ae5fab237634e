//! The builtin `math` module.

use super::{host_error, real, HostFunction, HostModule, Kwargs, Param};
use crate::error::{ErrorKind, Result};
use crate::host::{HostValue, ObjectHandle, Registry};

/// Mean earth radius in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Great-circle distance in km between two points given in degrees.
pub fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (lat1, lat2) = (lat1.to_radians(), lat2.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (lon2 - lon1).to_radians();
    let a = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().asin()
}

fn domain(x: f64) -> Result<HostValue> {
    if x.is_nan() {
        Err(host_error(ErrorKind::ValueError, "math domain error"))
    } else if x.is_infinite() {
        Err(host_error(ErrorKind::Other("OverflowError".into()), "math range error"))
    } else {
        Ok(HostValue::Float(x))
    }
}

macro_rules! unary {
    ($fn_name:ident, $name:literal, $op:expr) => {
        fn $fn_name(_: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> Result<HostValue> {
            let x = real(&args[0], $name)?;
            if x.is_infinite() {
                return Err(host_error(ErrorKind::ValueError, "math domain error"));
            }
            let op: fn(f64) -> f64 = $op;
            domain(op(x))
        }
    };
}

unary!(sin, "sin", f64::sin);
unary!(cos, "cos", f64::cos);
unary!(tan, "tan", f64::tan);
unary!(asin, "asin", f64::asin);
unary!(acos, "acos", f64::acos);
unary!(atan, "atan", f64::atan);
unary!(sqrt, "sqrt", f64::sqrt);
unary!(exp, "exp", f64::exp);
unary!(radians, "radians", f64::to_radians);
unary!(degrees, "degrees", f64::to_degrees);
unary!(fabs, "fabs", f64::abs);

fn log(_: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> Result<HostValue> {
    let x = real(&args[0], "log")?;
    if x <= 0.0 {
        return Err(host_error(ErrorKind::ValueError, "math domain error"));
    }
    domain(x.ln())
}

fn pow(_: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> Result<HostValue> {
    let x = real(&args[0], "pow")?;
    let y = real(&args[1], "pow")?;
    domain(x.powf(y))
}

fn atan2(_: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> Result<HostValue> {
    domain(real(&args[0], "atan2")?.atan2(real(&args[1], "atan2")?))
}

fn haversine_native(_: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> Result<HostValue> {
    let mut xs = [0.0; 4];
    for (x, a) in xs.iter_mut().zip(&args) {
        *x = real(a, "haversine")?;
    }
    domain(haversine(xs[0], xs[1], xs[2], xs[3]))
}

pub(super) fn module() -> HostModule {
    let x = || vec![Param::required("x")];
    let mut m = HostModule::new("math");
    let unaries: [(&str, super::Native); 12] = [
        ("sin", sin),
        ("cos", cos),
        ("tan", tan),
        ("asin", asin),
        ("acos", acos),
        ("atan", atan),
        ("sqrt", sqrt),
        ("exp", exp),
        ("log", log),
        ("radians", radians),
        ("degrees", degrees),
        ("fabs", fabs),
    ];
    for (name, imp) in unaries {
        m = m.function(HostFunction::new(name, x(), imp));
    }
    m.function(HostFunction::new(
        "pow",
        vec![Param::required("x"), Param::required("y")],
        pow,
    ))
    .function(HostFunction::new(
        "atan2",
        vec![Param::required("y"), Param::required("x")],
        atan2,
    ))
    .function(HostFunction::new(
        "haversine",
        ["lat1", "lon1", "lat2", "lon2"]
            .into_iter()
            .map(Param::required)
            .collect(),
        haversine_native,
    ))
    .constant("pi", HostValue::Float(std::f64::consts::PI))
    .constant("e", HostValue::Float(std::f64::consts::E))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haversine_against_law_of_cosines() {
        // Oracle: spherical law of cosines on the same sphere.
        let (la1, lo1, la2, lo2) = (36.12f64, -86.67f64, 33.94f64, -118.40f64);
        let (p1, p2) = (la1.to_radians(), la2.to_radians());
        let c = (p1.sin() * p2.sin() + p1.cos() * p2.cos() * (lo2 - lo1).to_radians().cos()).acos();
        let d = haversine(la1, lo1, la2, lo2);
        assert!((d - EARTH_RADIUS_KM * c).abs() < 1e-6);
        assert!((d - 2886.444).abs() < 1e-3);
    }

    #[test]
    fn domain_errors() {
        let mut reg = Registry::new();
        let e = sqrt(&mut reg, None, vec![HostValue::Int(-1)], Kwargs::new()).unwrap_err();
        assert_eq!(e.kind, ErrorKind::ValueError);
        let e = sin(&mut reg, None, vec![HostValue::text("x")], Kwargs::new()).unwrap_err();
        assert_eq!(e.kind, ErrorKind::TypeError);
        let e = pow(
            &mut reg,
            None,
            vec![HostValue::Float(10.0), HostValue::Int(400)],
            Kwargs::new(),
        )
        .unwrap_err();
        assert_eq!(e.kind.name(), "OverflowError");
    }
}
