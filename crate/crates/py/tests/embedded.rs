use std::ffi::CString;

use pyo3::prelude::*;
use ultracontract_py::ultracontract_module;

fn run(code: &str) -> PyResult<()> {
    pyo3::append_to_inittab!(ultracontract_module);
    Python::initialize();
    Python::attach(|py| py.run(&CString::new(code).unwrap(), None, None))
}

#[test]
fn module_imports_and_answers() {
    run(r#"
import math
import ultracontract as uc
lam = uc.hyperbolic_lambda0(3, r_max=30.0, n=2048)
assert abs(lam - 1.0 - (math.pi / 30.0) ** 2) < 1e-4, lam
rows = uc.intrinsic_sup("e2", 3.0, [0.5, 1.0], r_max=12.0, n=512)
assert rows[1]["log_s"] <= rows[0]["log_s"]
try:
    uc.sharpness("e3", 3.0)
    raise AssertionError("expected ValueError")
except ValueError:
    pass
"#)
    .unwrap();
}
