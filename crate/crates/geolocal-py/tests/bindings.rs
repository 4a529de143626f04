use geolocal_py::geolocal_py;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    pyo3::append_to_inittab!(geolocal_py);
    Python::attach(|py| {
        let globals = PyDict::new(py);
        let src = std::ffi::CString::new(format!("import geolocal_py as gl\n{code}")).unwrap();
        if let Err(e) = py.run(&src, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn module_round_trip() {
    run(r#"
t = gl.TermTable("1x2")
assert len(t) == 15 and t.num_qubits == 2 and len(t.terms()) == 15
assert t.coeffs([0.0] * 15).output_probability() == 1.0
g = t.sample(3)
assert 0.0 <= g.output_probability() <= 1.0
assert g.conjugated("11").norm() == g.norm()
w = t.worst_case()
assert abs(w.scaled(1.0 / w.norm()).norm() - 1.0) < 1e-12
try:
    gl.TermTable("0x2")
    raise AssertionError("expected ValueError")
except ValueError:
    pass
outcome, report = gl.reduce(seed=1, no_extrapolation=True)
assert outcome == "pass" and report["abs_error"] <= 1e-4
"#);
}
