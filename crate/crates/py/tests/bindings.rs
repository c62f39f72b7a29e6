use pyo3::prelude::*;
use pyo3::types::PyModule;

#[test]
fn module_functions() {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "qctl_py").unwrap();
        qctl_py::register(&m).unwrap();
        let p: f64 = m.getattr("p_detect").unwrap().call1((0.0,)).unwrap().extract().unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let err = m.getattr("p_detect").unwrap().call1((-1.0,)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let ev: f64 = m.getattr("convert").unwrap().call1((1e-3, "V", "eV")).unwrap().extract().unwrap();
        assert!((ev - 5e-5).abs() < 1e-15);
    });
}
