use pyo3::prelude::*;

#[pymodule]
fn peakshift_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
