use std::ffi::CString;

use pyo3::prelude::*;
use tqm::tqm as tqm_module;

fn run_python(code: &str) {
    pyo3::append_to_inittab!(tqm_module);
    Python::initialize();
    Python::attach(|py| {
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, None, None) {
            e.print(py);
            panic!("python code failed");
        }
    });
}

#[test]
fn module_round_trip() {
    run_python(
        r#"
import math
import tqm

o = tqm.SpacetimeEvent("o", (0.0, 0.0, 0.0), 0.0)
a = tqm.SpacetimeEvent("a", (2.0, 0.0, 0.0), 2.0)
b = tqm.SpacetimeEvent("b", (0.0, 1.0, 0.0), 1.0)
assert [e.id for e in tqm.hierarchy_order(o, [a, b])] == ["b", "a"]
assert o.interval(a).kind == "lightlike"

plan = tqm.SelectionPlan([0.5, 0.25], mode="absolute")
assert plan.marginals == [0.5, 0.25]
counts = plan.tally(seed=9, trials=40000, threads=2)
assert sum(counts) == 40000 and counts == plan.tally(seed=9, trials=40000, threads=1)

tp = tqm.TransactionPlan(o, [(a, 0.5), (b, 1.0)], angular_frequency=2.0)
assert tp.order == ["b", "a"] and tp.strengths == [1.0, 0.25]
t = tp.run(seed=1, trials=3)[0]
assert t.energy == 2.0 and t.ledger_balance() == (0.0, [0.0, 0.0, 0.0])

j = dict(tqm.epr_joint_strengths(math.radians(30), 0.0))
assert abs(j["HV"] + j["VH"] - 0.25) < 1e-12
assert tqm.lhv_chsh() <= 2.0
assert tqm.emission_cost(o, a, 1.0, 1.0) == (0.0, 0.0)

for bad in (lambda: tqm.SelectionPlan([0.1], mode="sideways"),
            lambda: tqm.validate_config("scenario = nope\n"),
            lambda: tqm.handshake_field(o, b, 1.0, 1.0, 1.0, [])):
    try:
        bad()
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")
"#,
    );
}
