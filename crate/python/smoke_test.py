"""Smoke test for the qlst extension module.

Build first, e.g. `maturin develop -m crates/py/Cargo.toml`, then run
`python python/smoke_test.py`.
"""

import json
import math

import qlst


def main():
    step = qlst.calibrate_step(2, 0.0)
    assert abs(step - 0.4769) < 1e-3, step
    assert qlst.ser_qpsk_theory(0.0) == 0.75

    rep = qlst.analyze(10.0, 4.0, tau=0.07, a=1, b=1)
    assert 0.0 < rep["info"] <= 2.0, rep
    assert math.isfinite(rep["solution"]["mse_g"])

    ideal = qlst.analyze(10.0, 4.0, tau=0.1, mse_g=0.0)
    assert abs(ideal["solution"]["rho_bar"] - 10.0) < 1e-12

    noiseless = qlst.analyze(float("inf"), 4.0, tau=0.1, b=1)
    assert noiseless["rho"] == math.inf

    s = qlst.ser(10.0, 5.0, tau_prime=2.0, b=1)
    assert 0.0 < s["ser"] < 0.75, s

    sim = qlst.simulate(10.0, 5.0, b=1, m=16, n_trials=4, seed=3)
    assert sim == qlst.simulate(10.0, 5.0, b=1, m=16, n_trials=4, seed=3)

    try:
        qlst.optimize(0.0, target=2.0, a=1, b=1)
    except qlst.QlstError as e:
        kind, _, code = e.args
        assert (kind, code) == ("unreachable_target", 3)
    else:
        raise AssertionError("expected an unreachable target")

    code, out, _ = qlst.run_cli(["ser", "--alpha", "5", "--bits", "inf"])
    assert code == 0 and json.loads(out)["ser"] < 0.75

    print("qlst", qlst.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
