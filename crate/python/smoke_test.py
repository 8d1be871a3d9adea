"""Smoke test for the Python bindings.

Build first with `pip install --no-build-isolation -e crates/python`, then run
`python3 python/smoke_test.py`.
"""

import json
import math
import pathlib
import sys
import tempfile

import fdareg


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        sys.exit(1)


def main():
    b = fdareg.Basis.fourier(150.0, 50)
    check(b.nbasis == 51, "even Fourier size rounds up")
    g = b.gram()
    check(all(abs(g[i][j] - (i == j)) < 1e-12 for i in range(51) for j in range(51)),
          "Fourier gram is the identity")
    coefs = [0.0] * 51
    coefs[0] = 1.0 / math.sqrt(150.0)
    check(abs(b.integrate(coefs, 0.0, 150.0) - 1.0) < 1e-12, "constant curve integral")

    x = [[1.0, float(i)] for i in range(10)]
    y = [2.0 + 0.5 * i for i in range(10)]
    beta = fdareg.fit_ols(x, y)
    check(abs(beta[0] - 2.0) < 1e-10 and abs(beta[1] - 0.5) < 1e-10, "OLS recovers a line")
    beta_q = fdareg.fit_qr(x, y, 0.5)
    check(abs(beta_q[1] - 0.5) < 1e-8, "median regression on an exact line")
    beta_a = fdareg.fit_qa(x, y, 0.5)
    check(abs(beta_a[1] - 0.5) < 1e-8, "quantile average on an exact line")
    check(abs(fdareg.yield_ratio(-0.0577) - math.exp(-0.0577)) < 1e-15, "yield ratio")

    with tempfile.TemporaryDirectory() as tmp:
        root = pathlib.Path(tmp)
        written = fdareg.simulate(str(root / "corpus"), preset="default")
        check(any(p.endswith("config.json") for p in written), "simulate writes a config")
        model = fdareg.Model.fit_config(str(root / "corpus" / "config.json"))
        check(model.estimators[0] == "ols", "OLS is the first estimator")
        cov = model.covariates[0]
        check(model.n_components(cov) >= 1, "at least one component retained")
        truth = json.loads((root / "corpus" / "truth.json").read_text())
        sc = truth["scenarios"][0]
        true_dy = sc["delta_log_yield"]
        eff = model.effect(cov, sc["t0"], sc["t1"], delta_t=sc["delta_t"])
        check(abs(eff["delta_log_yield"] - true_dy) <= 0.05 * abs(true_dy),
              f"effect {eff['delta_log_yield']:.6f} near truth {true_dy:.6f}")
        reloaded = fdareg.Model.from_json(model.to_json())
        check(reloaded.to_json() == model.to_json(), "model JSON round trip")
        bands = model.bands(replicas=20, seed=1, estimator="ols")
        band = bands[0]
        check(all(lo <= hi for lo, hi in zip(band["lower"], band["upper"])), "band is ordered")
        try:
            model.effect(cov, sc["t0"], sc["t1"], delta_t=1.0, estimator="qr:1.5")
        except ValueError:
            check(True, "bad estimator raises ValueError")
        else:
            check(False, "bad estimator raises ValueError")
        try:
            fdareg.Model.load(str(root / "missing.json"))
        except FileNotFoundError:
            check(True, "missing model raises FileNotFoundError")
        else:
            check(False, "missing model raises FileNotFoundError")
    print("smoke test passed")


if __name__ == "__main__":
    main()
