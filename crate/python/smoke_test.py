#!/usr/bin/env python3
"""Smoke test for the wplap_py extension module.

Builds nothing itself: expects `cargo build -p wplap-py` to have produced the
cdylib under target/. Copies it next to a temp dir as an importable module,
then checks a handful of known values end to end.
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def locate_cdylib() -> Path:
    candidates = []
    for profile in ("release", "debug"):
        for name in ("libwplap_py.so", "libwplap_py.dylib", "wplap_py.dll"):
            candidates.append(ROOT / "target" / profile / name)
    for path in candidates:
        if path.exists():
            return path
    sys.exit("cdylib not found; run `cargo build -p wplap-py` first")


def main() -> None:
    lib = locate_cdylib()
    with tempfile.TemporaryDirectory() as tmp:
        suffix = ".pyd" if lib.suffix == ".dll" else ".so"
        shutil.copy(lib, Path(tmp) / f"wplap_py{suffix}")
        sys.path.insert(0, tmp)
        import wplap_py

        # pi_p closed form vs quadrature, and the classical value at p = 2
        assert abs(wplap_py.pi_p(2.0) - math.pi) < 1e-12
        assert abs(wplap_py.pi_p(3.0) - wplap_py.pi_p(3.0, "quadrature")) < 1e-10

        # bound formulas at reference points
        assert abs(wplap_py.bound_lichnerowicz(2.0, 2.0, 1.0) - 2.0) < 1e-12
        assert abs(wplap_py.bound_liyau(2.0, 1.0) - (math.pi / 2.0) ** 2) < 1e-12
        assert wplap_py.bound_negative(2.0, 3.0, 0.5, math.pi) > 0.0

        # pointwise Bochner identity on the flat torus
        res22, res23 = wplap_py.bochner_residual(
            "flat_torus", "sin(x) + 2*cos(y)", "0.2*sin(x)", 3.0, [0.7, 1.9]
        )
        assert res22 < 1e-8 and res23 < 1e-8, (res22, res23)

        # Reilly formula for the harmonic function on the disk
        lhs, rhs, residual = wplap_py.reilly_residual("disk_polar", "r*cos(phi)", "0", 2.0)
        assert abs(lhs) < 1e-8 and abs(rhs) < 1e-8 and residual < 1e-8

        # eigensolver vs exact value and vs the shooting oracle
        interval = json.dumps(
            {"kind": "interval", "length": math.pi, "f": "0", "bc": "dirichlet"}
        )
        lam, converged, eq34 = wplap_py.eigensolve(interval, p=2.0, n=1024)
        assert converged and abs(lam - 1.0) < 1e-5 and eq34 < 1e-6
        shot = wplap_py.shooting_eig(interval, p=3.0)
        lam3, _, _ = wplap_py.eigensolve(interval, p=3.0, n=1024)
        assert abs(lam3 - shot) < 1e-4 * shot

        # scenario harness round trip
        report = json.loads(
            wplap_py.run_scenario(
                json.dumps(
                    {
                        "kind": "bound",
                        "theorem": "T1.1-closed",
                        "space": {"kind": "sphere_n", "n_ambient": 2},
                        "p": 2.0,
                        "m": 2.0,
                    }
                )
            )
        )
        assert report["pass"], report
        assert abs(report["rows"][0]["rhs"] - 2.0) < 1e-12

    print("smoke test: all checks passed")


if __name__ == "__main__":
    main()
