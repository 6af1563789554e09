# Copyright 2026 The qnd Authors
# SPDX-License-Identifier: Apache-2.0
"""Quick check that the extension imports and its main entry points run.

    pip install --no-build-isolation -e crates/py
    python python/smoke_test.py
"""

import math

import qnd


def main():
    names = qnd.preset_names()
    assert "short-readout" in names, names

    p = qnd.Protocol.preset("short-readout")
    print(p)
    assert p.envelope[0] == "erfc"

    exact = p.report()
    moments = p.report(engine="moments")
    for r in (exact, moments):
        assert 0.0 <= r["distinguishability"] <= 1.0
        assert 0.0 <= r["disturbance"] <= 1.0
        print(f"{r['engine']:>8}: D = {r['distinguishability']:.4f}  d = {r['disturbance']:.2e}")
    assert abs(exact["distinguishability"] - moments["distinguishability"]) < 0.05

    traj = p.evolve(0, samples=11)
    assert len(traj["t_ns"]) == 11 and math.isclose(traj["t_ns"][-1], p.tau)
    assert abs(traj["n"][0] - 9.0) < 1e-6

    # a small custom protocol, built from keywords
    q = qnd.Protocol(8.264, 6.998, 100.0, 5.0, 1.0, v1=2.0, t1=0.8, t2=4.2, cavity_cutoff=16)
    assert q.cavity_cutoff == 16
    assert q.report()["distinguishability"] < exact["distinguishability"]

    try:
        qnd.Protocol(8.264, 6.998, 100.0, 5.0, 1.0, v1=-2.0, t1=0.8, t2=4.2)
    except ValueError:
        pass
    else:
        raise AssertionError("negative envelope slope accepted")

    assert qnd.penalized(0.9, 0.004, 0.005) == 0.9
    assert qnd.penalized(0.9, 0.006, 0.005) < 0.0
    print("smoke test passed")


if __name__ == "__main__":
    main()
