"""Smoke test for the korobov_ibc extension module.

Build and install with `maturin develop -m crates/python/Cargo.toml --features extension-module`,
or copy target/release/libkorobov_ibc.so next to this script as korobov_ibc.so.
"""

import math

import korobov_ibc as k


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    unit = k.ParameterFamily.unit()

    z, err = k.zeta(2.0)
    close(z, math.pi**2 / 6, 1e-13)
    assert err <= 1e-13

    t, _ = k.trace(unit, 1)
    close(t, math.pi**2 / 3, 1e-13)

    top = k.top_eigenvalues(unit, 2, 4)
    assert [v for v, _ in top] == [1.0] * 4

    r = k.info_complexity(unit, 1, 0.95, crit="abs")
    assert r["n"] == 4 and r["certified"], r
    assert k.info_complexity(unit, 1, 0.5, crit="nor", path="level_set")["n"] == 4

    o = k.oracle_info_complexity(unit, 1, 2000, 0.5, crit="nor")
    assert o is not None and o["n"] == 4

    e, _ = k.minimal_error(unit, 1, 4)
    close(e, math.sqrt(math.pi**2 / 3 - 2.5), 1e-12)

    power = k.ParameterFamily.from_dict(
        {
            "alpha": {"kind": "const", "value": 0.0},
            "beta": {"kind": "power", "c": 1.0, "s": 2.0},
            "sigma": {"kind": "const", "value": 3.0},
        }
    )
    v = k.spt_verdict(power, "abs")
    assert v["spt"] == "true", v
    close(v["exponent"], 2.0, 1e-12)

    case2 = k.ParameterFamily(
        '{"alpha":{"kind":"const","value":0},"beta":{"kind":"power","c":1,"s":0.5},'
        '"sigma":{"kind":"affine","a":1,"b":1}}'
    )
    c = k.classify(case2)
    assert c["status"] == "applicable" and c["case_id"] == 2, c
    close(k.predicted_n(case2, 10_000, 0.6), 8192.0, 1e-9)

    mc = k.verify_mc(unit, samples=2000, seed=1)
    assert mc["pass"], mc

    try:
        k.ParameterFamily('{"alpha":{"kind":"const","value":0},"beta":{"kind":"const","value":1},'
                          '"sigma":{"kind":"const","value":0.5}}').validate(1)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid family accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
